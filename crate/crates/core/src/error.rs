use thiserror::Error;

pub type Result<T> = std::result::Result<T, SlnError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlnError {
    /// The eta-nu kernel has a logarithmic divergence at |omega| = omega_c.
    #[error("eta-nu kernel evaluated on its logarithmic singularity at omega = {omega}")]
    SingularPoint { omega: f64 },

    #[error(
        "kernel symmetry correction {relative:.3e} (relative) exceeds 1e-6; the grid is too coarse"
    )]
    AsymmetryExceeded { relative: f64 },

    #[error(
        "K_etaeta vanishes on {zero_bins} bins (hard spectral cutoff); \
         a bare spectral inverse is undefined, use gamma > 0"
    )]
    DivisionByZeroSpectrum { zero_bins: usize },

    #[error("cross-correlative component is identically zero; rescaling is undefined")]
    ZeroComponent,

    #[error(
        "filter grid (n = {filter_n}, dt = {filter_dt}) does not match time grid \
         (n = {grid_n}, dt = {grid_dt})"
    )]
    GridMismatch {
        filter_n: usize,
        filter_dt: f64,
        grid_n: usize,
        grid_dt: f64,
    },

    #[error("need at least {needed} realizations, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> SlnError {
    SlnError::InvalidParameter(msg.into())
}
