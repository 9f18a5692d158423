//! Coloured complex Gaussian noise for the stochastic Liouville-von Neumann
//! equation, and ensemble simulation of a driven, dissipative two-level
//! system.
//!
//! The pipeline is: [`kernels`] samples the bath correlation functions on a
//! frequency grid, [`schemes`] turns them into Fourier-domain filters,
//! [`noise`] filters white noise into `(eta, nu)` realizations, [`dynamics`]
//! integrates one trajectory per realization, and [`ensemble`] reduces many
//! trajectories into trace statistics.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod noise;
pub mod quadrature;
pub mod rng;
pub mod schemes;

pub use dynamics::{
    integrate_noise_free, integrate_trajectory, integrate_with, lz_asymptote, qnd_exact,
    qnd_master_equation, qnd_sln_config, Drive, Matrix2, QndModel, SpinState, SystemModel,
    Trajectory,
};
pub use ensemble::{
    log_space, run_ensemble, run_with_filters, scan_lambda, windowed_stats, EnsembleStats,
    LambdaScan, RunConfig,
};
pub use error::{Result, SlnError};
pub use grid::{FrequencyGrid, Transform};
pub use kernels::{
    build_kernel_table, heaviside, k_etaeta_freq, k_etanu_freq, kernel_time, spectral_density,
    BathParams, CustomKernel, KernelKind, KernelSource, KernelTable,
};
pub use noise::{
    estimate_correlations, sample_white, synthesize, synthesize_many, CorrelationEstimate,
    NoisePair, Synthesizer, TimeGrid,
};
pub use rng::{seed_for, seed_for_value, StreamSeed};
pub use schemes::{
    convex_c, expected_eta_power, expected_nu_power, expected_total_power, filters_with_mixing,
    make_filters, mixing_optimised, mixing_reduced, rescale_factor, support_inverse,
    verify_constraint, wiener_inverse, Component, ConstraintResidual, FilterRole, FilterSet, MixingFunction,
    SchemeId, SpectralInverse, Structure, Tap,
};
