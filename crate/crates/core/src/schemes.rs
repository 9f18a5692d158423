//! Fourier-domain filter sets for the seven noise-generation schemes.
//!
//! Orthogonal-decomposition schemes build
//!
//! ```text
//! eta = f1 * x1 + f2 * (x2 + i x3)
//! nu  = g1 * (i x1 + x4) + g2 * (x3 + i x2)
//! ```
//!
//! which gives `<eta nu> = i (f1 g1 + 2 f2 g2)` and `<nu nu> = 0` for any
//! filters, so the only constraint is
//! `f1(w) g1(-w) + 2 f2(w) g2(-w) = R(w)`. The convex scheme uses
//! `eta = f1 * x1 + i f2 * x2`, `nu = g1 * (x1 + i x2)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Result, SlnError};
use crate::grid::FrequencyGrid;
use crate::kernels::KernelTable;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Offset from 1/2 used for the convex weight where `K_etaeta = 0`.
pub const CONVEX_LIMIT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    Delta,
    Constrained,
    Like,
    Reduced,
    NuOptimised,
    EtaNuOptimised,
    ConvexOptimised,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::Delta,
        SchemeId::Constrained,
        SchemeId::Like,
        SchemeId::Reduced,
        SchemeId::NuOptimised,
        SchemeId::EtaNuOptimised,
        SchemeId::ConvexOptimised,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Delta => "delta",
            SchemeId::Constrained => "constrained",
            SchemeId::Like => "like",
            SchemeId::Reduced => "reduced",
            SchemeId::NuOptimised => "nu-optimised",
            SchemeId::EtaNuOptimised => "etanu-optimised",
            SchemeId::ConvexOptimised => "convex",
        }
    }

    /// Optimisation constant of the closed-form mixing function.
    pub fn zeta(self) -> f64 {
        match self {
            SchemeId::NuOptimised => 0.25,
            SchemeId::EtaNuOptimised => 0.5,
            _ => 0.0,
        }
    }

    pub fn needs_wiener(self) -> bool {
        matches!(self, SchemeId::Constrained | SchemeId::Reduced)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = SlnError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let id = match key.as_str() {
            "delta" => SchemeId::Delta,
            "constrained" => SchemeId::Constrained,
            "like" => SchemeId::Like,
            "reduced" => SchemeId::Reduced,
            "nu-optimised" | "nu-optimized" | "nu-opt" => SchemeId::NuOptimised,
            "etanu-optimised" | "etanu-optimized" | "etanu-opt" => SchemeId::EtaNuOptimised,
            "convex" | "convex-optimised" | "convex-optimized" => SchemeId::ConvexOptimised,
            _ => return Err(invalid(format!("unknown scheme '{s}'"))),
        };
        Ok(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    OrthogonalDecomposition,
    ConvexForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterRole {
    F1,
    F2,
    G1,
    G2,
}

/// Which part of which noise a tap contributes to. The cross parts are the
/// components rescaled by the dynamical rescaling factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    EtaAuto,
    EtaCross,
    NuAuto,
    NuCross,
}

/// One term `unit * (filter convolved with white channel)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub component: Component,
    pub filter: FilterRole,
    pub channel: usize,
    pub unit: Complex64,
}

const fn tap(component: Component, filter: FilterRole, channel: usize, unit: Complex64) -> Tap {
    Tap { component, filter, channel, unit }
}

const ORTHOGONAL_WIRING: [Tap; 7] = [
    tap(Component::EtaAuto, FilterRole::F1, 0, ONE),
    tap(Component::EtaCross, FilterRole::F2, 1, ONE),
    tap(Component::EtaCross, FilterRole::F2, 2, I),
    tap(Component::NuAuto, FilterRole::G1, 0, I),
    tap(Component::NuAuto, FilterRole::G1, 3, ONE),
    tap(Component::NuCross, FilterRole::G2, 2, ONE),
    tap(Component::NuCross, FilterRole::G2, 1, I),
];

const CONVEX_WIRING: [Tap; 4] = [
    tap(Component::EtaAuto, FilterRole::F1, 0, ONE),
    tap(Component::EtaAuto, FilterRole::F2, 1, I),
    tap(Component::NuAuto, FilterRole::G1, 0, ONE),
    tap(Component::NuAuto, FilterRole::G1, 1, I),
];

#[derive(Debug, Clone, PartialEq)]
pub struct MixingFunction {
    pub a_w: Vec<f64>,
    /// Bins assigned by a fallback rule rather than the formula.
    pub special_bins: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FilterSet {
    pub scheme: SchemeId,
    pub structure: Structure,
    pub grid: FrequencyGrid,
    pub f1_w: Vec<Complex64>,
    pub f2_w: Vec<Complex64>,
    pub g1_w: Vec<Complex64>,
    pub g2_w: Vec<Complex64>,
    pub wiring: Vec<Tap>,
    pub gamma: f64,
    pub zeta: f64,
    pub mixing: Option<MixingFunction>,
    /// Bins where a principal square root was taken of a negative real number.
    pub branch_cut_bins: Vec<usize>,
    /// Bins where `R = 0` (optimised) or `K_etaeta = 0` (convex) forced a fallback.
    pub special_bins: Vec<usize>,
}

impl FilterSet {
    pub fn filter(&self, role: FilterRole) -> &[Complex64] {
        match role {
            FilterRole::F1 => &self.f1_w,
            FilterRole::F2 => &self.f2_w,
            FilterRole::G1 => &self.g1_w,
            FilterRole::G2 => &self.g2_w,
        }
    }

    pub fn channels(&self) -> usize {
        self.wiring.iter().map(|t| t.channel + 1).max().unwrap_or(0)
    }

    /// True when the scheme produces a nonzero cross-correlative pair that
    /// the dynamical rescaling can act on.
    pub fn has_cross_component(&self) -> bool {
        self.structure == Structure::OrthogonalDecomposition
            && self.f2_w.iter().any(|v| *v != ZERO)
            && self.g2_w.iter().any(|v| *v != ZERO)
    }

    /// Largest `|f(w)* - f(-w)|` over all filters, relative to each filter's
    /// maximum, skipping recorded branch-cut bins.
    pub fn max_reality_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for arr in [&self.f1_w, &self.f2_w, &self.g1_w, &self.g2_w] {
            let scale = arr.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            for k in 0..arr.len() {
                let m = self.grid.mirror(k);
                if self.branch_cut_bins.contains(&k) || self.branch_cut_bins.contains(&m) {
                    continue;
                }
                worst = worst.max((arr[k].conj() - arr[m]).norm() / scale);
            }
        }
        worst
    }
}

/// Regularised spectral inverse `sqrt(K) / (K + gamma max sqrt(K))`.
pub fn wiener_inverse(k_etaeta_w: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma must be nonnegative, got {gamma}")));
    }
    if gamma == 0.0 {
        let zero_bins = k_etaeta_w.iter().filter(|&&k| k <= 0.0).count();
        if zero_bins > 0 {
            return Err(SlnError::DivisionByZeroSpectrum { zero_bins });
        }
    }
    let max_sqrt = k_etaeta_w.iter().map(|k| k.max(0.0).sqrt()).fold(0.0, f64::max);
    Ok(k_etaeta_w
        .iter()
        .map(|&k| {
            let s = k.max(0.0).sqrt();
            if s == 0.0 {
                0.0
            } else {
                s / (k + gamma * max_sqrt)
            }
        })
        .collect())
}

/// `1 / sqrt(K)` where `K > 0` and 0 elsewhere: the unregularised inverse
/// restricted to the support of the spectrum.
pub fn support_inverse(k_etaeta_w: &[f64]) -> Vec<f64> {
    k_etaeta_w
        .iter()
        .map(|&k| if k > 0.0 { 1.0 / k.sqrt() } else { 0.0 })
        .collect()
}

/// How divisions by `sqrt(K_etaeta)` are carried out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralInverse {
    Wiener(f64),
    Support,
}

impl SpectralInverse {
    fn weights(self, k_etaeta_w: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpectralInverse::Wiener(gamma) => wiener_inverse(k_etaeta_w, gamma),
            SpectralInverse::Support => Ok(support_inverse(k_etaeta_w)),
        }
    }

    fn gamma(self) -> f64 {
        match self {
            SpectralInverse::Wiener(gamma) => gamma,
            SpectralInverse::Support => 0.0,
        }
    }
}

/// Binary mixing: 0 (constrained) where `|R| <= K_etaeta`, else 1 (like).
pub fn mixing_reduced(k_etaeta_w: &[f64], r_w: &[Complex64]) -> MixingFunction {
    let a_w = k_etaeta_w
        .iter()
        .zip(r_w)
        .map(|(&k, r)| if k > 0.0 && r.norm() <= k { 0.0 } else { 1.0 })
        .collect();
    MixingFunction { a_w, special_bins: Vec::new() }
}

/// Closed-form optimal mixing `1 - zeta K_etaeta / |R|`.
pub fn mixing_optimised(k_etaeta_w: &[f64], r_w: &[Complex64], zeta: f64) -> MixingFunction {
    let mut special_bins = Vec::new();
    let a_w = k_etaeta_w
        .iter()
        .zip(r_w)
        .enumerate()
        .map(|(k, (&kk, r))| {
            let abs_r = r.norm();
            if abs_r == 0.0 {
                if kk > 0.0 {
                    special_bins.push(k);
                    0.0
                } else {
                    1.0
                }
            } else {
                1.0 - zeta * kk / abs_r
            }
        })
        .collect();
    MixingFunction { a_w, special_bins }
}

/// Convex weight `C = (1 - K / sqrt(4|R|^2 + K^2)) / 2` and the bins where
/// `K = 0 < |R|` were pinned just below 1/2.
pub fn convex_c(k_etaeta_w: &[f64], r_w: &[Complex64]) -> (Vec<f64>, Vec<usize>) {
    let mut limit_bins = Vec::new();
    let c = k_etaeta_w
        .iter()
        .zip(r_w)
        .enumerate()
        .map(|(k, (&kk, r))| {
            let abs_r = r.norm();
            if abs_r == 0.0 {
                0.0
            } else if kk <= 0.0 {
                limit_bins.push(k);
                0.5 - CONVEX_LIMIT_EPS
            } else {
                0.5 * (1.0 - kk / (4.0 * abs_r * abs_r + kk * kk).sqrt())
            }
        })
        .collect();
    (c, limit_bins)
}

fn is_negative_real(z: Complex64) -> bool {
    z.im == 0.0 && z.re < 0.0
}

fn empty(n: usize) -> Vec<Complex64> {
    vec![ZERO; n]
}

fn sqrt_k(kt: &KernelTable) -> Vec<Complex64> {
    kt.k_etaeta_w.iter().map(|&k| Complex64::new(k.max(0.0).sqrt(), 0.0)).collect()
}

struct Parts {
    f2: Vec<Complex64>,
    g1: Vec<Complex64>,
    g2: Vec<Complex64>,
    branch_cut_bins: Vec<usize>,
}

/// `f2 = sqrt(radicand)`, `g2(w) = sqrt(radicand(-w))`.
fn sqrt_pair(grid: &FrequencyGrid, radicand: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>, Vec<usize>) {
    let n = radicand.len();
    let f2: Vec<Complex64> = radicand.iter().map(|z| z.sqrt()).collect();
    let g2 = (0..n).map(|k| f2[grid.mirror(k)]).collect();
    let cuts = (0..n).filter(|&k| is_negative_real(radicand[k])).collect();
    (f2, g2, cuts)
}

fn orthogonal(scheme: SchemeId, kt: &KernelTable, gamma: f64, zeta: f64, mixing: Option<MixingFunction>, parts: Parts, special_bins: Vec<usize>) -> FilterSet {
    FilterSet {
        scheme,
        structure: Structure::OrthogonalDecomposition,
        grid: kt.grid,
        f1_w: sqrt_k(kt),
        f2_w: parts.f2,
        g1_w: parts.g1,
        g2_w: parts.g2,
        wiring: ORTHOGONAL_WIRING.to_vec(),
        gamma,
        zeta,
        mixing,
        branch_cut_bins: parts.branch_cut_bins,
        special_bins,
    }
}

/// Reduced-form filters for an arbitrary real, even mixing function:
/// `f2 = sqrt(A R / 2)`, `g1 = R(-w) W (1 - A)`, `g2(w) = f2(-w)`.
/// With a binary `A` this is the reduced scheme; `A = 0` gives the
/// constrained filters and `A = 1` the like filters.
pub fn filters_with_mixing(
    scheme: SchemeId,
    kt: &KernelTable,
    mixing: MixingFunction,
    inverse: SpectralInverse,
) -> Result<FilterSet> {
    let grid = kt.grid;
    let n = grid.n();
    if mixing.a_w.len() != n {
        return Err(invalid("mixing function length does not match the kernel grid"));
    }
    let w = inverse.weights(&kt.k_etaeta_w)?;
    let radicand: Vec<Complex64> = (0..n).map(|k| 0.5 * mixing.a_w[k] * kt.r_w[k]).collect();
    let (f2, g2, branch_cut_bins) = sqrt_pair(&grid, &radicand);
    let g1 = (0..n)
        .map(|k| {
            let m = grid.mirror(k);
            kt.r_w[m] * (w[k] * (1.0 - mixing.a_w[m]))
        })
        .collect();
    let special = mixing.special_bins.clone();
    let parts = Parts { f2, g1, g2, branch_cut_bins };
    Ok(orthogonal(scheme, kt, inverse.gamma(), 0.0, Some(mixing), parts, special))
}

fn delta_filters(kt: &KernelTable) -> FilterSet {
    let n = kt.grid.n();
    let parts = Parts {
        f2: kt.r_w.iter().map(|r| 0.5 * r).collect(),
        g1: empty(n),
        g2: vec![ONE; n],
        branch_cut_bins: Vec::new(),
    };
    orthogonal(SchemeId::Delta, kt, 0.0, 0.0, None, parts, Vec::new())
}

fn constrained_filters(kt: &KernelTable, gamma: f64) -> Result<FilterSet> {
    let grid = kt.grid;
    let n = grid.n();
    let w = wiener_inverse(&kt.k_etaeta_w, gamma)?;
    let parts = Parts {
        f2: empty(n),
        g1: (0..n).map(|k| kt.r_w[grid.mirror(k)] * w[k]).collect(),
        g2: empty(n),
        branch_cut_bins: Vec::new(),
    };
    Ok(orthogonal(SchemeId::Constrained, kt, gamma, 0.0, None, parts, Vec::new()))
}

fn like_filters(kt: &KernelTable) -> FilterSet {
    let n = kt.grid.n();
    let radicand: Vec<Complex64> = kt.r_w.iter().map(|r| 0.5 * r).collect();
    let (f2, g2, branch_cut_bins) = sqrt_pair(&kt.grid, &radicand);
    let parts = Parts { f2, g1: empty(n), g2, branch_cut_bins };
    orthogonal(SchemeId::Like, kt, 0.0, 0.0, None, parts, Vec::new())
}

/// Optimised filters from the closed forms, which avoid dividing by
/// `sqrt(K_etaeta)`:
/// `f2 = sqrt(R/2 - zeta K R/(2|R|))`, `g1 = zeta R(-w) sqrt(K) / |R|`.
fn optimised_filters(scheme: SchemeId, kt: &KernelTable) -> FilterSet {
    let grid = kt.grid;
    let n = grid.n();
    let zeta = scheme.zeta();
    let mixing = mixing_optimised(&kt.k_etaeta_w, &kt.r_w, zeta);
    let mut radicand = empty(n);
    let mut g1 = empty(n);
    for k in 0..n {
        let r = kt.r_w[k];
        let abs_r = r.norm();
        if abs_r == 0.0 {
            continue;
        }
        let kk = kt.k_etaeta_w[k];
        radicand[k] = 0.5 * r - (0.5 * zeta * kk / abs_r) * r;
        let m = grid.mirror(k);
        // |R(-w)| = |R(w)|
        g1[k] = kt.r_w[m] * (zeta * kk.max(0.0).sqrt() / abs_r);
    }
    let (f2, g2, branch_cut_bins) = sqrt_pair(&grid, &radicand);
    let special = mixing.special_bins.clone();
    let parts = Parts { f2, g1, g2, branch_cut_bins };
    orthogonal(scheme, kt, 0.0, zeta, Some(mixing), parts, special)
}

/// Convex filters written with `S = (4|R|^2 + K^2)^(1/4)`:
/// `f1 = (1 - C) S`, `f2 = C S`, `g1 = R(-w) / S`.
fn convex_filters(kt: &KernelTable) -> FilterSet {
    let grid = kt.grid;
    let n = grid.n();
    let (c, limit_bins) = convex_c(&kt.k_etaeta_w, &kt.r_w);
    let mut f1 = empty(n);
    let mut f2 = empty(n);
    let mut g1 = empty(n);
    for k in 0..n {
        let abs_r = kt.r_w[k].norm();
        let kk = kt.k_etaeta_w[k].max(0.0);
        let s = (4.0 * abs_r * abs_r + kk * kk).sqrt().sqrt();
        if s == 0.0 {
            continue;
        }
        f1[k] = Complex64::new((1.0 - c[k]) * s, 0.0);
        f2[k] = Complex64::new(c[k] * s, 0.0);
        g1[k] = kt.r_w[grid.mirror(k)] / s;
    }
    FilterSet {
        scheme: SchemeId::ConvexOptimised,
        structure: Structure::ConvexForm,
        grid,
        f1_w: f1,
        f2_w: f2,
        g1_w: g1,
        g2_w: empty(n),
        wiring: CONVEX_WIRING.to_vec(),
        gamma: 0.0,
        zeta: 0.0,
        mixing: None,
        branch_cut_bins: Vec::new(),
        special_bins: limit_bins,
    }
}

/// Builds the filter set for `scheme`. `gamma` only affects the
/// constrained and reduced schemes, which divide by `sqrt(K_etaeta)`.
pub fn make_filters(scheme: SchemeId, kt: &KernelTable, gamma: f64) -> Result<FilterSet> {
    match scheme {
        SchemeId::Delta => Ok(delta_filters(kt)),
        SchemeId::Constrained => constrained_filters(kt, gamma),
        SchemeId::Like => Ok(like_filters(kt)),
        SchemeId::Reduced => {
            let mixing = mixing_reduced(&kt.k_etaeta_w, &kt.r_w);
            filters_with_mixing(SchemeId::Reduced, kt, mixing, SpectralInverse::Wiener(gamma))
        }
        SchemeId::NuOptimised | SchemeId::EtaNuOptimised => Ok(optimised_filters(scheme, kt)),
        SchemeId::ConvexOptimised => Ok(convex_filters(kt)),
    }
}

fn component_power(fs: &FilterSet, keep: impl Fn(Component) -> bool) -> f64 {
    let sum: f64 = fs
        .wiring
        .iter()
        .filter(|t| keep(t.component))
        .map(|t| fs.filter(t.filter).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum();
    sum / (fs.grid.n() as f64 * fs.grid.dt())
}

/// `<|nu|^2>` as the discrete form of `int dw/2pi sum_taps |filter|^2`
/// (`2|g1|^2 + 2|g2|^2` for the orthogonal wiring).
pub fn expected_nu_power(fs: &FilterSet) -> f64 {
    component_power(fs, |c| matches!(c, Component::NuAuto | Component::NuCross))
}

pub fn expected_eta_power(fs: &FilterSet) -> f64 {
    component_power(fs, |c| matches!(c, Component::EtaAuto | Component::EtaCross))
}

/// `<|eta|^2> + <|nu|^2>`.
pub fn expected_total_power(fs: &FilterSet) -> f64 {
    component_power(fs, |_| true)
}

#[derive(Debug, Clone)]
pub struct ConstraintResidual {
    pub per_bin: Vec<f64>,
    pub max: f64,
    pub rms: f64,
}

impl ConstraintResidual {
    /// Largest residual over the bins selected by `keep`.
    pub fn max_over(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.per_bin
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(*k))
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }
}

/// Per-bin `|f1(w) g1(-w) + 2 f2(w) g2(-w) - R(w)|`, or
/// `|(f1(w) - f2(w)) g1(-w) - R(w)|` for the convex form.
pub fn verify_constraint(fs: &FilterSet, kt: &KernelTable) -> ConstraintResidual {
    let grid = fs.grid;
    let per_bin: Vec<f64> = (0..grid.n())
        .map(|k| {
            let m = grid.mirror(k);
            let cross = match fs.structure {
                Structure::OrthogonalDecomposition => {
                    fs.f1_w[k] * fs.g1_w[m] + 2.0 * fs.f2_w[k] * fs.g2_w[m]
                }
                Structure::ConvexForm => (fs.f1_w[k] - fs.f2_w[k]) * fs.g1_w[m],
            };
            (cross - kt.r_w[k]).norm()
        })
        .collect();
    let max = per_bin.iter().copied().fold(0.0, f64::max);
    let rms = (per_bin.iter().map(|v| v * v).sum::<f64>() / per_bin.len() as f64).sqrt();
    ConstraintResidual { per_bin, max, rms }
}

/// Factor `l` for `eta0 -> l eta0`, `nu0 -> nu0 / l`, chosen so that
/// `sum |nu| / sum |eta|` of the rescaled components equals `lambda`:
/// `l = sqrt(sum |nu0| / (lambda sum |eta0|))`.
pub fn rescale_factor(eta0: &[Complex64], nu0: &[Complex64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let se: f64 = eta0.iter().map(|v| v.norm()).sum();
    let sn: f64 = nu0.iter().map(|v| v.norm()).sum();
    if se == 0.0 {
        return Err(SlnError::ZeroComponent);
    }
    Ok((sn / (lambda * se)).sqrt())
}
