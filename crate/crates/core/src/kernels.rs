//! Bath spectral density and the eta-eta / eta-nu correlation kernels.
//!
//! Units have hbar = k_B = 1. The spectral density is the Drude form with a
//! hard cutoff at `omega_c`. Frequency-domain kernels use the transform
//! convention of [`crate::grid`]; `R(t) = -i K_etanu(t)` is real, so its
//! transform obeys `R(-w) = conj(R(w))`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result, SlnError};
use crate::grid::{FrequencyGrid, Transform};
use crate::quadrature::GaussLegendre;

const QUAD_ORDER: usize = 16;
/// Relative distance from the cutoff below which a frequency counts as singular.
const SINGULAR_REL: f64 = 1e-12;
/// Grid bins this close (relative) to the cutoff are moved half a bin inward.
const GRID_NUDGE_REL: f64 = 1e-9;
const MAX_ASYMMETRY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub beta: f64,
    pub omega_c: f64,
}

impl BathParams {
    pub fn new(beta: f64, omega_c: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(invalid(format!("omega_c must be positive, got {omega_c}")));
        }
        Ok(Self { beta, omega_c })
    }
}

/// `[1 + (w/wc)^2]^-2`, the Drude shape without the leading `w`.
fn drude_shape(omega: f64, omega_c: f64) -> f64 {
    let u = omega / omega_c;
    let d = 1.0 + u * u;
    1.0 / (d * d)
}

/// `x coth x`, finite at the origin.
fn x_coth_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        ax / ax.tanh()
    }
}

/// J(w) = w [1 + (w/wc)^2]^-2 on (0, wc], zero elsewhere.
pub fn spectral_density(omega: f64, params: &BathParams) -> f64 {
    if omega <= 0.0 || omega > params.omega_c {
        0.0
    } else {
        omega * drude_shape(omega, params.omega_c)
    }
}

/// `J(|w|) coth(beta |w| / 2)`, with the `2 / beta` limit at the origin.
pub fn k_etaeta_freq(omega: f64, params: &BathParams) -> f64 {
    let w = omega.abs();
    if w > params.omega_c {
        return 0.0;
    }
    // w coth(beta w / 2) = (2 / beta) x coth x, x = beta w / 2
    let x = 0.5 * params.beta * w;
    (2.0 / params.beta) * x_coth_x(x) * drude_shape(w, params.omega_c)
}

/// Regular part of the principal-value integral: the divided difference
/// `x^2 [f(x) - f(w)] / (x^2 - w^2)` written without cancellation.
fn subtracted_integrand(x: f64, omega: f64, omega_c: f64) -> f64 {
    let c2 = omega_c * omega_c;
    let (x2, w2) = (x * x, omega * omega);
    let a = c2 + x2;
    let b = c2 + w2;
    -x2 * c2 * c2 * (2.0 * c2 + x2 + w2) / (a * a * b * b)
}

/// Fourier transform of `K_etanu`.
///
/// The real part is `-sgn(w) J(|w|)`. The imaginary part is
/// `-(2/pi) PV int_0^wc x J(x) / (x^2 - w^2) dx`, evaluated by subtracting
/// the shape factor at `w`: the remainder is smooth and integrated by
/// Gauss-Legendre, the subtracted piece is `wc + (w/2) ln|(wc-w)/(wc+w)|`.
pub fn k_etanu_freq(omega: f64, params: &BathParams) -> Result<Complex64> {
    let wc = params.omega_c;
    let w = omega.abs();
    if ((w - wc) / wc).abs() < SINGULAR_REL {
        return Err(SlnError::SingularPoint { omega });
    }
    let re = -omega.signum() * spectral_density(w, params);
    let re = if omega == 0.0 { 0.0 } else { re };

    let gl = GaussLegendre::new(QUAD_ORDER);
    let smooth = gl.integrate(0.0, wc, 4, |x| subtracted_integrand(x, w, wc));
    let log_term = if w == 0.0 {
        0.0
    } else {
        0.5 * w * ((wc - w) / (wc + w)).abs().ln()
    };
    let singular = drude_shape(w, wc) * (wc + log_term);
    let im = -(2.0 / PI) * (smooth + singular);
    Ok(Complex64::new(re, im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    EtaEta,
    EtaNu,
}

/// Composite Gauss-Legendre nodes over [0, wc] carrying `J` and
/// `J coth(beta w/2)`, fine enough for lags up to `t_max`.
struct DrudeQuadrature {
    nodes: Vec<(f64, f64)>,
    lambda: Vec<f64>,
    j: Vec<f64>,
}

impl DrudeQuadrature {
    fn new(params: &BathParams, t_max: f64) -> Self {
        let wc = params.omega_c;
        // A panel never spans more than half an oscillation of cos(w t),
        // and stays narrow near the coth poles at w = 2 pi i k / beta.
        let mut width = wc / 8.0;
        if t_max > 0.0 {
            width = width.min(PI / t_max);
        }
        width = width.min(PI / params.beta);
        let panels = (wc / width).ceil() as usize;
        let nodes = GaussLegendre::new(QUAD_ORDER).composite_nodes(0.0, wc, panels);
        let lambda = nodes.iter().map(|&(w, _)| k_etaeta_freq(w, params)).collect();
        let j = nodes.iter().map(|&(w, _)| spectral_density(w, params)).collect();
        Self { nodes, lambda, j }
    }

    fn etaeta(&self, t: f64) -> f64 {
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.lambda)
            .map(|(&(w, wt), l)| wt * l * (w * t).cos())
            .sum();
        s / PI
    }

    fn etanu(&self, t: f64) -> Complex64 {
        let theta = heaviside(t);
        if theta == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.j)
            .map(|(&(w, wt), j)| wt * j * (w * t).sin())
            .sum();
        Complex64::new(0.0, -2.0 * theta * s / PI)
    }
}

/// Step function with the half-maximum convention at the origin.
pub fn heaviside(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Time-domain kernels by quadrature:
/// `K_etaeta(t) = (1/pi) int_0^wc J coth(beta w/2) cos(w t) dw` and
/// `K_etanu(t) = -2i Theta(t) (1/pi) int_0^wc J sin(w t) dw`.
pub fn kernel_time(t: f64, params: &BathParams, which: KernelKind) -> Complex64 {
    let q = DrudeQuadrature::new(params, t.abs());
    match which {
        KernelKind::EtaEta => Complex64::new(q.etaeta(t), 0.0),
        KernelKind::EtaNu => q.etanu(t),
    }
}

/// A user-supplied bath correlation function `K(t)`.
///
/// The table builder reads it with the convention
/// `K_etaeta(t) = Re K(t)` and `K_etanu(t) = 2i Theta(t) Im K(t)`.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    func: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
}

impl CustomKernel {
    pub fn new(name: impl Into<String>, func: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), func: Arc::new(func) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.func)(t)
    }

    pub fn etaeta(&self, t: f64) -> f64 {
        self.eval(t).re
    }

    pub fn etanu(&self, t: f64) -> Complex64 {
        Complex64::new(0.0, 2.0 * heaviside(t) * self.eval(t).im)
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum KernelSource {
    Drude(BathParams),
    Custom(CustomKernel),
}

/// Sampled bath correlation data on one grid. Arrays are in FFT order.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub grid: FrequencyGrid,
    pub source: KernelSource,
    pub k_etaeta_w: Vec<f64>,
    pub k_etanu_w: Vec<Complex64>,
    /// `R(w) = -i K_etanu(w)`.
    pub r_w: Vec<Complex64>,
    /// Time kernels sampled at `grid.time(j)`.
    pub k_etaeta_t: Vec<f64>,
    pub k_etanu_t: Vec<Complex64>,
    /// Largest relative correction applied while enforcing symmetry.
    pub max_asymmetry: f64,
    /// Bins evaluated half a bin inward because they fell on the cutoff.
    pub shifted_bins: Vec<usize>,
}

impl KernelTable {
    pub fn max_abs_r(&self) -> f64 {
        self.r_w.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

pub fn build_kernel_table(grid: FrequencyGrid, source: KernelSource) -> Result<KernelTable> {
    match source {
        KernelSource::Drude(params) => build_drude(grid, params),
        KernelSource::Custom(kernel) => build_custom(grid, kernel),
    }
}

fn build_drude(grid: FrequencyGrid, params: BathParams) -> Result<KernelTable> {
    let n = grid.n();
    let wc = params.omega_c;
    let mut shifted_bins = Vec::new();
    let mut k_etaeta = vec![0.0; n];
    let mut r_raw = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut w = grid.omega(k);
        if ((w.abs() - wc) / wc).abs() < GRID_NUDGE_REL {
            w -= w.signum() * 0.5 * grid.domega();
            shifted_bins.push(k);
        }
        k_etaeta[k] = k_etaeta_freq(w, &params);
        r_raw[k] = Complex64::new(0.0, -1.0) * k_etanu_freq(w, &params)?;
    }
    let eta_raw: Vec<Complex64> = k_etaeta.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (k_etaeta_w, asym_eta) = symmetrize_even_real(&grid, &eta_raw);
    let (r_w, asym_r) = symmetrize_hermitian(&grid, &r_raw);

    let t_half = grid.dt() * (n / 2) as f64;
    let quad = DrudeQuadrature::new(&params, t_half);
    let mut k_etaeta_t = vec![0.0; n];
    let mut k_etanu_t = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..=n / 2 {
        let t = grid.dt() * j as f64;
        let v = quad.etaeta(t);
        k_etaeta_t[j] = v;
        k_etaeta_t[grid.mirror(j)] = v;
        if j < n / 2 {
            k_etanu_t[j] = quad.etanu(t);
        }
    }

    finish_table(grid, KernelSource::Drude(params), k_etaeta_w, r_w, k_etaeta_t, k_etanu_t, asym_eta.max(asym_r), shifted_bins)
}

fn build_custom(grid: FrequencyGrid, kernel: CustomKernel) -> Result<KernelTable> {
    let n = grid.n();
    let transform = Transform::new(&grid);
    let k_etaeta_t: Vec<f64> = (0..n).map(|j| kernel.etaeta(grid.time(j))).collect();
    let k_etanu_t: Vec<Complex64> = (0..n).map(|j| kernel.etanu(grid.time(j))).collect();

    let mut eta_w: Vec<Complex64> = k_etaeta_t.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform.forward(&mut eta_w);
    // R(t) = -i K_etanu(t) is real
    let mut r_raw: Vec<Complex64> = k_etanu_t.iter().map(|&v| Complex64::new(0.0, -1.0) * v).collect();
    transform.forward(&mut r_raw);

    let (k_etaeta_w, asym_eta) = symmetrize_even_real(&grid, &eta_w);
    let (r_w, asym_r) = symmetrize_hermitian(&grid, &r_raw);
    finish_table(grid, KernelSource::Custom(kernel), k_etaeta_w, r_w, k_etaeta_t, k_etanu_t, asym_eta.max(asym_r), Vec::new())
}

#[allow(clippy::too_many_arguments)]
fn finish_table(
    grid: FrequencyGrid,
    source: KernelSource,
    k_etaeta_w: Vec<f64>,
    r_w: Vec<Complex64>,
    k_etaeta_t: Vec<f64>,
    k_etanu_t: Vec<Complex64>,
    max_asymmetry: f64,
    shifted_bins: Vec<usize>,
) -> Result<KernelTable> {
    if max_asymmetry > MAX_ASYMMETRY {
        return Err(SlnError::AsymmetryExceeded { relative: max_asymmetry });
    }
    let k_etanu_w = r_w.iter().map(|&r| Complex64::new(0.0, 1.0) * r).collect();
    Ok(KernelTable {
        grid,
        source,
        k_etaeta_w,
        k_etanu_w,
        r_w,
        k_etaeta_t,
        k_etanu_t,
        max_asymmetry,
        shifted_bins,
    })
}

fn max_norm(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Projects onto real, even arrays. Returns the projection and the relative
/// size of the discarded part.
fn symmetrize_even_real(grid: &FrequencyGrid, values: &[Complex64]) -> (Vec<f64>, f64) {
    let scale = max_norm(values);
    let mut out = vec![0.0; values.len()];
    let mut asym: f64 = 0.0;
    for k in 0..values.len() {
        let m = grid.mirror(k);
        let sym = 0.5 * (values[k].re + values[m].re);
        out[k] = sym;
        asym = asym.max((values[k] - Complex64::new(sym, 0.0)).norm());
    }
    (out, if scale > 0.0 { asym / scale } else { 0.0 })
}

/// Projects onto arrays with `v(-w) = conj(v(w))`.
fn symmetrize_hermitian(grid: &FrequencyGrid, values: &[Complex64]) -> (Vec<Complex64>, f64) {
    let scale = max_norm(values);
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    let mut asym: f64 = 0.0;
    for k in 0..values.len() {
        let m = grid.mirror(k);
        let sym = 0.5 * (values[k] + values[m].conj());
        out[k] = sym;
        asym = asym.max((values[k] - sym).norm());
    }
    (out, if scale > 0.0 { asym / scale } else { 0.0 })
}
