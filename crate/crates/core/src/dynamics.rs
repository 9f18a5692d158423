//! Stochastic dynamics of a driven two-level system coupled through
//! `alpha sigma_z`, and the exactly solvable dephasing (QND) model.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::kernels::{build_kernel_table, CustomKernel, KernelSource, KernelTable};
use crate::noise::{NoisePair, TimeGrid};

/// States with any component larger than this are flagged as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(Tr rho, <sigma_x>, <sigma_y>, <sigma_z>)` of one stochastic density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub tr: Complex64,
    pub sx: Complex64,
    pub sy: Complex64,
    pub sz: Complex64,
}

impl SpinState {
    pub fn new(tr: Complex64, sx: Complex64, sy: Complex64, sz: Complex64) -> Self {
        Self { tr, sx, sy, sz }
    }

    pub fn real(tr: f64, sx: f64, sy: f64, sz: f64) -> Self {
        let c = |v| Complex64::new(v, 0.0);
        Self::new(c(tr), c(sx), c(sy), c(sz))
    }

    /// Pure state with `sigma_z = +1`.
    pub fn up() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn down() -> Self {
        Self::real(1.0, 0.0, 0.0, -1.0)
    }

    pub fn from_matrix(rho: &Matrix2) -> Self {
        Self {
            tr: rho[0][0] + rho[1][1],
            sx: rho[0][1] + rho[1][0],
            sy: I * (rho[0][1] - rho[1][0]),
            sz: rho[0][0] - rho[1][1],
        }
    }

    /// `rho = (tr I + sx sigma_x + sy sigma_y + sz sigma_z) / 2`.
    pub fn to_matrix(&self) -> Matrix2 {
        [
            [0.5 * (self.tr + self.sz), 0.5 * (self.sx - I * self.sy)],
            [0.5 * (self.sx + I * self.sy), 0.5 * (self.tr - self.sz)],
        ]
    }

    pub fn rho01(&self) -> Complex64 {
        0.5 * (self.sx - I * self.sy)
    }

    pub fn max_norm(&self) -> f64 {
        self.tr.norm().max(self.sx.norm()).max(self.sy.norm()).max(self.sz.norm())
    }

    pub fn is_finite(&self) -> bool {
        [self.tr, self.sx, self.sy, self.sz].iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for SpinState {
    type Output = SpinState;

    fn add(self, o: SpinState) -> SpinState {
        SpinState::new(self.tr + o.tr, self.sx + o.sx, self.sy + o.sy, self.sz + o.sz)
    }
}

impl Mul<SpinState> for f64 {
    type Output = SpinState;

    fn mul(self, s: SpinState) -> SpinState {
        SpinState::new(self * s.tr, self * s.sx, self * s.sy, self * s.sz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Constant(f64),
    /// `epsilon(t) = kappa t`.
    LinearSweep(f64),
}

impl Drive {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Drive::Constant(v) => v,
            Drive::LinearSweep(kappa) => kappa * t,
        }
    }
}

/// `H(t) = Delta sigma_x / 2 + epsilon(t) sigma_z / 2`, coupling `alpha sigma_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemModel {
    pub delta: f64,
    pub epsilon: Drive,
    pub alpha: f64,
    pub t0: f64,
    pub rho0: SpinState,
}

impl SystemModel {
    pub fn validate(&self) -> Result<()> {
        let drive = match self.epsilon {
            Drive::Constant(v) | Drive::LinearSweep(v) => v,
        };
        if ![self.delta, drive, self.alpha, self.t0].iter().all(|v| v.is_finite()) || !self.rho0.is_finite() {
            return Err(invalid("system model parameters must be finite"));
        }
        Ok(())
    }

    /// Right-hand side of the spin/trace equations for given noise values.
    pub fn rhs(&self, t: f64, eta: Complex64, nu: Complex64, s: &SpinState) -> SpinState {
        let b = self.epsilon.at(t) - 2.0 * self.alpha * eta;
        let drive = I * self.alpha * nu;
        SpinState {
            sx: -b * s.sy,
            sy: -self.delta * s.sz + b * s.sx,
            sz: self.delta * s.sy + drive * s.tr,
            tr: drive * s.sz,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub states: Vec<SpinState>,
    /// First step index at which the state exceeded the divergence threshold.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// Classical RK4 with step `step`. `noise(j)` returns `(eta, nu)` at half-step
/// index `j`, i.e. at time `t0 + j step / 2`.
pub fn integrate_with<F>(model: &SystemModel, step: f64, n_steps: usize, noise: F) -> Trajectory
where
    F: Fn(usize) -> (Complex64, Complex64),
{
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut s = model.rho0;
    let mut diverged_at = (s.max_norm() > DIVERGENCE_THRESHOLD).then_some(0);
    states.push(s);
    for i in 0..n_steps {
        let t = model.t0 + i as f64 * step;
        let (e0, n0) = noise(2 * i);
        let (e1, n1) = noise(2 * i + 1);
        let (e2, n2) = noise(2 * i + 2);
        let k1 = model.rhs(t, e0, n0, &s);
        let k2 = model.rhs(t + 0.5 * step, e1, n1, &(s + (0.5 * step) * k1));
        let k3 = model.rhs(t + 0.5 * step, e1, n1, &(s + (0.5 * step) * k2));
        let k4 = model.rhs(t + step, e2, n2, &(s + step * k3));
        s = s + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if diverged_at.is_none() && !(s.max_norm() <= DIVERGENCE_THRESHOLD) {
            diverged_at = Some(i + 1);
        }
        states.push(s);
    }
    Trajectory { t0: model.t0, step, states, diverged_at }
}

/// Integrates one realization. The noise is sampled every half step, so the
/// step is `2 noise.dt` and the trajectory covers the noise window.
pub fn integrate_trajectory(model: &SystemModel, noise: &NoisePair) -> Result<Trajectory> {
    let len = noise.len();
    if len < 3 || len % 2 == 0 {
        return Err(invalid(format!(
            "noise window must hold an odd number (>= 3) of half-step samples, got {len}"
        )));
    }
    let n_steps = (len - 1) / 2;
    Ok(integrate_with(model, 2.0 * noise.dt, n_steps, |j| (noise.eta_t[j], noise.nu_t[j])))
}

pub fn integrate_noise_free(model: &SystemModel, step: f64, n_steps: usize) -> Trajectory {
    integrate_with(model, step, n_steps, |_| (ZERO, ZERO))
}

/// Zero-temperature Landau-Zener limit `2 exp(-pi Delta^2 / (2 kappa)) - 1`.
pub fn lz_asymptote(delta: f64, kappa: f64) -> f64 {
    2.0 * (-PI * delta * delta / (2.0 * kappa)).exp() - 1.0
}

/// Pure-dephasing model: `H = -sigma_z / 2`, coupling `f = sigma_z`, bath
/// correlation `K(t) = exp(-2|t| + i t) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QndModel {
    pub rho0: SpinState,
}

impl Default for QndModel {
    fn default() -> Self {
        // 0.5 I + 0.5 sigma_x + 0.6 sigma_y
        Self { rho0: SpinState::real(1.0, 1.0, 1.2, 0.0) }
    }
}

impl QndModel {
    pub fn kernel(t: f64) -> Complex64 {
        0.5 * Complex64::new(-2.0 * t.abs(), t).exp()
    }

    /// `C_r(t) = int_0^t Re K(s) ds`.
    pub fn c_r(t: f64) -> f64 {
        0.1 * (2.0 - (-2.0 * t).exp() * (2.0 * t.cos() - t.sin()))
    }

    /// `C_i(t) = int_0^t Im K(s) ds`.
    pub fn c_i(t: f64) -> f64 {
        0.1 * (1.0 - (-2.0 * t).exp() * (t.cos() + 2.0 * t.sin()))
    }

    /// `int_0^t C_r(s) ds`.
    pub fn c_r_integral(t: f64) -> f64 {
        0.1 * (2.0 * t - 0.6 + 0.2 * (-2.0 * t).exp() * (3.0 * t.cos() - 4.0 * t.sin()))
    }

    pub fn hamiltonian() -> Matrix2 {
        [[Complex64::new(-0.5, 0.0), ZERO], [ZERO, Complex64::new(0.5, 0.0)]]
    }

    /// `d rho/dt = -i[H, rho] - C_r(t) [f, [f, rho]] - i C_i(t) [f^2, rho]`.
    pub fn master_rhs(t: f64, rho: &Matrix2) -> Matrix2 {
        let h = Self::hamiltonian();
        let sz = [[Complex64::new(1.0, 0.0), ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];
        let ident = [[Complex64::new(1.0, 0.0), ZERO], [ZERO, Complex64::new(1.0, 0.0)]];
        let hr = commutator(&h, rho);
        let dd = commutator(&sz, &commutator(&sz, rho));
        let f2 = commutator(&ident, rho);
        let (cr, ci) = (Self::c_r(t), Self::c_i(t));
        let mut out = [[ZERO; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] = -I * hr[a][b] - cr * dd[a][b] - I * ci * f2[a][b];
            }
        }
        out
    }
}

fn commutator(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j] += a[i][k] * b[k][j] - b[i][k] * a[k][j];
            }
        }
    }
    out
}

/// Closed-form solution: populations are constant and
/// `rho01(t) = rho01(0) exp(i t - 4 int_0^t C_r)`.
pub fn qnd_exact(model: &QndModel, t: f64) -> Matrix2 {
    let mut rho = model.rho0.to_matrix();
    let factor = Complex64::new(-4.0 * QndModel::c_r_integral(t), t).exp();
    rho[0][1] *= factor;
    rho[1][0] = model.rho0.to_matrix()[1][0] * factor.conj();
    rho
}

/// RK4 integration of the QND master equation; returns `rho` at
/// `t = 0, t_end / steps, ..., t_end`.
pub fn qnd_master_equation(model: &QndModel, t_end: f64, steps: usize) -> Vec<Matrix2> {
    let h = t_end / steps as f64;
    let axpy = |x: &Matrix2, a: f64, y: &Matrix2| -> Matrix2 {
        let mut out = *x;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += a * y[i][j];
            }
        }
        out
    };
    let mut rho = model.rho0.to_matrix();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(rho);
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = QndModel::master_rhs(t, &rho);
        let k2 = QndModel::master_rhs(t + 0.5 * h, &axpy(&rho, 0.5 * h, &k1));
        let k3 = QndModel::master_rhs(t + 0.5 * h, &axpy(&rho, 0.5 * h, &k2));
        let k4 = QndModel::master_rhs(t + h, &axpy(&rho, h, &k3));
        for a in 0..2 {
            for b in 0..2 {
                rho[a][b] += h / 6.0 * (k1[a][b] + 2.0 * k2[a][b] + 2.0 * k3[a][b] + k4[a][b]);
            }
        }
        out.push(rho);
    }
    out
}

/// Kernel table and system model for running the QND model through the
/// stochastic equations: `K_etaeta = Re K`, `K_etanu = 2i Theta(t) Im K`,
/// `epsilon = -1`, `Delta = 0`, `alpha = 1`.
pub fn qnd_sln_config(grid: &TimeGrid) -> Result<(KernelTable, SystemModel)> {
    let kernel = CustomKernel::new("qnd", QndModel::kernel);
    let table = build_kernel_table(grid.frequency_grid(), KernelSource::Custom(kernel))?;
    let model = SystemModel {
        delta: 0.0,
        epsilon: Drive::Constant(-1.0),
        alpha: 1.0,
        t0: 0.0,
        rho0: QndModel::default().rho0,
    };
    Ok((table, model))
}
