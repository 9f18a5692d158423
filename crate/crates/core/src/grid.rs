//! Sampling grids and the continuous-transform FFT convention.
//!
//! Arrays on a [`FrequencyGrid`] are stored in FFT order: bin `k < n/2` holds
//! `omega_k = 2 pi k / (n dt)` and bin `k >= n/2` holds the negative
//! frequency `2 pi (k - n) / (n dt)`. The forward transform is
//! `F(omega) = dt * sum_j f(t_j) exp(-i omega t_j)` and the inverse carries
//! `1 / (n dt)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    n: usize,
    dt: f64,
}

impl FrequencyGrid {
    pub fn new(n: usize, dt: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(invalid(format!("grid size must be even and >= 2, got {n}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { n, dt })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Frequency spacing 2 pi / (n dt).
    pub fn domega(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dt)
    }

    /// Signed integer frequency index of FFT bin `k`, in [-n/2, n/2).
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    pub fn omega(&self, k: usize) -> f64 {
        self.signed_index(k) as f64 * self.domega()
    }

    /// Time lag of sample `j` when the time axis is wrapped the same way.
    pub fn time(&self, j: usize) -> f64 {
        self.signed_index(j) as f64 * self.dt
    }

    /// Bin holding `-omega_k`. The Nyquist bin maps onto itself.
    pub fn mirror(&self, k: usize) -> usize {
        (self.n - k) % self.n
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Bin indices sorted by ascending frequency.
    pub fn ascending(&self) -> impl Iterator<Item = usize> + '_ {
        (self.n / 2..self.n).chain(0..self.n / 2)
    }
}

/// Forward/inverse FFT pair with continuous-transform scaling.
#[derive(Clone)]
pub struct Transform {
    n: usize,
    dt: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("n", &self.n).field("dt", &self.dt).finish()
    }
}

impl Transform {
    pub fn new(grid: &FrequencyGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n: grid.n(),
            dt: grid.dt(),
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    /// In place: time samples -> dt * DFT.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n);
        self.forward.process(data);
        for v in data.iter_mut() {
            *v *= self.dt;
        }
    }

    /// In place: spectrum -> inverse DFT / (n dt).
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n);
        self.inverse.process(data);
        let scale = 1.0 / (self.n as f64 * self.dt);
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_pairs_frequencies() {
        let g = FrequencyGrid::new(8, 0.5).unwrap();
        for k in 0..8 {
            let m = g.mirror(k);
            if k == g.nyquist() {
                assert_eq!(m, k);
            } else {
                assert_eq!(g.omega(m), -g.omega(k));
            }
        }
        let asc: Vec<f64> = g.ascending().map(|k| g.omega(k)).collect();
        assert!(asc.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn transform_round_trip_and_gaussian_pair() {
        let g = FrequencyGrid::new(256, 0.05).unwrap();
        let tr = Transform::new(&g);
        let mut data: Vec<Complex64> = (0..256)
            .map(|j| Complex64::new((-g.time(j).powi(2)).exp(), 0.0))
            .collect();
        let orig = data.clone();
        tr.forward(&mut data);
        // FT of exp(-t^2) is sqrt(pi) exp(-w^2/4)
        for k in [0usize, 3, 10, 250] {
            let w = g.omega(k);
            let exact = PI.sqrt() * (-w * w / 4.0).exp();
            assert!((data[k].re - exact).abs() < 1e-10, "k={k}");
        }
        tr.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
