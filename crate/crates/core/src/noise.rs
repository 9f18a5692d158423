//! White-noise channels, FFT synthesis of coloured noise pairs, and
//! empirical correlation estimates.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result, SlnError};
use crate::grid::{FrequencyGrid, Transform};
use crate::rng::{channel_rng, seed_for, StreamSeed};
use crate::schemes::{rescale_factor, Component, FilterSet, SchemeId};

/// Sampling grid for one noise realization. `dt` is the noise sample
/// spacing; the synthesis runs on `n >= pad_factor * t_max / dt` samples
/// and only the physical window `[0, t_max]` is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    t_max: f64,
    pad_factor: f64,
    n: usize,
    m: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, t_max: f64, pad_factor: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(invalid(format!("t_max must be positive, got {t_max}")));
        }
        if !(pad_factor >= 2.0 && pad_factor.is_finite()) {
            return Err(invalid(format!("pad_factor must be at least 2, got {pad_factor}")));
        }
        let m = (t_max / dt).round() as usize + 1;
        let needed = ((pad_factor * t_max / dt).ceil() as usize).max(m).max(2);
        let n = needed.next_power_of_two();
        Ok(Self { dt, t_max, pad_factor, n, m })
    }

    /// Noise grid for an integrator with step `step`: samples every half step.
    pub fn for_integrator(step: f64, t_max: f64, pad_factor: f64) -> Result<Self> {
        Self::new(0.5 * step, t_max, pad_factor)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn pad_factor(&self) -> f64 {
        self.pad_factor
    }

    /// Total (padded) sample count, a power of two.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Samples in the physical window, endpoints included.
    pub fn physical_len(&self) -> usize {
        self.m
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn frequency_grid(&self) -> FrequencyGrid {
        FrequencyGrid::new(self.n, self.dt).expect("time grid always has a valid frequency grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair {
    pub eta_t: Vec<Complex64>,
    pub nu_t: Vec<Complex64>,
    /// Cross-correlative components before rescaling.
    pub eta0_t: Vec<Complex64>,
    pub nu0_t: Vec<Complex64>,
    pub seed: StreamSeed,
    pub scheme: SchemeId,
    pub lambda_applied: f64,
    pub dt: f64,
}

impl NoisePair {
    pub fn len(&self) -> usize {
        self.eta_t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_t.is_empty()
    }
}

/// Independent `N(0, 1/dt)` samples, one vector of length `grid.n()` per channel.
pub fn sample_white(grid: &TimeGrid, seed: StreamSeed, channels: usize) -> Vec<Vec<f64>> {
    let sigma = 1.0 / grid.dt.sqrt();
    (0..channels)
        .map(|c| {
            let mut rng = channel_rng(seed, c);
            (0..grid.n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                })
                .collect()
        })
        .collect()
}

/// Reusable synthesis state for one filter set.
#[derive(Debug)]
pub struct Synthesizer<'a> {
    fs: &'a FilterSet,
    grid: TimeGrid,
    transform: Transform,
}

impl<'a> Synthesizer<'a> {
    pub fn new(fs: &'a FilterSet, grid: TimeGrid) -> Result<Self> {
        let fg = fs.grid;
        if fg.n() != grid.n || (fg.dt() - grid.dt).abs() > 1e-12 * grid.dt {
            return Err(SlnError::GridMismatch {
                filter_n: fg.n(),
                filter_dt: fg.dt(),
                grid_n: grid.n,
                grid_dt: grid.dt,
            });
        }
        let transform = Transform::new(&fg);
        Ok(Self { fs, grid, transform })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn generate(&self, seed: StreamSeed, lambda: Option<f64>) -> Result<NoisePair> {
        let white = sample_white(&self.grid, seed, self.fs.channels());
        self.from_white(&white, seed, lambda)
    }

    /// Filters the given white channels. Each channel must have `grid.n()` samples.
    pub fn from_white(&self, white: &[Vec<f64>], seed: StreamSeed, lambda: Option<f64>) -> Result<NoisePair> {
        let n = self.grid.n;
        let m = self.grid.m;
        if white.len() < self.fs.channels() || white.iter().any(|w| w.len() != n) {
            return Err(invalid("white-noise channels do not match the filter wiring"));
        }
        let spectra: Vec<Vec<Complex64>> = white
            .iter()
            .map(|w| {
                let mut buf: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                self.transform.forward(&mut buf);
                buf
            })
            .collect();

        let mut parts = [Component::EtaAuto, Component::EtaCross, Component::NuAuto, Component::NuCross]
            .map(|c| (c, Vec::<Complex64>::new()));
        for (component, out) in parts.iter_mut() {
            let taps: Vec<_> = self.fs.wiring.iter().filter(|t| t.component == *component).collect();
            if taps.is_empty() {
                *out = vec![Complex64::new(0.0, 0.0); m];
                continue;
            }
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for t in taps {
                let filter = self.fs.filter(t.filter);
                let x = &spectra[t.channel];
                for k in 0..n {
                    acc[k] += t.unit * filter[k] * x[k];
                }
            }
            self.transform.inverse(&mut acc);
            acc.truncate(m);
            *out = acc;
        }
        let [(_, eta_auto), (_, eta0), (_, nu_auto), (_, nu0)] = parts;

        let lambda_applied = match lambda {
            Some(l) if self.fs.has_cross_component() => rescale_factor(&eta0, &nu0, l)?,
            _ => 1.0,
        };
        let eta_t = eta_auto.iter().zip(&eta0).map(|(a, c)| a + lambda_applied * c).collect();
        let nu_t = nu_auto.iter().zip(&nu0).map(|(a, c)| a + c / lambda_applied).collect();
        Ok(NoisePair {
            eta_t,
            nu_t,
            eta0_t: eta0,
            nu0_t: nu0,
            seed,
            scheme: self.fs.scheme,
            lambda_applied,
            dt: self.grid.dt,
        })
    }
}

/// One realization: white channels from `seed`, filtered by `fs`, with
/// optional dynamical rescaling of the cross-correlative components.
pub fn synthesize(fs: &FilterSet, grid: &TimeGrid, seed: StreamSeed, lambda: Option<f64>) -> Result<NoisePair> {
    Synthesizer::new(fs, *grid)?.generate(seed, lambda)
}

/// Realizations `0..count` under `master`, generated in parallel and
/// returned in index order.
pub fn synthesize_many(
    fs: &FilterSet,
    grid: &TimeGrid,
    master: u64,
    count: usize,
    lambda: Option<f64>,
) -> Result<Vec<NoisePair>> {
    let synth = Synthesizer::new(fs, *grid)?;
    (0..count)
        .into_par_iter()
        .map(|i| synth.generate(seed_for(master, i as u64), lambda))
        .collect()
}

/// Correlation estimates at lags `lag_steps[i] * dt`. `est_ab(tau)` is
/// `<a(t + tau) b(t)>`, so `est_etanu` targets `K_etanu(tau)`.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub dt: f64,
    pub lag_steps: Vec<i64>,
    pub est_etaeta: Vec<Complex64>,
    pub est_etanu: Vec<Complex64>,
    pub est_nunu: Vec<Complex64>,
    pub se_etaeta: Vec<f64>,
    pub se_etanu: Vec<f64>,
    pub se_nunu: Vec<f64>,
    pub n_realizations: usize,
    /// Time origins averaged per lag and realization.
    pub n_origins: usize,
}

impl CorrelationEstimate {
    pub fn lag(&self, i: usize) -> f64 {
        self.lag_steps[i] as f64 * self.dt
    }
}

/// `(1/O) sum_j a(j + l) b(j)` for `l >= 0`, `(1/O) sum_j a(j) b(j - l)` for
/// `l < 0`, with the same number `O` of origins at every lag.
fn lagged_mean(a: &[Complex64], b: &[Complex64], l: i64, origins: usize) -> Complex64 {
    let s: Complex64 = if l >= 0 {
        let l = l as usize;
        (0..origins).map(|j| a[j + l] * b[j]).sum()
    } else {
        let l = (-l) as usize;
        (0..origins).map(|j| a[j] * b[j + l]).sum()
    };
    s / origins as f64
}

fn mean_and_se(samples: &[Vec<Complex64>], lag: usize) -> (Complex64, f64) {
    let n = samples.len() as f64;
    let mean: Complex64 = samples.iter().map(|s| s[lag]).sum::<Complex64>() / n;
    let ss: f64 = samples.iter().map(|s| (s[lag] - mean).norm_sqr()).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Averages lagged products over realizations and stationary time origins.
/// Lags run over `[-max_lag, max_lag]` in steps of `dt`.
pub fn estimate_correlations(pairs: &[NoisePair], max_lag: f64) -> Result<CorrelationEstimate> {
    if pairs.len() < 2 {
        return Err(SlnError::InsufficientSample { needed: 2, got: pairs.len() });
    }
    let dt = pairs[0].dt;
    let m = pairs[0].len();
    if pairs.iter().any(|p| p.len() != m || p.dt != dt || p.scheme != pairs[0].scheme) {
        return Err(invalid("noise pairs do not share grid and scheme"));
    }
    let max_steps = (max_lag / dt).round() as i64;
    if max_steps < 0 || max_steps as usize >= m {
        return Err(invalid(format!("max_lag {max_lag} outside the sampled window")));
    }
    let origins = m - max_steps as usize;
    let lag_steps: Vec<i64> = (-max_steps..=max_steps).collect();

    // per realization: [etaeta, etanu, nunu] at each lag
    let per_real: Vec<[Vec<Complex64>; 3]> = pairs
        .par_iter()
        .map(|p| {
            let row = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
                lag_steps.iter().map(|&l| lagged_mean(a, b, l, origins)).collect()
            };
            [row(&p.eta_t, &p.eta_t), row(&p.eta_t, &p.nu_t), row(&p.nu_t, &p.nu_t)]
        })
        .collect();

    let mut out = [(); 3].map(|_| (Vec::with_capacity(lag_steps.len()), Vec::with_capacity(lag_steps.len())));
    for (which, (est, se)) in out.iter_mut().enumerate() {
        let samples: Vec<Vec<Complex64>> = per_real.iter().map(|r| r[which].clone()).collect();
        for i in 0..lag_steps.len() {
            let (mu, s) = mean_and_se(&samples, i);
            est.push(mu);
            se.push(s);
        }
    }
    let [(est_etaeta, se_etaeta), (est_etanu, se_etanu), (est_nunu, se_nunu)] = out;
    Ok(CorrelationEstimate {
        dt,
        lag_steps,
        est_etaeta,
        est_etanu,
        est_nunu,
        se_etaeta,
        se_etanu,
        se_nunu,
        n_realizations: pairs.len(),
        n_origins: origins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_kernel_table, BathParams, KernelSource};
    use crate::schemes::{expected_nu_power, make_filters};

    fn setup(scheme: SchemeId) -> (FilterSet, TimeGrid) {
        let grid = TimeGrid::new(0.01, 5.12, 2.0).unwrap();
        let kt = build_kernel_table(grid.frequency_grid(), KernelSource::Drude(BathParams::new(1.0, 25.0).unwrap())).unwrap();
        (make_filters(scheme, &kt, 0.01).unwrap(), grid)
    }

    #[test]
    fn time_grid_sizes() {
        let g = TimeGrid::new(0.01, 5.12, 2.0).unwrap();
        assert_eq!((g.n(), g.physical_len()), (1024, 513));
        let g = TimeGrid::for_integrator(0.01, 10.0, 2.0).unwrap();
        assert_eq!((g.n(), g.physical_len(), g.dt()), (4096, 2001, 0.005));
        assert!(TimeGrid::new(0.01, 1.0, 1.5).is_err());
        assert!(g.n() as f64 * g.dt() >= 2.0 * g.t_max());
    }

    #[test]
    fn white_noise_moments_and_determinism() {
        let grid = TimeGrid::new(0.01, 5242.88, 2.0).unwrap();
        assert_eq!(grid.n(), 1 << 20);
        let w = sample_white(&grid, seed_for(3, 0), 1);
        let n = w[0].len() as f64;
        let mean = w[0].iter().sum::<f64>() / n;
        assert!(mean.abs() <= 5.0 * (1.0 / (grid.dt() * n)).sqrt());
        let var = w[0].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Var of the sample variance of a normal: 2 sigma^4 / (n - 1)
        let target = 1.0 / grid.dt();
        assert!((var - target).abs() <= 5.0 * target * (2.0 / (n - 1.0)).sqrt());
        let small = TimeGrid::new(0.01, 1.0, 2.0).unwrap();
        assert_eq!(sample_white(&small, seed_for(3, 1), 2), sample_white(&small, seed_for(3, 1), 2));
    }

    #[test]
    fn zero_white_noise_gives_zero_output() {
        let (fs, grid) = setup(SchemeId::Like);
        let synth = Synthesizer::new(&fs, grid).unwrap();
        let white = vec![vec![0.0; grid.n()]; 4];
        let p = synth.from_white(&white, seed_for(0, 0), None).unwrap();
        assert!(p.eta_t.iter().chain(&p.nu_t).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn delta_cross_nu_is_the_white_input() {
        let (fs, grid) = setup(SchemeId::Delta);
        let synth = Synthesizer::new(&fs, grid).unwrap();
        let white = sample_white(&grid, seed_for(5, 0), 4);
        let p = synth.from_white(&white, seed_for(5, 0), None).unwrap();
        for j in 0..grid.physical_len() {
            let expected = Complex64::new(white[2][j], white[1][j]);
            assert!((p.nu0_t[j] - expected).norm() <= 1e-9 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let (fs, _) = setup(SchemeId::Like);
        let other = TimeGrid::new(0.01, 20.0, 2.0).unwrap();
        assert!(matches!(synthesize(&fs, &other, seed_for(0, 0), None), Err(SlnError::GridMismatch { .. })));
    }

    #[test]
    fn rescaling_keeps_unscaled_components() {
        let (fs, grid) = setup(SchemeId::EtaNuOptimised);
        let a = synthesize(&fs, &grid, seed_for(1, 2), None).unwrap();
        let b = synthesize(&fs, &grid, seed_for(1, 2), Some(0.5)).unwrap();
        assert_eq!(a.eta0_t, b.eta0_t);
        assert_eq!(a.lambda_applied, 1.0);
        assert!(b.lambda_applied != 1.0);
        let l = b.lambda_applied;
        for j in 0..a.len() {
            let pa = a.eta0_t[j] * a.nu0_t[j];
            let pb = (l * b.eta0_t[j]) * (b.nu0_t[j] / l);
            assert!((pa - pb).norm() <= 1e-12 * pa.norm().max(1e-300));
        }
    }

    #[test]
    fn convex_ignores_lambda() {
        let (fs, grid) = setup(SchemeId::ConvexOptimised);
        let p = synthesize(&fs, &grid, seed_for(1, 2), Some(0.5)).unwrap();
        assert_eq!(p.lambda_applied, 1.0);
        assert!(p.eta0_t.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn nu_power_matches_filter_sum() {
        let (fs, grid) = setup(SchemeId::EtaNuOptimised);
        let pairs = synthesize_many(&fs, &grid, 11, 400, None).unwrap();
        let per: Vec<f64> = pairs
            .iter()
            .map(|p| p.nu_t.iter().map(|v| v.norm_sqr()).sum::<f64>() / p.len() as f64)
            .collect();
        let n = per.len() as f64;
        let mean = per.iter().sum::<f64>() / n;
        let se = (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let target = expected_nu_power(&fs);
        assert!((mean - target).abs() <= 5.0 * se, "{mean} vs {target} (se {se})");
    }

    #[test]
    fn estimator_needs_two_realizations() {
        let (fs, grid) = setup(SchemeId::Like);
        let p = synthesize(&fs, &grid, seed_for(0, 0), None).unwrap();
        assert!(matches!(estimate_correlations(&[p], 0.5), Err(SlnError::InsufficientSample { .. })));
    }
}
