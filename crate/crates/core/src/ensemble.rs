//! Realization ensembles: parallel trajectory runs, trace statistics over
//! sliding windows, and the scan over the rescaling parameter.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{integrate_trajectory, SpinState, SystemModel, Trajectory};
use crate::error::{invalid, Result, SlnError};
use crate::kernels::{build_kernel_table, KernelSource};
use crate::noise::{Synthesizer, TimeGrid};
use crate::rng::{seed_for, seed_for_value, StreamSeed};
use crate::schemes::{make_filters, FilterSet, SchemeId};

/// Realizations per work item. Fixed so the reduction order does not depend
/// on the thread count.
const CHUNK: usize = 32;

/// Observables tracked per step: trace, the three spins, and `rho_01`.
const N_OBS: usize = 5;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheme: SchemeId,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub bath: KernelSource,
    pub model: SystemModel,
    /// Noise grid; the integrator step is `2 grid.dt()`.
    pub grid: TimeGrid,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub stats_window: usize,
    /// Reuse the same noise streams at every point of a lambda scan.
    pub common_random_numbers: bool,
    /// Test hook: replace nu by zero before integrating.
    pub force_zero_nu: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations < 2 {
            return Err(SlnError::InsufficientSample { needed: 2, got: self.n_realizations });
        }
        if self.stats_window < 1 {
            return Err(invalid("stats_window must be at least 1"));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(format!("lambda must be positive, got {l}")));
            }
        }
        self.model.validate()
    }

    pub fn build_filters(&self) -> Result<FilterSet> {
        let kt = build_kernel_table(self.grid.frequency_grid(), self.bath.clone())?;
        make_filters(self.scheme, &kt, self.gamma)
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    count: f64,
    mean: [Complex64; N_OBS],
    m2: [f64; N_OBS],
}

impl Moments {
    const EMPTY: Moments = Moments { count: 0.0, mean: [Complex64::new(0.0, 0.0); N_OBS], m2: [0.0; N_OBS] };

    fn push(&mut self, x: &[Complex64; N_OBS]) {
        self.count += 1.0;
        for i in 0..N_OBS {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += (delta.conj() * (x[i] - self.mean[i])).re;
        }
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0.0 {
            return;
        }
        if self.count == 0.0 {
            *self = *o;
            return;
        }
        let n = self.count + o.count;
        for i in 0..N_OBS {
            let delta = o.mean[i] - self.mean[i];
            self.mean[i] += delta * (o.count / n);
            self.m2[i] += o.m2[i] + delta.norm_sqr() * self.count * o.count / n;
        }
        self.count = n;
    }
}

fn observables(s: &SpinState) -> [Complex64; N_OBS] {
    [s.tr, s.sx, s.sy, s.sz, s.rho01()]
}

#[derive(Debug, Clone)]
struct Accumulator {
    steps: Vec<Moments>,
    diverged: Vec<usize>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Self { steps: vec![Moments::EMPTY; len], diverged: vec![0; len] }
    }

    fn push(&mut self, tr: &Trajectory) {
        for (m, s) in self.steps.iter_mut().zip(&tr.states) {
            m.push(&observables(s));
        }
        if let Some(d) = tr.diverged_at {
            for c in &mut self.diverged[d..] {
                *c += 1;
            }
        }
    }

    fn merge(&mut self, o: &Accumulator) {
        for (a, b) in self.steps.iter_mut().zip(&o.steps) {
            a.merge(b);
        }
        for (a, b) in self.diverged.iter_mut().zip(&o.diverged) {
            *a += b;
        }
    }
}

/// Per-step ensemble statistics. Variances and standard errors pool the
/// trailing `window` steps (clipped at the start) over all realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub t: Vec<f64>,
    pub mean_tr: Vec<Complex64>,
    pub abs_mean_tr: Vec<f64>,
    pub var_tr: Vec<f64>,
    pub se_tr: Vec<f64>,
    pub mean_sx: Vec<Complex64>,
    pub mean_sy: Vec<Complex64>,
    pub mean_sz: Vec<Complex64>,
    pub mean_rho01: Vec<Complex64>,
    /// Windowed standard error of `rho_01`.
    pub se_rho01: Vec<f64>,
    pub diverged: Vec<usize>,
    pub n_realizations: usize,
    pub window: usize,
}

impl EnsembleStats {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn diverged_fraction(&self) -> f64 {
        self.diverged.last().copied().unwrap_or(0) as f64 / self.n_realizations as f64
    }

    pub const CSV_HEADER: &'static str = "t,re_mean_tr,im_mean_tr,abs_mean_tr,var_tr,se_tr,mean_sx,mean_sy,mean_sz,diverged";

    /// One CSV row per step; spin columns are real parts.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 160);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                self.t[i],
                self.mean_tr[i].re,
                self.mean_tr[i].im,
                self.abs_mean_tr[i],
                self.var_tr[i],
                self.se_tr[i],
                self.mean_sx[i].re,
                self.mean_sy[i].re,
                self.mean_sz[i].re,
                self.diverged[i]
            ));
        }
        out
    }
}

fn pooled_window(steps: &[Moments], end: usize, window: usize, obs: usize) -> (f64, f64) {
    let start = (end + 1).saturating_sub(window);
    let mut pooled = Moments::EMPTY;
    for m in &steps[start..=end] {
        let mut single = Moments::EMPTY;
        single.count = m.count;
        single.mean[obs] = m.mean[obs];
        single.m2[obs] = m.m2[obs];
        pooled.merge(&single);
    }
    let var = if pooled.count > 1.0 { pooled.m2[obs] / (pooled.count - 1.0) } else { 0.0 };
    (var, pooled.count)
}

fn finish(acc: Accumulator, t0: f64, step: f64, n: usize, window: usize) -> EnsembleStats {
    let len = acc.steps.len();
    let nf = n as f64;
    let mut var_tr = Vec::with_capacity(len);
    let mut se_tr = Vec::with_capacity(len);
    let mut se_rho01 = Vec::with_capacity(len);
    for i in 0..len {
        let (v, _) = pooled_window(&acc.steps, i, window, 0);
        var_tr.push(v);
        se_tr.push((v / nf).sqrt());
        let (v01, _) = pooled_window(&acc.steps, i, window, 4);
        se_rho01.push((v01 / nf).sqrt());
    }
    let col = |o: usize| acc.steps.iter().map(|m| m.mean[o]).collect::<Vec<_>>();
    let mean_tr = col(0);
    EnsembleStats {
        t: (0..len).map(|i| t0 + i as f64 * step).collect(),
        abs_mean_tr: mean_tr.iter().map(|c| c.norm()).collect(),
        mean_tr,
        var_tr,
        se_tr,
        mean_sx: col(1),
        mean_sy: col(2),
        mean_sz: col(3),
        mean_rho01: col(4),
        se_rho01,
        diverged: acc.diverged,
        n_realizations: n,
        window,
    }
}

/// Runs `cfg.n_realizations` trajectories with the given filters and seeds.
pub fn run_with_filters<S>(cfg: &RunConfig, fs: &FilterSet, lambda: Option<f64>, seed: S) -> Result<EnsembleStats>
where
    S: Fn(usize) -> StreamSeed + Sync,
{
    cfg.validate()?;
    let synth = Synthesizer::new(fs, cfg.grid)?;
    let steps = (cfg.grid.physical_len() - 1) / 2;
    let len = steps + 1;
    let n = cfg.n_realizations;
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Accumulator> {
            let mut acc = Accumulator::new(len);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut noise = synth.generate(seed(i), lambda)?;
                if cfg.force_zero_nu {
                    noise.nu_t.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                }
                let tr = integrate_trajectory(&cfg.model, &noise)?;
                acc.push(&tr);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = Accumulator::new(len);
    for p in &partials {
        total.merge(p);
    }
    Ok(finish(total, cfg.model.t0, 2.0 * cfg.grid.dt(), n, cfg.stats_window))
}

/// Builds the filters for `cfg` and runs the ensemble with realization `i`
/// drawn from stream `seed_for(master_seed, i)`.
pub fn run_ensemble(cfg: &RunConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    let fs = cfg.build_filters()?;
    run_with_filters(cfg, &fs, cfg.lambda, |i| seed_for(cfg.master_seed, i as u64))
}

/// Windowed variance of complex series (one row per realization) and the
/// standard error `sqrt(var / n_realizations)` at each step.
pub fn windowed_stats(traces: &[Vec<Complex64>], window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if traces.is_empty() {
        return Err(SlnError::InsufficientSample { needed: 1, got: 0 });
    }
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(invalid("trace series must have equal length"));
    }
    if window < 1 || window > len {
        return Err(invalid(format!("window {window} must lie in 1..={len}")));
    }
    let mut steps = vec![Moments::EMPTY; len];
    for tr in traces {
        for (m, &x) in steps.iter_mut().zip(tr) {
            let mut obs = [Complex64::new(0.0, 0.0); N_OBS];
            obs[0] = x;
            m.push(&obs);
        }
    }
    let nf = traces.len() as f64;
    let mut var = Vec::with_capacity(len);
    let mut se = Vec::with_capacity(len);
    for i in 0..len {
        let (v, _) = pooled_window(&steps, i, window, 0);
        var.push(v);
        se.push((v / nf).sqrt());
    }
    Ok((var, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaScan {
    /// `(lambda, standard error of the mean trace at the final step)`.
    pub points: Vec<(f64, f64)>,
    pub argmin: f64,
}

/// Standard error of the mean trace at the final step (pooled over the final
/// window) for each lambda. Without common random numbers, realization `i`
/// at a given lambda uses a stream derived from the lambda value, so equal
/// values give equal results.
pub fn scan_lambda(cfg: &RunConfig, lambdas: &[f64], runs_per_point: usize) -> Result<LambdaScan> {
    if lambdas.is_empty() {
        return Err(invalid("lambda list is empty"));
    }
    let mut run_cfg = cfg.clone();
    run_cfg.n_realizations = runs_per_point;
    run_cfg.validate()?;
    let fs = cfg.build_filters()?;
    if !fs.has_cross_component() {
        return Err(SlnError::ZeroComponent);
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let master = cfg.master_seed;
        let stats = if cfg.common_random_numbers {
            run_with_filters(&run_cfg, &fs, Some(lambda), |i| seed_for(master, i as u64))?
        } else {
            run_with_filters(&run_cfg, &fs, Some(lambda), |i| seed_for_value(master, lambda, i as u32))?
        };
        points.push((lambda, *stats.se_tr.last().expect("nonempty trajectory")));
    }
    let argmin = points
        .iter()
        .fold((f64::NAN, f64::INFINITY), |best, &(l, se)| if se < best.1 { (l, se) } else { best })
        .0;
    let argmin = if argmin.is_nan() { points[0].0 } else { argmin };
    Ok(LambdaScan { points, argmin })
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Drive;
    use crate::kernels::BathParams;

    fn cfg(scheme: SchemeId, n: usize) -> RunConfig {
        RunConfig {
            scheme,
            gamma: 0.01,
            lambda: None,
            bath: KernelSource::Drude(BathParams::new(1.0, 25.0).unwrap()),
            model: SystemModel {
                delta: 1.0,
                epsilon: Drive::Constant(-1.0),
                alpha: 0.05,
                t0: 0.0,
                rho0: SpinState::up(),
            },
            grid: TimeGrid::for_integrator(0.01, 1.0, 2.0).unwrap(),
            n_realizations: n,
            master_seed: 42,
            stats_window: 10,
            common_random_numbers: false,
            force_zero_nu: false,
        }
    }

    #[test]
    fn zero_nu_keeps_trace() {
        let mut c = cfg(SchemeId::Like, 40);
        c.force_zero_nu = true;
        let s = run_ensemble(&c).unwrap();
        assert_eq!(s.len(), 101);
        for i in 0..s.len() {
            assert_eq!(s.mean_tr[i], Complex64::new(1.0, 0.0));
            assert_eq!(s.var_tr[i], 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let c = cfg(SchemeId::EtaNuOptimised, 70);
        assert_eq!(run_ensemble(&c).unwrap(), run_ensemble(&c).unwrap());
    }

    #[test]
    fn windowed_matches_direct_pooling() {
        let traces: Vec<Vec<Complex64>> = (0..7)
            .map(|r| (0..12).map(|i| Complex64::new((r * i) as f64 * 0.1, (r + i) as f64 * 0.05).sin()).collect())
            .collect();
        let (var, se) = windowed_stats(&traces, 4).unwrap();
        for end in 0..12usize {
            let start = (end + 1).saturating_sub(4);
            let pool: Vec<Complex64> = traces.iter().flat_map(|t| t[start..=end].iter().copied()).collect();
            let n = pool.len() as f64;
            let mean = pool.iter().sum::<Complex64>() / n;
            let v = pool.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
            assert!((var[end] - v).abs() < 1e-12);
            assert!((se[end] - (v / 7.0).sqrt()).abs() < 1e-12);
        }
        let flat = vec![vec![Complex64::new(1.0, 0.0); 5]; 3];
        let (v, s) = windowed_stats(&flat, 2).unwrap();
        assert!(v.iter().chain(&s).all(|&x| x == 0.0));
    }

    #[test]
    fn scan_rejects_schemes_without_cross_pair() {
        let c = cfg(SchemeId::Constrained, 4);
        assert_eq!(scan_lambda(&c, &[0.5], 4), Err(SlnError::ZeroComponent));
    }

    #[test]
    fn scan_single_and_repeated_values() {
        let c = cfg(SchemeId::EtaNuOptimised, 8);
        let one = scan_lambda(&c, &[0.7], 8).unwrap();
        assert_eq!(one.argmin, 0.7);
        let two = scan_lambda(&c, &[0.3, 0.3], 8).unwrap();
        assert_eq!(two.points[0].1, two.points[1].1);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(0.01, 10.0, 7);
        assert!((v[0] - 0.01).abs() < 1e-15 && (v[6] - 10.0).abs() < 1e-12);
    }
}
