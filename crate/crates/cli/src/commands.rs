//! Subcommand bodies. Each builds its CSV in memory and writes it to the
//! configured output (standard output by default).

use std::fmt::Write as _;
use std::io::Write as _;

use num_complex::Complex64;
use sln_core::{
    build_kernel_table, estimate_correlations, log_space, make_filters, qnd_exact, qnd_sln_config, run_ensemble,
    run_with_filters, scan_lambda as scan, seed_for, synthesize_many, CustomKernel, KernelSource, QndModel,
    RunConfig,
};

use crate::config::Config;
use crate::CliError;

fn emit(cfg: &Config, csv: &str) -> Result<(), CliError> {
    match cfg.output() {
        Some(path) => std::fs::write(&path, csv)?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

pub fn kernels(cfg: &Config, filters: bool) -> Result<(), CliError> {
    let grid = cfg.noise_grid(10.0)?.frequency_grid();
    let kt = build_kernel_table(grid, KernelSource::Drude(cfg.bath()?))?;
    let mut out = String::new();
    if filters {
        let scheme = cfg.scheme()?;
        let fs = make_filters(scheme, &kt, cfg.gamma(scheme)?)?;
        out.push_str("omega,abs_f1,abs_f2,abs_g1,abs_g2\n");
        for k in grid.ascending() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                grid.omega(k),
                fs.f1_w[k].norm(),
                fs.f2_w[k].norm(),
                fs.g1_w[k].norm(),
                fs.g2_w[k].norm()
            );
        }
    } else {
        out.push_str("omega,k_etaeta,re_k_etanu,im_k_etanu\n");
        for k in grid.ascending() {
            let en = kt.k_etanu_w[k];
            let _ = writeln!(out, "{},{},{},{}", grid.omega(k), kt.k_etaeta_w[k], en.re, en.im);
        }
    }
    emit(cfg, &out)
}

pub fn gen_noise(cfg: &Config, count: usize) -> Result<(), CliError> {
    let scheme = cfg.scheme()?;
    let grid = cfg.noise_grid(10.0)?;
    let kt = build_kernel_table(grid.frequency_grid(), KernelSource::Drude(cfg.bath()?))?;
    let fs = make_filters(scheme, &kt, cfg.gamma(scheme)?)?;
    let pairs = synthesize_many(&fs, &grid, cfg.seed()?, count, cfg.lambda()?)?;
    let mut out = String::from("realization,t,re_eta,im_eta,re_nu,im_nu\n");
    for (r, p) in pairs.iter().enumerate() {
        for j in 0..p.len() {
            let (e, n) = (p.eta_t[j], p.nu_t[j]);
            let _ = writeln!(out, "{r},{},{},{},{},{}", grid.time(j), e.re, e.im, n.re, n.im);
        }
    }
    emit(cfg, &out)
}

pub fn validate(cfg: &Config, max_lag: f64) -> Result<(), CliError> {
    let scheme = cfg.scheme()?;
    let grid = cfg.noise_grid(10.0)?;
    let kt = build_kernel_table(grid.frequency_grid(), KernelSource::Drude(cfg.bath()?))?;
    let fs = make_filters(scheme, &kt, cfg.gamma(scheme)?)?;
    let pairs = synthesize_many(&fs, &grid, cfg.seed()?, cfg.count("n_realizations", 1000, 2)?, cfg.lambda()?)?;
    let est = estimate_correlations(&pairs, max_lag)?;
    let n = grid.n();
    let mut out = String::from(
        "lag,target_etaeta,est_re_etaeta,est_im_etaeta,se_etaeta,target_re_etanu,target_im_etanu,\
         est_re_etanu,est_im_etanu,se_etanu,est_re_nunu,est_im_nunu,se_nunu\n",
    );
    for (i, &l) in est.lag_steps.iter().enumerate() {
        let j = if l >= 0 { l as usize } else { n - (-l) as usize };
        let (ee, en, nn) = (est.est_etaeta[i], est.est_etanu[i], est.est_nunu[i]);
        let target = kt.k_etanu_t[j];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            est.lag(i),
            kt.k_etaeta_t[j],
            ee.re,
            ee.im,
            est.se_etaeta[i],
            target.re,
            target.im,
            en.re,
            en.im,
            est.se_etanu[i],
            nn.re,
            nn.im,
            est.se_nunu[i]
        );
    }
    emit(cfg, &out)
}

pub fn simulate(cfg: &Config) -> Result<(), CliError> {
    let run = cfg.run_config()?;
    let stats = run_ensemble(&run)?;
    if stats.diverged_fraction() > 0.0 {
        eprintln!("sln: {:.3}% of trajectories diverged", 100.0 * stats.diverged_fraction());
    }
    emit(cfg, &stats.to_csv())
}

pub fn qnd_verify(cfg: &Config) -> Result<(), CliError> {
    let scheme = cfg.scheme()?;
    let grid = cfg.integrator_grid(4.0)?;
    let (kt, model) = qnd_sln_config(&grid)?;
    let gamma = cfg.gamma(scheme)?;
    let fs = make_filters(scheme, &kt, gamma)?;
    let seed = cfg.seed()?;
    let run = RunConfig {
        scheme,
        gamma,
        lambda: cfg.lambda()?,
        bath: KernelSource::Custom(CustomKernel::new("qnd", QndModel::kernel)),
        model,
        grid,
        n_realizations: cfg.count("n_realizations", 1000, 2)?,
        master_seed: seed,
        stats_window: cfg.count("stats_window", 100, 1)?,
        common_random_numbers: false,
        force_zero_nu: false,
    };
    let stats = run_with_filters(&run, &fs, run.lambda, |i| seed_for(seed, i as u64))?;
    let exact_model = QndModel::default();
    let mut out = String::from("t,re_rho01_exact,re_rho01_sln,im_rho01_exact,im_rho01_sln,se\n");
    for i in 0..stats.len() {
        let exact: Complex64 = qnd_exact(&exact_model, stats.t[i])[0][1];
        let sln = stats.mean_rho01[i];
        let _ = writeln!(out, "{},{},{},{},{},{}", stats.t[i], exact.re, sln.re, exact.im, sln.im, stats.se_rho01[i]);
    }
    emit(cfg, &out)
}

pub fn scan_lambda(cfg: &Config) -> Result<(), CliError> {
    let run = cfg.run_config()?;
    let lo = cfg.positive("lambda_min", Some(0.01))?;
    let hi = cfg.positive("lambda_max", Some(10.0))?;
    let points = cfg.count("lambda_points", 13, 1)?;
    let runs = cfg.count("runs_per_point", run.n_realizations, 2)?;
    let result = scan(&run, &log_space(lo, hi, points), runs)?;
    let mut out = String::from("lambda,se_final\n");
    for (l, se) in &result.points {
        let _ = writeln!(out, "{l},{se}");
    }
    eprintln!("sln: argmin lambda = {}", result.argmin);
    emit(cfg, &out)
}
