//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once per file; command-line flags override file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sln_core::{BathParams, Drive, KernelSource, RunConfig, SchemeId, SpinState, SystemModel, TimeGrid};

pub const KNOWN_KEYS: &[&str] = &[
    "scheme",
    "gamma",
    "lambda",
    "beta",
    "omega_c",
    "alpha",
    "delta",
    "epsilon",
    "kappa",
    "dt",
    "t_max",
    "t0",
    "pad_factor",
    "n_realizations",
    "seed",
    "stats_window",
    "initial",
    "output",
    "lambda_min",
    "lambda_max",
    "lambda_points",
    "runs_per_point",
    "common_random_numbers",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub source: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn plain(message: impl Into<String>) -> Self {
        Self { source: None, line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.source, self.line) {
            (Some(s), Some(l)) => write!(f, "{s}:{l}: {}", self.message),
            (Some(s), None) => write!(f, "{s}: {}", self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// Line in the config file, or `None` for command-line overrides.
    line: Option<usize>,
}

/// Raw key/value pairs with their origin, before typing.
#[derive(Debug, Clone, Default)]
pub struct Config {
    source: Option<String>,
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn parse(text: &str, source: Option<&str>) -> Result<Self, ConfigError> {
        let mut cfg = Config { source: source.map(str::to_owned), entries: BTreeMap::new() };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(cfg.err(Some(line), format!("expected key = value, got '{content}'")));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(cfg.err(Some(line), format!("unknown key '{key}'")));
            }
            if let Some(prev) = cfg.entries.get(&key) {
                let first = prev.line.map(|l| format!(" (first set on line {l})")).unwrap_or_default();
                return Err(cfg.err(Some(line), format!("duplicate key '{key}'{first}")));
            }
            if value.is_empty() {
                return Err(cfg.err(Some(line), format!("empty value for '{key}'")));
            }
            cfg.entries.insert(key, Entry { value, line: Some(line) });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: Some(path.display().to_string()),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, Some(&path.display().to_string()))
    }

    /// Applies a command-line override, replacing any file value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::plain(format!("unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: None });
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn err(&self, line: Option<usize>, message: String) -> ConfigError {
        ConfigError { source: self.source.clone(), line, message }
    }

    fn err_at(&self, key: &str, message: String) -> ConfigError {
        self.err(self.entries.get(key).and_then(|e| e.line), message)
    }

    pub fn string(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| self.err_at(key, format!("'{key}' must be {what}, got '{}'", e.value))),
        }
    }

    pub fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parsed::<f64>(key, "a number")? {
            Some(v) if !v.is_finite() => Err(self.err_at(key, format!("'{key}' must be finite"))),
            other => Ok(other),
        }
    }

    pub fn float_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    pub fn positive(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = match (self.float(key)?, default) {
            (Some(v), _) | (None, Some(v)) => v,
            (None, None) => return Err(self.missing(key)),
        };
        if v <= 0.0 {
            return Err(self.err_at(key, format!("'{key}' must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn nonnegative(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.float_or(key, default)?;
        if v < 0.0 {
            return Err(self.err_at(key, format!("'{key}' must be nonnegative, got {v}")));
        }
        Ok(v)
    }

    pub fn count(&self, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
        let v = self.parsed::<usize>(key, "a nonnegative integer")?.unwrap_or(default);
        if v < min {
            return Err(self.err_at(key, format!("'{key}' must be at least {min}, got {v}")));
        }
        Ok(v)
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        Ok(self.parsed::<u64>("seed", "a nonnegative integer")?.unwrap_or(0))
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.string(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(self.err_at(key, format!("'{key}' must be true or false, got '{v}'"))),
        }
    }

    fn missing(&self, key: &str) -> ConfigError {
        self.err(None, format!("missing required key '{key}'"))
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.string("output").map(PathBuf::from)
    }

    pub fn scheme(&self) -> Result<SchemeId, ConfigError> {
        match self.string("scheme") {
            None => Ok(SchemeId::EtaNuOptimised),
            Some(s) => s.parse().map_err(|_| {
                let names: Vec<&str> = SchemeId::ALL.iter().map(|s| s.name()).collect();
                self.err_at("scheme", format!("unknown scheme '{s}' (expected one of {})", names.join(", ")))
            }),
        }
    }

    /// `gamma`, checked against the scheme: schemes that divide by the
    /// square root of the spectrum cannot run unregularised, because the
    /// hard cutoff leaves the spectrum zero beyond `omega_c`.
    pub fn gamma(&self, scheme: SchemeId) -> Result<f64, ConfigError> {
        let gamma = self.nonnegative("gamma", 0.01)?;
        if gamma == 0.0 && scheme.needs_wiener() {
            return Err(self.err_at(
                "gamma",
                format!(
                    "gamma = 0 is not allowed for the {scheme} scheme: the hard-cutoff spectrum K_etaeta is zero beyond omega_c, so the unregularised inverse divides by zero"
                ),
            ));
        }
        Ok(gamma)
    }

    pub fn lambda(&self) -> Result<Option<f64>, ConfigError> {
        if self.contains("lambda") {
            Ok(Some(self.positive("lambda", None)?))
        } else {
            Ok(None)
        }
    }

    pub fn bath(&self) -> Result<BathParams, ConfigError> {
        let beta = self.positive("beta", None)?;
        let omega_c = self.positive("omega_c", Some(25.0))?;
        BathParams::new(beta, omega_c).map_err(|e| self.err_at("beta", e.to_string()))
    }

    pub fn drive(&self) -> Result<Drive, ConfigError> {
        match (self.contains("epsilon"), self.contains("kappa")) {
            (true, true) => Err(self.err_at("kappa", "set either 'epsilon' or 'kappa', not both".into())),
            (_, true) => Ok(Drive::LinearSweep(self.float_or("kappa", 0.0)?)),
            _ => Ok(Drive::Constant(self.float_or("epsilon", -1.0)?)),
        }
    }

    pub fn initial(&self) -> Result<SpinState, ConfigError> {
        match self.string("initial") {
            None | Some("up") => Ok(SpinState::up()),
            Some("down") => Ok(SpinState::down()),
            Some(v) => Err(self.err_at("initial", format!("'initial' must be up or down, got '{v}'"))),
        }
    }

    pub fn model(&self) -> Result<SystemModel, ConfigError> {
        Ok(SystemModel {
            delta: self.float_or("delta", 1.0)?,
            epsilon: self.drive()?,
            alpha: self.nonnegative("alpha", 0.05)?,
            t0: self.float_or("t0", 0.0)?,
            rho0: self.initial()?,
        })
    }

    pub fn dt(&self) -> Result<f64, ConfigError> {
        self.positive("dt", Some(0.01))
    }

    pub fn t_max(&self, default: f64) -> Result<f64, ConfigError> {
        self.positive("t_max", Some(default))
    }

    pub fn pad_factor(&self) -> Result<f64, ConfigError> {
        let p = self.positive("pad_factor", Some(2.0))?;
        if p < 2.0 {
            return Err(self.err_at("pad_factor", format!("'pad_factor' must be at least 2, got {p}")));
        }
        Ok(p)
    }

    /// Noise grid sampled at `dt` directly (noise-only commands).
    pub fn noise_grid(&self, default_t_max: f64) -> Result<TimeGrid, ConfigError> {
        TimeGrid::new(self.dt()?, self.t_max(default_t_max)?, self.pad_factor()?)
            .map_err(|e| ConfigError::plain(e.to_string()))
    }

    /// Noise grid for an integrator step of `dt` (samples every `dt / 2`).
    pub fn integrator_grid(&self, default_t_max: f64) -> Result<TimeGrid, ConfigError> {
        TimeGrid::for_integrator(self.dt()?, self.t_max(default_t_max)?, self.pad_factor()?)
            .map_err(|e| ConfigError::plain(e.to_string()))
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let scheme = self.scheme()?;
        let cfg = RunConfig {
            scheme,
            gamma: self.gamma(scheme)?,
            lambda: self.lambda()?,
            bath: KernelSource::Drude(self.bath()?),
            model: self.model()?,
            grid: self.integrator_grid(10.0)?,
            n_realizations: self.count("n_realizations", 1000, 2)?,
            master_seed: self.seed()?,
            stats_window: self.count("stats_window", 100, 1)?,
            common_random_numbers: self.flag("common_random_numbers")?,
            force_zero_nu: false,
        };
        cfg.validate().map_err(|e| ConfigError::plain(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let c = Config::parse("# run\n\nbeta = 1\nscheme=like\n", None).unwrap();
        assert_eq!(c.string("beta"), Some("1"));
        assert_eq!(c.scheme().unwrap(), SchemeId::Like);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys_with_line_numbers() {
        let e = Config::parse("beta=1\nfoo=2\n", Some("a.cfg")).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().contains("a.cfg:2") && e.message.contains("foo"));
        let e = Config::parse("beta=1\n\nbeta=2\n", None).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("duplicate") && e.message.contains("line 1"));
    }

    #[test]
    fn missing_beta_is_named() {
        let e = Config::parse("scheme=like\n", None).unwrap().run_config().unwrap_err();
        assert!(e.message.contains("'beta'"), "{e}");
    }

    #[test]
    fn zero_gamma_rejected_for_dividing_schemes() {
        let c = Config::parse("beta=1\nscheme=constrained\ngamma=0\n", None).unwrap();
        let e = c.run_config().unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("hard-cutoff"));
        let ok = Config::parse("beta=1\nscheme=like\ngamma=0\n", None).unwrap();
        assert!(ok.run_config().is_ok());
    }

    #[test]
    fn defaults_and_overrides() {
        let mut c = Config::parse("beta=0.5\n", None).unwrap();
        let r = c.run_config().unwrap();
        assert_eq!(r.gamma, 0.01);
        assert_eq!(r.stats_window, 100);
        assert_eq!(r.lambda, None);
        assert_eq!(r.grid.pad_factor(), 2.0);
        assert_eq!(r.grid.dt(), 0.005);
        c.set("lambda", "0.5").unwrap();
        c.set("beta", "2").unwrap();
        let r = c.run_config().unwrap();
        assert_eq!(r.lambda, Some(0.5));
        assert!(c.set("bogus", "1").is_err());
    }

    #[test]
    fn numeric_validation() {
        for (text, line) in [("beta=-1\n", 1), ("beta=1\ndt=abc\n", 2), ("beta=1\nn_realizations=1\n", 2), ("beta=1\npad_factor=1.5\n", 2)] {
            let e = Config::parse(text, None).unwrap().run_config().unwrap_err();
            assert_eq!(e.line, Some(line), "{text}: {e}");
        }
        let e = Config::parse("beta=1\nepsilon=1\nkappa=5\n", None).unwrap().run_config().unwrap_err();
        assert!(e.message.contains("either"));
    }
}
