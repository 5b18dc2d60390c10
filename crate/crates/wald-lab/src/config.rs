//! Flat `key = value` run configuration.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;
use wald_core::equilibrium::Regime;
use wald_core::{Controls, ModelParams, RawParams};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io { path: PathBuf, message: String },
    Parse { line: usize, message: String },
    Invalid { key: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {}: {message}", path.display()),
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Invalid { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: RawParams,
    pub controls: Controls,
    pub p0: f64,
    pub regime: Option<Regime>,
    /// Randomization start; `None` picks the default.
    pub t_hat: Option<f64>,
    pub eps: f64,
    pub reps: u64,
    pub seed: u64,
    pub report_step: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: RawParams::baseline(),
            controls: Controls::default(),
            p0: 0.5,
            regime: None,
            t_hat: None,
            eps: 1e-4,
            reps: 100_000,
            seed: 42,
            report_step: 0.5,
            out_dir: None,
        }
    }
}

/// Keys in emission order.
pub const KEYS: &[&str] = &[
    "u_h", "u_l", "dbar_h", "dbar_l", "dund_h", "dund_l", "a", "b", "c", "u_s", "n", "p0", "regime", "t_hat",
    "eps", "ode_step", "scan_step", "bisect_tol", "horizon", "verify_step", "max_iter", "reps", "seed",
    "report_step", "out_dir",
];

const MODEL_KEYS: &[&str] = &["u_h", "u_l", "dbar_h", "dbar_l", "dund_h", "dund_l", "a", "b", "c"];

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

fn num(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| invalid(key, format!("not a number: {v:?}")))
}

fn int(key: &str, v: &str) -> Result<u64, ConfigError> {
    if let Ok(x) = v.parse::<u64>() {
        return Ok(x);
    }
    let x = num(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(invalid(key, format!("not a nonnegative integer: {v:?}")));
    }
    Ok(x as u64)
}

impl RunConfig {
    /// Sets one key from its textual value. No cross-key validation.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let p = &mut self.params;
        let k = &mut self.controls;
        match key {
            "u_h" => p.u_h = num(key, v)?,
            "u_l" => p.u_l = num(key, v)?,
            "dbar_h" => p.dbar_h = num(key, v)?,
            "dbar_l" => p.dbar_l = num(key, v)?,
            "dund_h" => p.dund_h = num(key, v)?,
            "dund_l" => p.dund_l = num(key, v)?,
            "a" => p.a = num(key, v)?,
            "b" => p.b = num(key, v)?,
            "c" => p.c = num(key, v)?,
            "u_s" => p.u_s = num(key, v)?,
            "n" => p.n = u32::try_from(int(key, v)?).map_err(|_| invalid(key, "too large"))?,
            "p0" => self.p0 = num(key, v)?,
            "regime" => {
                self.regime = match v {
                    "" | "auto" => None,
                    _ => Some(Regime::parse(v).ok_or_else(|| invalid(key, format!("unknown regime {v:?}")))?),
                }
            }
            "t_hat" => {
                self.t_hat = match v {
                    "" | "auto" => None,
                    _ => Some(num(key, v)?),
                }
            }
            "eps" => self.eps = num(key, v)?,
            "ode_step" => k.ode_step = num(key, v)?,
            "scan_step" => k.scan_step = num(key, v)?,
            "bisect_tol" => k.bisect_tol = num(key, v)?,
            "horizon" => k.horizon = num(key, v)?,
            "verify_step" => k.verify_step = num(key, v)?,
            "max_iter" => k.max_iter = int(key, v)? as usize,
            "reps" => self.reps = int(key, v)?,
            "seed" => self.seed = int(key, v)?,
            "report_step" => self.report_step = num(key, v)?,
            "out_dir" => self.out_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Checks positivity of every control and the model constraints.
    pub fn validate(&self) -> Result<ModelParams, ConfigError> {
        let k = &self.controls;
        let positive = [
            ("ode_step", k.ode_step),
            ("scan_step", k.scan_step),
            ("bisect_tol", k.bisect_tol),
            ("horizon", k.horizon),
            ("verify_step", k.verify_step),
            ("eps", self.eps),
            ("report_step", self.report_step),
            ("max_iter", k.max_iter as f64),
            ("reps", self.reps as f64),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive (got {v})")));
            }
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(invalid("p0", format!("must lie in [0, 1] (got {})", self.p0)));
        }
        if let Some(t) = self.t_hat {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("t_hat", format!("must be nonnegative (got {t})")));
            }
        }
        self.params.validate().map_err(|e| invalid(&offending_key(&e.to_string()), e.to_string()))
    }

    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse { line: i + 1, message: format!("expected key = value, got {line:?}") });
            };
            let key = key.trim();
            if seen.iter().any(|s| s == key) {
                return Err(ConfigError::Parse { line: i + 1, message: format!("duplicate key {key:?}") });
            }
            cfg.set(key, value.trim()).map_err(|e| match e {
                ConfigError::Invalid { key, message } => {
                    ConfigError::Parse { line: i + 1, message: format!("{key}: {message}") }
                }
                other => other,
            })?;
            seen.push(key.to_string());
        }
        for key in MODEL_KEYS {
            if !seen.iter().any(|s| s == key) {
                return Err(invalid(key, "missing model parameter"));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Textual form accepted by [`RunConfig::parse`]; floats use the
    /// shortest representation that reads back exactly.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }

    pub fn value_of(&self, key: &str) -> String {
        let p = &self.params;
        let k = &self.controls;
        match key {
            "u_h" => p.u_h.to_string(),
            "u_l" => p.u_l.to_string(),
            "dbar_h" => p.dbar_h.to_string(),
            "dbar_l" => p.dbar_l.to_string(),
            "dund_h" => p.dund_h.to_string(),
            "dund_l" => p.dund_l.to_string(),
            "a" => p.a.to_string(),
            "b" => p.b.to_string(),
            "c" => p.c.to_string(),
            "u_s" => p.u_s.to_string(),
            "n" => p.n.to_string(),
            "p0" => self.p0.to_string(),
            "regime" => self.regime.map_or("auto".into(), |r| r.name().into()),
            "t_hat" => self.t_hat.map_or("auto".into(), |t| t.to_string()),
            "eps" => self.eps.to_string(),
            "ode_step" => k.ode_step.to_string(),
            "scan_step" => k.scan_step.to_string(),
            "bisect_tol" => k.bisect_tol.to_string(),
            "horizon" => k.horizon.to_string(),
            "verify_step" => k.verify_step.to_string(),
            "max_iter" => k.max_iter.to_string(),
            "reps" => self.reps.to_string(),
            "seed" => self.seed.to_string(),
            "report_step" => self.report_step.to_string(),
            "out_dir" => self.out_dir.as_ref().map_or(String::new(), |d| d.display().to_string()),
            _ => String::new(),
        }
    }

    /// Resolved configuration as an ordered list of pairs.
    pub fn flat(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|k| (*k, self.value_of(k))).collect()
    }
}

/// Config key blamed for a model validation message.
fn offending_key(message: &str) -> String {
    if let Some(name) = message.split(" is not finite").next().filter(|_| message.contains(" is not finite")) {
        return name.rsplit(' ').next().unwrap_or(name).to_lowercase();
    }
    let rules = [
        ("a > 0", "a"),
        ("b > a", "b"),
        ("c > 0", "c"),
        ("N >= 2", "n"),
        ("dbar > dund", "dbar_h"),
        ("payoff ordering", "u_s"),
    ];
    rules.iter().find(|(needle, _)| message.contains(needle)).map_or("model", |(_, k)| k).into()
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    RunConfig::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASELINE: &str = "\
# baseline parameters
u_h = 1
u_l = -1
dbar_h = 0.7
dbar_l = 0.7
dund_h = 0.5
dund_l = 0.5
a = 0.6
b = 0.8
c = 0.025   # flow cost
";

    #[test]
    fn model_keys_only_gets_defaults() {
        let cfg = RunConfig::parse(BASELINE).unwrap();
        assert_eq!(cfg.params, RawParams::baseline());
        assert_eq!(cfg.controls.ode_step, 1e-4);
        assert_eq!(cfg.controls.scan_step, 1e-3);
        assert_eq!(cfg.controls.bisect_tol, 1e-10);
        assert_eq!(cfg.controls.horizon, 200.0);
        assert_eq!((cfg.reps, cfg.seed), (100_000, 42));
    }

    #[test]
    fn negative_cost_names_c() {
        let err = RunConfig::parse(&BASELINE.replace("c = 0.025", "c = -0.1")).unwrap_err();
        match err {
            ConfigError::Invalid { key, .. } => assert_eq!(key, "c"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let err = RunConfig::parse(&format!("{BASELINE}bogus = 1\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 11, .. }), "{err}");
        let err = RunConfig::parse(&format!("{BASELINE}seed 3\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 11, .. }), "{err}");
        let err = RunConfig::parse(&format!("{BASELINE}a = 0.5\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 11, .. }), "{err}");
    }

    #[test]
    fn nonpositive_controls_are_named() {
        let err = RunConfig::parse(&format!("{BASELINE}ode_step = 0\n")).unwrap_err();
        assert_eq!(err, invalid("ode_step", "must be positive (got 0)"));
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let mut cfg = RunConfig::parse(BASELINE).unwrap();
        cfg.params.c = 0.1 + 0.2;
        cfg.p0 = 1.0 / 3.0;
        cfg.t_hat = Some(std::f64::consts::PI);
        cfg.regime = Some(Regime::RandomStopping);
        cfg.seed = u64::MAX >> 12;
        cfg.out_dir = Some("runs/a".into());
        assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);
    }

    proptest::proptest! {
        #[test]
        fn random_configs_round_trip(c in 1e-6f64..1.0, p0 in 0.0f64..1.0, t in proptest::option::of(0.0f64..50.0), seed in proptest::num::u64::ANY, reps in 1u64..10_000_000) {
            let mut cfg = RunConfig::parse(BASELINE).unwrap();
            cfg.params.c = c;
            cfg.p0 = p0;
            cfg.t_hat = t;
            cfg.seed = seed;
            cfg.reps = reps;
            proptest::prop_assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);
        }
    }
}
