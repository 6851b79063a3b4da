//! Run configuration: TOML with dotted keys, e.g. `scenario.alpha = 2.0`.
//!
//! Keys may also be grouped under `[scenario]`-style tables; both spellings
//! produce the same flat key. Every key is optional and falls back to the
//! desk defaults. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fas::FasGeometry;
use crate::mvn::MvnSpec;
use crate::quadrature::QuadratureSpec;
use crate::scenario::{Point3, Scenario, ScenarioParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OpCurve,
    MuMap,
    Validate,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::OpCurve => "op_curve",
            Mode::MuMap => "mu_map",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Zero disables Monte Carlo columns in sweeps.
    pub trials: u64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mode: Option<Mode>,
    pub snr_db: Vec<f64>,
    /// `beta_b` values for the SNR sweep; empty means `scenario.beta_b` only.
    pub betas: Vec<f64>,
    /// Move both transmit powers with the SNR; otherwise only the BS power moves.
    pub joint_power: bool,
    pub map_snr_db: f64,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub heights: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            mode: None,
            snr_db: (0..=8).map(|k| 5.0 * k as f64).collect(),
            betas: Vec::new(),
            joint_power: true,
            map_snr_db: 20.0,
            x_range: [-0.4, 2.4],
            y_range: [-1.4, 1.4],
            nx: 20,
            ny: 20,
            heights: vec![0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateConfig {
    pub snr_db: Vec<f64>,
    /// Test hook: hand the copula a correlation matrix with the
    /// off-diagonal entries removed while Monte Carlo keeps the true one.
    pub corrupt_correlation: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 10.0, 20.0, 30.0, 40.0],
            corrupt_correlation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub scenario: ScenarioParams,
    pub fas: FasGeometry,
    pub mvn: MvnSpec,
    pub quad: QuadratureSpec,
    pub mc: McConfig,
    pub sweep: SweepConfig,
    pub validate: ValidateConfig,
}

pub const KEYS: &[&str] = &[
    "scenario.bs_pos",
    "scenario.u1_pos",
    "scenario.u2_pos",
    "scenario.far_pos",
    "scenario.alpha",
    "scenario.p_b_dbm",
    "scenario.p_f_dbm",
    "scenario.noise_dbm",
    "scenario.beta_b",
    "scenario.beta_f",
    "scenario.gamma_u1",
    "scenario.gamma_u2",
    "fas.n1",
    "fas.n2",
    "fas.l1",
    "fas.l2",
    "mvn.target_abs_error",
    "mvn.sample_budget",
    "mvn.randomizations",
    "mvn.seed",
    "quad.rel_tol",
    "quad.abs_tol",
    "quad.max_panel_depth",
    "quad.panel_nodes",
    "quad.tail_mass",
    "mc.trials",
    "mc.seed",
    "sweep.mode",
    "sweep.snr_db",
    "sweep.betas",
    "sweep.joint_power",
    "sweep.map_snr_db",
    "sweep.x_range",
    "sweep.y_range",
    "sweep.nx",
    "sweep.ny",
    "sweep.heights",
    "validate.snr_db",
    "validate.corrupt_correlation",
];

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

fn suggest(key: &str) -> Option<&'static str> {
    let leaf = |k: &str| k.rsplit('.').next().unwrap_or(k).to_ascii_lowercase();
    let probe = leaf(key).replace('_', "");
    KEYS.iter()
        .map(|k| {
            let full = strsim::jaro_winkler(key, k);
            let short = strsim::jaro_winkler(&probe, &leaf(k).replace('_', ""));
            (full.max(short), *k)
        })
        .filter(|(score, _)| *score > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(invalid(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::Integer(i) => Err(invalid(key, format!("must be non-negative, got {i}"))),
        // 1e6 is a common way to write a trial count
        toml::Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 && *f < 9.007e15 => Ok(*f as u64),
        other => Err(invalid(key, format!("expected a non-negative integer, got {other}"))),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    as_u64(key, v).map(|n| n as usize)
}

fn as_bool(key: &str, v: &toml::Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| invalid(key, format!("expected true or false, got {v}")))
}

fn as_list(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(a) => a.iter().map(|x| as_f64(key, x)).collect(),
        other => Err(invalid(key, format!("expected an array of numbers, got {}", other.type_str()))),
    }
}

fn as_fixed<const N: usize>(key: &str, v: &toml::Value) -> Result<[f64; N]> {
    let list = as_list(key, v)?;
    list.try_into()
        .map_err(|l: Vec<f64>| invalid(key, format!("expected {N} numbers, got {}", l.len())))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = RunConfig::default();
        for (key, value) in &flat {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies a `key=value` override; `value` uses TOML syntax, with bare
    /// words accepted as strings.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        self.set(key, &value)?;
        self.validate()
    }

    /// Sets one flat key without cross-field validation.
    pub fn set(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        let s = &mut self.scenario;
        match key {
            "scenario.bs_pos" => s.bs_pos = as_fixed(key, v)?,
            "scenario.u1_pos" => s.u1_pos = as_fixed(key, v)?,
            "scenario.u2_pos" => s.u2_pos = as_fixed(key, v)?,
            "scenario.far_pos" => s.far_pos = as_fixed(key, v)?,
            "scenario.alpha" => s.alpha = as_f64(key, v)?,
            "scenario.p_b_dbm" => s.p_b_dbm = as_f64(key, v)?,
            "scenario.p_f_dbm" => s.p_f_dbm = as_f64(key, v)?,
            "scenario.noise_dbm" => s.noise_dbm = as_f64(key, v)?,
            "scenario.beta_b" => s.beta_b = as_f64(key, v)?,
            "scenario.beta_f" => s.beta_f = as_f64(key, v)?,
            "scenario.gamma_u1" => s.gamma_u1 = as_f64(key, v)?,
            "scenario.gamma_u2" => s.gamma_u2 = as_f64(key, v)?,
            "fas.n1" => self.fas.n1 = as_usize(key, v)?,
            "fas.n2" => self.fas.n2 = as_usize(key, v)?,
            "fas.l1" => self.fas.l1 = as_f64(key, v)?,
            "fas.l2" => self.fas.l2 = as_f64(key, v)?,
            "mvn.target_abs_error" => self.mvn.target_abs_error = as_f64(key, v)?,
            "mvn.sample_budget" => self.mvn.sample_budget = as_usize(key, v)?,
            "mvn.randomizations" => self.mvn.randomizations = as_usize(key, v)?,
            "mvn.seed" => self.mvn.seed = as_u64(key, v)?,
            "quad.rel_tol" => self.quad.rel_tol = as_f64(key, v)?,
            "quad.abs_tol" => self.quad.abs_tol = as_f64(key, v)?,
            "quad.max_panel_depth" => {
                self.quad.max_panel_depth = u32::try_from(as_u64(key, v)?).map_err(|_| invalid(key, "too large"))?
            }
            "quad.panel_nodes" => self.quad.panel_nodes = as_usize(key, v)?,
            "quad.tail_mass" => self.quad.tail_mass = as_f64(key, v)?,
            "mc.trials" => self.mc.trials = as_u64(key, v)?,
            "mc.seed" => self.mc.seed = as_u64(key, v)?,
            "sweep.mode" => {
                self.sweep.mode = Some(match v.as_str() {
                    Some("op_curve") => Mode::OpCurve,
                    Some("mu_map") => Mode::MuMap,
                    Some("validate") => Mode::Validate,
                    _ => return Err(invalid(key, format!("expected \"op_curve\", \"mu_map\" or \"validate\", got {v}"))),
                })
            }
            "sweep.snr_db" => self.sweep.snr_db = as_list(key, v)?,
            "sweep.betas" => self.sweep.betas = as_list(key, v)?,
            "sweep.joint_power" => self.sweep.joint_power = as_bool(key, v)?,
            "sweep.map_snr_db" => self.sweep.map_snr_db = as_f64(key, v)?,
            "sweep.x_range" => self.sweep.x_range = as_fixed(key, v)?,
            "sweep.y_range" => self.sweep.y_range = as_fixed(key, v)?,
            "sweep.nx" => self.sweep.nx = as_usize(key, v)?,
            "sweep.ny" => self.sweep.ny = as_usize(key, v)?,
            "sweep.heights" => self.sweep.heights = as_list(key, v)?,
            "validate.snr_db" => self.validate.snr_db = as_list(key, v)?,
            "validate.corrupt_correlation" => self.validate.corrupt_correlation = as_bool(key, v)?,
            _ => {
                let hint = suggest(key).map(|k| format!("; did you mean `{k}`?")).unwrap_or_default();
                return Err(Error::Config(format!("unknown key `{key}`{hint}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Scenario::new(self.scenario.clone())?;
        FasGeometry::new(self.fas.n1, self.fas.n2, self.fas.l1, self.fas.l2)?;
        if self.fas.n1 * self.fas.n2 > 256 {
            return Err(invalid("fas.n1", "at most 256 ports are supported"));
        }
        self.mvn.validate()?;
        self.quad.validate()?;

        let finite = |key: &str, xs: &[f64]| -> Result<()> {
            match xs.iter().find(|x| !x.is_finite()) {
                Some(x) => Err(invalid(key, format!("entries must be finite, got {x}"))),
                None => Ok(()),
            }
        };
        let sw = &self.sweep;
        if sw.snr_db.is_empty() {
            return Err(invalid("sweep.snr_db", "must list at least one SNR"));
        }
        finite("sweep.snr_db", &sw.snr_db)?;
        finite("sweep.map_snr_db", &[sw.map_snr_db])?;
        for &b in &sw.betas {
            if !(0.0..0.5).contains(&b) {
                return Err(invalid("sweep.betas", format!("NOMA power split must lie in [0, 0.5), got {b}")));
            }
        }
        for (key, r) in [("sweep.x_range", sw.x_range), ("sweep.y_range", sw.y_range)] {
            finite(key, &r)?;
            if r[0] > r[1] {
                return Err(invalid(key, format!("lower end {} exceeds upper end {}", r[0], r[1])));
            }
        }
        if sw.nx == 0 || sw.ny == 0 {
            return Err(invalid(if sw.nx == 0 { "sweep.nx" } else { "sweep.ny" }, "must be at least 1"));
        }
        if sw.heights.is_empty() {
            return Err(invalid("sweep.heights", "must list at least one height"));
        }
        finite("sweep.heights", &sw.heights)?;
        if self.validate.snr_db.is_empty() {
            return Err(invalid("validate.snr_db", "must list at least one SNR"));
        }
        finite("validate.snr_db", &self.validate.snr_db)?;
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::new(self.scenario.clone())
    }

    pub fn fas_geometry(&self) -> Result<FasGeometry> {
        FasGeometry::new(self.fas.n1, self.fas.n2, self.fas.l1, self.fas.l2)
    }

    /// Overrides both Monte Carlo and MVN seeds.
    pub fn set_seed(&mut self, seed: u64) {
        self.mc.seed = seed;
        self.mvn.seed = seed;
    }

    /// Fully resolved configuration in the same format it is read from.
    pub fn to_toml(&self) -> String {
        let f = |x: f64| format!("{x:?}");
        let list = |xs: &[f64]| format!("[{}]", xs.iter().map(|x| f(*x)).collect::<Vec<_>>().join(", "));
        let pt = |p: Point3| list(&p);
        let s = &self.scenario;
        let mut o = String::new();
        let _ = writeln!(o, "[scenario]");
        let _ = writeln!(o, "bs_pos = {}", pt(s.bs_pos));
        let _ = writeln!(o, "u1_pos = {}", pt(s.u1_pos));
        let _ = writeln!(o, "u2_pos = {}", pt(s.u2_pos));
        let _ = writeln!(o, "far_pos = {}", pt(s.far_pos));
        let _ = writeln!(o, "alpha = {}", f(s.alpha));
        let _ = writeln!(o, "p_b_dbm = {}", f(s.p_b_dbm));
        let _ = writeln!(o, "p_f_dbm = {}", f(s.p_f_dbm));
        let _ = writeln!(o, "noise_dbm = {}", f(s.noise_dbm));
        let _ = writeln!(o, "beta_b = {}", f(s.beta_b));
        let _ = writeln!(o, "beta_f = {}", f(s.beta_f));
        let _ = writeln!(o, "gamma_u1 = {}", f(s.gamma_u1));
        let _ = writeln!(o, "gamma_u2 = {}", f(s.gamma_u2));
        let _ = writeln!(o, "\n[fas]");
        let _ = writeln!(o, "n1 = {}\nn2 = {}", self.fas.n1, self.fas.n2);
        let _ = writeln!(o, "l1 = {}\nl2 = {}", f(self.fas.l1), f(self.fas.l2));
        let _ = writeln!(o, "\n[mvn]");
        let _ = writeln!(o, "target_abs_error = {}", f(self.mvn.target_abs_error));
        let _ = writeln!(o, "sample_budget = {}", self.mvn.sample_budget);
        let _ = writeln!(o, "randomizations = {}", self.mvn.randomizations);
        let _ = writeln!(o, "seed = {}", self.mvn.seed);
        let _ = writeln!(o, "\n[quad]");
        let _ = writeln!(o, "rel_tol = {}", f(self.quad.rel_tol));
        let _ = writeln!(o, "abs_tol = {}", f(self.quad.abs_tol));
        let _ = writeln!(o, "max_panel_depth = {}", self.quad.max_panel_depth);
        let _ = writeln!(o, "panel_nodes = {}", self.quad.panel_nodes);
        let _ = writeln!(o, "tail_mass = {}", f(self.quad.tail_mass));
        let _ = writeln!(o, "\n[mc]");
        let _ = writeln!(o, "trials = {}\nseed = {}", self.mc.trials, self.mc.seed);
        let sw = &self.sweep;
        let _ = writeln!(o, "\n[sweep]");
        if let Some(m) = sw.mode {
            let _ = writeln!(o, "mode = \"{}\"", m.as_str());
        }
        let _ = writeln!(o, "snr_db = {}", list(&sw.snr_db));
        let _ = writeln!(o, "betas = {}", list(&sw.betas));
        let _ = writeln!(o, "joint_power = {}", sw.joint_power);
        let _ = writeln!(o, "map_snr_db = {}", f(sw.map_snr_db));
        let _ = writeln!(o, "x_range = {}", list(&sw.x_range));
        let _ = writeln!(o, "y_range = {}", list(&sw.y_range));
        let _ = writeln!(o, "nx = {}\nny = {}", sw.nx, sw.ny);
        let _ = writeln!(o, "heights = {}", list(&sw.heights));
        let _ = writeln!(o, "\n[validate]");
        let _ = writeln!(o, "snr_db = {}", list(&self.validate.snr_db));
        let _ = writeln!(o, "corrupt_correlation = {}", self.validate.corrupt_correlation);
        o
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}
