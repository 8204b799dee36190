//! Run configuration: a flat `key = value` file plus command-line overrides.
//!
//! Keys match the command-line flags without the leading dashes; `-` and `_`
//! are interchangeable. Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use memgrad::bundle::ReplacementStrategy;
use memgrad::problems::{ProblemKind, ProblemSpec};
use memgrad::restart::default_decrease_factor;
use memgrad::scheme::RestartMode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{0}")]
    Incompatible(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GM")]
    Gm,
    #[serde(rename = "GMM")]
    Gmm,
    #[serde(rename = "ACGM")]
    Acgm,
    #[serde(rename = "AGMM")]
    Agmm,
    #[serde(rename = "AGMM_SC")]
    AgmmSc,
    #[serde(rename = "R_AGMM_KNOWN")]
    RAgmmKnown,
    #[serde(rename = "R_AGMM_ADAPTIVE")]
    RAgmmAdaptive,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Gm,
        Method::Gmm,
        Method::Acgm,
        Method::Agmm,
        Method::AgmmSc,
        Method::RAgmmKnown,
        Method::RAgmmAdaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gm => "GM",
            Method::Gmm => "GMM",
            Method::Acgm => "ACGM",
            Method::Agmm => "AGMM",
            Method::AgmmSc => "AGMM_SC",
            Method::RAgmmKnown => "R_AGMM_KNOWN",
            Method::RAgmmAdaptive => "R_AGMM_ADAPTIVE",
        }
    }

    /// GM and ACGM are the memoryless members of their families.
    pub fn fixed_capacity(self) -> Option<usize> {
        matches!(self, Method::Gm | Method::Acgm).then_some(1)
    }

    /// Whether the method exploits the strong convexity parameter.
    pub fn uses_mu(self) -> bool {
        matches!(self, Method::Gm | Method::Gmm | Method::AgmmSc | Method::RAgmmKnown)
    }

    pub fn is_gradient_method(self) -> bool {
        matches!(self, Method::Gm | Method::Gmm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(&norm))
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("expected one of {}", names.join(", "))
            })
    }
}

pub fn parse_replacement(s: &str) -> Result<ReplacementStrategy, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "crs" | "cyclic" => Ok(ReplacementStrategy::Cyclic),
        "mrs" | "maxnorm" | "max-norm" => Ok(ReplacementStrategy::MaxNorm),
        _ => Err("expected crs or mrs".into()),
    }
}

pub fn replacement_name(r: ReplacementStrategy) -> &'static str {
    match r {
        ReplacementStrategy::Cyclic => "crs",
        ReplacementStrategy::MaxNorm => "mrs",
    }
}

pub fn parse_restart(s: &str) -> Result<RestartMode, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "soft" => Ok(RestartMode::Soft),
        "hard" => Ok(RestartMode::Hard),
        _ => Err("expected soft or hard".into()),
    }
}

pub fn restart_name(r: RestartMode) -> &'static str {
    match r {
        RestartMode::Soft => "soft",
        RestartMode::Hard => "hard",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub method: Method,
    /// Bundle capacity; defaults to 1 for GM/ACGM and 16 otherwise.
    pub m: Option<usize>,
    pub replacement: ReplacementStrategy,
    pub restart: RestartMode,
    #[serde(rename = "D")]
    pub decrease_factor: f64,
    pub s: f64,
    /// Overrides the problem's `μ_f` for methods that exploit it.
    pub mu_f: Option<f64>,
    /// Overrides the problem's `μ_Ψ` for methods that exploit it.
    pub mu_psi: Option<f64>,
    #[serde(rename = "L0")]
    pub l0: Option<f64>,
    pub ru: f64,
    pub rd: f64,
    pub eps: f64,
    pub max_iters: usize,
    /// Inner QP iterations; defaults to 1000 (GMM) or 10 (AGMM).
    pub inner_iters: Option<usize>,
    pub newton_iters: usize,
    pub ref_budget: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSpec::desk(ProblemKind::Lasso, 0),
            method: Method::Gmm,
            m: None,
            replacement: ReplacementStrategy::Cyclic,
            restart: RestartMode::Soft,
            decrease_factor: default_decrease_factor(),
            s: 4.0,
            mu_f: None,
            mu_psi: None,
            l0: None,
            ru: 2.0,
            rd: 0.9,
            eps: 1e-9,
            max_iters: 5000,
            inner_iters: None,
            newton_iters: 2,
            ref_budget: 10_000,
            out: None,
        }
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| invalid(key, value, e.to_string()))
}

impl RunConfig {
    /// Desk-scale instance of `kind` with default solver settings.
    pub fn new(kind: ProblemKind, seed: u64, method: Method) -> Self {
        RunConfig { problem: ProblemSpec::desk(kind, seed), method, ..RunConfig::default() }
    }

    pub fn capacity(&self) -> usize {
        self.method.fixed_capacity().or(self.m).unwrap_or(16)
    }

    pub fn inner_iterations(&self) -> usize {
        self.inner_iters.unwrap_or(if self.method.is_gradient_method() { 1000 } else { 10 })
    }

    /// Applies one `key = value` setting. Setting `problem` resets the
    /// dimensions to the kind's desk defaults.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key_norm = key.trim().trim_start_matches("--").replace('-', "_").to_lowercase();
        let v = value.trim();
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(invalid(key, value, format!("{what} must be positive")))
            }
        };
        let nonneg = |x: f64| {
            if x >= 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(invalid(key, value, "must be nonnegative"))
            }
        };
        match key_norm.as_str() {
            "problem" => {
                let kind: ProblemKind = v.parse().map_err(|e: memgrad::Error| invalid(key, value, e.to_string()))?;
                let (rows, cols) = kind.desk_shape();
                self.problem.kind = kind;
                self.problem.rows = rows;
                self.problem.cols = cols;
            }
            "rows" => self.problem.rows = number(key, v)?,
            "cols" => self.problem.cols = number(key, v)?,
            "seed" => self.problem.seed = number(key, v)?,
            "lambda1" => self.problem.lambda1 = Some(nonneg(number(key, v)?)?),
            "lambda2" => self.problem.lambda2 = Some(nonneg(number(key, v)?)?),
            "sparsity" => self.problem.sparsity = number(key, v)?,
            "method" => self.method = v.parse().map_err(|e: String| invalid(key, value, e))?,
            "m" => {
                let m: usize = number(key, v)?;
                if m == 0 {
                    return Err(invalid(key, value, "bundle size must be at least 1"));
                }
                self.m = Some(m);
            }
            "replacement" => self.replacement = parse_replacement(v).map_err(|e| invalid(key, value, e))?,
            "restart" => self.restart = parse_restart(v).map_err(|e| invalid(key, value, e))?,
            "d" => self.decrease_factor = number(key, v)?,
            "s" => self.s = number(key, v)?,
            "mu_f" => self.mu_f = Some(nonneg(number(key, v)?)?),
            "mu_psi" => self.mu_psi = Some(nonneg(number(key, v)?)?),
            "l0" => self.l0 = Some(positive(number(key, v)?, "L0")?),
            "ru" => self.ru = number(key, v)?,
            "rd" => self.rd = number(key, v)?,
            "eps" => self.eps = positive(number(key, v)?, "eps")?,
            "max_iters" => self.max_iters = number(key, v)?,
            "inner_iters" => self.inner_iters = Some(number(key, v)?),
            "newton_iters" => self.newton_iters = number(key, v)?,
            "ref_budget" => {
                self.ref_budget = number(key, v)?;
                if self.ref_budget == 0 {
                    return Err(invalid(key, value, "reference budget must be at least 1"));
                }
            }
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(key.trim().to_string())),
        }
        Ok(())
    }

    /// Applies every setting of a configuration file body.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: line.to_string() })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        self.apply_text(&text)
    }

    /// Checks method/parameter compatibility that does not need the instance.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Incompatible(msg));
        if let (Some(fixed), Some(m)) = (self.method.fixed_capacity(), self.m) {
            if m != fixed {
                return bad(format!(
                    "{} is memoryless and always uses m = 1; use {} for m = {m}",
                    self.method,
                    if self.method == Method::Gm { "GMM" } else { "AGMM" }
                ));
            }
        }
        if !(self.ru > 1.0) || !(self.rd > 0.0 && self.rd <= 1.0) {
            return bad(format!("need ru > 1 and 0 < rd <= 1, got ru = {}, rd = {}", self.ru, self.rd));
        }
        if !(self.decrease_factor > 0.0 && self.decrease_factor < 1.0) {
            return bad(format!("D must lie in (0, 1), got {}", self.decrease_factor));
        }
        if !(self.s > 1.0) {
            return bad(format!("s must exceed 1, got {}", self.s));
        }
        if !self.method.uses_mu() && (self.mu_f.is_some() || self.mu_psi.is_some()) {
            return bad(format!(
                "{} does not use strong convexity; drop --mu-f/--mu-psi or use AGMM_SC",
                self.method
            ));
        }
        let kind = self.problem.kind;
        if matches!(self.method, Method::AgmmSc | Method::RAgmmKnown)
            && !kind.strongly_convex()
            && self.mu_f.unwrap_or(0.0) + self.mu_psi.unwrap_or(0.0) <= 0.0
        {
            return bad(format!(
                "{} needs a positive strong convexity parameter; {kind} has none, pass --mu-f or --mu-psi",
                self.method
            ));
        }
        Ok(())
    }
}
