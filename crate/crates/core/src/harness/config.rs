use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mle::{MleConfig, Regularization};
use crate::model::{ComparisonGraph, ScoreVector};
use crate::seed::{stream, Seed};
use crate::spectral::{cd_np_d, default_d};

/// A scalar or a list in the config file.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScoreMode {
    /// Fresh `w_i ~ U[0.5, 1]` in every trial.
    UniformHalfOne,
    /// `K` items at 1, the rest at `1 - delta`; each delta is a sweep axis.
    TwoLevel { delta: OneOrMany<f64> },
    Explicit { w: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DRule {
    TwoDmax,
    CdNp { c_d: f64 },
}

impl DRule {
    pub fn resolve(self, graph: &ComparisonGraph, p: f64) -> Result<f64> {
        match self {
            DRule::TwoDmax => default_d(graph),
            DRule::CdNp { c_d } => cd_np_d(graph, c_d, p),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    Auto {
        #[serde(default = "default_c_lambda")]
        c_lambda: f64,
    },
    Fixed { lambda: f64 },
    Zero,
}

fn default_c_lambda() -> f64 {
    2.0
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Auto {
            c_lambda: default_c_lambda(),
        }
    }
}

impl LambdaRule {
    pub fn mle_config(self) -> MleConfig {
        let regularization = match self {
            LambdaRule::Auto { c_lambda } => Regularization::Auto { c_lambda },
            LambdaRule::Fixed { lambda } => Regularization::Fixed(lambda),
            LambdaRule::Zero => Regularization::Fixed(0.0),
        };
        MleConfig {
            regularization,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    Mle,
    MleUnregularized,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Spectral, Method::Mle, Method::MleUnregularized];

    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Mle => "mle",
            Method::MleUnregularized => "mle_unregularized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Spectral, Method::Mle]
}

/// A Monte-Carlo sweep, read from TOML.
///
/// ```toml
/// n = 200
/// p = 0.25
/// L = [10, 20, 40, 80]
/// K = 10
/// trials = 100
/// seed = 1
/// methods = ["spectral", "mle"]
///
/// [scores]
/// mode = "uniform_half_one"
/// ```
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default)]
    pub p: Option<OneOrMany<f64>>,
    #[serde(rename = "L", default)]
    pub l: Option<OneOrMany<u32>>,
    /// Explicit `(p, L)` points; replaces the `p` x `L` grid.
    #[serde(default)]
    pub pairs: Option<Vec<(f64, u32)>>,
    #[serde(rename = "K")]
    pub k: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub scores: ScoreMode,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_d_rule")]
    pub d_rule: DRule,
    #[serde(default)]
    pub lambda_rule: LambdaRule,
    /// Fill the `seconds` column with wall-clock times.
    #[serde(default)]
    pub timings: bool,
}

fn default_d_rule() -> DRule {
    DRule::TwoDmax
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub l: u32,
    pub delta: Option<f64>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config_err(format!("n must be at least 2, got {}", self.n)));
        }
        if self.k == 0 || self.k >= self.n {
            return Err(Error::BadK { k: self.k, n: self.n });
        }
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("methods must be nonempty"));
        }
        let points = self.pairs_grid()?;
        for (p, l) in points {
            if !(p > 0.0 && p <= 1.0) {
                return Err(config_err(format!("p must lie in (0, 1], got {p}")));
            }
            if l == 0 {
                return Err(config_err("L must be at least 1"));
            }
        }
        match &self.scores {
            ScoreMode::UniformHalfOne => {}
            ScoreMode::TwoLevel { delta } => {
                let d = delta.to_vec();
                if d.is_empty() {
                    return Err(config_err("delta list must be nonempty"));
                }
                if let Some(bad) = d.iter().find(|&&x| !(0.0..1.0).contains(&x)) {
                    return Err(config_err(format!("delta must lie in [0, 1), got {bad}")));
                }
            }
            ScoreMode::Explicit { w } => {
                if w.len() != self.n {
                    return Err(config_err(format!("explicit scores have length {}, expected n = {}", w.len(), self.n)));
                }
                ScoreVector::new(w.clone())?;
            }
        }
        match self.d_rule {
            DRule::CdNp { c_d } if !(c_d > 0.0) => return Err(config_err(format!("c_d must be positive, got {c_d}"))),
            _ => {}
        }
        match self.lambda_rule {
            LambdaRule::Auto { c_lambda } if !(c_lambda >= 0.0) => {
                return Err(config_err(format!("c_lambda must be nonnegative, got {c_lambda}")))
            }
            LambdaRule::Fixed { lambda } if !(lambda >= 0.0) => {
                return Err(config_err(format!("lambda must be nonnegative, got {lambda}")))
            }
            _ => {}
        }
        Ok(())
    }

    fn pairs_grid(&self) -> Result<Vec<(f64, u32)>> {
        if let Some(pairs) = &self.pairs {
            if self.p.is_some() || self.l.is_some() {
                return Err(config_err("use either `pairs` or `p` and `L`, not both"));
            }
            if pairs.is_empty() {
                return Err(config_err("pairs must be nonempty"));
            }
            return Ok(pairs.clone());
        }
        let (Some(p), Some(l)) = (&self.p, &self.l) else {
            return Err(config_err("missing `p` or `L`"));
        };
        let (p, l) = (p.to_vec(), l.to_vec());
        if p.is_empty() || l.is_empty() {
            return Err(config_err("sweep lists must be nonempty"));
        }
        Ok(p.iter().flat_map(|&p| l.iter().map(move |&l| (p, l))).collect())
    }

    /// Grid points ordered by delta, then `p`, then `L`.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let pairs = self.pairs_grid().expect("validated config");
        let deltas = match &self.scores {
            ScoreMode::TwoLevel { delta } => delta.to_vec().into_iter().map(Some).collect(),
            _ => vec![None],
        };
        deltas
            .into_iter()
            .flat_map(|delta| pairs.iter().map(move |&(p, l)| SweepPoint { p, l, delta }))
            .collect()
    }

    /// Seed for one trial. It does not depend on the sweep point, so all
    /// points share common random numbers.
    pub fn trial_seed(&self, trial: usize) -> Seed {
        Seed::new(self.seed).child(trial as u64)
    }

    pub fn scores_for(&self, point: &SweepPoint, trial_seed: Seed) -> Result<ScoreVector> {
        match &self.scores {
            ScoreMode::UniformHalfOne => ScoreVector::uniform_half_one(self.n, trial_seed.child(stream::SCORES)),
            ScoreMode::TwoLevel { .. } => ScoreVector::two_level(self.n, self.k, point.delta.unwrap_or(0.0)),
            ScoreMode::Explicit { w } => ScoreVector::new(w.clone()),
        }
    }

    pub fn mle_config(&self, method: Method) -> Option<MleConfig> {
        match method {
            Method::Spectral => None,
            Method::Mle => Some(self.lambda_rule.mle_config()),
            Method::MleUnregularized => Some(LambdaRule::Zero.mle_config()),
        }
    }
}
