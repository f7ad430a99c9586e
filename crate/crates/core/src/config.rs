//! The JSON experiment description read by the command-line tool.
//!
//! ```json
//! {
//!   "scenario": { "kind": "park" },
//!   "policy":   { "schedule": { "kind": "ucb_normal" }, "sigma": "daily_spread" },
//!   "run":      { "horizon": 200, "replications": 1000, "seed": 2024 }
//! }
//! ```
//!
//! Every block except `scenario` has defaults. Matrices are nested arrays
//! in row-major order.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assumptions::AssumptionCertificate;
use crate::bandit::{ExplorationSchedule, InitMode, TailConstants, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::linsys::{AvailabilitySchedule, MatrixSchedule, ModelParts, ScalarSchedule, SystemModel};
use crate::noise::NoiseSpec;
use crate::scenarios::{build_park, build_static, ParkScenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub tail: TailConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Park(ParkScenario),
    Static(StaticScenario),
    Explicit(Box<ExplicitScenario>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticScenario {
    pub means: Vec<f64>,
    pub half_widths: Vec<f64>,
}

/// A model spelled out schedule by schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitScenario {
    pub dynamics: MatrixScheduleConfig,
    pub noise_input: MatrixScheduleConfig,
    pub outputs: Vec<MatrixScheduleConfig>,
    /// Defaults to `g ≡ 1` for every arm.
    #[serde(default)]
    pub noise_gain: Option<Vec<ScalarScheduleConfig>>,
    /// Defaults to every arm always available.
    #[serde(default)]
    pub availability: Option<Vec<AvailabilityConfig>>,
    pub process_noise: NoiseSpec,
    pub obs_noise: Vec<NoiseSpec>,
    pub theta0_mean: Vec<f64>,
    /// Defaults to a known initial state.
    #[serde(default)]
    pub theta0_cov: Option<Vec<Vec<f64>>>,
    pub reward_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixScheduleConfig {
    Constant { matrix: Vec<Vec<f64>> },
    Periodic { matrices: Vec<Vec<Vec<f64>>> },
    Table { matrices: Vec<Vec<Vec<f64>>> },
    Zero { rows: usize, cols: usize },
    Identity { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarScheduleConfig {
    Constant { value: f64 },
    Periodic { values: Vec<f64> },
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AvailabilityConfig {
    Always,
    Periodic { flags: Vec<bool> },
    Table { flags: Vec<bool> },
    LogSteps { offset: u64 },
}

/// How the exploration scale `σ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaChoice {
    Value(f64),
    Rule(SigmaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// `√(max_{t,i} Σ(X_i^t))` from the certificate, or `χ_x/2` when that
    /// is zero.
    Certificate,
    /// `χ_x / 2`.
    HalfCap,
    /// The daily spread of the optimal arm (park scenarios only).
    DailySpread,
}

impl Default for SigmaChoice {
    fn default() -> Self {
        SigmaChoice::Rule(SigmaRule::Certificate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub schedule: ExplorationSchedule,
    #[serde(default)]
    pub sigma: SigmaChoice,
    #[serde(default)]
    pub init: InitMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    SampleMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub kind: EstimatorKind,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::SampleMean,
            eta: DEFAULT_ETA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 200,
            replications: 1000,
            seed: 0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Any of `csv` and `json`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "results".into(),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    pub l: usize,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { l: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailConfig {
    pub times: Vec<usize>,
    /// Thresholds `ϑ` as multiples of `χ_x²`.
    pub vartheta_scales: Vec<f64>,
    /// Defaults to the run's replication count.
    pub replications: Option<usize>,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            times: vec![50, 100, 200],
            vartheta_scales: vec![0.5, 1.0, 2.0, 4.0],
            replications: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub horizon: Option<usize>,
    pub out: Option<String>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        config.validate().map_err(|e| anchor(text, e))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.run.seed = seed;
        }
        if let Some(r) = overrides.replications {
            self.run.replications = r;
            self.tail.replications = Some(r);
        }
        if let Some(h) = overrides.horizon {
            self.run.horizon = h;
        }
        if let Some(out) = &overrides.out {
            self.output.directory = out.clone();
        }
        if let Some(w) = overrides.workers {
            self.run.workers = Some(w);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.horizon == 0 {
            return Err(Error::Config("run.horizon must be at least 1".into()));
        }
        if self.run.replications == 0 {
            return Err(Error::Config("run.replications must be at least 1".into()));
        }
        if self.run.workers == Some(0) {
            return Err(Error::Config("run.workers must be at least 1".into()));
        }
        if let SigmaChoice::Value(s) = self.policy.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Config(format!("policy.sigma must be positive, got {s}")));
            }
        }
        if self.policy.sigma == SigmaChoice::Rule(SigmaRule::DailySpread)
            && !matches!(self.scenario, ScenarioConfig::Park(_))
        {
            return Err(Error::Config("policy.sigma \"daily_spread\" needs a park scenario".into()));
        }
        self.policy.schedule.validate()?;
        if !(self.estimator.eta > 0.0 && self.estimator.eta < 4.0) {
            return Err(Error::Config(format!("estimator.eta must lie in (0, 4), got {}", self.estimator.eta)));
        }
        if self.bound.l == 0 {
            return Err(Error::Config("bound.l must be at least 1".into()));
        }
        if self.tail.times.is_empty() || self.tail.times.iter().any(|t| *t < 2) {
            return Err(Error::Config("tail.times must be nonempty and at least 2".into()));
        }
        if self.tail.vartheta_scales.is_empty() || self.tail.vartheta_scales.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("tail.vartheta_scales must be nonempty and positive".into()));
        }
        if self.tail.replications == Some(0) {
            return Err(Error::Config("tail.replications must be at least 1".into()));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!("output.formats: unknown format {f:?}")));
            }
        }
        self.build_model().map(|_| ())
    }

    pub fn build_model(&self) -> Result<SystemModel> {
        self.scenario.build()
    }

    pub fn workers(&self) -> usize {
        self.run
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn tail_constants(&self, model: &SystemModel) -> Result<TailConstants> {
        TailConstants::new(self.estimator.eta, model.reward_cap)
    }

    /// Resolves the exploration scale against a model and its certificate.
    pub fn sigma(&self, model: &SystemModel, cert: Option<&AssumptionCertificate>) -> Result<f64> {
        Ok(match self.policy.sigma {
            SigmaChoice::Value(s) => s,
            SigmaChoice::Rule(SigmaRule::HalfCap) => model.reward_cap / 2.0,
            SigmaChoice::Rule(SigmaRule::Certificate) => match cert {
                Some(c) if c.reward_std_bound > 0.0 => c.reward_std_bound,
                _ => model.reward_cap / 2.0,
            },
            SigmaChoice::Rule(SigmaRule::DailySpread) => match &self.scenario {
                ScenarioConfig::Park(p) => p.daily_reward_spread()?,
                _ => return Err(Error::Config("policy.sigma \"daily_spread\" needs a park scenario".into())),
            },
        })
    }

    /// SHA-256 over the canonical JSON of everything that affects results
    /// (the output directory and the worker count are left out).
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        canonical.run.workers = None;
        let value = serde_json::to_value(&canonical).expect("config serializes");
        let text = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}

/// Prefixes a semantic error with the line of the block it concerns.
fn anchor(text: &str, err: Error) -> Error {
    let Error::Config(msg) = &err else { return err };
    let block = msg.split(['.', ' ']).next().unwrap_or("");
    let key = format!("\"{block}\"");
    let line = text.lines().position(|l| l.contains(&key)).map(|i| i + 1).or_else(|| {
        text.lines().position(|l| l.contains("\"scenario\"")).map(|i| i + 1)
    });
    match line {
        Some(line) => Error::Config(format!("line {line}: {msg}")),
        None => err,
    }
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<SystemModel> {
        match self {
            ScenarioConfig::Park(p) => build_park(p),
            ScenarioConfig::Static(s) => build_static(&s.means, &s.half_widths),
            ScenarioConfig::Explicit(e) => e.build(),
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Config(format!("scenario.{what}: empty matrix")));
    }
    if let Some(bad) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Config(format!(
            "scenario.{what}: row {} has {} entries, expected {c}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl MatrixScheduleConfig {
    pub fn build(&self, what: &str) -> Result<MatrixSchedule> {
        let list = |ms: &[Vec<Vec<f64>>]| ms.iter().map(|m| matrix(m, what)).collect::<Result<Vec<_>>>();
        match self {
            MatrixScheduleConfig::Constant { matrix: m } => Ok(MatrixSchedule::constant(matrix(m, what)?)),
            MatrixScheduleConfig::Periodic { matrices } => MatrixSchedule::periodic(list(matrices)?),
            MatrixScheduleConfig::Table { matrices } => MatrixSchedule::table(list(matrices)?),
            MatrixScheduleConfig::Zero { rows, cols } => Ok(MatrixSchedule::zero(*rows, *cols)),
            MatrixScheduleConfig::Identity { size } => Ok(MatrixSchedule::identity(*size)),
        }
    }

    /// The config form of a schedule.
    pub fn from_schedule(s: &MatrixSchedule) -> Self {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect();
        match s {
            MatrixSchedule::Constant(m) => MatrixScheduleConfig::Constant { matrix: rows(m) },
            MatrixSchedule::Periodic(ms) => MatrixScheduleConfig::Periodic {
                matrices: ms.iter().map(rows).collect(),
            },
            MatrixSchedule::Table(ms) => MatrixScheduleConfig::Table {
                matrices: ms.iter().map(rows).collect(),
            },
            MatrixSchedule::Zero { rows, cols } => MatrixScheduleConfig::Zero { rows: *rows, cols: *cols },
        }
    }
}

impl ScalarScheduleConfig {
    fn build(&self) -> Result<ScalarSchedule> {
        match self {
            ScalarScheduleConfig::Constant { value } => Ok(ScalarSchedule::Constant(*value)),
            ScalarScheduleConfig::Periodic { values } | ScalarScheduleConfig::Table { values } if values.is_empty() => {
                Err(Error::Config("scenario.noise_gain: empty schedule".into()))
            }
            ScalarScheduleConfig::Periodic { values } => Ok(ScalarSchedule::Periodic(values.clone())),
            ScalarScheduleConfig::Table { values } => Ok(ScalarSchedule::Table(values.clone())),
        }
    }
}

impl AvailabilityConfig {
    fn build(&self) -> AvailabilitySchedule {
        match self {
            AvailabilityConfig::Always => AvailabilitySchedule::Always,
            AvailabilityConfig::Periodic { flags } => AvailabilitySchedule::Periodic(flags.clone()),
            AvailabilityConfig::Table { flags } => AvailabilitySchedule::Table(flags.clone()),
            AvailabilityConfig::LogSteps { offset } => AvailabilitySchedule::LogSteps { offset: *offset },
        }
    }

    fn from_schedule(s: &AvailabilitySchedule) -> Self {
        match s {
            AvailabilitySchedule::Always => AvailabilityConfig::Always,
            AvailabilitySchedule::Periodic(f) => AvailabilityConfig::Periodic { flags: f.clone() },
            AvailabilitySchedule::Table(f) => AvailabilityConfig::Table { flags: f.clone() },
            AvailabilitySchedule::LogSteps { offset } => AvailabilityConfig::LogSteps { offset: *offset },
        }
    }
}

impl ExplicitScenario {
    pub fn build(&self) -> Result<SystemModel> {
        let k = self.outputs.len();
        let m = self.theta0_mean.len();
        let outputs = self
            .outputs
            .iter()
            .enumerate()
            .map(|(i, h)| h.build(&format!("outputs[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let noise_gain = match &self.noise_gain {
            Some(gs) => gs.iter().map(ScalarScheduleConfig::build).collect::<Result<Vec<_>>>()?,
            None => vec![ScalarSchedule::Constant(1.0); k],
        };
        let availability = match &self.availability {
            Some(a) => a.iter().map(AvailabilityConfig::build).collect(),
            None => vec![AvailabilitySchedule::Always; k],
        };
        let theta0_cov = match &self.theta0_cov {
            Some(rows) => matrix(rows, "theta0_cov")?,
            None => DMatrix::zeros(m, m),
        };
        SystemModel::new(ModelParts {
            dynamics: self.dynamics.build("dynamics")?,
            noise_input: self.noise_input.build("noise_input")?,
            outputs,
            noise_gain,
            availability,
            process_noise: self.process_noise.clone(),
            obs_noise: self.obs_noise.clone(),
            theta0_mean: DVector::from_column_slice(&self.theta0_mean),
            theta0_cov,
            reward_cap: self.reward_cap,
        })
    }

    /// Describes an existing model schedule by schedule.
    pub fn from_model(model: &SystemModel) -> Self {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect();
        let scalar = |s: &ScalarSchedule| match s {
            ScalarSchedule::Constant(v) => ScalarScheduleConfig::Constant { value: *v },
            ScalarSchedule::Periodic(v) => ScalarScheduleConfig::Periodic { values: v.clone() },
            ScalarSchedule::Table(v) => ScalarScheduleConfig::Table { values: v.clone() },
        };
        Self {
            dynamics: MatrixScheduleConfig::from_schedule(&model.dynamics),
            noise_input: MatrixScheduleConfig::from_schedule(&model.noise_input),
            outputs: model.outputs.iter().map(MatrixScheduleConfig::from_schedule).collect(),
            noise_gain: Some(model.noise_gain.iter().map(scalar).collect()),
            availability: Some(model.availability.iter().map(AvailabilityConfig::from_schedule).collect()),
            process_noise: model.process_noise.clone(),
            obs_noise: model.obs_noise.clone(),
            theta0_mean: model.theta0_mean.iter().cloned().collect(),
            theta0_cov: Some(rows(&model.theta0_cov)),
            reward_cap: model.reward_cap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARK: &str = r#"{
  "scenario": { "kind": "park" },
  "policy": { "sigma": "daily_spread" },
  "run": { "horizon": 200, "replications": 1000, "seed": 2024 }
}"#;

    #[test]
    fn minimal_park_config() {
        let config = ExperimentConfig::from_json(PARK).unwrap();
        assert_eq!(config.scenario, ScenarioConfig::Park(ParkScenario::default()));
        assert_eq!(config.policy.schedule, ExplorationSchedule::UcbNormal);
        assert_eq!(config.tail.times, vec![50, 100, 200]);
        let model = config.build_model().unwrap();
        assert!((config.sigma(&model, None).unwrap() - 240.7).abs() < 0.05);
    }

    #[test]
    fn missing_scenario_is_a_config_error() {
        let err = ExperimentConfig::from_json(r#"{ "run": { "horizon": 5 } }"#).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("scenario") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "{\n  \"scenario\": { \"kind\": \"park\" },\n  \"run\": { \"horizon\": \"long\" }\n}";
        let msg = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn semantic_errors_point_at_their_block() {
        let text = "{\n  \"scenario\": { \"kind\": \"park\" },\n  \"policy\": { \"sigma\": -1.0 }\n}";
        let msg = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("policy.sigma"), "{msg}");
    }

    #[test]
    fn malformed_matrix_is_rejected() {
        let text = r#"{
  "scenario": {
    "kind": "explicit",
    "dynamics": { "kind": "constant", "matrix": [[1.0, 0.0], [0.0]] },
    "noise_input": { "kind": "zero", "rows": 2, "cols": 1 },
    "outputs": [{ "kind": "constant", "matrix": [[1.0, 0.0]] }],
    "process_noise": { "kind": "zero" },
    "obs_noise": [{ "kind": "uniform_symmetric", "half_width": 0.1 }],
    "theta0_mean": [1.0, 2.0],
    "reward_cap": 5.0
  }
}"#;
        let msg = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{ "scenario": { "kind": "park", "thetabar": [1.0] } }"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn park_round_trips_through_config_and_explicit_form() {
        let scenario = ParkScenario::with_process_noise();
        let config = ScenarioConfig::Park(scenario.clone());
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        let model = build_park(&scenario).unwrap();
        assert_eq!(back.build().unwrap(), model);

        let explicit = ScenarioConfig::Explicit(Box::new(ExplicitScenario::from_model(&model)));
        let text = serde_json::to_string(&explicit).unwrap();
        let rebuilt = serde_json::from_str::<ScenarioConfig>(&text).unwrap().build().unwrap();
        for t in 1..=30 {
            assert_eq!(rebuilt.dynamics.eval(t), model.dynamics.eval(t));
            assert_eq!(rebuilt.noise_input.eval(t), model.noise_input.eval(t));
            for i in 0..5 {
                assert_eq!(rebuilt.outputs[i].eval(t), model.outputs[i].eval(t));
                assert_eq!(rebuilt.is_available(i, t), model.is_available(i, t));
            }
        }
        assert_eq!(rebuilt, model);
    }

    #[test]
    fn digest_ignores_workers_and_output_but_not_seed() {
        let base = ExperimentConfig::from_json(PARK).unwrap();
        let mut other = base.clone();
        other.apply(&Overrides {
            workers: Some(8),
            out: Some("elsewhere".into()),
            ..Overrides::default()
        });
        assert_eq!(base.digest(), other.digest());
        other.apply(&Overrides {
            seed: Some(1),
            ..Overrides::default()
        });
        assert_ne!(base.digest(), other.digest());
        assert_eq!(base.digest().len(), 64);
    }

    #[test]
    fn sigma_rules() {
        let mut config = ExperimentConfig::from_json(PARK).unwrap();
        let model = config.build_model().unwrap();
        config.policy.sigma = SigmaChoice::Rule(SigmaRule::HalfCap);
        assert_eq!(config.sigma(&model, None).unwrap(), model.reward_cap / 2.0);
        config.policy.sigma = SigmaChoice::Rule(SigmaRule::Certificate);
        assert_eq!(config.sigma(&model, None).unwrap(), model.reward_cap / 2.0);
        let cert = crate::assumptions::certify(&model, 20).unwrap();
        assert!((config.sigma(&model, Some(&cert)).unwrap() - (2500.0f64 / 3.0).sqrt()).abs() < 1e-9);
        config.policy.sigma = SigmaChoice::Value(3.5);
        assert_eq!(config.sigma(&model, None).unwrap(), 3.5);
    }

    #[test]
    fn daily_spread_needs_a_park() {
        let text = r#"{
  "scenario": { "kind": "static", "means": [0.9, 0.5], "half_widths": [0.1, 0.1] },
  "policy": { "sigma": "daily_spread" }
}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }
}
