//! Ready-made experiment models: the periodic park-visitor example and a
//! stationary bandit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsys::{log_step_available, AvailabilitySchedule, MatrixSchedule, ModelParts, ScalarSchedule, SystemModel};
use crate::noise::NoiseSpec;

/// Process noise entering each arm's block of the park model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessNoiseToggle {
    None,
    Uniform { half_width: f64 },
}

/// Locations whose visitor counts follow a daily profile.
///
/// Arm `i` has a `p`-dimensional state block `θ̄_i (α_1, …, α_p)` rotated
/// one position per step by a cyclic shift, and the reward reads the first
/// entry of the block. The arm with the largest `θ̄_i` is optimal and it is
/// the only one subject to unavailability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParkScenario {
    pub theta_bar: Vec<f64>,
    pub profile: Vec<f64>,
    pub process_noise: ProcessNoiseToggle,
    pub obs_half_width: f64,
    /// `n_i` in the log-step unavailability schedule of the optimal arm.
    pub unavailable_offset: u64,
    /// Declared reward cap; defaults to the largest noiseless reward plus
    /// the observation half-width.
    pub reward_cap: Option<f64>,
}

impl Default for ParkScenario {
    fn default() -> Self {
        Self {
            theta_bar: vec![400.0, 350.0, 750.0, 1000.0, 526.0],
            profile: vec![0.75, 1.0, 4.0 / 3.0],
            process_noise: ProcessNoiseToggle::None,
            obs_half_width: 50.0,
            unavailable_offset: 1,
            reward_cap: None,
        }
    }
}

impl ParkScenario {
    pub fn with_process_noise() -> Self {
        Self {
            process_noise: ProcessNoiseToggle::Uniform { half_width: 50.0 },
            ..Self::default()
        }
    }

    pub fn arms(&self) -> usize {
        self.theta_bar.len()
    }

    pub fn period(&self) -> usize {
        self.profile.len()
    }

    /// Index of the optimal arm (largest `θ̄_i`).
    pub fn optimal_arm(&self) -> Result<usize> {
        let (best, &value) = self
            .theta_bar
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Config("park scenario needs at least one arm".into()))?;
        if self.theta_bar.iter().filter(|&&v| v == value).count() > 1 {
            return Err(Error::Config("park scenario needs a unique largest amplitude".into()));
        }
        Ok(best)
    }

    pub fn validate(&self) -> Result<()> {
        if self.profile.len() < 2 {
            return Err(Error::Config("daily profile needs a period of at least 2".into()));
        }
        if self.profile.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Config("daily profile entries must be positive".into()));
        }
        let product: f64 = self.profile.iter().product();
        if (product - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("daily profile must multiply to 1, got {product}")));
        }
        if self.theta_bar.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("amplitudes must be finite and nonnegative".into()));
        }
        if !(self.obs_half_width.is_finite() && self.obs_half_width >= 0.0) {
            return Err(Error::Config("observation half-width must be nonnegative".into()));
        }
        if let ProcessNoiseToggle::Uniform { half_width } = self.process_noise {
            if !(half_width.is_finite() && half_width >= 0.0) {
                return Err(Error::Config("process half-width must be nonnegative".into()));
            }
        }
        self.optimal_arm()?;
        Ok(())
    }

    /// Spread of a single reward around the optimal arm's average over one
    /// period: the population variance of `θ̄_{i*} α_j` over the profile
    /// plus the observation-noise variance, square-rooted. A sample mean
    /// that mixes phases sees roughly this much scatter per pull.
    pub fn daily_reward_spread(&self) -> Result<f64> {
        let top = self.theta_bar[self.optimal_arm()?];
        let p = self.profile.len() as f64;
        let mean = self.profile.iter().sum::<f64>() / p;
        let var = self.profile.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / p;
        Ok((top * top * var + self.obs_half_width.powi(2) / 3.0).sqrt())
    }

    pub fn default_reward_cap(&self) -> f64 {
        let top = self.theta_bar.iter().cloned().fold(0.0, f64::max);
        let peak = self.profile.iter().cloned().fold(0.0, f64::max);
        top * peak + self.obs_half_width
    }
}

/// The `p×p` cyclic shift `e_j ↦ e_{j-1}`, i.e. `(Aθ)_j = θ_{j+1}`.
pub fn cyclic_shift(p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if j == (i + 1) % p { 1.0 } else { 0.0 })
}

pub fn build_park(scenario: &ParkScenario) -> Result<SystemModel> {
    scenario.validate()?;
    let k = scenario.arms();
    let p = scenario.period();
    let m = k * p;
    let star = scenario.optimal_arm()?;

    let shift = cyclic_shift(p);
    let mut a = DMatrix::zeros(m, m);
    for i in 0..k {
        a.view_mut((i * p, i * p), (p, p)).copy_from(&shift);
    }

    let (noise_input, process_noise) = match scenario.process_noise {
        ProcessNoiseToggle::None => (MatrixSchedule::zero(m, 1), NoiseSpec::zero(1)),
        ProcessNoiseToggle::Uniform { half_width } => {
            // One scalar perturbation per arm, shared by its whole block.
            let mut b = DMatrix::zeros(m, k);
            for i in 0..k {
                b.view_mut((i * p, i), (p, 1)).fill(1.0);
            }
            (MatrixSchedule::constant(b), NoiseSpec::uniform(half_width, k))
        }
    };

    let outputs = (0..k)
        .map(|i| {
            let mut h = DMatrix::zeros(1, m);
            h[(0, i * p)] = 1.0;
            MatrixSchedule::constant(h)
        })
        .collect();

    let theta0 = DVector::from_iterator(
        m,
        scenario.theta_bar.iter().flat_map(|tb| scenario.profile.iter().map(move |a| tb * a)),
    );

    let availability = (0..k)
        .map(|i| {
            if i == star {
                AvailabilitySchedule::LogSteps {
                    offset: scenario.unavailable_offset,
                }
            } else {
                AvailabilitySchedule::Always
            }
        })
        .collect();

    SystemModel::new(ModelParts {
        dynamics: MatrixSchedule::constant(a),
        noise_input,
        outputs,
        noise_gain: vec![ScalarSchedule::Constant(1.0); k],
        availability,
        process_noise,
        obs_noise: vec![NoiseSpec::uniform(scenario.obs_half_width, 1); k],
        theta0_mean: theta0,
        theta0_cov: DMatrix::zeros(m, m),
        reward_cap: scenario.reward_cap.unwrap_or_else(|| scenario.default_reward_cap()),
    })
}

/// Availability flags for `t = 1..=horizon` of the log-step schedule with
/// offset `n_i`: unavailable exactly when `[ln(n_i + t + 1)] - [ln(n_i + t)] = 1`.
pub fn unavailability_schedule(offset: u64, horizon: usize) -> Vec<bool> {
    (1..=horizon as u64).map(|t| log_step_available(offset, t)).collect()
}

/// A stationary bandit: `A ≡ I`, `B ≡ 0`, every arm always available, arm
/// `i` paying `means[i]` plus uniform noise of half-width `half_widths[i]`.
pub fn build_static(means: &[f64], half_widths: &[f64]) -> Result<SystemModel> {
    let k = means.len();
    if k == 0 {
        return Err(Error::Config("static bandit needs at least one arm".into()));
    }
    if half_widths.len() != k {
        return Err(Error::dim("noise half-widths", k, half_widths.len()));
    }
    if means.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::Config("static means must be finite and nonnegative".into()));
    }
    let outputs = (0..k)
        .map(|i| {
            let mut h = DMatrix::zeros(1, k);
            h[(0, i)] = 1.0;
            MatrixSchedule::constant(h)
        })
        .collect();
    let cap = means.iter().zip(half_widths).map(|(m, w)| m + w).fold(0.0, f64::max);
    SystemModel::new(ModelParts {
        dynamics: MatrixSchedule::identity(k),
        noise_input: MatrixSchedule::zero(k, 1),
        outputs,
        noise_gain: vec![ScalarSchedule::Constant(1.0); k],
        availability: vec![AvailabilitySchedule::Always; k],
        process_noise: NoiseSpec::zero(1),
        obs_noise: half_widths.iter().map(|w| NoiseSpec::uniform(*w, 1)).collect(),
        theta0_mean: DVector::from_column_slice(means),
        theta0_cov: DMatrix::zeros(k, k),
        reward_cap: if cap > 0.0 { cap } else { 1.0 },
    })
}
