use nalgebra::DVector;
use rand::Rng;

use crate::bandit::PolicyState;
use crate::error::{Error, Result};
use crate::linsys::{MomentTrajectory, SystemModel};
use crate::noise::EpisodeStreams;

/// Anything that picks one available arm per round and learns from the
/// reward it gets back.
pub trait Allocation {
    /// Picks an arm at round `t` (1-based), or `None` if none is available.
    fn select(&mut self, t: usize, available: &[bool]) -> Option<usize>;
    fn observe(&mut self, arm: usize, reward: f64) -> Result<()>;
}

impl Allocation for PolicyState {
    fn select(&mut self, t: usize, available: &[bool]) -> Option<usize> {
        // The bonus at round t uses the rounds completed so far.
        self.set_step(t - 1);
        self.select_arm(available)
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.update(arm, reward)
    }
}

/// Picks uniformly among the available arms, ignoring rewards.
#[derive(Debug, Clone)]
pub struct UniformRandom<R> {
    pub rng: R,
}

impl<R: Rng> Allocation for UniformRandom<R> {
    fn select(&mut self, _t: usize, available: &[bool]) -> Option<usize> {
        let count = available.iter().filter(|a| **a).count();
        if count == 0 {
            return None;
        }
        let pick = self.rng.random_range(0..count);
        available.iter().enumerate().filter(|(_, a)| **a).nth(pick).map(|(i, _)| i)
    }

    fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

/// Propagated means and the availability-aware best arm per step, shared
/// read-only by every replication.
#[derive(Debug, Clone)]
pub struct Truth {
    pub trajectory: MomentTrajectory,
    /// `best[t]`, `None` when no arm is available at `t`.
    pub best: Vec<Option<usize>>,
}

impl Truth {
    pub fn new(model: &SystemModel, horizon: usize) -> Self {
        let trajectory = MomentTrajectory::compute(model, horizon);
        let best = (0..=horizon).map(|t| trajectory.best_available(model, t)).collect();
        Self { trajectory, best }
    }

    pub fn horizon(&self) -> usize {
        self.trajectory.horizon()
    }

    /// `E(X_i^t)`, zero when unavailable.
    pub fn expected(&self, t: usize, arm: usize) -> f64 {
        self.trajectory.expected[t][arm]
    }
}

/// One round of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// `φ_t`, or `None` for a skipped round.
    pub choice: Option<usize>,
    pub reward: f64,
    pub available: Vec<bool>,
    /// `E(X_{φ_t}^t)` from the propagated means.
    pub expected: f64,
    /// `E(X_{φ_t}^t | θ^{t-1}) = γ H A^t θ^{t-1}`.
    pub conditional: f64,
    /// `E(X_{i*_t}^t) - E(X_{φ_t}^t)`.
    pub regret: f64,
}

/// Everything that happened in one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLedger {
    pub steps: Vec<StepRecord>,
    /// `T_i(n)` at the end of the episode.
    pub pulls: Vec<u64>,
    /// `S_n` for `n = 1..=N`: cumulative conditional expected reward.
    pub reward_sum: Vec<f64>,
    /// `R_n` for `n = 1..=N`.
    pub regret_sum: Vec<f64>,
    pub skipped: usize,
    /// Rewards that fell outside `[0, χ_x]`.
    pub support_violations: u64,
}

impl RunLedger {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// `T_i(n)` for `n = 1..=N`.
    pub fn pull_curve(&self, arm: usize) -> Vec<u64> {
        let mut count = 0;
        self.steps
            .iter()
            .map(|s| {
                if s.choice == Some(arm) {
                    count += 1;
                }
                count
            })
            .collect()
    }

    /// Number of rounds up to `n` whose choice was the best available arm.
    pub fn best_pull_curve(&self, truth: &Truth) -> Vec<u64> {
        let mut count = 0;
        self.steps
            .iter()
            .map(|s| {
                if s.choice.is_some() && s.choice == truth.best[s.t] {
                    count += 1;
                }
                count
            })
            .collect()
    }
}

/// Simulates `horizon` rounds: the state evolves, the allocation picks an
/// available arm, the arm's reward is drawn and fed back, and the regret
/// against the availability-aware best arm is booked from the true means.
pub fn run_episode<A: Allocation + ?Sized>(
    model: &SystemModel,
    truth: &Truth,
    allocation: &mut A,
    horizon: usize,
    streams: &mut EpisodeStreams,
) -> Result<RunLedger> {
    if horizon == 0 {
        return Err(Error::Domain("an episode needs at least one round".into()));
    }
    if truth.horizon() < horizon {
        return Err(Error::Domain(format!(
            "true moments cover {} rounds, episode needs {horizon}",
            truth.horizon()
        )));
    }
    if streams.observation.len() != model.arms() {
        return Err(Error::dim("observation streams", model.arms(), streams.observation.len()));
    }
    let k = model.arms();
    let mut theta = model.sample_initial_state(&mut streams.initial);
    let mut steps = Vec::with_capacity(horizon);
    let mut pulls = vec![0u64; k];
    let mut reward_sum = Vec::with_capacity(horizon);
    let mut regret_sum = Vec::with_capacity(horizon);
    let (mut s, mut r) = (0.0, 0.0);
    let mut skipped = 0;
    let mut support_violations = 0;

    for t in 1..=horizon {
        let predicted = model
            .dynamics
            .eval_ref(t)
            .map_or_else(|| DVector::zeros(theta.len()), |a| a * &theta);
        theta = model.step_state(&theta, t, &mut streams.process)?;
        let available = model.availability_mask(t);

        let record = match allocation.select(t, &available) {
            None => {
                if available.iter().any(|a| *a) {
                    return Err(Error::Contract(format!("no arm selected at t = {t} although one was available")));
                }
                skipped += 1;
                StepRecord {
                    t,
                    choice: None,
                    reward: 0.0,
                    available,
                    expected: 0.0,
                    conditional: 0.0,
                    regret: 0.0,
                }
            }
            Some(arm) => {
                if arm >= k || !available[arm] {
                    return Err(Error::Contract(format!("arm {} selected at t = {t} is not available", arm + 1)));
                }
                let reward = model.emit_reward(&theta, arm, t, &mut streams.observation[arm])?;
                if !model.in_support(reward) {
                    support_violations += 1;
                }
                allocation.observe(arm, reward)?;
                pulls[arm] += 1;
                let expected = truth.expected(t, arm);
                let best = truth.best[t].expect("an arm is available");
                StepRecord {
                    t,
                    choice: Some(arm),
                    reward,
                    available,
                    expected,
                    conditional: model.availability[arm].gamma(t) * model.output(arm, t, &predicted),
                    regret: truth.expected(t, best) - expected,
                }
            }
        };
        s += record.conditional;
        r += record.regret;
        reward_sum.push(s);
        regret_sum.push(r);
        steps.push(record);
    }

    Ok(RunLedger {
        steps,
        pulls,
        reward_sum,
        regret_sum,
        skipped,
        support_violations,
    })
}
