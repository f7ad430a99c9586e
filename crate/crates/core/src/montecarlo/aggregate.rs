use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, Truth};
use super::stats::mean_se;
use crate::bandit::{ExplorationSchedule, InitMode, PolicyState};
use crate::error::{Error, Result};
use crate::linsys::SystemModel;
use crate::noise::EpisodeStreams;

/// A policy recipe, instantiated fresh for each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub schedule: ExplorationSchedule,
    pub sigma: f64,
    pub init: InitMode,
}

impl PolicySpec {
    pub fn build(&self, arms: usize) -> Result<PolicyState> {
        PolicyState::new(arms, self.schedule, self.sigma, self.init.clone())
    }
}

/// Size, seed and parallelism of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSpec {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

/// Which pulls count as "optimal" in `T_{i*}(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimalTarget {
    /// A single fixed arm, normally the certified `i*`.
    Fixed(usize),
    /// The availability-aware best arm of each round.
    PerStep,
}

/// Means and standard errors over replications for `n = 1..=N`.
///
/// Standard errors are `None` when there is a single replication.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub mean_s: Vec<f64>,
    pub se_s: Option<Vec<f64>>,
    pub mean_r: Vec<f64>,
    pub se_r: Option<Vec<f64>>,
    pub mean_topt: Vec<f64>,
    pub se_topt: Option<Vec<f64>>,
    /// `mean_pulls[i][n - 1]`, the average `T_i(n)`.
    pub mean_pulls: Vec<Vec<f64>>,
    pub support_violations: u64,
    pub skipped_rounds: u64,
}

/// The per-replication curves kept for aggregation.
struct EpisodeCurves {
    s: Vec<f64>,
    r: Vec<f64>,
    topt: Vec<u64>,
    pulls: Vec<Vec<u64>>,
    support_violations: u64,
    skipped: u64,
}

/// Runs `f(replication)` for every replication on a pool of `workers`
/// threads and returns the results in replication order.
pub fn parallel_replications<T, F>(replications: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..replications as u64).into_par_iter().map(&f).collect())
}

/// Runs `replications` independent episodes and reduces them in
/// replication order, so the result is a function of the seed alone.
pub fn aggregate(
    model: &SystemModel,
    policy: &PolicySpec,
    target: OptimalTarget,
    spec: &RunSpec,
) -> Result<AggregateResult> {
    if spec.replications == 0 {
        return Err(Error::Config("at least one replication is needed".into()));
    }
    if spec.horizon == 0 {
        return Err(Error::Config("the horizon must be at least 1".into()));
    }
    if let OptimalTarget::Fixed(arm) = target {
        if arm >= model.arms() {
            return Err(Error::Domain(format!("optimal arm {} out of range", arm + 1)));
        }
    }
    let truth = Truth::new(model, spec.horizon);
    let k = model.arms();
    let curves = parallel_replications(spec.replications, spec.workers, |rep| {
        let mut streams = EpisodeStreams::new(spec.seed, rep, k);
        let mut state = policy.build(k)?;
        let ledger = run_episode(model, &truth, &mut state, spec.horizon, &mut streams)?;
        let pulls: Vec<Vec<u64>> = (0..k).map(|i| ledger.pull_curve(i)).collect();
        let topt = match target {
            OptimalTarget::Fixed(arm) => pulls[arm].clone(),
            OptimalTarget::PerStep => ledger.best_pull_curve(&truth),
        };
        Ok(EpisodeCurves {
            s: ledger.reward_sum,
            r: ledger.regret_sum,
            topt,
            pulls,
            support_violations: ledger.support_violations,
            skipped: ledger.skipped as u64,
        })
    })?;
    Ok(reduce(&curves, spec, k))
}

fn reduce(curves: &[EpisodeCurves], spec: &RunSpec, k: usize) -> AggregateResult {
    let n = spec.horizon;
    let column = |f: &dyn Fn(&EpisodeCurves) -> f64| -> (f64, Option<f64>) {
        let values: Vec<f64> = curves.iter().map(f).collect();
        mean_se(&values)
    };
    let mut mean_s = Vec::with_capacity(n);
    let mut mean_r = Vec::with_capacity(n);
    let mut mean_topt = Vec::with_capacity(n);
    let (mut se_s, mut se_r, mut se_topt) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..n {
        let (m, se) = column(&|c| c.s[j]);
        mean_s.push(m);
        se_s.extend(se);
        let (m, se) = column(&|c| c.r[j]);
        mean_r.push(m);
        se_r.extend(se);
        let (m, se) = column(&|c| c.topt[j] as f64);
        mean_topt.push(m);
        se_topt.extend(se);
    }
    let mean_pulls = (0..k)
        .map(|i| (0..n).map(|j| column(&|c| c.pulls[i][j] as f64).0).collect())
        .collect();
    let has_se = spec.replications > 1;
    AggregateResult {
        horizon: n,
        replications: spec.replications,
        seed: spec.seed,
        mean_s,
        se_s: has_se.then_some(se_s),
        mean_r,
        se_r: has_se.then_some(se_r),
        mean_topt,
        se_topt: has_se.then_some(se_topt),
        mean_pulls,
        support_violations: curves.iter().map(|c| c.support_violations).sum(),
        skipped_rounds: curves.iter().map(|c| c.skipped).sum(),
    }
}
