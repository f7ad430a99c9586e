use serde::Serialize;

use super::aggregate::parallel_replications;
use super::episode::{run_episode, RunLedger, Truth, UniformRandom};
use crate::bandit::TailConstants;
use crate::error::{Error, Result};
use crate::linsys::SystemModel;
use crate::noise::{derive_stream, EpisodeStreams, Stream, StreamKey, StreamRole};

/// One `(t, ϑ)` cell of a tail verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub t: usize,
    pub vartheta: f64,
    /// Largest frequency over arms of `X̂_i^t ≥ μ̂_i^t + sqrt(ϑ/T_i(t))`.
    pub empirical_upper: f64,
    /// Largest frequency over arms of `X̂_i^t ≤ μ̂_i^t - sqrt(ϑ/T_i(t))`.
    pub empirical_lower: f64,
    /// `ν ln t / exp(2κϑ)`, clamped to `[0, 1]`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub replications: usize,
    pub rows: Vec<TailRow>,
    pub support_violations: u64,
}

impl TailReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Sample mean `X̂_i^t` and time-averaged true mean `μ̂_i^t` of every arm
/// over rounds `1..=t`, or `None` for an arm not yet pulled.
pub fn estimates_at(ledger: &RunLedger, arms: usize, t: usize) -> Vec<Option<(f64, f64, u64)>> {
    let mut sums = vec![(0.0, 0.0, 0u64); arms];
    for step in &ledger.steps[..t] {
        if let Some(arm) = step.choice {
            let s = &mut sums[arm];
            s.0 += step.reward;
            s.1 += step.expected;
            s.2 += 1;
        }
    }
    sums.into_iter()
        .map(|(x, mu, n)| (n > 0).then(|| (x / n as f64, mu / n as f64, n)))
        .collect()
}

/// Checks the sample-mean tail bounds empirically: arms are pulled
/// uniformly at random and, at each grid time, the deviation of `X̂_i^t`
/// from `μ̂_i^t` is compared against `sqrt(ϑ/T_i(t))`. A cell passes when
/// both frequencies stay within the bound plus three binomial standard
/// errors.
pub fn verify_tail(
    model: &SystemModel,
    tail: &TailConstants,
    times: &[usize],
    varthetas: &[f64],
    replications: usize,
    seed: u64,
    workers: usize,
) -> Result<TailReport> {
    if replications == 0 {
        return Err(Error::Config("at least one replication is needed".into()));
    }
    if times.iter().any(|t| *t < 2) {
        return Err(Error::Domain("tail grid times must be at least 2".into()));
    }
    if varthetas.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("tail grid thresholds must be positive".into()));
    }
    let horizon = times.iter().copied().max().unwrap_or(0);
    if horizon == 0 {
        return Err(Error::Domain("empty tail grid".into()));
    }
    let k = model.arms();
    let truth = Truth::new(model, horizon);
    let cells = times.len() * varthetas.len();

    // Per replication: for each cell and arm, (upper hit, lower hit).
    let hits = parallel_replications(replications, workers, |rep| {
        let mut streams = EpisodeStreams::new(seed, rep, k);
        let rng: Stream = derive_stream(StreamKey::new(seed, rep, StreamRole::TieBreak));
        let mut selector = UniformRandom { rng };
        let ledger = run_episode(model, &truth, &mut selector, horizon, &mut streams)?;
        let mut out = vec![(false, false); cells * k];
        for (ti, &t) in times.iter().enumerate() {
            for (arm, est) in estimates_at(&ledger, k, t).into_iter().enumerate() {
                let Some((x, mu, n)) = est else { continue };
                for (vi, &v) in varthetas.iter().enumerate() {
                    let width = (v / n as f64).sqrt();
                    out[(ti * varthetas.len() + vi) * k + arm] = (x >= mu + width, x <= mu - width);
                }
            }
        }
        Ok((out, ledger.support_violations))
    })?;

    let r = replications as f64;
    let mut rows = Vec::with_capacity(cells);
    for (ti, &t) in times.iter().enumerate() {
        for (vi, &v) in varthetas.iter().enumerate() {
            let cell = ti * varthetas.len() + vi;
            let mut upper: f64 = 0.0;
            let mut lower: f64 = 0.0;
            for arm in 0..k {
                let idx = cell * k + arm;
                let up = hits.iter().filter(|(h, _)| h[idx].0).count() as f64 / r;
                let lo = hits.iter().filter(|(h, _)| h[idx].1).count() as f64 / r;
                upper = upper.max(up);
                lower = lower.max(lo);
            }
            let bound = tail.tail_bound(t, v);
            let slack = 3.0 * (bound * (1.0 - bound) / r).sqrt();
            rows.push(TailRow {
                t,
                vartheta: v,
                empirical_upper: upper,
                empirical_lower: lower,
                bound,
                pass: upper <= bound + slack && lower <= bound + slack,
            });
        }
    }
    Ok(TailReport {
        replications,
        rows,
        support_violations: hits.iter().map(|(_, s)| s).sum(),
    })
}
