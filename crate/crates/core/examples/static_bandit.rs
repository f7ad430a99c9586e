//! A classical two-armed bandit with fixed uniform rewards, driven step by
//! step through the policy API, followed by a Monte Carlo estimate of the
//! regret growth.
//!
//! ```text
//! cargo run --release --example static_bandit
//! ```

use dmab::bandit::{ExplorationSchedule, InitMode, PolicyState};
use dmab::montecarlo::{aggregate, log_fit_range, OptimalTarget, PolicySpec, RunSpec};
use dmab::noise::{derive_stream, StreamKey, StreamRole};
use dmab::scenarios::build_static;

fn main() -> dmab::Result<()> {
    let model = build_static(&[0.9, 0.5], &[0.1, 0.1])?;
    let theta = model.theta0_mean.clone();

    let mut policy = PolicyState::new(2, ExplorationSchedule::UcbNormal, 0.5, InitMode::SampleEachOnce)?;
    let mut rngs: Vec<_> = (0..2)
        .map(|i| derive_stream(StreamKey::new(1, 0, StreamRole::ObsNoise(i))))
        .collect();
    for t in 1..=20 {
        policy.set_step(t - 1);
        let arm = policy.select_arm(&[true, true]).expect("both arms available");
        let reward = model.emit_reward(&theta, arm, t, &mut rngs[arm])?;
        policy.update(arm, reward)?;
        println!("t = {t:>2}  arm {}  reward {reward:.3}  indices {:.3} / {:.3}", arm + 1, policy.index(0), policy.index(1));
    }

    let spec = RunSpec {
        horizon: 1000,
        replications: 200,
        seed: 7,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let policy = PolicySpec {
        schedule: ExplorationSchedule::UcbNormal,
        sigma: 0.5,
        init: InitMode::SampleEachOnce,
    };
    let agg = aggregate(&model, &policy, OptimalTarget::Fixed(0), &spec)?;
    let fit = log_fit_range(&agg.mean_r, 100, 1000);
    println!("E T_2(1000) / 1000 = {:.4}", agg.mean_pulls[1][999] / 1000.0);
    println!("R_n ~ {:.2} ln n + {:.2}, R^2 = {:.4}", fit.slope, fit.intercept, fit.r_squared);
    Ok(())
}
