//! Reproduces the periodic park experiment with and without process noise:
//! 1000 replications of UCB-Normal over 200 rounds each.
//!
//! ```text
//! cargo run --release --example park_reproduction
//! ```

use dmab::assumptions::certify;
use dmab::bandit::{ExplorationSchedule, InitMode};
use dmab::montecarlo::{aggregate, log_fit_range, OptimalTarget, PolicySpec, RunSpec};
use dmab::scenarios::{build_park, ParkScenario};

fn main() -> dmab::Result<()> {
    let horizon = 200;
    for (label, scenario) in [
        ("no process noise", ParkScenario::default()),
        ("uniform process noise", ParkScenario::with_process_noise()),
    ] {
        let model = build_park(&scenario)?;
        let cert = certify(&model, horizon)?;
        let star = cert.optimal_arm.expect("the park model has a unique optimal arm");
        // Exploration scale: spread of the optimal arm's reward over a day.
        let sigma = scenario.daily_reward_spread()?;
        let policy = PolicySpec {
            schedule: ExplorationSchedule::UcbNormal,
            sigma,
            init: InitMode::SampleEachOnce,
        };
        let spec = RunSpec {
            horizon,
            replications: 1000,
            seed: 2024,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let agg = aggregate(&model, &policy, OptimalTarget::Fixed(star), &spec)?;
        let fit = log_fit_range(&agg.mean_r, 50, horizon);
        let se_s = agg.se_s.as_ref().expect("more than one replication");

        println!("{label}");
        println!("  optimal arm        {}", star + 1);
        println!("  sigma              {sigma:.3}");
        println!("  E(S_200)           {:.1} (se {:.1})", agg.mean_s[horizon - 1], se_s[horizon - 1]);
        println!("  se(S_50)           {:.1}", se_s[49]);
        println!("  E(R_200)           {:.1}", agg.mean_r[horizon - 1]);
        println!("  E(T_opt(200))      {:.1}", agg.mean_topt[horizon - 1]);
        println!("  R_n ~ a ln n + b   a = {:.1}, b = {:.1}, R^2 = {:.4}", fit.slope, fit.intercept, fit.r_squared);
        println!("  support violations {}", agg.support_violations);
    }
    Ok(())
}
