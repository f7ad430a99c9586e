//! Compares the reference bound on the expected number of suboptimal pulls
//! with UCB-Normal on the park model. The exploration scale is half the
//! reward cap, large enough for the series term of the bound to converge.
//!
//! ```text
//! cargo run --release --example theorem_bound
//! ```

use dmab::assumptions::certify;
use dmab::bandit::{ExplorationSchedule, InitMode, TailConstants, DEFAULT_ETA};
use dmab::montecarlo::{aggregate, theorem_bound, BoundParams, OptimalTarget, PolicySpec, RunSpec};
use dmab::scenarios::{build_park, ParkScenario};

fn main() -> dmab::Result<()> {
    let horizon = 200;
    let model = build_park(&ParkScenario::default())?;
    let cert = certify(&model, horizon)?;
    let sigma = model.reward_cap / 2.0;
    let params = BoundParams {
        schedule: ExplorationSchedule::UcbNormal,
        sigma,
        tail: TailConstants::new(DEFAULT_ETA, model.reward_cap)?,
        l: 1,
        horizon,
    };
    let curve = theorem_bound(&cert, &params)?;
    println!("exponent 2 kappa sigma^2 alpha = {:.2}, diverges = {}", curve.exponent, curve.diverges);
    println!("c0 = {:.4e}, c1 = {:.4e}", curve.c0, curve.c1);

    let policy = PolicySpec {
        schedule: ExplorationSchedule::UcbNormal,
        sigma,
        init: InitMode::SampleEachOnce,
    };
    let spec = RunSpec {
        horizon,
        replications: 500,
        seed: 9,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let star = cert.optimal_arm.expect("unique optimal arm");
    let agg = aggregate(&model, &policy, OptimalTarget::Fixed(star), &spec)?;

    println!("{:>4} {:>6} {:>12} {:>12}", "n", "arm", "E T_i(n)", "bound");
    for n in [10, 50, 100, 200] {
        for (j, &arm) in curve.arms.iter().enumerate() {
            println!("{:>4} {:>6} {:>12.2} {:>12.1}", n, arm + 1, agg.mean_pulls[arm][n - 1], curve.et_bound[j][n - 1]);
        }
    }
    println!("R_200 = {:.1}, bound {:.4e}", agg.mean_r[horizon - 1], curve.r_bound[horizon - 1]);
    Ok(())
}
