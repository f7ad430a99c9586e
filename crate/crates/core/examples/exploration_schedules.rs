//! The available exploration schedules `Ψ(t)` and their effect on the
//! regret of the static two-armed bandit.
//!
//! ```text
//! cargo run --release --example exploration_schedules
//! ```

use dmab::bandit::{ExplorationSchedule, InitMode};
use dmab::montecarlo::{aggregate, OptimalTarget, PolicySpec, RunSpec};
use dmab::scenarios::build_static;

fn main() -> dmab::Result<()> {
    let schedules = [
        ("ucb-normal", ExplorationSchedule::UcbNormal),
        ("ucl quantile", ExplorationSchedule::UclQuantile),
        ("2 ln t", ExplorationSchedule::GenericLog { alpha: 2.0, beta: 2.0 }),
    ];

    println!("{:>6} {:>12} {:>12} {:>12}", "t", schedules[0].0, schedules[1].0, schedules[2].0);
    for t in [1, 2, 10, 100, 1000] {
        let psi: Vec<f64> = schedules.iter().map(|(_, s)| s.psi(t)).collect::<dmab::Result<_>>()?;
        println!("{t:>6} {:>12.3} {:>12.3} {:>12.3}", psi[0], psi[1], psi[2]);
    }
    for (name, s) in &schedules {
        let (lo, hi) = s.log_bounds(1000);
        println!("{name}: {lo:.3} ln t <= psi(t) <= {hi:.3} ln t on 2..=1000");
    }

    let model = build_static(&[0.9, 0.5], &[0.1, 0.1])?;
    let spec = RunSpec {
        horizon: 1000,
        replications: 200,
        seed: 7,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    for (name, schedule) in schedules {
        let policy = PolicySpec {
            schedule,
            sigma: 0.5,
            init: InitMode::SampleEachOnce,
        };
        let agg = aggregate(&model, &policy, OptimalTarget::Fixed(0), &spec)?;
        println!("{name:>12}: R_1000 = {:.2}, suboptimal pulls {:.1}", agg.mean_r[999], agg.mean_pulls[1][999]);
    }
    Ok(())
}
