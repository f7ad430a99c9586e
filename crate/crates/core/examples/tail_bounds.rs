//! Empirical check of the sample-mean tail bound on the park model: arms are
//! pulled uniformly at random and the frequency of large deviations of the
//! sample mean is compared with `ν ln t / exp(2κϑ)`.
//!
//! Without process noise every cell passes. With process noise the state is
//! a random walk shared by all pulls of an arm, the deviations no longer
//! average out, and the largest thresholds at `t = 200` are exceeded.
//!
//! ```text
//! cargo run --release --example tail_bounds
//! ```

use dmab::bandit::{TailConstants, DEFAULT_ETA};
use dmab::linsys::SystemModel;
use dmab::montecarlo::verify_tail;
use dmab::scenarios::{build_park, ParkScenario};

fn main() -> dmab::Result<()> {
    for (label, scenario) in [
        ("no process noise", ParkScenario::default()),
        ("uniform process noise", ParkScenario::with_process_noise()),
    ] {
        println!("{label}");
        run(&build_park(&scenario)?)?;
    }
    Ok(())
}

fn run(model: &SystemModel) -> dmab::Result<()> {
    let tail = TailConstants::new(DEFAULT_ETA, model.reward_cap)?;
    println!("chi = {:.2}, kappa = {:.3e}, nu = {:.4}", tail.chi, tail.kappa, tail.nu);

    // Thresholds small enough for the bound to bite as well as the grid
    // used for acceptance.
    let chi2 = tail.chi * tail.chi;
    let varthetas: Vec<f64> = [0.01, 0.05, 0.5, 1.0, 2.0, 4.0].iter().map(|s| s * chi2).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = verify_tail(model, &tail, &[50, 100, 200], &varthetas, 2000, 3, workers)?;

    println!("{:>4} {:>8} {:>9} {:>9} {:>9} pass", "t", "theta/x2", "upper", "lower", "bound");
    for row in &report.rows {
        println!(
            "{:>4} {:>8.2} {:>9.4} {:>9.4} {:>9.4} {}",
            row.t,
            row.vartheta / chi2,
            row.empirical_upper,
            row.empirical_lower,
            row.bound,
            row.pass
        );
    }
    println!("all cells pass: {}", report.passed());
    Ok(())
}
