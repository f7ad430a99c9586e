//! Evaluates the modelling assumptions for the park scenarios and for a
//! static instance with two identical arms, which has no optimal arm.
//!
//! ```text
//! cargo run --example check_assumptions
//! ```

use dmab::assumptions::{availability_budget, certify};
use dmab::linsys::AvailabilitySchedule;
use dmab::scenarios::{build_park, build_static, unavailability_schedule, ParkScenario};

fn main() -> dmab::Result<()> {
    let horizon = 200;
    let cases = [
        ("park", build_park(&ParkScenario::default())?),
        ("park with process noise", build_park(&ParkScenario::with_process_noise())?),
        ("identical arms", build_static(&[0.5, 0.5], &[0.1, 0.1])?),
    ];
    for (label, model) in &cases {
        let cert = certify(model, horizon)?;
        println!("{label}: passed = {}", cert.passed());
        println!("{}", serde_json::to_string_pretty(&cert.summary())?);
    }

    let budget = availability_budget(&AvailabilitySchedule::LogSteps { offset: 1 }, horizon)?;
    let zeros: Vec<usize> = unavailability_schedule(1, horizon)
        .iter()
        .enumerate()
        .filter(|(_, up)| !**up)
        .map(|(t, _)| t + 1)
        .collect();
    println!(
        "optimal park arm unavailable at {zeros:?}; {} outages by step {horizon}, worst gamma {:.4}",
        budget.counts[horizon - 1],
        budget.worst_gamma
    );
    Ok(())
}
