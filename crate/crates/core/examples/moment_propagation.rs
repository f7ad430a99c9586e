//! Propagates the exact state moments of the park model with process noise
//! and checks them against a direct Monte Carlo simulation of the system.
//!
//! ```text
//! cargo run --release --example moment_propagation
//! ```

use dmab::linsys::{closed_form_cov, MomentTrajectory};
use dmab::noise::{derive_stream, StreamKey, StreamRole};
use dmab::scenarios::{build_park, ParkScenario};

fn main() -> dmab::Result<()> {
    let model = build_park(&ParkScenario::with_process_noise())?;
    let t = 30;
    let traj = MomentTrajectory::compute(&model, t);
    let exact = &traj.states[t];

    // Recursion and closed form agree.
    let closed = closed_form_cov(&model, t);
    let rel = (&closed - &exact.cov).norm() / exact.cov.norm();
    println!("step {t}: recursive vs closed-form covariance, relative difference {rel:.2e}");

    let runs = 20_000;
    let m = model.state_dim();
    let mut sum = nalgebra::DVector::<f64>::zeros(m);
    let mut sumsq = nalgebra::DVector::<f64>::zeros(m);
    for rep in 0..runs {
        let mut init = derive_stream(StreamKey::new(1, rep, StreamRole::InitialState));
        let mut process = derive_stream(StreamKey::new(1, rep, StreamRole::ProcessNoise));
        let mut theta = model.sample_initial_state(&mut init);
        for s in 1..=t {
            theta = model.step_state(&theta, s, &mut process)?;
        }
        sum += &theta;
        sumsq += theta.component_mul(&theta);
    }
    let n = runs as f64;
    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "i", "exact", "simulated", "se", "var");
    for i in 0..m {
        let mean = sum[i] / n;
        let var = sumsq[i] / n - mean * mean;
        let se = (var / n).sqrt();
        println!("{:>4} {:>10.2} {:>10.2} {:>10.3} {:>10.1}", i + 1, exact.mean[i], mean, se, exact.cov[(i, i)]);
    }
    Ok(())
}
