//! Loads an experiment from a JSON file, prints its certificate and runs
//! it, writing the same files as `dmab simulate`.
//!
//! ```text
//! cargo run --release --example custom_config -- configs/explicit.json /tmp/explicit
//! ```

use std::path::PathBuf;

use dmab::cli;
use dmab::config::{ExperimentConfig, Overrides};

fn main() -> dmab::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/explicit.json"));
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("dmab-custom").display().to_string());

    let mut config = ExperimentConfig::load(&path)?;
    config.apply(&Overrides {
        out: Some(out),
        ..Overrides::default()
    });
    println!("config digest {}", config.digest());

    let model = config.build_model()?;
    let cert = dmab::assumptions::certify(&model, config.run.horizon)?;
    println!("{}", serde_json::to_string_pretty(&cert.summary())?);
    println!("sigma = {:.4}", config.sigma(&model, Some(&cert))?);

    let outcome = cli::cmd_simulate(&config)?;
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
