//! The commands behind the `dmab` binary and the file formats they write.
//!
//! Every command takes an [`ExperimentConfig`] (already merged with
//! command-line overrides) and writes into the configured output
//! directory. CSV files use `.` decimals, LF line endings and 17
//! significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::assumptions::{certify, AssumptionCertificate};
use crate::config::{ExperimentConfig, PolicyConfig, RunConfig, ScenarioConfig, SigmaChoice, SigmaRule};
use crate::error::{Error, Result};
use crate::linsys::SystemModel;
use crate::montecarlo::{
    aggregate, theorem_bound, verify_tail, AggregateResult, BoundCurve, BoundParams, OptimalTarget, PolicySpec,
    RunSpec, TailReport,
};
use crate::scenarios::ParkScenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Contract(_) => EXIT_CONTRACT,
        Error::UndefinedBound(_) => EXIT_CHECK_FAILED,
        _ => EXIT_CONFIG,
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when a check the command performs did not pass.
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// 17 significant digits, the shortest width that round-trips any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, &text, files)
}

/// `n,mean_S,se_S,mean_R,se_R,mean_Topt,se_Topt`, one row per `n`.
pub fn aggregate_csv(agg: &AggregateResult) -> String {
    let mut out = String::from("n,mean_S,se_S,mean_R,se_R,mean_Topt,se_Topt\n");
    let se = |v: &Option<Vec<f64>>, j: usize| opt_float(v.as_ref().map(|v| v[j]));
    for j in 0..agg.horizon {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            j + 1,
            format_float(agg.mean_s[j]),
            se(&agg.se_s, j),
            format_float(agg.mean_r[j]),
            se(&agg.se_r, j),
            format_float(agg.mean_topt[j]),
            se(&agg.se_topt, j),
        )
        .expect("writing to a string");
    }
    out
}

/// A two-quantity `n,mean_X,se_X` table.
fn figure_csv(name: &str, mean: &[f64], se: Option<&Vec<f64>>) -> String {
    let mut out = format!("n,mean_{name},se_{name}\n");
    for (j, m) in mean.iter().enumerate() {
        let s = opt_float(se.map(|s| s[j]));
        writeln!(out, "{},{},{}", j + 1, format_float(*m), s).expect("writing to a string");
    }
    out
}

pub fn tail_csv(report: &TailReport) -> String {
    let mut out = String::from("t,vartheta,empirical_upper,empirical_lower,bound,pass\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t,
            format_float(r.vartheta),
            format_float(r.empirical_upper),
            format_float(r.empirical_lower),
            format_float(r.bound),
            r.pass
        )
        .expect("writing to a string");
    }
    out
}

/// `n,arm,ET_bound,R_bound` with 1-based arms, one row per `(n, arm)`.
pub fn bound_csv(curve: &BoundCurve) -> String {
    let mut out = String::from("n,arm,ET_bound,R_bound\n");
    for j in 0..curve.r_bound.len() {
        for (a, arm) in curve.arms.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                j + 1,
                arm + 1,
                format_float(curve.et_bound[a][j]),
                format_float(curve.r_bound[j])
            )
            .expect("writing to a string");
        }
    }
    out
}

fn output_dir(config: &ExperimentConfig) -> PathBuf {
    PathBuf::from(&config.output.directory)
}

/// Certifies over the run horizon (at least 2 steps).
fn certificate(config: &ExperimentConfig, model: &SystemModel) -> Result<AssumptionCertificate> {
    certify(model, config.run.horizon.max(2))
}

fn policy_spec(config: &ExperimentConfig, model: &SystemModel, cert: &AssumptionCertificate) -> Result<PolicySpec> {
    Ok(PolicySpec {
        schedule: config.policy.schedule,
        sigma: config.sigma(model, Some(cert))?,
        init: config.policy.init.clone(),
    })
}

fn certificate_warnings(cert: &AssumptionCertificate) -> Vec<String> {
    let mut warnings = Vec::new();
    if !cert.passed() {
        warnings.push(format!("assumption certificate did not pass: {:?}", cert.checks));
    }
    if !cert.all_unavailable_steps.is_empty() {
        warnings.push(format!("no arm available at steps {:?}", cert.all_unavailable_steps));
    }
    warnings
}

/// Runs the Monte Carlo experiment and returns the aggregate together with
/// the run report.
pub fn run_simulation(config: &ExperimentConfig) -> Result<(AggregateResult, Value, Vec<String>)> {
    let started = Instant::now();
    let model = config.build_model()?;
    let cert = certificate(config, &model)?;
    let mut warnings = certificate_warnings(&cert);
    let policy = policy_spec(config, &model, &cert)?;
    let target = match cert.optimal_arm {
        Some(arm) => OptimalTarget::Fixed(arm),
        None => {
            warnings.push("no unique optimal arm; counting pulls of each round's best arm".into());
            OptimalTarget::PerStep
        }
    };
    let spec = RunSpec {
        horizon: config.run.horizon,
        replications: config.run.replications,
        seed: config.run.seed,
        workers: config.workers(),
    };
    let agg = aggregate(&model, &policy, target, &spec)?;
    if agg.support_violations > 0 {
        warnings.push(format!("{} rewards fell outside [0, {}]", agg.support_violations, model.reward_cap));
    }
    let report = json!({
        "seed": config.run.seed,
        "digest": config.digest(),
        "horizon": config.run.horizon,
        "replications": config.run.replications,
        "sigma": policy.sigma,
        "optimal_target": match target {
            OptimalTarget::Fixed(arm) => json!(arm + 1),
            OptimalTarget::PerStep => json!("per_step"),
        },
        "certificate": cert.summary(),
        "support_violations": agg.support_violations,
        "skipped_rounds": agg.skipped_rounds,
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "warnings": warnings,
    });
    Ok((agg, report, warnings))
}

/// `simulate`: writes `aggregate.csv` and `report.json`.
pub fn cmd_simulate(config: &ExperimentConfig) -> Result<Outcome> {
    let (agg, report, warnings) = run_simulation(config)?;
    let dir = output_dir(config);
    let mut files = Vec::new();
    if config.wants("csv") {
        write_file(&dir, "aggregate.csv", &aggregate_csv(&agg), &mut files)?;
    }
    if config.wants("json") {
        write_json(&dir, "report.json", &report, &mut files)?;
    }
    Ok(Outcome {
        passed: true,
        files,
        warnings,
    })
}

/// `check-assumptions`: writes `certificate.json`; passes iff every
/// condition holds.
pub fn cmd_check_assumptions(config: &ExperimentConfig) -> Result<Outcome> {
    let model = config.build_model()?;
    let cert = certificate(config, &model)?;
    let mut report = cert.report();
    report["digest"] = json!(config.digest());
    let mut files = Vec::new();
    write_json(&output_dir(config), "certificate.json", &report, &mut files)?;
    Ok(Outcome {
        passed: cert.passed(),
        files,
        warnings: certificate_warnings(&cert),
    })
}

/// `verify-tail`: writes `tail.csv` (and `tail.json`); passes iff every
/// grid cell does.
pub fn cmd_verify_tail(config: &ExperimentConfig) -> Result<Outcome> {
    let model = config.build_model()?;
    let tail = config.tail_constants(&model)?;
    let chi2 = model.reward_cap * model.reward_cap;
    let varthetas: Vec<f64> = config.tail.vartheta_scales.iter().map(|s| s * chi2).collect();
    let replications = config.tail.replications.unwrap_or(config.run.replications);
    let report = verify_tail(
        &model,
        &tail,
        &config.tail.times,
        &varthetas,
        replications,
        config.run.seed,
        config.workers(),
    )?;
    let mut warnings = Vec::new();
    if report.support_violations > 0 {
        warnings.push(format!("{} rewards fell outside [0, {}]", report.support_violations, model.reward_cap));
    }
    let dir = output_dir(config);
    let mut files = Vec::new();
    if config.wants("csv") {
        write_file(&dir, "tail.csv", &tail_csv(&report), &mut files)?;
    }
    if config.wants("json") {
        let value = json!({
            "digest": config.digest(),
            "seed": config.run.seed,
            "eta": tail.eta,
            "chi": tail.chi,
            "kappa": tail.kappa,
            "nu": tail.nu,
            "passed": report.passed(),
            "report": report,
        });
        write_json(&dir, "tail.json", &value, &mut files)?;
    }
    Ok(Outcome {
        passed: report.passed(),
        files,
        warnings,
    })
}

/// Evaluates the reference bound for a configuration.
pub fn bound_curve(config: &ExperimentConfig) -> Result<(BoundCurve, AssumptionCertificate, f64)> {
    let model = config.build_model()?;
    let cert = certificate(config, &model)?;
    let sigma = config.sigma(&model, Some(&cert))?;
    let params = BoundParams {
        schedule: config.policy.schedule,
        sigma,
        tail: config.tail_constants(&model)?,
        l: config.bound.l,
        horizon: config.run.horizon,
    };
    let curve = theorem_bound(&cert, &params)?;
    Ok((curve, cert, sigma))
}

/// `bound`: writes `bound.csv` and `bound.json` with `c0`, `c1` and the
/// divergence flag.
pub fn cmd_bound(config: &ExperimentConfig) -> Result<Outcome> {
    let (curve, cert, sigma) = bound_curve(config)?;
    let mut warnings = certificate_warnings(&cert);
    if curve.diverges {
        warnings.push(format!(
            "alpha = {} does not exceed 3/(2 kappa sigma^2); the series term is not guaranteed to converge",
            curve.alpha
        ));
    }
    let dir = output_dir(config);
    let mut files = Vec::new();
    if config.wants("csv") {
        write_file(&dir, "bound.csv", &bound_csv(&curve), &mut files)?;
    }
    if config.wants("json") {
        let value = json!({
            "digest": config.digest(),
            "c0": curve.c0,
            "c1": curve.c1,
            "diverges": curve.diverges,
            "alpha": curve.alpha,
            "beta": curve.beta,
            "exponent": curve.exponent,
            "sigma": sigma,
            "l": config.bound.l,
            "gamma": cert.availability_gamma,
            "delta_upper": cert.delta_upper,
            "arms": curve.arms.iter().map(|a| a + 1).collect::<Vec<_>>(),
        });
        write_json(&dir, "bound.json", &value, &mut files)?;
    }
    Ok(Outcome {
        passed: true,
        files,
        warnings,
    })
}

/// The two built-in park experiments: without and with process noise.
pub fn park_figure_configs(base: &RunConfig) -> [ExperimentConfig; 2] {
    let make = |scenario: ParkScenario| ExperimentConfig {
        scenario: ScenarioConfig::Park(scenario),
        policy: PolicyConfig {
            sigma: SigmaChoice::Rule(SigmaRule::DailySpread),
            ..PolicyConfig::default()
        },
        estimator: Default::default(),
        run: *base,
        output: Default::default(),
        bound: Default::default(),
        tail: Default::default(),
    };
    [make(ParkScenario::default()), make(ParkScenario::with_process_noise())]
}

/// `reproduce-figures`: runs both park experiments and writes
/// `fig1.csv` .. `fig6.csv` (expected reward, optimal-arm count and regret,
/// first without and then with process noise) plus `report.json`.
pub fn cmd_reproduce_figures(run: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    for (idx, mut config) in park_figure_configs(run).into_iter().enumerate() {
        config.output.directory = out.display().to_string();
        let (agg, report, w) = run_simulation(&config)?;
        let first = 3 * idx + 1;
        let tables = [
            ("S", &agg.mean_s, agg.se_s.as_ref()),
            ("Topt", &agg.mean_topt, agg.se_topt.as_ref()),
            ("R", &agg.mean_r, agg.se_r.as_ref()),
        ];
        for (offset, (name, mean, se)) in tables.into_iter().enumerate() {
            let file = format!("fig{}.csv", first + offset);
            write_file(out, &file, &figure_csv(name, mean, se), &mut files)?;
        }
        warnings.extend(w);
        reports.push(report);
    }
    write_json(out, "report.json", &json!({ "no_process_noise": reports[0], "process_noise": reports[1] }), &mut files)?;
    Ok(Outcome {
        passed: true,
        files,
        warnings,
    })
}
