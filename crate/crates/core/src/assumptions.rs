//! Finite-horizon certification of the boundedness and identifiability
//! conditions the regret analysis relies on, and extraction of the
//! constants that feed the reference bound.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linsys::{reward_cov, spectral_norm, AvailabilitySchedule, MomentTrajectory, SystemModel};

/// Two arms whose expected outputs differ by no more than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Cumulative unavailability of one arm and the smallest `γ` with
/// `count(t) ≤ γ ln t` on `2 ≤ t ≤ n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvailabilityBudget {
    pub worst_gamma: f64,
    /// `counts[t - 1] = Σ_{j=2..t} 1{γ^j = 0}` for `t = 1..=n`.
    pub counts: Vec<u64>,
    /// False when the ratio `count(t) / ln t` still climbs in the second
    /// half of the horizon, i.e. the schedule looks super-logarithmic.
    pub ok: bool,
}

pub fn availability_budget(schedule: &AvailabilitySchedule, horizon: usize) -> Result<AvailabilityBudget> {
    if horizon < 2 {
        return Err(Error::Domain("availability budget needs a horizon of at least 2".into()));
    }
    let mut counts = Vec::with_capacity(horizon);
    let mut count = 0u64;
    let mut ratios = Vec::with_capacity(horizon - 1);
    for t in 1..=horizon {
        if t >= 2 && !schedule.is_available(t) {
            count += 1;
        }
        counts.push(count);
        if t >= 2 {
            ratios.push(count as f64 / (t as f64).ln());
        }
    }
    let worst_gamma = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(AvailabilityBudget {
        worst_gamma,
        counts,
        ok: late_max_not_larger(&ratios),
    })
}

/// Whether the maximum over the second half of `values` stays within the
/// maximum over the first half.
fn late_max_not_larger(values: &[f64]) -> bool {
    if values.len() < 2 {
        return values.iter().all(|v| v.is_finite());
    }
    let mid = values.len() / 2;
    let early = values[..mid].iter().cloned().fold(0.0, f64::max);
    let late = values[mid..].iter().cloned().fold(0.0, f64::max);
    late <= early * (1.0 + 1e-12) + 1e-300
}

/// Per-step best arms and gaps `Δ_i^t = H_{i*_t} E(θ^t) - H_i E(θ^t)`,
/// ignoring availability, for `t = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// The argmax at each step, `None` where the top two are tied.
    pub best: Vec<Option<usize>>,
    /// `gaps[i][t - 1]`; zero for the best arm itself.
    pub gaps: Vec<Vec<f64>>,
}

impl GapProfile {
    /// The arm that is the strict argmax at every step, if any.
    pub fn fixed_best(&self) -> Option<usize> {
        let first = (*self.best.first()?)?;
        self.best.iter().all(|b| *b == Some(first)).then_some(first)
    }

    /// Steps (1-based) where the argmax is not unique.
    pub fn tied_steps(&self) -> Vec<usize> {
        self.best.iter().enumerate().filter(|(_, b)| b.is_none()).map(|(t, _)| t + 1).collect()
    }
}

pub fn gap_profile(model: &SystemModel, horizon: usize) -> GapProfile {
    let traj = MomentTrajectory::compute(model, horizon);
    gap_profile_from(&traj, model.arms())
}

fn gap_profile_from(traj: &MomentTrajectory, arms: usize) -> GapProfile {
    let horizon = traj.horizon();
    let mut best = Vec::with_capacity(horizon);
    let mut gaps = vec![Vec::with_capacity(horizon); arms];
    for t in 1..=horizon {
        let raw = &traj.raw[t];
        let mut top = 0;
        for i in 1..arms {
            if raw[i] > raw[top] {
                top = i;
            }
        }
        let unique = (0..arms).all(|i| i == top || raw[top] - raw[i] > TIE_TOLERANCE);
        best.push(unique.then_some(top));
        for i in 0..arms {
            gaps[i].push(raw[top] - raw[i]);
        }
    }
    GapProfile { best, gaps }
}

/// Pass/fail flags for each certified condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CertificateChecks {
    /// `0 < a ≤ ‖Φ^t_τ‖ ≤ ā` with finite `ā`.
    pub transition_bounds: bool,
    pub covariance_bound: bool,
    pub gain_bounds: bool,
    pub output_bounds: bool,
    /// `‖B^t‖ ≤ b/t`, or `B^t` vanishing before the horizon ends.
    pub noise_input_decay: bool,
    pub unique_optimal_arm: bool,
    pub positive_gaps: bool,
    pub logarithmic_unavailability: bool,
}

impl CertificateChecks {
    pub fn all(&self) -> bool {
        self.transition_bounds
            && self.covariance_bound
            && self.gain_bounds
            && self.output_bounds
            && self.noise_input_decay
            && self.unique_optimal_arm
            && self.positive_gaps
            && self.logarithmic_unavailability
    }
}

/// Extremal constants of a model over a finite horizon.
///
/// Arm indices are 0-based here and 1-based in [`Self::report`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCertificate {
    pub horizon: usize,
    /// `a`: smallest `‖Φ^t_τ‖` over `1 ≤ τ ≤ t ≤ n`.
    pub a_lower: f64,
    /// `ā`: largest `‖Φ^t_τ‖` over the same range.
    pub a_upper: f64,
    /// `σ`: largest `‖Σ(θ^t)‖` over `0 ≤ t ≤ n`.
    pub sigma_bound: f64,
    /// `√(max_{t,i} Σ(X_i^t))`, the default exploration scale.
    pub reward_std_bound: f64,
    /// `ḡ_i`.
    pub g_upper: Vec<f64>,
    /// `h_i`.
    pub h_lower: Vec<f64>,
    /// `h̄_i`.
    pub h_upper: Vec<f64>,
    /// `b = max_t t ‖B^t‖`.
    pub b: f64,
    /// Last step with a nonzero `B^t`.
    pub b_last_nonzero: Option<usize>,
    pub optimal_arm: Option<usize>,
    /// `Δ_i = min_t Δ_i^t` for each arm other than the optimal one.
    pub delta_lower: Vec<Option<f64>>,
    /// `Δ̄`: largest gap over arms and steps.
    pub delta_upper: f64,
    /// `γ` for the optimal arm (for every arm's worst case when there is
    /// no unique optimal arm).
    pub availability_gamma: f64,
    pub availability_counts: Vec<u64>,
    /// Steps at which no arm is available; reported, not fatal.
    pub all_unavailable_steps: Vec<usize>,
    pub tied_steps: Vec<usize>,
    pub checks: CertificateChecks,
}

impl AssumptionCertificate {
    pub fn passed(&self) -> bool {
        self.checks.all()
    }

    /// Smallest positive gap `min_{i≠i*} Δ_i`, if any.
    pub fn min_gap(&self) -> Option<f64> {
        self.delta_lower.iter().flatten().cloned().reduce(f64::min)
    }

    pub fn report(&self) -> Value {
        let per_arm_gaps: Vec<Value> = self
            .delta_lower
            .iter()
            .enumerate()
            .map(|(i, d)| json!({ "arm": i + 1, "delta": d }))
            .collect();
        json!({
            "horizon": self.horizon,
            "passed": self.passed(),
            "checks": self.checks,
            "a_lower": self.a_lower,
            "a_upper": self.a_upper,
            "sigma_bound": self.sigma_bound,
            "reward_std_bound": self.reward_std_bound,
            "g_upper": self.g_upper,
            "h_lower": self.h_lower,
            "h_upper": self.h_upper,
            "b": self.b,
            "b_last_nonzero": self.b_last_nonzero,
            "optimal_arm": self.optimal_arm.map(|i| i + 1),
            "delta_lower": per_arm_gaps,
            "delta_upper": self.delta_upper,
            "availability_gamma": self.availability_gamma,
            "all_unavailable_steps": self.all_unavailable_steps,
            "tied_steps": self.tied_steps,
        })
    }

    /// The handful of numbers worth carrying in a run report.
    pub fn summary(&self) -> Value {
        json!({
            "passed": self.passed(),
            "checks": self.checks,
            "optimal_arm": self.optimal_arm.map(|i| i + 1),
            "sigma_bound": self.sigma_bound,
            "reward_std_bound": self.reward_std_bound,
            "delta_upper": self.delta_upper,
            "availability_gamma": self.availability_gamma,
        })
    }
}

/// Extremes of `‖Φ^t_τ‖` over `1 ≤ τ ≤ t ≤ n`. For a schedule of period `P`
/// the products starting at `τ + P` repeat those starting at `τ`, so only
/// the first period of starting points is walked.
fn transition_norm_range(model: &SystemModel, horizon: usize) -> (f64, f64) {
    let starts = model.dynamics.period().map_or(horizon, |p| p.min(horizon));
    let m = model.state_dim();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for tau in 1..=starts {
        let mut phi = DMatrix::<f64>::identity(m, m);
        for t in tau..=horizon {
            phi = model.dynamics.eval(t) * phi;
            let norm = spectral_norm(&phi);
            lo = lo.min(norm);
            hi = hi.max(norm);
        }
    }
    (lo, hi)
}

/// Evaluates every condition over steps `1..=n` by exhaustive enumeration.
pub fn certify(model: &SystemModel, horizon: usize) -> Result<AssumptionCertificate> {
    if horizon < 2 {
        return Err(Error::Domain("certification needs a horizon of at least 2".into()));
    }
    let k = model.arms();
    let traj = MomentTrajectory::compute(model, horizon);

    let (a_lower, a_upper) = transition_norm_range(model, horizon);

    let sigma_bound = traj.states.iter().map(|s| spectral_norm(&s.cov)).fold(0.0, f64::max);
    let reward_var = traj.states[1..]
        .iter()
        .flat_map(|s| (0..k).map(move |i| reward_cov(model, s, i)))
        .fold(0.0, f64::max);

    let mut g_upper = vec![0.0f64; k];
    let mut h_lower = vec![f64::INFINITY; k];
    let mut h_upper = vec![0.0f64; k];
    let mut b: f64 = 0.0;
    let mut b_scaled = Vec::with_capacity(horizon);
    let mut b_last_nonzero = None;
    let mut all_unavailable_steps = Vec::new();
    for t in 1..=horizon {
        for i in 0..k {
            g_upper[i] = g_upper[i].max(model.noise_gain[i].eval(t));
            let h = model.outputs[i].eval_ref(t).map_or(0.0, spectral_norm);
            h_lower[i] = h_lower[i].min(h);
            h_upper[i] = h_upper[i].max(h);
        }
        let b_norm = model.noise_input.eval_ref(t).map_or(0.0, spectral_norm);
        if b_norm > 0.0 {
            b_last_nonzero = Some(t);
        }
        b = b.max(t as f64 * b_norm);
        b_scaled.push(t as f64 * b_norm);
        if !(0..k).any(|i| model.is_available(i, t)) {
            all_unavailable_steps.push(t);
        }
    }

    let profile = gap_profile_from(&traj, k);
    let optimal_arm = profile.fixed_best();
    let tied_steps = profile.tied_steps();
    let delta_lower: Vec<Option<f64>> = (0..k)
        .map(|i| match optimal_arm {
            Some(star) if star == i => None,
            Some(_) => Some(profile.gaps[i].iter().cloned().fold(f64::INFINITY, f64::min)),
            None => None,
        })
        .collect();
    let delta_upper = profile.gaps.iter().flatten().cloned().fold(0.0, f64::max);

    let (availability_gamma, availability_counts, budget_ok) = match optimal_arm {
        Some(star) => {
            let budget = availability_budget(&model.availability[star], horizon)?;
            (budget.worst_gamma, budget.counts, budget.ok)
        }
        None => {
            let budgets = model
                .availability
                .iter()
                .map(|s| availability_budget(s, horizon))
                .collect::<Result<Vec<_>>>()?;
            let worst = budgets
                .iter()
                .max_by(|a, b| a.worst_gamma.total_cmp(&b.worst_gamma))
                .expect("at least one arm");
            (worst.worst_gamma, worst.counts.clone(), budgets.iter().all(|b| b.ok))
        }
    };

    let b_decay = b_last_nonzero.is_none_or(|last| last < horizon) || late_max_not_larger(&b_scaled);
    let checks = CertificateChecks {
        transition_bounds: a_lower > 0.0 && a_upper.is_finite(),
        covariance_bound: sigma_bound.is_finite(),
        gain_bounds: g_upper.iter().all(|g| g.is_finite() && *g > 0.0),
        output_bounds: h_lower.iter().all(|h| *h > 0.0) && h_upper.iter().all(|h| h.is_finite()),
        noise_input_decay: b_decay,
        unique_optimal_arm: optimal_arm.is_some(),
        positive_gaps: optimal_arm.is_some() && delta_lower.iter().flatten().all(|d| *d > TIE_TOLERANCE),
        logarithmic_unavailability: budget_ok,
    };

    Ok(AssumptionCertificate {
        horizon,
        a_lower,
        a_upper,
        sigma_bound,
        reward_std_bound: reward_var.sqrt(),
        g_upper,
        h_lower,
        h_upper,
        b,
        b_last_nonzero,
        optimal_arm,
        delta_lower,
        delta_upper,
        availability_gamma,
        availability_counts,
        all_unavailable_steps,
        tied_steps,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::closed_form_cov;
    use crate::scenarios::{build_park, build_static, ParkScenario};
    use proptest::prelude::*;

    #[test]
    fn park_certificate_passes() {
        let model = build_park(&ParkScenario::default()).unwrap();
        let cert = certify(&model, 200).unwrap();
        assert!(cert.passed(), "{:?}", cert.checks);
        assert_eq!(cert.optimal_arm, Some(3));
        assert_eq!(cert.report()["optimal_arm"], 4);
        assert!((cert.a_lower - 1.0).abs() < 1e-12 && (cert.a_upper - 1.0).abs() < 1e-12);
        assert_eq!(cert.sigma_bound, 0.0);
        assert!((cert.reward_std_bound - (2500.0f64 / 3.0).sqrt()).abs() < 1e-9);
        // Smallest gap: arm 3 against arm 4 on the 3/4 phase, (1000 - 750)·3/4.
        assert!((cert.min_gap().unwrap() - 187.5).abs() < 1e-9);
        // Largest gap: arm 2 on the 4/3 phase, (1000 - 350)·4/3.
        assert!((cert.delta_upper - 650.0 * 4.0 / 3.0).abs() < 1e-9);
        assert!(cert.all_unavailable_steps.is_empty());
    }

    #[test]
    fn park_gap_profile_by_hand() {
        let model = build_park(&ParkScenario::default()).unwrap();
        let profile = gap_profile(&model, 6);
        assert!((profile.gaps[4][3] - 474.0).abs() < 1e-9, "arm 5 at t = 4");
        assert!((profile.gaps[0][5] - 450.0).abs() < 1e-9, "arm 1 at t = 6");
        assert_eq!(profile.fixed_best(), Some(3));
    }

    #[test]
    fn park_with_process_noise() {
        let model = build_park(&ParkScenario::with_process_noise()).unwrap();
        let cert = certify(&model, 200).unwrap();
        let oracle = (0..=200).map(|t| spectral_norm(&closed_form_cov(&model, t))).fold(0.0, f64::max);
        assert!((cert.sigma_bound - oracle).abs() <= 1e-8 * oracle);
        // A constant noise input does not decay like 1/t.
        assert!(!cert.checks.noise_input_decay);
        assert_eq!(cert.optimal_arm, Some(3));
    }

    #[test]
    fn identity_dynamics_have_unit_norms() {
        let model = build_static(&[0.9, 0.5], &[0.1, 0.1]).unwrap();
        let cert = certify(&model, 50).unwrap();
        assert_eq!((cert.a_lower, cert.a_upper), (1.0, 1.0));
        assert!(cert.passed());
        assert_eq!(cert.availability_gamma, 0.0);
        assert_eq!(cert.b_last_nonzero, None);
    }

    #[test]
    fn equal_means_fail_uniqueness() {
        let model = build_static(&[0.5, 0.5], &[0.1, 0.1]).unwrap();
        let cert = certify(&model, 10).unwrap();
        assert!(!cert.checks.unique_optimal_arm);
        assert!(!cert.passed());
        assert_eq!(cert.tied_steps.len(), 10);
        assert!(gap_profile(&model, 10).gaps.iter().flatten().all(|g| *g == 0.0));
    }

    #[test]
    fn budget_cases() {
        let always = availability_budget(&AvailabilitySchedule::Always, 200).unwrap();
        assert_eq!(always.worst_gamma, 0.0);
        assert!(always.ok);

        let never = availability_budget(&AvailabilitySchedule::Periodic(vec![false]), 200).unwrap();
        assert_eq!(never.counts[199], 199);
        assert!(!never.ok);

        let park = availability_budget(&AvailabilitySchedule::LogSteps { offset: 1 }, 200).unwrap();
        assert!(park.ok);
        // Zeros at t = 3, 11, 32, 89; the ratio peaks at t = 3.
        assert!((park.worst_gamma - 1.0 / 3f64.ln()).abs() < 1e-12);
        for t in 2..=200 {
            assert!(park.counts[t - 1] as f64 <= park.worst_gamma * (t as f64).ln() + 1e-12);
        }
        assert!(availability_budget(&AvailabilitySchedule::Always, 1).is_err());
    }

    #[test]
    fn decaying_noise_input_passes() {
        use crate::linsys::{MatrixSchedule, ModelParts, ScalarSchedule};
        use crate::noise::NoiseSpec;
        use nalgebra::DVector;
        let table: Vec<_> = (1..=40).map(|t| DMatrix::from_element(1, 1, 1.0 / t as f64)).collect();
        let model = SystemModel::new(ModelParts {
            dynamics: MatrixSchedule::identity(1),
            noise_input: MatrixSchedule::table(table).unwrap(),
            outputs: vec![MatrixSchedule::constant(DMatrix::from_element(1, 1, 1.0))],
            noise_gain: vec![ScalarSchedule::Constant(1.0)],
            availability: vec![AvailabilitySchedule::Always],
            process_noise: NoiseSpec::uniform(1.0, 1),
            obs_noise: vec![NoiseSpec::zero(1)],
            theta0_mean: DVector::from_element(1, 1.0),
            theta0_cov: DMatrix::zeros(1, 1),
            reward_cap: 10.0,
        })
        .unwrap();
        let cert = certify(&model, 40).unwrap();
        assert!(cert.checks.noise_input_decay);
        assert!((cert.b - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn larger_horizon_never_shrinks_extremes(
            theta_bar in proptest::collection::vec(10.0f64..1000.0, 3),
            offset in 0u64..50,
            n1 in 2usize..40,
            extra in 1usize..40,
        ) {
            let scenario = ParkScenario { theta_bar, unavailable_offset: offset, ..ParkScenario::default() };
            prop_assume!(scenario.validate().is_ok());
            let model = build_park(&scenario).unwrap();
            let small = certify(&model, n1).unwrap();
            let large = certify(&model, n1 + extra).unwrap();
            prop_assert!(large.a_upper >= small.a_upper);
            prop_assert!(large.delta_upper >= small.delta_upper);
            prop_assert!(large.availability_gamma >= small.availability_gamma);
        }
    }
}
