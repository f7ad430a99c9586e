//! Bandit episodes against the simulator, replication averages, the
//! reference regret bound and empirical tail checks.

mod aggregate;
mod bound;
mod episode;
mod stats;
mod tail;

pub use aggregate::{aggregate, parallel_replications, AggregateResult, OptimalTarget, PolicySpec, RunSpec};
pub use bound::{theorem_bound, BoundCurve, BoundParams};
pub use episode::{run_episode, Allocation, RunLedger, StepRecord, Truth, UniformRandom};
pub use stats::{log_fit, log_fit_range, mean_se, LogFit};
pub use tail::{estimates_at, verify_tail, TailReport, TailRow};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assumptions::certify;
    use crate::bandit::{ExplorationSchedule, InitMode, TailConstants};
    use crate::error::{Error, Result};
    use crate::linsys::{AvailabilitySchedule, SystemModel};
    use crate::noise::EpisodeStreams;
    use crate::scenarios::{build_park, build_static, ParkScenario};
    use proptest::prelude::*;

    /// Always takes the availability-aware best arm.
    struct Oracle<'a>(&'a Truth);

    impl Allocation for Oracle<'_> {
        fn select(&mut self, t: usize, _available: &[bool]) -> Option<usize> {
            self.0.best[t]
        }
        fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
            Ok(())
        }
    }

    /// Cycles through the arms regardless of rewards or availability.
    struct RoundRobin(usize);

    impl Allocation for RoundRobin {
        fn select(&mut self, t: usize, available: &[bool]) -> Option<usize> {
            let k = available.len();
            (0..k).map(|j| (t + j) % k).find(|&i| available[i]).map(|i| {
                self.0 = i;
                i
            })
        }
        fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
            Ok(())
        }
    }

    fn ucb(sigma: f64) -> PolicySpec {
        PolicySpec {
            schedule: ExplorationSchedule::UcbNormal,
            sigma,
            init: InitMode::SampleEachOnce,
        }
    }

    fn park() -> SystemModel {
        build_park(&ParkScenario::default()).unwrap()
    }

    fn run_ucb(model: &SystemModel, sigma: f64, horizon: usize, seed: u64) -> RunLedger {
        let truth = Truth::new(model, horizon);
        let mut policy = ucb(sigma).build(model.arms()).unwrap();
        let mut streams = EpisodeStreams::new(seed, 0, model.arms());
        run_episode(model, &truth, &mut policy, horizon, &mut streams).unwrap()
    }

    #[test]
    fn oracle_has_zero_regret() {
        let model = park();
        let truth = Truth::new(&model, 200);
        let mut streams = EpisodeStreams::new(1, 0, 5);
        let ledger = run_episode(&model, &truth, &mut Oracle(&truth), 200, &mut streams).unwrap();
        assert!(ledger.regret_sum.iter().all(|r| *r == 0.0));
        // The oracle leaves arm 4 exactly on its four unavailable rounds.
        assert_eq!(ledger.pulls[3], 196);
    }

    #[test]
    fn single_arm_has_zero_regret() {
        let model = build_static(&[0.7], &[0.2]).unwrap();
        let ledger = run_ucb(&model, 0.5, 50, 3);
        assert!(ledger.regret_sum.iter().all(|r| *r == 0.0));
        assert_eq!(ledger.pull_curve(0), (1..=50).collect::<Vec<u64>>());
    }

    #[test]
    fn same_seed_same_ledger() {
        let model = build_park(&ParkScenario::with_process_noise()).unwrap();
        assert_eq!(run_ucb(&model, 28.87, 200, 11), run_ucb(&model, 28.87, 200, 11));
        assert_ne!(run_ucb(&model, 28.87, 200, 11), run_ucb(&model, 28.87, 200, 12));
    }

    #[test]
    fn unavailable_rounds_are_skipped() {
        let mut model = build_static(&[0.9, 0.5], &[0.1, 0.1]).unwrap();
        let pattern = vec![true, true, false, true];
        model.availability = vec![AvailabilitySchedule::Periodic(pattern.clone()); 2];
        let ledger = run_ucb(&model, 0.5, 40, 0);
        assert_eq!(ledger.skipped, 10);
        for s in ledger.steps.iter().filter(|s| s.t % 4 == 3) {
            assert_eq!((s.choice, s.reward, s.regret), (None, 0.0, 0.0));
        }
        assert_eq!(ledger.pulls.iter().sum::<u64>() + ledger.skipped as u64, 40);
    }

    #[test]
    fn choosing_an_unavailable_arm_is_a_contract_violation() {
        struct Stubborn;
        impl Allocation for Stubborn {
            fn select(&mut self, _t: usize, _available: &[bool]) -> Option<usize> {
                Some(3)
            }
            fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
                Ok(())
            }
        }
        let model = park();
        let truth = Truth::new(&model, 10);
        let mut streams = EpisodeStreams::new(0, 0, 5);
        let err = run_episode(&model, &truth, &mut Stubborn, 10, &mut streams).unwrap_err();
        assert!(matches!(err, Error::Contract(_)), "{err}");
    }

    #[test]
    fn rewards_outside_the_cap_are_counted_not_clipped() {
        let mut model = build_static(&[0.9, 0.5], &[0.5, 0.5]).unwrap();
        model.reward_cap = 1.0;
        let ledger = run_ucb(&model, 0.5, 500, 2);
        let outside = ledger.steps.iter().filter(|s| s.choice.is_some() && !(0.0..=1.0).contains(&s.reward)).count();
        assert!(outside > 0);
        assert_eq!(ledger.support_violations, outside as u64);
    }

    #[test]
    fn conditional_reward_tracks_the_previous_state() {
        let model = build_park(&ParkScenario::with_process_noise()).unwrap();
        let ledger = run_ucb(&model, 28.87, 100, 5);
        // Under process noise the conditional mean drifts away from the
        // propagated mean, and the rewards scatter around it.
        let drift: f64 = ledger.steps.iter().map(|s| (s.conditional - s.expected).abs()).sum();
        assert!(drift > 0.0);
        for s in &ledger.steps {
            assert!((s.reward - s.conditional).abs() <= 100.0 + 1e-9, "t = {}", s.t);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ledger_invariants(seed in any::<u64>(), sigma in 1.0f64..500.0, noisy in any::<bool>()) {
            let scenario = if noisy { ParkScenario::with_process_noise() } else { ParkScenario::default() };
            let model = build_park(&scenario).unwrap();
            let cert = certify(&model, 120).unwrap();
            let ledger = run_ucb(&model, sigma, 120, seed);
            let delta_bar = cert.delta_upper;
            let star = cert.optimal_arm.unwrap();
            let mut unavailable = 0u64;
            let mut prev = 0.0;
            for (j, s) in ledger.steps.iter().enumerate() {
                prop_assert!(ledger.regret_sum[j] >= prev);
                prev = ledger.regret_sum[j];
                if !s.available[star] {
                    unavailable += 1;
                }
                let others: u64 = (0..5).filter(|&i| i != star).map(|i| ledger.pull_curve(i)[j]).sum();
                prop_assert!(ledger.regret_sum[j] <= delta_bar * (others + unavailable) as f64 + 1e-9);
            }
            prop_assert_eq!(ledger.pulls.iter().sum::<u64>() + ledger.skipped as u64, 120);
        }
    }

    #[test]
    fn sample_mean_is_unbiased_for_the_time_average() {
        // A fixed sampling pattern under process noise: E(X̂ - μ̂) = 0.
        let model = build_park(&ParkScenario::with_process_noise()).unwrap();
        let horizon = 30;
        let truth = Truth::new(&model, horizon);
        let diffs = parallel_replications(10_000, 4, |rep| {
            let mut streams = EpisodeStreams::new(77, rep, 5);
            let ledger = run_episode(&model, &truth, &mut RoundRobin(0), horizon, &mut streams)?;
            Ok(estimates_at(&ledger, 5, horizon)
                .into_iter()
                .map(|e| e.map(|(x, mu, _)| x - mu).unwrap())
                .collect::<Vec<f64>>())
        })
        .unwrap();
        for arm in 0..5 {
            let column: Vec<f64> = diffs.iter().map(|d| d[arm]).collect();
            let (m, se) = mean_se(&column);
            assert!(m.abs() <= 3.0 * se.unwrap(), "arm {}: {m} vs se {:?}", arm + 1, se);
        }
    }

    #[test]
    fn single_replication_has_no_errors() {
        let model = park();
        let spec = RunSpec {
            horizon: 30,
            replications: 1,
            seed: 9,
            workers: 1,
        };
        let agg = aggregate(&model, &ucb(28.87), OptimalTarget::Fixed(3), &spec).unwrap();
        let ledger = run_ucb(&model, 28.87, 30, 9);
        assert!(agg.se_s.is_none() && agg.se_r.is_none() && agg.se_topt.is_none());
        assert_eq!(agg.mean_r, ledger.regret_sum);
        assert_eq!(agg.mean_s, ledger.reward_sum);
        assert_eq!(agg.mean_topt, ledger.pull_curve(3).iter().map(|&c| c as f64).collect::<Vec<_>>());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let model = build_park(&ParkScenario::with_process_noise()).unwrap();
        let run = |workers| {
            let spec = RunSpec {
                horizon: 60,
                replications: 64,
                seed: 4,
                workers,
            };
            aggregate(&model, &ucb(28.87), OptimalTarget::Fixed(3), &spec).unwrap()
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn standard_errors_shrink_with_root_replications() {
        let model = build_park(&ParkScenario::with_process_noise()).unwrap();
        let run = |replications| {
            let spec = RunSpec {
                horizon: 50,
                replications,
                seed: 21,
                workers: 4,
            };
            aggregate(&model, &ucb(28.87), OptimalTarget::Fixed(3), &spec).unwrap()
        };
        let small = run(250);
        let large = run(1000);
        let ratio = large.se_s.unwrap()[49] / small.se_s.unwrap()[49];
        assert!((ratio - 0.5).abs() <= 0.1, "ratio {ratio}");
    }

    #[test]
    fn per_step_target_matches_fixed_target_when_optimum_is_fixed() {
        let model = build_static(&[0.9, 0.5], &[0.1, 0.1]).unwrap();
        let spec = RunSpec {
            horizon: 100,
            replications: 8,
            seed: 1,
            workers: 2,
        };
        let fixed = aggregate(&model, &ucb(0.5), OptimalTarget::Fixed(0), &spec).unwrap();
        let per_step = aggregate(&model, &ucb(0.5), OptimalTarget::PerStep, &spec).unwrap();
        assert_eq!(fixed.mean_topt, per_step.mean_topt);
    }

    fn static_cert() -> crate::assumptions::AssumptionCertificate {
        certify(&build_static(&[0.9, 0.5], &[0.1, 0.1]).unwrap(), 10).unwrap()
    }

    #[test]
    fn bound_reduces_to_l_without_exploration() {
        let cert = static_cert();
        assert_eq!(cert.availability_gamma, 0.0);
        let params = BoundParams {
            schedule: ExplorationSchedule::GenericLog { alpha: 0.0, beta: 0.0 },
            sigma: 0.5,
            tail: TailConstants::new(0.3, 1.0).unwrap(),
            l: 1,
            horizon: 2,
        };
        let curve = theorem_bound(&cert, &params).unwrap();
        assert_eq!(curve.arms, vec![1]);
        assert_eq!(curve.et_bound[0], vec![1.0, 1.0]);
        assert!(curve.diverges);
    }

    #[test]
    fn bound_series_matches_direct_summation() {
        let cert = static_cert();
        let tail = TailConstants::new(0.3, 1.0).unwrap();
        let sigma = 0.5;
        let alpha = 3.0 / (2.0 * tail.kappa * sigma * sigma);
        let params = BoundParams {
            schedule: ExplorationSchedule::GenericLog { alpha, beta: alpha },
            sigma,
            tail,
            l: 1,
            horizon: 200,
        };
        let curve = theorem_bound(&cert, &params).unwrap();
        assert!((curve.exponent - 3.0).abs() < 1e-12);
        // Boundary case: α equals the threshold, which is not strictly above it.
        assert!(curve.diverges);
        let gap = 0.4f64;
        for n in [1usize, 2, 3, 50, 200] {
            let oracle: f64 = (1..n).rev().map(|t| (t as f64).ln() / (t as f64).powi(3)).sum();
            let psi = alpha * (n as f64).ln();
            let expected = 4.0 * sigma * sigma / (gap * gap) * psi + 1.0 + tail.nu * oracle;
            assert!((curve.et_bound[0][n - 1] - expected).abs() <= 1e-12 * expected, "n = {n}");
        }
        let c1 = cert.delta_upper * (1.0 + tail.nu * (1..200).map(|t| (t as f64).ln() / (t as f64).powi(3)).sum::<f64>());
        assert!((curve.c1 - c1).abs() < 1e-12);
    }

    #[test]
    fn bound_needs_positive_gaps() {
        let cert = certify(&build_static(&[0.5, 0.5], &[0.1, 0.1]).unwrap(), 10).unwrap();
        let params = BoundParams {
            schedule: ExplorationSchedule::UcbNormal,
            sigma: 0.5,
            tail: TailConstants::new(0.3, 1.0).unwrap(),
            l: 1,
            horizon: 10,
        };
        assert!(matches!(theorem_bound(&cert, &params), Err(Error::UndefinedBound(_))));
    }

    #[test]
    fn deterministic_rewards_never_exceed() {
        let model = build_static(&[0.9, 0.5], &[0.0, 0.0]).unwrap();
        let tail = TailConstants::new(0.3, model.reward_cap).unwrap();
        let report = verify_tail(&model, &tail, &[2, 10], &[1e-6, 1.0], 200, 0, 2).unwrap();
        assert!(report.passed());
        assert!(report.rows.iter().all(|r| r.empirical_upper == 0.0 && r.empirical_lower == 0.0));
    }

    #[test]
    fn tiny_widths_are_exceeded_often() {
        // With a width far below the noise level, roughly half of the runs
        // land above and half below; the clamped bound of 1 still holds.
        let model = build_static(&[0.5, 0.5], &[0.4, 0.4]).unwrap();
        let tail = TailConstants::new(0.3, model.reward_cap).unwrap();
        let report = verify_tail(&model, &tail, &[20], &[1e-12], 2000, 3, 2).unwrap();
        let row = report.rows[0];
        assert!(row.empirical_upper > 0.4 && row.empirical_lower > 0.4, "{row:?}");
        assert!(row.pass);
    }

    #[test]
    fn huge_thresholds_require_zero_exceedance() {
        let model = park();
        let tail = TailConstants::new(0.3, model.reward_cap).unwrap();
        let chi2 = model.reward_cap.powi(2);
        let report = verify_tail(&model, &tail, &[50], &[100.0 * chi2], 300, 8, 2).unwrap();
        assert!(report.rows[0].bound < 1.0 / 300.0);
        assert_eq!(report.rows[0].empirical_upper, 0.0);
        assert!(report.passed());
    }
}
