use serde::Serialize;

use crate::assumptions::AssumptionCertificate;
use crate::bandit::{ExplorationSchedule, TailConstants};
use crate::error::{Error, Result};

/// Inputs of the reference regret bound besides the certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub schedule: ExplorationSchedule,
    pub sigma: f64,
    pub tail: TailConstants,
    /// The analysis constant `l ≥ 1`.
    pub l: usize,
    pub horizon: usize,
}

/// Reference curves
///
/// ```text
/// E(T_i(n)) ≤ γ ln n + (4σ²/Δ_i²) Ψ(n) + l + ν Σ_{t=l}^{n-1} ln t / t^{2κσ²α}
/// R_n       ≤ Δ̄ Σ_{i≠i*} bound_i(n)
/// ```
///
/// for `n = 1..=N`, with `α, β` read off `Ψ` over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    /// Suboptimal arms, 0-based, in index order.
    pub arms: Vec<usize>,
    /// `et_bound[j][n - 1]` for arm `arms[j]`.
    pub et_bound: Vec<Vec<f64>>,
    pub r_bound: Vec<f64>,
    /// Coefficient of `ln n` after bounding `Ψ(n) ≤ β ln n`.
    pub c0: f64,
    /// The remaining terms evaluated at `n = N`.
    pub c1: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `2κσ²α`, the exponent of the series.
    pub exponent: f64,
    /// Set when `α ≤ 3/(2κσ²)`: the series then need not converge and
    /// the curve is no longer logarithmic.
    pub diverges: bool,
}

pub fn theorem_bound(cert: &AssumptionCertificate, params: &BoundParams) -> Result<BoundCurve> {
    let BoundParams {
        schedule,
        sigma,
        tail,
        l,
        horizon,
    } = *params;
    if horizon == 0 {
        return Err(Error::Domain("the bound needs a horizon of at least 1".into()));
    }
    if l == 0 {
        return Err(Error::Domain("the analysis constant l must be at least 1".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("exploration scale must be positive, got {sigma}")));
    }
    let star = cert
        .optimal_arm
        .ok_or_else(|| Error::UndefinedBound("no unique optimal arm".into()))?;
    let mut arms = Vec::new();
    let mut gaps = Vec::new();
    for (i, d) in cert.delta_lower.iter().enumerate() {
        if i == star {
            continue;
        }
        match d {
            Some(d) if *d > 0.0 => {
                arms.push(i);
                gaps.push(*d);
            }
            _ => return Err(Error::UndefinedBound(format!("gap of arm {} is zero", i + 1))),
        }
    }

    let (alpha, beta) = schedule.log_bounds(horizon.max(2));
    let exponent = 2.0 * tail.kappa * sigma * sigma * alpha;
    let diverges = alpha <= 3.0 / (2.0 * tail.kappa * sigma * sigma);
    let gamma = cert.availability_gamma;

    // series[n - 1] = Σ_{t=l}^{n-1} ln t / t^exponent, summed directly.
    let mut series = Vec::with_capacity(horizon);
    let mut acc = 0.0;
    for n in 1..=horizon {
        if n >= 2 && n - 1 >= l {
            let t = (n - 1) as f64;
            acc += t.ln() / t.powf(exponent);
        }
        series.push(acc);
    }
    let psi: Vec<f64> = (1..=horizon).map(|n| schedule.psi(n)).collect::<Result<_>>()?;

    let et_bound: Vec<Vec<f64>> = gaps
        .iter()
        .map(|d| {
            (1..=horizon)
                .map(|n| {
                    gamma * (n as f64).ln()
                        + 4.0 * sigma * sigma / (d * d) * psi[n - 1]
                        + l as f64
                        + tail.nu * series[n - 1]
                })
                .collect()
        })
        .collect();
    let r_bound = (0..horizon)
        .map(|j| cert.delta_upper * et_bound.iter().map(|b| b[j]).sum::<f64>())
        .collect();
    let c0 = cert.delta_upper * gaps.iter().map(|d| gamma + 4.0 * sigma * sigma * beta / (d * d)).sum::<f64>();
    let c1 = cert.delta_upper * gaps.len() as f64 * (l as f64 + tail.nu * series[horizon - 1]);

    Ok(BoundCurve {
        arms,
        et_bound,
        r_bound,
        c0,
        c1,
        alpha,
        beta,
        exponent,
        diverges,
    })
}
