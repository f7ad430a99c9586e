use serde::{Deserialize, Serialize};

use super::normal::inv_norm_cdf;
use crate::error::{Error, Result};

/// The exploration schedule `Ψ(t)` scaling the confidence bonus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplorationSchedule {
    /// `Ψ(t) = 16 log t`.
    UcbNormal,
    /// `Ψ(t) = (Φ^{-1}(1 - 1/(sqrt(2πe) t²)))²`.
    UclQuantile,
    /// `Ψ(t) = α log t`, with a declared ceiling `β ≥ α`.
    GenericLog { alpha: f64, beta: f64 },
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        ExplorationSchedule::UcbNormal
    }
}

impl ExplorationSchedule {
    pub fn validate(&self) -> Result<()> {
        if let ExplorationSchedule::GenericLog { alpha, beta } = *self {
            if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && alpha <= beta) {
                return Err(Error::Config(format!(
                    "generic_log schedule needs 0 <= alpha <= beta, got alpha={alpha}, beta={beta}"
                )));
            }
        }
        Ok(())
    }

    pub fn psi(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::Domain("the exploration schedule is defined for t >= 1".into()));
        }
        let log_t = (t as f64).ln();
        Ok(match *self {
            ExplorationSchedule::UcbNormal => 16.0 * log_t,
            ExplorationSchedule::GenericLog { alpha, .. } => alpha * log_t,
            ExplorationSchedule::UclQuantile => {
                let tt = t as f64;
                let root = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
                inv_norm_cdf(1.0 - 1.0 / (root * tt * tt))?.powi(2)
            }
        })
    }

    /// Constants `(α, β)` with `α log t ≤ Ψ(t) ≤ β log t`. For the quantile
    /// schedule they are the extreme ratios over `2 ≤ t ≤ horizon`.
    pub fn log_bounds(&self, horizon: usize) -> (f64, f64) {
        match *self {
            ExplorationSchedule::UcbNormal => (16.0, 16.0),
            ExplorationSchedule::GenericLog { alpha, beta } => (alpha, beta),
            ExplorationSchedule::UclQuantile => (2..=horizon.max(2))
                .map(|t| self.psi(t).expect("t >= 2") / (t as f64).ln())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r))),
        }
    }
}

/// Constants of the sample-mean tail bound for rewards in `[0, χ_x]`:
/// `κ = (1 - η²/16)/χ_x²` and `ν = 1/log(1 + η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    pub eta: f64,
    pub chi: f64,
    pub kappa: f64,
    pub nu: f64,
}

pub const DEFAULT_ETA: f64 = 0.3;

impl TailConstants {
    pub fn new(eta: f64, chi: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 4.0) {
            return Err(Error::Config(format!("eta must lie in (0, 4), got {eta}")));
        }
        if !(chi.is_finite() && chi > 0.0) {
            return Err(Error::Config(format!("reward cap must be positive, got {chi}")));
        }
        Ok(Self {
            eta,
            chi,
            kappa: (1.0 - eta * eta / 16.0) / (chi * chi),
            nu: 1.0 / (1.0 + eta).ln(),
        })
    }

    /// `ν log t / exp(2κϑ)`, unclamped.
    pub fn raw_bound(&self, t: usize, vartheta: f64) -> f64 {
        self.nu * (t as f64).ln() * (-2.0 * self.kappa * vartheta).exp()
    }

    /// The tail bound clamped to `[0, 1]`.
    pub fn tail_bound(&self, t: usize, vartheta: f64) -> f64 {
        self.raw_bound(t, vartheta).clamp(0.0, 1.0)
    }
}
