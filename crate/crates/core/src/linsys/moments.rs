use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::model::SystemModel;

/// Exact first and second moments of `θ^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub t: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MomentState {
    pub fn initial(model: &SystemModel) -> Self {
        Self {
            t: 0,
            mean: model.theta0_mean.clone(),
            cov: model.theta0_cov.clone(),
        }
    }

    /// Advances both moments by one step.
    pub fn step(&self, model: &SystemModel) -> Self {
        let mut next = propagate_mean(model, self);
        next.cov = propagate_cov(model, self).cov;
        next
    }
}

/// `E(θ^t) = A^t E(θ^{t-1})`; the covariance is carried over unchanged.
pub fn propagate_mean(model: &SystemModel, state: &MomentState) -> MomentState {
    let t = state.t + 1;
    let mean = match model.dynamics.eval_ref(t) {
        Some(a) => a * &state.mean,
        None => DVector::zeros(state.mean.len()),
    };
    MomentState {
        t,
        mean,
        cov: state.cov.clone(),
    }
}

/// `Σ(θ^t) = A^t Σ(θ^{t-1}) A^tᵀ + B^t Σ_θ B^tᵀ`, re-symmetrized.
pub fn propagate_cov(model: &SystemModel, state: &MomentState) -> MomentState {
    let t = state.t + 1;
    let m = state.mean.len();
    let mut cov = match model.dynamics.eval_ref(t) {
        Some(a) => a * &state.cov * a.transpose(),
        None => DMatrix::zeros(m, m),
    };
    if let Some(b) = model.noise_input.eval_ref(t) {
        cov += b * model.process_cov() * b.transpose();
    }
    MomentState {
        t,
        mean: state.mean.clone(),
        cov: symmetrize(cov),
    }
}

pub(crate) fn symmetrize(c: DMatrix<f64>) -> DMatrix<f64> {
    (&c + c.transpose()) * 0.5
}

/// `Φ^t_τ = A^t A^{t-1} ⋯ A^τ`, the identity when `τ = t + 1`.
pub fn transition_matrix(model: &SystemModel, tau: usize, t: usize) -> DMatrix<f64> {
    assert!(tau >= 1 && tau <= t + 1, "transition matrix needs 1 <= tau <= t + 1");
    let m = model.state_dim();
    let mut phi = DMatrix::identity(m, m);
    for j in tau..=t {
        phi = model.dynamics.eval(j) * phi;
    }
    phi
}

/// Closed-form covariance
/// `Φ^t_1 Σ(θ^0) Φ^t_1ᵀ + Σ_{τ=1..t} Φ^t_{τ+1} B^τ Σ_θ B^τᵀ Φ^t_{τ+1}ᵀ`,
/// evaluated from transition matrices rather than the recursion.
pub fn closed_form_cov(model: &SystemModel, t: usize) -> DMatrix<f64> {
    let m = model.state_dim();
    let sigma_theta = model.process_cov();
    // Φ^t_{τ+1} for τ = t, t-1, ..., 0, built from the right end.
    let mut phi = DMatrix::identity(m, m);
    let mut total = DMatrix::zeros(m, m);
    for tau in (1..=t).rev() {
        if let Some(b) = model.noise_input.eval_ref(tau) {
            let g = &phi * b;
            total += &g * &sigma_theta * g.transpose();
        }
        phi *= model.dynamics.eval(tau);
    }
    total += &phi * &model.theta0_cov * phi.transpose();
    symmetrize(total)
}

/// `E(X_i^t) = γ_i^t H_i^t E(θ^t)` at the state's step.
pub fn expected_reward(model: &SystemModel, state: &MomentState, arm: usize) -> f64 {
    model.availability[arm].gamma(state.t) * model.output(arm, state.t, &state.mean)
}

/// `Σ(X_i^t) = (γ_i^t)² (H_i^t Σ(θ^t) H_i^tᵀ + σ_{x,i}² (g_i^t)²)`.
pub fn reward_cov(model: &SystemModel, state: &MomentState, arm: usize) -> f64 {
    let t = state.t;
    let gamma = model.availability[arm].gamma(t);
    if gamma == 0.0 {
        return 0.0;
    }
    let state_part = match model.outputs[arm].eval_ref(t) {
        Some(h) => (h * &state.cov * h.transpose())[(0, 0)],
        None => 0.0,
    };
    let g = model.noise_gain[arm].eval(t);
    gamma * gamma * (state_part + model.obs_variance(arm) * g * g)
}

/// Spectral norm, the square root of the largest eigenvalue of `MᵀM`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues.max().max(0.0).sqrt()
}

/// Upper bound on `‖Σ(θ^t)‖` from the growth of the transition matrices:
/// `ā² ‖Σ(θ^0)‖ + ā² ‖Σ_θ‖ Σ_{τ≤t} ‖B^τ‖²`, with `ā` no smaller than one
/// because the empty product `Φ^t_{t+1} = I` enters the sum.
pub fn covariance_growth_bound(model: &SystemModel, a_upper: f64, t: usize) -> f64 {
    let a = a_upper.max(1.0);
    let b_sum: f64 = (1..=t)
        .map(|tau| model.noise_input.eval_ref(tau).map_or(0.0, |b| spectral_norm(b).powi(2)))
        .sum();
    a * a * spectral_norm(&model.theta0_cov) + a * a * spectral_norm(&model.process_cov()) * b_sum
}

/// Moments for every step `0..=horizon`, plus the true expected rewards
/// that serve as the simulator's ground truth.
#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub states: Vec<MomentState>,
    /// `expected[t][i] = E(X_i^t)` (zero when unavailable).
    pub expected: Vec<Vec<f64>>,
    /// `raw[t][i] = H_i^t E(θ^t)`, ignoring availability.
    pub raw: Vec<Vec<f64>>,
}

impl MomentTrajectory {
    pub fn compute(model: &SystemModel, horizon: usize) -> Self {
        let mut states = Vec::with_capacity(horizon + 1);
        states.push(MomentState::initial(model));
        for _ in 0..horizon {
            let next = states.last().expect("nonempty").step(model);
            states.push(next);
        }
        let raw: Vec<Vec<f64>> = states
            .iter()
            .map(|s| (0..model.arms()).map(|i| model.output(i, s.t, &s.mean)).collect())
            .collect();
        let expected = states
            .iter()
            .map(|s| (0..model.arms()).map(|i| expected_reward(model, s, i)).collect())
            .collect();
        Self { states, expected, raw }
    }

    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// The availability-aware best arm at step `t` (lowest index on ties),
    /// or `None` when every arm is unavailable.
    pub fn best_available(&self, model: &SystemModel, t: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in (0..model.arms()).filter(|&i| model.is_available(i, t)) {
            if best.is_none_or(|b| self.expected[t][i] > self.expected[t][b]) {
                best = Some(i);
            }
        }
        best
    }
}
