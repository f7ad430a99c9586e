use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::schedule::{AvailabilitySchedule, MatrixSchedule, ScalarSchedule};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

const PSD_TOLERANCE: f64 = 1e-10;

/// The generative environment: a shared state `θ^t ∈ R^m` driven by
///
/// ```text
/// θ^t   = A^t θ^{t-1} + B^t n_θ^t
/// X_i^t = γ_i^t (H_i^t θ^t + g_i^t n_{x,i}^t)
/// ```
///
/// with bounded zero-mean noises. Construct it through [`SystemModel::new`]
/// so that shapes and flags are validated once.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    /// `A^t`, m×m.
    pub dynamics: MatrixSchedule,
    /// `B^t`, m×q.
    pub noise_input: MatrixSchedule,
    /// `H_i^t`, one 1×m schedule per arm.
    pub outputs: Vec<MatrixSchedule>,
    /// `g_i^t > 0`.
    pub noise_gain: Vec<ScalarSchedule>,
    /// `γ_i^t`.
    pub availability: Vec<AvailabilitySchedule>,
    /// `n_θ^t`, q-dimensional.
    pub process_noise: NoiseSpec,
    /// `n_{x,i}^t`, scalar per arm.
    pub obs_noise: Vec<NoiseSpec>,
    pub theta0_mean: DVector<f64>,
    pub theta0_cov: DMatrix<f64>,
    /// `χ_x`: the declared upper end of the reward support `[0, χ_x]`.
    pub reward_cap: f64,
}

/// Everything needed to assemble a [`SystemModel`]; validated by
/// [`SystemModel::new`].
#[derive(Debug, Clone)]
pub struct ModelParts {
    pub dynamics: MatrixSchedule,
    pub noise_input: MatrixSchedule,
    pub outputs: Vec<MatrixSchedule>,
    pub noise_gain: Vec<ScalarSchedule>,
    pub availability: Vec<AvailabilitySchedule>,
    pub process_noise: NoiseSpec,
    pub obs_noise: Vec<NoiseSpec>,
    pub theta0_mean: DVector<f64>,
    pub theta0_cov: DMatrix<f64>,
    pub reward_cap: f64,
}

impl SystemModel {
    pub fn new(parts: ModelParts) -> Result<Self> {
        let model = SystemModel {
            dynamics: parts.dynamics,
            noise_input: parts.noise_input,
            outputs: parts.outputs,
            noise_gain: parts.noise_gain,
            availability: parts.availability,
            process_noise: parts.process_noise,
            obs_noise: parts.obs_noise,
            theta0_mean: parts.theta0_mean,
            theta0_cov: parts.theta0_cov,
            reward_cap: parts.reward_cap,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn arms(&self) -> usize {
        self.outputs.len()
    }

    pub fn state_dim(&self) -> usize {
        self.theta0_mean.len()
    }

    pub fn noise_dim(&self) -> usize {
        self.process_noise.dim()
    }

    fn validate(&self) -> Result<()> {
        let m = self.state_dim();
        let k = self.arms();
        if m == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        if k == 0 {
            return Err(Error::Config("a model needs at least one arm".into()));
        }
        if self.dynamics.shape() != (m, m) {
            return Err(Error::dim("A", format!("{m}x{m}"), format!("{:?}", self.dynamics.shape())));
        }
        self.process_noise.validate()?;
        let q = self.noise_dim();
        if self.noise_input.shape() != (m, q) {
            return Err(Error::dim("B", format!("{m}x{q}"), format!("{:?}", self.noise_input.shape())));
        }
        for (what, len) in [
            ("noise gains", self.noise_gain.len()),
            ("availability schedules", self.availability.len()),
            ("observation noises", self.obs_noise.len()),
        ] {
            if len != k {
                return Err(Error::dim(what, k, len));
            }
        }
        for (i, h) in self.outputs.iter().enumerate() {
            if h.shape() != (1, m) {
                return Err(Error::dim(format!("H_{}", i + 1), format!("1x{m}"), format!("{:?}", h.shape())));
            }
        }
        for (i, g) in self.noise_gain.iter().enumerate() {
            if g.values().is_empty() || g.values().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config(format!("g_{} must be positive and finite", i + 1)));
            }
        }
        for (i, gamma) in self.availability.iter().enumerate() {
            match gamma {
                AvailabilitySchedule::Periodic(v) | AvailabilitySchedule::Table(v) if v.is_empty() => {
                    return Err(Error::Config(format!("availability schedule {} is empty", i + 1)));
                }
                _ => {}
            }
        }
        for (i, noise) in self.obs_noise.iter().enumerate() {
            noise.validate()?;
            if noise.dim() != 1 {
                return Err(Error::dim(format!("observation noise {}", i + 1), 1, noise.dim()));
            }
        }
        if self.theta0_cov.shape() != (m, m) {
            return Err(Error::dim("initial covariance", format!("{m}x{m}"), format!("{:?}", self.theta0_cov.shape())));
        }
        check_psd(&self.theta0_cov, "initial covariance")?;
        if !(self.reward_cap.is_finite() && self.reward_cap > 0.0) {
            return Err(Error::Config(format!("reward cap must be positive, got {}", self.reward_cap)));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        let all_schedules = std::iter::once(&self.dynamics)
            .chain(std::iter::once(&self.noise_input))
            .chain(self.outputs.iter());
        for s in all_schedules {
            if !s.stored().iter().all(finite) {
                return Err(Error::Config("schedule entries must be finite".into()));
            }
        }
        Ok(())
    }

    /// `Σ_θ`, the process-noise covariance.
    pub fn process_cov(&self) -> DMatrix<f64> {
        self.process_noise.covariance()
    }

    /// `σ_{x,i}²`.
    pub fn obs_variance(&self, arm: usize) -> f64 {
        self.obs_noise[arm].covariance()[(0, 0)]
    }

    /// Scalar product `H_i^t θ` without building intermediate matrices.
    pub fn output(&self, arm: usize, t: usize, theta: &DVector<f64>) -> f64 {
        match self.outputs[arm].eval_ref(t) {
            Some(h) => h.row(0).iter().zip(theta.iter()).map(|(a, b)| a * b).sum(),
            None => 0.0,
        }
    }

    pub fn is_available(&self, arm: usize, t: usize) -> bool {
        self.availability[arm].is_available(t)
    }

    pub fn availability_mask(&self, t: usize) -> Vec<bool> {
        (0..self.arms()).map(|i| self.is_available(i, t)).collect()
    }

    /// Draws `θ^0` with the configured mean and covariance, using a
    /// bounded unit-variance uniform driven through a square root of the
    /// covariance.
    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let m = self.state_dim();
        if self.theta0_cov.iter().all(|v| *v == 0.0) {
            return self.theta0_mean.clone();
        }
        let eig = SymmetricEigen::new(self.theta0_cov.clone());
        let mut root = eig.eigenvectors.clone();
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            root.column_mut(j).scale_mut(s);
        }
        let v = DVector::from_fn(m, |_, _| 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0));
        &self.theta0_mean + root * v
    }

    /// One transition `θ^t = A^t θ^{t-1} + B^t n_θ^t`.
    pub fn step_state<R: Rng + ?Sized>(
        &self,
        theta_prev: &DVector<f64>,
        t: usize,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        let m = self.state_dim();
        if theta_prev.len() != m {
            return Err(Error::dim("state", m, theta_prev.len()));
        }
        if t == 0 {
            return Err(Error::Domain("state transitions start at t = 1".into()));
        }
        let mut next = self.dynamics.eval_ref(t).map_or_else(|| DVector::zeros(m), |a| a * theta_prev);
        if let Some(b) = self.noise_input.eval_ref(t) {
            let noise = self.process_noise.sample(rng);
            next.gemv(1.0, b, &noise, 1.0);
        }
        Ok(next)
    }

    /// One reward `X_i^t = γ_i^t (H_i^t θ^t + g_i^t n_{x,i}^t)`; exactly zero
    /// for an unavailable arm (no observation noise is drawn then).
    pub fn emit_reward<R: Rng + ?Sized>(
        &self,
        theta: &DVector<f64>,
        arm: usize,
        t: usize,
        rng: &mut R,
    ) -> Result<f64> {
        if arm >= self.arms() {
            return Err(Error::Domain(format!("arm {} out of range 1..={}", arm + 1, self.arms())));
        }
        if theta.len() != self.state_dim() {
            return Err(Error::dim("state", self.state_dim(), theta.len()));
        }
        if !self.is_available(arm, t) {
            return Ok(0.0);
        }
        let noise = self.obs_noise[arm].sample_scalar(rng);
        Ok(self.output(arm, t, theta) + self.noise_gain[arm].eval(t) * noise)
    }

    /// Whether `reward` lies in the declared support `[0, χ_x]`.
    pub fn in_support(&self, reward: f64) -> bool {
        (0.0..=self.reward_cap).contains(&reward)
    }
}

pub(crate) fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if asym > PSD_TOLERANCE * m.amax().max(1.0) {
        return Err(Error::Config(format!("{what} is not symmetric (asymmetry {asym:e})")));
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE * m.amax().max(1.0) {
        return Err(Error::Config(format!("{what} is not positive semidefinite (eigenvalue {min:e})")));
    }
    Ok(())
}
