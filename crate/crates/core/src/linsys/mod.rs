//! The time-varying linear stochastic system behind the rewards, and exact
//! propagation of its moments.

mod model;
mod moments;
mod schedule;

pub use model::{ModelParts, SystemModel};
pub use moments::{
    closed_form_cov, covariance_growth_bound, expected_reward, propagate_cov, propagate_mean,
    reward_cov, spectral_norm, transition_matrix, MomentState, MomentTrajectory,
};
pub use schedule::{AvailabilitySchedule, MatrixSchedule, ScalarSchedule};

#[cfg(test)]
use model::check_psd;
pub(crate) use schedule::log_step_available;
