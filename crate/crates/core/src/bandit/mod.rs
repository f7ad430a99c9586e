//! Sample-mean estimators, exploration schedules and the UCB allocation
//! rule.

mod normal;
mod policy;
mod schedule;

pub use normal::{inv_norm_cdf, norm_cdf, norm_pdf, norm_sf};
pub use policy::{ArmStats, InitMode, PolicyState};
pub use schedule::{ExplorationSchedule, TailConstants, DEFAULT_ETA};
