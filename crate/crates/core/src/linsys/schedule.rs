//! Deterministic sequences indexed by the step `t >= 1`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A matrix-valued sequence with a fixed declared shape.
///
/// Tables hold their last entry beyond their length. Periodic schedules
/// store one period, with `eval(1)` returning the first stored matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSchedule {
    Constant(DMatrix<f64>),
    Periodic(Vec<DMatrix<f64>>),
    Table(Vec<DMatrix<f64>>),
    Zero { rows: usize, cols: usize },
}

impl MatrixSchedule {
    pub fn constant(m: DMatrix<f64>) -> Self {
        MatrixSchedule::Constant(m)
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        MatrixSchedule::Zero { rows, cols }
    }

    pub fn identity(n: usize) -> Self {
        MatrixSchedule::Constant(DMatrix::identity(n, n))
    }

    /// Builds a periodic schedule, checking every phase has the same shape.
    pub fn periodic(period: Vec<DMatrix<f64>>) -> Result<Self> {
        check_uniform_shape(&period, "periodic schedule")?;
        Ok(MatrixSchedule::Periodic(period))
    }

    pub fn table(steps: Vec<DMatrix<f64>>) -> Result<Self> {
        check_uniform_shape(&steps, "table schedule")?;
        Ok(MatrixSchedule::Table(steps))
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixSchedule::Constant(m) => m.shape(),
            MatrixSchedule::Periodic(ms) | MatrixSchedule::Table(ms) => ms[0].shape(),
            MatrixSchedule::Zero { rows, cols } => (*rows, *cols),
        }
    }

    pub fn period(&self) -> Option<usize> {
        match self {
            MatrixSchedule::Periodic(ms) => Some(ms.len()),
            MatrixSchedule::Constant(_) | MatrixSchedule::Zero { .. } => Some(1),
            MatrixSchedule::Table(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MatrixSchedule::Zero { .. } => true,
            MatrixSchedule::Constant(m) => m.iter().all(|v| *v == 0.0),
            MatrixSchedule::Periodic(ms) | MatrixSchedule::Table(ms) => {
                ms.iter().all(|m| m.iter().all(|v| *v == 0.0))
            }
        }
    }

    /// The matrix at step `t` (1-based). `t = 0` is treated as `t = 1`.
    pub fn eval(&self, t: usize) -> DMatrix<f64> {
        match self {
            MatrixSchedule::Zero { rows, cols } => DMatrix::zeros(*rows, *cols),
            _ => self.eval_ref(t).expect("non-zero kinds store matrices").clone(),
        }
    }

    /// Borrowing variant of [`eval`](Self::eval); `None` for the zero kind.
    pub fn eval_ref(&self, t: usize) -> Option<&DMatrix<f64>> {
        let t = t.max(1);
        match self {
            MatrixSchedule::Constant(m) => Some(m),
            MatrixSchedule::Periodic(ms) => Some(&ms[(t - 1) % ms.len()]),
            MatrixSchedule::Table(ms) => Some(&ms[(t - 1).min(ms.len() - 1)]),
            MatrixSchedule::Zero { .. } => None,
        }
    }

    pub(crate) fn stored(&self) -> &[DMatrix<f64>] {
        match self {
            MatrixSchedule::Constant(m) => std::slice::from_ref(m),
            MatrixSchedule::Periodic(ms) | MatrixSchedule::Table(ms) => ms,
            MatrixSchedule::Zero { .. } => &[],
        }
    }
}

fn check_uniform_shape(ms: &[DMatrix<f64>], what: &str) -> Result<()> {
    let first = ms
        .first()
        .ok_or_else(|| Error::Config(format!("{what} needs at least one matrix")))?;
    if let Some(bad) = ms.iter().find(|m| m.shape() != first.shape()) {
        return Err(Error::dim(what, format!("{:?}", first.shape()), format!("{:?}", bad.shape())));
    }
    Ok(())
}

/// A real-valued sequence, used for the noise gains `g_i^t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSchedule {
    Constant(f64),
    Periodic(Vec<f64>),
    Table(Vec<f64>),
}

impl ScalarSchedule {
    pub fn eval(&self, t: usize) -> f64 {
        let t = t.max(1);
        match self {
            ScalarSchedule::Constant(v) => *v,
            ScalarSchedule::Periodic(vs) => vs[(t - 1) % vs.len()],
            ScalarSchedule::Table(vs) => vs[(t - 1).min(vs.len() - 1)],
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            ScalarSchedule::Constant(v) => std::slice::from_ref(v),
            ScalarSchedule::Periodic(vs) | ScalarSchedule::Table(vs) => vs,
        }
    }
}

/// Availability flags `γ_i^t ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum AvailabilitySchedule {
    Always,
    Periodic(Vec<bool>),
    /// Holds its last entry beyond its length.
    Table(Vec<bool>),
    /// Unavailable exactly when the nearest integer of `ln(offset + t)`
    /// steps up by one between `t` and `t + 1`.
    LogSteps { offset: u64 },
}

impl AvailabilitySchedule {
    pub fn is_available(&self, t: usize) -> bool {
        let t = t.max(1);
        match self {
            AvailabilitySchedule::Always => true,
            AvailabilitySchedule::Periodic(vs) => vs[(t - 1) % vs.len()],
            AvailabilitySchedule::Table(vs) => vs[(t - 1).min(vs.len() - 1)],
            AvailabilitySchedule::LogSteps { offset } => log_step_available(*offset, t as u64),
        }
    }

    /// `γ^t` as a number.
    pub fn gamma(&self, t: usize) -> f64 {
        if self.is_available(t) {
            1.0
        } else {
            0.0
        }
    }
}

/// `[x]`: nearest integer, halves rounded away from zero.
pub(crate) fn nearest_integer(x: f64) -> f64 {
    x.round()
}

pub(crate) fn log_step_available(offset: u64, t: u64) -> bool {
    let lo = nearest_integer(((offset + t) as f64).ln());
    let hi = nearest_integer(((offset + t + 1) as f64).ln());
    hi - lo != 1.0
}
