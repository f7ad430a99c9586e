//! Bounded zero-mean noise sources and keyed random streams.
//!
//! Every random draw in an experiment comes from a stream derived from a
//! [`StreamKey`]: the master seed, the replication index and the role the
//! stream plays. Streams are independent of each other and of the order in
//! which replications are scheduled, so an experiment is a pure function of
//! its configuration and seed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The generator behind every derived stream.
pub type Stream = ChaCha12Rng;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

fn default_dim() -> usize {
    1
}

/// A bounded, zero-mean noise distribution with independent or linearly
/// mixed components.
///
/// Gaussian noise is deliberately absent: the tail bounds used by the
/// estimators require rewards with bounded support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Zero {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// Independent components, each uniform on `[-half_width, half_width]`.
    UniformSymmetric {
        half_width: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// `x = L v` where each `v_j` is uniform on `[-sqrt 3, sqrt 3]` (unit
    /// variance), so the covariance is `L Lᵀ`. `scale` holds `L` row-major.
    ScaledShiftedUniform { scale: Vec<Vec<f64>> },
    /// Independent components taking `±magnitudes[j]` with probability
    /// `weights[j] / 2` each.
    DiscreteSymmetric {
        magnitudes: Vec<f64>,
        weights: Vec<f64>,
        #[serde(default = "default_dim")]
        dim: usize,
    },
}

impl NoiseSpec {
    pub fn zero(dim: usize) -> Self {
        NoiseSpec::Zero { dim }
    }

    pub fn uniform(half_width: f64, dim: usize) -> Self {
        NoiseSpec::UniformSymmetric { half_width, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            NoiseSpec::Zero { dim }
            | NoiseSpec::UniformSymmetric { dim, .. }
            | NoiseSpec::DiscreteSymmetric { dim, .. } => *dim,
            NoiseSpec::ScaledShiftedUniform { scale } => scale.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("noise dimension must be positive".into()));
        }
        match self {
            NoiseSpec::Zero { .. } => Ok(()),
            NoiseSpec::UniformSymmetric { half_width, .. } => {
                if half_width.is_finite() && *half_width >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "uniform half-width must be finite and nonnegative, got {half_width}"
                    )))
                }
            }
            NoiseSpec::ScaledShiftedUniform { scale } => {
                let cols = scale[0].len();
                if cols == 0 || scale.iter().any(|row| row.len() != cols) {
                    return Err(Error::Config("scale matrix rows must share a positive length".into()));
                }
                if scale.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Config("scale matrix must be finite".into()));
                }
                Ok(())
            }
            NoiseSpec::DiscreteSymmetric { magnitudes, weights, .. } => {
                if magnitudes.is_empty() || magnitudes.len() != weights.len() {
                    return Err(Error::Config(
                        "discrete noise needs matching, nonempty magnitudes and weights".into(),
                    ));
                }
                if magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0)
                    || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
                {
                    return Err(Error::Config("discrete noise atoms and weights must be finite and nonnegative".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("discrete noise weights sum to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// Analytical covariance of one draw.
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = self.dim();
        match self {
            NoiseSpec::Zero { .. } => DMatrix::zeros(d, d),
            NoiseSpec::UniformSymmetric { half_width, .. } => {
                DMatrix::identity(d, d) * (half_width * half_width / 3.0)
            }
            NoiseSpec::ScaledShiftedUniform { .. } => {
                let l = self.scale_matrix();
                &l * l.transpose()
            }
            NoiseSpec::DiscreteSymmetric { magnitudes, weights, .. } => {
                let var: f64 = magnitudes.iter().zip(weights).map(|(m, w)| w * m * m).sum();
                DMatrix::identity(d, d) * var
            }
        }
    }

    /// Per-component bound on `|x_j|`.
    pub fn support(&self) -> Vec<f64> {
        let d = self.dim();
        match self {
            NoiseSpec::Zero { .. } => vec![0.0; d],
            NoiseSpec::UniformSymmetric { half_width, .. } => vec![*half_width; d],
            NoiseSpec::ScaledShiftedUniform { scale } => scale
                .iter()
                .map(|row| SQRT_3 * row.iter().map(|v| v.abs()).sum::<f64>())
                .collect(),
            NoiseSpec::DiscreteSymmetric { magnitudes, .. } => {
                vec![magnitudes.iter().cloned().fold(0.0, f64::max); d]
            }
        }
    }

    /// Largest per-component support bound.
    pub fn support_bound(&self) -> f64 {
        self.support().into_iter().fold(0.0, f64::max)
    }

    fn scale_matrix(&self) -> DMatrix<f64> {
        match self {
            NoiseSpec::ScaledShiftedUniform { scale } => {
                DMatrix::from_fn(scale.len(), scale[0].len(), |i, j| scale[i][j])
            }
            _ => unreachable!("scale_matrix on a non-scaled noise kind"),
        }
    }

    /// Writes one draw into `out`, which must have length `dim()`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut DVector<f64>) {
        debug_assert_eq!(out.len(), self.dim());
        match self {
            NoiseSpec::Zero { .. } => out.fill(0.0),
            NoiseSpec::UniformSymmetric { half_width, .. } => {
                for x in out.iter_mut() {
                    *x = half_width * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
            NoiseSpec::ScaledShiftedUniform { scale } => {
                let v: Vec<f64> = (0..scale[0].len())
                    .map(|_| SQRT_3 * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                for (x, row) in out.iter_mut().zip(scale) {
                    *x = row.iter().zip(&v).map(|(l, v)| l * v).sum();
                }
            }
            NoiseSpec::DiscreteSymmetric { magnitudes, weights, .. } => {
                for x in out.iter_mut() {
                    let mut u = rng.random::<f64>();
                    let mut atom = magnitudes[magnitudes.len() - 1];
                    for (m, w) in magnitudes.iter().zip(weights) {
                        if u < *w {
                            atom = *m;
                            break;
                        }
                        u -= w;
                    }
                    *x = if rng.random::<bool>() { atom } else { -atom };
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.sample_into(rng, &mut out);
        out
    }

    /// One draw of a one-dimensional spec, without allocating.
    pub fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        debug_assert_eq!(self.dim(), 1);
        match self {
            NoiseSpec::Zero { .. } => 0.0,
            NoiseSpec::UniformSymmetric { half_width, .. } => {
                half_width * (2.0 * rng.random::<f64>() - 1.0)
            }
            _ => self.sample(rng)[0],
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<DVector<f64>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    ProcessNoise,
    ObsNoise(usize),
    TieBreak,
    InitialState,
}

impl StreamRole {
    fn tag(self) -> (u8, u64) {
        match self {
            StreamRole::ProcessNoise => (1, 0),
            StreamRole::ObsNoise(arm) => (2, arm as u64),
            StreamRole::TieBreak => (3, 0),
            StreamRole::InitialState => (4, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub replication: u64,
    pub role: StreamRole,
}

impl StreamKey {
    pub fn new(master_seed: u64, replication: u64, role: StreamRole) -> Self {
        Self {
            master_seed,
            replication,
            role,
        }
    }
}

/// Derives the stream for `key` by hashing the key into a generator seed.
pub fn derive_stream(key: StreamKey) -> Stream {
    let (tag, index) = key.role.tag();
    let mut hasher = Sha256::new();
    hasher.update(b"dmab/stream/v1");
    hasher.update(key.master_seed.to_le_bytes());
    hasher.update(key.replication.to_le_bytes());
    hasher.update([tag]);
    hasher.update(index.to_le_bytes());
    let seed: [u8; 32] = hasher.finalize().into();
    Stream::from_seed(seed)
}

/// All streams consumed by one replication of an episode.
#[derive(Debug, Clone)]
pub struct EpisodeStreams {
    pub process: Stream,
    pub initial: Stream,
    pub observation: Vec<Stream>,
    pub tie_break: Stream,
}

impl EpisodeStreams {
    pub fn new(master_seed: u64, replication: u64, arms: usize) -> Self {
        let key = |role| derive_stream(StreamKey::new(master_seed, replication, role));
        Self {
            process: key(StreamRole::ProcessNoise),
            initial: key(StreamRole::InitialState),
            observation: (0..arms).map(|i| key(StreamRole::ObsNoise(i))).collect(),
            tie_break: key(StreamRole::TieBreak),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(seed: u64, rep: u64, role: StreamRole) -> Stream {
        derive_stream(StreamKey::new(seed, rep, role))
    }

    #[test]
    fn zero_noise_is_zero() {
        let mut rng = stream(1, 0, StreamRole::ProcessNoise);
        for v in NoiseSpec::zero(3).sample_n(&mut rng, 10) {
            assert_eq!(v, DVector::zeros(3));
        }
    }

    #[test]
    fn uniform_moments() {
        let spec = NoiseSpec::uniform(50.0, 1);
        let mut rng = stream(7, 0, StreamRole::ObsNoise(0));
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = spec.sample_scalar(&mut rng);
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.2, "mean {mean}");
        let expected = 2500.0 / 3.0;
        assert!((var - expected).abs() / expected < 0.02, "var {var}");
        assert!((spec.covariance()[(0, 0)] - expected).abs() < 1e-12);
    }

    #[test]
    fn discrete_plus_minus_one() {
        let spec = NoiseSpec::DiscreteSymmetric {
            magnitudes: vec![1.0],
            weights: vec![1.0],
            dim: 1,
        };
        spec.validate().unwrap();
        let mut rng = stream(3, 0, StreamRole::ProcessNoise);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| spec.sample_scalar(&mut rng)).collect();
        assert!(xs.iter().all(|x| x.abs() == 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        // sd of the mean is 1/sqrt(n) ~ 0.0022
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert_eq!(spec.covariance()[(0, 0)], 1.0);
    }

    #[test]
    fn scaled_uniform_covariance() {
        let spec = NoiseSpec::ScaledShiftedUniform {
            scale: vec![vec![1.0, 0.0], vec![0.5, 2.0]],
        };
        let c = spec.covariance();
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(0, 1)], 0.5);
        assert_eq!(c[(1, 1)], 4.25);
        let mut rng = stream(11, 2, StreamRole::InitialState);
        let n = 200_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let x = spec.sample(&mut rng);
            acc += &x * x.transpose();
        }
        acc /= n as f64;
        for (a, b) in acc.iter().zip(c.iter()) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }

    #[test]
    fn samples_stay_in_support() {
        let specs = [
            NoiseSpec::uniform(50.0, 2),
            NoiseSpec::ScaledShiftedUniform {
                scale: vec![vec![1.0, -2.0], vec![0.3, 0.0]],
            },
            NoiseSpec::DiscreteSymmetric {
                magnitudes: vec![0.5, 3.0],
                weights: vec![0.25, 0.75],
                dim: 3,
            },
        ];
        let mut rng = stream(5, 9, StreamRole::TieBreak);
        for spec in &specs {
            let bound = spec.support();
            let mut out = DVector::zeros(spec.dim());
            for _ in 0..3_000_000 {
                spec.sample_into(&mut rng, &mut out);
                for (x, b) in out.iter().zip(&bound) {
                    assert!(x.abs() <= *b, "{x} outside ±{b}");
                }
            }
        }
    }

    #[test]
    fn same_key_same_draws() {
        let mut a = stream(42, 3, StreamRole::ObsNoise(2));
        let mut b = stream(42, 3, StreamRole::ObsNoise(2));
        let xa: Vec<u64> = (0..100).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..100).map(|_| b.random()).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn replication_index_changes_draws() {
        let mut a = stream(42, 3, StreamRole::ProcessNoise);
        let mut b = stream(42, 4, StreamRole::ProcessNoise);
        let xa: Vec<u64> = (0..100).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..100).map(|_| b.random()).collect();
        assert!(xa.iter().zip(&xb).all(|(x, y)| x != y));
    }

    #[test]
    fn roles_are_uncorrelated() {
        let mut a = stream(42, 0, StreamRole::ProcessNoise);
        let mut b = stream(42, 0, StreamRole::ObsNoise(0));
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n).map(|_| (a.random(), b.random())).collect();
        let (ma, mb) = pairs
            .iter()
            .fold((0.0, 0.0), |(x, y), (u, v)| (x + u / n as f64, y + v / n as f64));
        let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
        for (u, v) in &pairs {
            cov += (u - ma) * (v - mb);
            va += (u - ma) * (u - ma);
            vb += (v - mb) * (v - mb);
        }
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(NoiseSpec::uniform(-1.0, 1).validate().is_err());
        assert!(NoiseSpec::zero(0).validate().is_err());
        let bad = NoiseSpec::DiscreteSymmetric {
            magnitudes: vec![1.0],
            weights: vec![0.5],
            dim: 1,
        };
        assert!(bad.validate().is_err());
    }
}
