//! Kernels on metric spaces, the median bandwidth heuristic and Gram matrices.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ObjectSeries, Space};

/// Medians below this are treated as a collapsed sample.
pub const MIN_BANDWIDTH: f64 = 1e-12;

/// How the bandwidth of a translation-invariant kernel is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Median of all pairwise distances of the full series.
    Median,
    Fixed(f64),
}

/// Kernel family together with its bandwidth policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// exp(-d^2 / (2 gamma^2))
    Gaussian { bandwidth: Bandwidth },
    /// exp(-d / gamma)
    Laplacian { bandwidth: Bandwidth },
    /// ||x|| + ||y|| - ||x - y||
    BrownianDistance,
}

impl KernelSpec {
    pub const fn gaussian() -> Self {
        KernelSpec::Gaussian {
            bandwidth: Bandwidth::Median,
        }
    }

    pub const fn laplacian() -> Self {
        KernelSpec::Laplacian {
            bandwidth: Bandwidth::Median,
        }
    }

    /// Short label used in tables: GK, LK or BDK.
    pub fn label(&self) -> &'static str {
        match self {
            KernelSpec::Gaussian { .. } => "GK",
            KernelSpec::Laplacian { .. } => "LK",
            KernelSpec::BrownianDistance => "BDK",
        }
    }

    fn bandwidth(&self) -> Option<Bandwidth> {
        match *self {
            KernelSpec::Gaussian { bandwidth } | KernelSpec::Laplacian { bandwidth } => {
                Some(bandwidth)
            }
            KernelSpec::BrownianDistance => None,
        }
    }

    /// Fixes the bandwidth, computing the median heuristic from `series` if needed.
    pub fn resolve(&self, series: &ObjectSeries) -> Result<ResolvedKernel> {
        let gamma = match self.bandwidth() {
            None => None,
            Some(Bandwidth::Fixed(g)) => Some(g),
            Some(Bandwidth::Median) => Some(median_bandwidth(series)?),
        };
        ResolvedKernel::new(*self, gamma)
    }

    /// As [`KernelSpec::resolve`], reusing already computed pairwise distances.
    pub fn resolve_with(&self, dists: &PairwiseDistances) -> Result<ResolvedKernel> {
        let gamma = match self.bandwidth() {
            None => None,
            Some(Bandwidth::Fixed(g)) => Some(g),
            Some(Bandwidth::Median) => Some(dists.median()?),
        };
        ResolvedKernel::new(*self, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        match self.bandwidth() {
            Some(Bandwidth::Fixed(g)) if !(g.is_finite() && g > 0.0) => {
                Err(Error::InvalidBandwidth(g))
            }
            _ => Ok(()),
        }
    }
}

/// A kernel with its bandwidth fixed to a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ResolvedKernel {
    Gaussian { gamma: f64 },
    Laplacian { gamma: f64 },
    BrownianDistance,
}

impl ResolvedKernel {
    /// Pairs a spec with a resolved bandwidth. Gaussian and Laplacian kernels
    /// require `gamma`; the Brownian distance kernel ignores it.
    pub fn new(spec: KernelSpec, gamma: Option<f64>) -> Result<Self> {
        let checked = |g: Option<f64>| -> Result<f64> {
            let g = g.ok_or(Error::MissingBandwidth)?;
            if g.is_finite() && g > 0.0 {
                Ok(g)
            } else {
                Err(Error::InvalidBandwidth(g))
            }
        };
        Ok(match spec {
            KernelSpec::Gaussian { .. } => ResolvedKernel::Gaussian {
                gamma: checked(gamma)?,
            },
            KernelSpec::Laplacian { .. } => ResolvedKernel::Laplacian {
                gamma: checked(gamma)?,
            },
            KernelSpec::BrownianDistance => ResolvedKernel::BrownianDistance,
        })
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            ResolvedKernel::Gaussian { gamma } | ResolvedKernel::Laplacian { gamma } => {
                Some(gamma)
            }
            ResolvedKernel::BrownianDistance => None,
        }
    }

    /// Kernel value from the distance between the points and their norms.
    #[inline]
    pub fn from_distance(&self, dist: f64, norm_x: f64, norm_y: f64) -> f64 {
        match *self {
            ResolvedKernel::Gaussian { gamma } => (-dist * dist / (2.0 * gamma * gamma)).exp(),
            ResolvedKernel::Laplacian { gamma } => (-dist / gamma).exp(),
            ResolvedKernel::BrownianDistance => norm_x + norm_y - dist,
        }
    }

    pub fn eval(&self, space: &Space, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = space.distance(x, y)?;
        Ok(match self {
            ResolvedKernel::BrownianDistance => {
                self.from_distance(d, space.norm_unchecked(x), space.norm_unchecked(y))
            }
            _ => self.from_distance(d, 0.0, 0.0),
        })
    }

    /// Full T x T Gram matrix over the series behind `dists`.
    pub fn gram(&self, dists: &PairwiseDistances) -> DMatrix<f64> {
        let n = dists.len();
        let mut g = DMatrix::zeros(n, n);
        g.as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, col)| {
                for (i, v) in col.iter_mut().enumerate() {
                    *v = self.from_distance(dists.get(i, j), dists.norms[i], dists.norms[j]);
                }
            });
        g
    }
}

/// Evaluates `spec` at (x, y) with an already resolved bandwidth.
pub fn eval_kernel(
    spec: KernelSpec,
    gamma: Option<f64>,
    space: &Space,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    ResolvedKernel::new(spec, gamma)?.eval(space, x, y)
}

/// All pairwise distances of a series, plus each observation's norm.
#[derive(Debug, Clone)]
pub struct PairwiseDistances {
    n: usize,
    dist: Vec<f64>,
    norms: Vec<f64>,
}

impl PairwiseDistances {
    pub fn new(series: &ObjectSeries) -> Self {
        let n = series.len();
        let space = series.space();
        let mut dist = vec![0.0; n * n];
        dist.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
            let xj = series.get(j);
            for (i, v) in col.iter_mut().enumerate() {
                if i != j {
                    *v = space.distance_unchecked(series.get(i), xj);
                }
            }
        });
        let norms = series.iter().map(|x| space.norm_unchecked(x)).collect();
        Self { n, dist, norms }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[j * self.n + i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Median of the n(n-1)/2 distances with i < j.
    pub fn median(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::TooShort {
                needed: 2,
                found: self.n,
            });
        }
        let mut upper = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for j in 1..self.n {
            upper.extend_from_slice(&self.dist[j * self.n..j * self.n + j]);
        }
        let median = median_in_place(&mut upper);
        if median < MIN_BANDWIDTH {
            return Err(Error::DegenerateBandwidth { median });
        }
        Ok(median)
    }
}

/// Sample median; the mean of the two middle order statistics for even counts.
fn median_in_place(v: &mut [f64]) -> f64 {
    let k = v.len();
    let mid = k / 2;
    let (lower, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if k % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Median of all pairwise distances ||X_i - X_j||, i < j.
pub fn median_bandwidth(series: &ObjectSeries) -> Result<f64> {
    PairwiseDistances::new(series).median()
}

/// Raw Gram block k(X_i, X_j) for lo <= i, j <= hi (0-based, inclusive).
///
/// The bandwidth is always resolved from the full series so that blocks for
/// different lags share one kernel.
pub fn gram_matrix(
    spec: KernelSpec,
    series: &ObjectSeries,
    lo: usize,
    hi: usize,
) -> Result<DMatrix<f64>> {
    if lo > hi || hi >= series.len() {
        return Err(Error::InvalidParameter(format!(
            "index range [{lo}, {hi}] outside series of length {}",
            series.len()
        )));
    }
    let dists = PairwiseDistances::new(series);
    let kernel = spec.resolve_with(&dists)?;
    let n = hi - lo + 1;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        kernel.from_distance(
            dists.get(lo + i, lo + j),
            dists.norms[lo + i],
            dists.norms[lo + j],
        )
    }))
}
