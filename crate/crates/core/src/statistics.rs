//! U-centred Gram matrices and the AutoHSIC statistics.
//!
//! For lag m and effective sample size n = T - m, the k-side block uses
//! observations X_{m+1..T} and the l-side block the lagged observations
//! X_{1..T-m}. Both blocks are U-centred and
//!
//! ```text
//! V_{T,m} = sum_{i,j} a_ij b_ij / (n (n - 3))
//! ```
//!
//! which is an unbiased estimator of HSIC(X_t, X_{t-m}).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, PairwiseDistances, ResolvedKernel};
use crate::space::ObjectSeries;

/// Smallest block size on which U-centring is defined.
pub const MIN_BLOCK: usize = 4;

/// U-centres a raw Gram block.
///
/// The diagonal of the input is ignored (treated as zero) when forming row,
/// column and grand sums, and the output diagonal is exactly zero.
pub fn u_center(raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !raw.is_square() {
        return Err(Error::ShapeMismatch {
            expected: raw.nrows() * raw.nrows(),
            found: raw.len(),
        });
    }
    u_center_with(raw.nrows(), |i, j| raw[(i, j)])
}

fn u_center_with(n: usize, entry: impl Fn(usize, usize) -> f64) -> Result<DMatrix<f64>> {
    if n < MIN_BLOCK {
        return Err(Error::TooShort {
            needed: MIN_BLOCK,
            found: n,
        });
    }
    // U-centring cancels constant offsets; removing one first keeps a
    // constant block exactly zero and shrinks the magnitudes being summed.
    let offset = entry(0, 1);
    let mut raw = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            entry(i, j) - offset
        }
    });
    let row_sums: Vec<f64> = raw.row_iter().map(|r| r.sum()).collect();
    let col_sums: Vec<f64> = raw.column_iter().map(|c| c.sum()).collect();
    let grand: f64 = row_sums.iter().sum();
    let nf = n as f64;
    let grand_term = grand / ((nf - 1.0) * (nf - 2.0));
    let row_scale = 1.0 / (nf - 2.0);
    // grouping the two marginal terms keeps symmetric input exactly symmetric
    for j in 0..n {
        let cj = col_sums[j] * row_scale;
        for i in 0..n {
            let v = &mut raw[(i, j)];
            *v = if i == j {
                0.0
            } else {
                *v - (row_sums[i] * row_scale + cj) + grand_term
            };
        }
    }
    Ok(raw)
}

/// U-centred k-block and lag-block for one lag.
#[derive(Debug, Clone)]
pub struct CenteredGramPair {
    pub lag: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl CenteredGramPair {
    /// Effective sample size T - m.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// The normalising constant n (n - 3).
    pub fn normalizer(&self) -> f64 {
        let n = self.n() as f64;
        n * (n - 3.0)
    }

    /// V_{T,m}.
    pub fn statistic(&self) -> f64 {
        self.a.dot(&self.b) / self.normalizer()
    }

    /// Elementwise product a_ij b_ij, the matrix every bootstrap replicate reuses.
    pub fn product(&self) -> DMatrix<f64> {
        self.a.component_mul(&self.b)
    }
}

/// V_{T,m} at one lag together with its T-scaled version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagStatistic {
    pub lag: usize,
    pub v: f64,
    pub scaled: f64,
}

/// P_{T,M} = V_{T,1} + ... + V_{T,M}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortmanteauStatistic {
    pub max_lag: usize,
    pub per_lag: Vec<LagStatistic>,
    pub p: f64,
    pub scaled: f64,
}

/// Full-series Gram matrices for the two kernels, from which the blocks of
/// every lag are cut. Bandwidths are resolved once from all T observations.
#[derive(Debug, Clone)]
pub struct LaggedGrams {
    len: usize,
    k_kernel: ResolvedKernel,
    l_kernel: ResolvedKernel,
    k: DMatrix<f64>,
    l: Option<DMatrix<f64>>,
}

impl LaggedGrams {
    pub fn new(series: &ObjectSeries, k_spec: KernelSpec, l_spec: KernelSpec) -> Result<Self> {
        k_spec.validate()?;
        l_spec.validate()?;
        let dists = PairwiseDistances::new(series);
        let k_kernel = k_spec.resolve_with(&dists)?;
        let l_kernel = l_spec.resolve_with(&dists)?;
        let k = k_kernel.gram(&dists);
        let l = (l_kernel != k_kernel).then(|| l_kernel.gram(&dists));
        Ok(Self {
            len: series.len(),
            k_kernel,
            l_kernel,
            k,
            l,
        })
    }

    /// Series length T.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k_kernel(&self) -> ResolvedKernel {
        self.k_kernel
    }

    pub fn l_kernel(&self) -> ResolvedKernel {
        self.l_kernel
    }

    /// Checks 1 <= m and T - m >= 4.
    pub fn check_lag(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::InvalidParameter("lag must be at least 1".into()));
        }
        if self.len < m + MIN_BLOCK {
            return Err(Error::TooShort {
                needed: m + MIN_BLOCK,
                found: self.len,
            });
        }
        Ok(())
    }

    pub fn pair(&self, m: usize) -> Result<CenteredGramPair> {
        self.check_lag(m)?;
        let n = self.len - m;
        let k = &self.k;
        let l = self.l.as_ref().unwrap_or(&self.k);
        let a = u_center_with(n, |i, j| k[(m + i, m + j)])?;
        let b = u_center_with(n, |i, j| l[(i, j)])?;
        Ok(CenteredGramPair { lag: m, a, b })
    }

    pub fn statistic(&self, m: usize) -> Result<LagStatistic> {
        let v = self.pair(m)?.statistic();
        Ok(LagStatistic {
            lag: m,
            v,
            scaled: self.len as f64 * v,
        })
    }

    pub fn portmanteau(&self, max_lag: usize) -> Result<PortmanteauStatistic> {
        if max_lag == 0 {
            return Err(Error::InvalidParameter("maximum lag must be at least 1".into()));
        }
        let per_lag = (1..=max_lag)
            .map(|m| self.statistic(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(PortmanteauStatistic::from_lags(self.len, per_lag))
    }
}

impl PortmanteauStatistic {
    pub fn from_lags(len: usize, per_lag: Vec<LagStatistic>) -> Self {
        let p: f64 = per_lag.iter().map(|s| s.v).sum();
        Self {
            max_lag: per_lag.len(),
            per_lag,
            p,
            scaled: len as f64 * p,
        }
    }
}

/// AutoHSIC V_{T,m} of `series` at lag `m`.
pub fn auto_hsic(
    series: &ObjectSeries,
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    m: usize,
) -> Result<LagStatistic> {
    check_len(series, m)?;
    LaggedGrams::new(series, k_spec, l_spec)?.statistic(m)
}

/// Per-lag statistics for m = 1..=max_lag and their sum.
pub fn portmanteau(
    series: &ObjectSeries,
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    max_lag: usize,
) -> Result<PortmanteauStatistic> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter("maximum lag must be at least 1".into()));
    }
    check_len(series, max_lag)?;
    LaggedGrams::new(series, k_spec, l_spec)?.portmanteau(max_lag)
}

fn check_len(series: &ObjectSeries, m: usize) -> Result<()> {
    if series.len() < m + MIN_BLOCK {
        return Err(Error::TooShort {
            needed: m + MIN_BLOCK,
            found: series.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gram_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Literal transcription of the U-centring display, one entry at a time.
    #[allow(clippy::needless_range_loop)]
    fn direct_u_center(raw: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let n = 4.0;
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let row: f64 = (0..4).filter(|&t| t != i).map(|t| raw[i][t]).sum();
                let col: f64 = (0..4).filter(|&t| t != j).map(|t| raw[t][j]).sum();
                let mut grand = 0.0;
                for t in 0..4 {
                    for s in 0..4 {
                        if t != s {
                            grand += raw[t][s];
                        }
                    }
                }
                out[i][j] = raw[i][j] - row / (n - 2.0) - col / (n - 2.0)
                    + grand / ((n - 1.0) * (n - 2.0));
            }
        }
        out
    }

    #[test]
    fn constant_block_centres_to_zero() {
        let raw = DMatrix::from_element(4, 4, 1.0);
        let c = u_center(&raw).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn four_by_four_matches_display_formula() {
        let raw = [
            [9.0, 1.0, 2.0, 3.0],
            [1.0, 9.0, 4.0, 5.0],
            [2.0, 4.0, 9.0, 6.0],
            [3.0, 5.0, 6.0, 9.0],
        ];
        let expected = direct_u_center(&raw);
        let m = DMatrix::from_fn(4, 4, |i, j| raw[i][j]);
        let c = u_center(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c[(i, j)], expected[i][j], "({i},{j})");
            }
        }
        // independent numpy evaluation of the display gives the zero matrix
        assert!(c.iter().all(|&v| v == 0.0));

        // a non-additive block: a_01 = a_23 = 1/3, a_02 = -1/6
        let mut single = DMatrix::zeros(4, 4);
        single[(0, 1)] = 1.0;
        single[(1, 0)] = 1.0;
        let c = u_center(&single).unwrap();
        assert!((c[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c[(2, 3)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c[(0, 2)] + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn too_short_block() {
        let raw = DMatrix::from_element(3, 3, 1.0);
        assert!(matches!(u_center(&raw), Err(Error::TooShort { .. })));
    }

    #[test]
    fn row_sums_vanish_on_gaussian_grams() {
        for seed in 0..30u64 {
            let n = 5 + (seed as usize % 20);
            let s = ObjectSeries::scalar(normals(seed, n)).unwrap();
            let g = gram_matrix(KernelSpec::gaussian(), &s, 0, n - 1).unwrap();
            let c = u_center(&g).unwrap();
            for r in c.row_iter() {
                assert!(r.sum().abs() <= 1e-10);
            }
            for col in c.column_iter() {
                assert!(col.sum().abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn constant_series_gives_zero() {
        let s = ObjectSeries::scalar(vec![2.0; 12]).unwrap();
        let v = auto_hsic(&s, KernelSpec::BrownianDistance, KernelSpec::BrownianDistance, 1)
            .unwrap();
        assert_eq!(v.v, 0.0);
        let p = portmanteau(&s, KernelSpec::BrownianDistance, KernelSpec::BrownianDistance, 3)
            .unwrap();
        assert_eq!(p.p, 0.0);
    }

    #[test]
    fn portmanteau_sums_lags() {
        let s = ObjectSeries::scalar(normals(3, 40)).unwrap();
        let gk = KernelSpec::gaussian();
        let p1 = portmanteau(&s, gk, gk, 1).unwrap();
        assert_eq!(p1.p, auto_hsic(&s, gk, gk, 1).unwrap().v);
        let p3 = portmanteau(&s, gk, gk, 3).unwrap();
        let sum: f64 = (1..=3).map(|m| auto_hsic(&s, gk, gk, m).unwrap().v).sum();
        assert!((p3.p - sum).abs() <= 1e-12 * sum.abs().max(1e-300));
        assert_eq!(p3.scaled, 40.0 * p3.p);
    }

    #[test]
    fn lag_and_length_checks() {
        let s = ObjectSeries::scalar(normals(4, 6)).unwrap();
        let gk = KernelSpec::gaussian();
        assert!(auto_hsic(&s, gk, gk, 2).is_ok());
        assert!(matches!(auto_hsic(&s, gk, gk, 3), Err(Error::TooShort { .. })));
        assert!(auto_hsic(&s, gk, gk, 0).is_err());
        assert!(portmanteau(&s, gk, gk, 0).is_err());
    }

    #[test]
    fn centred_pair_invariants() {
        let s = ObjectSeries::scalar(normals(5, 30)).unwrap();
        let grams =
            LaggedGrams::new(&s, KernelSpec::laplacian(), KernelSpec::BrownianDistance).unwrap();
        let pair = grams.pair(2).unwrap();
        assert_eq!(pair.n(), 28);
        for m in [&pair.a, &pair.b] {
            let scale = m.amax();
            for i in 0..m.nrows() {
                assert_eq!(m[(i, i)], 0.0);
                assert!(m.row(i).sum().abs() <= 1e-9 * 28.0 * scale);
            }
            assert_eq!((m - m.transpose()).amax(), 0.0);
        }
    }
}
