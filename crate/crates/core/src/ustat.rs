//! Fourth-order U-statistic form of the AutoHSIC estimator.
//!
//! This is the O(n^4) reference used to certify the U-centred fast path; it
//! is not meant for production sample sizes.

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, ResolvedKernel};
use crate::space::{ObjectSeries, Space};

/// Largest number of lagged pairs the oracle accepts.
pub const ORACLE_MAX_PAIRS: usize = 40;

/// All 24 orderings of {0, 1, 2, 3}.
const PERMUTATIONS: [[usize; 4]; 24] = permutations();

const fn permutations() -> [[usize; 4]; 24] {
    let mut out = [[0; 4]; 24];
    let mut idx = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && a != c && b != c {
                    let d = 6 - a - b - c;
                    out[idx] = [a, b, c, d];
                    idx += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

/// Symmetric kernel h of the U-statistic, from the 4 x 4 tables of k-values
/// among the x-components and l-values among the y-components of four points.
///
/// h = (1/24) sum over orderings (i1,i2,i3,i4) of
///     k(x_i1, x_i2) [ l(y_i3, y_i4) + l(y_i1, y_i2) - 2 l(y_i1, y_i3) ]
///
/// The summands are added in sorted order, so relabelling the four points
/// returns a bit-identical value.
pub fn h_kernel(kx: &[[f64; 4]; 4], ly: &[[f64; 4]; 4]) -> f64 {
    let mut terms = PERMUTATIONS.map(|[i1, i2, i3, i4]| {
        kx[i1][i2] * (ly[i3][i4] + ly[i1][i2] - 2.0 * ly[i1][i3])
    });
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum::<f64>() / 24.0
}

/// [`h_kernel`] evaluated on four points z = (x, y) with resolved kernels.
pub fn h_kernel_points(
    k: &ResolvedKernel,
    l: &ResolvedKernel,
    space: &Space,
    z: [(&[f64], &[f64]); 4],
) -> Result<f64> {
    let mut kx = [[0.0; 4]; 4];
    let mut ly = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            kx[i][j] = k.eval(space, z[i].0, z[j].0)?;
            ly[i][j] = l.eval(space, z[i].1, z[j].1)?;
        }
    }
    Ok(h_kernel(&kx, &ly))
}

/// V_{T,m} as the average of h over all quadruples i < j < q < r of the
/// lagged pairs Z_t = (X_t, X_{t-m}).
pub fn auto_hsic_ustat_oracle(
    series: &ObjectSeries,
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    m: usize,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("lag must be at least 1".into()));
    }
    let t = series.len();
    if t < m + 4 {
        return Err(Error::TooShort {
            needed: m + 4,
            found: t,
        });
    }
    let n = t - m;
    if n > ORACLE_MAX_PAIRS {
        return Err(Error::OracleTooLarge(n));
    }
    let k = k_spec.resolve(series)?;
    let l = l_spec.resolve(series)?;
    let space = series.space();
    let mut kx = vec![vec![0.0; n]; n];
    let mut ly = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            kx[i][j] = k.eval(space, series.get(m + i), series.get(m + j))?;
            ly[i][j] = l.eval(space, series.get(i), series.get(j))?;
        }
    }
    let mut sum = 0.0;
    let mut count = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            for q in j + 1..n {
                for r in q + 1..n {
                    let idx = [i, j, q, r];
                    let sub = |g: &Vec<Vec<f64>>| {
                        let mut s = [[0.0; 4]; 4];
                        for a in 0..4 {
                            for b in 0..4 {
                                s[a][b] = g[idx[a]][idx[b]];
                            }
                        }
                        s
                    };
                    sum += h_kernel(&sub(&kx), &sub(&ly));
                    count += 1;
                }
            }
        }
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn permutation_table_is_complete() {
        let mut seen = PERMUTATIONS.to_vec();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn identical_points_give_zero() {
        let ones = [[1.0; 4]; 4];
        assert_eq!(h_kernel(&ones, &ones), 0.0);
        let sp = Space::euclidean(1).unwrap();
        let g = ResolvedKernel::Gaussian { gamma: 1.0 };
        let x = [0.4];
        let v = h_kernel_points(&g, &g, &sp, [(&x, &x); 4]).unwrap();
        assert_eq!(v, 0.0);
    }

    fn random_tables(rng: &mut ChaCha8Rng) -> ([f64; 4], [f64; 4]) {
        let mut xs = [0.0; 4];
        let mut ys = [0.0; 4];
        for i in 0..4 {
            xs[i] = rng.random_range(-2.0..2.0);
            ys[i] = rng.random_range(-2.0..2.0);
        }
        (xs, ys)
    }

    #[test]
    fn symmetric_under_argument_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sp = Space::euclidean(1).unwrap();
        let k = ResolvedKernel::Gaussian { gamma: 0.8 };
        let l = ResolvedKernel::Laplacian { gamma: 1.3 };
        let (xs, ys) = random_tables(&mut rng);
        let base = h_kernel_points(
            &k,
            &l,
            &sp,
            [0, 1, 2, 3].map(|i| (&xs[i..i + 1], &ys[i..i + 1])),
        )
        .unwrap();
        for _ in 0..100 {
            let mut order = [0usize, 1, 2, 3];
            order.shuffle(&mut rng);
            let v = h_kernel_points(
                &k,
                &l,
                &sp,
                order.map(|i| (&xs[i..i + 1], &ys[i..i + 1])),
            )
            .unwrap();
            assert_eq!(v, base);
        }
    }

    #[test]
    fn matches_naive_24_term_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (xs, ys) = random_tables(&mut rng);
        let k = |a: f64, b: f64| (-(a - b) * (a - b) / 2.0).exp();
        let l = |a: f64, b: f64| a.abs() + b.abs() - (a - b).abs();
        let mut naive = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let distinct = a != b && a != c && a != d && b != c && b != d && c != d;
                        if distinct {
                            naive += k(xs[a], xs[b])
                                * (l(ys[c], ys[d]) + l(ys[a], ys[b]) - 2.0 * l(ys[a], ys[c]));
                        }
                    }
                }
            }
        }
        naive /= 24.0;
        let sp = Space::euclidean(1).unwrap();
        let v = h_kernel_points(
            &ResolvedKernel::Gaussian { gamma: 1.0 },
            &ResolvedKernel::BrownianDistance,
            &sp,
            [0, 1, 2, 3].map(|i| (&xs[i..i + 1], &ys[i..i + 1])),
        )
        .unwrap();
        assert!((v - naive).abs() < 1e-14, "{v} vs {naive}");
    }

    #[test]
    fn single_quadruple() {
        let s = ObjectSeries::scalar(vec![0.1, -0.5, 1.2, 0.3, 2.0]).unwrap();
        let v = auto_hsic_ustat_oracle(&s, KernelSpec::BrownianDistance, KernelSpec::BrownianDistance, 1)
            .unwrap();
        let sp = s.space();
        let b = ResolvedKernel::BrownianDistance;
        let z = [1, 2, 3, 4].map(|t| (s.get(t), s.get(t - 1)));
        assert_eq!(v, h_kernel_points(&b, &b, sp, z).unwrap());
    }

    #[test]
    fn size_guard() {
        let s = ObjectSeries::scalar((0..45).map(|i| (i as f64).sin()).collect()).unwrap();
        assert_eq!(
            auto_hsic_ustat_oracle(&s, KernelSpec::gaussian(), KernelSpec::gaussian(), 1),
            Err(Error::OracleTooLarge(44))
        );
        let c = ObjectSeries::scalar(vec![1.5; 9]).unwrap();
        let v = auto_hsic_ustat_oracle(&c, KernelSpec::BrownianDistance, KernelSpec::BrownianDistance, 2)
            .unwrap();
        assert_eq!(v, 0.0);
    }
}
