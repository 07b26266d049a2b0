//! Random draws used by the data-generating processes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Sigma_ij = 0.5^|i - j|.
pub fn sigma_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| 0.5f64.powi(i.abs_diff(j) as i32))
}

/// Lower Cholesky factor of [`sigma_matrix`].
pub fn sigma_factor(d: usize) -> DMatrix<f64> {
    sigma_matrix(d)
        .cholesky()
        .expect("Sigma is positive definite")
        .l()
}

/// L z with z standard normal.
pub fn mvn_sample<R: Rng + ?Sized>(rng: &mut R, factor: &DMatrix<f64>) -> Vec<f64> {
    let d = factor.nrows();
    let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    (0..d)
        .map(|i| (0..=i).map(|j| factor[(i, j)] * z[j]).sum())
        .collect()
}

/// Multivariate t with scale matrix L L' and `nu` degrees of freedom, as
/// the normal scale mixture L z / sqrt(W / nu), W ~ chi^2_nu.
pub fn mvt_sample<R: Rng + ?Sized>(rng: &mut R, nu: f64, factor: &DMatrix<f64>) -> Vec<f64> {
    let mut x = mvn_sample(rng, factor);
    let w: f64 = ChiSquared::new(nu).expect("nu > 0").sample(rng);
    let s = (w / nu).sqrt().recip();
    x.iter_mut().for_each(|v| *v *= s);
    x
}

/// Standard Brownian motion on `grid` (first point 0): B(0) = 0 and
/// independent N(0, dt) increments.
pub fn brownian_path<R: Rng + ?Sized>(rng: &mut R, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut b = 0.0;
    out.push(0.0);
    for w in grid.windows(2) {
        let z: f64 = StandardNormal.sample(rng);
        b += (w[1] - w[0]).sqrt() * z;
        out.push(b);
    }
    out
}
