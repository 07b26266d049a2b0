//! Matrix GARCH with separate row and column covariance dynamics.
//!
//! X_t = U_t^{1/2} eta_t V_t^{1/2},  U_t = y_t S_1t / tr(S_1t),  V_t = S_2t / tr(S_2t),
//! y_t  = omega + alpha tr(X_{t-1} X_{t-1}') + beta y_{t-1},
//! S_1t = A0 A0' + A1 X_{t-1} X_{t-1}' A1' + A2 S_1,t-1 A2',
//! S_2t = B0 B0' + B1 X_{t-1}' X_{t-1} B1' + B2 S_2,t-1 B2'.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const OMEGA: f64 = 0.4;
const BETA: f64 = 0.6;
const PERSISTENCE: f64 = 0.6;
const OFF_DIAGONAL: f64 = 0.4;
const BLOWUP: f64 = 1e12;

/// Lower triangular with unit first diagonal entry and every other
/// lower-triangular entry equal to 0.4.
pub fn intercept_factor(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| match (i, j) {
        (0, 0) => 1.0,
        _ if j <= i => OFF_DIAGONAL,
        _ => 0.0,
    })
}

/// Symmetric square root with negative eigenvalues clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let q = &eig.eigenvectors;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    q * DMatrix::from_diagonal(&roots) * q.transpose()
}

#[derive(Debug, Clone)]
pub struct MatrixGarch {
    c: f64,
    intercept: DMatrix<f64>,
    s1: DMatrix<f64>,
    s2: DMatrix<f64>,
    y: f64,
    x: DMatrix<f64>,
    step: usize,
}

/// Conditional quantities of one step, exposed for invariant checks.
#[derive(Debug, Clone)]
pub struct MatrixGarchStep {
    pub x: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub y: f64,
}

impl MatrixGarch {
    /// Starts at the fixed point of the c = 0 dynamics: y = 1,
    /// S_1 = S_2 = A0 A0' / (1 - 0.6^2), X_0 = 0.
    pub fn new(d: usize, c: f64) -> Self {
        let a0 = intercept_factor(d);
        let intercept = &a0 * a0.transpose();
        let s = &intercept / (1.0 - PERSISTENCE * PERSISTENCE);
        Self {
            c,
            s1: s.clone(),
            s2: s,
            intercept,
            y: OMEGA / (1.0 - BETA),
            x: DMatrix::zeros(d, d),
            step: 0,
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<MatrixGarchStep> {
        let d = self.x.nrows();
        let c2 = self.c * self.c;
        let p2 = PERSISTENCE * PERSISTENCE;
        let xxt = &self.x * self.x.transpose();
        let xtx = self.x.transpose() * &self.x;
        self.y = OMEGA + self.c * xxt.trace() + BETA * self.y;
        self.s1 = &self.intercept + xxt * c2 + &self.s1 * p2;
        self.s2 = &self.intercept + xtx * c2 + &self.s2 * p2;
        let u = &self.s1 * (self.y / self.s1.trace());
        let v = &self.s2 / self.s2.trace();
        let eta = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
        self.x = psd_sqrt(&u) * eta * psd_sqrt(&v);
        let worst = self
            .x
            .iter()
            .chain(self.s1.iter())
            .chain(self.s2.iter())
            .fold(self.y.abs(), |acc, v| acc.max(v.abs()));
        if !(worst <= BLOWUP) {
            return Err(Error::NumericalBlowup {
                step: self.step,
                value: worst,
                limit: BLOWUP,
            });
        }
        self.step += 1;
        debug_assert!((v.trace() - 1.0).abs() <= 1e-10);
        debug_assert!((u.trace() - self.y).abs() <= 1e-8 * self.y);
        Ok(MatrixGarchStep {
            x: self.x.clone(),
            u,
            v,
            y: self.y,
        })
    }
}
