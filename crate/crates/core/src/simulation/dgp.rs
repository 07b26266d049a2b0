//! Data-generating processes of the simulation study.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use super::matrix_garch::MatrixGarch;
use super::sampling::{brownian_path, mvn_sample, mvt_sample, sigma_factor};
use crate::error::{Error, Result};
use crate::garch::{garch11_simulate, Garch11Params};
use crate::space::{ObjectSeries, Space};

/// Pre-sample steps discarded by every recursive process.
pub const BURN_IN: usize = 200;
pub const MIN_SAMPLE: usize = 10;
pub const DEFAULT_GRID_POINTS: usize = 101;
const BLOWUP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Innovation {
    /// N_d(0, Sigma).
    Normal,
    /// t_nu(Sigma).
    StudentT { nu: f64 },
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_rho() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DgpSpec {
    IidNormal { d: usize },
    IidStudentT { d: usize, nu: f64 },
    /// X_t = eta_t . eta_{t-1} . eta_{t-2} (elementwise).
    ProductMa { d: usize, innovation: Innovation },
    /// X_t = rho X_{t-1} + eta_t.
    Var1 {
        d: usize,
        #[serde(default = "default_rho")]
        rho: f64,
        innovation: Innovation,
    },
    /// X_t = eta_t . sigma_t, sigma_t^2 = 0.1 + 0.6 X_{t-1}^2 + 0.2 sigma_{t-1}^2 (elementwise).
    ComponentGarch { d: usize, innovation: Innovation },
    /// i.i.d. Brownian motions.
    FunctionalIid {
        #[serde(default = "default_grid")]
        grid_points: usize,
    },
    /// Functional ARCH(1).
    FunctionalArch {
        #[serde(default = "default_grid")]
        grid_points: usize,
    },
    /// X_t(tau) = eta_t(tau) eta_{t-1}(tau).
    FunctionalProductMa {
        #[serde(default = "default_grid")]
        grid_points: usize,
    },
    /// d x d matrix GARCH with signal c.
    MatrixGarch { d: usize, c: f64 },
    /// GARCH(1,1) with (omega, alpha, beta) = (0.2, 0.1, 0.5) and error process 1, 2 or 3.
    GarchEgp { egp: u8 },
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let check_innov = |i: &Innovation| match i {
            Innovation::StudentT { nu } if !(*nu > 0.0 && nu.is_finite()) => {
                Err(Error::InvalidParameter(format!("degrees of freedom {nu} must be positive")))
            }
            _ => Ok(()),
        };
        match self {
            DgpSpec::IidNormal { d } if *d == 0 => bad("d must be at least 1".into()),
            DgpSpec::IidStudentT { d, nu } => {
                if *d == 0 {
                    return bad("d must be at least 1".into());
                }
                check_innov(&Innovation::StudentT { nu: *nu })
            }
            DgpSpec::ProductMa { d, innovation } | DgpSpec::ComponentGarch { d, innovation } => {
                if *d == 0 {
                    return bad("d must be at least 1".into());
                }
                check_innov(innovation)
            }
            DgpSpec::Var1 { d, rho, innovation } => {
                if *d == 0 {
                    return bad("d must be at least 1".into());
                }
                if !(rho.abs() < 1.0) {
                    return bad(format!("VAR coefficient {rho} must satisfy |rho| < 1"));
                }
                check_innov(innovation)
            }
            DgpSpec::FunctionalIid { grid_points }
            | DgpSpec::FunctionalArch { grid_points }
            | DgpSpec::FunctionalProductMa { grid_points }
                if *grid_points < 2 =>
            {
                bad("functional grids need at least 2 points".into())
            }
            DgpSpec::MatrixGarch { d, c } => {
                if *d == 0 {
                    return bad("d must be at least 1".into());
                }
                if !(*c >= 0.0 && c.is_finite()) {
                    return bad(format!("matrix GARCH signal {c} must be nonnegative"));
                }
                Ok(())
            }
            DgpSpec::GarchEgp { egp } if !(1..=3).contains(egp) => {
                bad(format!("error process {egp} must be 1, 2 or 3"))
            }
            _ => Ok(()),
        }
    }

    /// Observation space of the generated series.
    pub fn space(&self) -> Result<Space> {
        match self {
            DgpSpec::IidNormal { d }
            | DgpSpec::IidStudentT { d, .. }
            | DgpSpec::ProductMa { d, .. }
            | DgpSpec::Var1 { d, .. }
            | DgpSpec::ComponentGarch { d, .. } => Space::euclidean(*d),
            DgpSpec::FunctionalIid { grid_points }
            | DgpSpec::FunctionalArch { grid_points }
            | DgpSpec::FunctionalProductMa { grid_points } => Space::uniform_grid(*grid_points),
            DgpSpec::MatrixGarch { d, .. } => Space::matrix(*d, *d),
            DgpSpec::GarchEgp { .. } => Space::euclidean(1),
        }
    }

    /// Dimension reported in result tables: d for vectors and matrices,
    /// grid size for curves, 1 for the scalar GARCH designs.
    pub fn dimension(&self) -> usize {
        match self {
            DgpSpec::IidNormal { d }
            | DgpSpec::IidStudentT { d, .. }
            | DgpSpec::ProductMa { d, .. }
            | DgpSpec::Var1 { d, .. }
            | DgpSpec::ComponentGarch { d, .. }
            | DgpSpec::MatrixGarch { d, .. } => *d,
            DgpSpec::FunctionalIid { grid_points }
            | DgpSpec::FunctionalArch { grid_points }
            | DgpSpec::FunctionalProductMa { grid_points } => *grid_points,
            DgpSpec::GarchEgp { .. } => 1,
        }
    }

    /// Short name used in tables and records.
    pub fn label(&self) -> String {
        let innov = |i: &Innovation| match i {
            Innovation::Normal => "normal".to_string(),
            Innovation::StudentT { nu } => format!("t{nu}"),
        };
        match self {
            DgpSpec::IidNormal { .. } => "iid_normal".into(),
            DgpSpec::IidStudentT { nu, .. } => format!("iid_t{nu}"),
            DgpSpec::ProductMa { innovation, .. } => format!("product_ma_{}", innov(innovation)),
            DgpSpec::Var1 { rho, innovation, .. } => format!("var1_{rho}_{}", innov(innovation)),
            DgpSpec::ComponentGarch { innovation, .. } => format!("component_garch_{}", innov(innovation)),
            DgpSpec::FunctionalIid { .. } => "functional_iid".into(),
            DgpSpec::FunctionalArch { .. } => "functional_arch".into(),
            DgpSpec::FunctionalProductMa { .. } => "functional_product_ma".into(),
            DgpSpec::MatrixGarch { c, .. } => format!("matrix_garch_c{c}"),
            DgpSpec::GarchEgp { egp } => format!("garch_egp{egp}"),
        }
    }
}

/// A validated DGP with its constants (Cholesky factor, grid) precomputed,
/// shared read-only across replications.
#[derive(Debug, Clone)]
pub struct Dgp {
    spec: DgpSpec,
    space: Space,
    factor: Option<DMatrix<f64>>,
    burn_in: usize,
}

fn check_state(step: usize, values: &[f64], limit: f64) -> Result<()> {
    let worst = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if worst <= limit {
        Ok(())
    } else {
        Err(Error::NumericalBlowup {
            step,
            value: worst,
            limit,
        })
    }
}

impl Dgp {
    pub fn new(spec: DgpSpec) -> Result<Self> {
        spec.validate()?;
        let space = spec.space()?;
        let factor = match &spec {
            DgpSpec::IidNormal { d }
            | DgpSpec::IidStudentT { d, .. }
            | DgpSpec::ProductMa { d, .. }
            | DgpSpec::Var1 { d, .. }
            | DgpSpec::ComponentGarch { d, .. } => Some(sigma_factor(*d)),
            _ => None,
        };
        Ok(Self {
            spec,
            space,
            factor,
            burn_in: BURN_IN,
        })
    }

    /// Replaces the number of discarded pre-sample steps of recursive DGPs.
    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    fn innovation<R: Rng + ?Sized>(&self, rng: &mut R, law: Innovation) -> Vec<f64> {
        let l = self.factor.as_ref().expect("vector DGPs carry a factor");
        match law {
            Innovation::Normal => mvn_sample(rng, l),
            Innovation::StudentT { nu } => mvt_sample(rng, nu, l),
        }
    }

    fn grid(&self) -> &[f64] {
        match &self.space {
            Space::Functional { grid, .. } => grid,
            _ => unreachable!("functional DGPs use a functional space"),
        }
    }

    /// One series of length `t`.
    pub fn sample<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<ObjectSeries> {
        if t < MIN_SAMPLE {
            return Err(Error::TooShort {
                needed: MIN_SAMPLE,
                found: t,
            });
        }
        let blocks: Vec<Vec<f64>> = match self.spec {
            DgpSpec::IidNormal { .. } => (0..t).map(|_| self.innovation(rng, Innovation::Normal)).collect(),
            DgpSpec::IidStudentT { nu, .. } => (0..t)
                .map(|_| self.innovation(rng, Innovation::StudentT { nu }))
                .collect(),
            DgpSpec::ProductMa { innovation, .. } => {
                let eta: Vec<Vec<f64>> = (0..t + 2).map(|_| self.innovation(rng, innovation)).collect();
                eta.windows(3)
                    .map(|w| w[0].iter().zip(&w[1]).zip(&w[2]).map(|((a, b), c)| a * b * c).collect())
                    .collect()
            }
            DgpSpec::Var1 { d, rho, innovation } => {
                let mut x = vec![0.0; d];
                let mut out = Vec::with_capacity(t);
                for step in 0..t + self.burn_in {
                    let eta = self.innovation(rng, innovation);
                    x.iter_mut().zip(&eta).for_each(|(xi, e)| *xi = rho * *xi + e);
                    check_state(step, &x, BLOWUP)?;
                    if step >= self.burn_in {
                        out.push(x.clone());
                    }
                }
                out
            }
            DgpSpec::ComponentGarch { d, innovation } => {
                // t innovations make the process heavy-tailed but still strictly
                // stationary; only overflow counts as a blow-up there
                let limit = match innovation {
                    Innovation::Normal => BLOWUP,
                    Innovation::StudentT { .. } => 1e150,
                };
                let mut s2: Vec<f64> = vec![0.1 / (1.0 - 0.2); d];
                let mut x = vec![0.0; d];
                let mut out = Vec::with_capacity(t);
                for step in 0..t + self.burn_in {
                    let eta = self.innovation(rng, innovation);
                    for k in 0..d {
                        s2[k] = 0.1 + 0.6 * x[k] * x[k] + 0.2 * s2[k];
                        x[k] = s2[k].sqrt() * eta[k];
                    }
                    check_state(step, &s2, limit)?;
                    if step >= self.burn_in {
                        out.push(x.clone());
                    }
                }
                out
            }
            DgpSpec::FunctionalIid { .. } => {
                let grid = self.grid();
                (0..t).map(|_| brownian_path(rng, grid)).collect()
            }
            DgpSpec::FunctionalProductMa { .. } => {
                let grid = self.grid();
                let eta: Vec<Vec<f64>> = (0..t + 1).map(|_| brownian_path(rng, grid)).collect();
                eta.windows(2)
                    .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a * b).collect())
                    .collect()
            }
            DgpSpec::FunctionalArch { .. } => self.functional_arch(t, rng)?,
            DgpSpec::MatrixGarch { d, c } => {
                let mut g = MatrixGarch::new(d, c);
                let mut out = Vec::with_capacity(t);
                for step in 0..t + self.burn_in {
                    let s = g.step(rng)?;
                    if step >= self.burn_in {
                        // row-major flattening
                        out.push(s.x.transpose().as_slice().to_vec());
                    }
                }
                out
            }
            DgpSpec::GarchEgp { egp } => {
                let theta = Garch11Params::new(0.2, 0.1, 0.5)?;
                let n = t + self.burn_in;
                let eta: Vec<f64> = match egp {
                    1 => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
                    2 => {
                        let t4 = StudentT::new(4.0).expect("valid degrees of freedom");
                        (0..n).map(|_| t4.sample(rng)).collect()
                    }
                    _ => {
                        let e: Vec<f64> = (0..n + 2).map(|_| StandardNormal.sample(rng)).collect();
                        e.windows(3).map(|w| w[0] * w[1] * w[2]).collect()
                    }
                };
                return ObjectSeries::scalar(garch11_simulate(&theta, &eta, self.burn_in)?);
            }
        };
        ObjectSeries::from_blocks(self.space.clone(), blocks)
    }

    /// sigma_t^2(tau) = tau + 0.6 e^{tau^2/2} int e^{s^2/2} X_{t-1}^2(s) ds, X_0 = 0.
    fn functional_arch<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let grid = self.grid();
        let half: Vec<f64> = grid.iter().map(|s| (s * s / 2.0).exp()).collect();
        let mut x = vec![0.0; grid.len()];
        let mut out = Vec::with_capacity(t);
        for step in 0..t + self.burn_in {
            let integrand: Vec<f64> = x.iter().zip(&half).map(|(v, h)| h * v * v).collect();
            let integral = self.space.integrate(&integrand).expect("functional space");
            let eta = brownian_path(rng, grid);
            for k in 0..grid.len() {
                let s2 = grid[k] + 0.6 * half[k] * integral;
                x[k] = s2.sqrt() * eta[k];
            }
            check_state(step, &[integral], BLOWUP)?;
            if step >= self.burn_in {
                out.push(x.clone());
            }
        }
        Ok(out)
    }
}

/// One length-`t` series from `spec`.
pub fn dgp_sample<R: Rng + ?Sized>(spec: &DgpSpec, t: usize, rng: &mut R) -> Result<ObjectSeries> {
    Dgp::new(spec.clone())?.sample(t, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn acf1(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let c0 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>();
        let c1 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>();
        c1 / c0
    }

    #[test]
    fn shapes_and_spaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let specs = [
            DgpSpec::IidNormal { d: 3 },
            DgpSpec::IidStudentT { d: 2, nu: 1.0 },
            DgpSpec::ProductMa { d: 4, innovation: Innovation::StudentT { nu: 2.0 } },
            DgpSpec::Var1 { d: 2, rho: 0.3, innovation: Innovation::Normal },
            DgpSpec::ComponentGarch { d: 2, innovation: Innovation::Normal },
            DgpSpec::FunctionalIid { grid_points: 11 },
            DgpSpec::FunctionalArch { grid_points: 11 },
            DgpSpec::FunctionalProductMa { grid_points: 11 },
            DgpSpec::MatrixGarch { d: 2, c: 0.3 },
            DgpSpec::GarchEgp { egp: 1 },
            DgpSpec::GarchEgp { egp: 2 },
            DgpSpec::GarchEgp { egp: 3 },
        ];
        for spec in specs {
            let s = dgp_sample(&spec, 25, &mut rng).unwrap();
            assert_eq!(s.len(), 25, "{spec:?}");
            assert_eq!(s.space(), &spec.space().unwrap());
        }
    }

    #[test]
    fn validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(dgp_sample(&DgpSpec::IidNormal { d: 0 }, 20, &mut rng).is_err());
        assert!(dgp_sample(&DgpSpec::IidNormal { d: 1 }, 9, &mut rng).is_err());
        assert!(dgp_sample(&DgpSpec::GarchEgp { egp: 4 }, 20, &mut rng).is_err());
        assert!(dgp_sample(&DgpSpec::IidStudentT { d: 1, nu: 0.0 }, 20, &mut rng).is_err());
        assert!(dgp_sample(&DgpSpec::Var1 { d: 1, rho: 1.0, innovation: Innovation::Normal }, 20, &mut rng).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = DgpSpec::MatrixGarch { d: 2, c: 0.2 };
        let a = dgp_sample(&spec, 30, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = dgp_sample(&spec, 30, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn product_ma_is_uncorrelated() {
        let spec = DgpSpec::ProductMa { d: 1, innovation: Innovation::Normal };
        let s = dgp_sample(&spec, 100_000, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let r = acf1(s.as_flat());
        assert!(r.abs() <= 0.01, "lag-1 autocorrelation {r}");
    }

    #[test]
    fn var1_autocorrelation() {
        let spec = DgpSpec::Var1 { d: 1, rho: 0.3, innovation: Innovation::Normal };
        let s = dgp_sample(&spec, 100_000, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let r = acf1(s.as_flat());
        assert!((r - 0.3).abs() <= 0.02, "lag-1 autocorrelation {r}");
    }

    #[test]
    fn matrix_garch_rows_are_row_major() {
        let spec = DgpSpec::MatrixGarch { d: 2, c: 0.0 };
        let s = dgp_sample(&spec, 10, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(s.get(0).len(), 4);
    }

    #[test]
    fn heavy_tailed_component_garch_simulates() {
        let spec = DgpSpec::ComponentGarch { d: 5, innovation: Innovation::StudentT { nu: 2.0 } };
        for seed in 0..20 {
            let s = dgp_sample(&spec, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(s.as_flat().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn functional_product_ma_starts_at_zero() {
        let spec = DgpSpec::FunctionalProductMa { grid_points: 21 };
        let s = dgp_sample(&spec, 12, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(s.iter().all(|x| x[0] == 0.0));
    }
}
