//! Residual-based diagnostics for fitted causal models.
//!
//! A model X_t = f(I_{t-1}, theta, eta_t) is fitted, the AutoHSIC tests are
//! applied to its residuals, and critical values come from a residual
//! bootstrap that refits the model on every replicate so that the
//! estimation effect is carried into the null distribution.

use std::fmt::Debug;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapConfig, BootstrapDraws, LagDecision, PortmanteauDecision};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, ResolvedKernel};
use crate::rng::{substream, tag};
use crate::space::ObjectSeries;
use crate::statistics::{LaggedGrams, MIN_BLOCK};

/// Pre-sample steps simulated and discarded for every bootstrap series.
pub const BOOTSTRAP_BURN_IN: usize = 200;

/// A parametric causal model that can be fitted, inverted and simulated.
pub trait CausalModel: Sync {
    type Params: Clone + Debug + Serialize + Send + Sync;

    fn name(&self) -> &'static str;

    fn estimate(&self, series: &ObjectSeries) -> Result<Self::Params>;

    /// Innovation estimates eta_t, one per observation.
    fn residuals(&self, series: &ObjectSeries, params: &Self::Params) -> Result<ObjectSeries>;

    /// Series driven by `innovations`, dropping the first `burn_in` steps.
    fn simulate(
        &self,
        params: &Self::Params,
        innovations: &ObjectSeries,
        burn_in: usize,
    ) -> Result<ObjectSeries>;
}

/// Rescales to sample mean 0 and variance 1, both with divisor n.
pub fn standardize_residuals(residuals: &[f64]) -> Result<Vec<f64>> {
    let n = residuals.len() as f64;
    if residuals.is_empty() {
        return Err(Error::DegenerateResiduals);
    }
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::DegenerateResiduals);
    }
    let sd = var.sqrt();
    Ok(residuals.iter().map(|r| (r - mean) / sd).collect())
}

/// Coordinate-wise standardisation of a residual series.
fn standardize_series(residuals: &ObjectSeries) -> Result<ObjectSeries> {
    let w = residuals.space().element_len();
    let t = residuals.len();
    let flat = residuals.as_flat();
    let mut out = vec![0.0; flat.len()];
    for c in 0..w {
        let column: Vec<f64> = (0..t).map(|i| flat[i * w + c]).collect();
        for (i, v) in standardize_residuals(&column)?.into_iter().enumerate() {
            out[i * w + c] = v;
        }
    }
    ObjectSeries::new(residuals.space().clone(), out)
}

/// Location-scale i.i.d. model: X_t = mu + s eta_t. Its residual bootstrap
/// reduces to resampling the standardised series.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IidScale;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationScale {
    pub location: f64,
    pub scale: f64,
}

impl CausalModel for IidScale {
    type Params = LocationScale;

    fn name(&self) -> &'static str {
        "iid_scale"
    }

    fn estimate(&self, series: &ObjectSeries) -> Result<LocationScale> {
        if !series.space().is_scalar() {
            return Err(Error::InvalidParameter("iid_scale requires a scalar series".into()));
        }
        let x = series.as_flat();
        let n = x.len() as f64;
        let location = x.iter().sum::<f64>() / n;
        let scale = (x.iter().map(|v| (v - location).powi(2)).sum::<f64>() / n).sqrt();
        if !(scale > 0.0) {
            return Err(Error::EstimationFailed("series has zero variance".into()));
        }
        Ok(LocationScale { location, scale })
    }

    fn residuals(&self, series: &ObjectSeries, p: &LocationScale) -> Result<ObjectSeries> {
        series.map(|v| (v - p.location) / p.scale)
    }

    fn simulate(&self, p: &LocationScale, innovations: &ObjectSeries, burn_in: usize) -> Result<ObjectSeries> {
        let x = innovations.as_flat();
        if x.len() < burn_in {
            return Err(Error::TooShort {
                needed: burn_in,
                found: x.len(),
            });
        }
        ObjectSeries::scalar(x[burn_in..].iter().map(|e| p.location + p.scale * e).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport<P> {
    pub model: String,
    pub params: P,
    pub series_len: usize,
    /// Kernels resolved on the residuals of the observed series.
    pub k_kernel: ResolvedKernel,
    pub l_kernel: ResolvedKernel,
    pub config: BootstrapConfig,
    pub burn_in: usize,
    /// Replicates that needed a second resample.
    pub retried: usize,
    pub per_lag: Vec<LagDecision>,
    pub portmanteau: PortmanteauDecision,
}

/// T-scaled residual statistics for lags 1..=max_lag under each kernel pair.
fn residual_statistics(
    residuals: &ObjectSeries,
    kernels: &[(KernelSpec, KernelSpec)],
    max_lag: usize,
) -> Result<Vec<(Vec<f64>, LaggedGrams)>> {
    let t = residuals.len() as f64;
    kernels
        .iter()
        .map(|&(k, l)| {
            let grams = LaggedGrams::new(residuals, k, l)?;
            let stats = (1..=max_lag)
                .map(|m| grams.statistic(m).map(|s| t * s.v))
                .collect::<Result<Vec<_>>>()?;
            Ok((stats, grams))
        })
        .collect()
}

/// Observed and bootstrap residual statistics for several kernel pairs,
/// sharing one set of resampled and refitted series.
#[derive(Debug, Clone)]
pub struct ResidualDraws<P> {
    pub params: P,
    /// Kernels resolved on the observed residuals, one pair per input pair.
    pub kernels: Vec<(ResolvedKernel, ResolvedKernel)>,
    pub draws: Vec<BootstrapDraws>,
    pub retried: usize,
}

/// Per kernel pair, per lag statistics of one bootstrap replicate.
type ReplicateStats = Vec<Vec<f64>>;

fn one_replicate<M: CausalModel>(
    model: &M,
    params: &M::Params,
    pool: &ObjectSeries,
    kernels: &[(KernelSpec, KernelSpec)],
    max_lag: usize,
    seed: u64,
    b: usize,
) -> Result<(ReplicateStats, bool)> {
    let t = pool.len();
    let w = pool.space().element_len();
    let attempt = |round: u64| -> Result<ReplicateStats> {
        let mut rng = substream(seed, &[tag::RESAMPLE, b as u64, round]);
        let mut flat = Vec::with_capacity((t + BOOTSTRAP_BURN_IN) * w);
        for _ in 0..t + BOOTSTRAP_BURN_IN {
            flat.extend_from_slice(pool.get(rng.random_range(0..t)));
        }
        let innovations = ObjectSeries::new(pool.space().clone(), flat)?;
        let x = model.simulate(params, &innovations, BOOTSTRAP_BURN_IN)?;
        let refit = model.estimate(&x)?;
        let eta = model.residuals(&x, &refit)?;
        Ok(residual_statistics(&eta, kernels, max_lag)?
            .into_iter()
            .map(|(stats, _)| stats)
            .collect())
    };
    match attempt(0) {
        Ok(stats) => Ok((stats, false)),
        Err(_) => attempt(1).map(|stats| (stats, true)),
    }
}

/// Residual bootstrap (refit on every replicate) for lags 1..=max_lag.
///
/// Each replicate resamples T + burn-in standardised residuals with
/// replacement, simulates from the fitted parameters, refits, and
/// recomputes the residual statistics. A replicate that fails is retried
/// once with a fresh resample; any second failure aborts.
pub fn residual_bootstrap_draws<M: CausalModel>(
    series: &ObjectSeries,
    model: &M,
    kernels: &[(KernelSpec, KernelSpec)],
    max_lag: usize,
    cfg: &BootstrapConfig,
) -> Result<ResidualDraws<M::Params>> {
    cfg.validate()?;
    if max_lag == 0 {
        return Err(Error::InvalidParameter("maximum lag must be at least 1".into()));
    }
    if series.len() < max_lag + MIN_BLOCK {
        return Err(Error::TooShort {
            needed: max_lag + MIN_BLOCK,
            found: series.len(),
        });
    }
    let params = model.estimate(series)?;
    let residuals = model.residuals(series, &params)?;
    let observed = residual_statistics(&residuals, kernels, max_lag)?;
    let pool = standardize_series(&residuals)?;

    let outcomes: Vec<Result<(ReplicateStats, bool)>> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| one_replicate(model, &params, &pool, kernels, max_lag, cfg.master_seed, b))
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if let Some(Err(first)) = outcomes.iter().find(|o| o.is_err()) {
        return Err(Error::BootstrapAborted {
            failed,
            total: cfg.replications,
            first: first.to_string(),
        });
    }
    let reps: Vec<(ReplicateStats, bool)> = outcomes.into_iter().map(|o| o.expect("checked")).collect();
    let retried = reps.iter().filter(|r| r.1).count();
    let draws = observed
        .iter()
        .enumerate()
        .map(|(kidx, (stats, _))| BootstrapDraws {
            observed: stats.clone(),
            replicates: (0..max_lag)
                .map(|idx| reps.iter().map(|r| r.0[kidx][idx]).collect())
                .collect(),
        })
        .collect();
    Ok(ResidualDraws {
        params,
        kernels: observed
            .iter()
            .map(|(_, g)| (g.k_kernel(), g.l_kernel()))
            .collect(),
        draws,
        retried,
    })
}

/// Residual bootstrap test of i.i.d. innovations at lags 1..=max_lag and
/// of the portmanteau statistic.
pub fn residual_bootstrap_test<M: CausalModel>(
    series: &ObjectSeries,
    model: &M,
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    max_lag: usize,
    cfg: &BootstrapConfig,
) -> Result<DiagnosticReport<M::Params>> {
    let out = residual_bootstrap_draws(series, model, &[(k_spec, l_spec)], max_lag, cfg)?;
    let draws = &out.draws[0];
    Ok(DiagnosticReport {
        model: model.name().to_string(),
        params: out.params,
        series_len: series.len(),
        k_kernel: out.kernels[0].0,
        l_kernel: out.kernels[0].1,
        config: *cfg,
        burn_in: BOOTSTRAP_BURN_IN,
        retried: out.retried,
        per_lag: (1..=max_lag).map(|m| draws.single(m, cfg.level)).collect(),
        portmanteau: draws.portmanteau(max_lag, cfg.level),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::wild_bootstrap_test;
    use crate::garch::{garch11_simulate, Garch11, Garch11Params};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn egp1(seed: u64, t: usize) -> ObjectSeries {
        let theta = Garch11Params::new(0.2, 0.1, 0.5).unwrap();
        ObjectSeries::scalar(garch11_simulate(&theta, &normals(seed, t + 200), 200).unwrap()).unwrap()
    }

    #[test]
    fn standardize_fixed_point() {
        assert_eq!(standardize_residuals(&[-1.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn standardize_moments_and_affine_invariance() {
        let x = normals(1, 257);
        let z = standardize_residuals(&x).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() <= 1e-12);
        assert!((var - 1.0).abs() <= 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 3.7 * v - 12.5).collect();
        let zy = standardize_residuals(&y).unwrap();
        for (a, b) in z.iter().zip(&zy) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn standardize_rejects_constant() {
        assert_eq!(standardize_residuals(&[2.0; 5]), Err(Error::DegenerateResiduals));
        assert_eq!(standardize_residuals(&[]), Err(Error::DegenerateResiduals));
    }

    #[test]
    fn degenerate_model_smoke() {
        let s = ObjectSeries::scalar(normals(2, 80)).unwrap();
        let cfg = BootstrapConfig::new(49, 0.05, 3);
        let rep = residual_bootstrap_test(&s, &IidScale, KernelSpec::gaussian(), KernelSpec::gaussian(), 2, &cfg)
            .unwrap();
        assert_eq!(rep.per_lag.len(), 2);
        for d in rep.per_lag.iter().map(|l| &l.decision).chain([&rep.portmanteau.decision]) {
            assert!(d.statistic.is_finite());
            assert!(d.p_value > 0.0 && d.p_value <= 1.0);
            assert_eq!(d.replicates.len(), 49);
        }
        assert_eq!(rep.retried, 0);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = egp1(7, 120);
        let cfg = BootstrapConfig::new(19, 0.05, 11);
        let run = || {
            residual_bootstrap_test(&s, &Garch11, KernelSpec::gaussian(), KernelSpec::gaussian(), 3, &cfg).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn estimation_effect_changes_critical_values() {
        let s = egp1(8, 200);
        let cfg = BootstrapConfig::new(99, 0.05, 5);
        let gk = KernelSpec::gaussian();
        let diag = residual_bootstrap_test(&s, &Garch11, gk, gk, 3, &cfg).unwrap();
        let resid = Garch11.residuals(&s, &diag.params).unwrap();
        let naive = wild_bootstrap_test(&resid, gk, gk, 3, &cfg).unwrap();
        let a: Vec<f64> = diag.per_lag.iter().map(|l| l.decision.critical_value).collect();
        let b: Vec<f64> = naive.per_lag.iter().map(|l| l.decision.critical_value).collect();
        assert_ne!(a, b);
        for (d, w) in diag.per_lag.iter().zip(&naive.per_lag) {
            assert_eq!(d.decision.statistic, w.decision.statistic);
        }
    }

    #[test]
    fn argument_errors() {
        let s = egp1(9, 100);
        let gk = KernelSpec::gaussian();
        let cfg = BootstrapConfig::new(9, 0.05, 1);
        assert!(residual_bootstrap_test(&s, &Garch11, gk, gk, 0, &cfg).is_err());
        let short = ObjectSeries::scalar(normals(1, 5)).unwrap();
        assert!(matches!(
            residual_bootstrap_test(&short, &IidScale, gk, gk, 2, &cfg),
            Err(Error::TooShort { .. })
        ));
    }

    struct Flaky;

    impl CausalModel for Flaky {
        type Params = ();
        fn name(&self) -> &'static str {
            "flaky"
        }
        fn estimate(&self, series: &ObjectSeries) -> Result<()> {
            // fails on every bootstrap series, which are shorter than the original
            if series.len() < 60 {
                Err(Error::EstimationFailed("refit".into()))
            } else {
                Ok(())
            }
        }
        fn residuals(&self, series: &ObjectSeries, _: &()) -> Result<ObjectSeries> {
            Ok(series.clone())
        }
        fn simulate(&self, _: &(), innovations: &ObjectSeries, burn_in: usize) -> Result<ObjectSeries> {
            ObjectSeries::scalar(innovations.as_flat()[burn_in + 10..].to_vec())
        }
    }

    #[test]
    fn repeated_failures_abort_with_count() {
        let s = ObjectSeries::scalar(normals(3, 60)).unwrap();
        let gk = KernelSpec::gaussian();
        let err = residual_bootstrap_test(&s, &Flaky, gk, gk, 1, &BootstrapConfig::new(7, 0.05, 1)).unwrap_err();
        match err {
            Error::BootstrapAborted { failed, total, first } => {
                assert_eq!((failed, total), (7, 7));
                assert!(!first.is_empty());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
