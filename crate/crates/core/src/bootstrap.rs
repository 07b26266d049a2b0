//! Wild bootstrap calibration of the single-lag and portmanteau tests.
//!
//! For each replicate b and lag m an independent weight vector w is drawn
//! and the doubly weighted statistic
//!
//! ```text
//! V*_{T,m} = sum_{i != j} w_i a_ij b_ij w_j / (n (n - 3))
//! ```
//!
//! is formed from the fixed U-centred matrices of the observed sample. The
//! portmanteau replicate is the sum of the per-lag replicates of the same b.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, ResolvedKernel};
use crate::rng::{substream, tag};
use crate::space::ObjectSeries;
use crate::statistics::{CenteredGramPair, LaggedGrams, MIN_BLOCK};

/// Law of the external bootstrap weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFamily {
    /// +1 or -1 with probability 1/2 each.
    #[default]
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates B.
    pub replications: usize,
    /// Nominal level alpha.
    pub level: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub weights: WeightFamily,
}

impl BootstrapConfig {
    pub fn new(replications: usize, level: f64, master_seed: u64) -> Self {
        Self {
            replications,
            level,
            master_seed,
            weights: WeightFamily::Rademacher,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "bootstrap replications must be at least 1".into(),
            ));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "level {} must lie in (0, 1)",
                self.level
            )));
        }
        Ok(())
    }
}

/// Weight generator for replicate `b` at lag `m`.
pub fn weight_stream(master_seed: u64, b: usize, m: usize) -> ChaCha8Rng {
    substream(master_seed, &[tag::WEIGHTS, b as u64, m as u64])
}

/// `n` i.i.d. weights with mean 0 and variance 1.
pub fn draw_weights(rng: &mut ChaCha8Rng, n: usize, family: WeightFamily) -> Vec<f64> {
    match family {
        WeightFamily::Rademacher => (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
    }
}

/// w' C w for symmetric C with zero diagonal.
fn quadratic_form(c: &DMatrix<f64>, w: &[f64]) -> f64 {
    c.column_iter()
        .zip(w)
        .map(|(col, &wj)| wj * col.iter().zip(w).map(|(cij, wi)| cij * wi).sum::<f64>())
        .sum()
}

/// One wild bootstrap draw V*_{T,m} for the weights `w`.
pub fn bootstrap_statistic_once(pair: &CenteredGramPair, w: &[f64]) -> Result<f64> {
    if w.len() != pair.n() {
        return Err(Error::ShapeMismatch {
            expected: pair.n(),
            found: w.len(),
        });
    }
    Ok(quadratic_form(&pair.product(), w) / pair.normalizer())
}

/// Index (0-based) of the empirical 1 - alpha quantile among `b` sorted
/// replicates: the order statistic ceil((1 - alpha) b), clamped to [1, b].
pub fn quantile_index(b: usize, level: f64) -> usize {
    // the tolerance absorbs representation error in (1 - alpha) b, e.g. 0.95 * 300
    let rank = ((1.0 - level) * b as f64 - 1e-9).ceil() as usize;
    rank.clamp(1, b) - 1
}

/// Empirical 1 - alpha quantile of the replicates.
pub fn critical_value(replicates: &[f64], level: f64) -> f64 {
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[quantile_index(sorted.len(), level)]
}

/// (1 + #{stat* >= stat}) / (B + 1).
pub fn p_value(statistic: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&r| r >= statistic).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Bootstrap decision for one statistic, on the T-scaled scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub replicates: Vec<f64>,
}

impl Decision {
    pub fn new(statistic: f64, replicates: Vec<f64>, level: f64) -> Self {
        let critical_value = critical_value(&replicates, level);
        Self {
            statistic,
            critical_value,
            p_value: p_value(statistic, &replicates),
            reject: statistic > critical_value,
            replicates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagDecision {
    pub lag: usize,
    #[serde(flatten)]
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortmanteauDecision {
    pub max_lag: usize,
    #[serde(flatten)]
    pub decision: Decision,
}

/// Observed T-scaled statistics and bootstrap replicates for lags 1..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    /// T V_{T,m}, index m - 1.
    pub observed: Vec<f64>,
    /// replicates[m - 1][b] = T V*_{T,m} of replicate b.
    pub replicates: Vec<Vec<f64>>,
}

impl BootstrapDraws {
    pub fn max_lag(&self) -> usize {
        self.observed.len()
    }

    pub fn single(&self, m: usize, level: f64) -> LagDecision {
        LagDecision {
            lag: m,
            decision: Decision::new(self.observed[m - 1], self.replicates[m - 1].clone(), level),
        }
    }

    /// Portmanteau test over lags 1..=max_lag, built from the same replicates.
    pub fn portmanteau(&self, max_lag: usize, level: f64) -> PortmanteauDecision {
        let statistic = self.observed[..max_lag].iter().sum();
        let b = self.replicates[0].len();
        let replicates = (0..b)
            .map(|r| self.replicates[..max_lag].iter().map(|lag| lag[r]).sum())
            .collect();
        PortmanteauDecision {
            max_lag,
            decision: Decision::new(statistic, replicates, level),
        }
    }
}

/// Runs the wild bootstrap for lags 1..=max_lag on prepared Gram matrices.
pub fn wild_bootstrap_draws(
    grams: &LaggedGrams,
    max_lag: usize,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    if max_lag == 0 {
        return Err(Error::InvalidParameter("maximum lag must be at least 1".into()));
    }
    let t = grams.len() as f64;
    let mut products = Vec::with_capacity(max_lag);
    let mut observed = Vec::with_capacity(max_lag);
    for m in 1..=max_lag {
        let pair = grams.pair(m)?;
        observed.push(t * pair.statistic());
        products.push((pair.product(), pair.normalizer()));
    }
    let per_replicate: Vec<Vec<f64>> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| {
            products
                .iter()
                .enumerate()
                .map(|(idx, (c, norm))| {
                    let mut rng = weight_stream(cfg.master_seed, b, idx + 1);
                    let w = draw_weights(&mut rng, c.nrows(), cfg.weights);
                    t * quadratic_form(c, &w) / norm
                })
                .collect()
        })
        .collect();
    let replicates = (0..max_lag)
        .map(|idx| per_replicate.iter().map(|r| r[idx]).collect())
        .collect();
    Ok(BootstrapDraws {
        observed,
        replicates,
    })
}

/// Full output of a wild bootstrap test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub series_len: usize,
    pub k_kernel: ResolvedKernel,
    pub l_kernel: ResolvedKernel,
    pub config: BootstrapConfig,
    pub per_lag: Vec<LagDecision>,
    pub portmanteau: PortmanteauDecision,
}

/// Wild bootstrap tests of serial independence at lags 1..=max_lag and of
/// the portmanteau statistic P_{T,M}.
pub fn wild_bootstrap_test(
    series: &ObjectSeries,
    k_spec: KernelSpec,
    l_spec: KernelSpec,
    max_lag: usize,
    cfg: &BootstrapConfig,
) -> Result<TestReport> {
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
    let grams = LaggedGrams::new(series, k_spec, l_spec)?;
    let draws = wild_bootstrap_draws(&grams, max_lag, cfg)?;
    Ok(TestReport {
        series_len: series.len(),
        k_kernel: grams.k_kernel(),
        l_kernel: grams.l_kernel(),
        config: *cfg,
        per_lag: (1..=max_lag).map(|m| draws.single(m, cfg.level)).collect(),
        portmanteau: draws.portmanteau(max_lag, cfg.level),
    })
}
