//! Monte Carlo rejection-rate experiments.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{Dgp, DgpSpec};
use crate::bootstrap::{wild_bootstrap_draws, BootstrapConfig, BootstrapDraws};
use crate::diagnostics::residual_bootstrap_draws;
use crate::error::{Error, Result};
use crate::garch::Garch11;
use crate::kernel::KernelSpec;
use crate::rng::{substream, substream_seed, tag};
use crate::statistics::LaggedGrams;

/// How critical values are obtained in each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    /// Wild bootstrap on the raw series.
    #[default]
    Wild,
    /// Fit GARCH(1,1) and run the refitting residual bootstrap.
    ResidualGarch11,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatisticKind {
    /// Single-lag V_{T,m}.
    V,
    /// Portmanteau P_{T,M}.
    P,
}

/// Kernel on X_t and kernel on X_{t-m}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelPair {
    pub k: KernelSpec,
    pub l: KernelSpec,
}

impl KernelPair {
    pub const fn same(k: KernelSpec) -> Self {
        Self { k, l: k }
    }

    pub fn label(&self) -> String {
        if self.k == self.l {
            self.k.label().to_string()
        } else {
            format!("{}/{}", self.k.label(), self.l.label())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dgp: DgpSpec,
    pub sample_size: usize,
    pub replications: usize,
    pub bootstrap: usize,
    pub level: f64,
    pub single_lags: Vec<usize>,
    pub portmanteau_lags: Vec<usize>,
    pub kernels: Vec<KernelPair>,
    pub master_seed: u64,
    #[serde(default)]
    pub procedure: Procedure,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.replications == 0 || self.bootstrap == 0 {
            return Err(Error::InvalidParameter(
                "replications and bootstrap size must be at least 1".into(),
            ));
        }
        BootstrapConfig::new(self.bootstrap, self.level, 0).validate()?;
        if self.single_lags.is_empty() && self.portmanteau_lags.is_empty() {
            return Err(Error::InvalidParameter("no statistics requested".into()));
        }
        if self.single_lags.iter().chain(&self.portmanteau_lags).any(|&m| m == 0) {
            return Err(Error::InvalidParameter("lags must be at least 1".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::InvalidParameter("no kernels requested".into()));
        }
        for pair in &self.kernels {
            pair.k.validate()?;
            pair.l.validate()?;
        }
        if self.procedure == Procedure::ResidualGarch11 && !self.dgp.space()?.is_scalar() {
            return Err(Error::InvalidParameter(
                "the GARCH(1,1) residual procedure needs a scalar DGP".into(),
            ));
        }
        if self.sample_size < self.max_lag() + crate::statistics::MIN_BLOCK {
            return Err(Error::TooShort {
                needed: self.max_lag() + crate::statistics::MIN_BLOCK,
                found: self.sample_size,
            });
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.single_lags
            .iter()
            .chain(&self.portmanteau_lags)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Table cells in output order: kernels outermost, then single lags,
    /// then portmanteau lags.
    fn cells(&self) -> Vec<(usize, StatisticKind, usize)> {
        let mut out = Vec::new();
        for kidx in 0..self.kernels.len() {
            out.extend(self.single_lags.iter().map(|&m| (kidx, StatisticKind::V, m)));
            out.extend(self.portmanteau_lags.iter().map(|&m| (kidx, StatisticKind::P, m)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRow {
    pub kernel: String,
    pub statistic: StatisticKind,
    pub lag: usize,
    pub rejections: usize,
    pub replications: usize,
    pub rejection_pct: f64,
    pub se_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub config: ExperimentConfig,
    /// Replications that failed and were left out of the percentages.
    pub failed: usize,
    pub rows: Vec<RejectionRow>,
}

/// One flat record per table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub dgp: String,
    pub kernel: String,
    pub statistic: StatisticKind,
    pub lag: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub d: usize,
    pub rejection_pct: f64,
    pub se_pct: f64,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

impl RejectionTable {
    pub fn records(&self) -> Vec<RejectionRecord> {
        let c = &self.config;
        self.rows
            .iter()
            .map(|row| RejectionRecord {
                dgp: c.dgp.label(),
                kernel: row.kernel.clone(),
                statistic: row.statistic,
                lag: row.lag,
                t: c.sample_size,
                d: c.dgp.dimension(),
                rejection_pct: row.rejection_pct,
                se_pct: row.se_pct,
                r: row.replications,
                b: c.bootstrap,
                seed: c.master_seed,
            })
            .collect()
    }

    /// Aligned text table: one line per kernel, one column per statistic.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}  T={}  d={}  R={}  B={}  alpha={}  seed={}{}",
            c.dgp.label(),
            c.sample_size,
            c.dgp.dimension(),
            self.rows.first().map_or(c.replications, |r| r.replications),
            c.bootstrap,
            c.level,
            c.master_seed,
            if self.failed > 0 {
                format!("  failed={}", self.failed)
            } else {
                String::new()
            }
        );
        let per_kernel = c.single_lags.len() + c.portmanteau_lags.len();
        let headers: Vec<String> = c
            .single_lags
            .iter()
            .map(|m| format!("V_{m}"))
            .chain(c.portmanteau_lags.iter().map(|m| format!("P_{m}")))
            .collect();
        let _ = write!(out, "{:<8}", "kernel");
        for h in &headers {
            let _ = write!(out, "{h:>16}");
        }
        out.push('\n');
        for chunk in self.rows.chunks(per_kernel.max(1)) {
            let _ = write!(out, "{:<8}", chunk[0].kernel);
            for row in chunk {
                let cell = format!("{:.1} ({:.1})", row.rejection_pct, row.se_pct);
                let _ = write!(out, "{cell:>16}");
            }
            out.push('\n');
        }
        out
    }
}

/// Reject flags of one replication, in [`ExperimentConfig::cells`] order.
fn replicate(cfg: &ExperimentConfig, dgp: &Dgp, r: usize) -> Result<Vec<bool>> {
    let mut rng = substream(cfg.master_seed, &[tag::DATA, r as u64]);
    let series = dgp.sample(cfg.sample_size, &mut rng)?;
    let boot = BootstrapConfig::new(
        cfg.bootstrap,
        cfg.level,
        substream_seed(cfg.master_seed, &[tag::WEIGHTS, r as u64]),
    );
    let max_lag = cfg.max_lag();
    let draws: Vec<BootstrapDraws> = match cfg.procedure {
        Procedure::Wild => cfg
            .kernels
            .iter()
            .map(|pair| {
                let grams = LaggedGrams::new(&series, pair.k, pair.l)?;
                wild_bootstrap_draws(&grams, max_lag, &boot)
            })
            .collect::<Result<_>>()?,
        Procedure::ResidualGarch11 => {
            let pairs: Vec<_> = cfg.kernels.iter().map(|p| (p.k, p.l)).collect();
            residual_bootstrap_draws(&series, &Garch11, &pairs, max_lag, &boot)?.draws
        }
    };
    Ok(cfg
        .cells()
        .into_iter()
        .map(|(kidx, kind, m)| match kind {
            StatisticKind::V => draws[kidx].single(m, cfg.level).decision.reject,
            StatisticKind::P => draws[kidx].portmanteau(m, cfg.level).decision.reject,
        })
        .collect())
}

/// Runs `cfg.replications` independent replications and tallies rejection
/// rates. Replication r draws its data from substream r of the master seed,
/// so the table does not depend on the number of worker threads. Aborts if
/// more than 1% of replications fail.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RejectionTable> {
    cfg.validate()?;
    let dgp = Dgp::new(cfg.dgp.clone())?;
    let outcomes: Vec<Result<Vec<bool>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| replicate(cfg, &dgp, r))
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed * 100 > cfg.replications {
        let first = outcomes
            .iter()
            .find_map(|o| o.as_ref().err())
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(Error::ExperimentAborted {
            failed,
            total: cfg.replications,
            first,
        });
    }
    let ok: Vec<Vec<bool>> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let n = ok.len();
    let rows = cfg
        .cells()
        .into_iter()
        .enumerate()
        .map(|(idx, (kidx, statistic, lag))| {
            let rejections = ok.iter().filter(|flags| flags[idx]).count();
            let p = rejections as f64 / n as f64;
            RejectionRow {
                kernel: cfg.kernels[kidx].label(),
                statistic,
                lag,
                rejections,
                replications: n,
                rejection_pct: 100.0 * p,
                se_pct: 100.0 * (p * (1.0 - p) / n as f64).sqrt(),
            }
        })
        .collect();
    Ok(RejectionTable {
        config: cfg.clone(),
        failed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::dgp::Innovation;

    fn small(dgp: DgpSpec) -> ExperimentConfig {
        ExperimentConfig {
            dgp,
            sample_size: 40,
            replications: 6,
            bootstrap: 49,
            level: 0.05,
            single_lags: vec![1, 3],
            portmanteau_lags: vec![3],
            kernels: vec![
                KernelPair::same(KernelSpec::gaussian()),
                KernelPair::same(KernelSpec::BrownianDistance),
            ],
            master_seed: 17,
            procedure: Procedure::Wild,
        }
    }

    #[test]
    fn table_layout_and_ranges() {
        let t = run_experiment(&small(DgpSpec::IidNormal { d: 2 })).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.rows[0].kernel, "GK");
        assert_eq!(t.rows[5].kernel, "BDK");
        assert_eq!(t.rows[2].statistic, StatisticKind::P);
        for row in &t.rows {
            assert!((0.0..=100.0).contains(&row.rejection_pct));
            let p = row.rejection_pct / 100.0;
            assert!((row.se_pct - 100.0 * (p * (1.0 - p) / 6.0).sqrt()).abs() < 1e-12);
        }
        assert_eq!(t.records().len(), 6);
        assert!(t.to_text().contains("V_1"));
    }

    #[test]
    fn single_replication_is_bernoulli() {
        let mut cfg = small(DgpSpec::IidNormal { d: 1 });
        cfg.replications = 1;
        let t = run_experiment(&cfg).unwrap();
        assert!(t.rows.iter().all(|r| r.rejection_pct == 0.0 || r.rejection_pct == 100.0));
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg = small(DgpSpec::ProductMa { d: 1, innovation: Innovation::Normal });
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small(DgpSpec::IidNormal { d: 2 });
        cfg.replications = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small(DgpSpec::IidNormal { d: 2 });
        cfg.procedure = Procedure::ResidualGarch11;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small(DgpSpec::IidNormal { d: 2 });
        cfg.single_lags = vec![0];
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn residual_procedure_runs() {
        let cfg = ExperimentConfig {
            dgp: DgpSpec::GarchEgp { egp: 1 },
            sample_size: 80,
            replications: 2,
            bootstrap: 9,
            level: 0.05,
            single_lags: vec![1],
            portmanteau_lags: vec![2],
            kernels: vec![KernelPair::same(KernelSpec::gaussian())],
            master_seed: 3,
            procedure: Procedure::ResidualGarch11,
        };
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.failed, 0);
    }
}
