//! Machine-readable reports and their text renderings. Every JSON document
//! carries a `schema` string; see REPORTS.md for the field reference.

use std::fmt::Write as _;

use autohsic::bootstrap::{Decision, LagDecision, PortmanteauDecision, WeightFamily};
use autohsic::diagnostics::LocationScale;
use autohsic::simulation::{RejectionRecord, RejectionTable};
use autohsic::verify::VerifyReport;
use autohsic::{DiagnosticReport, Garch11Params, ResolvedKernel, Space, TestReport};
use serde::{Deserialize, Serialize};

pub const TEST_SCHEMA: &str = "autohsic/test-report/v1";
pub const DIAGNOSE_SCHEMA: &str = "autohsic/diagnose-report/v1";
pub const RECORD_SCHEMA: &str = "autohsic/rejection-record/v1";
pub const VERIFY_SCHEMA: &str = "autohsic/verify-report/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub path: String,
    pub space: Space,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEcho {
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
    pub weights: WeightFamily,
}

/// One tested statistic on the T-scaled scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticOut {
    /// "V" for a single lag, "P" for the portmanteau.
    pub kind: String,
    pub lag: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
}

impl StatisticOut {
    fn new(kind: &str, lag: usize, d: &Decision, with_replicates: bool) -> Self {
        Self {
            kind: kind.into(),
            lag,
            statistic: d.statistic,
            critical_value: d.critical_value,
            p_value: d.p_value,
            reject: d.reject,
            replicates: with_replicates.then(|| d.replicates.clone()),
        }
    }

    fn label(&self) -> String {
        format!("{}_{}", self.kind, self.lag)
    }
}

fn statistics(
    per_lag: &[LagDecision],
    portmanteau: &PortmanteauDecision,
    with_replicates: bool,
) -> Vec<StatisticOut> {
    per_lag
        .iter()
        .map(|l| StatisticOut::new("V", l.lag, &l.decision, with_replicates))
        .chain(std::iter::once(StatisticOut::new(
            "P",
            portmanteau.max_lag,
            &portmanteau.decision,
            with_replicates,
        )))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutput {
    pub schema: String,
    pub input: InputEcho,
    pub k_kernel: ResolvedKernel,
    pub l_kernel: ResolvedKernel,
    pub bootstrap: BootstrapEcho,
    pub statistics: Vec<StatisticOut>,
}

impl TestOutput {
    pub fn new(input: InputEcho, r: &TestReport, with_replicates: bool) -> Self {
        Self {
            schema: TEST_SCHEMA.into(),
            input,
            k_kernel: r.k_kernel,
            l_kernel: r.l_kernel,
            bootstrap: BootstrapEcho {
                replications: r.config.replications,
                level: r.config.level,
                seed: r.config.master_seed,
                weights: r.config.weights,
            },
            statistics: statistics(&r.per_lag, &r.portmanteau, with_replicates),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("AutoHSIC serial independence test (wild bootstrap)\n");
        preamble(&mut out, &self.input, self.k_kernel, self.l_kernel, &self.bootstrap);
        statistic_table(&mut out, &self.statistics);
        out
    }
}

/// Fitted parameters of any supported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedParams {
    Garch11(Garch11Params),
    IidScale(LocationScale),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOutput {
    pub schema: String,
    pub input: InputEcho,
    pub model: String,
    pub params: FittedParams,
    pub k_kernel: ResolvedKernel,
    pub l_kernel: ResolvedKernel,
    pub bootstrap: BootstrapEcho,
    pub burn_in: usize,
    pub retried: usize,
    pub statistics: Vec<StatisticOut>,
}

impl DiagnoseOutput {
    pub fn new<P>(
        input: InputEcho,
        r: &DiagnosticReport<P>,
        params: FittedParams,
        with_replicates: bool,
    ) -> Self {
        Self {
            schema: DIAGNOSE_SCHEMA.into(),
            input,
            model: r.model.clone(),
            params,
            k_kernel: r.k_kernel,
            l_kernel: r.l_kernel,
            bootstrap: BootstrapEcho {
                replications: r.config.replications,
                level: r.config.level,
                seed: r.config.master_seed,
                weights: r.config.weights,
            },
            burn_in: r.burn_in,
            retried: r.retried,
            statistics: statistics(&r.per_lag, &r.portmanteau, with_replicates),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("AutoHSIC residual diagnostic (refitting residual bootstrap)\n");
        preamble(&mut out, &self.input, self.k_kernel, self.l_kernel, &self.bootstrap);
        let params = match &self.params {
            FittedParams::Garch11(p) => format!("omega={} alpha={} beta={}", p.omega, p.alpha, p.beta),
            FittedParams::IidScale(p) => format!("location={} scale={}", p.location, p.scale),
        };
        let _ = writeln!(out, "model      {} ({params})", self.model);
        let _ = writeln!(out, "burn-in    {}, retried replicates {}", self.burn_in, self.retried);
        statistic_table(&mut out, &self.statistics);
        out
    }
}

fn kernel_text(k: ResolvedKernel) -> String {
    match k {
        ResolvedKernel::Gaussian { gamma } => format!("GK (gamma={gamma:.6})"),
        ResolvedKernel::Laplacian { gamma } => format!("LK (gamma={gamma:.6})"),
        ResolvedKernel::BrownianDistance => "BDK".into(),
    }
}

fn space_text(s: &Space) -> String {
    match s {
        Space::Euclidean { dim } => format!("vector dim={dim}"),
        Space::Matrix { rows, cols } => format!("matrix {rows}x{cols}"),
        Space::Functional { grid, .. } => format!("functional, {} grid points", grid.len()),
    }
}

fn preamble(out: &mut String, input: &InputEcho, k: ResolvedKernel, l: ResolvedKernel, b: &BootstrapEcho) {
    let _ = writeln!(out, "input      {} ({}, T={})", input.path, space_text(&input.space), input.length);
    let _ = writeln!(out, "kernels    k={}, l={}", kernel_text(k), kernel_text(l));
    let _ = writeln!(
        out,
        "bootstrap  B={}, level={}, seed={}",
        b.replications, b.level, b.seed
    );
}

fn statistic_table(out: &mut String, stats: &[StatisticOut]) {
    let _ = writeln!(
        out,
        "\n{:<10}{:>14}{:>14}{:>10}  decision",
        "statistic", "T-scaled", "critical", "p-value"
    );
    for s in stats {
        let _ = writeln!(
            out,
            "{:<10}{:>14.6}{:>14.6}{:>10.4}  {}",
            s.label(),
            s.statistic,
            s.critical_value,
            s.p_value,
            if s.reject { "reject" } else { "do not reject" }
        );
    }
}

/// One line of the rejection-record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOut {
    pub schema: String,
    #[serde(flatten)]
    pub record: RejectionRecord,
}

pub fn records_jsonl(tables: &[RejectionTable]) -> String {
    let mut out = String::new();
    for rec in tables.iter().flat_map(|t| t.records()) {
        let line = RecordOut {
            schema: RECORD_SCHEMA.into(),
            record: rec,
        };
        out.push_str(&serde_json::to_string(&line).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn tables_text(tables: &[RejectionTable]) -> String {
    tables
        .iter()
        .map(|t| t.to_text())
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub schema: String,
    pub passed: bool,
    #[serde(flatten)]
    pub report: VerifyReport,
}

impl VerifyOutput {
    pub fn new(report: VerifyReport) -> Self {
        Self {
            schema: VERIFY_SCHEMA.into(),
            passed: report.passed(),
            report,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.report.checks {
            let _ = write!(
                out,
                "{} {} ({} cases)",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.cases
            );
            if !c.passed {
                let _ = write!(out, ": {}", c.detail);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{}", if self.passed { "all checks passed" } else { "verification failed" });
        out
    }
}

/// Pretty JSON with a trailing newline, the on-disk form of every document.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use autohsic::{wild_bootstrap_test, BootstrapConfig, KernelSpec, ObjectSeries};

    fn sample_report(with_replicates: bool) -> TestOutput {
        let x: Vec<f64> = (0..40).map(|t| ((t * 17 % 13) as f64 * 0.37).sin()).collect();
        let s = ObjectSeries::scalar(x).unwrap();
        let gk = KernelSpec::gaussian();
        let r = wild_bootstrap_test(&s, gk, gk, 2, &BootstrapConfig::new(19, 0.05, 3)).unwrap();
        let input = InputEcho {
            path: "x.txt".into(),
            space: s.space().clone(),
            length: s.len(),
        };
        TestOutput::new(input, &r, with_replicates)
    }

    #[test]
    fn test_report_round_trips_byte_for_byte() {
        for with in [false, true] {
            let text = to_json(&sample_report(with));
            let back: TestOutput = serde_json::from_str(&text).unwrap();
            assert_eq!(to_json(&back), text);
        }
    }

    #[test]
    fn replicates_only_when_requested() {
        assert!(!to_json(&sample_report(false)).contains("replicates"));
        let full = sample_report(true);
        assert_eq!(full.statistics[0].replicates.as_ref().unwrap().len(), 19);
        assert_eq!(full.statistics.last().unwrap().kind, "P");
    }

    #[test]
    fn fitted_params_keep_their_shape() {
        let g = FittedParams::Garch11(Garch11Params::new(0.2, 0.1, 0.5).unwrap());
        let back: FittedParams = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let i = FittedParams::IidScale(LocationScale { location: 1.0, scale: 2.0 });
        let back: FittedParams = serde_json::from_str(&serde_json::to_string(&i).unwrap()).unwrap();
        assert_eq!(back, i);
    }

    #[test]
    fn text_lists_every_statistic() {
        let text = sample_report(false).to_text();
        assert!(text.contains("V_1") && text.contains("V_2") && text.contains("P_2"), "{text}");
    }
}
