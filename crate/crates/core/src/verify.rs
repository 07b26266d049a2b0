//! End-to-end self-checks: oracle equivalence, U-centring invariants,
//! kernel positive semidefiniteness and the bootstrap mean-zero property.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{draw_weights, weight_stream, BootstrapConfig};
use crate::error::Result;
use crate::kernel::{gram_matrix, KernelSpec};
use crate::space::{ObjectSeries, Space};
use crate::statistics::{auto_hsic, u_center, LaggedGrams};
use crate::ustat::auto_hsic_ustat_oracle;

/// U-centring routine under test.
pub type Centering = dyn Fn(&DMatrix<f64>) -> Result<DMatrix<f64>> + Sync;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub passed: bool,
    /// Inputs of the first failing case, empty on success.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

pub const ORACLE_LENGTHS: [usize; 4] = [8, 10, 12, 14];
pub const ORACLE_LAGS: [usize; 3] = [1, 2, 3];

pub fn kernel_families() -> [KernelSpec; 3] {
    [
        KernelSpec::gaussian(),
        KernelSpec::laplacian(),
        KernelSpec::BrownianDistance,
    ]
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Seeded random series of length `t` in R^`dim`.
pub fn random_series(seed: u64, t: usize, dim: usize) -> ObjectSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ObjectSeries::new(Space::Euclidean { dim }, normals(&mut rng, t * dim)).expect("finite data")
}

/// V_{T,m} computed from raw Gram blocks and the given centring routine.
pub fn centred_statistic(
    series: &ObjectSeries,
    k: KernelSpec,
    l: KernelSpec,
    m: usize,
    center: &Centering,
) -> Result<f64> {
    let t = series.len();
    let n = t - m;
    let a = center(&gram_matrix(k, series, m, t - 1)?)?;
    let b = center(&gram_matrix(l, series, 0, n - 1)?)?;
    Ok(a.component_mul(&b).sum() / (n as f64 * (n as f64 - 3.0)))
}

/// Fast estimator against the fourth-order U-statistic on the full grid of
/// lengths, lags, kernels and (scalar, 3-vector) data.
pub fn check_oracle_grid(center: &Centering) -> CheckResult {
    let mut cases = 0;
    let mut detail = String::new();
    'grid: for dim in [1usize, 3] {
        for t in ORACLE_LENGTHS {
            for m in ORACLE_LAGS {
                for kernel in kernel_families() {
                    cases += 1;
                    let seed = 1000 * dim as u64 + 10 * t as u64 + m as u64;
                    let s = random_series(seed, t, dim);
                    let outcome = (|| -> Result<(f64, f64, f64)> {
                        let oracle = auto_hsic_ustat_oracle(&s, kernel, kernel, m)?;
                        let fast = auto_hsic(&s, kernel, kernel, m)?.v;
                        let injected = centred_statistic(&s, kernel, kernel, m, center)?;
                        Ok((oracle, fast, injected))
                    })();
                    let failure = match outcome {
                        Ok((oracle, fast, injected)) => {
                            let tol = 1e-9 * (1.0 + oracle.abs());
                            ((fast - oracle).abs() > tol || (injected - oracle).abs() > tol).then(|| {
                                format!("oracle {oracle:e}, estimator {fast:e}, centred blocks {injected:e}")
                            })
                        }
                        Err(e) => Some(e.to_string()),
                    };
                    if let Some(msg) = failure {
                        detail = format!(
                            "T={t} m={m} kernel={} dim={dim} seed={seed}: {msg}",
                            kernel.label()
                        );
                        break 'grid;
                    }
                }
            }
        }
    }
    CheckResult {
        name: "oracle_equivalence".into(),
        cases,
        passed: detail.is_empty(),
        detail,
    }
}

/// Zero diagonal and zero row/column sums on 100 random Gram blocks.
pub fn check_u_centering(center: &Centering) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut detail = String::new();
    let families = kernel_families();
    let cases = 100;
    for case in 0..cases {
        let n = rng.random_range(4..=50);
        let dim = rng.random_range(1..=3);
        let s = ObjectSeries::new(Space::Euclidean { dim }, normals(&mut rng, n * dim)).expect("finite");
        let kernel = families[case % 3];
        let outcome = gram_matrix(kernel, &s, 0, n - 1).and_then(|g| center(&g));
        let msg = match outcome {
            Err(e) => Some(e.to_string()),
            Ok(a) => {
                let scale = a.amax().max(f64::MIN_POSITIVE);
                let diag = (0..n).any(|i| a[(i, i)] != 0.0);
                let worst = a
                    .row_iter()
                    .map(|r| r.sum().abs())
                    .chain(a.column_iter().map(|c| c.sum().abs()))
                    .fold(0.0, f64::max);
                if diag {
                    Some("nonzero diagonal".to_string())
                } else if worst > 1e-9 * n as f64 * scale {
                    Some(format!("row/column sum {worst:e} against max entry {scale:e}"))
                } else {
                    None
                }
            }
        };
        if let Some(msg) = msg {
            detail = format!("case {case} n={n} dim={dim} kernel={}: {msg}", kernel.label());
            break;
        }
    }
    CheckResult {
        name: "u_centering_invariants".into(),
        cases,
        passed: detail.is_empty(),
        detail,
    }
}

/// Smallest Gram eigenvalue >= -1e-8 for 50 random points per kernel.
pub fn check_kernel_psd() -> CheckResult {
    let mut detail = String::new();
    let families = kernel_families();
    for (idx, kernel) in families.iter().enumerate() {
        let s = random_series(7 + idx as u64, 50, 2);
        let msg = match gram_matrix(*kernel, &s, 0, 49) {
            Err(e) => Some(e.to_string()),
            Ok(g) => {
                let min = SymmetricEigen::new(g).eigenvalues.min();
                (min < -1e-8).then(|| format!("smallest eigenvalue {min:e}"))
            }
        };
        if let Some(msg) = msg {
            detail = format!("kernel={}: {msg}", kernel.label());
            break;
        }
    }
    CheckResult {
        name: "kernel_psd".into(),
        cases: families.len(),
        passed: detail.is_empty(),
        detail,
    }
}

/// |mean of B = 10^4 bootstrap replicates| <= 3 SE for fixed data.
pub fn check_bootstrap_mean_zero() -> CheckResult {
    let s = random_series(99, 60, 1);
    let cfg = BootstrapConfig::new(10_000, 0.05, 2024);
    let detail = match LaggedGrams::new(&s, KernelSpec::gaussian(), KernelSpec::gaussian())
        .and_then(|g| g.pair(1))
    {
        Err(e) => e.to_string(),
        Ok(pair) => {
            let c = pair.product();
            let norm = pair.normalizer();
            let reps: Vec<f64> = (0..cfg.replications)
                .map(|b| {
                    let w = draw_weights(&mut weight_stream(cfg.master_seed, b, 1), c.nrows(), cfg.weights);
                    let cw = &c * nalgebra::DVector::from_vec(w.clone());
                    cw.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>() / norm
                })
                .collect();
            let n = reps.len() as f64;
            let mean = reps.iter().sum::<f64>() / n;
            let sd = (reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            if mean.abs() <= 3.0 * sd / n.sqrt() {
                String::new()
            } else {
                format!("mean {mean:e} exceeds 3 SE {:e}", 3.0 * sd / n.sqrt())
            }
        }
    };
    CheckResult {
        name: "bootstrap_mean_zero".into(),
        cases: 1,
        passed: detail.is_empty(),
        detail,
    }
}

/// All checks with the production U-centring.
pub fn run_all() -> VerifyReport {
    run_with(&u_center)
}

/// All checks, with `center` substituted for U-centring where blocks are
/// centred explicitly.
pub fn run_with(center: &Centering) -> VerifyReport {
    VerifyReport {
        checks: vec![
            check_oracle_grid(center),
            check_u_centering(center),
            check_kernel_psd(),
            check_bootstrap_mean_zero(),
        ],
    }
}
