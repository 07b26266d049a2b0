//! Experiment grids of the published simulation tables.
//!
//! Each preset expands into one [`ExperimentConfig`] per (DGP, T) cell with
//! the published protocol: R = 1000 replications, B = 500 Rademacher
//! bootstrap draws, level 5%, statistics V_1, V_3, P_3, P_6 under the
//! Laplacian, Gaussian and Brownian distance kernels.

use super::dgp::{DgpSpec, Innovation, DEFAULT_GRID_POINTS};
use super::experiment::{ExperimentConfig, KernelPair, Procedure};
use crate::kernel::KernelSpec;
use crate::rng::substream_seed;

pub const PRESET_NAMES: [&str; 9] = [
    "table1",
    "table2",
    "supp-table5",
    "supp-table6",
    "supp-table7",
    "supp-table8",
    "supp-table9",
    "supp-table10",
    "supp-table11",
];

pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const DEFAULT_BOOTSTRAP: usize = 500;

const DIMENSIONS: [usize; 7] = [1, 5, 10, 20, 40, 80, 160];
const SAMPLE_SIZES: [usize; 2] = [100, 200];

fn kernels() -> Vec<KernelPair> {
    vec![
        KernelPair::same(KernelSpec::laplacian()),
        KernelPair::same(KernelSpec::gaussian()),
        KernelPair::same(KernelSpec::BrownianDistance),
    ]
}

fn cells(seed: u64, grid: Vec<(DgpSpec, usize)>, procedure: Procedure) -> Vec<ExperimentConfig> {
    grid.into_iter()
        .enumerate()
        .map(|(idx, (dgp, sample_size))| ExperimentConfig {
            dgp,
            sample_size,
            replications: DEFAULT_REPLICATIONS,
            bootstrap: DEFAULT_BOOTSTRAP,
            level: 0.05,
            single_lags: vec![1, 3],
            portmanteau_lags: vec![3, 6],
            kernels: kernels(),
            master_seed: substream_seed(seed, &[idx as u64]),
            procedure,
        })
        .collect()
}

/// T outermost, then d, then the variants returned by `make`.
fn by_dimension(make: impl Fn(usize) -> Vec<DgpSpec>) -> Vec<(DgpSpec, usize)> {
    let mut out = Vec::new();
    for t in SAMPLE_SIZES {
        for d in DIMENSIONS {
            out.extend(make(d).into_iter().map(|s| (s, t)));
        }
    }
    out
}

/// The cells of preset `name`, or `None` for an unknown name.
pub fn preset(name: &str, seed: u64) -> Option<Vec<ExperimentConfig>> {
    let normal = Innovation::Normal;
    let t2 = Innovation::StudentT { nu: 2.0 };
    let grid: Vec<(DgpSpec, usize)> = match name {
        "table1" => {
            let g = DEFAULT_GRID_POINTS;
            [
                DgpSpec::FunctionalIid { grid_points: g },
                DgpSpec::FunctionalArch { grid_points: g },
                DgpSpec::FunctionalProductMa { grid_points: g },
            ]
            .into_iter()
            .flat_map(|s| SAMPLE_SIZES.map(|t| (s.clone(), t)))
            .collect()
        }
        "table2" | "supp-table11" => {
            let t = if name == "table2" { 200 } else { 100 };
            [0.0, 0.2, 0.3]
                .into_iter()
                .flat_map(|c| [2, 5, 8].map(|d| (DgpSpec::MatrixGarch { d, c }, t)))
                .collect()
        }
        "supp-table5" => {
            return Some(cells(
                seed,
                (1..=3u8)
                    .flat_map(|egp| [200, 400].map(|t| (DgpSpec::GarchEgp { egp }, t)))
                    .collect(),
                Procedure::ResidualGarch11,
            ))
        }
        "supp-table6" => by_dimension(|d| vec![DgpSpec::IidNormal { d }]),
        "supp-table7" => by_dimension(|d| {
            vec![
                DgpSpec::IidStudentT { d, nu: 2.0 },
                DgpSpec::IidStudentT { d, nu: 1.0 },
            ]
        }),
        "supp-table8" => by_dimension(|d| {
            vec![
                DgpSpec::ProductMa { d, innovation: normal },
                DgpSpec::ProductMa { d, innovation: t2 },
            ]
        }),
        "supp-table9" => by_dimension(|d| {
            vec![
                DgpSpec::ComponentGarch { d, innovation: normal },
                DgpSpec::ComponentGarch { d, innovation: t2 },
            ]
        }),
        "supp-table10" => by_dimension(|d| {
            vec![
                DgpSpec::Var1 { d, rho: 0.3, innovation: normal },
                DgpSpec::Var1 { d, rho: 0.3, innovation: t2 },
            ]
        }),
        _ => return None,
    };
    Some(cells(seed, grid, Procedure::Wild))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_expands() {
        for name in PRESET_NAMES {
            let cells = preset(name, 1).unwrap();
            assert!(!cells.is_empty(), "{name}");
            for c in &cells {
                c.validate().unwrap();
            }
        }
        assert!(preset("table3", 1).is_none());
    }

    #[test]
    fn table_sizes() {
        assert_eq!(preset("table1", 0).unwrap().len(), 6);
        assert_eq!(preset("table2", 0).unwrap().len(), 9);
        assert_eq!(preset("supp-table5", 0).unwrap().len(), 6);
        assert_eq!(preset("supp-table6", 0).unwrap().len(), 14);
        assert_eq!(preset("supp-table8", 0).unwrap().len(), 28);
    }

    #[test]
    fn cell_seeds_differ() {
        let cells = preset("table2", 5).unwrap();
        assert_ne!(cells[0].master_seed, cells[1].master_seed);
    }
}
