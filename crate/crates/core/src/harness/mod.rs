//! Monte Carlo protocol: for every (scheme, ratio) cell draw compressed tensors, fit PARAFAC at
//! a fixed rank, and collect the diagnostic.
//!
//! Seeds: the sample with index `s` in cell `(scheme, ratio)` uses
//! `derive_seed([master_seed, scheme.id(), round(ratio · 10⁴), s])` for its operator and
//! `derive_seed([that, 1])` for its PARAFAC fit. The uncompressed baseline uses
//! `derive_seed([master_seed, 0])`. Work items run in parallel but results are assembled in
//! (scheme, ratio, sample) order, so output does not depend on the thread count.

mod stats;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compress::{build_operator, compress, ratio_to_dims, RatioSpec, Scheme};
use crate::corcondia::{fit_and_corcondia, CorcondiaReport};
use crate::decomp::FitConfig;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::tensor::{DenseTensor3, Dims, Mode};

pub use stats::{clamp_negatives, sample_variance, summarize, SummaryStats};

pub const DEFAULT_RATIOS: [f64; 7] = [0.5, 0.4, 0.3, 0.2, 0.1, 0.08, 0.04];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rank: usize,
    pub schemes: Vec<Scheme>,
    pub ratios: Vec<f64>,
    pub samples_per_cell: BTreeMap<Scheme, usize>,
    pub compressed_modes: Vec<Mode>,
    pub master_seed: u64,
    pub fit: FitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            rank: 3,
            schemes: Scheme::ALL.to_vec(),
            ratios: DEFAULT_RATIOS.to_vec(),
            samples_per_cell: BTreeMap::from([
                (Scheme::Gaussian, 1000),
                (Scheme::Orthonormal, 1000),
                (Scheme::Tucker, 10),
            ]),
            compressed_modes: vec![Mode::One, Mode::Two],
            master_seed: 0,
            fit: FitConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn samples_for(&self, scheme: Scheme) -> usize {
        self.samples_per_cell.get(&scheme).copied().unwrap_or(0)
    }

    pub fn ratio_spec(&self, ratio: f64) -> RatioSpec {
        RatioSpec {
            ratio,
            compressed_modes: self.compressed_modes.clone(),
        }
    }

    /// Checks the grid against `dims` and returns the compressed dims per ratio.
    pub fn validate(&self, dims: Dims) -> Result<Vec<Dims>> {
        let config = |msg: String| Err(Error::Config(msg));
        if self.rank == 0 {
            return config("rank must be at least 1".into());
        }
        if self.schemes.is_empty() || self.ratios.is_empty() {
            return config("schemes and ratios must be nonempty".into());
        }
        if self.compressed_modes.is_empty() {
            return config("at least one mode must be compressed".into());
        }
        for &scheme in &self.schemes {
            if self.samples_for(scheme) == 0 {
                return config(format!("no samples configured for the {scheme} scheme"));
            }
        }
        self.fit.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.rank > dims.max_cp_rank() {
            return config(format!("rank {} is infeasible for the {dims} input", self.rank));
        }
        self.ratios
            .iter()
            .map(|&ratio| {
                let target = ratio_to_dims(dims, &self.ratio_spec(ratio)).map_err(|e| Error::Config(e.to_string()))?;
                if self.rank > target.max_cp_rank() {
                    return Err(Error::Config(format!(
                        "rank {} is infeasible for ratio {ratio} (compressed dims {target}, max rank {})",
                        self.rank,
                        target.max_cp_rank()
                    )));
                }
                Ok(target)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scheme: Scheme,
    pub ratio: f64,
    pub dims: Dims,
    pub raw_samples: Vec<f64>,
    pub clamped_samples: Vec<f64>,
    pub stats: SummaryStats,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub input_dims: Dims,
    pub baseline: CorcondiaReport,
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn cell(&self, scheme: Scheme, ratio: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.scheme == scheme && c.ratio == ratio)
    }
}

pub fn ratio_basis_points(ratio: f64) -> u64 {
    (ratio * 10_000.0).round() as u64
}

pub fn sample_seed(master_seed: u64, scheme: Scheme, ratio: f64, sample: usize) -> u64 {
    derive_seed(&[master_seed, scheme.id(), ratio_basis_points(ratio), sample as u64])
}

pub fn baseline_seed(master_seed: u64) -> u64 {
    derive_seed(&[master_seed, 0])
}

/// Diagnostic of one compressed sample; recomputable in isolation.
pub fn run_sample(x: &DenseTensor3, cfg: &ExperimentConfig, scheme: Scheme, ratio: f64, sample: usize) -> Result<f64> {
    let target = ratio_to_dims(x.dims(), &cfg.ratio_spec(ratio))?;
    let seed = sample_seed(cfg.master_seed, scheme, ratio, sample);
    let op = build_operator(scheme, x, target, seed, &cfg.fit)?;
    let compressed = compress(x, &op)?;
    let (_, report) = fit_and_corcondia(&compressed, cfg.rank, &cfg.fit.with_seed(derive_seed(&[seed, 1])))?;
    Ok(report.value)
}

pub fn run_experiment(x: &DenseTensor3, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let targets = cfg.validate(x.dims())?;

    let cells: Vec<(Scheme, f64, Dims)> = cfg
        .schemes
        .iter()
        .flat_map(|&scheme| cfg.ratios.iter().zip(&targets).map(move |(&r, &t)| (scheme, r, t)))
        .collect();
    let tasks: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell, &(scheme, _, _))| (0..cfg.samples_for(scheme)).map(move |s| (cell, s)))
        .collect();

    let (baseline, values) = rayon::join(
        || fit_and_corcondia(x, cfg.rank, &cfg.fit.with_seed(baseline_seed(cfg.master_seed))),
        || {
            tasks
                .par_iter()
                .map(|&(cell, s)| {
                    let (scheme, ratio, _) = cells[cell];
                    run_sample(x, cfg, scheme, ratio, s)
                })
                .collect::<Result<Vec<f64>>>()
        },
    );
    let (_, baseline) = baseline?;
    let values = values?;

    let mut offset = 0;
    let mut results = Vec::with_capacity(cells.len());
    for &(scheme, ratio, dims) in &cells {
        let n = cfg.samples_for(scheme);
        let raw_samples = values[offset..offset + n].to_vec();
        offset += n;
        let clamped_samples = clamp_negatives(&raw_samples);
        let stats = summarize(&clamped_samples)?;
        results.push(CellResult {
            scheme,
            ratio,
            dims,
            raw_samples,
            clamped_samples,
            stats,
        });
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        input_dims: x.dims(),
        baseline,
        cells: results,
    })
}
