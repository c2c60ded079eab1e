//! Core consistency diagnostic.
//!
//! Given PARAFAC factors `A, B, C` of `X`, the least-squares TUCKER3 core with those factors is
//! `G = X ×₁A⁺ ×₂B⁺ ×₃C⁺` (the minimum-norm solution), and the diagnostic is
//! `100 · (1 − ‖I − G‖² / ‖I‖²)` where `I` is the superdiagonal identity. Values near 100 mean
//! the trilinear model explains the data; values near zero or negative indicate overfactoring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{cp_als, pseudoinverse_with_rank, CpModel, FitConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::derive_seed;
use crate::tensor::{superdiagonal_identity, DenseTensor3, Dims, Mode};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorcondiaReport {
    pub value: f64,
    pub core: DenseTensor3,
    pub rank: usize,
    /// Numerical rank of each factor matrix as seen by its pseudoinverse. Anything below
    /// `rank` means the factors were (near) collinear; the value is still reported.
    pub factor_ranks: [usize; 3],
    /// Fit of the PARAFAC model the report was computed from, when known.
    pub fit: Option<f64>,
}

impl CorcondiaReport {
    pub fn rank_deficient(&self) -> bool {
        self.factor_ranks.iter().any(|&r| r < self.rank)
    }
}

fn check_factors(x: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<usize> {
    let rank = a.cols();
    for (mode, f) in Mode::ALL.into_iter().zip([a, b, c]) {
        if f.cols() != rank || f.rows() != x.dims().get(mode) {
            return Err(Error::Shape(format!(
                "mode-{mode} factor is {}x{}, expected {}x{rank} for a {} tensor",
                f.rows(),
                f.cols(),
                x.dims().get(mode),
                x.dims()
            )));
        }
    }
    Ok(rank)
}

fn core_and_ranks(x: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<(DenseTensor3, [usize; 3])> {
    check_factors(x, a, b, c)?;
    let pa = pseudoinverse_with_rank(a, None)?;
    let pb = pseudoinverse_with_rank(b, None)?;
    let pc = pseudoinverse_with_rank(c, None)?;
    let core = x.multilinear(&pa.matrix, &pb.matrix, &pc.matrix)?;
    Ok((core, [pa.rank, pb.rank, pc.rank]))
}

/// `X ×₁A⁺ ×₂B⁺ ×₃C⁺`, the `R x R x R` least-squares core for fixed factors.
pub fn corcondia_core(x: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<DenseTensor3> {
    Ok(core_and_ranks(x, a, b, c)?.0)
}

/// `100 · (1 − ‖I − G‖² / R)` for a cubic core `G`.
pub fn corcondia_value(core: &DenseTensor3) -> Result<f64> {
    let Dims(p, q, r) = core.dims();
    if p != q || q != r {
        return Err(Error::Shape(format!("core must be cubic, got {}", core.dims())));
    }
    let ident = superdiagonal_identity(p)?;
    let dist = ident.distance(core)?;
    Ok((1.0 - dist * dist / p as f64) * 100.0)
}

pub fn corcondia_from_factors(x: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<CorcondiaReport> {
    let (core, factor_ranks) = core_and_ranks(x, a, b, c)?;
    Ok(CorcondiaReport {
        value: corcondia_value(&core)?,
        rank: a.cols(),
        core,
        factor_ranks,
        fit: None,
    })
}

pub fn corcondia(x: &DenseTensor3, model: &CpModel) -> Result<CorcondiaReport> {
    let mut report = corcondia_from_factors(x, &model.a, &model.b, &model.c)?;
    report.fit = Some(model.fit);
    Ok(report)
}

/// Fits `cp_als` at `rank` and evaluates the diagnostic.
pub fn fit_and_corcondia(x: &DenseTensor3, rank: usize, cfg: &FitConfig) -> Result<(CpModel, CorcondiaReport)> {
    let model = cp_als(x, rank, cfg)?;
    let report = corcondia(x, &model)?;
    Ok((model, report))
}

/// Seed used for the fit at `rank` within a sweep.
pub fn sweep_seed(seed: u64, rank: usize) -> u64 {
    derive_seed(&[seed, rank as u64])
}

/// One independent fit and report per entry of `ranks`, in input order.
pub fn corcondia_sweep(x: &DenseTensor3, ranks: &[usize], cfg: &FitConfig) -> Result<Vec<CorcondiaReport>> {
    if ranks.is_empty() {
        return Err(Error::Validation("rank list is empty".into()));
    }
    ranks
        .par_iter()
        .map(|&rank| {
            fit_and_corcondia(x, rank, &cfg.with_seed(sweep_seed(cfg.seed, rank)))
                .map(|(_, report)| report)
                .map_err(|e| Error::AtRank {
                    rank,
                    source: Box::new(e),
                })
        })
        .collect()
}
