//! PARAFAC and TUCKER3 fitting plus the linear algebra they share.

mod cp;
pub mod linalg;
mod tucker;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::DenseTensor3;

pub use cp::{cp_als, mttkrp};
pub use linalg::{pseudoinverse, pseudoinverse_with_rank, reduced_qr, svd, PseudoInverse, Svd};
pub use tucker::{orthonormalize_tucker, tucker3};

/// Stopping rules and randomness shared by the fitting routines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop once the fit changes by less than this between sweeps.
    pub rel_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-8,
            restarts: 5,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Validation("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance > 0.0) || !self.rel_tolerance.is_finite() {
            return Err(Error::Validation(format!(
                "rel_tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Validation("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A fitted PARAFAC model `X ≈ Σ_r a_r ∘ b_r ∘ c_r`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CpModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    /// `1 − ‖X − X̂‖ / ‖X‖` for the returned factors.
    pub fit: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative reconstruction error after each ALS sweep of the returned restart.
    pub error_history: Vec<f64>,
}

impl CpModel {
    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    pub fn reconstruct(&self) -> Result<DenseTensor3> {
        crate::tensor::reconstruct_cp(&self.a, &self.b, &self.c)
    }
}

/// A TUCKER3 model `X ≈ G ×₁A ×₂B ×₃C` with orthonormal-column factors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TuckerModel {
    pub core: DenseTensor3,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    /// `1 − ‖X − X̂‖ / ‖X‖`; absent when the model was not fitted against data.
    pub fit: Option<f64>,
    pub iterations: usize,
}

impl TuckerModel {
    pub fn reconstruct(&self) -> Result<DenseTensor3> {
        crate::tensor::reconstruct_tucker(&self.core, &self.a, &self.b, &self.c)
    }
}

pub(crate) fn relative_fit(x: &DenseTensor3, approx: &DenseTensor3, norm_x: f64) -> Result<f64> {
    Ok(1.0 - x.distance(approx)? / norm_x)
}
