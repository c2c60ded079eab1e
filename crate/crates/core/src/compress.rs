//! Modewise compression `X' = X ×₁U ×₂V ×₃W` and the operators that drive it.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::decomp::linalg::{orthonormal_rows_error, reduced_qr};
use crate::decomp::{tucker3, FitConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;
use crate::tensor::{DenseTensor3, Dims, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// i.i.d. standard normal entries, no normalization.
    Gaussian,
    /// Orthonormal rows from the reduced QR of a transposed Gaussian matrix.
    Orthonormal,
    /// Transposed TUCKER3 factors of the tensor being compressed.
    Tucker,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Gaussian, Scheme::Orthonormal, Scheme::Tucker];

    /// Stable identifier mixed into derived seeds.
    pub fn id(self) -> u64 {
        match self {
            Scheme::Gaussian => 1,
            Scheme::Orthonormal => 2,
            Scheme::Tucker => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gaussian => "gaussian",
            Scheme::Orthonormal => "orthonormal",
            Scheme::Tucker => "tucker",
        }
    }

    pub fn has_orthonormal_rows(self) -> bool {
        !matches!(self, Scheme::Gaussian)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Scheme::Gaussian),
            "orthonormal" => Ok(Scheme::Orthonormal),
            "tucker" => Ok(Scheme::Tucker),
            other => Err(Error::Validation(format!(
                "unknown compression scheme '{other}' (expected gaussian, orthonormal or tucker)"
            ))),
        }
    }
}

/// Compression matrices `U (L x I)`, `V (M x J)`, `W (N x K)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionOperator {
    pub u: Matrix,
    pub v: Matrix,
    pub w: Matrix,
    pub scheme: Scheme,
    /// Seed of the random stream; `None` for the Tucker scheme.
    pub seed: Option<u64>,
}

impl CompressionOperator {
    pub fn source_dims(&self) -> Dims {
        Dims(self.u.cols(), self.v.cols(), self.w.cols())
    }

    pub fn target_dims(&self) -> Dims {
        Dims(self.u.rows(), self.v.rows(), self.w.rows())
    }

    pub fn matrices(&self) -> [&Matrix; 3] {
        [&self.u, &self.v, &self.w]
    }

    /// Largest deviation of `U Uᵀ`, `V Vᵀ`, `W Wᵀ` from identity.
    pub fn orthonormality_error(&self) -> f64 {
        self.matrices().into_iter().map(orthonormal_rows_error).fold(0.0, f64::max)
    }
}

/// Compression ratio applied to a subset of modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSpec {
    pub ratio: f64,
    pub compressed_modes: Vec<Mode>,
}

impl RatioSpec {
    /// Modes 1 and 2 only; the third mode is left alone.
    pub fn first_two_modes(ratio: f64) -> Self {
        Self {
            ratio,
            compressed_modes: vec![Mode::One, Mode::Two],
        }
    }
}

/// `floor(ratio · dim)`, clamped to at least 1, for every compressed mode.
pub fn ratio_to_dims(dims: impl Into<Dims>, spec: &RatioSpec) -> Result<Dims> {
    let dims = dims.into();
    if !(spec.ratio > 0.0 && spec.ratio <= 1.0) {
        return Err(Error::Validation(format!(
            "compression ratio must lie in (0, 1], got {}",
            spec.ratio
        )));
    }
    let mut out = dims;
    for &mode in &spec.compressed_modes {
        let size = ((spec.ratio * dims.get(mode) as f64).floor() as usize).max(1);
        out = out.with(mode, size);
    }
    Ok(out)
}

fn check_target(dims: Dims, target: Dims) -> Result<()> {
    for mode in Mode::ALL {
        let (t, d) = (target.get(mode), dims.get(mode));
        if t == 0 || t > d {
            return Err(Error::Shape(format!(
                "target {target} must lie within source {dims} (mode-{mode})"
            )));
        }
    }
    Ok(())
}

/// Draws the three Gaussian matrices for `seed`: `U` first, then `V`, then `W`, each filled
/// row by row from one ChaCha8 stream.
fn gaussian_matrices(dims: Dims, target: Dims, seed: u64) -> [Matrix; 3] {
    let mut rng = rng_from_seed(seed);
    Mode::ALL.map(|mode| {
        Matrix::from_fn(target.get(mode), dims.get(mode), |_, _| StandardNormal.sample(&mut rng))
            .expect("normal draws are finite")
    })
}

pub fn gaussian_operator(dims: impl Into<Dims>, target: impl Into<Dims>, seed: u64) -> Result<CompressionOperator> {
    let (dims, target) = (dims.into(), target.into());
    check_target(dims, target)?;
    let [u, v, w] = gaussian_matrices(dims, target, seed);
    Ok(CompressionOperator {
        u,
        v,
        w,
        scheme: Scheme::Gaussian,
        seed: Some(seed),
    })
}

/// Orthonormal-row operator: for each mode the Gaussian matrix `G` that
/// [`gaussian_operator`] would draw for the same seed is replaced by `Qᵀ` from the reduced QR
/// of `Gᵀ`.
pub fn orthonormal_operator(dims: impl Into<Dims>, target: impl Into<Dims>, seed: u64) -> Result<CompressionOperator> {
    let (dims, target) = (dims.into(), target.into());
    check_target(dims, target)?;
    let [u, v, w] = gaussian_matrices(dims, target, seed)
        .map(|g| reduced_qr(&g.transpose()).map(|(q, _)| q.transpose()));
    Ok(CompressionOperator {
        u: u?,
        v: v?,
        w: w?,
        scheme: Scheme::Orthonormal,
        seed: Some(seed),
    })
}

/// Operator made of the transposed TUCKER3 factors of `x` at `target`; compressing `x` with
/// it yields the fitted core.
pub fn tucker_operator(x: &DenseTensor3, target: impl Into<Dims>, cfg: &FitConfig) -> Result<CompressionOperator> {
    let target = target.into();
    check_target(x.dims(), target)?;
    let model = tucker3(x, target, cfg)?;
    Ok(CompressionOperator {
        u: model.a.transpose(),
        v: model.b.transpose(),
        w: model.c.transpose(),
        scheme: Scheme::Tucker,
        seed: None,
    })
}

/// Builds the operator for `scheme`. `seed` drives the random draws for Gaussian and
/// Orthonormal operators and becomes the fit seed for Tucker.
pub fn build_operator(
    scheme: Scheme,
    x: &DenseTensor3,
    target: Dims,
    seed: u64,
    fit: &FitConfig,
) -> Result<CompressionOperator> {
    match scheme {
        Scheme::Gaussian => gaussian_operator(x.dims(), target, seed),
        Scheme::Orthonormal => orthonormal_operator(x.dims(), target, seed),
        Scheme::Tucker => tucker_operator(x, target, &fit.with_seed(seed)),
    }
}

/// `X ×₁U ×₂V ×₃W`.
pub fn compress(x: &DenseTensor3, op: &CompressionOperator) -> Result<DenseTensor3> {
    if op.source_dims() != x.dims() {
        return Err(Error::Shape(format!(
            "operator expects a {} tensor, got {}",
            op.source_dims(),
            x.dims()
        )));
    }
    x.multilinear(&op.u, &op.v, &op.w)
}

/// `X ×₁UᵀU ×₂VᵀV ×₃WᵀW`, the projection of every fiber onto the operator's rowspaces.
pub fn project_onto_rowspaces(x: &DenseTensor3, op: &CompressionOperator) -> Result<DenseTensor3> {
    if !op.scheme.has_orthonormal_rows() {
        return Err(Error::Validation(format!(
            "rowspace projection needs orthonormal rows; {} operators do not have them",
            op.scheme
        )));
    }
    if op.source_dims() != x.dims() {
        return Err(Error::Shape(format!(
            "operator expects a {} tensor, got {}",
            op.source_dims(),
            x.dims()
        )));
    }
    x.multilinear(&op.u.gram(), &op.v.gram(), &op.w.gram())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_arithmetic() {
        let half = ratio_to_dims((268, 44, 7), &RatioSpec::first_two_modes(0.5)).unwrap();
        assert_eq!(half, Dims(134, 22, 7));
        let tiny = ratio_to_dims((268, 44, 7), &RatioSpec::first_two_modes(0.04)).unwrap();
        assert_eq!(tiny, Dims(10, 1, 7));
        let full = ratio_to_dims((268, 44, 7), &RatioSpec::first_two_modes(1.0)).unwrap();
        assert_eq!(full, Dims(268, 44, 7));
        for bad in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(ratio_to_dims((2, 2, 2), &RatioSpec::first_two_modes(bad)).is_err());
        }
        let third = RatioSpec {
            ratio: 0.1,
            compressed_modes: vec![Mode::Three],
        };
        assert_eq!(ratio_to_dims((268, 44, 7), &third).unwrap(), Dims(268, 44, 1));
    }

    #[test]
    fn gaussian_is_deterministic() {
        let a = gaussian_operator((6, 5, 4), (3, 2, 4), 9).unwrap();
        let b = gaussian_operator((6, 5, 4), (3, 2, 4), 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gaussian_operator((6, 5, 4), (3, 2, 4), 10).unwrap());
        assert!(gaussian_operator((6, 5, 4), (7, 2, 4), 9).is_err());
    }

    #[test]
    fn orthonormal_rows() {
        let op = orthonormal_operator((9, 6, 4), (4, 3, 2), 3).unwrap();
        assert!(op.orthonormality_error() <= 1e-10);
        assert_eq!(op.target_dims(), Dims(4, 3, 2));
    }

    #[test]
    fn identity_operator_is_noop() {
        let x = DenseTensor3::from_fn((3, 2, 2), |i, j, k| (i + 3 * j + 6 * k) as f64).unwrap();
        let op = CompressionOperator {
            u: Matrix::identity(3),
            v: Matrix::identity(2),
            w: Matrix::identity(2),
            scheme: Scheme::Orthonormal,
            seed: None,
        };
        assert_eq!(compress(&x, &op).unwrap(), x);
        assert_eq!(project_onto_rowspaces(&x, &op).unwrap(), x);
    }

    #[test]
    fn gaussian_projection_is_rejected() {
        let x = DenseTensor3::zeros((3, 3, 3));
        let op = gaussian_operator((3, 3, 3), (2, 2, 2), 1).unwrap();
        assert!(matches!(project_onto_rowspaces(&x, &op), Err(Error::Validation(_))));
        assert!(compress(&DenseTensor3::zeros((3, 3, 4)), &op).is_err());
    }

    #[test]
    fn scheme_parsing() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("sparse".parse::<Scheme>().is_err());
    }
}
