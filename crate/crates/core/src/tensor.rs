//! Dense 3-mode tensors and the multilinear primitives built on them.
//!
//! Storage is mode-1 fastest: entry `(i, j, k)` of an `I x J x K` tensor lives at
//! `i + I * (j + J * k)`. The mode-n unfolding is the `I_n x (product of the other dims)`
//! matrix whose columns are the mode-n fibers, ordered with the lower-numbered remaining
//! mode varying fastest:
//!
//! | mode | column index of fiber |
//! |------|-----------------------|
//! | 1    | `j + J * k`           |
//! | 2    | `i + I * k`           |
//! | 3    | `i + I * j`           |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One of the three tensor modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based axis index.
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// One-based mode number.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// The two remaining modes, in increasing order.
    pub fn others(self) -> (Mode, Mode) {
        match self {
            Mode::One => (Mode::Two, Mode::Three),
            Mode::Two => (Mode::One, Mode::Three),
            Mode::Three => (Mode::One, Mode::Two),
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    /// Converts a one-based mode number.
    fn try_from(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => Err(Error::InvalidMode(n)),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Tensor dimensions `(I, J, K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims(pub usize, pub usize, pub usize);

impl Dims {
    pub fn get(self, mode: Mode) -> usize {
        self.as_array()[mode.index()]
    }

    pub fn as_array(self) -> [usize; 3] {
        [self.0, self.1, self.2]
    }

    pub fn len(self) -> usize {
        self.0 * self.1 * self.2
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn with(self, mode: Mode, size: usize) -> Dims {
        let mut a = self.as_array();
        a[mode.index()] = size;
        Dims(a[0], a[1], a[2])
    }

    /// Largest CP rank accepted by the fitting routines: the minimum over modes of the
    /// product of the other two dimensions.
    pub fn max_cp_rank(self) -> usize {
        (self.0 * self.1).min(self.0 * self.2).min(self.1 * self.2)
    }
}

impl From<(usize, usize, usize)> for Dims {
    fn from((i, j, k): (usize, usize, usize)) -> Self {
        Dims(i, j, k)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.0, self.1, self.2)
    }
}

/// Dense `I x J x K` array of finite `f64` values in mode-1-fastest order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor3 {
    dims: Dims,
    values: Vec<f64>,
}

impl DenseTensor3 {
    pub fn new(dims: impl Into<Dims>, values: Vec<f64>) -> Result<Self> {
        let dims = dims.into();
        if dims.as_array().contains(&0) {
            return Err(Error::Shape(format!("tensor dims must be positive, got {dims}")));
        }
        if values.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{dims} tensor needs {} values, got {}",
                dims.len(),
                values.len()
            )));
        }
        if let Some((position, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { position, value });
        }
        Ok(Self { dims, values })
    }

    pub fn from_fn(dims: impl Into<Dims>, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let dims = dims.into();
        let Dims(ni, nj, nk) = dims;
        let mut values = Vec::with_capacity(dims.len());
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    values.push(f(i, j, k));
                }
            }
        }
        Self::new(dims, values)
    }

    pub fn zeros(dims: impl Into<Dims>) -> Self {
        let dims = dims.into();
        assert!(!dims.as_array().contains(&0), "tensor dims must be positive");
        Self {
            dims,
            values: vec![0.0; dims.len()],
        }
    }

    pub(crate) fn from_raw(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.len());
        Self { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Values in mode-1-fastest order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims.0 * (j + self.dims.1 * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.offset(i, j, k)]
    }

    /// Mode-n fiber with the two other indices fixed, given in increasing mode order.
    pub fn fiber(&self, mode: Mode, fixed: (usize, usize)) -> Result<Vec<f64>> {
        let (m1, m2) = mode.others();
        for (m, idx) in [(m1, fixed.0), (m2, fixed.1)] {
            let size = self.dims.get(m);
            if idx >= size {
                return Err(Error::Bounds {
                    mode: m.number(),
                    index: idx,
                    size,
                });
            }
        }
        let n = self.dims.get(mode);
        let fiber = (0..n)
            .map(|t| match mode {
                Mode::One => self.get(t, fixed.0, fixed.1),
                Mode::Two => self.get(fixed.0, t, fixed.1),
                Mode::Three => self.get(fixed.0, fixed.1, t),
            })
            .collect();
        Ok(fiber)
    }

    /// Mode-n matricization; see the module docs for the column ordering.
    pub fn unfold(&self, mode: Mode) -> Matrix {
        let Dims(ni, nj, nk) = self.dims;
        let rows = self.dims.get(mode);
        let cols = self.dims.len() / rows;
        let mut out = vec![0.0; rows * cols];
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let v = self.values[i + ni * (j + nj * k)];
                    let (r, c) = match mode {
                        Mode::One => (i, j + nj * k),
                        Mode::Two => (j, i + ni * k),
                        Mode::Three => (k, i + ni * j),
                    };
                    out[r * cols + c] = v;
                }
            }
        }
        Matrix::from_raw(rows, cols, out)
    }

    /// Inverse of [`DenseTensor3::unfold`].
    pub fn fold(m: &Matrix, mode: Mode, dims: impl Into<Dims>) -> Result<Self> {
        let dims = dims.into();
        let rows = dims.get(mode);
        if dims.as_array().contains(&0) || m.rows() != rows || m.rows() * m.cols() != dims.len() {
            return Err(Error::Shape(format!(
                "cannot fold {}x{} matrix along mode-{mode} into {dims}",
                m.rows(),
                m.cols()
            )));
        }
        let Dims(ni, nj, nk) = dims;
        let cols = m.cols();
        let src = m.values();
        let mut values = vec![0.0; dims.len()];
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    let (r, c) = match mode {
                        Mode::One => (i, j + nj * k),
                        Mode::Two => (j, i + ni * k),
                        Mode::Three => (k, i + ni * j),
                    };
                    values[i + ni * (j + nj * k)] = src[r * cols + c];
                }
            }
        }
        Ok(Self::from_raw(dims, values))
    }

    /// `self ×ₙ z`: every mode-n fiber is replaced by `z` times that fiber.
    pub fn n_mode_product(&self, z: &Matrix, mode: Mode) -> Result<Self> {
        let n = self.dims.get(mode);
        if z.cols() != n {
            return Err(Error::Shape(format!(
                "mode-{mode} product of {} tensor with {}x{} matrix",
                self.dims,
                z.rows(),
                z.cols()
            )));
        }
        let Dims(ni, nj, nk) = self.dims;
        let out_dims = self.dims.with(mode, z.rows());
        let mut out = vec![0.0; out_dims.len()];
        let x = &self.values;
        match mode {
            Mode::One => {
                let l = z.rows();
                for (src, dst) in x.chunks_exact(ni).zip(out.chunks_exact_mut(l)) {
                    for (r, d) in dst.iter_mut().enumerate() {
                        *d = z.row(r).iter().zip(src).map(|(a, b)| a * b).sum();
                    }
                }
            }
            Mode::Two => {
                let m = z.rows();
                for k in 0..nk {
                    let src = &x[ni * nj * k..ni * nj * (k + 1)];
                    let dst = &mut out[ni * m * k..ni * m * (k + 1)];
                    for r in 0..m {
                        let dst_col = &mut dst[ni * r..ni * (r + 1)];
                        for (j, &w) in z.row(r).iter().enumerate() {
                            if w == 0.0 {
                                continue;
                            }
                            for (d, s) in dst_col.iter_mut().zip(&src[ni * j..ni * (j + 1)]) {
                                *d += w * s;
                            }
                        }
                    }
                }
            }
            Mode::Three => {
                let slab = ni * nj;
                for r in 0..z.rows() {
                    let dst = &mut out[slab * r..slab * (r + 1)];
                    for (k, &w) in z.row(r).iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        for (d, s) in dst.iter_mut().zip(&x[slab * k..slab * (k + 1)]) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
        Ok(Self::from_raw(out_dims, out))
    }

    /// Applies `×₁a ×₂b ×₃c`.
    pub fn multilinear(&self, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Self> {
        self.n_mode_product(a, Mode::One)?
            .n_mode_product(b, Mode::Two)?
            .n_mode_product(c, Mode::Three)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!("cannot compare {} with {}", self.dims, other.dims)));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Largest absolute entrywise difference; `INFINITY` when dims differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!("cannot add {} to {}", other.dims, self.dims)));
        }
        Ok(Self::from_raw(
            self.dims,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(self.dims, self.values.iter().map(|v| v * s).collect())
    }
}

/// The `R x R x R` tensor with ones on the superdiagonal and zeros elsewhere.
pub fn superdiagonal_identity(rank: usize) -> Result<DenseTensor3> {
    if rank == 0 {
        return Err(Error::Validation("superdiagonal rank must be at least 1".into()));
    }
    let mut t = DenseTensor3::zeros(Dims(rank, rank, rank));
    for r in 0..rank {
        t.values[r + rank * (r + rank * r)] = 1.0;
    }
    Ok(t)
}

/// `Σ_r a_r ∘ b_r ∘ c_r`, evaluated as the superdiagonal identity times the three factors.
pub fn reconstruct_cp(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<DenseTensor3> {
    if a.cols() != b.cols() || a.cols() != c.cols() {
        return Err(Error::Shape(format!(
            "factor column counts differ: {}, {}, {}",
            a.cols(),
            b.cols(),
            c.cols()
        )));
    }
    reconstruct_tucker(&superdiagonal_identity(a.cols())?, a, b, c)
}

/// `G ×₁A ×₂B ×₃C`.
pub fn reconstruct_tucker(core: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<DenseTensor3> {
    let Dims(p, q, r) = core.dims();
    if a.cols() != p || b.cols() != q || c.cols() != r {
        return Err(Error::Shape(format!(
            "core {} does not match factor column counts ({}, {}, {})",
            core.dims(),
            a.cols(),
            b.cols(),
            c.cols()
        )));
    }
    core.multilinear(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> DenseTensor3 {
        DenseTensor3::from_fn((2, 2, 2), |i, j, k| (i + 2 * j + 4 * k) as f64).unwrap()
    }

    #[test]
    fn fibers_follow_linear_layout() {
        let x = ramp();
        assert_eq!(x.fiber(Mode::One, (0, 0)).unwrap(), vec![0.0, 1.0]);
        assert_eq!(x.fiber(Mode::Three, (0, 0)).unwrap(), vec![0.0, 4.0]);
        assert_eq!(x.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn fiber_out_of_range_names_mode() {
        let x = ramp();
        match x.fiber(Mode::Two, (0, 2)) {
            Err(Error::Bounds { mode: 3, index: 2, size: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(x.fiber(Mode::One, (5, 0)), Err(Error::Bounds { mode: 2, .. })));
    }

    #[test]
    fn mode_one_unfolding_of_ramp() {
        let m = ramp().unfold(Mode::One);
        assert_eq!(m.shape(), (2, 4));
        assert_eq!(m.values(), &[0.0, 2.0, 4.0, 6.0, 1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(
            DenseTensor3::new((1, 1, 2), vec![0.0, f64::INFINITY]),
            Err(Error::NonFinite { position: 1, .. })
        ));
        assert!(matches!(DenseTensor3::new((1, 1, 2), vec![0.0]), Err(Error::Shape(_))));
        assert!(matches!(DenseTensor3::new((0, 1, 1), vec![]), Err(Error::Shape(_))));
        assert!(matches!(Mode::try_from(4), Err(Error::InvalidMode(4))));
    }

    #[test]
    fn frobenius_and_superdiagonal() {
        assert_eq!(DenseTensor3::zeros((2, 3, 4)).frobenius_norm(), 0.0);
        let t = DenseTensor3::new((2, 1, 1), vec![3.0, 4.0]).unwrap();
        assert_eq!(t.frobenius_norm(), 5.0);

        let one = superdiagonal_identity(1).unwrap();
        assert_eq!(one.values(), &[1.0]);
        let three = superdiagonal_identity(3).unwrap();
        assert!((three.frobenius_norm().powi(2) - 3.0).abs() < 1e-15);
        assert_eq!(three.get(0, 1, 2), 0.0);
        assert_eq!(three.get(2, 2, 2), 1.0);
        assert!(superdiagonal_identity(0).is_err());
    }

    #[test]
    fn n_mode_product_shape_checks() {
        let x = DenseTensor3::zeros((268, 44, 7));
        let u = Matrix::zeros(134, 268);
        assert_eq!(x.n_mode_product(&u, Mode::One).unwrap().dims(), Dims(134, 44, 7));
        let err = x.n_mode_product(&u, Mode::Two).unwrap_err();
        assert!(err.to_string().contains("268x44x7"), "{err}");
        assert!(err.to_string().contains("134x268"), "{err}");
    }

    #[test]
    fn single_outer_product() {
        let a = Matrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let b = Matrix::new(1, 1, vec![1.0]).unwrap();
        let x = reconstruct_cp(&a, &b, &b).unwrap();
        assert_eq!(x.dims(), Dims(2, 1, 1));
        assert_eq!(x.values(), &[1.0, 0.0]);
        let bad = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        assert!(reconstruct_cp(&a, &b, &bad).is_err());
    }

    #[test]
    fn tucker_with_identity_factors_returns_core() {
        let g = DenseTensor3::from_fn((2, 3, 2), |i, j, k| (i * 7 + j * 3 + k) as f64 - 4.0).unwrap();
        let x = reconstruct_tucker(&g, &Matrix::identity(2), &Matrix::identity(3), &Matrix::identity(2)).unwrap();
        assert_eq!(x, g);
        assert!(reconstruct_tucker(&g, &Matrix::identity(3), &Matrix::identity(3), &Matrix::identity(2)).is_err());
    }
}
