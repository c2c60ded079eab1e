//! SVD, reduced QR and the Moore-Penrose pseudoinverse.
//!
//! The factorizations themselves come from `nalgebra`; this module pins the conventions the
//! rest of the crate relies on (descending singular values, deterministic signs, positive
//! `R` diagonal).

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Thin SVD `M = U diag(s) Vᵀ` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// Thin SVD with the sign of each left singular vector fixed so that its largest-magnitude
/// entry is positive (first such entry on ties); the matching right vector flips with it.
///
/// Matrices with at most [`JACOBI_MAX_SIDE`] rows or columns go through a one-sided Jacobi
/// SVD. Larger ones use the bidiagonal QR path in `nalgebra`, whose result is checked and
/// replaced by the Jacobi result when it is not a valid factorization (this happens on some
/// rank-deficient inputs).
pub fn svd(m: &Matrix) -> Result<Svd> {
    if m.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::Linalg("SVD input has non-finite entries".into()));
    }
    let (mut u, s, mut v) = if m.rows().min(m.cols()) <= JACOBI_MAX_SIDE {
        jacobi_svd(m)
    } else {
        match bidiagonal_svd(m) {
            Some(f) if factorization_ok(m, &f) => f,
            _ => jacobi_svd(m),
        }
    };
    for c in 0..s.len() {
        let col = u.column(c);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        if pivot.1 < 0.0 {
            u.scale_column(c, -1.0);
            v.scale_column(c, -1.0);
        }
    }
    Ok(Svd {
        u,
        singular_values: s,
        v,
    })
}

pub const JACOBI_MAX_SIDE: usize = 32;

type Factors = (Matrix, Vec<f64>, Matrix);

fn bidiagonal_svd(m: &Matrix) -> Option<Factors> {
    let d = m.to_nalgebra().try_svd(true, true, 5.0 * f64::EPSILON, 0)?;
    let u = Matrix::from_nalgebra(d.u.as_ref()?);
    let v = Matrix::from_nalgebra(&d.v_t.as_ref()?.transpose());
    Some((u, d.singular_values.iter().copied().collect(), v))
}

fn factorization_ok(m: &Matrix, (u, s, v): &Factors) -> bool {
    let tol = 64.0 * f64::EPSILON * m.rows().max(m.cols()) as f64;
    if s.iter().any(|x| !x.is_finite() || *x < 0.0) || s.windows(2).any(|w| w[0] < w[1]) {
        return false;
    }
    if orthonormal_columns_error(u) > tol || orthonormal_columns_error(v) > tol {
        return false;
    }
    let mut us = u.clone();
    for (c, &x) in s.iter().enumerate() {
        us.scale_column(c, x);
    }
    let back = us.matmul(&v.transpose()).expect("conformable");
    back.sub(m).expect("same shape").frobenius_norm() <= tol * m.frobenius_norm()
}

/// One-sided (Hestenes) Jacobi SVD. Wide inputs are handled through their transpose.
fn jacobi_svd(m: &Matrix) -> Factors {
    if m.rows() < m.cols() {
        let (u, s, v) = jacobi_svd(&m.transpose());
        return (v, s, u);
    }
    let (rows, n) = m.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|c| m.column(c)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            e
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let rotate = |a: &mut Vec<Vec<f64>>, p: usize, q: usize, c: f64, s: f64| {
        for i in 0..a[p].len() {
            let (x, y) = (a[p][i], a[q][i]);
            a[p][i] = c * x - s * y;
            a[q][i] = s * x + c * y;
        }
    };
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(usize, f64)> = cols.iter().map(|c| dot(c, c).sqrt()).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut ucols = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_sorted = Vec::with_capacity(n);
    for &(j, sigma) in &order {
        s.push(sigma);
        v_sorted.push(vcols[j].clone());
        if sigma > 0.0 {
            ucols.push(cols[j].iter().map(|x| x / sigma).collect());
        }
    }
    complete_basis(&mut ucols, rows, n);
    let u = Matrix::from_columns(&ucols).expect("finite columns");
    let v = Matrix::from_columns(&v_sorted).expect("finite columns");
    (u, s, v)
}

/// Default cutoff `max(rows, cols) · ε · σ_max`.
pub fn default_pinv_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Moore-Penrose pseudoinverse together with the numerical rank used to build it.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    pub matrix: Matrix,
    pub rank: usize,
}

/// SVD-based pseudoinverse; singular values `<= tol` are treated as zero. `None` selects
/// [`default_pinv_tolerance`].
pub fn pseudoinverse(m: &Matrix, tol: Option<f64>) -> Result<Matrix> {
    Ok(pseudoinverse_with_rank(m, tol)?.matrix)
}

pub fn pseudoinverse_with_rank(m: &Matrix, tol: Option<f64>) -> Result<PseudoInverse> {
    if let Some(t) = tol {
        if !(t >= 0.0) {
            return Err(Error::Validation(format!("pseudoinverse tolerance must be >= 0, got {t}")));
        }
    }
    let (rows, cols) = m.shape();
    if m.values().iter().all(|&v| v == 0.0) {
        return Ok(PseudoInverse {
            matrix: Matrix::zeros(cols, rows),
            rank: 0,
        });
    }
    let Svd { u, singular_values, v } = svd(m)?;
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let tol = tol.unwrap_or_else(|| default_pinv_tolerance(rows, cols, sigma_max));

    let kept: Vec<(usize, f64)> = singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, &s)| (i, 1.0 / s))
        .collect();
    // M⁺ = V Σ⁺ Uᵀ, a cols x rows matrix.
    let mut out = vec![0.0; cols * rows];
    for r in 0..cols {
        let v_row = v.row(r);
        for c in 0..rows {
            let u_row = u.row(c);
            out[r * rows + c] = kept.iter().map(|&(t, inv)| v_row[t] * inv * u_row[t]).sum();
        }
    }
    Ok(PseudoInverse {
        matrix: Matrix::from_raw(cols, rows, out),
        rank: kept.len(),
    })
}

/// Reduced QR `M = Q R` of a tall matrix, with `R` having a nonnegative diagonal.
pub fn reduced_qr(m: &Matrix) -> Result<(Matrix, Matrix)> {
    if m.rows() < m.cols() {
        return Err(Error::Shape(format!(
            "reduced QR needs a tall matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let qr = m.to_nalgebra().qr();
    let mut q = Matrix::from_nalgebra(&qr.q());
    let mut r = Matrix::from_nalgebra(&qr.r());
    for j in 0..r.rows() {
        if r.get(j, j) < 0.0 {
            q.scale_column(j, -1.0);
            for c in 0..r.cols() {
                r.set(j, c, -r.get(j, c));
            }
        }
    }
    Ok((q, r))
}

/// The `k` leading left singular vectors of `m` as orthonormal columns. When `k` exceeds the
/// number of singular vectors the SVD provides, the basis is completed deterministically with
/// directions orthogonal to it.
pub fn leading_left_singular_vectors(m: &Matrix, k: usize) -> Result<Matrix> {
    if k == 0 || k > m.rows() {
        return Err(Error::Shape(format!(
            "cannot take {k} left singular vectors of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let u = svd(m)?.u;
    let available = u.cols().min(k);
    let mut columns: Vec<Vec<f64>> = (0..available).map(|c| u.column(c)).collect();
    if columns.len() < k {
        complete_basis(&mut columns, m.rows(), k);
    }
    Matrix::from_columns(&columns)
}

/// Extends orthonormal `columns` (each of length `n`) to `k` columns using canonical basis
/// vectors orthogonalized by two passes of modified Gram-Schmidt.
fn complete_basis(columns: &mut Vec<Vec<f64>>, n: usize, k: usize) {
    for e in 0..n {
        if columns.len() == k {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        for _ in 0..2 {
            for q in columns.iter() {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, qi) in v.iter_mut().zip(q) {
                    *x -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            v.iter_mut().for_each(|x| *x /= norm);
            columns.push(v);
        }
    }
}

/// Largest entry of `|FᵀF − I|`.
pub fn orthonormal_columns_error(f: &Matrix) -> f64 {
    f.gram().max_abs_diff(&Matrix::identity(f.cols()))
}

/// Largest entry of `|F Fᵀ − I|`.
pub fn orthonormal_rows_error(f: &Matrix) -> f64 {
    f.transpose().gram().max_abs_diff(&Matrix::identity(f.rows()))
}
