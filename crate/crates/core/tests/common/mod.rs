//! Independent oracles and random-instance helpers shared by the integration tests.
#![allow(dead_code)]

use corcondia::seed::rng_from_seed;
use corcondia::{DenseTensor3, Dims, Matrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_from_seed(seed ^ 0x5EED_0F_7E57)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng)).unwrap()
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn gaussian_tensor(rng: &mut ChaCha8Rng, dims: impl Into<Dims>) -> DenseTensor3 {
    DenseTensor3::from_fn(dims, |_, _, _| StandardNormal.sample(rng)).unwrap()
}

/// `Σ_r a_r ∘ b_r ∘ c_r` by explicit loops.
pub fn outer_product_sum(a: &Matrix, b: &Matrix, c: &Matrix) -> DenseTensor3 {
    DenseTensor3::from_fn((a.rows(), b.rows(), c.rows()), |i, j, k| {
        (0..a.cols()).map(|r| a.get(i, r) * b.get(j, r) * c.get(k, r)).sum()
    })
    .unwrap()
}

/// `Σ_pqr G(p,q,r) a_p ∘ b_q ∘ c_r` by explicit loops.
pub fn tucker_triple_sum(g: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> DenseTensor3 {
    let Dims(p, q, r) = g.dims();
    DenseTensor3::from_fn((a.rows(), b.rows(), c.rows()), |i, j, k| {
        let mut s = 0.0;
        for pp in 0..p {
            for qq in 0..q {
                for rr in 0..r {
                    s += g.get(pp, qq, rr) * a.get(i, pp) * b.get(j, qq) * c.get(k, rr);
                }
            }
        }
        s
    })
    .unwrap()
}

/// Solves the square system `m x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let d = m[col][col];
        assert!(d.abs() > 1e-300, "singular normal equations");
        for row in col + 1..n {
            let f = m[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x
}

/// Least-squares core `argmin_G ‖X − G ×₁A ×₂B ×₃C‖` from the dense normal equations over
/// all `P·Q·R` core entries. Requires full-column-rank factors.
pub fn least_squares_core(x: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> DenseTensor3 {
    let (p, q, r) = (a.cols(), b.cols(), c.cols());
    let Dims(ni, nj, nk) = x.dims();
    let unknowns = p * q * r;
    let column = |u: usize| {
        let (pp, qq, rr) = (u % p, (u / p) % q, u / (p * q));
        let mut col = Vec::with_capacity(ni * nj * nk);
        for k in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    col.push(a.get(i, pp) * b.get(j, qq) * c.get(k, rr));
                }
            }
        }
        col
    };
    let design: Vec<Vec<f64>> = (0..unknowns).map(column).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(s, t)| s * t).sum::<f64>();
    let normal: Vec<Vec<f64>> = design
        .iter()
        .map(|u| design.iter().map(|v| dot(u, v)).collect())
        .collect();
    let rhs: Vec<f64> = design.iter().map(|u| dot(u, x.values())).collect();
    let g = solve_dense(normal, rhs);
    DenseTensor3::new((p, q, r), g).unwrap()
}

/// Relative Frobenius error `‖lhs − rhs‖ / ‖rhs‖` (absolute when `rhs` is zero).
pub fn rel_err(lhs: &Matrix, rhs: &Matrix) -> f64 {
    let d = lhs.sub(rhs).unwrap().frobenius_norm();
    let n = rhs.frobenius_norm();
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

/// The four Moore-Penrose conditions as relative errors.
pub fn penrose_errors(m: &Matrix, mp: &Matrix) -> [f64; 4] {
    let mmp = m.matmul(mp).unwrap();
    let mpm = mp.matmul(m).unwrap();
    [
        rel_err(&mmp.matmul(m).unwrap(), m),
        rel_err(&mpm.matmul(mp).unwrap(), mp),
        rel_err(&mmp.transpose(), &mmp),
        rel_err(&mpm.transpose(), &mpm),
    ]
}

/// Relative Frobenius distance between tensors.
pub fn tensor_rel_err(lhs: &DenseTensor3, rhs: &DenseTensor3) -> f64 {
    lhs.distance(rhs).unwrap() / rhs.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Converged-fit settings for exact-data checks.
pub fn tight_fit(seed: u64) -> corcondia::FitConfig {
    corcondia::FitConfig {
        max_iterations: 5000,
        rel_tolerance: 1e-14,
        restarts: 3,
        seed,
    }
}

/// A tensor whose mode fibers lie in the rowspaces of an orthonormal operator.
pub struct RowspaceCase {
    pub x: DenseTensor3,
    pub op: corcondia::CompressionOperator,
    pub rank: usize,
    /// Factors `UᵀP`, `VᵀQ`, `WᵀS` of the trilinear part.
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

/// `X = reconstruct_cp(UᵀP, VᵀQ, WᵀS)` plus, when `noise > 0`, `noise · E ×₁Uᵀ ×₂Vᵀ ×₃Wᵀ`
/// scaled relative to the trilinear part, so the fibers stay inside the rowspaces.
pub fn rowspace_case(seed: u64, noise: f64) -> RowspaceCase {
    let mut g = rng(seed);
    let dims = (g.random_range(10..30), g.random_range(8..20), g.random_range(5..10));
    let rank = g.random_range(1..=3);
    let target = (dims.0 / 2, dims.1 / 2, dims.2);
    let op = corcondia::orthonormal_operator(dims, target, seed).unwrap();
    let p = gaussian_matrix(&mut g, target.0, rank);
    let q = gaussian_matrix(&mut g, target.1, rank);
    let s = gaussian_matrix(&mut g, target.2, rank);
    let (ut, vt, wt) = (op.u.transpose(), op.v.transpose(), op.w.transpose());
    let a = ut.matmul(&p).unwrap();
    let b = vt.matmul(&q).unwrap();
    let c = wt.matmul(&s).unwrap();
    let mut x = corcondia::reconstruct_cp(&a, &b, &c).unwrap();
    if noise > 0.0 {
        let e = gaussian_tensor(&mut g, target).multilinear(&ut, &vt, &wt).unwrap();
        let scale = noise * x.frobenius_norm() / e.frobenius_norm();
        x = x.add(&e.scale(scale)).unwrap();
    }
    RowspaceCase { x, op, rank, a, b, c }
}
