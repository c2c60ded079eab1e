use rand::Rng;
use rayon::prelude::*;

use super::{linalg, relative_fit, CpModel, FitConfig};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::{derive_seed, rng_from_seed};
use crate::tensor::{reconstruct_cp, DenseTensor3, Dims, Mode};

/// Matricized tensor times Khatri-Rao product for `mode`: row `i_n` of the result is
/// `Σ X(i, j, k) · Π_{m≠n} F_m(i_m, r)` over the two remaining indices.
pub fn mttkrp(x: &DenseTensor3, factors: [&Matrix; 3], mode: Mode) -> Result<Matrix> {
    let Dims(ni, nj, nk) = x.dims();
    let rank = factors[0].cols();
    for (m, f) in Mode::ALL.iter().zip(factors) {
        if f.cols() != rank || (*m != mode && f.rows() != x.dims().get(*m)) {
            return Err(Error::Shape(format!(
                "factor for mode-{m} is {}x{}, tensor is {}",
                f.rows(),
                f.cols(),
                x.dims()
            )));
        }
    }
    let [a, b, c] = factors;
    let xs = x.values();
    let out_rows = x.dims().get(mode);
    // Column-major accumulator: rank columns of length out_rows.
    let mut acc = vec![0.0; out_rows * rank];
    match mode {
        Mode::One => {
            for k in 0..nk {
                for j in 0..nj {
                    let fiber = &xs[ni * (j + nj * k)..ni * (j + nj * k + 1)];
                    for r in 0..rank {
                        let w = b.get(j, r) * c.get(k, r);
                        if w == 0.0 {
                            continue;
                        }
                        for (d, &v) in acc[r * ni..(r + 1) * ni].iter_mut().zip(fiber) {
                            *d += w * v;
                        }
                    }
                }
            }
        }
        Mode::Two | Mode::Three => {
            let at = a.transpose();
            for k in 0..nk {
                for j in 0..nj {
                    let fiber = &xs[ni * (j + nj * k)..ni * (j + nj * k + 1)];
                    for r in 0..rank {
                        let dot: f64 = at.row(r).iter().zip(fiber).map(|(p, q)| p * q).sum();
                        if mode == Mode::Two {
                            acc[r * nj + j] += c.get(k, r) * dot;
                        } else {
                            acc[r * nk + k] += b.get(j, r) * dot;
                        }
                    }
                }
            }
        }
    }
    Ok(Matrix::from_fn(out_rows, rank, |i, r| acc[r * out_rows + i])
        .expect("finite products of finite inputs"))
}

struct RestartOutcome {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    rel_error: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Fits a rank-`rank` PARAFAC model by alternating least squares.
///
/// Each of `cfg.restarts` runs starts from uniform(−1, 1) factors drawn from a stream seeded
/// by `(cfg.seed, restart index)`; the restart with the smallest reconstruction error wins
/// (lowest index on ties), so the result does not depend on how restarts are scheduled.
/// Columns of `A` and `B` are normalized after their updates and the scale is carried by `C`.
pub fn cp_als(x: &DenseTensor3, rank: usize, cfg: &FitConfig) -> Result<CpModel> {
    cfg.validate()?;
    let dims = x.dims();
    if rank == 0 || rank > dims.max_cp_rank() {
        return Err(Error::Validation(format!(
            "rank {rank} is not in 1..={} for a {dims} tensor",
            dims.max_cp_rank()
        )));
    }
    let norm_x = x.frobenius_norm();
    if norm_x == 0.0 {
        return Err(Error::Degenerate("cannot fit PARAFAC to an all-zero tensor".into()));
    }

    let outcomes = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| run_restart(x, rank, cfg, restart as u64, norm_x))
        .collect::<Result<Vec<_>>>()?;

    let best = outcomes
        .into_iter()
        .reduce(|best, next| if next.rel_error < best.rel_error { next } else { best })
        .expect("at least one restart");

    let fit = relative_fit(x, &reconstruct_cp(&best.a, &best.b, &best.c)?, norm_x)?;
    Ok(CpModel {
        a: best.a,
        b: best.b,
        c: best.c,
        fit,
        iterations: best.iterations,
        converged: best.converged,
        error_history: best.history,
    })
}

fn random_factor(rng: &mut impl Rng, rows: usize, rank: usize) -> Matrix {
    Matrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0)).expect("finite draws")
}

fn run_restart(x: &DenseTensor3, rank: usize, cfg: &FitConfig, restart: u64, norm_x: f64) -> Result<RestartOutcome> {
    let Dims(ni, nj, nk) = x.dims();
    let mut rng = rng_from_seed(derive_seed(&[cfg.seed, restart]));
    let mut a = random_factor(&mut rng, ni, rank);
    let mut b = random_factor(&mut rng, nj, rank);
    let mut c = random_factor(&mut rng, nk, rank);

    let mut history = Vec::new();
    let mut prev_fit: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        a = solve_factor(x, [&a, &b, &c], Mode::One)?;
        normalize_columns(&mut a);
        b = solve_factor(x, [&a, &b, &c], Mode::Two)?;
        normalize_columns(&mut b);
        c = solve_factor(x, [&a, &b, &c], Mode::Three)?;

        let fit = relative_fit(x, &reconstruct_cp(&a, &b, &c)?, norm_x)?;
        history.push(1.0 - fit);
        if let Some(prev) = prev_fit {
            if (fit - prev).abs() < cfg.rel_tolerance {
                converged = true;
                break;
            }
        }
        prev_fit = Some(fit);
    }
    Ok(RestartOutcome {
        rel_error: *history.last().expect("at least one iteration"),
        a,
        b,
        c,
        iterations,
        converged,
        history,
    })
}

/// Least-squares update of the factor for `mode` with the other two held fixed.
fn solve_factor(x: &DenseTensor3, factors: [&Matrix; 3], mode: Mode) -> Result<Matrix> {
    let m = mttkrp(x, factors, mode)?;
    let (p, q) = mode.others();
    let gp = factors[p.index()].gram();
    let gq = factors[q.index()].gram();
    let rank = gp.rows();
    let hadamard = Matrix::from_fn(rank, rank, |i, j| gp.get(i, j) * gq.get(i, j))?;
    m.matmul(&linalg::pseudoinverse(&hadamard, None)?)
}

fn normalize_columns(f: &mut Matrix) {
    for c in 0..f.cols() {
        let norm = f.column(c).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            f.scale_column(c, 1.0 / norm);
        }
    }
}
