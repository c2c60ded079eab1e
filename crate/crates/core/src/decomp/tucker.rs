use super::linalg::{leading_left_singular_vectors, reduced_qr};
use super::{relative_fit, FitConfig, TuckerModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::{reconstruct_tucker, DenseTensor3, Dims, Mode};

/// TUCKER3 by HOSVD initialization and HOOI refinement.
///
/// Both stages are deterministic, so `cfg.seed` and `cfg.restarts` are not consulted.
pub fn tucker3(x: &DenseTensor3, target: impl Into<Dims>, cfg: &FitConfig) -> Result<TuckerModel> {
    cfg.validate()?;
    let target = target.into();
    let dims = x.dims();
    for mode in Mode::ALL {
        let (t, d) = (target.get(mode), dims.get(mode));
        if t == 0 || t > d {
            return Err(Error::Shape(format!(
                "target {target} does not fit inside tensor {dims} (mode-{mode})"
            )));
        }
    }
    let norm_x = x.frobenius_norm();
    if norm_x == 0.0 {
        return Err(Error::Degenerate("cannot fit TUCKER3 to an all-zero tensor".into()));
    }

    let mut a = leading_left_singular_vectors(&x.unfold(Mode::One), target.0)?;
    let mut b = leading_left_singular_vectors(&x.unfold(Mode::Two), target.1)?;
    let mut c = leading_left_singular_vectors(&x.unfold(Mode::Three), target.2)?;
    let mut core = x.multilinear(&a.transpose(), &b.transpose(), &c.transpose())?;
    let mut fit = relative_fit(x, &reconstruct_tucker(&core, &a, &b, &c)?, norm_x)?;

    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let y = x
            .n_mode_product(&b.transpose(), Mode::Two)?
            .n_mode_product(&c.transpose(), Mode::Three)?;
        a = leading_left_singular_vectors(&y.unfold(Mode::One), target.0)?;
        let y = x
            .n_mode_product(&a.transpose(), Mode::One)?
            .n_mode_product(&c.transpose(), Mode::Three)?;
        b = leading_left_singular_vectors(&y.unfold(Mode::Two), target.1)?;
        let y = x
            .n_mode_product(&a.transpose(), Mode::One)?
            .n_mode_product(&b.transpose(), Mode::Two)?;
        c = leading_left_singular_vectors(&y.unfold(Mode::Three), target.2)?;

        core = y.n_mode_product(&c.transpose(), Mode::Three)?;
        let next = relative_fit(x, &reconstruct_tucker(&core, &a, &b, &c)?, norm_x)?;
        let delta = (next - fit).abs();
        fit = next;
        if delta < cfg.rel_tolerance {
            break;
        }
    }

    Ok(TuckerModel {
        core,
        a,
        b,
        c,
        fit: Some(fit),
        iterations,
    })
}

/// Rewrites `G ×₁A ×₂B ×₃C` with orthonormal factors: `A = Q_A R_A` etc. and the core becomes
/// `G ×₁R_A ×₂R_B ×₃R_C`. The represented tensor is unchanged.
pub fn orthonormalize_tucker(core: &DenseTensor3, a: &Matrix, b: &Matrix, c: &Matrix) -> Result<TuckerModel> {
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
    let mut qs = Vec::with_capacity(3);
    let mut rs = Vec::with_capacity(3);
    for (mode, f) in Mode::ALL.into_iter().zip([a, b, c]) {
        if f.rows() < f.cols() {
            return Err(Error::Shape(format!(
                "mode-{mode} factor is {}x{}; orthonormalization needs a tall matrix",
                f.rows(),
                f.cols()
            )));
        }
        let (qf, rf) = reduced_qr(f)?;
        let diag: Vec<f64> = (0..rf.rows()).map(|j| rf.get(j, j).abs()).collect();
        let largest = diag.iter().cloned().fold(0.0, f64::max);
        let cutoff = f.rows().max(f.cols()) as f64 * f64::EPSILON * largest;
        if largest == 0.0 || diag.iter().any(|&d| d <= cutoff) {
            return Err(Error::RankDeficient { mode: mode.number() });
        }
        qs.push(qf);
        rs.push(rf);
    }
    let new_core = core.multilinear(&rs[0], &rs[1], &rs[2])?;
    let mut qs = qs.into_iter();
    Ok(TuckerModel {
        core: new_core,
        a: qs.next().expect("three factors"),
        b: qs.next().expect("three factors"),
        c: qs.next().expect("three factors"),
        fit: None,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::linalg::orthonormal_columns_error;

    fn ramp(dims: (usize, usize, usize)) -> DenseTensor3 {
        DenseTensor3::from_fn(dims, |i, j, k| ((i * 13 + j * 7 + k * 3) % 17) as f64 - 8.0).unwrap()
    }

    #[test]
    fn full_target_is_lossless() {
        let x = ramp((4, 3, 5));
        let model = tucker3(&x, (4, 3, 5), &FitConfig::default()).unwrap();
        assert!((model.fit.unwrap() - 1.0).abs() <= 1e-10);
        for f in [&model.a, &model.b, &model.c] {
            assert!(orthonormal_columns_error(f) <= 1e-10);
        }
    }

    #[test]
    fn oversized_target_is_rejected() {
        let x = ramp((4, 3, 5));
        assert!(matches!(tucker3(&x, (5, 3, 5), &FitConfig::default()), Err(Error::Shape(_))));
        assert!(matches!(tucker3(&x, (0, 3, 5), &FitConfig::default()), Err(Error::Shape(_))));
    }

    #[test]
    fn rank_deficient_factor_names_mode() {
        let g = ramp((2, 2, 2));
        let good = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        match orthonormalize_tucker(&g, &good, &bad, &good) {
            Err(Error::RankDeficient { mode: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orthonormal_factors_are_kept() {
        let g = ramp((2, 2, 2));
        let id = Matrix::identity(2);
        let model = orthonormalize_tucker(&g, &id, &id, &id).unwrap();
        assert!(model.a.max_abs_diff(&id) < 1e-15);
        assert!(model.core.max_abs_diff(&g) < 1e-14);
    }
}
