mod common;

use common::*;
use corcondia::decomp::linalg::{orthonormal_columns_error, reduced_qr};
use corcondia::decomp::pseudoinverse_with_rank;
use corcondia::synth::synth_with_factors;
use corcondia::{
    cp_als, orthonormalize_tucker, pseudoinverse, reconstruct_cp, reconstruct_tucker, superdiagonal_identity,
    tucker3, Error, FactorDistribution, FitConfig, Matrix, SynthSpec,
};
use proptest::prelude::*;

fn tight() -> FitConfig {
    FitConfig {
        max_iterations: 5000,
        rel_tolerance: 1e-14,
        restarts: 3,
        seed: 9,
    }
}

fn exact(dims: (usize, usize, usize), rank: usize, seed: u64) -> corcondia::synth::SynthTensor {
    synth_with_factors(&SynthSpec {
        dims: dims.into(),
        rank,
        noise_level: 0.0,
        factor_distribution: FactorDistribution::Gaussian,
        seed,
    })
    .unwrap()
}

fn low_rank_matrix(seed: u64, rows: usize, cols: usize, rank: usize) -> Matrix {
    let mut r = rng(seed);
    if rank == 0 {
        return Matrix::zeros(rows, cols);
    }
    gaussian_matrix(&mut r, rows, rank).matmul(&gaussian_matrix(&mut r, rank, cols)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penrose_conditions_hold(rows in 1usize..9, cols in 1usize..9, rank_pick in 0usize..9, seed in any::<u64>()) {
        let rank = rank_pick.min(rows.min(cols));
        let m = low_rank_matrix(seed, rows, cols, rank);
        let p = pseudoinverse_with_rank(&m, None).unwrap();
        prop_assert_eq!(p.rank, rank);
        for e in penrose_errors(&m, &p.matrix) {
            prop_assert!(e <= 1e-10, "{e}");
        }
    }

    #[test]
    fn orthonormalize_keeps_the_tensor(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, r in 1usize..4) {
        let mut g = rng(seed);
        let core = gaussian_tensor(&mut g, (p, q, r));
        let (a, b, c) = (gaussian_matrix(&mut g, 6, p), gaussian_matrix(&mut g, 5, q), gaussian_matrix(&mut g, 4, r));
        let x = reconstruct_tucker(&core, &a, &b, &c).unwrap();
        let model = orthonormalize_tucker(&core, &a, &b, &c).unwrap();
        for f in [&model.a, &model.b, &model.c] {
            prop_assert!(orthonormal_columns_error(f) <= 1e-12);
        }
        prop_assert!(tensor_rel_err(&model.reconstruct().unwrap(), &x) <= 1e-12);
    }
}

#[test]
fn pinv_examples() {
    let inv = pseudoinverse(&Matrix::identity(4), None).unwrap();
    assert_eq!(inv, Matrix::identity(4));

    let z = pseudoinverse(&Matrix::zeros(3, 5), None).unwrap();
    assert_eq!(z.shape(), (5, 3));
    assert!(z.values().iter().all(|&v| v == 0.0));

    // Full column rank: A⁺ = (AᵀA)⁻¹Aᵀ, so A⁺A = I.
    let a = gaussian_matrix(&mut rng(10), 7, 3);
    let left = pseudoinverse(&a, None).unwrap().matmul(&a).unwrap();
    assert!(left.max_abs_diff(&Matrix::identity(3)) <= 1e-12);

    // Orthonormal rows: U⁺ = Uᵀ.
    let (q, _) = reduced_qr(&gaussian_matrix(&mut rng(11), 6, 3)).unwrap();
    let u = q.transpose();
    assert!(pseudoinverse(&u, None).unwrap().max_abs_diff(&q) <= 1e-12);
}

#[test]
fn pinv_of_diagonal_inverts_nonzero_entries() {
    let d = Matrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, -4.0]]).unwrap();
    let p = pseudoinverse_with_rank(&d, None).unwrap();
    assert_eq!(p.rank, 2);
    let want = Matrix::from_rows(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, -0.25]]).unwrap();
    assert!(p.matrix.max_abs_diff(&want) <= 1e-15);
}

#[test]
fn cp_als_recovers_exact_rank_three() {
    let s = exact((20, 15, 8), 3, 1);
    let model = cp_als(&s.tensor, 3, &tight()).unwrap();
    assert!(model.fit >= 1.0 - 1e-10, "fit {}", model.fit);
    assert!(tensor_rel_err(&model.reconstruct().unwrap(), &s.tensor) <= 1e-8);
}

#[test]
fn cp_als_error_history_never_increases() {
    let s = synth_with_factors(&SynthSpec {
        dims: (12, 10, 6).into(),
        rank: 3,
        noise_level: 0.1,
        factor_distribution: FactorDistribution::Uniform,
        seed: 3,
    })
    .unwrap();
    let model = cp_als(&s.tensor, 3, &FitConfig { restarts: 1, ..FitConfig::default() }).unwrap();
    assert!(model.error_history.len() >= 2);
    for w in model.error_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn cp_als_is_bit_reproducible() {
    let s = exact((10, 9, 7), 2, 5);
    let cfg = FitConfig { seed: 77, ..FitConfig::default() };
    let m1 = cp_als(&s.tensor, 2, &cfg).unwrap();
    let m2 = cp_als(&s.tensor, 2, &cfg).unwrap();
    assert_eq!(m1.a, m2.a);
    assert_eq!(m1.b, m2.b);
    assert_eq!(m1.c, m2.c);
    assert_eq!(m1.fit.to_bits(), m2.fit.to_bits());
}

#[test]
fn cp_als_rejects_bad_inputs() {
    let s = exact((4, 3, 2), 2, 6);
    assert!(matches!(cp_als(&s.tensor, 0, &FitConfig::default()), Err(Error::Validation(_))));
    assert!(cp_als(&s.tensor, 7, &FitConfig::default()).is_err());
    let zero = corcondia::DenseTensor3::zeros((4, 3, 2));
    assert!(matches!(cp_als(&zero, 1, &FitConfig::default()), Err(Error::Degenerate(_))));
}

#[test]
fn tucker3_of_exact_rank_three_is_exact() {
    let s = exact((15, 12, 9), 3, 2);
    let model = tucker3(&s.tensor, (3, 3, 3), &FitConfig::default()).unwrap();
    for f in [&model.a, &model.b, &model.c] {
        assert!(orthonormal_columns_error(f) <= 1e-12);
    }
    assert!(tensor_rel_err(&model.reconstruct().unwrap(), &s.tensor) <= 1e-8);
}

#[test]
fn tucker3_full_size_and_bounds() {
    let x = gaussian_tensor(&mut rng(12), (4, 3, 2));
    let model = tucker3(&x, (4, 3, 2), &FitConfig::default()).unwrap();
    assert!(tensor_rel_err(&model.reconstruct().unwrap(), &x) <= 1e-12);
    assert!(matches!(tucker3(&x, (5, 3, 2), &FitConfig::default()), Err(Error::Shape(_))));
    assert!(matches!(tucker3(&x, (0, 3, 2), &FitConfig::default()), Err(Error::Shape(_))));
}

#[test]
fn tucker3_is_deterministic() {
    let x = gaussian_tensor(&mut rng(13), (6, 5, 4));
    let m1 = tucker3(&x, (2, 2, 2), &FitConfig::default().with_seed(1)).unwrap();
    let m2 = tucker3(&x, (2, 2, 2), &FitConfig::default().with_seed(2)).unwrap();
    assert_eq!(m1.core, m2.core);
    assert_eq!(m1.a, m2.a);
}

#[test]
fn parafac_model_orthonormalizes_to_same_tensor() {
    let mut g = rng(14);
    let (a, b, c) = (gaussian_matrix(&mut g, 7, 3), gaussian_matrix(&mut g, 6, 3), gaussian_matrix(&mut g, 5, 3));
    let x = reconstruct_cp(&a, &b, &c).unwrap();
    let model = orthonormalize_tucker(&superdiagonal_identity(3).unwrap(), &a, &b, &c).unwrap();
    assert!(tensor_rel_err(&model.reconstruct().unwrap(), &x) <= 1e-12);
}

#[test]
fn orthonormalize_reports_rank_deficient_factor() {
    let mut g = rng(15);
    let a = gaussian_matrix(&mut g, 5, 2);
    let col = a.column(0);
    let dup = Matrix::from_columns(&[col.clone(), col]).unwrap();
    let core = gaussian_tensor(&mut g, (2, 2, 2));
    let err = orthonormalize_tucker(&core, &a, &dup, &a).unwrap_err();
    assert!(matches!(err, Error::RankDeficient { mode: 2 }), "{err:?}");
}
