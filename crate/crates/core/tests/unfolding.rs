mod common;
mod oracles;

use common::{smoothed, true_span};
use momgmm_core::gmm::MeanMode;
use momgmm_core::index::{n2, strict_tuples};
use momgmm_core::linalg::{iso_to_sym, min_eigenvalue, thin_svd, vec_rm};
use momgmm_core::moments::{exact_moments, f4_apply, fold_m4};
use momgmm_core::span::Subspace;
use momgmm_core::unfold::{build_h4, build_h6, solve_unfold, solve_y4, structural_factors, UnfoldConfig};
use nalgebra::DMatrix;
use oracles::{gaussian_matrix, orthonormalize, rng};

/// `X4 = sum_i w_i vec(Sigma_i) vec(Sigma_i)^T`, row-major.
fn x4_truth(p: &momgmm_core::GmmParams) -> DMatrix<f64> {
    let n = p.n();
    let mut x = DMatrix::zeros(n * n, n * n);
    for (w, c) in p.weights.iter().zip(&p.covariances) {
        let v = vec_rm(c);
        x += &v * v.transpose() * *w;
    }
    x
}

fn x4_from(u: &Subspace, y4: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.ambient.n();
    let plain = DMatrix::from_columns(&u.basis.column_iter().map(|c| vec_rm(&iso_to_sym(c.as_slice(), n))).collect::<Vec<_>>());
    &plain * y4 * plain.transpose()
}

#[test]
fn coefficient_systems_factor_structurally() {
    let p = smoothed(8, 3, 0.1, MeanMode::ZeroMean, 4);
    let u = true_span(&p);
    for (t, h) in [(2, build_h4(&u).unwrap()), (3, build_h6(&u).unwrap())] {
        let (a, b) = structural_factors(&p.covariances, &u, t).unwrap();
        let err = (&h - &a * &b).amax();
        assert!(err < 1e-10 * h.amax(), "t = {t}: {err:e}");
    }
}

/// `P` spans the row space of `F4` viewed as a map on `n2 x n2` arrays;
/// `E (x) E` restricted to unordered column pairs should keep a singular
/// value proportional to `n2` after projection.
fn off_diagonal_ratio(n: usize, k: usize, seed: u64) -> f64 {
    let m = n2(n);
    let n4 = strict_tuples(n, 4).count();
    let mut f = DMatrix::zeros(n4, m * m);
    for p in 0..m {
        for q in 0..m {
            let mut e = DMatrix::zeros(m, m);
            e[(p, q)] = 1.0;
            f.set_column(p * m + q, &f4_apply(&e, n).unwrap());
        }
    }
    let svd = thin_svd(&f.transpose());
    let rank = svd.s.iter().filter(|&&s| s > 1e-10 * svd.s[0]).count();
    let basis = svd.u.columns(0, rank).clone_owned();
    let e = gaussian_matrix(m, k, &mut rng(seed));
    let mut cols = Vec::new();
    for j in 0..k {
        for i in 0..=j {
            let outer = e.column(i) * e.column(j).transpose();
            cols.push(nalgebra::DVector::from_iterator(m * m, outer.transpose().iter().copied()));
        }
    }
    let projected = basis.transpose() * DMatrix::from_columns(&cols);
    let s = thin_svd(&projected).s;
    s[s.len() - 1] / m as f64
}

#[test]
fn symmetric_off_diagonal_projection_keeps_mass() {
    let mut prev = 0.0;
    for n in [6, 8, 10] {
        let median = {
            let mut r: Vec<f64> = (0..5).map(|s| off_diagonal_ratio(n, 3, s)).collect();
            r.sort_by(f64::total_cmp);
            r[2]
        };
        eprintln!("n = {n}: median sigma_min / n2 = {median:.4}");
        assert!(median > 0.05, "n = {n}: {median}");
        assert!(median >= 0.8 * prev, "n = {n}: {median} after {prev}");
        prev = median;
    }
}

#[test]
fn reconstructed_x4_matches_truth() {
    for seed in 0..3 {
        let p = smoothed(16, 3, 0.1, MeanMode::ZeroMean, seed);
        let ms = exact_moments(&p, &[4, 6]).unwrap();
        let u = true_span(&p);
        let (un, rows) = solve_unfold(&ms.folded().unwrap(), &u, &UnfoldConfig::default()).unwrap();
        for r in &rows {
            assert!(r.residual < 1e-8, "{r:?}");
            assert!(!r.ill_conditioned, "{r:?}");
        }
        let truth = x4_truth(&p);
        let rel = (x4_from(&u, &un.y4) - &truth).norm() / truth.norm();
        assert!(rel < 1e-6, "seed {seed}: {rel:e}");
        assert!(min_eigenvalue(&un.y4) > -1e-8);
    }
}

#[test]
fn y4_scales_with_right_hand_side() {
    let p = smoothed(8, 2, 0.1, MeanMode::ZeroMean, 1);
    let m4_bar = fold_m4(exact_moments(&p, &[4]).unwrap().m4().unwrap()).unwrap();
    let u = true_span(&p);
    let cfg = UnfoldConfig::default();
    let (y, _) = solve_y4(&m4_bar, &u, &cfg).unwrap();
    let (y3, _) = solve_y4(&(&m4_bar * 3.0), &u, &cfg).unwrap();
    assert!((y3 - y * 3.0).amax() < 1e-12);
}

#[test]
fn gram_and_qr_paths_agree_on_exact_moments() {
    let p = smoothed(10, 2, 0.1, MeanMode::ZeroMean, 2);
    let folded = exact_moments(&p, &[4, 6]).unwrap().folded().unwrap();
    let k = 2;
    let u = Subspace::new(orthonormalize(&(true_span(&p).basis * gaussian_matrix(k, k, &mut rng(3)))), true_span(&p).ambient).unwrap();
    let qr = solve_unfold(&folded, &u, &UnfoldConfig { solver: "qr".into(), ..UnfoldConfig::default() }).unwrap();
    let gram = solve_unfold(&folded, &u, &UnfoldConfig { solver: "gram".into(), ..UnfoldConfig::default() }).unwrap();
    assert!((&qr.0.y4 - &gram.0.y4).amax() < 1e-8);
    assert!(qr.0.y6.max_abs_diff(&gram.0.y6) < 1e-8);
    assert_eq!(gram.1[1].solver_path, "gram");
}
