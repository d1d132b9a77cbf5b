//! Two zero-mean mixtures in R^5 with the same fourth moment but different `X4`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gmm::GmmParams;
use crate::linalg::vec_rm;
use crate::moments::exact_moments;

pub const M4_TOL: f64 = 1e-12;
pub const X4_MIN_GAP: f64 = 0.5;

/// `((a,b),(c,d))`: 2 on the diagonal, 1 at `(a,b)` and `(c,d)` (1-based).
pub fn paired_matrix(a: usize, b: usize, c: usize, d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(5, 5) * 2.0;
    for (i, j) in [(a, b), (c, d)] {
        m[(i - 1, j - 1)] = 1.0;
        m[(j - 1, i - 1)] = 1.0;
    }
    m
}

fn mixture(pairs: [[usize; 4]; 3]) -> GmmParams {
    let covs = pairs.iter().map(|p| paired_matrix(p[0], p[1], p[2], p[3])).collect();
    GmmParams::new_unchecked(vec![1.0 / 3.0; 3], vec![DVector::zeros(5); 3], covs)
}

pub fn counterexample_pair() -> (GmmParams, GmmParams) {
    (
        mixture([[1, 2, 4, 5], [1, 3, 2, 5], [1, 4, 3, 5]]),
        mixture([[1, 2, 3, 5], [1, 3, 4, 5], [1, 4, 2, 5]]),
    )
}

/// `sum_i w_i vec(Sigma_i) vec(Sigma_i)^T`.
pub fn x4_matrix(p: &GmmParams) -> DMatrix<f64> {
    let n = p.n();
    let mut x = DMatrix::zeros(n * n, n * n);
    for (w, c) in p.weights.iter().zip(&p.covariances) {
        let v = vec_rm(c);
        x += &v * v.transpose() * *w;
    }
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub m4_max_diff: f64,
    pub x4_frobenius_diff: f64,
    pub m4_equal: bool,
    pub x4_differ: bool,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.m4_equal && self.x4_differ
    }
}

pub fn verify_counterexample() -> Result<CounterexampleReport> {
    let (a, b) = counterexample_pair();
    let ma = exact_moments(&a, &[4])?;
    let mb = exact_moments(&b, &[4])?;
    let m4_max_diff = ma.m4()?.max_abs_diff(mb.m4()?);
    let x4_frobenius_diff = (x4_matrix(&a) - x4_matrix(&b)).norm();
    Ok(CounterexampleReport {
        m4_max_diff,
        x4_frobenius_diff,
        m4_equal: m4_max_diff < M4_TOL,
        x4_differ: x4_frobenius_diff > X4_MIN_GAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_layout() {
        let m = paired_matrix(1, 2, 4, 5);
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(4, 3)], 1.0);
        assert_eq!(m[(2, 2)], 2.0);
        assert_eq!(m.iter().filter(|&&v| v == 1.0).count(), 4);
    }

    #[test]
    fn pair_verifies() {
        let r = verify_counterexample().unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
