//! Dense linear-algebra helpers on top of nalgebra.
//!
//! Every decomposition here returns singular values / eigenvalues in descending
//! order and flips each vector so its first non-negligible coordinate is positive.

use nalgebra::{DMatrix, DVector};

use crate::index::{n2, pair_from_index, pair_index};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn sign_fix(col: &mut [f64]) -> bool {
    let max = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let thresh = 1e-10 * max;
    match col.iter().find(|x| x.abs() > thresh) {
        Some(&x) if x < 0.0 => {
            col.iter_mut().for_each(|c| *c = -*c);
            true
        }
        _ => false,
    }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD, descending, with the sign convention applied to the left vectors.
pub fn thin_svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r == 0 {
        return Svd { u: DMatrix::zeros(rows, 0), s: vec![], v: DMatrix::zeros(cols, 0) };
    }
    let svd = to_faer(m).thin_svd().expect("SVD converges on finite input");
    let (u0, v0, s0) = (svd.U(), svd.V(), svd.S().column_vector());
    let mut u = DMatrix::zeros(rows, r);
    let mut v = DMatrix::zeros(cols, r);
    let mut s = Vec::with_capacity(r);
    for c in 0..r {
        s.push(s0[c]);
        let mut ucol: Vec<f64> = (0..rows).map(|i| u0[(i, c)]).collect();
        let sign = if sign_fix(&mut ucol) { -1.0 } else { 1.0 };
        u.column_mut(c).copy_from_slice(&ucol);
        for i in 0..cols {
            v[(i, c)] = sign * v0[(i, c)];
        }
    }
    Svd { u, s, v }
}

/// Top-`r` left singular vectors and the full descending spectrum.
pub fn left_singular(m: &DMatrix<f64>, r: usize) -> (DMatrix<f64>, Vec<f64>) {
    let svd = thin_svd(m);
    let r = r.min(svd.s.len());
    (svd.u.columns(0, r).into_owned(), svd.s)
}

/// Symmetric eigendecomposition, eigenvalues descending.
pub fn sym_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    let e = to_faer(&symmetrize(m)).self_adjoint_eigen(faer::Side::Lower).expect("eigensolver converges on finite input");
    let (vals0, vecs0) = (e.S().column_vector(), e.U());
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for dst in 0..n {
        let src = n - 1 - dst;
        vals.push(vals0[src]);
        let mut col: Vec<f64> = (0..n).map(|i| vecs0[(i, src)]).collect();
        sign_fix(&mut col);
        vecs.column_mut(dst).copy_from_slice(&col);
    }
    (vals, vecs)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eig(m).0.last().copied().unwrap_or(0.0)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    thin_svd(m).s.first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the orthogonal complement of `span(basis)`.
///
/// `basis` is assumed orthonormal; the complement is read off the unit
/// eigenvalues of `I - B B^T`.
pub fn complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let r = basis.ncols();
    let p = DMatrix::identity(n, n) - basis * basis.transpose();
    let (_, vecs) = sym_eig(&p);
    vecs.columns(0, n.saturating_sub(r)).into_owned()
}

/// Moore-Penrose pseudo-inverse, dropping singular values below `rtol * s_max`.
pub fn pinv(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let svd = thin_svd(m);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (t, &s) in svd.s.iter().enumerate() {
        if s > rtol * smax && s > 0.0 {
            out += svd.v.column(t) * svd.u.column(t).transpose() / s;
        }
    }
    out
}

/// Pseudo-inverse keeping exactly the leading `rank` singular values.
pub fn pinv_rank(m: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let svd = thin_svd(m);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for t in 0..rank.min(svd.s.len()) {
        if svd.s[t] > 0.0 {
            out += svd.v.column(t) * svd.u.column(t).transpose() / svd.s[t];
        }
    }
    out
}

/// `max |B^T B - I|`.
pub fn orthonormality_defect(b: &DMatrix<f64>) -> f64 {
    let g = b.transpose() * b;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Row-major vectorisation: entry `(a, b)` lands at `a * cols + b`.
pub fn vec_rm(m: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = m.shape();
    DVector::from_fn(r * c, |t, _| m[(t / c, t % c)])
}

pub fn unvec_rm(v: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |a, b| v[a * cols + b])
}

/// Isometric distinct-entry coordinates of a symmetric matrix: diagonal
/// entries as-is, off-diagonal pairs scaled by `sqrt(2)`.
pub fn sym_to_iso(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    DVector::from_fn(n2(n), |p, _| {
        let (i, j) = pair_from_index(p);
        if i == j {
            m[(i, i)]
        } else {
            SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)])
        }
    })
}

pub fn iso_to_sym(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[pair_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT2;
                m[(j, i)] = x / SQRT2;
            }
        }
    }
    m
}

/// Converts isometric pair coordinates to plain distinct-entry values.
pub fn iso_to_plain(v: &[f64]) -> Vec<f64> {
    v.iter()
        .enumerate()
        .map(|(p, &x)| {
            let (i, j) = pair_from_index(p);
            if i == j {
                x
            } else {
                x / SQRT2
            }
        })
        .collect()
}

/// Order of `(A kron B) vec(X) = vec(A X B^T)` with row-major `vec`.
pub fn kron_apply(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let xm = unvec_rm(x.as_slice(), a.ncols(), b.ncols());
    vec_rm(&(a * xm * b.transpose()))
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

/// Largest principal angle sine between two subspaces, as the spectral norm of
/// the difference of their projectors.
pub fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    spectral_norm(&(pa - pb))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |i, j| (((i * i * 7 + j * 13 + i * j * 5) as u64 + seed) as f64 * 0.37).sin())
    }

    #[test]
    fn svd_reconstructs_and_sorts() {
        for (r, c) in [(7, 3), (3, 7), (5, 5)] {
            let m = test_matrix(r, c, 3);
            let svd = thin_svd(&m);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            let s = DMatrix::from_diagonal(&DVector::from_vec(svd.s.clone()));
            let back = &svd.u * s * svd.v.transpose();
            assert!(max_abs(&(back - &m)) < 1e-12);
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let (b, _) = left_singular(&test_matrix(9, 4, 1), 4);
        let c = complement(&b);
        assert_eq!(c.ncols(), 5);
        assert!(orthonormality_defect(&c) < 1e-12);
        assert!(max_abs(&(b.transpose() * &c)) < 1e-12);
    }

    #[test]
    fn iso_coordinates_preserve_inner_products() {
        let a = symmetrize(&test_matrix(5, 5, 2));
        let b = symmetrize(&test_matrix(5, 5, 9));
        let frob = a.component_mul(&b).sum();
        let iso = sym_to_iso(&a).dot(&sym_to_iso(&b));
        assert!((frob - iso).abs() < 1e-12);
        let back = iso_to_sym(sym_to_iso(&a).as_slice(), 5);
        assert!(max_abs(&(back - a)) < 1e-14);
    }

    #[test]
    fn kron_matches_row_major_identity() {
        let a = test_matrix(3, 4, 1);
        let b = test_matrix(2, 5, 4);
        let x = DVector::from_fn(20, |t, _| (t as f64).cos());
        let direct = kron(&a, &b) * &x;
        let fast = kron_apply(&a, &b, &x);
        assert!((direct - fast).amax() < 1e-12);
    }

    #[test]
    fn pinv_of_tall_matrix_is_left_inverse() {
        let m = test_matrix(8, 3, 5);
        let p = pinv(&m, 1e-12);
        assert!(max_abs(&(p * &m - DMatrix::identity(3, 3))) < 1e-10);
    }
}
