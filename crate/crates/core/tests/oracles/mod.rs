//! Independent reference computations shared by the integration tests and
//! the acceptance harness. Nothing here calls the algorithms under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_0a1e)
}

pub fn gaussian_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_vector(n: usize, r: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.sample(StandardNormal))
}

/// Gram-Schmidt on the columns, twice for stability.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone();
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let d = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-d, &qi, 1.0);
            }
            let nrm = q.column(j).norm();
            q.column_mut(j).scale_mut(1.0 / nrm);
        }
    }
    q
}

pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Every set partition of `{0..len}`, enumerated as restricted growth strings.
pub fn set_partitions(len: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; len];
    loop {
        let blocks = a.iter().copied().max().map_or(0, |m| m + 1);
        let mut parts = vec![Vec::new(); blocks];
        for (pos, &b) in a.iter().enumerate() {
            parts[b].push(pos);
        }
        out.push(parts);
        // next string with a[i] <= 1 + max(a[..i])
        let mut i = len;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let prefix_max = a[..i].iter().copied().max().unwrap_or(0);
            if a[i] <= prefix_max {
                a[i] += 1;
                for v in &mut a[i + 1..] {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// Gaussian moment from the cumulant expansion: only blocks of size one
/// (mean) and two (covariance) have non-zero cumulants.
pub fn gaussian_moment(cov: &DMatrix<f64>, mean: &DVector<f64>, idx: &[usize], partitions: &[Vec<Vec<usize>>]) -> f64 {
    partitions
        .iter()
        .filter(|p| p.iter().all(|b| b.len() <= 2))
        .map(|p| {
            p.iter()
                .map(|b| match b.len() {
                    1 => mean[idx[b[0]]],
                    _ => cov[(idx[b[0]], idx[b[1]])],
                })
                .product::<f64>()
        })
        .sum()
}

/// A plain mixture description so the oracles need nothing from the library.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

impl Mixture {
    pub fn moment(&self, idx: &[usize], partitions: &[Vec<Vec<usize>>]) -> f64 {
        (0..self.weights.len())
            .map(|i| self.weights[i] * gaussian_moment(&self.covs[i], &self.means[i], idx, partitions))
            .sum()
    }

    /// Random mixture with Wishart-like covariances.
    pub fn random(n: usize, k: usize, with_means: bool, seed: u64) -> Self {
        let mut r = rng(seed);
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.iter().map(|w| w / total).collect();
        let covs = (0..k)
            .map(|_| {
                let a = gaussian_matrix(n, n, &mut r) * (0.5 / n as f64).sqrt();
                &a * a.transpose() + DMatrix::identity(n, n) * 0.1
            })
            .collect();
        let means = (0..k)
            .map(|_| if with_means { gaussian_vector(n, &mut r) * 0.3 } else { DVector::zeros(n) })
            .collect();
        Self { weights, means, covs }
    }
}

/// All nondecreasing tuples of `order` indices below `n`, lexicographic.
pub fn sorted_tuples(n: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, order: usize, start: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == order {
            out.push(acc.clone());
            return;
        }
        for i in start..n {
            acc.push(i);
            rec(n, order, i, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, order, 0, &mut Vec::new(), &mut out);
    out
}

/// Random orthogonally decomposable `k x k x k` tensor, dense row-major.
pub fn planted_tensor(lambdas: &[f64], seed: u64) -> (Vec<f64>, Vec<DVector<f64>>) {
    let k = lambdas.len();
    let mut r = rng(seed);
    let q = orthonormalize(&gaussian_matrix(k, k, &mut r));
    let vecs: Vec<DVector<f64>> = q.column_iter().map(|c| c.clone_owned()).collect();
    let mut t = vec![0.0; k * k * k];
    for (l, v) in lambdas.iter().zip(&vecs) {
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    t[(a * k + b) * k + c] += l * v[a] * v[b] * v[c];
                }
            }
        }
    }
    (t, vecs)
}

/// Symmetric Gaussian `k x k x k` tensor scaled to Frobenius norm `norm`.
/// The Frobenius norm bounds the spectral norm from above.
pub fn symmetric_noise(k: usize, norm: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed.wrapping_add(1 << 40));
    let raw: Vec<f64> = (0..k * k * k).map(|_| r.sample(StandardNormal)).collect();
    let mut t = vec![0.0; k * k * k];
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let perms = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)];
                t[(a * k + b) * k + c] = perms.iter().map(|&(x, y, z)| raw[(x * k + y) * k + z]).sum::<f64>() / 6.0;
            }
        }
    }
    let f = t.iter().map(|v| v * v).sum::<f64>().sqrt();
    t.iter().map(|v| v * norm / f).collect()
}

/// Synthetic inputs for the span merge: `k` random symmetric matrices, two
/// random `s`-dimensional column spaces, and the left-projected spans
/// `span{vec(Proj_{S_j^perp} Sigma_i)}` in row-major `R^{n^2}` expressed in
/// a random orthonormal basis.
pub struct MergeInstance {
    pub n: usize,
    pub sigmas: Vec<DMatrix<f64>>,
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
}

pub fn row_major(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])))
}

pub fn merge_instance(n: usize, k: usize, s: usize, seed: u64) -> MergeInstance {
    let mut r = rng(seed);
    let sigmas: Vec<DMatrix<f64>> = (0..k)
        .map(|_| {
            let a = gaussian_matrix(n, n, &mut r);
            (&a + a.transpose()) * 0.5
        })
        .collect();
    let s1 = orthonormalize(&gaussian_matrix(n, s, &mut r));
    let s2 = orthonormalize(&gaussian_matrix(n, s, &mut r));
    let lift = |sb: &DMatrix<f64>, r: &mut ChaCha8Rng| {
        let p = DMatrix::identity(n, n) - projector(sb);
        let cols: Vec<DVector<f64>> = sigmas.iter().map(|c| row_major(&(&p * c))).collect();
        let mixed = DMatrix::from_columns(&cols) * gaussian_matrix(k, k, r);
        orthonormalize(&mixed)
    };
    let u1 = lift(&s1, &mut r);
    let u2 = lift(&s2, &mut r);
    MergeInstance { n, sigmas, s1, s2, u1, u2 }
}

/// Projector onto `span{Sigma_i}` in isometric pair coordinates (ordered by
/// colex pair index `i + j(j+1)/2`, off-diagonals times sqrt 2).
pub fn iso_span_projector(sigmas: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = sigmas[0].nrows();
    let cols: Vec<DVector<f64>> = sigmas
        .iter()
        .map(|m| {
            let mut v = DVector::zeros(n * (n + 1) / 2);
            for j in 0..n {
                for i in 0..=j {
                    let scale = if i == j { 1.0 } else { 2f64.sqrt() };
                    v[i + j * (j + 1) / 2] = m[(i, j)] * scale;
                }
            }
            v
        })
        .collect();
    projector(&orthonormalize(&DMatrix::from_columns(&cols)))
}
