//! Step 3: whitening and the orthogonal tensor power method.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{iso_to_sym, sym_eig};
use crate::moments::SymTensor;
use crate::rng::{stream, Domain};
use crate::span::Subspace;

/// Dense symmetric `k x k x k` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Cubic {
    k: usize,
    data: Vec<f64>,
}

impl Cubic {
    pub fn zeros(k: usize) -> Self {
        Self { k, data: vec![0.0; k * k * k] }
    }

    pub fn from_sym(t: &SymTensor) -> Result<Self> {
        if t.order() != 3 {
            return Err(Error::Format("expected an order-3 tensor".into()));
        }
        let k = t.dim();
        let mut c = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    c.data[(i * k + j) * k + l] = t.get(&[i, j, l]);
                }
            }
        }
        Ok(c)
    }

    /// `sum_i w_i v_i^{(x)3}`.
    pub fn from_rank_one(weights: &[f64], vectors: &[DVector<f64>]) -> Self {
        let k = vectors.first().map(|v| v.len()).unwrap_or(0);
        let mut c = Self::zeros(k);
        for (w, v) in weights.iter().zip(vectors) {
            c.add_rank_one(*w, v);
        }
        c
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize, l: usize) -> f64 {
        self.data[(i * self.k + j) * self.k + l]
    }

    pub fn set(&mut self, i: usize, j: usize, l: usize, v: f64) {
        let k = self.k;
        self.data[(i * k + j) * k + l] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn add_rank_one(&mut self, w: f64, v: &DVector<f64>) {
        let k = self.k;
        for i in 0..k {
            for j in 0..k {
                let p = w * v[i] * v[j];
                for l in 0..k {
                    self.data[(i * k + j) * k + l] += p * v[l];
                }
            }
        }
    }

    pub fn scaled_add(&mut self, s: f64, other: &Cubic) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// `T(W, W, W)` for `W` of shape `k x m`.
    pub fn multilinear(&self, w: &DMatrix<f64>) -> Cubic {
        let (k, m) = (self.k, w.ncols());
        // contract one mode at a time
        let mut a = vec![0.0; m * k * k];
        for c in 0..m {
            for i in 0..k {
                let f = w[(i, c)];
                for jl in 0..k * k {
                    a[c * k * k + jl] += f * self.data[i * k * k + jl];
                }
            }
        }
        let mut b = vec![0.0; m * m * k];
        for c in 0..m {
            for d in 0..m {
                for j in 0..k {
                    let f = w[(j, d)];
                    for l in 0..k {
                        b[(c * m + d) * k + l] += f * a[(c * k + j) * k + l];
                    }
                }
            }
        }
        let mut out = Cubic::zeros(m);
        for cd in 0..m * m {
            for e in 0..m {
                let mut s = 0.0;
                for l in 0..k {
                    s += w[(l, e)] * b[cd * k + l];
                }
                out.data[cd * m + e] = s;
            }
        }
        out
    }

    /// `T(I, v, v)`.
    pub fn apply_vv(&self, v: &DVector<f64>) -> DVector<f64> {
        let k = self.k;
        DVector::from_fn(k, |i, _| {
            let mut s = 0.0;
            for j in 0..k {
                let mut t = 0.0;
                for l in 0..k {
                    t += self.data[(i * k + j) * k + l] * v[l];
                }
                s += t * v[j];
            }
            s
        })
    }

    /// `T(v, v, v)`.
    pub fn eval(&self, v: &DVector<f64>) -> f64 {
        self.apply_vv(v).dot(v)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest deviation between entries related by an index permutation.
    pub fn asymmetry(&self) -> f64 {
        let k = self.k;
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    let x = self.get(i, j, l);
                    for y in [self.get(i, l, j), self.get(j, i, l), self.get(j, l, i), self.get(l, i, j), self.get(l, j, i)] {
                        worst = worst.max((x - y).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `G = Y6(W, W, W)` with `W = V2 Lambda2^{-1/2}` from `Y4 = V2 Lambda2 V2^T`.
#[derive(Debug, Clone)]
pub struct Whitened {
    pub g: Cubic,
    pub whitener: DMatrix<f64>,
    /// `V2 Lambda2^{1/2}`, the inverse transpose of the whitener.
    pub dewhitener: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WhitenConfig {
    /// Eigenvalues of `Y4` below `rank_tol * lambda_max` are clamped.
    pub rank_tol: f64,
    pub strict: bool,
}

impl Default for WhitenConfig {
    fn default() -> Self {
        Self { rank_tol: 1e-9, strict: false }
    }
}

pub fn whiten(y4: &DMatrix<f64>, y6: &SymTensor, cfg: &WhitenConfig) -> Result<Whitened> {
    let k = y4.nrows();
    if y4.ncols() != k || y6.dim() != k || y6.order() != 3 {
        return Err(Error::Format("Y4 and Y6 dimensions disagree".into()));
    }
    let (vals, vecs) = sym_eig(y4);
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let floor = cfg.rank_tol * top;
    let smallest = vals.last().copied().unwrap_or(0.0);
    let clamped = !(smallest > floor) || top <= 0.0;
    if clamped && cfg.strict {
        return Err(Error::WhitenRankDeficient { sigma: smallest, threshold: floor });
    }
    let floor = if floor > 0.0 { floor } else { f64::MIN_POSITIVE };
    let used: Vec<f64> = vals.iter().map(|&v| v.max(floor)).collect();
    let inv_sqrt = DVector::from_iterator(k, used.iter().map(|v| 1.0 / v.sqrt()));
    let sqrt = DVector::from_iterator(k, used.iter().map(|v| v.sqrt()));
    let whitener = &vecs * DMatrix::from_diagonal(&inv_sqrt);
    let dewhitener = &vecs * DMatrix::from_diagonal(&sqrt);
    let g = Cubic::from_sym(y6)?.multilinear(&whitener);
    Ok(Whitened { g, whitener, dewhitener, eigenvalues: vals, clamped })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerMethodConfig {
    /// Random restarts per round; `None` means `50 k`.
    pub restarts: Option<usize>,
    pub iterations: usize,
    pub tol: f64,
    pub seed: u64,
    pub strict: bool,
}

impl Default for PowerMethodConfig {
    fn default() -> Self {
        Self { restarts: None, iterations: 100, tol: 1e-12, seed: 0, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthoDecomposition {
    pub eigvecs: Vec<DVector<f64>>,
    pub eigvals: Vec<f64>,
}

impl OrthoDecomposition {
    pub fn reconstruct(&self) -> Cubic {
        Cubic::from_rank_one(&self.eigvals, &self.eigvecs)
    }

    /// Largest `|<v_i, v_j>|` over `i != j`.
    pub fn max_overlap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.eigvecs.len() {
            for j in 0..i {
                worst = worst.max(self.eigvecs[i].dot(&self.eigvecs[j]).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDiagnostic {
    pub round: usize,
    pub lambda: f64,
    /// Best value minus the best value found at a different eigenvector;
    /// `None` if every restart found the same one.
    pub gap: Option<f64>,
    pub restarts_used: usize,
    pub converged: bool,
    pub last_step: f64,
}

/// Iterates `v <- T(I, v, v) / |T(I, v, v)|`; returns the iterate and the
/// size of the last step.
fn power_iterate(g: &Cubic, mut v: DVector<f64>, iterations: usize, tol: f64) -> (DVector<f64>, f64) {
    let mut step = f64::INFINITY;
    for _ in 0..iterations {
        let w = g.apply_vv(&v);
        let norm = w.norm();
        if !(norm > 0.0) {
            return (v, f64::INFINITY);
        }
        let w = w / norm;
        step = (&w - &v).norm();
        v = w;
        if step <= tol {
            break;
        }
    }
    (v, step)
}

/// Robust tensor power method with restarts and deflation; the eigenpair
/// with the largest `|T(v, v, v)|` is extracted first.
pub fn ortho_power_decompose(
    g: &Cubic,
    rank: usize,
    cfg: &PowerMethodConfig,
) -> Result<(OrthoDecomposition, Vec<RoundDiagnostic>)> {
    let k = g.dim();
    let restarts = cfg.restarts.unwrap_or(50 * k.max(1)).max(1);
    if cfg.iterations == 0 {
        return Err(Error::InvalidParams("power method needs at least one iteration".into()));
    }
    let mut residual = g.clone();
    let mut eigvecs = Vec::with_capacity(rank);
    let mut eigvals = Vec::with_capacity(rank);
    let mut rounds = Vec::with_capacity(rank);
    for round in 0..rank {
        let candidates: Vec<(DVector<f64>, f64)> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(cfg.seed, Domain::PowerMethod, ((round as u64) << 24) | r as u64);
                let v0 = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
                let (v, _) = power_iterate(&residual, v0, cfg.iterations, cfg.tol);
                let val = residual.eval(&v).abs();
                (v, val)
            })
            .collect();
        let mut best = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.1 > candidates[best].1 {
                best = i;
            }
        }
        let (v, step) = power_iterate(&residual, candidates[best].0.clone(), cfg.iterations, cfg.tol);
        let mut lambda = residual.eval(&v);
        let mut v = v;
        if lambda < 0.0 {
            lambda = -lambda;
            v = -v;
        }
        let other = candidates
            .iter()
            .filter(|c| c.0.dot(&v).abs() < 0.9)
            .map(|c| c.1)
            .reduce(f64::max);
        let converged = step <= cfg.tol;
        if !converged && cfg.strict {
            return Err(Error::PowerMethodNoConvergence { round, step });
        }
        rounds.push(RoundDiagnostic {
            round,
            lambda,
            gap: other.map(|o| candidates[best].1 - o),
            restarts_used: restarts,
            converged,
            last_step: step,
        });
        residual.add_rank_one(-lambda, &v);
        eigvecs.push(v);
        eigvals.push(lambda);
    }
    Ok((OrthoDecomposition { eigvecs, eigvals }, rounds))
}

/// Weights `lambda^{-2}` and covariances `vec(Sigma) = lambda U V2 Lambda2^{1/2} v`.
pub fn assemble_parameters(dec: &OrthoDecomposition, whitened: &Whitened, u: &Subspace) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let n = u.ambient.n();
    let mut weights = Vec::with_capacity(dec.eigvals.len());
    let mut covs = Vec::with_capacity(dec.eigvals.len());
    for (lambda, v) in dec.eigvals.iter().zip(&dec.eigvecs) {
        weights.push(1.0 / (lambda * lambda));
        let coords = &whitened.dewhitener * v * *lambda;
        let iso = &u.basis * coords;
        covs.push(crate::linalg::symmetrize(&iso_to_sym(iso.as_slice(), n)));
    }
    (weights, covs)
}
