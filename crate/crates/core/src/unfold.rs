//! Step 2: recover `Y4`, `Y6` in the coordinates of the covariance span by
//! solving `H4 vec(Y4) = M4bar / sqrt(3)` and `H6 vec(Y6) = M6bar / sqrt(15)`.
//!
//! The unknowns are the distinct entries of the symmetric `Y4` (pairs `i <= j`)
//! and `Y6` (triples `i <= j <= l`), in colex order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{binom, multiplicity, multiset_count, multisets, pair_index, strict_tuples};
use crate::linalg::{iso_to_plain, pinv, sym_eig, thin_svd};
use crate::moments::{f4_apply, FoldedMoments, SymOuter2, SymTensor, F4_NORM, F6_NORM};
use crate::registry::Registry;
use crate::span::Subspace;

/// Plain distinct-entry coordinates of each basis column.
pub fn plain_columns(u: &Subspace) -> Vec<Vec<f64>> {
    u.basis.column_iter().map(|c| iso_to_plain(c.as_slice())).collect()
}

/// Coefficient matrix of order `t` (2 gives `H4`, 3 gives `H6`) for the
/// symmetric matrices `vectors` (plain pair coordinates over `[n]`).
///
/// Column `m` (a nondecreasing `t`-tuple over the vectors) is
/// `C_m F(sym(v_{m_1} (x) .. (x) v_{m_t}))` with `C_m` the number of distinct
/// orderings of `m`.
pub fn coefficient_matrix(vectors: &[Vec<f64>], n: usize, t: usize) -> Result<DMatrix<f64>> {
    match t {
        2 => {
            let cols: Vec<DVector<f64>> = multisets(vectors.len(), 2)
                .map(|m| {
                    let c = multiplicity(&m) as f64;
                    f4_apply(&SymOuter2 { a: &vectors[m[0]], b: &vectors[m[1]] }, n).map(|v| v * c)
                })
                .collect::<Result<_>>()?;
            Ok(DMatrix::from_columns(&cols))
        }
        3 => {
            let rows = H6Rows::new(vectors.to_vec(), n);
            Ok(rows.block(0, rows.rows()))
        }
        other => Err(Error::UnsupportedOrder(2 * other)),
    }
}

pub fn build_h4(u: &Subspace) -> Result<DMatrix<f64>> {
    coefficient_matrix(&plain_columns(u), u.ambient.n(), 2)
}

pub fn build_h6(u: &Subspace) -> Result<DMatrix<f64>> {
    coefficient_matrix(&plain_columns(u), u.ambient.n(), 3)
}

/// A tall matrix produced in row blocks.
pub trait RowBlocks: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn block(&self, start: usize, end: usize) -> DMatrix<f64>;
}

impl RowBlocks for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn block(&self, start: usize, end: usize) -> DMatrix<f64> {
        self.rows(start, end - start).into_owned()
    }
}

/// Rows of `H6`, one per strictly increasing 6-tuple, generated on demand.
pub struct H6Rows {
    vectors: Vec<Vec<f64>>,
    tuples: Vec<[usize; 6]>,
    columns: Vec<(Vec<usize>, f64)>,
    matchings: Vec<[(usize, usize); 3]>,
}

impl H6Rows {
    pub fn new(vectors: Vec<Vec<f64>>, n: usize) -> Self {
        let tuples = strict_tuples(n, 6).map(|t| [t[0], t[1], t[2], t[3], t[4], t[5]]).collect();
        let columns = multisets(vectors.len(), 3).map(|m| {
            let c = multiplicity(&m) as f64;
            (m, c)
        });
        Self {
            vectors,
            tuples,
            columns: columns.collect(),
            matchings: crate::moments::six_matchings(),
        }
    }

    pub fn for_span(u: &Subspace) -> Self {
        Self::new(plain_columns(u), u.ambient.n())
    }
}

impl RowBlocks for H6Rows {
    fn rows(&self) -> usize {
        self.tuples.len()
    }

    fn cols(&self) -> usize {
        self.columns.len()
    }

    fn block(&self, start: usize, end: usize) -> DMatrix<f64> {
        let cols = self.columns.len();
        let rows: Vec<Vec<f64>> = self.tuples[start..end]
            .par_iter()
            .map(|t| {
                let mut row = vec![0.0; cols];
                for m in &self.matchings {
                    let p = pair_index(t[m[0].0], t[m[0].1]);
                    let q = pair_index(t[m[1].0], t[m[1].1]);
                    let r = pair_index(t[m[2].0], t[m[2].1]);
                    for (slot, (col, c)) in row.iter_mut().zip(&self.columns) {
                        let (a, b, d) = (&self.vectors[col[0]], &self.vectors[col[1]], &self.vectors[col[2]]);
                        let sym = a[p] * (b[q] * d[r] + b[r] * d[q])
                            + a[q] * (b[p] * d[r] + b[r] * d[p])
                            + a[r] * (b[p] * d[q] + b[q] * d[p]);
                        *slot += c * sym / 6.0;
                    }
                }
                row.iter_mut().for_each(|x| *x /= F6_NORM);
                row
            })
            .collect();
        DMatrix::from_fn(end - start, cols, |i, j| rows[i][j])
    }
}

/// Solution of one least-squares system with its conditioning.
#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub x: DVector<f64>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `|H x - b|`.
    pub residual: f64,
    pub rhs_norm: f64,
    pub path: &'static str,
}

/// A least-squares strategy for tall systems.
pub trait LeastSquares: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, h: &dyn RowBlocks, rhs: &DVector<f64>) -> Result<LsqSolution>;
}

const BLOCK_ROWS: usize = 4096;

fn residual_norm(h: &dyn RowBlocks, x: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    let mut start = 0;
    while start < h.rows() {
        let end = (start + BLOCK_ROWS).min(h.rows());
        let r = h.block(start, end) * x - rhs.rows(start, end - start);
        acc += r.norm_squared();
        start = end;
    }
    acc.sqrt()
}

fn check_shape(h: &dyn RowBlocks, rhs: &DVector<f64>) -> Result<()> {
    if h.rows() != rhs.len() {
        return Err(Error::Format(format!("system has {} rows, right-hand side {}", h.rows(), rhs.len())));
    }
    if h.cols() == 0 || h.rows() < h.cols() {
        return Err(Error::Format("least-squares system must be tall and non-empty".into()));
    }
    Ok(())
}

/// Householder QR of the materialised system; `sigma(H) = sigma(R)`.
pub struct QrSolver;

impl LeastSquares for QrSolver {
    fn name(&self) -> &'static str {
        "qr"
    }

    fn solve(&self, h: &dyn RowBlocks, rhs: &DVector<f64>) -> Result<LsqSolution> {
        check_shape(h, rhs)?;
        let full = h.block(0, h.rows());
        let qr = full.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let s = thin_svd(&r).s;
        let (sigma_max, sigma_min) = (s[0], *s.last().expect("non-empty"));
        let qtb = q.transpose() * rhs;
        let x = match (sigma_min > f64::MIN_POSITIVE * 1e10).then(|| r.solve_upper_triangular(&qtb)).flatten() {
            Some(x) => x,
            None => pinv(&r, 1e-15) * qtb,
        };
        let residual = (&full * &x - rhs).norm();
        Ok(LsqSolution { x, sigma_min, sigma_max, residual, rhs_norm: rhs.norm(), path: "qr" })
    }
}

/// Streams row blocks into the `cols x cols` Gram matrix and `H^T b`; memory
/// stays independent of the row count.
pub struct GramSolver;

impl LeastSquares for GramSolver {
    fn name(&self) -> &'static str {
        "gram"
    }

    fn solve(&self, h: &dyn RowBlocks, rhs: &DVector<f64>) -> Result<LsqSolution> {
        check_shape(h, rhs)?;
        let c = h.cols();
        let mut gram = DMatrix::zeros(c, c);
        let mut htb = DVector::zeros(c);
        let mut start = 0;
        while start < h.rows() {
            let end = (start + BLOCK_ROWS).min(h.rows());
            let b = h.block(start, end);
            gram += b.transpose() * &b;
            htb += b.transpose() * rhs.rows(start, end - start);
            start = end;
        }
        let (vals, vecs) = sym_eig(&gram);
        let sigma_max = vals[0].max(0.0).sqrt();
        let sigma_min = vals[c - 1].max(0.0).sqrt();
        let mut x = DVector::zeros(c);
        for (t, &v) in vals.iter().enumerate() {
            if v > 1e-28 * vals[0] && v > 0.0 {
                let col = vecs.column(t);
                x += col * (col.dot(&htb) / v);
            }
        }
        let residual = residual_norm(h, &x, rhs);
        Ok(LsqSolution { x, sigma_min, sigma_max, residual, rhs_norm: rhs.norm(), path: "gram" })
    }
}

pub fn solver_registry() -> Registry<dyn LeastSquares> {
    let mut r: Registry<dyn LeastSquares> = Registry::new("least-squares solver");
    r.register("qr", Box::new(QrSolver)).register("gram", Box::new(GramSolver));
    r
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnfoldConfig {
    /// `auto`, or a registered solver name.
    pub solver: String,
    /// Dense systems above this many bytes go through the streaming solver
    /// when `solver` is `auto`.
    pub memory_budget: usize,
    pub rank_tol: f64,
    pub strict: bool,
}

impl Default for UnfoldConfig {
    fn default() -> Self {
        Self { solver: "auto".into(), memory_budget: 1 << 29, rank_tol: 1e-9, strict: false }
    }
}

/// Unfolded moments in the coordinates of `basis`.
#[derive(Debug, Clone)]
pub struct UnfoldedMoments {
    pub y4: DMatrix<f64>,
    pub y6: SymTensor,
    pub basis: Subspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldRow {
    pub system: String,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `|H x - b| / |b|`.
    pub residual: f64,
    pub solver_path: String,
    pub ill_conditioned: bool,
}

fn pick<'a>(reg: &'a Registry<dyn LeastSquares>, cfg: &UnfoldConfig, rows: usize, cols: usize) -> Result<&'a dyn LeastSquares> {
    if cfg.solver == "auto" {
        let bytes = rows.saturating_mul(cols).saturating_mul(8);
        return reg.get(if bytes > cfg.memory_budget { "gram" } else { "qr" });
    }
    reg.get(&cfg.solver)
}

fn record(system: &str, sol: &LsqSolution, cfg: &UnfoldConfig) -> Result<UnfoldRow> {
    let ill = !(sol.sigma_min > cfg.rank_tol * sol.sigma_max);
    if ill && cfg.strict {
        return Err(Error::UnfoldIllConditioned {
            system: system.into(),
            sigma: sol.sigma_min,
            threshold: cfg.rank_tol * sol.sigma_max,
        });
    }
    Ok(UnfoldRow {
        system: system.into(),
        sigma_min: sol.sigma_min,
        sigma_max: sol.sigma_max,
        residual: if sol.rhs_norm > 0.0 { sol.residual / sol.rhs_norm } else { sol.residual },
        solver_path: sol.path.into(),
        ill_conditioned: ill,
    })
}

fn y4_from(x: &DVector<f64>, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| x[pair_index(i, j)])
}

/// Solves only the fourth-order system.
pub fn solve_y4(m4_bar: &DVector<f64>, u: &Subspace, cfg: &UnfoldConfig) -> Result<(DMatrix<f64>, UnfoldRow)> {
    let h4 = build_h4(u)?;
    let reg = solver_registry();
    let solver = pick(&reg, cfg, h4.nrows(), h4.ncols())?;
    let sol = solver.solve(&h4, &(m4_bar / F4_NORM))?;
    let row = record("h4", &sol, cfg)?;
    Ok((y4_from(&sol.x, u.dim()), row))
}

/// Step 2: both systems.
pub fn solve_unfold(folded: &FoldedMoments, u: &Subspace, cfg: &UnfoldConfig) -> Result<(UnfoldedMoments, Vec<UnfoldRow>)> {
    let n = u.ambient.n();
    if folded.n != n {
        return Err(Error::Format("folded moments and span have different dimensions".into()));
    }
    let k = u.dim();
    if binom(n, 4) < multiset_count(k, 2) || binom(n, 6) < multiset_count(k, 3) {
        return Err(Error::Infeasible(format!("unfolding systems are under-determined for n = {n}, k = {k}")));
    }
    let (y4, row4) = solve_y4(&folded.m4_bar, u, cfg)?;
    let h6 = H6Rows::for_span(u);
    let reg = solver_registry();
    let solver = pick(&reg, cfg, h6.rows(), h6.cols())?;
    let sol = solver.solve(&h6, &(&folded.m6_bar / F6_NORM))?;
    let row6 = record("h6", &sol, cfg)?;
    let y6 = SymTensor::from_data(3, k, sol.x.iter().copied().collect())?;
    Ok((UnfoldedMoments { y4, y6, basis: u.clone() }, vec![row4, row6]))
}

/// Structural factorisation `H = A B` against known covariances.
///
/// `A` is the coefficient matrix built from the true covariances themselves,
/// `B` the change of variables from their coordinates to those of `u`.
/// Requires `span(covs) = span(u)`.
pub fn structural_factors(covs: &[DMatrix<f64>], u: &Subspace, t: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = u.ambient.n();
    let k = u.dim();
    if covs.len() != k {
        return Err(Error::Format("need one covariance per basis direction".into()));
    }
    let plain: Vec<Vec<f64>> = covs.iter().map(|c| iso_to_plain(crate::linalg::sym_to_iso(c).as_slice())).collect();
    let a = coefficient_matrix(&plain, n, t)?;
    // iso(Sigma_i) = U R[:, i]  =>  basis direction a = sum_i Rinv[i, a] Sigma_i
    let iso = DMatrix::from_columns(&covs.iter().map(crate::linalg::sym_to_iso).collect::<Vec<_>>());
    let r = u.basis.transpose() * iso;
    let rinv = r.clone().try_inverse().ok_or_else(|| Error::Format("covariances are not a basis of the span".into()))?;
    let rows: Vec<Vec<usize>> = multisets(k, t).collect();
    let cols = rows.clone();
    let b = DMatrix::from_fn(rows.len(), cols.len(), |ri, ci| {
        let m = &rows[ri];
        let mp = &cols[ci];
        let scale = multiplicity(mp) as f64 / multiplicity(m) as f64;
        distinct_orderings(m)
            .iter()
            .map(|ord| ord.iter().zip(mp).map(|(&i, &a)| rinv[(i, a)]).product::<f64>())
            .sum::<f64>()
            * scale
    });
    Ok((a, b))
}

fn distinct_orderings(m: &[usize]) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let mut seen = Vec::new();
        for i in 0..rest.len() {
            if seen.contains(&rest[i]) {
                continue;
            }
            seen.push(rest[i]);
            let v = rest.remove(i);
            acc.push(v);
            rec(rest, acc, out);
            acc.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut m.to_vec(), &mut Vec::new(), &mut out);
    out
}
