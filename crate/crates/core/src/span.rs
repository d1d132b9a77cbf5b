//! Span finding: the column span `S`, the projected span `U_S`, and the merge
//! of two projected spans into the span of the covariances.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::MeanMode;
use crate::index::{binom, multisets, n2};
use crate::linalg::{
    complement, iso_to_sym, left_singular, orthonormality_defect, pinv, pinv_rank, projector_distance, sym_to_iso,
    symmetrize, unvec_rm, vec_rm,
};
use crate::moments::{m4_slice1, m4_slice2, SymTensor};

pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Vector space a [`Subspace`] lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", content = "n", rename_all = "kebab-case")]
pub enum Ambient {
    /// `R^n`.
    Vectors(usize),
    /// `R^{n^2}`, row-major vectorised `n x n` matrices.
    Matrices(usize),
    /// `R^{n2}`, symmetric matrices in isometric distinct-entry coordinates.
    SymPairs(usize),
}

impl Ambient {
    pub fn dim(&self) -> usize {
        match *self {
            Ambient::Vectors(n) => n,
            Ambient::Matrices(n) => n * n,
            Ambient::SymPairs(n) => n2(n),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Ambient::Vectors(n) | Ambient::Matrices(n) | Ambient::SymPairs(n) => n,
        }
    }
}

/// A linear subspace given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub basis: DMatrix<f64>,
    pub ambient: Ambient,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>, ambient: Ambient) -> Result<Self> {
        if basis.nrows() != ambient.dim() {
            return Err(Error::Format(format!("basis has {} rows, ambient dimension is {}", basis.nrows(), ambient.dim())));
        }
        let defect = orthonormality_defect(&basis);
        if defect >= ORTHONORMAL_TOL {
            return Err(Error::Format(format!("basis is not orthonormal (defect {defect:.3e})")));
        }
        Ok(Self { basis, ambient })
    }

    /// Orthonormalises the columns of `m` (keeping `rank` directions).
    pub fn span_of(m: &DMatrix<f64>, rank: usize, ambient: Ambient) -> Result<Self> {
        let (u, _) = left_singular(m, rank);
        Self::new(u, ambient)
    }

    pub fn trivial(ambient: Ambient) -> Self {
        Self { basis: DMatrix::zeros(ambient.dim(), 0), ambient }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(&self.basis)
    }

    /// `|v - P v|` for each column of `m`.
    pub fn residuals(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let r = m - &self.basis * (self.basis.transpose() * m);
        r.column_iter().map(|c| c.norm()).collect()
    }

    /// Spectral distance between the two orthogonal projectors.
    pub fn distance(&self, other: &Subspace) -> f64 {
        projector_distance(&self.basis, &other.basis)
    }

    pub fn complement(&self) -> Subspace {
        Subspace { basis: complement(&self.basis), ambient: self.ambient }
    }
}

/// How Step 1(a) picks the index triples of its one-dimensional slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SliceSelection {
    /// Every nondecreasing triple from `H`, `C(|H|+2, 3)` columns.
    #[default]
    AllTriples,
    /// `H` split into three equal parts, one index from each: `(|H|/3)^3` columns.
    Partitioned,
}

impl std::str::FromStr for SliceSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-triples" => Ok(SliceSelection::AllTriples),
            "partitioned" => Ok(SliceSelection::Partitioned),
            other => Err(Error::InvalidParams(format!("unknown slice selection '{other}'"))),
        }
    }
}

/// Splits `h` into three consecutive parts of equal size.
pub fn partition(h: &[usize]) -> Result<[Vec<usize>; 3]> {
    if h.len() % 3 != 0 {
        return Err(Error::InvalidParams(format!("|H| = {} is not divisible by 3", h.len())));
    }
    let t = h.len() / 3;
    Ok([h[..t].to_vec(), h[t..2 * t].to_vec(), h[2 * t..].to_vec()])
}

/// Index triples whose slices form the columns of `Q_S`.
pub fn column_triples(h: &[usize], selection: SliceSelection) -> Result<Vec<[usize; 3]>> {
    match selection {
        SliceSelection::AllTriples => Ok(multisets(h.len(), 3).map(|t| [h[t[0]], h[t[1]], h[t[2]]]).collect()),
        SliceSelection::Partitioned => {
            let [a, b, c] = partition(h)?;
            let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
            for &x in &a {
                for &y in &b {
                    for &z in &c {
                        out.push([x, y, z]);
                    }
                }
            }
            Ok(out)
        }
    }
}

pub fn column_count(h: usize, selection: SliceSelection) -> usize {
    match selection {
        SliceSelection::AllTriples => binom(h + 2, 3),
        SliceSelection::Partitioned => (h / 3).pow(3),
    }
}

/// Rank of `S` from Step 1(a): `k|H|`, plus `k` mean directions in general mode.
pub fn column_rank(k: usize, h: usize, mode: MeanMode) -> usize {
    match mode {
        MeanMode::ZeroMean => k * h,
        MeanMode::General => k * (h + 1),
    }
}

/// `dim(S1 + S2)` for disjoint index sets of size `h`.
pub fn union_rank(k: usize, h: usize, mode: MeanMode) -> usize {
    match mode {
        MeanMode::ZeroMean => 2 * k * h,
        MeanMode::General => 2 * k * (h + 1) - k,
    }
}

/// Whether index sets of size `h` can identify the spans for `(n, k)`:
/// enough slices for the rank of `S`, enough pairs for `U_S`, and a
/// non-trivial common complement for the merge.
pub fn feasible(n: usize, k: usize, h: usize, mode: MeanMode, selection: SliceSelection) -> bool {
    if h == 0 || 2 * h > n {
        return false;
    }
    if selection == SliceSelection::Partitioned && h % 3 != 0 {
        return false;
    }
    column_count(h, selection) >= column_rank(k, h, mode) && binom(h + 1, 2) >= k && union_rank(k, h, mode) < n
}

/// The two disjoint index sets `H1`, `H2` used by Step 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSets {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub selection: SliceSelection,
}

impl IndexSets {
    pub fn new(first: Vec<usize>, second: Vec<usize>, selection: SliceSelection) -> Result<Self> {
        if first.is_empty() || first.len() != second.len() {
            return Err(Error::InvalidParams("index sets must be non-empty and of equal size".into()));
        }
        if first.iter().any(|i| second.contains(i)) {
            return Err(Error::InvalidParams("index sets must be disjoint".into()));
        }
        let mut a = first;
        let mut b = second;
        a.sort_unstable();
        b.sort_unstable();
        if a.windows(2).any(|w| w[0] == w[1]) || b.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("index sets must not repeat indices".into()));
        }
        if selection == SliceSelection::Partitioned && a.len() % 3 != 0 {
            return Err(Error::InvalidParams("partitioned selection needs |H| divisible by 3".into()));
        }
        Ok(Self { first: a, second: b, selection })
    }

    /// `H1 = {0..h}`, `H2 = {h..2h}`.
    pub fn contiguous(h: usize, selection: SliceSelection) -> Result<Self> {
        Self::new((0..h).collect(), (h..2 * h).collect(), selection)
    }

    pub fn size(&self) -> usize {
        self.first.len()
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if let Some(&bad) = self.first.iter().chain(&self.second).find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, dim: n });
        }
        Ok(())
    }
}

/// Largest feasible `|H|` for `(n, k)`, as contiguous index sets.
pub fn select_index_sets(n: usize, k: usize, mode: MeanMode, selection: SliceSelection) -> Result<IndexSets> {
    let h = (1..=n / 2).rev().find(|&h| feasible(n, k, h, mode, selection)).ok_or_else(|| {
        Error::Infeasible(format!(
            "no index-set size identifies the spans for n = {n}, k = {k} ({mode:?}, {selection:?}); \
             need C(|H|+2,3) >= rank(S) and dim(S1+S2) < n"
        ))
    })?;
    IndexSets::contiguous(h, selection)
}

/// Spectrum summary at one rank decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularProbe {
    pub step: String,
    pub rank: usize,
    pub sigma_r: f64,
    pub sigma_next: f64,
    pub sigma_max: f64,
    pub deficient: bool,
}

impl SingularProbe {
    pub fn from_spectrum(step: &str, s: &[f64], rank: usize, rank_tol: f64) -> Self {
        let sigma_max = s.first().copied().unwrap_or(0.0);
        let sigma_r = if rank == 0 { sigma_max } else { s.get(rank - 1).copied().unwrap_or(0.0) };
        let sigma_next = s.get(rank).copied().unwrap_or(0.0);
        let deficient = rank > 0 && (sigma_max <= 0.0 || sigma_r < rank_tol * sigma_max);
        Self { step: step.to_string(), rank, sigma_r, sigma_next, sigma_max, deficient }
    }

    /// `sigma_r / sigma_max`.
    pub fn relative(&self) -> f64 {
        if self.sigma_max > 0.0 {
            self.sigma_r / self.sigma_max
        } else {
            0.0
        }
    }

    /// `sigma_r / sigma_{r+1}`; infinite when the next value vanishes.
    pub fn gap(&self) -> f64 {
        if self.sigma_next > 0.0 {
            self.sigma_r / self.sigma_next
        } else {
            f64::INFINITY
        }
    }

    pub fn threshold(&self, rank_tol: f64) -> f64 {
        rank_tol * self.sigma_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanConfig {
    /// Relative singular-value threshold for rank decisions.
    pub rank_tol: f64,
    /// Abort on the first failed rank decision instead of recording it.
    pub strict: bool,
}

impl Default for SpanConfig {
    fn default() -> Self {
        Self { rank_tol: 1e-9, strict: false }
    }
}

fn enforce(probe: &SingularProbe, cfg: &SpanConfig) -> Result<()> {
    if cfg.strict && probe.deficient {
        return Err(Error::RankDeficient {
            step: probe.step.clone(),
            rank: probe.rank,
            sigma: probe.sigma_r,
            threshold: probe.threshold(cfg.rank_tol),
        });
    }
    Ok(())
}

/// `Q_S`: one column `M4(e_j1, e_j2, e_j3, I)` per selected triple.
pub fn column_span_matrix(m4: &SymTensor, h: &[usize], selection: SliceSelection) -> Result<DMatrix<f64>> {
    let triples = column_triples(h, selection)?;
    let cols: Vec<_> = triples.par_iter().map(|t| m4_slice1(m4, t[0], t[1], t[2])).collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Step 1(a): leading left singular vectors of `Q_S`.
pub fn find_column_span(
    m4: &SymTensor,
    h: &[usize],
    k: usize,
    mode: MeanMode,
    selection: SliceSelection,
    cfg: &SpanConfig,
) -> Result<(Subspace, SingularProbe)> {
    let n = m4.dim();
    let r = column_rank(k, h.len(), mode);
    let cols = column_count(h.len(), selection);
    if r > n || cols < r {
        // sigma_r(Q_S) is structurally zero
        if cfg.strict {
            let q = column_span_matrix(m4, h, selection)?;
            let top = crate::linalg::thin_svd(&q).s.first().copied().unwrap_or(0.0);
            return Err(Error::RankDeficient {
                step: "column_span".into(),
                rank: r,
                sigma: 0.0,
                threshold: cfg.rank_tol * top,
            });
        }
        return Err(Error::Infeasible(format!(
            "Q_S has {cols} columns in R^{n} but the span has rank {r}"
        )));
    }
    let q = column_span_matrix(m4, h, selection)?;
    let (u, s) = left_singular(&q, r);
    let probe = SingularProbe::from_spectrum("column_span", &s, r, cfg.rank_tol);
    enforce(&probe, cfg)?;
    Ok((Subspace::new(u, Ambient::Vectors(n))?, probe))
}

/// `Q_{U_S}`: one column `vec(Proj_{S^perp} M4(e_j1, e_j2, I, I))` per pair `j1 <= j2` in `H`.
pub fn projected_span_matrix(m4: &SymTensor, h: &[usize], s: &Subspace) -> Result<DMatrix<f64>> {
    let n = m4.dim();
    let proj = DMatrix::identity(n, n) - s.projector();
    let pairs: Vec<(usize, usize)> = multisets(h.len(), 2).map(|t| (h[t[0]], h[t[1]])).collect();
    let cols: Vec<_> = pairs
        .par_iter()
        .map(|&(a, b)| m4_slice2(m4, a, b).map(|m| vec_rm(&(&proj * m))))
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Step 1(b): span of the left-projected covariances `Proj_{S^perp} Sigma_i`, in `R^{n^2}`.
pub fn find_projected_sigma_span(
    m4: &SymTensor,
    h: &[usize],
    s: &Subspace,
    k: usize,
    cfg: &SpanConfig,
) -> Result<(Subspace, SingularProbe)> {
    let n = m4.dim();
    if binom(h.len() + 1, 2) < k {
        return Err(Error::Infeasible(format!("Q_US has {} columns, need {k}", binom(h.len() + 1, 2))));
    }
    let q = projected_span_matrix(m4, h, s)?;
    let (u, sv) = left_singular(&q, k);
    let probe = SingularProbe::from_spectrum("projected_span", &sv, k, cfg.rank_tol);
    enforce(&probe, cfg)?;
    Ok((Subspace::new(u, Ambient::Matrices(n))?, probe))
}

/// Result of merging two projected spans.
#[derive(Debug, Clone)]
pub struct Merged {
    /// Zero-mean: span of `Sigma_i` in `R^{n2}`. General: span of
    /// `Proj_{Z^perp} Sigma_i Proj_{Z^perp}` in `R^{n2}`.
    pub span: Subspace,
    /// Span of `vec(Proj_{Z^perp} Sigma_i)` in `R^{n^2}` (general mode); in
    /// zero-mean mode `vec(Sigma_i)`.
    pub lifted: Subspace,
    /// Span of the means (general mode only).
    pub z: Option<Subspace>,
    pub probes: Vec<SingularProbe>,
}

/// `(S3^T kron I) U` with row-major vectorisation: `vec(S3^T M)` per column.
fn lift_project(s3: &DMatrix<f64>, u: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let cols: Vec<_> = u
        .column_iter()
        .map(|c| vec_rm(&(s3.transpose() * unvec_rm(c.as_slice(), n, n))))
        .collect();
    DMatrix::from_columns(&cols)
}

/// Step 1(c).
///
/// `S3` is the common complement of `S1 + S2`. Since `S3` is orthogonal to
/// both `S_j`, `(S3 kron I)^T vec(Proj_{S_j^perp} M) = vec(S3^T M)`, which
/// aligns the two coefficient systems: `V = (B3^T U1)^+ (B3^T U2)`. Then
/// `U2 + U1 V` spans `vec((P1 + P2) Sigma_i)` and applying `(P1 + P2)^{-1}` on
/// the left (a pseudo-inverse on `Z^perp` in general mode, where the means lie
/// in both `S_j`) recovers the unprojected span.
pub fn merge_projections(
    s1: &Subspace,
    s2: &Subspace,
    u1: &Subspace,
    u2: &Subspace,
    k: usize,
    mode: MeanMode,
    cfg: &SpanConfig,
) -> Result<Merged> {
    let n = s1.ambient_dim();
    if s2.ambient_dim() != n || u1.ambient_dim() != n * n || u2.ambient_dim() != n * n {
        return Err(Error::Format("merge inputs have inconsistent dimensions".into()));
    }
    if u1.dim() != k || u2.dim() != k {
        return Err(Error::Format(format!("projected spans must be {k}-dimensional")));
    }
    let mut probes = Vec::new();
    let union = union_dim(s1.dim(), s2.dim(), k, mode);
    if union >= n {
        return Err(Error::MergeIllConditioned {
            stage: format!("no common complement: dim(S1 + S2) = {union} >= n = {n}"),
            sigma: 0.0,
            threshold: cfg.rank_tol,
        });
    }
    let stacked = DMatrix::from_fn(n, s1.dim() + s2.dim(), |r, c| {
        if c < s1.dim() {
            s1.basis[(r, c)]
        } else {
            s2.basis[(r, c - s1.dim())]
        }
    });
    let (a, sv) = left_singular(&stacked, union);
    let union_probe = SingularProbe::from_spectrum("merge_union", &sv, union, cfg.rank_tol);
    guard(&union_probe, cfg)?;
    probes.push(union_probe);
    let z = match mode {
        MeanMode::ZeroMean => None,
        MeanMode::General => {
            // directions shared by S1 and S2 have singular value sqrt(2)
            let lead: Vec<f64> = sv.iter().map(|s| s * s - 1.0).collect();
            probes.push(SingularProbe::from_spectrum("merge_intersection", &lead, k, cfg.rank_tol));
            Some(Subspace::new(left_singular(&stacked, k).0, Ambient::Vectors(n))?)
        }
    };
    let s3 = complement(&a);
    let w1 = lift_project(&s3, &u1.basis, n);
    let w2 = lift_project(&s3, &u2.basis, n);
    let (_, sw) = left_singular(&w1, k);
    let overlap = SingularProbe::from_spectrum("merge_overlap", &sw, k, cfg.rank_tol);
    guard(&overlap, cfg)?;
    probes.push(overlap);
    let v = pinv(&w1, 1e-14) * w2;
    let y = &u2.basis + &u1.basis * v;
    let p_sum = DMatrix::identity(n, n) * 2.0 - s1.projector() - s2.projector();
    let p_inv = match mode {
        MeanMode::ZeroMean => pinv_rank(&p_sum, n),
        MeanMode::General => pinv_rank(&p_sum, n - k),
    };
    let x_cols: Vec<_> = y
        .column_iter()
        .map(|c| &p_inv * unvec_rm(c.as_slice(), n, n))
        .collect();
    let lifted_m = DMatrix::from_columns(&x_cols.iter().map(vec_rm).collect::<Vec<_>>());
    let lifted = Subspace::span_of(&lifted_m, k, Ambient::Matrices(n))?;
    let right = match &z {
        Some(z) => DMatrix::identity(n, n) - z.projector(),
        None => DMatrix::identity(n, n),
    };
    let sym_cols: Vec<_> = lifted
        .basis
        .column_iter()
        .map(|c| sym_to_iso(&symmetrize(&(unvec_rm(c.as_slice(), n, n) * &right))))
        .collect();
    let span = Subspace::span_of(&DMatrix::from_columns(&sym_cols), k, Ambient::SymPairs(n))?;
    Ok(Merged { span, lifted, z, probes })
}

fn union_dim(d1: usize, d2: usize, k: usize, mode: MeanMode) -> usize {
    match mode {
        MeanMode::ZeroMean => d1 + d2,
        MeanMode::General => d1 + d2 - k.min(d1.min(d2)),
    }
}

fn guard(probe: &SingularProbe, cfg: &SpanConfig) -> Result<()> {
    if cfg.strict && probe.deficient {
        return Err(Error::MergeIllConditioned {
            stage: probe.step.clone(),
            sigma: probe.sigma_r,
            threshold: probe.threshold(cfg.rank_tol),
        });
    }
    Ok(())
}

/// Everything Step 1 produces.
#[derive(Debug, Clone)]
pub struct SpanResult {
    pub index_sets: IndexSets,
    pub s1: Subspace,
    pub s2: Subspace,
    pub u1: Subspace,
    pub u2: Subspace,
    pub merged: Merged,
    pub probes: Vec<SingularProbe>,
}

impl SpanResult {
    /// Span of the (projected) covariances in isometric pair coordinates.
    pub fn span(&self) -> &Subspace {
        &self.merged.span
    }
}

/// Step 1 end to end: 1(a) and 1(b) on both index sets, then the merge.
pub fn find_covariance_span(
    m4: &SymTensor,
    sets: &IndexSets,
    k: usize,
    mode: MeanMode,
    cfg: &SpanConfig,
) -> Result<SpanResult> {
    sets.check(m4.dim())?;
    let mut probes = Vec::new();
    let mut run = |h: &[usize], tag: &str| -> Result<(Subspace, Subspace)> {
        let (s, mut p) = find_column_span(m4, h, k, mode, sets.selection, cfg)?;
        p.step = format!("column_span_{tag}");
        probes.push(p);
        let (u, mut q) = find_projected_sigma_span(m4, h, &s, k, cfg)?;
        q.step = format!("projected_span_{tag}");
        probes.push(q);
        Ok((s, u))
    };
    let (s1, u1) = run(&sets.first, "1")?;
    let (s2, u2) = run(&sets.second, "2")?;
    let merged = merge_projections(&s1, &s2, &u1, &u2, k, mode, cfg)?;
    probes.extend(merged.probes.iter().cloned());
    Ok(SpanResult { index_sets: sets.clone(), s1, s2, u1, u2, merged, probes })
}

/// Symmetric matrix for each column of a pair-coordinate basis.
pub fn basis_matrices(span: &Subspace) -> Vec<DMatrix<f64>> {
    let n = span.ambient.n();
    span.basis.column_iter().map(|c| iso_to_sym(c.as_slice(), n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility_rule() {
        assert_eq!(select_index_sets(16, 2, MeanMode::ZeroMean, SliceSelection::AllTriples).unwrap().size(), 3);
        assert_eq!(select_index_sets(10, 2, MeanMode::ZeroMean, SliceSelection::AllTriples).unwrap().size(), 2);
        assert_eq!(select_index_sets(20, 2, MeanMode::General, SliceSelection::AllTriples).unwrap().size(), 4);
        assert_eq!(select_index_sets(8, 1, MeanMode::ZeroMean, SliceSelection::AllTriples).unwrap().size(), 3);
        assert_eq!(select_index_sets(20, 3, MeanMode::ZeroMean, SliceSelection::AllTriples).unwrap().size(), 3);
        assert!(select_index_sets(16, 3, MeanMode::ZeroMean, SliceSelection::AllTriples).is_err());
        assert!(select_index_sets(16, 2, MeanMode::ZeroMean, SliceSelection::Partitioned).is_err());
    }

    #[test]
    fn partitioned_column_count() {
        let h: Vec<usize> = (0..6).collect();
        assert_eq!(column_triples(&h, SliceSelection::Partitioned).unwrap().len(), 8);
        assert_eq!(column_triples(&h, SliceSelection::AllTriples).unwrap().len(), 56);
    }

    #[test]
    fn index_sets_validate() {
        assert!(IndexSets::new(vec![0, 1], vec![1, 2], SliceSelection::AllTriples).is_err());
        assert!(IndexSets::new(vec![0, 1], vec![2], SliceSelection::AllTriples).is_err());
        let s = IndexSets::new(vec![3, 1], vec![0, 2], SliceSelection::AllTriples).unwrap();
        assert_eq!(s.first, vec![1, 3]);
        assert!(matches!(s.check(3), Err(Error::IndexOutOfRange { index: 3, dim: 3 })));
    }

    #[test]
    fn probe_flags_deficiency() {
        let p = SingularProbe::from_spectrum("x", &[1.0, 0.5, 1e-12], 3, 1e-9);
        assert!(p.deficient);
        assert_eq!(p.sigma_next, 0.0);
        let q = SingularProbe::from_spectrum("x", &[1.0, 0.5, 1e-12], 2, 1e-9);
        assert!(!q.deficient);
        assert_eq!(q.gap(), 0.5 / 1e-12);
    }
}
