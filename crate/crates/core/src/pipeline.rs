//! End-to-end learners and the permutation-matched score.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{GmmParams, MeanMode, PSD_TOL};
use crate::linalg::{complement, iso_to_sym, left_singular, pinv, spectral_norm, sym_eig, sym_to_iso, symmetrize, vec_rm};
use crate::moments::{m3_matricize, MomentSet, MomentSource, SymTensor};
use crate::span::{find_covariance_span, select_index_sets, IndexSets, SingularProbe, SliceSelection, SpanConfig};
use crate::tensor::{assemble_parameters, ortho_power_decompose, whiten, PowerMethodConfig, RoundDiagnostic, WhitenConfig};
use crate::unfold::{solve_unfold, UnfoldConfig, UnfoldRow};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Relative singular-value threshold for every rank decision.
    pub rank_tol: f64,
    /// Turn recorded numerical diagnostics into errors.
    pub strict: bool,
    /// Explicit index sets for Step 1 (top level only).
    pub index_sets: Option<IndexSets>,
    /// Index-set size for Step 1; largest feasible when absent.
    pub h: Option<usize>,
    pub selection: SliceSelection,
    pub solver: String,
    pub memory_budget: usize,
    pub power: PowerMethodConfig,
    /// Clip negative eigenvalues of the recovered covariances.
    pub psd_repair: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            strict: false,
            index_sets: None,
            h: None,
            selection: SliceSelection::AllTriples,
            solver: "auto".into(),
            memory_budget: UnfoldConfig::default().memory_budget,
            power: PowerMethodConfig::default(),
            psd_repair: false,
        }
    }
}

impl LearnConfig {
    /// Defaults for noisy moments.
    pub fn empirical() -> Self {
        Self { rank_tol: 1e-4, ..Self::default() }
    }

    fn span_cfg(&self) -> SpanConfig {
        SpanConfig { rank_tol: self.rank_tol, strict: self.strict }
    }

    fn unfold_cfg(&self) -> UnfoldConfig {
        UnfoldConfig {
            solver: self.solver.clone(),
            memory_budget: self.memory_budget,
            rank_tol: self.rank_tol,
            strict: self.strict,
        }
    }

    fn whiten_cfg(&self) -> WhitenConfig {
        WhitenConfig { rank_tol: self.rank_tol, strict: self.strict }
    }

    fn power_cfg(&self) -> PowerMethodConfig {
        PowerMethodConfig { strict: self.strict, ..self.power }
    }

    fn sets(&self, n: usize, k: usize, mode: MeanMode) -> Result<IndexSets> {
        if let Some(s) = &self.index_sets {
            return Ok(s.clone());
        }
        match self.h {
            Some(h) => IndexSets::contiguous(h, self.selection),
            None => select_index_sets(n, k, mode, self.selection),
        }
    }

    /// Copy for a nested run in a different dimension.
    fn nested(&self) -> Self {
        Self { index_sets: None, h: None, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub step: String,
    pub seconds: f64,
}

/// Every spectral probe and flag of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub mode: Option<MeanMode>,
    pub index_set_size: usize,
    pub probes: Vec<SingularProbe>,
    pub unfold: Vec<UnfoldRow>,
    pub rounds: Vec<RoundDiagnostic>,
    pub whiten_eigenvalues: Vec<f64>,
    pub whiten_clamped: bool,
    /// Smallest eigenvalue of each recovered covariance.
    pub covariance_min_eig: Vec<f64>,
    pub weight_sum: f64,
    pub flags: Vec<String>,
    /// Kept apart from the numerical record; wall-clock varies run to run.
    pub timings: Vec<StepTiming>,
}

impl RunDiagnostics {
    fn absorb(&mut self, prefix: &str, other: RunDiagnostics) {
        let tag = |s: &str| format!("{prefix}/{s}");
        self.probes.extend(other.probes.into_iter().map(|mut p| {
            p.step = tag(&p.step);
            p
        }));
        self.unfold.extend(other.unfold.into_iter().map(|mut u| {
            u.system = tag(&u.system);
            u
        }));
        self.rounds.extend(other.rounds);
        self.whiten_eigenvalues = other.whiten_eigenvalues;
        self.whiten_clamped |= other.whiten_clamped;
        self.flags.extend(other.flags.into_iter().map(|f| tag(&f)));
        self.timings.extend(other.timings.into_iter().map(|mut t| {
            t.step = tag(&t.step);
            t
        }));
    }

    fn collect_flags(&mut self) {
        for p in &self.probes {
            if p.deficient && !p.step.contains('/') {
                self.flags.push(format!("rank-deficient:{}", p.step));
            }
        }
        for u in &self.unfold {
            if u.ill_conditioned && !u.system.contains('/') {
                self.flags.push(format!("unfold-ill-conditioned:{}", u.system));
            }
        }
    }

    /// Copy without wall-clock timings, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        Self { timings: Vec::new(), ..self.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct LearnOutput {
    pub params: GmmParams,
    pub diagnostics: RunDiagnostics,
}

struct Clock {
    start: Instant,
}

impl Clock {
    fn new() -> Self {
        Self { start: Instant::now() }
    }

    fn lap(&mut self, name: &str, out: &mut Vec<StepTiming>) {
        let now = Instant::now();
        out.push(StepTiming { step: name.into(), seconds: (now - self.start).as_secs_f64() });
        self.start = now;
    }
}

fn finish_covariances(covs: Vec<DMatrix<f64>>, cfg: &LearnConfig, diag: &mut RunDiagnostics) -> Vec<DMatrix<f64>> {
    covs.into_iter()
        .enumerate()
        .map(|(i, c)| {
            let c = symmetrize(&c);
            let (vals, vecs) = sym_eig(&c);
            let me = vals.last().copied().unwrap_or(0.0);
            diag.covariance_min_eig.push(me);
            if me < -PSD_TOL * c.trace().abs().max(1.0) {
                diag.flags.push(format!("covariance-not-psd:{i}"));
                if cfg.psd_repair {
                    let clipped = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(0.0)));
                    return symmetrize(&(&vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose()));
                }
            }
            c
        })
        .collect()
}

/// Zero-mean learner: span finding, unfolding, whitened tensor decomposition.
pub fn learn_zero_mean(moments: &MomentSet, k: usize, cfg: &LearnConfig) -> Result<LearnOutput> {
    let m4 = moments.m4()?;
    let n = m4.dim();
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let mut diag = RunDiagnostics { mode: Some(MeanMode::ZeroMean), ..Default::default() };
    let mut clock = Clock::new();
    let sets = cfg.sets(n, k, MeanMode::ZeroMean)?;
    diag.index_set_size = sets.size();
    let span = find_covariance_span(m4, &sets, k, MeanMode::ZeroMean, &cfg.span_cfg())?;
    diag.probes.extend(span.probes.iter().cloned());
    clock.lap("span", &mut diag.timings);

    let folded = moments.folded()?;
    let (unfolded, rows) = solve_unfold(&folded, span.span(), &cfg.unfold_cfg())?;
    diag.unfold = rows;
    clock.lap("unfold", &mut diag.timings);

    let wh = whiten(&unfolded.y4, &unfolded.y6, &cfg.whiten_cfg())?;
    diag.whiten_eigenvalues = wh.eigenvalues.clone();
    diag.whiten_clamped = wh.clamped;
    if wh.clamped {
        diag.flags.push("whiten-clamped".into());
    }
    let (dec, rounds) = ortho_power_decompose(&wh.g, k, &cfg.power_cfg())?;
    for r in &rounds {
        if !r.converged {
            diag.flags.push(format!("power-not-converged:{}", r.round));
        }
    }
    diag.rounds = rounds;
    let (weights, covs) = assemble_parameters(&dec, &wh, span.span());
    clock.lap("decompose", &mut diag.timings);
    diag.collect_flags();
    let covs = finish_covariances(covs, cfg, &mut diag);
    diag.weight_sum = weights.iter().sum();
    let params = GmmParams::new_unchecked(weights, vec![DVector::zeros(n); k], covs);
    Ok(LearnOutput { params, diagnostics: diag })
}

/// `mu_i = M3_(1) T_i / w_i` with `T` the transposed pseudo-inverse of the
/// stacked `vec(sigma_o_i)`.
pub fn recover_means(
    m3: &SymTensor,
    weights: &[f64],
    sigma_o: &[DMatrix<f64>],
    rank_tol: f64,
    strict: bool,
) -> Result<(Vec<DVector<f64>>, SingularProbe)> {
    let stack = DMatrix::from_columns(&sigma_o.iter().map(vec_rm).collect::<Vec<_>>());
    let (_, s) = left_singular(&stack, sigma_o.len());
    let probe = SingularProbe::from_spectrum("means_stack", &s, sigma_o.len(), rank_tol);
    if probe.deficient && strict {
        return Err(Error::MeansIllConditioned { sigma: probe.sigma_r });
    }
    let t = means_transform(&stack);
    let m3m = m3_matricize(m3)?;
    let means = (0..sigma_o.len()).map(|i| &m3m * t.column(i) / weights[i]).collect();
    Ok((means, probe))
}

/// `[vec(sigma_o_i)]^{+T}`, columns biorthogonal to the stacked vectors.
pub fn means_transform(stack: &DMatrix<f64>) -> DMatrix<f64> {
    pinv(stack, 1e-14).transpose()
}

/// `M4' = M4 + 2 sum_i w_i mu_i^{(x)4}`: the fourth moment of the zero-mean
/// mixture with covariances `Sigma_i + mu_i mu_i^T`.
pub fn shifted_fourth_moment(m4: &SymTensor, weights: &[f64], means: &[DVector<f64>]) -> Result<SymTensor> {
    let mut out = m4.clone();
    let tuples: Vec<Vec<usize>> = out.tuples().collect();
    for (pos, t) in tuples.iter().enumerate() {
        let add: f64 = weights
            .iter()
            .zip(means)
            .map(|(w, m)| 2.0 * w * m[t[0]] * m[t[1]] * m[t[2]] * m[t[3]])
            .sum();
        out.data_mut()[pos] += add;
    }
    Ok(out)
}

/// Step 4 of the general learner: span of `Sigma_i + mu_i mu_i^T` from `M4'`,
/// each member pinned down by its known projection `F^T Sigma_i F`.
pub fn recover_full_covariances(
    m4: &SymTensor,
    weights: &[f64],
    means: &[DVector<f64>],
    frame: &DMatrix<f64>,
    projected: &[DMatrix<f64>],
    cfg: &LearnConfig,
) -> Result<(Vec<DMatrix<f64>>, Vec<SingularProbe>)> {
    let n = m4.dim();
    let k = weights.len();
    let shifted = shifted_fourth_moment(m4, weights, means)?;
    let sets = cfg.nested().sets(n, k, MeanMode::ZeroMean)?;
    let span = find_covariance_span(&shifted, &sets, k, MeanMode::ZeroMean, &cfg.span_cfg())?;
    let mut probes = span.probes.clone();
    let basis = &span.span().basis;
    let proj_cols: Vec<DVector<f64>> = basis
        .column_iter()
        .map(|c| sym_to_iso(&symmetrize(&(frame.transpose() * iso_to_sym(c.as_slice(), n) * frame))))
        .collect();
    let ps = DMatrix::from_columns(&proj_cols);
    let (_, s) = left_singular(&ps, k);
    let probe = SingularProbe::from_spectrum("anchor", &s, k, cfg.rank_tol);
    if probe.deficient && cfg.strict {
        return Err(Error::AnchorIllConditioned { sigma: probe.sigma_r });
    }
    probes.push(probe);
    let ps_inv = pinv(&ps, 1e-14);
    let covs = projected
        .iter()
        .zip(means)
        .map(|(c, mu)| {
            let coeffs = &ps_inv * sym_to_iso(c);
            let full = iso_to_sym((basis * coeffs).as_slice(), n);
            symmetrize(&(full - mu * mu.transpose()))
        })
        .collect();
    Ok((covs, probes))
}

/// General learner: Step 1 gives the mean span `Z`; Step 2 learns the
/// zero-mean mixture seen in `Z^perp`; Step 3 reads the means off `M3`;
/// Step 4 recovers the full covariances.
pub fn learn_general(source: &dyn MomentSource, k: usize, cfg: &LearnConfig) -> Result<LearnOutput> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be at least 1".into()));
    }
    let moments = source.moments(&[3, 4])?;
    let m3 = moments.m3()?;
    let m4 = moments.m4()?;
    let n = m4.dim();
    let mut diag = RunDiagnostics { mode: Some(MeanMode::General), ..Default::default() };
    let mut clock = Clock::new();
    let sets = cfg.sets(n, k, MeanMode::General)?;
    diag.index_set_size = sets.size();
    let span = find_covariance_span(m4, &sets, k, MeanMode::General, &cfg.span_cfg())?;
    diag.probes.extend(span.probes.iter().cloned());
    let z = span.merged.z.clone().expect("general merge yields Z");
    clock.lap("span", &mut diag.timings);

    let frame = complement(&z.basis);
    let projected_source = source.project(&frame)?;
    let projected_moments = projected_source.moments(&[4, 6])?;
    let sub = learn_zero_mean(&projected_moments, k, &cfg.nested())?;
    let sub_params = sub.params;
    diag.absorb("projected", sub.diagnostics);
    clock.lap("projected", &mut diag.timings);

    let weights = sub_params.weights.clone();
    let sigma_o: Vec<DMatrix<f64>> = sub_params.covariances.iter().map(|c| &frame * c * frame.transpose()).collect();
    let (means, mprobe) = recover_means(m3, &weights, &sigma_o, cfg.rank_tol, cfg.strict)?;
    if mprobe.deficient {
        diag.flags.push("means-ill-conditioned".into());
    }
    diag.probes.push(mprobe);
    clock.lap("means", &mut diag.timings);

    let (covs, probes) = recover_full_covariances(m4, &weights, &means, &frame, &sub_params.covariances, cfg)?;
    for p in probes {
        if p.deficient {
            diag.flags.push(format!("rank-deficient:anchor/{}", p.step));
        }
        diag.probes.push(SingularProbe { step: format!("anchor/{}", p.step), ..p });
    }
    clock.lap("covariances", &mut diag.timings);
    diag.collect_flags();
    let covs = finish_covariances(covs, cfg, &mut diag);
    diag.weight_sum = weights.iter().sum();
    Ok(LearnOutput { params: GmmParams::new_unchecked(weights, means, covs), diagnostics: diag })
}

/// Dispatches on the mean mode.
pub fn learn(source: &dyn MomentSource, k: usize, mode: MeanMode, cfg: &LearnConfig) -> Result<LearnOutput> {
    match mode {
        MeanMode::ZeroMean => learn_zero_mean(&source.moments(&[4, 6])?, k, cfg),
        MeanMode::General => learn_general(source, k, cfg),
    }
}

/// Permutation-matched errors of an estimate against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// `permutation[i]` is the truth component matched to estimate `i`.
    pub permutation: Vec<usize>,
    pub weight_errors: Vec<f64>,
    pub mean_errors: Vec<f64>,
    /// Spectral norm.
    pub covariance_errors: Vec<f64>,
    pub max_weight_error: f64,
    pub max_mean_error: f64,
    pub max_covariance_error: f64,
    pub diagnostics: Option<RunDiagnostics>,
}

impl RecoveryReport {
    pub fn with_diagnostics(mut self, d: RunDiagnostics) -> Self {
        self.diagnostics = Some(d);
        self
    }

    /// The largest of the three maxima.
    pub fn max_error(&self) -> f64 {
        self.max_weight_error.max(self.max_mean_error).max(self.max_covariance_error)
    }

    pub fn without_timings(&self) -> Self {
        Self { diagnostics: self.diagnostics.as_ref().map(|d| d.without_timings()), ..self.clone() }
    }
}

fn pair_errors(truth: &GmmParams, est: &GmmParams, i: usize, j: usize) -> (f64, f64, f64) {
    (
        (est.weights[i] - truth.weights[j]).abs(),
        (&est.means[i] - &truth.means[j]).norm(),
        spectral_norm(&(&est.covariances[i] - &truth.covariances[j])),
    )
}

/// Finds the permutation minimising the largest combined error
/// `max(|dw|, |dmu|, |dSigma|_2)`; ties go to the smaller total, then to the
/// lexicographically first permutation.
pub fn match_and_score(truth: &GmmParams, est: &GmmParams) -> Result<RecoveryReport> {
    let k = truth.k();
    if est.k() != k || est.n() != truth.n() {
        return Err(Error::InvalidParams("truth and estimate differ in (n, k)".into()));
    }
    let errs: Vec<Vec<(f64, f64, f64)>> = (0..k).map(|i| (0..k).map(|j| pair_errors(truth, est, i, j)).collect()).collect();
    let cost: Vec<Vec<f64>> = errs.iter().map(|r| r.iter().map(|e| e.0.max(e.1).max(e.2)).collect()).collect();
    let perm = if k <= 8 { exhaustive_bottleneck(&cost) } else { bottleneck_assignment(&cost) };
    let pick = |f: fn(&(f64, f64, f64)) -> f64| -> Vec<f64> { perm.iter().enumerate().map(|(i, &j)| f(&errs[i][j])).collect() };
    let weight_errors = pick(|e| e.0);
    let mean_errors = pick(|e| e.1);
    let covariance_errors = pick(|e| e.2);
    let mx = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(RecoveryReport {
        max_weight_error: mx(&weight_errors),
        max_mean_error: mx(&mean_errors),
        max_covariance_error: mx(&covariance_errors),
        permutation: perm,
        weight_errors,
        mean_errors,
        covariance_errors,
        diagnostics: None,
    })
}

fn exhaustive_bottleneck(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let score = |p: &[usize]| {
        let vals = p.iter().enumerate().map(|(i, &j)| cost[i][j]);
        (vals.clone().fold(0.0, f64::max), vals.sum::<f64>())
    };
    let mut best = perm.clone();
    let mut best_score = score(&perm);
    // lexicographic successor; strict improvement only
    loop {
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
        let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).expect("successor exists");
        perm.swap(i, j);
        perm[i + 1..].reverse();
        let s = score(&perm);
        if s.0 < best_score.0 || (s.0 == best_score.0 && s.1 < best_score.1) {
            best_score = s;
            best = perm.clone();
        }
    }
    best
}

fn bottleneck_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0, levels.len() - 1);
    let mut best = matching_under(cost, levels[hi]).expect("complete graph has a perfect matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match matching_under(cost, levels[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    if let Some(m) = matching_under(cost, levels[lo]) {
        best = m;
    }
    debug_assert_eq!(best.len(), k);
    best
}

/// Perfect matching of rows to columns using only entries `<= t` (Kuhn).
fn matching_under(cost: &[Vec<f64>], t: f64) -> Option<Vec<usize>> {
    let k = cost.len();
    let mut col_of_row = vec![usize::MAX; k];
    let mut row_of_col = vec![usize::MAX; k];
    fn augment(r: usize, cost: &[Vec<f64>], t: f64, seen: &mut [bool], row_of_col: &mut [usize], col_of_row: &mut [usize]) -> bool {
        for c in 0..cost.len() {
            if cost[r][c] <= t && !seen[c] {
                seen[c] = true;
                if row_of_col[c] == usize::MAX || augment(row_of_col[c], cost, t, seen, row_of_col, col_of_row) {
                    row_of_col[c] = r;
                    col_of_row[r] = c;
                    return true;
                }
            }
        }
        false
    }
    for r in 0..k {
        let mut seen = vec![false; k];
        if !augment(r, cost, t, &mut seen, &mut row_of_col, &mut col_of_row) {
            return None;
        }
    }
    Some(col_of_row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{InstancePreset, RandomPreset, WeightScheme};

    fn truth(k: usize) -> GmmParams {
        RandomPreset.generate(4, k, MeanMode::General, WeightScheme::Random { floor: 0.05 }, 2)
    }

    #[test]
    fn identical_estimate_scores_zero_with_identity() {
        let t = truth(3);
        let r = match_and_score(&t, &t).unwrap();
        assert_eq!(r.permutation, vec![0, 1, 2]);
        assert_eq!(r.max_error(), 0.0);
    }

    #[test]
    fn swapped_components_are_matched() {
        let t = truth(3);
        let mut e = t.clone();
        e.weights.swap(0, 2);
        e.means.swap(0, 2);
        e.covariances.swap(0, 2);
        let r = match_and_score(&t, &e).unwrap();
        assert_eq!(r.permutation, vec![2, 1, 0]);
        assert_eq!(r.max_error(), 0.0);
    }

    #[test]
    fn perturbed_covariance_error_is_its_norm() {
        let t = truth(2);
        let mut e = t.clone();
        let mut d = DMatrix::zeros(4, 4);
        d[(1, 2)] = 1e-3;
        d[(2, 1)] = 1e-3;
        e.covariances[1] += &d;
        let r = match_and_score(&t, &e).unwrap();
        assert!((r.covariance_errors[1] - 1e-3).abs() < 1e-12);
        assert_eq!(r.covariance_errors[0], 0.0);
    }

    #[test]
    fn large_k_uses_assignment() {
        let t = truth(10);
        let mut e = t.clone();
        e.weights.rotate_left(3);
        e.means.rotate_left(3);
        e.covariances.rotate_left(3);
        let r = match_and_score(&t, &e).unwrap();
        assert_eq!(r.max_error(), 0.0);
        for (i, &j) in r.permutation.iter().enumerate() {
            assert_eq!(j, (i + 3) % 10);
        }
    }
}
