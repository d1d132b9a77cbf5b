//! Mixture parameters, the smoothing perturbation and the sampler.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_eigenvalue, spectral_norm, sym_eig};
use crate::registry::Registry;
use crate::rng::{stream, Domain};

pub const WEIGHT_TOL: f64 = 1e-12;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMode {
    #[default]
    ZeroMean,
    General,
}

impl std::str::FromStr for MeanMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-mean" | "zero_mean" | "zero" => Ok(MeanMode::ZeroMean),
            "general" => Ok(MeanMode::General),
            other => Err(Error::InvalidParams(format!("unknown mode '{other}'"))),
        }
    }
}

/// Weights, means and covariances of a `k`-component mixture in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    /// Scale factor applied by [`normalize`], if any.
    pub scale: Option<f64>,
}

/// JSON mirror: `{n, k, weights, means, covariances}` with row-major matrices.
#[derive(Debug, Serialize, Deserialize)]
struct ParamsDoc {
    n: usize,
    k: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
}

impl GmmParams {
    /// Builds and validates a parameter set.
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = Self::new_unchecked(weights, means, covariances);
        p.validate()?;
        Ok(p)
    }

    /// Builds without the weight / PSD checks (estimates need not satisfy them).
    pub fn new_unchecked(weights: Vec<f64>, means: Vec<DVector<f64>>, covariances: Vec<DMatrix<f64>>) -> Self {
        Self { weights, means, covariances, scale: None }
    }

    pub fn zero_mean(weights: Vec<f64>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = covariances.first().map(|c| c.nrows()).unwrap_or(0);
        let means = vec![DVector::zeros(n); covariances.len()];
        Self::new(weights, means, covariances)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn n(&self) -> usize {
        self.covariances.first().map(|c| c.nrows()).unwrap_or(0)
    }

    /// Smallest mixing weight.
    pub fn omega_min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_zero_mean(&self) -> bool {
        self.means.iter().all(|m| m.iter().all(|&x| x == 0.0))
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (k, n) = (self.k(), self.n());
        if k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if self.means.len() != k || self.covariances.len() != k {
            return Err(Error::InvalidParams(format!(
                "expected {k} means and covariances, got {} and {}",
                self.means.len(),
                self.covariances.len()
            )));
        }
        for (i, (m, c)) in self.means.iter().zip(&self.covariances).enumerate() {
            if m.len() != n || c.nrows() != n || c.ncols() != n {
                return Err(Error::InvalidParams(format!("component {i} has inconsistent dimensions")));
            }
            if m.iter().chain(c.iter()).any(|x| !x.is_finite()) {
                return Err(Error::InvalidParams(format!("component {i} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Checks the invariants: weights on the simplex, symmetric PSD covariances.
    pub fn validate(&self) -> Result<()> {
        self.check_shapes()?;
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParams("weights must be non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidParams(format!("weights sum to {total}, expected 1")));
        }
        for (i, c) in self.covariances.iter().enumerate() {
            let asym = max_abs(&(c - c.transpose()));
            if asym >= SYMMETRY_TOL {
                return Err(Error::InvalidParams(format!("covariance {i} asymmetric by {asym:.3e}")));
            }
            let me = min_eigenvalue(c);
            if me < -PSD_TOL {
                return Err(Error::InvalidParams(format!("covariance {i} has eigenvalue {me:.3e}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ParamsDoc {
            n: self.n(),
            k: self.k(),
            weights: self.weights.clone(),
            means: self.means.iter().map(|m| m.iter().copied().collect()).collect(),
            covariances: self
                .covariances
                .iter()
                .map(|c| (0..c.nrows()).map(|r| c.row(r).iter().copied().collect()).collect())
                .collect(),
            scale: self.scale,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses the JSON document; shapes are checked, the simplex / PSD
    /// invariants are not (estimates are stored in the same format).
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ParamsDoc = serde_json::from_str(s)?;
        if doc.weights.len() != doc.k {
            return Err(Error::Format(format!("k = {} but {} weights", doc.k, doc.weights.len())));
        }
        let means = doc.means.into_iter().map(DVector::from_vec).collect();
        let mut covariances = Vec::with_capacity(doc.k);
        for rows in doc.covariances {
            if rows.len() != doc.n || rows.iter().any(|r| r.len() != doc.n) {
                return Err(Error::Format(format!("covariance is not {}x{}", doc.n, doc.n)));
            }
            covariances.push(DMatrix::from_fn(doc.n, doc.n, |a, b| rows[a][b]));
        }
        let p = GmmParams { weights: doc.weights, means, covariances, scale: doc.scale };
        p.check_shapes()?;
        if p.n() != doc.n {
            return Err(Error::Format("dimension mismatch".into()));
        }
        Ok(p)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Parameters of the smoothing perturbation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub rho: f64,
    pub diag_margin: f64,
    pub seed: u64,
    pub mode: MeanMode,
    /// Reject `rho >= 1/n`.
    pub enforce_rho_bound: bool,
}

impl SmoothingConfig {
    pub fn new(rho: f64, seed: u64, mode: MeanMode) -> Self {
        Self { rho, diag_margin: 5.0, seed, mode, enforce_rho_bound: true }
    }

    /// Same, without the `rho < 1/n` bound.
    pub fn relaxed(rho: f64, seed: u64, mode: MeanMode) -> Self {
        Self { enforce_rho_bound: false, ..Self::new(rho, seed, mode) }
    }
}

/// Applies the random smoothing: i.i.d. `N(0, rho^2)` off-diagonal noise on each
/// covariance (and the means in general mode), then raises each diagonal by
/// `diag_margin * sqrt(n) * rho`.
pub fn smooth_perturb(params: &GmmParams, cfg: &SmoothingConfig) -> Result<GmmParams> {
    params.check_shapes()?;
    let n = params.n();
    if !(cfg.rho >= 0.0) || !cfg.rho.is_finite() {
        return Err(Error::InvalidParams(format!("rho must be non-negative, got {}", cfg.rho)));
    }
    if cfg.enforce_rho_bound && cfg.rho >= 1.0 / n as f64 {
        return Err(Error::InvalidRho { rho: cfg.rho, bound: 1.0 / n as f64 });
    }
    if !(cfg.diag_margin >= 0.0) {
        return Err(Error::InvalidParams("diag_margin must be non-negative".into()));
    }
    let mut rng = stream(cfg.seed, Domain::Perturb, 0);
    let shift = cfg.diag_margin * (n as f64).sqrt() * cfg.rho;
    let mut out = params.clone();
    for i in 0..params.k() {
        let c = &mut out.covariances[i];
        for b in 0..n {
            for a in 0..b {
                let z: f64 = rng.sample(StandardNormal);
                let v = c[(a, b)] + cfg.rho * z;
                c[(a, b)] = v;
                c[(b, a)] = v;
            }
            c[(b, b)] += shift;
        }
        let trace = c.trace();
        let me = min_eigenvalue(c);
        if me < -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::PerturbationInfeasible { component: i, min_eig: me });
        }
        match cfg.mode {
            MeanMode::ZeroMean => out.means[i] = DVector::zeros(n),
            MeanMode::General => {
                for a in 0..n {
                    let z: f64 = rng.sample(StandardNormal);
                    out.means[i][a] += cfg.rho * z;
                }
            }
        }
    }
    Ok(out)
}

/// Relative slack on the box bounds, so instances built exactly on the
/// boundary are not rescaled by rounding noise.
const BOX_SLACK: f64 = 1e-12;

/// Rescales `x -> c x` so that `|mu| <= 1/2` and `Sigma <= I/2`; returns `c`.
/// Parameters already inside the box are returned unchanged with `c = 1`.
pub fn normalize(params: &GmmParams) -> (GmmParams, f64) {
    let mut c: f64 = 1.0;
    for (m, s) in params.means.iter().zip(&params.covariances) {
        let mn = m.norm();
        if mn > 0.5 * (1.0 + BOX_SLACK) {
            c = c.min(0.5 / mn);
        }
        let sn = spectral_norm(s);
        if sn > 0.5 * (1.0 + BOX_SLACK) {
            c = c.min((0.5 / sn).sqrt());
        }
    }
    let mut out = params.clone();
    for m in &mut out.means {
        *m *= c;
    }
    for s in &mut out.covariances {
        *s *= c * c;
    }
    out.scale = Some(params.scale.unwrap_or(1.0) * c);
    (out, c)
}

/// Draws from a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    /// `N x n`, one sample per row.
    pub data: DMatrix<f64>,
    pub labels: Option<Vec<usize>>,
}

impl SampleBatch {
    pub fn new(data: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::InvalidParams("sample batch must be non-empty".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("sample batch has non-finite entries".into()));
        }
        if let Some(l) = &labels {
            if l.len() != data.nrows() {
                return Err(Error::InvalidParams("label count differs from sample count".into()));
            }
        }
        Ok(Self { data, labels })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Samples expressed in the orthonormal frame `f` (`n x m`): rows `x^T F`.
    pub fn project(&self, frame: &DMatrix<f64>) -> SampleBatch {
        SampleBatch { data: &self.data * frame, labels: self.labels.clone() }
    }
}

/// Samples per RNG block; each block draws from its own stream.
pub const SAMPLE_BLOCK: usize = 4096;

/// `N` i.i.d. draws; bit-reproducible for a fixed seed independent of thread count.
pub fn sample(params: &GmmParams, n_samples: usize, seed: u64) -> Result<SampleBatch> {
    params.check_shapes()?;
    let n = params.n();
    let mut factors = Vec::with_capacity(params.k());
    for (i, c) in params.covariances.iter().enumerate() {
        let (vals, vecs) = sym_eig(c);
        let me = vals.last().copied().unwrap_or(0.0);
        if me < -PSD_TOL * c.trace().abs().max(1.0) {
            return Err(Error::DegenerateCovariance { component: i, min_eig: me });
        }
        let sq = DVector::from_iterator(n, vals.iter().map(|&v| v.max(0.0).sqrt()));
        factors.push(vecs * DMatrix::from_diagonal(&sq));
    }
    let mut cumulative = Vec::with_capacity(params.k());
    let mut acc = 0.0;
    for &w in &params.weights {
        acc += w;
        cumulative.push(acc);
    }
    let total = acc;
    let blocks = n_samples.div_ceil(SAMPLE_BLOCK);
    let parts: Vec<(Vec<f64>, Vec<usize>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * SAMPLE_BLOCK;
            let len = SAMPLE_BLOCK.min(n_samples - start);
            let mut rng = stream(seed, Domain::Sampling, b as u64);
            let mut rows = Vec::with_capacity(len * n);
            let mut labels = Vec::with_capacity(len);
            let mut z = DVector::zeros(n);
            for _ in 0..len {
                let u: f64 = rng.random::<f64>() * total;
                let h = cumulative.iter().position(|&c| u < c).unwrap_or_else(|| {
                    // u can land on the total through rounding; take the last positive weight
                    params.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
                });
                for a in 0..n {
                    z[a] = StandardNormal.sample(&mut rng);
                }
                let x = &params.means[h] + &factors[h] * &z;
                rows.extend(x.iter());
                labels.push(h);
            }
            (rows, labels)
        })
        .collect();
    let mut data = Vec::with_capacity(n_samples * n);
    let mut labels = Vec::with_capacity(n_samples);
    for (r, l) in parts {
        data.extend(r);
        labels.extend(l);
    }
    SampleBatch::new(DMatrix::from_row_slice(n_samples, n, &data), Some(labels))
}

/// How preset instances pick their mixing weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    #[default]
    Uniform,
    /// Random weights with every entry at least `floor`.
    Random { floor: f64 },
}

impl WeightScheme {
    pub fn draw(&self, k: usize, rng: &mut impl Rng) -> Vec<f64> {
        match *self {
            WeightScheme::Uniform => vec![1.0 / k as f64; k],
            WeightScheme::Random { floor } => {
                let floor = floor.clamp(0.0, 1.0 / k as f64);
                let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = raw.iter().sum();
                let free = 1.0 - floor * k as f64;
                raw.iter().map(|r| floor + free * r / s).collect()
            }
        }
    }
}

/// A generator of pre-perturbation ("adversarial") instances inside the box
/// `|mu| <= 1/2`, `0 <= Sigma <= I/2`.
pub trait InstancePreset: Send + Sync {
    fn describe(&self) -> &'static str;
    fn generate(&self, n: usize, k: usize, mode: MeanMode, weights: WeightScheme, seed: u64) -> GmmParams;
}

fn random_mean(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let r: f64 = 0.5 * rng.random::<f64>();
    v.normalize() * r
}

fn finish(weights: Vec<f64>, means: Vec<DVector<f64>>, covs: Vec<DMatrix<f64>>, mode: MeanMode) -> GmmParams {
    let n = covs[0].nrows();
    let means = match mode {
        MeanMode::ZeroMean => vec![DVector::zeros(n); covs.len()],
        MeanMode::General => means,
    };
    let total: f64 = weights.iter().sum();
    let weights = weights.iter().map(|w| w / total).collect();
    GmmParams::new_unchecked(weights, means, covs)
}

/// Independent Wishart-like covariances scaled to spectral norm 1/2.
pub struct RandomPreset;

impl InstancePreset for RandomPreset {
    fn describe(&self) -> &'static str {
        "independent random PSD covariances with spectral norm 1/2"
    }

    fn generate(&self, n: usize, k: usize, mode: MeanMode, weights: WeightScheme, seed: u64) -> GmmParams {
        let mut rng = stream(seed, Domain::Instance, 0);
        let w = weights.draw(k, &mut rng);
        let mut covs = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        for _ in 0..k {
            let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let s = &a * a.transpose();
            let norm = spectral_norm(&s);
            covs.push(crate::linalg::symmetrize(&(s * (0.5 / norm))));
            means.push(random_mean(n, &mut rng));
        }
        finish(w, means, covs, mode)
    }
}

/// Every component shares the same rank-one covariance and the same mean.
pub struct LowRankPreset;

impl InstancePreset for LowRankPreset {
    fn describe(&self) -> &'static str {
        "identical rank-one covariances (and identical means), the degenerate case smoothing repairs"
    }

    fn generate(&self, n: usize, k: usize, mode: MeanMode, weights: WeightScheme, seed: u64) -> GmmParams {
        let mut rng = stream(seed, Domain::Instance, 0);
        let w = weights.draw(k, &mut rng);
        let u = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        let cov = &u * u.transpose() * 0.5;
        let mean = &u * 0.5;
        finish(w, vec![mean; k], vec![cov; k], mode)
    }
}

/// Random diagonal covariances.
pub struct DiagonalPreset;

impl InstancePreset for DiagonalPreset {
    fn describe(&self) -> &'static str {
        "random diagonal covariances with entries in [0, 1/2]"
    }

    fn generate(&self, n: usize, k: usize, mode: MeanMode, weights: WeightScheme, seed: u64) -> GmmParams {
        let mut rng = stream(seed, Domain::Instance, 0);
        let w = weights.draw(k, &mut rng);
        let mut covs = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        for _ in 0..k {
            let d = DVector::from_fn(n, |_, _| 0.5 * rng.random::<f64>());
            covs.push(DMatrix::from_diagonal(&d));
            means.push(random_mean(n, &mut rng));
        }
        finish(w, means, covs, mode)
    }
}

/// All-zero means and covariances; everything comes from the smoothing.
pub struct ZeroPreset;

impl InstancePreset for ZeroPreset {
    fn describe(&self) -> &'static str {
        "zero means and covariances"
    }

    fn generate(&self, n: usize, k: usize, mode: MeanMode, weights: WeightScheme, seed: u64) -> GmmParams {
        let mut rng = stream(seed, Domain::Instance, 0);
        let w = weights.draw(k, &mut rng);
        finish(w, vec![DVector::zeros(n); k], vec![DMatrix::zeros(n, n); k], mode)
    }
}

pub fn preset_registry() -> Registry<dyn InstancePreset> {
    let mut r: Registry<dyn InstancePreset> = Registry::new("instance preset");
    r.register("random", Box::new(RandomPreset))
        .register("lowrank", Box::new(LowRankPreset))
        .register("diagonal", Box::new(DiagonalPreset))
        .register("zero", Box::new(ZeroPreset));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_component(n: usize) -> GmmParams {
        RandomPreset.generate(n, 2, MeanMode::General, WeightScheme::Uniform, 11)
    }

    #[test]
    fn presets_stay_in_box() {
        let reg = preset_registry();
        for name in reg.names() {
            for mode in [MeanMode::ZeroMean, MeanMode::General] {
                let p = reg.get(&name).unwrap().generate(6, 3, mode, WeightScheme::Random { floor: 0.1 }, 3);
                p.validate().unwrap();
                assert!(p.omega_min() >= 0.1 - 1e-12);
                for (m, s) in p.means.iter().zip(&p.covariances) {
                    assert!(m.norm() <= 0.5 + 1e-12);
                    assert!(spectral_norm(s) <= 0.5 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_rho_is_identity() {
        let p = two_component(5);
        let q = smooth_perturb(&p, &SmoothingConfig::new(0.0, 4, MeanMode::General)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn zero_covariance_gets_diagonal_repair() {
        let p = GmmParams::zero_mean(vec![1.0], vec![DMatrix::zeros(4, 4)]).unwrap();
        for seed in 0..100 {
            let q = smooth_perturb(&p, &SmoothingConfig::new(0.01, seed, MeanMode::ZeroMean)).unwrap();
            let c = &q.covariances[0];
            for a in 0..4 {
                assert!((c[(a, a)] - 0.1).abs() < 1e-15);
            }
            assert_eq!(max_abs(&(c - c.transpose())), 0.0);
            assert!(min_eigenvalue(c) >= 0.0);
        }
    }

    #[test]
    fn zero_mean_mode_clears_means() {
        let p = two_component(5);
        let q = smooth_perturb(&p, &SmoothingConfig::relaxed(0.1, 1, MeanMode::ZeroMean)).unwrap();
        assert!(q.is_zero_mean());
        assert_eq!(q.weights, p.weights);
    }

    #[test]
    fn rho_bound_is_enforced() {
        let p = two_component(5);
        let err = smooth_perturb(&p, &SmoothingConfig::new(0.2, 1, MeanMode::General)).unwrap_err();
        assert!(matches!(err, Error::InvalidRho { .. }));
        assert!(smooth_perturb(&p, &SmoothingConfig::relaxed(0.2, 1, MeanMode::General)).is_ok());
    }

    #[test]
    fn small_margin_is_infeasible() {
        let p = GmmParams::zero_mean(vec![1.0], vec![DMatrix::zeros(8, 8)]).unwrap();
        let mut cfg = SmoothingConfig::relaxed(0.1, 2, MeanMode::ZeroMean);
        cfg.diag_margin = 0.0;
        let err = smooth_perturb(&p, &cfg).unwrap_err();
        assert!(matches!(err, Error::PerturbationInfeasible { .. }));
    }

    #[test]
    fn json_round_trip() {
        let p = two_component(4);
        let q = GmmParams::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn normalize_enforces_box() {
        let mut p = two_component(4);
        p.means[0] *= 10.0;
        p.covariances[1] *= 8.0;
        let (q, c) = normalize(&p);
        assert!(c < 1.0);
        for (m, s) in q.means.iter().zip(&q.covariances) {
            assert!(m.norm() <= 0.5 + 1e-12);
            assert!(spectral_norm(s) <= 0.5 + 1e-12);
        }
        let (r, c2) = normalize(&two_component(4));
        assert_eq!(c2, 1.0);
        assert_eq!(r.covariances, two_component(4).covariances);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_zero_weights() {
        let p = GmmParams::new(
            vec![1.0, 0.0],
            vec![DVector::zeros(3), DVector::from_element(3, 5.0)],
            vec![DMatrix::identity(3, 3), DMatrix::identity(3, 3)],
        )
        .unwrap();
        let a = sample(&p, 10_000, 5).unwrap();
        let b = sample(&p, 10_000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.labels.as_ref().unwrap().iter().all(|&h| h == 0));
    }

    #[test]
    fn standard_normal_sample_mean() {
        let p = GmmParams::zero_mean(vec![1.0], vec![DMatrix::identity(5, 5)]).unwrap();
        let s = sample(&p, 100_000, 9).unwrap();
        for a in 0..5 {
            let mean = s.data.column(a).mean();
            assert!(mean.abs() < 0.02, "coordinate {a} mean {mean}");
        }
    }

    #[test]
    fn gaussian_kurtosis() {
        let p = GmmParams::zero_mean(vec![1.0], vec![DMatrix::from_element(1, 1, 4.0)]).unwrap();
        let s = sample(&p, 1_000_000, 3).unwrap();
        let m2 = s.data.iter().map(|x| x * x).sum::<f64>() / 1e6;
        let m4 = s.data.iter().map(|x| x.powi(4)).sum::<f64>() / 1e6;
        let ratio = m4 / (m2 * m2);
        assert!((ratio / 3.0 - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn degenerate_covariance_is_rejected() {
        let mut c = DMatrix::identity(2, 2);
        c[(0, 0)] = -1.0;
        let p = GmmParams::new_unchecked(vec![1.0], vec![DVector::zeros(2)], vec![c]);
        assert!(matches!(sample(&p, 10, 0), Err(Error::DegenerateCovariance { .. })));
    }
}
