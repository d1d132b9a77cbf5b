//! Experiment configuration: a JSON or TOML document, overridden by flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use momgmm_core::gmm::{preset_registry, MeanMode, SmoothingConfig, WeightScheme};
use momgmm_core::pipeline::LearnConfig;
use momgmm_core::span::{feasible, select_index_sets, SliceSelection};
use momgmm_core::tensor::PowerMethodConfig;
use momgmm_core::unfold::solver_registry;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Where a trial's moments come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MomentSpec {
    Exact,
    Empirical(usize),
    File(PathBuf),
}

impl FromStr for MomentSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "exact" {
            return Ok(MomentSpec::Exact);
        }
        if let Some(n) = s.strip_prefix("empirical:") {
            let n = parse_count(n).ok_or_else(|| CliError::Config(format!("bad sample count in '{s}'")))?;
            if n == 0 {
                return Err(CliError::Config("empirical sources need at least one sample".into()));
            }
            return Ok(MomentSpec::Empirical(n));
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(MomentSpec::File(PathBuf::from(p)));
        }
        Err(CliError::Config(format!("moment source must be exact, empirical:N or file:PATH, got '{s}'")))
    }
}

impl std::fmt::Display for MomentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MomentSpec::Exact => write!(f, "exact"),
            MomentSpec::Empirical(n) => write!(f, "empirical:{n}"),
            MomentSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Accepts `100000`, `1e5` and `100_000`.
pub fn parse_count(s: &str) -> Option<usize> {
    let s = s.replace('_', "");
    if let Ok(v) = s.parse::<usize>() {
        return Some(v);
    }
    let f: f64 = s.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1e18).then_some(f as usize)
}

/// `7`, `1,2,5`, `0..20` (half-open) or any comma-separated mix.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("cannot parse seeds '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn seeds_field<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Seeds {
        List(Vec<u64>),
        Spec(String),
    }
    match Seeds::deserialize(d)? {
        Seeds::List(v) => Ok(v),
        Seeds::Spec(s) => parse_seeds(&s).map_err(serde::de::Error::custom),
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| CliError::Config(format!("cannot parse {what} '{p}'"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: MeanMode,
    pub n: usize,
    pub k: usize,
    pub rho: Vec<f64>,
    /// Random weights with this floor; uniform weights when absent.
    pub omega_floor: Option<f64>,
    pub preset: String,
    pub diag_margin: f64,
    /// `exact`, `empirical:N` or `file:PATH`.
    pub moments: String,
    /// Sample sizes for `sweep`; overrides `moments` when non-empty.
    pub samples: Vec<usize>,
    /// A list, or a string in the `--seeds` syntax.
    #[serde(deserialize_with = "seeds_field")]
    pub seeds: Vec<u64>,
    /// Index-set size; the largest feasible one when absent.
    #[serde(rename = "H")]
    pub h: Option<usize>,
    pub selection: SliceSelection,
    /// Defaults to 1e-9 for exact moments and 1e-4 otherwise.
    pub rank_tol: Option<f64>,
    pub strict: bool,
    /// Enforce `rho < 1/n` when smoothing.
    pub strict_rho: bool,
    pub solver: String,
    pub restarts: Option<usize>,
    pub psd_repair: bool,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: MeanMode::ZeroMean,
            n: 16,
            k: 2,
            rho: vec![0.1],
            omega_floor: None,
            preset: "random".into(),
            diag_margin: 5.0,
            moments: "exact".into(),
            samples: Vec::new(),
            seeds: vec![0],
            h: None,
            selection: SliceSelection::AllTriples,
            rank_tol: None,
            strict: false,
            strict_rho: false,
            solver: "auto".into(),
            restarts: None,
            psd_repair: false,
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a `.toml` file, or JSON for any other extension.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn moment_spec(&self) -> Result<MomentSpec, CliError> {
        self.moments.parse()
    }

    pub fn weight_scheme(&self) -> WeightScheme {
        match self.omega_floor {
            Some(floor) => WeightScheme::Random { floor },
            None => WeightScheme::Uniform,
        }
    }

    pub fn smoothing(&self, rho: f64, seed: u64) -> SmoothingConfig {
        SmoothingConfig {
            rho,
            diag_margin: self.diag_margin,
            seed,
            mode: self.mode,
            enforce_rho_bound: self.strict_rho,
        }
    }

    pub fn learn_config(&self, spec: &MomentSpec, seed: u64) -> LearnConfig {
        let base = match spec {
            MomentSpec::Exact => LearnConfig::default(),
            _ => LearnConfig::empirical(),
        };
        LearnConfig {
            rank_tol: self.rank_tol.unwrap_or(base.rank_tol),
            strict: self.strict,
            h: self.h,
            selection: self.selection,
            solver: self.solver.clone(),
            power: PowerMethodConfig { restarts: self.restarts, seed, ..base.power },
            psd_repair: self.psd_repair,
            ..base
        }
    }

    /// Checks for learning runs: [`Self::validate_instance`] plus the index-set
    /// conditions.
    ///
    /// With an explicit `H` the span conditions are left to the learner, so that
    /// strict mode can report the rank failure itself.
    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_instance()?;
        if self.solver != "auto" {
            solver_registry().get(&self.solver)?;
        }
        self.moment_spec()?;
        match self.h {
            Some(0) => Err(CliError::Config("H must be positive".into())),
            Some(h) if 2 * h > self.n => {
                Err(CliError::Config(format!("two disjoint index sets of size {h} do not fit in n = {}", self.n)))
            }
            Some(_) => Ok(()),
            None => {
                select_index_sets(self.n, self.k, self.mode, self.selection)?;
                Ok(())
            }
        }
    }

    /// Checks needed to generate instances.
    pub fn validate_instance(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        if self.k == 0 || self.n == 0 {
            return bad(format!("need n >= 1 and k >= 1, got n = {}, k = {}", self.n, self.k));
        }
        if self.rho.is_empty() || self.rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad(format!("rho values must be finite and non-negative, got {:?}", self.rho));
        }
        if !(self.diag_margin >= 0.0) {
            return bad("diag_margin must be non-negative".into());
        }
        if let Some(f) = self.omega_floor {
            if !(0.0..=1.0 / self.k as f64).contains(&f) {
                return bad(format!("omega_floor must lie in [0, 1/k], got {f}"));
            }
        }
        if let Some(t) = self.rank_tol {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("rank_tol must lie in (0, 1), got {t}"));
            }
        }
        if self.restarts == Some(0) {
            return bad("restarts must be positive".into());
        }
        if self.samples.contains(&0) {
            return bad("sample sizes must be positive".into());
        }
        preset_registry().get(&self.preset)?;
        Ok(())
    }

    /// `H` the learner will use, when one exists.
    pub fn resolved_h(&self) -> Option<usize> {
        self.h.or_else(|| (1..=self.n / 2).rev().find(|&h| feasible(self.n, self.k, h, self.mode, self.selection)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The configuration without the fields that cannot change any result
    /// (output directory and worker count).
    pub fn normalized(&self) -> Self {
        Self { out: PathBuf::new(), workers: None, ..self.clone() }
    }

    /// sha256 of the normalized configuration as JSON.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.normalized().to_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1, 2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_seeds("0..3,10").unwrap(), vec![0, 1, 2, 10]);
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn moment_specs() {
        assert_eq!("exact".parse::<MomentSpec>().unwrap(), MomentSpec::Exact);
        assert_eq!("empirical:1e5".parse::<MomentSpec>().unwrap(), MomentSpec::Empirical(100_000));
        assert_eq!("empirical:10_000".parse::<MomentSpec>().unwrap(), MomentSpec::Empirical(10_000));
        assert!("empirical:0".parse::<MomentSpec>().is_err());
        assert!("sampled".parse::<MomentSpec>().is_err());
        let f = "file:m.bin".parse::<MomentSpec>().unwrap();
        assert_eq!(f.to_string(), "file:m.bin");
    }

    #[test]
    fn toml_and_json_agree() {
        let dir = std::env::temp_dir().join(format!("momgmm-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let t = dir.join("c.toml");
        std::fs::write(&t, "mode = \"general\"\nn = 20\nk = 2\nrho = [0.1, 0.05]\nseeds = [1, 2]\nH = 5\n").unwrap();
        let a = ExperimentConfig::load(&t).unwrap();
        let j = dir.join("c.json");
        std::fs::write(&j, a.to_json()).unwrap();
        let b = ExperimentConfig::load(&j).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mode, MeanMode::General);
        assert_eq!(a.h, Some(5));
        assert_eq!(a.digest(), b.digest());
        let moved = ExperimentConfig { out: "elsewhere".into(), workers: Some(3), ..a.clone() };
        assert_eq!(moved.digest(), a.digest());
        std::fs::write(&t, "seeds = \"0..3,9\"\n").unwrap();
        assert_eq!(ExperimentConfig::load(&t).unwrap().seeds, vec![0, 1, 2, 9]);
        std::fs::write(&t, "n = 20\nbogus = 1\n").unwrap();
        assert!(ExperimentConfig::load(&t).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        ok.validate().unwrap();
        assert!(ExperimentConfig { seeds: vec![], ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig { preset: "nope".into(), ..ok.clone() }.validate().is_err());
        let c3 = ExperimentConfig { n: 16, k: 3, ..ok.clone() };
        assert!(c3.validate().is_err());
        c3.validate_instance().unwrap();
        // explicit H defers the span conditions to the learner
        ExperimentConfig { n: 8, k: 3, h: Some(3), ..ok.clone() }.validate().unwrap();
        assert!(ExperimentConfig { h: Some(9), ..ok }.validate().is_err());
    }
}
