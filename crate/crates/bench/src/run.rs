//! Trials: instance generation, moment sources, learning and probing.

use std::time::Instant;

use momgmm_core::diagnostics::RunKey;
use momgmm_core::gmm::{preset_registry, sample, smooth_perturb, GmmParams, MeanMode};
use momgmm_core::moments::{io as moment_io, EmpiricalSource, ExactSource, MomentSource, StoredSource};
use momgmm_core::pipeline::{learn, match_and_score, LearnOutput, RecoveryReport, RunDiagnostics};
use momgmm_core::span::{find_covariance_span, select_index_sets, IndexSets};
use momgmm_core::unfold::solve_unfold;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MomentSpec};
use crate::error::CliError;

/// Env var read for the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "MOMGMM_WORKERS";

/// Sizes the global rayon pool once; later calls are ignored.
pub fn init_workers(flag: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::Config(format!("{WORKERS_ENV}={v} is not a count")))?),
        Err(_) => None,
    };
    if let Some(n) = flag.or(from_env) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(())
}

/// The pre-smoothing instance and its smoothed version.
pub fn instance(cfg: &ExperimentConfig, rho: f64, seed: u64) -> Result<(GmmParams, GmmParams), CliError> {
    let reg = preset_registry();
    let adversarial = reg.get(&cfg.preset)?.generate(cfg.n, cfg.k, cfg.mode, cfg.weight_scheme(), seed);
    let smoothed = smooth_perturb(&adversarial, &cfg.smoothing(rho, seed))?;
    Ok((adversarial, smoothed))
}

pub fn source(spec: &MomentSpec, params: &GmmParams, seed: u64) -> Result<Box<dyn MomentSource>, CliError> {
    Ok(match spec {
        MomentSpec::Exact => Box::new(ExactSource::new(params.clone())),
        MomentSpec::Empirical(n) => Box::new(EmpiricalSource::new(sample(params, *n, seed)?)),
        MomentSpec::File(p) => Box::new(StoredSource { set: moment_io::load(p)? }),
    })
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub seed: u64,
    pub rho: f64,
    pub spec: MomentSpec,
}

impl Trial {
    pub fn key(&self, cfg: &ExperimentConfig) -> RunKey {
        RunKey { seed: self.seed, n: cfg.n, k: cfg.k, rho: self.rho, source: self.spec.to_string() }
    }

    /// File-name stem, unique within an experiment.
    pub fn stem(&self) -> String {
        let src = match &self.spec {
            MomentSpec::Exact => "exact".to_string(),
            MomentSpec::Empirical(n) => format!("N{n}"),
            MomentSpec::File(_) => "file".to_string(),
        };
        format!("seed{}_rho{}_{src}", self.seed, self.rho)
    }
}

/// Every `(rho, samples, seed)` combination, in that nesting order.
pub fn trials(cfg: &ExperimentConfig) -> Result<Vec<Trial>, CliError> {
    let specs: Vec<MomentSpec> = if cfg.samples.is_empty() {
        vec![cfg.moment_spec()?]
    } else {
        cfg.samples.iter().map(|&n| MomentSpec::Empirical(n)).collect()
    };
    let mut out = Vec::new();
    for &rho in &cfg.rho {
        for spec in &specs {
            for &seed in &cfg.seeds {
                out.push(Trial { seed, rho, spec: spec.clone() });
            }
        }
    }
    Ok(out)
}

pub struct Outcome {
    pub trial: Trial,
    pub key: RunKey,
    pub h: usize,
    pub seconds: f64,
    pub result: Result<(LearnOutput, RecoveryReport), CliError>,
}

/// Learns one trial and scores it; `fixed` replaces the generated instance.
pub fn run_trial(cfg: &ExperimentConfig, trial: &Trial, fixed: Option<&GmmParams>) -> Outcome {
    let start = Instant::now();
    let result = (|| {
        let truth = match fixed {
            Some(p) => p.clone(),
            None => instance(cfg, trial.rho, trial.seed)?.1,
        };
        let src = source(&trial.spec, &truth, trial.seed)?;
        let out = learn(src.as_ref(), cfg.k, cfg.mode, &cfg.learn_config(&trial.spec, trial.seed))?;
        let report = match_and_score(&truth, &out.params)?.with_diagnostics(out.diagnostics.clone());
        Ok((out, report))
    })();
    let h = match &result {
        Ok((out, _)) => out.diagnostics.index_set_size,
        Err(_) => cfg.resolved_h().unwrap_or(0),
    };
    Outcome { key: trial.key(cfg), trial: trial.clone(), h, seconds: start.elapsed().as_secs_f64(), result }
}

pub fn run_all(cfg: &ExperimentConfig, trials: &[Trial], fixed: Option<&GmmParams>) -> Vec<Outcome> {
    trials.par_iter().map(|t| run_trial(cfg, t, fixed)).collect()
}

/// Spectral probes of the span and unfolding steps only.
///
/// In zero-mean mode the whitening and decomposition are skipped, so degenerate
/// instances still report their spectra. General mode runs the whole learner,
/// since its unfolding happens inside the projected sub-problem.
pub fn probe(cfg: &ExperimentConfig, trial: &Trial) -> Result<RunDiagnostics, CliError> {
    let (_, truth) = instance(cfg, trial.rho, trial.seed)?;
    let src = source(&trial.spec, &truth, trial.seed)?;
    let lc = cfg.learn_config(&trial.spec, trial.seed);
    if cfg.mode == MeanMode::General {
        return Ok(learn(src.as_ref(), cfg.k, cfg.mode, &lc)?.diagnostics);
    }
    let moments = src.moments(&[4, 6])?;
    let m4 = moments.m4()?;
    let sets = match lc.h {
        Some(h) => IndexSets::contiguous(h, lc.selection)?,
        None => select_index_sets(cfg.n, cfg.k, cfg.mode, lc.selection)?,
    };
    let span_cfg = momgmm_core::span::SpanConfig { rank_tol: lc.rank_tol, strict: lc.strict };
    let span = find_covariance_span(m4, &sets, cfg.k, cfg.mode, &span_cfg)?;
    let mut diag = RunDiagnostics { mode: Some(cfg.mode), index_set_size: sets.size(), probes: span.probes.clone(), ..Default::default() };
    let unfold_cfg = momgmm_core::unfold::UnfoldConfig {
        solver: lc.solver.clone(),
        memory_budget: lc.memory_budget,
        rank_tol: lc.rank_tol,
        strict: lc.strict,
    };
    let (_, rows) = solve_unfold(&moments.folded()?, span.span(), &unfold_cfg)?;
    diag.unfold = rows;
    Ok(diag)
}

pub fn median(v: &[f64]) -> f64 {
    let mut v: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
