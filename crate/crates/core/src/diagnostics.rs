//! Flat rows for the experiment CSVs. Column order is part of the format.

use serde::{Deserialize, Serialize};

use crate::pipeline::{RecoveryReport, RunDiagnostics};

/// Column order of [`ProbeRow`].
pub const PROBE_COLUMNS: [&str; 15] = [
    "seed", "n", "k", "rho", "source", "kind", "step", "rank", "sigma_r", "sigma_next", "sigma_max", "ratio", "residual",
    "detail", "flag",
];

/// One spectral probe, unfolding system or power-method round.
///
/// `kind` is `probe`, `unfold` or `round`. Unfold rows carry `sigma_min` in
/// `sigma_r` and the solver path in `detail`. For rounds `rank` is the restart
/// count, `sigma_r` the eigenvalue, `sigma_next` the gap to the runner-up
/// restart and `residual` the last iterate step. Missing values are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub source: String,
    pub kind: String,
    pub step: String,
    pub rank: usize,
    pub sigma_r: f64,
    pub sigma_next: f64,
    pub sigma_max: f64,
    pub ratio: f64,
    pub residual: f64,
    pub detail: String,
    pub flag: bool,
}

/// Column order of [`SummaryRow`].
pub const SUMMARY_COLUMNS: [&str; 14] = [
    "seed",
    "n",
    "k",
    "rho",
    "source",
    "mode",
    "h",
    "status",
    "max_weight_error",
    "max_mean_error",
    "max_covariance_error",
    "flags",
    "seconds",
    "message",
];

/// One learning trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub source: String,
    pub mode: String,
    pub h: usize,
    /// `ok` or the error kind.
    pub status: String,
    pub max_weight_error: f64,
    pub max_mean_error: f64,
    pub max_covariance_error: f64,
    pub flags: usize,
    pub seconds: f64,
    pub message: String,
}

/// Shared identifying columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub source: String,
}

pub fn probe_rows(key: &RunKey, d: &RunDiagnostics) -> Vec<ProbeRow> {
    #[allow(clippy::too_many_arguments)]
    let row = |kind: &str, step: &str, rank, sr, sn, sm, ratio, residual, detail: &str, flag| ProbeRow {
        seed: key.seed,
        n: key.n,
        k: key.k,
        rho: key.rho,
        source: key.source.clone(),
        kind: kind.into(),
        step: step.into(),
        rank,
        sigma_r: sr,
        sigma_next: sn,
        sigma_max: sm,
        ratio,
        residual,
        detail: detail.into(),
        flag,
    };
    let mut out = Vec::new();
    for p in &d.probes {
        out.push(row("probe", &p.step, p.rank, p.sigma_r, p.sigma_next, p.sigma_max, p.relative(), f64::NAN, "", p.deficient));
    }
    for u in &d.unfold {
        let ratio = if u.sigma_max > 0.0 { u.sigma_min / u.sigma_max } else { 0.0 };
        out.push(row("unfold", &u.system, 0, u.sigma_min, f64::NAN, u.sigma_max, ratio, u.residual, &u.solver_path, u.ill_conditioned));
    }
    for r in &d.rounds {
        let gap = r.gap.unwrap_or(f64::NAN);
        out.push(row("round", &format!("round_{}", r.round), r.restarts_used, r.lambda, gap, r.lambda, f64::NAN, r.last_step, "", !r.converged));
    }
    out
}

pub fn summary_row(key: &RunKey, mode: &str, h: usize, report: &RecoveryReport, seconds: f64) -> SummaryRow {
    let flags = report.diagnostics.as_ref().map_or(0, |d| d.flags.len());
    SummaryRow {
        seed: key.seed,
        n: key.n,
        k: key.k,
        rho: key.rho,
        source: key.source.clone(),
        mode: mode.into(),
        h,
        status: "ok".into(),
        max_weight_error: report.max_weight_error,
        max_mean_error: report.max_mean_error,
        max_covariance_error: report.max_covariance_error,
        flags,
        seconds,
        message: String::new(),
    }
}

pub fn failure_row(key: &RunKey, mode: &str, h: usize, status: &str, message: &str, seconds: f64) -> SummaryRow {
    SummaryRow {
        seed: key.seed,
        n: key.n,
        k: key.k,
        rho: key.rho,
        source: key.source.clone(),
        mode: mode.into(),
        h,
        status: status.into(),
        max_weight_error: f64::NAN,
        max_mean_error: f64::NAN,
        max_covariance_error: f64::NAN,
        flags: 0,
        seconds,
        message: message.into(),
    }
}
