//! The subcommands, callable without going through argument parsing.

use std::path::Path;

use momgmm_core::diagnostics::{failure_row, probe_rows, summary_row, ProbeRow, SummaryRow, PROBE_COLUMNS, SUMMARY_COLUMNS};
use momgmm_core::fixtures::verify_counterexample;
use momgmm_core::gmm::{GmmParams, MeanMode};
use momgmm_core::moments::{exact_moments, io as moment_io};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, MomentSpec};
use crate::error::CliError;
use crate::output::OutputDir;
use crate::run::{instance, median, probe, run_all, trials, Trial};

fn mode_name(m: MeanMode) -> &'static str {
    match m {
        MeanMode::ZeroMean => "zero-mean",
        MeanMode::General => "general",
    }
}

fn report_failures(failures: Vec<(String, CliError)>) -> Result<(), CliError> {
    for (what, e) in &failures {
        eprintln!("{what}: error[{}]: {e}", e.kind());
    }
    match failures.into_iter().next() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

/// Writes the smoothed and the pre-smoothing instance for every seed (and rho).
pub fn gen(cfg: &ExperimentConfig, write_moments: bool) -> Result<(), CliError> {
    cfg.validate_instance()?;
    let mut out = OutputDir::create(&cfg.out)?;
    let jobs: Vec<(u64, f64)> = cfg.rho.iter().flat_map(|&r| cfg.seeds.iter().map(move |&s| (s, r))).collect();
    let made: Vec<_> = jobs.par_iter().map(|&(s, r)| instance(cfg, r, s)).collect();
    let tag = |s: u64, r: f64| if cfg.rho.len() > 1 { format!("seed{s}_rho{r}") } else { format!("seed{s}") };
    for (&(s, r), res) in jobs.iter().zip(made) {
        let (adv, smooth) = res?;
        out.write_bytes(&format!("instance_{}.json", tag(s, r)), smooth.to_json()?.as_bytes())?;
        out.write_bytes(&format!("adversarial_{}.json", tag(s, r)), adv.to_json()?.as_bytes())?;
        if write_moments {
            let orders: &[usize] = match cfg.mode {
                MeanMode::ZeroMean => &[4, 6],
                MeanMode::General => &[3, 4, 6],
            };
            let name = format!("moments_{}.bin", tag(s, r));
            moment_io::save(&exact_moments(&smooth, orders)?, &out.path(&name))?;
            out.register(&name)?;
        }
        println!("wrote instance_{}.json", tag(s, r));
    }
    out.finish("gen", cfg)?;
    Ok(())
}

/// Per-group medians of a learning experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub rho: f64,
    pub source: String,
    pub trials: usize,
    pub ok: usize,
    pub median_max_weight_error: f64,
    pub median_max_mean_error: f64,
    pub median_max_covariance_error: f64,
}

pub const MEDIAN_COLUMNS: [&str; 7] =
    ["rho", "source", "trials", "ok", "median_max_weight_error", "median_max_mean_error", "median_max_covariance_error"];

fn medians(rows: &[SummaryRow]) -> Vec<MedianRow> {
    let mut groups: Vec<(f64, String)> = Vec::new();
    for r in rows {
        if !groups.iter().any(|(rho, s)| *rho == r.rho && *s == r.source) {
            groups.push((r.rho, r.source.clone()));
        }
    }
    groups
        .into_iter()
        .map(|(rho, source)| {
            let g: Vec<&SummaryRow> = rows.iter().filter(|r| r.rho == rho && r.source == source).collect();
            let ok: Vec<&&SummaryRow> = g.iter().filter(|r| r.status == "ok").collect();
            let col = |f: fn(&SummaryRow) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            MedianRow {
                rho,
                source,
                trials: g.len(),
                ok: ok.len(),
                median_max_weight_error: col(|r| r.max_weight_error),
                median_max_mean_error: col(|r| r.max_mean_error),
                median_max_covariance_error: col(|r| r.max_covariance_error),
            }
        })
        .collect()
}

fn learning(cfg: &ExperimentConfig, fixed: Option<&GmmParams>, command: &str) -> Result<(), CliError> {
    let spec = cfg.moment_spec()?;
    if matches!(spec, MomentSpec::File(_)) && fixed.is_none() {
        return Err(CliError::Config("a file moment source needs --instance for scoring".into()));
    }
    let list = trials(cfg)?;
    let outcomes = run_all(cfg, &list, fixed);
    let mut out = OutputDir::create(&cfg.out)?;
    let mode = mode_name(cfg.mode);
    let mut summary = Vec::new();
    let mut probes: Vec<ProbeRow> = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        let stem = o.trial.stem();
        match o.result {
            Ok((learned, report)) => {
                out.write_bytes(&format!("learned_{stem}.json"), learned.params.to_json()?.as_bytes())?;
                out.write_json(&format!("report_{stem}.json"), &report.without_timings())?;
                probes.extend(probe_rows(&o.key, &learned.diagnostics));
                let row = summary_row(&o.key, mode, o.h, &report, o.seconds);
                println!(
                    "{stem}: ok  dw {:.3e}  dmu {:.3e}  dSigma {:.3e}  flags {}",
                    row.max_weight_error, row.max_mean_error, row.max_covariance_error, row.flags
                );
                summary.push(row);
            }
            Err(e) => {
                summary.push(failure_row(&o.key, mode, o.h, e.kind(), &e.to_string(), o.seconds));
                failures.push((stem, e));
            }
        }
    }
    out.write_csv("summary.csv", &SUMMARY_COLUMNS, &summary)?;
    out.write_csv("diagnostics.csv", &PROBE_COLUMNS, &probes)?;
    if command == "sweep" {
        out.write_csv("medians.csv", &MEDIAN_COLUMNS, &medians(&summary))?;
    }
    out.finish(command, cfg)?;
    report_failures(failures)
}

/// Learns every trial; with `instance`, that file replaces the generated
/// instances and fixes `n` and `k`.
pub fn learn(cfg: &ExperimentConfig, instance: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    let fixed = match instance {
        Some(p) => {
            let params = GmmParams::read(p)?;
            params.validate()?;
            cfg.n = params.n();
            cfg.k = params.k();
            Some(params)
        }
        None => None,
    };
    cfg.validate()?;
    learning(&cfg, fixed.as_ref(), "learn")
}

/// The `rho` x `samples` x `seeds` grid; one summary row per trial.
pub fn sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    cfg.validate()?;
    learning(cfg, None, "sweep")
}

/// Ratio of `sigma_r` between two consecutive rho values, per seed and index set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scaling {
    pub step: String,
    pub rho_high: f64,
    pub rho_low: f64,
    pub ratios: Vec<f64>,
    pub median: f64,
}

/// Smallest `sigma_r / sigma_max` of one probe family at one rho.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Floor {
    pub rho: f64,
    pub family: String,
    pub min_relative: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseSummary {
    pub rho: Vec<f64>,
    pub scaling: Vec<Scaling>,
    pub floors: Vec<Floor>,
    pub failures: Vec<String>,
}

pub const FAMILIES: [&str; 4] = ["column_span", "projected_span", "h4", "h6"];

fn family(step: &str) -> Option<&'static str> {
    let last = step.rsplit('/').next().unwrap_or(step);
    FAMILIES.into_iter().find(|f| last.starts_with(f))
}

pub fn summarize_probes(rho: &[f64], rows: &[ProbeRow], failures: Vec<String>) -> DiagnoseSummary {
    let mut floors = Vec::new();
    for &r in rho {
        for f in FAMILIES {
            let ratios: Vec<f64> =
                rows.iter().filter(|p| p.rho == r && family(&p.step) == Some(f)).map(|p| p.ratio).collect();
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            floors.push(Floor { rho: r, family: f.into(), min_relative: min, rows: ratios.len() });
        }
    }
    let sigma = |r: f64, seed: u64, step: &str| {
        rows.iter().find(|p| p.rho == r && p.seed == seed && p.step == step && p.kind == "probe").map(|p| p.sigma_r)
    };
    let mut steps: Vec<String> = Vec::new();
    for p in rows {
        if p.kind == "probe" && p.step.starts_with("column_span") && !steps.contains(&p.step) {
            steps.push(p.step.clone());
        }
    }
    steps.sort();
    let mut seeds: Vec<u64> = rows.iter().map(|p| p.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut scaling = Vec::new();
    for w in rho.windows(2) {
        for step in &steps {
            let ratios: Vec<f64> = seeds
                .iter()
                .filter_map(|&s| match (sigma(w[0], s, step), sigma(w[1], s, step)) {
                    (Some(a), Some(b)) => Some(a / b),
                    _ => None,
                })
                .collect();
            scaling.push(Scaling { step: step.clone(), rho_high: w[0], rho_low: w[1], median: median(&ratios), ratios });
        }
    }
    DiagnoseSummary { rho: rho.to_vec(), scaling, floors, failures }
}

/// Pooled median over index sets of the `column_span` ratios for one rho pair.
pub fn pooled_median(s: &DiagnoseSummary, rho_high: f64) -> f64 {
    let all: Vec<f64> = s.scaling.iter().filter(|x| x.rho_high == rho_high).flat_map(|x| x.ratios.clone()).collect();
    median(&all)
}

/// Spectral probes across seeds and rho values. A single rho is expanded to
/// `[rho, rho/2]`.
pub fn diagnose(cfg: &ExperimentConfig) -> Result<DiagnoseSummary, CliError> {
    let mut cfg = cfg.clone();
    if cfg.rho.len() == 1 {
        cfg.rho = vec![cfg.rho[0], cfg.rho[0] / 2.0];
    }
    cfg.validate()?;
    let spec = cfg.moment_spec()?;
    if matches!(spec, MomentSpec::File(_)) {
        return Err(CliError::Config("diagnose generates its own instances; use exact or empirical:N".into()));
    }
    let list: Vec<Trial> = cfg
        .rho
        .iter()
        .flat_map(|&rho| cfg.seeds.iter().map(move |&seed| (seed, rho)))
        .map(|(seed, rho)| Trial { seed, rho, spec: spec.clone() })
        .collect();
    let results: Vec<_> = list.par_iter().map(|t| probe(&cfg, t)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in list.iter().zip(results) {
        match r {
            Ok(d) => rows.extend(probe_rows(&t.key(&cfg), &d)),
            Err(e) => failures.push((t.stem(), e)),
        }
    }
    let summary = summarize_probes(&cfg.rho, &rows, failures.iter().map(|(s, e)| format!("{s}: {e}")).collect());
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_csv("diagnostics.csv", &PROBE_COLUMNS, &rows)?;
    out.write_json("diagnose_summary.json", &summary)?;
    out.finish("diagnose", &cfg)?;
    for f in &summary.floors {
        println!("rho {:<8} {:<15} min sigma_r/sigma_max {:.3e} ({} rows)", f.rho, f.family, f.min_relative, f.rows);
    }
    for w in cfg.rho.windows(2) {
        println!("column_span sigma_r ratio rho {} / rho {}: median {:.3}", w[0], w[1], pooled_median(&summary, w[0]));
    }
    report_failures(failures)?;
    Ok(summary)
}

/// Checks the counterexample pair; a mismatch is a `Fixture` error.
pub fn fixture_counterexample(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let report = verify_counterexample()?;
    let mut out = OutputDir::create(&cfg.out)?;
    out.write_json("counterexample.json", &report)?;
    out.finish("fixture counterexample", cfg)?;
    println!(
        "max |dM4| = {:.3e}  |dX4|_F = {:.6}  m4_equal {}  x4_differ {}",
        report.m4_max_diff, report.x4_frobenius_diff, report.m4_equal, report.x4_differ
    );
    if !report.passed() {
        return Err(CliError::Fixture(format!(
            "max |dM4| = {:.3e}, |dX4|_F = {:.3e}",
            report.m4_max_diff, report.x4_frobenius_diff
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_by_step_name() {
        assert_eq!(family("column_span_h1"), Some("column_span"));
        assert_eq!(family("projected/h6"), Some("h6"));
        assert_eq!(family("merge_union"), None);
    }

    #[test]
    fn medians_group_by_rho_and_source() {
        let key = momgmm_core::diagnostics::RunKey { seed: 0, n: 4, k: 1, rho: 0.1, source: "exact".into() };
        let mut a = failure_row(&key, "zero-mean", 1, "ok", "", 0.0);
        a.max_covariance_error = 1.0;
        let mut b = a.clone();
        b.max_covariance_error = 3.0;
        let c = failure_row(&key, "zero-mean", 1, "RankDeficient", "", 0.0);
        let m = medians(&[a, b, c]);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].trials, m[0].ok), (3, 2));
        assert_eq!(m[0].median_max_covariance_error, 2.0);
    }
}
