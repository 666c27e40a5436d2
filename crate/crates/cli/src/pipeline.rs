use std::time::Instant;

use serde::{Deserialize, Serialize};

use missmass_core::bayes::{dp_posterior_check, kn_scaling, stable_posterior_check, KnScalingTable};
use missmass_core::betalab::{impossibility_profile, lemma1_report, lemma2_report, LemmaReport};
use missmass_core::montecarlo::{
    concentration_check, fit_rate, geometric_inconsistency_probe, risk_curve, ConcentrationReport,
    RateFit, RiskCurve,
};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{CliError, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// KS statistics are accepted up to this multiple of the 5% critical
/// value, leaving headroom for Monte Carlo noise at moderate replicate
/// counts while still rejecting a wrong posterior by a wide margin.
pub const KS_ACCEPT_FACTOR: f64 = 1.5;

/// The profile value may round below the closed-form floor by at most
/// this much before it counts as a violation.
pub const IMPOSSIBILITY_SLACK_FLOOR: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub checked: bool,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpRow {
    pub n: u64,
    pub statistic: f64,
    pub critical_value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableRow {
    pub alpha: f64,
    pub n: u64,
    pub statistic: f64,
    pub critical_value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpossibilityRow {
    pub n: u64,
    pub eps: f64,
    pub value: f64,
    pub lower_bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Output {
    Curve { curve: RiskCurve },
    Fit { curve: RiskCurve, fit: RateFit },
    Concentration { report: ConcentrationReport },
    PosteriorDp { rows: Vec<DpRow> },
    PosteriorStable { rows: Vec<StableRow> },
    KnScaling { table: KnScalingTable },
    Lemmas { lemma1: LemmaReport, lemma2: LemmaReport },
    Impossibility { rows: Vec<ImpossibilityRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub artifact_version: String,
    pub kind: Kind,
    pub config: ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub invariant: InvariantReport,
    pub output: Output,
}

pub fn run(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<ResultRecord> {
    let started = Instant::now();
    let (output, invariant) = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| dispatch(cfg))?
        }
        None => dispatch(cfg)?,
    };
    Ok(ResultRecord {
        artifact_version: ARTIFACT_VERSION.into(),
        kind: cfg.kind,
        config: cfg.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        invariant,
        output,
    })
}

fn dispatch(cfg: &ExperimentConfig) -> Result<(Output, InvariantReport)> {
    let seed = req(cfg.master_seed, "master_seed")?;
    match cfg.kind {
        Kind::Risk => {
            let curve = run_curve(cfg, seed)?;
            Ok((Output::Curve { curve }, unchecked("no analytic invariant for this kind")))
        }
        Kind::Rate => {
            let law_cfg = cfg.law.as_ref().ok_or_else(|| missing("law"))?;
            let alpha = law_cfg.power_exponent().ok_or_else(|| {
                CliError::Config("rate requires a power-family law".into())
            })?;
            let curve = run_curve(cfg, seed)?;
            let fit = fit_rate(&curve, alpha)?;
            let dev = (fit.slope - fit.target_slope).abs();
            let passed = dev <= 0.10 && fit.r_squared >= 0.95;
            let details = format!(
                "slope {:.4} vs target {:.4} (deviation {:.4}, limit 0.10); r2 {:.4} (floor 0.95)",
                fit.slope, fit.target_slope, dev, fit.r_squared
            );
            Ok((Output::Fit { curve, fit }, checked(passed, details)))
        }
        Kind::GeometricProbe => {
            let q = req(cfg.q, "q")?;
            let ns = cfg.ns.as_ref().ok_or_else(|| missing("ns"))?;
            let reps = req(cfg.replicates, "replicates")?;
            let curve = geometric_inconsistency_probe(q, ns, reps, seed)?;
            Ok((
                Output::Curve { curve },
                unchecked("no analytic invariant; the probe demonstrates a non-vanishing loss"),
            ))
        }
        Kind::Concentration => {
            let law_cfg = cfg.law.as_ref().ok_or_else(|| missing("law"))?;
            let law = law_cfg.build()?;
            if let Some(delta) = cfg.delta_trunc {
                law.check_residual(delta)?;
            }
            let n = req(cfg.n, "n")?;
            let reps = req(cfg.replicates, "replicates")?;
            let grid = cfg.eps_grid.as_ref().ok_or_else(|| missing("eps_grid"))?;
            let report = concentration_check(&law, n, reps, grid, seed)?;
            let mut passed = true;
            let mut parts = Vec::new();
            for (i, &eps) in report.eps_grid.iter().enumerate() {
                let bound = report.analytic_bound[i];
                let freq = report.empirical_exceedance[i];
                let threshold = exceedance_threshold(bound, reps);
                if freq > threshold {
                    passed = false;
                }
                parts.push(format!("eps={eps}: exceedance {freq:.4} vs limit {threshold:.4}"));
            }
            Ok((Output::Concentration { report }, checked(passed, parts.join("; "))))
        }
        Kind::PosteriorDp => {
            let ns = cfg.ns.as_ref().ok_or_else(|| missing("ns"))?;
            let reps = req(cfg.replicates, "replicates")?;
            let tol = req(cfg.trunc_tol, "trunc_tol")?;
            let mut rows = Vec::with_capacity(ns.len());
            for &n in ns {
                let report = dp_posterior_check(n, reps, tol, seed)?;
                rows.push(DpRow {
                    n,
                    statistic: report.statistic,
                    critical_value: report.critical_value_5pct,
                    threshold: KS_ACCEPT_FACTOR * report.critical_value_5pct,
                    pass: report.statistic < KS_ACCEPT_FACTOR * report.critical_value_5pct,
                });
            }
            let invariant = ks_invariant(rows.iter().map(|r| (r.statistic, r.threshold, r.pass)));
            Ok((Output::PosteriorDp { rows }, invariant))
        }
        Kind::PosteriorStable => {
            let alphas = cfg.alphas.as_ref().ok_or_else(|| missing("alphas"))?;
            let n = req(cfg.n, "n")?;
            let reps = req(cfg.replicates, "replicates")?;
            let tol = req(cfg.trunc_tol, "trunc_tol")?;
            let mut rows = Vec::with_capacity(alphas.len());
            for &alpha in alphas {
                let report = stable_posterior_check(alpha, n, reps, tol, seed)?;
                rows.push(StableRow {
                    alpha,
                    n,
                    statistic: report.statistic,
                    critical_value: report.critical_value_5pct,
                    threshold: KS_ACCEPT_FACTOR * report.critical_value_5pct,
                    pass: report.statistic < KS_ACCEPT_FACTOR * report.critical_value_5pct,
                });
            }
            let invariant = ks_invariant(rows.iter().map(|r| (r.statistic, r.threshold, r.pass)));
            Ok((Output::PosteriorStable { rows }, invariant))
        }
        Kind::KnScaling => {
            let alpha = req(cfg.alpha, "alpha")?;
            let ns = cfg.ns.as_ref().ok_or_else(|| missing("ns"))?;
            let reps = req(cfg.replicates, "replicates")?;
            let table = kn_scaling(alpha, ns, reps, seed)?;
            let ok = table.rows.iter().all(|r| {
                [r.q05, r.q25, r.q50, r.q75, r.q95]
                    .iter()
                    .all(|q| q.is_finite() && *q > 0.0)
            });
            Ok((
                Output::KnScaling { table },
                checked(ok, "all quantiles positive and finite".into()),
            ))
        }
        Kind::Lemmas => {
            let lemma1 = lemma1_report()?;
            let lemma2 = lemma2_report()?;
            let passed = lemma1.violations == 0 && lemma2.violations == 0;
            let details = format!(
                "lemma1 min margin {:.4} over {} pairs ({} violations); lemma2 min margin {:.4} over {} pairs ({} violations)",
                lemma1.min_margin,
                lemma1.margins.len(),
                lemma1.violations,
                lemma2.min_margin,
                lemma2.margins.len(),
                lemma2.violations
            );
            Ok((Output::Lemmas { lemma1, lemma2 }, checked(passed, details)))
        }
        Kind::Impossibility => {
            let ns = cfg.ns.as_ref().ok_or_else(|| missing("ns"))?;
            let grid = cfg.eps_grid.as_ref().ok_or_else(|| missing("eps_grid"))?;
            let mut rows = Vec::with_capacity(ns.len() * grid.len());
            let mut min_slack = f64::INFINITY;
            for &n in ns {
                for &eps in grid {
                    let value = impossibility_profile(n, eps)?;
                    let lower_bound = 1.0 - 2.0 * eps / (1.0 - eps);
                    let slack = value - lower_bound;
                    min_slack = min_slack.min(slack);
                    rows.push(ImpossibilityRow {
                        n,
                        eps,
                        value,
                        lower_bound,
                        slack,
                    });
                }
            }
            let passed = min_slack >= IMPOSSIBILITY_SLACK_FLOOR;
            let details = format!(
                "min slack {min_slack:.3e} over {} rows (floor {IMPOSSIBILITY_SLACK_FLOOR:.0e})",
                rows.len()
            );
            Ok((Output::Impossibility { rows }, checked(passed, details)))
        }
    }
}

fn run_curve(cfg: &ExperimentConfig, seed: u64) -> Result<RiskCurve> {
    let law_cfg = cfg.law.as_ref().ok_or_else(|| missing("law"))?;
    let law = law_cfg.build()?;
    if let Some(delta) = cfg.delta_trunc {
        law.check_residual(delta)?;
    }
    let ns = cfg.ns.as_ref().ok_or_else(|| missing("ns"))?;
    let reps = req(cfg.replicates, "replicates")?;
    Ok(risk_curve(&law, ns, reps, seed)?)
}

fn exceedance_threshold(bound: f64, replicates: u64) -> f64 {
    if bound >= 1.0 {
        return 1.0;
    }
    bound + 3.0 * (bound * (1.0 - bound) / replicates as f64).sqrt()
}

fn ks_invariant(rows: impl Iterator<Item = (f64, f64, bool)>) -> InvariantReport {
    let mut passed = true;
    let mut worst: Option<(f64, f64)> = None;
    for (stat, threshold, pass) in rows {
        passed &= pass;
        if worst.map_or(true, |(s, t)| stat / threshold > s / t) {
            worst = Some((stat, threshold));
        }
    }
    let details = match worst {
        Some((stat, threshold)) => {
            format!("worst KS statistic {stat:.4} vs threshold {threshold:.4}")
        }
        None => "no rows".into(),
    };
    InvariantReport {
        checked: true,
        passed,
        details,
    }
}

fn checked(passed: bool, details: String) -> InvariantReport {
    InvariantReport {
        checked: true,
        passed,
        details,
    }
}

fn unchecked(details: &str) -> InvariantReport {
    InvariantReport {
        checked: false,
        passed: true,
        details: details.into(),
    }
}

fn req<T: Copy>(field: Option<T>, name: &str) -> Result<T> {
    field.ok_or_else(|| missing(name))
}

fn missing(name: &str) -> CliError {
    CliError::Config(format!("{name} is required; run validate for details"))
}
