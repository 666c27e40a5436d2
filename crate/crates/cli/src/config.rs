use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use missmass_core::laws::{make_geometric, make_zipf, make_zipf_log, DiscreteLaw};
use missmass_core::montecarlo::DEFAULT_EPS_GRID;

use crate::error::{CliError, Result};

pub const DEFAULT_DP_TRUNC_TOL: f64 = 1e-12;
pub const DEFAULT_STABLE_TRUNC_TOL: f64 = 1e-6;
pub const DEFAULT_IMPOSSIBILITY_EPS: [f64; 5] = [0.05, 0.1, 0.15, 0.2, 0.24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Risk,
    Rate,
    GeometricProbe,
    Concentration,
    PosteriorDp,
    PosteriorStable,
    KnScaling,
    Lemmas,
    Impossibility,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Risk => "risk",
            Kind::Rate => "rate",
            Kind::GeometricProbe => "geometric-probe",
            Kind::Concentration => "concentration",
            Kind::PosteriorDp => "posterior-dp",
            Kind::PosteriorStable => "posterior-stable",
            Kind::KnScaling => "kn-scaling",
            Kind::Lemmas => "lemmas",
            Kind::Impossibility => "impossibility",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum LawConfig {
    Zipf {
        alpha: f64,
        j_max: usize,
    },
    ZipfLog {
        alpha: f64,
        beta_log: f64,
        j_max: usize,
    },
    Geometric {
        q: f64,
        j_max: usize,
    },
}

impl LawConfig {
    pub fn build(&self) -> missmass_core::Result<DiscreteLaw> {
        match *self {
            LawConfig::Zipf { alpha, j_max } => make_zipf(alpha, j_max),
            LawConfig::ZipfLog {
                alpha,
                beta_log,
                j_max,
            } => make_zipf_log(alpha, beta_log, j_max),
            LawConfig::Geometric { q, j_max } => make_geometric(q, j_max),
        }
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            LawConfig::Zipf { alpha, .. } | LawConfig::ZipfLog { alpha, .. } => Some(alpha),
            LawConfig::Geometric { .. } => None,
        }
    }
}

/// One experiment per file. Fields beyond `kind` and `master_seed` apply
/// only to the kinds that consume them; `validate` rejects strays so a
/// config echo never carries silent dead weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<LawConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trunc_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_trunc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
}

impl ExperimentConfig {
    /// Resolves the seed override and materializes per-kind defaults, so
    /// the echoed config alone reproduces the run.
    pub fn effective(mut self, env_seed: Option<u64>) -> Self {
        if let Some(seed) = env_seed {
            self.master_seed = Some(seed);
        }
        match self.kind {
            Kind::Concentration => {
                self.eps_grid.get_or_insert_with(|| DEFAULT_EPS_GRID.to_vec());
            }
            Kind::Impossibility => {
                self.eps_grid
                    .get_or_insert_with(|| DEFAULT_IMPOSSIBILITY_EPS.to_vec());
            }
            Kind::PosteriorDp => {
                self.trunc_tol.get_or_insert(DEFAULT_DP_TRUNC_TOL);
            }
            Kind::PosteriorStable => {
                self.trunc_tol.get_or_insert(DEFAULT_STABLE_TRUNC_TOL);
            }
            _ => {}
        }
        self
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var("MISSMASS_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            CliError::Config(format!(
                "MISSMASS_SEED must be an unsigned 64-bit decimal, got {raw:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("MISSMASS_SEED: {e}"))),
    }
}

/// All precondition violations in one pass; an empty list guarantees the
/// run dispatches without hitting a parameter or domain error.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut diags = Vec::new();
    if cfg.master_seed.is_none() {
        diags.push("master_seed is required; set it in the config or via MISSMASS_SEED".into());
    }
    check_applicability(cfg, &mut diags);
    match cfg.kind {
        Kind::Risk | Kind::Rate => {
            check_law(cfg, &mut diags);
            check_grid(cfg, 1, &mut diags);
            check_replicates(cfg, &mut diags);
            if cfg.kind == Kind::Rate {
                if let Some(LawConfig::Geometric { .. }) = cfg.law {
                    diags.push(
                        "rate requires a power-family law to define the target slope".into(),
                    );
                }
                if cfg.ns.as_ref().is_some_and(|ns| ns.len() < 3) {
                    diags.push("rate fitting needs at least 3 sample sizes".into());
                }
            }
        }
        Kind::GeometricProbe => {
            match cfg.q {
                None => diags.push("q is required".into()),
                Some(q) if !q.is_finite() || q <= 0.0 || q >= 1.0 => {
                    diags.push(format!("q outside (0,1): {q}"));
                }
                _ => {}
            }
            check_grid(cfg, 1, &mut diags);
            check_replicates(cfg, &mut diags);
        }
        Kind::Concentration => {
            check_law(cfg, &mut diags);
            match cfg.n {
                None => diags.push("n is required".into()),
                Some(0) => diags.push("n must be at least 1".into()),
                _ => {}
            }
            check_replicates(cfg, &mut diags);
            if let Some(grid) = &cfg.eps_grid {
                if grid.is_empty() {
                    diags.push("eps_grid must not be empty".into());
                }
                for &eps in grid {
                    if !eps.is_finite() || eps <= 0.0 {
                        diags.push(format!("eps must be positive and finite, got {eps}"));
                    }
                }
            }
        }
        Kind::PosteriorDp => {
            check_grid(cfg, 1, &mut diags);
            check_replicates(cfg, &mut diags);
            check_trunc_tol(cfg, &mut diags);
        }
        Kind::PosteriorStable => {
            match &cfg.alphas {
                None => diags.push("alphas is required".into()),
                Some(alphas) if alphas.is_empty() => {
                    diags.push("alphas must not be empty".into());
                }
                Some(alphas) => {
                    for &a in alphas {
                        check_unit_alpha(a, &mut diags);
                    }
                }
            }
            match cfg.n {
                None => diags.push("n is required".into()),
                Some(0) => diags.push("n must be at least 1".into()),
                _ => {}
            }
            check_replicates(cfg, &mut diags);
            check_trunc_tol(cfg, &mut diags);
        }
        Kind::KnScaling => {
            match cfg.alpha {
                None => diags.push("alpha is required".into()),
                Some(a) => check_unit_alpha(a, &mut diags),
            }
            check_grid(cfg, 1, &mut diags);
            check_replicates(cfg, &mut diags);
        }
        Kind::Lemmas => {}
        Kind::Impossibility => {
            check_grid(cfg, 2, &mut diags);
            match &cfg.eps_grid {
                None => {}
                Some(grid) if grid.is_empty() => diags.push("eps_grid must not be empty".into()),
                Some(grid) => {
                    for &eps in grid {
                        if !eps.is_finite() || eps <= 0.0 || eps >= 0.25 {
                            diags.push(format!("eps outside (0, 1/4): {eps}"));
                        }
                    }
                }
            }
        }
    }
    diags
}

fn check_applicability(cfg: &ExperimentConfig, diags: &mut Vec<String>) {
    use Kind::*;
    let fields: [(&str, bool, &[Kind]); 10] = [
        ("law", cfg.law.is_some(), &[Risk, Rate, Concentration]),
        ("q", cfg.q.is_some(), &[GeometricProbe]),
        ("alpha", cfg.alpha.is_some(), &[KnScaling]),
        ("alphas", cfg.alphas.is_some(), &[PosteriorStable]),
        ("n", cfg.n.is_some(), &[Concentration, PosteriorStable]),
        (
            "ns",
            cfg.ns.is_some(),
            &[Risk, Rate, GeometricProbe, PosteriorDp, KnScaling, Impossibility],
        ),
        (
            "replicates",
            cfg.replicates.is_some(),
            &[
                Risk,
                Rate,
                GeometricProbe,
                Concentration,
                PosteriorDp,
                PosteriorStable,
                KnScaling,
            ],
        ),
        (
            "trunc_tol",
            cfg.trunc_tol.is_some(),
            &[PosteriorDp, PosteriorStable],
        ),
        (
            "delta_trunc",
            cfg.delta_trunc.is_some(),
            &[Risk, Rate, Concentration],
        ),
        (
            "eps_grid",
            cfg.eps_grid.is_some(),
            &[Concentration, Impossibility],
        ),
    ];
    for (name, present, used_by) in fields {
        if present && !used_by.contains(&cfg.kind) {
            diags.push(format!("field {name} is not used by kind {}", cfg.kind));
        }
    }
}

fn check_law(cfg: &ExperimentConfig, diags: &mut Vec<String>) {
    let Some(law_cfg) = &cfg.law else {
        diags.push("law table is required".into());
        return;
    };
    match law_cfg.build() {
        Err(e) => diags.push(e.to_string()),
        Ok(law) => {
            if let Some(delta) = cfg.delta_trunc {
                if let Err(e) = law.check_residual(delta) {
                    diags.push(e.to_string());
                }
            }
        }
    }
}

fn check_grid(cfg: &ExperimentConfig, min_n: u64, diags: &mut Vec<String>) {
    let Some(ns) = &cfg.ns else {
        diags.push("ns is required".into());
        return;
    };
    if ns.is_empty() {
        diags.push("ns must not be empty".into());
        return;
    }
    if ns[0] < min_n {
        diags.push(format!("sample sizes must be at least {min_n}, got {}", ns[0]));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        diags.push("sample sizes must be strictly increasing".into());
    }
}

fn check_replicates(cfg: &ExperimentConfig, diags: &mut Vec<String>) {
    match cfg.replicates {
        None => diags.push("replicates is required".into()),
        Some(r) if r < 2 => diags.push(format!("replicates must be at least 2, got {r}")),
        _ => {}
    }
}

fn check_trunc_tol(cfg: &ExperimentConfig, diags: &mut Vec<String>) {
    if let Some(tol) = cfg.trunc_tol {
        if !tol.is_finite() || tol <= 0.0 || tol >= 1.0 {
            diags.push(format!("trunc_tol must lie in (0, 1), got {tol}"));
        }
    }
}

fn check_unit_alpha(alpha: f64, diags: &mut Vec<String>) {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        diags.push(format!("alpha outside (0,1): {alpha}"));
    }
}
