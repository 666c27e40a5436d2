use std::fmt::Write as _;

use crate::error::{CliError, Result};
use crate::pipeline::{Output, ResultRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

pub fn render(record: &ResultRecord, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let text = serde_json::to_string_pretty(record)
                .map_err(|e| CliError::Config(format!("cannot serialize record: {e}")))?;
            Ok(text + "\n")
        }
        Format::Csv => Ok(csv(record)),
        Format::Table => Ok(table(record)),
    }
}

/// Column layout shared by the csv and table renderings; csv joins cells
/// with commas, table pads them. Float cells use the shortest exact
/// decimal, so reruns produce identical bytes.
fn cells(output: &Output) -> (Vec<&'static str>, Vec<Vec<String>>) {
    match output {
        Output::Curve { curve } => (
            vec!["n", "mean_loss", "stderr", "replicates", "exhausted"],
            curve
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.mean_loss.to_string(),
                        p.stderr.to_string(),
                        p.replicates.to_string(),
                        p.exhausted_support_count.to_string(),
                    ]
                })
                .collect(),
        ),
        Output::Fit { curve, fit } => (
            vec!["n", "mean_loss", "stderr", "slope", "target_slope", "r2"],
            curve
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.mean_loss.to_string(),
                        p.stderr.to_string(),
                        fit.slope.to_string(),
                        fit.target_slope.to_string(),
                        fit.r_squared.to_string(),
                    ]
                })
                .collect(),
        ),
        Output::Concentration { report } => (
            vec!["eps", "exceedance", "bound", "a_n"],
            report
                .eps_grid
                .iter()
                .enumerate()
                .map(|(i, eps)| {
                    vec![
                        eps.to_string(),
                        report.empirical_exceedance[i].to_string(),
                        report.analytic_bound[i].to_string(),
                        report.a_n.to_string(),
                    ]
                })
                .collect(),
        ),
        Output::PosteriorDp { rows } => (
            vec!["n", "statistic", "critical_value", "threshold", "pass"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.statistic.to_string(),
                        r.critical_value.to_string(),
                        r.threshold.to_string(),
                        r.pass.to_string(),
                    ]
                })
                .collect(),
        ),
        Output::PosteriorStable { rows } => (
            vec!["n", "alpha", "statistic", "critical_value", "threshold", "pass"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.alpha.to_string(),
                        r.statistic.to_string(),
                        r.critical_value.to_string(),
                        r.threshold.to_string(),
                        r.pass.to_string(),
                    ]
                })
                .collect(),
        ),
        Output::KnScaling { table } => (
            vec!["n", "q05", "q25", "q50", "q75", "q95"],
            table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.q05.to_string(),
                        r.q25.to_string(),
                        r.q50.to_string(),
                        r.q75.to_string(),
                        r.q95.to_string(),
                    ]
                })
                .collect(),
        ),
        Output::Lemmas { lemma1, lemma2 } => (
            vec!["lemma", "a", "b", "margin"],
            [("lemma1", lemma1), ("lemma2", lemma2)]
                .into_iter()
                .flat_map(|(tag, report)| {
                    report.margins.iter().map(move |m| {
                        vec![
                            tag.to_string(),
                            m.a.to_string(),
                            m.b.to_string(),
                            m.margin.to_string(),
                        ]
                    })
                })
                .collect(),
        ),
        Output::Impossibility { rows } => (
            vec!["n", "eps", "value", "lower_bound", "slack"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.eps.to_string(),
                        r.value.to_string(),
                        r.lower_bound.to_string(),
                        r.slack.to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

fn csv(record: &ResultRecord) -> String {
    let (header, rows) = cells(&record.output);
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn table(record: &ResultRecord) -> String {
    let (header, rows) = cells(&record.output);
    let mut out = String::new();
    let _ = writeln!(out, "kind              {}", record.kind);
    let _ = writeln!(out, "artifact_version  {}", record.artifact_version);
    if let Some(seed) = record.config.master_seed {
        let _ = writeln!(out, "master_seed       {seed}");
    }
    let status = match (record.invariant.checked, record.invariant.passed) {
        (false, _) => "not checked",
        (true, true) => "passed",
        (true, false) => "VIOLATED",
    };
    let _ = writeln!(out, "invariant         {status} ({})", record.invariant.details);
    out.push('\n');
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let write_row = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    let header_cells: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    write_row(&mut out, &header_cells);
    for row in &rows {
        write_row(&mut out, row);
    }
    out
}
