//! Acceptance gate for the runner: every subcommand, run twice with the
//! same config and seed but different worker counts, must produce
//! byte-identical payloads (the wall-clock field excluded).

mod common;

use common::{binary, write_config, CONFIGS};

fn run_payload(kind: &str, config: &std::path::Path, format: &str, workers: &str) -> Vec<u8> {
    let out = binary()
        .args([kind, "--config"])
        .arg(config)
        .args(["--format", format, "--workers", workers])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{kind} ({format}, workers={workers}): {:?}",
        out
    );
    out.stdout
}

fn strip_wall_clock(payload: &[u8]) -> Vec<u8> {
    let text = String::from_utf8(payload.to_vec()).unwrap();
    let kept: Vec<&str> = text
        .lines()
        .filter(|line| !line.contains("\"wall_clock_seconds\""))
        .collect();
    kept.join("\n").into_bytes()
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    for (kind, text) in CONFIGS {
        let path = write_config(dir.path(), kind, text);
        let csv_a = run_payload(kind, &path, "csv", "1");
        let csv_b = run_payload(kind, &path, "csv", "4");
        if csv_a != csv_b {
            failures.push(format!("{kind}: csv payloads differ across worker counts"));
        }
        let json_a = strip_wall_clock(&run_payload(kind, &path, "json", "1"));
        let json_b = strip_wall_clock(&run_payload(kind, &path, "json", "4"));
        if json_a != json_b {
            failures.push(format!("{kind}: json payloads differ across worker counts"));
        }
        let table_a = run_payload(kind, &path, "table", "1");
        let table_b = run_payload(kind, &path, "table", "4");
        if table_a != table_b {
            failures.push(format!("{kind}: table payloads differ across worker counts"));
        }
    }
    if failures.is_empty() {
        println!(
            "ACCEPTANCE 12 determinism across worker counts: PASS ({} kinds, csv/json/table byte-identical)",
            CONFIGS.len()
        );
    } else {
        println!(
            "ACCEPTANCE 12 determinism across worker counts: FAIL ({})",
            failures.join("; ")
        );
        std::process::exit(1);
    }
}
