use std::path::{Path, PathBuf};

/// Small configs, one per kind, sized so every invariant passes within
/// a few seconds; shared by the golden-schema and determinism tests.
pub const CONFIGS: [(&str, &str); 9] = [
    (
        "risk",
        "kind = \"risk\"\nmaster_seed = 101\nns = [50, 100, 200]\nreplicates = 60\n\n[law]\nfamily = \"zipf\"\nalpha = 0.5\nj_max = 2000\n",
    ),
    (
        "rate",
        "kind = \"rate\"\nmaster_seed = 102\nns = [512, 2048, 8192, 32768]\nreplicates = 300\n\n[law]\nfamily = \"zipf\"\nalpha = 0.5\nj_max = 200000\n",
    ),
    (
        "geometric-probe",
        "kind = \"geometric-probe\"\nmaster_seed = 103\nq = 0.5\nns = [100, 200]\nreplicates = 60\n",
    ),
    (
        "concentration",
        "kind = \"concentration\"\nmaster_seed = 104\nn = 1000\nreplicates = 200\n\n[law]\nfamily = \"zipf\"\nalpha = 0.5\nj_max = 2000\n",
    ),
    (
        "posterior-dp",
        "kind = \"posterior-dp\"\nmaster_seed = 105\nns = [5, 20]\nreplicates = 500\n",
    ),
    (
        "posterior-stable",
        "kind = \"posterior-stable\"\nmaster_seed = 106\nalphas = [0.5]\nn = 20\nreplicates = 400\n",
    ),
    (
        "kn-scaling",
        "kind = \"kn-scaling\"\nmaster_seed = 107\nalpha = 0.5\nns = [100, 400]\nreplicates = 150\n",
    ),
    ("lemmas", "kind = \"lemmas\"\nmaster_seed = 108\n"),
    (
        "impossibility",
        "kind = \"impossibility\"\nmaster_seed = 109\nns = [2, 10, 100, 1000]\n",
    ),
];

pub const CSV_HEADERS: [(&str, &str); 9] = [
    ("risk", "n,mean_loss,stderr,replicates,exhausted"),
    ("rate", "n,mean_loss,stderr,slope,target_slope,r2"),
    ("geometric-probe", "n,mean_loss,stderr,replicates,exhausted"),
    ("concentration", "eps,exceedance,bound,a_n"),
    ("posterior-dp", "n,statistic,critical_value,threshold,pass"),
    (
        "posterior-stable",
        "n,alpha,statistic,critical_value,threshold,pass",
    ),
    ("kn-scaling", "n,q05,q25,q50,q75,q95"),
    ("lemmas", "lemma,a,b,margin"),
    ("impossibility", "n,eps,value,lower_bound,slack"),
];

pub fn write_config(dir: &Path, kind: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{kind}.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

pub fn binary() -> std::process::Command {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_missmass"));
    cmd.env_remove("MISSMASS_SEED");
    cmd
}
