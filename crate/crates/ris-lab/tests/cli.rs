//! The command-line surface: exit codes, CSV shapes, the significant-digit
//! contract, manifests, and seed overrides. Everything runs the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-lab"))
}

const BASE_CONFIG: &str = r#"
[arrays]
m_x = 2
m_z = 2
n_x = 4
n_z = 2
d_b = 0.5
d_r = 0.1

[system]
k_users = 2

[run]
method = "sd_los"
layout = "C"
drops = 2
replicates = 20
seed = 77

[calibration]
es_over_sigma2 = 1.0
"#;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--config").arg(config);
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().unwrap()
}

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

/// `{:.8e}` — nine significant digits, exponent without padding.
fn is_sig9(cell: &str) -> bool {
    let body = cell.strip_prefix('-').unwrap_or(cell);
    let Some((mantissa, exp)) = body.split_once('e') else { return false };
    let Some((int, frac)) = mantissa.split_once('.') else { return false };
    let exp = exp.strip_prefix('-').unwrap_or(exp);
    int.len() == 1
        && int.chars().all(|c| c.is_ascii_digit())
        && frac.len() == 8
        && frac.chars().all(|c| c.is_ascii_digit())
        && !exp.is_empty()
        && exp.chars().all(|c| c.is_ascii_digit())
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8_lossy(&out.stdout);
    for cmd in ["validate", "mean-snr", "simulate", "compare", "reproduce"] {
        assert!(help.contains(cmd), "--help does not mention {cmd}");
    }

    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("validate").output().unwrap().status.code(), Some(2));
    let out = bin().args(["validate", "--config", "x.toml", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_accepts_the_base_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out = run(&["validate"], &config, None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("ok:"), "unexpected validate output: {text}");
}

#[test]
fn parse_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[run\nmethod = ");
    assert_eq!(run(&["validate"], &config, None).status.code(), Some(3));

    // Unknown keys are parse errors too: silent typos must not become runs.
    let config = write_config(dir.path(), "[system]\nk_userz = 2\n");
    assert_eq!(run(&["validate"], &config, None).status.code(), Some(3));

    // Missing file reads as a parse-level failure of the config stage.
    let missing = dir.path().join("nope.toml");
    let code = run(&["validate"], &missing, None).status.code();
    assert!(code == Some(3) || code == Some(6), "missing config exited {code:?}");
}

#[test]
fn validation_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    // 3 users cannot split 8 elements evenly and no explicit sizes are given.
    let body = BASE_CONFIG.replace("k_users = 2", "k_users = 3");
    let config = write_config(dir.path(), &body);
    let out = run(&["validate"], &config, None);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    let body = BASE_CONFIG.replace("d_r = 0.1", "d_r = -0.5");
    let config = write_config(dir.path(), &body);
    assert_eq!(run(&["validate"], &config, None).status.code(), Some(4));
}

#[test]
fn io_failures_exit_6() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let blocker = dir.path().join("blocked");
    std::fs::write(&blocker, "file, not a directory").unwrap();
    let out = run(&["mean-snr"], &config, Some(&blocker.join("sub")));
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_thread_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out = bin()
        .args(["validate", "--config"])
        .arg(&config)
        .env("RIS_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mean_snr_writes_nine_digit_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");
    let out = run(&["mean-snr"], &config, Some(&out_dir));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let lines = read_lines(&out_dir.join("mean_snr.csv"));
    assert_eq!(
        lines[0],
        "user,case,t_hdhd_linear,t_hdf_linear,t_hdg_linear,t_fg_linear,t_ff_linear,t_gg_linear,mean_snr_linear,mean_snr_db"
    );
    assert_eq!(lines.len(), 3, "header plus one row per user");
    for (k, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 10);
        assert_eq!(cells[0], k.to_string());
        assert_eq!(cells[1], "general");
        for cell in &cells[2..] {
            assert!(is_sig9(cell), "cell {cell} is not 9-significant-digit scientific");
        }
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "mean-snr");
    assert_eq!(manifest["master_seed"], 77);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"][0].as_str().unwrap().ends_with("mean_snr.csv"));
    assert!(manifest["finished_unix"].as_u64().unwrap() >= manifest["started_unix"].as_u64().unwrap());
}

#[test]
fn seed_override_moves_the_drop() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let csv = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = bin()
            .args(["mean-snr", "--config"])
            .arg(&config)
            .args(["--seed", seed, "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(out_dir.join("mean_snr.csv")).unwrap()
    };
    let a = csv("a", "1001");
    let b = csv("b", "1002");
    let a2 = csv("a2", "1001");
    assert_eq!(a, a2, "same seed must reproduce byte-identical output");
    assert_ne!(a, b, "different seeds must move the user drop");
}

#[test]
fn simulate_sweep_emits_one_block_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{BASE_CONFIG}\n[sweep]\neta_rb = \"0:0.5:1\"\n");
    let config = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let out = run(&["simulate"], &config, Some(&out_dir));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let lines = read_lines(&out_dir.join("simulate.csv"));
    assert_eq!(
        lines[0],
        "eta_rb,user,mean_snr_linear,mean_snr_db,stderr_linear,mean_sum_rate_bits_per_hz,mean_iterations,stderr_iterations,failed_replicates,total_replicates"
    );
    assert_eq!(lines.len(), 1 + 3 * 2, "three grid points x two users");
    let etas: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(etas, ["0.00000000e0"; 2].iter().chain(["5.00000000e-1"; 2].iter()).chain(["1.00000000e0"; 2].iter()).cloned().collect::<Vec<_>>());
}

#[test]
fn compare_covers_every_term_of_every_user() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out_dir = dir.path().join("out");
    let out = run(&["compare"], &config, Some(&out_dir));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = read_lines(&out_dir.join("compare.csv"));
    assert_eq!(lines[0], "user,term,analytic_linear,mc_linear,stderr_linear,z_score");
    assert_eq!(lines.len(), 1 + 7 * 2);
    for term in ["t_hdhd", "t_hdf", "t_hdg", "t_fg", "t_ff", "t_gg", "total"] {
        assert_eq!(lines[1..].iter().filter(|l| l.split(',').nth(1) == Some(term)).count(), 2);
    }
}
