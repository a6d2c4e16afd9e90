//! Command-line front end: config loading, the five experiment commands,
//! CSV emission (9 significant digits, deterministic byte-for-byte for a
//! fixed seed), and a JSON manifest per run.

use crate::channel::{build_scenario, drop_users, Scenario};
use crate::config::{parse_sweep, Config};
use crate::error::{Error, Result};
use crate::mc::{
    compare_analytic_vs_mc, run_experiment, run_many, ExperimentConfig, ExperimentResult,
};
use crate::phase::Method;
use crate::rng::{stream, TAG_DROP};
use crate::snr::{mean_snr_case1, mean_snr_case2, mean_snr_general, sum_rate_bound};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

const CONFIG_HELP: &str = "\
CONFIG KEYS (TOML; every key optional, defaults shown; unknown keys are errors):
  [geometry]    ris_distance = 40.0 (m), ris_angle = 0.785398163 (rad),
                corridor_length = 20.0, corridor_half_width = 2.5,
                exclusion_radius = 1.0 (all m)
  [arrays]      m_x = 4, m_z = 4 (BS, M = m_x*m_z), n_x = 16, n_z = 8
                (RIS, N = n_x*n_z), d_b = 0.5, d_r = 0.1 (spacings, wavelengths)
  [channel]     kappa_d = 1.0, kappa_rb = 1.0, kappa_ur = 1.0
                (Ricean K-factors, linear; in [0, 1e3] or inf)
  [system]      k_users = 1, n_k = [] (explicit subsurface sizes; empty = N/K)
  [run]         method = \"sd_los\" (sd_los|sd_svd|isd|cisd|random),
                layout = \"C\" (A|B|C), drops = 100, replicates = 1000, seed = 1
  [cisd]        tol = 1e-4, max_iters = 50
  [calibration] anchor = \"general\" (general|los) or es_over_sigma2 = <linear>
  [sweep]       eta_rb = \"start:step:end\" (optional; simulate only)

ENVIRONMENT:
  RIS_LAB_THREADS   worker-thread cap; 0 or unset = one per core

EXIT CODES:
  0 ok, 2 usage, 3 config parse, 4 validation/domain, 5 series
  non-convergence, 6 runtime failure";

#[derive(Parser)]
#[command(
    name = "ris-lab",
    version,
    about = "Multi-frequency multi-user RIS phase-selection experiments",
    after_help = CONFIG_HELP
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a config, reporting every violation
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-form per-user mean-SNR term breakdown at the seed's first drop
    MeanSnr {
        #[arg(long)]
        config: PathBuf,
        /// Override [run].seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Monte-Carlo experiment for the configured method (honours [sweep])
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Term-by-term analytic-vs-MC z-scores (requires method = sd_los)
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reference-table grids at desk scale, with published values as columns
    Reproduce {
        target: ReproduceTarget,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReproduceTarget {
    Table1,
    Table3,
    Table5Trend,
    Fig3Curve,
}

impl ReproduceTarget {
    fn name(&self) -> &'static str {
        match self {
            ReproduceTarget::Table1 => "table1",
            ReproduceTarget::Table3 => "table3",
            ReproduceTarget::Table5Trend => "table5-trend",
            ReproduceTarget::Fig3Curve => "fig3-curve",
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 2 };
        }
    };
    let threads = match init_thread_pool() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Validate { config } => cmd_validate(config),
        Cmd::MeanSnr { config, seed, out } => cmd_mean_snr(config, *seed, out, &threads),
        Cmd::Simulate { config, seed, out } => cmd_simulate(config, *seed, out, &threads),
        Cmd::Compare { config, seed, out } => cmd_compare(config, *seed, out, &threads),
        Cmd::Reproduce { target, config, seed, out } => {
            cmd_reproduce(*target, config, *seed, out, &threads)
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_thread_pool() -> std::result::Result<String, String> {
    match std::env::var("RIS_LAB_THREADS") {
        Err(_) => Ok("auto".into()),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("RIS_LAB_THREADS = {v:?} is not a non-negative integer"))?;
            if n == 0 {
                return Ok("auto".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("thread pool: {e}"))?;
            Ok(n.to_string())
        }
    }
}

/// 9 significant digits; the CSV determinism contract hangs on this.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn load(config: &Path, seed: Option<u64>) -> Result<Config> {
    let mut cfg = Config::load(config)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn cmd_validate(config: &Path) -> Result<()> {
    let cfg = Config::load(config)?;
    let exp = cfg.to_experiment()?;
    println!(
        "ok: K={} M={} N={} n_k={:?} method={} layout={:?} drops={} replicates={} Es/sigma2={}",
        exp.spec.k_users,
        exp.spec.arrays.m(),
        exp.spec.arrays.n(),
        crate::channel::resolve_partition(
            exp.spec.k_users,
            exp.spec.arrays.n(),
            &exp.spec.n_k
        )?,
        exp.method.name(),
        exp.layout,
        exp.n_drops,
        exp.n_replicates,
        exp.spec.es_over_sigma2,
    );
    Ok(())
}

/// The first drop of the configured seed, shared by `mean-snr` and the
/// analytic halves of `reproduce`.
fn drop_scenario(exp: &ExperimentConfig, drop: u64) -> Result<Scenario> {
    let mut rng = stream(exp.master_seed, drop, 0, TAG_DROP);
    let positions = drop_users(exp.layout, &exp.spec.geometry, exp.spec.k_users, &mut rng)?;
    build_scenario(&exp.spec, &positions)
}

fn cmd_mean_snr(config: &Path, seed: Option<u64>, out: &Path, threads: &str) -> Result<()> {
    let started = now_unix();
    let cfg = load(config, seed)?;
    let exp = cfg.to_experiment()?;
    let scenario = drop_scenario(&exp, 0)?;
    let rayleigh = cfg.channel.kappa_d == 0.0 && cfg.channel.kappa_ur == 0.0;
    let report = if rayleigh && cfg.channel.kappa_rb.is_infinite() {
        mean_snr_case2(&scenario)?
    } else if rayleigh {
        mean_snr_case1(&scenario)?
    } else {
        mean_snr_general(&scenario)?
    };

    let mut lines = vec![
        "user,case,t_hdhd_linear,t_hdf_linear,t_hdg_linear,t_fg_linear,t_ff_linear,t_gg_linear,mean_snr_linear,mean_snr_db"
            .to_string(),
    ];
    for (k, b) in report.per_user.iter().enumerate() {
        lines.push(format!(
            "{k},{},{},{},{},{},{},{},{},{}",
            report.case.name(),
            sig9(b.t_hdhd),
            sig9(b.t_hdf),
            sig9(b.t_hdg),
            sig9(b.t_fg),
            sig9(b.t_ff),
            sig9(b.t_gg),
            sig9(b.total),
            sig9(10.0 * b.total.log10()),
        ));
    }
    let csv = write_csv(out, "mean_snr.csv", &lines)?;
    write_manifest(ManifestInputs {
        command: "mean-snr",
        target: None,
        config,
        master_seed: exp.master_seed,
        threads,
        started,
        outputs: vec![csv],
        notes: format!("closed-form engine, case {}, drop 0 positions", report.case.name()),
        out,
    })
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Path, threads: &str) -> Result<()> {
    let started = now_unix();
    let cfg = load(config, seed)?;
    let base = cfg.to_experiment()?;

    let mut lines = vec![
        "eta_rb,user,mean_snr_linear,mean_snr_db,stderr_linear,mean_sum_rate_bits_per_hz,mean_iterations,stderr_iterations,failed_replicates,total_replicates"
            .to_string(),
    ];
    let notes;
    match &cfg.sweep.eta_rb {
        Some(spec) => {
            let grid = parse_sweep(spec)?;
            for &eta in &grid {
                let mut exp = base.clone();
                exp.spec.kappa_rb = kappa_from_eta(eta)?;
                let result = run_experiment(&exp)?;
                push_simulate_rows(&mut lines, eta, &result);
            }
            notes = format!("eta_rb sweep over {} points: {spec}", grid.len());
        }
        None => {
            let result = run_experiment(&base)?;
            let eta = if base.spec.kappa_rb.is_infinite() {
                1.0
            } else {
                (base.spec.kappa_rb / (1.0 + base.spec.kappa_rb)).sqrt()
            };
            push_simulate_rows(&mut lines, eta, &result);
            notes = format!(
                "method {} over {} drops x {} replicates",
                base.method.name(),
                base.n_drops,
                base.n_replicates
            );
        }
    }
    let csv = write_csv(out, "simulate.csv", &lines)?;
    write_manifest(ManifestInputs {
        command: "simulate",
        target: None,
        config,
        master_seed: base.master_seed,
        threads,
        started,
        outputs: vec![csv],
        notes,
        out,
    })
}

fn push_simulate_rows(lines: &mut Vec<String>, eta: f64, r: &ExperimentResult) {
    for k in 0..r.mean_snr.len() {
        lines.push(format!(
            "{},{k},{},{},{},{},{},{},{},{}",
            sig9(eta),
            sig9(r.mean_snr[k]),
            sig9(r.mean_snr_db[k]),
            sig9(r.stderr[k]),
            sig9(r.mean_sum_rate),
            sig9(r.mean_iterations),
            sig9(r.stderr_iterations),
            r.failed_replicates,
            r.total_replicates,
        ));
    }
}

fn kappa_from_eta(eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            context: "sweep",
            message: format!("eta_rb = {eta} outside [0, 1]"),
        });
    }
    if eta >= 1.0 - 1e-12 {
        Ok(f64::INFINITY)
    } else {
        Ok(eta * eta / (1.0 - eta * eta))
    }
}

fn cmd_compare(config: &Path, seed: Option<u64>, out: &Path, threads: &str) -> Result<()> {
    let started = now_unix();
    let cfg = load(config, seed)?;
    let exp = cfg.to_experiment()?;
    let report = compare_analytic_vs_mc(&exp)?;
    let mut lines =
        vec!["user,term,analytic_linear,mc_linear,stderr_linear,z_score".to_string()];
    for row in &report.rows {
        lines.push(format!(
            "{},{},{},{},{},{}",
            row.user,
            row.term,
            sig9(row.analytic),
            sig9(row.mc),
            sig9(row.stderr),
            sig9(row.z),
        ));
    }
    let csv = write_csv(out, "compare.csv", &lines)?;
    write_manifest(ManifestInputs {
        command: "compare",
        target: None,
        config,
        master_seed: exp.master_seed,
        threads,
        started,
        outputs: vec![csv],
        notes: format!(
            "sd_los analytic vs MC; {} failed of {} replicates",
            report.failed_replicates, report.total_replicates
        ),
        out,
    })
}

// ---------------------------------------------------------------------------
// Reference-table reproduction. Published values ride along as columns; the
// computed columns run at the config's desk-scale drops/replicates, so gaps
// and trends are the comparison target, not absolute calibration.
// ---------------------------------------------------------------------------

/// (N, n_x, n_z) splits used by the reference figures.
const N_GRID: [(usize, usize, usize); 6] =
    [(4, 2, 2), (8, 4, 2), (16, 4, 4), (32, 8, 4), (64, 8, 8), (128, 16, 8)];

/// Published mean SNR in dB: (N, SD @ d_r=0.1, CISD @ 0.1, SD @ 0.5, CISD @ 0.5).
const TABLE1: [(usize, f64, f64, f64, f64); 6] = [
    (4, -3.24, -3.18, -3.19, -3.17),
    (8, -1.05, -0.76, -2.52, -2.45),
    (16, 0.85, 1.23, -1.08, -0.89),
    (32, 2.82, 3.23, 0.13, 0.72),
    (64, 5.23, 5.55, 1.66, 2.51),
    (128, 8.65, 9.48, 5.00, 6.24),
];

/// Published mean CISD pass counts: (N, d_r=0.1, d_r=0.5).
const TABLE3: [(usize, f64, f64); 6] = [
    (4, 2.40, 2.35),
    (8, 2.65, 2.56),
    (16, 2.96, 2.96),
    (32, 3.50, 3.96),
    (64, 4.12, 5.04),
    (128, 5.42, 6.60),
];

/// Published SD sum-rate increase (bits/s/Hz) from η_rb = 0 to 1:
/// (M, m_x, m_z, N, n_x, n_z, increase).
const TABLE5: [(usize, usize, usize, usize, usize, usize, f64); 5] = [
    (8, 4, 2, 256, 16, 16, 2.62),
    (8, 4, 2, 128, 16, 8, 2.18),
    (8, 4, 2, 64, 8, 8, 1.62),
    (32, 8, 4, 256, 16, 16, 1.39),
    (32, 8, 4, 128, 16, 8, 1.16),
];

/// The multi-user system shared by the table1/table3/fig3 targets:
/// M = 16 (4×4), K = 4, d_b = 0.5, all K-factors 1.
fn reference_system(cfg: &Config, n_x: usize, n_z: usize, d_r: f64) -> Config {
    let mut c = cfg.clone();
    c.arrays.m_x = 4;
    c.arrays.m_z = 4;
    c.arrays.n_x = n_x;
    c.arrays.n_z = n_z;
    c.arrays.d_b = 0.5;
    c.arrays.d_r = d_r;
    c.channel.kappa_d = 1.0;
    c.channel.kappa_rb = 1.0;
    c.channel.kappa_ur = 1.0;
    c.system.k_users = 4;
    c.system.n_k = Vec::new();
    c
}

/// Across-user aggregate: dB of the user-mean linear SNR, with the standard
/// errors combined as independent.
fn user_mean_db(r: &ExperimentResult) -> (f64, f64) {
    let k = r.mean_snr.len() as f64;
    let mean = r.mean_snr.iter().sum::<f64>() / k;
    let se = r.stderr.iter().map(|s| s * s).sum::<f64>().sqrt() / k;
    (10.0 * mean.log10(), se)
}

fn cmd_reproduce(
    target: ReproduceTarget,
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    threads: &str,
) -> Result<()> {
    let started = now_unix();
    let mut cfg = load(config, seed)?;
    cfg.to_experiment()?; // surface validation/calibration errors up front
    // pin the power scale once so every grid point shares it
    let es = cfg.resolve_es()?;
    cfg.calibration.anchor = None;
    cfg.calibration.es_over_sigma2 = Some(es);

    let (file, lines) = match target {
        ReproduceTarget::Table1 => ("table1.csv", reproduce_table1(&cfg)?),
        ReproduceTarget::Table3 => ("table3.csv", reproduce_table3(&cfg)?),
        ReproduceTarget::Table5Trend => ("table5_trend.csv", reproduce_table5(&cfg)?),
        ReproduceTarget::Fig3Curve => ("fig3_curve.csv", reproduce_fig3(&cfg)?),
    };
    let csv = write_csv(out, file, &lines)?;
    write_manifest(ManifestInputs {
        command: "reproduce",
        target: Some(target.name()),
        config,
        master_seed: cfg.run.seed,
        threads,
        started,
        outputs: vec![csv],
        notes: format!(
            "desk scale: {} drops x {} replicates per grid point (reference protocol: 1e4 x 1e6); Es/sigma2 pinned at {es:.6e}",
            cfg.run.drops, cfg.run.replicates
        ),
        out,
    })
}

fn reproduce_table1(cfg: &Config) -> Result<Vec<String>> {
    let mut lines = vec![
        "n,d_r_wavelengths,method,mean_snr_db,stderr_linear,paper_value_db".to_string(),
    ];
    for (i, &(n, n_x, n_z)) in N_GRID.iter().enumerate() {
        let paper = TABLE1[i];
        debug_assert_eq!(paper.0, n);
        for (d_r, paper_sd, paper_cisd) in [(0.1, paper.1, paper.2), (0.5, paper.3, paper.4)] {
            let exp = reference_system(cfg, n_x, n_z, d_r).to_experiment()?;
            let results = run_many(&exp, &[Method::SdLos, Method::Cisd])?;
            for (r, paper_db) in results.iter().zip([paper_sd, paper_cisd]) {
                let (db, se) = user_mean_db(r);
                lines.push(format!(
                    "{n},{},{},{},{},{}",
                    sig9(d_r),
                    r.method.name(),
                    sig9(db),
                    sig9(se),
                    sig9(paper_db),
                ));
            }
        }
    }
    Ok(lines)
}

fn reproduce_table3(cfg: &Config) -> Result<Vec<String>> {
    let mut lines = vec![
        "n,d_r_wavelengths,mean_iterations,stderr_iterations,paper_value".to_string(),
    ];
    for (i, &(n, n_x, n_z)) in N_GRID.iter().enumerate() {
        let paper = TABLE3[i];
        debug_assert_eq!(paper.0, n);
        for (d_r, paper_iters) in [(0.1, paper.1), (0.5, paper.2)] {
            let mut sub = reference_system(cfg, n_x, n_z, d_r);
            sub.run.method = Method::Cisd;
            let result = run_experiment(&sub.to_experiment()?)?;
            lines.push(format!(
                "{n},{},{},{},{}",
                sig9(d_r),
                sig9(result.mean_iterations),
                sig9(result.stderr_iterations),
                sig9(paper_iters),
            ));
        }
    }
    Ok(lines)
}

fn reproduce_table5(cfg: &Config) -> Result<Vec<String>> {
    let mut lines = vec![
        "m,n,sum_rate_eta0_bits_per_hz,sum_rate_eta1_bits_per_hz,increase_bits_per_hz,paper_increase_bits_per_hz"
            .to_string(),
    ];
    for &(m, m_x, m_z, n, n_x, n_z, paper) in &TABLE5 {
        let mut rates = [0.0f64; 2];
        for (slot, kappa_rb) in [(0usize, 0.0), (1usize, f64::INFINITY)] {
            let mut sub = reference_system(cfg, n_x, n_z, 0.1);
            sub.arrays.m_x = m_x;
            sub.arrays.m_z = m_z;
            sub.channel.kappa_rb = kappa_rb;
            let exp = sub.to_experiment()?;
            // analytic engine per drop: the SD rate bound needs only E[SNR]
            let mut rate = 0.0;
            for drop in 0..exp.n_drops {
                let scenario = drop_scenario(&exp, drop)?;
                let report = mean_snr_general(&scenario)?;
                let snrs: Vec<f64> = report.per_user.iter().map(|b| b.total).collect();
                let fractions = vec![1.0 / snrs.len() as f64; snrs.len()];
                rate += sum_rate_bound(&snrs, &fractions)? / exp.n_drops as f64;
            }
            rates[slot] = rate;
        }
        lines.push(format!(
            "{m},{n},{},{},{},{}",
            sig9(rates[0]),
            sig9(rates[1]),
            sig9(rates[1] - rates[0]),
            sig9(paper),
        ));
    }
    Ok(lines)
}

fn reproduce_fig3(cfg: &Config) -> Result<Vec<String>> {
    let mut lines = vec!["n,method,mean_snr_db,stderr_linear".to_string()];
    for &(n, n_x, n_z) in &N_GRID {
        let exp = reference_system(cfg, n_x, n_z, 0.5).to_experiment()?;

        let mut analytic = 0.0;
        for drop in 0..exp.n_drops {
            let scenario = drop_scenario(&exp, drop)?;
            let report = mean_snr_general(&scenario)?;
            let mean =
                report.per_user.iter().map(|b| b.total).sum::<f64>() / report.per_user.len() as f64;
            analytic += mean / exp.n_drops as f64;
        }
        lines.push(format!(
            "{n},analytic_sd,{},{}",
            sig9(10.0 * analytic.log10()),
            sig9(0.0),
        ));

        for r in run_many(&exp, &[Method::SdLos, Method::Isd, Method::Cisd])? {
            let (db, se) = user_mean_db(&r);
            lines.push(format!("{n},{},{},{}", r.method.name(), sig9(db), sig9(se)));
        }
    }
    Ok(lines)
}

// ---------------------------------------------------------------------------
// Output plumbing.
// ---------------------------------------------------------------------------

fn write_csv(out: &Path, name: &str, lines: &[String]) -> Result<String> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    let mut body = lines.join("\n");
    body.push('\n');
    std::fs::write(&path, body)?;
    println!("wrote {}", path.display());
    Ok(name.to_string())
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

struct ManifestInputs<'a> {
    command: &'static str,
    target: Option<&'static str>,
    config: &'a Path,
    master_seed: u64,
    threads: &'a str,
    started: u64,
    outputs: Vec<String>,
    notes: String,
    out: &'a Path,
}

fn write_manifest(m: ManifestInputs<'_>) -> Result<()> {
    let config_text = std::fs::read_to_string(m.config)?;
    let digest = Sha256::digest(config_text.as_bytes());
    let manifest = serde_json::json!({
        "tool": "ris-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": m.command,
        "target": m.target,
        "config_path": m.config.display().to_string(),
        "config_sha256": format!("{digest:x}"),
        "master_seed": m.master_seed,
        "threads": m.threads,
        "started_unix": m.started,
        "finished_unix": now_unix(),
        "outputs": m.outputs,
        "notes": m.notes,
    });
    let path = m.out.join("manifest.json");
    std::fs::write(&path, format!("{:#}\n", manifest))?;
    println!("wrote {}", path.display());
    Ok(())
}
