//! End-to-end acceptance gates. Each test checks one numbered criterion at
//! its stated tolerance and prints exactly one `criterion N PASS/FAIL` line.

mod common;

use common::{hyp1f1_oracle, hyp2f1_oracle, laguerre_half_oracle, ln_gamma_oracle, rel_err, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_lab::channel::{
    build_scenario, drop_users, sample_channels, ArrayLayout, DropLayout, Geometry, Scenario,
    ScenarioSpec,
};
use ris_lab::mc::{
    anchor_scenario, calibrate_es, compare_analytic_vs_mc, run_experiment, run_many,
    AnchorPreset, ExperimentConfig, ExperimentResult,
};
use ris_lab::phase::{random_phases, sd_los, select, Method, RisPhases};
use ris_lab::snr::{mean_snr_case1, mean_snr_case2, mean_snr_general, mean_term_ff, snr_terms};
use ris_lab::specfun::{eval_fr, eval_gr, hyp1f1, hyp2f1, laguerre_half, ln_gamma, FRParams, GRParams, SeriesControl};
use std::f64::consts::PI;
use std::sync::OnceLock;

fn verdict(number: usize, pass: bool, detail: &str) {
    println!("criterion {number} {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {number}: {detail}");
}

fn spec(k_users: usize, arrays: ArrayLayout, kappa: f64) -> ScenarioSpec {
    ScenarioSpec {
        geometry: Geometry::default(),
        arrays,
        k_users,
        n_k: vec![],
        kappa_d: kappa,
        kappa_rb: kappa,
        kappa_ur: kappa,
        es_over_sigma2: 1.0,
    }
}

/// Analytic-vs-MC equivalence: every term expectation within 3 standard
/// errors at 2·10⁵ replicates, each user's total within 1.5% linear.
#[test]
fn acceptance_01_analytic_vs_mc_equivalence() {
    let cfg = ExperimentConfig {
        spec: spec(2, ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.1 }, 1.0),
        method: Method::SdLos,
        layout: DropLayout::C,
        n_drops: 1,
        n_replicates: 200_000,
        master_seed: 1,
        cisd_tol: 1e-4,
        cisd_max_iters: 50,
    };
    let report = compare_analytic_vs_mc(&cfg).unwrap();
    let mut max_z = 0.0f64;
    let mut max_total_err = 0.0f64;
    for row in &report.rows {
        if row.term == "total" {
            max_total_err = max_total_err.max((row.mc - row.analytic).abs() / row.analytic);
        } else {
            max_z = max_z.max(row.z.abs());
        }
    }
    verdict(
        1,
        max_z < 3.0 && max_total_err < 0.015,
        &format!(
            "term expectations max |z| = {max_z:.2} (gate 3), total rel err = {:.3}% (gate 1.5%), {} replicates in {:.0} s",
            100.0 * max_total_err,
            report.total_replicates,
            report.elapsed_seconds
        ),
    );
}

/// Case-chain consistency on 10 randomized scenarios: the general engine at
/// κ_d = κ_ur = 10⁻⁸ meets case 1 within 10⁻³ relative, and with
/// κ_rb = 10⁸ meets case 2 within 10⁻³.
#[test]
fn acceptance_02_case_chain_consistency() {
    let shapes: [(usize, usize, usize, usize, f64, f64, usize, &[usize]); 10] = [
        (2, 2, 4, 2, 0.5, 0.1, 2, &[]),
        (2, 1, 3, 2, 0.5, 0.3, 3, &[]),
        (4, 1, 2, 2, 0.5, 0.5, 1, &[]),
        (2, 2, 2, 3, 0.25, 0.2, 2, &[2, 4]),
        (3, 1, 4, 1, 0.5, 0.2, 2, &[]),
        (2, 2, 4, 2, 0.5, 0.1, 4, &[]),
        (2, 1, 2, 2, 0.5, 0.4, 2, &[]),
        (4, 1, 3, 1, 0.25, 0.3, 3, &[]),
        (2, 2, 8, 1, 0.5, 0.15, 2, &[]),
        (2, 1, 4, 2, 0.5, 0.25, 4, &[]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_rel = 0.0f64;
    for (m_x, m_z, n_x, n_z, d_b, d_r, k_users, n_k) in shapes {
        let geometry = Geometry::default();
        let positions = drop_users(DropLayout::C, &geometry, k_users, &mut rng).unwrap();
        let mut sp = spec(k_users, ArrayLayout { m_x, m_z, n_x, n_z, d_b, d_r }, 1.0);
        sp.n_k = n_k.to_vec();
        sp.kappa_d = 1e-8;
        sp.kappa_ur = 1e-8;
        sp.kappa_rb = 0.2 + 2.8 * rng.gen::<f64>();

        let general = mean_snr_general(&build_scenario(&sp, &positions).unwrap()).unwrap();
        let mut limit = sp.clone();
        limit.kappa_d = 0.0;
        limit.kappa_ur = 0.0;
        let case1 = mean_snr_case1(&build_scenario(&limit, &positions).unwrap()).unwrap();
        for k in 0..k_users {
            max_rel = max_rel.max(rel_err(general.per_user[k].total, case1.per_user[k].total));
        }

        sp.kappa_rb = 1e8;
        let general = mean_snr_general(&build_scenario(&sp, &positions).unwrap()).unwrap();
        limit.kappa_rb = f64::INFINITY;
        let case2 = mean_snr_case2(&build_scenario(&limit, &positions).unwrap()).unwrap();
        for k in 0..k_users {
            max_rel = max_rel.max(rel_err(general.per_user[k].total, case2.per_user[k].total));
        }
    }
    verdict(
        2,
        max_rel < 1e-3,
        &format!("10 scenarios, both reductions: max relative gap {max_rel:.2e} (gate 1e-3)"),
    );
}

/// Special-function golden suite: the four scalar functions against exact
/// rational-series oracles (50+ points each, rel err < 1e-8), the F_R
/// Rayleigh reduction (1e-6), and |G_R| ≤ 1 + 1e-8 on a 100-point grid.
#[test]
fn acceptance_03_special_function_golden_suite() {
    let mut max_scalar = 0.0f64;
    let mut points = 0usize;

    let z_list = [-20i64, -10, -5, -2, -1, 1, 2, 5, 10, 20];
    for a in [Rat(-1, 2), Rat(1, 2), Rat(3, 2), Rat(5, 2)] {
        for b in [Rat(1, 1), Rat(2, 1)] {
            for z in z_list {
                let got = hyp1f1(a.0 as f64 / a.1 as f64, b.0 as f64, z as f64).unwrap();
                max_scalar = max_scalar.max(rel_err(got, hyp1f1_oracle(a, b, Rat(z, 1))));
                points += 1;
            }
        }
    }
    let z2 = [Rat(1, 20), Rat(1, 4), Rat(1, 2), Rat(3, 4), Rat(9, 10), Rat(19, 20)];
    for (a, b, c) in [
        (Rat(-1, 2), Rat(-1, 2), Rat(1, 1)),
        (Rat(1, 2), Rat(1, 2), Rat(2, 1)),
        (Rat(1, 2), Rat(-1, 2), Rat(1, 1)),
        (Rat(3, 2), Rat(1, 2), Rat(5, 2)),
        (Rat(1, 1), Rat(2, 1), Rat(7, 2)),
        (Rat(5, 2), Rat(1, 2), Rat(3, 1)),
        (Rat(1, 2), Rat(3, 2), Rat(9, 2)),
        (Rat(2, 1), Rat(1, 2), Rat(4, 1)),
        (Rat(1, 4), Rat(3, 4), Rat(2, 1)),
    ] {
        for z in z2 {
            let got = hyp2f1(
                a.0 as f64 / a.1 as f64,
                b.0 as f64 / b.1 as f64,
                c.0 as f64 / c.1 as f64,
                z.0 as f64 / z.1 as f64,
            )
            .unwrap();
            max_scalar = max_scalar.max(rel_err(got, hyp2f1_oracle(a, b, c, z)));
            points += 1;
        }
    }
    for j in 0..=50 {
        let x = Rat(2 * j - 50, 5);
        let got = laguerre_half(x.0 as f64 / 5.0).unwrap();
        max_scalar = max_scalar.max(rel_err(got, laguerre_half_oracle(x)));
        points += 1;
    }
    let mut gamma_points = 0usize;
    for twice_x in (1..=120u64).filter(|&t| t != 2 && t != 4) {
        let got = ln_gamma(twice_x as f64 / 2.0).unwrap();
        max_scalar = max_scalar.max(rel_err(got, ln_gamma_oracle(twice_x)));
        gamma_points += 1;
    }

    let ctl = SeriesControl::default();
    let mut max_fr = 0.0f64;
    for rho in [0.0, 0.25, 0.5, 0.75, 0.95] {
        let want = PI / 4.0 * hyp2f1(-0.5, -0.5, 1.0, rho * rho).unwrap();
        for (phase, delta) in [(0.0, 0.0), (0.9, -0.4), (PI - 0.1, 2.0)] {
            let p = FRParams { kappa_ur: 0.0, rho_abs: rho, rho_phase: phase, delta_angle: delta };
            max_fr = max_fr.max(rel_err(eval_fr(&p, &ctl).unwrap(), want));
        }
    }

    let angle_combos =
        [(0.0, 0.0, 0.0), (0.8, 0.4, -0.3), (PI - 0.2, 1.9, 2.4), (-1.1, -2.8, 0.6), (2.2, 0.0, -1.57)];
    let mut max_gr_mag = 0.0f64;
    let mut grid = 0usize;
    for kappa in [0.1, 1.0, 10.0, 100.0] {
        for rho in [0.05, 0.3, 0.6, 0.9, 0.99] {
            for (phase, ai, aj) in angle_combos {
                let p = GRParams {
                    kappa_ur: kappa,
                    rho_abs: rho,
                    rho_phase: phase,
                    angle_i: ai,
                    angle_j: aj,
                };
                max_gr_mag = max_gr_mag.max(eval_gr(&p, &ctl).unwrap().norm());
                grid += 1;
            }
        }
    }

    verdict(
        3,
        points >= 150
            && gamma_points >= 50
            && max_scalar < 1e-8
            && max_fr < 1e-6
            && grid == 100
            && max_gr_mag <= 1.0 + 1e-8,
        &format!(
            "{points}+{gamma_points} oracle points, max rel err {max_scalar:.1e} (gate 1e-8); F_R reduction {max_fr:.1e} (gate 1e-6); max |G_R| = {max_gr_mag:.10} on {grid}-point grid"
        ),
    );
}

/// SD optimality for a rank-one RIS–BS channel: on 100 realizations the LoS
/// design beats 10⁴ random candidates and every ±0.01 rad coordinate bump.
#[test]
fn acceptance_04_sd_optimality_oracle() {
    let mut sp = spec(1, ArrayLayout { m_x: 2, m_z: 1, n_x: 2, n_z: 2, d_b: 0.5, d_r: 0.1 }, 1.0);
    sp.kappa_rb = f64::INFINITY;
    let position = sp.geometry.corridor_point(10.0, 1.0);
    let s = build_scenario(&sp, &[position]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    fn snr_of(
        s: &Scenario,
        ch: &ris_lab::channel::ChannelRealization,
        coefficients: nalgebra::DVector<ris_lab::C64>,
    ) -> f64 {
        let phases = RisPhases { coefficients, partition: s.n_k.clone(), degenerate: false };
        snr_terms(s, ch, &phases, 0).unwrap().total
    }

    let mut violations = 0u64;
    let mut min_margin = f64::INFINITY;
    for _ in 0..100 {
        let ch = sample_channels(&s, &mut rng);
        let (block, _) = sd_los(&s, &ch, 0).unwrap();
        let best = snr_of(&s, &ch, block.clone());
        let allow = best * (1.0 + 1e-9);
        for _ in 0..10_000 {
            let cand = random_phases(s.n(), &s.n_k, &mut rng);
            let got = snr_of(&s, &ch, cand.coefficients);
            min_margin = min_margin.min(best - got);
            if got > allow {
                violations += 1;
            }
        }
        for i in 0..s.n() {
            for sign in [-1.0, 1.0] {
                let mut coefficients = block.clone();
                coefficients[i] *= ris_lab::C64::from_polar(1.0, sign * 0.01);
                let got = snr_of(&s, &ch, coefficients);
                min_margin = min_margin.min(best - got);
                if got > allow {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        4,
        violations == 0,
        &format!(
            "100 realizations × (10^4 candidates + 16 coordinate bumps): {violations} violations, worst margin {min_margin:.3e}"
        ),
    );
}

fn heavy_ordering_run() -> &'static Vec<ExperimentResult> {
    static HEAVY: OnceLock<Vec<ExperimentResult>> = OnceLock::new();
    HEAVY.get_or_init(|| {
        let cfg = ExperimentConfig {
            spec: spec(4, ArrayLayout { m_x: 4, m_z: 4, n_x: 16, n_z: 8, d_b: 0.5, d_r: 0.5 }, 1.0),
            method: Method::SdLos,
            layout: DropLayout::C,
            n_drops: 200,
            n_replicates: 1_000,
            master_seed: 7,
            cisd_tol: 1e-4,
            cisd_max_iters: 50,
        };
        run_many(&cfg, &[Method::SdLos, Method::Isd, Method::Cisd]).unwrap()
    })
}

fn user_mean_db(r: &ExperimentResult) -> f64 {
    10.0 * (r.mean_snr.iter().sum::<f64>() / r.mean_snr.len() as f64).log10()
}

/// Method ordering at (M=16, N=128, K=4, d_r=0.5): CISD beats SD by
/// 0.7–1.8 dB and ISD lies between them within 0.05 dB of MC slack,
/// over 200 drops × 10³ replicates.
#[test]
fn acceptance_05_method_ordering() {
    let results = heavy_ordering_run();
    let sd = user_mean_db(&results[0]);
    let isd = user_mean_db(&results[1]);
    let cisd = user_mean_db(&results[2]);
    let gap = cisd - sd;
    let between = isd >= sd - 0.05 && isd <= cisd + 0.05;
    let elapsed = results.iter().map(|r| r.elapsed_seconds).fold(0.0, f64::max);
    verdict(
        5,
        (0.7..=1.8).contains(&gap) && between,
        &format!(
            "SD {sd:.3} dB, ISD {isd:.3} dB, CISD {cisd:.3} dB; CISD−SD = {gap:.3} dB (gate [0.7, 1.8]), ISD between (slack 0.05): {between}; {elapsed:.0} s"
        ),
    );
}

/// CISD iteration counts at tolerance 1e-4: mean ∈ [4, 9] at N=128 and
/// ∈ [1.8, 3.2] at N=4, over 200 drops.
#[test]
fn acceptance_06_cisd_iteration_counts() {
    let big = heavy_ordering_run()[2].mean_iterations;
    let cfg = ExperimentConfig {
        spec: spec(4, ArrayLayout { m_x: 4, m_z: 4, n_x: 2, n_z: 2, d_b: 0.5, d_r: 0.5 }, 1.0),
        method: Method::Cisd,
        layout: DropLayout::C,
        n_drops: 200,
        n_replicates: 1_000,
        master_seed: 7,
        cisd_tol: 1e-4,
        cisd_max_iters: 50,
    };
    let small = run_experiment(&cfg).unwrap().mean_iterations;
    verdict(
        6,
        (4.0..=9.0).contains(&big) && (1.8..=3.2).contains(&small),
        &format!("mean passes: {big:.2} at N=128 (gate [4, 9]), {small:.2} at N=4 (gate [1.8, 3.2])"),
    );
}

/// Quadratic growth of the designed-subsurface power: the analytic E[f†f]
/// ratio between 2N_k and N_k elements lies in (2, 4].
#[test]
fn acceptance_07_quadratic_subsurface_growth() {
    let grid = |n: usize| match n {
        4 => (2, 2),
        8 => (4, 2),
        16 => (4, 4),
        32 => (8, 4),
        _ => unreachable!(),
    };
    let ff_at = |n: usize| {
        let (n_x, n_z) = grid(n);
        let sp = spec(1, ArrayLayout { m_x: 2, m_z: 2, n_x, n_z, d_b: 0.5, d_r: 0.1 }, 1.0);
        let s = build_scenario(&sp, &[sp.geometry.corridor_point(10.0, 1.0)]).unwrap();
        mean_term_ff(&s, 0).unwrap()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4usize, 8, 16] {
        let ratio = ff_at(2 * n) / ff_at(n);
        pass &= ratio > 2.0 && ratio <= 4.0;
        parts.push(format!("{n}→{}: {ratio:.3}", 2 * n));
    }
    verdict(7, pass, &format!("E[f†f] doubling ratios (gate (2, 4]): {}", parts.join(", ")));
}

/// Calibration round-trip: the calibrated transmit power, re-evaluated by
/// Monte-Carlo at the anchor, lands on 5.00 ± 0.05 dB.
#[test]
fn acceptance_08_calibration_round_trip() {
    let es = calibrate_es(AnchorPreset::General).unwrap();
    let mut s = anchor_scenario(AnchorPreset::General).unwrap();
    s.es_over_sigma2 = es;
    let reps = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sum = 0.0f64;
    let mut sq = 0.0f64;
    for _ in 0..reps {
        let ch = sample_channels(&s, &mut rng);
        let (phases, _) = select(&s, &ch, Method::SdLos, 1e-4, 50, &mut rng).unwrap();
        let snr = snr_terms(&s, &ch, &phases, 0).unwrap().total;
        sum += snr;
        sq += snr * snr;
    }
    let mean = sum / reps as f64;
    let se = ((sq / reps as f64 - mean * mean).max(0.0) / reps as f64).sqrt();
    let db = 10.0 * mean.log10();
    verdict(
        8,
        (4.95..=5.05).contains(&db),
        &format!(
            "MC mean SNR at calibrated power: {db:.4} dB (gate 5.00 ± 0.05, MC se {:.4} dB)",
            10.0 / std::f64::consts::LN_10 * se / mean
        ),
    );
}

/// Determinism: identical (config, seed) produce byte-identical CSV under
/// 1, 4, and 16 worker threads.
#[test]
fn acceptance_09_threaded_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("exp.toml");
    std::fs::write(
        &config_path,
        r#"
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
method = "cisd"
layout = "C"
drops = 3
replicates = 200
seed = 12345

[calibration]
es_over_sigma2 = 1.0
"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for threads in ["1", "4", "16"] {
        let out = dir.path().join(format!("out-{threads}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ris-lab"))
            .args(["simulate", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .env("RIS_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "simulate with RIS_LAB_THREADS={threads} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(out.join("simulate.csv")).unwrap());
    }
    let identical = outputs[1] == outputs[0] && outputs[2] == outputs[0];
    verdict(
        9,
        identical && !outputs[0].is_empty(),
        &format!(
            "simulate.csv identical across RIS_LAB_THREADS = 1/4/16 ({} bytes)",
            outputs[0].len()
        ),
    );
}
