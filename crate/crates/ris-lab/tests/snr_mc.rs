//! The closed-form mean-SNR engine against instantaneous identities and
//! Monte-Carlo estimates, the calibration fixed point, and the experiment
//! runner's reproducibility contract.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_lab::channel::{
    build_scenario, sample_channels, ArrayLayout, DropLayout, Geometry, Scenario, ScenarioSpec,
};
use ris_lab::mc::{
    anchor_scenario, calibrate_es, compare_analytic_vs_mc, run_experiment, run_many,
    AnchorPreset, ExperimentConfig, TERM_NAMES,
};
use ris_lab::phase::{random_phases, select, Method};
use ris_lab::snr::{
    mean_snr_case1, mean_snr_case2, mean_snr_general, snr_terms, sum_rate_bound, CaseTag,
};

fn spec(k_users: usize, arrays: ArrayLayout) -> ScenarioSpec {
    ScenarioSpec {
        geometry: Geometry::default(),
        arrays,
        k_users,
        n_k: vec![],
        kappa_d: 0.5,
        kappa_rb: 2.0,
        kappa_ur: 1.0,
        es_over_sigma2: 1.0,
    }
}

fn scenario_with_users(spec: &ScenarioSpec, spots: &[(f64, f64)]) -> Scenario {
    let positions: Vec<[f64; 2]> =
        spots.iter().map(|&(t, s)| spec.geometry.corridor_point(t, s)).collect();
    build_scenario(spec, &positions).unwrap()
}

/// The six-term decomposition must reassemble to the plain received-power
/// expression Es·‖h_d + H·Φ·h_ur‖² for arbitrary reflections.
#[test]
fn snr_terms_reassemble_the_received_power() {
    let sp = spec(2, ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.1 });
    let s = scenario_with_users(&sp, &[(6.0, 1.0), (15.0, -2.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let ch = sample_channels(&s, &mut rng);
        let phases = random_phases(s.n(), &s.n_k, &mut rng);
        for k in 0..2 {
            let b = snr_terms(&s, &ch, &phases, k).unwrap();
            let through = &ch.h_rb[k] * phases.coefficients.component_mul(&ch.h_ur[k]);
            let direct = (&ch.h_d[k] + through).norm_squared();
            assert!((b.total - direct).abs() < 1e-10 * direct.abs());
            let parts = b.t_hdhd + 2.0 * (b.t_hdf + b.t_hdg + b.t_fg) + b.t_ff + b.t_gg;
            assert!((b.total - parts).abs() < 1e-10 * direct.abs());
        }
    }
}

#[test]
fn snr_terms_validate_dimensions() {
    let sp = spec(2, ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.1 });
    let s = scenario_with_users(&sp, &[(6.0, 1.0), (15.0, -2.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ch = sample_channels(&s, &mut rng);
    let wrong = random_phases(6, &[3, 3], &mut rng);
    assert!(snr_terms(&s, &ch, &wrong, 0).is_err());
    let ok = random_phases(s.n(), &s.n_k, &mut rng);
    assert!(snr_terms(&s, &ch, &ok, 2).is_err());
}

/// Every closed-form term expectation against a 30k-replicate Monte-Carlo
/// estimate under the LoS design, at a parameter point where all three links
/// are genuinely Ricean (every series branch active).
#[test]
fn closed_form_terms_match_monte_carlo_at_mixed_parameters() {
    let sp = spec(2, ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.1 });
    let s = scenario_with_users(&sp, &[(6.0, 1.0), (15.0, -2.0)]);
    let analytic = mean_snr_general(&s).unwrap();
    assert_eq!(analytic.case, CaseTag::General);

    let reps = 30_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(190);
    let mut sums = vec![[0.0f64; 7]; 2];
    let mut sq = vec![[0.0f64; 7]; 2];
    for _ in 0..reps {
        let ch = sample_channels(&s, &mut rng);
        let (phases, _) = select(&s, &ch, Method::SdLos, 1e-4, 50, &mut rng).unwrap();
        for k in 0..2 {
            let b = snr_terms(&s, &ch, &phases, k).unwrap();
            let v = [b.t_hdhd, b.t_hdf, b.t_hdg, b.t_fg, b.t_ff, b.t_gg, b.total];
            for (t, &x) in v.iter().enumerate() {
                sums[k][t] += x;
                sq[k][t] += x * x;
            }
        }
    }

    for k in 0..2 {
        let a = &analytic.per_user[k];
        let want = [a.t_hdhd, a.t_hdf, a.t_hdg, a.t_fg, a.t_ff, a.t_gg, a.total];
        for t in 0..7 {
            let mean = sums[k][t] / reps as f64;
            let var = (sq[k][t] / reps as f64 - mean * mean).max(0.0);
            let se = (var / reps as f64).sqrt();
            let z = (mean - want[t]) / se.max(1e-300);
            assert!(
                z.abs() < 5.0,
                "user {k} {}: analytic {}, mc {mean} (z = {z:.2})",
                TERM_NAMES[t],
                want[t]
            );
        }
    }
}

/// Vanishing K-factors collapse the general engine onto the two Rayleigh
/// branches (which run entirely different code paths).
#[test]
fn general_engine_reduces_to_rayleigh_branches() {
    let configs = [
        (ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.1 }, 2, (4.0, 2.0)),
        (ArrayLayout { m_x: 2, m_z: 1, n_x: 3, n_z: 2, d_b: 0.5, d_r: 0.3 }, 3, (9.0, -1.0)),
        (ArrayLayout { m_x: 4, m_z: 1, n_x: 2, n_z: 2, d_b: 0.25, d_r: 0.5 }, 1, (16.0, 0.0)),
    ];
    for (arrays, k_users, start) in configs {
        let mut sp = spec(k_users, arrays);
        let spots: Vec<(f64, f64)> =
            (0..k_users).map(|i| (start.0 + 1.7 * i as f64, start.1)).collect();

        sp.kappa_d = 1e-8;
        sp.kappa_ur = 1e-8;
        sp.kappa_rb = 0.7;
        let general = mean_snr_general(&scenario_with_users(&sp, &spots)).unwrap();
        let mut limit = sp.clone();
        limit.kappa_d = 0.0;
        limit.kappa_ur = 0.0;
        let case1 = mean_snr_case1(&scenario_with_users(&limit, &spots)).unwrap();
        for k in 0..k_users {
            let (g, c) = (general.per_user[k].total, case1.per_user[k].total);
            assert!((g - c).abs() < 1e-3 * c.abs(), "case1 user {k}: {g} vs {c}");
        }

        sp.kappa_rb = 1e8;
        let general = mean_snr_general(&scenario_with_users(&sp, &spots)).unwrap();
        let mut limit = sp.clone();
        limit.kappa_d = 0.0;
        limit.kappa_ur = 0.0;
        limit.kappa_rb = f64::INFINITY;
        let case2 = mean_snr_case2(&scenario_with_users(&limit, &spots)).unwrap();
        for k in 0..k_users {
            let (g, c) = (general.per_user[k].total, case2.per_user[k].total);
            assert!((g - c).abs() < 1e-3 * c.abs(), "case2 user {k}: {g} vs {c}");
        }
    }
}

#[test]
fn rayleigh_branches_reject_ricean_scenarios() {
    let sp = spec(1, ArrayLayout { m_x: 2, m_z: 1, n_x: 2, n_z: 2, d_b: 0.5, d_r: 0.1 });
    let s = scenario_with_users(&sp, &[(10.0, 1.0)]);
    assert!(mean_snr_case1(&s).is_err());
    assert!(mean_snr_case2(&s).is_err());

    let mut rayleigh = sp.clone();
    rayleigh.kappa_d = 0.0;
    rayleigh.kappa_ur = 0.0;
    let s = scenario_with_users(&rayleigh, &[(10.0, 1.0)]);
    assert!(mean_snr_case1(&s).is_ok());
    assert!(mean_snr_case2(&s).is_err(), "case 2 additionally needs kappa_rb = inf");
}

/// The calibrated transmit power puts the anchor user's closed-form mean SNR
/// exactly on the 5 dB target.
#[test]
fn calibration_reaches_the_five_db_anchor() {
    for preset in [AnchorPreset::General, AnchorPreset::Los] {
        let es = calibrate_es(preset).unwrap();
        assert!(es > 0.0);
        let mut s = anchor_scenario(preset).unwrap();
        s.es_over_sigma2 = es;
        let report = mean_snr_general(&s).unwrap();
        let target = 10f64.powf(0.5);
        let got = report.per_user[0].total;
        assert!((got - target).abs() < 1e-9 * target, "preset {preset:?}: {got} vs {target}");
    }
}

#[test]
fn sum_rate_bound_values_and_validation() {
    let r = sum_rate_bound(&[1.0, 3.0], &[0.5, 0.5]).unwrap();
    assert!((r - 1.5).abs() < 1e-12);
    assert!(sum_rate_bound(&[1.0], &[0.5, 0.5]).is_err());
    assert!(sum_rate_bound(&[1.0, 1.0], &[0.7, 0.7]).is_err());
    assert!(sum_rate_bound(&[1.0, 1.0], &[1.5, -0.5]).is_err());
}

fn small_experiment(method: Method) -> ExperimentConfig {
    ExperimentConfig {
        spec: spec(2, ArrayLayout { m_x: 2, m_z: 1, n_x: 2, n_z: 2, d_b: 0.5, d_r: 0.1 }),
        method,
        layout: DropLayout::C,
        n_drops: 2,
        n_replicates: 50,
        master_seed: 99,
        cisd_tol: 1e-4,
        cisd_max_iters: 50,
    }
}

/// Channel draws depend only on (seed, drop, replicate), never on the method
/// being evaluated, so shared-draw batches equal isolated runs bit for bit.
#[test]
fn experiment_streams_are_method_independent() {
    let cfg = small_experiment(Method::SdLos);
    let batch = run_many(&cfg, &[Method::SdLos, Method::Isd, Method::Cisd]).unwrap();
    for result in &batch {
        let mut own = cfg.clone();
        own.method = result.method;
        let isolated = run_experiment(&own).unwrap();
        assert_eq!(result.mean_snr, isolated.mean_snr, "{}", result.method.name());
        assert_eq!(result.stderr, isolated.stderr);
        assert_eq!(result.mean_iterations, isolated.mean_iterations);
        assert_eq!(result.mean_sum_rate, isolated.mean_sum_rate);
    }
}

#[test]
fn experiments_are_reproducible_and_fully_accounted() {
    let cfg = small_experiment(Method::Cisd);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.mean_snr, b.mean_snr);
    assert_eq!(a.mean_iterations, b.mean_iterations);

    assert_eq!(a.mean_snr.len(), 2);
    assert_eq!(a.stderr.len(), 2);
    assert_eq!(a.total_replicates, 100);
    assert_eq!(a.failed_replicates, 0);
    assert!(a.mean_iterations >= 1.0);
    assert!(a.mean_sum_rate > 0.0);
    for (lin, db) in a.mean_snr.iter().zip(&a.mean_snr_db) {
        assert!((db - 10.0 * lin.log10()).abs() < 1e-12);
    }

    // Random phases draw from the replicate stream after the channel, so
    // they are reproducible too.
    let mut random = cfg.clone();
    random.method = Method::Random;
    let a = run_experiment(&random).unwrap();
    let b = run_experiment(&random).unwrap();
    assert_eq!(a.mean_snr, b.mean_snr);
}

#[test]
fn compare_report_covers_every_user_and_term() {
    let mut cfg = small_experiment(Method::SdLos);
    cfg.n_drops = 1;
    cfg.n_replicates = 300;
    let report = compare_analytic_vs_mc(&cfg).unwrap();
    assert_eq!(report.rows.len(), 7 * 2);
    assert_eq!(report.total_replicates, 300);
    for (i, row) in report.rows.iter().enumerate() {
        assert_eq!(row.user, i / 7);
        assert_eq!(row.term, TERM_NAMES[i % 7]);
        assert!(row.z.is_finite());
        assert!(row.stderr >= 0.0);
    }

    cfg.method = Method::Cisd;
    assert!(compare_analytic_vs_mc(&cfg).is_err(), "the closed form models sd_los only");
    cfg.method = Method::SdLos;
    cfg.n_drops = 0;
    assert!(compare_analytic_vs_mc(&cfg).is_err());
}
