//! Runs every phase-selection method on one sampled realization of a
//! four-user drop and prints the per-user SNRs side by side.

use ris_lab::channel::{build_scenario, drop_users, ArrayLayout, DropLayout, Geometry, ScenarioSpec};
use ris_lab::phase::{select, Method};
use ris_lab::rng::{stream, TAG_DROP, TAG_REPLICATE};
use ris_lab::snr::snr_terms;
use ris_lab::{channel::sample_channels, Result};

fn main() -> Result<()> {
    let geometry = Geometry::default();
    let spec = ScenarioSpec {
        geometry,
        arrays: ArrayLayout { m_x: 4, m_z: 4, n_x: 8, n_z: 4, d_b: 0.5, d_r: 0.1 },
        k_users: 4,
        n_k: Vec::new(),
        kappa_d: 1.0,
        kappa_rb: 1.0,
        kappa_ur: 1.0,
        es_over_sigma2: 1e9,
    };
    let seed = 15u64;
    let mut drop_rng = stream(seed, 0, 0, TAG_DROP);
    let positions = drop_users(DropLayout::C, &geometry, spec.k_users, &mut drop_rng)?;
    let s = build_scenario(&spec, &positions)?;
    let mut rep_rng = stream(seed, 0, 0, TAG_REPLICATE);
    let ch = sample_channels(&s, &mut rep_rng);

    println!("M = {}, N = {} split {:?}, one realization\n", s.m(), s.n(), s.n_k);
    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7} {:>6}",
        "method", "user0 dB", "user1 dB", "user2 dB", "user3 dB", "total dB", "passes", "conv"
    );
    for method in [Method::Random, Method::SdLos, Method::SdSvd, Method::Isd, Method::Cisd] {
        let mut rng = stream(seed, 0, 1, 2); // only Random consumes it
        let (phases, report) = select(&s, &ch, method, 1e-6, 50, &mut rng)?;
        let mut total = 0.0;
        let mut db = Vec::new();
        for k in 0..s.k_users {
            let snr = snr_terms(&s, &ch, &phases, k)?.total;
            total += snr;
            db.push(10.0 * snr.log10());
        }
        println!(
            "{:<8} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>7} {:>6}",
            method.name(),
            db[0],
            db[1],
            db[2],
            db[3],
            10.0 * total.log10(),
            report.iterations_used,
            report.converged
        );
        if method == Method::Cisd {
            let trace_db: Vec<String> =
                report.snr_trace.iter().map(|t| format!("{:.6}", 10.0 * t.log10())).collect();
            println!("         cisd total-SNR trace (dB): {}", trace_db.join(" -> "));
        }
    }
    Ok(())
}
