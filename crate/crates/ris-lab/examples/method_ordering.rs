//! SD vs ISD vs CISD mean SNR over random drops at several RIS sizes: the
//! interference-aware designs pull ahead as N grows.

use ris_lab::channel::{ArrayLayout, DropLayout, Geometry, ScenarioSpec};
use ris_lab::mc::{run_many, ExperimentConfig};
use ris_lab::phase::Method;

fn main() -> ris_lab::Result<()> {
    let methods = [Method::SdLos, Method::Isd, Method::Cisd];
    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>12} {:>12}",
        "N", "sd dB", "isd dB", "cisd dB", "cisd-sd dB", "time s"
    );
    for (n_x, n_z) in [(4usize, 2usize), (4, 4), (8, 8), (16, 8)] {
        let cfg = ExperimentConfig {
            spec: ScenarioSpec {
                geometry: Geometry::default(),
                arrays: ArrayLayout { m_x: 4, m_z: 4, n_x, n_z, d_b: 0.5, d_r: 0.5 },
                k_users: 4,
                n_k: Vec::new(),
                kappa_d: 1.0,
                kappa_rb: 1.0,
                kappa_ur: 1.0,
                es_over_sigma2: 1e9,
            },
            method: Method::SdLos,
            layout: DropLayout::C,
            n_drops: 30,
            n_replicates: 60,
            master_seed: 2026,
            cisd_tol: 1e-4,
            cisd_max_iters: 50,
        };
        let results = run_many(&cfg, &methods)?;
        // user-averaged dB of the linear means
        let db = |r: &ris_lab::mc::ExperimentResult| {
            10.0 * (r.mean_snr.iter().sum::<f64>() / r.mean_snr.len() as f64).log10()
        };
        let (sd, isd, cisd) = (db(&results[0]), db(&results[1]), db(&results[2]));
        println!(
            "{:>4} {:>10.3} {:>10.3} {:>10.3} {:>12.3} {:>12.1}",
            n_x * n_z,
            sd,
            isd,
            cisd,
            cisd - sd,
            results[0].elapsed_seconds
        );
    }
    println!("\n(30 drops x 60 replicates each; the ordering sd <= isd <= cisd is exact");
    println!(" per realization for isd vs cisd and holds in the mean for sd)");
    Ok(())
}
