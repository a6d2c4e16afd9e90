//! How many passes CISD takes to converge, measured across RIS sizes and
//! element spacings over random two-user drops.

use ris_lab::channel::{ArrayLayout, DropLayout, Geometry, ScenarioSpec};
use ris_lab::mc::{run_experiment, ExperimentConfig};
use ris_lab::phase::Method;

fn main() -> ris_lab::Result<()> {
    println!(
        "{:>4} {:>5} {:>12} {:>10} {:>8}",
        "N", "d_r", "mean passes", "se", "failed"
    );
    for (n_x, n_z) in [(4usize, 2usize), (4, 4), (8, 4), (8, 8), (16, 8)] {
        for d_r in [0.1, 0.5] {
            let cfg = ExperimentConfig {
                spec: ScenarioSpec {
                    geometry: Geometry::default(),
                    arrays: ArrayLayout { m_x: 2, m_z: 2, n_x, n_z, d_b: 0.5, d_r },
                    k_users: 2,
                    n_k: Vec::new(),
                    kappa_d: 1.0,
                    kappa_rb: 1.0,
                    kappa_ur: 1.0,
                    es_over_sigma2: 1e9,
                },
                method: Method::Cisd,
                layout: DropLayout::C,
                n_drops: 20,
                n_replicates: 50,
                master_seed: 99,
                cisd_tol: 1e-4,
                cisd_max_iters: 50,
            };
            let r = run_experiment(&cfg)?;
            println!(
                "{:>4} {:>5} {:>12.3} {:>10.3} {:>8}",
                n_x * n_z,
                d_r,
                r.mean_iterations,
                r.stderr_iterations,
                r.failed_replicates
            );
        }
    }
    println!("\n(tol 1e-4, cap 50; the count includes the first sequential pass)");
    Ok(())
}
