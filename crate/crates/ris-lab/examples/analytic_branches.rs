//! The general mean-SNR engine against the two specialized closed forms it
//! contains: all-Rayleigh links (case 1) and Rayleigh links behind a pure
//! LoS RIS-BS channel (case 2).

use ris_lab::channel::{build_scenario, ArrayLayout, Geometry, Scenario, ScenarioSpec};
use ris_lab::snr::{mean_snr_case1, mean_snr_case2, mean_snr_general, MeanSnrReport};

fn scenario(kappa_rb: f64) -> ris_lab::Result<Scenario> {
    let geometry = Geometry::default();
    let spec = ScenarioSpec {
        geometry,
        arrays: ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.3 },
        k_users: 2,
        n_k: Vec::new(),
        kappa_d: 0.0,
        kappa_rb,
        kappa_ur: 0.0,
        es_over_sigma2: 1e9,
    };
    let positions = [geometry.corridor_point(5.0, 0.5), geometry.corridor_point(12.0, -1.0)];
    build_scenario(&spec, &positions)
}

fn print_pair(label: &str, special: &MeanSnrReport, general: &MeanSnrReport) {
    println!("{label}");
    println!("  {:>4} {:>16} {:>16} {:>10}", "user", special.case.name(), "general", "rel diff");
    for (k, (a, b)) in special.per_user.iter().zip(&general.per_user).enumerate() {
        println!(
            "  {:>4} {:>16.9e} {:>16.9e} {:>10.2e}",
            k,
            a.total,
            b.total,
            (a.total - b.total).abs() / b.total
        );
    }
}

fn main() -> ris_lab::Result<()> {
    let s1 = scenario(0.0)?;
    print_pair("all links Rayleigh", &mean_snr_case1(&s1)?, &mean_snr_general(&s1)?);

    let s2 = scenario(f64::INFINITY)?;
    print_pair(
        "\nRayleigh direct/UE-RIS, pure LoS RIS-BS",
        &mean_snr_case2(&s2)?,
        &mean_snr_general(&s2)?,
    );

    // The specializations refuse scenarios outside their assumptions.
    let ricean = {
        let geometry = Geometry::default();
        let spec = ScenarioSpec {
            geometry,
            arrays: ArrayLayout { m_x: 2, m_z: 2, n_x: 4, n_z: 2, d_b: 0.5, d_r: 0.3 },
            k_users: 1,
            n_k: Vec::new(),
            kappa_d: 1.0,
            kappa_rb: 1.0,
            kappa_ur: 1.0,
            es_over_sigma2: 1.0,
        };
        build_scenario(&spec, &[geometry.corridor_point(5.0, 0.0)])?
    };
    println!("\ncase1 on a Ricean scenario: {:?}", mean_snr_case1(&ricean).err().map(|e| e.to_string()));
    println!("case2 on a Ricean scenario: {:?}", mean_snr_case2(&ricean).err().map(|e| e.to_string()));
    Ok(())
}
