//! Solves the transmit-power scale so the reference single-user anchor sits
//! at 5 dB mean SNR, then spot-checks the solution by simulation.

use ris_lab::channel::sample_channels;
use ris_lab::mc::{anchor_scenario, calibrate_es, AnchorPreset};
use ris_lab::phase::{select, Method};
use ris_lab::rng::{stream, TAG_REPLICATE};
use ris_lab::snr::{mean_snr_general, snr_terms};

fn main() -> ris_lab::Result<()> {
    for preset in [AnchorPreset::General, AnchorPreset::Los] {
        let es = calibrate_es(preset)?;
        let mut s = anchor_scenario(preset)?;
        s.es_over_sigma2 = es;
        let closed = mean_snr_general(&s)?.per_user[0].total;
        println!("{preset:?}: E_s/sigma^2 = {es:.6e}  closed-form mean = {:.6} dB", 10.0 * closed.log10());
    }

    // MC spot-check of the general anchor at the calibrated scale.
    let es = calibrate_es(AnchorPreset::General)?;
    let mut s = anchor_scenario(AnchorPreset::General)?;
    s.es_over_sigma2 = es;
    let reps = 1500u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for r in 0..reps {
        let mut rng = stream(5, 0, r, TAG_REPLICATE);
        let ch = sample_channels(&s, &mut rng);
        let (phases, _) = select(&s, &ch, Method::SdLos, 1e-4, 50, &mut rng)?;
        let snr = snr_terms(&s, &ch, &phases, 0)?.total;
        sum += snr;
        sum_sq += snr * snr;
    }
    let mean = sum / reps as f64;
    let se = ((sum_sq / reps as f64 - mean * mean) / reps as f64).sqrt();
    println!(
        "\ngeneral anchor, {reps} replicates: {:.4} dB (se {:.4} dB), target 5.0000 dB",
        10.0 * mean.log10(),
        10.0 / std::f64::consts::LN_10 * se / mean
    );
    Ok(())
}
