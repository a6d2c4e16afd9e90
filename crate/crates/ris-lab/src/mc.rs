//! Monte-Carlo experiment engine: replicated channel sampling over random
//! user drops, E_s calibration against the closed-form engine, and the
//! analytic-vs-simulated per-term comparison.
//!
//! Determinism contract: every (drop, replicate) pair owns a counter-keyed
//! RNG stream, replicates are reduced in index order, and drops run
//! sequentially — results are bit-identical for a fixed master seed no matter
//! how many worker threads rayon uses.

use crate::channel::{build_scenario, drop_users, sample_channels, DropLayout, ScenarioSpec};
use crate::error::{Error, Result};
use crate::phase::{select, Method};
use crate::rng::{stream, TAG_DROP, TAG_REPLICATE};
use crate::snr::{mean_snr_general, snr_terms, sum_rate_bound, SnrBreakdown};
use rayon::prelude::*;
use std::time::Instant;

/// One experiment: a scenario template instantiated at `n_drops` random user
/// placements, each sampled `n_replicates` times.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub spec: ScenarioSpec,
    pub method: Method,
    pub layout: DropLayout,
    pub n_drops: u64,
    pub n_replicates: u64,
    pub master_seed: u64,
    pub cisd_tol: f64,
    pub cisd_max_iters: usize,
}

/// Cross-drop aggregates for one method. Standard errors are computed over
/// the per-drop means — drops are the independent unit.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub method: Method,
    /// Per-user mean SNR, linear.
    pub mean_snr: Vec<f64>,
    /// Per-user mean SNR in dB (of the linear mean).
    pub mean_snr_db: Vec<f64>,
    /// Per-user standard error of the linear mean across drops.
    pub stderr: Vec<f64>,
    /// Mean of the per-drop sum-rate bounds, bits/s/Hz.
    pub mean_sum_rate: f64,
    /// Mean phase-selection passes per replicate.
    pub mean_iterations: f64,
    /// Standard error of the per-drop mean pass counts.
    pub stderr_iterations: f64,
    pub failed_replicates: u64,
    pub total_replicates: u64,
    pub elapsed_seconds: f64,
}

/// The two E_s/σ² calibration anchors: a single UE 5 m down the corridor
/// from the RIS, N = 128 (16×8), M = 16 (4×4), d_b = 0.5, d_r = 0.1, every
/// K-factor 1 — with `Los` replacing the RIS-BS channel by its pure LoS
/// limit. The scale is chosen so that anchor's mean SNR is 5 dB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorPreset {
    General,
    Los,
}

/// Scenario of the calibration anchor at unit E_s/σ².
pub fn anchor_scenario(preset: AnchorPreset) -> Result<crate::channel::Scenario> {
    let geometry = crate::channel::Geometry::default();
    let spec = ScenarioSpec {
        geometry,
        arrays: crate::channel::ArrayLayout {
            m_x: 4,
            m_z: 4,
            n_x: 16,
            n_z: 8,
            d_b: 0.5,
            d_r: 0.1,
        },
        k_users: 1,
        n_k: Vec::new(),
        kappa_d: 1.0,
        kappa_rb: match preset {
            AnchorPreset::General => 1.0,
            AnchorPreset::Los => f64::INFINITY,
        },
        kappa_ur: 1.0,
        es_over_sigma2: 1.0,
    };
    let ue = geometry.corridor_point(5.0, 0.0);
    build_scenario(&spec, &[ue])
}

/// Solves E_s/σ² so the anchor's closed-form mean SNR is 10^{0.5} (5 dB).
/// E[SNR] is linear in E_s/σ², so this is a single division.
pub fn calibrate_es(preset: AnchorPreset) -> Result<f64> {
    let s = anchor_scenario(preset)?;
    let at_unit = mean_snr_general(&s)?.per_user[0].total;
    if !(at_unit > 0.0) {
        return Err(Error::Domain {
            context: "calibrate_es",
            message: format!("anchor mean SNR {at_unit} at unit scale"),
        });
    }
    Ok(10f64.powf(0.5) / at_unit)
}

/// Per-replicate outcome of one method: per-user total SNR and the pass count.
struct ReplicateOutcome {
    snrs: Vec<f64>,
    iterations: usize,
}

/// Runs several methods over the *same* channel draws — the sampling cost
/// dominates at realistic sizes, and shared draws also pair the methods for
/// gap estimates. Results come back in the order of `methods`.
pub fn run_many(cfg: &ExperimentConfig, methods: &[Method]) -> Result<Vec<ExperimentResult>> {
    if cfg.n_drops == 0 || cfg.n_replicates == 0 {
        return Err(Error::Domain {
            context: "run_experiment",
            message: "n_drops and n_replicates must be >= 1".into(),
        });
    }
    let started = Instant::now();
    let n_methods = methods.len();
    let k_users = cfg.spec.k_users;
    let fractions = vec![1.0 / k_users as f64; k_users];

    // drop_means[m][drop] = (per-user mean SNR, mean iterations) over the
    // drop's valid replicates
    let mut drop_means: Vec<Vec<(Vec<f64>, f64)>> =
        vec![Vec::with_capacity(cfg.n_drops as usize); n_methods];
    let mut failed = vec![0u64; n_methods];

    for drop in 0..cfg.n_drops {
        let mut drop_rng = stream(cfg.master_seed, drop, 0, TAG_DROP);
        let positions = drop_users(cfg.layout, &cfg.spec.geometry, k_users, &mut drop_rng)?;
        let scenario = build_scenario(&cfg.spec, &positions)?;

        let outcomes: Vec<Vec<Option<ReplicateOutcome>>> = (0..cfg.n_replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(cfg.master_seed, drop, rep, TAG_REPLICATE);
                let ch = sample_channels(&scenario, &mut rng);
                let mut per_method = Vec::with_capacity(n_methods);
                for &method in methods {
                    let (phases, report) =
                        select(&scenario, &ch, method, cfg.cisd_tol, cfg.cisd_max_iters, &mut rng)
                            .map_err(|e| at(drop, rep, e))?;
                    if phases.degenerate {
                        per_method.push(None);
                        continue;
                    }
                    let mut snrs = Vec::with_capacity(k_users);
                    for k in 0..k_users {
                        snrs.push(
                            snr_terms(&scenario, &ch, &phases, k)
                                .map_err(|e| at(drop, rep, e))?
                                .total,
                        );
                    }
                    per_method
                        .push(Some(ReplicateOutcome { snrs, iterations: report.iterations_used }));
                }
                Ok(per_method)
            })
            .collect::<Result<_>>()?;

        // index-ordered sequential reduction keeps the result thread-count
        // independent
        for (m, _) in methods.iter().enumerate() {
            let mut sum = vec![0.0; k_users];
            let mut iters = 0.0;
            let mut valid = 0u64;
            for rep in &outcomes {
                match &rep[m] {
                    Some(out) => {
                        for k in 0..k_users {
                            sum[k] += out.snrs[k];
                        }
                        iters += out.iterations as f64;
                        valid += 1;
                    }
                    None => failed[m] += 1,
                }
            }
            if valid == 0 {
                return Err(Error::Numerical {
                    context: "run_experiment",
                    message: format!("drop {drop}: every replicate degenerate"),
                });
            }
            let inv = 1.0 / valid as f64;
            drop_means[m].push((sum.iter().map(|s| s * inv).collect(), iters * inv));
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    let total = cfg.n_drops * cfg.n_replicates;
    methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let drops = &drop_means[m];
            let d = drops.len() as f64;
            let mut mean_snr = vec![0.0; k_users];
            for (snrs, _) in drops {
                for k in 0..k_users {
                    mean_snr[k] += snrs[k] / d;
                }
            }
            let mut stderr = vec![0.0; k_users];
            if drops.len() >= 2 {
                for (snrs, _) in drops {
                    for k in 0..k_users {
                        let r = snrs[k] - mean_snr[k];
                        stderr[k] += r * r;
                    }
                }
                for se in &mut stderr {
                    *se = (*se / (d * (d - 1.0))).sqrt();
                }
            }
            let mut mean_sum_rate = 0.0;
            let mut mean_iterations = 0.0;
            for (snrs, it) in drops {
                mean_sum_rate += sum_rate_bound(snrs, &fractions)? / d;
                mean_iterations += it / d;
            }
            let mut stderr_iterations = 0.0;
            if drops.len() >= 2 {
                for (_, it) in drops {
                    let r = it - mean_iterations;
                    stderr_iterations += r * r;
                }
                stderr_iterations = (stderr_iterations / (d * (d - 1.0))).sqrt();
            }
            Ok(ExperimentResult {
                method,
                mean_snr_db: mean_snr.iter().map(|&v| 10.0 * v.log10()).collect(),
                mean_snr,
                stderr,
                mean_sum_rate,
                mean_iterations,
                stderr_iterations,
                failed_replicates: failed[m],
                total_replicates: total,
                elapsed_seconds: elapsed,
            })
        })
        .collect()
}

/// Single-method wrapper over [`run_many`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(run_many(cfg, &[cfg.method])?.pop().expect("one method in, one result out"))
}

fn at(drop: u64, replicate: u64, source: Error) -> Error {
    Error::At { drop, replicate, source: Box::new(source) }
}

/// One analytic-vs-MC row: a single SNR term of a single user.
#[derive(Clone, Debug)]
pub struct CompareRow {
    pub user: usize,
    pub term: &'static str,
    pub analytic: f64,
    pub mc: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub failed_replicates: u64,
    pub total_replicates: u64,
    pub elapsed_seconds: f64,
}

pub const TERM_NAMES: [&str; 7] =
    ["t_hdhd", "t_hdf", "t_hdg", "t_fg", "t_ff", "t_gg", "total"];

fn term_values(b: &SnrBreakdown) -> [f64; 7] {
    [b.t_hdhd, b.t_hdf, b.t_hdg, b.t_fg, b.t_ff, b.t_gg, b.total]
}

/// Term-by-term comparison of the closed-form expectations against their MC
/// estimates under the LoS subsurface design (the analyzed method). The
/// z-scores are computed on per-replicate residuals against the drop's own
/// analytic value, so multi-drop runs pool correctly.
pub fn compare_analytic_vs_mc(cfg: &ExperimentConfig) -> Result<CompareReport> {
    if cfg.method != Method::SdLos {
        return Err(Error::Domain {
            context: "compare_analytic_vs_mc",
            message: format!("the analytic engine models sd_los, config says {}", cfg.method.name()),
        });
    }
    if cfg.n_drops == 0 || cfg.n_replicates == 0 {
        return Err(Error::Domain {
            context: "compare_analytic_vs_mc",
            message: "n_drops and n_replicates must be >= 1".into(),
        });
    }
    let started = Instant::now();
    let k_users = cfg.spec.k_users;

    // per (user, term): Σ value, Σ residual, Σ residual², Σ analytic, n
    let mut acc = vec![[(0.0f64, 0.0f64, 0.0f64, 0.0f64); 7]; k_users];
    let mut n_valid = 0u64;
    let mut failed = 0u64;

    for drop in 0..cfg.n_drops {
        let mut drop_rng = stream(cfg.master_seed, drop, 0, TAG_DROP);
        let positions = drop_users(cfg.layout, &cfg.spec.geometry, k_users, &mut drop_rng)?;
        let scenario = build_scenario(&cfg.spec, &positions)?;
        let analytic = mean_snr_general(&scenario)?;

        let outcomes: Vec<Option<Vec<[f64; 7]>>> = (0..cfg.n_replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = stream(cfg.master_seed, drop, rep, TAG_REPLICATE);
                let ch = sample_channels(&scenario, &mut rng);
                let (phases, _) = select(
                    &scenario,
                    &ch,
                    Method::SdLos,
                    cfg.cisd_tol,
                    cfg.cisd_max_iters,
                    &mut rng,
                )
                .map_err(|e| at(drop, rep, e))?;
                if phases.degenerate {
                    return Ok(None);
                }
                let mut rows = Vec::with_capacity(k_users);
                for k in 0..k_users {
                    let b = snr_terms(&scenario, &ch, &phases, k).map_err(|e| at(drop, rep, e))?;
                    rows.push(term_values(&b));
                }
                Ok(Some(rows))
            })
            .collect::<Result<_>>()?;

        for outcome in outcomes {
            match outcome {
                Some(rows) => {
                    n_valid += 1;
                    for (k, vals) in rows.iter().enumerate() {
                        let expect = term_values(&analytic.per_user[k]);
                        for t in 0..7 {
                            let r = vals[t] - expect[t];
                            let slot = &mut acc[k][t];
                            slot.0 += vals[t];
                            slot.1 += r;
                            slot.2 += r * r;
                            slot.3 += expect[t];
                        }
                    }
                }
                None => failed += 1,
            }
        }
    }

    if n_valid < 2 {
        return Err(Error::Numerical {
            context: "compare_analytic_vs_mc",
            message: format!("only {n_valid} valid replicates"),
        });
    }

    let n = n_valid as f64;
    let mut rows = Vec::with_capacity(k_users * 7);
    for (k, user_acc) in acc.iter().enumerate() {
        for (t, name) in TERM_NAMES.iter().enumerate() {
            let (sum, rsum, rsq, asum) = user_acc[t];
            let mean_resid = rsum / n;
            let var = ((rsq - n * mean_resid * mean_resid) / (n - 1.0)).max(0.0);
            let se = (var / n).sqrt();
            let z = if se > 0.0 {
                mean_resid / se
            } else if mean_resid == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(mean_resid)
            };
            rows.push(CompareRow {
                user: k,
                term: name,
                analytic: asum / n,
                mc: sum / n,
                stderr: se,
                z,
            });
        }
    }

    Ok(CompareReport {
        rows,
        failed_replicates: failed,
        total_replicates: cfg.n_drops * cfg.n_replicates,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
