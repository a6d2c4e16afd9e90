//! RIS phase-selection strategies: per-subsurface LoS design (SD), its
//! SVD-based variant for scattered RIS-BS channels, the iterative design
//! (ISD) that sets subsurfaces weakest-user-first against the already-fixed
//! blocks, the converged ISD (CISD), and uniform random phases.

use crate::channel::{ChannelRealization, Scenario};
use crate::error::{Error, Result};
use crate::C64;
use nalgebra::DVector;
use rand::Rng;

/// Phase selectors exposed to experiments and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SdLos,
    SdSvd,
    Isd,
    Cisd,
    Random,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SdLos => "sd_los",
            Method::SdSvd => "sd_svd",
            Method::Isd => "isd",
            Method::Cisd => "cisd",
            Method::Random => "random",
        }
    }
}

/// One full reflection configuration: N unit-modulus coefficients split into
/// K subsurface blocks. `degenerate` marks replicates where a vanishing
/// direct channel made some global rotation ν undefined (ν = 1 was used);
/// the experiment layer excludes those from aggregates.
#[derive(Clone, Debug)]
pub struct RisPhases {
    pub coefficients: DVector<C64>,
    pub partition: Vec<usize>,
    pub degenerate: bool,
}

/// Pass/iteration accounting for the iterative designs. `snr_trace` holds
/// the total (sum over users) linear SNR after each pass.
#[derive(Clone, Debug)]
pub struct IterationReport {
    pub iterations_used: usize,
    pub snr_trace: Vec<f64>,
    pub converged: bool,
}

const DEGENERATE_EPS: f64 = 1e-300;

/// z/|z|, or (1, degenerate) when |z| underflows.
fn unit_rotation(z: C64) -> (C64, bool) {
    let m = z.norm();
    if m < DEGENERATE_EPS {
        (C64::new(1.0, 0.0), true)
    } else {
        (z / m, false)
    }
}

/// e^{j∠z}, with the convention e^{j∠0} = 1.
fn unit_phase(z: C64) -> C64 {
    let m = z.norm();
    if m == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / m
    }
}

/// LoS subsurface design for user k: Φ_k = ν_k·diag(e^{j(∠a_r − ∠h_ur)})
/// with ν_k = a_b†h_d/|a_b†h_d|. Returns the block coefficients and the
/// degenerate-direct flag.
pub fn sd_los(s: &Scenario, ch: &ChannelRealization, k: usize) -> Result<(DVector<C64>, bool)> {
    check_user(s, ch, k)?;
    let u = &s.users[k];
    let (nu, degenerate) = unit_rotation(u.a_b.dotc(&ch.h_d[k]));
    let range = s.block_range(k);
    let block = DVector::from_iterator(
        range.len(),
        range.clone().map(|i| nu * u.a_r[i] * unit_phase(ch.h_ur[k][i]).conj()),
    );
    Ok((block, degenerate))
}

/// SVD subsurface design for user k: aligns to the leading right singular
/// vector v of the user's RIS-BS block instead of a_r, with the global
/// rotation ω chosen to put the through-RIS channel in phase with h_d.
pub fn sd_svd(s: &Scenario, ch: &ChannelRealization, k: usize) -> Result<(DVector<C64>, bool)> {
    check_user(s, ch, k)?;
    let range = s.block_range(k);
    let h_block = ch.h_rb[k].columns(range.start, range.len()).clone_owned();
    let svd = h_block
        .clone()
        .try_svd(false, true, f64::EPSILON, 10_000)
        .ok_or(Error::Numerical { context: "sd_svd", message: "SVD did not converge".into() })?;
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let lead = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite singular values"))
        .map(|(i, _)| i)
        .expect("min(M, N_k) >= 1");
    // right singular vector, rotated so its first significant entry is real
    let mut v = DVector::from_iterator(range.len(), v_t.row(lead).iter().map(|z| z.conj()));
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12) {
        let rot = unit_phase(*first).conj();
        v *= rot;
    }

    let weighted = DVector::from_iterator(
        range.len(),
        range
            .clone()
            .zip(v.iter())
            .map(|(i, vi)| unit_phase(*vi) * ch.h_ur[k][i].norm()),
    );
    let c = &h_block * weighted;
    let (omega, degenerate) = unit_rotation(c.dotc(&ch.h_d[k]));
    let block = DVector::from_iterator(
        range.len(),
        range
            .clone()
            .zip(v.iter())
            .map(|(i, vi)| omega * unit_phase(*vi) * unit_phase(ch.h_ur[k][i]).conj()),
    );
    Ok((block, degenerate))
}

/// Iterative subsurface design: one full pass in ascending ‖h_ur‖² order.
pub fn isd(s: &Scenario, ch: &ChannelRealization) -> Result<(RisPhases, IterationReport)> {
    let mut ws = IsdWorkspace::new(s, ch)?;
    ws.sequential_pass(s);
    let total = ws.total_snr(s);
    Ok((
        ws.phases(s),
        IterationReport { iterations_used: 1, snr_trace: vec![total], converged: true },
    ))
}

/// Converged ISD. The first pass is exactly [`isd`]; every further pass
/// realigns each block's rotation against the full current aggregate. Since
/// that aggregate keeps the block's own reflection, the realignment moves in
/// damped steps, and a step is kept only when the system SNR does not drop,
/// so the per-pass trace is non-decreasing. The loop stops once the total
/// changes by less than `tol` (relative) from one pass to the next, counting
/// that terminal pass, or when `max_iters` passes ran.
pub fn cisd(
    s: &Scenario,
    ch: &ChannelRealization,
    tol: f64,
    max_iters: usize,
) -> Result<(RisPhases, IterationReport)> {
    if !(tol > 0.0) {
        return Err(Error::Domain { context: "cisd", message: format!("tol = {tol} must be > 0") });
    }
    if max_iters == 0 {
        return Err(Error::Domain { context: "cisd", message: "max_iters must be >= 1".into() });
    }
    let mut ws = IsdWorkspace::new(s, ch)?;
    let mut trace = Vec::new();
    let mut converged = false;
    for pass in 0..max_iters {
        if pass == 0 {
            ws.sequential_pass(s);
        } else {
            ws.refine_pass(s);
        }
        let total = ws.total_snr(s);
        trace.push(total);
        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2];
            let change = if prev > 0.0 { (total - prev).abs() / prev } else { (total - prev).abs() };
            if change < tol {
                converged = true;
                break;
            }
        }
    }
    Ok((
        ws.phases(s),
        IterationReport { iterations_used: trace.len(), snr_trace: trace, converged },
    ))
}

/// Uniform i.i.d. phases on every element.
pub fn random_phases<R: Rng>(n: usize, partition: &[usize], rng: &mut R) -> RisPhases {
    let coefficients = DVector::from_iterator(
        n,
        (0..n).map(|_| C64::from_polar(1.0, rng.gen::<f64>() * 2.0 * std::f64::consts::PI)),
    );
    RisPhases { coefficients, partition: partition.to_vec(), degenerate: false }
}

/// Runs the requested selector and wraps single-shot methods in a one-pass
/// report whose trace is the realized total SNR.
pub fn select<R: Rng>(
    s: &Scenario,
    ch: &ChannelRealization,
    method: Method,
    cisd_tol: f64,
    cisd_max_iters: usize,
    rng: &mut R,
) -> Result<(RisPhases, IterationReport)> {
    match method {
        Method::Isd => isd(s, ch),
        Method::Cisd => cisd(s, ch, cisd_tol, cisd_max_iters),
        Method::Random => {
            let phases = random_phases(s.n(), &s.n_k, rng);
            let report = single_shot_report(s, ch, &phases)?;
            Ok((phases, report))
        }
        Method::SdLos | Method::SdSvd => {
            let mut coefficients = DVector::zeros(s.n());
            let mut degenerate = false;
            for k in 0..s.k_users {
                let (block, deg) = match method {
                    Method::SdLos => sd_los(s, ch, k)?,
                    _ => sd_svd(s, ch, k)?,
                };
                degenerate |= deg;
                let range = s.block_range(k);
                coefficients.rows_mut(range.start, range.len()).copy_from(&block);
            }
            let phases = RisPhases { coefficients, partition: s.n_k.clone(), degenerate };
            let report = single_shot_report(s, ch, &phases)?;
            Ok((phases, report))
        }
    }
}

fn single_shot_report(
    s: &Scenario,
    ch: &ChannelRealization,
    phases: &RisPhases,
) -> Result<IterationReport> {
    let mut total = 0.0;
    for k in 0..s.k_users {
        total += crate::snr::snr_terms(s, ch, phases, k)?.total;
    }
    Ok(IterationReport { iterations_used: 1, snr_trace: vec![total], converged: true })
}

fn check_user(s: &Scenario, ch: &ChannelRealization, k: usize) -> Result<()> {
    if k >= s.k_users || ch.h_d.len() != s.k_users {
        return Err(Error::Dimension {
            context: "phase",
            message: format!("user {k} outside K = {} or realization mismatch", s.k_users),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared ISD/CISD machinery. Once the per-element diagonal phases are fixed
// (they depend only on a_r and each user's own h_ur, so they never change
// across passes), user k's received RIS contribution from block s collapses
// to ν_s·w[k][s] with a precomputed M-vector w[k][s]. Passes then only
// update the K global rotations ν.
// ---------------------------------------------------------------------------

struct IsdWorkspace {
    /// User indices sorted ascending by ‖h_ur‖², ties broken by index.
    order: Vec<usize>,
    /// w[k][s]: user k's band, subsurface s, length M.
    w: Vec<Vec<DVector<C64>>>,
    /// Diagonal phase factors per subsurface (without ν).
    inner: Vec<DVector<C64>>,
    /// Global per-subsurface rotations; zero marks a block not yet set.
    nu: Vec<C64>,
    /// rx[k] = h_d^(k) + Σ_s ν_s·w[k][s], kept in sync with `nu`.
    rx: Vec<DVector<C64>>,
    degenerate: bool,
}

impl IsdWorkspace {
    fn new(s: &Scenario, ch: &ChannelRealization) -> Result<Self> {
        if ch.h_d.len() != s.k_users {
            return Err(Error::Dimension {
                context: "isd",
                message: "realization does not match scenario".into(),
            });
        }
        let mut order: Vec<usize> = (0..s.k_users).collect();
        order.sort_by(|&a, &b| {
            ch.h_ur[a]
                .norm_squared()
                .partial_cmp(&ch.h_ur[b].norm_squared())
                .expect("finite channel norms")
        });

        let inner: Vec<DVector<C64>> = (0..s.k_users)
            .map(|sub| {
                let range = s.block_range(sub);
                DVector::from_iterator(
                    range.len(),
                    range
                        .clone()
                        .map(|i| s.users[sub].a_r[i] * unit_phase(ch.h_ur[sub][i]).conj()),
                )
            })
            .collect();

        let w = (0..s.k_users)
            .map(|k| {
                (0..s.k_users)
                    .map(|sub| {
                        let range = s.block_range(sub);
                        let weighted = DVector::from_iterator(
                            range.len(),
                            range.clone().zip(inner[sub].iter()).map(|(i, d)| d * ch.h_ur[k][i]),
                        );
                        ch.h_rb[k].columns(range.start, range.len()) * weighted
                    })
                    .collect::<Vec<_>>()
            })
            .collect();

        let rx = (0..s.k_users).map(|k| ch.h_d[k].clone()).collect();
        Ok(IsdWorkspace {
            order,
            w,
            inner,
            nu: vec![C64::new(0.0, 0.0); s.k_users],
            rx,
            degenerate: false,
        })
    }

    /// Moves ν_sub and folds the change into every user's received vector.
    fn set_nu(&mut self, sub: usize, nu: C64) {
        let delta = nu - self.nu[sub];
        for k in 0..self.rx.len() {
            self.rx[k].axpy(delta, &self.w[k][sub], C64::new(1.0, 0.0));
        }
        self.nu[sub] = nu;
    }

    /// One sequential pass: each ν_k aligned with the direct path plus the
    /// blocks already set (nothing, on the first user of the first pass).
    /// The block's own reflection is excluded.
    fn sequential_pass(&mut self, s: &Scenario) {
        for idx in 0..self.order.len() {
            let k = self.order[idx];
            let direct = &self.rx[k] - &self.w[k][k] * self.nu[k];
            let (nu, deg) = unit_rotation(s.users[k].a_b.dotc(&direct));
            self.degenerate |= deg;
            self.set_nu(k, nu);
        }
    }

    /// One refinement pass: each ν_k realigned against the full aggregate
    /// (own block included, which damps the step), keeping the move only
    /// when the system SNR does not decrease.
    fn refine_pass(&mut self, s: &Scenario) {
        for idx in 0..self.order.len() {
            let k = self.order[idx];
            let before_nu = self.nu[k];
            let before_total = self.total_snr(s);
            let (nu, deg) = unit_rotation(s.users[k].a_b.dotc(&self.rx[k]));
            self.degenerate |= deg;
            self.set_nu(k, nu);
            if self.total_snr(s) < before_total {
                self.set_nu(k, before_nu);
            }
        }
    }

    fn total_snr(&self, s: &Scenario) -> f64 {
        s.es_over_sigma2 * self.rx.iter().map(|rx| rx.norm_squared()).sum::<f64>()
    }

    fn phases(&self, s: &Scenario) -> RisPhases {
        let mut coefficients = DVector::zeros(s.n());
        for sub in 0..s.k_users {
            let range = s.block_range(sub);
            let nu = if self.nu[sub] == C64::new(0.0, 0.0) {
                C64::new(1.0, 0.0) // never happens after a pass; safe default
            } else {
                self.nu[sub]
            };
            for (j, i) in range.clone().enumerate() {
                coefficients[i] = nu * self.inner[sub][j];
            }
        }
        RisPhases { coefficients, partition: s.n_k.clone(), degenerate: self.degenerate }
    }
}
