use super::gamma::ln_gamma_unchecked;
use super::hyper::{laguerre_half_neg, ln_hyp1f1_pos, ln_rf_reg, phasor_mean_factor};
use super::SeriesControl;
use crate::error::{Error, Result};
use crate::C64;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Parameters of the envelope cross-moment F_R = E[|h_i||h_j|]/β for two
/// entries of a correlated Ricean vector h = √β(η a + ζ w), with
/// ρ = E[w_i w̄_j] = rho_abs·e^{j·rho_phase} and delta_angle = ∠a_i − ∠a_j.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FRParams {
    pub kappa_ur: f64,
    pub rho_abs: f64,
    pub rho_phase: f64,
    pub delta_angle: f64,
}

/// Parameters of the phasor cross-moment G_R = E[e^{j∠h_i} e^{−j∠h_j}];
/// angle_i/angle_j are the LoS phases ∠a_i, ∠a_j.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GRParams {
    pub kappa_ur: f64,
    pub rho_abs: f64,
    pub rho_phase: f64,
    pub angle_i: f64,
    pub angle_j: f64,
}

fn validate_common(kappa: f64, rho_abs: f64, context: &'static str) -> Result<()> {
    if !(kappa >= 0.0) {
        return Err(Error::Domain { context, message: format!("kappa_ur = {kappa} < 0") });
    }
    if !(0.0..1.0).contains(&rho_abs) {
        return Err(Error::Domain {
            context,
            message: format!("rho_abs = {rho_abs} outside [0, 1); clamp correlations to 1 - 1e-9"),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Log-offset accumulators: value = acc · e^offset, rescaled so `acc` stays in
// a safe floating range while individual contributions span hundreds of nats.
// ---------------------------------------------------------------------------

struct ScaledSum {
    acc: f64,
    offset: f64,
    max_ln: f64, // largest |contribution| in ln units, for cancellation audit
}

impl ScaledSum {
    fn new() -> Self {
        ScaledSum { acc: 0.0, offset: 0.0, max_ln: f64::NEG_INFINITY }
    }

    fn add_ln(&mut self, ln_mag: f64, sign: f64) {
        if ln_mag == f64::NEG_INFINITY {
            return;
        }
        self.max_ln = self.max_ln.max(ln_mag);
        if ln_mag > self.offset + 300.0 {
            let new_offset = ln_mag;
            self.acc *= (self.offset - new_offset).exp();
            self.offset = new_offset;
        }
        self.acc += sign * (ln_mag - self.offset).exp();
    }

    /// (ln|value|, sign)
    fn value_ln(&self) -> (f64, f64) {
        if self.acc == 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else {
            (self.acc.abs().ln() + self.offset, self.acc.signum())
        }
    }
}

struct ScaledComplex {
    re: f64,
    im: f64,
    offset: f64,
    max_ln: f64,
}

impl ScaledComplex {
    fn new() -> Self {
        ScaledComplex { re: 0.0, im: 0.0, offset: 0.0, max_ln: f64::NEG_INFINITY }
    }

    fn add_ln(&mut self, ln_mag: f64, phase: f64) {
        if ln_mag == f64::NEG_INFINITY {
            return;
        }
        self.max_ln = self.max_ln.max(ln_mag);
        if ln_mag > self.offset + 300.0 {
            let scale = (self.offset - ln_mag).exp();
            self.re *= scale;
            self.im *= scale;
            self.offset = ln_mag;
        }
        let mag = (ln_mag - self.offset).exp();
        self.re += mag * phase.cos();
        self.im += mag * phase.sin();
    }

    fn norm_ln(&self) -> f64 {
        let n = (self.re * self.re + self.im * self.im).sqrt();
        if n == 0.0 {
            f64::NEG_INFINITY
        } else {
            n.ln() + self.offset
        }
    }

    /// value · e^{extra_ln} as a complex number (assumes the product is
    /// representable).
    fn value_scaled(&self, extra_ln: f64) -> C64 {
        let s = (self.offset + extra_ln).exp();
        C64::new(self.re * s, self.im * s)
    }
}

// ---------------------------------------------------------------------------
// Series-path feasibility: the double series converges after roughly
// X/ln²(1/ρ) outer terms and its blocks peak near e^{2X/ln(1/ρ)}; with the
// prefactor attached the result is O(1), so (peak + ln_prefactor) measures
// the cancellation the fixed-precision sum must absorb.
// ---------------------------------------------------------------------------

struct SeriesBudget {
    feasible: bool,
    // blocks keep growing until roughly this outer index; stopping earlier
    // mistakes an oscillation dip for convergence
    min_blocks: usize,
}

fn series_budget(x: f64, rho_abs: f64, mu_align: f64, ln_pref: f64, max_terms: usize) -> SeriesBudget {
    if rho_abs == 0.0 {
        return SeriesBudget { feasible: true, min_blocks: 0 };
    }
    if mu_align < 0.0 {
        // anti-aligned LoS/correlation rotation: the cos(nφ) factors alternate
        // and the f64 sum cancels catastrophically even when small in theory
        return SeriesBudget { feasible: false, min_blocks: 0 };
    }
    let l = (1.0 / rho_abs).ln();
    let m_star = x / (l * l);
    let peak_ln = 2.0 * x / l;
    let cancel = peak_ln + ln_pref;
    SeriesBudget {
        feasible: m_star + 16.0 <= max_terms as f64
            && peak_ln < 600.0
            && cancel < RUNTIME_CANCEL_LIMIT,
        min_blocks: m_star.ceil() as usize + 2,
    }
}

// Nats of block-vs-total cancellation we accept before distrusting the sum:
// e^12 · f64 eps ≈ 4e-11, matching the default rel_tol.
const RUNTIME_CANCEL_LIMIT: f64 = 12.0;

// ---------------------------------------------------------------------------
// F_R
// ---------------------------------------------------------------------------

/// Normalized cross-moment of two correlated Ricean envelopes.
pub fn eval_fr(p: &FRParams, ctl: &SeriesControl) -> Result<f64> {
    ctl.validate()?;
    validate_common(p.kappa_ur, p.rho_abs, "eval_fr")?;
    if p.kappa_ur.is_infinite() {
        return Ok(1.0); // deterministic unit envelopes
    }
    let k = p.kappa_ur;
    let r = p.rho_abs;
    let mu_cf = r * (p.delta_angle - p.rho_phase).cos();
    let mu_sf = r * (p.delta_angle - p.rho_phase).sin();
    let omr2 = 1.0 - r * r;
    let x = k * (1.0 + r * r - 2.0 * mu_cf) / omr2;
    let ln_pref = 2.0 * omr2.ln() - (1.0 + k).ln() - 2.0 * k * (1.0 - mu_cf) / omr2;

    let budget = series_budget(x, r, mu_cf, ln_pref, ctl.max_terms);
    if budget.feasible {
        if let Some(v) = fr_series(k, r, mu_cf, mu_sf, x, ln_pref, budget.min_blocks, ctl) {
            return Ok(v);
        }
    }
    let (fr, _) = cross_moment_quadrature(k, r, p.rho_phase, p.delta_angle);
    Ok(fr)
}

#[allow(clippy::too_many_arguments)]
fn fr_series(
    k: f64,
    r: f64,
    mu_cf: f64,
    mu_sf: f64,
    x: f64,
    ln_pref: f64,
    min_blocks: usize,
    ctl: &SeriesControl,
) -> Option<f64> {
    let phi_f = ((1.0 - r * r) * mu_sf * k).atan2((1.0 + r * r) * mu_cf * k - 2.0 * k * r * r);
    let ln_r = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
    let ln_x = if x > 0.0 { x.ln() } else { f64::NEG_INFINITY };
    let block_tol = 0.01 * ctl.rel_tol;

    let mut total = ScaledSum::new();
    let mut prev_block_ln = f64::INFINITY;
    let mut converged = false;
    for m in 0..=ctl.max_terms {
        let mf = m as f64;
        let mut block = ScaledSum::new();
        for n in 0..=m {
            let nf = n as f64;
            if n > 0 && x == 0.0 {
                break; // X^n kills every n ≥ 1 term
            }
            if n < 2 * m && r == 0.0 {
                continue; // r^{2m-n} = 0
            }
            let c = (nf * phi_f).cos() * if n == 0 { 1.0 } else { 2.0 };
            if c == 0.0 {
                continue;
            }
            let ln_mag = c.abs().ln()
                + (2.0 * mf - nf) * if 2 * m == n { 0.0 } else { ln_r }
                + nf * if n == 0 { 0.0 } else { ln_x }
                - ln_gamma_unchecked(mf + 1.0)
                - ln_gamma_unchecked(mf - nf + 1.0)
                - 2.0 * ln_gamma_unchecked(nf + 1.0)
                + 2.0 * ln_gamma_unchecked(mf + 1.5)
                + 2.0 * ln_hyp1f1_pos(mf + 1.5, nf + 1.0, x);
            block.add_ln(ln_mag, c.signum());
        }
        let (block_ln, block_sign) = block.value_ln();
        total.add_ln(block_ln, block_sign);
        total.max_ln = total.max_ln.max(block.max_ln);
        let (total_ln, _) = total.value_ln();
        if m >= 4.max(min_blocks)
            && total_ln > f64::NEG_INFINITY
            && block_ln < total_ln + block_tol.ln()
            && block_ln <= prev_block_ln
        {
            converged = true;
            break;
        }
        prev_block_ln = block_ln;
    }
    if !converged {
        return None;
    }
    let (total_ln, sign) = total.value_ln();
    if sign <= 0.0 || total.max_ln - total_ln > RUNTIME_CANCEL_LIMIT {
        return None; // cancellation destroyed the sum; use the quadrature
    }
    Some((total_ln + ln_pref).exp())
}

// ---------------------------------------------------------------------------
// G_R
// ---------------------------------------------------------------------------

/// Phasor cross-moment of two correlated Ricean variables.
pub fn eval_gr(p: &GRParams, ctl: &SeriesControl) -> Result<C64> {
    ctl.validate()?;
    validate_common(p.kappa_ur, p.rho_abs, "eval_gr")?;
    let delta = p.angle_i - p.angle_j;
    if p.kappa_ur.is_infinite() {
        return Ok(C64::from_polar(1.0, delta)); // deterministic LoS phases
    }
    let k = p.kappa_ur;
    let r = p.rho_abs;
    if r == 0.0 {
        // independent entries: E[e^{jθ_i}]·E[e^{-jθ_j}]
        let pm = phasor_mean_factor(k);
        return Ok(C64::from_polar(pm * pm, delta));
    }
    let mu_c = r * (-delta + p.rho_phase).cos();
    let omr2 = 1.0 - r * r;
    let xg = k * (1.0 + r * r - 2.0 * mu_c) / omr2;
    let ln_pref = (omr2 / 2.0).ln() - 2.0 * k * (1.0 - mu_c) / omr2;

    let budget = series_budget(xg, r, mu_c, ln_pref, ctl.max_terms);
    if budget.feasible {
        if let Some(v) = gr_series(p, budget.min_blocks, ctl) {
            return Ok(v);
        }
    }
    let (_, gr) = cross_moment_quadrature(k, r, p.rho_phase, delta);
    Ok(gr)
}

fn gr_series(p: &GRParams, min_blocks: usize, ctl: &SeriesControl) -> Option<C64> {
    let k = p.kappa_ur;
    let r = p.rho_abs;
    let dj = p.angle_j - p.angle_i;
    let mu_c = r * (dj + p.rho_phase).cos();
    let mu_s = r * (dj + p.rho_phase).sin();
    let omr2 = 1.0 - r * r;
    let xg = k * (1.0 + r * r - 2.0 * mu_c) / omr2;
    let pref_angle = mu_s.atan2(1.0 - mu_c) + p.angle_j - (-mu_s).atan2(1.0 - mu_c) - p.angle_i;
    let phi = pref_angle + p.rho_phase;
    let ln_pref = (omr2 / 2.0).ln() - 2.0 * k * (1.0 - mu_c) / omr2;
    let ln_r = r.ln();
    let ln_xg = if xg > 0.0 { xg.ln() } else { f64::NEG_INFINITY };
    let block_tol = 0.01 * ctl.rel_tol;

    let mut total = ScaledComplex::new();
    let mut prev_block_ln = f64::INFINITY;
    let mut converged = false;
    for n in 0..=ctl.max_terms {
        let nf = n as f64;
        let eps_ln = if n == 0 { 0.0 } else { 2.0f64.ln() };
        let mut block = ScaledComplex::new();
        if xg > 0.0 || n == 1 {
            let mut prev_term_ln = f64::INFINITY;
            for m in 0..=ctl.max_terms {
                let mf = m as f64;
                let c_ln = eps_ln + (2.0 * mf + nf) * ln_r
                    - ln_gamma_unchecked(mf + 1.0)
                    - ln_gamma_unchecked(mf + nf + 1.0);
                // T3 = Γ(n+m+3/2)² Xg^{n+1} RF(n+m+3/2, n+2; Xg)²
                // T1 = Γ(n+m+1/2)² Xg^{n-1} RF(n+m+1/2, n;   Xg)²
                let (t3_ln, t1_ln) = if xg == 0.0 {
                    // only the n = 1 phasor term survives the Xg → 0 limit
                    (f64::NEG_INFINITY, 2.0 * ln_gamma_unchecked(mf + 1.5))
                } else {
                    (
                        2.0 * ln_gamma_unchecked(nf + mf + 1.5)
                            + (nf + 1.0) * ln_xg
                            + 2.0 * ln_rf_reg(nf + mf + 1.5, nf + 2.0, xg),
                        2.0 * ln_gamma_unchecked(nf + mf + 0.5)
                            + (nf - 1.0) * ln_xg
                            + 2.0 * ln_rf_reg(nf + mf + 0.5, nf, xg),
                    )
                };
                block.add_ln(c_ln + t3_ln, nf * phi);
                block.add_ln(c_ln + t1_ln, -nf * phi);
                let term_ln = (c_ln + t3_ln).max(c_ln + t1_ln);
                let ref_ln = block.norm_ln().max(total.norm_ln());
                if m >= 4.max(min_blocks)
                    && term_ln < ref_ln + block_tol.ln()
                    && term_ln <= prev_term_ln
                {
                    break;
                }
                prev_term_ln = term_ln;
                if m == ctl.max_terms {
                    return None;
                }
            }
        }
        let block_ln = block.norm_ln();
        let scale = (block.offset - total.offset).exp();
        if block.offset > total.offset + 300.0 {
            let s = (total.offset - block.offset).exp();
            total.re *= s;
            total.im *= s;
            total.offset = block.offset;
            total.re += block.re;
            total.im += block.im;
        } else {
            total.re += block.re * scale;
            total.im += block.im * scale;
        }
        total.max_ln = total.max_ln.max(block.max_ln);
        let total_ln = total.norm_ln();
        if n >= 4.max(min_blocks)
            && total_ln > f64::NEG_INFINITY
            && block_ln < total_ln + block_tol.ln()
            && block_ln <= prev_block_ln
        {
            converged = true;
            break;
        }
        prev_block_ln = block_ln;
    }
    if !converged {
        return None;
    }
    let total_ln = total.norm_ln();
    if total.max_ln - total_ln > RUNTIME_CANCEL_LIMIT {
        return None;
    }
    let val = total.value_scaled(ln_pref);
    let out = (val * C64::from_polar(1.0, pref_angle)).conj();
    if out.norm() > 1.0 + 10.0 * ctl.rel_tol {
        return None; // |G_R| ≤ 1 must hold; fall back to the quadrature
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// Quadrature path: both cross-moments are expectations over h_i alone once
// the conditional law of h_j given h_i is integrated analytically:
//
//   F_R = E_{h_i}[ |h_i| · E|h_j| ]      E|h_j| = (√π/2)σ L_{1/2}(−|μ_j|²/σ²)
//   G_R = E_{h_i}[ e^{j∠h_i} · (√π/2)(μ̄_j/σ) ₁F₁(1/2,2,−|μ_j|²/σ²) ]
//
// with μ_j = η a_j + ρ̄ (h_i − η a_i) and σ² = ζ²(1−|ρ|²). In polar
// coordinates centered at the origin, |h_i| = r and e^{j∠h_i} = e^{jθ} are
// exact coordinates while both conditional factors are entire in h_i, so a
// Gauss-Legendre radial rule times a trapezoidal angular rule converges
// spectrally. This is the numerically stable route for strongly correlated
// closely spaced elements, where the double series loses tens of digits to
// cancellation.
// ---------------------------------------------------------------------------

const N_RADIAL: usize = 96;

fn gauss_legendre_nodes() -> &'static Vec<(f64, f64)> {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        // Golub-Welsch on the Legendre Jacobi matrix.
        let n = N_RADIAL;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let b = kf / (4.0 * kf * kf - 1.0).sqrt();
            jac[(k - 1, k)] = b;
            jac[(k, k - 1)] = b;
        }
        let eig = nalgebra::SymmetricEigen::new(jac);
        let mut out: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = eig.eigenvalues[i];
                let v0 = eig.eigenvectors[(0, i)];
                (x, 2.0 * v0 * v0)
            })
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    })
}

/// Exact quadrature evaluation of (F_R, G_R) with LoS phases α_i = delta,
/// α_j = 0 (both moments depend on the LoS phases only through their
/// difference).
pub(crate) fn cross_moment_quadrature(
    kappa: f64,
    rho_abs: f64,
    rho_phase: f64,
    delta: f64,
) -> (f64, C64) {
    let eta = (kappa / (1.0 + kappa)).sqrt();
    let zeta = (1.0 / (1.0 + kappa)).sqrt();
    let rho_conj = C64::from_polar(rho_abs, -rho_phase);
    let a_i = C64::from_polar(1.0, delta);
    let a_j = C64::new(1.0, 0.0);
    let s2 = zeta * zeta * (1.0 - rho_abs * rho_abs);
    let s = s2.sqrt();

    let n_theta = ((64.0 + 16.0 * kappa.ceil()) as usize).clamp(64, 16384);
    let (r_lo, r_hi) = if kappa > 144.0 {
        (eta - 12.0 * zeta, eta + 12.0 * zeta)
    } else {
        (0.0, eta + 12.0 * zeta)
    };
    let half_span = 0.5 * (r_hi - r_lo);
    let mid = 0.5 * (r_hi + r_lo);
    let w_theta = 2.0 * PI / n_theta as f64;
    let inv_z2 = 1.0 / (zeta * zeta);
    let dens_norm = 1.0 / (PI * zeta * zeta);
    let half_sqrt_pi = 0.5 * PI.sqrt();

    let mut fr = 0.0f64;
    let mut gr = C64::new(0.0, 0.0);
    for &(xg, wg) in gauss_legendre_nodes() {
        let r = mid + half_span * xg;
        let wr = wg * half_span;
        for t in 0..n_theta {
            let theta = w_theta * t as f64;
            let e_jt = C64::from_polar(1.0, theta);
            let h = r * e_jt;
            let d = h - eta * a_i;
            let dens = dens_norm * (-(d.norm_sqr()) * inv_z2).exp();
            if dens == 0.0 {
                continue;
            }
            let mu = eta * a_j + rho_conj * d;
            let k2 = mu.norm_sqr() / s2;
            let w = wr * w_theta * dens * r;
            fr += w * r * half_sqrt_pi * s * laguerre_half_neg(k2);
            let mu_abs = mu.norm();
            if mu_abs > 0.0 {
                let pm = phasor_mean_factor(k2);
                gr += w * pm / mu_abs * e_jt * mu.conj();
            }
        }
    }
    (fr, gr)
}
