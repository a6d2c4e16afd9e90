//! Scenario construction and correlated Ricean channel sampling.
//!
//! A [`Scenario`] freezes everything deterministic: geometry-derived path
//! gains, K-factor mixing coefficients, steering vectors, and spatial
//! correlation matrices with their principal square roots. Channel
//! realizations are then drawn per replicate from the Kronecker model
//!
//! ```text
//! h    = √β (η a + ζ R^{1/2} u)
//! H_rb = √β (η a_b a_r† + ζ R_b^{1/2} U R_r^{1/2})
//! ```
//!
//! with u, U i.i.d. standard circular complex Gaussian.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Path gain at the 1 m reference distance (−30 dB).
pub const REFERENCE_GAIN: f64 = 1e-3;
/// Path-loss exponent of the direct BS-UE link.
pub const ALPHA_D: f64 = 3.5;
/// Path-loss exponent of the RIS-BS link (LoS placement).
pub const ALPHA_RB: f64 = 2.0;
/// Path-loss exponent of the UE-RIS link.
pub const ALPHA_UR: f64 = 2.8;
/// In-cluster user spacing for layouts A and B, metres.
pub const CLUSTER_SPACING: f64 = 1.0;

const DROP_ATTEMPT_CAP: usize = 1_000_000;

/// Node placement: BS at the origin, RIS on a ray from it, users in a
/// rectangular corridor that starts at the RIS and runs along the BS→RIS
/// axis away from the BS. All nodes share one height, so angles live in the
/// horizontal plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    pub ris_distance: f64,
    pub ris_angle: f64,
    pub corridor_length: f64,
    pub corridor_half_width: f64,
    pub exclusion_radius: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            ris_distance: 40.0,
            ris_angle: PI / 4.0,
            corridor_length: 20.0,
            corridor_half_width: 2.5,
            exclusion_radius: 1.0,
        }
    }
}

impl Geometry {
    pub fn ris_position(&self) -> [f64; 2] {
        [
            self.ris_distance * self.ris_angle.cos(),
            self.ris_distance * self.ris_angle.sin(),
        ]
    }

    /// Corridor coordinates (t along the axis from the RIS, s across) to the
    /// global frame.
    pub fn corridor_point(&self, t: f64, s: f64) -> [f64; 2] {
        let (sin_a, cos_a) = self.ris_angle.sin_cos();
        let ris = self.ris_position();
        [ris[0] + t * cos_a - s * sin_a, ris[1] + t * sin_a + s * cos_a]
    }
}

/// Rectangular-grid array shapes and element spacings (in wavelengths) for
/// the BS (`m_*`, `d_b`) and the RIS (`n_*`, `d_r`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayLayout {
    pub m_x: usize,
    pub m_z: usize,
    pub n_x: usize,
    pub n_z: usize,
    pub d_b: f64,
    pub d_r: f64,
}

impl ArrayLayout {
    pub fn m(&self) -> usize {
        self.m_x * self.m_z
    }

    pub fn n(&self) -> usize {
        self.n_x * self.n_z
    }
}

/// Per-link power gain, K-factor, and the derived LoS/scatter mixing pair
/// η = √(κ/(κ+1)), ζ = √(1/(κ+1)). κ = +∞ yields exactly (η, ζ) = (1, 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams {
    pub beta: f64,
    pub kappa: f64,
    pub eta: f64,
    pub zeta: f64,
}

impl LinkParams {
    pub fn new(beta: f64, kappa: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::Domain {
                context: "LinkParams",
                message: format!("beta = {beta} must be >= 0"),
            });
        }
        if !(kappa >= 0.0) {
            return Err(Error::Domain {
                context: "LinkParams",
                message: format!("kappa = {kappa} must be >= 0 (may be +inf)"),
            });
        }
        let (eta, zeta) = if kappa.is_infinite() {
            (1.0, 0.0)
        } else {
            ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
        };
        Ok(LinkParams { beta, kappa, eta, zeta })
    }
}

/// Everything user-specific that is fixed for a drop: link statistics,
/// steering vectors, and correlation matrices with their square roots.
#[derive(Clone, Debug)]
pub struct UserStats {
    pub d: LinkParams,
    pub rb: LinkParams,
    pub ur: LinkParams,
    /// BS steering toward the UE (length M).
    pub a_d: DVector<C64>,
    /// BS steering toward the RIS (length M).
    pub a_b: DVector<C64>,
    /// RIS steering toward the BS (length N).
    pub a_r: DVector<C64>,
    /// RIS steering toward the UE (length N).
    pub a_ur: DVector<C64>,
    pub r_d: DMatrix<f64>,
    pub r_b: DMatrix<f64>,
    pub r_r: DMatrix<f64>,
    pub r_ur: DMatrix<f64>,
    pub s_d: DMatrix<f64>,
    pub s_b: DMatrix<f64>,
    pub s_r: DMatrix<f64>,
    pub s_ur: DMatrix<f64>,
}

/// Immutable description of one drop: geometry, arrays, subsurface
/// partition, per-user statistics, and the transmit SNR scale.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub geometry: Geometry,
    pub arrays: ArrayLayout,
    pub k_users: usize,
    pub n_k: Vec<usize>,
    pub users: Vec<UserStats>,
    pub positions: Vec<[f64; 2]>,
    pub es_over_sigma2: f64,
}

impl Scenario {
    pub fn m(&self) -> usize {
        self.arrays.m()
    }

    pub fn n(&self) -> usize {
        self.arrays.n()
    }

    /// Column/element range of subsurface `s` inside length-N vectors.
    pub fn block_range(&self, s: usize) -> std::ops::Range<usize> {
        let start: usize = self.n_k[..s].iter().sum();
        start..start + self.n_k[s]
    }
}

/// One sampled realization: per user k, the direct channel h_d (M), the
/// RIS-BS channel H_rb (M×N), and the UE-RIS channel h_ur (N), all in user
/// k's frequency band.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub h_d: Vec<DVector<C64>>,
    pub h_rb: Vec<DMatrix<C64>>,
    pub h_ur: Vec<DVector<C64>>,
}

/// Template for [`build_scenario`]: everything except user positions.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub geometry: Geometry,
    pub arrays: ArrayLayout,
    pub k_users: usize,
    /// Explicit subsurface sizes; empty means the equal split N/K.
    pub n_k: Vec<usize>,
    pub kappa_d: f64,
    pub kappa_rb: f64,
    pub kappa_ur: f64,
    pub es_over_sigma2: f64,
}

/// User placement patterns: one cluster line (A), two cluster lines (B), or
/// independent uniform positions (C).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DropLayout {
    A,
    B,
    C,
}

/// Distance-law gain C_0·d^{−α} with C_0 = −30 dB at the 1 m reference.
pub fn pathloss(d: f64, alpha: f64) -> Result<f64> {
    if !(d >= 1.0) {
        return Err(Error::Domain {
            context: "pathloss",
            message: format!("distance {d} m is inside the 1 m reference"),
        });
    }
    Ok(REFERENCE_GAIN * d.powf(-alpha))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Spatial correlation R_{n,m} = sinc(2·d_{nm}) for element coordinates in
/// wavelengths; real symmetric with unit diagonal.
pub fn sinc_correlation(positions: &[[f64; 2]]) -> DMatrix<f64> {
    let n = positions.len();
    DMatrix::from_fn(n, n, |i, j| {
        let dx = positions[i][0] - positions[j][0];
        let dy = positions[i][1] - positions[j][1];
        sinc(2.0 * (dx * dx + dy * dy).sqrt())
    })
}

/// Principal square root of a real symmetric PSD matrix. Eigenvalues in
/// [−1e-9, 0) are clamped to zero (roundoff from near-singular sinc
/// matrices); anything lower is rejected.
pub fn psd_sqrt(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = nalgebra::SymmetricEigen::new(r.clone());
    let mut min_eig = f64::INFINITY;
    for &l in eig.eigenvalues.iter() {
        min_eig = min_eig.min(l);
    }
    if min_eig < -1e-9 {
        return Err(Error::NotPsd { min_eig });
    }
    let sqrt_l = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
    );
    let mut scaled = eig.eigenvectors.clone();
    for (mut col, &s) in scaled.column_iter_mut().zip(sqrt_l.iter()) {
        col *= s;
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Grid coordinates (in wavelengths) of an L_x × L_z array, row-major in
/// (p, q) — the same ordering [`vura_steering`] uses.
pub fn vura_positions(l_x: usize, l_z: usize, spacing: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(l_x * l_z);
    for p in 0..l_x {
        for q in 0..l_z {
            out.push([p as f64 * spacing, q as f64 * spacing]);
        }
    }
    out
}

/// Vertical-URA steering vector: entry (p, q), row-major, equals
/// exp(j·2π·d·(p·sinθ·cosφ + q·cosθ)). Unit-modulus entries, ‖a‖² = L_x·L_z.
pub fn vura_steering(l_x: usize, l_z: usize, spacing: f64, theta: f64, phi: f64) -> DVector<C64> {
    let st_cp = theta.sin() * phi.cos();
    let ct = theta.cos();
    let mut out = DVector::zeros(l_x * l_z);
    for p in 0..l_x {
        for q in 0..l_z {
            let phase = 2.0 * PI * spacing * (p as f64 * st_cp + q as f64 * ct);
            out[p * l_z + q] = C64::from_polar(1.0, phase);
        }
    }
    out
}

/// Draws K user positions for the requested layout via rejection sampling
/// inside the corridor, honouring the RIS exclusion zone.
pub fn drop_users<R: Rng>(
    layout: DropLayout,
    geometry: &Geometry,
    k_users: usize,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    if k_users == 0 {
        return Err(Error::Domain { context: "drop_users", message: "K must be >= 1".into() });
    }
    if layout == DropLayout::B && k_users % 2 != 0 {
        return Err(Error::Domain {
            context: "drop_users",
            message: format!("layout B needs even K, got {k_users}"),
        });
    }
    match layout {
        DropLayout::A => drop_cluster(geometry, k_users, rng),
        DropLayout::B => {
            let mut first = drop_cluster(geometry, k_users / 2, rng)?;
            first.extend(drop_cluster(geometry, k_users / 2, rng)?);
            Ok(first)
        }
        DropLayout::C => (0..k_users).map(|_| drop_single(geometry, rng)).collect(),
    }
}

fn in_corridor(geometry: &Geometry, t: f64, s: f64) -> bool {
    t >= 0.0
        && t <= geometry.corridor_length
        && s.abs() <= geometry.corridor_half_width
        && t * t + s * s >= geometry.exclusion_radius * geometry.exclusion_radius
}

fn drop_single<R: Rng>(geometry: &Geometry, rng: &mut R) -> Result<[f64; 2]> {
    for _ in 0..DROP_ATTEMPT_CAP {
        let t = rng.gen::<f64>() * geometry.corridor_length;
        let s = (2.0 * rng.gen::<f64>() - 1.0) * geometry.corridor_half_width;
        if in_corridor(geometry, t, s) {
            return Ok(geometry.corridor_point(t, s));
        }
    }
    Err(Error::Geometry(
        "could not place a user outside the exclusion zone; corridor too small".into(),
    ))
}

/// One cluster: a uniformly placed centre with `count` users on a line along
/// the corridor axis, spaced [`CLUSTER_SPACING`] apart.
fn drop_cluster<R: Rng>(
    geometry: &Geometry,
    count: usize,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    let span = (count - 1) as f64 * CLUSTER_SPACING;
    if span > geometry.corridor_length {
        return Err(Error::Geometry(format!(
            "cluster of {count} users spans {span} m, longer than the {} m corridor",
            geometry.corridor_length
        )));
    }
    for _ in 0..DROP_ATTEMPT_CAP {
        let t_c = rng.gen::<f64>() * geometry.corridor_length;
        let s_c = (2.0 * rng.gen::<f64>() - 1.0) * geometry.corridor_half_width;
        let offsets: Vec<f64> =
            (0..count).map(|i| t_c + (i as f64 - 0.5 * (count - 1) as f64) * CLUSTER_SPACING).collect();
        if offsets.iter().all(|&t| in_corridor(geometry, t, s_c)) {
            return Ok(offsets.iter().map(|&t| geometry.corridor_point(t, s_c)).collect());
        }
    }
    Err(Error::Geometry(
        "could not place a cluster inside the corridor; exclusion zone too dominant".into(),
    ))
}

/// Resolves the subsurface partition: explicit sizes must sum to N, the
/// default equal split needs K | N.
pub fn resolve_partition(k_users: usize, n: usize, explicit: &[usize]) -> Result<Vec<usize>> {
    if explicit.is_empty() {
        if k_users == 0 || n % k_users != 0 {
            return Err(Error::Validation(vec![format!(
                "K = {k_users} does not divide N = {n}; give explicit subsurface sizes"
            )]));
        }
        return Ok(vec![n / k_users; k_users]);
    }
    let mut problems = Vec::new();
    if explicit.len() != k_users {
        problems.push(format!("{} subsurface sizes for K = {k_users} users", explicit.len()));
    }
    if explicit.iter().any(|&s| s == 0) {
        problems.push("subsurface sizes must be >= 1".into());
    }
    let total: usize = explicit.iter().sum();
    if total != n {
        problems.push(format!("subsurface sizes sum to {total}, want N = {n}"));
    }
    if problems.is_empty() {
        Ok(explicit.to_vec())
    } else {
        Err(Error::Validation(problems))
    }
}

/// Assembles the full per-user statistics for fixed user positions.
pub fn build_scenario(spec: &ScenarioSpec, positions: &[[f64; 2]]) -> Result<Scenario> {
    if positions.len() != spec.k_users {
        return Err(Error::Dimension {
            context: "build_scenario",
            message: format!("{} positions for K = {}", positions.len(), spec.k_users),
        });
    }
    let arrays = spec.arrays;
    let n_k = resolve_partition(spec.k_users, arrays.n(), &spec.n_k)?;

    let ris = spec.geometry.ris_position();
    let phi_bs_to_ris = spec.geometry.ris_angle;
    let phi_ris_to_bs = (-ris[1]).atan2(-ris[0]);
    let theta = PI / 2.0; // equal heights

    let r_b = sinc_correlation(&vura_positions(arrays.m_x, arrays.m_z, arrays.d_b));
    let s_b = psd_sqrt(&r_b)?;
    let r_r = sinc_correlation(&vura_positions(arrays.n_x, arrays.n_z, arrays.d_r));
    let s_r = psd_sqrt(&r_r)?;

    let a_b = vura_steering(arrays.m_x, arrays.m_z, arrays.d_b, theta, phi_bs_to_ris);
    let a_r = vura_steering(arrays.n_x, arrays.n_z, arrays.d_r, theta, phi_ris_to_bs);
    let beta_rb = pathloss(spec.geometry.ris_distance, ALPHA_RB)?;

    let mut users = Vec::with_capacity(spec.k_users);
    for p in positions {
        let d_bs = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let (dx, dy) = (p[0] - ris[0], p[1] - ris[1]);
        let d_ris = (dx * dx + dy * dy).sqrt();
        users.push(UserStats {
            d: LinkParams::new(pathloss(d_bs, ALPHA_D)?, spec.kappa_d)?,
            rb: LinkParams::new(beta_rb, spec.kappa_rb)?,
            ur: LinkParams::new(pathloss(d_ris, ALPHA_UR)?, spec.kappa_ur)?,
            a_d: vura_steering(arrays.m_x, arrays.m_z, arrays.d_b, theta, p[1].atan2(p[0])),
            a_b: a_b.clone(),
            a_r: a_r.clone(),
            a_ur: vura_steering(arrays.n_x, arrays.n_z, arrays.d_r, theta, dy.atan2(dx)),
            r_d: r_b.clone(),
            r_b: r_b.clone(),
            r_r: r_r.clone(),
            r_ur: r_r.clone(),
            s_d: s_b.clone(),
            s_b: s_b.clone(),
            s_r: s_r.clone(),
            s_ur: s_r.clone(),
        });
    }

    Ok(Scenario {
        geometry: spec.geometry,
        arrays,
        k_users: spec.k_users,
        n_k,
        users,
        positions: positions.to_vec(),
        es_over_sigma2: spec.es_over_sigma2,
    })
}

/// Standard complex Gaussian split into real/imaginary parts, each entry
/// (x + jy)/√2 drawn in row-major order (fixed draw order is part of the
/// reproducibility contract).
fn draw_gaussian_pair<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut re = DMatrix::zeros(rows, cols);
    let mut im = DMatrix::zeros(rows, cols);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..rows {
        for j in 0..cols {
            re[(i, j)] = s * rng.sample::<f64, _>(StandardNormal);
            im[(i, j)] = s * rng.sample::<f64, _>(StandardNormal);
        }
    }
    (re, im)
}

/// Draws one full realization (all K users, all three links per user). The
/// scattered parts use real matrix products on the split real/imaginary
/// components — the correlation roots are real symmetric.
pub fn sample_channels<R: Rng>(s: &Scenario, rng: &mut R) -> ChannelRealization {
    let m = s.m();
    let n = s.n();
    let mut h_d = Vec::with_capacity(s.k_users);
    let mut h_rb = Vec::with_capacity(s.k_users);
    let mut h_ur = Vec::with_capacity(s.k_users);

    for u in &s.users {
        let (dr, di) = draw_gaussian_pair(rng, m, 1);
        let sc = u.d.zeta * u.d.beta.sqrt();
        let (wr, wi) = (&u.s_d * dr * sc, &u.s_d * di * sc);
        let lo = u.d.eta * u.d.beta.sqrt();
        h_d.push(DVector::from_fn(m, |i, _| lo * u.a_d[i] + C64::new(wr[(i, 0)], wi[(i, 0)])));

        let (ur_, ui_) = draw_gaussian_pair(rng, m, n);
        let sc = u.rb.zeta * u.rb.beta.sqrt();
        let (wr, wi) = (&u.s_b * ur_ * &u.s_r * sc, &u.s_b * ui_ * &u.s_r * sc);
        let lo = u.rb.eta * u.rb.beta.sqrt();
        h_rb.push(DMatrix::from_fn(m, n, |i, j| {
            lo * u.a_b[i] * u.a_r[j].conj() + C64::new(wr[(i, j)], wi[(i, j)])
        }));

        let (gr, gi) = draw_gaussian_pair(rng, n, 1);
        let sc = u.ur.zeta * u.ur.beta.sqrt();
        let (wr, wi) = (&u.s_ur * gr * sc, &u.s_ur * gi * sc);
        let lo = u.ur.eta * u.ur.beta.sqrt();
        h_ur.push(DVector::from_fn(n, |i, _| lo * u.a_ur[i] + C64::new(wr[(i, 0)], wi[(i, 0)])));
    }

    ChannelRealization { h_d, h_rb, h_ur }
}
