//! TOML experiment configuration: strict schema (unknown keys are parse
//! errors), per-section defaults matching the reference setup, and a
//! validator that reports every violation at once.

use crate::channel::{ArrayLayout, DropLayout, Geometry, ScenarioSpec};
use crate::error::{Error, Result};
use crate::mc::{AnchorPreset, ExperimentConfig};
use crate::phase::Method;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub geometry: GeometrySection,
    pub arrays: ArraysSection,
    pub channel: ChannelSection,
    pub system: SystemSection,
    pub run: RunSection,
    pub cisd: CisdSection,
    pub calibration: CalibrationSection,
    pub sweep: SweepSection,
}

/// Deployment geometry, metres and radians. The BS sits at the origin; the
/// user corridor starts at the RIS and runs along the BS→RIS axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub ris_distance: f64,
    pub ris_angle: f64,
    pub corridor_length: f64,
    pub corridor_half_width: f64,
    pub exclusion_radius: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = Geometry::default();
        GeometrySection {
            ris_distance: g.ris_distance,
            ris_angle: g.ris_angle,
            corridor_length: g.corridor_length,
            corridor_half_width: g.corridor_half_width,
            exclusion_radius: g.exclusion_radius,
        }
    }
}

/// Array shapes (elements) and spacings (wavelengths): M = m_x·m_z at the
/// BS, N = n_x·n_z at the RIS.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraysSection {
    pub m_x: usize,
    pub m_z: usize,
    pub n_x: usize,
    pub n_z: usize,
    pub d_b: f64,
    pub d_r: f64,
}

impl Default for ArraysSection {
    fn default() -> Self {
        ArraysSection { m_x: 4, m_z: 4, n_x: 16, n_z: 8, d_b: 0.5, d_r: 0.1 }
    }
}

/// Ricean K-factors, linear. `inf` is the TOML literal for a pure LoS link.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub kappa_d: f64,
    pub kappa_rb: f64,
    pub kappa_ur: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection { kappa_d: 1.0, kappa_rb: 1.0, kappa_ur: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub k_users: usize,
    /// Explicit subsurface sizes; empty means the equal split N/K.
    pub n_k: Vec<usize>,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection { k_users: 1, n_k: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub method: Method,
    pub layout: DropLayout,
    pub drops: u64,
    pub replicates: u64,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            method: Method::SdLos,
            layout: DropLayout::C,
            drops: 100,
            replicates: 1000,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CisdSection {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CisdSection {
    fn default() -> Self {
        CisdSection { tol: 1e-4, max_iters: 50 }
    }
}

/// Transmit-power scale: either a named anchor (solved so that anchor's mean
/// SNR is 5 dB) or an explicit linear E_s/σ². Setting both is an error.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub anchor: Option<AnchorPreset>,
    pub es_over_sigma2: Option<f64>,
}

/// Optional parameter sweep, `"start:step:end"` inclusive of both ends.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub eta_rb: Option<String>,
}

impl Config {
    pub fn from_str(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        Config::from_str(&std::fs::read_to_string(path)?)
    }

    /// Checks every invariant and reports all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let g = &self.geometry;
        if !(g.ris_distance >= 1.0) {
            bad.push(format!(
                "geometry.ris_distance = {} must be >= 1 m (pathloss reference)",
                g.ris_distance
            ));
        }
        if !(g.corridor_length > 0.0) {
            bad.push(format!("geometry.corridor_length = {} must be > 0", g.corridor_length));
        }
        if !(g.corridor_half_width > 0.0) {
            bad.push(format!(
                "geometry.corridor_half_width = {} must be > 0",
                g.corridor_half_width
            ));
        }
        if !(g.exclusion_radius >= 1.0) {
            bad.push(format!(
                "geometry.exclusion_radius = {} must be >= 1 m (pathloss reference)",
                g.exclusion_radius
            ));
        }
        if g.exclusion_radius >= (g.corridor_length.powi(2) + g.corridor_half_width.powi(2)).sqrt()
        {
            bad.push("geometry: exclusion zone swallows the whole corridor".into());
        }

        let a = &self.arrays;
        for (name, v) in
            [("m_x", a.m_x), ("m_z", a.m_z), ("n_x", a.n_x), ("n_z", a.n_z)]
        {
            if v == 0 {
                bad.push(format!("arrays.{name} must be >= 1"));
            }
        }
        for (name, v) in [("d_b", a.d_b), ("d_r", a.d_r)] {
            if !(v > 0.0) {
                bad.push(format!("arrays.{name} = {v} must be > 0"));
            }
        }

        for (name, v) in [
            ("kappa_d", self.channel.kappa_d),
            ("kappa_rb", self.channel.kappa_rb),
            ("kappa_ur", self.channel.kappa_ur),
        ] {
            let ok = v == f64::INFINITY || (0.0..=1e3).contains(&v);
            if !ok {
                bad.push(format!("channel.{name} = {v} must be in [0, 1e3] or inf"));
            }
        }

        let sys = &self.system;
        let n = a.n_x * a.n_z;
        if sys.k_users == 0 {
            bad.push("system.k_users must be >= 1".into());
        } else if sys.n_k.is_empty() {
            if n % sys.k_users != 0 {
                bad.push(format!(
                    "system: K = {} does not divide N = {n}; give explicit n_k",
                    sys.k_users
                ));
            }
        } else {
            if sys.n_k.len() != sys.k_users {
                bad.push(format!(
                    "system.n_k has {} entries for K = {}",
                    sys.n_k.len(),
                    sys.k_users
                ));
            }
            if sys.n_k.iter().any(|&v| v == 0) {
                bad.push("system.n_k entries must be >= 1".into());
            }
            if sys.n_k.iter().sum::<usize>() != n {
                bad.push(format!(
                    "system.n_k sums to {} but N = {n}",
                    sys.n_k.iter().sum::<usize>()
                ));
            }
        }

        let r = &self.run;
        if r.drops == 0 {
            bad.push("run.drops must be >= 1".into());
        }
        if r.replicates == 0 {
            bad.push("run.replicates must be >= 1".into());
        }
        if r.layout == DropLayout::B && sys.k_users % 2 != 0 {
            bad.push(format!("run.layout = B needs an even K, got {}", sys.k_users));
        }
        let cluster = match r.layout {
            DropLayout::A => Some(sys.k_users),
            DropLayout::B => Some(sys.k_users / 2),
            DropLayout::C => None,
        };
        if let Some(c) = cluster {
            let span = (c.saturating_sub(1)) as f64 * crate::channel::CLUSTER_SPACING;
            if span > g.corridor_length {
                bad.push(format!(
                    "run.layout = {:?}: cluster span {span} m exceeds corridor length {} m",
                    r.layout, g.corridor_length
                ));
            }
        }

        if !(self.cisd.tol > 0.0) {
            bad.push(format!("cisd.tol = {} must be > 0", self.cisd.tol));
        }
        if self.cisd.max_iters == 0 {
            bad.push("cisd.max_iters must be >= 1".into());
        }

        let c = &self.calibration;
        if c.anchor.is_some() && c.es_over_sigma2.is_some() {
            bad.push("calibration: set either anchor or es_over_sigma2, not both".into());
        }
        if let Some(es) = c.es_over_sigma2 {
            if !(es > 0.0 && es.is_finite()) {
                bad.push(format!("calibration.es_over_sigma2 = {es} must be finite and > 0"));
            }
        }

        if let Some(spec) = &self.sweep.eta_rb {
            if let Err(e) = parse_sweep(spec) {
                bad.push(format!("sweep.eta_rb: {e}"));
            }
        }

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Resolves the power scale: explicit value, or the (default `general`)
    /// anchor calibration.
    pub fn resolve_es(&self) -> Result<f64> {
        if let Some(es) = self.calibration.es_over_sigma2 {
            return Ok(es);
        }
        crate::mc::calibrate_es(self.calibration.anchor.unwrap_or(AnchorPreset::General))
    }

    pub fn scenario_spec(&self, es_over_sigma2: f64) -> ScenarioSpec {
        ScenarioSpec {
            geometry: Geometry {
                ris_distance: self.geometry.ris_distance,
                ris_angle: self.geometry.ris_angle,
                corridor_length: self.geometry.corridor_length,
                corridor_half_width: self.geometry.corridor_half_width,
                exclusion_radius: self.geometry.exclusion_radius,
            },
            arrays: ArrayLayout {
                m_x: self.arrays.m_x,
                m_z: self.arrays.m_z,
                n_x: self.arrays.n_x,
                n_z: self.arrays.n_z,
                d_b: self.arrays.d_b,
                d_r: self.arrays.d_r,
            },
            k_users: self.system.k_users,
            n_k: self.system.n_k.clone(),
            kappa_d: self.channel.kappa_d,
            kappa_rb: self.channel.kappa_rb,
            kappa_ur: self.channel.kappa_ur,
            es_over_sigma2,
        }
    }

    /// Full experiment config with the power scale resolved.
    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        self.validate()?;
        let es = self.resolve_es()?;
        Ok(ExperimentConfig {
            spec: self.scenario_spec(es),
            method: self.run.method,
            layout: self.run.layout,
            n_drops: self.run.drops,
            n_replicates: self.run.replicates,
            master_seed: self.run.seed,
            cisd_tol: self.cisd.tol,
            cisd_max_iters: self.cisd.max_iters,
        })
    }
}

/// Parses `"start:step:end"` into the inclusive grid it denotes.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!(
            "sweep '{spec}' must be start:step:end"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("sweep '{spec}': '{p}' is not a number")))
        })
        .collect::<Result<_>>()?;
    let (start, step, end) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start {
        return Err(Error::Parse(format!(
            "sweep '{spec}' needs step > 0 and end >= start"
        )));
    }
    let count = ((end - start) / step).round() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - end).abs() < 1e-9 {
            *last = end;
        } else if *last < end - 1e-9 {
            grid.push(end);
        }
    }
    Ok(grid)
}
