//! Run configuration, read from a TOML file. Every field has a default, so
//! an empty file describes the default run.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::deformation::{DeformationSpec, Sabotage};
use crate::error::{Error, Result};
use crate::geometry::{build_lattice_with_cfl, Lattice, MetricModel, SandwichParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Minkowski,
    Sandwich,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelChoice,
    pub t_min: f64,
    pub t_max: f64,
    pub circumference: f64,
    pub sandwich: SandwichParams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelChoice::Sandwich, t_min: 0.0, t_max: 4.5, circumference: 24.0, sandwich: SandwichParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub nt: usize,
    pub nx: usize,
    pub cfl: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { nt: 91, nx: 384, cfl: 0.9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub scalar_mass: f64,
    pub dirac_mass: f64,
    /// Bump radii of the localized sources, in lattice cells.
    pub source_cells_t: f64,
    pub source_cells_x: f64,
    /// Modes of the CCR check and Fock cutoff.
    pub ccr_modes: usize,
    pub ccr_cutoff: usize,
    /// Modes of the CAR check.
    pub car_modes: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            scalar_mass: 0.2,
            dirac_mass: 0.5,
            source_cells_t: 2.0,
            source_cells_x: 6.0,
            ccr_modes: 8,
            ccr_cutoff: 6,
            car_modes: 8,
        }
    }
}

/// Points `p1`, `p2` as `[t, x]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointsConfig {
    pub p1: [f64; 2],
    pub p2: [f64; 2],
}

impl Default for PointsConfig {
    fn default() -> Self {
        Self { p1: [4.0, 6.0], p2: [4.0, 18.0] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformationConfig {
    pub t_sigma: Option<f64>,
    pub t_sigma1: Option<f64>,
    pub t_sigma2: Option<f64>,
    pub gamma: Option<f64>,
    pub sabotage: Sabotage,
}

/// Thresholds. Upper bounds are multiplied by the tolerance scale, lower
/// bounds divided by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub locality: f64,
    pub witness: f64,
    pub support: f64,
    pub flatness: f64,
    pub pairing: f64,
    pub strict_law: f64,
    pub ccr: f64,
    pub car: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { locality: 1e-8, witness: 1e-3, support: 1e-8, flatness: 1e-8, pairing: 1e-6, strict_law: 5e-3, ccr: 1e-8, car: 1e-12 }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            locality: self.locality * s,
            witness: self.witness / s,
            support: self.support * s,
            flatness: self.flatness * s,
            pairing: self.pairing * s,
            strict_law: self.strict_law * s,
            ccr: self.ccr * s,
            car: self.car * s,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.locality, self.witness, self.support, self.flatness, self.pairing, self.strict_law, self.ccr, self.car];
        if all.iter().all(|&t| t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("all tolerances must be positive".into()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<String>,
    pub tol_scale: f64,
    /// Random morphism triples in the functor check.
    pub functor_triples: usize,
    pub model: ModelConfig,
    pub lattice: LatticeConfig,
    pub fields: FieldConfig,
    pub points: PointsConfig,
    pub deformation: DeformationConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20_250_101,
            out: None,
            tol_scale: 1.0,
            functor_triples: 100,
            model: ModelConfig::default(),
            lattice: LatticeConfig::default(),
            fields: FieldConfig::default(),
            points: PointsConfig::default(),
            deformation: DeformationConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(Error::Config("tol_scale must be positive".into()));
        }
        let m = &self.model;
        if !(m.t_max > m.t_min && m.circumference > 0.0) {
            return Err(Error::Config("model needs t_max > t_min and a positive circumference".into()));
        }
        if !(self.fields.scalar_mass >= 0.0 && self.fields.dirac_mass >= 0.0) {
            return Err(Error::Config("masses must be non-negative".into()));
        }
        if !(self.fields.source_cells_t >= 1.0 && self.fields.source_cells_x >= 1.0) {
            return Err(Error::Config("source radii must be at least one cell".into()));
        }
        Ok(())
    }

    /// Canonical JSON form, for diffing runs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Thresholds after applying the tolerance scale.
    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.scaled(self.tol_scale)
    }

    pub fn build_model(&self) -> Result<MetricModel> {
        let m = &self.model;
        match m.kind {
            ModelChoice::Minkowski => Ok(MetricModel::minkowski(m.t_min, m.t_max, m.circumference)),
            ModelChoice::Sandwich => MetricModel::sandwich(m.sandwich.clone(), m.t_min, m.t_max, m.circumference),
        }
    }

    pub fn build_lattice(&self, model: &MetricModel) -> Result<Lattice> {
        build_lattice_with_cfl(model, self.lattice.nt, self.lattice.nx, self.lattice.cfl)
    }

    /// Deformation spec with the configured points and slice times.
    pub fn deformation_spec(&self, model: Arc<MetricModel>, lattice: &Lattice) -> Result<DeformationSpec> {
        let [t1, x1] = self.points.p1;
        let [t2, x2] = self.points.p2;
        for t in [t1, t2] {
            if !(t > model.t_min && t < model.t_max) {
                return Err(Error::Config(format!("point time {t} outside the model")));
            }
        }
        let p1 = lattice.nearest_site(t1, x1);
        let p2 = lattice.nearest_site(t2, x2);
        let mut spec = DeformationSpec::new(model, lattice.clone(), p1, p2)?;
        let d = &self.deformation;
        spec.t_sigma = d.t_sigma.unwrap_or(spec.t_sigma);
        spec.t_sigma1 = d.t_sigma1.unwrap_or(spec.t_sigma1);
        spec.t_sigma2 = d.t_sigma2.unwrap_or(spec.t_sigma2);
        spec.gamma = d.gamma;
        spec.sabotage = d.sabotage;
        Ok(spec)
    }
}
