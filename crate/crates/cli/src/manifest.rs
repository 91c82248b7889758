//! Experiment manifests (TOML) and the two shipped presets.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};

use fqpt_core::forward::{derive_seed, Axis, Harmonic, NoiseModel, NoiseSpec, PlateSpec, Protocol, ThetaProfile};
use fqpt_core::grid::{BeamEnvelope, GridSpec, OpticalSetup};
use fqpt_core::ml::{MlConfig, Seeding};
use fqpt_core::reconstruct::{FqptConfig, XiGrid, XiOptions};
use fqpt_core::retrieval::GsSchedule;
use fqpt_core::su2::Polarization;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const PRESETS: [&str; 2] = ["paper-1d", "paper-2d"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub model: NoiseModel,
    #[serde(default)]
    pub amplitude: f64,
    /// Derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            model: NoiseModel::None,
            amplitude: 0.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsSection {
    pub trials: usize,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_window")]
    pub stall_window: usize,
}

fn default_tolerance() -> f64 {
    GsSchedule::new(1, 1, 0).tolerance
}

fn default_window() -> usize {
    GsSchedule::new(1, 1, 0).stall_window
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FqptSection {
    #[serde(default = "default_xi_n")]
    pub xi_grid: usize,
    #[serde(default)]
    pub xi: XiOptions,
    #[serde(default = "default_sigmas")]
    pub noise_floor_sigmas: f64,
    #[serde(default = "default_leakage")]
    pub noise_leakage: f64,
}

fn default_xi_n() -> usize {
    XiGrid::default().n
}

fn default_sigmas() -> f64 {
    FqptConfig::new(Protocol::Full7, GsSchedule::new(1, 1, 0)).noise_floor_sigmas
}

fn default_leakage() -> f64 {
    FqptConfig::new(Protocol::Full7, GsSchedule::new(1, 1, 0)).noise_leakage
}

impl Default for FqptSection {
    fn default() -> Self {
        Self {
            xi_grid: default_xi_n(),
            xi: XiOptions::default(),
            noise_floor_sigmas: default_sigmas(),
            noise_leakage: default_leakage(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlSection {
    #[serde(default = "ml_evals")]
    pub max_evals: usize,
    #[serde(default = "ml_restarts")]
    pub restarts: usize,
    #[serde(default = "ml_weight")]
    pub continuity_weight: f64,
    #[serde(default = "ml_seeding")]
    pub seeding: Seeding,
    #[serde(default = "ml_restart_above")]
    pub restart_above: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn ml_evals() -> usize {
    MlConfig::default().max_evals
}
fn ml_restarts() -> usize {
    MlConfig::default().restarts
}
fn ml_weight() -> f64 {
    MlConfig::default().continuity_weight
}
fn ml_seeding() -> Seeding {
    MlConfig::default().seeding
}
fn ml_restart_above() -> f64 {
    MlConfig::default().restart_above
}

impl Default for MlSection {
    fn default() -> Self {
        Self {
            max_evals: ml_evals(),
            restarts: ml_restarts(),
            continuity_weight: ml_weight(),
            seeding: ml_seeding(),
            restart_above: ml_restart_above(),
            seed: None,
        }
    }
}

fn default_name() -> String {
    "experiment".into()
}

fn default_prep() -> Polarization {
    Polarization::L
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    #[serde(default = "default_name")]
    pub name: String,
    /// Master seed; every stage seed not given explicitly is derived from it.
    pub seed: u64,
    pub protocol: Protocol,
    /// Preparation of the unprojected far map.
    #[serde(default = "default_prep")]
    pub reference_prep: Polarization,
    pub grid: GridSpec<f64>,
    #[serde(default)]
    pub optics: OpticalSetup,
    #[serde(default)]
    pub envelope: BeamEnvelope,
    /// In optical order.
    pub plates: Vec<PlateSpec>,
    #[serde(default)]
    pub noise: NoiseSection,
    pub gs: GsSection,
    #[serde(default)]
    pub fqpt: FqptSection,
    #[serde(default)]
    pub ml: MlSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn field_err(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::InvalidManifest(format!("{field}: {e}"))
}

impl ExperimentManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| CliError::InvalidManifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate().map_err(|e| field_err("grid", e))?;
        self.optics.validate().map_err(|e| field_err("optics", e))?;
        if let BeamEnvelope::Gaussian { waist_mm } = self.envelope {
            if !(waist_mm > 0.0) {
                return Err(field_err("envelope.waist_mm", "must be positive"));
            }
        }
        if self.plates.is_empty() {
            return Err(field_err("plates", "at least one plate is required"));
        }
        for (i, p) in self.plates.iter().enumerate() {
            p.validate(&self.grid).map_err(|e| field_err(&format!("plates[{i}]"), e))?;
        }
        self.noise_spec().validate().map_err(|e| field_err("noise", e))?;
        self.schedule().validate().map_err(|e| field_err("gs", e))?;
        XiGrid { n: self.fqpt.xi_grid }
            .validate()
            .map_err(|e| field_err("fqpt.xi_grid", e))?;
        if !(self.fqpt.noise_floor_sigmas >= 0.0) || !(self.fqpt.noise_leakage > 0.0) {
            return Err(field_err("fqpt", "noise_floor_sigmas must be >= 0 and noise_leakage > 0"));
        }
        self.ml_config().validate().map_err(|e| field_err("ml", e))?;
        Ok(())
    }

    /// Copy with every stage seed filled in.
    pub fn resolved(&self) -> Self {
        let mut m = self.clone();
        m.noise.seed.get_or_insert(derive_seed(self.seed, "noise"));
        m.gs.seed.get_or_insert(derive_seed(self.seed, "gs"));
        m.ml.seed.get_or_insert(derive_seed(self.seed, "ml"));
        m
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            model: self.noise.model,
            amplitude: self.noise.amplitude,
            seed: self.noise.seed.unwrap_or_else(|| derive_seed(self.seed, "noise")),
        }
    }

    pub fn schedule(&self) -> GsSchedule {
        GsSchedule {
            trials: self.gs.trials,
            iterations: self.gs.iterations,
            seed: self.gs.seed.unwrap_or_else(|| derive_seed(self.seed, "gs")),
            tolerance: self.gs.tolerance,
            stall_window: self.gs.stall_window,
        }
    }

    /// Reconstruction settings; `protocol` must be a Fourier protocol.
    pub fn fqpt_config(&self, protocol: Protocol) -> FqptConfig {
        FqptConfig {
            protocol,
            schedule: self.schedule(),
            xi_grid: XiGrid { n: self.fqpt.xi_grid },
            xi: self.fqpt.xi,
            noise_floor_sigmas: self.fqpt.noise_floor_sigmas,
            noise_leakage: self.fqpt.noise_leakage,
        }
    }

    pub fn ml_config(&self) -> MlConfig {
        MlConfig {
            max_evals: self.ml.max_evals,
            restarts: self.ml.restarts,
            continuity_weight: self.ml.continuity_weight,
            seeding: self.ml.seeding,
            seed: self.ml.seed.unwrap_or_else(|| derive_seed(self.seed, "ml")),
            restart_above: self.ml.restart_above,
        }
    }
}

fn fourier(harmonics: &[(u32, f64, f64)]) -> ThetaProfile {
    ThetaProfile::Fourier {
        windings: 1,
        offset: 0.0,
        harmonics: harmonics
            .iter()
            .map(|&(order, amplitude, phase)| Harmonic { order, amplitude, phase })
            .collect(),
    }
}

/// δ = π plate with a periodic modulation along x, 128 samples over one period.
pub fn paper_1d() -> ExperimentManifest {
    ExperimentManifest {
        name: "paper-1d".into(),
        seed: 1,
        protocol: Protocol::Full7,
        reference_prep: Polarization::L,
        grid: GridSpec::one_d(128, 2.5, 1),
        optics: OpticalSetup::default(),
        envelope: BeamEnvelope::Uniform,
        plates: vec![PlateSpec {
            delta: PI,
            axis: Axis::X,
            profile: fourier(&[(1, 0.6, 0.3), (2, 0.35, 1.1 + FRAC_PI_2)]),
        }],
        noise: NoiseSection::default(),
        gs: GsSection {
            trials: 100,
            iterations: 1000,
            seed: None,
            tolerance: default_tolerance(),
            stall_window: default_window(),
        },
        fqpt: FqptSection::default(),
        ml: MlSection::default(),
        output: None,
    }
}

/// δ₁ = π/2 patterned along x followed by δ₂ = π along y, 64×64.
pub fn paper_2d() -> ExperimentManifest {
    let a = 0.3;
    ExperimentManifest {
        name: "paper-2d".into(),
        seed: 2,
        protocol: Protocol::Full7,
        reference_prep: Polarization::L,
        grid: GridSpec::two_d([64, 64], [2.5, 2.5], [1, 1]),
        optics: OpticalSetup::default(),
        envelope: BeamEnvelope::Uniform,
        plates: vec![
            PlateSpec {
                delta: FRAC_PI_2,
                axis: Axis::X,
                profile: fourier(&[(1, a * 0.6, 0.3), (2, a * 0.35, 1.1 + FRAC_PI_2)]),
            },
            PlateSpec {
                delta: PI,
                axis: Axis::Y,
                profile: fourier(&[(1, a * 0.5, 0.8), (2, a * 0.3, 2.0)]),
            },
        ],
        noise: NoiseSection::default(),
        gs: GsSection {
            trials: 50,
            iterations: 500,
            seed: None,
            tolerance: default_tolerance(),
            stall_window: default_window(),
        },
        fqpt: FqptSection::default(),
        ml: MlSection::default(),
        output: None,
    }
}

pub fn preset(name: &str) -> Option<ExperimentManifest> {
    match name {
        "paper-1d" => Some(paper_1d()),
        "paper-2d" => Some(paper_2d()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_survive_toml() {
        for name in PRESETS {
            let m = preset(name).unwrap();
            let back = ExperimentManifest::from_toml(&m.to_toml()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn resolution_fills_every_seed() {
        let m = paper_1d().resolved();
        assert!(m.noise.seed.is_some() && m.gs.seed.is_some() && m.ml.seed.is_some());
        assert_eq!(m.schedule(), paper_1d().schedule());
        assert_eq!(m.ml_config(), paper_1d().ml_config());
        assert_ne!(m.gs.seed, m.ml.seed);
    }

    #[test]
    fn errors_name_the_field() {
        let mut m = paper_1d();
        m.plates[0].axis = Axis::Y;
        let e = ExperimentManifest::from_toml(&m.to_toml()).unwrap_err().to_string();
        assert!(e.contains("plates[0]"), "{e}");

        let mut m = paper_1d();
        m.gs.trials = 0;
        let e = ExperimentManifest::from_toml(&m.to_toml()).unwrap_err().to_string();
        assert!(e.contains("gs"), "{e}");

        let text = paper_1d().to_toml().replace("kind = \"fourier\"", "kind = \"spiral\"");
        assert!(ExperimentManifest::from_toml(&text).is_err());
        assert!(ExperimentManifest::from_toml("seed = 1\n").is_err());
    }
}
