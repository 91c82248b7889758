//! Optic-axis profiles θ(u) for patterned waveplates.
//!
//! Profiles are functions of the normalized coordinate `u = position / Λ`
//! along one axis, so a profile whose net increase over one period is a
//! multiple of π yields a field periodic in Λ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;

/// One term `amplitude · sin(2π · order · u + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub order: u32,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThetaProfile {
    /// `θ = offset + slope · u`; `slope = π` gives a polarization grating.
    Linear {
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `θ = Σ_k coeffs[k] · u^k`.
    Polynomial { coeffs: Vec<f64> },
    /// `θ = offset + π · windings · u + Σ harmonics`.
    Fourier {
        #[serde(default)]
        windings: i32,
        #[serde(default)]
        offset: f64,
        harmonics: Vec<Harmonic>,
    },
}

impl ThetaProfile {
    pub fn grating() -> Self {
        ThetaProfile::Linear {
            slope: std::f64::consts::PI,
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        let ok = match self {
            ThetaProfile::Linear { slope, offset } => finite(*slope) && finite(*offset),
            ThetaProfile::Polynomial { coeffs } => !coeffs.is_empty() && coeffs.iter().all(|c| finite(*c)),
            ThetaProfile::Fourier {
                offset, harmonics, ..
            } => {
                finite(*offset)
                    && harmonics
                        .iter()
                        .all(|h| h.order > 0 && finite(h.amplitude) && finite(h.phase))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid theta profile {self:?}")))
        }
    }

    pub fn eval<T: Real>(&self, u: T) -> T {
        let two_pi = T::PI() + T::PI();
        match self {
            ThetaProfile::Linear { slope, offset } => T::lit(*offset) + T::lit(*slope) * u,
            ThetaProfile::Polynomial { coeffs } => coeffs
                .iter()
                .rev()
                .fold(T::zero(), |acc, &c| acc * u + T::lit(c)),
            ThetaProfile::Fourier {
                windings,
                offset,
                harmonics,
            } => {
                let base = T::lit(*offset) + T::PI() * T::lit(*windings as f64) * u;
                harmonics.iter().fold(base, |acc, h| {
                    let arg = two_pi * T::lit(h.order as f64) * u + T::lit(h.phase);
                    acc + T::lit(h.amplitude) * arg.sin()
                })
            }
        }
    }
}

/// Direction a plate is patterned along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[default]
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Uniform-retardance waveplate with a patterned optic axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateSpec {
    /// Retardance δ in radians.
    pub delta: f64,
    #[serde(default)]
    pub axis: Axis,
    pub profile: ThetaProfile,
}

impl PlateSpec {
    pub fn validate<T: Real>(&self, grid: &GridSpec<T>) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::InvalidConfig("plate retardance must be finite".into()));
        }
        if self.axis == Axis::Y && grid.dims == 1 {
            return Err(Error::InvalidConfig(
                "plate patterned along y on a one-dimensional grid".into(),
            ));
        }
        self.profile.validate()
    }

    /// θ at the sample with physical coordinates `(x, y)` in mm.
    pub fn theta_at<T: Real>(&self, grid: &GridSpec<T>, x: T, y: T) -> T {
        let (pos, period) = match self.axis {
            Axis::X => (x, grid.period[0]),
            Axis::Y => (y, grid.period[1]),
        };
        self.profile.eval(pos / period)
    }
}
