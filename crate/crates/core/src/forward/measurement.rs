//! Measurement bundles for the Fourier and the conventional protocols.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::field::Su2Field;
use crate::forward::intensity::{far_field_intensity_with, near_field_intensity, IntensityMap};
use crate::forward::noise::{apply_noise, NoiseSpec};
use crate::fourier::Dft2;
use crate::grid::{Grid, GridSpec, Plane};
use crate::scalar::Real;
use crate::su2::Polarization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Three near maps, three far maps and the unprojected far map.
    Full7,
    /// Channels `H` and `D` only, plus the unprojected far map.
    Minimal5,
    /// Sixteen near-plane projections.
    Ml16,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Full7 => "full7",
            Protocol::Minimal5 => "minimal5",
            Protocol::Ml16 => "ml16",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "full7" => Some(Protocol::Full7),
            "minimal5" => Some(Protocol::Minimal5),
            "ml16" => Some(Protocol::Ml16),
            _ => None,
        }
    }

    /// Channel states `a` whose diagonal element `⟨a|U|a⟩` is retrieved.
    pub fn channels(self) -> &'static [Polarization] {
        match self {
            Protocol::Full7 => &[Polarization::H, Polarization::D, Polarization::L],
            Protocol::Minimal5 => &[Polarization::H, Polarization::D],
            Protocol::Ml16 => &[],
        }
    }

    pub fn map_count(self) -> usize {
        match self {
            Protocol::Full7 => 7,
            Protocol::Minimal5 => 5,
            Protocol::Ml16 => 16,
        }
    }

    /// Keys of the maps the protocol consumes, in a fixed order.
    pub fn required_keys(self, reference_prep: Polarization) -> Vec<MapKey> {
        match self {
            Protocol::Full7 | Protocol::Minimal5 => {
                let mut keys: Vec<MapKey> =
                    self.channels().iter().map(|&a| MapKey::near(a, a)).collect();
                keys.extend(self.channels().iter().map(|&a| MapKey::far(a, Some(a))));
                keys.push(MapKey::far(reference_prep, None));
                keys
            }
            Protocol::Ml16 => {
                let mut keys = Vec::with_capacity(16);
                for prep in ML_DESIGN {
                    for proj in ML_DESIGN {
                        keys.push(MapKey::near(prep, proj));
                    }
                }
                keys
            }
        }
    }
}

/// Preparation and projection states of the sixteen-map design.
pub const ML_DESIGN: [Polarization; 4] = [
    Polarization::H,
    Polarization::D,
    Polarization::L,
    Polarization::R,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MapKey {
    pub plane: Plane,
    pub prep: Polarization,
    pub proj: Option<Polarization>,
}

impl MapKey {
    pub fn near(prep: Polarization, proj: Polarization) -> Self {
        Self {
            plane: Plane::Near,
            prep,
            proj: Some(proj),
        }
    }

    pub fn far(prep: Polarization, proj: Option<Polarization>) -> Self {
        Self {
            plane: Plane::Far,
            prep,
            proj,
        }
    }

    pub fn of(map: &IntensityMap<impl Real>) -> Self {
        Self {
            plane: map.plane,
            prep: map.prep,
            proj: map.proj,
        }
    }

    /// `near_H_H`, `far_L_none`, ...
    pub fn label(&self) -> String {
        format!(
            "{}_{}_{}",
            self.plane.label(),
            self.prep.label(),
            self.proj.map_or("none", |p| p.label())
        )
    }

    pub fn parse(label: &str) -> Option<Self> {
        let mut parts = label.split('_');
        let plane = Plane::from_label(parts.next()?)?;
        let prep = Polarization::from_label(parts.next()?)?;
        let proj = match parts.next()? {
            "none" => None,
            p => Some(Polarization::from_label(p)?),
        };
        if parts.next().is_some() {
            return None;
        }
        Some(Self { plane, prep, proj })
    }
}

impl fmt::Display for MapKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Maps keyed by plane and polarization labels, on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet<T> {
    pub spec: GridSpec<T>,
    /// Preparation of the unprojected far map.
    pub reference_prep: Polarization,
    /// Beam intensity envelope; `None` is uniform.
    pub envelope: Option<Grid<T>>,
    maps: BTreeMap<MapKey, IntensityMap<T>>,
}

impl<T: Real> MeasurementSet<T> {
    pub fn new(spec: GridSpec<T>, reference_prep: Polarization, envelope: Option<Grid<T>>) -> Self {
        Self {
            spec,
            reference_prep,
            envelope,
            maps: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, map: IntensityMap<T>) -> Result<()> {
        if map.shape() != self.spec.shape() {
            return Err(Error::ShapeMismatch {
                left: map.shape(),
                right: self.spec.shape(),
            });
        }
        self.maps.insert(MapKey::of(&map), map);
        Ok(())
    }

    pub fn get(&self, key: &MapKey) -> Option<&IntensityMap<T>> {
        self.maps.get(key)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MapKey, &IntensityMap<T>)> {
        self.maps.iter()
    }

    /// Exactly the maps `protocol` consumes, in [`Protocol::required_keys`] order.
    pub fn select(&self, protocol: Protocol) -> Result<Vec<&IntensityMap<T>>> {
        let keys = protocol.required_keys(self.reference_prep);
        let missing: Vec<String> = keys
            .iter()
            .filter(|k| !self.maps.contains_key(k))
            .map(|k| k.label())
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteMeasurements(format!(
                "{} needs {} maps; missing {}",
                protocol.label(),
                protocol.map_count(),
                missing.join(", ")
            )));
        }
        Ok(keys.iter().map(|k| &self.maps[k]).collect())
    }
}

/// Simulate the maps of `protocol`, each with its own noise stream.
pub fn acquire<T: Real>(
    field: &Su2Field<T>,
    protocol: Protocol,
    reference_prep: Polarization,
    envelope: Option<&Grid<T>>,
    noise: &NoiseSpec,
) -> Result<MeasurementSet<T>> {
    noise.validate()?;
    let (rows, cols) = field.shape();
    let dft = Dft2::new(rows, cols);
    let mut set = MeasurementSet::new(*field.spec(), reference_prep, envelope.cloned());
    for key in protocol.required_keys(reference_prep) {
        let clean = match key.plane {
            Plane::Near => near_field_intensity(field, key.prep, key.proj.expect("near maps are projected"), envelope)?,
            Plane::Far => far_field_intensity_with(&dft, field, key.prep, key.proj, envelope)?,
        };
        set.insert(apply_noise(&clean, &noise.for_map(&key.label()))?)?;
    }
    Ok(set)
}

/// The seven- or five-map Fourier bundle.
pub fn acquire_fqpt_set<T: Real>(
    field: &Su2Field<T>,
    protocol: Protocol,
    reference_prep: Polarization,
    envelope: Option<&Grid<T>>,
    noise: &NoiseSpec,
) -> Result<MeasurementSet<T>> {
    if protocol == Protocol::Ml16 {
        return Err(Error::InvalidConfig("ml16 is not a Fourier protocol".into()));
    }
    acquire(field, protocol, reference_prep, envelope, noise)
}

/// The sixteen near-plane projections over [`ML_DESIGN`].
pub fn acquire_ml_set<T: Real>(
    field: &Su2Field<T>,
    envelope: Option<&Grid<T>>,
    noise: &NoiseSpec,
) -> Result<MeasurementSet<T>> {
    acquire(field, Protocol::Ml16, Polarization::L, envelope, noise)
}
