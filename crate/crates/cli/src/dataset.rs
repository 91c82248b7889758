//! On-disk layout of datasets and reconstructions.
//!
//! ```text
//! dataset/
//!   manifest.json        resolved manifest echo
//!   truth/E.grid n1.grid n2.grid n3.grid
//!   maps/<plane>_<prep>_<proj>.grid
//! recon/
//!   recon.json           method, grid, diagnostics
//!   timing.json          wall-clock
//!   E.grid n1.grid n2.grid n3.grid
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use fqpt_core::forward::{IntensityMap, MapKey, MeasurementSet, Protocol, Su2Field};
use fqpt_core::grid::{BeamEnvelope, Grid, GridSpec, Plane};
use fqpt_core::su2::{Polarization, Su2Params};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::gridfile::{GridData, GridFile};
use crate::manifest::ExperimentManifest;

pub const MANIFEST_ECHO: &str = "manifest.json";
pub const TRUTH_DIR: &str = "truth";
pub const MAPS_DIR: &str = "maps";
pub const RECON_JSON: &str = "recon.json";
pub const TIMING_JSON: &str = "timing.json";
pub const PARAM_FILES: [&str; 4] = ["E.grid", "n1.grid", "n2.grid", "n3.grid"];

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn map_path(dir: &Path, key: &MapKey) -> PathBuf {
    dir.join(MAPS_DIR).join(format!("{}.grid", key.label()))
}

pub fn envelope_grid(envelope: &BeamEnvelope, spec: &GridSpec<f64>) -> Option<Grid<f64>> {
    match envelope {
        BeamEnvelope::Uniform => None,
        e => Some(e.sample(spec)),
    }
}

/// Write `E, n1, n2, n3` of `field` into `dir`.
pub fn write_field(dir: &Path, field: &Su2Field<f64>) -> Result<()> {
    create_dir(dir)?;
    let params = field.params();
    let grids = [
        params.map(|p| p.angle),
        params.map(|p| p.axis[0]),
        params.map(|p| p.axis[1]),
        params.map(|p| p.axis[2]),
    ];
    for (name, g) in PARAM_FILES.iter().zip(grids) {
        GridFile::real(Plane::Near, g).write(&dir.join(name))?;
    }
    Ok(())
}

pub fn read_field(dir: &Path, spec: &GridSpec<f64>) -> Result<Su2Field<f64>> {
    let mut grids = Vec::with_capacity(4);
    for name in PARAM_FILES {
        let path = dir.join(name);
        let g = GridFile::read(&path)?.into_real(&path)?;
        if g.shape() != spec.shape() {
            return Err(CliError::GridMismatch(format!(
                "{} is {:?}, grid expects {:?}",
                path.display(),
                g.shape(),
                spec.shape()
            )));
        }
        grids.push(g);
    }
    let (rows, cols) = spec.shape();
    let params = Grid::from_fn(rows, cols, |r, c| {
        Su2Params::new(
            *grids[0].get(r, c),
            [*grids[1].get(r, c), *grids[2].get(r, c), *grids[3].get(r, c)],
        )
    });
    Su2Field::from_params(*spec, &params).map_err(|e| CliError::format(dir, e.to_string()))
}

pub fn write_dataset(
    dir: &Path,
    manifest: &ExperimentManifest,
    truth: &Su2Field<f64>,
    set: &MeasurementSet<f64>,
) -> Result<Vec<PathBuf>> {
    create_dir(&dir.join(MAPS_DIR))?;
    write_json(&dir.join(MANIFEST_ECHO), manifest)?;
    write_field(&dir.join(TRUTH_DIR), truth)?;
    let mut written = Vec::with_capacity(set.len());
    for (key, map) in set.iter() {
        let path = map_path(dir, key);
        GridFile {
            plane: map.plane,
            prep: Some(map.prep),
            proj: map.proj,
            data: GridData::Real(map.values.clone()),
        }
        .write(&path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_manifest(dir: &Path) -> Result<ExperimentManifest> {
    let m: ExperimentManifest = read_json(&dir.join(MANIFEST_ECHO))?;
    m.validate()?;
    Ok(m)
}

pub fn read_truth(dir: &Path, spec: &GridSpec<f64>) -> Result<Su2Field<f64>> {
    read_field(&dir.join(TRUTH_DIR), spec)
}

/// The maps `protocol` needs, failing with every absent file listed.
pub fn read_measurements(dir: &Path, manifest: &ExperimentManifest, protocol: Protocol) -> Result<MeasurementSet<f64>> {
    let keys = protocol.required_keys(manifest.reference_prep);
    let missing: Vec<PathBuf> = keys
        .iter()
        .map(|k| map_path(dir, k))
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingMeasurement(missing));
    }
    let spec = manifest.grid;
    let mut set = MeasurementSet::new(spec, manifest.reference_prep, envelope_grid(&manifest.envelope, &spec));
    for key in keys {
        let path = map_path(dir, &key);
        let file = GridFile::read(&path)?;
        if file.plane != key.plane || file.prep != Some(key.prep) || file.proj != key.proj {
            return Err(CliError::format(&path, format!("header does not describe {}", key.label())));
        }
        let values = file.into_real(&path)?;
        if values.shape() != spec.shape() {
            return Err(CliError::GridMismatch(format!(
                "{} is {:?}, grid expects {:?}",
                path.display(),
                values.shape(),
                spec.shape()
            )));
        }
        let k_spacing = (key.plane == Plane::Far).then(|| spec.k_spacing());
        let map = IntensityMap::new(values, key.plane, key.prep, key.proj, k_spacing)
            .map_err(|e| CliError::format(&path, e.to_string()))?;
        set.insert(map).map_err(|e| CliError::format(&path, e.to_string()))?;
    }
    Ok(set)
}

/// Header of a reconstruction directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconInfo {
    pub method: String,
    pub protocol: Protocol,
    pub grid: GridSpec<f64>,
    pub reference_prep: Polarization,
    pub envelope: BeamEnvelope,
    pub dataset: String,
    pub maps_consumed: Vec<String>,
    /// Method-specific report without timings.
    pub diagnostics: serde_json::Value,
}

pub fn read_recon(dir: &Path) -> Result<(ReconInfo, Su2Field<f64>)> {
    let info: ReconInfo = read_json(&dir.join(RECON_JSON))?;
    let field = read_field(dir, &info.grid)?;
    Ok((info, field))
}
