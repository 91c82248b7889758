//! `simulate`, `reconstruct` and `compare`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fqpt_core::forward::{
    acquire, plates_field, sifting_spectrum, unprojected_far_power, MapKey, PowerSpectrum, Protocol, Su2Field,
};
use fqpt_core::fourier::Dft2;
use fqpt_core::grid::{fftshift, Grid, Plane};
use fqpt_core::metrics::{abs_distance, fidelity_map, similarity, FidelitySummary};
use fqpt_core::ml::ml_fit_field;
use fqpt_core::reconstruct::{candidate_spectrum, fqpt_pipeline};
use fqpt_core::su2::Unitary2;
use num_complex::Complex;
use serde::Serialize;

use crate::dataset::{
    create_dir, envelope_grid, read_manifest, read_measurements, read_recon, read_truth, write_dataset, write_field,
    write_json, ReconInfo, RECON_JSON, TIMING_JSON,
};
use crate::error::{CliError, Result};
use crate::gridfile::GridFile;
use crate::manifest::ExperimentManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Fqpt,
    Ml,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Fqpt => "fqpt",
            Method::Ml => "ml",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub maps: Vec<PathBuf>,
    pub manifest: ExperimentManifest,
}

pub fn simulate(manifest: &ExperimentManifest, out: &Path) -> Result<SimulateSummary> {
    manifest.validate()?;
    let manifest = manifest.resolved();
    let spec = manifest.grid;
    let truth = plates_field(spec, &manifest.plates).map_err(|e| CliError::InvalidManifest(e.to_string()))?;
    let envelope = envelope_grid(&manifest.envelope, &spec);
    let set = acquire(
        &truth,
        manifest.protocol,
        manifest.reference_prep,
        envelope.as_ref(),
        &manifest.noise_spec(),
    )
    .map_err(|e| CliError::InvalidManifest(e.to_string()))?;
    let maps = write_dataset(out, &manifest, &truth, &set)?;
    Ok(SimulateSummary { maps, manifest })
}

pub fn simulate_file(manifest: &Path, out: &Path) -> Result<SimulateSummary> {
    simulate(&ExperimentManifest::load(manifest)?, out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub method: String,
    pub wall_clock_s: f64,
    pub stages: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct ReconstructSummary {
    pub info: ReconInfo,
    pub timing: Timing,
    pub field: Su2Field<f64>,
}

fn split_timings(mut diagnostics: serde_json::Value, key: &str) -> (serde_json::Value, serde_json::Value) {
    let stages = diagnostics
        .as_object_mut()
        .and_then(|o| o.remove(key))
        .unwrap_or(serde_json::Value::Null);
    (diagnostics, stages)
}

pub fn reconstruct(dataset: &Path, method: Method, out: &Path) -> Result<ReconstructSummary> {
    let manifest = read_manifest(dataset)?;
    let protocol = match method {
        Method::Ml => Protocol::Ml16,
        Method::Fqpt if manifest.protocol == Protocol::Ml16 => Protocol::Full7,
        Method::Fqpt => manifest.protocol,
    };
    let set = read_measurements(dataset, &manifest, protocol)?;

    let start = Instant::now();
    let (field, diagnostics, stages, maps_consumed) = match method {
        Method::Fqpt => {
            let out = fqpt_pipeline(&set, &manifest.fqpt_config(protocol)).map_err(CliError::Reconstruction)?;
            let value = serde_json::to_value(&out.diagnostics).expect("serializable diagnostics");
            let (diag, stages) = split_timings(value, "timings");
            (out.field, diag, stages, out.diagnostics.maps_consumed)
        }
        Method::Ml => {
            let fit = ml_fit_field(&set, &manifest.ml_config()).map_err(CliError::Reconstruction)?;
            let value = serde_json::to_value(&fit.report).expect("serializable report");
            let (diag, stages) = split_timings(value, "seconds");
            let consumed = protocol
                .required_keys(manifest.reference_prep)
                .iter()
                .map(MapKey::label)
                .collect();
            (fit.field, diag, stages, consumed)
        }
    };
    let wall_clock_s = start.elapsed().as_secs_f64();

    let info = ReconInfo {
        method: method.label().into(),
        protocol,
        grid: manifest.grid,
        reference_prep: manifest.reference_prep,
        envelope: manifest.envelope,
        dataset: dataset.display().to_string(),
        maps_consumed,
        diagnostics,
    };
    let timing = Timing {
        method: method.label().into(),
        wall_clock_s,
        stages,
    };
    create_dir(out)?;
    write_field(out, &field)?;
    write_json(&out.join(RECON_JSON), &info)?;
    write_json(&out.join(TIMING_JSON), &timing)?;
    Ok(ReconstructSummary { info, timing, field })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumScore {
    pub similarity: f64,
    pub abs_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub a: String,
    pub b: String,
    pub truth: Option<String>,
    pub method_a: String,
    pub method_b: String,
    /// `measured`, `truth` or `a`.
    pub spectrum_reference: String,
    pub fidelity: BTreeMap<String, FidelitySummary>,
    pub spectra: BTreeMap<String, SpectrumScore>,
    pub files: Vec<String>,
}

fn spectrum_of(field: &Su2Field<f64>, info: &ReconInfo, like: &PowerSpectrum<f64>) -> Result<PowerSpectrum<f64>> {
    let (rows, cols) = field.shape();
    let dft = Dft2::new(rows, cols);
    let env = envelope_grid(&info.envelope, &info.grid);
    candidate_spectrum(&dft, field, info.reference_prep, env.as_ref(), like)
        .map_err(|e| CliError::GridMismatch(e.to_string()))
}

fn truth_spectrum(field: &Su2Field<f64>, info: &ReconInfo) -> Result<PowerSpectrum<f64>> {
    let (rows, cols) = field.shape();
    let dft = Dft2::new(rows, cols);
    let env = envelope_grid(&info.envelope, &info.grid);
    let power = unprojected_far_power(&dft, field.unitaries(), &info.reference_prep.spinor(), env.as_ref());
    sifting_spectrum(&fftshift(&power), &info.grid).map_err(|e| CliError::GridMismatch(e.to_string()))
}

/// Representative of `±U` on the same side as `reference`.
fn aligned(u: &Unitary2<f64>, reference: &Unitary2<f64>) -> Unitary2<f64> {
    if u.signed_overlap(reference) < 0.0 {
        u.scale(Complex::new(-1.0, 0.0))
    } else {
        *u
    }
}

fn profiles_csv(fields: &[(&str, &Su2Field<f64>)], info: &ReconInfo) -> String {
    let reference = fields[0].1;
    let mut out = String::from("row,col,x_mm,y_mm");
    for (name, _) in fields {
        write!(out, ",E_{name},n1_{name},n2_{name},n3_{name}").unwrap();
    }
    out.push('\n');
    let charts: Vec<Grid<_>> = fields
        .iter()
        .map(|(_, f)| {
            f.unitaries()
                .zip_map(reference.unitaries(), |u, r| fqpt_core::su2::chart_of(&aligned(u, r)).params)
                .expect("matching grids")
        })
        .collect();
    let (rows, cols) = reference.shape();
    for r in 0..rows {
        for c in 0..cols {
            let (x, y) = info.grid.position(r, c);
            write!(out, "{r},{c},{x:.6},{y:.6}").unwrap();
            for g in &charts {
                let p = g.get(r, c);
                write!(out, ",{:.10},{:.10},{:.10},{:.10}", p.angle, p.axis[0], p.axis[1], p.axis[2]).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

fn spectra_csv(spectra: &[(&str, &PowerSpectrum<f64>)]) -> String {
    let mut orders: Vec<(i64, i64)> = Vec::new();
    for (_, p) in spectra {
        for (mx, my, _) in p.entries() {
            if !orders.contains(&(mx, my)) {
                orders.push((mx, my));
            }
        }
    }
    orders.sort_by_key(|&(mx, my)| (my, mx));
    let mut out = String::from("mx,my");
    for (name, _) in spectra {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for (mx, my) in orders {
        write!(out, "{mx},{my}").unwrap();
        for (_, p) in spectra {
            write!(out, ",{:.12e}", p.weight(mx, my)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn report_csv(report: &CompareReport) -> String {
    let mut out = String::from("quantity,pair,value\n");
    for (pair, f) in &report.fidelity {
        writeln!(out, "mean_fidelity,{pair},{:.12}", f.mean).unwrap();
        writeln!(out, "min_fidelity,{pair},{:.12}", f.min).unwrap();
    }
    for (name, s) in &report.spectra {
        writeln!(out, "similarity,{name},{:.12}", s.similarity).unwrap();
        writeln!(out, "abs_distance,{name},{:.12e}", s.abs_distance).unwrap();
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn compare(a: &Path, b: &Path, truth: Option<&Path>, out: &Path) -> Result<CompareReport> {
    let (info_a, field_a) = read_recon(a)?;
    let (info_b, field_b) = read_recon(b)?;
    if info_a.grid != info_b.grid {
        return Err(CliError::GridMismatch(format!(
            "{} and {} were reconstructed on different grids",
            a.display(),
            b.display()
        )));
    }
    let mut truth_field = None;
    let mut measured = None;
    if let Some(dir) = truth {
        let manifest = read_manifest(dir)?;
        if manifest.grid != info_a.grid {
            return Err(CliError::GridMismatch(format!(
                "{} does not share the reconstruction grid",
                dir.display()
            )));
        }
        truth_field = Some(read_truth(dir, &manifest.grid)?);
        let far = crate::dataset::map_path(dir, &MapKey::far(manifest.reference_prep, None));
        if far.is_file() {
            let values = GridFile::read(&far)?.into_real(&far)?;
            measured = Some(sifting_spectrum(&values, &manifest.grid).map_err(|e| CliError::format(&far, e.to_string()))?);
        }
    }

    create_dir(out)?;
    let mut files = Vec::new();
    let mut fidelity = BTreeMap::new();
    let mut pairs: Vec<(&str, &Su2Field<f64>, &Su2Field<f64>)> = vec![("a_b", &field_a, &field_b)];
    if let Some(t) = &truth_field {
        pairs.push(("a_truth", &field_a, t));
        pairs.push(("b_truth", &field_b, t));
    }
    for (name, u, v) in pairs {
        let map = fidelity_map(u, v).map_err(|e| CliError::GridMismatch(e.to_string()))?;
        let file = format!("fidelity_{name}.grid");
        GridFile::real(Plane::Near, map.map.clone()).write(&out.join(&file))?;
        files.push(file);
        fidelity.insert(name.to_string(), map.summary());
    }

    let (reference, reference_name) = match (&measured, &truth_field) {
        (Some(m), _) => (m.clone(), "measured"),
        (None, Some(t)) => (truth_spectrum(t, &info_a)?, "truth"),
        (None, None) => (truth_spectrum(&field_a, &info_a)?, "a"),
    };
    let spec_a = spectrum_of(&field_a, &info_a, &reference)?;
    let spec_b = spectrum_of(&field_b, &info_b, &reference)?;
    let score = |p: &PowerSpectrum<f64>| -> Result<SpectrumScore> {
        Ok(SpectrumScore {
            similarity: similarity(&reference, p).map_err(|e| CliError::GridMismatch(e.to_string()))?,
            abs_distance: abs_distance(&reference, p).map_err(|e| CliError::GridMismatch(e.to_string()))?,
        })
    };
    let mut spectra = BTreeMap::new();
    spectra.insert("a".to_string(), score(&spec_a)?);
    spectra.insert("b".to_string(), score(&spec_b)?);

    let mut columns: Vec<(&str, &PowerSpectrum<f64>)> = vec![("reference", &reference), ("a", &spec_a), ("b", &spec_b)];
    let spec_t;
    if let (Some(t), Some(_)) = (&truth_field, &measured) {
        spec_t = spectrum_of(t, &info_a, &reference)?;
        spectra.insert("truth".to_string(), score(&spec_t)?);
        columns.push(("truth", &spec_t));
    }
    write_text(&out.join("spectra.csv"), &spectra_csv(&columns))?;
    files.push("spectra.csv".into());

    let mut fields: Vec<(&str, &Su2Field<f64>)> = Vec::new();
    if let Some(t) = &truth_field {
        fields.push(("truth", t));
    }
    fields.push(("a", &field_a));
    fields.push(("b", &field_b));
    write_text(&out.join("profiles.csv"), &profiles_csv(&fields, &info_a))?;
    files.push("profiles.csv".into());

    files.push("report.json".into());
    files.push("report.csv".into());
    let report = CompareReport {
        a: a.display().to_string(),
        b: b.display().to_string(),
        truth: truth.map(|t| t.display().to_string()),
        method_a: info_a.method,
        method_b: info_b.method,
        spectrum_reference: reference_name.into(),
        fidelity,
        spectra,
        files,
    };
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("report.csv"), &report_csv(&report))?;
    Ok(report)
}
