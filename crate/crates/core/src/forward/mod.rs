//! Synthetic experiment: patterned plates, projective intensities in the
//! near and far planes, diffraction spectra and detector noise.

pub mod field;
pub mod intensity;
pub mod measurement;
pub mod noise;
pub mod profile;

pub use field::{cascade_fields, lcms_field, plate_field, plates_field, Su2Field};
pub use intensity::{
    bin_pixels, extract_power_spectrum, far_field_intensity, far_field_intensity_with, integrate_y,
    near_field_intensity, order_spectrum, projected_amplitude, sifting_spectrum, unprojected_far_power, IntensityMap,
    PowerSpectrum,
};
pub use measurement::{
    acquire, acquire_fqpt_set, acquire_ml_set, MapKey, MeasurementSet, Protocol, ML_DESIGN,
};
pub use noise::{
    adaptive_noise_floor, apply_noise, derive_seed, estimate_noise_floor, subtract_noise_floor, NoiseModel, NoiseSpec,
};
pub use profile::{Axis, Harmonic, PlateSpec, ThetaProfile};
