//! Reconstruction of an SU(2) field from retrieved channel fields.

pub mod extract;
pub mod pipeline;
pub mod sift;
pub mod xi;

pub use extract::{
    complete_third_component, extract_parameters, repair_physicality, PhysicalityReport, RawParameters,
    RepairStats, NORM_BAND, REPAIR_BUDGET, SINGULAR_SIN,
};
pub use pipeline::{
    build_candidate, fqpt_pipeline, reconstruct_from_triple, reconstruct_minimal, retrieve_channels,
    ChannelDiagnostics, FqptConfig, FqptDiagnostics, FqptOutput, NoiseFloor, PreparedInputs, Timings,
};
pub use sift::{
    candidate_delta, candidate_spectrum, sift_candidates, sift_with, CandidateSolution, SiftReport,
    SAME_SOLUTION_FIDELITY,
};
pub use xi::{
    angle_from_reference, consistency_scores, rank1_factors, resolve_consistent_xi, ChannelChoice, OrbitVariant,
    RetrievedTriple, XiCandidate, XiGrid, XiOptions,
};
