//! Hofer-type path energies, their surgeries, and related certificates.

mod ops;
mod profile;
mod report;

pub use crate::hamiltonian::invert;
pub use ops::{
    calabi_weinstein, ceiling_lower_bound, concat, conjugate, linf_energy, osc_energy,
    osc_sandwich, reeb_shift_optimum, rescale_form_energy, CalabiWeinstein, Concatenated,
    ConformallyWeighted, Conjugated, OscSandwich, ReebShift, ReparamPair, RescaleReport,
    Smoothstep, STRICTNESS_TOL,
};
pub use profile::{
    refine_maximum, simpson_weights, time_profile, time_profile_on, trapezoid_weights,
    EnergySettings, NodeProfile, TimeProfile,
};
pub use report::{energy_report, profile_csv, EnergyReport, CEILING_CAVEAT};
