//! Two-photon polarization interference through a subwavelength hole array.
//!
//! The crate models a collinear type-II photon pair sent through a polarization
//! Mach-Zehnder interferometer (half-wave plate, variable birefringent delay,
//! half-wave plate, polarizing beam splitter) with an optional perforated metal
//! film in the path. It provides:
//!
//! - [`biphoton`]: symmetric two-photon states and the lift of Jones operators;
//! - [`elements`]: wave plates and the lossy, birefringent, dephasing hole-array channel;
//! - [`detection`]: coincidence projections and seeded Poisson counting;
//! - [`fringe`]: fixed- and free-period fringe fits (two-photon de Broglie wavelength);
//! - [`resonance`]: plasmon resonance estimates, classical aperture baseline, spectra;
//! - [`config`] and [`runner`]: scenario configs, scans and report files.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod config;
pub mod detection;
pub mod elements;
pub mod error;
pub mod fringe;
pub mod resonance;
pub mod runner;

pub use biphoton::{
    apply_jones, make_hv_pair, symmetric_square, to_density, BiphotonDensityMatrix, BiphotonState,
    JonesOperator, PolarizationAmplitudePair, TraceConvention, C64,
};
pub use config::{Mode, Scenario, ScenarioConfig};
pub use detection::{
    hh_coincidence_prob, pbs_coincidence_prob, visibility, CountRecord, CountSampler,
    DetectionConfig, Normalization,
};
pub use elements::{
    delta_l_to_phase, hole_array_channel, hole_array_jones, hwp, phase_plate, HoleArrayParams,
};
pub use error::{Error, Result};
pub use fringe::{
    extract_visibility, fit_fixed_period, fit_free_period, FitOptions, FitReport, FringeFit,
    FringeModel, FringeSign, PeriodGrid, Weighting,
};
pub use resonance::{
    bethe_transmission, enhancement_at, ingest_spectrum, nearest_mode, resonance_wavelength,
    Interface, OpticalConstants, ResonanceMode, SpectrumRecord,
};
pub use runner::{compare_cases, run_scenario, write_outputs, PhaseDifference, ScanResult};
