//! Scenario configuration documents.
//!
//! Configs are TOML: a handful of top-level run keys followed by one table per
//! subsystem. Every key is optional and falls back to the defaults below.
//!
//! ```toml
//! scenario = "plate_hwp_first"   # no_plate | plate_hwp_first | plate_hwp_after
//! mode = "analytic"              # analytic | monte_carlo (alias: mc)
//! wavelength_nm = 702.0
//! hwp_angle_deg = 22.5
//!
//! [scan]
//! delta_l_min_nm = 0.0
//! delta_l_max_nm = 800.0
//! n_points = 81
//!
//! [hole_array]
//! transmittance_t = 0.032
//! birefringence_beta = -1.5707963267948966
//! dephasing_covariance = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
//! period_nm = 600.0
//! hole_diameter_nm = 200.0
//! film_thickness_nm = 135.0
//!
//! [detection]
//! pair_rate_hz = 2000.0
//! seed = 702
//! normalization = "physical"     # paper | physical
//! background_hz = 0.0
//! integration_s = 1.0
//!
//! [fit]
//! enabled = true
//! free_period = false
//! weighting = "auto"             # auto | uniform | poisson
//! grid_min_nm = 300.0
//! grid_max_nm = 800.0
//! grid_step_nm = 0.5
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::DetectionConfig;
use crate::elements::HoleArrayParams;
use crate::error::{Error, Result};
use crate::fringe::{PeriodGrid, Weighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// No metal plate between the lenses.
    #[default]
    NoPlate,
    /// First HWP before the plate: `(|HH> - |VV>)/sqrt(2)` hits the hole array.
    PlateHwpFirst,
    /// First HWP after the plate: `|HV>` hits the hole array.
    PlateHwpAfter,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::NoPlate => "no_plate",
            Scenario::PlateHwpFirst => "plate_hwp_first",
            Scenario::PlateHwpAfter => "plate_hwp_after",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_plate" => Ok(Self::NoPlate),
            "plate_hwp_first" => Ok(Self::PlateHwpFirst),
            "plate_hwp_after" => Ok(Self::PlateHwpAfter),
            other => Err(Error::InvalidArgument(format!(
                "unknown scenario {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Analytic,
    #[serde(alias = "mc")]
    MonteCarlo,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Analytic => "analytic",
            Mode::MonteCarlo => "monte_carlo",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "mc" | "monte_carlo" => Ok(Self::MonteCarlo),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode {other:?} (expected analytic|mc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanRange {
    pub delta_l_min_nm: f64,
    pub delta_l_max_nm: f64,
    pub n_points: usize,
}

impl Default for ScanRange {
    fn default() -> Self {
        Self {
            delta_l_min_nm: 0.0,
            delta_l_max_nm: 800.0,
            n_points: 81,
        }
    }
}

impl ScanRange {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.delta_l_max_nm - self.delta_l_min_nm) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| self.delta_l_min_nm + i as f64 * step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWeighting {
    /// Poisson weights for Monte Carlo counts, uniform for analytic rates.
    #[default]
    Auto,
    Uniform,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub enabled: bool,
    /// Fit the fringe period too; otherwise it is held at `wavelength / 2`.
    pub free_period: bool,
    pub weighting: FitWeighting,
    pub grid_min_nm: f64,
    pub grid_max_nm: f64,
    pub grid_step_nm: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        let g = PeriodGrid::default();
        Self {
            enabled: true,
            free_period: false,
            weighting: FitWeighting::Auto,
            grid_min_nm: g.min_nm,
            grid_max_nm: g.max_nm,
            grid_step_nm: g.step_nm,
        }
    }
}

impl FitConfig {
    pub fn grid(&self) -> PeriodGrid {
        PeriodGrid {
            min_nm: self.grid_min_nm,
            max_nm: self.grid_max_nm,
            step_nm: self.grid_step_nm,
        }
    }

    pub fn weighting_for(&self, mode: Mode) -> Weighting {
        match (self.weighting, mode) {
            (FitWeighting::Uniform, _) | (FitWeighting::Auto, Mode::Analytic) => Weighting::Uniform,
            (FitWeighting::Poisson, _) | (FitWeighting::Auto, Mode::MonteCarlo) => {
                Weighting::Poisson
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub mode: Mode,
    pub wavelength_nm: f64,
    /// Fast-axis angle of both half-wave plates.
    pub hwp_angle_deg: f64,
    pub scan: ScanRange,
    pub hole_array: HoleArrayParams,
    pub detection: DetectionConfig,
    pub fit: FitConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            mode: Mode::default(),
            wavelength_nm: 702.0,
            hwp_angle_deg: 22.5,
            scan: ScanRange::default(),
            hole_array: HoleArrayParams::default(),
            detection: DetectionConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm.is_finite() && self.wavelength_nm > 0.0) {
            return Err(Error::InvalidArgument(
                "wavelength_nm must be positive".into(),
            ));
        }
        if !self.hwp_angle_deg.is_finite() {
            return Err(Error::InvalidArgument(
                "hwp_angle_deg must be finite".into(),
            ));
        }
        let s = &self.scan;
        if s.n_points < 4 {
            return Err(Error::InvalidArgument(format!(
                "scan needs at least 4 points, got {}",
                s.n_points
            )));
        }
        if !(s.delta_l_min_nm.is_finite() && s.delta_l_max_nm.is_finite())
            || s.delta_l_max_nm == s.delta_l_min_nm
        {
            return Err(Error::InvalidArgument(
                "scan range must be finite and nonzero".into(),
            ));
        }
        self.hole_array.validate()?;
        self.detection.validate()?;
        if self.fit.free_period {
            self.fit.grid().periods()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}
