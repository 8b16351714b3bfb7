//! Scenario engine: composes source, wave plates, hole array and detection into
//! scan curves, Monte Carlo count sets and fringe fits.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::biphoton::{make_hv_pair, to_density, BiphotonDensityMatrix};
use crate::config::{Mode, Scenario, ScenarioConfig};
use crate::detection::{
    hh_coincidence_prob, pbs_coincidence_prob, write_count_csv, CountRecord, CountSampler,
    Normalization,
};
use crate::elements::{delta_l_to_phase, hole_array_channel, hwp, phase_plate};
use crate::error::{Error, Result};
use crate::fringe::{
    fit_fixed_period_with, fit_free_period_with, FitOptions, FitReport, FringeFit, FringeSign,
};

/// One scan point: coincidence probabilities under the configured normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub delta_l_nm: f64,
    pub rate_hv: f64,
    pub rate_hh: f64,
    /// Two-photon survival through the plate before post-selection (1 without a plate).
    #[serde(skip)]
    pub survival: f64,
    /// Trace of the state entering the plate.
    #[serde(skip)]
    pub pre_channel_trace: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub scenario: Scenario,
    pub mode: Mode,
    pub seed: u64,
    pub normalization: Normalization,
    pub rows: Vec<ScanRow>,
    /// Raw counts, Monte Carlo mode only.
    pub counts: Option<Vec<CountRecord>>,
    pub fit_hv: Option<FringeFit>,
    pub fit_hh: Option<FringeFit>,
}

impl ScanResult {
    /// The curve that was fitted for the HV channel: counts in Monte Carlo mode, rates otherwise.
    pub fn hv_curve(&self) -> Vec<(f64, f64)> {
        match &self.counts {
            Some(c) => c
                .iter()
                .map(|r| (r.delta_l_nm, r.counts_hv as f64))
                .collect(),
            None => self
                .rows
                .iter()
                .map(|r| (r.delta_l_nm, r.rate_hv))
                .collect(),
        }
    }

    pub fn hh_curve(&self) -> Vec<(f64, f64)> {
        match &self.counts {
            Some(c) => c
                .iter()
                .map(|r| (r.delta_l_nm, r.counts_hh as f64))
                .collect(),
            None => self
                .rows
                .iter()
                .map(|r| (r.delta_l_nm, r.rate_hh))
                .collect(),
        }
    }
}

/// Post-selected two-photon state reaching the PBS at phase `delta_phi`.
///
/// Returns the state, the survival probability through the plate and the trace of the
/// state entering the plate.
pub fn detected_state(
    cfg: &ScenarioConfig,
    delta_phi: f64,
) -> Result<(BiphotonDensityMatrix, f64, f64)> {
    let plate = hwp(cfg.hwp_angle_deg.to_radians());
    let source = to_density(&make_hv_pair());
    let through_plate = |rho: &BiphotonDensityMatrix| -> Result<(BiphotonDensityMatrix, f64, f64)> {
        let pre = rho.trace();
        let out = hole_array_channel(&cfg.hole_array, rho)?;
        let survival = out.trace();
        Ok((out.post_select()?, survival, pre))
    };
    let (before_scan, survival, pre) = match cfg.scenario {
        Scenario::NoPlate => (source.evolve(&plate), 1.0, source.trace()),
        Scenario::PlateHwpFirst => through_plate(&source.evolve(&plate))?,
        Scenario::PlateHwpAfter => {
            let (rho, s, pre) = through_plate(&source)?;
            (rho.evolve(&plate), s, pre)
        }
    };
    let out = before_scan.evolve(&phase_plate(delta_phi)).evolve(&plate);
    Ok((out, survival, pre))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let norm = cfg.detection.normalization;
    let rows = cfg
        .scan
        .points()
        .into_iter()
        .map(|dl| {
            let dphi = delta_l_to_phase(dl, cfg.wavelength_nm)?;
            let (rho, survival, pre_channel_trace) = detected_state(cfg, dphi)?;
            Ok(ScanRow {
                delta_l_nm: dl,
                rate_hv: pbs_coincidence_prob(&rho, norm)?,
                rate_hh: hh_coincidence_prob(&rho)?,
                survival,
                pre_channel_trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let counts = match cfg.mode {
        Mode::Analytic => None,
        Mode::MonteCarlo => Some(sample_rows(cfg, &rows)?),
    };

    let mut result = ScanResult {
        scenario: cfg.scenario,
        mode: cfg.mode,
        seed: cfg.detection.seed,
        normalization: norm,
        rows,
        counts,
        fit_hv: None,
        fit_hh: None,
    };
    if cfg.fit.enabled {
        result.fit_hv = Some(fit_channel(cfg, &result.hv_curve(), FringeSign::Plus)?);
        result.fit_hh = Some(fit_channel(cfg, &result.hh_curve(), FringeSign::Minus)?);
    }
    Ok(result)
}

fn sample_rows(cfg: &ScenarioConfig, rows: &[ScanRow]) -> Result<Vec<CountRecord>> {
    let t = cfg.detection.integration_s;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let mut sampler = CountSampler::for_scan_point(&cfg.detection, i as u64)?;
            Ok(CountRecord {
                delta_l_nm: r.delta_l_nm,
                counts_hv: sampler.sample_counts(r.rate_hv, t)?,
                counts_hh: sampler.sample_counts(r.rate_hh, t)?,
                integration_s: t,
            })
        })
        .collect()
}

/// HV fringes are fitted as `C + A cos(...)`, HH fringes as `C - A cos(...)`.
pub fn fit_channel(
    cfg: &ScenarioConfig,
    curve: &[(f64, f64)],
    sign: FringeSign,
) -> Result<FringeFit> {
    let opts = FitOptions {
        sign,
        weighting: cfg.fit.weighting_for(cfg.mode),
    };
    if cfg.fit.free_period {
        fit_free_period_with(curve, &cfg.fit.grid(), &opts)
    } else {
        fit_fixed_period_with(curve, cfg.wavelength_nm / 2.0, &opts)
    }
}

/// Fringe-phase differences between two runs, in units of pi, canonical in `(-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseDifference {
    pub hv_over_pi: f64,
    pub hh_over_pi: f64,
}

pub fn compare_cases(r1: &ScanResult, r2: &ScanResult) -> Result<PhaseDifference> {
    let phase = |r: &ScanResult, f: Option<FringeFit>, ch: &str| -> Result<f64> {
        let fit = f.ok_or_else(|| {
            Error::InvalidArgument(format!("{} scan has no {ch} fit", r.scenario))
        })?;
        if !fit.phase_defined {
            return Err(Error::InvalidArgument(format!(
                "{} scan {ch} fit has zero amplitude",
                r.scenario
            )));
        }
        Ok(fit.model.phase0)
    };
    let diff = |a: f64, b: f64| crate::fringe::canonical_phase(a - b) / PI;
    Ok(PhaseDifference {
        hv_over_pi: diff(phase(r1, r1.fit_hv, "HV")?, phase(r2, r2.fit_hv, "HV")?),
        hh_over_pi: diff(phase(r1, r1.fit_hh, "HH")?, phase(r2, r2.fit_hh, "HH")?),
    })
}

#[derive(Serialize)]
struct FitDocument {
    scenario: String,
    mode: String,
    seed: u64,
    normalization: Normalization,
    hv: Option<FitReport>,
    hh: Option<FitReport>,
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `scan.csv` and `fit.json` into `dir`.
///
/// Analytic scans emit `delta_l_nm,rate_hv,rate_hh`; Monte Carlo scans emit count records.
/// Nothing time-dependent is written, so equal inputs give byte-identical files.
pub fn write_outputs(result: &ScanResult, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("scan.csv");
    let file = BufWriter::new(File::create(&csv_path)?);
    match &result.counts {
        Some(counts) => write_count_csv(file, counts)?,
        None => write_rate_csv(file, &result.rows)?,
    }
    let json_path = dir.join("fit.json");
    let mut out = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut out, &fit_document(result))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(OutputFiles {
        csv: csv_path,
        json: json_path,
    })
}

pub fn fit_json(result: &ScanResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(&fit_document(result))?)
}

fn fit_document(result: &ScanResult) -> FitDocument {
    FitDocument {
        scenario: result.scenario.to_string(),
        mode: result.mode.to_string(),
        seed: result.seed,
        normalization: result.normalization,
        hv: result.fit_hv.as_ref().map(FitReport::from),
        hh: result.fit_hh.as_ref().map(FitReport::from),
    }
}

pub fn write_rate_csv<W: Write>(out: W, rows: &[ScanRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::HoleArrayParams;

    fn analytic(s: Scenario) -> ScenarioConfig {
        ScenarioConfig::for_scenario(s)
    }

    #[test]
    fn no_plate_follows_cosine_laws() {
        let r = run_scenario(&analytic(Scenario::NoPlate)).unwrap();
        assert_eq!(r.rows.len(), 81);
        for row in &r.rows {
            let c2 = (2.0 * 2.0 * PI * row.delta_l_nm / 702.0).cos();
            assert!((row.rate_hv - 0.5 * (1.0 + c2)).abs() < 1e-12);
            assert!((row.rate_hh - 0.125 * (1.0 - c2)).abs() < 1e-12);
            assert_eq!(row.survival, 1.0);
        }
    }

    #[test]
    fn plate_scenarios_give_pi_and_zero_offsets() {
        let first = run_scenario(&analytic(Scenario::PlateHwpFirst)).unwrap();
        let after = run_scenario(&analytic(Scenario::PlateHwpAfter)).unwrap();
        for fit in [first.fit_hv.unwrap(), first.fit_hh.unwrap()] {
            assert!((fit.model.phase0 - PI).abs() < 1e-9, "{}", fit.model.phase0);
        }
        for fit in [after.fit_hv.unwrap(), after.fit_hh.unwrap()] {
            assert!(fit.model.phase0.abs() < 1e-9, "{}", fit.model.phase0);
        }
    }

    #[test]
    fn transparent_plate_reproduces_no_plate() {
        let base = run_scenario(&analytic(Scenario::NoPlate)).unwrap();
        for s in [Scenario::PlateHwpFirst, Scenario::PlateHwpAfter] {
            let mut cfg = analytic(s);
            cfg.hole_array = HoleArrayParams::transparent();
            let r = run_scenario(&cfg).unwrap();
            for (a, b) in base.rows.iter().zip(&r.rows) {
                assert!((a.rate_hv - b.rate_hv).abs() < 1e-12);
                assert!((a.rate_hh - b.rate_hh).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn survival_is_t_squared_at_every_point() {
        for s in [Scenario::PlateHwpFirst, Scenario::PlateHwpAfter] {
            let mut cfg = analytic(s);
            cfg.hole_array = cfg.hole_array.clone().with_hh_vv_dephasing(0.7);
            let r = run_scenario(&cfg).unwrap();
            let t2 = cfg.hole_array.transmittance_t.powi(2);
            for row in &r.rows {
                assert!((row.survival - t2 * row.pre_channel_trace).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compare_cases_reports_pi_and_is_antisymmetric_off_the_cut() {
        let first = run_scenario(&analytic(Scenario::PlateHwpFirst)).unwrap();
        let after = run_scenario(&analytic(Scenario::PlateHwpAfter)).unwrap();
        let d = compare_cases(&first, &after).unwrap();
        assert!((d.hv_over_pi - 1.0).abs() < 1e-9);
        assert!((d.hh_over_pi - 1.0).abs() < 1e-9);
        let same = compare_cases(&first, &first).unwrap();
        assert_eq!((same.hv_over_pi, same.hh_over_pi), (0.0, 0.0));

        // beta = -pi/6 moves the HWP-first fringe to -pi/3
        let mut cfg = analytic(Scenario::PlateHwpFirst);
        cfg.hole_array.birefringence_beta = -PI / 6.0;
        let tilted = run_scenario(&cfg).unwrap();
        let ab = compare_cases(&tilted, &after).unwrap();
        let ba = compare_cases(&after, &tilted).unwrap();
        assert!((ab.hv_over_pi + 1.0 / 3.0).abs() < 1e-9);
        assert!((ab.hv_over_pi + ba.hv_over_pi).abs() < 1e-12);
        assert!((ab.hh_over_pi + ba.hh_over_pi).abs() < 1e-12);
    }

    #[test]
    fn compare_cases_needs_fits() {
        let mut cfg = analytic(Scenario::NoPlate);
        cfg.fit.enabled = false;
        let r = run_scenario(&cfg).unwrap();
        assert!(r.fit_hv.is_none());
        assert!(matches!(
            compare_cases(&r, &r),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn monte_carlo_emits_counts_per_point() {
        let mut cfg = analytic(Scenario::NoPlate);
        cfg.mode = Mode::MonteCarlo;
        let r = run_scenario(&cfg).unwrap();
        let counts = r.counts.as_ref().unwrap();
        assert_eq!(counts.len(), 81);
        assert!(counts.iter().all(|c| c.integration_s == 1.0));
        let fit = r.fit_hv.unwrap();
        assert!((fit.model.period_nm - 351.0).abs() < 1e-12);
        assert!(fit.visibility > 0.95);
    }

    #[test]
    fn paper_normalization_halves_hv_rate() {
        let mut cfg = analytic(Scenario::NoPlate);
        cfg.detection.normalization = Normalization::Paper;
        let paper = run_scenario(&cfg).unwrap();
        let phys = run_scenario(&analytic(Scenario::NoPlate)).unwrap();
        for (a, b) in paper.rows.iter().zip(&phys.rows) {
            assert_eq!(a.rate_hv, b.rate_hv / 2.0);
            assert_eq!(a.rate_hh, b.rate_hh);
        }
        assert!((paper.rows[0].rate_hv - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rate_csv_header() {
        let r = run_scenario(&analytic(Scenario::NoPlate)).unwrap();
        let mut buf = Vec::new();
        write_rate_csv(&mut buf, &r.rows).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("delta_l_nm,rate_hv,rate_hh\n"));
    }
}
