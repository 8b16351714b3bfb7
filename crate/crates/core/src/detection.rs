//! Coincidence projections behind the polarizing beam splitter and seeded
//! Poisson counting.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::biphoton::{BiphotonDensityMatrix, ALGEBRA_TOL};
use crate::error::{CsvText, Error, Result};

/// How the HV coincidence probability is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Per ordered outcome (HV or VH): half the physical value, `(1/4)(1 + cos)` fringes.
    Paper,
    /// Total probability of one photon in each PBS port, `(1/2)(1 + cos)` fringes.
    #[default]
    Physical,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "physical" => Ok(Self::Physical),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization {other:?} (expected paper|physical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Detected pairs per second at unit probability; detector efficiency is folded in.
    pub pair_rate_hz: f64,
    pub seed: u64,
    pub normalization: Normalization,
    /// Flat accidental rate added to every channel.
    pub background_hz: f64,
    pub integration_s: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            pair_rate_hz: 2000.0,
            seed: 702,
            normalization: Normalization::Physical,
            background_hz: 0.0,
            integration_s: 1.0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate_hz.is_finite() && self.pair_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(
                "pair_rate_hz must be positive".into(),
            ));
        }
        if !(self.background_hz.is_finite() && self.background_hz >= 0.0) {
            return Err(Error::InvalidArgument(
                "background_hz must be nonnegative".into(),
            ));
        }
        if !(self.integration_s.is_finite() && self.integration_s > 0.0) {
            return Err(Error::InvalidArgument(
                "integration_s must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One scan point of raw coincidence counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub delta_l_nm: f64,
    pub counts_hv: u64,
    pub counts_hh: u64,
    pub integration_s: f64,
}

fn require_normalized(rho: &BiphotonDensityMatrix) -> Result<()> {
    if !rho.is_trace_normalized() {
        return Err(Error::InvalidState(format!(
            "detection expects a trace-normalized state, trace is {}",
            rho.trace()
        )));
    }
    Ok(())
}

/// Populations of `(|2_H>, |1_H 1_V>, |2_V>)`.
pub fn outcome_probabilities(rho: &BiphotonDensityMatrix) -> Result<[f64; 3]> {
    require_normalized(rho)?;
    Ok([rho.population(0), rho.population(1), rho.population(2)])
}

/// Coincidence between the two detectors directly behind the PBS.
pub fn pbs_coincidence_prob(rho: &BiphotonDensityMatrix, norm: Normalization) -> Result<f64> {
    require_normalized(rho)?;
    let p = rho.population(1);
    Ok(match norm {
        Normalization::Physical => p,
        Normalization::Paper => p / 2.0,
    })
}

/// Coincidence behind a lossless 50:50 splitter in the H port: the two H photons
/// leave through different outputs with probability 1/2.
pub fn hh_coincidence_prob(rho: &BiphotonDensityMatrix) -> Result<f64> {
    require_normalized(rho)?;
    Ok(rho.population(0) / 2.0)
}

/// Deterministic Poisson count generator.
///
/// Every scan point gets its own ChaCha stream keyed by `(seed, point)`, so results do not
/// depend on the order in which points are evaluated.
#[derive(Debug, Clone)]
pub struct CountSampler {
    rng: ChaCha8Rng,
    pair_rate_hz: f64,
    background_hz: f64,
}

impl CountSampler {
    pub fn new(cfg: &DetectionConfig) -> Result<Self> {
        Self::for_scan_point(cfg, 0)
    }

    pub fn for_scan_point(cfg: &DetectionConfig, point: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(point);
        Ok(Self {
            rng,
            pair_rate_hz: cfg.pair_rate_hz,
            background_hz: cfg.background_hz,
        })
    }

    /// Draws `Poisson(prob * pair_rate * T + background * T)`.
    pub fn sample_counts(&mut self, prob: f64, integration_s: f64) -> Result<u64> {
        if !(0.0..=1.0 + ALGEBRA_TOL).contains(&prob) {
            return Err(Error::InvalidArgument(format!(
                "probability {prob} outside [0, 1]"
            )));
        }
        if !(integration_s.is_finite() && integration_s > 0.0) {
            return Err(Error::InvalidArgument(
                "integration time must be positive".into(),
            ));
        }
        let mean = (prob.min(1.0) * self.pair_rate_hz + self.background_hz) * integration_s;
        if mean == 0.0 {
            return Ok(0);
        }
        let dist = Poisson::new(mean)
            .map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
        Ok(dist.sample(&mut self.rng) as u64)
    }
}

/// `(max - min) / (max + min)` of the curve values.
pub fn visibility(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::InvalidArgument(
            "visibility needs at least two points".into(),
        ));
    }
    let (lo, hi) = curve
        .iter()
        .map(|&(_, y)| y)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
            (lo.min(y), hi.max(y))
        });
    if hi + lo == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((hi - lo) / (hi + lo))
}

pub const COUNT_CSV_HEADER: [&str; 4] = ["delta_l_nm", "counts_hv", "counts_hh", "integration_s"];

pub fn write_count_csv<W: Write>(out: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_count_csv<R: Read>(input: R) -> Result<Vec<CountRecord>> {
    let src = CsvText::read(input)?;
    let mut rdr = src.reader();
    let header = rdr.headers().map_err(|e| src.error(e))?.clone();
    if header.iter().collect::<Vec<_>>() != COUNT_CSV_HEADER {
        return Err(Error::Parse {
            line: src.header_line(),
            message: format!("expected header {}", COUNT_CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let r: CountRecord = rec.map_err(|e| src.error(e))?;
        if !(r.integration_s > 0.0) {
            return Err(Error::InvalidArgument(
                "integration_s must be positive".into(),
            ));
        }
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::{apply_jones, c, make_hv_pair, to_density, BiphotonState};
    use crate::elements::{hwp, phase_plate};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn no_plate(dphi: f64) -> BiphotonDensityMatrix {
        let s = apply_jones(&hwp(PI / 8.0), &make_hv_pair());
        let s = apply_jones(&phase_plate(dphi), &s);
        to_density(&apply_jones(&hwp(PI / 8.0), &s))
    }

    #[test]
    fn pbs_probability_on_no_plate_pipeline() {
        assert!(
            (pbs_coincidence_prob(&no_plate(0.0), Normalization::Paper).unwrap() - 0.5).abs()
                < 1e-12
        );
        assert!(
            pbs_coincidence_prob(&no_plate(PI / 2.0), Normalization::Paper)
                .unwrap()
                .abs()
                < 1e-12
        );
        let hv = to_density(&make_hv_pair());
        assert_eq!(
            pbs_coincidence_prob(&hv, Normalization::Physical).unwrap(),
            1.0
        );
    }

    #[test]
    fn hh_probability_on_no_plate_pipeline() {
        assert!((hh_coincidence_prob(&no_plate(PI / 2.0)).unwrap() - 0.25).abs() < 1e-12);
        assert!(hh_coincidence_prob(&no_plate(0.0)).unwrap().abs() < 1e-12);
        let two_h = BiphotonState::normalized(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(hh_coincidence_prob(&to_density(&two_h)).unwrap(), 0.5);
    }

    #[test]
    fn paper_mode_is_half_of_physical() {
        for k in 0..20 {
            let rho = no_plate(k as f64 * 0.31);
            let paper = pbs_coincidence_prob(&rho, Normalization::Paper).unwrap();
            let phys = pbs_coincidence_prob(&rho, Normalization::Physical).unwrap();
            assert_eq!(paper, phys / 2.0);
        }
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let s = BiphotonState::new(c(0.0, 0.0), c(0.5, 0.0), c(0.0, 0.0));
        let rho = to_density(&s);
        assert!(matches!(
            pbs_coincidence_prob(&rho, Normalization::Physical),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(
            hh_coincidence_prob(&rho),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn zero_probability_gives_zero_counts() {
        let mut s = CountSampler::new(&DetectionConfig::default()).unwrap();
        for _ in 0..100 {
            assert_eq!(s.sample_counts(0.0, 1.0).unwrap(), 0);
        }
    }

    #[test]
    fn rejects_probability_outside_unit_interval() {
        let mut s = CountSampler::new(&DetectionConfig::default()).unwrap();
        assert!(s.sample_counts(-0.1, 1.0).is_err());
        assert!(s.sample_counts(1.1, 1.0).is_err());
    }

    #[test]
    fn poisson_mean_within_three_sigma() {
        let cfg = DetectionConfig {
            pair_rate_hz: 1000.0,
            seed: 99,
            ..DetectionConfig::default()
        };
        let mut s = CountSampler::new(&cfg).unwrap();
        let n = 10_000;
        let sum: u64 = (0..n).map(|_| s.sample_counts(1.0, 1.0).unwrap()).sum();
        let mean = sum as f64 / n as f64;
        let tol = 3.0 * (1000.0f64 / n as f64).sqrt();
        assert!((mean - 1000.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let cfg = DetectionConfig::default();
        let draw = |point| {
            let mut s = CountSampler::for_scan_point(&cfg, point).unwrap();
            (0..50)
                .map(|_| s.sample_counts(0.37, 2.0).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn background_adds_counts() {
        let cfg = DetectionConfig {
            background_hz: 50.0,
            ..DetectionConfig::default()
        };
        let mut s = CountSampler::new(&cfg).unwrap();
        let total: u64 = (0..200).map(|_| s.sample_counts(0.0, 1.0).unwrap()).sum();
        assert!(total > 0);
    }

    #[test]
    fn visibility_cases() {
        let ideal: Vec<_> = (0..81)
            .map(|i| {
                let dl = i as f64 * 87.75;
                (dl, 0.25 * (1.0 + (2.0 * 2.0 * PI * dl / 702.0).cos()))
            })
            .collect();
        assert!((visibility(&ideal).unwrap() - 1.0).abs() < 1e-12);
        let flat = vec![(0.0, 3.0), (1.0, 3.0), (2.0, 3.0)];
        assert_eq!(visibility(&flat).unwrap(), 0.0);
        // scan points landing on exact extrema: 0 and 175.5 nm are cos = 1 and cos = -1
        let damped: Vec<_> = [0.0, 87.75, 175.5, 263.25, 351.0]
            .iter()
            .map(|&dl| {
                (
                    dl,
                    0.25 * (1.0 + 0.93 * (2.0 * 2.0 * PI * dl / 702.0).cos()),
                )
            })
            .collect();
        assert!((visibility(&damped).unwrap() - 0.93).abs() < 1e-12);
    }

    #[test]
    fn visibility_errors() {
        assert!(matches!(visibility(&[]), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            visibility(&[(0.0, 1.0)]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            visibility(&[(0.0, 0.0), (1.0, 0.0)]),
            Err(Error::UndefinedVisibility)
        ));
    }

    #[test]
    fn count_csv_has_contract_header() {
        let recs = vec![CountRecord {
            delta_l_nm: 0.0,
            counts_hv: 12,
            counts_hh: 3,
            integration_s: 1.5,
        }];
        let mut buf = Vec::new();
        write_count_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("delta_l_nm,counts_hv,counts_hh,integration_s\n"));
        assert_eq!(read_count_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn count_csv_reports_line_of_bad_row() {
        let text = "delta_l_nm,counts_hv,counts_hh,integration_s\n0,1,2,1\n10,x,2,1\n";
        match read_count_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn populations_sum_to_one(dphi in -10.0f64..10.0, theta in -3.0f64..3.0) {
            let s = apply_jones(&hwp(theta), &apply_jones(&phase_plate(dphi), &apply_jones(&hwp(0.4), &make_hv_pair())));
            let p = outcome_probabilities(&to_density(&s)).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
