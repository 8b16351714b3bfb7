//! Least-squares fitting of interference fringes.
//!
//! The model `y = C ± A cos(2 pi dL / P + phase0)` is linear in
//! `(C, A cos phase0, A sin phase0)` once the fringe period `P` is fixed, so a
//! fixed-period fit is a 3-column linear least-squares solve. The free-period
//! fit projects out the linear parameters: it scans `P` over a grid, keeps the
//! best residual and polishes it with a golden-section search.
//!
//! `P` is the period of the rate curve in path difference `dL`. For a two-photon
//! fringe `cos(2 dphi)` with `dphi = 2 pi dL / lambda`, `P = lambda / 2`: this is the
//! two-photon de Broglie wavelength.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CsvText, Error, Result};

/// Sign in front of the cosine. HH-coincidence fringes are conventionally written
/// `C - A cos(...)`, HV fringes `C + A cos(...)`; the reported phase follows the form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FringeSign {
    #[default]
    Plus,
    Minus,
}

impl FringeSign {
    fn factor(self) -> f64 {
        match self {
            FringeSign::Plus => 1.0,
            FringeSign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// Raw counts: start from `1 / max(y, 1)`, then reweight by `1 / max(model, 1)`
    /// until the parameters settle.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    pub sign: FringeSign,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel {
    pub offset_c: f64,
    /// Always nonnegative; a negative amplitude is folded into `phase0`.
    pub amplitude_a: f64,
    /// Canonical, in `(-pi, pi]`.
    pub phase0: f64,
    pub period_nm: f64,
    pub sign: FringeSign,
}

impl FringeModel {
    pub fn eval(&self, delta_l_nm: f64) -> f64 {
        let arg = 2.0 * PI * delta_l_nm / self.period_nm + self.phase0;
        self.offset_c + self.sign.factor() * self.amplitude_a * arg.cos()
    }

    pub fn sample(&self, delta_l: &[f64]) -> Vec<(f64, f64)> {
        delta_l.iter().map(|&x| (x, self.eval(x))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    pub model: FringeModel,
    /// `sqrt(sum w r^2 / sum w)`; plain RMS for uniform weights.
    pub residual_rms: f64,
    /// `A / C` clamped to `[0, 1]`; zero if `C <= 0`.
    pub visibility: f64,
    pub n_points: usize,
    /// False when the fitted amplitude vanishes and `phase0` carries no information.
    pub phase_defined: bool,
}

/// Maps an angle into `(-pi, pi]`. Angles within 1e-12 of the cut land on `+pi`.
pub fn canonical_phase(x: f64) -> f64 {
    let mut r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if !(-PI + 1e-12..=PI - 1e-12).contains(&r) {
        r = PI;
    }
    r
}

fn check_input(data: &[(f64, f64)], period_nm: f64) -> Result<()> {
    if !(period_nm.is_finite() && period_nm > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "period must be positive, got {period_nm}"
        )));
    }
    if data.len() < 4 {
        return Err(Error::Identifiability(format!(
            "need at least 4 points, got {}",
            data.len()
        )));
    }
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data point".into()));
    }
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    if hi - lo < period_nm / 2.0 {
        return Err(Error::Identifiability(format!(
            "scan span {} nm is shorter than half the period {period_nm} nm",
            hi - lo
        )));
    }
    let mut phases: Vec<f64> = data
        .iter()
        .map(|&(x, _)| (2.0 * PI * x / period_nm).rem_euclid(2.0 * PI))
        .collect();
    phases.sort_by(f64::total_cmp);
    phases.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let wraps = phases.len() > 1 && (phases[0] + 2.0 * PI - phases[phases.len() - 1]) < 1e-9;
    let distinct = phases.len() - usize::from(wraps);
    if distinct < 3 {
        return Err(Error::Identifiability(format!(
            "only {distinct} distinct fringe phases sampled"
        )));
    }
    Ok(())
}

fn weights(data: &[(f64, f64)], w: Weighting) -> Vec<f64> {
    match w {
        Weighting::Uniform => vec![1.0; data.len()],
        Weighting::Poisson => data.iter().map(|&(_, y)| 1.0 / y.max(1.0)).collect(),
    }
}

/// Fit with the period held fixed, unweighted, `C + A cos(...)` form.
pub fn fit_fixed_period(data: &[(f64, f64)], period_nm: f64) -> Result<FringeFit> {
    fit_fixed_period_with(data, period_nm, &FitOptions::default())
}

pub fn fit_fixed_period_with(
    data: &[(f64, f64)],
    period_nm: f64,
    opts: &FitOptions,
) -> Result<FringeFit> {
    check_input(data, period_nm)?;
    let w = weights(data, opts.weighting);
    let fit = solve_linear(data, &w, period_nm, opts.sign)?;
    refine_weights(data, fit, opts)
}

const IRLS_MAX_ITER: usize = 50;
const IRLS_REL_TOL: f64 = 1e-10;

/// Iteratively reweighted least squares with model-based Poisson variances.
///
/// Weights taken from the data themselves overweight downward fluctuations and
/// pull the fitted contrast up; weighting by the fitted mean removes that bias.
fn refine_weights(data: &[(f64, f64)], mut fit: FringeFit, opts: &FitOptions) -> Result<FringeFit> {
    if opts.weighting != Weighting::Poisson {
        return Ok(fit);
    }
    for _ in 0..IRLS_MAX_ITER {
        let w: Vec<f64> = data
            .iter()
            .map(|&(x, _)| 1.0 / fit.model.eval(x).max(1.0))
            .collect();
        let next = solve_linear(data, &w, fit.model.period_nm, opts.sign)?;
        let (a, b) = (fit.model, next.model);
        let scale = a.offset_c.abs().max(a.amplitude_a).max(f64::MIN_POSITIVE);
        let shift = (a.offset_c - b.offset_c).abs()
            + (a.amplitude_a * a.phase0.cos() - b.amplitude_a * b.phase0.cos()).abs()
            + (a.amplitude_a * a.phase0.sin() - b.amplitude_a * b.phase0.sin()).abs();
        fit = next;
        if shift < IRLS_REL_TOL * scale {
            break;
        }
    }
    Ok(fit)
}

fn solve_linear(
    data: &[(f64, f64)],
    w: &[f64],
    period_nm: f64,
    sign: FringeSign,
) -> Result<FringeFit> {
    let n = data.len();
    let k = 2.0 * PI / period_nm;
    let design = DMatrix::from_fn(n, 3, |i, j| {
        let sw = w[i].sqrt();
        let x = k * data[i].0;
        sw * match j {
            0 => 1.0,
            1 => x.cos(),
            _ => x.sin(),
        }
    });
    let rhs = DVector::from_fn(n, |i, _| w[i].sqrt() * data[i].1);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < 1e-10 {
        return Err(Error::Identifiability(format!(
            "design matrix rank deficient (condition {:e})",
            smax / smin
        )));
    }
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Identifiability(e.to_string()))?;
    let (offset, p, q) = (coef[0], coef[1], coef[2]);

    // C + p cos x + q sin x == C + s A cos(x + phase0)
    let s = sign.factor();
    let amplitude = p.hypot(q);
    let scale = data
        .iter()
        .map(|&(_, y)| y.abs())
        .fold(0.0, f64::max)
        .max(offset.abs());
    let phase_defined = amplitude > 1e-12 * scale.max(f64::MIN_POSITIVE);
    let (amplitude, phase0) = if phase_defined {
        (amplitude, canonical_phase((-s * q).atan2(s * p)))
    } else {
        (0.0, 0.0)
    };
    let model = FringeModel {
        offset_c: offset,
        amplitude_a: amplitude,
        phase0,
        period_nm,
        sign,
    };

    let (ssr, wsum) = data
        .iter()
        .zip(w)
        .fold((0.0, 0.0), |(ssr, wsum), (&(x, y), &wi)| {
            let r = y - model.eval(x);
            (ssr + wi * r * r, wsum + wi)
        });
    let visibility = if offset > 0.0 {
        (amplitude / offset).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(FringeFit {
        model,
        residual_rms: (ssr / wsum).sqrt(),
        visibility,
        n_points: n,
        phase_defined,
    })
}

/// Grid of candidate fringe periods, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodGrid {
    pub min_nm: f64,
    pub max_nm: f64,
    pub step_nm: f64,
}

impl Default for PeriodGrid {
    fn default() -> Self {
        Self {
            min_nm: 300.0,
            max_nm: 800.0,
            step_nm: 0.5,
        }
    }
}

impl PeriodGrid {
    pub fn periods(&self) -> Result<Vec<f64>> {
        if !(self.min_nm > 0.0 && self.max_nm > self.min_nm && self.step_nm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad period grid {:?}: need 0 < min < max and step > 0",
                self
            )));
        }
        let n = ((self.max_nm - self.min_nm) / self.step_nm + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| self.min_nm + i as f64 * self.step_nm)
            .collect())
    }
}

/// Relative tolerance of the golden-section refinement.
pub const PERIOD_REL_TOL: f64 = 1e-6;

pub fn fit_free_period(data: &[(f64, f64)], grid: &PeriodGrid) -> Result<FringeFit> {
    fit_free_period_with(data, grid, &FitOptions::default())
}

/// Variable-projection fit over the period.
///
/// Ties on the grid resolve to the smallest period.
pub fn fit_free_period_with(
    data: &[(f64, f64)],
    grid: &PeriodGrid,
    opts: &FitOptions,
) -> Result<FringeFit> {
    let periods = grid.periods()?;
    if periods.len() < 3 {
        return Err(Error::Bracketing("grid has fewer than 3 periods".into()));
    }
    let w = weights(data, opts.weighting);
    let eval = |p: f64| -> Option<FringeFit> {
        check_input(data, p).ok()?;
        solve_linear(data, &w, p, opts.sign).ok()
    };

    let mut best: Option<(usize, FringeFit)> = None;
    for (i, &p) in periods.iter().enumerate() {
        if let Some(fit) = eval(p) {
            if best
                .as_ref()
                .is_none_or(|(_, b)| fit.residual_rms < b.residual_rms)
            {
                best = Some((i, fit));
            }
        }
    }
    let (idx, grid_best) =
        best.ok_or_else(|| Error::Identifiability("no grid period is identifiable".into()))?;
    if !grid_best.phase_defined {
        return Err(Error::Identifiability(
            "fitted amplitude vanishes: no fringe period to find".into(),
        ));
    }
    if idx == 0 || idx == periods.len() - 1 {
        return Err(Error::Bracketing(format!(
            "best period {} nm lies on the grid edge [{}, {}]",
            periods[idx], grid.min_nm, grid.max_nm
        )));
    }
    let (lo, hi) = (periods[idx - 1], periods[idx + 1]);
    if eval(lo).is_none() || eval(hi).is_none() {
        return Err(Error::Bracketing(format!(
            "neighbours of {} nm are not identifiable",
            periods[idx]
        )));
    }

    let objective = |p: f64| eval(p).map_or(f64::INFINITY, |f| f.residual_rms);
    let p_star = golden_section(objective, lo, hi, PERIOD_REL_TOL);
    let fit = match eval(p_star) {
        Some(fit) if fit.residual_rms <= grid_best.residual_rms => fit,
        _ => grid_best,
    };
    refine_weights(data, fit, opts)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (b - a) <= rel_tol * 0.5 * (a.abs() + b.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// `A / C`, unclamped: for curves `C (1 ± V cos)` this is the coherence factor `V`.
pub fn extract_visibility(fit: &FringeFit) -> Result<f64> {
    let c = fit.model.offset_c;
    if !(c > 0.0) {
        return Err(Error::InvalidFit(format!(
            "fringe offset {c} is not positive"
        )));
    }
    Ok(fit.model.amplitude_a / c)
}

/// Serialized fit summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub offset: f64,
    pub amplitude: f64,
    pub phase0_rad: f64,
    pub phase0_over_pi: f64,
    pub period_nm: f64,
    pub visibility: f64,
    pub residual_rms: f64,
    pub n_points: usize,
}

impl From<&FringeFit> for FitReport {
    fn from(f: &FringeFit) -> Self {
        Self {
            offset: f.model.offset_c,
            amplitude: f.model.amplitude_a,
            phase0_rad: f.model.phase0,
            phase0_over_pi: f.model.phase0 / PI,
            period_nm: f.model.period_nm,
            visibility: f.visibility,
            residual_rms: f.residual_rms,
            n_points: f.n_points,
        }
    }
}

/// Reads `(delta_l_nm, y)` pairs from a CSV with a header row.
///
/// The x column must be named `delta_l_nm`; `column` selects y by name and defaults to
/// the first other column. Lines starting with `#` are skipped.
pub fn read_curve_csv<R: std::io::Read>(input: R, column: Option<&str>) -> Result<Vec<(f64, f64)>> {
    let src = CsvText::read(input)?;
    let mut rdr = src.reader();
    let header = rdr.headers().map_err(|e| src.error(e))?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let xi = find("delta_l_nm").ok_or_else(|| Error::Parse {
        line: src.header_line(),
        message: "missing delta_l_nm column".into(),
    })?;
    let yi = match column {
        Some(name) => find(name).ok_or_else(|| Error::Parse {
            line: src.header_line(),
            message: format!("missing column {name:?}"),
        })?,
        None => (0..header.len())
            .find(|&i| i != xi)
            .ok_or_else(|| Error::Parse {
                line: src.header_line(),
                message: "no data column".into(),
            })?,
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| src.error(e))?;
        let line = rec.position().map_or(0, |p| src.line(p));
        let field = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{s:?}: {e}"),
            })
        };
        out.push((field(xi)?, field(yi)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scan() -> Vec<f64> {
        (0..81).map(|i| i as f64 * 10.0).collect()
    }

    fn biphoton_curve(phase: f64, vis: f64) -> Vec<(f64, f64)> {
        scan()
            .into_iter()
            .map(|dl| {
                let dphi = 2.0 * PI * dl / 702.0;
                (dl, 0.25 * (1.0 + vis * (2.0 * dphi + phase).cos()))
            })
            .collect()
    }

    #[test]
    fn recovers_ideal_two_photon_fringe() {
        let fit = fit_fixed_period(&biphoton_curve(0.0, 1.0), 351.0).unwrap();
        assert!(fit.model.phase0.abs() < 1e-9);
        assert!((fit.visibility - 1.0).abs() < 1e-9);
        assert!(fit.residual_rms < 1e-9);
        assert_eq!(fit.n_points, 81);
    }

    #[test]
    fn recovers_offset_phase() {
        let fit = fit_fixed_period(&biphoton_curve(0.98 * PI, 1.0), 351.0).unwrap();
        assert!((fit.model.phase0 - 0.98 * PI).abs() < 1e-9);
    }

    #[test]
    fn minus_form_reports_phase_of_that_form() {
        let data: Vec<_> = scan()
            .into_iter()
            .map(|dl| {
                (
                    dl,
                    0.125 * (1.0 - (2.0 * PI * dl / 351.0 + 0.93 * PI).cos()),
                )
            })
            .collect();
        let opts = FitOptions {
            sign: FringeSign::Minus,
            ..FitOptions::default()
        };
        let fit = fit_fixed_period_with(&data, 351.0, &opts).unwrap();
        assert!((fit.model.phase0 - 0.93 * PI).abs() < 1e-9);
        assert!((fit.model.amplitude_a - 0.125).abs() < 1e-12);
        let plus = fit_fixed_period(&data, 351.0).unwrap();
        assert!((plus.model.phase0 - canonical_phase(-0.07 * PI)).abs() < 1e-9);
    }

    #[test]
    fn constant_data_has_undefined_phase() {
        let data: Vec<_> = scan().into_iter().map(|dl| (dl, 3.0)).collect();
        let fit = fit_fixed_period(&data, 351.0).unwrap();
        assert_eq!(fit.model.amplitude_a, 0.0);
        assert!(!fit.phase_defined);
        assert!((fit.model.offset_c - 3.0).abs() < 1e-12);
        assert!(matches!(
            fit_free_period(&data, &PeriodGrid::default()),
            Err(Error::Identifiability(_))
        ));
    }

    #[test]
    fn degenerate_sampling_is_not_identifiable() {
        let data: Vec<_> = (0..10).map(|i| (i as f64 * 351.0, 1.0)).collect();
        assert!(matches!(
            fit_fixed_period(&data, 351.0),
            Err(Error::Identifiability(_))
        ));
        let few = vec![(0.0, 1.0), (100.0, 0.5), (200.0, 0.2)];
        assert!(matches!(
            fit_fixed_period(&few, 351.0),
            Err(Error::Identifiability(_))
        ));
        let short: Vec<_> = (0..10).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(
            fit_fixed_period(&short, 351.0),
            Err(Error::Identifiability(_))
        ));
    }

    #[test]
    fn de_broglie_period_of_biphoton_fringe() {
        let fit = fit_free_period(&biphoton_curve(0.3, 1.0), &PeriodGrid::default()).unwrap();
        assert!(
            (fit.model.period_nm - 351.0).abs() < 0.1,
            "{}",
            fit.model.period_nm
        );
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn single_photon_fringe_has_full_wavelength_period() {
        let data: Vec<_> = scan()
            .into_iter()
            .map(|dl| (dl, 0.5 * (1.0 + (2.0 * PI * dl / 702.0).cos())))
            .collect();
        let fit = fit_free_period(&data, &PeriodGrid::default()).unwrap();
        assert!(
            (fit.model.period_nm - 702.0).abs() < 0.2,
            "{}",
            fit.model.period_nm
        );
    }

    #[test]
    fn grid_not_bracketing_is_an_error() {
        let grid = PeriodGrid {
            min_nm: 400.0,
            max_nm: 600.0,
            step_nm: 1.0,
        };
        assert!(matches!(
            fit_free_period(&biphoton_curve(0.0, 1.0), &grid),
            Err(Error::Bracketing(_))
        ));
    }

    #[test]
    fn free_residual_never_exceeds_grid_residuals() {
        let data: Vec<_> = biphoton_curve(1.1, 0.8)
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| (x, y + 0.01 * ((i * 7919 % 13) as f64 - 6.0) / 6.0))
            .collect();
        let grid = PeriodGrid::default();
        let free = fit_free_period(&data, &grid).unwrap();
        for p in grid.periods().unwrap().into_iter().step_by(25) {
            if let Ok(fixed) = fit_fixed_period(&data, p) {
                assert!(free.residual_rms <= fixed.residual_rms);
            }
        }
    }

    #[test]
    fn visibility_extraction() {
        let fit = fit_fixed_period(&biphoton_curve(0.0, 0.92), 351.0).unwrap();
        assert!((extract_visibility(&fit).unwrap() - 0.92).abs() < 1e-12);
        let s2: f64 = 1.0;
        let fit = fit_fixed_period(&biphoton_curve(0.0, (-s2 / 2.0).exp()), 351.0).unwrap();
        assert!((extract_visibility(&fit).unwrap() - 0.6065306597126334).abs() < 1e-12);
        let neg: Vec<_> = biphoton_curve(0.0, 1.0)
            .into_iter()
            .map(|(x, y)| (x, y - 1.0))
            .collect();
        let fit = fit_fixed_period(&neg, 351.0).unwrap();
        assert!(matches!(
            extract_visibility(&fit),
            Err(Error::InvalidFit(_))
        ));
    }

    #[test]
    fn phase_branch_cut_is_canonical() {
        let a = fit_fixed_period(&biphoton_curve(PI, 1.0), 351.0).unwrap();
        let b = fit_fixed_period(&biphoton_curve(-PI, 1.0), 351.0).unwrap();
        assert_eq!(a.model.phase0, PI);
        assert_eq!(b.model.phase0, PI);
        assert_eq!(canonical_phase(-PI), PI);
        assert_eq!(canonical_phase(3.0 * PI), PI);
        assert!((canonical_phase(2.0 * PI + 0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn curve_csv_column_selection() {
        let text = "delta_l_nm,rate_hv,rate_hh\n# c\n0,0.5,0\n10,0.4,0.1\n";
        assert_eq!(
            read_curve_csv(text.as_bytes(), None).unwrap(),
            vec![(0.0, 0.5), (10.0, 0.4)]
        );
        assert_eq!(
            read_curve_csv(text.as_bytes(), Some("rate_hh")).unwrap(),
            vec![(0.0, 0.0), (10.0, 0.1)]
        );
        assert!(matches!(
            read_curve_csv(text.as_bytes(), Some("nope")),
            Err(Error::Parse { .. })
        ));
        let bad = "delta_l_nm,y\n0,1\n1,q\n";
        assert!(matches!(
            read_curve_csv(bad.as_bytes(), None),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn report_serializes_contract_keys() {
        let fit = fit_fixed_period(&biphoton_curve(0.98 * PI, 1.0), 351.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(FitReport::from(&fit)).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in [
            "offset",
            "amplitude",
            "phase0_rad",
            "phase0_over_pi",
            "period_nm",
            "visibility",
            "residual_rms",
            "n_points",
        ] {
            assert!(keys.contains(&k.to_string()), "missing {k}");
        }
        assert!((v["phase0_over_pi"].as_f64().unwrap() - 0.98).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn scaling_rates_leaves_phase_and_period(k in 0.01f64..1e4, phase in -3.0f64..3.0) {
            let data = biphoton_curve(phase, 0.7);
            let scaled: Vec<_> = data.iter().map(|&(x, y)| (x, k * y)).collect();
            let a = fit_fixed_period(&data, 351.0).unwrap();
            let b = fit_fixed_period(&scaled, 351.0).unwrap();
            prop_assert!((a.model.phase0 - b.model.phase0).abs() < 1e-12);
            prop_assert_eq!(a.model.period_nm, b.model.period_nm);
            prop_assert!((k * a.model.offset_c - b.model.offset_c).abs() < 1e-12 * k.max(1.0));
            prop_assert!((k * a.model.amplitude_a - b.model.amplitude_a).abs() < 1e-12 * k.max(1.0));
        }
    }

    proptest! {
        // each case runs a full grid search
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn noiseless_round_trip(
            c in 0.5f64..5.0,
            vis in 0.1f64..1.0,
            phase in -3.1f64..3.1,
            period in 320.0f64..700.0,
        ) {
            let truth = FringeModel {
                offset_c: c,
                amplitude_a: vis * c,
                phase0: phase,
                period_nm: period,
                sign: FringeSign::Plus,
            };
            let data = truth.sample(&(0..121).map(|i| i as f64 * 12.0).collect::<Vec<_>>());
            let fit = fit_free_period(&data, &PeriodGrid::default()).unwrap();
            let m = fit.model;
            // the period is located to PERIOD_REL_TOL; phase at x = 0 absorbs
            // that error times the mean fringe count of the scan
            prop_assert!(((m.period_nm - period) / period).abs() < 2.0 * PERIOD_REL_TOL);
            prop_assert!(((m.offset_c - c) / c).abs() < 1e-5);
            prop_assert!(((m.amplitude_a - truth.amplitude_a) / truth.amplitude_a).abs() < 1e-5);
            prop_assert!((m.phase0 - phase).abs() < 1e-4);
        }
    }
}
