//! Surface-plasmon resonance estimates for a square hole lattice, the classical
//! small-aperture transmission baseline, and measured transmittance spectra.
//!
//! Resonances use grating momentum matching at normal incidence:
//! `lambda = P / sqrt(i^2 + j^2) * Re sqrt(eps_m eps_d / (eps_m + eps_d))`,
//! with `eps_m(lambda)` interpolated from a table, so `lambda` is a fixed point.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CsvText, Error, Result};

pub const EPS_GLASS: f64 = 2.13;
pub const EPS_AIR: f64 = 1.0;

/// Johnson & Christy gold, bundled as third-party sample data.
pub const SAMPLE_GOLD_CSV: &str = include_str!("../data/gold_johnson_christy.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interface {
    MetalGlass,
    MetalAir,
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interface::MetalGlass => "metal-glass",
            Interface::MetalAir => "metal-air",
        })
    }
}

/// Grating order `(i, j)` on one interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResonanceMode {
    i: i32,
    j: i32,
    pub interface: Interface,
}

impl ResonanceMode {
    pub fn new(i: i32, j: i32, interface: Interface) -> Result<Self> {
        if i == 0 && j == 0 {
            return Err(Error::InvalidArgument(
                "(0,0) is not a grating order".into(),
            ));
        }
        Ok(Self { i, j, interface })
    }

    pub fn i(&self) -> i32 {
        self.i
    }

    pub fn j(&self) -> i32 {
        self.j
    }

    pub fn order_sq(&self) -> i32 {
        self.i * self.i + self.j * self.j
    }
}

impl fmt::Display for ResonanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}) {}", self.i, self.j, self.interface)
    }
}

/// Tabulated metal permittivity plus the dielectric constants of both interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalConstants {
    wavelength_nm: Vec<f64>,
    eps_metal: Vec<Complex<f64>>,
    pub eps_glass: f64,
    pub eps_air: f64,
}

#[derive(Deserialize)]
struct EpsRow {
    wavelength_nm: f64,
    eps_real: f64,
    eps_imag: f64,
}

impl OpticalConstants {
    pub fn new(rows: Vec<(f64, f64, f64)>, eps_glass: f64, eps_air: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "optical constants table is empty".into(),
            ));
        }
        if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument(
                "optical constants wavelengths must be strictly increasing".into(),
            ));
        }
        if !(eps_glass > 0.0 && eps_air > 0.0) {
            return Err(Error::InvalidArgument(
                "dielectric constants must be positive".into(),
            ));
        }
        Ok(Self {
            wavelength_nm: rows.iter().map(|r| r.0).collect(),
            eps_metal: rows.iter().map(|r| Complex::new(r.1, r.2)).collect(),
            eps_glass,
            eps_air,
        })
    }

    /// Metal permittivity independent of wavelength, valid over `[lo, hi]`.
    pub fn constant(
        eps_metal: Complex<f64>,
        lo: f64,
        hi: f64,
        eps_glass: f64,
        eps_air: f64,
    ) -> Result<Self> {
        Self::new(
            vec![
                (lo, eps_metal.re, eps_metal.im),
                (hi, eps_metal.re, eps_metal.im),
            ],
            eps_glass,
            eps_air,
        )
    }

    /// Parses `wavelength_nm,eps_real,eps_imag` with `#` comment lines.
    pub fn from_csv<R: Read>(input: R, eps_glass: f64, eps_air: f64) -> Result<Self> {
        let src = CsvText::read(input)?;
        let mut rdr = src.reader();
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let r: EpsRow = rec.map_err(|e| src.error(e))?;
            rows.push((r.wavelength_nm, r.eps_real, r.eps_imag));
        }
        Self::new(rows, eps_glass, eps_air)
    }

    pub fn sample_gold() -> Self {
        Self::from_csv(SAMPLE_GOLD_CSV.as_bytes(), EPS_GLASS, EPS_AIR)
            .expect("bundled gold table parses")
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelength_nm[0], *self.wavelength_nm.last().unwrap())
    }

    pub fn eps_dielectric(&self, interface: Interface) -> f64 {
        match interface {
            Interface::MetalGlass => self.eps_glass,
            Interface::MetalAir => self.eps_air,
        }
    }

    /// Linear interpolation of real and imaginary parts; `None` outside the table.
    pub fn eps_metal(&self, wavelength_nm: f64) -> Option<Complex<f64>> {
        let (lo, hi) = self.range();
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return None;
        }
        let k = self.wavelength_nm.partition_point(|&w| w < wavelength_nm);
        if k == 0 {
            return Some(self.eps_metal[0]);
        }
        let (w0, w1) = (self.wavelength_nm[k - 1], self.wavelength_nm[k]);
        let f = (wavelength_nm - w0) / (w1 - w0);
        Some(self.eps_metal[k - 1] * (1.0 - f) + self.eps_metal[k] * f)
    }
}

/// Convergence tolerance on the fixed point, nm.
pub const RESONANCE_TOL_NM: f64 = 0.01;
const DAMPING: f64 = 0.5;
const MAX_ITER: usize = 200;

/// Right-hand side of the momentum-matching condition at `lambda`.
pub fn momentum_matched_wavelength(
    mode: &ResonanceMode,
    period_nm: f64,
    oc: &OpticalConstants,
    lambda_nm: f64,
) -> Result<f64> {
    let eps_m = oc.eps_metal(lambda_nm).ok_or_else(|| {
        let (lo, hi) = oc.range();
        Error::OutOfRange(format!(
            "{lambda_nm:.2} nm outside optical table [{lo}, {hi}]"
        ))
    })?;
    let eps_d = oc.eps_dielectric(mode.interface);
    if eps_m.re + eps_d >= 0.0 {
        return Err(Error::Singularity(format!(
            "Re(eps_m) + eps_d = {:.4} at {lambda_nm:.2} nm: no bound surface plasmon",
            eps_m.re + eps_d
        )));
    }
    let factor = (eps_m * eps_d / (eps_m + eps_d)).sqrt().re;
    Ok(period_nm / f64::from(mode.order_sq()).sqrt() * factor)
}

/// Resonance wavelength by damped fixed-point iteration, with a bisection fallback.
pub fn resonance_wavelength(
    mode: &ResonanceMode,
    period_nm: f64,
    oc: &OpticalConstants,
) -> Result<f64> {
    if !(period_nm > 0.0) {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let (lo, hi) = oc.range();
    let g = |l: f64| momentum_matched_wavelength(mode, period_nm, oc, l);

    // start from the lossless estimate with the table-midpoint permittivity
    let mut lambda = g(0.5 * (lo + hi)).unwrap_or(0.5 * (lo + hi)).clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let next = match g(lambda) {
            Ok(v) => v,
            Err(Error::Singularity(m)) => return Err(Error::Singularity(m)),
            Err(_) => break,
        };
        if (next - lambda).abs() < RESONANCE_TOL_NM * 0.1 {
            return Ok(next);
        }
        lambda = ((1.0 - DAMPING) * lambda + DAMPING * next).clamp(lo, hi);
    }
    bisect_fixed_point(&g, lo, hi)
}

fn bisect_fixed_point<G: Fn(f64) -> Result<f64>>(g: &G, lo: f64, hi: f64) -> Result<f64> {
    let f = |l: f64| g(l).map(|v| l - v);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::OutOfRange(format!(
            "no resonance fixed point within [{lo}, {hi}] nm"
        )));
    }
    while b - a > RESONANCE_TOL_NM * 0.01 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    g(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMatch {
    pub mode: ResonanceMode,
    pub resonance_nm: f64,
    pub distance_nm: f64,
}

/// Canonical modes `i >= j >= 0` with `i^2 + j^2 <= max_order^2` on both interfaces,
/// ordered by `(i^2 + j^2, interface, i)`.
pub fn enumerate_modes(max_order: u32) -> Vec<ResonanceMode> {
    let m = max_order as i32;
    let mut modes = Vec::new();
    for interface in [Interface::MetalGlass, Interface::MetalAir] {
        for i in 1..=m {
            for j in 0..=i {
                if i * i + j * j <= m * m {
                    modes.push(ResonanceMode { i, j, interface });
                }
            }
        }
    }
    modes.sort_by_key(|md| (md.order_sq(), md.interface, md.i));
    modes
}

/// Every canonical mode with its resonance (or the error that mode produced).
pub fn mode_table(
    period_nm: f64,
    oc: &OpticalConstants,
    max_order: u32,
) -> Vec<(ResonanceMode, Result<f64>)> {
    enumerate_modes(max_order)
        .into_iter()
        .map(|m| (m, resonance_wavelength(&m, period_nm, oc)))
        .collect()
}

/// The mode whose resonance lies closest to `wavelength_nm`.
pub fn nearest_mode(
    wavelength_nm: f64,
    period_nm: f64,
    oc: &OpticalConstants,
    max_order: u32,
) -> Result<ModeMatch> {
    if max_order < 1 {
        return Err(Error::InvalidArgument(
            "max_order must be at least 1".into(),
        ));
    }
    let mut best: Option<ModeMatch> = None;
    // table order already encodes the tie-breaks, so only strict improvements replace
    for (mode, res) in mode_table(period_nm, oc, max_order) {
        let Ok(resonance_nm) = res else { continue };
        let distance_nm = (resonance_nm - wavelength_nm).abs();
        if best.is_none_or(|b| distance_nm < b.distance_nm) {
            best = Some(ModeMatch {
                mode,
                resonance_nm,
                distance_nm,
            });
        }
    }
    best.ok_or(Error::NoMode)
}

/// Classical small-hole transmittance of a hole array, normalized to the illuminated area:
/// `64 / (27 pi^2) (k r)^4 * pi r^2 / P^2`.
pub fn bethe_transmission(
    hole_diameter_nm: f64,
    wavelength_nm: f64,
    period_nm: f64,
) -> Result<f64> {
    if !(hole_diameter_nm >= 0.0 && wavelength_nm > 0.0 && period_nm > 0.0) {
        return Err(Error::InvalidArgument("geometry must be positive".into()));
    }
    if hole_diameter_nm >= wavelength_nm {
        return Err(Error::Regime(format!(
            "hole diameter {hole_diameter_nm} nm is not below the wavelength {wavelength_nm} nm"
        )));
    }
    let r = hole_diameter_nm / 2.0;
    let kr = 2.0 * PI / wavelength_nm * r;
    let fill = PI * r * r / (period_nm * period_nm);
    Ok(64.0 / (27.0 * PI * PI) * kr.powi(4) * fill)
}

/// Measured transmittance versus wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    points: Vec<(f64, f64)>,
}

impl SpectrumRecord {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "spectrum needs at least two points".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument(
                "spectrum wavelengths must increase".into(),
            ));
        }
        if let Some(&(w, t)) = points.iter().find(|&&(_, t)| !(0.0..=1.0).contains(&t)) {
            return Err(Error::InvalidArgument(format!(
                "transmittance {t} at {w} nm outside [0, 1]"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn transmittance_at(&self, wavelength_nm: f64) -> Result<f64> {
        let (lo, hi) = (self.points[0].0, self.points[self.points.len() - 1].0);
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(Error::OutOfRange(format!(
                "{wavelength_nm} nm outside spectrum [{lo}, {hi}]"
            )));
        }
        let k = self.points.partition_point(|&(w, _)| w < wavelength_nm);
        if k == 0 {
            return Ok(self.points[0].1);
        }
        let ((w0, t0), (w1, t1)) = (self.points[k - 1], self.points[k]);
        let f = (wavelength_nm - w0) / (w1 - w0);
        Ok(t0 + f * (t1 - t0))
    }
}

/// Parses a `wavelength_nm,transmittance` CSV (header required, `#` comments allowed).
pub fn ingest_spectrum<R: Read>(input: R) -> Result<SpectrumRecord> {
    let src = CsvText::read(input)?;
    let mut rdr = src.reader();
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| src.error(e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != ["wavelength_nm", "transmittance"] {
        let line = src.header_line();
        return Err(Error::Parse {
            line,
            message: format!(
                "expected header wavelength_nm,transmittance, got {}",
                header.join(",")
            ),
        });
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| src.error(e))?;
        let line = rec.position().map_or(0, |p| src.line(p));
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, got {}", rec.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{s:?}: {e}"),
            })
        };
        let w = parse(&rec[0])?;
        let t = parse(&rec[1])?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Parse {
                line,
                message: format!("transmittance {t} outside [0, 1]"),
            });
        }
        points.push((w, t));
    }
    SpectrumRecord::new(points)
}

/// Ratio of measured to classical transmittance at `wavelength_nm`.
pub fn enhancement_at(spec: &SpectrumRecord, wavelength_nm: f64, classical: f64) -> Result<f64> {
    if !(classical > 0.0) {
        return Err(Error::InvalidArgument(
            "classical transmittance must be positive".into(),
        ));
    }
    Ok(spec.transmittance_at(wavelength_nm)? / classical)
}
