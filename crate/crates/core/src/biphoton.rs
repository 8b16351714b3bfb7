//! Collinear two-photon polarization states.
//!
//! Two indistinguishable photons sharing one spatial mode live in the
//! symmetric subspace spanned by the Fock states `|2_H>`, `|1_H 1_V>` and
//! `|2_V>`, always stored in that order. A single-photon Jones operator acts
//! on this space through its symmetric square, obtained by substituting
//! `a_i^† -> sum_j J_ji a_j^†` into the creation operators. The `sqrt(2)`
//! factors of bosonic doubly occupied modes are kept inside the lift, so
//! `|HH>` is identified with `|2_H>` and `|HV>` with `|1_H 1_V>`.

use std::ops::Mul;

use nalgebra::{Complex, Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance for algebraic identities on 3x3 and smaller matrices.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Single-photon polarization amplitudes `h|H> + v|V>`.
///
/// A photon lost to the channel is represented by [`PolarizationAmplitudePair::absorbed`],
/// never by a silent all-zero amplitude pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationAmplitudePair {
    h: C64,
    v: C64,
    absorbed: bool,
}

impl PolarizationAmplitudePair {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let norm_sqr = h.norm_sqr() + v.norm_sqr();
        if !norm_sqr.is_finite() || norm_sqr > 1.0 + ALGEBRA_TOL {
            return Err(Error::InvalidState(format!(
                "single-photon norm^2 {norm_sqr} exceeds 1"
            )));
        }
        if norm_sqr == 0.0 {
            return Err(Error::InvalidState(
                "zero amplitudes; use PolarizationAmplitudePair::absorbed".into(),
            ));
        }
        Ok(Self {
            h,
            v,
            absorbed: false,
        })
    }

    pub fn absorbed() -> Self {
        Self {
            h: C64::default(),
            v: C64::default(),
            absorbed: true,
        }
    }

    pub fn horizontal() -> Self {
        Self {
            h: c(1.0, 0.0),
            v: C64::default(),
            absorbed: false,
        }
    }

    pub fn vertical() -> Self {
        Self {
            h: C64::default(),
            v: c(1.0, 0.0),
            absorbed: false,
        }
    }

    pub fn h(&self) -> C64 {
        self.h
    }

    pub fn v(&self) -> C64 {
        self.v
    }

    pub fn is_absorbed(&self) -> bool {
        self.absorbed
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.norm_sqr() + self.v.norm_sqr()
    }

    /// Applies a Jones operator. A result with exactly zero norm becomes the absorbed marker.
    pub fn apply(&self, j: &JonesOperator) -> Self {
        if self.absorbed {
            return *self;
        }
        let out = j.matrix() * Vector2::new(self.h, self.v);
        if out[0].norm_sqr() + out[1].norm_sqr() == 0.0 {
            return Self::absorbed();
        }
        Self {
            h: out[0],
            v: out[1],
            absorbed: false,
        }
    }

    /// `|<other|self>|^2 / (|self|^2 |other|^2)`: overlap of the two polarizations
    /// regardless of global phase and loss.
    pub fn fidelity(&self, other: &Self) -> f64 {
        if self.absorbed || other.absorbed {
            return 0.0;
        }
        let overlap = other.h.conj() * self.h + other.v.conj() * self.v;
        overlap.norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }
}

/// 2x2 single-photon polarization operator, rows and columns ordered (H, V).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator(Matrix2<C64>);

impl JonesOperator {
    /// Builds an operator from its entries, rejecting anything with spectral norm above one
    /// (a passive element cannot amplify).
    pub fn new(j_hh: C64, j_hv: C64, j_vh: C64, j_vv: C64) -> Result<Self> {
        Self::from_matrix(Matrix2::new(j_hh, j_hv, j_vh, j_vv))
    }

    pub fn from_matrix(m: Matrix2<C64>) -> Result<Self> {
        let norm = spectral_norm(&m);
        if !norm.is_finite() || norm > 1.0 + ALGEBRA_TOL {
            return Err(Error::InvalidArgument(format!(
                "Jones operator spectral norm {norm} exceeds 1"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn j_hh(&self) -> C64 {
        self.0[(0, 0)]
    }

    pub fn j_hv(&self) -> C64 {
        self.0[(0, 1)]
    }

    pub fn j_vh(&self) -> C64 {
        self.0[(1, 0)]
    }

    pub fn j_vv(&self) -> C64 {
        self.0[(1, 1)]
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.0)
    }

    pub fn is_unitary(&self) -> bool {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm() < ALGEBRA_TOL
    }
}

impl Mul for JonesOperator {
    type Output = JonesOperator;

    fn mul(self, rhs: Self) -> Self::Output {
        // product of contractions is a contraction
        JonesOperator(self.0 * rhs.0)
    }
}

fn spectral_norm(m: &Matrix2<C64>) -> f64 {
    // largest eigenvalue of the Hermitian 2x2 matrix m^† m, in closed form
    let g = m.adjoint() * m;
    let tr = g[(0, 0)].re + g[(1, 1)].re;
    // tr^2 - 4 det written without cancellation
    let d = g[(0, 0)].re - g[(1, 1)].re;
    let disc = d * d + 4.0 * g[(0, 1)].norm_sqr();
    ((tr + disc.sqrt()) / 2.0).sqrt()
}

/// Lift of a Jones operator to the symmetric two-photon space.
///
/// Columns are the images of `|2_H>`, `|1_H 1_V>`, `|2_V>`.
pub fn symmetric_square(j: &JonesOperator) -> Matrix3<C64> {
    let (hh, hv, vh, vv) = (j.j_hh(), j.j_hv(), j.j_vh(), j.j_vv());
    let r2 = std::f64::consts::SQRT_2;
    Matrix3::new(
        hh * hh,
        hh * hv * r2,
        hv * hv,
        hh * vh * r2,
        hh * vv + hv * vh,
        hv * vv * r2,
        vh * vh,
        vh * vv * r2,
        vv * vv,
    )
}

/// Amplitudes over `(|2_H>, |1_H 1_V>, |2_V>)`.
///
/// `normalized` records that the norm was checked to be one; lossy evolution clears it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonState {
    amps: Vector3<C64>,
    normalized: bool,
}

impl BiphotonState {
    /// Unnormalized state; the squared norm is read as a survival probability.
    pub fn new(c20: C64, c11: C64, c02: C64) -> Self {
        Self {
            amps: Vector3::new(c20, c11, c02),
            normalized: false,
        }
    }

    /// State flagged normalized; fails unless the norm is one within 1e-12.
    pub fn normalized(c20: C64, c11: C64, c02: C64) -> Result<Self> {
        let s = Self::new(c20, c11, c02);
        let n = s.norm_sqr();
        if (n - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("biphoton norm^2 {n} is not 1")));
        }
        Ok(Self {
            normalized: true,
            ..s
        })
    }

    pub fn c20(&self) -> C64 {
        self.amps[0]
    }

    pub fn c11(&self) -> C64 {
        self.amps[1]
    }

    pub fn c02(&self) -> C64 {
        self.amps[2]
    }

    pub fn amplitudes(&self) -> &Vector3<C64> {
        &self.amps
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// The type-II down-conversion pair `|1_H 1_V>`.
pub fn make_hv_pair() -> BiphotonState {
    BiphotonState {
        amps: Vector3::new(C64::default(), c(1.0, 0.0), C64::default()),
        normalized: true,
    }
}

/// Applies `symmetric_square(j)` without renormalizing.
pub fn apply_jones(j: &JonesOperator, s: &BiphotonState) -> BiphotonState {
    let amps = symmetric_square(j) * s.amps;
    let out = BiphotonState {
        amps,
        normalized: false,
    };
    let normalized = s.normalized && (out.norm_sqr() - 1.0).abs() <= ALGEBRA_TOL;
    BiphotonState { normalized, ..out }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceConvention {
    /// Conditioned on detection: trace one.
    PostSelected,
    /// Trace equals the two-photon survival probability.
    Unnormalized,
}

/// 3x3 density matrix over the symmetric two-photon basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiphotonDensityMatrix {
    rho: Matrix3<C64>,
    convention: TraceConvention,
}

impl BiphotonDensityMatrix {
    /// Validates hermiticity, positivity and the trace convention.
    pub fn from_matrix(rho: Matrix3<C64>, convention: TraceConvention) -> Result<Self> {
        let out = Self { rho, convention };
        out.validate()?;
        Ok(out)
    }

    pub(crate) fn from_matrix_unchecked(rho: Matrix3<C64>, convention: TraceConvention) -> Self {
        Self { rho, convention }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (self.rho - self.rho.adjoint()).norm();
        if herm > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        let tr = self.trace();
        match self.convention {
            TraceConvention::PostSelected if (tr - 1.0).abs() > ALGEBRA_TOL => Err(
                Error::InvalidState(format!("post-selected density matrix has trace {tr}")),
            ),
            TraceConvention::Unnormalized if tr > 1.0 + ALGEBRA_TOL => Err(Error::InvalidState(
                format!("survival probability {tr} exceeds 1"),
            )),
            _ => Ok(()),
        }
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.rho
    }

    pub fn convention(&self) -> TraceConvention {
        self.convention
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Population of basis state `k` (0: `|2_H>`, 1: `|1_H 1_V>`, 2: `|2_V>`).
    pub fn population(&self, k: usize) -> f64 {
        self.rho[(k, k)].re
    }

    pub fn coherence(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.rho + self.rho.adjoint()) * c(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re / (self.trace() * self.trace())
    }

    /// `M rho M^†` with `M = symmetric_square(j)`. The convention is kept only if the
    /// trace survives, i.e. for unitary `j`.
    pub fn evolve(&self, j: &JonesOperator) -> Self {
        let m = symmetric_square(j);
        let rho = m * self.rho * m.adjoint();
        let convention = if (rho.trace().re - self.trace()).abs() <= ALGEBRA_TOL {
            self.convention
        } else {
            TraceConvention::Unnormalized
        };
        Self { rho, convention }
    }

    /// Conditions on survival: divides by the trace.
    pub fn post_select(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::InvalidState(
                "cannot post-select on zero survival probability".into(),
            ));
        }
        Ok(Self {
            rho: self.rho / c(tr, 0.0),
            convention: TraceConvention::PostSelected,
        })
    }

    pub fn is_trace_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= ALGEBRA_TOL
    }
}

/// Rank-one projector `|s><s|`; trace equals the squared norm of `s`.
pub fn to_density(s: &BiphotonState) -> BiphotonDensityMatrix {
    let rho = s.amps * s.amps.adjoint();
    let convention = if s.normalized {
        TraceConvention::PostSelected
    } else {
        TraceConvention::Unnormalized
    };
    BiphotonDensityMatrix { rho, convention }
}
