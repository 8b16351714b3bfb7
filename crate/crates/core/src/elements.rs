//! Jones operators for the interferometer elements and the hole-array channel.
//!
//! The hole array is modelled as an effective element: a polarization
//! independent amplitude loss `sqrt(t)`, a linear birefringence `beta` on the
//! V mode, and random phases acting directly on the two-photon basis states.
//! The random phases `(theta_HH, theta_HV, theta_VV)` are jointly Gaussian, so
//! the coherence between basis states `i` and `j` is damped by
//! `E[exp(i(theta_i - theta_j))] = exp(-Var(theta_i - theta_j) / 2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::biphoton::{
    c, symmetric_square, BiphotonDensityMatrix, JonesOperator, TraceConvention, ALGEBRA_TOL, C64,
    PSD_TOL,
};
use crate::error::{Error, Result};

/// Effective parameters of a perforated metal film at the working wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoleArrayParams {
    /// Intensity transmittance per photon.
    pub transmittance_t: f64,
    /// Phase of V relative to H, radians.
    pub birefringence_beta: f64,
    /// Covariance of `(theta_HH, theta_HV, theta_VV)`, radians^2.
    pub dephasing_covariance: [[f64; 3]; 3],
    pub period_nm: f64,
    pub hole_diameter_nm: f64,
    pub film_thickness_nm: f64,
}

impl Default for HoleArrayParams {
    fn default() -> Self {
        Self {
            transmittance_t: 0.032,
            birefringence_beta: -FRAC_PI_2,
            dephasing_covariance: [[0.0; 3]; 3],
            period_nm: 600.0,
            hole_diameter_nm: 200.0,
            film_thickness_nm: 135.0,
        }
    }
}

impl HoleArrayParams {
    /// A lossless, non-birefringent, coherent "plate": the identity channel.
    pub fn transparent() -> Self {
        Self {
            transmittance_t: 1.0,
            birefringence_beta: 0.0,
            ..Self::default()
        }
    }

    /// Sets a covariance with `Var(theta_HH - theta_VV) = s2` and no HV fluctuation.
    ///
    /// Built as `theta_HH = -theta_VV` with variance `s2 / 4` each.
    pub fn with_hh_vv_dephasing(mut self, s2: f64) -> Self {
        let q = s2 / 4.0;
        self.dephasing_covariance = [[q, 0.0, -q], [0.0, 0.0, 0.0], [-q, 0.0, q]];
        self
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.dephasing_covariance[i][j])
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.transmittance_t;
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "transmittance {t} outside (0, 1]"
            )));
        }
        if !self.birefringence_beta.is_finite() {
            return Err(Error::InvalidArgument(
                "birefringence must be finite".into(),
            ));
        }
        for (name, v) in [
            ("period_nm", self.period_nm),
            ("hole_diameter_nm", self.hole_diameter_nm),
            ("film_thickness_nm", self.film_thickness_nm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        check_psd(&self.covariance())
    }

    /// `Var(theta_i - theta_j)` for every basis pair.
    pub fn phase_difference_variances(&self) -> Matrix3<f64> {
        let s = self.covariance();
        Matrix3::from_fn(|i, j| s[(i, i)] + s[(j, j)] - 2.0 * s[(i, j)])
    }

    /// Multiplicative damping applied to each density-matrix entry.
    pub fn damping_factors(&self) -> Matrix3<f64> {
        self.phase_difference_variances().map(|v| (-v / 2.0).exp())
    }
}

fn check_psd(s: &Matrix3<f64>) -> Result<()> {
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "dephasing covariance not finite".into(),
        ));
    }
    let asym = (s - s.transpose()).abs().max();
    if asym > ALGEBRA_TOL {
        return Err(Error::InvalidArgument(format!(
            "dephasing covariance not symmetric (deviation {asym:e})"
        )));
    }
    let min = s.symmetric_eigenvalues().min();
    if min < -PSD_TOL {
        return Err(Error::InvalidArgument(format!(
            "dephasing covariance not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Half-wave plate with fast axis at `theta` from horizontal.
pub fn hwp(theta: f64) -> JonesOperator {
    let (s, co) = (2.0 * theta).sin_cos();
    JonesOperator::from_matrix(Matrix2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0)))
        .expect("half-wave plate is unitary")
}

/// Retarder adding `delta_phi` to V relative to H.
pub fn phase_plate(delta_phi: f64) -> JonesOperator {
    JonesOperator::from_matrix(Matrix2::new(
        c(1.0, 0.0),
        C64::default(),
        C64::default(),
        C64::from_polar(1.0, delta_phi),
    ))
    .expect("phase plate is unitary")
}

/// Converts an optical path difference to the H/V phase `2 pi dL / lambda`.
pub fn delta_l_to_phase(delta_l_nm: f64, wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wavelength must be positive, got {wavelength_nm}"
        )));
    }
    Ok(2.0 * PI * delta_l_nm / wavelength_nm)
}

/// `sqrt(t) * diag(1, exp(i beta))`.
pub fn hole_array_jones(p: &HoleArrayParams) -> JonesOperator {
    let amp = p.transmittance_t.clamp(0.0, 1.0).sqrt();
    JonesOperator::from_matrix(Matrix2::new(
        c(amp, 0.0),
        C64::default(),
        C64::default(),
        C64::from_polar(amp, p.birefringence_beta),
    ))
    .expect("scaled diagonal phase is a contraction")
}

/// Loss and birefringence by conjugation, then Gaussian dephasing of the coherences.
///
/// The result carries the unnormalized convention: its trace is `t^2` times the input trace.
pub fn hole_array_channel(
    p: &HoleArrayParams,
    rho: &BiphotonDensityMatrix,
) -> Result<BiphotonDensityMatrix> {
    p.validate()?;
    rho.validate()?;
    let lift = symmetric_square(&hole_array_jones(p));
    let conj = lift * rho.matrix() * lift.adjoint();
    let damp = p.damping_factors();
    let out = conj.zip_map(&damp, |z, d| z * d);
    Ok(BiphotonDensityMatrix::from_matrix_unchecked(
        out,
        TraceConvention::Unnormalized,
    ))
}

/// Monte Carlo estimate of [`hole_array_channel`]: averages the conjugated state over
/// `samples` draws of the random basis phases.
pub fn sample_dephased_channel<R: Rng>(
    p: &HoleArrayParams,
    rho: &BiphotonDensityMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<BiphotonDensityMatrix> {
    p.validate()?;
    rho.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "need at least one phase sample".into(),
        ));
    }
    let lift = symmetric_square(&hole_array_jones(p));
    let conj = lift * rho.matrix() * lift.adjoint();

    // theta = V sqrt(Lambda) z works for singular covariances where Cholesky does not
    let eig = SymmetricEigen::new(p.covariance());
    let scale = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let root = eig.eigenvectors * Matrix3::from_diagonal(&scale);

    let mut acc = Matrix3::<C64>::zeros();
    for _ in 0..samples {
        let z = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let theta = root * z;
        acc += Matrix3::from_fn(|i, j| conj[(i, j)] * C64::from_polar(1.0, theta[i] - theta[j]));
    }
    Ok(BiphotonDensityMatrix::from_matrix_unchecked(
        acc / c(samples as f64, 0.0),
        TraceConvention::Unnormalized,
    ))
}
