//! Quasi-free dissipative semigroups acting on Weyl operators and covariances.
//!
//! A quasi-free map sends `W(r)` to `exp(f_t(r)) W(M_t^T r)` with `M_t =
//! exp(t L)`. On Gaussian states it acts as the affine covariance flow
//! `Sigma -> Sigma_ref - M Sigma_ref M^T + M Sigma M^T`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::{validate_gaussian, CorrelationMatrix, GaussianState, ModeSpace};
use crate::linalg::{
    complexify, expm, hermiticity_defect, min_hermitian_eigenvalue, symmetrize, CMat, RMat, RVec,
    I, PSD_TOL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiFreeModel {
    drift: RMat,
    reference: GaussianState,
}

/// Image of `W(r)` under the semigroup at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylImage {
    pub log_prefactor: f64,
    pub r_t: RVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub pass: bool,
    /// Minimum eigenvalue of `C - M C M^T`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrices {
    pub h: CMat,
    pub d: CMat,
}

impl GeneratorMatrices {
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.h)
    }

    pub fn dissipator_min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.d)
    }
}

impl QuasiFreeModel {
    /// `reference` must be a physical state; it plays the role of the
    /// invariant microscopic state's fluctuation covariance.
    pub fn new(drift: RMat, reference: GaussianState) -> Result<Self> {
        check_dim(reference.dim(), drift.nrows())?;
        check_dim(reference.dim(), drift.ncols())?;
        if drift.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("drift matrix has non-finite entries"));
        }
        let v = validate_gaussian(&reference);
        if !v.valid {
            return Err(Error::InvalidState(format!(
                "reference covariance violates the uncertainty bound (min eigenvalue {:e})",
                v.min_eigenvalue
            )));
        }
        Ok(Self { drift, reference })
    }

    pub fn from_parts(drift: RMat, sigma_ref: RMat, sigma: RMat) -> Result<Self> {
        Self::new(
            drift,
            GaussianState::new(ModeSpace::new(sigma)?, sigma_ref)?,
        )
    }

    pub fn drift(&self) -> &RMat {
        &self.drift
    }

    pub fn reference(&self) -> &GaussianState {
        &self.reference
    }

    pub fn space(&self) -> &ModeSpace {
        self.reference.space()
    }

    pub fn dim(&self) -> usize {
        self.reference.dim()
    }

    pub fn propagator(&self, t: f64) -> Result<RMat> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(RMat::identity(self.dim(), self.dim()));
        }
        let m = expm(&(&self.drift * t));
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "propagator overflowed at t = {t}"
            )));
        }
        Ok(m)
    }

    pub fn noise_matrix(&self, t: f64) -> Result<RMat> {
        let m = self.propagator(t)?;
        Ok(self.noise_from_propagator(&m))
    }

    fn noise_from_propagator(&self, m: &RMat) -> RMat {
        let s = self.reference.covariance();
        symmetrize(&(s - m * s * m.transpose()))
    }

    pub fn evolve_covariance(&self, initial: &GaussianState, t: f64) -> Result<GaussianState> {
        self.check_initial(initial)?;
        let m = self.propagator(t)?;
        self.evolve_with(initial, &m)
    }

    /// Evolution on a grid of times, reusing the validity check of `initial`.
    pub fn evolve_on_grid(
        &self,
        initial: &GaussianState,
        times: &[f64],
    ) -> Result<Vec<GaussianState>> {
        self.check_initial(initial)?;
        times
            .iter()
            .map(|&t| {
                let m = self.propagator(t)?;
                self.evolve_with(initial, &m)
            })
            .collect()
    }

    fn evolve_with(&self, initial: &GaussianState, m: &RMat) -> Result<GaussianState> {
        let cov = self.noise_from_propagator(m) + m * initial.covariance() * m.transpose();
        initial.with_covariance(symmetrize(&cov))
    }

    fn check_initial(&self, initial: &GaussianState) -> Result<()> {
        check_dim(self.dim(), initial.dim())?;
        if initial.space() != self.space() {
            return Err(Error::InvalidState(
                "initial state lives on a different mode space".into(),
            ));
        }
        let v = validate_gaussian(initial);
        if !v.valid {
            return Err(Error::InvalidState(format!(
                "initial covariance violates the uncertainty bound (min eigenvalue {:e})",
                v.min_eigenvalue
            )));
        }
        Ok(())
    }

    /// `W(r) -> exp(-r.K_t.r / 2) W(M_t^T r)`.
    ///
    /// The prefactor is contracted with `r`, not `r_t`: that is what keeps the
    /// reference state invariant.
    pub fn apply_to_weyl(&self, r: &RVec, t: f64) -> Result<WeylImage> {
        check_dim(self.dim(), r.len())?;
        let m = self.propagator(t)?;
        let k = self.noise_from_propagator(&m);
        Ok(WeylImage {
            log_prefactor: -0.5 * r.dot(&(k * r)),
            r_t: m.transpose() * r,
        })
    }

    /// Complete positivity: `C - M_t C M_t^T >= 0` with `C = Sigma + (i/2) sigma`.
    pub fn check_cp(&self, t: f64) -> Result<CpReport> {
        let m = complexify(&self.propagator(t)?);
        let c = self.reference.correlation().matrix().clone();
        let gap = &c - &m * &c * m.transpose();
        let margin = min_hermitian_eigenvalue(&gap);
        Ok(CpReport {
            pass: margin >= -PSD_TOL,
            margin,
        })
    }

    /// Hamiltonian and dissipative coefficient matrices of the generator:
    /// `H = -i s^-1 (L C - C L^T) s^-1` and `D = s^-1 (L C + C L^T) s^-1`.
    pub fn generator_matrices(&self, c_ref: &CorrelationMatrix) -> Result<GeneratorMatrices> {
        check_dim(self.dim(), c_ref.matrix().nrows())?;
        let sigma_inv = c_ref
            .sigma()
            .try_inverse()
            .ok_or_else(|| Error::DegenerateSymplectic("commutator matrix is singular".into()))?;
        let s = complexify(&sigma_inv);
        let l = complexify(&self.drift);
        let c = c_ref.matrix();
        let lc = &l * c;
        let clt = c * l.transpose();
        let h = &s * (&lc - &clt) * &s * (-I);
        let d = &s * (&lc + &clt) * &s;
        Ok(GeneratorMatrices { h, d })
    }
}

/// `Sigma_ref + (i/2) sigma` of a model as a standalone correlation matrix.
pub fn reference_correlation(model: &QuasiFreeModel) -> CorrelationMatrix {
    CorrelationMatrix::from_parts(model.reference().covariance(), model.space().sigma())
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::param(format!(
            "time must be finite and >= 0 (got {t}); the semigroup runs forward only"
        )));
    }
    Ok(())
}
