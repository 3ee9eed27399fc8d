//! Concrete chain models and the bridge from single-site algebra to fields.
//!
//! Site observables are small dense matrices. Fluctuation fields of a
//! translation-invariant product state are Gaussian in the large-N limit with
//! correlation matrix `C_{mu nu} = tr(rho x_mu x_nu)` of the centered observables.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::{CorrelationMatrix, GaussianState, ModeSpace};
use crate::linalg::{
    c, ckron, cmax_abs, expm_i_hermitian, hermiticity_defect, imag_part, kron, pauli, real_part,
    spin_half, standard_symplectic, to_rows, trace, CMat, RMat, RVec,
};
use crate::semigroup::QuasiFreeModel;

const SITE_TOL: f64 = 1e-12;

/// Single-site density matrix together with a list of Hermitian observables.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteAlgebra {
    rho: CMat,
    ops: Vec<CMat>,
}

impl SiteAlgebra {
    pub fn new(rho: CMat, ops: Vec<CMat>) -> Result<Self> {
        let d = rho.nrows();
        check_dim(d, rho.ncols())?;
        if hermiticity_defect(&rho) > SITE_TOL {
            return Err(Error::InvalidState(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr = trace(&rho);
        if (tr - c(1.0, 0.0)).norm() > SITE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has trace {tr}"
            )));
        }
        let min = crate::linalg::min_hermitian_eigenvalue(&rho);
        if min < -SITE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        for (k, op) in ops.iter().enumerate() {
            check_dim(d, op.nrows())?;
            check_dim(d, op.ncols())?;
            if hermiticity_defect(op) > SITE_TOL * cmax_abs(op).max(1.0) {
                return Err(Error::param(format!("observable {k} is not Hermitian")));
            }
        }
        Ok(Self { rho, ops })
    }

    /// `exp(-beta h) / tr exp(-beta h)` for Hermitian `h`.
    pub fn gibbs(h: &CMat, beta: f64, ops: Vec<CMat>) -> Result<Self> {
        let eig = SymmetricEigen::new(crate::linalg::hermitize(h));
        let shift = eig.eigenvalues.min();
        let weights = eig.eigenvalues.map(|e| c((-beta * (e - shift)).exp(), 0.0));
        let z: Complex64 = weights.iter().sum();
        let v = &eig.eigenvectors;
        let rho = v * CMat::from_diagonal(&weights) * v.adjoint() / z;
        Self::new(crate::linalg::hermitize(&rho), ops)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn expectation(&self, x: &CMat) -> Complex64 {
        trace(&(&self.rho * x))
    }

    /// `x - omega(x) 1`.
    pub fn centered(&self, x: &CMat) -> CMat {
        let d = self.dim();
        x - CMat::identity(d, d) * self.expectation(x)
    }

    fn selected(&self, ops: &[usize]) -> Result<Vec<CMat>> {
        ops.iter()
            .map(|&k| {
                self.ops
                    .get(k)
                    .map(|x| self.centered(x))
                    .ok_or_else(|| Error::param(format!("observable index {k} out of range")))
            })
            .collect()
    }
}

/// `C_{mu nu} = tr(rho x~_mu x~_nu)` over the selected observables.
pub fn correlation_from_state(site: &SiteAlgebra, ops: &[usize]) -> Result<CorrelationMatrix> {
    let xs = site.selected(ops)?;
    let n = xs.len();
    let c = CMat::from_fn(n, n, |i, j| site.expectation(&(&xs[i] * &xs[j])));
    CorrelationMatrix::new(crate::linalg::hermitize(&c))
}

/// Coefficients `f_mu^i` with `F_mu = sum_i (conj(f_mu^i) a_i + f_mu^i a_i^dag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMap {
    f: CMat,
}

impl ModeMap {
    pub fn new(f: CMat) -> Self {
        Self { f }
    }

    pub fn coefficients(&self) -> &CMat {
        &self.f
    }

    pub fn modes(&self) -> usize {
        self.f.ncols()
    }

    /// Commutator matrix implied by the CCR: `i sigma_{mu nu} = sum_i (conj f_mu f_nu - f_mu conj f_nu)`.
    pub fn ccr_matrix(&self) -> RMat {
        let g = self.f.conjugate() * self.f.transpose();
        imag_part(&g) * 2.0
    }

    /// Real `T` with `F = T R`, `R = (q_1, p_1, q_2, p_2, ...)` standard quadratures.
    pub fn quadrature_transform(&self) -> RMat {
        let n = self.f.nrows();
        RMat::from_fn(n, 2 * self.modes(), |mu, k| {
            let z = self.f[(mu, k / 2)];
            SQRT_2 * if k % 2 == 0 { z.re } else { z.im }
        })
    }

    /// Express a state over the fields `F` in standard quadratures.
    pub fn to_modes(&self, state: &GaussianState) -> Result<GaussianState> {
        let t_inv = self.inverse_transform(state.dim())?;
        let cov = &t_inv * state.covariance() * t_inv.transpose();
        GaussianState::new(ModeSpace::standard(self.modes()), cov)
    }

    pub fn from_modes(&self, state: &GaussianState, space: &ModeSpace) -> Result<GaussianState> {
        let t = self.quadrature_transform();
        check_dim(t.ncols(), state.dim())?;
        GaussianState::new(space.clone(), &t * state.covariance() * t.transpose())
    }

    fn inverse_transform(&self, n: usize) -> Result<RMat> {
        let t = self.quadrature_transform();
        check_dim(n, t.nrows())?;
        check_dim(t.nrows(), t.ncols())?;
        t.try_inverse()
            .ok_or_else(|| Error::DegenerateSymplectic("mode map is not invertible".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    SpinDoubleChain,
    OscillatorDoubleChain,
}

/// Everything a scenario needs about one linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub kind: ChainKind,
    pub quasifree: QuasiFreeModel,
    pub c_ref: CorrelationMatrix,
    pub mode_map: ModeMap,
    pub kossakowski: Option<CMat>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleDocument {
    pub kind: ChainKind,
    pub params: BTreeMap<String, f64>,
    pub drift: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub mode_map_re: Vec<Vec<f64>>,
    pub mode_map_im: Vec<Vec<f64>>,
}

impl ModelBundle {
    pub fn document(&self) -> BundleDocument {
        let f = self.mode_map.coefficients();
        BundleDocument {
            kind: self.kind,
            params: self.params.clone(),
            drift: to_rows(self.quasifree.drift()),
            covariance: to_rows(self.quasifree.reference().covariance()),
            sigma: to_rows(self.quasifree.space().sigma()),
            mode_map_re: to_rows(&real_part(f)),
            mode_map_im: to_rows(&imag_part(f)),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("bundle document is plain data")
    }

    /// The reference state expressed in standard quadratures.
    pub fn reference_in_modes(&self) -> Result<GaussianState> {
        self.mode_map.to_modes(self.quasifree.reference())
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::param(format!("{name} > 0 required (got {value})")));
    }
    Ok(())
}

pub fn thermal_eta(beta: f64, epsilon: f64) -> f64 {
    (beta * epsilon / 2.0).tanh()
}

fn id(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// The two-chain spin site: `rho ~ exp(-beta eps (s3 x 1 + 1 x s3))` and the
/// eight observables `4 (s1 s0, s2 s0, s0 s1, s0 s2, s1 s3, s2 s3, s3 s1, s3 s2)`.
pub fn spin_double_chain_site(beta: f64, epsilon: f64) -> Result<SiteAlgebra> {
    let [s1, s2, s3] = spin_half();
    let s0 = id(2) * c(0.5, 0.0);
    let h = (ckron(&s3, &id(2)) + ckron(&id(2), &s3)) * c(epsilon, 0.0);
    let pairs = [
        (&s1, &s0),
        (&s2, &s0),
        (&s0, &s1),
        (&s0, &s2),
        (&s1, &s3),
        (&s2, &s3),
        (&s3, &s1),
        (&s3, &s2),
    ];
    let ops = pairs
        .iter()
        .map(|(a, b)| ckron(a, b) * c(4.0, 0.0))
        .collect();
    SiteAlgebra::gibbs(&h, beta, ops)
}

/// One spin with `rho ~ exp(-beta eps s3)` and observables `(s1, s2, s3)`.
pub fn single_spin_site(beta: f64, epsilon: f64) -> Result<SiteAlgebra> {
    let [s1, s2, s3] = spin_half();
    SiteAlgebra::gibbs(&(s3.clone() * c(epsilon, 0.0)), beta, vec![s1, s2, s3])
}

pub fn spin_double_chain(beta: f64, epsilon: f64, gamma: f64, j0: f64) -> Result<ModelBundle> {
    check_positive("beta", beta)?;
    check_positive("epsilon", epsilon)?;
    check_positive("J0", j0)?;
    if !(gamma.is_finite() && gamma.abs() <= 0.5) {
        return Err(Error::param(format!(
            "|gamma| <= 0.5 required (got {gamma})"
        )));
    }
    let eta = thermal_eta(beta, epsilon);
    let [px, py, _] = pauli();
    let one = id(2);
    let cref = ckron(
        &ckron(&(&one - &px * c(eta, 0.0)), &one),
        &(&one + &py * c(eta, 0.0)),
    );
    let c_ref = CorrelationMatrix::new(cref)?;
    let generator = ckron(&ckron(&one, &one), &py) * c(0.0, -epsilon)
        - (id(8) - ckron(&ckron(&px, &px), &one) * c(gamma, 0.0)) * c(j0, 0.0);
    debug_assert!(cmax_abs(&generator.map(|z| c(0.0, z.im))) < 1e-15);
    let drift = real_part(&generator);
    let quasifree = QuasiFreeModel::new(drift, c_ref.to_state()?)?;

    let mut f = CMat::zeros(8, 4);
    let (se, e32, k) = (eta.sqrt(), eta.powf(1.5), (eta * (1.0 - eta * eta)).sqrt());
    let i = c(0.0, 1.0);
    for (row, mode, value) in [
        (0, 0, c(se, 0.0)),
        (1, 0, -i * se),
        (2, 2, c(se, 0.0)),
        (3, 2, -i * se),
        (4, 0, c(-e32, 0.0)),
        (5, 0, i * e32),
        (6, 2, c(-e32, 0.0)),
        (7, 2, i * e32),
        (4, 1, c(-k, 0.0)),
        (5, 1, i * k),
        (6, 3, c(-k, 0.0)),
        (7, 3, i * k),
    ] {
        f[(row, mode)] = value;
    }
    let params = BTreeMap::from([
        ("beta".to_string(), beta),
        ("epsilon".to_string(), epsilon),
        ("gamma".to_string(), gamma),
        ("J0".to_string(), j0),
    ]);
    Ok(ModelBundle {
        kind: ChainKind::SpinDoubleChain,
        quasifree,
        c_ref,
        mode_map: ModeMap::new(f),
        kossakowski: None,
        params,
    })
}

pub fn oscillator_double_chain(beta: f64, epsilon: f64, lambda: f64) -> Result<ModelBundle> {
    check_positive("beta", beta)?;
    check_positive("epsilon", epsilon)?;
    if !(lambda.is_finite() && lambda.abs() <= 1.0) {
        return Err(Error::param(format!(
            "|lambda| <= 1 required (got {lambda})"
        )));
    }
    let eta = thermal_eta(beta, epsilon);
    let q = (-beta * epsilon).exp_m1();
    let sigma = standard_symplectic(3);
    let cov = RMat::identity(6, 6) * ((eta * eta + 1.0) / (4.0 * eta));
    let coupling = RMat::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    let drift = RMat::identity(6, 6) * q
        + &sigma * (2.0 * epsilon)
        + kron(&coupling, &RMat::identity(2, 2)) * (lambda * q / SQRT_2);
    let reference = GaussianState::new(ModeSpace::new(sigma.clone())?, cov)?;
    let c_ref = reference.correlation();
    let quasifree = QuasiFreeModel::new(drift, reference)?;

    let k = (1.0 + (-beta * epsilon).exp()) / 2.0;
    let a_block = CMat::from_row_slice(
        2,
        2,
        &[c(k, 0.0), c(0.0, -k * eta), c(0.0, k * eta), c(k, 0.0)],
    );
    let blocks = CMat::from_row_slice(
        2,
        2,
        &[c(1.0, 0.0), c(lambda, 0.0), c(lambda, 0.0), c(1.0, 0.0)],
    );
    let kossakowski = ckron(&blocks, &a_block);

    let mut f = CMat::zeros(6, 3);
    for m in 0..3 {
        f[(2 * m, m)] = c(1.0 / SQRT_2, 0.0);
        f[(2 * m + 1, m)] = c(0.0, 1.0 / SQRT_2);
    }
    let params = BTreeMap::from([
        ("beta".to_string(), beta),
        ("epsilon".to_string(), epsilon),
        ("lambda".to_string(), lambda),
    ]);
    Ok(ModelBundle {
        kind: ChainKind::OscillatorDoubleChain,
        quasifree,
        c_ref,
        mode_map: ModeMap::new(f),
        kossakowski: Some(kossakowski),
        params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    Spin,
    Oscillator,
}

/// Which temperature enters the spin preset's rescaled covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinExponent {
    /// `coth(beta eps / 2)`, consistent with `eta = tanh(beta eps / 2)`.
    #[default]
    BetaEpsilon,
    /// `coth(beta / 2)`, equal to the default only for unit `eps`.
    BetaOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainPreset {
    pub kind: PresetKind,
    pub sigma: RMat,
    pub covariance: RMat,
    /// Components that commute with every field; excluded from the mode space.
    pub classical: Vec<usize>,
    eta: f64,
    beta: f64,
    epsilon: f64,
}

pub fn single_chain_presets(kind: PresetKind, beta: f64, epsilon: f64) -> Result<ChainPreset> {
    check_positive("beta", beta)?;
    check_positive("epsilon", epsilon)?;
    let eta = thermal_eta(beta, epsilon);
    let (sigma, covariance, classical) = match kind {
        PresetKind::Spin => {
            let mut sigma = RMat::zeros(3, 3);
            sigma[(0, 1)] = -eta / 2.0;
            sigma[(1, 0)] = eta / 2.0;
            let cov =
                RMat::from_diagonal(&RVec::from_vec(vec![0.25, 0.25, (1.0 - eta * eta) / 4.0]));
            (sigma, cov, vec![2])
        }
        PresetKind::Oscillator => (
            standard_symplectic(1),
            RMat::identity(2, 2) * ((eta * eta + 1.0) / (4.0 * eta)),
            vec![],
        ),
    };
    Ok(ChainPreset {
        kind,
        sigma,
        covariance,
        classical,
        eta,
        beta,
        epsilon,
    })
}

impl ChainPreset {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// State over the non-classical components.
    pub fn quantum_state(&self) -> Result<GaussianState> {
        let keep: Vec<usize> = (0..self.sigma.nrows())
            .filter(|k| !self.classical.contains(k))
            .collect();
        let sub = |m: &RMat| RMat::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]);
        GaussianState::new(ModeSpace::new(sub(&self.sigma))?, sub(&self.covariance))
    }

    /// State of the rescaled pair obeying standard CCR.
    ///
    /// For the spin the fields `sqrt(2/eta) (s2, s1)` form a standard pair.
    pub fn standard_pair(&self, exponent: SpinExponent) -> Result<GaussianState> {
        match self.kind {
            PresetKind::Oscillator => {
                GaussianState::new(ModeSpace::standard(1), self.covariance.clone())
            }
            PresetKind::Spin => {
                let x = match exponent {
                    SpinExponent::BetaEpsilon => self.beta * self.epsilon,
                    SpinExponent::BetaOnly => self.beta,
                };
                let nu = 0.5 / (x / 2.0).tanh();
                GaussianState::new(ModeSpace::standard(1), RMat::identity(2, 2) * nu)
            }
        }
    }

    /// Scale that turns the spin pair into standard form, `sqrt(2/eta)`.
    pub fn pair_rescaling(&self) -> f64 {
        match self.kind {
            PresetKind::Spin => (2.0 / self.eta).sqrt(),
            PresetKind::Oscillator => 1.0,
        }
    }
}

/// `omega(exp(i r.F_N))` for the N-fold product state, computed exactly as
/// `[tr(rho exp(i r.x~ / sqrt N))]^N`.
pub fn finite_n_char(site: &SiteAlgebra, ops: &[usize], r: &RVec, n: u64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::param("N >= 1 required"));
    }
    let xs = site.selected(ops)?;
    check_dim(xs.len(), r.len())?;
    let d = site.dim();
    let scale = 1.0 / (n as f64).sqrt();
    let a = xs
        .iter()
        .zip(r.iter())
        .fold(CMat::zeros(d, d), |acc, (x, &ri)| {
            acc + x * c(ri * scale, 0.0)
        });
    let phi = site.expectation(&expm_i_hermitian(&a));
    Ok((phi.ln() * n as f64).exp())
}

/// The N -> infinity limit `exp(-r.Sigma.r / 2)`.
pub fn gaussian_limit(site: &SiteAlgebra, ops: &[usize], r: &RVec) -> Result<f64> {
    let cov = correlation_from_state(site, ops)?.covariance();
    check_dim(cov.nrows(), r.len())?;
    Ok((-0.5 * r.dot(&(cov * r))).exp())
}

/// `|omega(X_N Y_N) - omega(x) omega(y)|` for mean-field averages in a product state.
///
/// Only the `N` diagonal terms of the double sum differ from the product, so
/// the gap is exactly `|omega(xy) - omega(x) omega(y)| / N`.
pub fn meanfield_product_gap(site: &SiteAlgebra, x: &CMat, y: &CMat, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("N >= 1 required"));
    }
    check_dim(site.dim(), x.nrows())?;
    check_dim(site.dim(), y.nrows())?;
    let connected = site.expectation(&(x * y)) - site.expectation(x) * site.expectation(y);
    Ok(connected.norm() / n as f64)
}
