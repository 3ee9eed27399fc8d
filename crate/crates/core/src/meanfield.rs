//! Mean-field dissipative dynamics: nonlinear macroscopic flow and the
//! fluctuation maps riding on it.
//!
//! With `[v_a, v_b] = i f_ab^c v_c` and the Kossakowski matrix split as
//! `C = A + B`, the macroscopic averages obey `d omega/dt = D(omega) omega`.
//! Fluctuations see a time-dependent commutator matrix `sigma(omega_t)` and
//! evolve with `dX/dt = Q X`, `dY/dt = Q Y + Y Q^T + sigma A sigma^T`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::gaussian::{GaussianState, ModeSpace};
use crate::linalg::{
    c, ckron, hermiticity_defect, imag_part, min_hermitian_eigenvalue, real_part, simpson_weights,
    spin_half, symmetrize, trace, CMat, RMat, RVec, PSD_TOL, SYMMETRY_TOL,
};

/// Real structure constants `f[a][b][c]` of a Hermitian operator basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    d: usize,
    f: Vec<f64>,
}

impl StructureConstants {
    pub fn from_fn(d: usize, mut g: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut f = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    f[(a * d + b) * d + k] = g(a, b, k);
                }
            }
        }
        Self { d, f }
    }

    /// `epsilon_{abc}` for the spin basis `(s1, s2, s3)`.
    pub fn su2() -> Self {
        Self::from_fn(3, levi_civita)
    }

    /// Two commuting copies of su(2): `(s_i x 1, 1 x s_i)`.
    pub fn su2_pair() -> Self {
        Self::from_fn(6, |a, b, k| {
            if a / 3 == b / 3 && b / 3 == k / 3 {
                levi_civita(a % 3, b % 3, k % 3)
            } else {
                0.0
            }
        })
    }

    /// Expands each commutator on the basis through the Hilbert-Schmidt Gram matrix.
    pub fn from_basis(ops: &[CMat]) -> Result<Self> {
        let d = ops.len();
        let gram = CMat::from_fn(d, d, |i, j| trace(&(ops[i].adjoint() * &ops[j])));
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::param("basis operators are linearly dependent"))?;
        let mut f = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                let comm = &ops[a] * &ops[b] - &ops[b] * &ops[a];
                let proj = nalgebra::DVector::from_fn(d, |i, _| trace(&(ops[i].adjoint() * &comm)));
                let coeffs = &inv * proj;
                for k in 0..d {
                    // [v_a, v_b] = i f v  =>  f = -i * coefficient
                    let z = coeffs[k] * c(0.0, -1.0);
                    if z.im.abs() > 1e-10 {
                        return Err(Error::param("basis is not Hermitian or not closed"));
                    }
                    f[(a * d + b) * d + k] = z.re;
                }
            }
        }
        Ok(Self { d, f })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, a: usize, b: usize, k: usize) -> f64 {
        self.f[(a * self.d + b) * self.d + k]
    }

    /// `sigma_{ab} = sum_c f_ab^c omega_c`.
    pub fn commutator_matrix(&self, omega: &RVec) -> RMat {
        let d = self.d;
        RMat::from_fn(d, d, |a, b| {
            (0..d).map(|k| self.get(a, b, k) * omega[k]).sum()
        })
    }
}

fn levi_civita(a: usize, b: usize, k: usize) -> f64 {
    match (a, b, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Mean-field averages together with the algebra they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroVector {
    pub omega: RVec,
    pub f: StructureConstants,
}

impl MacroVector {
    pub fn norm_squared(&self) -> f64 {
        self.omega.norm_squared()
    }

    pub fn sigma(&self) -> RMat {
        self.f.commutator_matrix(&self.omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldModel {
    f: StructureConstants,
    kossakowski: CMat,
    /// Real part of the Hamiltonian coefficients `h_{mu nu}`.
    h: RMat,
    /// Imaginary part `kappa_{mu nu}`.
    kappa: RMat,
    /// `B~ = i * btilde_im`.
    btilde_im: RMat,
    a: RMat,
    basis: Option<Vec<CMat>>,
    /// Fluctuation fields are `scale * F`; covariances and commutators pick up `scale^2`.
    fluct_scale: f64,
    /// Components kept for the fluctuation algebra.
    retained: Vec<usize>,
}

impl MeanFieldModel {
    /// Purely dissipative model: no Hamiltonian coefficients.
    pub fn new(f: StructureConstants, kossakowski: CMat) -> Result<Self> {
        let d = f.dim();
        Self::with_hamiltonian(f, kossakowski, RMat::zeros(d, d), RMat::zeros(d, d))
    }

    pub fn with_hamiltonian(
        f: StructureConstants,
        kossakowski: CMat,
        h: RMat,
        kappa: RMat,
    ) -> Result<Self> {
        let d = f.dim();
        for m in [
            kossakowski.nrows(),
            kossakowski.ncols(),
            h.nrows(),
            h.ncols(),
            kappa.nrows(),
            kappa.ncols(),
        ] {
            check_dim(d, m)?;
        }
        if hermiticity_defect(&kossakowski) > SYMMETRY_TOL {
            return Err(Error::param("Kossakowski matrix must be Hermitian"));
        }
        let min = min_hermitian_eigenvalue(&kossakowski);
        if min < -PSD_TOL {
            return Err(Error::param(format!(
                "Kossakowski matrix must be positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        if (&h - h.transpose()).amax() > SYMMETRY_TOL
            || (&kappa + kappa.transpose()).amax() > SYMMETRY_TOL
        {
            return Err(Error::param("h must be symmetric and kappa antisymmetric"));
        }
        // For Hermitian C: symmetric part is real, antisymmetric part is imaginary.
        let a = symmetrize(&real_part(&kossakowski));
        let b_im = imag_part(&kossakowski);
        let btilde_im = b_im + &h * 2.0;
        Ok(Self {
            f,
            kossakowski,
            h,
            kappa,
            btilde_im,
            a,
            basis: None,
            fluct_scale: 1.0,
            retained: (0..d).collect(),
        })
    }

    pub fn with_basis(mut self, basis: Vec<CMat>) -> Result<Self> {
        check_dim(self.dim(), basis.len())?;
        self.basis = Some(basis);
        Ok(self)
    }

    pub fn with_fluct_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param("fluctuation scale must be positive"));
        }
        self.fluct_scale = scale;
        Ok(self)
    }

    pub fn with_retained(mut self, retained: Vec<usize>) -> Result<Self> {
        if retained.is_empty() || retained.iter().any(|&k| k >= self.dim()) {
            return Err(Error::param("retained components out of range"));
        }
        self.retained = retained;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.f
    }

    pub fn kossakowski(&self) -> &CMat {
        &self.kossakowski
    }

    /// Symmetric part of `C`.
    pub fn a(&self) -> &RMat {
        &self.a
    }

    /// Antisymmetric part of `C`, purely imaginary.
    pub fn b(&self) -> CMat {
        imag_part(&self.kossakowski).map(|x| c(0.0, x))
    }

    pub fn a_tilde(&self) -> RMat {
        &self.a - &self.kappa * 2.0
    }

    pub fn b_tilde(&self) -> CMat {
        self.btilde_im.map(|x| c(0.0, x))
    }

    pub fn h(&self) -> &RMat {
        &self.h
    }

    pub fn fluct_scale(&self) -> f64 {
        self.fluct_scale
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn basis(&self) -> Option<&[CMat]> {
        self.basis.as_deref()
    }

    /// Unscaled commutator matrix on all components.
    pub fn sigma_of(&self, omega: &RVec) -> RMat {
        self.f.commutator_matrix(omega)
    }

    /// Commutator matrix of the retained, rescaled fields.
    pub fn fluct_sigma(&self, omega: &RVec) -> RMat {
        let s2 = self.fluct_scale * self.fluct_scale;
        self.reduce(&self.sigma_of(omega)) * s2
    }

    pub fn fluct_space(&self, omega: &RVec) -> Result<ModeSpace> {
        ModeSpace::new(self.fluct_sigma(omega))
    }

    fn reduce(&self, m: &RMat) -> RMat {
        let r = &self.retained;
        RMat::from_fn(r.len(), r.len(), |i, j| m[(r[i], r[j])])
    }

    fn drift_q(&self, omega: &RVec) -> (RMat, RMat) {
        let d = drift_matrix(self, omega);
        let sigma = self.sigma_of(omega);
        let q = &sigma * &self.btilde_im + &d;
        (d, q)
    }

    /// Instantaneous generator `Q(omega)` of the fluctuation propagator, all components.
    pub fn fluct_generator(&self, omega: &RVec) -> RMat {
        self.drift_q(omega).1
    }
}

/// `D_{mu gamma} = i sum f_{alpha mu}^gamma B~_{alpha beta} omega_beta`.
pub fn drift_matrix(model: &MeanFieldModel, omega: &RVec) -> RMat {
    let dim = model.dim();
    // i * (i btilde_im) = -btilde_im
    let bw = &model.btilde_im * omega;
    RMat::from_fn(dim, dim, |mu, g| {
        -(0..dim)
            .map(|al| model.f.get(al, mu, g) * bw[al])
            .sum::<f64>()
    })
}

/// Equally spaced samples of the macroscopic flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub omegas: Vec<RVec>,
}

impl Trajectory {
    pub fn last(&self) -> &RVec {
        self.omegas
            .last()
            .expect("trajectory holds the initial point")
    }

    /// `t,omega_1,...` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let d = self.omegas.first().map_or(0, |w| w.len());
        let mut out = String::from("t");
        for k in 1..=d {
            out.push_str(&format!(",omega_{k}"));
        }
        out.push('\n');
        for (t, w) in self.times.iter().zip(&self.omegas) {
            out.push_str(&sig17(*t));
            for x in w.iter() {
                out.push(',');
                out.push_str(&sig17(*x));
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn grid(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param(format!("dt > 0 required (got {dt})")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param(format!("T >= 0 required (got {t})")));
    }
    let n = (t / dt - 1e-9).ceil().max(0.0) as usize;
    Ok((n, if n == 0 { 0.0 } else { t / n as f64 }))
}

fn ensure_finite(
    values: impl IntoIterator<Item = f64>,
    what: &str,
    step: usize,
    t: f64,
) -> Result<()> {
    if values.into_iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "{what} became non-finite at step {step} (t = {t})"
        )));
    }
    Ok(())
}

fn rk4_macro(model: &MeanFieldModel, w: &RVec, h: f64) -> RVec {
    let f = |w: &RVec| drift_matrix(model, w) * w;
    let k1 = f(w);
    let k2 = f(&(w + &k1 * (h / 2.0)));
    let k3 = f(&(w + &k2 * (h / 2.0)));
    let k4 = f(&(w + &k3 * h));
    w + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step RK4 for the macroscopic averages, recording every `stride` steps.
pub fn integrate_macro_sampled(
    model: &MeanFieldModel,
    omega0: &RVec,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    check_dim(model.dim(), omega0.len())?;
    let (n, h) = grid(t_end, dt)?;
    let stride = stride.max(1);
    let mut w = omega0.clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        omegas: vec![w.clone()],
    };
    for step in 1..=n {
        w = rk4_macro(model, &w, h);
        let t = step as f64 * h;
        ensure_finite(w.iter().copied(), "macroscopic state", step, t)?;
        if step % stride == 0 || step == n {
            traj.times.push(t);
            traj.omegas.push(w.clone());
        }
    }
    Ok(traj)
}

pub fn integrate_macro(
    model: &MeanFieldModel,
    omega0: &RVec,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_macro_sampled(model, omega0, t_end, dt, 1)
}

/// State of the co-integrated fluctuation flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctSample {
    pub t: f64,
    pub omega: RVec,
    /// Propagator on the retained components.
    pub x: RMat,
    /// Noise matrix on the retained components, rescaled.
    pub y: RMat,
}

#[derive(Clone)]
struct FlowState {
    w: RVec,
    x: RMat,
    y: RMat,
}

fn flow_rhs(model: &MeanFieldModel, s: &FlowState) -> FlowState {
    let (d, q) = model.drift_q(&s.w);
    let sigma = model.sigma_of(&s.w);
    let noise = &sigma * &model.a * sigma.transpose();
    FlowState {
        w: d * &s.w,
        x: &q * &s.x,
        y: &q * &s.y + &s.y * q.transpose() + noise,
    }
}

fn axpy(s: &FlowState, k: &FlowState, h: f64) -> FlowState {
    FlowState {
        w: &s.w + &k.w * h,
        x: &s.x + &k.x * h,
        y: &s.y + &k.y * h,
    }
}

fn rk4_flow(model: &MeanFieldModel, s: &FlowState, h: f64) -> FlowState {
    let k1 = flow_rhs(model, s);
    let k2 = flow_rhs(model, &axpy(s, &k1, h / 2.0));
    let k3 = flow_rhs(model, &axpy(s, &k2, h / 2.0));
    let k4 = flow_rhs(model, &axpy(s, &k3, h));
    FlowState {
        w: &s.w + (k1.w + k2.w * 2.0 + k3.w * 2.0 + k4.w) * (h / 6.0),
        x: &s.x + (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * (h / 6.0),
        y: &s.y + (k1.y + k2.y * 2.0 + k3.y * 2.0 + k4.y) * (h / 6.0),
    }
}

impl MeanFieldModel {
    fn sample(&self, t: f64, s: &FlowState) -> FluctSample {
        let s2 = self.fluct_scale * self.fluct_scale;
        FluctSample {
            t,
            omega: s.w.clone(),
            x: self.reduce(&s.x),
            y: symmetrize(&self.reduce(&s.y)) * s2,
        }
    }
}

/// Co-integrates `(omega, X, Y)` on one RK4 grid and samples every `stride` steps.
///
/// `Y` is obtained from its differential form rather than from the integral
/// over `X_s^-1`, which loses digits when `X` contracts strongly.
pub fn fluct_trajectory(
    model: &MeanFieldModel,
    omega0: &RVec,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<FluctSample>> {
    check_dim(model.dim(), omega0.len())?;
    let (n, h) = grid(t_end, dt)?;
    let stride = stride.max(1);
    let d = model.dim();
    let mut s = FlowState {
        w: omega0.clone(),
        x: RMat::identity(d, d),
        y: RMat::zeros(d, d),
    };
    let mut out = vec![model.sample(0.0, &s)];
    for step in 1..=n {
        s = rk4_flow(model, &s, h);
        let t = step as f64 * h;
        ensure_finite(
            s.w.iter().chain(s.x.iter()).chain(s.y.iter()).copied(),
            "fluctuation flow",
            step,
            t,
        )?;
        if step % stride == 0 || step == n {
            out.push(model.sample(t, &s));
        }
    }
    Ok(out)
}

pub fn fluct_flow(model: &MeanFieldModel, omega0: &RVec, t: f64, dt: f64) -> Result<FluctSample> {
    let (n, _) = grid(t, dt)?;
    let mut samples = fluct_trajectory(model, omega0, t, dt, n.max(1))?;
    Ok(samples.pop().expect("at least the initial sample"))
}

pub fn fluct_propagator(model: &MeanFieldModel, omega0: &RVec, t: f64, dt: f64) -> Result<RMat> {
    fluct_flow(model, omega0, t, dt).map(|s| s.x)
}

pub fn fluct_noise(model: &MeanFieldModel, omega0: &RVec, t: f64, dt: f64) -> Result<RMat> {
    fluct_flow(model, omega0, t, dt).map(|s| s.y)
}

/// `Y_t = X_t [int_0^t X_s^-1 sigma_s A sigma_s^T X_s^-T ds] X_t^T` by composite Simpson.
pub fn fluct_noise_quadrature(
    model: &MeanFieldModel,
    omega0: &RVec,
    t: f64,
    dt: f64,
) -> Result<RMat> {
    check_dim(model.dim(), omega0.len())?;
    let (mut n, _) = grid(t, dt)?;
    if n == 0 {
        let k = model.retained.len();
        return Ok(RMat::zeros(k, k));
    }
    n += n % 2;
    let h = t / n as f64;
    let d = model.dim();
    let weights = simpson_weights(n, h);
    let mut s = FlowState {
        w: omega0.clone(),
        x: RMat::identity(d, d),
        y: RMat::zeros(d, d),
    };
    let mut acc = RMat::zeros(d, d);
    for (step, wk) in weights.iter().enumerate() {
        if step > 0 {
            s = rk4_flow(model, &s, h);
        }
        let x_inv = s.x.clone().try_inverse().ok_or_else(|| {
            Error::Numerical(format!(
                "fluctuation propagator became singular at t = {}",
                step as f64 * h
            ))
        })?;
        let sigma = model.sigma_of(&s.w);
        acc += &x_inv * (&sigma * &model.a * sigma.transpose()) * x_inv.transpose() * *wk;
    }
    let y = &s.x * acc * s.x.transpose();
    let s2 = model.fluct_scale * model.fluct_scale;
    Ok(symmetrize(&model.reduce(&y)) * s2)
}

/// `Sigma_t = X_t Sigma_0 X_t^T + Y_t` on the retained, rescaled fields.
///
/// The initial covariance is only shape-checked: the two-chain preset starts
/// from a state that is unphysical for `zeta > 1/2` and is still of interest.
pub fn evolve_fluct_covariance(
    sigma0: &GaussianState,
    model: &MeanFieldModel,
    omega0: &RVec,
    t: f64,
    dt: f64,
) -> Result<GaussianState> {
    check_dim(model.retained.len(), sigma0.dim())?;
    let s = fluct_flow(model, omega0, t, dt)?;
    covariance_from_sample(sigma0, model, &s)
}

pub fn covariance_from_sample(
    sigma0: &GaussianState,
    model: &MeanFieldModel,
    s: &FluctSample,
) -> Result<GaussianState> {
    let cov = &s.x * sigma0.covariance() * s.x.transpose() + &s.y;
    GaussianState::new(model.fluct_space(&s.omega)?, symmetrize(&cov))
}

/// `H = -i sum_k sum B~_{mu nu} omega_nu v_mu^(k)` on `sites` copies of the site.
pub fn emergent_hamiltonian(model: &MeanFieldModel, omega: &RVec, sites: usize) -> Result<CMat> {
    const MAX_SITES: usize = 4;
    check_dim(model.dim(), omega.len())?;
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::param(format!(
            "1 <= S <= {MAX_SITES} sites required for a dense Hamiltonian (got {sites})"
        )));
    }
    let basis = model
        .basis
        .as_ref()
        .ok_or_else(|| Error::param("model has no operator basis attached"))?;
    // -i * (i btilde_im) omega = btilde_im omega
    let coeffs = &model.btilde_im * omega;
    let d = basis[0].nrows();
    let local = basis
        .iter()
        .zip(coeffs.iter())
        .fold(CMat::zeros(d, d), |acc, (v, &k)| acc + v * c(k, 0.0));
    let id = CMat::identity(d, d);
    let mut total = CMat::zeros(d.pow(sites as u32), d.pow(sites as u32));
    for k in 0..sites {
        let mut term = CMat::identity(1, 1);
        for j in 0..sites {
            term = ckron(&term, if j == k { &local } else { &id });
        }
        total += term;
    }
    Ok(total)
}

/// Single-spin purely dissipative model with `C = [[1, i, 0], [-i, 1, 0], [0, 0, 0]]`.
pub fn single_spin_model() -> MeanFieldModel {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let kossakowski = CMat::from_row_slice(3, 3, &[one, i, z, -i, one, z, z, z, z]);
    MeanFieldModel::new(StructureConstants::su2(), kossakowski)
        .and_then(|m| m.with_basis(spin_half().to_vec()))
        .expect("single-spin model data are consistent")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergentRotation {
    pub matrix: RMat,
    pub gamma: f64,
    /// Set when `omega_12 = 0` and the rotation axis is undefined.
    pub degenerate: bool,
}

/// Rotation `M_t` with `U_t^dag s U_t = M_t s` for the single-spin model.
///
/// `gamma(t) = -int_0^t omega_12(u) / omega_12(0) du` is integrated with
/// Simpson's rule along the RK4 trajectory.
pub fn emergent_unitary_spin(omega0: &RVec, t: f64, dt: f64) -> Result<EmergentRotation> {
    check_dim(3, omega0.len())?;
    let w12 = omega0[0].hypot(omega0[1]);
    if w12 == 0.0 {
        return Ok(EmergentRotation {
            matrix: RMat::identity(3, 3),
            gamma: 0.0,
            degenerate: true,
        });
    }
    let gamma = gamma_quadrature(omega0, t, dt)?;
    Ok(EmergentRotation {
        matrix: rotation_matrix(omega0[0], omega0[1], gamma),
        gamma,
        degenerate: false,
    })
}

pub fn gamma_quadrature(omega0: &RVec, t: f64, dt: f64) -> Result<f64> {
    let w12 = omega0[0].hypot(omega0[1]);
    let (mut n, _) = grid(t, dt)?;
    if n == 0 {
        return Ok(0.0);
    }
    n += n % 2;
    let h = t / n as f64;
    let traj = integrate_macro(&single_spin_model(), omega0, t, h)?;
    let weights = simpson_weights(traj.omegas.len() - 1, h);
    let integral: f64 = traj
        .omegas
        .iter()
        .zip(&weights)
        .map(|(w, wk)| wk * w[0].hypot(w[1]))
        .sum();
    Ok(-integral / w12)
}

/// Rotation about the axis `(-omega_2, omega_1, 0)` by `omega_12 * gamma`.
pub fn rotation_matrix(w1: f64, w2: f64, gamma: f64) -> RMat {
    let w12 = w1.hypot(w2);
    let g = w12 * gamma;
    let (cg, sg) = (g.cos(), g.sin());
    #[rustfmt::skip]
    let m = RMat::from_row_slice(3, 3, &[
        w1 * w1 * cg + w2 * w2, w1 * w2 * (cg - 1.0), w12 * w1 * sg,
        w1 * w2 * (cg - 1.0), w2 * w2 * cg + w1 * w1, w12 * w2 * sg,
        -w12 * w1 * sg, -w12 * w2 * sg, w12 * w12 * cg,
    ]);
    m / (w12 * w12)
}

/// Two spin chains with `C = [[1,1],[1,1]] x [[1,-ib],[ib,a]]` on the in-plane components.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoChainSetup {
    pub model: MeanFieldModel,
    pub omega0: RVec,
    /// Initial rescaled covariance `1_4 / (4 zeta)` on `(F1, F2, F4, F5)`.
    pub initial: GaussianState,
    pub warnings: Vec<String>,
}

pub fn twochain_meanfield_model(a: f64, b: f64, zeta: f64) -> Result<TwoChainSetup> {
    for (name, v) in [("a", a), ("b", b), ("zeta", zeta)] {
        if !v.is_finite() {
            return Err(Error::param(format!("{name} must be finite")));
        }
    }
    if zeta <= 0.0 {
        return Err(Error::param(format!("zeta > 0 required (got {zeta})")));
    }
    if a < b * b {
        return Err(Error::param(format!(
            "a >= b^2 required for complete positivity (got a = {a}, b^2 = {})",
            b * b
        )));
    }
    let mut warnings = Vec::new();
    if zeta > 0.5 {
        warnings.push(format!(
            "zeta = {zeta} exceeds 1/2: |omega(s3)| <= 1/2 for spins, the initial state is not physical"
        ));
    }
    let z = c(0.0, 0.0);
    let block = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -b), c(0.0, b), c(a, 0.0)]);
    let inplane = ckron(&CMat::from_element(2, 2, c(1.0, 0.0)), &block);
    let mut kossakowski = CMat::from_element(6, 6, z);
    let idx = [0, 1, 3, 4];
    for (i, &p) in idx.iter().enumerate() {
        for (j, &q) in idx.iter().enumerate() {
            kossakowski[(p, q)] = inplane[(i, j)];
        }
    }
    let [s1, s2, s3] = spin_half();
    let one = CMat::identity(2, 2);
    let basis = vec![
        ckron(&s1, &one),
        ckron(&s2, &one),
        ckron(&s3, &one),
        ckron(&one, &s1),
        ckron(&one, &s2),
        ckron(&one, &s3),
    ];
    let model = MeanFieldModel::new(StructureConstants::su2_pair(), kossakowski)?
        .with_basis(basis)?
        .with_fluct_scale(1.0 / zeta.sqrt())?
        .with_retained(idx.to_vec())?;
    let omega0 = RVec::from_vec(vec![0.0, 0.0, -zeta, 0.0, 0.0, -zeta]);
    let initial = GaussianState::new(
        model.fluct_space(&omega0)?,
        RMat::identity(4, 4) / (4.0 * zeta),
    )?;
    Ok(TwoChainSetup {
        model,
        omega0,
        initial,
        warnings,
    })
}

/// `max{0, -log2((1 + a - |a - 1|) / (4 b zeta))}`.
pub fn asymptotic_negativity(a: f64, b: f64, zeta: f64) -> Result<f64> {
    if !(b > 0.0 && zeta > 0.0) {
        return Err(Error::param("b > 0 and zeta > 0 required"));
    }
    if a < b * b {
        return Err(Error::param(format!("a >= b^2 required (got a = {a})")));
    }
    let arg = (1.0 + a - (a - 1.0).abs()) / (4.0 * b * zeta);
    Ok((-arg.log2()).max(0.0))
}

/// Closed-form solutions used as oracles and for cheap evaluation.
pub mod closed_form {
    use super::*;

    /// `c` with `omega_3(0) = xi tanh(xi c)`; needs `|omega_3(0)| < xi`.
    pub fn spin_phase_constant(omega0: &RVec) -> Result<(f64, f64)> {
        let xi = omega0.norm();
        if xi.is_nan() || xi <= 0.0 || omega0[2].abs() >= xi {
            return Err(Error::param(
                "|omega_3(0)| < xi required for the closed form (in-plane component must be nonzero)",
            ));
        }
        Ok((xi, (omega0[2] / xi).atanh() / xi))
    }

    pub fn spin_macro(omega0: &RVec, t: f64) -> Result<RVec> {
        let (xi, c) = spin_phase_constant(omega0)?;
        let ratio = (c * xi).cosh() / (xi * (t + c)).cosh();
        Ok(RVec::from_vec(vec![
            ratio * omega0[0],
            ratio * omega0[1],
            xi * (xi * (t + c)).tanh(),
        ]))
    }

    /// `gamma(t)` as the exact antiderivative: `(2/xi) cosh(c xi) [atan(e^{-xi(t+c)}) - atan(e^{-xi c})]`.
    pub fn spin_gamma(omega0: &RVec, t: f64) -> Result<f64> {
        let (xi, _) = spin_phase_constant(omega0)?;
        Ok(2.0 / xi * spin_gamma_bracket(omega0, t)?)
    }

    /// The bracketed expression without the `2/xi` factor.
    pub fn spin_gamma_bracket(omega0: &RVec, t: f64) -> Result<f64> {
        let (xi, c) = spin_phase_constant(omega0)?;
        Ok((c * xi).cosh() * ((-xi * (t + c)).exp().atan() - (-xi * c).exp().atan()))
    }

    pub fn twochain_x(b: f64, zeta: f64, t: f64) -> RMat {
        let e = (-2.0 * b * zeta * t).exp();
        let (xp, xm) = (1.0 + e, 1.0 - e);
        let outer = RMat::from_row_slice(2, 2, &[xp, -xm, -xm, xp]) * 0.5;
        crate::linalg::kron(&outer, &RMat::identity(2, 2))
    }

    pub fn twochain_y(a: f64, b: f64, zeta: f64, t: f64) -> RMat {
        let y = (1.0 - (-4.0 * b * zeta * t).exp()) / (4.0 * b);
        crate::linalg::kron(
            &RMat::from_element(2, 2, 1.0),
            &RMat::from_diagonal(&RVec::from_vec(vec![a, 1.0])),
        ) * y
    }

    /// `(1/8 zeta) [[S+, S-], [S-, S+]]` with `S+- = diag(1 +- 2 a zeta / b, 1 +- 2 zeta / b)`.
    pub fn twochain_sigma_inf_reflected(a: f64, b: f64, zeta: f64) -> RMat {
        let mut m = twochain_sigma_inf(a, b, zeta);
        for i in 0..2 {
            m[(i, i + 2)] = -m[(i, i + 2)];
            m[(i + 2, i)] = -m[(i + 2, i)];
        }
        m
    }

    /// Limit of `X Sigma_0 X^T + Y`. The off-diagonal blocks are `-Sigma_-`, which
    /// differs from `+Sigma_-` by a local reflection and leaves the negativity unchanged.
    pub fn twochain_sigma_inf(a: f64, b: f64, zeta: f64) -> RMat {
        let blk = |s: f64| {
            RMat::from_diagonal(&RVec::from_vec(vec![
                1.0 + s * 2.0 * a * zeta / b,
                1.0 + s * 2.0 * zeta / b,
            ]))
        };
        let mut m = RMat::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&blk(1.0));
        m.view_mut((2, 2), (2, 2)).copy_from(&blk(1.0));
        m.view_mut((0, 2), (2, 2)).copy_from(&(-blk(-1.0)));
        m.view_mut((2, 0), (2, 2)).copy_from(&(-blk(-1.0)));
        m / (8.0 * zeta)
    }
}

/// `t,Sigma_11,Sigma_12,...` over the upper triangle, 17 significant digits.
pub fn covariance_csv(times: &[f64], covs: &[RMat]) -> String {
    let n = covs.first().map_or(0, |m| m.nrows());
    let mut out = String::from("t");
    for i in 0..n {
        for j in i..n {
            out.push_str(&format!(",Sigma_{}{}", i + 1, j + 1));
        }
    }
    out.push('\n');
    for (t, m) in times.iter().zip(covs) {
        out.push_str(&sig17(*t));
        for i in 0..n {
            for j in i..n {
                out.push(',');
                out.push_str(&sig17(m[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{antisymmetry_defect, hermiticity_defect, max_abs};
    use proptest::prelude::*;

    #[test]
    fn structure_constants_from_spin_basis() {
        let f = StructureConstants::from_basis(&spin_half()).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                for k in 0..3 {
                    assert!((f.get(a, b, k) - levi_civita(a, b, k)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn pair_constants_match_product_basis() {
        let setup = twochain_meanfield_model(1.0, 1.0, 0.3).unwrap();
        let derived = StructureConstants::from_basis(setup.model.basis().unwrap()).unwrap();
        let f = StructureConstants::su2_pair();
        for a in 0..6 {
            for b in 0..6 {
                for k in 0..6 {
                    assert!((derived.get(a, b, k) - f.get(a, b, k)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn drift_vanishes_at_origin() {
        let m = single_spin_model();
        assert_eq!(drift_matrix(&m, &RVec::zeros(3)), RMat::zeros(3, 3));
    }

    #[test]
    fn single_spin_drift_reproduces_the_flow() {
        let m = single_spin_model();
        let w = RVec::from_vec(vec![0.1, -0.2, 0.3]);
        let d = drift_matrix(&m, &w);
        // transpose of [[0,0,w1],[0,0,w2],[-w1,-w2,0]]
        #[rustfmt::skip]
        let expected = RMat::from_row_slice(3, 3, &[
            0.0, 0.0, -0.1,
            0.0, 0.0, 0.2,
            0.1, -0.2, 0.0,
        ]);
        assert!(max_abs(&(&d - &expected)) < 1e-16);
        let rate = d * &w;
        assert!((rate[0] + w[0] * w[2]).abs() < 1e-16);
        assert!((rate[2] - (w[0] * w[0] + w[1] * w[1])).abs() < 1e-16);
    }

    #[test]
    fn fixed_points_stay_fixed() {
        let m = single_spin_model();
        let w = RVec::from_vec(vec![0.0, 0.0, 0.4]);
        let traj = integrate_macro(&m, &w, 3.0, 1e-2).unwrap();
        assert_eq!(traj.last(), &w);
        let setup = twochain_meanfield_model(1.0, 1.0, 0.4).unwrap();
        let traj = integrate_macro(&setup.model, &setup.omega0, 3.0, 1e-2).unwrap();
        assert!((traj.last() - &setup.omega0).amax() < 1e-15);
    }

    #[test]
    fn emergent_hamiltonian_of_the_spin_model() {
        let m = single_spin_model();
        let w = RVec::from_vec(vec![0.3, -0.1, 0.2]);
        let h = emergent_hamiltonian(&m, &w, 1).unwrap();
        let [s1, s2, _] = spin_half();
        let expected = s1 * c(w[1], 0.0) - s2 * c(w[0], 0.0);
        assert!(crate::linalg::cmax_abs(&(h - expected)) < 1e-16);
        let h3 = emergent_hamiltonian(&m, &w, 3).unwrap();
        assert!(hermiticity_defect(&h3) < 1e-14);
        assert_eq!(h3.nrows(), 8);
        assert_eq!(
            emergent_hamiltonian(&m, &RVec::zeros(3), 2).unwrap(),
            CMat::zeros(4, 4)
        );
        assert!(emergent_hamiltonian(&m, &w, 5).is_err());
    }

    #[test]
    fn rotation_matches_conjugation_by_u() {
        let (w1, w2, g) = (0.2, -0.3, 0.7);
        let [s1, s2, s3] = spin_half();
        let gen = (s2.clone() * c(w1, 0.0) - s1.clone() * c(w2, 0.0)) * c(-g, 0.0);
        let u = crate::linalg::expm_i_hermitian(&gen);
        let s = [s1, s2, s3];
        let oracle = RMat::from_fn(3, 3, |i, j| {
            2.0 * trace(&(&s[j] * u.adjoint() * &s[i] * &u)).re
        });
        assert!(max_abs(&(rotation_matrix(w1, w2, g) - oracle)) < 1e-14);
    }

    #[test]
    fn degenerate_axis_returns_identity() {
        let r = emergent_unitary_spin(&RVec::from_vec(vec![0.0, 0.0, 0.3]), 1.0, 1e-2).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.matrix, RMat::identity(3, 3));
        let r0 = emergent_unitary_spin(&RVec::from_vec(vec![0.1, 0.0, 0.3]), 0.0, 1e-2).unwrap();
        assert_eq!(r0.matrix, RMat::identity(3, 3));
    }

    #[test]
    fn twochain_parameter_checks() {
        assert!(twochain_meanfield_model(0.2, 0.5, 0.5).is_err());
        assert!(twochain_meanfield_model(1.0, 1.0, 0.0).is_err());
        assert!(
            twochain_meanfield_model(1.0, 1.0, 1.0)
                .unwrap()
                .warnings
                .len()
                == 1
        );
        assert!(twochain_meanfield_model(1.0, 1.0, 0.5)
            .unwrap()
            .warnings
            .is_empty());
    }

    #[test]
    fn asymptotic_negativity_values() {
        assert!((asymptotic_negativity(1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let e = asymptotic_negativity(0.3, 0.5, 0.5).unwrap();
        assert!((e + 0.6_f64.log2()).abs() < 1e-15);
        assert_eq!(asymptotic_negativity(1.0, 0.1, 0.1).unwrap(), 0.0);
        assert!(asymptotic_negativity(0.1, 0.5, 1.0).is_err());
    }

    #[test]
    fn initial_twochain_state_is_a_product() {
        let setup = twochain_meanfield_model(1.0, 1.0, 0.4).unwrap();
        let part = crate::gaussian::ModePartition::new(
            setup.initial.space(),
            &[
                (0, 1, crate::gaussian::Side::A),
                (2, 3, crate::gaussian::Side::B),
            ],
        )
        .unwrap();
        assert_eq!(
            crate::gaussian::log_negativity(&setup.initial, &part).unwrap(),
            0.0
        );
    }

    #[test]
    fn nan_aborts_integration() {
        let m = single_spin_model();
        let err =
            integrate_macro(&m, &RVec::from_vec(vec![f64::NAN, 0.0, 0.0]), 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert!(integrate_macro(&m, &RVec::zeros(3), 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        let m = single_spin_model();
        let traj = integrate_macro(&m, &RVec::from_vec(vec![0.1, 0.2, 0.0]), 0.2, 0.1).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,omega_1,omega_2,omega_3");
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        let parsed: f64 = row[1].parse().unwrap();
        assert_eq!(parsed, traj.omegas[1][0]);
        assert_eq!(
            row[1]
                .split('e')
                .next()
                .unwrap()
                .replace(['-', '.'], "")
                .len(),
            17
        );
    }

    proptest! {
        #[test]
        fn drift_is_antisymmetric(w in proptest::collection::vec(-0.5..0.5_f64, 6)) {
            let setup = twochain_meanfield_model(0.8, 0.6, 0.3).unwrap();
            let d = drift_matrix(&setup.model, &RVec::from_vec(w.clone()));
            prop_assert!(antisymmetry_defect(&d) < 1e-14);
            let d3 = drift_matrix(&single_spin_model(), &RVec::from_vec(w[..3].to_vec()));
            prop_assert!(antisymmetry_defect(&d3) < 1e-14);
        }
    }
}
