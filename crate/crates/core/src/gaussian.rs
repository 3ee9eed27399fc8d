//! Covariance-matrix calculus for Gaussian states of bosonic fields.
//!
//! A state is fixed by a real symmetric covariance `Sigma` together with the
//! antisymmetric commutator matrix `sigma` of the fields, `[F_mu, F_nu] =
//! i sigma_{mu nu}`. The vacuum of a standard pair has `Sigma = I/2`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    antisymmetry_defect, asymmetry, combine, hermiticity_defect, imag_part,
    min_hermitian_eigenvalue, real_part, sqrt_spd, symmetrize, CMat, RMat, RVec, I, PSD_TOL,
    SYMMETRY_TOL,
};

/// Field components together with their commutator matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpace {
    sigma: RMat,
}

impl ModeSpace {
    pub fn new(sigma: RMat) -> Result<Self> {
        let n = sigma.nrows();
        if n == 0 {
            return Err(Error::param("mode space needs at least one component"));
        }
        check_dim(n, sigma.ncols())?;
        let defect = antisymmetry_defect(&sigma);
        if defect > SYMMETRY_TOL {
            return Err(Error::InvalidState(format!(
                "symplectic matrix is not antisymmetric (defect {defect:e})"
            )));
        }
        // Store the exact antisymmetric part so downstream algebra sees sigma = -sigma^T.
        let sigma = (&sigma - sigma.transpose()) * 0.5;
        Ok(Self { sigma })
    }

    /// `modes` standard canonical pairs `(q_k, p_k)` with `[q, p] = i`.
    pub fn standard(modes: usize) -> Self {
        Self {
            sigma: crate::linalg::standard_symplectic(modes),
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &RMat {
        &self.sigma
    }

    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let idx = checked_indices(keep, self.dim())?;
        Ok(Self {
            sigma: submatrix(&self.sigma, &idx),
        })
    }

    /// Scalar `c` with `sigma[[q,p],[q,p]] = c * J`, if the two indices form a pair.
    pub fn pair_scale(&self, q: usize, p: usize) -> Option<f64> {
        let n = self.dim();
        if q >= n || p >= n || q == p {
            return None;
        }
        let c = self.sigma[(q, p)];
        (c.abs() > SYMMETRY_TOL).then_some(c)
    }
}

/// Outcome of the positivity test `Sigma + (i/2) sigma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    pub valid: bool,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    space: ModeSpace,
    covariance: RMat,
}

impl GaussianState {
    /// Checks shape and symmetry only: partial transposes are legitimate
    /// values of this type even when they are not physical states.
    pub fn new(space: ModeSpace, covariance: RMat) -> Result<Self> {
        check_dim(space.dim(), covariance.nrows())?;
        check_dim(space.dim(), covariance.ncols())?;
        let asym = asymmetry(&covariance);
        if asym > SYMMETRY_TOL * covariance.amax().max(1.0) {
            return Err(Error::InvalidState(format!(
                "covariance is not symmetric (defect {asym:e})"
            )));
        }
        Ok(Self {
            space,
            covariance: symmetrize(&covariance),
        })
    }

    /// Like [`GaussianState::new`] but also requires physical validity.
    pub fn new_valid(space: ModeSpace, covariance: RMat) -> Result<Self> {
        let state = Self::new(space, covariance)?;
        let v = validate_gaussian(&state);
        if !v.valid {
            return Err(Error::InvalidState(format!(
                "Sigma + (i/2) sigma has negative eigenvalue {:e}",
                v.min_eigenvalue
            )));
        }
        Ok(state)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            space: ModeSpace::standard(modes),
            covariance: RMat::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn covariance(&self) -> &RMat {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn with_covariance(&self, covariance: RMat) -> Result<Self> {
        Self::new(self.space.clone(), covariance)
    }

    pub fn correlation(&self) -> CorrelationMatrix {
        CorrelationMatrix::from_parts(&self.covariance, self.space.sigma())
    }
}

/// `C = Sigma + (i/2) sigma`, the two-point function `omega(F_mu F_nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    c: CMat,
}

impl CorrelationMatrix {
    pub fn new(c: CMat) -> Result<Self> {
        check_dim(c.nrows(), c.ncols())?;
        let defect = hermiticity_defect(&c);
        if defect > SYMMETRY_TOL * c.iter().fold(1.0_f64, |m, z| m.max(z.norm())) {
            return Err(Error::InvalidState(format!(
                "correlation matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(Self { c })
    }

    pub fn from_parts(covariance: &RMat, sigma: &RMat) -> Self {
        Self {
            c: combine(covariance, &(sigma * 0.5)),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.c
    }

    pub fn covariance(&self) -> RMat {
        real_part(&self.c)
    }

    pub fn sigma(&self) -> RMat {
        imag_part(&self.c) * 2.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.c)
    }

    pub fn to_state(&self) -> Result<GaussianState> {
        GaussianState::new(ModeSpace::new(self.sigma())?, self.covariance())
    }
}

pub fn validate_gaussian(state: &GaussianState) -> Validity {
    let min_eigenvalue = state.correlation().min_eigenvalue();
    Validity {
        valid: min_eigenvalue >= -PSD_TOL,
        min_eigenvalue,
    }
}

/// Validity of a raw `(Sigma, sigma)` pair, reporting shape errors.
pub fn validate_parts(covariance: &RMat, sigma: &RMat) -> Result<Validity> {
    let state = GaussianState::new(ModeSpace::new(sigma.clone())?, covariance.clone())?;
    Ok(validate_gaussian(&state))
}

/// `W(r1) W(r2) = exp(i * phase) W(r1 + r2)`.
pub fn weyl_product(r1: &RVec, r2: &RVec, space: &ModeSpace) -> Result<(RVec, f64)> {
    check_dim(space.dim(), r1.len())?;
    check_dim(space.dim(), r2.len())?;
    let phase = -0.5 * r1.dot(&(space.sigma() * r2));
    Ok((r1 + r2, phase))
}

/// `omega(W(r)) = exp(-r.Sigma.r / 2)`.
pub fn char_function(state: &GaussianState, r: &RVec) -> Result<f64> {
    check_dim(state.dim(), r.len())?;
    Ok((-0.5 * r.dot(&(state.covariance() * r))).exp())
}

pub fn reduce_modes(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    let idx = checked_indices(keep, state.dim())?;
    Ok(GaussianState {
        space: ModeSpace {
            sigma: submatrix(state.space.sigma(), &idx),
        },
        covariance: submatrix(state.covariance(), &idx),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPair {
    pub q: usize,
    pub p: usize,
    pub side: Side,
    /// `c` with `[F_q, F_p] = i c`.
    pub scale: f64,
}

/// Canonical pairs covering every component, each assigned to side A or B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePartition {
    pairs: Vec<CanonicalPair>,
}

impl ModePartition {
    pub fn new(space: &ModeSpace, pairs: &[(usize, usize, Side)]) -> Result<Self> {
        let n = space.dim();
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(pairs.len());
        for &(q, p, side) in pairs {
            for k in [q, p] {
                if k >= n {
                    return Err(Error::Partition(format!("index {k} out of range 0..{n}")));
                }
                if std::mem::replace(&mut seen[k], true) {
                    return Err(Error::Partition(format!("index {k} used twice")));
                }
            }
            let scale = space.pair_scale(q, p).ok_or_else(|| {
                Error::Partition(format!("components ({q}, {p}) do not commute canonically"))
            })?;
            out.push(CanonicalPair { q, p, side, scale });
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Partition(format!("index {k} is not covered")));
        }
        // Each pair must be decoupled from all others.
        let sigma = space.sigma();
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                for x in [a.q, a.p] {
                    for y in [b.q, b.p] {
                        if sigma[(x, y)].abs() > SYMMETRY_TOL {
                            return Err(Error::Partition(format!(
                                "pairs ({}, {}) and ({}, {}) do not commute",
                                a.q, a.p, b.q, b.p
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { pairs: out })
    }

    /// Consecutive pairs `(0,1), (2,3), ...`, the first `modes_a` on side A.
    pub fn split(space: &ModeSpace, modes_a: usize) -> Result<Self> {
        let n = space.dim();
        if n % 2 != 0 {
            return Err(Error::Partition(format!("odd number of components {n}")));
        }
        let pairs: Vec<_> = (0..n / 2)
            .map(|k| {
                (
                    2 * k,
                    2 * k + 1,
                    if k < modes_a { Side::A } else { Side::B },
                )
            })
            .collect();
        Self::new(space, &pairs)
    }

    pub fn pairs(&self) -> &[CanonicalPair] {
        &self.pairs
    }

    fn check_against(&self, space: &ModeSpace) -> Result<()> {
        let fresh: Vec<_> = self.pairs.iter().map(|p| (p.q, p.p, p.side)).collect();
        let rebuilt = Self::new(space, &fresh)?;
        if rebuilt != *self {
            return Err(Error::Partition(
                "partition was built for a different mode space".into(),
            ));
        }
        Ok(())
    }
}

/// Flips the momentum components of side B.
pub fn partial_transpose(
    state: &GaussianState,
    partition: &ModePartition,
) -> Result<GaussianState> {
    partition.check_against(state.space())?;
    let mut cov = state.covariance.clone();
    for pair in partition.pairs().iter().filter(|p| p.side == Side::B) {
        cov.row_mut(pair.p).neg_mut();
        cov.column_mut(pair.p).neg_mut();
    }
    Ok(GaussianState {
        space: state.space.clone(),
        covariance: cov,
    })
}

/// Symplectic eigenvalues, ascending, in the normalization where a standard
/// vacuum pair gives 1/2.
///
/// Computed as the positive eigenvalues of the Hermitian matrix
/// `i Sigma^{1/2} sigma^{-1} Sigma^{1/2}`, which is similar to `i sigma^{-1} Sigma`
/// and absorbs the per-pair scale of `sigma`.
pub fn symplectic_spectrum(state: &GaussianState) -> Result<Vec<f64>> {
    let n = state.dim();
    if n % 2 != 0 {
        return Err(Error::DegenerateSymplectic(format!(
            "odd number of components {n}"
        )));
    }
    let sigma = state.space().sigma();
    if let Some(row) = (0..n).find(|&i| sigma.row(i).amax() <= SYMMETRY_TOL) {
        return Err(Error::DegenerateSymplectic(format!(
            "component {row} commutes with every other field; drop it before computing spectra"
        )));
    }
    let sigma_inv = sigma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSymplectic("commutator matrix is singular".into()))?;
    let root = sqrt_spd(state.covariance()).map_err(|_| {
        Error::InvalidState("covariance must be positive definite for a symplectic spectrum".into())
    })?;
    let k = &root * sigma_inv * &root;
    let h = k.map(|x| I * x);
    let vals = crate::linalg::hermitian_eigenvalues(&h);
    Ok(vals[n / 2..].to_vec())
}

/// Logarithmic negativity summed over every `2 nu < 1` of the partial transpose.
pub fn log_negativity(state: &GaussianState, partition: &ModePartition) -> Result<f64> {
    log_negativity_with_spectrum(state, partition).map(|(e, _)| e)
}

pub fn log_negativity_with_spectrum(
    state: &GaussianState,
    partition: &ModePartition,
) -> Result<(f64, Vec<f64>)> {
    let pt = partial_transpose(state, partition)?;
    let spectrum = symplectic_spectrum(&pt)?;
    Ok((negativity_from_spectrum(&spectrum), spectrum))
}

pub fn negativity_from_spectrum(spectrum: &[f64]) -> f64 {
    let e: f64 = spectrum
        .iter()
        .filter(|&&nu| 2.0 * nu < 1.0)
        .map(|&nu| -(2.0 * nu).log2())
        .sum();
    e.max(0.0)
}

/// Squeezes each listed `(q, p)` pair by `diag(e^{-r}, e^{r})`.
pub fn squeeze(state: &GaussianState, pairs: &[(usize, usize)], r: f64) -> Result<GaussianState> {
    let n = state.dim();
    let mut s = RMat::identity(n, n);
    for &(q, p) in pairs {
        if state.space().pair_scale(q, p).is_none() {
            return Err(Error::Partition(format!(
                "({q}, {p}) is not a canonical pair"
            )));
        }
        s[(q, q)] = (-r).exp();
        s[(p, p)] = r.exp();
    }
    state.with_covariance(&s * state.covariance() * s.transpose())
}

fn checked_indices(keep: &[usize], n: usize) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::param("cannot reduce to an empty set of components"));
    }
    let mut seen = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::param(format!("component {k} out of range 0..{n}")));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::param(format!("component {k} listed twice")));
        }
    }
    Ok(keep.to_vec())
}

fn submatrix(m: &RMat, idx: &[usize]) -> RMat {
    RMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}
