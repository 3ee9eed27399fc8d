//! Dense small-matrix helpers shared by every module.
//!
//! All model matrices in this crate are tiny (n <= 16), so everything is a
//! heap `DMatrix` and no attempt is made at blocking or reuse of buffers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;

/// Tolerance on `Sigma - Sigma^T`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Lower bound accepted for the minimum eigenvalue of a PSD matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Two eigenvalues closer than this are treated as one.
pub const DEDUP_TOL: f64 = 1e-9;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(a: &RMat) -> RMat {
    a.exp()
}

pub fn complexify(a: &RMat) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(a: &CMat) -> RMat {
    a.map(|z| z.re)
}

pub fn imag_part(a: &CMat) -> RMat {
    a.map(|z| z.im)
}

/// `re + i*im` for two real matrices of the same shape.
pub fn combine(re: &RMat, im: &RMat) -> CMat {
    re.zip_map(im, Complex64::new)
}

pub fn kron(a: &RMat, b: &RMat) -> RMat {
    a.kronecker(b)
}

pub fn ckron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn cmax_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Largest |m_ij - m_ji|.
pub fn asymmetry(m: &RMat) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Largest |m_ij + m_ji|.
pub fn antisymmetry_defect(m: &RMat) -> f64 {
    max_abs(&(m + m.transpose()))
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    cmax_abs(&(m - m.adjoint()))
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn antisymmetrize(m: &RMat) -> RMat {
    (m - m.transpose()) * 0.5
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part is used.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &RMat) -> Vec<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn sqrt_spd(m: &RMat) -> Result<RMat> {
    let eig = SymmetricEigen::new(symmetrize(m));
    if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if min <= 0.0 {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite (min eigenvalue {min:e})"
            )));
        }
    }
    let roots = eig.eigenvalues.map(f64::sqrt);
    let v = &eig.eigenvectors;
    Ok(v * RMat::from_diagonal(&roots) * v.transpose())
}

/// `exp(i * h)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_i_hermitian(h: &CMat) -> CMat {
    let eig = SymmetricEigen::new(hermitize(h));
    let phases = eig.eigenvalues.map(|l| Complex64::new(0.0, l).exp());
    let v = &eig.eigenvectors;
    v * CMat::from_diagonal(&phases) * v.adjoint()
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Block-diagonal `J (+) J (+) ...` with `J = [[0, 1], [-1, 0]]`.
pub fn standard_symplectic(modes: usize) -> RMat {
    let mut s = RMat::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

/// The 2x2 matrix `J = i*sigma_y = [[0, 1], [-1, 0]]`.
pub fn j2() -> RMat {
    standard_symplectic(1)
}

/// Pauli matrices `sigma_x, sigma_y, sigma_z`.
pub fn pauli() -> [CMat; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [
        CMat::from_row_slice(2, 2, &[z, one, one, z]),
        CMat::from_row_slice(2, 2, &[z, -I, I, z]),
        CMat::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Spin-1/2 operators `s_j = sigma_j / 2`.
pub fn spin_half() -> [CMat; 3] {
    pauli().map(|p| p * c(0.5, 0.0))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Row-major nested vectors, used by the JSON and CSV fixtures.
pub fn to_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<RMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Render a matrix as row-major CSV with shortest round-trip formatting.
pub fn matrix_to_csv(m: &RMat) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<RMat> {
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::param(format!("bad CSV entry {tok:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    from_rows(&rows)
}

/// Composite Simpson weights for `n` intervals (n even) of width `h`.
pub(crate) fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    debug_assert!(n % 2 == 0 && n > 0);
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}
