//! Shared inputs for the benchmarks.

use fluctua_core::linalg::{standard_symplectic, RMat, RVec};
use fluctua_core::{GaussianState, ModeSpace};

/// A mixed state on `modes` modes with nontrivial correlations.
pub fn correlated_state(modes: usize) -> GaussianState {
    let n = 2 * modes;
    let h = RMat::from_fn(n, n, |i, j| 0.05 * ((i + 2 * j) % 5) as f64);
    let s = fluctua_core::linalg::expm(&(standard_symplectic(modes) * (&h + h.transpose())));
    let cov = &s * RMat::identity(n, n) * s.transpose();
    GaussianState::new(ModeSpace::standard(modes), (&cov + cov.transpose()) * 0.5)
        .expect("symplectic image of a thermal state")
}

pub fn spin_start() -> RVec {
    RVec::from_vec(vec![0.3, -0.2, 0.1])
}
