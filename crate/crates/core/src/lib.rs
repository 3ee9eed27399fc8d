//! Mesoscopic dynamics of quantum fluctuations in open many-body systems.
//!
//! The crate is organised bottom-up: [`gaussian`] holds the covariance
//! calculus, [`semigroup`] the linear dissipative flows on it, [`chain`] the
//! concrete spin and oscillator models, and [`meanfield`] the nonlinear
//! mean-field branch where the fluctuation maps depend on the macroscopic state.

pub mod chain;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod meanfield;
pub mod semigroup;

pub use chain::{
    correlation_from_state, finite_n_char, gaussian_limit, meanfield_product_gap,
    oscillator_double_chain, single_chain_presets, spin_double_chain, ChainKind, ModeMap,
    ModelBundle, PresetKind, SiteAlgebra, SpinExponent,
};
pub use error::{Error, Result};
pub use gaussian::{
    char_function, log_negativity, log_negativity_with_spectrum, partial_transpose, reduce_modes,
    squeeze, symplectic_spectrum, validate_gaussian, weyl_product, CanonicalPair,
    CorrelationMatrix, GaussianState, ModePartition, ModeSpace, Side, Validity,
};
pub use meanfield::{
    asymptotic_negativity, drift_matrix, emergent_hamiltonian, emergent_unitary_spin,
    evolve_fluct_covariance, fluct_flow, fluct_noise, fluct_noise_quadrature, fluct_propagator,
    fluct_trajectory, integrate_macro, single_spin_model, twochain_meanfield_model,
    EmergentRotation, FluctSample, MeanFieldModel, StructureConstants, Trajectory, TwoChainSetup,
};
pub use semigroup::{CpReport, GeneratorMatrices, QuasiFreeModel, WeylImage};
