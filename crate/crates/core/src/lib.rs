//! Bounds of correlation Bell inequalities through unit-vector optimization.
//!
//! The value of `Σ_ij M_ij ⟨α_i β_j⟩` maximized over strategies whose
//! correlations are dot products of unit vectors in `R^d` gives the
//! classical bound at `d = 1`, the real and complex qubit bounds at
//! `d = 2, 3`, and the unrestricted quantum bound at `d = m_b`.
//!
//! - [`bell`]: matrices, the X/Y/Z families and exact classical bounds.
//! - [`vectors`] and [`optimize`]: the sum-of-norms objective and its
//!   multistart see-saw maximization.
//! - [`geometry`]: exact sum-of-distances values for the `Z_n` family.
//! - [`clifford`]: gamma-matrix realizations and vector extraction.
//! - [`report`]: table reproduction and custom runs used by the CLI.

pub mod bell;
pub mod clifford;
pub mod error;
pub mod geometry;
pub mod optimize;
pub mod report;
pub mod simplex;
pub mod vectors;

pub use bell::{
    build_xn, build_yn, build_zn, classical_bound, classical_value, family_lhv_bound, BellMatrix,
    DeterministicStrategy, Family,
};
pub use clifford::{
    extract_vectors, gamma_basis, joint_correlation, marginal, observable_from_vector,
    quantum_bell_value, realize_strategy, ComplexMatrix, QuantumRealization, Side,
};
pub use error::{Error, Result};
pub use geometry::{
    asymptotic_ratio, known_configuration, oracle_E, sum_of_distances, OracleValue,
};
pub use optimize::{optimize_bound, seesaw_step, BoundResult, OptimizerConfig};
pub use vectors::{derive_a_vectors, gradient, gram_matrix, objective, VectorStrategy};
