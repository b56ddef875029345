//! Higher-order topological states of modulated hopping lattices.
//!
//! A d-dimensional lattice (d ≤ 3) whose couplings along each axis are an
//! off-diagonal Aubry-André-Harper chain has the Kronecker-sum Hamiltonian
//! `H = Σ_s I ⊗ … ⊗ H_s ⊗ … ⊗ I`. Its eigenstates are tensor products of
//! chain eigenstates, so corner, hinge and surface states are products of
//! 1D edge and extended states.
//!
//! * [`lattice`]: modulation parameters, hopping matrices, Kronecker operators
//! * [`spectral`]: eigensolver, edge classification, DOS, φ sweeps
//! * [`topology`]: abelian and non-Abelian (vector) Chern numbers
//! * [`assembly`]: product states and their verification
//! * [`dynamics`]: propagation and the localization metric ξ

pub mod assembly;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use grid::StateGrid;
pub use lattice::{kron_sum, AxisModulation, Boundary, Frequency, HoppingMatrix, KroneckerOperator, LatticeSpec};
