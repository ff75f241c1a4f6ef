//! Exact Fock-space representation of `N` spin-1 bosons in a single spatial
//! mode.
//!
//! This is the brute-force reference against which the truncated-Wigner
//! engine and the readout models are checked. Everything here is unitary:
//! atom loss is only modelled in [`crate::twa`].

mod basis;
mod evolve;
mod operator;
mod state;

pub use basis::{FockBasis, Occupation, MAX_ATOMS};
pub use evolve::{
    evolve_exact, expm_apply, rotate_exact, spinor_phase_exact, Propagator, DENSE_THRESHOLD,
};
pub use operator::{hamiltonian, one_body, operator_matrix, OperatorTag, SparseOperator};
pub use state::{moments_exact, qfi_diagonal, FockState};
