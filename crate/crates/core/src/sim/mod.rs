//! Sparse state vectors in the oracle model.
//!
//! A state is a finite map from basis labels to complex amplitudes. Labels
//! are tuples of non-negative registers whose meaning is fixed by a
//! [`Schema`]. Operators are label-rewrite rules ([`LinearOp`]) and every
//! application is checked against the norm it should preserve.

mod op;
mod state;

pub use op::{apply_op, LinearOp};
pub use state::{
    inner_product, make_basis_state, measure_register, project_comparison_pair,
    project_query_index, BasisLabel, MeasurementResult, PureState, Schema, StateDoc, TermDoc,
};

pub use num_complex::Complex64;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_EPS: f64 = 1e-15;

/// Tolerance for user-visible checks (norms, probabilities, bounds).
pub const CHECK_TOL: f64 = 1e-9;

/// Tolerance for internal algebraic identities (Gram matrices, involutions).
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Query register value meaning "no oracle bit is addressed".
///
/// Any index at or beyond the oracle length leaves the phase untouched, so
/// the maximal register value is a universal idle query.
pub const IDLE_QUERY: u32 = u32::MAX;
