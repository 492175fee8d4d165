//! Exact quantum ordered search on pebbled trees, simulated in the oracle
//! model, together with weighted-adversary lower-bound checks.
//!
//! * [`sim`]: sparse state vectors and label-rewrite operators.
//! * [`oracle`]: ordered bit strings, permutations and annotated permutations.
//! * [`pebble`]: full binary trees and fair, tight colored pebble coverings.
//! * [`search`]: the recursive `log₃ N` search algorithm and its query plan.
//! * [`adversary`]: weight schemes, progress traces, Hilbert-matrix norms and
//!   lower-bound formulas.

pub mod adversary;
pub mod error;
pub mod oracle;
pub mod pebble;
pub mod search;
pub mod sim;

pub use error::{Error, Result};
