//! Weighted adversary lower bounds: input ensembles with pair weights, the
//! progress measure along a concrete run, the Hilbert-matrix spectral
//! quantities, and the closed-form bounds.

mod bounds;
mod progress;
mod sorting;
mod spectral;
mod weights;

pub use bounds::{eps_prime, query_lower_bound, BoundReport};
pub use progress::{
    comparison_trace, pair_weights, progress_trace, progress_w, query_weights, search_trace,
    step_delta_bound, step_delta_bound_pairs, ProgressTrace, MAX_TRACE_SIZE,
};
pub use sorting::{replay, InsertionSorter, Next};
pub use spectral::{
    b_matrix, hilbert_entry, hilbert_matrix, spectral_norm, spectral_norm_seeded, MatrixKind,
    SpectralMatrix, DEFAULT_SEED, MAX_ITERATIONS,
};
pub use weights::{
    harmonic, harmonic_f64, total_weight, weight_ed, weight_search, weight_sort, Input, Problem,
    WeightScheme, MAX_PERMUTATION_SIZE,
};
