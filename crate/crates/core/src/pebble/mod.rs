//! Full binary trees and colored pebble coverings.
//!
//! A covering with `2^s` colors puts sets of colored pebbles on internal
//! vertices so that
//!
//! * (A) every root-leaf path carries exactly one pebble of each color, and
//! * (B) every vertex carries at least as many pebbles as all of its proper
//!   ancestors together.
//!
//! It is *fair* when all colors are used equally often and *tight* when each
//! vertex carries exactly as many pebbles as its ancestors, unless none of
//! them carries any.

mod brute;
mod covering;
mod tree;

pub use brute::{brute_force_min_pebbles, BRUTE_FORCE_CAP};
pub use covering::{
    build_covered_tree, build_tree, construct_covering, covering_params, n_prime, n_prime_plus_one,
    s_param, validate_covering, CertNode, Certificate, CoveringParams, CoveringReport, PebbledTree,
};
pub use tree::{FullBinaryTree, Node, Shape};

/// Vertices holding `color`, left to right.
pub fn vertex_set(pt: &PebbledTree, color: usize) -> Vec<usize> {
    pt.vertex_set(color)
}

/// The vertex holding `color` on the path to the answer of `x`.
pub fn locate_vc(
    pt: &PebbledTree,
    color: usize,
    x: &crate::oracle::OrderedOracle,
) -> crate::Result<usize> {
    pt.locate_vc(color, x)
}

/// Internal vertices from the root to the parent of leaf `leaf`.
pub fn path_to_leaf(tree: &FullBinaryTree, leaf: usize) -> Vec<usize> {
    tree.path_to_leaf(leaf)
}
