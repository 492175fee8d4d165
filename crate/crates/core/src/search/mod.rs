//! Exact ordered search in about `log₃ N` queries.
//!
//! A level with `n` leaves runs on a fairly and tightly covered tree with
//! `2^s` colors:
//!
//! 1. put the color register in uniform superposition;
//! 2. for every color `c` at once, search recursively among the vertices
//!    `V_c` for the one on the path to the answer (all colors share one
//!    padded subinstance size, so one physical query serves every branch);
//! 3. uncolor with `U₁⁻¹`, leaving a superposition over the path;
//! 4. apply `O′ₓ` (one query) and `U₂`, which lands on the answer leaf.
//!
//! Levels with at most [`BASE_MAX`] leaves fall back to bisection with
//! `⌈log₂ n⌉` queries.

mod ops;
mod plan;

pub use ops::{
    answer_state, oracle_prime_apply, oracle_prime_op, path_superposition, phi, phi_state,
    query_leaf, tree_label, u1_apply, u1_inverse_apply, u2_apply, u2_op,
};
pub use plan::{
    BaseLevel, QueryCount, Record, SearchOutcome, SearchPlan, Snapshot, Step, TreeLevel,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::OrderedOracle;
use crate::pebble::{n_prime, PebbledTree};

/// Instance sizes at or below this are solved by bisection.
pub const BASE_MAX: usize = 8;

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    assert!(n >= 1);
    usize::BITS - (n - 1).leading_zeros()
}

/// Size of every color's subinstance below a level of size `n`: `N′ + 1`,
/// rounded up to even when another covered level follows.
pub fn recursion_size(n: usize) -> usize {
    let m = n_prime(n) + 1;
    if m > BASE_MAX {
        m + m % 2
    } else {
        m
    }
}

/// The idealised recursion `F̃(n) = F̃(⌊n/3 + log₂ n + 1⌋) + 1`, with
/// `F̃(n) = 1` for `n ≤ 8`.
pub fn f_tilde(n: usize) -> u32 {
    let mut n = n;
    let mut depth = 1;
    while n > BASE_MAX {
        n = n_prime(n) + 1;
        depth += 1;
    }
    depth
}

/// Queries spent by the implemented algorithm on inputs of length `n`:
/// one per covered level plus `⌈log₂ n_base⌉` for bisection.
pub fn implemented_queries(n: usize) -> usize {
    assert!(n >= 1);
    let mut size = if n <= BASE_MAX { n } else { n + n % 2 };
    let mut levels = 0;
    while size > BASE_MAX {
        size = recursion_size(size);
        levels += 1;
    }
    levels + ceil_log2(size) as usize
}

/// `⌈log₃ n⌉` for `n ≥ 1`.
pub fn ceil_log3(n: u64) -> u32 {
    let mut k = 0;
    let mut p: u128 = 1;
    while p < u128::from(n) {
        p *= 3;
        k += 1;
    }
    k
}

/// The ordered string whose answer is the index of the band `V_c` that
/// contains the answer of `x`, padded with 1-bits to the subinstance size.
pub fn subinstance_oracle(
    pt: &PebbledTree,
    color: usize,
    x: &OrderedOracle,
) -> Result<OrderedOracle> {
    if x.len() != pt.tree().n_leaves() {
        return Err(Error::Oracle(format!(
            "oracle of length {} for a tree with {} leaves",
            x.len(),
            pt.tree().n_leaves()
        )));
    }
    let size = recursion_size(x.len());
    let band = pt.vertex_set(color);
    let bits: Vec<bool> = (0..size)
        .map(|j| {
            band.get(j)
                .is_none_or(|&v| x.bit(pt.tree().leaf_range(v).1))
        })
        .collect();
    OrderedOracle::from_bits(&bits)
}

/// Runs the search on `x` with a freshly built plan.
pub fn run_search(x: &OrderedOracle, record: Record) -> Result<SearchOutcome> {
    SearchPlan::new(x.len())?.run(x, record)
}

/// One JSON line of a run trace.
#[derive(Debug, Serialize)]
pub struct TraceLine<'a> {
    pub v: u32,
    pub step: usize,
    pub op: &'a str,
    pub queries: usize,
    pub covering: Option<&'a str>,
    pub state: crate::sim::StateDoc,
}

/// Writes one JSON line per recorded step.
pub fn write_trace(
    plan: &SearchPlan,
    outcome: &SearchOutcome,
    mut out: impl std::io::Write,
) -> Result<()> {
    let hash = plan.covering_hash();
    for snap in &outcome.snapshots {
        let line = TraceLine {
            v: 1,
            step: snap.step,
            op: &snap.op,
            queries: snap.queries,
            covering: hash.as_deref(),
            state: snap.state.to_doc(),
        };
        serde_json::to_writer(&mut out, &line)?;
        writeln!(out)?;
    }
    Ok(())
}
