//! Binary insertion sort as a query algorithm over the comparison oracle,
//! optionally followed by equality checks of sorted neighbours (element
//! distinctness).
//!
//! Labels are `[strategy, history, bit, i, i']`. The strategy register holds
//! `1 + r`, where `r` is the element inserted first (the run starts in a
//! uniform superposition over all `r`); the history holds the comparison
//! outcomes so far behind a leading 1. Inputs that finish early idle on the
//! pair `(0, 0)`, whose comparison never flips a phase.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::{comparison_oracle, ComparisonMatrix};
use crate::sim::{BasisLabel, LinearOp, PureState, Schema};

const STRATEGY: usize = 0;
const HISTORY: usize = 1;
const BIT: usize = 2;
const LEFT: usize = 3;
const RIGHT: usize = 4;

/// What the classical program does after a given outcome history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Next {
    Compare(usize, usize),
    Done { order: Vec<usize>, distinct: bool },
}

/// Replays the program for first element `r` on the recorded outcomes,
/// where an outcome is `[a < b]` for the pair `(a, b)` asked.
pub fn replay(n: usize, r: usize, outcomes: &[bool], check_neighbours: bool) -> Next {
    let mut it = outcomes.iter().copied();
    let mut order = vec![r % n];
    for k in 1..n {
        let e = (r + k) % n;
        let (mut lo, mut hi) = (0, order.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            let Some(less) = it.next() else {
                return Next::Compare(e, order[mid]);
            };
            if less {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        order.insert(lo, e);
    }
    let mut distinct = true;
    if check_neighbours {
        for k in 0..n - 1 {
            let Some(less) = it.next() else {
                return Next::Compare(order[k], order[k + 1]);
            };
            distinct &= less;
        }
    }
    Next::Done { order, distinct }
}

fn outcomes(history: u32) -> Vec<bool> {
    let len = 31 - history.leading_zeros();
    (0..len).rev().map(|b| history >> b & 1 == 1).collect()
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The compiled comparison algorithm for one input size.
#[derive(Clone, Debug)]
pub struct InsertionSorter {
    n: usize,
    check_neighbours: bool,
    queries: usize,
    start: LinearOp,
    prep: LinearOp,
    post: LinearOp,
}

impl InsertionSorter {
    pub fn new(n: usize, check_neighbours: bool) -> Result<Self> {
        if !(2..=12).contains(&n) {
            return Err(Error::Range(format!(
                "comparison algorithms need 2 ≤ n ≤ 12, got {n}"
            )));
        }
        let sort: usize = (1..n)
            .map(|k| (usize::BITS - k.leading_zeros()) as usize)
            .sum();
        let queries = sort + if check_neighbours { n - 1 } else { 0 };
        let next = move |l: &BasisLabel| {
            let r = (l.reg(STRATEGY) as usize)
                .checked_sub(1)
                .filter(|&r| r < n)?;
            (l.reg(HISTORY) >= 1).then(|| replay(n, r, &outcomes(l.reg(HISTORY)), check_neighbours))
        };
        let amp = 1.0 / (n as f64).sqrt();
        let start = LinearOp::new(
            "strategies",
            |l| l.regs() == [0, 1, 0, 0, 0],
            move |l| {
                (0..n)
                    .map(|r| (l.with(STRATEGY, r as u32 + 1), re(amp)))
                    .collect()
            },
        );
        let prep = LinearOp::new(
            "compare-prep",
            move |l| l.reg(BIT) == 0 && l.reg(LEFT) == 0 && l.reg(RIGHT) == 0 && next(l).is_some(),
            move |l| match next(l).expect("domain") {
                Next::Compare(i, j) => vec![
                    (l.with(BIT, 1), re(FRAC_1_SQRT_2)),
                    (
                        l.with_all(&[(BIT, 2), (LEFT, i as u32), (RIGHT, j as u32)]),
                        re(FRAC_1_SQRT_2),
                    ),
                ],
                Next::Done { .. } => vec![(l.clone(), re(1.0))],
            },
        );
        let post = LinearOp::new(
            "compare-post",
            move |l| match (next(l), l.reg(BIT)) {
                (Some(Next::Compare(..)), 1) => l.reg(LEFT) == 0 && l.reg(RIGHT) == 0,
                (Some(Next::Compare(i, j)), 2) => {
                    l.reg(LEFT) == i as u32 && l.reg(RIGHT) == j as u32
                }
                (Some(Next::Done { .. }), 0) => l.reg(LEFT) == 0 && l.reg(RIGHT) == 0,
                _ => false,
            },
            move |l| {
                if l.reg(BIT) == 0 {
                    return vec![(l.clone(), re(1.0))];
                }
                let h = l.reg(HISTORY);
                let base = l.with_all(&[(BIT, 0), (LEFT, 0), (RIGHT, 0)]);
                let sign = if l.reg(BIT) == 1 { 1.0 } else { -1.0 };
                vec![
                    (base.with(HISTORY, 2 * h), re(FRAC_1_SQRT_2)),
                    (base.with(HISTORY, 2 * h + 1), re(sign * FRAC_1_SQRT_2)),
                ]
            },
        );
        Ok(Self {
            n,
            check_neighbours,
            queries,
            start,
            prep,
            post,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of comparisons every run spends, idle ones included.
    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn initial_state(&self) -> PureState {
        PureState::basis(BasisLabel::trusted(Schema::Comparison, vec![0, 1, 0, 0, 0]))
    }

    /// States just before each comparison, and the final state.
    pub fn run(&self, m: &ComparisonMatrix) -> Result<(Vec<PureState>, PureState)> {
        if m.len() != self.n {
            return Err(Error::Permutation(format!(
                "comparison matrix of size {} for an algorithm of size {}",
                m.len(),
                self.n
            )));
        }
        let oracle = comparison_oracle(m);
        let mut state = self.start.apply(&self.initial_state())?;
        let mut before = Vec::with_capacity(self.queries);
        for _ in 0..self.queries {
            state = self.prep.apply(&state)?;
            before.push(state.clone());
            state = oracle.apply(&state)?;
            state = self.post.apply(&state)?;
        }
        Ok((before, state))
    }

    /// Outcome of every final label: the sorted order and the neighbour
    /// check, with its probability.
    pub fn decode(&self, final_state: &PureState) -> Result<Vec<(Vec<usize>, bool, f64)>> {
        final_state
            .terms()
            .map(|(l, a)| {
                let r = l.reg(STRATEGY) as usize - 1;
                match replay(self.n, r, &outcomes(l.reg(HISTORY)), self.check_neighbours) {
                    Next::Done { order, distinct } => Ok((order, distinct, a.norm_sqr())),
                    Next::Compare(..) => Err(Error::Exactness {
                        expected: 0,
                        probability: 0.0,
                    }),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{AnnotatedPermutation, Permutation};

    #[test]
    fn sorts_every_permutation() {
        for n in 2..=4 {
            let algo = InsertionSorter::new(n, false).unwrap();
            for sigma in Permutation::all(n) {
                let (_, fin) = algo.run(&sigma.comparison_matrix()).unwrap();
                let mut total = 0.0;
                for (order, _, p) in algo.decode(&fin).unwrap() {
                    for (rank, &e) in order.iter().enumerate() {
                        assert_eq!(sigma.apply(e), rank);
                    }
                    total += p;
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detects_ties() {
        for n in 2..=4 {
            let algo = InsertionSorter::new(n, true).unwrap();
            for sigma in Permutation::all(n) {
                let (_, fin) = algo.run(&sigma.comparison_matrix()).unwrap();
                assert!(algo.decode(&fin).unwrap().iter().all(|(_, d, _)| *d));
            }
            for tau in AnnotatedPermutation::all(n) {
                let (_, fin) = algo.run(&tau.comparison_matrix()).unwrap();
                assert!(algo.decode(&fin).unwrap().iter().all(|(_, d, _)| !*d));
            }
        }
    }

    #[test]
    fn history_bits() {
        assert_eq!(outcomes(1), Vec::<bool>::new());
        assert_eq!(outcomes(0b110), vec![true, false]);
    }
}
