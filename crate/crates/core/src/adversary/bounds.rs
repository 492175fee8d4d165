use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::weights::{harmonic_f64, Problem};
use crate::error::{Error, Result};

/// `2√(ε(1−ε))` for `0 ≤ ε ≤ 1/2`.
pub fn eps_prime(eps: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::Range(format!(
            "error rate must lie in [0, 1/2], got {eps}"
        )));
    }
    Ok(2.0 * (eps * (1.0 - eps)).sqrt())
}

/// A query lower bound for one problem size and error rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub v: u32,
    pub problem: Problem,
    pub n: usize,
    pub eps: f64,
    pub bound: f64,
    pub formula: String,
}

/// Lower bounds on queries (search) or comparisons (sorting, element
/// distinctness) for algorithms erring with probability at most `eps`.
pub fn query_lower_bound(problem: Problem, n: usize, eps: f64) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::Range(format!("bounds need n ≥ 2, got {n}")));
    }
    let scale = 1.0 - eps_prime(eps)?;
    let h = harmonic_f64(n) - 1.0;
    let nf = n as f64;
    let (value, formula) = match problem {
        Problem::Search => (h / PI, "(1-eps')(H_N-1)/pi"),
        Problem::Sort => (nf * h / (2.0 * PI), "(1-eps')N(H_N-1)/(2pi)"),
        Problem::ElementDistinctness => {
            (nf.sqrt() * h / (2.0 * PI), "(1-eps')sqrt(N)(H_N-1)/(2pi)")
        }
    };
    Ok(BoundReport {
        v: 1,
        problem,
        n,
        eps,
        bound: (scale * value).max(0.0),
        formula: formula.into(),
    })
}
