use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{
    all_inputs, f_of, find_kd, sigma_kd, AnnotatedPermutation, OrderedOracle, Permutation,
};

/// Largest size for which permutation ensembles are enumerated.
pub const MAX_PERMUTATION_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Search,
    Sort,
    #[serde(rename = "ed")]
    ElementDistinctness,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Search => "search",
            Problem::Sort => "sort",
            Problem::ElementDistinctness => "ed",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "search" => Ok(Problem::Search),
            "sort" => Ok(Problem::Sort),
            "ed" | "element-distinctness" => Ok(Problem::ElementDistinctness),
            other => Err(Error::Range(format!(
                "unknown problem `{other}` (expected search, sort or ed)"
            ))),
        }
    }
}

/// One member of an input ensemble.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Input {
    Ordered(OrderedOracle),
    Perm(Permutation),
    Annotated(AnnotatedPermutation),
}

fn unit_fraction(d: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(d))
}

/// `1/(f(y) - f(x))` when `f(x) < f(y)`, else 0.
pub fn weight_search(x: &OrderedOracle, y: &OrderedOracle) -> BigRational {
    if x.len() == y.len() && f_of(x) < f_of(y) {
        unit_fraction(f_of(y) - f_of(x))
    } else {
        BigRational::zero()
    }
}

/// `1/d` when `τ = σ^(k,d)`, else 0.
pub fn weight_sort(sigma: &Permutation, tau: &Permutation) -> BigRational {
    match find_kd(sigma, tau) {
        Some((_, d)) => unit_fraction(d),
        None => BigRational::zero(),
    }
}

/// `1/d` when `τ` is `σ^(k,d)` with rank `k` marked, else 0.
pub fn weight_ed(sigma: &Permutation, tau: &AnnotatedPermutation) -> BigRational {
    match find_kd(sigma, tau.perm()) {
        Some((k, d)) if tau.marker() == k => unit_fraction(d),
        _ => BigRational::zero(),
    }
}

/// `H_n = Σ_{k=1}^n 1/k`, exactly.
pub fn harmonic(n: usize) -> Result<BigRational> {
    if n < 1 {
        return Err(Error::Range("harmonic numbers start at n = 1".into()));
    }
    Ok((1..=n)
        .map(unit_fraction)
        .fold(BigRational::zero(), |a, b| a + b))
}

/// `H_n` in floating point, summed from the small terms up.
pub fn harmonic_f64(n: usize) -> f64 {
    (1..=n).rev().map(|k| 1.0 / k as f64).sum()
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Closed-form total weight: `n·H_n − n` for search and
/// `n!·(n·H_n − n)` for sorting and element distinctness.
pub fn total_weight(problem: Problem, n: usize) -> Result<BigRational> {
    if n < 2 {
        return Err(Error::Range(format!("total weight needs n ≥ 2, got {n}")));
    }
    let nn = BigRational::from_integer(BigInt::from(n));
    let base = &nn * harmonic(n)? - &nn;
    Ok(match problem {
        Problem::Search => base,
        Problem::Sort | Problem::ElementDistinctness => {
            base * BigRational::from_integer(factorial(n))
        }
    })
}

/// An input ensemble with its nonzero pair weights.
#[derive(Clone, Debug)]
pub struct WeightScheme {
    problem: Problem,
    n: usize,
    inputs: Vec<Input>,
    /// `(x, y, ω(x, y))` over input indices, in a fixed order.
    pairs: Vec<(usize, usize, BigRational)>,
}

impl WeightScheme {
    pub fn new(problem: Problem, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Range(format!("weight schemes need n ≥ 2, got {n}")));
        }
        if problem != Problem::Search && n > MAX_PERMUTATION_SIZE {
            return Err(Error::Range(format!(
                "permutation ensembles are limited to n ≤ {MAX_PERMUTATION_SIZE}"
            )));
        }
        let (inputs, pairs) = match problem {
            Problem::Search => {
                let inputs: Vec<Input> = all_inputs(n).into_iter().map(Input::Ordered).collect();
                let mut pairs = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        pairs.push((a, b, unit_fraction(b - a)));
                    }
                }
                (inputs, pairs)
            }
            Problem::Sort | Problem::ElementDistinctness => {
                let perms = Permutation::all(n);
                let mut inputs: Vec<Input> = perms.iter().cloned().map(Input::Perm).collect();
                let annotated = problem == Problem::ElementDistinctness;
                if annotated {
                    inputs.extend(
                        AnnotatedPermutation::all(n)
                            .into_iter()
                            .map(Input::Annotated),
                    );
                }
                let index: HashMap<&Input, usize> =
                    inputs.iter().enumerate().map(|(i, x)| (x, i)).collect();
                let mut pairs = Vec::new();
                for (a, sigma) in perms.iter().enumerate() {
                    for k in 0..=n - 2 {
                        for d in 1..=n - 1 - k {
                            let tau = sigma_kd(sigma, k, d)?;
                            let key = if annotated {
                                Input::Annotated(crate::oracle::annotate(&tau, k)?)
                            } else {
                                Input::Perm(tau)
                            };
                            pairs.push((a, index[&key], unit_fraction(d)));
                        }
                    }
                }
                (inputs, pairs)
            }
        };
        Ok(Self {
            problem,
            n,
            inputs,
            pairs,
        })
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn inputs(&self) -> &[Input] {
        &self.inputs
    }

    pub fn pairs(&self) -> &[(usize, usize, BigRational)] {
        &self.pairs
    }

    /// `ω(a, b)` evaluated from its definition.
    pub fn weight(&self, a: &Input, b: &Input) -> BigRational {
        match (a, b) {
            (Input::Ordered(x), Input::Ordered(y)) if self.problem == Problem::Search => {
                weight_search(x, y)
            }
            (Input::Perm(s), Input::Perm(t)) if self.problem == Problem::Sort => weight_sort(s, t),
            (Input::Perm(s), Input::Annotated(t))
                if self.problem == Problem::ElementDistinctness =>
            {
                weight_ed(s, t)
            }
            _ => BigRational::zero(),
        }
    }

    /// Sum of all pair weights.
    pub fn total(&self) -> BigRational {
        self.pairs
            .iter()
            .fold(BigRational::zero(), |acc, (_, _, w)| acc + w)
    }
}
