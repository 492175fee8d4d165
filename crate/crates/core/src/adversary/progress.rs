//! The weighted progress measure `W_j = Σ ω(x, y)⟨ψ_x^j|ψ_y^j⟩` along a run
//! of an exact algorithm over a whole input ensemble.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::sorting::InsertionSorter;
use super::weights::{total_weight, Input, Problem, WeightScheme};
use crate::error::{Error, Result};
use crate::oracle::{f_of, OrderedOracle};
use crate::search::{Record, SearchPlan};
use crate::sim::{inner_product, PureState, CHECK_TOL};

/// Largest size whose sort and element distinctness traces are simulated.
pub const MAX_TRACE_SIZE: usize = 5;

/// `W = Σ ω(x, y)⟨ψ_x|ψ_y⟩` with one state per input of the scheme.
pub fn progress_w(scheme: &WeightScheme, states: &[PureState]) -> Result<Complex64> {
    if states.len() != scheme.inputs().len() {
        return Err(Error::IncompleteEnsemble {
            expected: scheme.inputs().len(),
            found: states.len(),
        });
    }
    scheme
        .pairs()
        .iter()
        .try_fold(Complex64::zero(), |acc, (a, b, w)| {
            let w = w.to_f64().expect("finite weight");
            Ok(acc + inner_product(&states[*a], &states[*b])? * w)
        })
}

/// Squared norm of the projection onto each query index.
pub fn query_weights(s: &PureState) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    for (l, a) in s.terms() {
        if let Some(i) = l.query_index() {
            *out.entry(i).or_insert(0.0) += a.norm_sqr();
        }
    }
    out
}

/// Squared norm of the projection onto each compared pair.
pub fn pair_weights(s: &PureState) -> BTreeMap<(u32, u32), f64> {
    let mut out = BTreeMap::new();
    for (l, a) in s.terms() {
        if let Some(p) = l.compared_pair() {
            *out.entry(p).or_insert(0.0) += a.norm_sqr();
        }
    }
    out
}

/// `2 Σ_i ‖P_i ψ_x‖·‖P_i ψ_y‖` over the query indices where the two
/// inputs differ: how far one query can move `⟨ψ_x|ψ_y⟩`.
pub fn step_delta_bound(
    sx: &PureState,
    sy: &PureState,
    differing: impl IntoIterator<Item = usize>,
) -> f64 {
    let (wx, wy) = (query_weights(sx), query_weights(sy));
    let get = |w: &BTreeMap<u32, f64>, i: usize| {
        u32::try_from(i)
            .ok()
            .and_then(|i| w.get(&i))
            .copied()
            .unwrap_or(0.0)
    };
    2.0 * differing
        .into_iter()
        .map(|i| (get(&wx, i) * get(&wy, i)).sqrt())
        .sum::<f64>()
}

/// The same bound with compared pairs in place of query indices.
pub fn step_delta_bound_pairs(
    sx: &PureState,
    sy: &PureState,
    differing: impl IntoIterator<Item = (usize, usize)>,
) -> f64 {
    let (wx, wy) = (pair_weights(sx), pair_weights(sy));
    let get = |w: &BTreeMap<(u32, u32), f64>, p: (u32, u32)| w.get(&p).copied().unwrap_or(0.0);
    2.0 * differing
        .into_iter()
        .flat_map(|(i, j)| [(i as u32, j as u32), (j as u32, i as u32)])
        .map(|p| (get(&wx, p) * get(&wy, p)).sqrt())
        .sum::<f64>()
}

/// Progress along one exact run over the whole ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct ProgressTrace {
    pub problem: Problem,
    pub n: usize,
    pub eps: f64,
    pub eps_prime: f64,
    pub queries: usize,
    /// `W_0, …, W_T`.
    pub w: Vec<f64>,
    /// Largest `|Im W_j|` seen.
    pub w_imag_max: f64,
    /// `|W_{j+1} − W_j|` for `j < T`.
    pub deltas: Vec<f64>,
    /// Bound on every delta: `πN`, `2π·n!` or `2π·n!·√n`.
    pub step_bound: f64,
    /// `W_0` summed exactly when all initial states coincide.
    #[serde(skip)]
    pub w0_exact: Option<BigRational>,
    #[serde(skip)]
    pub total_weight: BigRational,
    /// Largest amount by which a single pair's inner product moved beyond
    /// its per-pair bound in one query (non-positive when the bound holds).
    pub pair_bound_excess: f64,
}

impl ProgressTrace {
    fn build(
        scheme: &WeightScheme,
        runs: &[Vec<PureState>],
        step_bound: f64,
        pair_bound: impl Fn(usize, usize, &PureState, &PureState) -> f64 + Sync,
    ) -> Result<Self> {
        let queries = runs.first().map_or(0, |r| r.len() - 1);
        let mut w = Vec::with_capacity(queries + 1);
        let mut w_imag_max: f64 = 0.0;
        for j in 0..=queries {
            let states: Vec<PureState> = runs.iter().map(|r| r[j].clone()).collect();
            let wj = progress_w(scheme, &states)?;
            if wj.im.abs() > CHECK_TOL {
                return Err(Error::ComplexProgress {
                    step: j,
                    imag: wj.im,
                });
            }
            w_imag_max = w_imag_max.max(wj.im.abs());
            w.push(wj.re);
        }
        let deltas = w.windows(2).map(|p| (p[1] - p[0]).abs()).collect();

        let first = &runs[0][0];
        let w0_exact = runs.iter().all(|r| &r[0] == first).then(|| scheme.total());

        let pair_bound_excess = scheme
            .pairs()
            .par_iter()
            .map(|&(a, b, _)| -> Result<f64> {
                let mut worst = f64::NEG_INFINITY;
                for j in 0..queries {
                    let before = inner_product(&runs[a][j], &runs[b][j])?;
                    let after = inner_product(&runs[a][j + 1], &runs[b][j + 1])?;
                    let bound = pair_bound(a, b, &runs[a][j], &runs[b][j]);
                    worst = worst.max((after - before).norm() - bound);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);

        Ok(Self {
            problem: scheme.problem(),
            n: scheme.n(),
            eps: 0.0,
            eps_prime: 0.0,
            queries,
            w,
            w_imag_max,
            deltas,
            step_bound,
            w0_exact,
            total_weight: total_weight(scheme.problem(), scheme.n())?,
            pair_bound_excess,
        })
    }

    pub fn w0(&self) -> f64 {
        self.w[0]
    }

    pub fn w_final(&self) -> f64 {
        *self.w.last().expect("at least W_0")
    }

    /// Every one-query change stays within the step bound.
    pub fn steps_within_bound(&self, tol: f64) -> bool {
        self.deltas.iter().all(|d| *d <= self.step_bound + tol)
    }

    /// `W_T ≤ rel · W_0` (the exact algorithm should drive it to zero).
    pub fn ends_near_zero(&self, rel: f64) -> bool {
        self.w_final().abs() <= rel * self.w0()
    }

    /// `(W_0 − W_T)/step_bound`: the query count these numbers force.
    pub fn derived_bound(&self) -> f64 {
        (self.w0() - self.w_final()) / self.step_bound
    }

    /// Columns `step,W,delta,bound`; the delta of step 0 is left blank.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["step", "W", "delta", "bound"])?;
        for (j, w) in self.w.iter().enumerate() {
            let delta = if j == 0 {
                String::new()
            } else {
                self.deltas[j - 1].to_string()
            };
            wtr.write_record([
                j.to_string(),
                w.to_string(),
                delta,
                self.step_bound.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn ordered(x: &Input) -> &OrderedOracle {
    match x {
        Input::Ordered(o) => o,
        _ => unreachable!("search ensembles hold ordered oracles"),
    }
}

/// Runs the search on every input of length `n` and tracks the progress.
pub fn search_trace(n: usize) -> Result<ProgressTrace> {
    let scheme = WeightScheme::new(Problem::Search, n)?;
    let plan = SearchPlan::new(n)?;
    let runs = scheme
        .inputs()
        .par_iter()
        .map(|x| {
            let out = plan.run(ordered(x), Record::Queries)?;
            let mut states = out.query_states;
            states.push(out.final_state);
            Ok(states)
        })
        .collect::<Result<Vec<_>>>()?;
    let inputs = scheme.inputs();
    ProgressTrace::build(&scheme, &runs, PI * n as f64, |a, b, sa, sb| {
        let (x, y) = (ordered(&inputs[a]), ordered(&inputs[b]));
        debug_assert!(f_of(x) < f_of(y));
        step_delta_bound(sa, sb, x.differing_indices(y))
    })
}

/// Runs the comparison algorithm on every input of the sorting or element
/// distinctness ensemble of size `n` and tracks the progress.
pub fn comparison_trace(problem: Problem, n: usize) -> Result<ProgressTrace> {
    let check_neighbours = match problem {
        Problem::Sort => false,
        Problem::ElementDistinctness => true,
        Problem::Search => return Err(Error::Range("use search_trace for search".into())),
    };
    if n > MAX_TRACE_SIZE {
        return Err(Error::Range(format!(
            "comparison traces are limited to n ≤ {MAX_TRACE_SIZE}"
        )));
    }
    let scheme = WeightScheme::new(problem, n)?;
    let algo = InsertionSorter::new(n, check_neighbours)?;
    let matrices: Vec<_> = scheme
        .inputs()
        .iter()
        .map(|x| match x {
            Input::Perm(p) => p.comparison_matrix(),
            Input::Annotated(t) => t.comparison_matrix(),
            Input::Ordered(_) => unreachable!("comparison ensembles hold permutations"),
        })
        .collect();
    let runs = matrices
        .par_iter()
        .map(|m| {
            let (mut states, fin) = algo.run(m)?;
            states.push(fin);
            Ok(states)
        })
        .collect::<Result<Vec<_>>>()?;
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let step_bound = match problem {
        Problem::Sort => 2.0 * PI * factorial,
        _ => 2.0 * PI * factorial * (n as f64).sqrt(),
    };
    ProgressTrace::build(&scheme, &runs, step_bound, |a, b, sa, sb| {
        step_delta_bound_pairs(sa, sb, matrices[a].differing_pairs(&matrices[b]))
    })
}

/// Progress trace for any problem.
pub fn progress_trace(problem: Problem, n: usize) -> Result<ProgressTrace> {
    match problem {
        Problem::Search => search_trace(n),
        _ => comparison_trace(problem, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_progress_small() {
        for n in [2, 4, 8] {
            let t = search_trace(n).unwrap();
            assert_eq!(t.w0_exact.as_ref(), Some(&t.total_weight));
            assert!((t.w0() - t.total_weight.to_f64().unwrap()).abs() < 1e-9);
            assert!(t.ends_near_zero(1e-9), "n={n}: W_T={}", t.w_final());
            assert!(t.steps_within_bound(1e-9));
            assert!(t.pair_bound_excess <= 1e-9);
            assert!(t.derived_bound() <= t.queries as f64);
        }
    }

    #[test]
    fn comparison_progress_small() {
        for problem in [Problem::Sort, Problem::ElementDistinctness] {
            for n in 2..=3 {
                let t = comparison_trace(problem, n).unwrap();
                assert_eq!(t.w0_exact.as_ref(), Some(&t.total_weight));
                assert!(
                    t.ends_near_zero(1e-9),
                    "{problem} n={n}: W_T={}",
                    t.w_final()
                );
                assert!(t.steps_within_bound(1e-9));
                assert!(t.pair_bound_excess <= 1e-9);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let t = search_trace(2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,W,delta,bound"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert!((first[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(first[2], "");
        assert_eq!(lines.count(), t.queries);
    }

    #[test]
    fn incomplete_ensemble_rejected() {
        let scheme = WeightScheme::new(Problem::Search, 3).unwrap();
        assert!(matches!(
            progress_w(&scheme, &[]),
            Err(Error::IncompleteEnsemble {
                expected: 3,
                found: 0
            })
        ));
    }
}
