use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ops::{oprime_post_op, oprime_prep_op, u1_frame_op, u2_frame_op, Frame};
use super::{ceil_log2, recursion_size, BASE_MAX};
use crate::error::{Error, Result};
use crate::oracle::{f_of, phase_oracle, OrderedOracle};
use crate::pebble::{build_covered_tree, PebbledTree};
use crate::sim::{
    measure_register, BasisLabel, LinearOp, PureState, Schema, CHECK_TOL, IDLE_QUERY,
};

/// Number of oracle queries spent by one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryCount(pub usize);

/// One recursion level that searches a covered tree.
#[derive(Clone, Debug)]
pub struct TreeLevel {
    pub n: usize,
    pub covering: Arc<PebbledTree>,
    /// `V_c` for every color, left to right.
    pub bands: Vec<Vec<usize>>,
    /// Rightmost leaf below each vertex of `bands`.
    pub band_ends: Vec<Vec<usize>>,
}

/// The innermost level: bisection on a perfect tree of the given depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaseLevel {
    pub n: usize,
    pub depth: u32,
}

/// One entry of the compiled schedule.
#[derive(Clone, Debug)]
pub enum Step {
    Unitary(LinearOp),
    Query,
}

/// A state recorded after one schedule step.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub op: String,
    pub queries: usize,
    pub state: PureState,
}

/// The result of running the plan on one oracle.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub index: usize,
    pub probability: f64,
    pub queries: QueryCount,
    pub final_state: PureState,
    /// The state immediately before each query, if recorded.
    pub query_states: Vec<PureState>,
    /// The state after every step, if recorded.
    pub snapshots: Vec<Snapshot>,
}

/// How much of a run to record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Record {
    Nothing,
    Queries,
    Everything,
}

/// The full recursive query schedule for inputs of one length.
///
/// Level `ℓ` uses the registers `[node, color, bit]` at offset `3ℓ`; the
/// bisection level uses `[node, bit]` after them and the query register
/// comes last. Node registers hold `1 + node id` (0 = empty), color
/// registers `1 + color` (0 = none) and bit registers `1 + bit` (0 = none).
#[derive(Clone, Debug)]
pub struct SearchPlan {
    n: usize,
    levels: Vec<TreeLevel>,
    base: BaseLevel,
    steps: Vec<Step>,
}

/// Maps a local index at some level to the physical oracle index through
/// the colors chosen at all enclosing levels.
struct Translator {
    n: usize,
    levels: Vec<(usize, Vec<Vec<usize>>)>,
}

impl Translator {
    fn physical(&self, l: &BasisLabel, level: usize, mut i: usize) -> Option<u32> {
        for k in (0..level).rev() {
            let c = (l.reg(3 * k + 1) as usize).checked_sub(1)?;
            let (n, ends) = &self.levels[k];
            let ends = ends.get(c)?;
            i = ends.get(i).copied().unwrap_or(n - 1);
        }
        u32::try_from(i.min(self.n - 1)).ok()
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl SearchPlan {
    pub fn new(n: usize) -> Result<Self> {
        Self::build(n, None)
    }

    /// A plan whose outermost level uses `covering` as given. The covering
    /// is not validated here; a broken one surfaces as a failed run.
    pub fn with_covering(n: usize, covering: PebbledTree) -> Result<Self> {
        let size = n + n % 2;
        if size <= BASE_MAX || covering.tree().n_leaves() != size {
            return Err(Error::Range(format!(
                "a covering with {} leaves cannot serve the outer level for n = {n}",
                covering.tree().n_leaves()
            )));
        }
        Self::build(n, Some(covering))
    }

    fn build(n: usize, mut top: Option<PebbledTree>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("search needs n ≥ 1".into()));
        }
        let mut levels = Vec::new();
        let mut size = if n <= BASE_MAX { n } else { n + n % 2 };
        while size > BASE_MAX {
            let covering = Arc::new(match top.take() {
                Some(pt) => pt,
                None => build_covered_tree(size)?,
            });
            let bands: Vec<Vec<usize>> = (0..covering.colors())
                .map(|c| covering.vertex_set(c))
                .collect();
            let band_ends = bands
                .iter()
                .map(|vs| {
                    vs.iter()
                        .map(|&v| covering.tree().leaf_range(v).1)
                        .collect()
                })
                .collect();
            let next = recursion_size(size);
            if let Some(m) = bands.iter().map(Vec::len).max().filter(|&m| m > next) {
                return Err(Error::CoveringInvariant(format!(
                    "{m} vertices of one color do not fit a subinstance of size {next}"
                )));
            }
            levels.push(TreeLevel {
                n: size,
                covering,
                bands,
                band_ends,
            });
            size = next;
        }
        let base = BaseLevel {
            n: size,
            depth: ceil_log2(size),
        };
        let mut plan = SearchPlan {
            n,
            levels,
            base,
            steps: Vec::new(),
        };
        plan.steps = plan.compile();
        Ok(plan)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[TreeLevel] {
        &self.levels
    }

    pub fn base(&self) -> BaseLevel {
        self.base
    }

    pub fn base_strategy(&self) -> &'static str {
        "bisection"
    }

    /// Instance sizes from the outermost level to the bisection level.
    pub fn sizes(&self) -> Vec<usize> {
        self.levels
            .iter()
            .map(|l| l.n)
            .chain([self.base.n])
            .collect()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Queries scheduled by the plan.
    pub fn queries(&self) -> QueryCount {
        QueryCount(
            self.steps
                .iter()
                .filter(|s| matches!(s, Step::Query))
                .count(),
        )
    }

    /// Hash of the outermost covering certificate, if there is one.
    pub fn covering_hash(&self) -> Option<String> {
        self.levels
            .first()
            .map(|l| l.covering.to_certificate().hash())
    }

    fn registers(&self) -> usize {
        3 * self.levels.len() + 3
    }

    fn query_pos(&self) -> usize {
        self.registers() - 1
    }

    pub fn initial_state(&self) -> PureState {
        let mut regs = vec![0; self.registers()];
        regs[self.query_pos()] = IDLE_QUERY;
        PureState::basis(BasisLabel::trusted(Schema::Generic, regs))
    }

    fn compile(&self) -> Vec<Step> {
        let translator = Arc::new(Translator {
            n: self.n,
            levels: self
                .levels
                .iter()
                .map(|l| (l.n, l.band_ends.clone()))
                .collect(),
        });
        let mut steps = Vec::new();
        self.emit(0, &translator, &mut steps);
        steps
    }

    fn frame(&self, level: usize, tr: &Arc<Translator>) -> Frame {
        let tr = Arc::clone(tr);
        Frame {
            node: 3 * level,
            color: 3 * level + 1,
            bit: 3 * level + 2,
            query: self.query_pos(),
            translate: Arc::new(move |l, i| tr.physical(l, level, i)),
        }
    }

    fn emit(&self, level: usize, tr: &Arc<Translator>, steps: &mut Vec<Step>) {
        if level == self.levels.len() {
            self.emit_base(tr, steps);
            return;
        }
        let lv = &self.levels[level];
        let f = self.frame(level, tr);
        steps.push(Step::Unitary(self.color_prep(level)));
        self.emit(level + 1, tr, steps);
        steps.push(Step::Unitary(self.relabel(level)));
        let pt = Arc::clone(&lv.covering);
        steps.push(Step::Unitary(u1_frame_op(
            Arc::clone(&pt),
            f.clone(),
            true,
            format!("U1^-1[{level}]"),
        )));
        steps.push(Step::Unitary(oprime_prep_op(
            Arc::clone(&pt),
            f.clone(),
            format!("O'prep[{level}]"),
        )));
        steps.push(Step::Query);
        steps.push(Step::Unitary(oprime_post_op(
            Arc::clone(&pt),
            f.clone(),
            format!("O'post[{level}]"),
        )));
        steps.push(Step::Unitary(u2_frame_op(pt, f, format!("U2[{level}]"))));
    }

    /// Uniform superposition over the colors of `level`.
    fn color_prep(&self, level: usize) -> LinearOp {
        let colors = self.levels[level].covering.colors();
        let (node, color, bit) = (3 * level, 3 * level + 1, 3 * level + 2);
        let amp = 1.0 / (colors as f64).sqrt();
        LinearOp::new(
            format!("colors[{level}]"),
            move |l| l.reg(node) == 0 && l.reg(color) == 0 && l.reg(bit) == 0,
            move |l| {
                (0..colors)
                    .map(|c| (l.with(color, c as u32 + 1), re(amp)))
                    .collect()
            },
        )
    }

    /// Leaf index reached by the level below `level`, read from its frame.
    fn child_leaf(
        &self,
        level: usize,
    ) -> impl Fn(&BasisLabel) -> Option<usize> + Send + Sync + 'static {
        let child = level + 1;
        let node = 3 * child;
        let tree = self.levels.get(child).map(|l| Arc::clone(&l.covering));
        let depth = self.base.depth;
        move |l: &BasisLabel| {
            let reg = l.reg(node) as usize;
            match &tree {
                Some(pt) => {
                    let (color, bit) = (l.reg(node + 1), l.reg(node + 2));
                    if color != 0 || bit != 0 {
                        return None;
                    }
                    let id = reg.checked_sub(1)?;
                    (id < pt.tree().len()).then_some(())?;
                    pt.tree().leaf_label(id)
                }
                None => {
                    if l.reg(node + 1) != 0 {
                        return None;
                    }
                    let first = 1usize << depth;
                    (first..2 * first).contains(&reg).then(|| reg - first)
                }
            }
        }
    }

    /// Moves the recursive answer `j` for color `c` into this level's node
    /// register as `V_c[j]` and clears the child frame.
    fn relabel(&self, level: usize) -> LinearOp {
        let lv = &self.levels[level];
        let bands = lv.bands.clone();
        let parking = lv.covering.tree().len();
        let (node, color, bit) = (3 * level, 3 * level + 1, 3 * level + 2);
        let child_node = 3 * (level + 1);
        let leaf = Arc::new(self.child_leaf(level));
        let dleaf = Arc::clone(&leaf);
        let colors = bands.len() as u32;
        LinearOp::new(
            format!("relabel[{level}]"),
            move |l| {
                l.reg(node) == 0
                    && l.reg(bit) == 0
                    && (1..=colors).contains(&l.reg(color))
                    && dleaf(l).is_some()
            },
            move |l| {
                let j = leaf(l).expect("domain");
                let band = &bands[l.reg(color) as usize - 1];
                let target = band.get(j).map_or(parking + j, |&v| v) as u32 + 1;
                vec![(l.with_all(&[(node, target), (child_node, 0)]), re(1.0))]
            },
        )
    }

    fn emit_base(&self, tr: &Arc<Translator>, steps: &mut Vec<Step>) {
        let level = self.levels.len();
        let (node, bit, query) = (3 * level, 3 * level + 1, self.query_pos());
        let BaseLevel { n, depth } = self.base;
        steps.push(Step::Unitary(LinearOp::new(
            "bisect-init",
            move |l| l.reg(node) == 0 && l.reg(bit) == 0,
            move |l| vec![(l.with(node, 1), re(1.0))],
        )));
        for t in 0..depth {
            let at_depth = move |l: &BasisLabel| {
                let k = l.reg(node) as usize;
                ((1 << t)..(2 << t)).contains(&k).then_some(k)
            };
            // Rightmost leaf of the left subtree of heap node k at depth t.
            let local = move |k: usize| {
                ((2 * k + 1) << (depth - t - 1))
                    .saturating_sub(1 + (1 << depth))
                    .min(n - 1)
            };
            let phys = {
                let tr = Arc::clone(tr);
                move |l: &BasisLabel| at_depth(l).and_then(|k| tr.physical(l, level, local(k)))
            };
            let phys = Arc::new(phys);
            let (p1, p2) = (Arc::clone(&phys), Arc::clone(&phys));
            let p3 = Arc::clone(&phys);
            steps.push(Step::Unitary(LinearOp::new(
                format!("bisect-prep[{t}]"),
                move |l| l.reg(bit) == 0 && l.reg(query) == IDLE_QUERY && p1(l).is_some(),
                move |l| {
                    let q = p2(l).expect("domain");
                    vec![
                        (l.with(bit, 1), re(FRAC_1_SQRT_2)),
                        (l.with_all(&[(bit, 2), (query, q)]), re(FRAC_1_SQRT_2)),
                    ]
                },
            )));
            steps.push(Step::Query);
            steps.push(Step::Unitary(LinearOp::new(
                format!("bisect-post[{t}]"),
                move |l| match (p3(l), l.reg(bit)) {
                    (Some(_), 1) => l.reg(query) == IDLE_QUERY,
                    (Some(q), 2) => l.reg(query) == q,
                    _ => false,
                },
                move |l| {
                    let idle = l.with(query, IDLE_QUERY);
                    let sign = if l.reg(bit) == 1 { 1.0 } else { -1.0 };
                    vec![
                        (idle.with(bit, 1), re(FRAC_1_SQRT_2)),
                        (idle.with(bit, 2), re(sign * FRAC_1_SQRT_2)),
                    ]
                },
            )));
            steps.push(Step::Unitary(LinearOp::new(
                format!("bisect-descend[{t}]"),
                move |l| {
                    at_depth(l).is_some()
                        && matches!(l.reg(bit), 1 | 2)
                        && l.reg(query) == IDLE_QUERY
                },
                move |l| {
                    let k = l.reg(node);
                    // A 1-bit means the answer is at or left of the queried leaf.
                    let child = 2 * k + u32::from(l.reg(bit) == 1);
                    vec![(l.with_all(&[(node, child), (bit, 0)]), re(1.0))]
                },
            )));
        }
    }

    /// Answer index encoded by an outermost node-register value.
    fn decode(&self, reg: u32) -> Option<usize> {
        let reg = reg as usize;
        let index = match self.levels.first() {
            Some(top) => top.covering.tree().leaf_label(reg.checked_sub(1)?)?,
            None => reg.checked_sub(1 << self.base.depth)?,
        };
        Some(index.min(self.n - 1))
    }

    /// Runs the schedule on `x` and measures the outermost node register.
    pub fn run(&self, x: &OrderedOracle, record: Record) -> Result<SearchOutcome> {
        if x.len() != self.n {
            return Err(Error::Oracle(format!(
                "oracle of length {} for a plan of length {}",
                x.len(),
                self.n
            )));
        }
        let oracle = phase_oracle(x);
        let mut state = self.initial_state();
        let mut query_states = Vec::new();
        let mut snapshots = Vec::new();
        let mut queries = 0;
        for (k, step) in self.steps.iter().enumerate() {
            let name = match step {
                Step::Unitary(op) => {
                    state = op.apply(&state)?;
                    op.name().to_string()
                }
                Step::Query => {
                    if record != Record::Nothing {
                        query_states.push(state.clone());
                    }
                    state = oracle.apply(&state)?;
                    queries += 1;
                    oracle.name().to_string()
                }
            };
            if record == Record::Everything {
                snapshots.push(Snapshot {
                    step: k,
                    op: name,
                    queries,
                    state: state.clone(),
                });
            }
        }
        let dist = measure_register(&state, 0)?;
        let mut by_index = std::collections::BTreeMap::<usize, f64>::new();
        for (&reg, &p) in &dist.distribution {
            let index = self.decode(reg).ok_or_else(|| Error::Exactness {
                expected: f_of(x),
                probability: 0.0,
            })?;
            *by_index.entry(index).or_default() += p;
        }
        let (index, probability) = by_index
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(&i, &p)| (i, p))
            .expect("normalized states have support");
        if index != f_of(x) || probability < 1.0 - CHECK_TOL {
            return Err(Error::Exactness {
                expected: f_of(x),
                probability: by_index.get(&f_of(x)).copied().unwrap_or(0.0),
            });
        }
        Ok(SearchOutcome {
            index,
            probability,
            queries: QueryCount(queries),
            final_state: state,
            query_states,
            snapshots,
        })
    }
}
