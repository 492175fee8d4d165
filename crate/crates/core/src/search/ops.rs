//! The coloring operator `U₁`, the tree query `O′ₓ` and the spreading
//! operator `U₂`, written against a frame of registers so the same rules
//! serve the standalone tree layout and every level of the recursive driver.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::{f_of, phase_oracle, OrderedOracle};
use crate::pebble::{FullBinaryTree, PebbledTree};
use crate::sim::{BasisLabel, LinearOp, PureState, Schema, IDLE_QUERY};

pub(crate) type Translate = Arc<dyn Fn(&BasisLabel, usize) -> Option<u32> + Send + Sync>;

/// Register positions of one search frame, plus the map from the frame's
/// local leaf indices to physical oracle indices.
#[derive(Clone)]
pub(crate) struct Frame {
    pub node: usize,
    pub color: usize,
    pub bit: usize,
    pub query: usize,
    pub translate: Translate,
}

impl Frame {
    /// The standalone `[node, color, bit, query]` layout.
    pub fn tree_schema() -> Self {
        Frame {
            node: 0,
            color: 1,
            bit: 2,
            query: 3,
            translate: Arc::new(|_, i| u32::try_from(i).ok()),
        }
    }

    /// Node id held in the frame, if the register names a node of `t`.
    fn vertex(&self, t: &FullBinaryTree, l: &BasisLabel) -> Option<usize> {
        let v = (l.reg(self.node) as usize).checked_sub(1)?;
        (v < t.len()).then_some(v)
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The leaf queried at `v`: the rightmost leaf of its left subtree.
pub fn query_leaf(t: &FullBinaryTree, v: usize) -> usize {
    let (l, _) = t
        .children(v)
        .expect("queries are made at internal vertices");
    t.leaf_range(l).1
}

/// Leaves of the subtree at `u` with amplitude `2^(-d/2)` for relative
/// depth `d`.
pub fn phi(t: &FullBinaryTree, u: usize) -> Vec<(usize, f64)> {
    t.leaves_below(u)
        .into_iter()
        .map(|(leaf, d)| (leaf, 0.5f64.powf(d as f64 / 2.0)))
        .collect()
}

/// `U₁` restricted to one pebbled vertex, as the image of a color-register
/// value (0 = none, `1 + c` for color `c`).
///
/// It sends "none" to the uniform superposition of the vertex's colors and
/// completes this to a unitary on `{none} ∪ colors`: the first color goes
/// to "none", the `k`-th color to the `k`-th Fourier vector.
fn u1_column(colors: &[usize], reg: u32, inverse: bool) -> Option<Vec<(u32, Complex64)>> {
    let p = colors.len();
    let norm = 1.0 / (p as f64).sqrt();
    let fourier =
        |j: usize, k: usize| Complex64::from_polar(norm, 2.0 * PI * (j * k % p) as f64 / p as f64);
    let pos = if reg == 0 {
        None
    } else {
        Some(colors.iter().position(|&c| c + 1 == reg as usize)?)
    };
    let reg_of = |j: usize| colors[j] as u32 + 1;
    Some(match (pos, inverse) {
        (None, false) => (0..p).map(|j| (reg_of(j), re(norm))).collect(),
        (Some(0), false) => vec![(0, re(1.0))],
        (Some(k), false) => (0..p).map(|j| (reg_of(j), fourier(j, k))).collect(),
        (None, true) => vec![(reg_of(0), re(1.0))],
        (Some(j), true) => std::iter::once((0, re(norm)))
            .chain((1..p).map(|k| (reg_of(k), fourier(j, k).conj())))
            .collect(),
    })
}

pub(crate) fn u1_frame_op(pt: Arc<PebbledTree>, f: Frame, inverse: bool, name: String) -> LinearOp {
    let (dpt, df) = (Arc::clone(&pt), f.clone());
    LinearOp::new(
        name,
        move |l| {
            df.vertex(dpt.tree(), l).is_some_and(|v| {
                let colors: Vec<usize> = dpt.pebbles(v).iter().copied().collect();
                !colors.is_empty()
                    && l.reg(df.bit) == 0
                    && u1_column(&colors, l.reg(df.color), inverse).is_some()
            })
        },
        move |l| {
            let v = f.vertex(pt.tree(), l).expect("domain");
            let colors: Vec<usize> = pt.pebbles(v).iter().copied().collect();
            u1_column(&colors, l.reg(f.color), inverse)
                .expect("domain")
                .into_iter()
                .map(|(c, a)| (l.with(f.color, c), a))
                .collect()
        },
    )
}

/// Preparation half of `O′ₓ`: vertices whose parent is pebble-free enter
/// `(|b=0⟩ + |b=1, q=i⟩)/√2`, all others load `q = i`.
pub(crate) fn oprime_prep_op(pt: Arc<PebbledTree>, f: Frame, name: String) -> LinearOp {
    let (dpt, df) = (Arc::clone(&pt), f.clone());
    LinearOp::new(
        name,
        move |l| {
            df.vertex(dpt.tree(), l).is_some_and(|v| {
                !dpt.tree().is_leaf(v)
                    && l.reg(df.color) == 0
                    && l.reg(df.bit) == 0
                    && l.reg(df.query) == IDLE_QUERY
                    && (df.translate)(l, query_leaf(dpt.tree(), v)).is_some()
            })
        },
        move |l| {
            let v = f.vertex(pt.tree(), l).expect("domain");
            let q = (f.translate)(l, query_leaf(pt.tree(), v)).expect("domain");
            if pt.parent_pebble_free(v) {
                vec![
                    (l.with(f.bit, 1), re(FRAC_1_SQRT_2)),
                    (l.with_all(&[(f.bit, 2), (f.query, q)]), re(FRAC_1_SQRT_2)),
                ]
            } else {
                vec![(l.with(f.query, q), re(1.0))]
            }
        },
    )
}

/// Completion half of `O′ₓ`: interferes the two branches into the bit
/// register (1 = bit 0, 2 = bit 1), or clears the query register.
pub(crate) fn oprime_post_op(pt: Arc<PebbledTree>, f: Frame, name: String) -> LinearOp {
    let (dpt, df) = (Arc::clone(&pt), f.clone());
    LinearOp::new(
        name,
        move |l| {
            df.vertex(dpt.tree(), l).is_some_and(|v| {
                if dpt.tree().is_leaf(v) || l.reg(df.color) != 0 {
                    return false;
                }
                let Some(q) = (df.translate)(l, query_leaf(dpt.tree(), v)) else {
                    return false;
                };
                match (dpt.parent_pebble_free(v), l.reg(df.bit)) {
                    (true, 1) => l.reg(df.query) == IDLE_QUERY,
                    (true, 2) | (false, 0) => l.reg(df.query) == q,
                    _ => false,
                }
            })
        },
        move |l| {
            let v = f.vertex(pt.tree(), l).expect("domain");
            let idle = l.with(f.query, IDLE_QUERY);
            if pt.parent_pebble_free(v) {
                let sign = if l.reg(f.bit) == 1 { 1.0 } else { -1.0 };
                vec![
                    (idle.with(f.bit, 1), re(FRAC_1_SQRT_2)),
                    (idle.with(f.bit, 2), re(sign * FRAC_1_SQRT_2)),
                ]
            } else {
                vec![(idle, re(1.0))]
            }
        },
    )
}

/// `U₂`, defined on pebbled vertices: a written bit 0 (register 1) moves to
/// `Φ_right`, bit 1 (register 2) to `Φ_left`; vertices below a pebbled
/// parent move to `(Φ_right − Φ_left)/√2`.
pub(crate) fn u2_frame_op(pt: Arc<PebbledTree>, f: Frame, name: String) -> LinearOp {
    let (dpt, df) = (Arc::clone(&pt), f.clone());
    LinearOp::new(
        name,
        move |l| {
            df.vertex(dpt.tree(), l).is_some_and(|v| {
                dpt.is_pebbled(v)
                    && l.reg(df.color) == 0
                    && l.reg(df.query) == IDLE_QUERY
                    && match dpt.parent_pebble_free(v) {
                        true => matches!(l.reg(df.bit), 1 | 2),
                        false => l.reg(df.bit) == 0,
                    }
            })
        },
        move |l| {
            let t = pt.tree();
            let v = f.vertex(t, l).expect("domain");
            let (left, right) = t.children(v).expect("pebbled vertices are internal");
            let at =
                |leaf: usize, a: f64| (l.with_all(&[(f.node, leaf as u32 + 1), (f.bit, 0)]), re(a));
            match l.reg(f.bit) {
                1 => phi(t, right).into_iter().map(|(x, a)| at(x, a)).collect(),
                2 => phi(t, left).into_iter().map(|(x, a)| at(x, a)).collect(),
                _ => phi(t, right)
                    .into_iter()
                    .map(|(x, a)| at(x, a * FRAC_1_SQRT_2))
                    .chain(
                        phi(t, left)
                            .into_iter()
                            .map(|(x, a)| at(x, -a * FRAC_1_SQRT_2)),
                    )
                    .collect(),
            }
        },
    )
}

/// A `[node, color, bit, query]` label at node `v` with empty registers.
pub fn tree_label(v: usize) -> BasisLabel {
    BasisLabel::trusted(Schema::Tree, vec![v as u32 + 1, 0, 0, IDLE_QUERY])
}

fn require_tree_schema(s: &PureState) -> Result<()> {
    if s.schema() == Schema::Tree {
        Ok(())
    } else {
        Err(Error::SchemaMismatch {
            expected: Schema::Tree.id(),
            found: s.schema().id(),
        })
    }
}

fn require_length(pt: &PebbledTree, x: &OrderedOracle) -> Result<()> {
    if x.len() == pt.tree().n_leaves() {
        Ok(())
    } else {
        Err(Error::Oracle(format!(
            "oracle of length {} for a tree with {} leaves",
            x.len(),
            pt.tree().n_leaves()
        )))
    }
}

pub fn u1_apply(pt: &PebbledTree, s: &PureState) -> Result<PureState> {
    require_tree_schema(s)?;
    u1_frame_op(
        Arc::new(pt.clone()),
        Frame::tree_schema(),
        false,
        "U1".into(),
    )
    .apply(s)
}

pub fn u1_inverse_apply(pt: &PebbledTree, s: &PureState) -> Result<PureState> {
    require_tree_schema(s)?;
    u1_frame_op(
        Arc::new(pt.clone()),
        Frame::tree_schema(),
        true,
        "U1^-1".into(),
    )
    .apply(s)
}

/// `O′ₓ` on the tree layout, spending one query to `x`.
pub fn oracle_prime_op(pt: &PebbledTree, x: &OrderedOracle) -> LinearOp {
    let pt = Arc::new(pt.clone());
    let prep = oprime_prep_op(Arc::clone(&pt), Frame::tree_schema(), "O'prep".into());
    let post = oprime_post_op(pt, Frame::tree_schema(), "O'post".into());
    prep.then(&phase_oracle(x)).then(&post)
}

pub fn oracle_prime_apply(pt: &PebbledTree, x: &OrderedOracle, s: &PureState) -> Result<PureState> {
    require_tree_schema(s)?;
    require_length(pt, x)?;
    oracle_prime_op(pt, x).apply(s)
}

pub fn u2_op(pt: &PebbledTree) -> LinearOp {
    u2_frame_op(Arc::new(pt.clone()), Frame::tree_schema(), "U2".into())
}

pub fn u2_apply(pt: &PebbledTree, s: &PureState) -> Result<PureState> {
    require_tree_schema(s)?;
    u2_op(pt).apply(s)
}

/// `Φ_u` on the tree layout.
pub fn phi_state(tree: &FullBinaryTree, u: usize) -> PureState {
    let terms = phi(tree, u)
        .into_iter()
        .map(|(leaf, a)| (tree_label(leaf), re(a)));
    PureState::accumulate(Schema::Tree, terms).expect("tree labels")
}

/// `2^(-s/2) Σ_{v on the path} √p_v |v⟩` for the path to the answer of `x`.
pub fn path_superposition(pt: &PebbledTree, x: &OrderedOracle) -> Result<PureState> {
    require_length(pt, x)?;
    let scale = 1.0 / (pt.colors() as f64).sqrt();
    let terms = pt
        .tree()
        .path_to_leaf(f_of(x))
        .into_iter()
        .filter(|&v| pt.is_pebbled(v))
        .map(|v| (tree_label(v), re(scale * (pt.p(v) as f64).sqrt())));
    PureState::from_terms(Schema::Tree, terms)
}

/// `|leaf_{f(x)}⟩` on the tree layout.
pub fn answer_state(pt: &PebbledTree, x: &OrderedOracle) -> PureState {
    PureState::basis(tree_label(pt.tree().leaf_node(f_of(x))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::all_inputs;
    use crate::pebble::build_covered_tree;
    use crate::sim::{inner_product, ALGEBRA_TOL};
    use approx::assert_abs_diff_eq;

    fn label(v: usize, color: u32, bit: u32) -> BasisLabel {
        BasisLabel::new(Schema::Tree, vec![v as u32 + 1, color, bit, IDLE_QUERY]).unwrap()
    }

    #[test]
    fn u1_on_one_and_two_colors() {
        let pt = build_covered_tree(8).unwrap();
        let (l, _) = pt.tree().children(pt.tree().root()).unwrap();
        let out = u1_apply(&pt, &PureState::basis(label(l, 0, 0))).unwrap();
        assert_eq!(out, PureState::basis(label(l, 1, 0)));

        let pt = build_covered_tree(2).unwrap();
        let root = pt.tree().root();
        // One vertex with 1 color: none ↔ color 0.
        let out = u1_apply(&pt, &PureState::basis(label(root, 0, 0))).unwrap();
        assert_eq!(out, PureState::basis(label(root, 1, 0)));
        assert!(u1_apply(&pt, &PureState::basis(label(pt.tree().leaf_node(0), 0, 0))).is_err());
    }

    #[test]
    fn u1_columns_are_unitary() {
        for p in 1..=6 {
            let colors: Vec<usize> = (0..p).map(|c| 2 * c + 1).collect();
            let regs: Vec<u32> = std::iter::once(0)
                .chain(colors.iter().map(|&c| c as u32 + 1))
                .collect();
            for inverse in [false, true] {
                let cols: Vec<_> = regs
                    .iter()
                    .map(|&r| u1_column(&colors, r, inverse).unwrap())
                    .collect();
                for (a, ca) in cols.iter().enumerate() {
                    for (b, cb) in cols.iter().enumerate() {
                        let mut dot = Complex64::new(0.0, 0.0);
                        for (ra, xa) in ca {
                            for (rb, xb) in cb {
                                if ra == rb {
                                    dot += xa.conj() * xb;
                                }
                            }
                        }
                        let want = if a == b { 1.0 } else { 0.0 };
                        assert!((dot - want).norm() < ALGEBRA_TOL, "p={p} a={a} b={b}");
                    }
                }
            }
            let uniform = u1_column(&colors, 0, false).unwrap();
            let mut back = std::collections::BTreeMap::<u32, Complex64>::new();
            for (r, a) in uniform {
                for (r2, b) in u1_column(&colors, r, true).unwrap() {
                    *back.entry(r2).or_default() += a * b;
                }
            }
            for (r, a) in back {
                let want = if r == 0 { 1.0 } else { 0.0 };
                assert!((a - want).norm() < ALGEBRA_TOL);
            }
        }
    }

    #[test]
    fn two_leaf_query_and_spread() {
        let pt = build_covered_tree(2).unwrap();
        let root = pt.tree().root();
        for (bits, bit_reg, leaf) in [([false, true], 1, 1), ([true, true], 2, 0)] {
            let x = OrderedOracle::from_bits(&bits).unwrap();
            let out = oracle_prime_apply(&pt, &x, &PureState::basis(label(root, 0, 0))).unwrap();
            assert_eq!(out.len(), 1);
            assert_abs_diff_eq!(
                out.amplitude(&label(root, 0, bit_reg)).re,
                1.0,
                epsilon = 1e-12
            );
            let spread = u2_apply(&pt, &out).unwrap();
            assert_abs_diff_eq!(
                inner_product(
                    &spread,
                    &PureState::basis(label(pt.tree().leaf_node(leaf), 0, 0))
                )
                .unwrap()
                .re,
                1.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn phase_below_pebbled_parent() {
        let pt = build_covered_tree(8).unwrap();
        let t = pt.tree();
        let (l, _) = t.children(t.root()).unwrap();
        let (ll, _) = t.children(l).unwrap();
        // query leaf of ll is 0; x_0 = 1 when f = 0.
        let x = OrderedOracle::with_answer(8, 0).unwrap();
        let out = oracle_prime_apply(&pt, &x, &PureState::basis(label(ll, 0, 0))).unwrap();
        assert_abs_diff_eq!(out.amplitude(&label(ll, 0, 0)).re, -1.0, epsilon = 1e-12);
        let spread = u2_apply(&pt, &PureState::basis(label(ll, 0, 0))).unwrap();
        let (a, b) = (t.leaf_node(0), t.leaf_node(1));
        assert_abs_diff_eq!(
            spread.amplitude(&label(b, 0, 0)).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            spread.amplitude(&label(a, 0, 0)).re,
            -FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn phi_examples() {
        let pt = build_covered_tree(8).unwrap();
        let t = pt.tree();
        let leaf = t.leaf_node(3);
        assert_eq!(phi_state(t, leaf), PureState::basis(label(leaf, 0, 0)));
        let (l, _) = t.children(t.root()).unwrap();
        let s = phi_state(t, l);
        assert_eq!(s.len(), 4);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-15);
        for (_, a) in s.terms() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn path_superposition_examples() {
        let pt = build_covered_tree(8).unwrap();
        let t = pt.tree();
        let x = OrderedOracle::with_answer(8, 0).unwrap();
        let s = path_superposition(&pt, &x).unwrap();
        let (l, _) = t.children(t.root()).unwrap();
        let (ll, _) = t.children(l).unwrap();
        assert_abs_diff_eq!(
            s.amplitude(&label(l, 0, 0)).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s.amplitude(&label(ll, 0, 0)).re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        for x in all_inputs(2) {
            let pt = build_covered_tree(2).unwrap();
            assert_eq!(
                path_superposition(&pt, &x).unwrap(),
                PureState::basis(label(pt.tree().root(), 0, 0))
            );
        }
    }
}
