use std::collections::{BTreeSet, HashSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tree::{FullBinaryTree, Shape};
use crate::error::{Error, Result};
use crate::oracle::{f_of, OrderedOracle};

/// Budget parameters of a covering of a tree with `n` leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringParams {
    pub n: usize,
    /// `2^s` colors are used.
    pub s: u32,
    /// Maximum number of pebbles of any one color.
    pub n_prime: usize,
}

impl CoveringParams {
    pub fn colors(&self) -> usize {
        1 << self.s
    }
}

/// `⌊log₂ m⌋` for `m ≥ 1`.
fn ilog2(m: u128) -> u128 {
    u128::from(127 - m.leading_zeros())
}

/// `⌊n/3 + log₂ n⌋`, computed exactly as `⌊(n + ⌊log₂ n³⌋) / 3⌋`.
pub fn n_prime(n: usize) -> usize {
    assert!(n >= 1, "n_prime needs n ≥ 1");
    let n = n as u128;
    ((n + ilog2(n * n * n)) / 3) as usize
}

/// `⌊n/3 + log₂ n + 1⌋`.
pub fn n_prime_plus_one(n: usize) -> usize {
    n_prime(n) + 1
}

/// `⌊log₄(n/2)⌋`: the largest `s` with `2·4^s ≤ n`.
pub fn s_param(n: usize) -> u32 {
    assert!(n >= 2, "s_param needs n ≥ 2");
    let mut s = 0;
    while 2usize << (2 * (s + 1)) <= n {
        s += 1;
    }
    s
}

pub fn covering_params(n: usize) -> Result<CoveringParams> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::Range(format!(
            "coverings need an even number of leaves ≥ 2, got {n}"
        )));
    }
    Ok(CoveringParams {
        n,
        s: s_param(n),
        n_prime: n_prime(n),
    })
}

/// A full binary tree with a set of pebble colors on every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PebbledTree {
    tree: FullBinaryTree,
    s: u32,
    n_prime: usize,
    pebbles: Vec<BTreeSet<usize>>,
}

impl PebbledTree {
    /// Wraps a placement without checking it; see [`validate_covering`].
    pub fn new(
        tree: FullBinaryTree,
        s: u32,
        n_prime: usize,
        pebbles: Vec<BTreeSet<usize>>,
    ) -> Result<Self> {
        if pebbles.len() != tree.len() {
            return Err(Error::Tree(format!(
                "{} pebble sets for a tree with {} nodes",
                pebbles.len(),
                tree.len()
            )));
        }
        Ok(Self {
            tree,
            s,
            n_prime,
            pebbles,
        })
    }

    pub fn tree(&self) -> &FullBinaryTree {
        &self.tree
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn colors(&self) -> usize {
        1 << self.s
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn pebbles(&self, v: usize) -> &BTreeSet<usize> {
        &self.pebbles[v]
    }

    /// `p_v`.
    pub fn p(&self, v: usize) -> usize {
        self.pebbles[v].len()
    }

    pub fn is_pebbled(&self, v: usize) -> bool {
        !self.pebbles[v].is_empty()
    }

    /// True for the root and for vertices whose parent holds no pebble.
    pub fn parent_pebble_free(&self, v: usize) -> bool {
        self.tree.parent(v).is_none_or(|u| !self.is_pebbled(u))
    }

    /// The vertices holding `color`, ordered left to right.
    pub fn vertex_set(&self, color: usize) -> Vec<usize> {
        let mut vs: Vec<usize> = (0..self.tree.len())
            .filter(|&v| self.pebbles[v].contains(&color))
            .collect();
        vs.sort_by_key(|&v| self.tree.leaf_range(v).0);
        vs
    }

    /// The unique vertex holding `color` on the path to leaf `f(x)`.
    pub fn locate_vc(&self, color: usize, x: &OrderedOracle) -> Result<usize> {
        if x.len() != self.tree.n_leaves() {
            return Err(Error::Oracle(format!(
                "oracle of length {} for a tree with {} leaves",
                x.len(),
                self.tree.n_leaves()
            )));
        }
        let hits: Vec<usize> = self
            .tree
            .path_to_leaf(f_of(x))
            .into_iter()
            .filter(|&v| self.pebbles[v].contains(&color))
            .collect();
        match hits[..] {
            [v] => Ok(v),
            _ => Err(Error::CoveringInvariant(format!(
                "color {color} occurs {} times on the path to leaf {}",
                hits.len(),
                f_of(x)
            ))),
        }
    }

    pub fn to_certificate(&self) -> Certificate {
        Certificate {
            v: 1,
            n_leaves: self.tree.n_leaves(),
            s: self.s,
            n_prime: self.n_prime,
            nodes: self
                .tree
                .nodes()
                .iter()
                .map(|n| CertNode {
                    id: n.id,
                    left: n.left,
                    right: n.right,
                    pebbles: self.pebbles[n.id].iter().copied().collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds a placement from a certificate. Structure is checked; the
    /// covering conditions are left to [`validate_covering`].
    pub fn from_certificate(cert: &Certificate) -> Result<Self> {
        for (k, node) in cert.nodes.iter().enumerate() {
            if node.id != k {
                return Err(Error::Tree(format!(
                    "certificate node {k} carries id {}",
                    node.id
                )));
            }
        }
        let links: Vec<_> = cert.nodes.iter().map(|n| (n.left, n.right)).collect();
        let tree = FullBinaryTree::from_links(&links)?;
        if tree.n_leaves() != cert.n_leaves {
            return Err(Error::Tree(format!(
                "certificate declares {} leaves, tree has {}",
                cert.n_leaves,
                tree.n_leaves()
            )));
        }
        if cert.s > 16 {
            return Err(Error::Range(format!("s = {} is too large", cert.s)));
        }
        let pebbles = cert
            .nodes
            .iter()
            .map(|n| {
                let set: BTreeSet<usize> = n.pebbles.iter().copied().collect();
                if set.len() != n.pebbles.len() {
                    return Err(Error::Tree(format!("node {} lists a color twice", n.id)));
                }
                Ok(set)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(tree, cert.s, cert.n_prime, pebbles)
    }
}

/// JSON form of a covering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub v: u32,
    pub n_leaves: usize,
    pub s: u32,
    pub n_prime: usize,
    pub nodes: Vec<CertNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertNode {
    pub id: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub pebbles: Vec<usize>,
}

impl Certificate {
    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("certificates always serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Outcome of checking every covering condition by its definition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringReport {
    /// Every root-leaf path holds each color exactly once.
    pub cond_a: bool,
    /// Every internal vertex holds at least as many pebbles as its proper
    /// ancestors together.
    pub cond_b: bool,
    pub fair: bool,
    pub tight: bool,
    pub within_budget: bool,
    pub colors_in_range: bool,
    pub leaves_unpebbled: bool,
    pub per_color: Vec<usize>,
    /// Total pebbles on the path to each leaf.
    pub path_sums: Vec<usize>,
}

impl CoveringReport {
    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }

    /// Names of the failed checks.
    pub fn violations(&self) -> Vec<&'static str> {
        [
            (
                self.cond_a,
                "condition A (one pebble of each color per path)",
            ),
            (self.cond_b, "condition B (pebbles dominate ancestors)"),
            (self.fair, "fairness"),
            (self.tight, "tightness"),
            (self.within_budget, "per-color budget"),
            (self.colors_in_range, "color range"),
            (self.leaves_unpebbled, "no pebbles on leaves"),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| name)
        .collect()
    }

    /// The common path sum, if all paths agree.
    pub fn path_sum(&self) -> Option<usize> {
        let first = *self.path_sums.first()?;
        self.path_sums.iter().all(|&x| x == first).then_some(first)
    }
}

pub fn validate_covering(pt: &PebbledTree) -> CoveringReport {
    let t = &pt.tree;
    let colors = pt.colors();
    let colors_in_range = pt.pebbles.iter().flatten().all(|&c| c < colors);
    let leaves_unpebbled = (0..t.n_leaves()).all(|l| pt.pebbles[t.leaf_node(l)].is_empty());

    let mut cond_a = true;
    let mut path_sums = Vec::with_capacity(t.n_leaves());
    for leaf in 0..t.n_leaves() {
        let mut hits = vec![0usize; colors];
        let mut sum = 0;
        for v in t.path_to_leaf(leaf) {
            sum += pt.p(v);
            for &c in &pt.pebbles[v] {
                if c < colors {
                    hits[c] += 1;
                }
            }
        }
        cond_a &= hits.iter().all(|&h| h == 1) && sum == colors;
        path_sums.push(sum);
    }

    let mut cond_b = true;
    let mut tight = true;
    for v in t.internal_nodes() {
        let above: usize = t.ancestors(v).map(|u| pt.p(u)).sum();
        cond_b &= pt.p(v) >= above;
        tight &= above == 0 || pt.p(v) == above;
    }

    let mut per_color = vec![0usize; colors];
    for &c in pt.pebbles.iter().flatten() {
        if c < colors {
            per_color[c] += 1;
        }
    }
    let fair = per_color.iter().all_equal();
    let within_budget = per_color.iter().all(|&k| k <= pt.n_prime);

    CoveringReport {
        cond_a,
        cond_b,
        fair,
        tight,
        within_budget,
        colors_in_range,
        leaves_unpebbled,
        per_color,
        path_sums,
    }
}

/// Pebbles in a perfect pebbled subtree of height `h` whose root holds `a`.
fn subtree_total(h: u32, a: usize) -> usize {
    a * (4usize.pow(h) + 2) / 6
}

/// Colors the perfect subtree at `root` with the canonical pattern: the root
/// takes `a` colors, each child takes as many as all its ancestors together,
/// and right children see the remaining list reversed.
fn canonical_fill(
    t: &FullBinaryTree,
    root: usize,
    a: usize,
    colors: usize,
    out: &mut [BTreeSet<usize>],
) {
    fn fill(t: &FullBinaryTree, v: usize, list: &[usize], b: usize, out: &mut [BTreeSet<usize>]) {
        let Some((l, r)) = t.children(v) else {
            debug_assert!(list.is_empty());
            return;
        };
        out[v] = list[..b].iter().copied().collect();
        let rest = &list[b..];
        let reversed: Vec<usize> = rest.iter().rev().copied().collect();
        fill(t, l, rest, 2 * b, out);
        fill(t, r, &reversed, 2 * b, out);
    }
    let list: Vec<usize> = (0..colors).collect();
    out[root] = list[..a].iter().copied().collect();
    let rest = &list[a..];
    let reversed: Vec<usize> = rest.iter().rev().copied().collect();
    let (l, r) = t.children(root).expect("subtree roots are internal");
    fill(t, l, rest, a, out);
    fill(t, r, &reversed, a, out);
}

/// Roots and heights of the maximal perfect subtrees of height at most
/// `max_h`, left to right.
fn decompose(t: &FullBinaryTree, max_h: u32) -> Result<Vec<(usize, u32)>> {
    fn go(t: &FullBinaryTree, v: usize, max_h: u32, out: &mut Vec<(usize, u32)>) -> Result<()> {
        match (t.perfect_height(v), t.children(v)) {
            (Some(h), _) if (1..=max_h).contains(&h) => {
                out.push((v, h));
                Ok(())
            }
            (_, Some((l, r))) => {
                go(t, l, max_h, out)?;
                go(t, r, max_h, out)
            }
            (_, None) => Err(Error::Covering(format!(
                "leaf {} has a sibling subtree that is not a perfect tree of height ≤ {max_h}",
                t.leaf_label(v).expect("leaf")
            ))),
        }
    }
    let mut out = Vec::new();
    go(t, t.root(), max_h, &mut out)?;
    Ok(out)
}

/// Rearranges `v` into the previous distinct permutation in lexicographic
/// order; returns false once `v` is sorted ascending.
fn prev_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] > v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] < v[i - 1])
        .expect("v[i] qualifies");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

const BALANCE_CAP: usize = 1_000_000;

/// Finds one color relabelling per subtree so every color ends with the
/// same total. `perms[t][k]` is the color given to canonical color `k`.
struct Balancer<'a> {
    profiles: &'a [Vec<usize>],
    target: usize,
    colors: usize,
    failed: HashSet<(usize, Vec<usize>)>,
    visits: usize,
}

impl Balancer<'_> {
    fn search(
        &mut self,
        t: usize,
        totals: &mut [usize],
        perms: &mut Vec<Vec<usize>>,
    ) -> Result<bool> {
        if t == self.profiles.len() {
            return Ok(totals.iter().all(|&x| x == self.target));
        }
        let key = (t, totals.iter().copied().sorted().collect::<Vec<_>>());
        if self.failed.contains(&key) {
            return Ok(false);
        }
        self.visits += 1;
        if self.visits > BALANCE_CAP {
            return Err(Error::SearchCap { cap: BALANCE_CAP });
        }
        let profile = &self.profiles[t];
        let order: Vec<usize> = (0..self.colors)
            .sorted_by_key(|&c| (totals[c], std::cmp::Reverse(c)))
            .collect();
        let mut values: Vec<usize> = profile.iter().copied().sorted_by(|a, b| b.cmp(a)).collect();
        loop {
            if order
                .iter()
                .zip(&values)
                .all(|(&c, &v)| totals[c] + v <= self.target)
            {
                let mut perm = vec![usize::MAX; self.colors];
                for (&c, &v) in order.iter().zip(&values) {
                    let k = (0..self.colors)
                        .find(|&k| perm[k] == usize::MAX && profile[k] == v)
                        .expect("values are a permutation of the profile");
                    perm[k] = c;
                    totals[c] += v;
                }
                perms.push(perm);
                if self.search(t + 1, totals, perms)? {
                    return Ok(true);
                }
                perms.pop();
                for (&c, &v) in order.iter().zip(&values) {
                    totals[c] -= v;
                }
            }
            if !prev_permutation(&mut values) {
                break;
            }
        }
        self.failed.insert(key);
        Ok(false)
    }
}

/// Builds a fair, tight covering of `tree` with `2^s` colors, or explains
/// which condition cannot be met.
///
/// The tree is split into maximal perfect subtrees of height at most `s+1`;
/// the vertices above them stay empty. A subtree of height `h` has
/// `2^(s+1-h)` pebbles on its root and on each of its children, and every
/// deeper vertex holds as many pebbles as all its ancestors together.
pub fn construct_covering(tree: &FullBinaryTree, params: &CoveringParams) -> Result<PebbledTree> {
    let parts = decompose(tree, params.s + 1)?;
    cover_parts(tree, params, &parts)
}

/// [`construct_covering`] on a given split into perfect subtrees
/// `(root, height)` covering every leaf.
fn cover_parts(
    tree: &FullBinaryTree,
    params: &CoveringParams,
    parts: &[(usize, u32)],
) -> Result<PebbledTree> {
    if tree.n_leaves() != params.n {
        return Err(Error::Covering(format!(
            "parameters are for {} leaves, tree has {}",
            params.n,
            tree.n_leaves()
        )));
    }
    let colors = params.colors();
    let mut canonical = vec![BTreeSet::new(); tree.len()];
    let mut profiles = Vec::with_capacity(parts.len());
    for &(root, h) in parts {
        let a = 1usize << (params.s + 1 - h);
        canonical_fill(tree, root, a, colors, &mut canonical);
        let mut profile = vec![0usize; colors];
        let (lo, hi) = tree.leaf_range(root);
        for v in tree.internal_nodes().filter(|&v| {
            let (a, b) = tree.leaf_range(v);
            lo <= a && b <= hi
        }) {
            for &c in &canonical[v] {
                profile[c] += 1;
            }
        }
        debug_assert_eq!(profile.iter().sum::<usize>(), subtree_total(h, a));
        profiles.push(profile);
    }

    let total: usize = profiles.iter().flatten().sum();
    if !total.is_multiple_of(colors) {
        return Err(Error::Covering(format!(
            "fairness: {total} pebbles cannot be split evenly over {colors} colors"
        )));
    }
    let target = total / colors;
    if target > params.n_prime {
        return Err(Error::Covering(format!(
            "budget: {target} pebbles per color exceeds N' = {}",
            params.n_prime
        )));
    }
    let mut balancer = Balancer {
        profiles: &profiles,
        target,
        colors,
        failed: HashSet::new(),
        visits: 0,
    };
    let mut perms = Vec::new();
    if !balancer.search(0, &mut vec![0; colors], &mut perms)? {
        return Err(Error::Covering(format!(
            "fairness: no relabelling of the subtree colorings reaches {target} pebbles per color"
        )));
    }

    let mut pebbles = vec![BTreeSet::new(); tree.len()];
    for (&(root, _), perm) in parts.iter().zip(&perms) {
        let (lo, hi) = tree.leaf_range(root);
        for v in tree.internal_nodes() {
            let (a, b) = tree.leaf_range(v);
            if lo <= a && b <= hi {
                pebbles[v] = canonical[v].iter().map(|&k| perm[k]).collect();
            }
        }
    }
    let pt = PebbledTree::new(tree.clone(), params.s, params.n_prime, pebbles)?;
    let report = validate_covering(&pt);
    if !report.is_valid() {
        return Err(Error::Covering(report.violations().join(", ")));
    }
    Ok(pt)
}

/// Largest number of subtrees of a given height given up, relative to the
/// greedy maximum, when enumerating layouts.
const LAYOUT_SLACK: usize = 6;

/// Counts of perfect subtrees per height `1..=s+1` that tile `n` leaves.
fn layouts(n: usize, s: u32) -> Vec<Vec<usize>> {
    fn go(rem: usize, h: u32, counts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if h == 1 {
            counts[0] = rem / 2;
            out.push(counts.clone());
            return;
        }
        let size = 1usize << h;
        let max = rem / size;
        for k in (max.saturating_sub(LAYOUT_SLACK)..=max).rev() {
            counts[h as usize - 1] = k;
            go(rem - k * size, h - 1, counts, out);
        }
        counts[h as usize - 1] = 0;
    }
    let mut out = Vec::new();
    go(n, s + 1, &mut vec![0; s as usize + 1], &mut out);
    out
}

/// A covered tree with `n` leaves for even `n`.
///
/// Candidate layouts (how many perfect subtrees of each height) are tried
/// in order of increasing pebbles per color; subtrees are placed tallest
/// first and joined by a balanced top. The first layout that admits a fair,
/// tight covering within budget wins.
pub fn build_covered_tree(n: usize) -> Result<PebbledTree> {
    let params = covering_params(n)?;
    let colors = params.colors();
    let mut candidates: Vec<(usize, Vec<usize>)> = layouts(n, params.s)
        .into_iter()
        .filter_map(|counts| {
            let total: usize = counts
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let h = i as u32 + 1;
                    k * subtree_total(h, 1 << (params.s + 1 - h))
                })
                .sum();
            (total.is_multiple_of(colors) && total / colors <= params.n_prime)
                .then_some((total / colors, counts))
        })
        .collect();
    candidates.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| b.1.iter().rev().cmp(a.1.iter().rev()))
    });

    let mut last = Error::Covering(format!("no layout of {n} leaves fits the budget"));
    for (_, counts) in candidates {
        let parts: Vec<Shape> = (1..=params.s + 1)
            .rev()
            .flat_map(|h| std::iter::repeat_n(Shape::perfect(h), counts[h as usize - 1]))
            .collect();
        let tree = FullBinaryTree::from_shape(&Shape::balanced(&parts))?;
        // Equal neighbours may join into a taller perfect subtree, so the
        // parts are located by leaf range rather than rediscovered.
        let mut lo = 0;
        let mut roots = Vec::with_capacity(parts.len());
        for part in &parts {
            let hi = lo + part.leaves() - 1;
            let root = (0..tree.len())
                .find(|&v| tree.leaf_range(v) == (lo, hi))
                .ok_or_else(|| Error::Tree(format!("no subtree spans leaves {lo}..={hi}")))?;
            roots.push((root, tree.perfect_height(root).expect("perfect part")));
            lo = hi + 1;
        }
        match cover_parts(&tree, &params, &roots) {
            Ok(pt) => return Ok(pt),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// The deterministic tree used for `n` leaves: the covered layout for even
/// `n`, a balanced tree otherwise.
pub fn build_tree(n: usize) -> Result<FullBinaryTree> {
    if n < 2 {
        return Err(Error::Tree(format!(
            "a tree needs at least 2 leaves, got {n}"
        )));
    }
    if n % 2 == 1 {
        return FullBinaryTree::from_shape(&Shape::balanced(&vec![Shape::Leaf; n]));
    }
    Ok(build_covered_tree(n)?.tree)
}
