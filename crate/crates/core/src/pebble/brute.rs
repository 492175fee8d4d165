use itertools::Itertools;

use super::tree::FullBinaryTree;
use crate::error::{Error, Result};

/// Upper limit on cuts or color combinations examined.
pub const BRUTE_FORCE_CAP: usize = 5_000_000;

/// Every set of internal vertices meeting each root-leaf path exactly once,
/// as sorted node lists.
fn cuts(t: &FullBinaryTree, v: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    let Some((l, r)) = t.children(v) else {
        return Ok(Vec::new());
    };
    let mut out = vec![vec![v]];
    let (a, b) = (cuts(t, l, cap)?, cuts(t, r, cap)?);
    if a.len().saturating_mul(b.len()) > cap {
        return Err(Error::SearchCap { cap });
    }
    for x in &a {
        for y in &b {
            out.push(x.iter().chain(y).copied().collect());
        }
    }
    Ok(out)
}

/// The least achievable maximum per-color pebble count over all placements
/// of `colors` colors satisfying conditions A and B, by exhaustive search.
///
/// Each color class is a cut of the tree; a placement is a multiset of
/// `colors` cuts.
pub fn brute_force_min_pebbles(tree: &FullBinaryTree, colors: usize) -> Result<usize> {
    if colors == 0 {
        return Err(Error::Range("at least one color is needed".into()));
    }
    let mut all = cuts(tree, tree.root(), BRUTE_FORCE_CAP)?;
    all.sort_by_key(|c| (c.len(), c.clone()));
    let parents: Vec<Option<usize>> = (0..tree.len()).map(|v| tree.parent(v)).collect();

    let mut best: Option<usize> = None;
    let mut examined = 0usize;
    let mut p = vec![0usize; tree.len()];
    for combo in (0..all.len()).combinations_with_replacement(colors) {
        examined += 1;
        if examined > BRUTE_FORCE_CAP {
            return Err(Error::SearchCap {
                cap: BRUTE_FORCE_CAP,
            });
        }
        // Cuts are sorted by size, so the last index carries the maximum.
        let worst = all[*combo.last().expect("colors ≥ 1")].len();
        if best.is_some_and(|b| worst >= b) {
            continue;
        }
        p.iter_mut().for_each(|x| *x = 0);
        for &k in &combo {
            for &v in &all[k] {
                p[v] += 1;
            }
        }
        let ok = tree.internal_nodes().all(|v| {
            let above: usize = std::iter::successors(parents[v], |&u| parents[u])
                .map(|u| p[u])
                .sum();
            p[v] >= above
        });
        if ok {
            best = Some(worst);
        }
    }
    best.ok_or_else(|| {
        Error::Covering(format!(
            "no placement of {colors} colors satisfies conditions A and B"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pebble::Shape;

    fn complete(h: u32) -> FullBinaryTree {
        FullBinaryTree::from_shape(&Shape::perfect(h)).unwrap()
    }

    #[test]
    fn small_complete_trees() {
        assert_eq!(brute_force_min_pebbles(&complete(1), 1).unwrap(), 1);
        assert_eq!(brute_force_min_pebbles(&complete(2), 1).unwrap(), 2);
        assert!(brute_force_min_pebbles(&complete(3), 2).unwrap() <= 3);
    }

    #[test]
    fn cut_counts_of_complete_trees() {
        // c(1) = 1, c(h) = 1 + c(h-1)^2
        let t = complete(4);
        assert_eq!(cuts(&t, t.root(), BRUTE_FORCE_CAP).unwrap().len(), 26);
    }
}
