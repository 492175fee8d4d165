use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One vertex of a [`FullBinaryTree`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub parent: Option<usize>,
    pub depth: usize,
    /// Left-to-right leaf label, for leaves.
    pub leaf: Option<usize>,
}

/// Shape of a full binary tree, used to build one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Shape {
    Leaf,
    Join(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn join(left: Shape, right: Shape) -> Shape {
        Shape::Join(Box::new(left), Box::new(right))
    }

    /// The perfect tree of the given height.
    pub fn perfect(height: u32) -> Shape {
        if height == 0 {
            Shape::Leaf
        } else {
            Shape::join(Shape::perfect(height - 1), Shape::perfect(height - 1))
        }
    }

    /// Joins the parts left to right, splitting as evenly as possible with
    /// the larger half on the left.
    pub fn balanced(parts: &[Shape]) -> Shape {
        match parts.len() {
            0 => panic!("cannot join zero parts"),
            1 => parts[0].clone(),
            k => {
                let (l, r) = parts.split_at(k.div_ceil(2));
                Shape::join(Shape::balanced(l), Shape::balanced(r))
            }
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Join(l, r) => l.leaves() + r.leaves(),
        }
    }
}

/// A binary tree in which every internal vertex has two children, with
/// leaves labelled `0..N` from left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullBinaryTree {
    nodes: Vec<Node>,
    root: usize,
    /// Node id of each leaf label.
    leaves: Vec<usize>,
    /// Inclusive leaf-label range below each node.
    ranges: Vec<(usize, usize)>,
}

impl FullBinaryTree {
    /// Builds the tree with node ids assigned in preorder.
    pub fn from_shape(shape: &Shape) -> Result<Self> {
        fn walk(shape: &Shape, links: &mut Vec<(Option<usize>, Option<usize>)>) -> usize {
            let id = links.len();
            links.push((None, None));
            if let Shape::Join(l, r) = shape {
                let a = walk(l, links);
                let b = walk(r, links);
                links[id] = (Some(a), Some(b));
            }
            id
        }
        let mut links = Vec::new();
        walk(shape, &mut links);
        Self::from_links(&links)
    }

    /// Builds a tree from `(left, right)` child links indexed by node id.
    pub fn from_links(links: &[(Option<usize>, Option<usize>)]) -> Result<Self> {
        let n = links.len();
        let mut parent = vec![None; n];
        for (id, &(l, r)) in links.iter().enumerate() {
            match (l, r) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    for c in [a, b] {
                        if c >= n {
                            return Err(Error::Tree(format!(
                                "node {id} links to missing node {c}"
                            )));
                        }
                        if c == id || parent[c].is_some() {
                            return Err(Error::Tree(format!("node {c} has more than one parent")));
                        }
                        parent[c] = Some(id);
                    }
                }
                _ => return Err(Error::Tree(format!("node {id} has exactly one child"))),
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        let [root] = roots[..] else {
            return Err(Error::Tree(format!(
                "expected one root, found {}",
                roots.len()
            )));
        };

        let mut nodes: Vec<Node> = (0..n)
            .map(|id| Node {
                id,
                left: links[id].0,
                right: links[id].1,
                parent: parent[id],
                depth: 0,
                leaf: None,
            })
            .collect();
        let mut ranges = vec![(0, 0); n];
        let mut leaves = Vec::new();
        let mut seen = 0;
        // Iterative in-order walk; a cycle would leave nodes unvisited.
        let mut stack = vec![(root, 0usize, false)];
        while let Some((v, depth, expanded)) = stack.pop() {
            nodes[v].depth = depth;
            match (nodes[v].left, nodes[v].right, expanded) {
                (None, None, _) => {
                    nodes[v].leaf = Some(leaves.len());
                    ranges[v] = (leaves.len(), leaves.len());
                    leaves.push(v);
                    seen += 1;
                }
                (Some(l), Some(r), false) => {
                    seen += 1;
                    stack.push((v, depth, true));
                    stack.push((r, depth + 1, false));
                    stack.push((l, depth + 1, false));
                }
                (Some(l), Some(r), true) => ranges[v] = (ranges[l].0, ranges[r].1),
                _ => unreachable!("links checked above"),
            }
        }
        if seen != n {
            return Err(Error::Tree(
                "not every node is reachable from the root".into(),
            ));
        }
        if leaves.len() < 2 {
            return Err(Error::Tree("a tree needs at least 2 leaves".into()));
        }
        Ok(Self {
            nodes,
            root,
            leaves,
            ranges,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].left.is_none()
    }

    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        let n = &self.nodes[id];
        n.left.zip(n.right)
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    pub fn depth(&self, id: usize) -> usize {
        self.nodes[id].depth
    }

    /// Node id of leaf `label`.
    pub fn leaf_node(&self, label: usize) -> usize {
        self.leaves[label]
    }

    pub fn leaf_label(&self, id: usize) -> Option<usize> {
        self.nodes[id].leaf
    }

    /// Inclusive range of leaf labels below `id`.
    pub fn leaf_range(&self, id: usize) -> (usize, usize) {
        self.ranges[id]
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| !self.is_leaf(v))
    }

    /// Proper ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.nodes[id].parent, |&v| self.nodes[v].parent)
    }

    /// Internal vertices from the root down to the parent of leaf `label`.
    pub fn path_to_leaf(&self, label: usize) -> Vec<usize> {
        let mut path: Vec<usize> = self.ancestors(self.leaves[label]).collect();
        path.reverse();
        path
    }

    /// Height of the subtree at `id` if it is perfect.
    pub fn perfect_height(&self, id: usize) -> Option<u32> {
        match self.children(id) {
            None => Some(0),
            Some((l, r)) => {
                let (a, b) = (self.perfect_height(l)?, self.perfect_height(r)?);
                (a == b).then_some(a + 1)
            }
        }
    }

    /// Leaves below `u` with their depth relative to `u`, left to right.
    pub fn leaves_below(&self, u: usize) -> Vec<(usize, usize)> {
        let (lo, hi) = self.ranges[u];
        let base = self.nodes[u].depth;
        (lo..=hi)
            .map(|label| {
                let id = self.leaves[label];
                (id, self.nodes[id].depth - base)
            })
            .collect()
    }

    /// The preorder shape of the tree.
    pub fn shape(&self) -> Shape {
        fn go(t: &FullBinaryTree, v: usize) -> Shape {
            match t.children(v) {
                None => Shape::Leaf,
                Some((l, r)) => Shape::join(go(t, l), go(t, r)),
            }
        }
        go(self, self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_leaves() {
        let t = FullBinaryTree::from_shape(&Shape::perfect(1)).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.path_to_leaf(1), vec![t.root()]);
        assert_eq!(t.leaf_range(t.root()), (0, 1));
    }

    #[test]
    fn balanced_six() {
        let parts = vec![Shape::Leaf; 6];
        let t = FullBinaryTree::from_shape(&Shape::balanced(&parts)).unwrap();
        assert_eq!(t.n_leaves(), 6);
        assert_eq!(t.internal_nodes().count(), 5);
        for label in 0..6 {
            assert_eq!(t.leaf_label(t.leaf_node(label)), Some(label));
        }
    }

    #[test]
    fn malformed_links_are_rejected() {
        assert!(FullBinaryTree::from_links(&[(Some(1), None), (None, None)]).is_err());
        assert!(FullBinaryTree::from_links(&[(None, None)]).is_err());
        // Node 2 claimed by two parents.
        let links = [
            (Some(1), Some(2)),
            (Some(2), Some(3)),
            (None, None),
            (None, None),
        ];
        assert!(FullBinaryTree::from_links(&links).is_err());
        // Two components.
        let links = [(Some(1), Some(2)), (None, None), (None, None), (None, None)];
        assert!(FullBinaryTree::from_links(&links).is_err());
    }

    #[test]
    fn perfect_height_detection() {
        let t =
            FullBinaryTree::from_shape(&Shape::join(Shape::perfect(2), Shape::perfect(1))).unwrap();
        assert_eq!(t.perfect_height(t.root()), None);
        let (l, r) = t.children(t.root()).unwrap();
        assert_eq!(t.perfect_height(l), Some(2));
        assert_eq!(t.perfect_height(r), Some(1));
    }
}
