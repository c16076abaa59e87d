use crate::blocks::Block;
use crate::error::{Error, Result};
use crate::linalg::SupportSet;

use super::{novel, Bits, CodingScheme, ComplexityTracker, SchemeSpec, TreeSpec};

/// Rooted tree whose first `variables` nodes are features; any remaining
/// nodes are structural (internal nodes of a leaf tree, or a virtual root).
#[derive(Debug, Clone, PartialEq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    variables: usize,
    root: usize,
    spec: Option<TreeSpec>,
}

impl RootedTree {
    /// Validates a parent array: exactly one root, no cycles.
    pub fn new(parent: Vec<Option<usize>>, variables: usize) -> Result<Self> {
        let len = parent.len();
        if variables == 0 || variables > len {
            return Err(Error::InvalidTree(format!(
                "{variables} variables for a tree of {len} nodes"
            )));
        }
        let roots: Vec<usize> = (0..len).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!("expected one root, found {}", roots.len())));
        }
        let mut children = vec![Vec::new(); len];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= len || p == v {
                    return Err(Error::InvalidTree(format!("node {v} has invalid parent {p}")));
                }
                children[p].push(v);
            }
        }
        let root = roots[0];
        let mut depth = vec![usize::MAX; len];
        depth[root] = 0;
        let mut stack = vec![root];
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                depth[c] = depth[v] + 1;
                reached += 1;
                stack.push(c);
            }
        }
        if reached != len {
            return Err(Error::InvalidTree("parent array contains a cycle".into()));
        }
        Ok(Self {
            parent,
            children,
            depth,
            variables,
            root,
            spec: None,
        })
    }

    /// Joins a forest under a virtual root (node `parent.len()`) when it has
    /// more than one root.
    pub fn from_forest(mut parent: Vec<Option<usize>>, variables: usize) -> Result<Self> {
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if roots > 1 {
            let virtual_root = parent.len();
            for p in parent.iter_mut() {
                if p.is_none() {
                    *p = Some(virtual_root);
                }
            }
            parent.push(None);
        }
        Self::new(parent, variables)
    }

    /// Balanced binary tree with the features `0..leaves` as leaves and
    /// internal nodes numbered from `leaves` upwards.
    pub fn balanced_binary(leaves: usize) -> Self {
        assert!(leaves >= 1, "a tree needs at least one leaf");
        let mut parent: Vec<Option<usize>> = vec![None; leaves];
        fn build(lo: usize, hi: usize, parent: &mut Vec<Option<usize>>) -> usize {
            if hi - lo == 1 {
                return lo;
            }
            let mid = lo + (hi - lo).div_ceil(2);
            let left = build(lo, mid, parent);
            let right = build(mid, hi, parent);
            let node = parent.len();
            parent.push(None);
            parent[left] = Some(node);
            parent[right] = Some(node);
            node
        }
        build(0, leaves, &mut parent);
        let mut t = Self::new(parent, leaves).expect("balanced tree is valid");
        t.spec = Some(TreeSpec::BinaryLeaves { leaves });
        t
    }

    pub(crate) fn with_spec(mut self, spec: TreeSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Proper ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.parent[v], move |&u| self.parent[u])
    }

    /// Whether every member's parent (when it is a feature) is also a member.
    pub fn is_parent_closed(&self, support: &SupportSet) -> bool {
        support.iter().all(|v| match self.parent[v] {
            Some(u) if u < self.variables => support.contains(u),
            _ => true,
        })
    }

    pub fn spec(&self) -> TreeSpec {
        self.spec.clone().unwrap_or_else(|| TreeSpec::Parents {
            variables: self.variables,
            parents: self.parent.clone(),
        })
    }
}

/// Hierarchical coding of the subtree `T(F)` spanned by the root and `F`.
///
/// Walking down from the root, every node of `T(F)` states which of its
/// children continue the subtree and, if it is a feature, whether it belongs
/// to `F`. A structural node with `d` children has `2^d - 1` choices (at
/// least one child continues), a feature node has `2^{d+1} - 1`. The code is
/// complete, so the Kraft sum is exactly one, and a binary leaf tree pays
/// `log₂ 3` per internal node.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeCoding {
    tree: RootedTree,
    node_bits: Vec<f64>,
}

impl TreeCoding {
    pub fn new(tree: RootedTree) -> Self {
        let node_bits = (0..tree.len())
            .map(|v| {
                let d = tree.children(v).len();
                match (v < tree.variables, d) {
                    (_, 0) => 0.0,
                    (true, d) => choice_bits(d + 1),
                    (false, d) => choice_bits(d),
                }
            })
            .collect();
        Self { tree, node_bits }
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn node_bits(&self, v: usize) -> f64 {
        self.node_bits[v]
    }

    /// Nodes of `T(F)`: the members of `support` and all their ancestors.
    pub fn spanned_nodes(&self, support: &SupportSet) -> Vec<usize> {
        let mut marked = vec![false; self.tree.len()];
        let mut out = Vec::new();
        for v in support.iter() {
            for u in std::iter::once(v).chain(self.tree.ancestors(v)) {
                if marked[u] {
                    break;
                }
                marked[u] = true;
                out.push(u);
            }
        }
        out
    }
}

/// `log₂(2^d - 1)`, stable for large `d`.
fn choice_bits(d: usize) -> f64 {
    if d < 50 {
        ((1u64 << d) as f64 - 1.0).log2()
    } else {
        d as f64
    }
}

impl CodingScheme for TreeCoding {
    fn dim(&self) -> usize {
        self.tree.variables
    }

    fn code_length(&self, support: &SupportSet) -> Bits {
        Bits::Finite(self.spanned_nodes(support).iter().map(|&u| self.node_bits[u]).sum())
    }

    fn fast_tracker(&self) -> Option<Box<dyn ComplexityTracker + '_>> {
        Some(Box::new(TreeTracker {
            coding: self,
            marked: vec![false; self.tree.len()],
            current: 0.0,
        }))
    }

    fn spec(&self) -> SchemeSpec {
        SchemeSpec::Tree {
            tree: self.tree.spec(),
        }
    }
}

/// `T(F)` is closed upwards, so a walk from a new element can stop at the
/// first node already marked.
struct TreeTracker<'a> {
    coding: &'a TreeCoding,
    marked: Vec<bool>,
    current: f64,
}

impl TreeTracker<'_> {
    fn new_internal(&self, block: &Block, in_support: &[bool]) -> (usize, Vec<usize>) {
        let mut fresh = Vec::new();
        let mut added = 0;
        for v in novel(block, in_support) {
            added += 1;
            for u in std::iter::once(v).chain(self.coding.tree.ancestors(v)) {
                if self.marked[u] || fresh.contains(&u) {
                    break;
                }
                fresh.push(u);
            }
        }
        (added, fresh)
    }
}

impl ComplexityTracker for TreeTracker<'_> {
    fn current(&self) -> Bits {
        Bits::Finite(self.current)
    }

    fn increment(&self, block: &Block, in_support: &[bool]) -> Bits {
        let (added, fresh) = self.new_internal(block, in_support);
        Bits::Finite(added as f64 + fresh.iter().map(|&u| self.coding.node_bits[u]).sum::<f64>())
    }

    fn commit(&mut self, block: &Block, in_support: &[bool]) {
        let inc = self.increment(block, in_support);
        let (_, fresh) = self.new_internal(block, in_support);
        for u in fresh {
            self.marked[u] = true;
        }
        self.current += inc.finite().unwrap_or(0.0);
    }
}
