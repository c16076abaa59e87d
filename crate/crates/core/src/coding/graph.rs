use crate::blocks::Block;
use crate::linalg::SupportSet;

use super::{novel, Bits, CodingScheme, ComplexityTracker, GraphSpec, SchemeSpec};

/// Undirected graph on `[0, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    spec: GraphSpec,
}

impl Graph {
    pub fn line(p: usize) -> Self {
        let edges = (1..p).map(|j| (j - 1, j));
        Self::build(p, edges, GraphSpec::Line { p })
    }

    /// 4-neighbour grid, row-major node numbering.
    pub fn grid(h: usize, w: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let v = r * w + c;
                if c + 1 < w {
                    edges.push((v, v + 1));
                }
                if r + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        Self::build(h * w, edges, GraphSpec::Grid { h, w })
    }

    pub fn from_edges(p: usize, edges: Vec<(usize, usize)>) -> crate::Result<Self> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= p || *b >= p) {
            return Err(crate::Error::InvalidArgument(format!(
                "edge ({a}, {b}) out of range for p = {p}"
            )));
        }
        let spec = GraphSpec::Edges {
            p,
            edges: edges.clone(),
        };
        Ok(Self::build(p, edges, spec))
    }

    fn build(p: usize, edges: impl IntoIterator<Item = (usize, usize)>, spec: GraphSpec) -> Self {
        let mut adjacency = vec![Vec::new(); p];
        for (a, b) in edges {
            if a != b && !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { adjacency, spec }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    /// Number of connected components of the subgraph induced by `support`.
    pub fn components(&self, support: &SupportSet) -> usize {
        let mut inside = vec![false; self.len()];
        for j in support.iter() {
            inside[j] = true;
        }
        let mut seen = vec![false; self.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in support.iter() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &u in &self.adjacency[v] {
                    if inside[u] && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    /// Whether `support` induces a connected subgraph.
    pub fn is_connected(&self, support: &SupportSet) -> bool {
        support.is_empty() || self.components(support) == 1
    }
}

/// Graph sparsity: `cl(F) = g·C_comp + C_node·|F|` where `g` is the number of
/// connected components of `F`.
///
/// Defaults: `C_comp = log₂ p` (uniform start position per component) and
/// `C_node = 1 + max degree` (one neighbourhood subset per grown node plus
/// the stop/jump flag), which gives the 5 bits per pixel of the 4-neighbour
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCoding {
    graph: Graph,
    node_bits: f64,
    component_bits: f64,
}

impl GraphCoding {
    pub fn new(graph: Graph) -> Self {
        let node_bits = 1.0 + graph.max_degree() as f64;
        let component_bits = (graph.len() as f64).log2();
        Self {
            graph,
            node_bits,
            component_bits,
        }
    }

    pub fn with_costs(graph: Graph, node_bits: f64, component_bits: f64) -> crate::Result<Self> {
        if !(node_bits.is_finite() && node_bits >= 0.0 && component_bits.is_finite() && component_bits >= 0.0) {
            return Err(crate::Error::InvalidArgument(
                "graph coding costs must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            graph,
            node_bits,
            component_bits,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_bits(&self) -> f64 {
        self.node_bits
    }

    pub fn component_bits(&self) -> f64 {
        self.component_bits
    }
}

impl CodingScheme for GraphCoding {
    fn dim(&self) -> usize {
        self.graph.len()
    }

    fn code_length(&self, support: &SupportSet) -> Bits {
        let g = self.graph.components(support) as f64;
        Bits::Finite(g * self.component_bits + self.node_bits * support.len() as f64)
    }

    fn fast_tracker(&self) -> Option<Box<dyn ComplexityTracker + '_>> {
        Some(Box::new(GraphTracker {
            coding: self,
            dsu: (0..self.graph.len()).collect(),
            size: 0,
            components: 0,
        }))
    }

    fn spec(&self) -> SchemeSpec {
        SchemeSpec::Graph {
            graph: self.graph.spec.clone(),
            node_bits: Some(self.node_bits),
            component_bits: Some(self.component_bits),
        }
    }
}

/// Union-find over the committed support; a block's increment only needs
/// the components its novel nodes touch.
struct GraphTracker<'a> {
    coding: &'a GraphCoding,
    dsu: Vec<usize>,
    size: usize,
    components: usize,
}

fn find(dsu: &[usize], mut v: usize) -> usize {
    while dsu[v] != v {
        v = dsu[v];
    }
    v
}

impl GraphTracker<'_> {
    /// `(new nodes, change in component count)` for adding `block`.
    fn delta(&self, block: &Block, in_support: &[bool]) -> (usize, isize) {
        let fresh: Vec<usize> = novel(block, in_support).collect();
        if fresh.is_empty() {
            return (0, 0);
        }
        // Local labels: fresh nodes first, then touched old components.
        let mut roots: Vec<usize> = Vec::new();
        let mut local: Vec<usize> = (0..fresh.len()).collect();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (a, &v) in fresh.iter().enumerate() {
            for &u in self.coding.graph.neighbors(v) {
                if in_support[u] {
                    let root = find(&self.dsu, u);
                    let idx = match roots.iter().position(|&r| r == root) {
                        Some(i) => i,
                        None => {
                            roots.push(root);
                            local.push(local.len());
                            roots.len() - 1
                        }
                    };
                    edges.push((a, fresh.len() + idx));
                } else if let Some(b) = fresh.iter().position(|&w| w == u) {
                    edges.push((a, b));
                }
            }
        }
        for (a, b) in edges {
            let (ra, rb) = (find(&local, a), find(&local, b));
            if ra != rb {
                local[ra] = rb;
            }
        }
        let merged = (0..local.len()).filter(|&i| local[i] == i).count();
        (fresh.len(), merged as isize - roots.len() as isize)
    }
}

impl ComplexityTracker for GraphTracker<'_> {
    fn current(&self) -> Bits {
        let c = self.coding;
        Bits::Finite(
            self.size as f64 * (1.0 + c.node_bits) + self.components as f64 * c.component_bits,
        )
    }

    fn increment(&self, block: &Block, in_support: &[bool]) -> Bits {
        let (added, dg) = self.delta(block, in_support);
        let c = self.coding;
        Bits::Finite(added as f64 * (1.0 + c.node_bits) + dg as f64 * c.component_bits)
    }

    fn commit(&mut self, block: &Block, in_support: &[bool]) {
        let (added, dg) = self.delta(block, in_support);
        self.size += added;
        self.components = (self.components as isize + dg) as usize;
        let fresh: Vec<usize> = novel(block, in_support).collect();
        for &v in &fresh {
            for &u in self.coding.graph.neighbors(v) {
                if in_support[u] || fresh.contains(&u) {
                    let (ra, rb) = (find(&self.dsu, v), find(&self.dsu, u));
                    if ra != rb {
                        self.dsu[ra] = rb;
                    }
                }
            }
        }
    }
}
