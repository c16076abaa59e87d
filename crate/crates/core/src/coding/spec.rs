use serde::{Deserialize, Serialize};

use crate::blocks::BlockSetSpec;
use crate::error::{Error, Result};
use crate::wavelet;

use super::{
    BlockInducedCoding, CodingScheme, CoverMode, Graph, GraphCoding, GroupCoding,
    NonUniformSingletonCoding, RootedTree, StandardCoding, TreeCoding,
};

/// JSON descriptor of a coding scheme, tagged by `kind`.
///
/// ```json
/// {"kind": "graph", "graph": {"kind": "grid", "h": 16, "w": 16}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemeSpec {
    Standard {
        p: usize,
    },
    NonUniform {
        costs: Vec<f64>,
    },
    Group {
        p: usize,
        groups: Vec<Vec<usize>>,
    },
    ConsecutiveGroups {
        p: usize,
        size: usize,
    },
    Graph {
        graph: GraphSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        node_bits: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        component_bits: Option<f64>,
    },
    Tree {
        tree: TreeSpec,
    },
    BlockInduced {
        blocks: BlockSetSpec,
        #[serde(default)]
        mode: CoverMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSpec {
    Line { p: usize },
    Grid { h: usize, w: usize },
    Edges { p: usize, edges: Vec<(usize, usize)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TreeSpec {
    /// Balanced binary tree with the features as leaves.
    BinaryLeaves { leaves: usize },
    /// Haar coefficient tree of an `h × w` image.
    Wavelet { h: usize, w: usize, levels: usize },
    /// Explicit parent array; nodes `0..variables` are features.
    Parents {
        variables: usize,
        parents: Vec<Option<usize>>,
    },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Line { p } => {
                nonzero(*p)?;
                Ok(Graph::line(*p))
            }
            GraphSpec::Grid { h, w } => {
                nonzero(h * w)?;
                Ok(Graph::grid(*h, *w))
            }
            GraphSpec::Edges { p, edges } => {
                nonzero(*p)?;
                Graph::from_edges(*p, edges.clone())
            }
        }
    }
}

impl TreeSpec {
    pub fn build(&self) -> Result<RootedTree> {
        match self {
            TreeSpec::BinaryLeaves { leaves } => {
                nonzero(*leaves)?;
                Ok(RootedTree::balanced_binary(*leaves))
            }
            TreeSpec::Wavelet { h, w, levels } => {
                Ok(wavelet::wavelet_tree(*h, *w, *levels)?.to_rooted_tree())
            }
            TreeSpec::Parents { variables, parents } => {
                Ok(RootedTree::new(parents.clone(), *variables)?.with_spec(self.clone()))
            }
        }
    }
}

impl SchemeSpec {
    pub fn build(&self) -> Result<Box<dyn CodingScheme>> {
        Ok(match self {
            SchemeSpec::Standard { p } => {
                nonzero(*p)?;
                Box::new(StandardCoding::new(*p))
            }
            SchemeSpec::NonUniform { costs } => Box::new(NonUniformSingletonCoding::new(costs.clone())?),
            SchemeSpec::Group { p, groups } => Box::new(GroupCoding::new(*p, groups.clone())?),
            SchemeSpec::ConsecutiveGroups { p, size } => Box::new(GroupCoding::consecutive(*p, *size)?),
            SchemeSpec::Graph {
                graph,
                node_bits,
                component_bits,
            } => {
                let g = graph.build()?;
                match (node_bits, component_bits) {
                    (None, None) => Box::new(GraphCoding::new(g)),
                    _ => {
                        let default = GraphCoding::new(g.clone());
                        Box::new(GraphCoding::with_costs(
                            g,
                            node_bits.unwrap_or(default.node_bits()),
                            component_bits.unwrap_or(default.component_bits()),
                        )?)
                    }
                }
            }
            SchemeSpec::Tree { tree } => Box::new(TreeCoding::new(tree.build()?)),
            SchemeSpec::BlockInduced { blocks, mode } => {
                Box::new(BlockInducedCoding::new(blocks.build()?, *mode)?)
            }
        })
    }
}

fn nonzero(p: usize) -> Result<()> {
    if p == 0 {
        Err(Error::InvalidArgument("dimension must be positive".into()))
    } else {
        Ok(())
    }
}
