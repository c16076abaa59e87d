//! Base-block dictionaries with their base coding lengths `cl₀(B)`.
//!
//! Every builder assigns lengths whose Kraft sum over the finite blocks is at
//! most one: a `log₂ p` start position plus a size-dependent prefix.

use serde::{Deserialize, Serialize};

use crate::coding::{Bits, CodingScheme, TreeSpec};
use crate::cover;
use crate::eigen;
use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, DesignMatrix, SupportSet};
use crate::coding::RootedTree;

/// Largest `p` for which exact covers are computed.
pub const EXACT_COVER_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub indices: SupportSet,
    pub base_length: Bits,
}

impl Block {
    pub fn new(indices: SupportSet, base_length: Bits) -> Self {
        Self {
            indices,
            base_length,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Dictionary `𝓑` over `[0, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSet {
    p: usize,
    blocks: Vec<Block>,
    origin: Option<BlockSetSpec>,
}

/// JSON descriptor of a block set, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BlockSetSpec {
    Singletons {
        p: usize,
    },
    Groups {
        p: usize,
        groups: Vec<Vec<usize>>,
    },
    ConsecutiveGroups {
        p: usize,
        size: usize,
    },
    Line {
        p: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_size: Option<usize>,
    },
    Grid {
        h: usize,
        w: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_size: Option<usize>,
    },
    Tree {
        tree: TreeSpec,
    },
    Explicit {
        p: usize,
        blocks: Vec<ExplicitBlock>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitBlock {
    pub indices: Vec<usize>,
    pub base_length: Bits,
}

impl BlockSetSpec {
    pub fn build(&self) -> Result<BlockSet> {
        let set = match self {
            BlockSetSpec::Singletons { p } => singleton_blocks(*p)?,
            BlockSetSpec::Groups { p, groups } => group_blocks(*p, groups.clone())?,
            BlockSetSpec::ConsecutiveGroups { p, size } => {
                group_blocks(*p, crate::coding::consecutive_groups(*p, *size)?)?
            }
            BlockSetSpec::Line { p, max_size } => {
                line_connected_blocks(*p, max_size.unwrap_or_else(|| default_max_block(*p)))?
            }
            BlockSetSpec::Grid { h, w, max_size } => grid_connected_blocks(
                *h,
                *w,
                max_size.unwrap_or_else(|| default_max_block(h * w)),
            )?,
            BlockSetSpec::Tree { tree } => tree_blocks(&tree.build()?)?,
            BlockSetSpec::Explicit { p, blocks } => BlockSet::new(
                *p,
                blocks
                    .iter()
                    .map(|b| Block::new(SupportSet::new(b.indices.clone()), b.base_length))
                    .collect(),
            )?,
        };
        Ok(set.with_origin(self.clone()))
    }
}

impl BlockSet {
    /// Validates coverage, singleton presence and the base-block Kraft sum.
    pub fn new(p: usize, blocks: Vec<Block>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidBlockSet("p must be positive".into()));
        }
        let mut singleton = vec![false; p];
        let mut kraft = 0.0;
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidBlockSet(format!("block {i} is empty")));
            }
            if let Some(j) = b.indices.iter().find(|&j| j >= p) {
                return Err(Error::InvalidBlockSet(format!("block {i} has index {j} ≥ p = {p}")));
            }
            if let Bits::Finite(l) = b.base_length {
                if !(l.is_finite() && l >= 0.0) {
                    return Err(Error::InvalidBlockSet(format!("block {i} has length {l}")));
                }
            }
            if b.len() == 1 {
                singleton[b.indices.as_slice()[0]] = true;
            }
            kraft += b.base_length.kraft_term();
        }
        if let Some(j) = singleton.iter().position(|s| !s) {
            return Err(Error::InvalidBlockSet(format!("singleton {{{j}}} is missing")));
        }
        if kraft > 1.0 + 1e-9 {
            return Err(Error::InvalidBlockSet(format!("base-block Kraft sum {kraft} exceeds 1")));
        }
        Ok(Self {
            p,
            blocks,
            origin: None,
        })
    }

    fn with_origin(mut self, spec: BlockSetSpec) -> Self {
        self.origin = Some(spec);
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn get(&self, id: usize) -> &Block {
        &self.blocks[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter()
    }

    /// `Σ 2^{-cl₀(B)}` over the finite blocks.
    pub fn kraft_sum(&self) -> f64 {
        self.blocks.iter().map(|b| b.base_length.kraft_term()).sum()
    }

    /// Descriptor that rebuilds this set; explicit when built by hand.
    pub fn spec(&self) -> BlockSetSpec {
        self.origin.clone().unwrap_or_else(|| BlockSetSpec::Explicit {
            p: self.p,
            blocks: self
                .blocks
                .iter()
                .map(|b| ExplicitBlock {
                    indices: b.indices.as_slice().to_vec(),
                    base_length: b.base_length,
                })
                .collect(),
        })
    }
}

/// `max(2, ⌈log₂ p⌉)`.
pub fn default_max_block(p: usize) -> usize {
    let bits = usize::BITS - p.saturating_sub(1).leading_zeros();
    (bits as usize).max(2)
}

fn log2(p: usize) -> f64 {
    (p as f64).log2()
}

/// `p` singletons at `log₂ p` bits each.
pub fn singleton_blocks(p: usize) -> Result<BlockSet> {
    let l = log2(p);
    BlockSet::new(
        p,
        (0..p).map(|j| Block::new(SupportSet::new(vec![j]), Bits::Finite(l))).collect(),
    )
}

/// Group blocks at `log₂ m` bits followed by infinite-length singletons.
pub fn group_blocks(p: usize, groups: Vec<Vec<usize>>) -> Result<BlockSet> {
    crate::coding::GroupCoding::new(p, groups.clone())?;
    let l = log2(groups.len());
    let mut blocks: Vec<Block> = groups
        .into_iter()
        .map(|g| Block::new(SupportSet::new(g), Bits::Finite(l)))
        .collect();
    blocks.extend((0..p).map(|j| Block::new(SupportSet::new(vec![j]), Bits::Infinite)));
    BlockSet::new(p, blocks)
}

/// All intervals of length `1..=max_size`, ordered by length then start; an
/// interval of length `ℓ` costs `log₂ p + ℓ` bits.
pub fn line_connected_blocks(p: usize, max_size: usize) -> Result<BlockSet> {
    if max_size == 0 || max_size > p {
        return Err(Error::InvalidArgument(format!(
            "block size {max_size} outside [1, {p}]"
        )));
    }
    let mut blocks = Vec::new();
    for len in 1..=max_size {
        for start in 0..=p - len {
            blocks.push(Block::new(
                (start..start + len).collect(),
                Bits::Finite(log2(p) + len as f64),
            ));
        }
    }
    BlockSet::new(p, blocks)
}

/// Axis-aligned rectangles of area at most `max_size` on a row-major
/// `h × w` grid, ordered by area, then height, then position.
///
/// A rectangle of area `a` costs `log₂ p + a + log₂ S_a`, where `S_a` is the
/// number of rectangle shapes of area `a` that fit in the grid: position,
/// then area in unary, then shape.
pub fn grid_connected_blocks(h: usize, w: usize, max_size: usize) -> Result<BlockSet> {
    let p = h * w;
    if p == 0 || max_size == 0 {
        return Err(Error::InvalidArgument("grid and block size must be positive".into()));
    }
    let mut blocks = Vec::new();
    for area in 1..=max_size.min(p) {
        let shapes: Vec<(usize, usize)> = (1..=h.min(area))
            .filter(|rh| area % rh == 0 && area / rh <= w)
            .map(|rh| (rh, area / rh))
            .collect();
        if shapes.is_empty() {
            continue;
        }
        let bits = log2(p) + area as f64 + log2(shapes.len());
        for &(rh, rw) in &shapes {
            for r in 0..=h - rh {
                for c in 0..=w - rw {
                    let cells = (r..r + rh).flat_map(|i| (c..c + rw).map(move |k| i * w + k));
                    blocks.push(Block::new(cells.collect(), Bits::Finite(bits)));
                }
            }
        }
    }
    BlockSet::new(p, blocks)
}

/// Root paths `{v} ∪ ancestors(v)` restricted to feature nodes, then the
/// remaining singletons, all at `log₂ p + 1` bits. Paths come first, ordered
/// by node.
pub fn tree_blocks(tree: &RootedTree) -> Result<BlockSet> {
    let p = tree.variables();
    let bits = Bits::Finite(log2(p) + 1.0);
    let mut blocks = Vec::with_capacity(2 * p);
    let mut singleton_done = vec![false; p];
    for v in 0..p {
        let path: SupportSet = std::iter::once(v)
            .chain(tree.ancestors(v))
            .filter(|&u| u < p)
            .collect();
        if path.len() == 1 {
            singleton_done[v] = true;
        }
        blocks.push(Block::new(path, bits));
    }
    for v in 0..p {
        if !singleton_done[v] {
            blocks.push(Block::new(SupportSet::new(vec![v]), bits));
        }
    }
    BlockSet::new(p, blocks)
}

/// `(ρ₀(𝓑), c₀(𝓑))`: the largest restricted eigenvalue `ρ₊(B)` of
/// `X_Bᵀ X_B / n` and the largest complexity `c(B)` over finite blocks.
pub fn block_set_stats(
    set: &BlockSet,
    x: &DesignMatrix,
    scheme: &dyn CodingScheme,
) -> Result<(f64, Bits)> {
    let mut rho: f64 = 0.0;
    let mut c0 = Bits::ZERO;
    for b in set.iter().filter(|b| b.base_length.is_finite()) {
        let (_, hi) = eigen::restricted_eigs(x, &b.indices)?;
        rho = rho.max(hi);
        let c = scheme.complexity(&b.indices);
        if c > c0 {
            c0 = c;
        }
    }
    Ok((rho, c0))
}

/// `min { Σ c(B_j) : supp(β) ⊆ ∪ B_j }` over finite blocks: exact for
/// `p ≤ 16`, greedy upper bound otherwise. Infinite if no finite cover
/// exists.
pub fn block_cover_complexity(
    beta: &CoefficientVector,
    set: &BlockSet,
    scheme: &dyn CodingScheme,
) -> Bits {
    let exact = set.p() <= EXACT_COVER_LIMIT;
    block_cover_complexity_with(beta, set, scheme, exact)
}

/// [`block_cover_complexity`] with the solver chosen explicitly.
pub fn block_cover_complexity_with(
    beta: &CoefficientVector,
    set: &BlockSet,
    scheme: &dyn CodingScheme,
    exact: bool,
) -> Bits {
    let target = beta.support();
    let weights: Vec<f64> = set
        .iter()
        .map(|b| match b.base_length {
            Bits::Finite(_) => scheme.complexity(&b.indices).to_f64(),
            Bits::Infinite => f64::INFINITY,
        })
        .collect();
    let cover = if exact && set.p() <= EXACT_COVER_LIMIT {
        let masks: Vec<(u64, f64)> = set
            .iter()
            .zip(&weights)
            .map(|(b, &w)| (b.indices.to_mask(), w))
            .collect();
        cover::exact_cover(target.to_mask(), &masks, 0.0)
    } else {
        let refs: Vec<(&SupportSet, f64)> =
            set.iter().map(|b| &b.indices).zip(weights.iter().copied()).collect();
        cover::greedy_cover(set.p(), target, &refs, 0.0)
    };
    cover.map_or(Bits::Infinite, |c| Bits::Finite(c.cost))
}
