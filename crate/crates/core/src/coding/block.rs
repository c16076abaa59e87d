use serde::{Deserialize, Serialize};

use crate::blocks::{Block, BlockSet, EXACT_COVER_LIMIT};
use crate::cover::{exact_cover, greedy_cover};
use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, SupportSet};

use super::{novel, Bits, CodingScheme, ComplexityTracker, SchemeSpec};

/// How [`BlockInducedCoding`] evaluates its cover minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    /// Branch and bound; only for `p ≤ 16`.
    Exact,
    /// Cost-effectiveness greedy cover.
    Greedy,
    /// Greedy cover for queries; the greedy solver's tracker charges
    /// `cl₀(B) + 1 + |B ∖ F|` per selected block.
    #[default]
    Tracked,
}

/// Block coding: `cl(F) = min Σ (cl₀(B_j) + 1)` over covers `F = ∪ B_j` by
/// base blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInducedCoding {
    blocks: BlockSet,
    mode: CoverMode,
}

impl BlockInducedCoding {
    pub fn new(blocks: BlockSet, mode: CoverMode) -> Result<Self> {
        if mode == CoverMode::Exact && blocks.p() > EXACT_COVER_LIMIT {
            return Err(Error::TooLarge {
                p: blocks.p(),
                limit: EXACT_COVER_LIMIT,
            });
        }
        Ok(Self { blocks, mode })
    }

    pub fn blocks(&self) -> &BlockSet {
        &self.blocks
    }

    pub fn mode(&self) -> CoverMode {
        self.mode
    }

    fn weight(b: &Block) -> f64 {
        (b.base_length + 1.0).to_f64()
    }

    /// Cover of `target` with union weight `union_weight`, drawing only from
    /// blocks inside `within` when given.
    fn cover(&self, target: &SupportSet, within: Option<&SupportSet>, union_weight: f64) -> Bits {
        let eligible = |b: &Block| within.is_none_or(|w| b.indices.is_subset(w));
        let found = if self.mode == CoverMode::Exact {
            let masks: Vec<(u64, f64)> = self
                .blocks
                .iter()
                .filter(|b| eligible(b))
                .map(|b| (b.indices.to_mask(), Self::weight(b)))
                .collect();
            exact_cover(target.to_mask(), &masks, union_weight)
        } else {
            let refs: Vec<(&SupportSet, f64)> = self
                .blocks
                .iter()
                .filter(|b| eligible(b))
                .map(|b| (&b.indices, Self::weight(b)))
                .collect();
            greedy_cover(self.blocks.p(), target, &refs, union_weight)
        };
        found.map_or(Bits::Infinite, |c| Bits::Finite(c.cost))
    }
}

impl CodingScheme for BlockInducedCoding {
    fn dim(&self) -> usize {
        self.blocks.p()
    }

    fn code_length(&self, support: &SupportSet) -> Bits {
        if support.is_empty() {
            return Bits::ZERO;
        }
        self.cover(support, Some(support), 0.0)
    }

    /// Minimises `|∪ B_j| + Σ (cl₀(B_j) + 1)` over covers of `supp(β)` that may
    /// spill outside it.
    fn vector_complexity(&self, beta: &CoefficientVector) -> Bits {
        if beta.support().is_empty() {
            return Bits::ZERO;
        }
        self.cover(beta.support(), None, 1.0)
    }

    fn fast_tracker(&self) -> Option<Box<dyn ComplexityTracker + '_>> {
        match self.mode {
            CoverMode::Tracked => Some(Box::new(SumTracker { current: 0.0 })),
            _ => None,
        }
    }

    fn spec(&self) -> SchemeSpec {
        SchemeSpec::BlockInduced {
            blocks: self.blocks.spec(),
            mode: self.mode,
        }
    }
}

/// Running `Σ (cl₀(B) + 1) + |F|` over the selected blocks.
struct SumTracker {
    current: f64,
}

impl ComplexityTracker for SumTracker {
    fn current(&self) -> Bits {
        Bits::Finite(self.current)
    }

    fn increment(&self, block: &Block, in_support: &[bool]) -> Bits {
        block.base_length + (1 + novel(block, in_support).count()) as f64
    }

    fn commit(&mut self, block: &Block, in_support: &[bool]) {
        if let Bits::Finite(v) = self.increment(block, in_support) {
            self.current += v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{line_connected_blocks, singleton_blocks};
    use crate::coding::{check_subadditive, kraft_sum, tracker_for};

    #[test]
    fn exact_mode_refuses_large_p() {
        let set = singleton_blocks(17).unwrap();
        assert!(BlockInducedCoding::new(set, CoverMode::Exact).is_err());
    }

    #[test]
    fn exact_block_coding_is_a_subadditive_coding_length() {
        let s = BlockInducedCoding::new(line_connected_blocks(8, 3).unwrap(), CoverMode::Exact).unwrap();
        assert!(kraft_sum(&s).unwrap() <= 1.0 + 1e-9);
        assert!(check_subadditive(&s).unwrap().holds);
    }

    #[test]
    fn interval_is_one_block() {
        let s = BlockInducedCoding::new(line_connected_blocks(8, 3).unwrap(), CoverMode::Exact).unwrap();
        let l = s.code_length(&SupportSet::new(vec![2, 3, 4])).finite().unwrap();
        assert!((l - (3.0 + 3.0 + 1.0)).abs() < 1e-12);
        // A run of four needs two blocks; the cheapest split is 1+3 or 2+2.
        let l = s.code_length(&SupportSet::new(vec![2, 3, 4, 5])).finite().unwrap();
        assert!((l - 12.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_bounds_exact_and_agrees_on_disjoint_blocks() {
        let set = line_connected_blocks(10, 3).unwrap();
        let exact = BlockInducedCoding::new(set.clone(), CoverMode::Exact).unwrap();
        let greedy = BlockInducedCoding::new(set, CoverMode::Greedy).unwrap();
        for m in 1u64..1 << 10 {
            let f = SupportSet::from_mask(m);
            assert!(greedy.code_length(&f) >= exact.code_length(&f));
        }
        let disjoint = singleton_blocks(6).unwrap();
        let e = BlockInducedCoding::new(disjoint.clone(), CoverMode::Exact).unwrap();
        let g = BlockInducedCoding::new(disjoint, CoverMode::Greedy).unwrap();
        let f = SupportSet::new(vec![0, 2, 5]);
        assert_eq!(e.code_length(&f), g.code_length(&f));
    }

    #[test]
    fn vector_complexity_may_spill() {
        // {0, 2}: two singletons cost 2·(4 + 1) + 2 = 12, the interval
        // {0, 1, 2} costs (6 + 1) + 3 = 10.
        let s = BlockInducedCoding::new(line_connected_blocks(8, 3).unwrap(), CoverMode::Exact).unwrap();
        let beta = CoefficientVector::new(vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = s.vector_complexity(&beta).finite().unwrap();
        let singles: f64 = 2.0 + 2.0 * (3.0 + 1.0 + 1.0);
        let triple = 3.0 + (3.0 + 3.0 + 1.0);
        assert!((v - singles.min(triple)).abs() < 1e-12);
        assert!(v <= s.complexity(beta.support()).finite().unwrap());
    }

    #[test]
    fn tracked_sum_charges_novel_elements() {
        let set = line_connected_blocks(8, 3).unwrap();
        let s = BlockInducedCoding::new(set.clone(), CoverMode::Tracked).unwrap();
        let mut t = tracker_for(&s);
        let mut mask = vec![false; 8];
        let a = set.iter().find(|b| b.indices == SupportSet::new(vec![1, 2, 3])).unwrap();
        let b = set.iter().find(|b| b.indices == SupportSet::new(vec![3, 4])).unwrap();
        assert_eq!(t.increment(a, &mask), Bits::Finite(3.0 + 3.0 + 1.0 + 3.0));
        t.commit(a, &mask);
        for j in a.indices.iter() {
            mask[j] = true;
        }
        assert_eq!(t.increment(b, &mask), Bits::Finite(3.0 + 2.0 + 1.0 + 1.0));
    }
}
