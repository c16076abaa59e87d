use crate::blocks::Block;
use crate::error::{Error, Result};
use crate::linalg::SupportSet;

use super::{novel, Bits, CodingScheme, ComplexityTracker, SchemeSpec};

/// `cl(F) = |F| log₂(2p)`: singleton blocks at `log₂ p` bits plus one bit
/// per block.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardCoding {
    p: usize,
}

impl StandardCoding {
    pub fn new(p: usize) -> Self {
        Self { p }
    }

    pub fn bits_per_feature(&self) -> f64 {
        (2.0 * self.p as f64).log2()
    }
}

impl CodingScheme for StandardCoding {
    fn dim(&self) -> usize {
        self.p
    }

    fn code_length(&self, support: &SupportSet) -> Bits {
        Bits::Finite(support.len() as f64 * self.bits_per_feature())
    }

    fn fast_tracker(&self) -> Option<Box<dyn ComplexityTracker + '_>> {
        let per = 1.0 + self.bits_per_feature();
        Some(Box::new(PerFeatureTracker {
            cost: vec![per; self.p],
            current: 0.0,
        }))
    }

    fn spec(&self) -> SchemeSpec {
        SchemeSpec::Standard { p: self.p }
    }
}

/// Singletons with individual base lengths `c_j`:
/// `cl(F) = |F| + Σ_{j∈F} c_j`, subject to `Σ_j 2^{-c_j} ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformSingletonCoding {
    costs: Vec<f64>,
}

impl NonUniformSingletonCoding {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::InvalidArgument("no feature costs".into()));
        }
        if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument(
                "feature costs must be finite and nonnegative".into(),
            ));
        }
        let kraft: f64 = costs.iter().map(|c| (-c).exp2()).sum();
        if kraft > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "feature costs violate Kraft: sum 2^-c_j = {kraft}"
            )));
        }
        Ok(Self { costs })
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }
}

impl CodingScheme for NonUniformSingletonCoding {
    fn dim(&self) -> usize {
        self.costs.len()
    }

    fn code_length(&self, support: &SupportSet) -> Bits {
        Bits::Finite(support.iter().map(|j| 1.0 + self.costs[j]).sum())
    }

    fn fast_tracker(&self) -> Option<Box<dyn ComplexityTracker + '_>> {
        Some(Box::new(PerFeatureTracker {
            cost: self.costs.iter().map(|c| 2.0 + c).collect(),
            current: 0.0,
        }))
    }

    fn spec(&self) -> SchemeSpec {
        SchemeSpec::NonUniform {
            costs: self.costs.clone(),
        }
    }
}

/// Complexity additive over features: `c(F) = Σ_{j∈F} cost_j`.
struct PerFeatureTracker {
    cost: Vec<f64>,
    current: f64,
}

impl ComplexityTracker for PerFeatureTracker {
    fn current(&self) -> Bits {
        Bits::Finite(self.current)
    }

    fn increment(&self, block: &Block, in_support: &[bool]) -> Bits {
        Bits::Finite(novel(block, in_support).map(|j| self.cost[j]).sum())
    }

    fn commit(&mut self, block: &Block, in_support: &[bool]) {
        self.current += novel(block, in_support).map(|j| self.cost[j]).sum::<f64>();
    }
}
