use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, SupportSet};

use super::{Bits, CodingScheme, SchemeSpec};

/// Strong group sparsity over a partition into `m` groups:
/// `cl(F) = g log₂(2m)` when `F` is a union of `g` groups, infinite
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCoding {
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

impl GroupCoding {
    pub fn new(p: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let group_of = validate_partition(p, &groups)?;
        Ok(Self { groups, group_of })
    }

    /// Consecutive groups of `size` (the last one possibly shorter).
    pub fn consecutive(p: usize, size: usize) -> Result<Self> {
        Self::new(p, consecutive_groups(p, size)?)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn bits_per_group(&self) -> f64 {
        (2.0 * self.groups.len() as f64).log2()
    }

    fn touched(&self, support: &SupportSet) -> Vec<usize> {
        let mut g: Vec<usize> = support.iter().map(|j| self.group_of[j]).collect();
        g.dedup();
        g.sort_unstable();
        g.dedup();
        g
    }
}

impl CodingScheme for GroupCoding {
    fn dim(&self) -> usize {
        self.group_of.len()
    }

    fn code_length(&self, support: &SupportSet) -> Bits {
        let touched = self.touched(support);
        let members: usize = touched.iter().map(|&g| self.groups[g].len()).sum();
        if members != support.len() {
            return Bits::Infinite;
        }
        Bits::Finite(touched.len() as f64 * self.bits_per_group())
    }

    /// Covers `supp(β)` by the groups it touches.
    fn vector_complexity(&self, beta: &CoefficientVector) -> Bits {
        let cover: SupportSet = self
            .touched(beta.support())
            .into_iter()
            .flat_map(|g| self.groups[g].iter().copied())
            .collect();
        self.complexity(&cover)
    }

    fn spec(&self) -> SchemeSpec {
        SchemeSpec::Group {
            p: self.dim(),
            groups: self.groups.clone(),
        }
    }
}

pub(crate) fn consecutive_groups(p: usize, size: usize) -> Result<Vec<Vec<usize>>> {
    if size == 0 || p == 0 {
        return Err(Error::InvalidArgument("group size and p must be positive".into()));
    }
    Ok((0..p).step_by(size).map(|s| (s..(s + size).min(p)).collect()).collect())
}

/// Returns the group index of every feature.
pub(crate) fn validate_partition(p: usize, groups: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut group_of = vec![usize::MAX; p];
    for (g, members) in groups.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::InvalidArgument(format!("group {g} is empty")));
        }
        for &j in members {
            if j >= p {
                return Err(Error::InvalidArgument(format!("group {g} has index {j} >= p = {p}")));
            }
            if group_of[j] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "feature {j} belongs to groups {} and {g}",
                    group_of[j]
                )));
            }
            group_of[j] = g;
        }
    }
    if let Some(j) = group_of.iter().position(|&g| g == usize::MAX) {
        return Err(Error::InvalidArgument(format!("feature {j} is in no group")));
    }
    Ok(group_of)
}
