//! Weighted set cover, exact on bit masks and greedy on index lists.
//!
//! Both solvers minimise `Σ weight(B_j) + union_weight · |∪ B_j|` over block
//! collections whose union contains the target.

use crate::linalg::SupportSet;

/// A cover: total cost and the chosen block ids in selection order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cover {
    pub cost: f64,
    pub blocks: Vec<usize>,
}

/// Branch and bound over `p ≤ 64` masks. `blocks` are `(mask, weight)`
/// pairs; infinite weights are skipped.
pub(crate) fn exact_cover(target: u64, blocks: &[(u64, f64)], union_weight: f64) -> Option<Cover> {
    if target == 0 {
        return Some(Cover {
            cost: 0.0,
            blocks: Vec::new(),
        });
    }
    let usable: Vec<usize> = (0..blocks.len())
        .filter(|&i| blocks[i].1.is_finite() && blocks[i].0 & target != 0)
        .collect();
    // Blocks containing each target element, cheapest first.
    let mut by_elem: Vec<Vec<usize>> = vec![Vec::new(); 64];
    for &i in &usable {
        let mut m = blocks[i].0 & target;
        while m != 0 {
            let e = m.trailing_zeros() as usize;
            by_elem[e].push(i);
            m &= m - 1;
        }
    }
    for list in &mut by_elem {
        list.sort_by(|&a, &b| blocks[a].1.total_cmp(&blocks[b].1).then(a.cmp(&b)));
    }
    let mut best: Option<Cover> = None;
    let mut chosen = Vec::new();
    search(target, 0, 0.0, blocks, &by_elem, union_weight, &mut chosen, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn search(
    target: u64,
    covered: u64,
    cost: f64,
    blocks: &[(u64, f64)],
    by_elem: &[Vec<usize>],
    union_weight: f64,
    chosen: &mut Vec<usize>,
    best: &mut Option<Cover>,
) {
    let remaining = target & !covered;
    // Every uncovered target element still has to be paid for by the union.
    let bound = cost + union_weight * remaining.count_ones() as f64;
    if let Some(b) = best {
        if bound >= b.cost - 1e-12 {
            return;
        }
    }
    if remaining == 0 {
        let mut ids = chosen.clone();
        ids.sort_unstable();
        *best = Some(Cover { cost, blocks: ids });
        return;
    }
    let e = remaining.trailing_zeros() as usize;
    for &i in &by_elem[e] {
        let (mask, w) = blocks[i];
        let fresh = (mask & !covered).count_ones() as f64;
        chosen.push(i);
        search(
            target,
            covered | mask,
            cost + w + union_weight * fresh,
            blocks,
            by_elem,
            union_weight,
            chosen,
            best,
        );
        chosen.pop();
    }
}

/// Cost-effectiveness greedy: repeatedly take the block with the smallest
/// `(weight + union_weight · |B ∖ covered|) / |B ∩ uncovered target|`, lowest
/// id on ties. `None` if the finite blocks cannot cover the target.
pub(crate) fn greedy_cover(
    p: usize,
    target: &SupportSet,
    blocks: &[(&SupportSet, f64)],
    union_weight: f64,
) -> Option<Cover> {
    let mut covered = vec![false; p];
    let mut in_target = vec![false; p];
    for j in target.iter() {
        in_target[j] = true;
    }
    let mut left = target.len();
    let mut cost = 0.0;
    let mut ids = Vec::new();
    while left > 0 {
        let mut pick: Option<(f64, usize, usize)> = None;
        for (i, (b, w)) in blocks.iter().enumerate() {
            if !w.is_finite() {
                continue;
            }
            let hits = b.iter().filter(|&j| in_target[j] && !covered[j]).count();
            if hits == 0 {
                continue;
            }
            let fresh = b.iter().filter(|&j| !covered[j]).count();
            let total = w + union_weight * fresh as f64;
            let ratio = total / hits as f64;
            if pick.is_none_or(|(r, _, _)| ratio < r - 1e-12) {
                pick = Some((ratio, i, hits));
            }
        }
        let (_, i, hits) = pick?;
        let (b, w) = blocks[i];
        let fresh = b.iter().filter(|&j| !covered[j]).count();
        cost += w + union_weight * fresh as f64;
        for j in b.iter() {
            covered[j] = true;
        }
        left -= hits;
        ids.push(i);
    }
    Some(Cover { cost, blocks: ids })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_prefers_cheaper_overlap() {
        // Target {0,1,2}: {0,1,2} at 5 beats {0,1}+{2} at 3+3.
        let blocks = [(0b011, 3.0), (0b100, 3.0), (0b111, 5.0), (0b001, 1.0)];
        let c = exact_cover(0b111, &blocks, 0.0).unwrap();
        assert_eq!(c.cost, 5.0);
        assert_eq!(c.blocks, vec![2]);
        // With a union weight, spilling outside the target is charged.
        let blocks = [(0b1111, 1.0), (0b0011, 2.0)];
        let c = exact_cover(0b0011, &blocks, 1.0).unwrap();
        assert_eq!(c.cost, 4.0);
    }

    #[test]
    fn uncoverable_is_none() {
        assert!(exact_cover(0b10, &[(0b01, 1.0), (0b10, f64::INFINITY)], 0.0).is_none());
        let s = SupportSet::new(vec![1]);
        let b = SupportSet::new(vec![0]);
        assert!(greedy_cover(2, &s, &[(&b, 1.0)], 0.0).is_none());
    }

    #[test]
    fn greedy_is_an_upper_bound() {
        let sets: Vec<SupportSet> = [vec![0, 1, 2, 3], vec![0, 1], vec![2, 3], vec![4], vec![3, 4]]
            .into_iter()
            .map(SupportSet::new)
            .collect();
        let w = [6.0, 2.5, 2.5, 2.0, 1.5];
        let target = SupportSet::new(vec![0, 1, 2, 3, 4]);
        let refs: Vec<(&SupportSet, f64)> = sets.iter().zip(w).collect();
        let g = greedy_cover(5, &target, &refs, 0.0).unwrap();
        let masks: Vec<(u64, f64)> = sets.iter().map(|s| s.to_mask()).zip(w).collect();
        let e = exact_cover(target.to_mask(), &masks, 0.0).unwrap();
        assert!(g.cost >= e.cost - 1e-12);
        assert_eq!(e.cost, 6.5);
    }
}
