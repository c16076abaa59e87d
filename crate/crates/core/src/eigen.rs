//! Restricted eigenvalues, their complexity-restricted extremes, an empirical
//! structured-RIP check and the exhaustive constrained estimator used as a
//! ground-truth oracle on tiny problems.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;

use crate::coding::{Bits, CodingScheme};
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, residual, restricted_least_squares, CoefficientVector, DesignMatrix, SupportSet};
use crate::rng::derive_seed;
use crate::signals::gen_design_gaussian_raw;

/// Largest `p` for the complexity-restricted eigenvalue enumeration.
pub const EIG_ENUM_LIMIT: usize = 14;
/// Largest `p` for the exhaustive estimator.
pub const ORACLE_LIMIT: usize = 16;

/// Extreme restricted eigenvalues over a family of supports, with the
/// supports attaining them.
#[derive(Debug, Clone, PartialEq)]
pub struct EigBounds {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub argmin: SupportSet,
    pub argmax: SupportSet,
}

/// `(ρ₋(F), ρ₊(F))`: extreme eigenvalues of `X_Fᵀ X_F / n`.
pub fn restricted_eigs(x: &DesignMatrix, support: &SupportSet) -> Result<(f64, f64)> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("restricted eigenvalues need a nonempty support".into()));
    }
    if let Some(j) = support.iter().find(|&j| j >= x.p()) {
        return Err(Error::DimensionMismatch(format!("index {j} out of range for p = {}", x.p())));
    }
    let g = x.gram(support.as_slice()) / x.n() as f64;
    if support.len() == 1 {
        return Ok((g[(0, 0)], g[(0, 0)]));
    }
    let ev = SymmetricEigen::new(g).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    Ok((lo, hi))
}

fn check_enum(p: usize, limit: usize) -> Result<()> {
    if p > limit {
        Err(Error::TooLarge { p, limit })
    } else {
        Ok(())
    }
}

fn extremes<I>(x: &DesignMatrix, family: I) -> Result<EigBounds>
where
    I: Iterator<Item = SupportSet>,
{
    let mut best: Option<EigBounds> = None;
    for f in family {
        let (lo, hi) = restricted_eigs(x, &f)?;
        match &mut best {
            None => {
                best = Some(EigBounds {
                    rho_minus: lo,
                    rho_plus: hi,
                    argmin: f.clone(),
                    argmax: f,
                })
            }
            Some(b) => {
                if lo < b.rho_minus {
                    b.rho_minus = lo;
                    b.argmin = f.clone();
                }
                if hi > b.rho_plus {
                    b.rho_plus = hi;
                    b.argmax = f;
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no nonempty support fits the budget".into()))
}

/// `ρ₋(s)` and `ρ₊(s)`: extremes of the restricted eigenvalues over all
/// nonempty `F` with `c(F) ≤ s`, by enumeration (`p ≤ 14`).
pub fn rho_of_complexity(x: &DesignMatrix, scheme: &dyn CodingScheme, s: f64) -> Result<EigBounds> {
    let p = x.p();
    check_enum(p, EIG_ENUM_LIMIT)?;
    if scheme.dim() != p {
        return Err(Error::DimensionMismatch(format!("scheme p = {} but X has p = {p}", scheme.dim())));
    }
    let family = (1u64..1 << p)
        .map(SupportSet::from_mask)
        .filter(|f| scheme.complexity(f) <= Bits::Finite(s));
    extremes(x, family)
}

/// Extremes over all nonempty `F` with `|F| ≤ k` (standard sparsity at a
/// matched cardinality).
pub fn rho_of_cardinality(x: &DesignMatrix, k: usize) -> Result<EigBounds> {
    let p = x.p();
    check_enum(p, EIG_ENUM_LIMIT)?;
    let family = (1u64..1 << p)
        .filter(|m| m.count_ones() as usize <= k)
        .map(SupportSet::from_mask);
    extremes(x, family)
}

/// Largest cardinality among supports with `c(F) ≤ s`.
pub fn max_feasible_cardinality(scheme: &dyn CodingScheme, s: f64) -> Result<usize> {
    let p = scheme.dim();
    check_enum(p, EIG_ENUM_LIMIT)?;
    Ok((1u64..1 << p)
        .map(SupportSet::from_mask)
        .filter(|f| scheme.complexity(f) <= Bits::Finite(s))
        .map(|f| f.len())
        .max()
        .unwrap_or(0))
}

/// Sample size at which the structured-RIP inequality holds with probability
/// `1 - e^{-t}`: `(8/δ²)(ln 3 + t + s ln(1 + 8/δ))`.
pub fn rip_sample_bound(delta: f64, t: f64, s: f64) -> f64 {
    8.0 / (delta * delta) * (3f64.ln() + t + s * (1.0 + 8.0 / delta).ln())
}

/// One trial of [`check_structured_rip`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipTrial {
    pub trial: usize,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub pass: bool,
    /// `ρ₋` over all supports of the matched cardinality.
    pub rho_minus_standard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RipReport {
    pub n: usize,
    pub trials: Vec<RipTrial>,
}

impl RipReport {
    pub fn success_fraction(&self) -> f64 {
        let pass = self.trials.iter().filter(|t| t.pass).count();
        pass as f64 / self.trials.len().max(1) as f64
    }

    /// Whether the structured family never has a smaller `ρ₋` than the
    /// standard family of matched cardinality.
    pub fn structured_dominates(&self) -> bool {
        self.trials
            .iter()
            .all(|t| t.rho_minus >= t.rho_minus_standard - 1e-12)
    }
}

/// Draws `trials` unnormalised Gaussian `n × p` matrices and records whether
/// `1 - δ ≤ √ρ₋(s)` and `√ρ₊(s) ≤ 1 + δ`.
pub fn check_structured_rip(
    n: usize,
    scheme: &dyn CodingScheme,
    s: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<RipReport> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("δ = {delta} outside (0, 1)")));
    }
    let p = scheme.dim();
    check_enum(p, EIG_ENUM_LIMIT)?;
    let k = max_feasible_cardinality(scheme, s)?;
    if k == 0 {
        return Err(Error::Infeasible(format!("no support has complexity ≤ {s}")));
    }
    let rows = (0..trials)
        .into_par_iter()
        .map(|t| {
            let x = gen_design_gaussian_raw(n, p, derive_seed(seed, &[t as u64]))?;
            let b = rho_of_complexity(&x, scheme, s)?;
            let std = rho_of_cardinality(&x, k)?;
            Ok(RipTrial {
                trial: t,
                rho_minus: b.rho_minus,
                rho_plus: b.rho_plus,
                pass: b.rho_minus.sqrt() >= 1.0 - delta && b.rho_plus.sqrt() <= 1.0 + delta,
                rho_minus_standard: std.rho_minus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RipReport { n, trials: rows })
}

/// Minimiser found by an exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    pub coefficients: CoefficientVector,
    pub support: SupportSet,
    pub rss: f64,
    pub complexity: Bits,
}

/// Candidate ordering: smaller objective, then lower complexity, then fewer
/// elements, then lexicographically smaller support.
fn better(obj: f64, c: Bits, f: &SupportSet, best: &OracleFit, best_obj: f64) -> bool {
    let tol = 1e-12 * (1.0 + best_obj.abs());
    if obj < best_obj - tol {
        return true;
    }
    if obj > best_obj + tol {
        return false;
    }
    match c.partial_cmp(&best.complexity) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => (f.len(), f.as_slice()) < (best.support.len(), best.support.as_slice()),
    }
}

fn exhaustive(
    x: &DesignMatrix,
    y: &[f64],
    scheme: &dyn CodingScheme,
    feasible: impl Fn(Bits) -> bool,
    penalty: impl Fn(Bits) -> f64,
) -> Result<OracleFit> {
    let p = x.p();
    check_enum(p, ORACLE_LIMIT)?;
    if scheme.dim() != p {
        return Err(Error::DimensionMismatch(format!("scheme p = {} but X has p = {p}", scheme.dim())));
    }
    let mut best = OracleFit {
        coefficients: CoefficientVector::zeros(p),
        support: SupportSet::empty(),
        rss: norm_sq(y),
        complexity: Bits::ZERO,
    };
    let mut best_obj = best.rss;
    for m in 1u64..1 << p {
        let f = SupportSet::from_mask(m);
        let c = scheme.complexity(&f);
        if !feasible(c) {
            continue;
        }
        let beta = restricted_least_squares(x, y, &f)?;
        let rss = norm_sq(&residual(x, y, beta.values()));
        let obj = rss + penalty(c);
        if better(obj, c, &f, &best, best_obj) {
            best = OracleFit {
                coefficients: beta,
                support: f,
                rss,
                complexity: c,
            };
            best_obj = obj;
        }
    }
    Ok(best)
}

/// `argmin ‖Xβ - y‖²` subject to `c(supp β) ≤ s`, over every support
/// (`p ≤ 16`). Returns the zero model when no nonempty support is feasible.
pub fn exhaustive_constrained_solver(
    x: &DesignMatrix,
    y: &[f64],
    scheme: &dyn CodingScheme,
    s: f64,
) -> Result<OracleFit> {
    exhaustive(x, y, scheme, |c| c <= Bits::Finite(s), |_| 0.0)
}

/// `argmin ‖Xβ - y‖² + λ c(supp β)` over every support (`p ≤ 16`).
pub fn exhaustive_penalized_solver(
    x: &DesignMatrix,
    y: &[f64],
    scheme: &dyn CodingScheme,
    lambda: f64,
) -> Result<OracleFit> {
    exhaustive(x, y, scheme, |c| c.is_finite(), |c| lambda * c.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{GroupCoding, StandardCoding};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, p: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DesignMatrix::new(DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn scaled_orthonormal_columns() {
        let n = 4;
        let x = DesignMatrix::new(DMatrix::identity(n, 3) * (n as f64).sqrt()).unwrap();
        let (lo, hi) = restricted_eigs(&x, &SupportSet::new(vec![0, 1, 2])).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_has_zero_lower_eigenvalue() {
        let x = DesignMatrix::from_row_major(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]).unwrap();
        let (lo, hi) = restricted_eigs(&x, &SupportSet::new(vec![0, 1])).unwrap();
        assert!(lo.abs() < 1e-12);
        assert!((hi - 2.0 * 6.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_quotient_search_agrees() {
        let x = random(10, 4, 3);
        let (lo, hi) = restricted_eigs(&x, &SupportSet::new(vec![0, 1, 2, 3])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut qmin, mut qmax) = (f64::INFINITY, 0.0f64);
        for _ in 0..100_000 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = norm_sq(&x.mul_vec(&v)) / 10.0 / norm_sq(&v);
            qmin = qmin.min(q);
            qmax = qmax.max(q);
        }
        assert!(qmin >= lo - 1e-12 && qmax <= hi + 1e-12);
        assert!((qmin - lo) / hi < 2e-2 && (hi - qmax) / hi < 2e-2);
    }

    #[test]
    fn singleton_budget_gives_column_norm_extremes() {
        let x = random(6, 5, 1);
        let s = StandardCoding::new(5);
        let single = s.complexity(&SupportSet::new(vec![0])).to_f64();
        let b = rho_of_complexity(&x, &s, single).unwrap();
        let norms: Vec<f64> = (0..5).map(|j| norm_sq(x.column(j)) / 6.0).collect();
        let lo = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().copied().fold(0.0, f64::max);
        assert!((b.rho_minus - lo).abs() < 1e-12 && (b.rho_plus - hi).abs() < 1e-12);
        assert!(rho_of_complexity(&x, &s, single - 0.5).is_err());
    }

    #[test]
    fn single_group_budget_matches_per_group_eigs() {
        let x = random(10, 8, 2);
        let g = GroupCoding::consecutive(8, 2).unwrap();
        let budget = 2.0 + 8f64.log2();
        let b = rho_of_complexity(&x, &g, budget).unwrap();
        let per: Vec<(f64, f64)> = (0..4)
            .map(|i| restricted_eigs(&x, &SupportSet::new(vec![2 * i, 2 * i + 1])).unwrap())
            .collect();
        let lo = per.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        let hi = per.iter().map(|e| e.1).fold(0.0, f64::max);
        assert!((b.rho_minus - lo).abs() < 1e-12 && (b.rho_plus - hi).abs() < 1e-12);
    }

    #[test]
    fn eigen_bounds_are_monotone_in_budget() {
        let x = random(12, 8, 5);
        let s = StandardCoding::new(8);
        let mut prev: Option<EigBounds> = None;
        for k in 1..=4 {
            let b = rho_of_complexity(&x, &s, k as f64 * 5.0).unwrap();
            if let Some(p) = prev {
                assert!(b.rho_minus <= p.rho_minus + 1e-15 && b.rho_plus >= p.rho_plus - 1e-15);
            }
            prev = Some(b);
        }
    }

    #[test]
    fn oracle_with_large_budget_is_least_squares() {
        let x = random(10, 4, 7);
        let y: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let s = StandardCoding::new(4);
        let fit = exhaustive_constrained_solver(&x, &y, &s, 1e9).unwrap();
        let ls = restricted_least_squares(&x, &y, &SupportSet::new(vec![0, 1, 2, 3])).unwrap();
        for (a, b) in fit.coefficients.values().iter().zip(ls.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_recovers_noiseless_signal() {
        let x = random(8, 10, 4);
        let mut beta = vec![0.0; 10];
        beta[3] = 1.5;
        beta[7] = -2.0;
        let y = x.mul_vec(&beta);
        let s = StandardCoding::new(10);
        let budget = s.complexity(&SupportSet::new(vec![3, 7])).to_f64();
        let fit = exhaustive_constrained_solver(&x, &y, &s, budget).unwrap();
        assert_eq!(fit.support, SupportSet::new(vec![3, 7]));
        assert!(fit.rss < 1e-20);
        let none = exhaustive_constrained_solver(&x, &y, &s, 1.0).unwrap();
        assert!(none.support.is_empty());
    }

    #[test]
    fn penalized_oracle_trades_fit_for_complexity() {
        let x = random(8, 6, 11);
        let mut beta = vec![0.0; 6];
        beta[1] = 1.0;
        let y = x.mul_vec(&beta);
        let s = StandardCoding::new(6);
        assert_eq!(exhaustive_penalized_solver(&x, &y, &s, 1e-6).unwrap().support, SupportSet::new(vec![1]));
        assert!(exhaustive_penalized_solver(&x, &y, &s, 1e6).unwrap().support.is_empty());
    }

    #[test]
    fn rip_bound_formula() {
        let n = rip_sample_bound(0.5, 20f64.ln(), 1.0);
        let want = 32.0 * (3f64.ln() + 20f64.ln() + 17f64.ln());
        assert!((n - want).abs() < 1e-9);
    }

    #[test]
    fn scalar_rip_holds_for_tall_gaussian_columns() {
        // One feature at n = 200: ‖x‖²/n is chi-square/200, well inside
        // [(1-δ)², (1+δ)²] for δ = 0.3.
        let s = StandardCoding::new(1);
        let c = s.complexity(&SupportSet::new(vec![0])).to_f64();
        let r = check_structured_rip(200, &s, c, 0.3, 200, 17).unwrap();
        assert!(r.success_fraction() >= 0.99);
    }
}
