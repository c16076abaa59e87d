//! Property-check suites behind `structsparse check`.
//!
//! Each suite runs a fixed, seeded battery and reports one line per case.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blocks::line_connected_blocks;
use crate::coding::{
    check_subadditive, kraft_sum, BlockInducedCoding, CodingScheme, CoverMode, Graph, GraphCoding, GroupCoding,
    NonUniformSingletonCoding, RootedTree, StandardCoding, TreeCoding,
};
use crate::eigen::{check_structured_rip, exhaustive_constrained_solver, rip_sample_bound};
use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, SupportSet};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::signals::{add_noise, gen_design_gaussian};
use crate::structomp::{struct_omp, GreedyConfig};
use crate::wavelet::{haar2_forward, haar2_inverse, max_levels, Image};

/// Kraft sums may exceed 1 by this much.
pub const KRAFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Kraft,
    Subadditive,
    Rip,
    Oracle,
    Haar,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Kraft, Suite::Subadditive, Suite::Rip, Suite::Oracle, Suite::Haar];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kraft => "kraft",
            Suite::Subadditive => "subadditive",
            Suite::Rip => "rip",
            Suite::Oracle => "oracle",
            Suite::Haar => "haar",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckCase {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: Suite,
    pub cases: Vec<CheckCase>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            writeln!(
                f,
                "[{}] {} {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                self.suite.name(),
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn case(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckCase {
    CheckCase {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<CheckReport> {
    let cases = match suite {
        Suite::Kraft => kraft_cases()?,
        Suite::Subadditive => subadditive_cases()?,
        Suite::Rip => rip_cases(seed)?,
        Suite::Oracle => oracle_cases(seed)?,
        Suite::Haar => haar_cases(seed)?,
    };
    Ok(CheckReport { suite, cases })
}

/// Shipped schemes at small `p`, as named instances.
pub fn kraft_schemes() -> Result<Vec<(String, Box<dyn CodingScheme>)>> {
    let p = 10;
    let mut costs = vec![(p as f64).log2(); p];
    costs[0] = 1.0;
    costs[1] = 2.0;
    let line_exact = BlockInducedCoding::new(line_connected_blocks(p, 3)?, CoverMode::Exact)?;
    Ok(vec![
        ("standard p=10".into(), Box::new(StandardCoding::new(p))),
        (
            "non-uniform p=10".into(),
            Box::new(NonUniformSingletonCoding::new(normalise_costs(costs))?),
        ),
        ("group p=10 size 2".into(), Box::new(GroupCoding::consecutive(p, 2)?)),
        ("block-induced exact line p=10".into(), Box::new(line_exact)),
        (
            "tree binary 8 leaves".into(),
            Box::new(TreeCoding::new(RootedTree::balanced_binary(8))),
        ),
        ("tree wavelet 4x2".into(), Box::new(TreeCoding::new(crate::wavelet::wavelet_tree(2, 4, 1)?.to_rooted_tree()))),
        ("graph path p=10".into(), Box::new(GraphCoding::new(Graph::line(p)))),
        ("graph grid 3x3".into(), Box::new(GraphCoding::new(Graph::grid(3, 3)))),
    ])
}

/// Raises costs until `Σ 2^{-c_j} ≤ 1`.
fn normalise_costs(mut costs: Vec<f64>) -> Vec<f64> {
    let s: f64 = costs.iter().map(|c| (-c).exp2()).sum();
    if s > 1.0 {
        let shift = s.log2();
        costs.iter_mut().for_each(|c| *c += shift);
    }
    costs
}

fn kraft_cases() -> Result<Vec<CheckCase>> {
    kraft_schemes()?
        .into_iter()
        .map(|(name, s)| {
            let k = kraft_sum(s.as_ref())?;
            Ok(case(name, k <= 1.0 + KRAFT_TOL, format!("sum = {k:.12}")))
        })
        .collect()
}

fn subadditive_cases() -> Result<Vec<CheckCase>> {
    let schemes: Vec<(&str, Box<dyn CodingScheme>)> = vec![
        ("standard p=10", Box::new(StandardCoding::new(10))),
        (
            "block-induced exact line p=10",
            Box::new(BlockInducedCoding::new(line_connected_blocks(10, 3)?, CoverMode::Exact)?),
        ),
        ("graph path p=10", Box::new(GraphCoding::new(Graph::line(10)))),
        ("graph grid 3x3", Box::new(GraphCoding::new(Graph::grid(3, 3)))),
    ];
    schemes
        .into_iter()
        .map(|(name, s)| {
            let r = check_subadditive(s.as_ref())?;
            let detail = match &r.counterexample {
                None => "holds over all pairs".to_string(),
                Some((a, b)) => format!("violated at {:?} ∪ {:?}", a.as_slice(), b.as_slice()),
            };
            Ok(case(name, r.holds, detail))
        })
        .collect()
}

/// Parameters of the structured-RIP check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipSetup {
    pub p: usize,
    pub group_size: usize,
    pub delta: f64,
    /// Confidence parameter; failure probability `e^{-t}`.
    pub t: f64,
    pub trials: usize,
}

impl Default for RipSetup {
    fn default() -> Self {
        Self {
            p: 12,
            group_size: 2,
            delta: 0.5,
            t: 20f64.ln(),
            trials: 200,
        }
    }
}

/// Group scheme, budget (one group) and the theorem's sample size.
pub fn rip_instance(setup: &RipSetup) -> Result<(GroupCoding, f64, usize)> {
    let scheme = GroupCoding::consecutive(setup.p, setup.group_size)?;
    let s = scheme
        .complexity(&SupportSet::new((0..setup.group_size).collect()))
        .to_f64();
    let n = rip_sample_bound(setup.delta, setup.t, s).ceil() as usize;
    Ok((scheme, s, n))
}

fn rip_cases(seed: u64) -> Result<Vec<CheckCase>> {
    let setup = RipSetup::default();
    let (scheme, s, n) = rip_instance(&setup)?;
    let report = check_structured_rip(n, &scheme, s, setup.delta, setup.trials, seed)?;
    let frac = report.success_fraction();
    Ok(vec![
        case(
            format!("group p={} δ={} n={n}", setup.p, setup.delta),
            frac >= 1.0 - (-setup.t).exp(),
            format!("success fraction {frac:.3} over {} trials", setup.trials),
        ),
        case(
            "structured ρ₋ ≥ matched-cardinality ρ₋",
            report.structured_dominates(),
            "on every trial matrix",
        ),
    ])
}

/// One oracle-comparison instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrial {
    /// Oracle residual ≤ StructOMP residual at the same budget (noisy).
    pub dominates: bool,
    /// Noiseless StructOMP support equals the oracle support.
    pub support_match: bool,
    pub oracle_rss: f64,
    pub greedy_rss: f64,
}

/// Size of the oracle instances. Supports priced within `4·c(β̄)` can
/// cover every coordinate, so `n = p` keeps `ρ₋` positive at that budget.
pub const ORACLE_P: usize = 12;
pub const ORACLE_N: usize = ORACLE_P;

/// Truth made of one or two random line blocks of size ≤ 3 with magnitudes
/// in `[1, 2]`; StructOMP and the exhaustive solver share line blocks and
/// line graph coding.
pub fn oracle_trial(seed: u64) -> Result<OracleTrial> {
    let blocks = line_connected_blocks(ORACLE_P, 3)?;
    let scheme = GraphCoding::new(Graph::line(ORACLE_P));
    let mut rng = stream_rng(seed, Stream::Check);
    let mut support = SupportSet::empty();
    for _ in 0..rng.random_range(1..=2) {
        let b = blocks
            .blocks()
            .choose(&mut rng)
            .ok_or_else(|| Error::InvalidBlockSet("empty".into()))?;
        support = support.union(&b.indices);
    }
    let mut beta = vec![0.0; ORACLE_P];
    for j in support.iter() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        beta[j] = sign * rng.random_range(1.0..=2.0);
    }
    let truth = CoefficientVector::new(beta);
    let c_true = scheme.complexity(truth.support()).to_f64();
    let x = gen_design_gaussian(ORACLE_N, ORACLE_P, seed)?;
    let clean = x.mul_vec(truth.values());

    let noisy = add_noise(&clean, 0.05, seed)?;
    let greedy = struct_omp(&x, &noisy, &blocks, &scheme, &GreedyConfig::with_budget(c_true))?;
    let oracle = exhaustive_constrained_solver(&x, &noisy, &scheme, c_true)?;
    let greedy_rss = greedy.selected().residual_norm.powi(2);
    let dominates = oracle.rss <= greedy_rss * (1.0 + 1e-9) + 1e-12;

    // Inflated greedy budget against the oracle at the true complexity; at
    // 4·c(β̄) itself many supports fit noiseless data exactly.
    let greedy = struct_omp(&x, &clean, &blocks, &scheme, &GreedyConfig::with_budget(4.0 * c_true))?;
    let oracle_clean = exhaustive_constrained_solver(&x, &clean, &scheme, c_true)?;
    let support_match =
        greedy.selected().coefficients.support_above(1e-6) == oracle_clean.coefficients.support_above(1e-6);
    Ok(OracleTrial {
        dominates,
        support_match,
        oracle_rss: oracle.rss,
        greedy_rss,
    })
}

fn oracle_cases(seed: u64) -> Result<Vec<CheckCase>> {
    use rayon::prelude::*;
    let trials = 100;
    let runs = (0..trials)
        .into_par_iter()
        .map(|t| oracle_trial(derive_seed(seed, &[t as u64])))
        .collect::<Result<Vec<_>>>()?;
    let dom = runs.iter().filter(|r| r.dominates).count();
    let hit = runs.iter().filter(|r| r.support_match).count();
    Ok(vec![
        case(
            "exhaustive residual ≤ StructOMP residual",
            dom == trials,
            format!("{dom}/{trials} instances"),
        ),
        case(
            "noiseless StructOMP at 4·c(β̄) matches oracle support at c(β̄)",
            hit * 10 >= trials * 9,
            format!("{hit}/{trials} instances"),
        ),
    ])
}

fn haar_cases(seed: u64) -> Result<Vec<CheckCase>> {
    let mut rng = stream_rng(seed, Stream::Check);
    let mut out = Vec::new();
    for (h, w) in [(8, 8), (16, 32), (64, 64), (1, 4)] {
        let img = Image::new(h, w, (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let levels = max_levels(h, w);
        let g = haar2_forward(&img, levels)?;
        let back = haar2_inverse(&g)?;
        let err = back
            .data
            .iter()
            .zip(&img.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let e_img: f64 = img.data.iter().map(|v| v * v).sum();
        let e_coef: f64 = g.coeffs.iter().map(|v| v * v).sum();
        let parseval = (e_img - e_coef).abs() / e_img;
        out.push(case(
            format!("{h}x{w} levels={levels}"),
            err <= 1e-10 && parseval <= 1e-10,
            format!("round-trip {err:.2e}, energy {parseval:.2e}"),
        ));
    }
    Ok(out)
}

/// Runs `suites` (all when empty) and returns their reports.
pub fn run_suites(suites: &[Suite], seed: u64) -> Result<Vec<CheckReport>> {
    let list: Vec<Suite> = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.to_vec() };
    list.into_iter().map(|s| run_suite(s, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_suites_pass() {
        for s in [Suite::Kraft, Suite::Subadditive, Suite::Haar] {
            let r = run_suite(s, 1).unwrap();
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn costs_are_normalised() {
        let c = normalise_costs(vec![0.5; 4]);
        let s: f64 = c.iter().map(|c| (-c).exp2()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(normalise_costs(vec![2.0; 4]), vec![2.0; 4]);
    }

    #[test]
    fn rip_instance_uses_the_sample_bound() {
        let (scheme, s, n) = rip_instance(&RipSetup::default()).unwrap();
        assert_eq!(scheme.groups().len(), 6);
        assert!((s - (2.0 + 12f64.log2())).abs() < 1e-12);
        assert_eq!(n, rip_sample_bound(0.5, 20f64.ln(), s).ceil() as usize);
    }
}
