use proptest::prelude::*;
use proptest::sample::subsequence;

use structsparse::baselines::{
    group_lasso_with, kkt_violation, lambda_grid, lambda_max, lasso_path_with, omp, LassoConfig,
};
use structsparse::blocks::{grid_connected_blocks, line_connected_blocks, tree_blocks};
use structsparse::coding::{
    BlockInducedCoding, CoverMode, Graph, GraphCoding, GroupCoding, RootedTree, StandardCoding,
};
use structsparse::eigen::rho_of_complexity;
use structsparse::linalg::{correlation_gain, norm_sq, projection_gain, restricted_least_squares, residual};
use structsparse::signals::{effective_sparsity, gen_1d_strong, gen_1d_weak, gen_design_gaussian, WeakDecay};
use structsparse::wavelet::{haar2_forward, haar2_inverse, Image};
use structsparse::{struct_omp, Bits, CodingScheme, CoefficientVector, GreedyConfig, SupportSet};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

fn observations(n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 11) as f64
            / (1u64 << 53) as f64)
            - 0.5)
        .collect()
}

fn runs(support: &SupportSet) -> usize {
    let s = support.as_slice();
    s.iter().enumerate().filter(|&(i, &j)| i == 0 || s[i - 1] + 1 != j).count()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn refining_a_support_never_raises_the_residual(
        seed in any::<u64>(),
        f in subsequence((0..16).collect::<Vec<usize>>(), 0..8),
        extra in subsequence((0..16).collect::<Vec<usize>>(), 0..6),
    ) {
        let x = gen_design_gaussian(20, 16, seed).unwrap();
        let y = observations(20, seed);
        let small = SupportSet::new(f);
        let big = small.union(&SupportSet::new(extra));
        let rs = norm_sq(&residual(&x, &y, restricted_least_squares(&x, &y, &small).unwrap().values()));
        let rb = norm_sq(&residual(&x, &y, restricted_least_squares(&x, &y, &big).unwrap().values()));
        prop_assert!(rb <= rs * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn projection_gain_obeys_pythagoras(seed in any::<u64>(), s in subsequence((0..12).collect::<Vec<usize>>(), 1..8)) {
        let x = gen_design_gaussian(16, 12, seed).unwrap();
        let r = observations(16, seed ^ 1);
        let s = SupportSet::new(s);
        let gain = projection_gain(&x, &r, &s).unwrap();
        let fitted = restricted_least_squares(&x, &r, &s).unwrap();
        let rest = norm_sq(&residual(&x, &r, fitted.values()));
        prop_assert!((gain + rest - norm_sq(&r)).abs() <= 1e-8 * norm_sq(&r));
    }

    #[test]
    fn gain_ratio_lies_between_restricted_eigenvalues(seed in any::<u64>(), s in subsequence((0..12).collect::<Vec<usize>>(), 1..6)) {
        let x = gen_design_gaussian(24, 12, seed).unwrap();
        let r = observations(24, seed ^ 2);
        let s = SupportSet::new(s);
        let phi = projection_gain(&x, &r, &s).unwrap();
        prop_assume!(phi > 1e-12);
        let ratio = correlation_gain(&x, &r, &s).unwrap() / phi;
        let (lo, hi) = structsparse::eigen::restricted_eigs(&x, &s).unwrap();
        let n = 24.0;
        prop_assert!(ratio >= n * lo * (1.0 - 1e-9) && ratio <= n * hi * (1.0 + 1e-9));
    }

    #[test]
    fn growing_a_component_costs_node_bits_per_node(start in 0usize..10, len in 1usize..4, grow in 1usize..4) {
        let p = 16;
        let coding = GraphCoding::new(Graph::line(p));
        let f = SupportSet::new((start..start + len).collect());
        let g = SupportSet::new((start..(start + len + grow).min(p)).collect());
        let added = (g.len() - f.len()) as f64;
        let diff = coding.code_length(&g).to_f64() - coding.code_length(&f).to_f64();
        prop_assert!((diff - coding.node_bits() * added).abs() < 1e-9);
    }

    #[test]
    fn greedy_cover_never_beats_exact_cover(f in subsequence((0..10).collect::<Vec<usize>>(), 1..7)) {
        let blocks = line_connected_blocks(10, 3).unwrap();
        let exact = BlockInducedCoding::new(blocks.clone(), CoverMode::Exact).unwrap();
        let greedy = BlockInducedCoding::new(blocks, CoverMode::Greedy).unwrap();
        let f = SupportSet::new(f);
        prop_assert!(greedy.code_length(&f).to_f64() >= exact.code_length(&f).to_f64() - 1e-9);
    }

    #[test]
    fn disjoint_block_covers_agree(mask in 1u32..32) {
        let groups: Vec<Vec<usize>> = (0..5).map(|g| vec![2 * g, 2 * g + 1]).collect();
        let set = structsparse::blocks::group_blocks(10, groups.clone()).unwrap();
        let exact = BlockInducedCoding::new(set.clone(), CoverMode::Exact).unwrap();
        let greedy = BlockInducedCoding::new(set, CoverMode::Greedy).unwrap();
        let f = SupportSet::new(
            (0..5).filter(|g| mask >> g & 1 == 1).flat_map(|g| groups[g].clone()).collect(),
        );
        prop_assert!((greedy.code_length(&f).to_f64() - exact.code_length(&f).to_f64()).abs() < 1e-9);
    }

    #[test]
    fn line_and_grid_blocks_are_connected(p in 2usize..40, h in 1usize..6, w in 1usize..6) {
        let line = Graph::line(p);
        for b in line_connected_blocks(p, p.min(4)).unwrap().iter() {
            prop_assert!(line.is_connected(&b.indices));
        }
        let grid = Graph::grid(h, w);
        for b in grid_connected_blocks(h, w, (h * w).min(4)).unwrap().iter() {
            prop_assert!(grid.is_connected(&b.indices));
        }
    }

    #[test]
    fn tree_blocks_are_parent_closed(leaves in 1usize..40) {
        let tree = RootedTree::balanced_binary(leaves);
        for b in tree_blocks(&tree).unwrap().iter() {
            prop_assert!(tree.is_parent_closed(&b.indices));
        }
    }

    #[test]
    fn greedy_residual_strictly_decreases_and_complexity_is_exact(seed in any::<u64>()) {
        let (n, p) = (16, 24);
        let x = gen_design_gaussian(n, p, seed).unwrap();
        let y = observations(n, seed);
        let blocks = line_connected_blocks(p, 3).unwrap();
        let scheme = GraphCoding::new(Graph::line(p));
        let path = struct_omp(&x, &y, &blocks, &scheme, &GreedyConfig::default()).unwrap();
        // Past |F| = n the fit is ridge-stabilised and the residual is at
        // rounding level, so only the well-posed prefix must improve.
        let floor = 1e-6 * norm_sq(&y).sqrt();
        for w in path.states.windows(2) {
            prop_assert!(w[0].support.is_subset(&w[1].support));
            if w[1].support.len() <= n && w[0].residual_norm > floor {
                prop_assert!(w[1].residual_norm < w[0].residual_norm);
            }
        }
        for s in &path.states {
            let direct = scheme.complexity(&s.support).to_f64();
            prop_assert!((s.complexity.to_f64() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn omp_residual_strictly_decreases(seed in any::<u64>(), k in 1usize..12) {
        let x = gen_design_gaussian(12, 30, seed).unwrap();
        let y = observations(12, seed);
        let path = omp(&x, &y, k).unwrap();
        for w in path.windows(2) {
            prop_assert!(w[1].residual_norm < w[0].residual_norm);
        }
    }

    #[test]
    fn singleton_group_lasso_is_lasso(seed in any::<u64>()) {
        let (n, p) = (20, 15);
        let x = gen_design_gaussian(n, p, seed).unwrap();
        let y = observations(n, seed);
        let grid = lambda_grid(lambda_max(&x, &y), 12, 1e-2);
        let cfg = LassoConfig::default();
        let lasso = lasso_path_with(&x, &y, &grid, &cfg).unwrap();
        let groups = GroupCoding::new(p, (0..p).map(|j| vec![j]).collect()).unwrap();
        let group = group_lasso_with(&x, &y, &groups, &grid, &cfg).unwrap();
        for ((a, b), &l) in lasso.iter().zip(&group).zip(&grid) {
            prop_assert!(kkt_violation(&x, &y, a.coefficients.values(), l) <= 1e-6);
            for (u, v) in a.coefficients.values().iter().zip(b.coefficients.values()) {
                prop_assert!((u - v).abs() <= 1e-6);
            }
        }
        prop_assert_eq!(lasso, lasso_path_with(&x, &y, &grid, &cfg).unwrap());
    }

    #[test]
    fn haar_is_linear_and_invertible(seed in any::<u64>(), a in -3.0f64..3.0, lh in 0u32..5, lw in 0u32..5) {
        let (h, w) = (1usize << lh, 1usize << lw);
        let u = Image::new(h, w, observations(h * w, seed)).unwrap();
        let v = Image::new(h, w, observations(h * w, seed ^ 7)).unwrap();
        let levels = lh.min(lw) as usize;
        let combo = Image::new(h, w, u.data.iter().zip(&v.data).map(|(p, q)| a * p + q).collect()).unwrap();
        let (fu, fv, fc) = (
            haar2_forward(&u, levels).unwrap(),
            haar2_forward(&v, levels).unwrap(),
            haar2_forward(&combo, levels).unwrap(),
        );
        for i in 0..h * w {
            prop_assert!((fc.coeffs[i] - (a * fu.coeffs[i] + fv.coeffs[i])).abs() < 1e-10);
        }
        let energy: f64 = u.data.iter().map(|t| t * t).sum();
        let coeff_energy: f64 = fu.coeffs.iter().map(|t| t * t).sum();
        prop_assert!((energy - coeff_energy).abs() <= 1e-10 * energy.max(1.0));
        let back = haar2_inverse(&fu).unwrap();
        for (p, q) in back.data.iter().zip(&u.data) {
            prop_assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn strong_supports_are_g_runs(seed in any::<u64>(), g in 1usize..6, per in 1usize..8) {
        let k = g * per;
        let beta = gen_1d_strong(128, k, g, seed).unwrap();
        prop_assert_eq!(beta.nnz(), k);
        prop_assert_eq!(runs(beta.support()), g);
        prop_assert_eq!(&beta, &gen_1d_strong(128, k, g, seed).unwrap());
    }

    #[test]
    fn weak_sparsity_shrinks_with_faster_decay(seed in any::<u64>(), slow in 0.5f64..1.5, step in 0.2f64..1.0) {
        let decay = |exponent| WeakDecay { exponent, ..WeakDecay::default() };
        let (a, ka) = gen_1d_weak(512, 2, decay(slow), seed).unwrap();
        let (b, kb) = gen_1d_weak(512, 2, decay(slow + step), seed).unwrap();
        prop_assert!(kb <= ka);
        prop_assert_eq!(ka, effective_sparsity(a.values(), 0.95));
        prop_assert_eq!(kb, effective_sparsity(b.values(), 0.95));
    }

    #[test]
    fn restricted_eigenvalue_extremes_are_monotone_in_budget(seed in any::<u64>(), s in 5.0f64..20.0, ds in 0.5f64..10.0) {
        let x = gen_design_gaussian(10, 8, seed).unwrap();
        let scheme = StandardCoding::new(8);
        let a = rho_of_complexity(&x, &scheme, s).unwrap();
        let b = rho_of_complexity(&x, &scheme, s + ds).unwrap();
        prop_assert!(b.rho_minus <= a.rho_minus + 1e-12);
        prop_assert!(b.rho_plus >= a.rho_plus - 1e-12);
    }
}

#[test]
fn infinite_lengths_stay_out_of_kraft_sums() {
    let groups = GroupCoding::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
    assert_eq!(groups.code_length(&SupportSet::new(vec![0])), Bits::Infinite);
    assert_eq!(Bits::Infinite.kraft_term(), 0.0);
    let beta = CoefficientVector::new(vec![1.0, 0.0, 0.0, 0.0]);
    assert!(groups.vector_complexity(&beta).is_finite());
}
