use nalgebra::SymmetricEigen;

use crate::coding::GroupCoding;
use crate::error::Result;
use crate::linalg::{axpy, dot, norm, CoefficientVector, DesignMatrix};

use super::lasso::check_grid;
use super::{LassoConfig, PathParam, PathPoint};

fn weights(groups: &[Vec<usize>]) -> Vec<f64> {
    groups.iter().map(|g| (g.len() as f64).sqrt()).collect()
}

/// Smallest `λ` with an all-zero group-Lasso solution:
/// `max_g ‖X_gᵀy‖ / (n √|g|)`.
pub fn group_lambda_max(x: &DesignMatrix, y: &[f64], groups: &[Vec<usize>]) -> f64 {
    let xty = x.tr_mul(y);
    groups
        .iter()
        .zip(weights(groups))
        .map(|(g, w)| g.iter().map(|&j| xty[j] * xty[j]).sum::<f64>().sqrt() / w)
        .fold(0.0, f64::max)
        / x.n() as f64
}

/// Largest group-KKT violation relative to `n·λ`: `‖X_gᵀe‖ ≤ nλ√|g|` on zero
/// groups and `X_gᵀe = nλ√|g| β_g/‖β_g‖` on active ones.
pub fn group_kkt_violation(x: &DesignMatrix, y: &[f64], groups: &[Vec<usize>], beta: &[f64], lambda: f64) -> f64 {
    let fit = x.mul_vec(beta);
    let e: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    violation(x, &e, groups, &weights(groups), beta, x.n() as f64 * lambda)
}

fn violation(x: &DesignMatrix, e: &[f64], groups: &[Vec<usize>], w: &[f64], beta: &[f64], nl: f64) -> f64 {
    groups
        .iter()
        .zip(w)
        .map(|(g, &wg)| {
            let grad: Vec<f64> = g.iter().map(|&j| dot(x.column(j), e)).collect();
            let b: Vec<f64> = g.iter().map(|&j| beta[j]).collect();
            let bn = norm(&b);
            if bn == 0.0 {
                (norm(&grad) - nl * wg).max(0.0)
            } else {
                let d: Vec<f64> = grad.iter().zip(&b).map(|(gv, bv)| gv - nl * wg * bv / bn).collect();
                norm(&d)
            }
        })
        .fold(0.0, f64::max)
        / nl
}

/// Group-Lasso path `min (1/2n)‖y - Xβ‖² + λ Σ_g √|g| ‖β_g‖` by block
/// coordinate descent: each group takes proximal gradient steps with step
/// `n / λ_max(X_gᵀX_g)`, which is the exact update for singleton groups.
pub fn group_lasso(x: &DesignMatrix, y: &[f64], groups: &GroupCoding, grid: &[f64]) -> Result<Vec<PathPoint>> {
    group_lasso_with(x, y, groups, grid, &LassoConfig::default())
}

pub fn group_lasso_with(
    x: &DesignMatrix,
    y: &[f64],
    groups: &GroupCoding,
    grid: &[f64],
    cfg: &LassoConfig,
) -> Result<Vec<PathPoint>> {
    check_grid(x, y, grid)?;
    let groups = groups.groups();
    let w = weights(groups);
    let n = x.n() as f64;
    let p = x.p();
    // Lipschitz constant of each group's block of the unscaled gradient.
    let lip: Vec<f64> = groups
        .iter()
        .map(|g| {
            let gram = x.gram(g);
            if g.len() == 1 {
                gram[(0, 0)]
            } else {
                SymmetricEigen::new(gram).eigenvalues.iter().copied().fold(0.0, f64::max)
            }
        })
        .collect();
    let mut beta = vec![0.0; p];
    let mut e = y.to_vec();
    let mut path = Vec::with_capacity(grid.len());

    let update = |gi: usize, nl: f64, beta: &mut [f64], e: &mut [f64]| -> f64 {
        let g = &groups[gi];
        let l = lip[gi];
        if l == 0.0 {
            return 0.0;
        }
        let z: Vec<f64> = g.iter().map(|&j| beta[j] + dot(x.column(j), e) / l).collect();
        let zn = norm(&z);
        let shrink = if zn > 0.0 { (1.0 - nl * w[gi] / (l * zn)).max(0.0) } else { 0.0 };
        let mut change: f64 = 0.0;
        for (&j, zj) in g.iter().zip(&z) {
            let new = shrink * zj;
            let d = new - beta[j];
            if d != 0.0 {
                axpy(-d, x.column(j), e);
                beta[j] = new;
                change = change.max(d.abs());
            }
        }
        change * l.sqrt()
    };

    for &lambda in grid {
        let nl = n * lambda;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < cfg.max_sweeps {
            for gi in 0..groups.len() {
                update(gi, nl, &mut beta, &mut e);
            }
            sweeps += 1;
            let active: Vec<usize> = (0..groups.len())
                .filter(|&gi| groups[gi].iter().any(|&j| beta[j] != 0.0))
                .collect();
            while sweeps < cfg.max_sweeps {
                let mut change: f64 = 0.0;
                for &gi in &active {
                    change = change.max(update(gi, nl, &mut beta, &mut e));
                }
                sweeps += 1;
                if change <= cfg.tol * nl * 1e-2 {
                    break;
                }
            }
            if violation(x, &e, groups, &w, &beta, nl) <= cfg.tol {
                converged = true;
                break;
            }
        }
        let fit = x.mul_vec(&beta);
        let r: Vec<f64> = fit.iter().zip(y).map(|(a, b)| a - b).collect();
        e = r.iter().map(|v| -v).collect();
        path.push(PathPoint {
            param: PathParam::Lambda(lambda),
            coefficients: CoefficientVector::new(beta.clone()),
            residual_norm: norm(&r),
            converged,
        });
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{lambda_grid, lasso_path};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, p: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DesignMatrix::new(DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn huge_lambda_gives_zero_model() {
        let x = random(10, 8, 1);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let g = GroupCoding::consecutive(8, 2).unwrap();
        let lm = group_lambda_max(&x, &y, g.groups());
        let path = group_lasso(&x, &y, &g, &[lm * 10.0, lm]).unwrap();
        assert!(path.iter().all(|p| p.coefficients.nnz() == 0));
    }

    #[test]
    fn singleton_groups_reduce_to_lasso() {
        for seed in 0..5 {
            let x = random(15, 25, seed);
            let y: Vec<f64> = (0..15).map(|i| ((i + seed as usize) as f64).sin()).collect();
            let g = GroupCoding::consecutive(25, 1).unwrap();
            let grid = lambda_grid(group_lambda_max(&x, &y, g.groups()), 20, 1e-2);
            let a = group_lasso(&x, &y, &g, &grid).unwrap();
            let b = lasso_path(&x, &y, &grid).unwrap();
            for (pa, pb) in a.iter().zip(&b) {
                for (u, v) in pa.coefficients.values().iter().zip(pb.coefficients.values()) {
                    assert!((u - v).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn group_kkt_holds() {
        let x = random(30, 24, 7);
        let mut beta = vec![0.0; 24];
        beta[8..12].copy_from_slice(&[1.0, -1.0, 0.5, 2.0]);
        let y = x.mul_vec(&beta);
        let g = GroupCoding::consecutive(24, 4).unwrap();
        let grid = lambda_grid(group_lambda_max(&x, &y, g.groups()), 15, 1e-2);
        let path = group_lasso(&x, &y, &g, &grid).unwrap();
        for (pt, &l) in path.iter().zip(&grid) {
            assert!(pt.converged);
            assert!(group_kkt_violation(&x, &y, g.groups(), pt.coefficients.values(), l) <= 1e-6);
        }
        let last = path.last().unwrap();
        assert!(last.coefficients.support().iter().all(|j| (8..12).contains(&j)));
    }
}
