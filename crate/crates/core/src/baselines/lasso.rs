use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use nalgebra::DVector;

use crate::linalg::{axpy, dot, norm, residual, CoefficientVector, DesignMatrix};

use super::{PathParam, PathPoint};

/// Coordinate-descent controls shared by the Lasso and group-Lasso paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoConfig {
    /// Target KKT violation, relative to `n·λ`.
    pub tol: f64,
    /// Cap on coordinate sweeps per path point.
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
        }
    }
}

/// Smallest `λ` with an all-zero solution: `max_j |xⱼᵀy| / n`.
pub fn lambda_max(x: &DesignMatrix, y: &[f64]) -> f64 {
    let n = x.n() as f64;
    x.tr_mul(y).iter().fold(0.0, |m: f64, v| m.max(v.abs())) / n
}

/// `points` geometric values from `max` down to `ratio · max`.
pub fn lambda_grid(max: f64, points: usize, ratio: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![max],
        _ => (0..points)
            .map(|i| max * ratio.powf(i as f64 / (points - 1) as f64))
            .collect(),
    }
}

pub(crate) fn check_grid(x: &DesignMatrix, y: &[f64], grid: &[f64]) -> Result<()> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {} rows", y.len(), x.n())));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::InvalidArgument("λ values must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("λ grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Largest KKT violation of `(1/2n)‖y - Xβ‖² + λ‖β‖₁` at `beta`, relative to
/// `n·λ`: `|xⱼᵀe| ≤ nλ` on zero coordinates and `xⱼᵀe = nλ·sign βⱼ` on active
/// ones, with `e = y - Xβ`.
pub fn kkt_violation(x: &DesignMatrix, y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let fit = x.mul_vec(beta);
    let e: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let nl = x.n() as f64 * lambda;
    (0..x.p())
        .map(|j| {
            let g = dot(x.column(j), &e);
            if beta[j] == 0.0 {
                (g.abs() - nl).max(0.0)
            } else {
                (g - nl * beta[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
        / nl
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Lasso path `min (1/2n)‖y - Xβ‖² + λ‖β‖₁` over a decreasing `λ` grid by
/// cyclic coordinate descent with warm starts.
pub fn lasso_path(x: &DesignMatrix, y: &[f64], grid: &[f64]) -> Result<Vec<PathPoint>> {
    lasso_path_with(x, y, grid, &LassoConfig::default())
}

pub fn lasso_path_with(x: &DesignMatrix, y: &[f64], grid: &[f64], cfg: &LassoConfig) -> Result<Vec<PathPoint>> {
    check_grid(x, y, grid)?;
    let (n, p) = (x.n() as f64, x.p());
    let sq: Vec<f64> = (0..p).map(|j| dot(x.column(j), x.column(j))).collect();
    let mut beta = vec![0.0; p];
    let mut e = y.to_vec();
    let mut path = Vec::with_capacity(grid.len());

    // One coordinate update; returns the coefficient change.
    let update = |j: usize, nl: f64, beta: &mut [f64], e: &mut [f64]| -> f64 {
        if sq[j] == 0.0 {
            return 0.0;
        }
        let old = beta[j];
        let z = dot(x.column(j), e) + sq[j] * old;
        let new = soft(z, nl) / sq[j];
        let d = new - old;
        if d != 0.0 {
            axpy(-d, x.column(j), e);
            beta[j] = new;
        }
        d
    };

    for &lambda in grid {
        let nl = n * lambda;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < cfg.max_sweeps {
            // Full sweep, then settle the active set.
            for j in 0..p {
                update(j, nl, &mut beta, &mut e);
            }
            sweeps += 1;
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            let mut inner = 0;
            while sweeps < cfg.max_sweeps && inner < POLISH_EVERY {
                let mut change: f64 = 0.0;
                for &j in &active {
                    let d = update(j, nl, &mut beta, &mut e);
                    change = change.max(d.abs() * sq[j].sqrt());
                }
                sweeps += 1;
                inner += 1;
                if change <= cfg.tol * nl * 1e-2 {
                    break;
                }
            }
            if let Some(sol) = polish(x, y, &active, &beta, nl) {
                for (&j, v) in active.iter().zip(sol.iter()) {
                    beta[j] = *v;
                }
                e = residual(x, y, &beta).iter().map(|v| -v).collect();
            }
            if kkt_violation_with(x, &e, &beta, nl) <= cfg.tol {
                converged = true;
                break;
            }
        }
        // Recompute the residual from scratch for the reported norm.
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

/// Active-set sweeps between attempts to solve the KKT system directly.
const POLISH_EVERY: usize = 50;

/// Solves `X_Aᵀ(y - X_A β_A) = nλ sign(β_A)` with the current signs held
/// fixed. Returns the solution only if it keeps those signs, in which case
/// it is the exact minimiser restricted to `A`.
fn polish(x: &DesignMatrix, y: &[f64], active: &[usize], beta: &[f64], nl: f64) -> Option<DVector<f64>> {
    if active.is_empty() || active.len() >= x.n() {
        return None;
    }
    let chol = x.gram(active).cholesky()?;
    let rhs = DVector::from_iterator(
        active.len(),
        active.iter().map(|&j| dot(x.column(j), y) - nl * beta[j].signum()),
    );
    let sol = chol.solve(&rhs);
    let consistent = sol
        .iter()
        .zip(active)
        .all(|(v, &j)| v.is_finite() && *v != 0.0 && v.signum() == beta[j].signum());
    consistent.then_some(sol)
}

fn kkt_violation_with(x: &DesignMatrix, e: &[f64], beta: &[f64], nl: f64) -> f64 {
    (0..x.p())
        .map(|j| {
            let g = dot(x.column(j), e);
            if beta[j] == 0.0 {
                (g.abs() - nl).max(0.0)
            } else {
                (g - nl * beta[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
        / nl
}
