use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, DesignMatrix, IncrementalLeastSquares};

use super::{PathParam, PathPoint};

/// Orthogonal matching pursuit. The path starts at the empty model and adds
/// `argmax_j |xⱼᵀ r|` (lowest index on ties) per step, up to `k_max` steps
/// or until the residual vanishes.
pub fn omp(x: &DesignMatrix, y: &[f64], k_max: usize) -> Result<Vec<PathPoint>> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch(format!("y has {} entries, X has {} rows", y.len(), x.n())));
    }
    if k_max == 0 || k_max > x.n().min(x.p()) {
        return Err(Error::InvalidArgument(format!(
            "k_max = {k_max} outside [1, min(n, p) = {}]",
            x.n().min(x.p())
        )));
    }
    let y_energy: f64 = y.iter().map(|v| v * v).sum();
    let mut ls = IncrementalLeastSquares::new(x, y)?;
    let mut selected = vec![false; x.p()];
    let mut path = vec![PathPoint {
        param: PathParam::Step(0),
        coefficients: CoefficientVector::zeros(x.p()),
        residual_norm: y_energy.sqrt(),
        converged: true,
    }];
    let mut r: Vec<f64> = y.iter().map(|v| -v).collect();
    for k in 1..=k_max {
        let corr = x.tr_mul(&r);
        let mut best: Option<(usize, f64)> = None;
        for (j, c) in corr.iter().enumerate() {
            if !selected[j] && best.is_none_or(|(_, b)| c.abs() > b) {
                best = Some((j, c.abs()));
            }
        }
        let Some((j, c)) = best else { break };
        if c * c <= 1e-24 * y_energy {
            break;
        }
        selected[j] = true;
        ls.push(j);
        let fit = ls.fit()?;
        path.push(PathPoint {
            param: PathParam::Step(k),
            coefficients: fit.coefficients,
            residual_norm: fit.rss.sqrt(),
            converged: true,
        });
        r = fit.residual;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SupportSet;
    use nalgebra::DMatrix;

    #[test]
    fn picks_largest_correlations_on_orthonormal_design() {
        let x = DesignMatrix::new(DMatrix::identity(8, 8)).unwrap();
        let mut y = vec![0.0; 8];
        y[2] = 3.0;
        y[5] = 1.0;
        let path = omp(&x, &y, 4).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path[1].coefficients.support(), &SupportSet::new(vec![2]));
        assert_eq!(path[2].coefficients.support(), &SupportSet::new(vec![2, 5]));
        assert!(path[2].residual_norm < 1e-12);
    }

    #[test]
    fn residual_strictly_decreases() {
        let x = DesignMatrix::new(DMatrix::from_fn(10, 20, |i, j| ((i * 31 + j * 17) % 11) as f64 - 5.0)).unwrap();
        let y: Vec<f64> = (0..10).map(|i| (i as f64).cos()).collect();
        let path = omp(&x, &y, 10).unwrap();
        for w in path.windows(2) {
            assert!(w[1].residual_norm < w[0].residual_norm);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let x = DesignMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert!(omp(&x, &[1.0; 3], 0).is_err());
        assert!(omp(&x, &[1.0; 3], 4).is_err());
    }
}
