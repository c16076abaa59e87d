use crate::error::{Error, Result};
use crate::linalg::CoefficientVector;
use crate::signals::recovery_error;

use super::PathPoint;

/// Rule for picking one point of a path.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection<'a> {
    /// Smallest recovery error against a known truth (experiments only).
    MinTrueError(&'a CoefficientVector),
    /// Last point with at most `k` nonzeros, or the first point if none.
    TargetSparsity(usize),
    /// Smallest residual among points with at most `k` nonzeros.
    MinResidualAtSparsity(usize),
}

/// Ties go to the earliest point on the path.
pub fn select_model<'p>(path: &'p [PathPoint], criterion: &Selection<'_>) -> Result<&'p PathPoint> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let pick = match criterion {
        Selection::MinTrueError(truth) => {
            let mut best = (0, f64::INFINITY);
            for (i, pt) in path.iter().enumerate() {
                let e = recovery_error(&pt.coefficients, truth)?;
                if e < best.1 {
                    best = (i, e);
                }
            }
            best.0
        }
        Selection::TargetSparsity(k) => path
            .iter()
            .rposition(|pt| pt.coefficients.nnz() <= *k)
            .unwrap_or(0),
        Selection::MinResidualAtSparsity(k) => {
            let mut best: Option<(usize, f64)> = None;
            for (i, pt) in path.iter().enumerate() {
                if pt.coefficients.nnz() <= *k && best.is_none_or(|(_, r)| pt.residual_norm < r) {
                    best = Some((i, pt.residual_norm));
                }
            }
            best.map_or(0, |b| b.0)
        }
    };
    Ok(&path[pick])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{omp, PathParam};
    use crate::linalg::DesignMatrix;
    use nalgebra::DMatrix;

    fn point(values: Vec<f64>, r: f64) -> PathPoint {
        PathPoint {
            param: PathParam::Step(0),
            coefficients: CoefficientVector::new(values),
            residual_norm: r,
            converged: true,
        }
    }

    #[test]
    fn single_point_path() {
        let path = vec![point(vec![1.0, 0.0], 0.5)];
        let truth = CoefficientVector::new(vec![0.0, 1.0]);
        assert_eq!(select_model(&path, &Selection::MinTrueError(&truth)).unwrap(), &path[0]);
        assert!(select_model(&[], &Selection::TargetSparsity(1)).is_err());
    }

    #[test]
    fn target_sparsity_on_omp_path() {
        let x = DesignMatrix::new(DMatrix::from_fn(12, 12, |i, j| ((i * 7 + j * 3) % 13) as f64 + (i == j) as u8 as f64)).unwrap();
        let y: Vec<f64> = (0..12).map(|i| (i as f64).sqrt()).collect();
        let path = omp(&x, &y, 8).unwrap();
        let p = select_model(&path, &Selection::TargetSparsity(5)).unwrap();
        assert_eq!(p.param, PathParam::Step(5));
        let q = select_model(&path, &Selection::MinResidualAtSparsity(5)).unwrap();
        assert_eq!(q.param, PathParam::Step(5));
    }

    #[test]
    fn min_true_error_matches_linear_scan() {
        let truth = CoefficientVector::new(vec![1.0, 2.0, 0.0]);
        let path: Vec<PathPoint> = [0.0, 0.5, 0.9, 1.2, 0.95]
            .iter()
            .map(|&s| point(vec![s, 2.0 * s, 0.0], 1.0 - s))
            .collect();
        let got = select_model(&path, &Selection::MinTrueError(&truth)).unwrap();
        let errs: Vec<f64> = path.iter().map(|p| recovery_error(&p.coefficients, &truth).unwrap()).collect();
        let want = (0..errs.len()).min_by(|&a, &b| errs[a].total_cmp(&errs[b])).unwrap();
        assert_eq!(got, &path[want]);
    }
}
