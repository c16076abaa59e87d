//! Standard- and group-sparsity baselines: OMP, the Lasso path and the group
//! Lasso path, plus model selection along a path.

mod group_lasso;
mod lasso;
mod omp;
mod select;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::CoefficientVector;
use crate::signals::recovery_error;

pub use group_lasso::{group_lambda_max, group_lasso, group_lasso_with, group_kkt_violation};
pub use lasso::{kkt_violation, lambda_grid, lambda_max, lasso_path, lasso_path_with, LassoConfig};
pub use omp::omp;
pub use select::{select_model, Selection};

/// Path coordinate: a regularisation level or a greedy step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathParam {
    Lambda(f64),
    Step(usize),
}

impl std::fmt::Display for PathParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathParam::Lambda(l) => write!(f, "{l}"),
            PathParam::Step(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub param: PathParam,
    pub coefficients: CoefficientVector,
    /// `‖Xβ - y‖₂`.
    pub residual_norm: f64,
    /// False when the solver hit its iteration cap at this point.
    pub converged: bool,
}

/// Writes `param,nnz,residual_norm,error,converged`; `error` is empty
/// without a ground truth.
pub fn write_path_csv<W: Write>(path: &[PathPoint], truth: Option<&CoefficientVector>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "nnz", "residual_norm", "error", "converged"])?;
    for pt in path {
        let err = match truth {
            Some(t) => recovery_error(&pt.coefficients, t)?.to_string(),
            None => String::new(),
        };
        w.write_record([
            pt.param.to_string(),
            pt.coefficients.nnz().to_string(),
            pt.residual_norm.to_string(),
            err,
            pt.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
