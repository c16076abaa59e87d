//! Paired-trial experiments: configuration, execution, CSV output and
//! aggregation.
//!
//! A run is the grid `methods × n × trials`. For each `(n, trial)` cell the
//! design, signal and noise are drawn once and shared by every method, so
//! method comparisons are paired. The signal of a trial does not depend on
//! `n`. Rows are sorted by `(method, n, trial)` in configuration order
//! before writing, whatever order the worker pool finished them in.
//!
//! # Results CSV (schema `v1`)
//!
//! `method,n,trial,seed,k,recovery_error,residual_norm,complexity,nnz,param,status`
//!
//! `seed` is the design/noise seed of the cell, `k` the sparsity of the
//! truth (`k_eff` for approximately sparse signals), `complexity` the coding
//! complexity of the selected support under the report scheme (`inf` when
//! not encodable), `param` the selected path coordinate and `status` either
//! `ok` or `error: …`. Wall times go to a separate file so that the results
//! are byte-reproducible.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    group_lambda_max, group_lasso_with, lambda_grid, lambda_max, lasso_path_with, omp, select_model, LassoConfig, PathPoint,
    Selection,
};
use crate::blocks::{BlockSet, BlockSetSpec};
use crate::coding::{CodingScheme, GroupCoding, SchemeSpec};
use crate::error::{Error, Result};
use crate::io::{write_matrix_csv, write_pgm, write_vector_csv};
use crate::linalg::{CoefficientVector, DesignMatrix};
use crate::rng::derive_seed;
use crate::signals::{
    add_noise, effective_sparsity, gen_1d_strong, gen_1d_weak, gen_2d_blobs, gen_2d_piecewise, gen_design_gaussian,
    recovery_error, PiecewiseSpec, WeakDecay, ENERGY_FRACTION,
};
use crate::structomp::{struct_omp, GainMode, GreedyConfig};
use crate::wavelet::{haar2_forward, max_levels, Image};

/// Version tag of the CSV layouts below.
pub const SCHEMA_VERSION: &str = "v1";

const TAG_SIGNAL: u64 = 0x5349_474E;
const TAG_CELL: u64 = 0x4345_4C4C;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalSpec {
    /// `g` runs of `±1`, `k` nonzeros in total.
    #[serde(rename = "strong-1d")]
    Strong1d { p: usize, k: usize, g: usize },
    /// Dense power-law decay around `g` centres.
    #[serde(rename = "weak-1d")]
    Weak1d {
        p: usize,
        g: usize,
        #[serde(default)]
        decay: WeakDecay,
    },
    /// `g` blobs of `blob_size` cells on an `h × w` grid.
    #[serde(rename = "blobs-2d")]
    Blobs2d { h: usize, w: usize, g: usize, blob_size: usize },
    /// Haar coefficients (full depth unless `levels` is set) of a synthetic
    /// piecewise-constant image.
    #[serde(rename = "piecewise-2d")]
    Piecewise2d {
        h: usize,
        w: usize,
        #[serde(default)]
        image: PiecewiseSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<usize>,
    },
}

/// One draw of the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta: CoefficientVector,
    /// Sparsity, or `k_eff` at 95% energy for dense signals.
    pub k: usize,
    pub image: Option<Image>,
}

impl SignalSpec {
    pub fn p(&self) -> usize {
        match *self {
            SignalSpec::Strong1d { p, .. } | SignalSpec::Weak1d { p, .. } => p,
            SignalSpec::Blobs2d { h, w, .. } | SignalSpec::Piecewise2d { h, w, .. } => h * w,
        }
    }

    /// Sparsity used to turn `n/k` ratios into sample sizes.
    pub fn nominal_k(&self) -> usize {
        match *self {
            SignalSpec::Strong1d { k, .. } => k,
            // Calibrated decay puts about 16 effective entries per centre.
            SignalSpec::Weak1d { g, .. } => 16 * g,
            SignalSpec::Blobs2d { g, blob_size, .. } => g * blob_size,
            SignalSpec::Piecewise2d { h, w, .. } => (h * w).div_ceil(10),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match *self {
            SignalSpec::Strong1d { p, k, g } if k > p || g > k || g == 0 => {
                bad(format!("strong-1d needs 1 <= g <= k <= p, got p={p} k={k} g={g}"))
            }
            SignalSpec::Weak1d { p, g, .. } if g == 0 || g > p => bad(format!("weak-1d needs 1 <= g <= p, got g={g}")),
            SignalSpec::Blobs2d { h, w, g, blob_size } if g == 0 || g * blob_size > h * w => {
                bad(format!("{g} blobs of {blob_size} do not fit in {h}x{w}"))
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Truth> {
        match self {
            SignalSpec::Strong1d { p, k, g } => {
                let beta = gen_1d_strong(*p, *k, *g, seed)?;
                Ok(Truth { k: beta.nnz(), beta, image: None })
            }
            SignalSpec::Weak1d { p, g, decay } => {
                let (beta, k) = gen_1d_weak(*p, *g, *decay, seed)?;
                Ok(Truth { beta, k, image: None })
            }
            SignalSpec::Blobs2d { h, w, g, blob_size } => {
                let beta = gen_2d_blobs(*h, *w, *g, *blob_size, seed)?;
                Ok(Truth { k: beta.nnz(), beta, image: None })
            }
            SignalSpec::Piecewise2d { h, w, image, levels } => {
                let img = gen_2d_piecewise(*h, *w, *image, seed)?;
                let grid = haar2_forward(&img, levels.unwrap_or_else(|| max_levels(*h, *w)))?;
                let k = effective_sparsity(&grid.coeffs, ENERGY_FRACTION);
                Ok(Truth {
                    beta: CoefficientVector::new(grid.coeffs),
                    k,
                    image: Some(img),
                })
            }
        }
    }
}

/// StructOMP complexity budget.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    /// Run until no block improves the fit.
    #[default]
    Unlimited,
    Absolute(f64),
    /// Multiple of the true support's complexity under the method scheme.
    TruthFactor(f64),
    /// Multiple of the sample size.
    SampleFactor(f64),
}

/// Which point of a method's path is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSelection {
    /// Smallest recovery error against the truth.
    #[default]
    MinTrueError,
    /// The last point (last within budget for StructOMP).
    Final,
}

fn default_points() -> usize {
    100
}


/// Relative KKT tolerance of the Lasso-type baselines in experiments.
fn default_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodSpec {
    Structomp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        blocks: BlockSetSpec,
        scheme: SchemeSpec,
        #[serde(default)]
        budget: Budget,
        #[serde(default)]
        gain_mode: GainMode,
    },
    Omp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        /// Defaults to `min(n, p)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_steps: Option<usize>,
    },
    Lasso {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default = "default_points")]
        points: usize,
        /// `λ_min / λ_max`; defaults to 0.01 when `n < p`, else 1e-4.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    /// Expands to one method per group size, labelled `{label}-gs{size}`
    /// with `label` defaulting to `group-lasso`.
    GroupLasso {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        group_sizes: Vec<usize>,
        #[serde(default = "default_points")]
        points: usize,
        /// `λ_min / λ_max`; defaults to 0.01 when `n < p`, else 1e-4.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

/// Default `n/k` ratio grid.
pub fn default_ratios() -> Vec<f64> {
    (3..=10).map(|i| i as f64 * 0.5).collect()
}

fn default_trials() -> usize {
    20
}

/// JSON experiment description. Unset fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    /// Sample sizes. When empty, `ratios × nominal k` is used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub sigma: f64,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub selection: ModelSelection,
    /// Scheme for the `complexity` column; defaults to the first StructOMP
    /// scheme, else standard coding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_scheme: Option<SchemeSpec>,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Resolved sample sizes in ascending order, deduplicated.
    pub fn sample_sizes(&self) -> Vec<usize> {
        let mut n = if self.n.is_empty() {
            let ratios = if self.ratios.is_empty() { default_ratios() } else { self.ratios.clone() };
            let k = self.signal.nominal_k() as f64;
            ratios.iter().map(|r| (r * k).round().max(1.0) as usize).collect()
        } else {
            self.n.clone()
        };
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        let p = self.signal.p();
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("methods list is empty".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma {} must be finite and nonnegative", self.sigma)));
        }
        if self.ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("ratios must be positive".into()));
        }
        for n in self.sample_sizes() {
            if n == 0 || n > p {
                return Err(Error::InvalidArgument(format!("sample size {n} outside [1, p = {p}]")));
            }
        }
        Ok(())
    }
}

enum Solver {
    StructOmp {
        blocks: BlockSet,
        scheme: Box<dyn CodingScheme>,
        budget: Budget,
        gain_mode: GainMode,
    },
    Omp {
        max_steps: Option<usize>,
    },
    Lasso {
        points: usize,
        ratio: Option<f64>,
        cfg: LassoConfig,
    },
    GroupLasso {
        coding: GroupCoding,
        points: usize,
        ratio: Option<f64>,
        cfg: LassoConfig,
    },
}

fn lasso_cfg(tol: f64) -> LassoConfig {
    LassoConfig {
        tol,
        ..LassoConfig::default()
    }
}

struct Method {
    id: String,
    solver: Solver,
}

fn prepare(cfg: &ExperimentConfig) -> Result<(Vec<Method>, Box<dyn CodingScheme>)> {
    let p = cfg.signal.p();
    let mut methods = Vec::new();
    let mut first_scheme = None;
    for spec in &cfg.methods {
        match spec {
            MethodSpec::Structomp {
                label,
                blocks,
                scheme,
                budget,
                gain_mode,
            } => {
                let blocks = blocks.build()?;
                let built = scheme.build()?;
                if blocks.p() != p || built.dim() != p {
                    return Err(Error::DimensionMismatch(format!(
                        "structomp blocks/scheme dimension {}/{} differ from signal p = {p}",
                        blocks.p(),
                        built.dim()
                    )));
                }
                first_scheme.get_or_insert_with(|| scheme.clone());
                methods.push(Method {
                    id: label.clone().unwrap_or_else(|| "structomp".into()),
                    solver: Solver::StructOmp {
                        blocks,
                        scheme: built,
                        budget: *budget,
                        gain_mode: *gain_mode,
                    },
                });
            }
            MethodSpec::Omp { label, max_steps } => methods.push(Method {
                id: label.clone().unwrap_or_else(|| "omp".into()),
                solver: Solver::Omp { max_steps: *max_steps },
            }),
            MethodSpec::Lasso {
                label,
                points,
                ratio,
                tol,
            } => methods.push(Method {
                id: label.clone().unwrap_or_else(|| "lasso".into()),
                solver: Solver::Lasso {
                    points: *points,
                    ratio: *ratio,
                    cfg: lasso_cfg(*tol),
                },
            }),
            MethodSpec::GroupLasso {
                label,
                group_sizes,
                points,
                ratio,
                tol,
            } => {
                for &gs in group_sizes {
                    methods.push(Method {
                        id: format!("{}-gs{gs}", label.as_deref().unwrap_or("group-lasso")),
                        solver: Solver::GroupLasso {
                            coding: GroupCoding::consecutive(p, gs)?,
                            points: *points,
                            ratio: *ratio,
                            cfg: lasso_cfg(*tol),
                        },
                    });
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = methods.iter().find(|m| !seen.insert(m.id.as_str())) {
        return Err(Error::InvalidArgument(format!("duplicate method id {:?}", dup.id)));
    }
    let report = cfg
        .report_scheme
        .clone()
        .or(first_scheme)
        .unwrap_or(SchemeSpec::Standard { p })
        .build()?;
    Ok((methods, report))
}

/// One `(method, n, trial)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: String,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub recovery_error: f64,
    pub residual_norm: f64,
    pub complexity: f64,
    pub nnz: usize,
    pub param: String,
    pub status: String,
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl TrialResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Seeds of one trial: the signal seed and the per-`n` design/noise seed.
pub fn trial_seeds(master: u64, n: usize, trial: usize) -> (u64, u64) {
    (
        derive_seed(master, &[TAG_SIGNAL, trial as u64]),
        derive_seed(master, &[TAG_CELL, n as u64, trial as u64]),
    )
}

/// Design and observations of one cell.
pub fn draw_cell(cfg: &ExperimentConfig, truth: &Truth, n: usize, seed: u64) -> Result<(DesignMatrix, Vec<f64>)> {
    let x = gen_design_gaussian(n, cfg.signal.p(), seed)?;
    let clean = x.mul_vec(truth.beta.values());
    let y = add_noise(&clean, cfg.sigma, seed)?;
    Ok((x, y))
}

fn pick<'p>(path: &'p [PathPoint], truth: &CoefficientVector, sel: ModelSelection) -> Result<&'p PathPoint> {
    match sel {
        ModelSelection::MinTrueError => select_model(path, &Selection::MinTrueError(truth)),
        ModelSelection::Final => path.last().ok_or(Error::EmptyPath),
    }
}

fn grid_ratio(ratio: Option<f64>, x: &DesignMatrix) -> f64 {
    ratio.unwrap_or(if x.n() < x.p() { 1e-2 } else { 1e-4 })
}

fn solve(
    method: &Method,
    x: &DesignMatrix,
    y: &[f64],
    truth: &Truth,
    sel: ModelSelection,
) -> Result<PathPoint> {
    let path = match &method.solver {
        Solver::StructOmp {
            blocks,
            scheme,
            budget,
            gain_mode,
        } => {
            let s = match *budget {
                Budget::Unlimited => f64::INFINITY,
                Budget::Absolute(s) => s,
                Budget::TruthFactor(f) => f * scheme.complexity(truth.beta.support()).to_f64(),
                Budget::SampleFactor(f) => f * x.n() as f64,
            };
            let cfg = GreedyConfig {
                gain_mode: *gain_mode,
                ..GreedyConfig::with_budget(s)
            };
            let gp = struct_omp(x, y, blocks, scheme.as_ref(), &cfg)?;
            let mut pts = gp.to_path_points();
            pts.truncate(gp.within_budget + 1);
            pts
        }
        Solver::Omp { max_steps } => omp(x, y, max_steps.unwrap_or(x.n().min(x.p())))?,
        Solver::Lasso { points, ratio, cfg } => {
            lasso_path_with(x, y, &lambda_grid(lambda_max(x, y), *points, grid_ratio(*ratio, x)), cfg)?
        }
        Solver::GroupLasso {
            coding,
            points,
            ratio,
            cfg,
        } => {
            let grid = lambda_grid(group_lambda_max(x, y, coding.groups()), *points, grid_ratio(*ratio, x));
            group_lasso_with(x, y, coding, &grid, cfg)?
        }
    };
    pick(&path, &truth.beta, sel).cloned()
}

/// Runs the whole grid and returns rows sorted by `(method, n, trial)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let (methods, report) = prepare(cfg)?;
    let sizes = cfg.sample_sizes();
    let truths: Vec<Truth> = with_pool(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| cfg.signal.generate(trial_seeds(cfg.seed, 0, t).0))
            .collect::<Result<_>>()
    })??;
    let cells: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|ni| (0..cfg.trials).map(move |t| (ni, t)))
        .collect();
    let per_cell: Vec<Vec<TrialResult>> = with_pool(cfg.threads, || {
        cells
            .par_iter()
            .map(|&(ni, t)| run_cell(cfg, &methods, report.as_ref(), &truths[t], sizes[ni], t))
            .collect::<Result<_>>()
    })??;

    let mut rows: Vec<(usize, usize, TrialResult)> = per_cell
        .into_iter()
        .zip(&cells)
        .flat_map(|(rs, &(ni, _))| rs.into_iter().enumerate().map(move |(mi, r)| (mi, ni, r)))
        .collect();
    rows.sort_by_key(|(mi, ni, r)| (*mi, *ni, r.trial));
    Ok(rows.into_iter().map(|(_, _, r)| r).collect())
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn run_cell(
    cfg: &ExperimentConfig,
    methods: &[Method],
    report: &dyn CodingScheme,
    truth: &Truth,
    n: usize,
    trial: usize,
) -> Result<Vec<TrialResult>> {
    let seed = trial_seeds(cfg.seed, n, trial).1;
    let (x, y) = draw_cell(cfg, truth, n, seed)?;
    Ok(methods
        .iter()
        .map(|m| {
            let start = Instant::now();
            let outcome = solve(m, &x, &y, truth, cfg.selection);
            let wall_seconds = start.elapsed().as_secs_f64();
            let base = TrialResult {
                method: m.id.clone(),
                n,
                trial,
                seed,
                k: truth.k,
                recovery_error: f64::NAN,
                residual_norm: f64::NAN,
                complexity: f64::NAN,
                nnz: 0,
                param: String::new(),
                status: "ok".into(),
                wall_seconds,
            };
            match outcome.and_then(|pt| {
                let err = recovery_error(&pt.coefficients, &truth.beta)?;
                Ok((pt, err))
            }) {
                Ok((pt, err)) => TrialResult {
                    recovery_error: err,
                    residual_norm: pt.residual_norm,
                    complexity: report.complexity(pt.coefficients.support()).to_f64(),
                    nnz: pt.coefficients.nnz(),
                    param: pt.param.to_string(),
                    ..base
                },
                Err(e) => TrialResult {
                    status: format!("error: {e}"),
                    ..base
                },
            }
        })
        .collect())
}

pub fn write_results_csv<W: Write>(rows: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "method",
            "n",
            "trial",
            "seed",
            "k",
            "recovery_error",
            "residual_norm",
            "complexity",
            "nnz",
            "param",
            "status",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<TrialResult>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// `method,n,trial,wall_seconds`.
pub fn write_timings_csv<W: Write>(rows: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "n", "trial", "wall_seconds"])?;
    for r in rows {
        w.write_record([r.method.clone(), r.n.to_string(), r.trial.to_string(), r.wall_seconds.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-`(method, n)` summary over successful trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub n: usize,
    /// Mean truth sparsity.
    pub k: f64,
    /// `n / k`.
    pub ratio: f64,
    pub mean_error: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std_error: f64,
    pub mean_residual: f64,
    pub trials: usize,
    pub failures: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

/// Groups rows by `(method, n)`, keeping the first-seen method order.
pub fn aggregate(rows: &[TrialResult]) -> Vec<SweepRow> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(usize, usize), Vec<&TrialResult>> = BTreeMap::new();
    for r in rows {
        let mi = match order.iter().position(|m| *m == r.method) {
            Some(i) => i,
            None => {
                order.push(&r.method);
                order.len() - 1
            }
        };
        groups.entry((mi, r.n)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((mi, n), rs)| {
            let ok: Vec<&&TrialResult> = rs.iter().filter(|r| r.is_ok()).collect();
            let errs: Vec<f64> = ok.iter().map(|r| r.recovery_error).collect();
            let res: Vec<f64> = ok.iter().map(|r| r.residual_norm).collect();
            let (mean_error, std_error) = mean_std(&errs);
            let k = rs.iter().map(|r| r.k as f64).sum::<f64>() / rs.len() as f64;
            SweepRow {
                method: order[mi].to_string(),
                n,
                k,
                ratio: n as f64 / k,
                mean_error,
                std_error,
                mean_residual: mean_std(&res).0,
                trials: ok.len(),
                failures: rs.len() - ok.len(),
            }
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Markdown table of a sweep.
pub fn render_report(rows: &[SweepRow]) -> String {
    let mut s = String::from("| method | n | n/k | mean error | std | trials | failures |\n");
    s.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {:.2} | {:.4} | {:.4} | {} | {} |\n",
            r.method, r.n, r.ratio, r.mean_error, r.std_error, r.trials, r.failures
        ));
    }
    s
}

/// Record of files written by [`generate_artifacts`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    /// `truth`, `image`, `design` or `observations`.
    pub kind: String,
    pub trial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub seed: u64,
}

/// Writes truth, design and observation files of every cell into `dir`,
/// plus `manifest.json`.
pub fn generate_artifacts(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut entry = |path: PathBuf, kind: &str, trial, n, seed| {
        files.push(ManifestEntry {
            path: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            kind: kind.into(),
            trial,
            n,
            seed,
        });
    };
    for t in 0..cfg.trials {
        let sseed = trial_seeds(cfg.seed, 0, t).0;
        let truth = cfg.signal.generate(sseed)?;
        let path = dir.join(format!("truth_t{t}.csv"));
        write_vector_csv(&path, truth.beta.values())?;
        entry(path, "truth", t, None, sseed);
        if let Some(img) = &truth.image {
            let path = dir.join(format!("image_t{t}.pgm"));
            write_pgm(&path, img)?;
            entry(path, "image", t, None, sseed);
        }
        for n in cfg.sample_sizes() {
            let seed = trial_seeds(cfg.seed, n, t).1;
            let (x, y) = draw_cell(cfg, &truth, n, seed)?;
            let path = dir.join(format!("design_n{n}_t{t}.csv"));
            write_matrix_csv(&path, &x)?;
            entry(path, "design", t, Some(n), seed);
            let path = dir.join(format!("observations_n{n}_t{t}.csv"));
            write_vector_csv(&path, &y)?;
            entry(path, "observations", t, Some(n), seed);
        }
    }
    let manifest = Manifest {
        schema: SCHEMA_VERSION.into(),
        master_seed: cfg.seed,
        config: cfg.clone(),
        files,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
