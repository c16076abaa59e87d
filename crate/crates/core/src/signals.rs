//! Synthetic designs, signals and noise, plus the recovery-error metric.
//!
//! Every generator takes a trial seed and draws from its own purpose stream
//! (see [`crate::rng`]), so e.g. changing the design size never perturbs the
//! signal of the same trial.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CoefficientVector, DesignMatrix};
use crate::rng::{stream_rng, Stream};
use crate::wavelet::{haar2_forward, max_levels, Image};

/// Attempts before a randomised placement gives up.
pub const PLACEMENT_ATTEMPTS: usize = 100;

/// Default energy fraction defining the effective sparsity `k_eff`.
pub const ENERGY_FRACTION: f64 = 0.95;

fn gaussian_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument(format!("design must be at least 1x1, got {n}x{p}")));
    }
    // Filled row by row so the stream layout matches the row-major order.
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(m)
}

/// `n × p` design with i.i.d. `N(0, 1)` entries, each row rescaled to unit
/// Euclidean norm.
pub fn gen_design_gaussian(n: usize, p: usize, seed: u64) -> Result<DesignMatrix> {
    let mut m = gaussian_matrix(n, p, &mut stream_rng(seed, Stream::Design))?;
    for i in 0..n {
        let norm = m.row(i).norm();
        if norm > 0.0 {
            m.row_mut(i).unscale_mut(norm);
        }
    }
    DesignMatrix::new(m)
}

/// `n × p` design with i.i.d. `N(0, 1)` entries, not normalised.
pub fn gen_design_gaussian_raw(n: usize, p: usize, seed: u64) -> Result<DesignMatrix> {
    DesignMatrix::new(gaussian_matrix(n, p, &mut stream_rng(seed, Stream::Design))?)
}

fn random_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Uniform composition of `total` into `parts` nonnegative integers.
fn composition(total: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Stars and bars: choose `parts - 1` bar positions among `total + parts - 1`.
    let slots = total + parts - 1;
    let mut bars = rand::seq::index::sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for (i, b) in bars.iter().enumerate() {
        out.push(b - i - prev);
        prev = b - i;
    }
    out.push(total - prev);
    out
}

/// Run lengths of a `k`-sparse signal in `g` runs: as equal as possible,
/// longer runs first.
fn run_lengths(k: usize, g: usize) -> Vec<usize> {
    (0..g).map(|i| k / g + usize::from(i < k % g)).collect()
}

/// Strongly sparse line signal: `g` separated runs of `±1` entries, `k`
/// nonzeros in total. Run order is shuffled and the gaps between runs are a
/// uniform composition of the free space with at least one zero between
/// neighbouring runs.
pub fn gen_1d_strong(p: usize, k: usize, g: usize, seed: u64) -> Result<CoefficientVector> {
    if g == 0 || k < g || k > p || p - k < g - 1 {
        return Err(Error::Infeasible(format!("cannot place {g} separated runs of total length {k} in {p}")));
    }
    let mut place = stream_rng(seed, Stream::Placement);
    let mut lens = run_lengths(k, g);
    lens.shuffle(&mut place);
    let gaps = composition(p - k - (g - 1), g + 1, &mut place);
    let mut sign = stream_rng(seed, Stream::Signal);
    let mut beta = vec![0.0; p];
    let mut pos = gaps[0];
    for (i, &len) in lens.iter().enumerate() {
        for v in &mut beta[pos..pos + len] {
            *v = random_sign(&mut sign);
        }
        pos += len + gaps[i + 1] + 1;
    }
    Ok(CoefficientVector::new(beta))
}

/// Smallest number of largest-magnitude entries holding at least `fraction`
/// of the energy.
pub fn effective_sparsity(values: &[f64], fraction: f64) -> usize {
    let mut sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return 0;
    }
    sq.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (i, v) in sq.iter().enumerate() {
        acc += v;
        if acc >= fraction * total {
            return i + 1;
        }
    }
    sq.len()
}

/// Weakly sparse line signal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakDecay {
    /// Power-law exponent `α`.
    pub exponent: f64,
    /// Distance scale `w` in `(1 + d/w)^{-α}`.
    pub width: f64,
}

impl Default for WeakDecay {
    fn default() -> Self {
        Self {
            exponent: 1.0,
            width: WEAK_WIDTH,
        }
    }
}

/// Width giving `k_eff ≈ 32` for `p = 512`, `g = 2`, `α = 1`.
pub const WEAK_WIDTH: f64 = 0.63;

/// Weakly sparse line signal: `g` centres placed uniformly at least
/// `p / (2g)` apart; entry `j` has magnitude `(1 + d_j/w)^{-α}` with `d_j` the
/// distance to the nearest centre, and a random sign. Every entry is
/// nonzero. Returns the signal and its `k_eff` at 95% energy.
pub fn gen_1d_weak(p: usize, g: usize, decay: WeakDecay, seed: u64) -> Result<(CoefficientVector, usize)> {
    if !(decay.exponent > 0.0 && decay.width > 0.0) {
        return Err(Error::InvalidArgument("decay exponent and width must be positive".into()));
    }
    if g == 0 || g > p {
        return Err(Error::Infeasible(format!("cannot place {g} centres in {p}")));
    }
    let mut place = stream_rng(seed, Stream::Placement);
    let spacing = (p / (2 * g)).max(1);
    let mut centres = Vec::new();
    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut c: Vec<usize> = rand::seq::index::sample(&mut place, p, g).into_vec();
        c.sort_unstable();
        if c.windows(2).all(|w| w[1] - w[0] >= spacing) {
            centres = c;
            break;
        }
    }
    if centres.is_empty() {
        return Err(Error::Infeasible(format!("no placement of {g} centres {spacing} apart in {p}")));
    }
    let mut sign = stream_rng(seed, Stream::Signal);
    let beta: Vec<f64> = (0..p)
        .map(|j| {
            let d = centres.iter().map(|&c| c.abs_diff(j)).min().unwrap_or(0) as f64;
            random_sign(&mut sign) * (1.0 + d / decay.width).powf(-decay.exponent)
        })
        .collect();
    let k = effective_sparsity(&beta, ENERGY_FRACTION);
    Ok((CoefficientVector::new(beta), k))
}

/// `g` separated 4-connected blobs of `blob_size` cells on a row-major
/// `h × w` grid, grown from random seeds by random frontier expansion. Each
/// blob takes one value, uniform in `[0.5, 1.5]` with a random sign. Blobs
/// never touch, so the support has exactly `g` components.
pub fn gen_2d_blobs(h: usize, w: usize, g: usize, blob_size: usize, seed: u64) -> Result<CoefficientVector> {
    let p = h * w;
    if g == 0 || blob_size == 0 || g * blob_size > p {
        return Err(Error::Infeasible(format!("{g} blobs of {blob_size} cells do not fit in {h}x{w}")));
    }
    let mut place = stream_rng(seed, Stream::Placement);
    let neighbours = |v: usize| {
        let (r, c) = (v / w, v % w);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(v - w);
        }
        if r + 1 < h {
            out.push(v + w);
        }
        if c > 0 {
            out.push(v - 1);
        }
        if c + 1 < w {
            out.push(v + 1);
        }
        out
    };
    'attempt: for _ in 0..PLACEMENT_ATTEMPTS {
        // 0 = free, 1 = taken or adjacent to a finished blob.
        let mut blocked = vec![false; p];
        let mut label = vec![usize::MAX; p];
        for b in 0..g {
            let free: Vec<usize> = (0..p).filter(|&v| !blocked[v]).collect();
            if free.is_empty() {
                continue 'attempt;
            }
            let start = free[place.random_range(0..free.len())];
            let mut cells = vec![start];
            label[start] = b;
            while cells.len() < blob_size {
                let mut frontier: Vec<usize> = cells
                    .iter()
                    .flat_map(|&v| neighbours(v))
                    .filter(|&u| !blocked[u] && label[u] == usize::MAX)
                    .collect();
                frontier.sort_unstable();
                frontier.dedup();
                if frontier.is_empty() {
                    continue 'attempt;
                }
                let u = frontier[place.random_range(0..frontier.len())];
                label[u] = b;
                cells.push(u);
            }
            for &v in &cells {
                blocked[v] = true;
                for u in neighbours(v) {
                    blocked[u] = true;
                }
            }
        }
        let mut vals = stream_rng(seed, Stream::Signal);
        let amps: Vec<f64> = (0..g)
            .map(|_| random_sign(&mut vals) * vals.random_range(0.5..=1.5))
            .collect();
        let beta = label
            .iter()
            .map(|&l| if l == usize::MAX { 0.0 } else { amps[l] })
            .collect();
        return Ok(CoefficientVector::new(beta));
    }
    Err(Error::Infeasible(format!(
        "could not place {g} blobs of {blob_size} cells in {h}x{w} after {PLACEMENT_ATTEMPTS} attempts"
    )))
}

/// Piecewise image parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiecewiseSpec {
    /// Number of constant rectangles over the background.
    pub regions: usize,
    /// Peak-to-peak amplitude of the linear gradient (0 disables it).
    pub gradient: f64,
    /// Rectangle corners are snapped to multiples of this.
    pub snap: usize,
}

impl Default for PiecewiseSpec {
    fn default() -> Self {
        Self {
            regions: 16,
            gradient: 1.0,
            snap: 1,
        }
    }
}

/// Share of the Haar (full depth) energy held by the largest `fraction` of
/// coefficients.
pub fn haar_top_energy_share(image: &Image, fraction: f64) -> Result<f64> {
    let g = haar2_forward(image, max_levels(image.h, image.w))?;
    let mut sq: Vec<f64> = g.coeffs.iter().map(|c| c * c).collect();
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    sq.sort_by(|a, b| b.total_cmp(a));
    let keep = ((fraction * sq.len() as f64).ceil() as usize).min(sq.len());
    Ok(sq[..keep].iter().sum::<f64>() / total)
}

/// Synthetic natural-image stand-in: a background level, `regions` random
/// axis-aligned constant rectangles and a linear gradient. Redrawn
/// until the largest 10% of its Haar coefficients hold at least 95% of the
/// energy.
pub fn gen_2d_piecewise(h: usize, w: usize, spec: PiecewiseSpec, seed: u64) -> Result<Image> {
    if h == 0 || w == 0 || !h.is_power_of_two() || !w.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("image dimensions {h}x{w} must be powers of two")));
    }
    let snap = spec.snap.max(1);
    let mut rng = stream_rng(seed, Stream::Signal);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut img = Image::new(h, w, vec![rng.random_range(0.2..0.5); h * w])?;
        for _ in 0..spec.regions {
            let cells = |n: usize, rng: &mut ChaCha8Rng| {
                let slots = (n / snap).max(1);
                let a = rng.random_range(0..slots);
                let b = rng.random_range(0..slots);
                let (lo, hi) = (a.min(b), a.max(b) + 1);
                (lo * snap, (hi * snap).min(n))
            };
            let (r0, r1) = cells(h, &mut rng);
            let (c0, c1) = cells(w, &mut rng);
            let level = rng.random_range(0.0..1.0);
            for r in r0..r1 {
                for c in c0..c1 {
                    img.data[r * w + c] = level;
                }
            }
        }
        if spec.gradient != 0.0 {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let (dr, dc) = (angle.sin() / h as f64, angle.cos() / w as f64);
            for r in 0..h {
                for c in 0..w {
                    img.data[r * w + c] += spec.gradient * (dr * r as f64 + dc * c as f64);
                }
            }
        }
        if haar_top_energy_share(&img, 0.10)? >= ENERGY_FRACTION {
            return Ok(img);
        }
    }
    Err(Error::Infeasible(format!(
        "no {h}x{w} piecewise image met the energy criterion after {PLACEMENT_ATTEMPTS} draws"
    )))
}

/// `clean + σ z` with `z` standard normal.
pub fn add_noise(clean: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level {sigma} must be finite and nonnegative")));
    }
    if sigma == 0.0 {
        return Ok(clean.to_vec());
    }
    let mut rng = stream_rng(seed, Stream::Noise);
    Ok(clean
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// `‖est - truth‖₂ / ‖truth‖₂`.
pub fn recovery_error(est: &CoefficientVector, truth: &CoefficientVector) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} entries, truth has {}",
            est.len(),
            truth.len()
        )));
    }
    let t = truth.norm();
    if t == 0.0 {
        return Err(Error::InvalidArgument("recovery error needs a nonzero truth".into()));
    }
    let d: f64 = est
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(d.sqrt() / t)
}
