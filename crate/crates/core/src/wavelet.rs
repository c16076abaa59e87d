//! Orthonormal 2D Haar transform (Mallat layout) and the quad-tree linking
//! each detail coefficient to the coefficient one level coarser that covers
//! the same spatial region.
//!
//! Coefficients are stored row-major. After `L` levels on an `h × w` image the
//! top-left `h/2^L × w/2^L` block holds the approximation band; the detail
//! bands of level `ℓ` (1 = finest) sit in the three quadrants around the
//! approximation block of level `ℓ - 1`.

use crate::coding::{RootedTree, TreeSpec};
use crate::error::{Error, Result};

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Dense row-major image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != h * w {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {h}x{w} image",
                data.len()
            )));
        }
        Ok(Self { h, w, data })
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.w + c]
    }
}

/// Haar coefficients of an `h × w` image after `levels` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletGrid {
    pub h: usize,
    pub w: usize,
    pub levels: usize,
    pub coeffs: Vec<f64>,
}

/// `log₂ min(h, w)`, the full decomposition depth.
pub fn max_levels(h: usize, w: usize) -> usize {
    h.min(w).trailing_zeros() as usize
}

fn check_dims(h: usize, w: usize, levels: usize) -> Result<()> {
    if h == 0 || w == 0 || !h.is_power_of_two() || !w.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("image dimensions {h}x{w} must be powers of two")));
    }
    if levels > max_levels(h, w) {
        return Err(Error::InvalidArgument(format!(
            "{levels} levels exceed log2 min({h}, {w}) = {}",
            max_levels(h, w)
        )));
    }
    Ok(())
}

/// One analysis step on `len` entries at `data[start + k·stride]`.
fn analyze(data: &mut [f64], start: usize, stride: usize, len: usize, tmp: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let a = data[start + 2 * i * stride];
        let b = data[start + (2 * i + 1) * stride];
        tmp[i] = (a + b) * INV_SQRT2;
        tmp[half + i] = (a - b) * INV_SQRT2;
    }
    for (i, v) in tmp[..len].iter().enumerate() {
        data[start + i * stride] = *v;
    }
}

fn synthesize(data: &mut [f64], start: usize, stride: usize, len: usize, tmp: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let s = data[start + i * stride];
        let d = data[start + (half + i) * stride];
        tmp[2 * i] = (s + d) * INV_SQRT2;
        tmp[2 * i + 1] = (s - d) * INV_SQRT2;
    }
    for (i, v) in tmp[..len].iter().enumerate() {
        data[start + i * stride] = *v;
    }
}

/// Orthonormal forward transform with `levels` levels.
pub fn haar2_forward(image: &Image, levels: usize) -> Result<WaveletGrid> {
    check_dims(image.h, image.w, levels)?;
    let (h, w) = (image.h, image.w);
    let mut c = image.data.clone();
    let mut tmp = vec![0.0; h.max(w)];
    for l in 0..levels {
        let (hh, ww) = (h >> l, w >> l);
        for r in 0..hh {
            analyze(&mut c, r * w, 1, ww, &mut tmp);
        }
        for col in 0..ww {
            analyze(&mut c, col, w, hh, &mut tmp);
        }
    }
    Ok(WaveletGrid {
        h,
        w,
        levels,
        coeffs: c,
    })
}

/// Inverse of [`haar2_forward`].
pub fn haar2_inverse(grid: &WaveletGrid) -> Result<Image> {
    check_dims(grid.h, grid.w, grid.levels)?;
    let (h, w) = (grid.h, grid.w);
    if grid.coeffs.len() != h * w {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a {h}x{w} grid",
            grid.coeffs.len()
        )));
    }
    let mut c = grid.coeffs.clone();
    let mut tmp = vec![0.0; h.max(w)];
    for l in (0..grid.levels).rev() {
        let (hh, ww) = (h >> l, w >> l);
        for col in 0..ww {
            synthesize(&mut c, col, w, hh, &mut tmp);
        }
        for r in 0..hh {
            synthesize(&mut c, r * w, 1, ww, &mut tmp);
        }
    }
    Image::new(h, w, c)
}

/// Band of a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// Coarsest approximation.
    Approximation,
    /// Detail at `level` (1 = finest).
    Detail { level: usize },
}

/// Parent map over the coefficients of an `h × w`, `levels`-level grid.
///
/// A detail coefficient at `(r, c)` on level `ℓ < levels` has parent
/// `(r/2, c/2)` on level `ℓ + 1`. Coarsest-level details and approximation
/// coefficients are roots.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletTree {
    pub h: usize,
    pub w: usize,
    pub levels: usize,
    pub parent: Vec<Option<usize>>,
}

impl WaveletTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn band(&self, idx: usize) -> Band {
        band_of(self.h, self.w, self.levels, idx / self.w, idx % self.w)
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.parent[i].is_none()).collect()
    }

    pub fn children(&self, idx: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.parent[i] == Some(idx)).collect()
    }

    /// As a single rooted tree; several roots are joined under a virtual
    /// node numbered `h·w`.
    pub fn to_rooted_tree(&self) -> RootedTree {
        RootedTree::from_forest(self.parent.clone(), self.len())
            .expect("wavelet parent map is a forest")
            .with_spec(TreeSpec::Wavelet {
                h: self.h,
                w: self.w,
                levels: self.levels,
            })
    }
}

fn band_of(h: usize, w: usize, levels: usize, r: usize, c: usize) -> Band {
    for l in (1..=levels).rev() {
        // Approximation block after `l` levels.
        if r < h >> l && c < w >> l {
            return if l == levels {
                Band::Approximation
            } else {
                Band::Detail { level: l + 1 }
            };
        }
    }
    if levels == 0 {
        Band::Approximation
    } else {
        Band::Detail { level: 1 }
    }
}

pub fn wavelet_tree(h: usize, w: usize, levels: usize) -> Result<WaveletTree> {
    check_dims(h, w, levels)?;
    let parent = (0..h * w)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            match band_of(h, w, levels, r, c) {
                Band::Detail { level } if level < levels => Some((r / 2) * w + c / 2),
                _ => None,
            }
        })
        .collect();
    Ok(WaveletTree {
        h,
        w,
        levels,
        parent,
    })
}
