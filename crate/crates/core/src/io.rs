//! CSV and PGM import/export.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle is lossless and output bytes depend only on the values.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;
use crate::wavelet::Image;

/// Single-column CSV with header `value`.
pub fn write_vector_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value"])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = rec.get(0).ok_or_else(|| Error::Parse("empty CSV row".into()))?;
        out.push(parse_f64(field)?);
    }
    Ok(out)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

/// Row-major CSV with header `x0,…,x{p-1}`.
pub fn write_matrix_csv(path: &Path, x: &DesignMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..x.p()).map(|j| format!("x{j}")))?;
    let m = x.as_matrix();
    for i in 0..x.n() {
        w.write_record((0..x.p()).map(|j| m[(i, j)].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DesignMatrix> {
    let mut r = csv::Reader::from_path(path)?;
    let p = r.headers()?.len();
    let mut data = Vec::new();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != p {
            return Err(Error::Parse(format!("row {n} has {} fields, expected {p}", rec.len())));
        }
        for f in rec.iter() {
            data.push(parse_f64(f)?);
        }
        n += 1;
    }
    DesignMatrix::new(DMatrix::from_row_slice(n, p, &data))
}

/// Plain (P2) PGM, linearly mapping `[min, max]` of the image to `0..=255`.
pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    let lo = image.data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = image.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut out = format!("P2\n{} {}\n255\n", image.w, image.h);
    for r in 0..image.h {
        let row: Vec<String> = (0..image.w)
            .map(|c| (((image.get(r, c) - lo) * scale).round() as u8).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a P2 PGM, scaling pixels to `[0, 1]` by the file's maxval.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let text = fs::read_to_string(path)?;
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(Error::Parse("not a plain PGM (P2) file".into()));
    }
    let mut int = |what: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad or missing {what}")))
    };
    let w = int("width")?;
    let h = int("height")?;
    let maxval = int("maxval")?;
    if maxval == 0 {
        return Err(Error::Parse("maxval must be positive".into()));
    }
    let data = (0..h * w)
        .map(|_| int("pixel").map(|v| v as f64 / maxval as f64))
        .collect::<Result<Vec<_>>>()?;
    Image::new(h, w, data)
}
