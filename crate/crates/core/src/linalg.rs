//! Dense kernels: restricted least squares and the two gain energies.
//!
//! Residuals follow the sign convention `r = Xβ - y` throughout; only
//! squared quantities and inner products with columns are ever compared, so
//! callers holding `y - Xβ` get identical gains.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold on `|R_ii|` below which a factorization is treated as
/// singular.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Ridge added to the normal equations when the QR factor is singular,
/// relative to the trace of the Gram matrix.
pub const RIDGE_FACTOR: f64 = 1e-10;

/// Dense `n x p` design matrix, stored column-major so column `j` is a
/// contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "design matrix must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        Ok(Self { data })
    }

    pub fn from_row_major(n: usize, p: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, p, values))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `X β`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(b, self.column(j), &mut out);
            }
        }
        out
    }

    /// `Xᵀ r`.
    pub fn tr_mul(&self, r: &[f64]) -> Vec<f64> {
        (0..self.p()).map(|j| dot(self.column(j), r)).collect()
    }

    /// Columns of `support` gathered into an `n x |support|` matrix.
    pub fn columns(&self, support: &[usize]) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, support.len());
        for (k, &j) in support.iter().enumerate() {
            out.column_mut(k).copy_from_slice(self.column(j));
        }
        out
    }

    /// Gram matrix `X_Sᵀ X_S`.
    pub fn gram(&self, support: &[usize]) -> DMatrix<f64> {
        let k = support.len();
        let mut g = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = dot(self.column(support[a]), self.column(support[b]));
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    fn check_support(&self, support: &SupportSet) -> Result<()> {
        match support.as_slice().last() {
            Some(&j) if j >= self.p() => Err(Error::DimensionMismatch(format!(
                "support index {j} out of range for p = {}",
                self.p()
            ))),
            _ => Ok(()),
        }
    }

    fn check_rows(&self, len: usize, what: &str) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has length {len}, design has n = {}",
                self.n()
            )));
        }
        Ok(())
    }
}

/// Strictly increasing list of feature indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Sorts and deduplicates `indices`.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    /// Set whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|&j| mask >> j & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &j| m | 1 << j)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        out.push(x);
                        a.next();
                    } else if y < x {
                        out.push(y);
                        b.next();
                    } else {
                        out.push(x);
                        a.next();
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    out.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    out.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        SupportSet(out)
    }

    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        SupportSet(self.0.iter().copied().filter(|&j| !other.contains(j)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl From<Vec<usize>> for SupportSet {
    fn from(v: Vec<usize>) -> Self {
        SupportSet::new(v)
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SupportSet::new(iter.into_iter().collect())
    }
}

/// Coefficient vector with its support cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    values: Vec<f64>,
    support: SupportSet,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Self {
        let support = SupportSet(
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j)
                .collect(),
        );
        Self { values, support }
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            values: vec![0.0; p],
            support: SupportSet::empty(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    /// Indices with `|β_j| > tol`.
    pub fn support_above(&self, tol: f64) -> SupportSet {
        SupportSet(
            self.values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() > tol)
                .map(|(j, _)| j)
                .collect(),
        )
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `Xβ - y`.
pub fn residual(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut r = x.mul_vec(beta);
    for (ri, yi) in r.iter_mut().zip(y) {
        *ri -= yi;
    }
    r
}

/// Least squares restricted to `support`: minimizes `‖Xβ - y‖²` over
/// `supp(β) ⊆ support`.
///
/// Uses Householder QR of `X_F`. When some `|R_ii|` falls below
/// [`SINGULAR_TOL`] relative to the largest diagonal entry (or `|F| > n`),
/// falls back to ridge-stabilized normal equations, which approximates the
/// minimum-norm minimizer.
pub fn restricted_least_squares(
    x: &DesignMatrix,
    y: &[f64],
    support: &SupportSet,
) -> Result<CoefficientVector> {
    x.check_rows(y.len(), "observation")?;
    x.check_support(support)?;
    let idx = support.as_slice();
    let mut beta = vec![0.0; x.p()];
    if idx.is_empty() {
        return Ok(CoefficientVector::new(beta));
    }
    let coef = solve_columns(x, y, idx);
    for (&j, c) in idx.iter().zip(coef) {
        beta[j] = c;
    }
    Ok(CoefficientVector::new(beta))
}

fn solve_columns(x: &DesignMatrix, y: &[f64], idx: &[usize]) -> Vec<f64> {
    let k = idx.len();
    if k <= x.n() {
        let xf = x.columns(idx);
        let qr = xf.qr();
        let r = qr.r();
        let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let singular = max_diag == 0.0
            || (0..k).any(|i| r[(i, i)].abs() <= SINGULAR_TOL * max_diag);
        if !singular {
            let mut rhs = DVector::from_column_slice(y);
            qr.q_tr_mul(&mut rhs);
            let rhs = rhs.rows(0, k).into_owned();
            if let Some(sol) = r.solve_upper_triangular(&rhs) {
                return sol.iter().copied().collect();
            }
        }
    }
    ridge_solve(x, y, idx)
}

fn ridge_solve(x: &DesignMatrix, y: &[f64], idx: &[usize]) -> Vec<f64> {
    let mut g = x.gram(idx);
    let trace = g.trace();
    if trace == 0.0 {
        return vec![0.0; idx.len()];
    }
    let ridge = RIDGE_FACTOR * trace;
    for i in 0..idx.len() {
        g[(i, i)] += ridge;
    }
    let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&j| dot(x.column(j), y)));
    match g.clone().cholesky() {
        Some(ch) => ch.solve(&rhs).iter().copied().collect(),
        None => {
            // Ridge keeps g positive definite; this only triggers on overflow.
            let eig = SymmetricEigen::new(g);
            pinv_apply(&eig, &rhs)
        }
    }
}

fn pinv_apply(eig: &SymmetricEigen<f64, nalgebra::Dyn>, rhs: &DVector<f64>) -> Vec<f64> {
    let max_ev = eig.eigenvalues.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut out = DVector::zeros(rhs.len());
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > SINGULAR_TOL * max_ev {
            let u = eig.eigenvectors.column(i);
            out += u * (u.dot(rhs) / ev);
        }
    }
    out.iter().copied().collect()
}

/// `‖P_S r‖²`, the squared norm of the projection of `r` onto the span of
/// the columns in `S`. Rank-deficient `X_S` projects onto the actual column
/// span (column-pivoted QR, numerically dependent columns dropped).
pub fn projection_gain(x: &DesignMatrix, r: &[f64], s: &SupportSet) -> Result<f64> {
    x.check_rows(r.len(), "residual")?;
    x.check_support(s)?;
    if s.is_empty() {
        return Ok(0.0);
    }
    let xs = x.columns(s.as_slice());
    let k = s.len().min(x.n());
    let qr = xs.col_piv_qr();
    let rr = qr.r();
    let max_diag = (0..k).map(|i| rr[(i, i)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 {
        return Ok(0.0);
    }
    let rank = (0..k)
        .take_while(|&i| rr[(i, i)].abs() > SINGULAR_TOL * max_diag)
        .count();
    let q = qr.q();
    let rv = DVector::from_column_slice(r);
    let gain: f64 = (0..rank).map(|i| q.column(i).dot(&rv).powi(2)).sum();
    Ok(gain.clamp(0.0, norm_sq(r)))
}

/// `‖X_Sᵀ r‖²`.
pub fn correlation_gain(x: &DesignMatrix, r: &[f64], s: &SupportSet) -> Result<f64> {
    x.check_rows(r.len(), "residual")?;
    x.check_support(s)?;
    Ok(s.iter().map(|j| dot(x.column(j), r).powi(2)).sum())
}

/// `cᵀ G⁺ c` for a small symmetric positive semi-definite `G` given densely
/// in row-major order. Cholesky when the pivots stay well away from zero,
/// eigen-decomposition pseudo-inverse otherwise.
pub(crate) fn quadratic_pinv(g: &[f64], c: &[f64]) -> f64 {
    let k = c.len();
    if k == 1 {
        return if g[0] > 0.0 { c[0] * c[0] / g[0] } else { 0.0 };
    }
    let max_diag = (0..k).map(|i| g[i * k + i]).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return 0.0;
    }
    // In-place Cholesky on a copy; forward substitution gives ‖L⁻¹c‖².
    let mut l = g.to_vec();
    let mut ok = true;
    for j in 0..k {
        let mut d = l[j * k + j];
        for m in 0..j {
            d -= l[j * k + m] * l[j * k + m];
        }
        if d <= SINGULAR_TOL * max_diag * 1e3 {
            ok = false;
            break;
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in j + 1..k {
            let mut v = l[i * k + j];
            for m in 0..j {
                v -= l[i * k + m] * l[j * k + m];
            }
            l[i * k + j] = v / d;
        }
    }
    if ok {
        let mut z = vec![0.0; k];
        for i in 0..k {
            let mut v = c[i];
            for m in 0..i {
                v -= l[i * k + m] * z[m];
            }
            z[i] = v / l[i * k + i];
        }
        return norm_sq(&z);
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(k, k, g));
    let cv = DVector::from_column_slice(c);
    let sol = pinv_apply(&eig, &cv);
    dot(&sol, c)
}

/// Least squares on a growing support, updated by appending columns to a
/// modified Gram-Schmidt factorization (with one re-orthogonalization pass).
///
/// Once a numerically dependent column arrives, or the support outgrows
/// `n`, every later fit is delegated to [`restricted_least_squares`].
#[derive(Debug, Clone)]
pub struct IncrementalLeastSquares<'a> {
    x: &'a DesignMatrix,
    y: Vec<f64>,
    support: Vec<usize>,
    q: Vec<Vec<f64>>,
    // Column k of R holds its first k + 1 entries.
    r: Vec<Vec<f64>>,
    qty: Vec<f64>,
    max_diag: f64,
    degenerate: bool,
}

/// Result of a restricted fit.
#[derive(Debug, Clone)]
pub struct Fit {
    pub coefficients: CoefficientVector,
    /// `Xβ - y`.
    pub residual: Vec<f64>,
    pub rss: f64,
}

impl<'a> IncrementalLeastSquares<'a> {
    pub fn new(x: &'a DesignMatrix, y: &[f64]) -> Result<Self> {
        x.check_rows(y.len(), "observation")?;
        Ok(Self {
            x,
            y: y.to_vec(),
            support: Vec::new(),
            q: Vec::new(),
            r: Vec::new(),
            qty: Vec::new(),
            max_diag: 0.0,
            degenerate: false,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Appends column `j`. Columns already present are ignored.
    pub fn push(&mut self, j: usize) {
        if self.support.contains(&j) {
            return;
        }
        self.support.push(j);
        if self.degenerate {
            return;
        }
        if self.support.len() > self.x.n() {
            self.degenerate = true;
            return;
        }
        let col = self.x.column(j);
        let col_norm = norm(col);
        let mut v = col.to_vec();
        let mut coeffs = vec![0.0; self.q.len()];
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = dot(qi, &v);
                coeffs[i] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let diag = norm(&v);
        let scale = self.max_diag.max(col_norm);
        if scale == 0.0 || diag <= SINGULAR_TOL * scale {
            self.degenerate = true;
            return;
        }
        self.max_diag = self.max_diag.max(diag);
        v.iter_mut().for_each(|e| *e /= diag);
        self.qty.push(dot(&v, &self.y));
        self.q.push(v);
        coeffs.push(diag);
        self.r.push(coeffs);
    }

    pub fn fit(&self) -> Result<Fit> {
        let p = self.x.p();
        let coefficients = if self.degenerate {
            restricted_least_squares(self.x, &self.y, &SupportSet::new(self.support.clone()))?
        } else {
            let k = self.support.len();
            let mut sol = vec![0.0; k];
            for i in (0..k).rev() {
                let mut v = self.qty[i];
                for m in i + 1..k {
                    v -= self.r[m][i] * sol[m];
                }
                sol[i] = v / self.r[i][i];
            }
            let mut beta = vec![0.0; p];
            for (&j, s) in self.support.iter().zip(sol) {
                beta[j] = s;
            }
            CoefficientVector::new(beta)
        };
        let residual = residual(self.x, &self.y, coefficients.values());
        let rss = norm_sq(&residual);
        Ok(Fit {
            coefficients,
            residual,
            rss,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        DesignMatrix::from_row_major(n, p, &v).unwrap()
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn identity(n: usize) -> DesignMatrix {
        DesignMatrix::new(DMatrix::identity(n, n)).unwrap()
    }

    // Independent oracle: Gram-Schmidt basis of the span, then ‖QᵀR‖².
    fn gram_schmidt_projection(x: &DesignMatrix, r: &[f64], s: &[usize]) -> f64 {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for &j in s {
            let mut v = x.column(j).to_vec();
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv > 1e-10 {
                basis.push(v.iter().map(|a| a / nv).collect());
            }
        }
        basis
            .iter()
            .map(|b| b.iter().zip(r).map(|(a, c)| a * c).sum::<f64>().powi(2))
            .sum()
    }

    #[test]
    fn empty_support_gives_zero_model() {
        let x = random_matrix(5, 3, 1);
        let y = random_vec(5, 2);
        let beta = restricted_least_squares(&x, &y, &SupportSet::empty()).unwrap();
        assert_eq!(beta.values(), &[0.0; 3]);
        let r = residual(&x, &y, beta.values());
        for (ri, yi) in r.iter().zip(&y) {
            assert_eq!(*ri, -yi);
        }
    }

    #[test]
    fn identity_design_picks_coordinates() {
        let x = identity(3);
        let beta =
            restricted_least_squares(&x, &[3.0, 1.0, 4.0], &SupportSet::new(vec![0, 2])).unwrap();
        assert_relative_eq!(beta.values()[0], 3.0, epsilon = 1e-14);
        assert_eq!(beta.values()[1], 0.0);
        assert_relative_eq!(beta.values()[2], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn matches_two_by_two_normal_equations() {
        let x = random_matrix(6, 4, 11);
        let y = random_vec(6, 12);
        let beta = restricted_least_squares(&x, &y, &SupportSet::new(vec![1, 3])).unwrap();
        // Direct 2x2 normal-equations solve by Cramer's rule.
        let (a, b) = (x.column(1), x.column(3));
        let g11: f64 = a.iter().map(|v| v * v).sum();
        let g22: f64 = b.iter().map(|v| v * v).sum();
        let g12: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
        let c1: f64 = a.iter().zip(&y).map(|(u, v)| u * v).sum();
        let c2: f64 = b.iter().zip(&y).map(|(u, v)| u * v).sum();
        let det = g11 * g22 - g12 * g12;
        let b1 = (c1 * g22 - c2 * g12) / det;
        let b2 = (g11 * c2 - g12 * c1) / det;
        assert!((beta.values()[1] - b1).abs() < 1e-8);
        assert!((beta.values()[3] - b2).abs() < 1e-8);
        assert_eq!(beta.values()[0], 0.0);
        assert_eq!(beta.values()[2], 0.0);
    }

    #[test]
    fn duplicated_column_splits_weight() {
        let mut m = DMatrix::zeros(4, 2);
        let col = [1.0, 2.0, -1.0, 0.5];
        m.column_mut(0).copy_from_slice(&col);
        m.column_mut(1).copy_from_slice(&col);
        let x = DesignMatrix::new(m).unwrap();
        let y: Vec<f64> = col.iter().map(|v| 2.0 * v).collect();
        let beta = restricted_least_squares(&x, &y, &SupportSet::new(vec![0, 1])).unwrap();
        // Minimum-norm solution puts weight 1 on each copy.
        assert!((beta.values()[0] - 1.0).abs() < 1e-6);
        assert!((beta.values()[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = random_matrix(4, 3, 5);
        assert!(restricted_least_squares(&x, &[1.0; 3], &SupportSet::empty()).is_err());
        assert!(restricted_least_squares(&x, &[1.0; 4], &SupportSet::new(vec![3])).is_err());
        assert!(projection_gain(&x, &[1.0; 3], &SupportSet::new(vec![0])).is_err());
    }

    #[test]
    fn projection_gain_cases() {
        let x = identity(4);
        let r = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(projection_gain(&x, &r, &SupportSet::empty()).unwrap(), 0.0);
        assert_relative_eq!(
            projection_gain(&x, &r, &SupportSet::new(vec![1])).unwrap(),
            4.0,
            epsilon = 1e-14
        );

        let x = random_matrix(8, 5, 21);
        let r = random_vec(8, 22);
        let s = [0, 1, 2];
        let got = projection_gain(&x, &r, &SupportSet::new(s.to_vec())).unwrap();
        let want = gram_schmidt_projection(&x, &r, &s);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn correlation_gain_matches_projection_on_orthonormal_columns() {
        let x = identity(5);
        let r = random_vec(5, 3);
        let s = SupportSet::new(vec![0, 2, 4]);
        assert_eq!(correlation_gain(&x, &r, &SupportSet::empty()).unwrap(), 0.0);
        assert_relative_eq!(
            correlation_gain(&x, &r, &s).unwrap(),
            projection_gain(&x, &r, &s).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn quadratic_pinv_agrees_with_projection() {
        let x = random_matrix(10, 6, 31);
        let r = random_vec(10, 32);
        let s = [0, 2, 3, 5];
        let g = x.gram(&s);
        let gflat: Vec<f64> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| g[(i, j)]).collect();
        let c: Vec<f64> = s.iter().map(|&j| dot(x.column(j), &r)).collect();
        let want = projection_gain(&x, &r, &SupportSet::new(s.to_vec())).unwrap();
        assert!((quadratic_pinv(&gflat, &c) - want).abs() < 1e-10 * want.max(1.0));
    }

    #[test]
    fn incremental_matches_fresh_solve() {
        let x = random_matrix(12, 9, 41);
        let y = random_vec(12, 42);
        let mut inc = IncrementalLeastSquares::new(&x, &y).unwrap();
        for &j in &[4, 0, 7, 2, 8] {
            inc.push(j);
            let fit = inc.fit().unwrap();
            let fresh =
                restricted_least_squares(&x, &y, &SupportSet::new(inc.support().to_vec())).unwrap();
            for (a, b) in fit.coefficients.values().iter().zip(fresh.values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    fn arb_problem() -> impl Strategy<Value = (usize, usize, u64, Vec<usize>, Vec<usize>)> {
        (3usize..12, 2usize..10, any::<u64>()).prop_flat_map(|(n, p, seed)| {
            let sub = proptest::collection::vec(0..p, 0..p.min(n));
            (Just(n), Just(p), Just(seed), sub.clone(), sub)
        })
    }

    proptest! {
        #[test]
        fn residual_is_orthogonal_to_support((n, p, seed, f, _g) in arb_problem()) {
            let x = random_matrix(n, p, seed);
            let y = random_vec(n, seed ^ 0xABCD);
            let f = SupportSet::new(f);
            let beta = restricted_least_squares(&x, &y, &f).unwrap();
            prop_assert!(beta.support().is_subset(&f));
            let r = residual(&x, &y, beta.values());
            let bound = 1e-8 * x.max_abs() * norm(&y);
            for j in f.iter() {
                prop_assert!(dot(x.column(j), &r).abs() <= bound);
            }
        }

        #[test]
        fn larger_support_never_increases_residual((n, p, seed, f, g) in arb_problem()) {
            let x = random_matrix(n, p, seed);
            let y = random_vec(n, seed ^ 0x1234);
            let f = SupportSet::new(f);
            let fg = f.union(&SupportSet::new(g));
            let r1 = norm(&residual(&x, &y, restricted_least_squares(&x, &y, &f).unwrap().values()));
            let r2 = norm(&residual(&x, &y, restricted_least_squares(&x, &y, &fg).unwrap().values()));
            prop_assert!(r2 <= r1 + 1e-10 * norm(&y));
        }

        #[test]
        fn projection_pythagoras((n, p, seed, f, g) in arb_problem()) {
            let x = random_matrix(n, p, seed);
            let r = random_vec(n, seed ^ 0x77);
            let mut s = SupportSet::new(f);
            if s.is_empty() { s = SupportSet::new(g); }
            prop_assume!(!s.is_empty());
            let gain = projection_gain(&x, &r, &s).unwrap();
            // (I - P_S) r via least squares on S.
            let beta = restricted_least_squares(&x, &r, &s).unwrap();
            let perp = norm_sq(&residual(&x, &r, beta.values()));
            let total = norm_sq(&r);
            prop_assert!((gain + perp - total).abs() <= 1e-8 * total.max(1e-300));
            // Order invariance.
            let mut rev: Vec<usize> = s.as_slice().to_vec();
            rev.reverse();
            let xs = x.columns(&rev);
            let perm = DesignMatrix::new(xs).unwrap();
            let all: SupportSet = (0..rev.len()).collect();
            let gain_rev = projection_gain(&perm, &r, &all).unwrap();
            prop_assert!((gain - gain_rev).abs() <= 1e-8 * total.max(1e-300));
        }

        #[test]
        fn gain_ratio_within_restricted_eigenvalues((n, p, seed, f, _g) in arb_problem()) {
            prop_assume!(!f.is_empty());
            let x = random_matrix(n, p, seed);
            let r = random_vec(n, seed ^ 0x55);
            let s = SupportSet::new(f);
            let proj = projection_gain(&x, &r, &s).unwrap();
            prop_assume!(proj > 1e-10);
            let corr = correlation_gain(&x, &r, &s).unwrap();
            let eig = SymmetricEigen::new(x.gram(s.as_slice()));
            let lo = eig.eigenvalues.min();
            let hi = eig.eigenvalues.max();
            let ratio = corr / proj;
            prop_assert!(ratio >= lo * (1.0 - 1e-8) - 1e-12);
            prop_assert!(ratio <= hi * (1.0 + 1e-8) + 1e-12);
        }
    }
}
