//! Dense vector and matrix kernel.
//!
//! Everything here is deliberately plain: row-major storage, sequential
//! left-to-right reductions, no reordering. For a fixed platform every result
//! is bit-reproducible, which the benchmark determinism contract relies on.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix data has {got} entries, expected {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, got: usize },
    #[error("matrix must have at least as many columns as rows ({rows}x{cols})")]
    TooManyRows { rows: usize, cols: usize },
    #[error("matrix is rank deficient (pivot {index} has magnitude {pivot:e})")]
    RankDeficient { index: usize, pivot: f64 },
    #[error("zero matrix has no spectral norm estimate")]
    ZeroMatrix,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("power iteration did not converge in {iterations} steps (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },
}

/// A dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `data`, rejecting NaN and infinities.
    pub fn new(data: Vec<f64>) -> Result<Self, LinalgError> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self(data))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..n).map(f).collect())
    }

    // Kernel results are finite whenever their inputs are; skip the scan.
    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(x, y)| x + a * y).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(&other.0).map(|(x, y)| x - y).collect())
    }

    pub fn scale(&self, a: f64) -> Vector {
        Vector(self.0.iter().map(|x| a * x).collect())
    }

    pub fn dist2(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = LinalgError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape { rows, cols, got: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vector, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok(Vector(
            (0..self.rows).map(|i| dot(self.row(i), x)).collect(),
        ))
    }

    /// `Aᵀ y`, accumulated row by row.
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<Vector, LinalgError> {
        if y.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, got: y.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Ok(Vector(out))
    }

    /// `A Bᵀ`, used for orthonormality checks.
    pub fn mul_transpose(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, got: other.cols });
        }
        Ok(DenseMatrix::from_fn(self.rows, other.rows, |i, j| {
            dot(self.row(i), other.row(j))
        }))
    }
}

/// Free-function form of [`DenseMatrix::matvec`].
pub fn matvec(a: &DenseMatrix, x: &Vector) -> Result<Vector, LinalgError> {
    a.matvec(x)
}

/// Largest absolute deviation of `A Aᵀ` from the identity.
pub fn orthonormality_defect(a: &DenseMatrix) -> f64 {
    let g = a.mul_transpose(a).expect("self product is always conformable");
    let mut worst = 0.0_f64;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) - target).abs());
        }
    }
    worst
}

/// Thin Q factor of a tall matrix `M` (r ≥ c) via Householder QR.
///
/// Works on a column-major copy. Returns Q as an r×c row-major matrix.
fn householder_thin_q(m: &DenseMatrix, scale: f64) -> Result<DenseMatrix, LinalgError> {
    let (r, c) = (m.rows(), m.cols());
    debug_assert!(r >= c);
    // column-major working copy
    let mut w: Vec<Vec<f64>> = (0..c).map(|j| (0..r).map(|i| m.get(i, j)).collect()).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(c);
    let threshold = 1e-12 * scale;

    for k in 0..c {
        let col = &w[k];
        let alpha_norm = dot(&col[k..], &col[k..]).sqrt();
        let x0 = col[k];
        let alpha = if x0 >= 0.0 { -alpha_norm } else { alpha_norm };
        // R[k][k] = alpha
        if alpha_norm <= threshold {
            return Err(LinalgError::RankDeficient { index: k, pivot: alpha_norm });
        }
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] -= alpha;
        let vnorm = dot(&v, &v).sqrt();
        if vnorm > 0.0 {
            for vi in v.iter_mut() {
                *vi /= vnorm;
            }
        }
        // apply H = I - 2vvᵀ to the remaining columns
        for col in w.iter_mut().skip(k) {
            let s = 2.0 * dot(&v, &col[k..]);
            for (ci, vi) in col[k..].iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        }
        reflectors.push(v);
    }

    // Accumulate Q = H_0 H_1 ... H_{c-1} applied to the first c unit columns.
    let mut q: Vec<Vec<f64>> = (0..c)
        .map(|j| {
            let mut e = vec![0.0; r];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        for col in q.iter_mut() {
            let s = 2.0 * dot(v, &col[k..]);
            for (ci, vi) in col[k..].iter_mut().zip(v) {
                *ci -= s * vi;
            }
        }
    }
    Ok(DenseMatrix::from_fn(r, c, |i, j| q[j][i]))
}

/// Orthonormal basis for the row space of `B` (m ≤ n), returned as the rows
/// of an m×n matrix `A` with `A Aᵀ = I`.
///
/// Householder QR of `Bᵀ`; the thin Q transposed is `A`.
pub fn orthonormalize_rows(b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if b.rows() > b.cols() {
        return Err(LinalgError::TooManyRows { rows: b.rows(), cols: b.cols() });
    }
    let q = householder_thin_q(&b.transpose(), b.frobenius_norm())?;
    Ok(q.transpose())
}

/// Orthonormal basis for the column space of a tall `B` (m ≥ n): an m×n
/// matrix with `AᵀA = I`.
pub fn orthonormalize_columns(b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if b.rows() < b.cols() {
        return Err(LinalgError::TooManyRows { rows: b.cols(), cols: b.rows() });
    }
    householder_thin_q(b, b.frobenius_norm())
}

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 5000;

/// Estimates `‖A‖₂²` by power iteration on `AᵀA`.
///
/// Starts from the normalized ones vector (falling back to the unit vector of
/// the heaviest column if that start is annihilated) and stops once the
/// Rayleigh quotient changes by less than `tol` relative. The returned value
/// is the last Rayleigh quotient, which never exceeds the true value.
pub fn spectral_norm_sq(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64, LinalgError> {
    if !(tol > 0.0) {
        return Err(LinalgError::BadTolerance(tol));
    }
    if a.is_zero() {
        return Err(LinalgError::ZeroMatrix);
    }
    let n = a.cols();
    let mut v = Vector::filled(n, 1.0 / (n as f64).sqrt());
    let mut av = a.matvec(&v)?;
    if av.norm_sq() == 0.0 {
        let heaviest = (0..n)
            .max_by(|&i, &j| {
                let ci: f64 = (0..a.rows()).map(|r| a.get(r, i).powi(2)).sum();
                let cj: f64 = (0..a.rows()).map(|r| a.get(r, j).powi(2)).sum();
                ci.total_cmp(&cj)
            })
            .unwrap_or(0);
        v = Vector::zeros(n);
        v[heaviest] = 1.0;
        av = a.matvec(&v)?;
    }
    let mut estimate = av.norm_sq();
    for _ in 0..max_iter {
        let w = a.matvec_transpose(&av)?;
        let wn = w.norm2();
        if wn == 0.0 {
            return Ok(estimate);
        }
        v = w.scale(1.0 / wn);
        av = a.matvec(&v)?;
        let next = av.norm_sq();
        let change = (next - estimate).abs();
        estimate = next;
        if change <= tol * estimate {
            return Ok(estimate);
        }
    }
    Err(LinalgError::NoConvergence { iterations: max_iter, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn matvec_identity() {
        let a = DenseMatrix::identity(2);
        let y = a.matvec(&[3.0, -1.0]).unwrap();
        assert_eq!(y.as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn matvec_hand_arithmetic() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap().as_slice(), &[3.0, 1.0]);
    }

    #[test]
    fn matvec_zero_matrix() {
        let a = DenseMatrix::zeros(2, 2);
        assert_eq!(a.matvec(&[7.0, -4.5]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            a.matvec(&[1.0, 2.0]),
            Err(LinalgError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn vector_rejects_nan() {
        assert_eq!(Vector::new(vec![1.0, f64::NAN]), Err(LinalgError::NonFinite(1)));
        assert!(DenseMatrix::new(1, 2, vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn orthonormalize_diagonal() {
        let b = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let a = orthonormalize_rows(&b).unwrap();
        assert!(orthonormality_defect(&a) <= 1e-12);
    }

    #[test]
    fn orthonormalize_gaussian_3x6() {
        let b = gaussian_matrix(3, 6, 11);
        let a = orthonormalize_rows(&b).unwrap();
        assert!(orthonormality_defect(&a) <= 1e-10);
        // each row of B lies in the row space of A: B = (B Aᵀ) A
        let coef = b.mul_transpose(&a).unwrap();
        for i in 0..3 {
            for j in 0..6 {
                let rebuilt: f64 = (0..3).map(|k| coef.get(i, k) * a.get(k, j)).sum();
                assert!((rebuilt - b.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthonormalize_duplicate_row_fails() {
        let b = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(orthonormalize_rows(&b), Err(LinalgError::RankDeficient { .. })));
    }

    #[test]
    fn orthonormalize_columns_tall() {
        let b = gaussian_matrix(9, 4, 5);
        let a = orthonormalize_columns(&b).unwrap();
        assert_eq!((a.rows(), a.cols()), (9, 4));
        assert!(orthonormality_defect(&a.transpose()) <= 1e-12);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let l = spectral_norm_sq(&a, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((l - 9.0).abs() <= 1e-8, "{l}");
    }

    #[test]
    fn spectral_norm_orthonormal_rows() {
        let a = orthonormalize_rows(&gaussian_matrix(5, 12, 3)).unwrap();
        let l = spectral_norm_sq(&a, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((l - 1.0).abs() <= 1e-8, "{l}");
    }

    #[test]
    fn spectral_norm_zero_matrix_errors() {
        let a = DenseMatrix::zeros(3, 3);
        assert_eq!(spectral_norm_sq(&a, 1e-10, 100), Err(LinalgError::ZeroMatrix));
    }

    #[test]
    fn spectral_norm_start_orthogonal_to_ones() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let l = spectral_norm_sq(&a, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_reports_last_estimate() {
        let a = gaussian_matrix(20, 20, 9);
        match spectral_norm_sq(&a, 1e-300, 2) {
            Err(LinalgError::NoConvergence { iterations: 2, estimate }) => assert!(estimate > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn matvec_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let m = gaussian_matrix(4, 7, seed);
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0xabc);
            let x = Vector::from_fn(7, |_| rng.gen::<f64>() - 0.5);
            let y = Vector::from_fn(7, |_| rng.gen::<f64>() - 0.5);
            let lhs = m.matvec(&x.scale(a).axpy(b, &y)).unwrap();
            let rhs = m.matvec(&x).unwrap().scale(a).axpy(b, &m.matvec(&y).unwrap());
            let scale = 1.0 + rhs.norm_inf();
            prop_assert!(lhs.sub(&rhs).norm_inf() <= 1e-12 * scale);
        }

        #[test]
        fn spectral_estimate_dominates_rayleigh_quotients(seed in 0u64..200) {
            let m = gaussian_matrix(6, 9, seed);
            let l = spectral_norm_sq(&m, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed + 17);
            for _ in 0..20 {
                let v = Vector::from_fn(9, |_| rng.gen::<f64>() - 0.5);
                let rq = m.matvec(&v).unwrap().norm_sq() / v.norm_sq();
                prop_assert!(l >= rq - SPECTRAL_TOL * l);
            }
        }

        #[test]
        fn orthonormal_rows_for_random_shapes(seed in 0u64..500, m in 1usize..8, extra in 0usize..8) {
            let b = gaussian_matrix(m, m + extra, seed);
            let a = orthonormalize_rows(&b).unwrap();
            prop_assert!(orthonormality_defect(&a) <= 1e-10);
        }
    }
}
