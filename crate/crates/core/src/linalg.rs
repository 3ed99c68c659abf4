//! Dense vectors and small matrices in `f64`, plus the two solvers the rest
//! of the crate needs: Gaussian elimination and a Jacobi eigenvalue sweep.
//!
//! Problem sizes are desk scale (dimensions in the tens at most), so
//! everything favors clarity and determinism over performance. All
//! accumulations run in a fixed left-to-right order so results are
//! bit-stable across runs.

use std::ops::Index;

use crate::error::{Error, Result};

/// A point of R^n. Coordinates are always finite; the checked constructors
/// enforce this once so arithmetic can assume it.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("vector must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("vector coordinates must be finite"));
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// Internal constructor for arithmetic results; debug builds still check.
    pub(crate) fn unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector::unchecked(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim());
        Vector::unchecked(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::unchecked(self.coords.iter().map(|a| a * s).collect())
    }

    pub fn distance_sq(&self, other: &Vector) -> f64 {
        self.sub(other).norm_sq()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

/// a*x + b*y in one pass.
pub fn linear_combination(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
    assert_eq!(x.dim(), y.dim());
    Vector::unchecked(
        x.coords()
            .iter()
            .zip(y.coords())
            .map(|(xi, yi)| a * xi + b * yi)
            .collect(),
    )
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix must have positive dimensions"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::invalid("matrix must have at least one row"));
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("matrix rows must have equal length"));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn matvec(&self, x: &Vector) -> Vector {
        assert_eq!(self.cols, x.dim());
        let mut out = vec![0.0; self.rows];
        for (i, oi) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *oi = row.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        }
        Vector::unchecked(out)
    }

    pub fn transpose_matvec(&self, y: &Vector) -> Vector {
        assert_eq!(self.rows, y.dim());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let yi = y[i];
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += yi * a;
            }
        }
        Vector::unchecked(out)
    }

    /// A^T A, a `cols x cols` symmetric positive semidefinite matrix.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for k in 0..self.rows {
            let row = &self.data[k * n..(k + 1) * n];
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] += row[i] * row[j];
                }
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    /// M M^T, a `rows x rows` symmetric positive semidefinite matrix.
    pub fn outer_gram(&self) -> Matrix {
        let r = self.rows;
        let mut data = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                let ri = &self.data[i * self.cols..(i + 1) * self.cols];
                let rj = &self.data[j * self.cols..(j + 1) * self.cols];
                data[i * r + j] = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            }
        }
        Matrix {
            rows: r,
            cols: r,
            data,
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &Vector) -> Result<Vector> {
    if !a.is_square() {
        return Err(Error::invalid("linear solve requires a square matrix"));
    }
    let n = a.rows;
    if b.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim(),
        });
    }

    let mut m = a.data.clone();
    let mut rhs: Vec<f64> = b.coords().to_vec();
    let scale = m.iter().map(|v| v.abs()).fold(0.0_f64, f64::max).max(1.0);

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col]
                    .abs()
                    .partial_cmp(&m[j * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot_row * n + col].abs() <= 1e-12 * scale {
            return Err(Error::invalid("singular linear system"));
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for row in (col + 1)..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericFailure(
            "linear solve produced non-finite values".into(),
        ));
    }
    Ok(Vector::unchecked(x))
}

/// Largest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
pub fn max_eigenvalue_symmetric(m: &Matrix) -> f64 {
    assert!(m.is_square());
    debug_assert!(m.is_symmetric(1e-9));
    let n = m.rows;
    if n == 1 {
        return m.get(0, 0);
    }
    let mut a = m.data.clone();
    let idx = |i: usize, j: usize| i * n + j;
    let scale = a.iter().map(|v| v.abs()).fold(0.0_f64, f64::max).max(1.0);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[idx(i, j)] * a[idx(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }

    (0..n)
        .map(|i| a[idx(i, i)])
        .fold(f64::NEG_INFINITY, f64::max)
}
