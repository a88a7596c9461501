//! Dense row-major matrix of f64.
//!
//! Deliberately small: the whole laboratory runs on two-dimensional arrays,
//! so there is no axis generality and no views. Anything batched stores one
//! sample per row.

use crate::error::{Error, Result};
use crate::tensor::prng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a row-major buffer. Length must equal rows*cols.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("{}x{} ({} values)", rows, cols, rows * cols),
                format!("{} values", data.len()),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Entries drawn uniformly from [-bound, bound).
    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut SplitMix64) -> Self {
        let data = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
        Matrix { rows, cols, data }
    }

    /// Entries drawn i.i.d. standard normal.
    pub fn standard_normal(rows: usize, cols: usize, rng: &mut SplitMix64) -> Self {
        let data = (0..rows * cols).map(|_| rng.normal()).collect();
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// New matrix made of the given rows, in order (rows may repeat).
    pub fn gather_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.data[r * self.cols..(r + 1) * self.cols].copy_from_slice(self.row(i));
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Plain triple-loop product, kji-ordered for cache friendliness.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} * {}xN", self.rows, self.cols, self.cols),
                format!("{} * {}", self.shape_str(), other.shape_str()),
            ));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for j in 0..n {
                    orow[j] += a * brow[j];
                }
            }
        }
        debug_assert!(out.all_finite(), "matmul produced a non-finite entry");
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    pub fn mul_elem(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with("mul_elem", other, |a, b| a * b)
    }

    fn zip_with(
        &self,
        op: &'static str,
        other: &Matrix,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::shape(op, self.shape_str(), other.shape_str()));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// In-place `self += other * c`.
    pub fn axpy(&mut self, c: f64, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape("axpy", self.shape_str(), other.shape_str()));
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
        Ok(())
    }

    /// Solves `self * X = rhs` for a square `self` by Gaussian elimination
    /// with partial pivoting; `rhs` may carry several right-hand sides as
    /// columns.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.rows;
        if self.cols != n {
            return Err(Error::shape("solve", "square matrix", self.shape_str()));
        }
        if rhs.rows != n {
            return Err(Error::shape(
                "solve",
                format!("{n} right-hand-side rows"),
                rhs.shape_str(),
            ));
        }
        let mut a = self.clone();
        let mut b = rhs.clone();
        for k in 0..n {
            let mut pivot = k;
            for i in k + 1..n {
                if a.get(i, k).abs() > a.get(pivot, k).abs() {
                    pivot = i;
                }
            }
            let pv = a.get(pivot, k);
            if pv == 0.0 {
                return Err(Error::Contract(format!(
                    "solve found a zero pivot in column {k}; matrix is singular"
                )));
            }
            if pivot != k {
                for j in 0..n {
                    let (u, v) = (a.get(k, j), a.get(pivot, j));
                    a.set(k, j, v);
                    a.set(pivot, j, u);
                }
                for j in 0..b.cols {
                    let (u, v) = (b.get(k, j), b.get(pivot, j));
                    b.set(k, j, v);
                    b.set(pivot, j, u);
                }
            }
            for i in k + 1..n {
                let factor = a.get(i, k) / pv;
                if factor == 0.0 {
                    continue;
                }
                for j in k..n {
                    let v = a.get(i, j) - factor * a.get(k, j);
                    a.set(i, j, v);
                }
                for j in 0..b.cols {
                    let v = b.get(i, j) - factor * b.get(k, j);
                    b.set(i, j, v);
                }
            }
        }
        let mut x = Matrix::zeros(n, b.cols);
        for j in 0..b.cols {
            for i in (0..n).rev() {
                let mut s = b.get(i, j);
                for k in i + 1..n {
                    s -= a.get(i, k) * x.get(k, j);
                }
                x.set(i, j, s / a.get(i, i));
            }
        }
        Ok(x)
    }
}
