//! Dense complex matrices and the small set of kernels the rest of the crate
//! needs: matrix-vector products, Hermitian inner products and norms.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Stacks vectors as the columns of a matrix.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `y = self * x`. Panics on dimension mismatch.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols, "matvec: x length");
        assert_eq!(y.len(), self.rows, "matvec: y length");
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dotu(self.row(i), x);
        }
    }

    /// `y = self^H * x`.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows, "adjoint_matvec: x length");
        let mut y = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a.conj() * xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Largest deviation from Hermitian symmetry, `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Unconjugated dot product `sum a_i b_i`.
#[inline]
pub fn dotu(a: &[C64], b: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    C64::new(re, im)
}

/// Hermitian inner product `sum conj(a_i) b_i`.
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Relative 2-norm distance `|a - b| / max(|b|, tiny)`.
pub fn relative_error(a: &[C64], b: &[C64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    diff / norm2(b).max(f64::MIN_POSITIVE)
}

/// Real row-major matrix times a complex vector held as split real and
/// imaginary planes. Four independent accumulators per plane keep the inner
/// loop vectorizable.
pub fn real_matvec_split(a: &[f64], n: usize, xr: &[f64], xi: &[f64], yr: &mut [f64], yi: &mut [f64]) {
    debug_assert_eq!(a.len(), n * xr.len());
    let cols = xr.len();
    for i in 0..n {
        let row = &a[i * cols..(i + 1) * cols];
        let mut r = [0.0f64; 4];
        let mut m = [0.0f64; 4];
        let chunks = cols / 4;
        for c in 0..chunks {
            let k = 4 * c;
            for l in 0..4 {
                r[l] += row[k + l] * xr[k + l];
                m[l] += row[k + l] * xi[k + l];
            }
        }
        for k in 4 * chunks..cols {
            r[0] += row[k] * xr[k];
            m[0] += row[k] * xi[k];
        }
        yr[i] = (r[0] + r[1]) + (r[2] + r[3]);
        yi[i] = (m[0] + m[1]) + (m[2] + m[3]);
    }
}
