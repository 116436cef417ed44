//! Minimal dense row-major `f64` matrix.
//!
//! Problem sizes here are at most a few thousand nodes, so everything is
//! stored dense and operated on with plain loops. Rows are contiguous,
//! which the hot kernels in [`crate::fw`] rely on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Matrix with every entry set to `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Build entrywise from `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot back a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self * rhs`. Panics on inner-dimension mismatch; callers pair
    /// shapes statically.
    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimensions differ");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        mul_rows_into(self, 0..self.rows, rhs, &mut out);
        out
    }

    /// Frobenius distance `||self - other||_F`.
    pub fn frob_dist(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = a - b;
            acc += d * d;
        }
        libm::sqrt(acc)
    }

    /// Sum of entrywise products `<self, other>`.
    pub fn dot(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

/// `out[r, :] += a[r, :] * b` for `r` in `rows`, with `out` pre-shaped to
/// `a.rows x b.cols`. The i-k-j loop order keeps all inner accesses on
/// contiguous rows.
pub fn mul_rows_into(a: &Mat, rows: core::ops::Range<usize>, b: &Mat, out: &mut Mat) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!(out.cols, b.cols, "output width differs");
    for i in rows {
        let arow = a.row(i);
        // Split borrows: out row is rewritten in place.
        let orow = &mut out.data[i * out.cols..(i + 1) * out.cols];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = b.row(k);
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_direct_triple_loop() {
        let a = Mat::from_fn(3, 4, |i, j| (i * 7 + j) as f64 * 0.5 - 3.0);
        let b = Mat::from_fn(4, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let c = a.matmul(&b);
        for i in 0..3 {
            for j in 0..2 {
                let mut want = 0.0;
                for k in 0..4 {
                    want += a.get(i, k) * b.get(k, j);
                }
                assert_eq!(c.get(i, j), want);
            }
        }
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Mat::from_vec(2, 3, vec![0.0; 5]).is_err());
        assert!(Mat::from_vec(2, 3, vec![0.0; 6]).is_ok());
    }

    #[test]
    fn frob_dist_simple() {
        let a = Mat::zeros(2, 2);
        let mut b = Mat::zeros(2, 2);
        b.set(0, 1, 3.0);
        b.set(1, 0, 4.0);
        assert_eq!(a.frob_dist(&b), 5.0);
    }
}
