//! Dense row-major matrices and 3D arrays of `f64`.
//!
//! Deliberately minimal: the pipeline needs contiguous storage, shape checks
//! and cheap row access, not a linear-algebra framework.

use serde::{Deserialize, Serialize};

/// Row-major 2D array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from a flat row-major buffer. Panics if the length mismatches.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "buffer length {} does not match {}x{}",
            data.len(),
            rows,
            cols
        );
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// New matrix keeping `rows` order but only the listed row indices.
    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(r));
        }
        out
    }

    /// New matrix with only the listed column indices, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            let src = self.row(r);
            let dst = out.row_mut(r);
            for (j, &c) in idx.iter().enumerate() {
                dst[j] = src[c];
            }
        }
        out
    }
}

/// Row-major 3D array indexed as `(i, j, k)` over shape `(d0, d1, d2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    d0: usize,
    d1: usize,
    d2: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 {
            d0,
            d1,
            d2,
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.d0, self.d1, self.d2)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.d0 && j < self.d1 && k < self.d2);
        (i * self.d1 + j) * self.d2 + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// 2D slice at a fixed index along `axis` (0, 1 or 2).
    ///
    /// Resulting matrix keeps the remaining two axes in ascending order:
    /// axis 0 -> (d1, d2), axis 1 -> (d0, d2), axis 2 -> (d0, d1).
    pub fn slice(&self, axis: usize, index: usize) -> Mat {
        match axis {
            0 => {
                assert!(index < self.d0);
                let mut m = Mat::zeros(self.d1, self.d2);
                for j in 0..self.d1 {
                    for k in 0..self.d2 {
                        m.set(j, k, self.get(index, j, k));
                    }
                }
                m
            }
            1 => {
                assert!(index < self.d1);
                let mut m = Mat::zeros(self.d0, self.d2);
                for i in 0..self.d0 {
                    for k in 0..self.d2 {
                        m.set(i, k, self.get(i, index, k));
                    }
                }
                m
            }
            2 => {
                assert!(index < self.d2);
                let mut m = Mat::zeros(self.d0, self.d1);
                for i in 0..self.d0 {
                    for j in 0..self.d1 {
                        m.set(i, j, self.get(i, j, index));
                    }
                }
                m
            }
            _ => panic!("axis must be 0, 1 or 2"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat_row_access_is_contiguous() {
        let m = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(m.get(1, 2), 6.0);
    }

    #[test]
    fn select_cols_reorders() {
        let m = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = m.select_cols(&[2, 0]);
        assert_eq!(s.row(0), &[3.0, 1.0]);
        assert_eq!(s.row(1), &[6.0, 4.0]);
    }

    #[test]
    fn tensor_slice_axes() {
        let mut t = Tensor3::zeros(2, 3, 4);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    t.set(i, j, k, (100 * i + 10 * j + k) as f64);
                }
            }
        }
        let s0 = t.slice(0, 1);
        assert_eq!((s0.rows(), s0.cols()), (3, 4));
        assert_eq!(s0.get(2, 3), 123.0);
        let s2 = t.slice(2, 0);
        assert_eq!((s2.rows(), s2.cols()), (2, 3));
        assert_eq!(s2.get(1, 2), 120.0);
    }
}
