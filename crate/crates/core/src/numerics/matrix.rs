//! Flat row-major `f64` matrices and the handful of dense kernels the
//! network needs.
//!
//! All parallel kernels assign each output row to exactly one worker and keep
//! a fixed inner summation order, so results are bitwise identical no matter
//! how rayon schedules the work.

use rayon::prelude::*;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: n, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Gather the given rows into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (k, &i) in idx.iter().enumerate() {
            out.row_mut(k).copy_from_slice(self.row(i));
        }
        out
    }

    /// Column means in index order.
    pub fn col_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += *v;
            }
        }
        let n = self.rows.max(1) as f64;
        for acc in &mut m {
            *acc /= n;
        }
        m
    }

    /// Population standard deviation per column, floored at `floor`.
    pub fn col_stds(&self, means: &[f64], floor: f64) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for ((acc, v), m) in s.iter_mut().zip(r).zip(means) {
                let d = *v - *m;
                *acc += d * d;
            }
        }
        let n = self.rows.max(1) as f64;
        for acc in &mut s {
            *acc = (*acc / n).sqrt().max(floor);
        }
        s
    }
}

/// Dot product with fixed 4-way unrolling. The unroll changes the summation
/// association deterministically, which keeps results reproducible while
/// letting the compiler vectorize.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let j = i * 4;
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..a.len() {
        tail += a[j] * b[j];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// `out[m][o] = dot(x.row(m), w.row(o)) + bias[o]` — the dense layer forward
/// pass with weights stored `[out][in]`. Parallel over batch rows.
pub fn forward_affine(x: &Matrix, w: &Matrix, bias: &[f64], out: &mut Matrix) {
    assert_eq!(x.cols(), w.cols(), "input dim vs weight fan-in");
    assert_eq!(w.rows(), bias.len());
    assert_eq!(out.rows(), x.rows());
    assert_eq!(out.cols(), w.rows());
    let cols = x.cols();
    let xdata = x.data();
    out.data_mut()
        .par_chunks_mut(w.rows())
        .enumerate()
        .for_each(|(m, orow)| {
            let xrow = &xdata[m * cols..(m + 1) * cols];
            for (o, slot) in orow.iter_mut().enumerate() {
                *slot = dot(xrow, w.row(o)) + bias[o];
            }
        });
}

/// `dw[o][i] += sum_m dy[m][o] * x[m][i]`, `db[o] += sum_m dy[m][o]`.
/// Parallel over output units; the batch sum runs in index order.
pub fn accumulate_weight_grads(dy: &Matrix, x: &Matrix, dw: &mut Matrix, db: &mut [f64]) {
    assert_eq!(dy.rows(), x.rows());
    assert_eq!(dw.rows(), dy.cols());
    assert_eq!(dw.cols(), x.cols());
    assert_eq!(db.len(), dy.cols());
    let n_out = dy.cols();
    let in_dim = x.cols();
    let batch = dy.rows();
    let pairs: Vec<(usize, &mut [f64])> = dw
        .data_mut()
        .chunks_mut(in_dim)
        .enumerate()
        .collect();
    pairs.into_par_iter().for_each(|(o, dwrow)| {
        for m in 0..batch {
            let g = dy.row(m)[o];
            if g != 0.0 {
                axpy(dwrow, g, x.row(m));
            }
        }
    });
    for m in 0..batch {
        for (o, slot) in db.iter_mut().enumerate() {
            *slot += dy.row(m)[o];
        }
    }
}

/// `dx[m][i] = sum_o dy[m][o] * w[o][i]`. Parallel over batch rows.
pub fn backward_affine(dy: &Matrix, w: &Matrix, dx: &mut Matrix) {
    assert_eq!(dy.cols(), w.rows());
    assert_eq!(dx.rows(), dy.rows());
    assert_eq!(dx.cols(), w.cols());
    let n_out = w.rows();
    let in_dim = w.cols();
    dx.data_mut()
        .par_chunks_mut(in_dim)
        .enumerate()
        .for_each(|(m, dxrow)| {
            dxrow.fill(0.0);
            let dyrow = dy.row(m);
            for o in 0..n_out {
                let g = dyrow[o];
                if g != 0.0 {
                    axpy(dxrow, g, w.row(o));
                }
            }
        });
}
