//! Thin helpers over `nalgebra_sparse::CsrMatrix`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

/// Sums duplicate triplets; the result does not depend on thread scheduling
/// because callers push contributions in element order.
pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix<f64> {
    from_triplets_rect(n, n, triplets)
}

pub fn from_triplets_rect(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(rows, cols);
    for &(i, j, v) in triplets {
        coo.push(i, j, v);
    }
    CsrMatrix::from(&coo)
}

pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        y[i] = row.col_indices().iter().zip(row.values()).map(|(&j, &v)| v * x[j]).sum();
    }
    y
}

/// `a * x` for a dense block `x` with `a.ncols()` rows.
pub fn spmm(a: &CsrMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(a.nrows(), x.ncols());
    for (i, row) in a.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            for k in 0..x.ncols() {
                y[(i, k)] += v * x[(j, k)];
            }
        }
    }
    y
}

/// Extracts `a[rows, cols]` as a sparse matrix.
pub fn submatrix(a: &CsrMatrix<f64>, rows: &[usize], cols: &[usize]) -> CsrMatrix<f64> {
    let mut col_map = vec![usize::MAX; a.ncols()];
    for (new, &old) in cols.iter().enumerate() {
        col_map[old] = new;
    }
    let mut coo = CooMatrix::new(rows.len(), cols.len());
    for (new_i, &i) in rows.iter().enumerate() {
        let row = a.row(i);
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if col_map[j] != usize::MAX {
                coo.push(new_i, col_map[j], v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, &v) in a.triplet_iter() {
        d[(i, j)] += v;
    }
    d
}

/// `alpha * a + beta * b` for equally shaped matrices.
pub fn axpby(alpha: f64, a: &CsrMatrix<f64>, beta: f64, b: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(a.nrows(), a.ncols());
    for (i, j, &v) in a.triplet_iter() {
        coo.push(i, j, alpha * v);
    }
    for (i, j, &v) in b.triplet_iter() {
        coo.push(i, j, beta * v);
    }
    CsrMatrix::from(&coo)
}

pub fn symmetric_part(a: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    axpby(0.5, a, 0.5, &a.transpose())
}

/// Max row sum of absolute values.
pub fn norm_inf(a: &CsrMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.values().iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(a: &CsrMatrix<f64>) -> f64 {
    a.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest `|a_ij - a_ji|` relative to `max |a_ij|`.
pub fn asymmetry(a: &CsrMatrix<f64>) -> f64 {
    let t = a.transpose();
    let diff = axpby(1.0, a, -1.0, &t);
    let scale = max_abs(a);
    if scale == 0.0 {
        0.0
    } else {
        max_abs(&diff) / scale
    }
}
