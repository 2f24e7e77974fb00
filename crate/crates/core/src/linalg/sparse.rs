use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Compressed-row sparse matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    rowptr: Vec<usize>,
    colind: Vec<usize>,
    val: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from CSR arrays, checking the layout.
    pub fn new(
        nrows: usize,
        ncols: usize,
        rowptr: Vec<usize>,
        colind: Vec<usize>,
        val: Vec<f64>,
    ) -> Result<Self> {
        if rowptr.len() != nrows + 1 || rowptr[0] != 0 {
            return Err(Error::input("rowptr must have nrows+1 entries starting at 0"));
        }
        if colind.len() != val.len() || *rowptr.last().unwrap() != colind.len() {
            return Err(Error::input("rowptr, colind and val lengths disagree"));
        }
        for i in 0..nrows {
            if rowptr[i] > rowptr[i + 1] {
                return Err(Error::input(format!("rowptr decreases at row {i}")));
            }
            let cols = &colind[rowptr[i]..rowptr[i + 1]];
            for (k, &j) in cols.iter().enumerate() {
                if j >= ncols {
                    return Err(Error::input(format!("column index {j} out of range in row {i}")));
                }
                if k > 0 && cols[k - 1] >= j {
                    return Err(Error::input(format!(
                        "column indices not strictly increasing in row {i}"
                    )));
                }
            }
        }
        if val.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("matrix has non-finite entries"));
        }
        Ok(Self { nrows, ncols, rowptr, colind, val })
    }

    /// Duplicates are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = trip.to_vec();
        for &(i, j, _) in &sorted {
            if i >= nrows || j >= ncols {
                return Err(Error::input(format!("triplet ({i}, {j}) outside {nrows}x{ncols}")));
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rowptr = vec![0usize; nrows + 1];
        let mut colind = Vec::with_capacity(sorted.len());
        let mut val: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut rows = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            if let (Some(&last_i), Some(&last_j)) = (rows.last(), colind.last()) {
                if last_i == i && last_j == j {
                    *val.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(i);
            colind.push(j);
            val.push(v);
        }
        let mut keep_c = Vec::with_capacity(colind.len());
        let mut keep_v = Vec::with_capacity(colind.len());
        for k in 0..colind.len() {
            if val[k] != 0.0 {
                rowptr[rows[k] + 1] += 1;
                keep_c.push(colind[k]);
                keep_v.push(val[k]);
            }
        }
        for i in 0..nrows {
            rowptr[i + 1] += rowptr[i];
        }
        Self::new(nrows, ncols, rowptr, keep_c, keep_v)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trip = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), ncols, "ragged dense input");
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &trip).expect("dense input is well formed")
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        if m.nrows() == 0 {
            return Self::zeros(0, m.ncols());
        }
        Self::from_dense(&rows)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            rowptr: (0..=n).collect(),
            colind: (0..n).collect(),
            val: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rowptr: vec![0; nrows + 1], colind: vec![], val: vec![] }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn rowptr(&self) -> &[usize] {
        &self.rowptr
    }

    pub fn colind(&self) -> &[usize] {
        &self.colind
    }

    pub fn values(&self) -> &[f64] {
        &self.val
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.rowptr[i]..self.rowptr[i + 1];
        (&self.colind[r.clone()], &self.val[r])
    }

    pub fn is_zero(&self) -> bool {
        self.val.iter().all(|&v| v == 0.0)
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::input(format!(
                "spmv: vector of length {} for {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y ← Ax`. Panics on length mismatch.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                acc += self.val[k] * x[self.colind[k]];
            }
            *yi = acc;
        }
    }

    pub fn spmv_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nrows {
            return Err(Error::input(format!(
                "spmv_t: vector of length {} for {} rows",
                y.len(),
                self.nrows
            )));
        }
        let mut x = vec![0.0; self.ncols];
        self.spmv_t_into(y, &mut x);
        Ok(x)
    }

    /// `x ← Aᵀy`, scattering rows in order.
    pub fn spmv_t_into(&self, y: &[f64], x: &mut [f64]) {
        assert_eq!(y.len(), self.nrows);
        assert_eq!(x.len(), self.ncols);
        x.iter_mut().for_each(|v| *v = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                x[self.colind[k]] += self.val[k] * yi;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                trip.push((j, i, a));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &trip).expect("transpose of valid matrix")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// `diag(row) · A · diag(col)`
    pub fn scale(&self, row: &[f64], col: &[f64]) -> Self {
        assert_eq!(row.len(), self.nrows);
        assert_eq!(col.len(), self.ncols);
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.rowptr[i]..self.rowptr[i + 1] {
                out.val[k] *= row[i] * col[self.colind[k]];
            }
        }
        out
    }

    pub fn row_abs_max(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
            .collect()
    }

    pub fn col_abs_max(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.ncols];
        for (k, &j) in self.colind.iter().enumerate() {
            out[j] = out[j].max(self.val[k].abs());
        }
        out
    }

    pub fn row_abs_sum(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum())
            .collect()
    }

    pub fn col_abs_sum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (k, &j) in self.colind.iter().enumerate() {
            out[j] += self.val[k].abs();
        }
        out
    }

    /// `AAᵀ` as a dense matrix.
    pub fn gram_dense(&self) -> DMatrix<f64> {
        let d = self.to_dense();
        &d * d.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spmv_examples() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        let i3 = SparseMatrix::identity(3);
        assert_eq!(i3.spmv(&[5.0, -1.0, 0.0]).unwrap(), vec![5.0, -1.0, 0.0]);
        let z = SparseMatrix::zeros(2, 2);
        assert_eq!(z.spmv(&[7.0, 9.0]).unwrap(), vec![0.0, 0.0]);
        assert!(a.spmv(&[1.0]).is_err());
    }

    #[test]
    fn spmv_t_examples() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.spmv_t(&[1.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        let row = SparseMatrix::from_dense(&[vec![-10.0, 1.0, 1.0]]);
        assert_eq!(row.spmv_t(&[2.0]).unwrap(), vec![-20.0, 2.0, 2.0]);
        let z = SparseMatrix::zeros(2, 3);
        assert_eq!(z.spmv_t(&[1.0, 1.0]).unwrap(), vec![0.0; 3]);
        assert!(a.spmv_t(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn rejects_unsorted_columns() {
        assert!(SparseMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, &[(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(a.to_dense(), DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 4.0, 0.0]));
        assert_eq!(a.transpose().to_dense(), DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 2.0, 0.0]));
    }
}
