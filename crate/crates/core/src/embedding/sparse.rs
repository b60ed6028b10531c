use nalgebra::DMatrix;

/// Compressed sparse rows with `f64` values and sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Columns must be sorted
    /// and unique within each row.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let nrows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!((c as usize) < ncols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j as u32, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(m.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self * x`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.ncols, x.nrows());
        // work on transposes so every access is a contiguous column
        let xt = x.transpose();
        let mut out_t = DMatrix::zeros(x.ncols(), self.nrows);
        for i in 0..self.nrows {
            let mut acc = out_t.column_mut(i);
            for (j, v) in self.row(i) {
                acc.axpy(v, &xt.column(j), 1.0);
            }
        }
        out_t.transpose()
    }

    /// `selfᵀ * x`.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.nrows, x.nrows());
        let xt = x.transpose();
        let mut out_t = DMatrix::zeros(x.ncols(), self.ncols);
        for i in 0..self.nrows {
            let xi = xt.column(i);
            for (j, v) in self.row(i) {
                out_t.column_mut(j).axpy(v, &xi, 1.0);
            }
        }
        out_t.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let dense = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 3.0, -1.0, 4.0, 0.0, 0.5]);
        let csr = CsrMatrix::from_dense(&dense);
        assert_eq!(csr.nnz(), 6);
        assert_eq!(csr.get(2, 1), 4.0);
        assert_eq!(csr.get(1, 0), 0.0);
        let x = DMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        assert_eq!(csr.mul_dense(&x), &dense * &x);
        let y = DMatrix::from_fn(3, 5, |i, j| (i + j) as f64 * 0.25);
        assert_eq!(csr.tr_mul_dense(&y), dense.transpose() * &y);
        assert_eq!(csr.to_dense(), dense);
    }
}
