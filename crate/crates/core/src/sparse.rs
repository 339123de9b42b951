//! Compressed sparse row storage for complex matrices.

use num_complex::Complex64;

use crate::error::{DasError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Assemble from per-row `(column, value)` lists. Columns within a row
    /// must be strictly increasing.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, Complex64)>>) -> Result<Self> {
        let nrows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        indptr.push(0);
        for (r, row) in rows.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (c, v) in row {
                if c >= ncols || prev.is_some_and(|p| p >= c) {
                    return Err(DasError::ShapeMismatch(format!(
                        "row {r}: column {c} out of order or out of range (ncols = {ncols})"
                    )));
                }
                prev = Some(c);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Build from unordered triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        rows: &[usize],
        cols: &[usize],
        vals: &[Complex64],
    ) -> Result<Self> {
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return Err(DasError::ShapeMismatch("triplet arrays differ in length".into()));
        }
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| (rows[i], cols[i]));
        let mut per_row: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); nrows];
        for i in order {
            let (r, c) = (rows[i], cols[i]);
            if r >= nrows {
                return Err(DasError::ShapeMismatch(format!("row {r} out of range")));
            }
            let row = &mut per_row[r];
            match row.last_mut() {
                Some((lc, lv)) if *lc == c => *lv += vals[i],
                _ => row.push((c, vals[i])),
            }
        }
        Self::from_rows(ncols, per_row)
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

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Row-major triplets `(row, col, value)` in canonical order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.mul_dense(x, 1)
    }

    /// Product with a dense right-hand side of `n_rhs` columns stored one after
    /// another (column `j` occupies `x[j*ncols..(j+1)*ncols]`). The output uses
    /// the same layout with `nrows` per column.
    pub fn mul_dense(&self, x: &[Complex64], n_rhs: usize) -> Result<Vec<Complex64>> {
        if x.len() != self.ncols * n_rhs {
            return Err(DasError::ShapeMismatch(format!(
                "matrix has {} columns, right-hand side holds {} values for {n_rhs} column(s)",
                self.ncols,
                x.len()
            )));
        }
        let mut out = vec![Complex64::default(); self.nrows * n_rhs];
        let row_product = |r: usize, acc: &mut [Complex64]| {
            for (c, w) in self.row(r) {
                for (j, a) in acc.iter_mut().enumerate() {
                    *a += w * x[j * self.ncols + c];
                }
            }
        };

        // Row-major scratch so each row owns a contiguous output slice.
        let mut scratch = vec![Complex64::default(); self.nrows * n_rhs];
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            scratch
                .par_chunks_mut(n_rhs.max(1))
                .enumerate()
                .for_each(|(r, acc)| row_product(r, acc));
        }
        #[cfg(not(feature = "parallel"))]
        scratch
            .chunks_mut(n_rhs.max(1))
            .enumerate()
            .for_each(|(r, acc)| row_product(r, acc));

        for r in 0..self.nrows {
            for j in 0..n_rhs {
                out[j * self.nrows + r] = scratch[r * n_rhs + j];
            }
        }
        Ok(out)
    }
}
