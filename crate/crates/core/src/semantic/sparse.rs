use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::scalar::Scalar;

/// Something that can multiply dense blocks from the left, with or without transposition.
pub trait LinearOperator<T: Scalar>: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A * B`
    fn mul(&self, b: &DMatrix<T>) -> DMatrix<T>;
    /// `Aᵀ * B`
    fn tr_mul(&self, b: &DMatrix<T>) -> DMatrix<T>;
}

impl<T: Scalar> LinearOperator<T> for DMatrix<T> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self * b
    }

    fn tr_mul(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.tr_mul(b)
    }
}

/// Compressed sparse row matrix. A transposed copy is kept alongside so that
/// both products are row-parallel and reduce in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
    transposed: Option<Box<CsrMatrix<T>>>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Rows given as `(column, value)` lists with strictly increasing columns.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(u32, T)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        let nrows = rows.len();
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!((c as usize) < ncols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        let mut m = Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            transposed: None,
        };
        m.transposed = Some(Box::new(m.transpose_plain()));
        m
    }

    fn transpose_plain(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0u32; self.indices.len()];
        let mut values = vec![T::zero(); self.values.len()];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k] as usize;
                indices[next[c]] = r as u32;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
            transposed: None,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] = v;
            }
        }
        d
    }

    fn spmm(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(self.ncols, b.nrows(), "dimension mismatch");
        let width = b.ncols();
        // Row-major copy of `b` so each output row reads contiguous slices.
        let b_rows: Vec<T> = b.transpose().as_slice().to_vec();
        let mut out = vec![T::zero(); self.nrows * width];
        out.par_chunks_mut(width.max(1)).enumerate().for_each(|(r, dst)| {
            if width == 0 {
                return;
            }
            for (c, v) in self.row(r) {
                let src = &b_rows[c * width..(c + 1) * width];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        });
        DMatrix::from_row_slice(self.nrows, width, &out)
    }
}

impl<T: Scalar> LinearOperator<T> for CsrMatrix<T> {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn mul(&self, b: &DMatrix<T>) -> DMatrix<T> {
        self.spmm(b)
    }

    fn tr_mul(&self, b: &DMatrix<T>) -> DMatrix<T> {
        match &self.transposed {
            Some(t) => t.spmm(b),
            None => self.transpose_plain().spmm(b),
        }
    }
}
