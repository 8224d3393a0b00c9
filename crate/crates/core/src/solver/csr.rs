use rayon::prelude::*;

use super::scalar::Scalar;
use crate::hamiltonian::SparseHermitian;

/// Both triangles of a Hermitian matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct Csr<S> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<S>,
}

const PARALLEL_ROWS: usize = 4096;

impl<S: Scalar> Csr<S> {
    pub fn from_hermitian(h: &SparseHermitian) -> Self {
        let n = h.dim();
        let mut counts = vec![0usize; n];
        for (r, c, _) in h.entries() {
            counts[r] += 1;
            if r != c {
                counts[c] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        for c in &counts {
            row_ptr.push(row_ptr.last().unwrap() + c);
        }
        let nnz = *row_ptr.last().unwrap();
        let mut cols = vec![0u32; nnz];
        let mut vals = vec![S::zero(); nnz];
        let mut fill = row_ptr[..n].to_vec();
        // lower-triangle entries of row c arrive in ascending r, upper ones in
        // ascending c, and every lower entry precedes the diagonal, so a
        // two-pass fill keeps each row sorted
        for (r, c, v) in h.entries() {
            if r != c {
                let pos = fill[c];
                cols[pos] = r as u32;
                vals[pos] = S::from_complex(v.conj());
                fill[c] += 1;
            }
        }
        for (r, c, v) in h.entries() {
            let pos = fill[r];
            cols[pos] = c as u32;
            vals[pos] = S::from_complex(v);
            fill[r] += 1;
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn row_dot(&self, i: usize, x: &[S]) -> S {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b]
            .iter()
            .zip(&self.vals[a..b])
            .fold(S::zero(), |acc, (&c, &v)| acc + v * x[c as usize])
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[S], y: &mut [S]) {
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn apply_new(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        self.apply(x, &mut y);
        y
    }

    /// Dense column-major copy.
    pub fn to_dense(&self) -> Vec<S> {
        let n = self.n;
        let mut out = vec![S::zero(); n * n];
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[i + self.cols[p] as usize * n] = self.vals[p];
            }
        }
        out
    }
}
