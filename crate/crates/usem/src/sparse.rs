//! Symmetric sparse matrices in CSR form.
//!
//! Both triangles are stored; assembly guarantees exact structural symmetry
//! because coupled local blocks are written as matching transposed pairs.
//! Construction is a deterministic ordered merge of triplets, so identical
//! inputs produce bitwise-identical matrices regardless of element order
//! upstream.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Build from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut it = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            row_ptr[r as usize + 1] += 1;
            col_idx.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymMatrix { n, row_ptr, col_idx, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[i] = acc;
        }
    }

    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                row += v * y[*c as usize];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest |A_ij - A_ji|; exact zero means structurally symmetric values.
    pub fn symmetry_error(&self) -> f64 {
        let mut err = 0.0_f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let j = *c as usize;
                if j < i {
                    continue;
                }
                let vt = self.get(j, i);
                err = err.max((v - vt).abs());
            }
        }
        err
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// self + scale * other, on the union pattern.
    pub fn add_scaled(&self, other: &SparseSymMatrix, scale: f64) -> Result<Self, SparseError> {
        if self.n != other.n {
            return Err(SparseError::DimensionMismatch(self.n, other.n));
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut vals = Vec::with_capacity(col_idx.capacity());
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ca.len() || b < cb.len() {
                let jca = ca.get(a).copied().unwrap_or(u32::MAX);
                let jcb = cb.get(b).copied().unwrap_or(u32::MAX);
                if jca < jcb {
                    col_idx.push(jca);
                    vals.push(va[a]);
                    a += 1;
                } else if jcb < jca {
                    col_idx.push(jcb);
                    vals.push(scale * vb[b]);
                    b += 1;
                } else {
                    col_idx.push(jca);
                    vals.push(va[a] + scale * vb[b]);
                    a += 1;
                    b += 1;
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(SparseSymMatrix { n: self.n, row_ptr, col_idx, vals })
    }

    /// Restrict to the rows/columns flagged `true`, returning the reduced
    /// matrix and the kept original indices.
    pub fn restrict(&self, keep: &[bool]) -> (Self, Vec<usize>) {
        assert_eq!(keep.len(), self.n);
        let kept: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut new_id = vec![u32::MAX; self.n];
        for (k, &i) in kept.iter().enumerate() {
            new_id[i] = k as u32;
        }
        let mut row_ptr = vec![0usize; kept.len() + 1];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for (k, &i) in kept.iter().enumerate() {
            let (cols, vs) = self.row(i);
            for (c, v) in cols.iter().zip(vs) {
                let nc = new_id[*c as usize];
                if nc != u32::MAX {
                    col_idx.push(nc);
                    vals.push(*v);
                }
            }
            row_ptr[k + 1] = col_idx.len();
        }
        (SparseSymMatrix { n: kept.len(), row_ptr, col_idx, vals }, kept)
    }

    /// Dense copy for small oracle computations in tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d[i][*c as usize] = *v;
            }
        }
        d
    }

    pub fn identity(n: usize) -> Self {
        SparseSymMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SparseSymMatrix {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len() as u32).collect(),
            vals: d.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_merge_and_matvec() {
        let a = SparseSymMatrix::from_triplets(
            3,
            vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (0, 1, 0.5), (1, 0, 0.5), (2, 2, 4.0), (1, 1, 3.0)],
        );
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(0, 1), 2.5);
        assert_eq!(a.symmetry_error(), 0.0);
        let mut y = vec![0.0; 3];
        a.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.5, 5.5, 4.0]);
        assert_eq!(a.quadratic_form(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), 2.5);
    }

    #[test]
    fn add_scaled_and_restrict() {
        let a = SparseSymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let b = SparseSymMatrix::from_triplets(3, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        let c = a.add_scaled(&b, 2.0).unwrap();
        assert_eq!(c.get(0, 1), 2.0);
        assert_eq!(c.get(1, 1), 2.0);
        let (r, kept) = c.restrict(&[true, false, true]);
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(r.n, 2);
        assert_eq!(r.get(0, 0), 1.0);
        assert_eq!(r.get(0, 1), 0.0);
        assert_eq!(r.get(1, 1), 3.0);
    }
}
