//! Compressed sparse row storage for symmetric matrices.
//!
//! Both triangles are stored, which keeps the matrix-vector product a plain
//! row loop and lets rows be processed independently.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{check_len, Error, Result};
use crate::par::{self, Exec};

/// Rows per parallel task in the matrix-vector product.
const MATVEC_CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymMatrix {
    order: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros are kept. Both triangles must be supplied.
    pub fn from_triplets(order: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; order + 1];
        for &(i, j, v) in triplets {
            if i >= order || j >= order {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside a matrix of order {order}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
            }
            counts[i + 1] += 1;
        }
        for i in 0..order {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(order + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..order {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(j, _)| j);
            for &(j, v) in &row {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseSymMatrix {
            order,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Build from triplets of one triangle, mirroring off-diagonal entries.
    pub fn from_lower_triplets(order: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets(order, &full)
    }

    pub fn zeros(order: usize) -> Self {
        SparseSymMatrix {
            order,
            row_ptr: vec![0; order + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// All stored entries as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.order)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |a_ij − a_ji| relative to max |a_ij|.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Half bandwidth max |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.order)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Infinity norm, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.order)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// P A Pᵀ where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_len(self.order, perm.len())?;
        let mut inv = vec![usize::MAX; self.order];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.order || inv[old] != usize::MAX {
                return Err(Error::InvalidArgument("not a permutation".into()));
            }
            inv[old] = new;
        }
        let trip: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (inv[i], inv[j], v))
            .collect();
        Self::from_triplets(self.order, &trip)
    }

    /// Submatrix on the given index list (rows and columns alike).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.order];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let trip: Vec<_> = keep
            .iter()
            .enumerate()
            .flat_map(|(ni, &i)| {
                let map = &map;
                self.row(i)
                    .filter(move |(j, _)| map[*j] != usize::MAX)
                    .map(move |(j, v)| (ni, map[j], v))
            })
            .collect();
        Self::from_triplets(keep.len(), &trip).expect("indices remapped in range")
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matvec_with(Exec::default(), x)
    }

    pub fn matvec_with(&self, exec: Exec, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.order, x.len())?;
        let mut y = vec![0.0; self.order];
        let exec = if self.order >= 4 * MATVEC_CHUNK { exec } else { Exec::Sequential };
        par::for_each_chunk(exec, &mut y, MATVEC_CHUNK, |off, out| {
            for (k, yi) in out.iter_mut().enumerate() {
                *yi = self.row(off + k).map(|(j, v)| v * x[j]).sum();
            }
        });
        Ok(y)
    }

    pub fn matvec_complex(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.order, x.len())?;
        let mut y = vec![C64::new(0.0, 0.0); self.order];
        let exec = if self.order >= 4 * MATVEC_CHUNK { Exec::default() } else { Exec::Sequential };
        par::for_each_chunk(exec, &mut y, MATVEC_CHUNK, |off, out| {
            for (k, yi) in out.iter_mut().enumerate() {
                *yi = self.row(off + k).map(|(j, v)| x[j] * v).sum();
            }
        });
        Ok(y)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.order, self.order);
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseSymMatrix {
        SparseSymMatrix::from_lower_triplets(
            3,
            &[(0, 0, 2.0), (1, 0, -1.0), (1, 1, 2.0), (2, 1, -1.0), (2, 2, 2.0)],
        )
        .unwrap()
    }

    #[test]
    fn construction_and_access() {
        let a = small();
        assert_eq!(a.nnz(), 7);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.diagonal(), vec![2.0; 3]);
        assert_eq!(a.bandwidth(), 1);
        assert_eq!(a.symmetry_defect(), 0.0);
        assert_eq!(a.norm_inf(), 4.0);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseSymMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.5), (1, 1, 1.0)]).unwrap();
        assert_eq!(a.get(0, 0), 3.5);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn bad_entries_rejected() {
        assert!(SparseSymMatrix::from_triplets(2, &[(2, 0, 1.0)]).is_err());
        assert!(SparseSymMatrix::from_triplets(2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let a = small();
        let x = [1.0, -2.0, 0.5];
        let y = a.matvec(&x).unwrap();
        assert_eq!(y, vec![4.0, -5.5, 3.0]);
        let yc = a
            .matvec_complex(&x.map(|t| C64::new(t, -t)))
            .unwrap();
        for (c, r) in yc.iter().zip(&y) {
            assert_eq!(*c, C64::new(*r, -*r));
        }
        assert!(a.matvec(&[1.0]).is_err());
    }

    #[test]
    fn parallel_matvec_is_bitwise_sequential() {
        let n = 20_000;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + (i % 7) as f64));
            if i + 1 < n {
                t.push((i + 1, i, -1.0 / (1 + i % 5) as f64));
            }
        }
        let a = SparseSymMatrix::from_lower_triplets(n, &t).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = a.matvec_with(Exec::Sequential, &x).unwrap();
        let p = a.matvec_with(Exec::Parallel, &x).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn permutation_and_submatrix() {
        let a = small();
        let p = a.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(0, 0), 2.0);
        assert_eq!(p.get(0, 2), -1.0);
        assert_eq!(p.get(0, 1), 0.0);
        assert!(a.permuted(&[0, 0, 1]).is_err());
        let s = a.principal_submatrix(&[0, 2]);
        assert_eq!(s.order(), 2);
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(1, 1), 2.0);
    }
}
