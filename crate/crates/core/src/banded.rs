//! Banded direct solvers and a bandwidth-reducing ordering.
//!
//! Every matrix in this crate is a discretised differential operator with
//! small bandwidth after reverse Cuthill–McKee reordering, so a banded LU
//! (complex, partial pivoting) and a banded Cholesky cover all shifted
//! solves and mass factorizations.

use std::collections::VecDeque;

use num_complex::Complex64 as C64;

use crate::error::{check_len, Error, Result};
use crate::sparse::SparseSymMatrix;

/// Reverse Cuthill–McKee ordering; `perm[new] = old`. Each connected
/// component starts from a pseudo-peripheral vertex.
pub fn rcm_ordering(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.order();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree = |i: usize| adj[i].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![0usize; n];

    // BFS levels from `s` restricted to unvisited vertices; returns the last
    // vertex of minimum degree on the deepest level and the depth.
    let bfs_far = |s: usize, visited: &[bool], level: &mut [usize]| -> (usize, usize) {
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([s]);
        seen[s] = true;
        level[s] = 0;
        let mut last = Vec::new();
        let mut depth = 0;
        while let Some(u) = q.pop_front() {
            if level[u] > depth {
                depth = level[u];
                last.clear();
            }
            last.push(u);
            for &w in &adj[u] {
                if !seen[w] && !visited[w] {
                    seen[w] = true;
                    level[w] = level[u] + 1;
                    q.push_back(w);
                }
            }
        }
        let far = *last.iter().min_by_key(|&&u| (degree(u), u)).unwrap();
        (far, depth)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let mut start = seed;
        let (mut far, mut depth) = bfs_far(start, &visited, &mut level);
        for _ in 0..8 {
            let (far2, depth2) = bfs_far(far, &visited, &mut level);
            if depth2 <= depth {
                break;
            }
            start = far;
            far = far2;
            depth = depth2;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (degree(w), w));
            for w in nb {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// LU factorization with partial pivoting of a complex band matrix with
/// `kl` sub- and `ku` super-diagonals, in LAPACK-style band storage
/// (`kl` extra rows hold the fill-in created by row interchanges).
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor the matrix whose nonzero entries are listed by `entries`
    /// (`(row, col, value)`, duplicates summed). Entries outside the band
    /// are rejected.
    ///
    /// A pivot below `n·ε·max|a_ij|` is treated as exact singularity and
    /// reported as a pole collision with the supplied `shift` label.
    pub fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
        shift: C64,
    ) -> Result<Self> {
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![C64::new(0.0, 0.0); ldab * n];
        let mut scale = 0.0f64;
        for (i, j, v) in entries {
            if i >= n || j >= n || i > j + kl || j > i + ku {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside the declared band"
                )));
            }
            ab[j * ldab + kv + i - j] += v;
        }
        for v in &ab {
            scale = scale.max(v.norm());
        }
        let tiny = n as f64 * f64::EPSILON * scale;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = -1.0;
            for p in 0..=km {
                let m = ab[col + p].norm();
                if m > best {
                    best = m;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            if !(best > tiny) {
                return Err(Error::PoleCollision { pole: shift });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv + j - c;
                    ab.swap(base, base + jp);
                }
            }
            let piv = ab[col];
            let inv = C64::new(1.0, 0.0) / piv;
            for p in 1..=km {
                ab[col + p] *= inv;
            }
            for c in j + 1..=ju {
                let top = c * ldab + kv + j - c;
                let u = ab[top];
                if u == C64::new(0.0, 0.0) {
                    continue;
                }
                for p in 1..=km {
                    let l = ab[col + p];
                    ab[top + p] -= l * u;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        check_len(self.n, b.len())?;
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            b.swap(j, self.ipiv[j]);
            let bj = b[j];
            if bj != C64::new(0.0, 0.0) {
                let col = j * self.ldab + kv;
                for p in 1..=km {
                    b[j + p] -= self.ab[col + p] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * self.ldab;
            b[j] /= self.ab[col + kv];
            let bj = b[j];
            for r in j.saturating_sub(kv)..j {
                b[r] -= self.ab[col + kv + r - j] * bj;
            }
        }
        Ok(())
    }
}

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite band matrix
/// with half bandwidth `k`, stored by columns (`l[j*(k+1) + (i−j)]`).
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    k: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.order();
        let k = a.bandwidth();
        let w = k + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if i >= j {
                    l[j * w + i - j] = v;
                }
            }
        }
        for j in 0..n {
            let d = l[j * w];
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[j * w] = d;
            let last = k.min(n - 1 - j);
            for p in 1..=last {
                l[j * w + p] /= d;
            }
            for c in j + 1..=j + last {
                let ljc = l[j * w + c - j];
                if ljc == 0.0 {
                    continue;
                }
                for r in c..=j + last {
                    l[c * w + r - c] -= l[j * w + r - j] * ljc;
                }
            }
        }
        Ok(BandedCholesky { n, k, l })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[j * (self.k + 1) + i - j]
    }

    /// x ← L⁻¹ x
    pub fn solve_lower<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::SubAssign + std::ops::DivAssign<f64> + std::ops::Mul<f64, Output = T>,
    {
        for j in 0..self.n {
            x[j] /= self.at(j, j);
            let xj = x[j];
            for i in j + 1..=(j + self.k).min(self.n - 1) {
                x[i] -= xj * self.at(i, j);
            }
        }
    }

    /// x ← L⁻ᵀ x
    pub fn solve_upper<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::SubAssign + std::ops::DivAssign<f64> + std::ops::Mul<f64, Output = T>,
    {
        for j in (0..self.n).rev() {
            for i in j + 1..=(j + self.k).min(self.n - 1) {
                let xi = x[i];
                x[j] -= xi * self.at(i, j);
            }
            x[j] /= self.at(j, j);
        }
    }

    /// L x
    pub fn mul_lower(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for i in j..=(j + self.k).min(self.n - 1) {
                y[i] += self.at(i, j) * x[j];
            }
        }
        y
    }

    /// Lᵀ x
    pub fn mul_upper(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                (j..=(j + self.k).min(self.n - 1))
                    .map(|i| self.at(i, j) * x[i])
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> Vec<(usize, usize, C64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                out.push((i, j, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
            }
        }
        out
    }

    #[test]
    fn banded_lu_matches_dense_solve() {
        for (n, kl, ku) in [(1, 0, 0), (5, 1, 1), (30, 3, 2), (40, 0, 4), (25, 5, 0)] {
            let entries = random_band(n, kl, ku, n as u64);
            let dense = Mat::<C64>::from_fn(n, n, |i, j| {
                entries
                    .iter()
                    .find(|e| e.0 == i && e.1 == j)
                    .map(|e| e.2)
                    .unwrap_or_default()
            });
            let lu = BandedLu::factor(n, kl, ku, entries, C64::new(0.0, 0.0)).unwrap();
            let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
            let mut x = b.clone();
            lu.solve_in_place(&mut x).unwrap();
            // Backward error: random triangular bands can be very ill conditioned.
            let xnorm = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let err = (0..n)
                .map(|i| {
                    let ax: C64 = (0..n).map(|j| dense[(i, j)] * x[j]).sum();
                    (ax - b[i]).norm()
                })
                .fold(0.0, f64::max)
                / (xnorm * (kl + ku + 1) as f64);
            assert!(err < 1e-14, "n={n} kl={kl} ku={ku} err={err}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs a row swap.
        let e = vec![
            (0, 1, C64::new(1.0, 0.0)),
            (1, 0, C64::new(1.0, 0.0)),
        ];
        let lu = BandedLu::factor(2, 1, 1, e, C64::new(0.0, 0.0)).unwrap();
        let mut b = vec![C64::new(3.0, 0.0), C64::new(5.0, 0.0)];
        lu.solve_in_place(&mut b).unwrap();
        assert_eq!(b, vec![C64::new(5.0, 0.0), C64::new(3.0, 0.0)]);
    }

    #[test]
    fn singular_matrix_reports_collision() {
        let e = vec![
            (0, 0, C64::new(1.0, 0.0)),
            (0, 1, C64::new(1.0, 0.0)),
            (1, 0, C64::new(1.0, 0.0)),
            (1, 1, C64::new(1.0, 0.0)),
        ];
        let z = C64::new(2.0, 0.0);
        assert!(matches!(
            BandedLu::factor(2, 1, 1, e, z),
            Err(Error::PoleCollision { pole }) if pole == z
        ));
        assert!(BandedLu::factor(2, 0, 0, vec![(1, 0, C64::new(1.0, 0.0))], z).is_err());
    }

    #[test]
    fn cholesky_roundtrip() {
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.1));
            if i >= 1 {
                t.push((i, i - 1, -1.0));
            }
            if i >= 3 {
                t.push((i, i - 3, 0.5));
            }
        }
        let a = SparseSymMatrix::from_lower_triplets(n, &t).unwrap();
        let ch = BandedCholesky::factor(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let llt = ch.mul_lower(&ch.mul_upper(&x));
        let ax = a.matvec(&x).unwrap();
        for (p, q) in llt.iter().zip(&ax) {
            assert!((p - q).abs() < 1e-13);
        }
        let mut y = ax.clone();
        ch.solve_lower(&mut y);
        ch.solve_upper(&mut y);
        for (p, q) in y.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
        let mut yc: Vec<C64> = ax.iter().map(|&v| C64::new(v, 2.0 * v)).collect();
        ch.solve_lower(&mut yc);
        ch.solve_upper(&mut yc);
        for (p, q) in yc.iter().zip(&x) {
            assert!((p - C64::new(*q, 2.0 * q)).norm() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SparseSymMatrix::from_lower_triplets(2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)])
            .unwrap();
        assert!(matches!(
            BandedCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn rcm_reduces_bandwidth_of_shuffled_path() {
        let n = 50;
        // A path graph under a scrambled labelling.
        let label: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((label[i], label[i], 2.0));
            if i + 1 < n {
                t.push((label[i + 1], label[i], -1.0));
            }
        }
        let a = SparseSymMatrix::from_lower_triplets(n, &t).unwrap();
        assert!(a.bandwidth() > 10);
        let perm = rcm_ordering(&a);
        let mut sorted = perm.clone();
        sorted.sort();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        assert_eq!(a.permuted(&perm).unwrap().bandwidth(), 1);
    }

    #[test]
    fn rcm_covers_disconnected_graphs() {
        let a = SparseSymMatrix::from_lower_triplets(
            4,
            &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0), (3, 2, 0.5)],
        )
        .unwrap();
        let mut p = rcm_ordering(&a);
        p.sort();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
