//! Symmetric operators with shifted complex solves.
//!
//! The rational Krylov recursion only needs `x ↦ A x` and
//! `b ↦ (ζI − A)⁻¹ b`. [`SymOperator`] captures exactly that, which lets the
//! same code run on an assembled sparse matrix, on a scaled copy `h²A`, and
//! on the mass-reduced finite-element operator `L⁻¹ K L⁻ᵀ` that is never
//! formed explicitly.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::banded::{rcm_ordering, BandedCholesky, BandedLu};
use crate::error::{check_len, Error, Result};
use crate::par::{self, Exec};
use crate::sparse::SparseSymMatrix;

/// Largest order for which [`SymOperator::to_dense`] is allowed.
pub const DENSE_LIMIT: usize = 5000;

/// A factored shifted system `(ζI − A)`.
pub trait ShiftedSolver: Send + Sync {
    fn solve(&self, b: &[C64]) -> Result<Vec<C64>>;
}

pub trait SymOperator: Send + Sync {
    fn order(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn apply_complex(&self, x: &[C64]) -> Result<Vec<C64>>;

    /// Factor `ζI − A`; fails with [`Error::PoleCollision`] when singular.
    fn factor_shift(&self, zeta: C64) -> Result<Box<dyn ShiftedSolver>>;

    /// Dense copy, built column by column unless overridden.
    fn to_dense(&self) -> Result<Mat<f64>> {
        let n = self.order();
        if n > DENSE_LIMIT {
            return Err(Error::ScaleGuard {
                order: n,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = Mat::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        // Symmetrise away roundoff from implicit operators.
        for j in 0..n {
            for i in 0..j {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        Ok(m)
    }
}

/// Banded LU of a sparse complex matrix under a fill-reducing permutation.
struct PermutedBandedLu {
    perm: Vec<usize>,
    lu: BandedLu,
}

impl PermutedBandedLu {
    fn new(
        perm: &[usize],
        inv: &[usize],
        band: usize,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
        shift: C64,
    ) -> Result<Self> {
        let n = perm.len();
        let lu = BandedLu::factor(
            n,
            band,
            band,
            entries.into_iter().map(|(i, j, v)| (inv[i], inv[j], v)),
            shift,
        )?;
        Ok(PermutedBandedLu {
            perm: perm.to_vec(),
            lu,
        })
    }

    fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        check_len(self.perm.len(), b.len())?;
        let mut x: Vec<C64> = self.perm.iter().map(|&old| b[old]).collect();
        self.lu.solve_in_place(&mut x)?;
        let mut out = vec![C64::new(0.0, 0.0); x.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        Ok(out)
    }
}

impl ShiftedSolver for PermutedBandedLu {
    fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        PermutedBandedLu::solve(self, b)
    }
}

/// Bandwidth-reducing ordering for a sparsity pattern, keeping the natural
/// order when RCM does not help. Returns `(perm, inverse, bandwidth)`.
fn band_ordering(a: &SparseSymMatrix) -> (Vec<usize>, Vec<usize>, usize) {
    let n = a.order();
    let natural = a.bandwidth();
    let rcm = rcm_ordering(a);
    let permuted = a.permuted(&rcm).map(|p| p.bandwidth()).unwrap_or(usize::MAX);
    let (perm, band) = if permuted < natural {
        (rcm, permuted)
    } else {
        ((0..n).collect(), natural)
    };
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    (perm, inv, band)
}

impl SymOperator for SparseSymMatrix {
    fn order(&self) -> usize {
        SparseSymMatrix::order(self)
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matvec(x)
    }

    fn apply_complex(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.matvec_complex(x)
    }

    fn factor_shift(&self, zeta: C64) -> Result<Box<dyn ShiftedSolver>> {
        let (perm, inv, band) = band_ordering(self);
        let n = self.order();
        let entries = self
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, C64::new(-v, 0.0)))
            .chain((0..n).map(|i| (i, i, zeta)));
        Ok(Box::new(PermutedBandedLu::new(&perm, &inv, band, entries, zeta)?))
    }

    fn to_dense(&self) -> Result<Mat<f64>> {
        if self.order() > DENSE_LIMIT {
            return Err(Error::ScaleGuard {
                order: self.order(),
                limit: DENSE_LIMIT,
            });
        }
        Ok(SparseSymMatrix::to_dense(self))
    }
}

/// `s·A` for a shared operator `A`.
#[derive(Clone)]
pub struct Scaled {
    inner: Arc<dyn SymOperator>,
    s: f64,
}

impl Scaled {
    pub fn new(inner: Arc<dyn SymOperator>, s: f64) -> Self {
        Scaled { inner, s }
    }
}

struct ScaledSolver {
    inner: Option<Box<dyn ShiftedSolver>>,
    factor: C64,
}

impl ShiftedSolver for ScaledSolver {
    fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let mut x = match &self.inner {
            Some(s) => s.solve(b)?,
            None => b.to_vec(),
        };
        x.iter_mut().for_each(|v| *v *= self.factor);
        Ok(x)
    }
}

impl SymOperator for Scaled {
    fn order(&self) -> usize {
        self.inner.order()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.inner.apply(x)?;
        y.iter_mut().for_each(|v| *v *= self.s);
        Ok(y)
    }

    fn apply_complex(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = self.inner.apply_complex(x)?;
        y.iter_mut().for_each(|v| *v *= self.s);
        Ok(y)
    }

    fn factor_shift(&self, zeta: C64) -> Result<Box<dyn ShiftedSolver>> {
        if self.s == 0.0 {
            if zeta.norm() == 0.0 {
                return Err(Error::PoleCollision { pole: zeta });
            }
            return Ok(Box::new(ScaledSolver {
                inner: None,
                factor: C64::new(1.0, 0.0) / zeta,
            }));
        }
        // (ζI − sA)⁻¹ = s⁻¹ (ζ/s I − A)⁻¹
        let inner = self.inner.factor_shift(zeta / self.s).map_err(|e| match e {
            Error::PoleCollision { .. } => Error::PoleCollision { pole: zeta },
            other => other,
        })?;
        Ok(Box::new(ScaledSolver {
            inner: Some(inner),
            factor: C64::new(1.0 / self.s, 0.0),
        }))
    }

    fn to_dense(&self) -> Result<Mat<f64>> {
        let mut m = self.inner.to_dense()?;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] *= self.s;
            }
        }
        Ok(m)
    }
}

/// The symmetric operator `Ã = 𝓛⁻¹ K 𝓛⁻ᵀ` for a mass matrix `M = 𝓛𝓛ᵀ`.
///
/// The Cholesky factor is computed on the RCM-permuted mass matrix,
/// `P M Pᵀ = L Lᵀ`, so `𝓛 = Pᵀ L`.
pub struct MassReducedOperator {
    stiffness: SparseSymMatrix,
    mass: SparseSymMatrix,
    perm: Vec<usize>,
    inv: Vec<usize>,
    band: usize,
    chol: BandedCholesky,
}

impl MassReducedOperator {
    pub fn new(mass: SparseSymMatrix, stiffness: SparseSymMatrix) -> Result<Self> {
        check_len(mass.order(), stiffness.order())?;
        let pattern = {
            let mut t = mass.triplets();
            t.extend(stiffness.triplets().into_iter().map(|(i, j, _)| (i, j, 0.0)));
            SparseSymMatrix::from_triplets(mass.order(), &t)?
        };
        let (perm, inv, band) = band_ordering(&pattern);
        let chol = BandedCholesky::factor(&mass.permuted(&perm)?)?;
        Ok(MassReducedOperator {
            stiffness,
            mass,
            perm,
            inv,
            band,
            chol,
        })
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseSymMatrix {
        &self.stiffness
    }

    fn to_perm<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&old| x[old]).collect()
    }

    fn from_perm<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.inv.iter().map(|&new| x[new]).collect()
    }

    /// y = 𝓛ᵀ u = Lᵀ P u, mapping nodal values to reduced coordinates.
    pub fn lt_mul(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.order(), u.len())?;
        Ok(self.chol.mul_upper(&self.to_perm(u)))
    }

    /// u = 𝓛⁻ᵀ y = Pᵀ L⁻ᵀ y, the inverse of [`Self::lt_mul`].
    pub fn lt_solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.order(), y.len())?;
        let mut t = y.to_vec();
        self.chol.solve_upper(&mut t);
        Ok(self.from_perm(&t))
    }

    /// 𝓛⁻¹ b = L⁻¹ P b, mapping a load vector to reduced coordinates.
    pub fn l_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.order(), b.len())?;
        let mut t = self.to_perm(b);
        self.chol.solve_lower(&mut t);
        Ok(t)
    }

    fn apply_generic<T>(&self, x: &[T], kmul: impl Fn(&[T]) -> Result<Vec<T>>) -> Result<Vec<T>>
    where
        T: Copy + std::ops::SubAssign + std::ops::DivAssign<f64> + std::ops::Mul<f64, Output = T>,
    {
        check_len(self.order(), x.len())?;
        let mut t = x.to_vec();
        self.chol.solve_upper(&mut t);
        let u = kmul(&self.from_perm(&t))?;
        let mut y = self.to_perm(&u);
        self.chol.solve_lower(&mut y);
        Ok(y)
    }
}

struct MassReducedSolver {
    inner: PermutedBandedLu,
    chol: BandedCholesky,
    perm: Vec<usize>,
}

impl ShiftedSolver for MassReducedSolver {
    // (ζI − 𝓛⁻¹K𝓛⁻ᵀ)⁻¹ = 𝓛ᵀ (ζM − K)⁻¹ 𝓛
    fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        check_len(self.perm.len(), b.len())?;
        let n = b.len();
        // 𝓛 b = Pᵀ L b
        let mut lb = vec![C64::new(0.0, 0.0); n];
        let re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let im: Vec<f64> = b.iter().map(|z| z.im).collect();
        let (lr, li) = (self.chol.mul_lower(&re), self.chol.mul_lower(&im));
        for (new, &old) in self.perm.iter().enumerate() {
            lb[old] = C64::new(lr[new], li[new]);
        }
        let x = self.inner.solve(&lb)?;
        // 𝓛ᵀ x = Lᵀ P x
        let px: Vec<C64> = self.perm.iter().map(|&old| x[old]).collect();
        let re: Vec<f64> = px.iter().map(|z| z.re).collect();
        let im: Vec<f64> = px.iter().map(|z| z.im).collect();
        let (ur, ui) = (self.chol.mul_upper(&re), self.chol.mul_upper(&im));
        Ok(ur.into_iter().zip(ui).map(|(r, i)| C64::new(r, i)).collect())
    }
}

impl SymOperator for MassReducedOperator {
    fn order(&self) -> usize {
        self.mass.order()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_generic(x, |u| self.stiffness.matvec(u))
    }

    fn apply_complex(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.apply_generic(x, |u| self.stiffness.matvec_complex(u))
    }

    fn factor_shift(&self, zeta: C64) -> Result<Box<dyn ShiftedSolver>> {
        let entries = self
            .mass
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, zeta * v))
            .chain(
                self.stiffness
                    .triplets()
                    .into_iter()
                    .map(|(i, j, v)| (i, j, C64::new(-v, 0.0))),
            );
        let inner = PermutedBandedLu::new(&self.perm, &self.inv, self.band, entries, zeta)?;
        Ok(Box::new(MassReducedSolver {
            inner,
            chol: self.chol.clone(),
            perm: self.perm.clone(),
        }))
    }
}

/// Shifted factorizations of one operator, keyed by the exact pole value
/// and shared between threads.
pub struct ShiftCache {
    op: Arc<dyn SymOperator>,
    solvers: Mutex<HashMap<(u64, u64), Arc<dyn ShiftedSolver>>>,
}

fn pole_key(z: C64) -> (u64, u64) {
    // +0.0 and −0.0 must hit the same entry.
    let canon = |x: f64| if x == 0.0 { 0.0f64 } else { x };
    (canon(z.re).to_bits(), canon(z.im).to_bits())
}

impl ShiftCache {
    pub fn new(op: Arc<dyn SymOperator>) -> Self {
        ShiftCache {
            op,
            solvers: Mutex::new(HashMap::new()),
        }
    }

    pub fn operator(&self) -> &Arc<dyn SymOperator> {
        &self.op
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn solver(&self, zeta: C64) -> Result<Arc<dyn ShiftedSolver>> {
        let key = pole_key(zeta);
        if let Some(s) = self.solvers.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(s));
        }
        // Factor outside the lock; a racing duplicate is harmless.
        let s: Arc<dyn ShiftedSolver> = Arc::from(self.op.factor_shift(zeta)?);
        let mut map = self.solvers.lock().expect("cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(s)))
    }

    /// Factor every distinct pole up front, in parallel when allowed.
    pub fn prefactor(&self, exec: Exec, poles: &[C64]) -> Result<()> {
        let mut todo: Vec<C64> = Vec::new();
        for &z in poles {
            if !todo.iter().any(|w| pole_key(*w) == pole_key(z)) {
                todo.push(z);
            }
        }
        par::map(exec, &todo, |&z| self.solver(z).map(|_| ()))
            .into_iter()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.solvers.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
        }
        SparseSymMatrix::from_lower_triplets(n, &t).unwrap()
    }

    fn residual(op: &dyn SymOperator, zeta: C64, x: &[C64], b: &[C64]) -> f64 {
        let ax = op.apply_complex(x).unwrap();
        x.iter()
            .zip(&ax)
            .zip(b)
            .map(|((xi, axi), bi)| (zeta * xi - axi - bi).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sparse_shifted_solve() {
        let a = lap(40);
        let b: Vec<C64> = (0..40).map(|i| C64::new(1.0, i as f64 * 0.1)).collect();
        for zeta in [C64::new(-4.0, 0.0), C64::new(0.0, 3.0), C64::new(1.5, 0.7)] {
            let s = a.factor_shift(zeta).unwrap();
            let x = s.solve(&b).unwrap();
            assert!(residual(&a, zeta, &x, &b) < 1e-12);
        }
    }

    #[test]
    fn collision_detected() {
        let a = SparseSymMatrix::from_lower_triplets(2, &[(0, 0, 1.0), (1, 1, 3.0)]).unwrap();
        assert!(matches!(
            a.factor_shift(C64::new(3.0, 0.0)),
            Err(Error::PoleCollision { .. })
        ));
    }

    #[test]
    fn scaled_operator() {
        let a: Arc<dyn SymOperator> = Arc::new(lap(10));
        let s = Scaled::new(Arc::clone(&a), 0.25);
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = s.apply(&x).unwrap();
        let ya = a.apply(&x).unwrap();
        for (p, q) in y.iter().zip(&ya) {
            assert_eq!(*p, 0.25 * q);
        }
        let b: Vec<C64> = x.iter().map(|&v| C64::new(v, 1.0)).collect();
        let zeta = C64::new(-1.0, 0.5);
        let sol = s.factor_shift(zeta).unwrap().solve(&b).unwrap();
        assert!(residual(&s, zeta, &sol, &b) < 1e-12);

        let zero = Scaled::new(a, 0.0);
        let sol = zero.factor_shift(C64::new(2.0, 0.0)).unwrap().solve(&b).unwrap();
        for (p, q) in sol.iter().zip(&b) {
            assert_eq!(*p, q / 2.0);
        }
        assert!(zero.factor_shift(C64::new(0.0, 0.0)).is_err());
        assert_eq!(zero.to_dense().unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn mass_reduced_operator_matches_dense_congruence() {
        let n = 12;
        let mut mt = Vec::new();
        for i in 0..n {
            mt.push((i, i, 4.0));
            if i > 0 {
                mt.push((i, i - 1, 1.0));
            }
        }
        let m = SparseSymMatrix::from_lower_triplets(n, &mt).unwrap();
        let k = lap(n);
        let op = MassReducedOperator::new(m.clone(), k.clone()).unwrap();
        // Ã is symmetric and similar to M⁻¹K: Ã y = 𝓛⁻¹ K u for y = 𝓛ᵀ u.
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let y = op.lt_mul(&u).unwrap();
        let lhs = op.apply(&y).unwrap();
        let rhs = op.l_solve(&k.matvec(&u).unwrap()).unwrap();
        for (p, q) in lhs.iter().zip(&rhs) {
            assert!((p - q).abs() < 1e-13);
        }
        let back = op.lt_solve(&y).unwrap();
        for (p, q) in back.iter().zip(&u) {
            assert!((p - q).abs() < 1e-14);
        }
        let d = op.to_dense().unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((d[(i, j)] - d[(j, i)]).abs() < 1e-15);
            }
        }
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -1.0)).collect();
        for zeta in [C64::new(-2.0, 0.0), C64::new(0.3, 1.1)] {
            let x = op.factor_shift(zeta).unwrap().solve(&b).unwrap();
            assert!(residual(&op, zeta, &x, &b) < 1e-12);
        }
    }

    #[test]
    fn cache_reuses_factorizations() {
        let cache = ShiftCache::new(Arc::new(lap(8)));
        let a = cache.solver(C64::new(-1.0, 0.0)).unwrap();
        let b = cache.solver(C64::new(-1.0, -0.0)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.solver(C64::new(-2.0, 0.0)).unwrap();
        assert_eq!(cache.len(), 2);
        let more = [C64::new(-2.0, 0.0), C64::new(-3.0, 1.0), C64::new(-3.0, -1.0)];
        cache.prefactor(Exec::Parallel, &more).unwrap();
        assert_eq!(cache.len(), 4);
        assert!(cache.prefactor(Exec::Sequential, &[C64::new(2.0, 0.0)]).is_ok());
    }
}
