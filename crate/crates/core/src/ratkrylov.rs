//! Rational Arnoldi: subspace construction and projected evaluation of
//! matrix functions.
//!
//! The space for poles ζ₁, …, ζ_{k−1} is spanned by `v₁ = v/‖v‖` and the
//! shift-inverted iterates `(ζ_j I − A)⁻¹ v_j` (an infinite pole contributes
//! `A v_j`), orthonormalised by modified Gram–Schmidt with one
//! reorthogonalization pass. Functions are then evaluated on the small
//! projected matrix `A_k = V_kᴴ A V_k`.

use std::sync::Arc;

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{check_len, Error, Result};
use crate::operator::{Scaled, ShiftCache, SymOperator};
use crate::par::Exec;
use crate::polesets::{poles_e, Pole, PoleSet};
use crate::scalarfun::{laguerre_coeffs, psi, sigma, sinc, Polynomial};

/// Relative norm below which an orthogonalised candidate is discarded.
pub const BREAKDOWN_TOL: f64 = 1e-14;
/// Relative tolerance for the seed-placement check in [`apply_function`].
pub const SEED_TOL: f64 = 1e-10;
/// Eigenvector condition beyond which the projected matrix is rejected.
pub const MAX_EIGVEC_COND: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct RationalKrylovSpace {
    basis: Vec<Vec<C64>>,
    projected: Mat<C64>,
    poles_used: Vec<Pole>,
    seed_norm: f64,
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl RationalKrylovSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    pub fn projected(&self) -> &Mat<C64> {
        &self.projected
    }

    /// Poles actually consumed (fewer than requested after breakdown).
    pub fn poles_used(&self) -> &[Pole] {
        &self.poles_used
    }

    pub fn seed_norm(&self) -> f64 {
        self.seed_norm
    }

    /// max |VᴴV − I|
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let g = cdot(&self.basis[i], &self.basis[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(want, 0.0)).norm());
            }
        }
        worst
    }

    /// max |A_k − A_kᴴ| relative to max |A_k|.
    pub fn hermitian_defect(&self) -> f64 {
        let k = self.dim();
        let mut scale = 0.0f64;
        let mut defect = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                scale = scale.max(self.projected[(i, j)].norm());
                defect = defect.max((self.projected[(i, j)] - self.projected[(j, i)].conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    /// Vᴴ x
    pub fn project(&self, x: &[C64]) -> Vec<C64> {
        self.basis.iter().map(|q| cdot(q, x)).collect()
    }

    /// V c
    pub fn lift(&self, c: &[C64]) -> Vec<C64> {
        let n = self.basis[0].len();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (q, &cj) in self.basis.iter().zip(c) {
            for (yi, qi) in y.iter_mut().zip(q) {
                *yi += qi * cj;
            }
        }
        y
    }

    /// f(A_k) e₁ by diagonalising the projected matrix.
    pub fn function_on_e1(&self, f: impl Fn(C64) -> C64) -> Result<Vec<C64>> {
        self.eigensystem()?.apply_e1(&f)
    }

    /// Diagonalisation of the projected matrix, reusable across functions.
    pub fn eigensystem(&self) -> Result<ProjectedEigen> {
        ProjectedEigen::new(&self.projected, self.hermitian_defect() <= 1e-8)
    }
}

/// `A_k = X Λ X⁻¹` together with `X⁻¹ e₁`.
#[derive(Clone, Debug)]
pub struct ProjectedEigen {
    values: Vec<C64>,
    vectors: Mat<C64>,
    coeffs_e1: Vec<C64>,
}

impl ProjectedEigen {
    fn new(a: &Mat<C64>, hermitian: bool) -> Result<Self> {
        let k = a.nrows();
        if hermitian {
            let h = Mat::<C64>::from_fn(k, k, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()));
            let e = h
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let s = e.S();
            let u = e.U().to_owned();
            let values = (0..k).map(|i| s[i]).collect();
            let coeffs_e1 = (0..k).map(|j| u[(0, j)].conj()).collect();
            return Ok(ProjectedEigen {
                values,
                vectors: u,
                coeffs_e1,
            });
        }
        let e = a.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let x = e.U().to_owned();
        let s = e.S();
        let sv = x.singular_values().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let cond = sv[0] / sv[k - 1];
        if !(cond <= MAX_EIGVEC_COND) {
            return Err(Error::NotDiagonalizable { cond });
        }
        let mut rhs = Mat::<C64>::zeros(k, 1);
        rhs[(0, 0)] = C64::new(1.0, 0.0);
        use faer::linalg::solvers::Solve;
        let c = x.partial_piv_lu().solve(&rhs);
        Ok(ProjectedEigen {
            values: (0..k).map(|i| s[i]).collect(),
            vectors: x,
            coeffs_e1: (0..k).map(|i| c[(i, 0)]).collect(),
        })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// X f(Λ) X⁻¹ e₁
    pub fn apply_e1(&self, f: &dyn Fn(C64) -> C64) -> Result<Vec<C64>> {
        let k = self.values.len();
        let w: Vec<C64> = (0..k).map(|j| f(self.values[j]) * self.coeffs_e1[j]).collect();
        Ok((0..k)
            .map(|i| (0..k).map(|j| self.vectors[(i, j)] * w[j]).sum())
            .collect())
    }
}

/// Rational Arnoldi with `k − 1` poles taken cyclically from `poles`.
pub fn build_space(
    cache: &ShiftCache,
    v: &[f64],
    poles: &PoleSet,
    k: usize,
) -> Result<RationalKrylovSpace> {
    let seed: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    build_space_complex(cache, &seed, &poles.cyclic(k.saturating_sub(1)), k)
}

/// As [`build_space`] with an explicit pole sequence and a complex seed.
pub fn build_space_complex(
    cache: &ShiftCache,
    v: &[C64],
    sequence: &[Pole],
    k: usize,
) -> Result<RationalKrylovSpace> {
    let op = cache.operator();
    check_len(op.order(), v.len())?;
    if k == 0 {
        return Err(Error::InvalidArgument("Krylov dimension must be at least 1".into()));
    }
    let seed_norm = cnorm(v);
    if !(seed_norm > 0.0) || !seed_norm.is_finite() {
        return Err(Error::ZeroSeed);
    }
    let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|x| x / seed_norm).collect()];
    let mut used = Vec::new();
    for &pole in sequence.iter().take(k - 1) {
        let last = basis.last().unwrap();
        let mut w = match pole {
            Pole::Finite(z) => cache.solver(z)?.solve(last)?,
            Pole::Infinite => op.apply_complex(last)?,
        };
        let wnorm = cnorm(&w);
        if !wnorm.is_finite() {
            return Err(Error::PoleCollision {
                pole: pole.finite().unwrap_or_default(),
            });
        }
        for _ in 0..2 {
            for q in &basis {
                let c = cdot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = cnorm(&w);
        used.push(pole);
        if r <= BREAKDOWN_TOL * wnorm || r == 0.0 {
            log::debug!("rational Arnoldi breakdown at dimension {}", basis.len());
            break;
        }
        w.iter_mut().for_each(|x| *x /= r);
        basis.push(w);
    }
    let dim = basis.len();
    let av: Vec<Vec<C64>> = basis
        .iter()
        .map(|q| op.apply_complex(q))
        .collect::<Result<_>>()?;
    let projected = Mat::<C64>::from_fn(dim, dim, |i, j| cdot(&basis[i], &av[j]));
    Ok(RationalKrylovSpace {
        basis,
        projected,
        poles_used: used,
        seed_norm,
    })
}

/// `‖v‖ V f(A_k) e₁`, checking first that `v` is the seed of the space.
pub fn apply_function_complex(
    space: &RationalKrylovSpace,
    f: impl Fn(C64) -> C64,
    v: &[f64],
) -> Result<Vec<C64>> {
    let vc: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    check_len(space.basis[0].len(), vc.len())?;
    let nv = cnorm(&vc);
    let mut coords = space.project(&vc);
    coords[0] -= nv;
    let deviation = cnorm(&coords) / nv.max(f64::MIN_POSITIVE);
    if !(deviation <= SEED_TOL) {
        return Err(Error::SeedMismatch { deviation });
    }
    let c = space.function_on_e1(f)?;
    let mut y = space.lift(&c);
    y.iter_mut().for_each(|x| *x *= space.seed_norm);
    Ok(y)
}

/// Real part of [`apply_function_complex`]. With a conjugate-closed pole
/// set and real data the discarded imaginary part is roundoff.
pub fn apply_function(
    space: &RationalKrylovSpace,
    f: impl Fn(C64) -> C64,
    v: &[f64],
) -> Result<Vec<f64>> {
    let y = apply_function_complex(space, f, v)?;
    let norm = y.iter().map(|z| z.re * z.re).sum::<f64>().sqrt();
    let imag = y.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if imag > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        log::debug!("discarding imaginary part of relative size {:e}", imag / norm);
    }
    Ok(y.into_iter().map(|z| z.re).collect())
}

/// How sinc-plane poles are carried over to the filter argument `B = h²A`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PoleMapping {
    /// σ(B) = sinc √B uses ζ², ψ(B) = sinc²(√B/2) uses (2ζ)².
    #[default]
    Squared,
    /// Sinc-plane poles are used on B unchanged.
    Direct,
}

impl std::str::FromStr for PoleMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(PoleMapping::Squared),
            "direct" => Ok(PoleMapping::Direct),
            _ => Err(Error::InvalidArgument(format!("unknown pole mapping `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Filter {
    Psi,
    Sigma,
}

impl Filter {
    pub fn eval(self, z: C64) -> C64 {
        match self {
            Filter::Psi => psi(z),
            Filter::Sigma => sigma(z),
        }
    }

    /// Pole set for this filter at argument B under `mapping`.
    pub fn poles(self, sinc_poles: &PoleSet, mapping: PoleMapping) -> PoleSet {
        match (mapping, self) {
            (PoleMapping::Direct, _) => sinc_poles.without_origin(),
            (PoleMapping::Squared, Filter::Sigma) => sinc_poles.to_matrix_plane(1.0),
            (PoleMapping::Squared, Filter::Psi) => sinc_poles.to_matrix_plane(4.0),
        }
    }
}

/// Krylov dimension that consumes every pole of `poles` once.
pub fn natural_dim(poles: &PoleSet) -> usize {
    poles.len() + 1
}

/// sinc(A) v on the rational Krylov space with the given poles.
pub fn sinc_apply(cache: &ShiftCache, v: &[f64], poles: &PoleSet, k: usize) -> Result<Vec<f64>> {
    let space = build_space(cache, v, poles, k)?;
    apply_function(&space, sinc, v)
}

fn filter_apply(
    a: Arc<dyn SymOperator>,
    v: &[f64],
    poles: &PoleSet,
    k: Option<usize>,
    h: f64,
    mapping: PoleMapping,
    filter: Filter,
) -> Result<Vec<f64>> {
    let b: Arc<dyn SymOperator> = Arc::new(Scaled::new(a, h * h));
    let cache = ShiftCache::new(b);
    let mapped = filter.poles(poles, mapping);
    let k = k.unwrap_or_else(|| natural_dim(&mapped));
    cache.prefactor(Exec::default(), &mapped.finite().collect::<Vec<_>>())?;
    let space = build_space(&cache, v, &mapped, k)?;
    apply_function(&space, |z| filter.eval(z), v)
}

/// ψ(h²A) v. With `k = None` the dimension is one more than the number of
/// mapped poles.
pub fn psi_apply(
    a: Arc<dyn SymOperator>,
    v: &[f64],
    poles: &PoleSet,
    k: Option<usize>,
    h: f64,
    mapping: PoleMapping,
) -> Result<Vec<f64>> {
    filter_apply(a, v, poles, k, h, mapping, Filter::Psi)
}

/// σ(h²A) v, see [`psi_apply`].
pub fn sigma_apply(
    a: Arc<dyn SymOperator>,
    v: &[f64],
    poles: &PoleSet,
    k: Option<usize>,
    h: f64,
    mapping: PoleMapping,
) -> Result<Vec<f64>> {
    filter_apply(a, v, poles, k, h, mapping, Filter::Sigma)
}

/// The exponential-Padé sinc approximant `E_n(A) v` evaluated directly by
/// partial fractions over its 2n poles (the origin is removable).
pub fn exp_pade_sinc_direct(cache: &ShiftCache, n: usize, v: &[f64]) -> Result<Vec<f64>> {
    check_len(cache.order(), v.len())?;
    let l = laguerre_coeffs(n, C64::new(-2.0 * n as f64 - 1.0, 0.0))?;
    let i = C64::new(0.0, 1.0);
    let a = l.scale_argument(i);
    let b = l.scale_argument(-i);
    // (L(iz) − L(−iz)) / (2iz) as a polynomial in z.
    let odd = Polynomial::new(
        l.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .step_by(2)
            .flat_map(|(k, &c)| [c * i.powu(k as u32 - 1), C64::new(0.0, 0.0)])
            .collect(),
    );
    let sum = Polynomial::new(a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + y).collect());
    let num = odd.mul(&sum);
    let den = a.mul(&b);
    let dden = den.derivative();
    let poles: Vec<C64> = poles_e(n)?.finite().filter(|z| z.norm() > 0.0).collect();
    cache.prefactor(Exec::default(), &poles)?;
    let vc: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
    let mut y = vec![C64::new(0.0, 0.0); v.len()];
    for p in poles {
        // Residue r/(z − p) contributes r (A − pI)⁻¹ v = −r (pI − A)⁻¹ v.
        let r = num.eval(p) / dden.eval(p);
        let x = cache.solver(p)?.solve(&vc)?;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= r * xi;
        }
    }
    Ok(y.into_iter().map(|z| z.re).collect())
}
