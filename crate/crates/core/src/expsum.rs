//! Exponential sums for sinc and sinc² from Gauss–Legendre discretisations
//! of their inverse Fourier transforms:
//!
//! ```text
//! sinc(x)  = ½ ∫₋₁¹ e^{−ikx} dk
//! sinc²(x) = ⅛ ∫₋₂⁰ (2k + 4)(e^{ikx} + e^{−ikx}) dk
//! ```
//!
//! Both become `Σ_j c_j e^{−i t_j x}`, which is what every evaluation mode
//! below consumes.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::densemf::{expm_i_dense, DenseSymMatrix, SymEigen};
use crate::error::{check_len, Error, Result};
use crate::operator::{ShiftCache, SymOperator};
use crate::par::{self, Exec};
use crate::polesets::{poles_pade_exp, PoleSet, MAX_FAMILY_DEGREE};
use crate::ratkrylov::build_space;
use crate::scalarfun::{bound_expsum, gauss_legendre, sinc_real, QuadratureRule};

/// Largest order accepted by [`expsum_error_check`].
pub const ERROR_CHECK_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Sinc,
    Sinc2,
}

/// How the exponentials `e^{−itA} v` are evaluated.
#[derive(Clone, Debug)]
pub enum Inner {
    Dense,
    /// One rational Krylov space of dimension `k` shared by all nodes.
    Krylov { poles: PoleSet, k: usize },
}

impl Inner {
    /// `count` poles from rotated exponential Padé denominators, `±i g`,
    /// which is conjugate-closed. Dimension is `count + 1`.
    pub fn krylov(count: usize) -> Result<Inner> {
        Ok(Inner::Krylov {
            poles: exp_poles(count)?,
            k: count + 1,
        })
    }

    /// Poles for an exponential sum evaluated at `√(B)/2` (factor 4) or
    /// `√B` (factor 1), carried over to the plane of `B`.
    pub fn krylov_filter(count: usize, factor: f64) -> Result<Inner> {
        let poles = exp_poles(count)?.to_matrix_plane(factor);
        let k = poles.len() + 1;
        Ok(Inner::Krylov { poles, k })
    }
}

fn exp_poles(count: usize) -> Result<PoleSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one pole".into()));
    }
    let m = count.div_ceil(2).min(MAX_FAMILY_DEGREE);
    let base = poles_pade_exp(m)?;
    let i = C64::new(0.0, 1.0);
    let mut all: Vec<_> = base.rotated(i).poles;
    all.extend(base.rotated(-i).poles);
    let set = PoleSet::new(all, base.family, m);
    let keep = set.poles.iter().copied().take(count).collect();
    Ok(PoleSet::new(keep, base.family, m))
}

#[derive(Clone, Debug)]
pub struct ExpSumPlan {
    pub rule: QuadratureRule,
    pub inner: Inner,
    pub target: Target,
}

impl ExpSumPlan {
    pub fn new(target: Target, nu: usize, inner: Inner) -> Result<Self> {
        let rule = match target {
            Target::Sinc => gauss_legendre(nu, -1.0, 1.0)?,
            Target::Sinc2 => gauss_legendre(nu, -2.0, 0.0)?,
        };
        Ok(ExpSumPlan { rule, inner, target })
    }

    pub fn nu(&self) -> usize {
        self.rule.len()
    }

    /// Pairs `(c, t)` with the sum equal to `Σ c e^{−i t x}`.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        let nodes = self.rule.nodes.iter().zip(&self.rule.weights);
        match self.target {
            Target::Sinc => nodes.map(|(&l, &w)| (0.5 * w, l)).collect(),
            Target::Sinc2 => nodes
                .flat_map(|(&l, &w)| {
                    let c = w * (2.0 * l + 4.0) / 8.0;
                    // e^{+iℓx} first, then e^{−iℓx}
                    [(c, -l), (c, l)]
                })
                .collect(),
        }
    }

    /// The sum at a scalar argument.
    pub fn scalar(&self, x: C64) -> C64 {
        self.terms()
            .into_iter()
            .map(|(c, t)| c * (C64::new(0.0, -t) * x).exp())
            .sum()
    }
}

enum State {
    Dense(SymEigen),
    Krylov(ShiftCache),
}

/// A plan bound to an operator. Dense mode diagonalises once; Krylov mode
/// keeps the pole factorisations, so repeated applications with new seed
/// vectors are cheap.
pub struct ExpSumEvaluator {
    plan: ExpSumPlan,
    terms: Vec<(f64, f64)>,
    state: State,
    exec: Exec,
}

impl ExpSumEvaluator {
    pub fn new(op: Arc<dyn SymOperator>, plan: ExpSumPlan) -> Result<Self> {
        let state = match &plan.inner {
            Inner::Dense => State::Dense(DenseSymMatrix::from_operator(op.as_ref())?.eigen()?),
            Inner::Krylov { poles, .. } => {
                let cache = ShiftCache::new(op);
                cache.prefactor(Exec::default(), &poles.finite().collect::<Vec<_>>())?;
                State::Krylov(cache)
            }
        };
        let terms = plan.terms();
        Ok(ExpSumEvaluator {
            plan,
            terms,
            state,
            exec: Exec::default(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn plan(&self) -> &ExpSumPlan {
        &self.plan
    }

    /// The target function of `A` applied to `v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.apply_mapped(v, |x| x)
    }

    /// The target function of `g(A)` applied to `v`, where `g` acts on the
    /// eigenvalues (exact ones in dense mode, Ritz values otherwise).
    pub fn apply_mapped(&self, v: &[f64], g: impl Fn(C64) -> C64 + Sync) -> Result<Vec<f64>> {
        let y = self.apply_complex_mapped(v, g)?;
        Ok(y.into_iter().map(|z| z.re).collect())
    }

    pub fn apply_complex_mapped(
        &self,
        v: &[f64],
        g: impl Fn(C64) -> C64 + Sync,
    ) -> Result<Vec<C64>> {
        match &self.state {
            State::Dense(eig) => {
                let modal = eig.to_modal(v)?;
                let args: Vec<C64> = eig.values.iter().map(|&l| g(C64::new(l, 0.0))).collect();
                let n = v.len();
                let parts = par::map(self.exec, &self.terms, |&(c, t)| {
                    let mut y = vec![C64::new(0.0, 0.0); n];
                    for (j, (&m, &x)) in modal.iter().zip(&args).enumerate() {
                        let w = c * m * (C64::new(0.0, -t) * x).exp();
                        for (yi, q) in y.iter_mut().zip(eig.vectors.col(j).iter()) {
                            *yi += w * q;
                        }
                    }
                    y
                });
                Ok(sum_in_order(n, parts))
            }
            State::Krylov(cache) => {
                let Inner::Krylov { poles, k } = &self.plan.inner else {
                    unreachable!("state follows the plan")
                };
                check_len(cache.order(), v.len())?;
                let space = build_space(cache, v, poles, *k)?;
                let eig = space.eigensystem()?;
                let parts = par::map(self.exec, &self.terms, |&(c, t)| {
                    eig.apply_e1(&|x| c * (C64::new(0.0, -t) * g(x)).exp())
                });
                let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
                let coords = sum_in_order(space.dim(), parts);
                let mut y = space.lift(&coords);
                y.iter_mut().for_each(|z| *z *= space.seed_norm());
                Ok(y)
            }
        }
    }
}

fn sum_in_order(n: usize, parts: Vec<Vec<C64>>) -> Vec<C64> {
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for p in parts {
        acc.iter_mut().zip(p).for_each(|(a, x)| *a += x);
    }
    acc
}

fn check_target(plan: &ExpSumPlan, want: Target) -> Result<()> {
    if plan.target != want {
        return Err(Error::InvalidArgument(format!(
            "plan targets {:?}, expected {want:?}",
            plan.target
        )));
    }
    Ok(())
}

/// `½ Σ ω_p e^{−iℓ_p A} v`
pub fn expsum_sinc(a: Arc<dyn SymOperator>, v: &[f64], plan: &ExpSumPlan) -> Result<Vec<f64>> {
    check_target(plan, Target::Sinc)?;
    check_len(a.order(), v.len())?;
    ExpSumEvaluator::new(a, plan.clone())?.apply(v)
}

/// `⅛ Σ ω_p (2ℓ_p + 4)(e^{iℓ_p A} + e^{−iℓ_p A}) v` on nodes in (−2, 0).
pub fn expsum_sinc2(a: Arc<dyn SymOperator>, v: &[f64], plan: &ExpSumPlan) -> Result<Vec<f64>> {
    check_target(plan, Target::Sinc2)?;
    check_len(a.order(), v.len())?;
    ExpSumEvaluator::new(a, plan.clone())?.apply(v)
}

/// Spectral-norm error of the ν-node sinc sum against `sinc(A)`, and the
/// a-priori bound `π/(2ν)! (ρ/2)^{2ν}`.
pub fn expsum_error_check(a: &DenseSymMatrix, nu: usize) -> Result<(f64, f64)> {
    let n = a.order();
    if n > ERROR_CHECK_LIMIT {
        return Err(Error::ScaleGuard {
            order: n,
            limit: ERROR_CHECK_LIMIT,
        });
    }
    let eig = a.eigen()?;
    let rho = eig.spectral_radius();
    let exact = eig.funm(sinc_real);
    let plan = ExpSumPlan::new(Target::Sinc, nu, Inner::Dense)?;
    let mut diff = Mat::<C64>::from_fn(n, n, |i, j| C64::new(exact[(i, j)], 0.0));
    for (c, t) in plan.terms() {
        let e = expm_i_dense(a, t)?;
        diff = diff - Mat::<C64>::from_fn(n, n, |i, j| c * e[(i, j)]);
    }
    let sv = diff
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok((sv[0], bound_expsum(nu, rho)))
}
