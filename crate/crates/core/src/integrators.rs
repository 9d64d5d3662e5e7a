//! Gautschi-type trigonometric integrator in staggered one-step form, and
//! its Störmer–Verlet limit, for `y'' + A y = f(t)`.
//!
//! ```text
//! v_{1/2}   = σ(h²A) y'(t₀) + (h/2) ψ(h²A)(−A y₀ + f₀)
//! y_{n+1}   = y_n + h v_{n+1/2}
//! v_{n+3/2} = v_{n+1/2} + h ψ(h²A)(−A y_{n+1} + f_{n+1})
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::densemf::{DenseSymMatrix, SymEigen};
use crate::eigs::estimate_lambda_max;
use crate::error::{check_len, Error, Result};
use crate::expsum::{ExpSumEvaluator, ExpSumPlan, Inner, Target};
use crate::operator::{Scaled, ShiftCache, SymOperator};
use crate::par::Exec;
use crate::polesets::{Family, PoleSet};
use crate::ratkrylov::{apply_function, build_space, natural_dim, Filter, PoleMapping};
use crate::scalarfun::{psi_real, select_pole_count, sigma_real, BoundKind};

/// Safety factor on the λmax estimate used for pole-count selection.
pub const LAMBDA_SAFETY: f64 = 1.01;

pub type Forcing = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct SecondOrderIVP {
    pub a: Arc<dyn SymOperator>,
    /// `None` means f ≡ 0.
    pub forcing: Option<Forcing>,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    pub t0: f64,
    pub tf: f64,
}

impl SecondOrderIVP {
    pub fn new(
        a: Arc<dyn SymOperator>,
        forcing: Option<Forcing>,
        y0: Vec<f64>,
        y1: Vec<f64>,
        t0: f64,
        tf: f64,
    ) -> Result<Self> {
        check_len(a.order(), y0.len())?;
        check_len(a.order(), y1.len())?;
        if !(tf > t0) {
            return Err(Error::InvalidArgument(format!("need tf > t0, got [{t0}, {tf}]")));
        }
        Ok(SecondOrderIVP {
            a,
            forcing,
            y0,
            y1,
            t0,
            tf,
        })
    }

    pub fn order(&self) -> usize {
        self.y0.len()
    }

    pub fn force(&self, t: f64) -> Result<Vec<f64>> {
        match &self.forcing {
            None => Ok(vec![0.0; self.order()]),
            Some(f) => {
                let v = f(t);
                check_len(self.order(), v.len())?;
                Ok(v)
            }
        }
    }

    /// Number of steps of size `h`; the interval must be an integer multiple.
    pub fn steps(&self, h: f64) -> Result<usize> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
        }
        let r = (self.tf - self.t0) / h;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) || n < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "interval length {} is not a multiple of h = {h}",
                self.tf - self.t0
            )));
        }
        Ok(n as usize)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorState {
    pub n: usize,
    pub y: Vec<f64>,
    pub v_half: Vec<f64>,
    pub h: f64,
}

/// How many poles a rational backend uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoleSelection {
    Fixed(usize),
    /// Smallest degree whose a-priori bound meets the tolerance.
    Tolerance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatFunBackend {
    Dense,
    RationalKrylov {
        family: Family,
        selection: PoleSelection,
        mapping: PoleMapping,
    },
    /// `k == 0` evaluates the exponentials densely.
    ExpSum { nu: usize, k: usize },
}

impl fmt::Display for MatFunBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatFunBackend::Dense => write!(f, "dense"),
            MatFunBackend::RationalKrylov { family, selection, .. } => match selection {
                PoleSelection::Fixed(n) => write!(f, "ratkrylov:{}:{n}", family.name()),
                PoleSelection::Tolerance(t) => write!(f, "ratkrylov:{}:{t:e}", family.name()),
            },
            MatFunBackend::ExpSum { nu, k } => write!(f, "expsum:{nu}:{k}"),
        }
    }
}

impl FromStr for MatFunBackend {
    type Err = Error;

    /// `dense`, `ratkrylov:FAMILY:TOL` (a real number), `ratkrylov:FAMILY:N`
    /// (an integer degree) or `expsum:NU:K`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unrecognised backend `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["dense"] => Ok(MatFunBackend::Dense),
            ["ratkrylov", fam, arg] => {
                let family: Family = fam.parse()?;
                let selection = if let Ok(n) = arg.parse::<usize>() {
                    PoleSelection::Fixed(n)
                } else {
                    let tol: f64 = arg.parse().map_err(|_| bad())?;
                    if !(tol > 0.0) {
                        return Err(bad());
                    }
                    PoleSelection::Tolerance(tol)
                };
                Ok(MatFunBackend::RationalKrylov {
                    family,
                    selection,
                    mapping: PoleMapping::Squared,
                })
            }
            ["expsum", nu, k] => {
                let nu: usize = nu.parse().map_err(|_| bad())?;
                let k: usize = k.parse().map_err(|_| bad())?;
                if nu == 0 {
                    return Err(bad());
                }
                Ok(MatFunBackend::ExpSum { nu, k })
            }
            _ => Err(bad()),
        }
    }
}

fn bound_kind(family: Family) -> Result<BoundKind> {
    match family {
        Family::E => Ok(BoundKind::En),
        Family::L => Ok(BoundKind::Fn),
        Family::Lbar => Ok(BoundKind::Ftilde),
        other => Err(Error::InvalidArgument(format!(
            "family {} has no a-priori bound; give a fixed pole count",
            other.name()
        ))),
    }
}

enum FilterImpl {
    Identity,
    Dense { eig: SymEigen, h2: f64 },
    Rational {
        cache: ShiftCache,
        psi_poles: PoleSet,
        sigma_poles: PoleSet,
    },
    ExpSum {
        psi: ExpSumEvaluator,
        sigma: ExpSumEvaluator,
    },
}

/// ψ(h²A) and σ(h²A) for one operator and step size, with everything that
/// does not depend on the vector (diagonalisation, factorisations) prepared
/// up front.
pub struct Filters {
    imp: FilterImpl,
    poles_used: usize,
}

impl Filters {
    pub fn identity() -> Self {
        Filters {
            imp: FilterImpl::Identity,
            poles_used: 0,
        }
    }

    pub fn new(a: Arc<dyn SymOperator>, h: f64, backend: &MatFunBackend) -> Result<Self> {
        let h2 = h * h;
        match backend {
            MatFunBackend::Dense => Ok(Filters {
                imp: FilterImpl::Dense {
                    eig: DenseSymMatrix::from_operator(a.as_ref())?.eigen()?,
                    h2,
                },
                poles_used: 0,
            }),
            MatFunBackend::RationalKrylov {
                family,
                selection,
                mapping,
            } => {
                let n = match *selection {
                    PoleSelection::Fixed(n) => n,
                    PoleSelection::Tolerance(tol) => {
                        let kind = bound_kind(*family)?;
                        let zmax = h2 * estimate_lambda_max(a.as_ref())? * LAMBDA_SAFETY;
                        select_pole_count(kind, zmax, tol)?
                    }
                };
                let sinc_poles = family.generate(n)?;
                let psi_poles = Filter::Psi.poles(&sinc_poles, *mapping);
                let sigma_poles = Filter::Sigma.poles(&sinc_poles, *mapping);
                let cache = ShiftCache::new(Arc::new(Scaled::new(a, h2)));
                let all: Vec<C64> = psi_poles.finite().chain(sigma_poles.finite()).collect();
                cache.prefactor(Exec::default(), &all)?;
                Ok(Filters {
                    imp: FilterImpl::Rational {
                        cache,
                        psi_poles,
                        sigma_poles,
                    },
                    poles_used: n,
                })
            }
            &MatFunBackend::ExpSum { nu, k } => {
                let b: Arc<dyn SymOperator> = Arc::new(Scaled::new(a, h2));
                let inner = |factor| {
                    if k == 0 {
                        Ok(Inner::Dense)
                    } else {
                        Inner::krylov_filter(k, factor)
                    }
                };
                let psi = ExpSumPlan::new(Target::Sinc2, nu, inner(4.0)?)?;
                let sigma = ExpSumPlan::new(Target::Sinc, nu, inner(1.0)?)?;
                Ok(Filters {
                    imp: FilterImpl::ExpSum {
                        psi: ExpSumEvaluator::new(Arc::clone(&b), psi)?,
                        sigma: ExpSumEvaluator::new(b, sigma)?,
                    },
                    poles_used: k,
                })
            }
        }
    }

    /// Pole degree in use: the selected family degree for rational
    /// backends, the Krylov pole count for exponential sums, 0 otherwise.
    pub fn poles_used(&self) -> usize {
        self.poles_used
    }

    fn apply(&self, filter: Filter, v: &[f64]) -> Result<Vec<f64>> {
        if v.iter().all(|&x| x == 0.0) {
            return Ok(v.to_vec());
        }
        match &self.imp {
            FilterImpl::Identity => Ok(v.to_vec()),
            FilterImpl::Dense { eig, h2 } => match filter {
                Filter::Psi => eig.apply(|l| psi_real(h2 * l), v),
                Filter::Sigma => eig.apply(|l| sigma_real(h2 * l), v),
            },
            FilterImpl::Rational {
                cache,
                psi_poles,
                sigma_poles,
            } => {
                let poles = match filter {
                    Filter::Psi => psi_poles,
                    Filter::Sigma => sigma_poles,
                };
                let space = build_space(cache, v, poles, natural_dim(poles))?;
                apply_function(&space, |z| filter.eval(z), v)
            }
            FilterImpl::ExpSum { psi, sigma } => match filter {
                Filter::Psi => psi.apply_mapped(v, |m| m.sqrt() / 2.0),
                Filter::Sigma => sigma.apply_mapped(v, |m| m.sqrt()),
            },
        }
    }

    pub fn psi(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.apply(Filter::Psi, v)
    }

    pub fn sigma(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.apply(Filter::Sigma, v)
    }
}

fn check_finite(state: &IntegratorState) -> Result<()> {
    if state.y.iter().chain(&state.v_half).all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { step: state.n })
    }
}

/// `−A y + f`
fn bracket(ivp: &SecondOrderIVP, y: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut r = ivp.a.apply(y)?;
    let f = ivp.force(t)?;
    r.iter_mut().zip(f).for_each(|(x, fi)| *x = fi - *x);
    Ok(r)
}

pub fn gautschi_init(ivp: &SecondOrderIVP, h: f64, filters: &Filters) -> Result<IntegratorState> {
    let s = filters.sigma(&ivp.y1)?;
    let p = filters.psi(&bracket(ivp, &ivp.y0, ivp.t0)?)?;
    let v_half = s.iter().zip(p).map(|(a, b)| a + 0.5 * h * b).collect();
    let state = IntegratorState {
        n: 0,
        y: ivp.y0.clone(),
        v_half,
        h,
    };
    check_finite(&state)?;
    Ok(state)
}

/// Advance one step in place: one matvec and one ψ-product.
pub fn gautschi_step(state: &mut IntegratorState, ivp: &SecondOrderIVP, filters: &Filters) -> Result<()> {
    let h = state.h;
    state.y.iter_mut().zip(&state.v_half).for_each(|(y, v)| *y += h * v);
    state.n += 1;
    let t = ivp.t0 + state.n as f64 * h;
    let p = filters.psi(&bracket(ivp, &state.y, t)?)?;
    state.v_half.iter_mut().zip(p).for_each(|(v, d)| *v += h * d);
    check_finite(&state)
}

/// `½‖v‖² + ½⟨y, A y⟩`
pub fn energy(a: &dyn SymOperator, y: &[f64], v: &[f64]) -> Result<f64> {
    let ay = a.apply(y)?;
    let pot: f64 = y.iter().zip(&ay).map(|(a, b)| a * b).sum();
    let kin: f64 = v.iter().map(|x| x * x).sum();
    Ok(0.5 * (kin + pot))
}

/// What [`gautschi_integrate`] keeps besides the final state.
#[derive(Clone, Copy, Debug, Default)]
pub struct Record {
    /// Store y every this many steps (0: final state only).
    pub every: usize,
    /// Also store the energy with the averaged velocity at those points.
    pub energy: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub last: IntegratorState,
    pub poles_used: usize,
}

impl Trajectory {
    pub fn final_y(&self) -> &[f64] {
        &self.last.y
    }
}

fn run(ivp: &SecondOrderIVP, h: f64, filters: &Filters, record: Record) -> Result<Trajectory> {
    let steps = ivp.steps(h)?;
    let mut state = gautschi_init(ivp, h, filters)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
        last: state.clone(),
        poles_used: filters.poles_used(),
    };
    let keep = |traj: &mut Trajectory, st: &IntegratorState, v: &[f64]| -> Result<()> {
        traj.times.push(ivp.t0 + st.n as f64 * h);
        traj.states.push(st.y.clone());
        if record.energy {
            traj.energies.push(energy(ivp.a.as_ref(), &st.y, v)?);
        }
        Ok(())
    };
    if record.every > 0 {
        keep(&mut traj, &state, &ivp.y1)?;
    }
    for _ in 0..steps {
        let prev = state.v_half.clone();
        gautschi_step(&mut state, ivp, filters)?;
        if record.every > 0 && state.n % record.every == 0 {
            let vbar: Vec<f64> = prev.iter().zip(&state.v_half).map(|(a, b)| 0.5 * (a + b)).collect();
            keep(&mut traj, &state, &vbar)?;
        }
    }
    traj.last = state;
    Ok(traj)
}

pub fn gautschi_integrate(
    ivp: &SecondOrderIVP,
    h: f64,
    backend: &MatFunBackend,
    record: Record,
) -> Result<Trajectory> {
    ivp.steps(h)?;
    let filters = Filters::new(Arc::clone(&ivp.a), h, backend)?;
    run(ivp, h, &filters, record)
}

/// Leapfrog: the same recursion with ψ = σ = I.
pub fn stormer_verlet_integrate(ivp: &SecondOrderIVP, h: f64, record: Record) -> Result<Trajectory> {
    run(ivp, h, &Filters::identity(), record)
}
