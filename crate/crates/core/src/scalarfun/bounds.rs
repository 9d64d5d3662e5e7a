//! Leading-order error bounds for the rational sinc approximants and the
//! exponential-sum quadrature.
//!
//! All bounds are monomials in the spectral parameter, so their sup over
//! `[0, zmax]` is the value at `zmax`. Everything is computed in log space.

use crate::error::{Error, Result};

/// Upper limit for [`select_pole_count`].
pub const MAX_POLE_COUNT: usize = 64;

/// ln n!, summed directly (exact enough for the n ≤ a few hundred used here).
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// 2 ln(n!/(2n+1)!), the shared prefactor of the three rational bounds.
fn ln_ratio_sq(n: usize) -> f64 {
    2.0 * (ln_factorial(n) - ln_factorial(2 * n + 1))
}

fn monomial(ln_coeff: f64, z: f64, power: usize) -> f64 {
    if z == 0.0 {
        return if power == 0 { ln_coeff.exp() } else { 0.0 };
    }
    (ln_coeff + power as f64 * z.ln()).exp()
}

/// 2(2n+1)(n!/(2n+1)!)² z^{2n}.
pub fn bound_en(n: usize, zmax: f64) -> f64 {
    let c = 2f64.ln() + ((2 * n + 1) as f64).ln() + ln_ratio_sq(n);
    monomial(c, zmax, 2 * n)
}

/// 2·2^{2n}(n!/(2n+1)!)² z^{2n+1}.
pub fn bound_fn(n: usize, zmax: f64) -> f64 {
    let c = (2 * n + 1) as f64 * 2f64.ln() + ln_ratio_sq(n);
    monomial(c, zmax, 2 * n + 1)
}

/// 2(n+1)/(4n+6)·(n!/(2n+1)!)² z^{2n+2}.
pub fn bound_ftilde(n: usize, zmax: f64) -> f64 {
    let c = (2.0 * (n + 1) as f64 / (4 * n + 6) as f64).ln() + ln_ratio_sq(n);
    monomial(c, zmax, 2 * n + 2)
}

/// π/(2ν)!·(ρ/2)^{2ν}.
pub fn bound_expsum(nu: usize, rho: f64) -> f64 {
    let c = std::f64::consts::PI.ln() - ln_factorial(2 * nu);
    monomial(c, rho / 2.0, 2 * nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    En,
    Fn,
    Ftilde,
}

impl BoundKind {
    pub fn eval(self, n: usize, zmax: f64) -> f64 {
        match self {
            BoundKind::En => bound_en(n, zmax),
            BoundKind::Fn => bound_fn(n, zmax),
            BoundKind::Ftilde => bound_ftilde(n, zmax),
        }
    }
}

/// Smallest `n ≤ 64` with `kind.eval(n, zmax) ≤ tol`.
pub fn select_pole_count(kind: BoundKind, zmax: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !(zmax >= 0.0) {
        return Err(Error::InvalidArgument(format!("zmax must be nonnegative, got {zmax}")));
    }
    (1..=MAX_POLE_COUNT)
        .find(|&n| kind.eval(n, zmax) <= tol)
        .ok_or(Error::Saturated { max: MAX_POLE_COUNT, tol })
}
