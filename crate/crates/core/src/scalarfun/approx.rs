//! Scalar rational approximants of sinc built from Laguerre-form Padé
//! denominators. These are used to validate the error bounds; the matrix
//! code only needs their poles.

use num_complex::Complex64 as C64;

use super::poly::{laguerre_coeffs, Polynomial};
use crate::error::{Error, Result};

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::UnsupportedDegree {
            degree: 0,
            reason: "rational approximants need n ≥ 1",
        });
    }
    Ok(())
}

/// sinc z from the [n/n] Padé approximant of the exponential:
/// `(L(iz)² − L(−iz)²) / (2iz L(iz) L(−iz))` with `L = L_n^(−2n−1)`.
///
/// The difference `L(iz) − L(−iz)` only has odd powers, so it is divided by
/// `iz` analytically; the value at `z = 0` is then well defined.
pub fn exp_pade_sinc(n: usize, z: C64) -> Result<C64> {
    check_degree(n)?;
    let l = laguerre_coeffs(n, C64::new(-2.0 * n as f64 - 1.0, 0.0))?;
    let iz = C64::new(0.0, 1.0) * z;
    let a = l.eval(iz);
    let b = l.eval(-iz);
    // odd(iz)/iz = Σ_{k odd} c_k (iz)^{k−1}
    let w = iz * iz;
    let odd = l
        .coeffs()
        .iter()
        .skip(1)
        .step_by(2)
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &c| acc * w + c);
    Ok(odd * (a + b) / (a * b))
}

/// Denominator of the [n/n] Padé approximant of ₁F₁(1;2;−x), i.e. of
/// (1 − e^{−x})/x, normalised to constant term 1. It is proportional to
/// `L_n^(−2n−2)(x)`.
pub fn phi1_pade_denominator(n: usize) -> Result<Polynomial> {
    check_degree(n)?;
    let l = laguerre_coeffs(n, C64::new(-2.0 * n as f64 - 2.0, 0.0))?;
    let c0 = l.coeffs()[0];
    Ok(Polynomial::new(l.coeffs().iter().map(|&c| c / c0).collect()))
}

/// Numerator matching [`phi1_pade_denominator`]: the degree-n truncation of
/// the product of the denominator with the Taylor series Σ (−x)^j/(j+1)!.
pub fn hyp_pade_numerator(n: usize) -> Result<Polynomial> {
    let den = phi1_pade_denominator(n)?;
    let series = phi1_neg_series(n);
    let num = (0..=n)
        .map(|k| {
            (0..=k)
                .filter_map(|i| den.coeffs().get(i).map(|&b| b * series[k - i]))
                .sum()
        })
        .collect();
    Ok(Polynomial::new(num))
}

/// Taylor coefficients (−1)^j/(j+1)! of ₁F₁(1;2;−x), j = 0..=m.
fn phi1_neg_series(m: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut t = 1.0;
    for j in 0..=m {
        if j > 0 {
            t = -t / (j as f64 + 1.0);
        }
        out.push(C64::new(t, 0.0));
    }
    out
}

/// Non-symmetric variant `e^{iz} A_n(2iz) / B_n(2iz)`.
pub fn hyp_pade_sinc(n: usize, z: C64) -> Result<C64> {
    let num = hyp_pade_numerator(n)?;
    let den = phi1_pade_denominator(n)?;
    let x = C64::new(0.0, 2.0) * z;
    Ok((C64::new(0.0, 1.0) * z).exp() * num.eval(x) / den.eval(x))
}

/// Parity-symmetrised variant `½ (R(iz) + R(−iz))`, `R = A_n / B_n`.
pub fn hyp_pade_sinc_symmetrized(n: usize, z: C64) -> Result<C64> {
    let num = hyp_pade_numerator(n)?;
    let den = phi1_pade_denominator(n)?;
    let x = C64::new(0.0, 1.0) * z;
    Ok(0.5 * (num.eval(x) / den.eval(x) + num.eval(-x) / den.eval(-x)))
}
