//! Scalar special functions, polynomial machinery, quadrature and the
//! closed-form error bounds that drive pole-count selection.

mod approx;
mod bounds;
mod poly;
mod quadrature;

pub use approx::{
    exp_pade_sinc, hyp_pade_numerator, hyp_pade_sinc, hyp_pade_sinc_symmetrized,
    phi1_pade_denominator,
};
pub use bounds::{
    bound_en, bound_expsum, bound_fn, bound_ftilde, ln_factorial, select_pole_count, BoundKind,
    MAX_POLE_COUNT,
};
pub use poly::{
    laguerre_coeffs, pade_sinc_denominator, pade_sinc_denominator_rational, poly_roots,
    real_poly_roots, Polynomial, MAX_LAGUERRE_DEGREE, MAX_ROOT_DEGREE,
};
pub use quadrature::{gauss_legendre, QuadratureRule};

use num_complex::Complex64 as C64;

/// Below this modulus the Taylor series replaces `sin z / z`.
pub const SERIES_THRESHOLD: f64 = 1e-2;
const SERIES_TERMS: usize = 8;

/// Σ_{k<8} (−w)^k / (2k+1)!, i.e. sinc(√w) by its series in w = z².
fn sinc_series_in_square(w: C64) -> C64 {
    // Horner from the highest term: 1/(2k+1)! ratios are 1/((2k)(2k+1)).
    let mut acc = C64::new(1.0, 0.0);
    for k in (1..SERIES_TERMS).rev() {
        let d = (2 * k * (2 * k + 1)) as f64;
        acc = C64::new(1.0, 0.0) - w * acc / d;
    }
    acc
}

/// Unnormalised sinc, `sin z / z` with value 1 at the origin.
pub fn sinc(z: C64) -> C64 {
    if z.norm() < SERIES_THRESHOLD {
        sinc_series_in_square(z * z)
    } else {
        z.sin() / z
    }
}

pub fn sinc_real(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        sinc_series_in_square(C64::new(x * x, 0.0)).re
    } else {
        x.sin() / x
    }
}

/// σ(z) = sinc √z. Even in √z, so the branch of the square root is irrelevant.
pub fn sigma(z: C64) -> C64 {
    if z.norm() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        sinc_series_in_square(z)
    } else {
        sinc(z.sqrt())
    }
}

/// ψ(z) = (sinc(√z / 2))².
pub fn psi(z: C64) -> C64 {
    let s = sigma(z / 4.0);
    s * s
}

/// σ on the real line; negative arguments continue to sinh(√−x)/√−x.
pub fn sigma_real(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        sinc_series_in_square(C64::new(x, 0.0)).re
    } else if x > 0.0 {
        let r = x.sqrt();
        r.sin() / r
    } else {
        let r = (-x).sqrt();
        r.sinh() / r
    }
}

pub fn psi_real(x: f64) -> f64 {
    let s = sigma_real(x / 4.0);
    s * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Independent oracle: plain power series with many terms.
    fn sinc_power_series(z: C64) -> C64 {
        let mut term = c(1.0, 0.0);
        let mut sum = term;
        for k in 1..60 {
            term = -term * z * z / (((2 * k) * (2 * k + 1)) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn sinc_reference_values() {
        assert_eq!(sinc(c(0.0, 0.0)), c(1.0, 0.0));
        assert!(sinc(c(PI, 0.0)).norm() < 1e-15);
        let si = sinc(c(0.0, 1.0));
        assert!((si.re - 1.1752011936438014).abs() < 1e-15);
        assert!(si.im.abs() < 1e-16);
        assert!((sinc_power_series(c(0.0, 1.0)).re - 1.1752011936438014).abs() < 1e-15);
    }

    #[test]
    fn sinc_matches_series_oracle_on_disc() {
        for i in 0..50 {
            for j in 0..8 {
                let r = 0.2 * i as f64 + 1e-3;
                let th = j as f64 * PI / 8.0;
                let z = C64::from_polar(r.min(8.0), th);
                let a = sinc(z);
                let b = sinc_power_series(z);
                assert!((a - b).norm() <= 1e-13 * b.norm().max(1.0), "z = {z}");
            }
        }
    }

    #[test]
    fn psi_sigma_values() {
        assert_eq!(psi(c(0.0, 0.0)), c(1.0, 0.0));
        assert_eq!(sigma(c(0.0, 0.0)), c(1.0, 0.0));
        assert!(sigma(c(PI * PI, 0.0)).norm() < 1e-14);
        assert!((psi(c(PI * PI, 0.0)).re - 4.0 / (PI * PI)).abs() < 1e-15);
        assert!((psi(c(PI * PI, 0.0)).re - 0.405284734569351).abs() < 1e-14);
        assert!((psi_real(PI * PI) - 0.405284734569351).abs() < 1e-14);
        assert!(sigma_real(PI * PI).abs() < 1e-14);
    }

    #[test]
    fn filters_do_not_depend_on_sqrt_branch() {
        for &z in &[c(2.0, 3.0), c(-5.0, 0.1), c(0.3, -7.0), c(40.0, 1.0)] {
            let r = z.sqrt();
            let other = -r;
            assert!((sigma(z) - sinc(other)).norm() < 1e-13 * sigma(z).norm().max(1.0));
            assert!((psi(z) - sinc(other / 2.0).powi(2)).norm() < 1e-13 * psi(z).norm().max(1.0));
        }
    }

    #[test]
    fn real_and_complex_versions_agree() {
        for i in 0..200 {
            let x = -5.0 + 0.173 * i as f64;
            assert!((sigma_real(x) - sigma(c(x, 0.0)).re).abs() < 1e-14);
            assert!((psi_real(x) - psi(c(x, 0.0)).re).abs() < 1e-14);
            assert!((sinc_real(x) - sinc(c(x, 0.0)).re).abs() < 1e-15);
        }
    }

    #[test]
    fn series_direct_crossover_is_continuous() {
        for k in -50..=50 {
            let r = SERIES_THRESHOLD * (1.0 + k as f64 * 1e-3);
            for j in 0..6 {
                let z = C64::from_polar(r, j as f64);
                let series = sinc_series_in_square(z * z);
                let direct = z.sin() / z;
                assert!((series - direct).norm() <= 1e-13);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn sinc_is_even(r in 0.0f64..20.0, th in 0.0f64..(2.0 * PI)) {
            let z = C64::from_polar(r, th);
            let d = (sinc(-z) - sinc(z)).norm();
            prop_assert!(d <= 1e-15 * sinc(z).norm().max(1.0));
        }
    }
}
