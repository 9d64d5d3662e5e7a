use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest Laguerre degree the coefficient recurrence accepts.
pub const MAX_LAGUERRE_DEGREE: usize = 64;
/// Largest degree handed to the companion-matrix root finder.
pub const MAX_ROOT_DEGREE: usize = 20;

/// Dense polynomial with complex coefficients in ascending degree order.
///
/// Trailing zero coefficients are trimmed on construction, so the leading
/// coefficient is nonzero unless the polynomial is identically zero (stored
/// as a single `0`).
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == C64::new(0.0, 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == C64::new(0.0, 0.0)
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.degree() == 0 {
            return Polynomial::new(vec![C64::new(0.0, 0.0)]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// p(c·x).
    pub fn scale_argument(&self, c: C64) -> Polynomial {
        let mut pow = C64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &a in &self.coeffs {
            out.push(a * pow);
            pow *= c;
        }
        Polynomial::new(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Polynomial::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(zero)
                        - other.coeffs.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }

    /// Backward-error style residual |p(z)| / Σ|a_k||z|^k.
    pub fn relative_residual(&self, z: C64) -> f64 {
        let r = z.norm();
        let scale = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm());
        if scale == 0.0 {
            0.0
        } else {
            self.eval(z).norm() / scale
        }
    }
}

/// Coefficients of the generalized Laguerre polynomial L_n^(α) from the
/// three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+α−x) L_k − (k+α) L_{k−1}`,
/// valid for any complex α (including the non-orthogonal negative integers).
pub fn laguerre_coeffs(n: usize, alpha: C64) -> Result<Polynomial> {
    if n > MAX_LAGUERRE_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree: n,
            reason: "Laguerre degree above the recurrence guard",
        });
    }
    let one = C64::new(1.0, 0.0);
    let mut prev = vec![one];
    if n == 0 {
        return Ok(Polynomial::new(prev));
    }
    let mut cur = vec![one + alpha, -one];
    for k in 1..n {
        let kf = k as f64;
        let mut next = vec![C64::new(0.0, 0.0); k + 2];
        let a = C64::new(2.0 * kf + 1.0, 0.0) + alpha;
        for (j, &c) in cur.iter().enumerate() {
            next[j] += a * c;
            next[j + 1] -= c;
        }
        let b = C64::new(kf, 0.0) + alpha;
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= b * c;
        }
        for c in &mut next {
            *c /= kf + 1.0;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(Polynomial::new(cur))
}

const RADIX: f64 = 2.0;

/// Parlett–Reinsch balancing by powers of two (exact in floating point).
fn balance(a: &mut Mat<C64>) {
    let n = a.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            let g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

fn newton_polish(p: &Polynomial, dp: &Polynomial, mut z: C64) -> C64 {
    let mut fz = p.eval(z).norm();
    for _ in 0..3 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let fc = p.eval(cand).norm();
        if fc.is_finite() && fc < fz {
            z = cand;
            fz = fc;
        } else {
            break;
        }
    }
    z
}

/// All complex roots, as eigenvalues of the balanced companion matrix
/// followed by a guarded Newton polish.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<C64>> {
    let n = p.degree();
    if n == 0 {
        return Err(Error::DegeneratePolynomial);
    }
    if n > MAX_ROOT_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree: n,
            reason: "companion root finding is limited to degree 20",
        });
    }
    let c = p.coeffs();
    let lead = c[n];
    if n == 1 {
        return Ok(vec![-c[0] / lead]);
    }
    let mut comp = Mat::<C64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        comp[(i, n - 1)] = -c[i] / lead;
    }
    balance(&mut comp);
    let eig = comp
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let dp = p.derivative();
    Ok(eig.into_iter().map(|z| newton_polish(p, &dp, z)).collect())
}

/// Roots of a real polynomial, post-processed so that the multiset is
/// exactly closed under conjugation (real roots get a zero imaginary part).
pub fn real_poly_roots(p: &Polynomial) -> Result<Vec<C64>> {
    if !p.is_real() {
        return Err(Error::InvalidArgument(
            "real_poly_roots needs real coefficients".into(),
        ));
    }
    let roots = poly_roots(p)?;
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let mut reals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in roots.iter().copied() {
        if z.im.abs() <= tol {
            reals.push(C64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    if upper.len() != lower.len() {
        return Ok(roots);
    }
    let mut out = reals;
    let mut used = vec![false; lower.len()];
    for u in upper {
        let (best, _) = lower
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, l)| (j, (l.conj() - u).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("paired lower root");
        used[best] = true;
        let avg = (u + lower[best].conj()) / 2.0;
        out.push(avg);
        out.push(avg.conj());
    }
    Ok(out)
}

/// Denominators of the diagonal [n/n] Padé approximants of sinc, ascending
/// monomial coefficients, stored exactly as (numerator, denominator).
const PADE_SINC_TABLE: [&[(u128, u128)]; 5] = [
    &[(1, 1), (0, 1), (1, 20)],
    &[(1, 1), (0, 1), (13, 396), (0, 1), (5, 11088)],
    &[
        (1, 1),
        (0, 1),
        (1671, 69212),
        (0, 1),
        (97, 351384),
        (0, 1),
        (2623, 1644477120),
    ],
    &[
        (1, 1),
        (0, 1),
        (2290747, 120289892),
        (0, 1),
        (1281433, 7217393520),
        (0, 1),
        (560401, 562956694560),
        (0, 1),
        (1029037, 346781323848960),
    ],
    &[
        (1, 1),
        (0, 1),
        (34046903537, 2167379498676),
        (0, 1),
        (1679739379, 13726736824948),
        (0, 1),
        (101555058991, 168015258737363520),
        (0, 1),
        (3924840709, 2016183104848362240),
        (0, 1),
        (37291724011, 11008359752472057830400),
    ],
];

fn pade_sinc_index(n: usize) -> Result<usize> {
    if n % 2 == 0 && (2..=10).contains(&n) {
        Ok(n / 2 - 1)
    } else {
        Err(Error::UnsupportedDegree {
            degree: n,
            reason: "sinc Padé denominators are tabulated for even n in 2..=10",
        })
    }
}

/// Exact rational coefficients of the [n/n] sinc Padé denominator.
pub fn pade_sinc_denominator_rational(n: usize) -> Result<&'static [(u128, u128)]> {
    Ok(PADE_SINC_TABLE[pade_sinc_index(n)?])
}

pub fn pade_sinc_denominator(n: usize) -> Result<Polynomial> {
    let row = pade_sinc_denominator_rational(n)?;
    Ok(Polynomial::from_real(
        &row.iter()
            .map(|&(p, q)| p as f64 / q as f64)
            .collect::<Vec<_>>(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn binom(x: f64, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (x - j as f64) / (j as f64 + 1.0))
    }

    /// Explicit sum L_n^(α)(x) = Σ (−1)^k C(n+α, n−k) x^k / k!.
    fn laguerre_binomial_sum(n: usize, alpha: f64) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=n)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * binom(n as f64 + alpha, n - k) / fact
            })
            .collect()
    }

    #[test]
    fn laguerre_small_cases() {
        let p = laguerre_coeffs(0, c(-3.0)).unwrap();
        assert_eq!(p.coeffs(), &[c(1.0)]);
        let p = laguerre_coeffs(1, c(-3.0)).unwrap();
        assert_eq!(p.coeffs(), &[c(-2.0), c(-1.0)]);
        let p = laguerre_coeffs(2, c(-5.0)).unwrap();
        let want = [6.0, 3.0, 0.5];
        for (a, b) in p.coeffs().iter().zip(want) {
            assert!((a - c(b)).norm() < 1e-15);
        }
        // Orthogonal regime: L_2^(1) = 3 − 3x + x²/2.
        let p = laguerre_coeffs(2, c(1.0)).unwrap();
        for (a, b) in p.coeffs().iter().zip([3.0, -3.0, 0.5]) {
            assert!((a - c(b)).norm() < 1e-15);
        }
    }

    #[test]
    fn laguerre_guard() {
        assert!(laguerre_coeffs(64, c(-129.0)).is_ok());
        assert!(matches!(
            laguerre_coeffs(65, c(0.0)),
            Err(Error::UnsupportedDegree { degree: 65, .. })
        ));
    }

    #[test]
    fn recurrence_matches_binomial_sum() {
        for n in 0..=12usize {
            for alpha in [-(2.0 * n as f64) - 1.0, -(2.0 * n as f64) - 2.0] {
                let rec = laguerre_coeffs(n, c(alpha)).unwrap();
                let sum = laguerre_binomial_sum(n, alpha);
                let scale = sum.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for (k, s) in sum.iter().enumerate() {
                    let r = rec.coeffs().get(k).copied().unwrap_or(c(0.0));
                    assert!(
                        (r.re - s).abs() <= 1e-12 * scale && r.im == 0.0,
                        "n={n} alpha={alpha} k={k}: {} vs {s}",
                        r.re
                    );
                }
            }
        }
    }

    #[test]
    fn roots_of_small_polynomials() {
        let r = poly_roots(&Polynomial::from_real(&[-2.0, -1.0])).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - c(-2.0)).norm() < 1e-15);

        let mut r = poly_roots(&Polynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - C64::new(0.0, 1.0)).norm() < 1e-14);

        let mut r = real_poly_roots(&Polynomial::from_real(&[1.0, 0.0, 1.0 / 20.0])).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[1] - C64::new(0.0, 4.47213595499958)).norm() < 1e-13);
        assert_eq!(r[0], r[1].conj());
    }

    #[test]
    fn constant_and_oversized_polynomials_are_rejected() {
        assert!(matches!(
            poly_roots(&Polynomial::from_real(&[3.0])),
            Err(Error::DegeneratePolynomial)
        ));
        assert!(matches!(
            poly_roots(&Polynomial::from_real(&[1.0; 22])),
            Err(Error::UnsupportedDegree { .. })
        ));
    }

    #[test]
    fn laguerre_roots_have_small_residuals() {
        for n in 1..=20usize {
            for alpha in [-(2.0 * n as f64) - 1.0, -(2.0 * n as f64) - 2.0] {
                let p = laguerre_coeffs(n, c(alpha)).unwrap();
                let roots = real_poly_roots(&p).unwrap();
                assert_eq!(roots.len(), n);
                for z in roots {
                    let res = p.eval(z).norm() / p.coeff_norm();
                    assert!(
                        p.relative_residual(z) < 1e-12,
                        "n={n} alpha={alpha} z={z} res={res}"
                    );
                    if n <= 10 {
                        assert!(res < 1e-8, "n={n} alpha={alpha} z={z} res={res}");
                    }
                }
            }
        }
    }

    #[test]
    fn pade_sinc_rows() {
        let p = pade_sinc_denominator(2).unwrap();
        assert_eq!(p.coeffs(), &[c(1.0), c(0.0), c(1.0 / 20.0)]);
        let p = pade_sinc_denominator(4).unwrap();
        let want = [1.0, 0.0, 13.0 / 396.0, 0.0, 5.0 / 11088.0];
        assert_eq!(p.coeffs(), &want.map(c));
        let p = pade_sinc_denominator(6).unwrap();
        let want = [
            1.0,
            0.0,
            1671.0 / 69212.0,
            0.0,
            97.0 / 351384.0,
            0.0,
            2623.0 / 1644477120.0,
        ];
        assert_eq!(p.coeffs(), &want.map(c));
        for n in [0, 1, 3, 12] {
            assert!(pade_sinc_denominator(n).is_err());
        }
    }

    #[test]
    fn polynomial_helpers() {
        let p = Polynomial::from_real(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::new(vec![]).is_zero());
        let q = p.mul(&p);
        assert_eq!(q.coeffs(), &[c(1.0), c(4.0), c(4.0)]);
        assert_eq!(q.derivative().coeffs(), &[c(4.0), c(8.0)]);
        let s = p.scale_argument(C64::new(0.0, 1.0));
        assert_eq!(s.eval(c(1.0)), C64::new(1.0, 2.0));
        assert!(q.sub(&q).is_zero());
    }
}
