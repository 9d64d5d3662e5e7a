//! Pole families for the rational Krylov recursion.
//!
//! Every family is derived from the zeros of a Laguerre-form polynomial or
//! from the tabulated sinc Padé denominators. Sets are returned sorted by
//! ascending modulus, ties broken by ascending argument, with infinite poles
//! last.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::scalarfun::{laguerre_coeffs, pade_sinc_denominator, real_poly_roots};

/// Largest generating degree accepted by the Laguerre-based families.
pub const MAX_FAMILY_DEGREE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pole {
    Finite(C64),
    Infinite,
}

impl Pole {
    pub fn finite(self) -> Option<C64> {
        match self {
            Pole::Finite(z) => Some(z),
            Pole::Infinite => None,
        }
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pole::Finite(z) => write!(f, "{z}"),
            Pole::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    E,
    L,
    Lbar,
    PadeSinc,
    PadeExp,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::E,
        Family::L,
        Family::Lbar,
        Family::PadeSinc,
        Family::PadeExp,
    ];

    pub fn generate(self, n: usize) -> Result<PoleSet> {
        match self {
            Family::E => poles_e(n),
            Family::L => poles_l(n),
            Family::Lbar => poles_lbar(n),
            Family::PadeSinc => poles_pade_sinc(n),
            Family::PadeExp => poles_pade_exp(n),
        }
    }

    /// Degrees for which [`Family::generate`] succeeds.
    pub fn degrees(self) -> Vec<usize> {
        match self {
            Family::PadeSinc => vec![2, 4, 6, 8, 10],
            _ => (1..=MAX_FAMILY_DEGREE).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::E => "E",
            Family::L => "L",
            Family::Lbar => "Lbar",
            Family::PadeSinc => "pade-sinc",
            Family::PadeExp => "pade-exp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "e" => Ok(Family::E),
            "l" => Ok(Family::L),
            "lbar" => Ok(Family::Lbar),
            "pade-sinc" | "padesinc" => Ok(Family::PadeSinc),
            "pade-exp" | "padeexp" => Ok(Family::PadeExp),
            _ => Err(Error::InvalidArgument(format!("unknown pole family `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleSet {
    pub poles: Vec<Pole>,
    pub family: Family,
    pub n: usize,
}

fn cmp_poles(a: &Pole, b: &Pole) -> Ordering {
    match (a, b) {
        (Pole::Infinite, Pole::Infinite) => Ordering::Equal,
        (Pole::Infinite, _) => Ordering::Greater,
        (_, Pole::Infinite) => Ordering::Less,
        (Pole::Finite(x), Pole::Finite(y)) => {
            // re² + im² is invariant under sign flips and component swaps,
            // so conjugate and negated poles tie exactly.
            let mx = x.re * x.re + x.im * x.im;
            let my = y.re * y.re + y.im * y.im;
            mx.total_cmp(&my).then(x.arg().total_cmp(&y.arg()))
        }
    }
}

impl PoleSet {
    pub fn new(mut poles: Vec<Pole>, family: Family, n: usize) -> Self {
        poles.sort_by(cmp_poles);
        PoleSet { poles, family, n }
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn finite(&self) -> impl Iterator<Item = C64> + '_ {
        self.poles.iter().filter_map(|p| p.finite())
    }

    /// The first `count` poles of the infinite cyclic repetition of the set.
    /// An empty set yields infinite poles (a polynomial Krylov space).
    pub fn cyclic(&self, count: usize) -> Vec<Pole> {
        if self.poles.is_empty() {
            return vec![Pole::Infinite; count];
        }
        self.poles.iter().copied().cycle().take(count).collect()
    }

    /// Whether the multiset equals its conjugate up to `tol` relative.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        self.matches_image(tol, |z| z.conj())
    }

    /// Whether the multiset equals its negation up to `tol` relative.
    pub fn is_negation_closed(&self, tol: f64) -> bool {
        self.matches_image(tol, |z| -z)
    }

    fn matches_image(&self, tol: f64, map: impl Fn(C64) -> C64) -> bool {
        let fin: Vec<C64> = self.finite().collect();
        let mut used = vec![false; fin.len()];
        for &z in &fin {
            let target = map(z);
            let scale = z.norm().max(1.0);
            let hit = fin
                .iter()
                .enumerate()
                .position(|(j, w)| !used[j] && (w - target).norm() <= tol * scale);
            match hit {
                Some(j) => used[j] = true,
                None => return false,
            }
        }
        true
    }

    /// Elementwise ζ ↦ ζ².
    pub fn squared(&self) -> PoleSet {
        self.map(|z| z * z)
    }

    /// Elementwise ζ ↦ cζ.
    pub fn scaled(&self, c: f64) -> PoleSet {
        self.map(|z| z * c)
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> PoleSet {
        PoleSet::new(
            self.poles
                .iter()
                .map(|p| match p {
                    Pole::Finite(z) => Pole::Finite(f(*z)),
                    Pole::Infinite => Pole::Infinite,
                })
                .collect(),
            self.family,
            self.n,
        )
    }

    /// Poles for a filter evaluated at the matrix B when the sinc-plane
    /// variable is `√(B/factor)`: each ζ becomes `factor·ζ²`. The map is
    /// two-to-one on ±ζ, so coincident images are merged; the origin is
    /// dropped because the even approximants are regular there.
    pub fn to_matrix_plane(&self, factor: f64) -> PoleSet {
        let mapped = self.squared().scaled(factor);
        let mut out: Vec<Pole> = Vec::with_capacity(mapped.len());
        for p in mapped.poles {
            match p {
                Pole::Finite(z) if z.norm() == 0.0 => {}
                Pole::Finite(z) => {
                    let dup = out.iter().any(|q| match q {
                        Pole::Finite(w) => (w - z).norm() <= 1e-12 * z.norm(),
                        Pole::Infinite => false,
                    });
                    if !dup {
                        out.push(p);
                    }
                }
                Pole::Infinite => out.push(p),
            }
        }
        PoleSet::new(out, self.family, self.n)
    }

    /// The set with any pole at the origin removed. The even sinc
    /// approximants have a removable point there.
    pub fn without_origin(&self) -> PoleSet {
        let keep = self
            .poles
            .iter()
            .copied()
            .filter(|p| !matches!(p, Pole::Finite(z) if z.norm() == 0.0))
            .collect();
        PoleSet::new(keep, self.family, self.n)
    }

    /// Rotate by a unit complex factor.
    pub fn rotated(&self, w: C64) -> PoleSet {
        self.map(|z| z * w)
    }
}

fn check_family_degree(n: usize) -> Result<()> {
    if n == 0 || n > MAX_FAMILY_DEGREE {
        return Err(Error::UnsupportedDegree {
            degree: n,
            reason: "pole families are generated for 1 ≤ n ≤ 20",
        });
    }
    Ok(())
}

fn laguerre_roots(n: usize, alpha: f64) -> Result<Vec<C64>> {
    let p = laguerre_coeffs(n, C64::new(alpha, 0.0))?;
    real_poly_roots(&p)
}

const I: C64 = C64::new(0.0, 1.0);

/// Zeros of `L_n^(−2n−1)(±iζ)` together with the origin.
pub fn poles_e(n: usize) -> Result<PoleSet> {
    check_family_degree(n)?;
    let roots = laguerre_roots(n, -(2.0 * n as f64) - 1.0)?;
    let mut poles = vec![Pole::Finite(C64::new(0.0, 0.0))];
    for r in roots {
        poles.push(Pole::Finite(-I * r));
        poles.push(Pole::Finite(I * r));
    }
    Ok(PoleSet::new(poles, Family::E, n))
}

/// Zeros of `L_n^(−2n−2)(2iζ)`; not closed under conjugation for n ≥ 2.
pub fn poles_l(n: usize) -> Result<PoleSet> {
    check_family_degree(n)?;
    let roots = laguerre_roots(n, -(2.0 * n as f64) - 2.0)?;
    let poles = roots.into_iter().map(|r| Pole::Finite(-I * r * 0.5)).collect();
    Ok(PoleSet::new(poles, Family::L, n))
}

/// Zeros of `L_n^(−2n−2)(±iζ)`.
pub fn poles_lbar(n: usize) -> Result<PoleSet> {
    check_family_degree(n)?;
    let roots = laguerre_roots(n, -(2.0 * n as f64) - 2.0)?;
    let mut poles = Vec::with_capacity(2 * n);
    for r in roots {
        poles.push(Pole::Finite(-I * r));
        poles.push(Pole::Finite(I * r));
    }
    Ok(PoleSet::new(poles, Family::Lbar, n))
}

/// Zeros of the tabulated [n/n] sinc Padé denominator.
pub fn poles_pade_sinc(n: usize) -> Result<PoleSet> {
    let den = pade_sinc_denominator(n)?;
    let poles = real_poly_roots(&den)?.into_iter().map(Pole::Finite).collect();
    Ok(PoleSet::new(poles, Family::PadeSinc, n))
}

/// Zeros of the [k/k] exponential Padé denominator, `L_k^(−2k−1)(x)`.
pub fn poles_pade_exp(k: usize) -> Result<PoleSet> {
    check_family_degree(k)?;
    let poles = laguerre_roots(k, -(2.0 * k as f64) - 1.0)?
        .into_iter()
        .map(Pole::Finite)
        .collect();
    Ok(PoleSet::new(poles, Family::PadeExp, k))
}
