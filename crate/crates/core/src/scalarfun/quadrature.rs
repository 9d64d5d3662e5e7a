use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Gauss–Legendre rule on an interval `(a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// P_ν(x) and P_ν'(x) by the Bonnet recurrence.
fn legendre_with_derivative(nu: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..nu {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = nu as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// ν-point Gauss–Legendre rule on `(a, b)`.
///
/// Nodes start from the eigenvalues of the symmetric Jacobi matrix and are
/// refined by Newton on P_ν; weights come from 2/((1−x²)P_ν'(x)²), which is
/// more accurate than squaring eigenvector components. The rule on [−1, 1]
/// is symmetrised before mapping.
pub fn gauss_legendre(nu: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if nu == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid interval ({a}, {b})")));
    }
    let mut x = if nu == 1 {
        vec![0.0]
    } else {
        let jacobi = Mat::<f64>::from_fn(nu, nu, |i, j| {
            if i.abs_diff(j) == 1 {
                let k = i.max(j) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        jacobi
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?
    };
    let mut w = vec![2.0; nu];
    if nu > 1 {
        for xi in x.iter_mut() {
            for _ in 0..3 {
                let (p, dp) = legendre_with_derivative(nu, *xi);
                *xi -= p / dp;
            }
        }
        x.sort_by(f64::total_cmp);
        for (xi, wi) in x.iter().zip(w.iter_mut()) {
            let (_, dp) = legendre_with_derivative(nu, *xi);
            *wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
        for i in 0..nu / 2 {
            let j = nu - 1 - i;
            let xs = 0.5 * (x[j] - x[i]);
            let ws = 0.5 * (w[i] + w[j]);
            x[i] = -xs;
            x[j] = xs;
            w[i] = ws;
            w[j] = ws;
        }
        if nu % 2 == 1 {
            x[nu / 2] = 0.0;
        }
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        nodes: x.iter().map(|&t| mid + half * t).collect(),
        weights: w.iter().map(|&t| half * t).collect(),
        interval: (a, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
        let r = gauss_legendre(1, -2.0, 0.0).unwrap();
        assert_eq!(r.nodes, vec![-1.0]);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn bad_arguments() {
        assert!(gauss_legendre(0, -1.0, 1.0).is_err());
        assert!(gauss_legendre(3, 1.0, 1.0).is_err());
        assert!(gauss_legendre(3, 2.0, 1.0).is_err());
        assert!(gauss_legendre(3, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn structure() {
        for nu in 1..=40 {
            for (a, b) in [(-1.0, 1.0), (-2.0, 0.0), (0.5, 3.0)] {
                let r = gauss_legendre(nu, a, b).unwrap();
                assert_eq!(r.len(), nu);
                assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
                assert!(r.nodes.iter().all(|&x| a < x && x < b));
                assert!(r.weights.iter().all(|&w| w > 0.0));
                let total: f64 = r.weights.iter().sum();
                assert!(((total - (b - a)) / (b - a)).abs() < 1e-14, "nu={nu}");
            }
        }
    }

    #[test]
    fn polynomial_exactness() {
        for nu in 1..=20 {
            for (a, b) in [(-1.0f64, 1.0f64), (-2.0, 0.0)] {
                let r = gauss_legendre(nu, a, b).unwrap();
                for j in 0..2 * nu as i32 {
                    let exact = (b.powi(j + 1) - a.powi(j + 1)) / (j + 1) as f64;
                    let got = r.integrate(|x| x.powi(j));
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (got - exact).abs() <= 1e-13 * scale,
                        "nu={nu} j={j} [{a},{b}]: {got} vs {exact}"
                    );
                }
            }
        }
    }
}
