//! Extreme eigenvalue estimates for symmetric operators.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operator::SymOperator;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest and largest Ritz values after `steps` Lanczos iterations with
/// full reorthogonalization, started from a seeded random vector.
pub fn lanczos_extremes(
    n: usize,
    steps: usize,
    seed: u64,
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let steps = steps.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nq = norm(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..steps {
        let mut w = apply(&basis[j])?;
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        if j + 1 == steps || b <= 1e-12 * a.abs().max(1e-300) {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i.abs_diff(j) == 1 {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let ev = t
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok((ev[0], ev[m - 1]))
}

/// Largest eigenvalue estimate from a 30-step Lanczos run (a slight
/// underestimate; callers add their own safety factor).
pub fn estimate_lambda_max(op: &dyn SymOperator) -> Result<f64> {
    Ok(lanczos_extremes(op.order(), 30, 7, |x| op.apply(x))?.1)
}

/// Largest eigenvalue to near machine accuracy for the moderately sized
/// test matrices.
pub fn lambda_max(op: &dyn SymOperator, steps: usize) -> Result<f64> {
    Ok(lanczos_extremes(op.order(), steps, 11, |x| op.apply(x))?.1)
}

/// Smallest eigenvalue of a positive definite operator via Lanczos on A⁻¹.
pub fn lambda_min(op: &dyn SymOperator, steps: usize) -> Result<f64> {
    // (0·I − A)⁻¹ = −A⁻¹, whose most negative eigenvalue is −1/λ_min.
    let solver = op.factor_shift(C64::new(0.0, 0.0))?;
    let (lo, _) = lanczos_extremes(op.order(), steps, 13, |x| {
        let b: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        Ok(solver.solve(&b)?.into_iter().map(|z| z.re).collect())
    })?;
    Ok(-1.0 / lo)
}
