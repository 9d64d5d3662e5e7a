//! Test matrices and the synthetic oscillator benchmark with its exact
//! spectral solution.

use std::io::Write;
use std::sync::Arc;

use crate::densemf::{DenseSymMatrix, SymEigen};
use crate::error::{check_len, Error, Result};
use crate::integrators::SecondOrderIVP;
use crate::scalarfun::sinc_real;
use crate::sparse::SparseSymMatrix;

/// Largest order for which the spectral reference is formed.
pub const REFERENCE_LIMIT: usize = 2000;

/// tridiag(−1, 2, −1), no mesh-width scaling.
pub fn laplacian_1d(n: usize) -> Result<SparseSymMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("1D Laplacian needs n >= 2, got {n}")));
    }
    let mut t = Vec::with_capacity(2 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
    }
    SparseSymMatrix::from_lower_triplets(n, &t)
}

/// Undivided 5-point Laplacian on a √n × √n grid with Dirichlet truncation.
pub fn laplacian_2d(n: usize) -> Result<SparseSymMatrix> {
    let s = (n as f64).sqrt().round() as usize;
    if s * s != n || s < 2 {
        return Err(Error::InvalidArgument(format!(
            "2D Laplacian needs a perfect square n >= 4, got {n}"
        )));
    }
    let mut t = Vec::with_capacity(3 * n);
    for r in 0..s {
        for c in 0..s {
            let i = r * s + c;
            t.push((i, i, 4.0));
            if c > 0 {
                t.push((i, i - 1, -1.0));
            }
            if r > 0 {
                t.push((i, i - s, -1.0));
            }
        }
    }
    SparseSymMatrix::from_lower_triplets(n, &t)
}

/// Entries of the pentadiagonal Toeplitz matrix T with diagonals
/// (1, −10, 0, 10, 1) at offsets −2..=2. Its symbol is 2cos 2θ + 20i sin θ.
pub fn rutishauser_toeplitz(n: usize) -> Result<Vec<(usize, usize, f64)>> {
    if n < 5 {
        return Err(Error::InvalidArgument(format!("Rutishauser matrix needs N >= 5, got {n}")));
    }
    let diag = [(-2i64, 1.0), (-1, -10.0), (1, 10.0), (2, 1.0)];
    let mut t = Vec::new();
    for i in 0..n as i64 {
        for &(off, v) in &diag {
            let j = i + off;
            if (0..n as i64).contains(&j) {
                t.push((i as usize, j as usize, v));
            }
        }
    }
    Ok(t)
}

/// A = T Tᵀ for the Rutishauser matrix T.
pub fn rutishauser(n: usize) -> Result<SparseSymMatrix> {
    let t = rutishauser_toeplitz(n)?;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, v) in &t {
        rows[i].push((j, v));
    }
    let mut out = Vec::new();
    for i in 0..n {
        for k in i.saturating_sub(4)..=i {
            // (TTᵀ)_{ik} = Σ_j T_ij T_kj
            let s: f64 = rows[i]
                .iter()
                .map(|&(j, a)| rows[k].iter().find(|&&(jj, _)| jj == j).map_or(0.0, |&(_, b)| a * b))
                .sum();
            if s != 0.0 {
                out.push((i, k, s));
            }
        }
    }
    SparseSymMatrix::from_lower_triplets(n, &out)
}

/// `y'' + A y = ½ sin(t) 𝟙`, `y(0) = 𝟙`, `y'(0) = 0`, with A from
/// [`rutishauser`].
#[derive(Clone, Debug)]
pub struct SyntheticProblem {
    pub n: usize,
    pub a: Arc<SparseSymMatrix>,
    pub forcing_scale: f64,
}

impl SyntheticProblem {
    pub fn new(n: usize) -> Result<Self> {
        Ok(SyntheticProblem {
            n,
            a: Arc::new(rutishauser(n)?),
            forcing_scale: 0.5,
        })
    }

    pub fn y0(&self) -> Vec<f64> {
        vec![1.0; self.n]
    }

    pub fn y1(&self) -> Vec<f64> {
        vec![0.0; self.n]
    }

    pub fn forcing(&self, t: f64) -> Vec<f64> {
        vec![self.forcing_scale * t.sin(); self.n]
    }

    pub fn ivp(&self, tf: f64) -> Result<SecondOrderIVP> {
        let (n, s) = (self.n, self.forcing_scale);
        SecondOrderIVP::new(
            self.a.clone(),
            Some(Arc::new(move |t: f64| vec![s * t.sin(); n])),
            self.y0(),
            self.y1(),
            0.0,
            tf,
        )
    }
}

/// The exact solution of a [`SyntheticProblem`], diagonalised once.
pub struct SyntheticReference {
    eig: SymEigen,
    modal_ones: Vec<f64>,
    forcing_scale: f64,
}

/// `(sin t − sin(ωt)/ω)/(ω² − 1)`, arranged so that it stays accurate at
/// and near the resonance ω = 1 and at ω = 0.
fn forced_mode(omega: f64, t: f64) -> f64 {
    let w1 = omega + 1.0;
    -(0.5 * w1 * t).cos() * t * sinc_real(0.5 * (omega - 1.0) * t) / w1
        + t * sinc_real(omega * t) / w1
}

impl SyntheticReference {
    pub fn new(problem: &SyntheticProblem) -> Result<Self> {
        if problem.n > REFERENCE_LIMIT {
            return Err(Error::ScaleGuard {
                order: problem.n,
                limit: REFERENCE_LIMIT,
            });
        }
        let eig = DenseSymMatrix::from_operator(problem.a.as_ref())?.eigen()?;
        let modal_ones = eig.to_modal(&problem.y0())?;
        Ok(SyntheticReference {
            eig,
            modal_ones,
            forcing_scale: problem.forcing_scale,
        })
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let c: Vec<f64> = self
            .modal_ones
            .iter()
            .zip(&self.eig.values)
            .map(|(&a, &l)| {
                let w = l.max(0.0).sqrt();
                a * (w * t).cos() + self.forcing_scale * a * forced_mode(w, t)
            })
            .collect();
        self.eig.from_modal(&c)
    }
}

pub fn synthetic_reference(problem: &SyntheticProblem, t: f64) -> Result<Vec<f64>> {
    Ok(SyntheticReference::new(problem)?.at(t))
}

/// Coordinate text in Matrix Market layout with every stored entry listed.
pub fn write_matrix_market(a: &SparseSymMatrix, mut w: impl Write) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.order(), a.order(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Relative 2-norm distance.
pub fn relative_error(x: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(reference.len(), x.len())?;
    let num: f64 = x.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigs::{lambda_max, lambda_min};
    use faer::Mat;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;

    #[test]
    fn laplacian_1d_closed_form() {
        let pi = std::f64::consts::PI;
        for n in [3usize, 10, 64] {
            let e = DenseSymMatrix::from_operator(&laplacian_1d(n).unwrap()).unwrap().eigen().unwrap();
            let mut want: Vec<f64> = (1..=n).map(|k| 2.0 - 2.0 * (k as f64 * pi / (n + 1) as f64).cos()).collect();
            want.sort_by(f64::total_cmp);
            for (a, b) in e.values.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(laplacian_1d(1).is_err());
        assert_eq!(laplacian_1d(8).unwrap().nnz(), 22);
    }

    #[test]
    fn laplacian_2d_shape() {
        let a = laplacian_2d(16).unwrap();
        assert_eq!(a.order(), 16);
        assert_eq!(a.nnz(), 16 + 2 * 24);
        assert!(laplacian_2d(15).is_err());
        assert!(laplacian_2d(1).is_err());
        let e = DenseSymMatrix::from_operator(&a).unwrap().eigen().unwrap();
        let lo = 4.0 - 4.0 * (std::f64::consts::PI / 5.0).cos();
        assert!((e.values[0] - lo).abs() < 1e-12);
    }

    #[test]
    fn table_spectra() {
        let a = laplacian_1d(2048).unwrap();
        let lmin = lambda_min(&a, 40).unwrap();
        let lmax = lambda_max(&a, 60).unwrap();
        assert!((lmin / 2.3e-6 - 1.0).abs() < 0.05, "{lmin}");
        assert!((lmax / 4.0 - 1.0).abs() < 1e-3, "{lmax}");
    }

    #[test]
    fn rutishauser_symbol_curve() {
        let n = 50;
        let t = rutishauser_toeplitz(n).unwrap();
        let mut m = Mat::<f64>::zeros(n, n);
        for (i, j, v) in t {
            m[(i, j)] = v;
        }
        let ev = m.eigenvalues().unwrap();
        let curve: Vec<C64> = (0..20000)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 20000.0;
                C64::new(2.0 * (2.0 * th).cos(), 20.0 * th.sin())
            })
            .collect();
        for z in ev {
            let d = curve.iter().map(|c| (c - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1.0, "{z} at distance {d}");
        }
    }

    #[test]
    fn rutishauser_is_gram_matrix() {
        let n = 12;
        let mut t = Mat::<f64>::zeros(n, n);
        for (i, j, v) in rutishauser_toeplitz(n).unwrap() {
            t[(i, j)] = v;
        }
        let want = &t * t.transpose();
        let a = rutishauser(n).unwrap();
        assert_eq!(a.symmetry_defect(), 0.0);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(a.get(i, j), want[(i, j)]);
            }
        }
        assert!(rutishauser(4).is_err());
    }

    #[test]
    fn reference_initial_data() {
        let p = SyntheticProblem::new(20).unwrap();
        let r = SyntheticReference::new(&p).unwrap();
        for x in r.at(0.0) {
            assert!((x - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_matrix_reference() {
        // With A = 0 every mode is ω = 0: y = 𝟙 + ½(t − sin t)𝟙.
        let n = 6;
        let p = SyntheticProblem {
            n,
            a: Arc::new(SparseSymMatrix::zeros(n)),
            forcing_scale: 0.5,
        };
        let r = SyntheticReference::new(&p).unwrap();
        for t in [0.3, 1.0, 2.5] {
            for y in r.at(t) {
                assert!((y - (1.0 + 0.5 * (t - t.sin()))).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn forced_mode_resonance_and_continuity() {
        let t = 1.7;
        let res = forced_mode(1.0, t);
        assert!((res - 0.5 * (t.sin() - t * t.cos())).abs() < 1e-15);
        for w in [0.3, 0.9, 1.2, 3.0] {
            let naive = (t.sin() - (w * t).sin() / w) / (w * w - 1.0);
            assert!((forced_mode(w, t) - naive).abs() < 1e-13);
        }
        assert!((forced_mode(1.0 + 1e-9, t) - res).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn reference_solves_the_ode(t in 0.1f64..3.0, n in 5usize..25) {
            // Roundoff in a centered second difference with step 1e−4 is
            // about 4ε‖y‖/1e−8, which sets the tolerance.
            let p = SyntheticProblem { n, a: Arc::new(laplacian_1d(n).unwrap()), forcing_scale: 0.5 };
            let r = SyntheticReference::new(&p).unwrap();
            let d = 1e-4;
            let (ym, y0, yp) = (r.at(t - d), r.at(t), r.at(t + d));
            let ay = p.a.matvec(&y0).unwrap();
            let f = p.forcing(t);
            for i in 0..n {
                let ypp = (yp[i] - 2.0 * y0[i] + ym[i]) / (d * d);
                prop_assert!((ypp + ay[i] - f[i]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn matrix_market_output() {
        let mut buf = Vec::new();
        write_matrix_market(&laplacian_1d(8).unwrap(), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 2 + 22);
        assert!(s.lines().nth(1).unwrap() == "8 8 22");
    }
}
