//! Dense spectral evaluation of matrix functions: the reference oracle.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{check_len, Error, Result};
use crate::operator::SymOperator;
use crate::scalarfun::{psi_real, sigma_real, sinc_real};

/// Largest order accepted by the dense oracle.
pub const ORACLE_LIMIT: usize = 5000;

#[derive(Clone, Debug)]
pub struct DenseSymMatrix {
    m: Mat<f64>,
}

impl DenseSymMatrix {
    /// Wraps a square matrix that is symmetric to 1e−12 relative.
    pub fn new(m: Mat<f64>) -> Result<Self> {
        let n = m.nrows();
        check_len(n, m.ncols())?;
        if n > ORACLE_LIMIT {
            return Err(Error::ScaleGuard {
                order: n,
                limit: ORACLE_LIMIT,
            });
        }
        let mut scale = 0.0f64;
        let mut defect = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                scale = scale.max(m[(i, j)].abs());
                defect = defect.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if defect > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (defect {defect:e})"
            )));
        }
        Ok(DenseSymMatrix { m })
    }

    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        check_len(n * n, entries.len())?;
        Self::new(Mat::from_fn(n, n, |i, j| entries[i * n + j]))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        DenseSymMatrix {
            m: Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }),
        }
    }

    pub fn from_operator(op: &dyn SymOperator) -> Result<Self> {
        Self::new(op.to_dense()?)
    }

    pub fn order(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_mat(&self) -> &Mat<f64> {
        &self.m
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        check_len(n, v.len())?;
        let mut y = vec![0.0; n];
        for j in 0..n {
            let vj = v[j];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += self.m[(i, j)] * vj;
            }
        }
        Ok(y)
    }

    pub fn eigen(&self) -> Result<SymEigen> {
        let e = self
            .m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let n = self.order();
        let s = e.S();
        Ok(SymEigen {
            values: (0..n).map(|i| s[i]).collect(),
            vectors: e.U().to_owned(),
        })
    }
}

/// A = Q Λ Qᵀ with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl SymEigen {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Qᵀ v
    pub fn to_modal(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.order();
        check_len(n, v.len())?;
        Ok((0..n)
            .map(|j| self.vectors.col(j).iter().zip(v).map(|(q, x)| q * x).sum())
            .collect())
    }

    /// Q c
    pub fn from_modal(&self, c: &[f64]) -> Vec<f64> {
        let n = self.order();
        let mut y = vec![0.0; n];
        for (j, &cj) in c.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            for (yi, q) in y.iter_mut().zip(self.vectors.col(j).iter()) {
                *yi += q * cj;
            }
        }
        y
    }

    /// f(A) v = Q f(Λ) Qᵀ v
    pub fn apply(&self, f: impl Fn(f64) -> f64, v: &[f64]) -> Result<Vec<f64>> {
        let mut c = self.to_modal(v)?;
        for (cj, &l) in c.iter_mut().zip(&self.values) {
            *cj *= f(l);
        }
        Ok(self.from_modal(&c))
    }

    /// f(A) v for a complex-valued scalar function.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64, v: &[f64]) -> Result<Vec<C64>> {
        let c = self.to_modal(v)?;
        let n = self.order();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (j, (&cj, &l)) in c.iter().zip(&self.values).enumerate() {
            let w = f(l) * cj;
            for (yi, q) in y.iter_mut().zip(self.vectors.col(j).iter()) {
                *yi += w * q;
            }
        }
        Ok(y)
    }

    /// Q f(Λ) Qᵀ as a dense matrix.
    pub fn funm(&self, f: impl Fn(f64) -> f64) -> Mat<f64> {
        let n = self.order();
        let fq = Mat::<f64>::from_fn(n, n, |i, j| self.vectors[(i, j)] * f(self.values[j]));
        &fq * self.vectors.transpose()
    }
}

/// f(A) by the spectral decomposition.
pub fn funm_sym(a: &DenseSymMatrix, f: impl Fn(f64) -> f64) -> Result<DenseSymMatrix> {
    Ok(DenseSymMatrix {
        m: a.eigen()?.funm(f),
    })
}

pub fn sinc_apply_dense(a: &DenseSymMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len(a.order(), v.len())?;
    a.eigen()?.apply(sinc_real, v)
}

pub fn psi_apply_dense(a: &DenseSymMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len(a.order(), v.len())?;
    a.eigen()?.apply(psi_real, v)
}

pub fn sigma_apply_dense(a: &DenseSymMatrix, v: &[f64]) -> Result<Vec<f64>> {
    check_len(a.order(), v.len())?;
    a.eigen()?.apply(sigma_real, v)
}

/// Q e^{−itΛ} Qᵀ
pub fn expm_i_dense(a: &DenseSymMatrix, t: f64) -> Result<Mat<C64>> {
    let e = a.eigen()?;
    let n = e.order();
    let q = Mat::<C64>::from_fn(n, n, |i, j| C64::new(e.vectors[(i, j)], 0.0));
    let fq = Mat::<C64>::from_fn(n, n, |i, j| {
        q[(i, j)] * C64::new(0.0, -t * e.values[j]).exp()
    });
    Ok(&fq * q.transpose())
}
