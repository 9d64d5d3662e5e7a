//! The sweeps behind the command-line harness. Each returns plain rows;
//! formatting is left to the caller.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::densemf::{DenseSymMatrix, SymEigen};
use crate::error::{Error, Result};
use crate::expsum::{ExpSumEvaluator, ExpSumPlan, Inner, Target};
use crate::fem::{apply_dirichlet_nullspace, assemble_p1, structured_mesh, wave_demo_problem, TriMesh};
use crate::integrators::{gautschi_integrate, MatFunBackend, Record};
use crate::operator::{ShiftCache, SymOperator};
use crate::par::{self, Exec};
use crate::polesets::{Family, PoleSet};
use crate::problems::{laplacian_1d, laplacian_2d, relative_error, rutishauser, SyntheticProblem, SyntheticReference};
use crate::ratkrylov::{apply_function, build_space};
use crate::scalarfun::{sinc, sinc_real};
use crate::sparse::SparseSymMatrix;

/// A benchmark matrix. The FEM entry is the boundary-reduced stiffness
/// matrix of the structured mesh with `m` cells per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestMatrix {
    Lap1d(usize),
    Lap2d(usize),
    Fem(usize),
    Rutishauser(usize),
}

impl TestMatrix {
    /// Default sizes; `small` scales them down for quick runs.
    pub fn by_name(name: &str, small: bool) -> Result<Self> {
        Ok(match (name, small) {
            ("lap1d", false) => TestMatrix::Lap1d(2048),
            ("lap1d", true) => TestMatrix::Lap1d(256),
            ("lap2d", false) => TestMatrix::Lap2d(4096),
            ("lap2d", true) => TestMatrix::Lap2d(256),
            ("fem", false) => TestMatrix::Fem(33),
            ("fem", true) => TestMatrix::Fem(8),
            ("rutishauser", _) => TestMatrix::Rutishauser(20),
            _ => return Err(Error::InvalidArgument(format!("unknown matrix `{name}`"))),
        })
    }

    /// Same kind, different size parameter.
    pub fn with_size(self, n: usize) -> Self {
        match self {
            TestMatrix::Lap1d(_) => TestMatrix::Lap1d(n),
            TestMatrix::Lap2d(_) => TestMatrix::Lap2d(n),
            TestMatrix::Fem(_) => TestMatrix::Fem(n),
            TestMatrix::Rutishauser(_) => TestMatrix::Rutishauser(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestMatrix::Lap1d(_) => "lap1d",
            TestMatrix::Lap2d(_) => "lap2d",
            TestMatrix::Fem(_) => "fem",
            TestMatrix::Rutishauser(_) => "rutishauser",
        }
    }

    pub fn build(self) -> Result<SparseSymMatrix> {
        match self {
            TestMatrix::Lap1d(n) => laplacian_1d(n),
            TestMatrix::Lap2d(n) => laplacian_2d(n),
            TestMatrix::Rutishauser(n) => rutishauser(n),
            TestMatrix::Fem(m) => {
                let mesh = structured_mesh(m)?;
                let (mm, k) = assemble_p1(&mesh)?;
                Ok(apply_dirichlet_nullspace(mm, k, &mesh)?.kc)
            }
        }
    }
}

/// Uniform random entries in [−1, 1) from a seeded stream.
pub fn seed_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolesBenchRow {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub rel_error: f64,
    pub seconds: f64,
    /// Error failed to halve relative to the best smaller degree.
    pub stagnated: bool,
}

/// Relative error of rational-Krylov sinc(A)v against the dense oracle for
/// every family and supported degree up to `n_max`. Grid points run
/// concurrently; rows come back in (family, n) order.
pub fn poles_bench(
    a: &SparseSymMatrix,
    families: &[Family],
    n_max: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<PolesBenchRow>> {
    let eig = DenseSymMatrix::from_operator(a)?.eigen()?;
    poles_bench_with_oracle(a, &eig, families, n_max, seed, exec)
}

pub fn poles_bench_with_oracle(
    a: &SparseSymMatrix,
    eig: &SymEigen,
    families: &[Family],
    n_max: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<PolesBenchRow>> {
    let v = seed_vector(a.order(), seed);
    let want = eig.apply(sinc_real, &v)?;
    let cache = ShiftCache::new(Arc::new(a.clone()));
    let grid: Vec<(Family, usize)> = families
        .iter()
        .flat_map(|&f| f.degrees().into_iter().filter(move |&n| n <= n_max).map(move |n| (f, n)))
        .collect();
    let results = par::map(exec, &grid, |&(family, n)| -> Result<(usize, f64, f64)> {
        let start = Instant::now();
        let poles = family.generate(n)?;
        let k = (poles.len() + 1).min(a.order());
        let space = build_space(&cache, &v, &poles, k)?;
        let y = apply_function(&space, sinc, &v)?;
        Ok((k, relative_error(&y, &want)?, start.elapsed().as_secs_f64()))
    });
    let mut rows: Vec<PolesBenchRow> = Vec::with_capacity(grid.len());
    for (&(family, n), r) in grid.iter().zip(results) {
        let (k, rel_error, seconds) = r?;
        let best = rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.rel_error)
            .fold(f64::INFINITY, f64::min);
        rows.push(PolesBenchRow {
            family,
            n,
            k,
            rel_error,
            seconds,
            stagnated: best.is_finite() && rel_error > 0.5 * best,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpSumBenchRow {
    pub nu: usize,
    pub rel_error: f64,
    pub seconds: f64,
}

/// Exponential-sum sinc(A)v for ν = 1..=nu_max against the dense oracle.
/// `k == 0` evaluates the exponentials densely, otherwise on a rational
/// Krylov space with `k` poles.
pub fn expsum_bench(a: &SparseSymMatrix, nu_max: usize, k: usize, seed: u64) -> Result<Vec<ExpSumBenchRow>> {
    let v = seed_vector(a.order(), seed);
    let op: Arc<dyn SymOperator> = Arc::new(a.clone());
    let eig = DenseSymMatrix::from_operator(a)?.eigen()?;
    let want = eig.apply(sinc_real, &v)?;
    (1..=nu_max)
        .map(|nu| {
            let start = Instant::now();
            let inner = if k == 0 { Inner::Dense } else { Inner::krylov(k)? };
            let plan = ExpSumPlan::new(Target::Sinc, nu, inner)?;
            let y = match plan.inner {
                // The oracle's diagonalisation is reused rather than redone.
                Inner::Dense => eig
                    .apply_complex(|l| plan.scalar(C64::new(l, 0.0)), &v)?
                    .into_iter()
                    .map(|z| z.re)
                    .collect(),
                _ => ExpSumEvaluator::new(Arc::clone(&op), plan)?.apply(&v)?,
            };
            Ok(ExpSumBenchRow {
                nu,
                rel_error: relative_error(&y, &want)?,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergeRow {
    pub h: f64,
    pub n_poles: usize,
    pub rel_error: f64,
    /// log(e_i/e_{i−1}) / log(h_i/h_{i−1}); absent on the first row.
    pub observed_order: Option<f64>,
    pub seconds: f64,
}

/// h-sweep on the synthetic problem with final time 1 against the exact
/// spectral solution.
pub fn converge(n: usize, h_list: &[f64], backend: &MatFunBackend, exec: Exec) -> Result<Vec<ConvergeRow>> {
    let problem = SyntheticProblem::new(n)?;
    let want = SyntheticReference::new(&problem)?.at(1.0);
    let ivp = problem.ivp(1.0)?;
    let runs = par::map(exec, h_list, |&h| -> Result<(usize, f64, f64)> {
        let start = Instant::now();
        let t = gautschi_integrate(&ivp, h, backend, Record::default())?;
        Ok((t.poles_used, relative_error(t.final_y(), &want)?, start.elapsed().as_secs_f64()))
    });
    let mut rows: Vec<ConvergeRow> = Vec::with_capacity(h_list.len());
    for (&h, r) in h_list.iter().zip(runs) {
        let (n_poles, rel_error, seconds) = r?;
        let observed_order = rows
            .last()
            .map(|p| (rel_error / p.rel_error).ln() / (h / p.h).ln());
        rows.push(ConvergeRow {
            h,
            n_poles,
            rel_error,
            observed_order,
            seconds,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug)]
pub struct WaveResult {
    /// (vertex, x, y, u) at the final time.
    pub solution: Vec<(usize, f64, f64, f64)>,
    /// (t, E) at every step.
    pub energy: Vec<(f64, f64)>,
    pub poles_used: usize,
}

/// The Gaussian-pulse wave demo on the structured mesh with `m` cells per
/// side, integrated to `tf` with step `h`.
pub fn wave(m: usize, h: f64, tf: f64, backend: &MatFunBackend) -> Result<WaveResult> {
    wave_on_mesh(structured_mesh(m)?, h, tf, backend)
}

/// As [`wave`], on a caller-supplied mesh whose boundary list is the
/// Dirichlet set.
pub fn wave_on_mesh(mesh: TriMesh, h: f64, tf: f64, backend: &MatFunBackend) -> Result<WaveResult> {
    let demo = wave_demo_problem(mesh, tf)?;
    let t = gautschi_integrate(&demo.ivp, h, backend, Record { every: 1, energy: true })?;
    let u = demo.nodal(t.final_y())?;
    let solution = demo
        .mesh
        .vertices
        .iter()
        .zip(u)
        .enumerate()
        .map(|(i, (p, u))| (i, p[0], p[1], u))
        .collect();
    let energy = t.times.iter().copied().zip(t.energies.iter().copied()).collect();
    Ok(WaveResult {
        solution,
        energy,
        poles_used: t.poles_used,
    })
}

/// Where pole coordinates are reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PolePlane {
    /// Poles of the sinc approximant.
    #[default]
    Sinc,
    /// Carried over to the argument of σ(h²A) (with h = 1).
    Sigma,
    /// Carried over to the argument of ψ(h²A) (with h = 1).
    Psi,
}

impl std::str::FromStr for PolePlane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinc" => Ok(PolePlane::Sinc),
            "sigma" => Ok(PolePlane::Sigma),
            "psi" => Ok(PolePlane::Psi),
            _ => Err(Error::InvalidArgument(format!("unknown pole plane `{s}`"))),
        }
    }
}

pub fn poles(family: Family, n: usize, plane: PolePlane) -> Result<Vec<C64>> {
    let set: PoleSet = family.generate(n)?;
    let set = match plane {
        PolePlane::Sinc => set,
        PolePlane::Sigma => set.to_matrix_plane(1.0),
        PolePlane::Psi => set.to_matrix_plane(4.0),
    };
    Ok(set.finite().collect())
}
