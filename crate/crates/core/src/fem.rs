//! P1 finite elements for the wave equation on triangulations of the plane:
//! meshes, mass and stiffness assembly, Dirichlet elimination by a column
//! selector, and the Gaussian-pulse demo.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::integrators::SecondOrderIVP;
use crate::operator::MassReducedOperator;
use crate::par::{self, Exec};
use crate::sparse::SparseSymMatrix;

/// Smallest admissible element area.
pub const MIN_AREA: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Sorted, without duplicates.
    pub boundary: Vec<usize>,
}

fn signed_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

impl TriMesh {
    /// Validates indices and areas. Clockwise triangles are reoriented with a
    /// warning.
    pub fn new(vertices: Vec<[f64; 2]>, mut triangles: Vec<[usize; 3]>, mut boundary: Vec<usize>) -> Result<Self> {
        let nv = vertices.len();
        for (e, tri) in triangles.iter_mut().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= nv) {
                return Err(Error::Mesh(format!("triangle {e} references vertex {bad}, but there are {nv}")));
            }
            let a = signed_area(tri.map(|i| vertices[i]));
            if a.abs() < MIN_AREA {
                return Err(Error::Mesh(format!("triangle {e} is degenerate (area {a:e})")));
            }
            if a < 0.0 {
                log::warn!("triangle {e} is clockwise; swapping two vertices");
                tri.swap(1, 2);
            }
        }
        if let Some(&bad) = boundary.iter().find(|&&i| i >= nv) {
            return Err(Error::Mesh(format!("boundary vertex {bad} out of range")));
        }
        boundary.sort_unstable();
        boundary.dedup();
        Ok(TriMesh {
            vertices,
            triangles,
            boundary,
        })
    }

    pub fn corners(&self, e: usize) -> [[f64; 2]; 3] {
        self.triangles[e].map(|i| self.vertices[i])
    }

    pub fn area(&self, e: usize) -> f64 {
        signed_area(self.corners(e))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|e| self.area(e)).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut m = 0.0f64;
        for e in 0..self.triangles.len() {
            let p = self.corners(e);
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                m = m.max((p[a][0] - p[b][0]).hypot(p[a][1] - p[b][1]));
            }
        }
        m
    }

    /// Plain-text layout: `nv nt nb`, then vertices, triangles (0-based) and
    /// Dirichlet vertices, one per line.
    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{} {} {}", self.vertices.len(), self.triangles.len(), self.boundary.len())?;
        for v in &self.vertices {
            writeln!(w, "{:?} {:?}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        for b in &self.boundary {
            writeln!(w, "{b}")?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: text.lines().count() + 1,
                msg: format!("unexpected end of file, expected {what}"),
            })
        };
        fn fields<T: std::str::FromStr>(line: usize, s: &str, count: usize) -> Result<Vec<T>> {
            let v: Vec<T> = s
                .split_whitespace()
                .map(|x| x.parse::<T>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line,
                    msg: format!("cannot parse `{s}`"),
                })?;
            if v.len() != count {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {count} fields, found {}", v.len()),
                });
            }
            Ok(v)
        }
        let (ln, head) = next("header")?;
        let h: Vec<usize> = fields(ln, head, 3)?;
        let mut vertices = Vec::with_capacity(h[0]);
        for _ in 0..h[0] {
            let (ln, s) = next("vertex")?;
            let v: Vec<f64> = fields(ln, s, 2)?;
            vertices.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(h[1]);
        for _ in 0..h[1] {
            let (ln, s) = next("triangle")?;
            let t: Vec<usize> = fields(ln, s, 3)?;
            triangles.push([t[0], t[1], t[2]]);
        }
        let mut boundary = Vec::with_capacity(h[2]);
        for _ in 0..h[2] {
            let (ln, s) = next("boundary vertex")?;
            boundary.push(fields::<usize>(ln, s, 1)?[0]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing content after mesh".into(),
            });
        }
        TriMesh::new(vertices, triangles, boundary)
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    TriMesh::parse(&fs::read_to_string(path)?)
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    mesh.write(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Uniform triangulation of [−1, 1]² with `m` cells per side, each cell
/// cut along its rising diagonal; the whole boundary is Dirichlet.
pub fn structured_mesh(m: usize) -> Result<TriMesh> {
    if m == 0 {
        return Err(Error::InvalidArgument("mesh needs at least one cell per side".into()));
    }
    let s = m + 1;
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / m as f64;
    let mut vertices = Vec::with_capacity(s * s);
    let mut boundary = Vec::new();
    for r in 0..s {
        for c in 0..s {
            if r == 0 || c == 0 || r == m || c == m {
                boundary.push(vertices.len());
            }
            vertices.push([coord(c), coord(r)]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for r in 0..m {
        for c in 0..m {
            let p00 = r * s + c;
            let (p10, p01, p11) = (p00 + 1, p00 + s, p00 + s + 1);
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    TriMesh::new(vertices, triangles, boundary)
}

pub type ElementMatrix = [[f64; 3]; 3];

/// Exact P1 mass and stiffness matrices of one triangle.
pub fn element_matrices(p: [[f64; 2]; 3]) -> Result<(ElementMatrix, ElementMatrix)> {
    let area = signed_area(p);
    if area.abs() < MIN_AREA {
        return Err(Error::Mesh(format!("degenerate element (area {area:e})")));
    }
    let area = area.abs();
    // ∇λ_i = (b_i, c_i) / (2A)
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut m = [[0.0; 3]; 3];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok((m, k))
}

/// Global mass and stiffness matrices. Element matrices are computed in
/// parallel and scattered in element order, so the result does not depend
/// on the execution policy.
pub fn assemble_p1(mesh: &TriMesh) -> Result<(SparseSymMatrix, SparseSymMatrix)> {
    assemble_p1_with(Exec::default(), mesh)
}

pub fn assemble_p1_with(exec: Exec, mesh: &TriMesh) -> Result<(SparseSymMatrix, SparseSymMatrix)> {
    let elems = par::map_range(exec, mesh.triangles.len(), |e| element_matrices(mesh.corners(e)));
    let mut mt = Vec::with_capacity(9 * elems.len());
    let mut kt = Vec::with_capacity(9 * elems.len());
    for (tri, em) in mesh.triangles.iter().zip(elems) {
        let (me, ke) = em?;
        for a in 0..3 {
            for b in 0..3 {
                mt.push((tri[a], tri[b], me[a][b]));
                kt.push((tri[a], tri[b], ke[a][b]));
            }
        }
    }
    let n = mesh.vertices.len();
    Ok((SparseSymMatrix::from_triplets(n, &mt)?, SparseSymMatrix::from_triplets(n, &kt)?))
}

/// Mass and stiffness matrices on the full vertex set and restricted to the
/// free (non-Dirichlet) degrees of freedom.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub m: SparseSymMatrix,
    pub k: SparseSymMatrix,
    pub mc: SparseSymMatrix,
    pub kc: SparseSymMatrix,
    /// Column `j` of Z is the unit vector of vertex `free[j]`.
    pub free: Vec<usize>,
}

impl FemSystem {
    /// Zᵀ x
    pub fn restrict(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m.order(), x.len())?;
        Ok(self.free.iter().map(|&i| x[i]).collect())
    }

    /// Z y + g, with `g` the Dirichlet lift (zero off the boundary).
    pub fn extend(&self, y: &[f64], g: Option<&[f64]>) -> Result<Vec<f64>> {
        check_len(self.free.len(), y.len())?;
        let mut x = match g {
            Some(g) => {
                check_len(self.m.order(), g.len())?;
                g.to_vec()
            }
            None => vec![0.0; self.m.order()],
        };
        for (&i, &v) in self.free.iter().zip(y) {
            x[i] = v;
        }
        Ok(x)
    }

    /// Zᵀ(F + G − K g_D)
    pub fn reduced_load(&self, f: &[f64], g: &[f64], g_d: &[f64]) -> Result<Vec<f64>> {
        let n = self.m.order();
        check_len(n, f.len())?;
        check_len(n, g.len())?;
        check_len(n, g_d.len())?;
        let kg = self.k.matvec(g_d)?;
        let full: Vec<f64> = (0..n).map(|i| f[i] + g[i] - kg[i]).collect();
        self.restrict(&full)
    }
}

pub fn apply_dirichlet_nullspace(m: SparseSymMatrix, k: SparseSymMatrix, mesh: &TriMesh) -> Result<FemSystem> {
    check_len(mesh.vertices.len(), m.order())?;
    check_len(m.order(), k.order())?;
    let mut fixed = vec![false; m.order()];
    mesh.boundary.iter().for_each(|&i| fixed[i] = true);
    let free: Vec<usize> = (0..m.order()).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return Err(Error::Mesh("every vertex is Dirichlet; no free degrees of freedom".into()));
    }
    Ok(FemSystem {
        mc: m.principal_submatrix(&free),
        kc: k.principal_submatrix(&free),
        m,
        k,
        free,
    })
}

/// Initial displacement of the demo: a Gaussian bump centred at (−0.3, −0.3).
pub fn demo_initial_displacement(x: f64, y: f64) -> f64 {
    0.8 * (-((x + 0.3).powi(2) + (y + 0.3).powi(2)) / 0.06).exp()
}

/// The wave demo in reduced coordinates `y = 𝓛ᵀu` with `M_c = 𝓛𝓛ᵀ`, so
/// that `y'' + Ãy = 0` with `Ã = 𝓛⁻¹K_c𝓛⁻ᵀ` symmetric.
pub struct WaveDemo {
    pub mesh: TriMesh,
    pub system: FemSystem,
    pub op: Arc<MassReducedOperator>,
    pub ivp: SecondOrderIVP,
}

impl WaveDemo {
    /// Nodal values on all vertices (zero on the boundary) from reduced
    /// coordinates.
    pub fn nodal(&self, y: &[f64]) -> Result<Vec<f64>> {
        let uc = self.op.lt_solve(y)?;
        self.system.extend(&uc, None)
    }
}

pub fn wave_demo_problem(mesh: TriMesh, tf: f64) -> Result<WaveDemo> {
    let (m, k) = assemble_p1(&mesh)?;
    let system = apply_dirichlet_nullspace(m, k, &mesh)?;
    let op = Arc::new(MassReducedOperator::new(system.mc.clone(), system.kc.clone())?);
    let u0: Vec<f64> = mesh.vertices.iter().map(|v| demo_initial_displacement(v[0], v[1])).collect();
    let y0 = op.lt_mul(&system.restrict(&u0)?)?;
    let n = y0.len();
    let ivp = SecondOrderIVP::new(op.clone(), None, y0, vec![0.0; n], 0.0, tf)?;
    Ok(WaveDemo { mesh, system, op, ivp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemf::DenseSymMatrix;
    use crate::operator::SymOperator;
    use faer::{Mat, Side};

    #[test]
    fn unit_right_triangle() {
        let (m, k) = element_matrices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let mw = [[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]];
        let kw = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - mw[i][j] / 24.0).abs() <= 1e-14);
                assert!((k[i][j] - kw[i][j]).abs() <= 1e-14);
            }
        }
        assert!(element_matrices([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
    }

    #[test]
    fn structured_counts() {
        let m1 = structured_mesh(1).unwrap();
        assert_eq!((m1.vertices.len(), m1.triangles.len(), m1.boundary.len()), (4, 2, 4));
        for m in [1, 2, 5, 32] {
            let mesh = structured_mesh(m).unwrap();
            assert_eq!(mesh.vertices.len(), (m + 1) * (m + 1));
            assert_eq!(mesh.triangles.len(), 2 * m * m);
            assert_eq!(mesh.boundary.len(), 4 * m);
            assert!((mesh.total_area() - 4.0).abs() < 1e-12);
            assert!((0..mesh.triangles.len()).all(|e| mesh.area(e) > 0.0));
        }
        let h = structured_mesh(32).unwrap().max_edge_length();
        assert!((h - 2.0 * 2f64.sqrt() / 32.0).abs() < 1e-14);
        assert!(structured_mesh(0).is_err());
    }

    #[test]
    fn assembly_invariants() {
        let mesh = structured_mesh(7).unwrap();
        let (m, k) = assemble_p1(&mesh).unwrap();
        let total: f64 = m.triplets().iter().map(|t| t.2).sum();
        assert!((total / 4.0 - 1.0).abs() < 1e-10);
        let k1 = k.matvec(&vec![1.0; m.order()]).unwrap();
        assert!(k1.iter().all(|x| x.abs() <= 1e-12));
        assert!(m.symmetry_defect() == 0.0 && k.symmetry_defect() <= 1e-15);
        // Row sums of M are a third of the vertex patch areas.
        let mut patch = vec![0.0; m.order()];
        for (e, tri) in mesh.triangles.iter().enumerate() {
            tri.iter().for_each(|&i| patch[i] += mesh.area(e) / 3.0);
        }
        let rows = m.matvec(&vec![1.0; m.order()]).unwrap();
        for (r, p) in rows.iter().zip(&patch) {
            assert!((r - p).abs() < 1e-14);
        }
    }

    #[test]
    fn assembly_is_policy_independent() {
        let mesh = structured_mesh(9).unwrap();
        let (ms, ks) = assemble_p1_with(Exec::Sequential, &mesh).unwrap();
        let (mp, kp) = assemble_p1_with(Exec::Parallel, &mesh).unwrap();
        assert_eq!(ms.triplets(), mp.triplets());
        assert_eq!(ks.triplets(), kp.triplets());
    }

    #[test]
    fn patch_test() {
        // K u for linear u vanishes at interior vertices.
        let mesh = structured_mesh(6).unwrap();
        let (_, k) = assemble_p1(&mesh).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|v| 0.3 + 2.0 * v[0] - 1.5 * v[1]).collect();
        let ku = k.matvec(&u).unwrap();
        for (i, x) in ku.iter().enumerate() {
            if mesh.boundary.binary_search(&i).is_err() {
                assert!(x.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn small_mesh_reduction() {
        let mesh = structured_mesh(2).unwrap();
        let (m, k) = assemble_p1(&mesh).unwrap();
        let sys = apply_dirichlet_nullspace(m, k, &mesh).unwrap();
        assert_eq!(sys.free, vec![4]);
        // Six triangles of area ½ meet at the centre: 6·(½·2/12).
        assert!((sys.mc.get(0, 0) - 0.5).abs() < 1e-15);
        let mesh1 = structured_mesh(1).unwrap();
        let (m, k) = assemble_p1(&mesh1).unwrap();
        assert!(apply_dirichlet_nullspace(m, k, &mesh1).is_err());
    }

    #[test]
    fn load_with_zero_lift() {
        let mesh = structured_mesh(3).unwrap();
        let (m, k) = assemble_p1(&mesh).unwrap();
        let sys = apply_dirichlet_nullspace(m, k, &mesh).unwrap();
        let n = mesh.vertices.len();
        let f: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let g = vec![0.5; n];
        let r = sys.reduced_load(&f, &g, &vec![0.0; n]).unwrap();
        let want: Vec<f64> = sys.free.iter().map(|&i| f[i] + 0.5).collect();
        assert_eq!(r, want);
        let back = sys.extend(&sys.restrict(&f).unwrap(), None).unwrap();
        assert!(mesh.boundary.iter().all(|&i| back[i] == 0.0));
    }

    #[test]
    fn mesh_round_trip_and_errors() {
        let mesh = structured_mesh(4).unwrap();
        let mut buf = Vec::new();
        mesh.write(&mut buf).unwrap();
        let back = TriMesh::parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, mesh);
        let dir = std::env::temp_dir().join(format!("sincmat-mesh-{}", std::process::id()));
        save_mesh(&mesh, &dir).unwrap();
        assert_eq!(load_mesh(&dir).unwrap(), mesh);
        std::fs::remove_file(&dir).ok();

        let cw = "3 1 0\n0 0\n0 1\n1 0\n0 1 2\n";
        let m = TriMesh::parse(cw).unwrap();
        assert!(m.area(0) > 0.0);
        let oob = "3 1 0\n0 0\n1 0\n0 1\n0 1 7\n";
        match TriMesh::parse(oob) {
            Err(Error::Mesh(msg)) => assert!(msg.contains("triangle 0")),
            other => panic!("{other:?}"),
        }
        match TriMesh::parse("3 1 0\n0 0\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduced_spectrum_ballpark() {
        let mesh = structured_mesh(32).unwrap();
        let (m, k) = assemble_p1(&mesh).unwrap();
        let sys = apply_dirichlet_nullspace(m, k, &mesh).unwrap();
        let kc = sys.kc.to_dense();
        let ev = Mat::<f64>::self_adjoint_eigenvalues(&kc, Side::Lower).unwrap();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        assert!(lo > 0.01 && hi < 8.0, "[{lo}, {hi}]");
    }

    #[test]
    fn demo_problem() {
        let demo = wave_demo_problem(structured_mesh(10).unwrap(), 1.0).unwrap();
        let peak = demo
            .mesh
            .vertices
            .iter()
            .position(|v| (v[0] + 0.4).abs() < 1e-12 && (v[1] + 0.4).abs() < 1e-12)
            .unwrap();
        assert!((demo_initial_displacement(-0.3, -0.3) - 0.8).abs() < 1e-15);
        let u0 = demo.nodal(&demo.ivp.y0).unwrap();
        assert!((u0[peak] - demo_initial_displacement(-0.4, -0.4)).abs() < 1e-12);
        assert!(demo.ivp.y1.iter().all(|&x| x == 0.0));
        let a = DenseSymMatrix::from_operator(demo.op.as_ref() as &dyn SymOperator);
        assert!(a.is_ok());
        let e = a.unwrap().eigen().unwrap();
        assert!(e.values[0] > -1e-10);
    }
}
