//! `sincmat`: experiment harness. Every subcommand writes CSV with a header
//! row to `--out` (stdout by default).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sincmat::experiments::{
    self, converge, expsum_bench, poles_bench, wave, wave_on_mesh, PolePlane, TestMatrix,
};
use sincmat::fem::load_mesh;
use sincmat::integrators::MatFunBackend;
use sincmat::par::Exec;
use sincmat::polesets::Family;
use sincmat::problems::write_matrix_market;
use sincmat::ratkrylov::PoleMapping;
use sincmat::Error;

#[derive(Parser, Debug)]
#[command(name = "sincmat", version, about = "Sinc-type matrix functions and Gautschi integrators")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for random start vectors.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scaled-down default sizes for quick runs.
    #[arg(long, global = true)]
    small: bool,
    /// Suppress diagnostics on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Leave the `seconds` column empty so output is byte-reproducible.
    #[arg(long, global = true)]
    no_timings: bool,
    /// Also write a gnuplot script next to the CSV output.
    #[arg(long, global = true)]
    gnuplot: bool,
    /// Run sweeps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// How filter poles are carried to the matrix argument (`squared` or `direct`).
    #[arg(long, global = true, default_value = "squared")]
    pole_mapping: PoleMapping,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Poles of an approximant family, one `re,im` row each.
    Poles {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Plane::Sinc)]
        plane: Plane,
    },
    /// A test matrix in coordinate format.
    Matrix {
        #[arg(long, value_enum)]
        name: MatrixName,
        /// Order (lap2d: a perfect square). Defaults per matrix.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Rational Krylov sinc(A)v error per pole family and count.
    PolesBench {
        #[arg(long, value_enum, default_value_t = MatrixName::Lap1d)]
        matrix: MatrixName,
        /// Matrix size parameter override.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "E,L,Lbar,pade-sinc,pade-exp")]
        families: Vec<Family>,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
    /// Exponential-sum sinc(A)v error per quadrature order.
    ExpsumBench {
        #[arg(long, value_enum, default_value_t = MatrixName::Lap1d)]
        matrix: MatrixName,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 15)]
        nu_max: usize,
        #[arg(long, value_enum, default_value_t = InnerKind::Krylov)]
        inner: InnerKind,
        /// Poles of the inner rational Krylov space.
        #[arg(long, default_value_t = 15)]
        k: usize,
    },
    /// Step-size sweep on the synthetic problem at T = 1.
    Converge {
        #[arg(long, value_enum, default_value_t = Problem::Synthetic)]
        problem: Problem,
        #[arg(long = "N", default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3")]
        h_list: Vec<f64>,
        #[arg(long, default_value = "dense")]
        backend: MatFunBackend,
    },
    /// Finite-element wave demo; writes PFX_solution.csv and PFX_energy.csv.
    Wave {
        /// Cells per side of the structured mesh on [−1, 1]².
        #[arg(long, default_value_t = 32)]
        m: usize,
        /// Mesh file to use instead of the structured mesh.
        #[arg(long, conflicts_with = "m")]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        h: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value = "dense")]
        backend: MatFunBackend,
        #[arg(long, default_value = "wave")]
        out_prefix: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Plane {
    Sinc,
    Sigma,
    Psi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MatrixName {
    Lap1d,
    Lap2d,
    Fem,
    Rutishauser,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InnerKind {
    Dense,
    Krylov,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Problem {
    Synthetic,
}

fn test_matrix(name: MatrixName, n: Option<usize>, small: bool) -> sincmat::Result<TestMatrix> {
    let key = match name {
        MatrixName::Lap1d => "lap1d",
        MatrixName::Lap2d => "lap2d",
        MatrixName::Fem => "fem",
        MatrixName::Rutishauser => "rutishauser",
    };
    let m = TestMatrix::by_name(key, small)?;
    Ok(n.map_or(m, |n| m.with_size(n)))
}

fn float(x: f64) -> String {
    format!("{x:e}")
}

struct Output {
    common_out: Option<PathBuf>,
    no_timings: bool,
}

impl Output {
    fn seconds(&self, s: f64) -> String {
        if self.no_timings {
            String::new()
        } else {
            float(s)
        }
    }

    fn csv(&self) -> sincmat::Result<csv::Writer<Box<dyn Write>>> {
        let sink: Box<dyn Write> = match &self.common_out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(csv::Writer::from_writer(sink))
    }

    fn csv_at(path: &Path) -> sincmat::Result<csv::Writer<File>> {
        Ok(csv::Writer::from_writer(File::create(path)?))
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// Script path next to a data file: `x.csv` → `x.gp`.
fn script_path(data: &Path) -> PathBuf {
    data.with_extension("gp")
}

fn write_script(path: &Path, body: &str) -> sincmat::Result<()> {
    std::fs::write(path, body)?;
    Ok(())
}

fn gnuplot_target(common: &Common) -> sincmat::Result<Option<PathBuf>> {
    match (common.gnuplot, &common.out) {
        (false, _) => Ok(None),
        (true, Some(p)) => Ok(Some(p.clone())),
        (true, None) => Err(Error::InvalidArgument("--gnuplot needs --out".into())),
    }
}

fn with_mapping(b: MatFunBackend, mapping: PoleMapping) -> MatFunBackend {
    match b {
        MatFunBackend::RationalKrylov { family, selection, .. } => MatFunBackend::RationalKrylov {
            family,
            selection,
            mapping,
        },
        other => other,
    }
}

fn run(cli: Cli) -> sincmat::Result<()> {
    let c = &cli.common;
    if c.gnuplot && c.out.is_none() && !matches!(cli.cmd, Cmd::Wave { .. } | Cmd::Matrix { .. }) {
        return Err(Error::InvalidArgument("--gnuplot needs --out".into()));
    }
    let exec = if c.sequential { Exec::Sequential } else { Exec::Parallel };
    let out = Output {
        common_out: c.out.clone(),
        no_timings: c.no_timings,
    };

    match cli.cmd {
        Cmd::Poles { family, n, plane } => {
            let plane = match plane {
                Plane::Sinc => PolePlane::Sinc,
                Plane::Sigma => PolePlane::Sigma,
                Plane::Psi => PolePlane::Psi,
            };
            let poles = experiments::poles(family, n, plane)?;
            let mut w = out.csv()?;
            w.write_record(["re", "im"]).map_err(csv_err)?;
            for z in poles {
                w.write_record([float(z.re), float(z.im)]).map_err(csv_err)?;
            }
            w.flush()?;
            if let Some(p) = gnuplot_target(c)? {
                write_script(
                    &script_path(&p),
                    &format!(
                        "set datafile separator ','\nset key off\nset xlabel 'Re'\nset ylabel 'Im'\n\
                         set title '{family} poles, n = {n}'\n\
                         plot '{}' every ::1 using 1:2 with points pt 7\n",
                        p.display()
                    ),
                )?;
            }
        }

        Cmd::Matrix { name, n } => {
            let a = test_matrix(name, n, c.small)?.build()?;
            match &c.out {
                Some(p) => {
                    let mut f = BufWriter::new(File::create(p)?);
                    write_matrix_market(&a, &mut f)?;
                    f.flush()?;
                }
                None => {
                    let mut s = io::stdout().lock();
                    write_matrix_market(&a, &mut s)?;
                    s.flush()?;
                }
            }
            if !c.quiet {
                eprintln!("order {}, {} stored entries", a.order(), a.nnz());
            }
        }

        Cmd::PolesBench { matrix, n, families, n_max } => {
            if !matches!(matrix, MatrixName::Lap1d | MatrixName::Lap2d | MatrixName::Fem) {
                return Err(Error::InvalidArgument("poles-bench takes lap1d, lap2d or fem".into()));
            }
            let tm = test_matrix(matrix, n, c.small)?;
            let a = tm.build()?;
            let rows = poles_bench(&a, &families, n_max, c.seed, exec)?;
            let mut w = out.csv()?;
            w.write_record(["family", "n", "k", "rel_error", "seconds", "stagnated"]).map_err(csv_err)?;
            for r in &rows {
                w.write_record([
                    r.family.name().to_string(),
                    r.n.to_string(),
                    r.k.to_string(),
                    float(r.rel_error),
                    out.seconds(r.seconds),
                    r.stagnated.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
            if !c.quiet {
                for f in &families {
                    if let Some(best) = rows.iter().filter(|r| r.family == *f).map(|r| r.rel_error).reduce(f64::min) {
                        eprintln!("{} on {} (order {}): best {best:.2e}", f.name(), tm.name(), a.order());
                    }
                }
            }
            if let Some(p) = gnuplot_target(c)? {
                let plots: Vec<String> = families
                    .iter()
                    .map(|f| {
                        format!(
                            "'{}' using 2:(strcol(1) eq '{}' ? $4 : 1/0) with linespoints title '{}'",
                            p.display(),
                            f.name(),
                            f.name()
                        )
                    })
                    .collect();
                write_script(
                    &script_path(&p),
                    &format!(
                        "set datafile separator ','\nset logscale y\nset xlabel 'n'\nset ylabel 'relative error'\n\
                         plot {}\n",
                        plots.join(", \\\n     ")
                    ),
                )?;
            }
        }

        Cmd::ExpsumBench { matrix, n, nu_max, inner, k } => {
            let tm = test_matrix(matrix, n, c.small)?;
            let a = tm.build()?;
            let k = match inner {
                InnerKind::Dense => 0,
                InnerKind::Krylov if k == 0 => {
                    return Err(Error::InvalidArgument("--inner krylov needs --k >= 1".into()))
                }
                InnerKind::Krylov => k,
            };
            let rows = expsum_bench(&a, nu_max, k, c.seed)?;
            let mut w = out.csv()?;
            w.write_record(["nu", "rel_error", "seconds"]).map_err(csv_err)?;
            for r in &rows {
                w.write_record([r.nu.to_string(), float(r.rel_error), out.seconds(r.seconds)])
                    .map_err(csv_err)?;
            }
            w.flush()?;
            if let Some(p) = gnuplot_target(c)? {
                write_script(
                    &script_path(&p),
                    &format!(
                        "set datafile separator ','\nset logscale y\nset xlabel 'nu'\nset ylabel 'relative error'\n\
                         plot '{}' every ::1 using 1:2 with linespoints title 'exponential sum'\n",
                        p.display()
                    ),
                )?;
            }
        }

        Cmd::Converge { problem: Problem::Synthetic, n, h_list, backend } => {
            let backend = with_mapping(backend, c.pole_mapping);
            let rows = converge(n, &h_list, &backend, exec)?;
            let mut w = out.csv()?;
            w.write_record(["h", "n_poles", "rel_error", "observed_order", "seconds"]).map_err(csv_err)?;
            for r in &rows {
                w.write_record([
                    float(r.h),
                    r.n_poles.to_string(),
                    float(r.rel_error),
                    r.observed_order.map(|p| format!("{p:.6}")).unwrap_or_default(),
                    out.seconds(r.seconds),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
            if !c.quiet {
                eprintln!("synthetic N = {n}, backend {backend}");
            }
            if let Some(p) = gnuplot_target(c)? {
                write_script(
                    &script_path(&p),
                    &format!(
                        "set datafile separator ','\nset logscale xy\nset xlabel 'h'\nset ylabel 'relative error'\n\
                         plot '{}' every ::1 using 1:3 with linespoints title '{backend}', \\\n     \
                         x**2 dashtype 2 title 'h^2'\n",
                        p.display()
                    ),
                )?;
            }
        }

        Cmd::Wave { m, mesh, h, t, backend, out_prefix } => {
            let backend = with_mapping(backend, c.pole_mapping);
            let r = match mesh {
                Some(path) => wave_on_mesh(load_mesh(path)?, h, t, &backend)?,
                None => wave(m, h, t, &backend)?,
            };
            let sol = PathBuf::from(format!("{out_prefix}_solution.csv"));
            let en = PathBuf::from(format!("{out_prefix}_energy.csv"));
            let mut w = Output::csv_at(&sol)?;
            w.write_record(["vertex", "x", "y", "u"]).map_err(csv_err)?;
            for &(i, x, y, u) in &r.solution {
                w.write_record([i.to_string(), float(x), float(y), float(u)]).map_err(csv_err)?;
            }
            w.flush()?;
            let mut w = Output::csv_at(&en)?;
            w.write_record(["t", "E"]).map_err(csv_err)?;
            for &(t, e) in &r.energy {
                w.write_record([float(t), float(e)]).map_err(csv_err)?;
            }
            w.flush()?;
            if !c.quiet {
                let e0 = r.energy.first().map_or(1.0, |e| e.1);
                let (lo, hi) = r
                    .energy
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &(_, e)| (l.min(e / e0), u.max(e / e0)));
                eprintln!(
                    "{} vertices, {} steps, poles {}, energy ratio [{lo:.5}, {hi:.5}]",
                    r.solution.len(),
                    r.energy.len().saturating_sub(1),
                    r.poles_used
                );
            }
            if c.gnuplot {
                write_script(
                    Path::new(&format!("{out_prefix}.gp")),
                    &format!(
                        "set datafile separator ','\nset multiplot layout 1,2\n\
                         set title 'u(T)'\nsplot '{}' every ::1 using 2:3:4 with points pt 7 ps 0.5 notitle\n\
                         set title 'energy'\nplot '{}' every ::1 using 1:2 with lines notitle\n\
                         unset multiplot\n",
                        sol.display(),
                        en.display()
                    ),
                )?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.quiet { log::LevelFilter::Off } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`| head`) is not a failure of the run.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Distinct status per error category; 2 is left to argument parsing.
fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "invalid-input" => 3,
        "unsupported" => 4,
        "pole-collision" => 5,
        "invalid-seed" => 6,
        "eigensolver" => 7,
        "saturation" => 8,
        "scale-guard" => 9,
        "blow-up" => 10,
        "not-spd" => 11,
        "mesh" => 12,
        "parse" => 13,
        "io" => 14,
        _ => 1,
    }
}
