//! `dtn`: command-line front end for the Dirichlet-to-Neumann laboratory.
//!
//! Exit codes: 0 success, 2 a checked property failed, 1 could not compute.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtn_core::assembly::{assemble_with, AssemblyOptions, BoundaryMass};
use dtn_core::dtn::duality_residuals;
use dtn_core::mesh::{generate_capped, DEFAULT_MAX_VERTICES};
use dtn_core::semigroup::{
    check_domination, check_irreducible, check_positivity, check_submarkov, PropertyReport, Verdict, DEFAULT_TIMES,
    IRREDUCIBILITY_TOL,
};
use dtn_core::spectral::{dirichlet_spectrum, dtn_spectrum, lambda1_dirichlet, robin_spectrum, SpectrumResult};
use dtn_core::sweep::sweep;
use dtn_core::{check_conditions, mtx, preset, AssembledSystem, CoefficientSet, DtnOperator, Error, Mesh, Shape};

#[derive(Parser)]
#[command(name = "dtn", version, about = "Discrete Dirichlet-to-Neumann operators: spectra and semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it in the DTNMESH text format.
    Mesh {
        #[arg(long)]
        shape: Shape,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write K, M, Mb as Matrix Market files plus the node partition.
    Assemble {
        #[command(flatten)]
        problem: Problem,
        /// Prefix for K.mtx, M.mtx, Mb.mtx and partition.txt.
        #[arg(long)]
        out_prefix: String,
    },
    /// Build the boundary operator and write S and Mb.
    Operator {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write Mb (default: next to `--out`, suffixed `_Mb`).
        #[arg(long)]
        mb_out: Option<PathBuf>,
    },
    /// Duality residuals between the boundary spectrum and Robin problems.
    Duality {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
        /// Pass iff every residual is at most `tol` times the matrix scale.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of the Dirichlet, Robin or boundary problem.
    Eig {
        #[command(flatten)]
        problem: Problem,
        #[arg(long = "problem", value_enum, value_name = "PROBLEM")]
        which: EigProblem,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Positivity, sub-Markov and irreducibility checks of exp(-t D).
    Semigroup {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TIMES.to_vec())]
        times: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![Check::Positivity, Check::Submarkov, Check::Irreducible])]
        check: Vec<Check>,
        /// Relative tolerance for positivity and sub-Markov checks.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1.0)]
        t_probe: f64,
        #[arg(long, default_value_t = IRREDUCIBILITY_TOL)]
        irreducibility_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Domination 0 <= exp(-t D2) <= exp(-t D1).
    Dominate {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, allow_hyphen_values = true)]
        lambda1: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda2: f64,
        /// Reaction coefficient of the dominating operator (default: from the coefficients).
        #[arg(long, allow_hyphen_values = true)]
        d1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        d2: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TIMES.to_vec())]
        times: Vec<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary eigenvalues along a lambda grid, as CSV.
    Sweep {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, allow_hyphen_values = true)]
        lambda_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda_max: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EigProblem {
    Dirichlet,
    Robin,
    Dtn,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Check {
    Positivity,
    Submarkov,
    Irreducible,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Check::Positivity => "positivity",
            Check::Submarkov => "submarkov",
            Check::Irreducible => "irreducible",
        })
    }
}

/// Mesh source, coefficients and assembly options shared by most commands.
#[derive(Args)]
struct Problem {
    /// Mesh file in the DTNMESH format.
    #[arg(long, conflicts_with_all = ["shape", "h"])]
    mesh: Option<PathBuf>,
    #[arg(long, requires = "h")]
    shape: Option<Shape>,
    #[arg(long, requires = "shape")]
    h: Option<f64>,
    /// Coefficient file (`a = ...`, `b = ...`, `c = ...`, `d = ...`, `kappa = ...`).
    #[arg(long, conflicts_with = "preset")]
    coeff: Option<PathBuf>,
    /// Catalog preset `name[:p1,p2,...]`, names joined with `+`, e.g. `rotational+constant_d:1,-1`.
    #[arg(long)]
    preset: Option<String>,
    /// Use the row-sum lumped boundary mass instead of the consistent one.
    #[arg(long)]
    lumped_boundary_mass: bool,
}

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn max_dofs() -> CliResult<usize> {
    match std::env::var("DTN_MAX_DOFS") {
        Ok(v) => Ok(v.trim().parse().map_err(|_| format!("DTN_MAX_DOFS must be a positive integer, got `{v}`"))?),
        Err(_) => Ok(DEFAULT_MAX_VERTICES),
    }
}

impl Problem {
    fn mesh(&self) -> CliResult<Mesh> {
        let cap = max_dofs()?;
        let mesh = match (&self.mesh, self.shape, self.h) {
            (Some(path), _, _) => {
                let mesh = Mesh::read_text(BufReader::new(open(path)?))?;
                if mesh.num_vertices() > cap {
                    return Err(
                        Error::ResourceLimit { what: "mesh vertices", requested: mesh.num_vertices(), cap }.into()
                    );
                }
                mesh
            }
            (None, Some(shape), Some(h)) => generate_capped(shape, h, cap)?,
            _ => return Err("give either --mesh or both --shape and --h".into()),
        };
        Ok(mesh)
    }

    fn coefficients(&self) -> CliResult<CoefficientSet> {
        if let Some(path) = &self.coeff {
            return Ok(CoefficientSet::parse_config(BufReader::new(open(path)?))?);
        }
        match &self.preset {
            None => Ok(CoefficientSet::laplace()),
            Some(spec) => {
                let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
                let params = params
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad preset parameter `{p}`")))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok(preset(name, &params)?)
            }
        }
    }

    fn options(&self) -> AssemblyOptions {
        AssemblyOptions {
            boundary_mass: if self.lumped_boundary_mass { BoundaryMass::Lumped } else { BoundaryMass::Consistent },
        }
    }

    fn load(&self) -> CliResult<(Mesh, CoefficientSet, AssembledSystem)> {
        let mesh = self.mesh()?;
        let coeffs = self.coefficients()?;
        let sys = assemble_with(&mesh, &coeffs, self.options())?;
        Ok((mesh, coeffs, sys))
    }
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path.file_name().ok_or_else(|| format!("{}: not a file path", path.display()))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(format!("{}: {e}", path.display()).into());
    }
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn spectrum_csv(spec: &SpectrumResult) -> String {
    let mut s = String::from("index,re,im,residual\n");
    for (k, (z, r)) in spec.eigenvalues.iter().zip(&spec.residual_norms).enumerate() {
        s += &format!("{k},{},{},{}\n", num(z.re), num(z.im), num(*r));
    }
    s
}

fn json(value: &impl serde::Serialize) -> CliResult<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn verdict_code(reports: &[PropertyReport]) -> u8 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        2
    } else {
        0
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Mesh { shape, h, out } => {
            let mesh = generate_capped(shape, h, max_dofs()?)?;
            write_atomic(&out, mesh.to_text().as_bytes())?;
            eprintln!(
                "{} vertices, {} triangles, {} boundary edges, h = {}",
                mesh.num_vertices(),
                mesh.triangles.len(),
                mesh.boundary_edges.len(),
                num(mesh.h)
            );
            Ok(0)
        }
        Command::Assemble { problem, out_prefix } => {
            let (_, _, sys) = problem.load()?;
            for (name, m) in [("K", &sys.k), ("M", &sys.m), ("Mb", &sys.mb)] {
                let mut buf = Vec::new();
                mtx::write_csr(m, &mut buf)?;
                write_atomic(Path::new(&format!("{out_prefix}{name}.mtx")), &buf)?;
            }
            let mut part = format!("INTERIOR {}\n", sys.interior_idx.len());
            for i in &sys.interior_idx {
                part += &format!("{i}\n");
            }
            part += &format!("BOUNDARY {}\n", sys.boundary_idx.len());
            for i in &sys.boundary_idx {
                part += &format!("{i}\n");
            }
            write_atomic(Path::new(&format!("{out_prefix}partition.txt")), part.as_bytes())?;
            Ok(0)
        }
        Command::Operator { problem, lambda, out, mb_out } => {
            let (_, _, sys) = problem.load()?;
            let op = DtnOperator::build(&sys, lambda)?;
            let mb_path = mb_out.unwrap_or_else(|| {
                let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                out.with_file_name(format!("{stem}_Mb.mtx"))
            });
            let mut buf = Vec::new();
            mtx::write_dense(&op.s, &mut buf)?;
            write_atomic(&out, &buf)?;
            buf.clear();
            mtx::write_dense(&op.mb, &mut buf)?;
            write_atomic(&mb_path, &buf)?;
            eprintln!(
                "m = {}, pivot ratio {}, condition estimate {}",
                op.boundary_dim(),
                num(op.pivot_ratio),
                num(op.condition_estimate)
            );
            Ok(0)
        }
        Command::Duality { problem, lambda, count, tol, out } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err("--tol must be positive".into());
            }
            let (_, _, sys) = problem.load()?;
            let op = DtnOperator::build(&sys, lambda)?;
            let rows = duality_residuals(&op, &sys, count)?;
            let mut s = String::from("mu,beta,robin_residual,mu_im,matrix_scale\n");
            let mut pass = true;
            for r in &rows {
                pass &= r.robin_residual <= tol * r.matrix_scale;
                s += &format!(
                    "{},{},{},{},{}\n",
                    num(r.mu.re),
                    num(r.beta.re),
                    num(r.robin_residual),
                    num(r.mu.im),
                    num(r.matrix_scale)
                );
            }
            emit(out.as_deref(), s.as_bytes())?;
            Ok(if pass { 0 } else { 2 })
        }
        Command::Eig { problem, which, lambda, beta, count, out } => {
            let (_, _, sys) = problem.load()?;
            let spec = match which {
                EigProblem::Dirichlet => dirichlet_spectrum(&sys, count)?,
                EigProblem::Robin => robin_spectrum(&sys, beta, count)?,
                EigProblem::Dtn => dtn_spectrum(&DtnOperator::build(&sys, lambda)?, count)?,
            };
            for w in &spec.warnings {
                eprintln!("warning: {w}");
            }
            emit(out.as_deref(), spectrum_csv(&spec).as_bytes())?;
            Ok(0)
        }
        Command::Semigroup { problem, lambda, times, check, tol, t_probe, irreducibility_tol, out } => {
            if [tol, irreducibility_tol].iter().any(|t| t.is_nan() || *t <= 0.0) {
                return Err("tolerances must be positive".into());
            }
            let (mesh, coeffs, sys) = problem.load()?;
            let margins = check_conditions(&coeffs, &mesh, lambda, lambda1_dirichlet(&mesh)?);
            let op = DtnOperator::build(&sys, lambda)?;
            let mut reports = Vec::new();
            for c in &check {
                reports.push(match c {
                    Check::Positivity => check_positivity(&op, &times, tol, Some(&margins))?,
                    Check::Submarkov => check_submarkov(&op, &times, tol, Some(&margins))?,
                    Check::Irreducible => check_irreducible(&op, t_probe, irreducibility_tol, Some(&margins))?,
                });
            }
            emit(out.as_deref(), &json(&reports)?)?;
            Ok(verdict_code(&reports))
        }
        Command::Dominate { problem, lambda1, lambda2, d1, d2, times, tol, seed, out } => {
            if tol.is_nan() || tol <= 0.0 {
                return Err("--tol must be positive".into());
            }
            let mesh = problem.mesh()?;
            let base = problem.coefficients()?;
            let c1 = base.clone().with_d(d1.unwrap_or(base.d));
            let c2 = base.clone().with_d(d2.unwrap_or(base.d));
            let l1 = lambda1_dirichlet(&mesh)?;
            let op1 = DtnOperator::build(&assemble_with(&mesh, &c1, problem.options())?, lambda1)?;
            let op2 = DtnOperator::build(&assemble_with(&mesh, &c2, problem.options())?, lambda2)?;
            let m1 = check_conditions(&c1, &mesh, lambda1, l1);
            let m2 = check_conditions(&c2, &mesh, lambda2, l1);
            let report = check_domination(&op2, &op1, &times, tol, Some(&m2), Some(&m1), seed)?;
            emit(out.as_deref(), &json(&report)?)?;
            Ok(verdict_code(std::slice::from_ref(&report)))
        }
        Command::Sweep { problem, lambda_min, lambda_max, steps, count, out } => {
            let (_, _, sys) = problem.load()?;
            let res = sweep(&sys, lambda_min, lambda_max, steps, count)?;
            for l in &res.skipped {
                eprintln!("skipped lambda = {} (Dirichlet spectrum)", num(*l));
            }
            let mut buf = Vec::new();
            res.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)?;
            match res.monotone {
                Some(true) => eprintln!("branches nonincreasing in lambda between Dirichlet poles"),
                Some(false) => {
                    eprintln!("a branch increases in lambda between Dirichlet poles");
                    return Ok(2);
                }
                None => eprintln!("monotonicity not checked (b != c)"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
