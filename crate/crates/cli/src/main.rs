use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use graphseg::io::{
    export_dot, read_columns, read_density_csv, read_partial_scalar_csv, read_scalar_csv,
    write_density_csv, write_scalar_csv,
};
use graphseg::verify::{
    check_disjointness, check_growth_inequality, check_residual, uniqueness_harness,
    uniqueness_harness_bounded, DEFAULT_EPS,
};
use graphseg::{
    all_pairs_hop_distances, detect_boundary, dirichlet_energy, first_eigenvalue, generate,
    load_problem, parse_edge_list, serialize_edge_list, solve_obstacle, solve_system, DensityField,
    Graph, GraphKind, Init, ScalarField, Scheme, SolveReport, SolverConfig, VertexPartition,
};

/// Segregation systems on graphs.
#[derive(Parser, Debug)]
#[command(name = "graphseg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
    /// Classify every vertex as BOUNDARY or INTERIOR.
    Boundary {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Solve the segregation system of a problem file.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Initial density field (CSV); boundary rows are replaced by the data.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Solve the one-phase obstacle problem.
    Obstacle {
        #[arg(long)]
        graph: PathBuf,
        /// Source term f >= 0 (CSV, every vertex).
        #[arg(long)]
        source: PathBuf,
        /// Boundary values (CSV); unlisted vertices default to 0.
        #[arg(long)]
        bc: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check a candidate solution against the problem.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Solve from several starts and compare the results.
    Unique {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Upper bound for random initial values (default: largest boundary value).
        #[arg(long)]
        init_bound: Option<f64>,
        /// Largest accepted distance between two solutions.
        #[arg(long, default_value_t = 1e-6)]
        distance_tol: f64,
    },
    /// Dirichlet energy of every column of a field file.
    Energy {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// Smallest Dirichlet eigenvalue on a vertex subset.
    Eig {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated vertex labels (default: the interior).
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
        /// Write the eigenvector as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Vertex count (leaf count for star).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Edge probability for random graphs.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Path,
    Cycle,
    Star,
    Complete,
    Grid,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Jacobi,
    Gs,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::Jacobi)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            scheme: match self.scheme {
                SchemeArg::Jacobi => Scheme::Jacobi,
                SchemeArg::Gs => Scheme::GaussSeidel,
            },
            tol: self.tol,
            max_iters: self.max_iters,
            omega: self.omega,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Failures that are not input errors.
#[derive(Debug)]
struct Unsatisfied(String);

impl std::fmt::Display for Unsatisfied {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Unsatisfied {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_graph(path: &Path) -> Result<(Graph, VertexPartition)> {
    let g = parse_edge_list(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let p = detect_boundary(&g, &all_pairs_hop_distances(&g))?;
    Ok((g, p))
}

fn require(value: Option<usize>, flag: &str) -> Result<usize> {
    value.ok_or_else(|| anyhow!("--{flag} is required for this kind"))
}

fn summary(report: &SolveReport) -> String {
    format!(
        "{} iterations={} change={:e} residual={:e}",
        if report.converged {
            "converged"
        } else {
            "not-converged"
        },
        report.iterations,
        report.final_change,
        report.residual
    )
}

fn finish(report: &SolveReport) -> Result<()> {
    println!("{}", summary(report));
    if report.converged {
        Ok(())
    } else {
        Err(Unsatisfied(format!(
            "solver did not converge within {} iterations",
            report.iterations
        ))
        .into())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => {
            let kind = match args.kind {
                Kind::Path => GraphKind::Path(require(args.n, "n")?),
                Kind::Cycle => GraphKind::Cycle(require(args.n, "n")?),
                Kind::Star => GraphKind::Star(require(args.n, "n")?),
                Kind::Complete => GraphKind::Complete(require(args.n, "n")?),
                Kind::Grid => GraphKind::Grid2d {
                    rows: require(args.rows, "rows")?,
                    cols: require(args.cols, "cols")?,
                },
                Kind::Random => GraphKind::RandomConnected {
                    n: require(args.n, "n")?,
                    p: args
                        .p
                        .ok_or_else(|| anyhow!("--p is required for this kind"))?,
                    seed: args.seed,
                },
            };
            let text = serialize_edge_list(&generate(kind)?);
            match args.out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Boundary { graph, dot } => {
            let (g, p) = load_graph(&graph)?;
            let mut out = String::new();
            for x in 0..g.n() {
                match p.witness(x) {
                    Some(w) => writeln!(
                        out,
                        "{} BOUNDARY witness={} margin={}",
                        g.label(x),
                        g.label(w.vertex),
                        w.mean_margin()
                    )?,
                    None => writeln!(out, "{} INTERIOR", g.label(x))?,
                }
            }
            print!("{out}");
            if let Some(path) = dot {
                write(&path, &export_dot(&g, &p, None))?;
            }
        }
        Command::Solve {
            graph,
            problem,
            solver,
            init,
            out,
            dot,
        } => {
            let (g, p) = load_graph(&graph)?;
            let spec = load_problem(&problem, &g, &p)?;
            let mut cfg = solver.config()?;
            if let Some(path) = init {
                cfg.init = Init::Custom(read_density_csv(&read(&path)?, &g)?);
            }
            let (u, report) = solve_system(&g, &p, &spec, &cfg)?;
            write(&out, &write_density_csv(&g, &u))?;
            if let Some(path) = dot {
                write(&path, &export_dot(&g, &p, Some(&u)))?;
            }
            finish(&report)?;
        }
        Command::Obstacle {
            graph,
            source,
            bc,
            solver,
            out,
            dot,
        } => {
            let (g, p) = load_graph(&graph)?;
            let f = read_scalar_csv(&read(&source)?, &g)?;
            let bc = read_partial_scalar_csv(&read(&bc)?, &g)?;
            let (u, report) = solve_obstacle(&g, &p, &f, &bc, &solver.config()?)?;
            write(&out, &write_scalar_csv(&g, &u, "u"))?;
            if let Some(path) = dot {
                let field = DensityField::from_columns(&[u.values().to_vec()])?;
                write(&path, &export_dot(&g, &p, Some(&field)))?;
            }
            finish(&report)?;
        }
        Command::Verify {
            graph,
            problem,
            solution,
            eps,
        } => {
            let (g, p) = load_graph(&graph)?;
            let spec = load_problem(&problem, &g, &p)?;
            let u = read_density_csv(&read(&solution)?, &g)?;
            if u.m() != spec.m() {
                bail!("solution has {} densities, problem has {}", u.m(), spec.m());
            }
            let reports = [
                check_disjointness(&u, eps)?,
                check_growth_inequality(&g, &p, &spec, &u, eps)?,
                check_residual(&g, &p, &spec, &u, eps)?,
            ];
            for r in &reports {
                println!(
                    "{} {} slack={:e}",
                    r.lemma.name(),
                    if r.passed { "PASS" } else { "FAIL" },
                    r.slack
                );
            }
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.lemma.name())
                .collect();
            if !failed.is_empty() {
                return Err(Unsatisfied(format!("failed: {}", failed.join(", "))).into());
            }
        }
        Command::Unique {
            graph,
            problem,
            solver,
            starts,
            seed,
            init_bound,
            distance_tol,
        } => {
            let (g, p) = load_graph(&graph)?;
            let spec = load_problem(&problem, &g, &p)?;
            let cfg = solver.config()?;
            let report = match init_bound {
                Some(b) => uniqueness_harness_bounded(&g, &p, &spec, &cfg, starts, seed, b)?,
                None => uniqueness_harness(&g, &p, &spec, &cfg, starts, seed)?,
            };
            for run in &report.runs {
                println!(
                    "start={} scheme={:?} {}",
                    run.start,
                    run.scheme,
                    summary(&run.report)
                );
            }
            println!("max-distance={:e}", report.max_distance);
            if !report.passed(distance_tol) {
                return Err(Unsatisfied(if report.all_converged {
                    format!("solutions differ by {:e}", report.max_distance)
                } else {
                    "some runs did not converge".to_string()
                })
                .into());
            }
        }
        Command::Energy { graph, field } => {
            let g = parse_edge_list(&read(&graph)?)?;
            let (names, columns) = read_columns(&read(&field)?, &g)?;
            for (name, col) in names.iter().zip(&columns) {
                println!("{name} {}", dirichlet_energy(&g, col));
            }
        }
        Command::Eig { graph, subset, out } => {
            let (g, p) = load_graph(&graph)?;
            let vertices = match subset {
                Some(labels) => labels
                    .iter()
                    .map(|l| {
                        g.index_of(l.trim())
                            .ok_or_else(|| anyhow!("unknown vertex `{}`", l.trim()))
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => p.interior().to_vec(),
            };
            if vertices.is_empty() {
                bail!("vertex subset is empty");
            }
            let (lambda, v): (f64, ScalarField) = first_eigenvalue(&g, &vertices)?;
            println!("lambda {lambda}");
            if let Some(path) = out {
                write(&path, &write_scalar_csv(&g, &v, "v"))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            if e.is::<Unsatisfied>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
