//! `kaczmarz` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage or input errors, 2 when a run fails
//! numerically (no convergence, inconsistent system) or a certificate is
//! violated.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kaczmarz::analysis::{certify_global, certify_trace, gamma_leaveout, iteration_complexity, momentum_factors, rate_report};
use kaczmarz::experiment::{
    emit_results, parse_experiment_config, parse_method, read_trace_csv, run_experiment, write_trace_csv,
    ExperimentSpec, InstanceFactory, OutputFormat, ProblemSource,
};
use kaczmarz::generate::gen_random_problem_with_truth;
use kaczmarz::mtx::{read_matrix_market_with, write_matrix_market_file, write_vector_file, ReadOptions};
use kaczmarz::{
    Certification, Error, GammaMode, Problem, ProbabilityRule, RandomProblemSpec, RowAccessMatrix, SolverConfig,
    SvdOracle, Termination, Trace,
};

#[derive(Parser)]
#[command(name = "kaczmarz", version, about = "Greedy randomized Kaczmarz solvers and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random consistent problem (A, b, x*, x_true) as Matrix Market files.
    Gen(GenArgs),
    /// Solve one problem and emit its per-iteration trace.
    Solve(SolveArgs),
    /// Run a multi-trial, multi-method experiment.
    Bench(BenchArgs),
    /// Print rate, momentum and complexity constants for a matrix.
    Bound(BoundArgs),
    /// Re-check a stored trace against the convergence bounds.
    Certify(CertifyArgs),
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Matrix Market file for A.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Matrix Market vector for b (default: b = A·x_true with Gaussian x_true).
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
    /// Read `pattern` Matrix Market files with all stored entries equal to 1.
    #[arg(long)]
    pattern_as_ones: bool,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Rank of the random matrix (default min(m, n)).
    #[arg(long)]
    rank: Option<usize>,
    /// Condition bound of the random matrix.
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn source(&self) -> Result<ProblemSource, Error> {
        match (&self.matrix, self.m, self.n) {
            (Some(matrix), None, None) => Ok(ProblemSource::File {
                matrix: matrix.clone(),
                rhs: self.rhs.clone(),
                pattern_as_ones: self.pattern_as_ones,
            }),
            (None, Some(m), Some(n)) => Ok(ProblemSource::Random(RandomProblemSpec::new(
                m,
                n,
                self.rank.unwrap_or(m.min(n)),
                self.kappa,
                self.seed,
            ))),
            _ => Err(Error::InvalidParameter(
                "give either --matrix or both --m and --n".into(),
            )),
        }
    }

    fn read_options(&self) -> ReadOptions {
        ReadOptions {
            pattern_as_ones: self.pattern_as_ones,
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// cyclic, rk, grk, igrk or mgrk, optionally followed by `:key=value,...`
    /// (e.g. `mgrk:beta=0.4`). `bench` accepts it repeatedly.
    #[arg(long, default_value = "grk")]
    method: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// exact, lastrow or frobenius (default: exact for igrk, else frobenius).
    #[arg(long)]
    gamma_mode: Option<GammaMode>,
    /// residual or uniform.
    #[arg(long, default_value = "residual")]
    prob: ProbabilityRule,
    /// Stop when ‖x − x*‖²/‖x*‖² falls to this value.
    #[arg(long, default_value_t = 1e-12)]
    rse_tol: f64,
    /// Stop when ‖Ax − b‖²/‖b‖² falls to this value.
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
}

impl SolverArgs {
    fn defaults(&self) -> SolverConfig {
        SolverConfig {
            alpha: self.alpha,
            beta: self.beta,
            theta: self.theta,
            prob_rule: self.prob,
            rse_tol: Some(self.rse_tol),
            residual_tol: self.residual_tol,
            max_iters: self.max_iters,
            ..SolverConfig::default()
        }
    }

    fn single_method(&self) -> Result<kaczmarz::MethodSpec, Failure> {
        match self.method.as_slice() {
            [one] => Ok(self.method(one)?),
            _ => Err(Failure::Usage("give exactly one --method".into())),
        }
    }

    fn method(&self, desc: &str) -> Result<kaczmarz::MethodSpec, Error> {
        let mut spec = parse_method(desc, &self.defaults())?;
        if let Some(mode) = self.gamma_mode {
            if !desc.contains("gamma") {
                spec.config.gamma_mode = mode;
            }
        }
        spec.config.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also certify the trace against its per-step bound.
    #[arg(long)]
    certify: bool,
    /// Trace destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct BenchArgs {
    /// Plain `key = value` experiment file; flags given alongside are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    certify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Target ε relative to ‖e⁽⁰⁾‖².
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Length of the printed bound curves.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Use this σ_min instead of computing it by SVD.
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Trace file written by `solve` (CSV or JSON).
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    problem: ProblemArgs,
    /// Solver parameters of a CSV trace (JSON traces carry their own).
    #[command(flatten)]
    solver: SolverArgs,
    /// Use this σ_min instead of computing it by SVD.
    #[arg(long)]
    sigma_min: Option<f64>,
    /// Also check the global k-step bound.
    #[arg(long)]
    global: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Inconsistent { .. }
            | Error::ZeroMatrix
            | Error::AlreadySolved
            | Error::EmptyDistribution
            | Error::NotCertifiable(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn sigma_min_sq(a: &RowAccessMatrix, given: Option<f64>) -> Result<f64, Failure> {
    match given {
        Some(s) if s > 0.0 => Ok(s * s),
        Some(s) => Err(Failure::Usage(format!("--sigma-min must be positive, got {s}"))),
        None => Ok(SvdOracle::new(a)?.sigma_min().powi(2)),
    }
}

fn load_problem(args: &ProblemArgs) -> Result<(Problem, Option<f64>), Failure> {
    let inst = InstanceFactory::new(&args.source()?)?.instance(args.seed)?;
    Ok((inst.problem, inst.sigma_min_sq))
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let spec = RandomProblemSpec::new(args.m, args.n, args.rank.unwrap_or(args.m.min(args.n)), args.kappa, args.seed);
    let (problem, x_true) = gen_random_problem_with_truth(&spec)?;
    fs::create_dir_all(&args.out)?;
    write_matrix_market_file(&problem.a, args.out.join("A.mtx"))?;
    write_vector_file(&problem.b, args.out.join("b.mtx"))?;
    write_vector_file(problem.x_star.as_ref().unwrap(), args.out.join("x_star.mtx"))?;
    write_vector_file(&x_true, args.out.join("x_true.mtx"))?;
    println!(
        "wrote {}x{} rank-{} problem (kappa <= {}) to {}",
        spec.m,
        spec.n,
        spec.rank,
        spec.kappa,
        args.out.display()
    );
    Ok(())
}

fn certification_line(c: &Certification) -> String {
    match c {
        Certification::Passed { checked } => format!("certified: {checked} steps within bound"),
        Certification::Violated { k, observed, bound } => {
            format!("VIOLATED at k={k}: {observed:e} > {bound:e}")
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let (problem, sigma_sq) = load_problem(&args.problem)?;
    let method = args.solver.single_method()?;
    let mut cfg = method.config.with_seed(args.problem.seed);
    if problem.x_star.is_none() && cfg.residual_tol.is_none() {
        cfg.residual_tol = cfg.rse_tol;
    }
    let trace = kaczmarz::run(&problem, &cfg)?;
    {
        let mut w = writer(&args.out)?;
        match args.format {
            OutputFormat::Csv => write_trace_csv(&trace.records, &mut w)?,
            OutputFormat::Json => serde_json::to_writer_pretty(&mut w, &trace).map_err(Error::from)?,
        }
        w.flush()?;
    }
    let summary = format!(
        "{}: {} iterations, {}, final rse {}",
        method.label,
        trace.iterations(),
        trace.termination,
        trace.final_rse().map_or("n/a".into(), |r| format!("{r:.3e}"))
    );
    eprintln!("{summary}");
    let mut failure = None;
    if args.certify {
        let s = match sigma_sq {
            Some(s) => s,
            None => sigma_min_sq(&problem.a, None)?,
        };
        let c = certify_trace(&trace, s)?;
        eprintln!("{}", certification_line(&c));
        if !c.passed() {
            failure = Some(Failure::Numerical("certificate violated".into()));
        }
    }
    if trace.termination == Termination::MaxIters {
        return Err(Failure::Numerical(format!("no convergence within {} iterations", cfg.max_iters)));
    }
    failure.map_or(Ok(()), Err)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let spec = match &args.config {
        Some(path) => {
            let mut spec = parse_experiment_config(File::open(path)?, path)?;
            spec.certify |= args.certify;
            spec
        }
        None => {
            let methods = args
                .solver
                .method
                .iter()
                .map(|d| args.solver.method(d))
                .collect::<Result<Vec<_>, _>>()?;
            ExperimentSpec {
                trials: args.trials,
                base_seed: args.problem.seed,
                certify: args.certify,
                ..ExperimentSpec::new(args.problem.source()?, methods)
            }
        }
    };
    let result = run_experiment(&spec)?;
    match &args.out {
        Some(p) => emit_results(&result, args.format, p)?,
        None => {
            let out = io::stdout().lock();
            match args.format {
                OutputFormat::Csv => kaczmarz::experiment::write_results_csv(&result, out)?,
                OutputFormat::Json => kaczmarz::experiment::write_results_json(&result, out)?,
            }
        }
    }
    for m in &result.methods {
        eprintln!(
            "{}: mean iters {:.1}, mean seconds {:.4}, max-iter hits {}",
            m.label, m.mean_iters, m.mean_seconds, m.max_iter_hits
        );
    }
    if result.any_max_iters() {
        return Err(Failure::Numerical("some trials hit max_iters".into()));
    }
    if result.methods.iter().any(|m| m.trials.iter().any(|t| t.certified == Some(false))) {
        return Err(Failure::Numerical("certificate violated".into()));
    }
    Ok(())
}

fn cmd_bound(args: BoundArgs) -> Result<(), Failure> {
    let a = match args.problem.source()? {
        ProblemSource::File { matrix, .. } => read_matrix_market_with(&matrix, args.problem.read_options())?,
        ProblemSource::Random(spec) => kaczmarz::gen_random_problem(&spec)?.a,
    };
    let s = sigma_min_sq(&a, args.sigma_min)?;
    let frob = a.frobenius_sq();
    let report = serde_json::json!({
        "rate": rate_report(&a, s, args.k_max)?,
        "momentum": momentum_factors(args.alpha, args.beta, s, frob)?,
        "complexity": iteration_complexity(s, frob, 1.0, args.epsilon, args.rho)?,
    });
    let mut w = writer(&args.out)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn read_trace(path: &Path, args: &CertifyArgs, frob_sq: f64) -> Result<Trace, Failure> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let trace: Trace = serde_json::from_reader(File::open(path)?).map_err(Error::from)?;
        return Ok(trace);
    }
    let records = read_trace_csv(File::open(path)?, path)?;
    let method = args.solver.single_method()?;
    let termination = if records.last().is_some_and(|r| r.selected.is_none()) {
        Termination::RseReached
    } else {
        Termination::MaxIters
    };
    Ok(Trace {
        config: method.config,
        frob_sq,
        x_star_norm_sq: None,
        records,
        termination,
        final_x: Vec::new(),
        iterates: None,
    })
}

fn cmd_certify(args: CertifyArgs) -> Result<(), Failure> {
    let a = match args.problem.source()? {
        ProblemSource::File { matrix, .. } => read_matrix_market_with(&matrix, args.problem.read_options())?,
        ProblemSource::Random(spec) => kaczmarz::gen_random_problem(&spec)?.a,
    };
    let s = sigma_min_sq(&a, args.sigma_min)?;
    let trace = read_trace(&args.trace, &args, a.frobenius_sq())?;
    let c = certify_trace(&trace, s)?;
    println!("per-step: {}", certification_line(&c));
    let mut ok = c.passed();
    if args.global {
        let g = certify_global(&trace, s, gamma_leaveout(&a)?)?;
        println!("global: {}", certification_line(&g));
        ok &= g.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Numerical("certificate violated".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Certify(a) => cmd_certify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
