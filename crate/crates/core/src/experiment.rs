//! Multi-trial, multi-method experiments and their CSV/JSON output.
//!
//! Trial `t` uses seed `base_seed + t` both for the problem instance (a fresh
//! random matrix, or a fresh `x_true` for a file matrix) and for the solver's
//! sampler. Every method sees the same instance within a trial.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::certify_trace;
use crate::error::{Error, Result};
use crate::generate::{gen_random_problem, RandomProblemSpec};
use crate::linalg::{Problem, RowAccessMatrix, SvdOracle};
use crate::mtx::{read_matrix_market_with, read_vector, ReadOptions};
use crate::solvers::{run, SolverConfig, Termination, Trace, TraceRecord, Variant};

/// Largest `min(m, n)` for which the dense SVD oracle is used.
pub const ORACLE_MAX_DIM: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSource {
    Random(RandomProblemSpec),
    File {
        matrix: PathBuf,
        /// Fixed right-hand side; when absent `b = A·x_true` per trial.
        rhs: Option<PathBuf>,
        #[serde(default)]
        pattern_as_ones: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub config: SolverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: ProblemSource,
    pub methods: Vec<MethodSpec>,
    pub trials: usize,
    pub base_seed: u64,
    /// Run the per-step certificate on every greedy trial.
    pub certify: bool,
    /// Keep full traces in the result.
    pub keep_traces: bool,
}

impl ExperimentSpec {
    pub fn new(source: ProblemSource, methods: Vec<MethodSpec>) -> Self {
        Self {
            source,
            methods,
            trials: 20,
            base_seed: 0,
            certify: false,
            keep_traces: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods given".into()));
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert(m.label.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate method label `{}`", m.label)));
            }
            m.config.validate()?;
        }
        if let ProblemSource::Random(r) = &self.source {
            r.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub iters: usize,
    pub seconds: f64,
    pub final_rse: Option<f64>,
    pub termination: Termination,
    /// `None` when not requested or not applicable (non-greedy, infeasible).
    pub certified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub label: String,
    pub config: SolverConfig,
    pub trials: Vec<TrialResult>,
    pub mean_iters: f64,
    pub mean_seconds: f64,
    /// Trials that stopped on the iteration cap.
    pub max_iter_hits: usize,
}

impl MethodResult {
    fn summarize(label: String, config: SolverConfig, mut trials: Vec<TrialResult>) -> Self {
        trials.sort_by_key(|t| t.trial);
        let n = trials.len().max(1) as f64;
        Self {
            mean_iters: trials.iter().map(|t| t.iters as f64).sum::<f64>() / n,
            mean_seconds: trials.iter().map(|t| t.seconds).sum::<f64>() / n,
            max_iter_hits: trials
                .iter()
                .filter(|t| t.termination == Termination::MaxIters)
                .count(),
            label,
            config,
            trials,
        }
    }

    pub fn all_certified(&self) -> Option<bool> {
        let flags: Option<Vec<bool>> = self.trials.iter().map(|t| t.certified).collect();
        flags.map(|f| f.iter().all(|&c| c))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<MethodResult>,
}

impl ExperimentResult {
    pub fn method(&self, label: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.label == label)
    }

    pub fn any_max_iters(&self) -> bool {
        self.methods.iter().any(|m| m.max_iter_hits > 0)
    }
}

/// Problem instance for one trial plus the squared smallest nonzero singular
/// value when the oracle was run.
pub struct Instance {
    pub problem: Problem,
    pub sigma_min_sq: Option<f64>,
}

/// Builds per-trial instances for a source.
pub struct InstanceFactory {
    source: ProblemSource,
    fixed: Option<(RowAccessMatrix, Option<SvdOracle>, Option<Vec<f64>>)>,
}

impl InstanceFactory {
    pub fn new(source: &ProblemSource) -> Result<Self> {
        let fixed = match source {
            ProblemSource::Random(_) => None,
            ProblemSource::File {
                matrix,
                rhs,
                pattern_as_ones,
            } => {
                let a = read_matrix_market_with(
                    matrix,
                    ReadOptions {
                        pattern_as_ones: *pattern_as_ones,
                    },
                )?;
                let oracle = if a.nrows().min(a.ncols()) <= ORACLE_MAX_DIM {
                    Some(SvdOracle::new(&a)?)
                } else {
                    None
                };
                let b = rhs.as_ref().map(read_vector).transpose()?;
                Some((a, oracle, b))
            }
        };
        Ok(Self {
            source: source.clone(),
            fixed,
        })
    }

    pub fn instance(&self, seed: u64) -> Result<Instance> {
        match (&self.source, &self.fixed) {
            (ProblemSource::Random(spec), _) => {
                let problem = gen_random_problem(&spec.with_seed(seed))?;
                let sigma_min_sq = Some(SvdOracle::new(&problem.a)?.sigma_min().powi(2));
                Ok(Instance {
                    problem,
                    sigma_min_sq,
                })
            }
            (ProblemSource::File { .. }, Some((a, oracle, rhs))) => {
                let b = match rhs {
                    Some(b) => b.clone(),
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let x_true: Vec<f64> =
                            (0..a.ncols()).map(|_| rng.sample(StandardNormal)).collect();
                        a.mul_vec(&x_true)
                    }
                };
                let x_star = oracle.as_ref().map(|o| o.pseudo_solve(&b));
                Ok(Instance {
                    problem: Problem::new(a.clone(), b, x_star)?,
                    sigma_min_sq: oracle.as_ref().map(|o| o.sigma_min().powi(2)),
                })
            }
            (ProblemSource::File { .. }, None) => unreachable!("file source is loaded in new"),
        }
    }
}

/// Without `x*`, fall back to the relative residual at the RSE threshold.
fn effective_config(config: &SolverConfig, problem: &Problem, seed: u64) -> SolverConfig {
    let mut cfg = config.clone().with_seed(seed);
    if problem.x_star.is_none() && cfg.residual_tol.is_none() {
        cfg.residual_tol = cfg.rse_tol;
    }
    cfg
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let factory = InstanceFactory::new(&spec.source)?;
    let mut per_method: Vec<Vec<TrialResult>> = vec![Vec::with_capacity(spec.trials); spec.methods.len()];
    for t in 0..spec.trials {
        let seed = spec.base_seed.wrapping_add(t as u64);
        let inst = factory.instance(seed)?;
        for (mi, method) in spec.methods.iter().enumerate() {
            let cfg = effective_config(&method.config, &inst.problem, seed);
            let trace = run(&inst.problem, &cfg)?;
            let certified = match (spec.certify, inst.sigma_min_sq) {
                (true, Some(s)) if cfg.variant.is_greedy() => {
                    certify_trace(&trace, s).ok().map(|c| c.passed())
                }
                _ => None,
            };
            per_method[mi].push(TrialResult {
                trial: t,
                seed,
                iters: trace.iterations(),
                seconds: trace.elapsed_seconds(),
                final_rse: trace.final_rse(),
                termination: trace.termination,
                certified,
                trace: spec.keep_traces.then_some(trace),
            });
        }
    }
    let methods = spec
        .methods
        .iter()
        .zip(per_method)
        .map(|(m, trials)| MethodResult::summarize(m.label.clone(), m.config.clone(), trials))
        .collect();
    Ok(ExperimentResult {
        trials: spec.trials,
        base_seed: spec.base_seed,
        methods,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV rows per (method, trial), then one `summary` row per method whose
/// `iters`/`seconds` hold the means and `certified` the conjunction.
pub fn write_results_csv<W: Write>(result: &ExperimentResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["method", "trial", "seed", "iters", "seconds", "final_rse", "certified"])?;
    for m in &result.methods {
        for t in &m.trials {
            out.write_record([
                m.label.clone(),
                t.trial.to_string(),
                t.seed.to_string(),
                t.iters.to_string(),
                t.seconds.to_string(),
                opt_cell(t.final_rse),
                opt_cell(t.certified),
            ])?;
        }
    }
    for m in &result.methods {
        let max_rse = m
            .trials
            .iter()
            .filter_map(|t| t.final_rse)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        out.write_record([
            m.label.clone(),
            "summary".into(),
            result.base_seed.to_string(),
            m.mean_iters.to_string(),
            m.mean_seconds.to_string(),
            opt_cell(max_rse),
            opt_cell(m.all_certified()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_results_json<W: Write>(result: &ExperimentResult, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, result)?;
    Ok(())
}

pub fn read_results_json<R: Read>(r: R) -> Result<ExperimentResult> {
    Ok(serde_json::from_reader(r)?)
}

pub fn emit_results(result: &ExperimentResult, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    match format {
        OutputFormat::Csv => write_results_csv(result, file),
        OutputFormat::Json => write_results_json(result, file),
    }
}

pub const TRACE_HEADER: [&str; 6] = ["k", "i_k", "set_size", "gamma_k", "err_sq", "res_sq"];

/// Per-iteration CSV; an empty record list yields the header alone.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for r in records {
        out.write_record([
            r.k.to_string(),
            opt_cell(r.selected),
            opt_cell(r.set_size),
            opt_cell(r.gamma_k),
            opt_cell(r.err_sq),
            r.res_sq.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(r: R, name: &Path) -> Result<Vec<TraceRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse {
            path: name.to_path_buf(),
            line: 1,
            msg: format!("expected header {}", TRACE_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row = row?;
        let line = idx + 2;
        let bad = |field: &str| Error::Parse {
            path: name.to_path_buf(),
            line,
            msg: format!("bad {field}"),
        };
        let opt_usize = |s: &str, f: &str| -> Result<Option<usize>> {
            if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|_| bad(f)) }
        };
        let opt_f64 = |s: &str, f: &str| -> Result<Option<f64>> {
            if s.is_empty() { Ok(None) } else { s.parse().map(Some).map_err(|_| bad(f)) }
        };
        records.push(TraceRecord {
            k: row[0].parse().map_err(|_| bad("k"))?,
            selected: opt_usize(&row[1], "i_k")?,
            set_size: opt_usize(&row[2], "set_size")?,
            gamma_k: opt_f64(&row[3], "gamma_k")?,
            err_sq: opt_f64(&row[4], "err_sq")?,
            res_sq: row[5].parse().map_err(|_| bad("res_sq"))?,
            elapsed_ns: 0,
        });
    }
    Ok(records)
}

/// Parses a method description such as `mgrk beta=0.4 label=m4` (separators
/// may be spaces, commas or colons). `igrk` is `grk` with the exact `Γ_k`.
pub fn parse_method(desc: &str, defaults: &SolverConfig) -> Result<MethodSpec> {
    let mut parts = desc
        .split(|c: char| c.is_whitespace() || c == ',' || c == ':')
        .filter(|s| !s.is_empty());
    let name = parts
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty method description".into()))?;
    let mut cfg = defaults.clone();
    cfg.variant = name.parse::<Variant>()?;
    if name.eq_ignore_ascii_case("igrk") {
        cfg.gamma_mode = crate::selection::GammaMode::Exact;
    }
    let mut label = None;
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{kv}`")))?;
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad value for {k}: `{v}`")))
        };
        match k {
            "label" => label = Some(v.to_string()),
            "alpha" => cfg.alpha = num(v)?,
            "beta" => cfg.beta = num(v)?,
            "theta" => cfg.theta = num(v)?,
            "gamma" | "gamma_mode" | "gamma-mode" => cfg.gamma_mode = v.parse()?,
            "prob" => cfg.prob_rule = v.parse()?,
            "rse_tol" | "rse-tol" => cfg.rse_tol = Some(num(v)?),
            "max_iters" | "max-iters" => {
                cfg.max_iters = v
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad max_iters `{v}`")))?
            }
            other => return Err(Error::InvalidParameter(format!("unknown method key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(MethodSpec {
        label: label.unwrap_or_else(|| desc.trim().to_string()),
        config: cfg,
    })
}

/// Reads a `key = value` experiment file. `#` starts a comment; `method`
/// may repeat. Keys: `m n rank kappa` or `matrix [rhs] [pattern_as_ones]`,
/// `seed trials certify`, solver defaults `alpha beta theta gamma prob
/// rse_tol max_iters`, and `method`.
pub fn parse_experiment_config<R: Read>(r: R, name: &Path) -> Result<ExperimentSpec> {
    let mut kv: Vec<(usize, String, String)> = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse {
            path: name.to_path_buf(),
            line: idx + 1,
            msg: "expected key = value".into(),
        })?;
        kv.push((idx + 1, k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    let err = |line: usize, msg: String| Error::Parse {
        path: name.to_path_buf(),
        line,
        msg,
    };

    let mut defaults = SolverConfig::default();
    let (mut m, mut n, mut rank, mut kappa) = (None, None, None, None);
    let (mut matrix, mut rhs, mut pattern) = (None, None, false);
    let (mut seed, mut trials, mut certify) = (0u64, 20usize, false);
    let mut method_lines = Vec::new();
    for (line, k, v) in &kv {
        let line = *line;
        let f = || v.parse::<f64>().map_err(|_| err(line, format!("bad number for {k}")));
        let u = || v.parse::<usize>().map_err(|_| err(line, format!("bad integer for {k}")));
        let b = || v.parse::<bool>().map_err(|_| err(line, format!("bad boolean for {k}")));
        match k.as_str() {
            "m" => m = Some(u()?),
            "n" => n = Some(u()?),
            "rank" | "r" => rank = Some(u()?),
            "kappa" => kappa = Some(f()?),
            "matrix" => matrix = Some(PathBuf::from(v)),
            "rhs" => rhs = Some(PathBuf::from(v)),
            "pattern_as_ones" => pattern = b()?,
            "seed" => seed = v.parse().map_err(|_| err(line, "bad seed".into()))?,
            "trials" => trials = u()?,
            "certify" => certify = b()?,
            "alpha" => defaults.alpha = f()?,
            "beta" => defaults.beta = f()?,
            "theta" => defaults.theta = f()?,
            "gamma" | "gamma_mode" => defaults.gamma_mode = v.parse()?,
            "prob" => defaults.prob_rule = v.parse()?,
            "rse_tol" => defaults.rse_tol = Some(f()?),
            "max_iters" => defaults.max_iters = u()?,
            "method" => method_lines.push((line, v.clone())),
            other => return Err(err(line, format!("unknown key `{other}`"))),
        }
    }
    let source = match (matrix, m, n) {
        (Some(matrix), None, None) => ProblemSource::File {
            matrix,
            rhs,
            pattern_as_ones: pattern,
        },
        (None, Some(m), Some(n)) => ProblemSource::Random(RandomProblemSpec::new(
            m,
            n,
            rank.unwrap_or(m.min(n)),
            kappa.unwrap_or(10.0),
            seed,
        )),
        _ => return Err(err(0, "give either `matrix` or both `m` and `n`".into())),
    };
    let methods = method_lines
        .into_iter()
        .map(|(line, v)| parse_method(&v, &defaults).map_err(|e| err(line, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let spec = ExperimentSpec {
        source,
        methods,
        trials,
        base_seed: seed,
        certify,
        keep_traces: false,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(trials: usize) -> ExperimentSpec {
        ExperimentSpec {
            trials,
            base_seed: 5,
            certify: true,
            ..ExperimentSpec::new(
                ProblemSource::Random(RandomProblemSpec::new(60, 10, 10, 4.0, 0)),
                vec![
                    MethodSpec { label: "a".into(), config: SolverConfig::grk() },
                    MethodSpec { label: "b".into(), config: SolverConfig::grk() },
                ],
            )
        }
    }

    #[test]
    fn identical_methods_identical_means() {
        let r = run_experiment(&small_spec(3)).unwrap();
        assert_eq!(r.methods[0].mean_iters, r.methods[1].mean_iters);
        assert_eq!(r.methods[0].all_certified(), Some(true));
        let seeds: Vec<u64> = r.methods[0].trials.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, vec![5, 6, 7]);
    }

    #[test]
    fn single_trial_means() {
        let r = run_experiment(&small_spec(1)).unwrap();
        let m = &r.methods[0];
        assert_eq!(m.mean_iters, m.trials[0].iters as f64);
        assert_eq!(m.mean_seconds, m.trials[0].seconds);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small_spec(0);
        assert!(run_experiment(&s).is_err());
        s.trials = 1;
        s.methods[1].label = "a".into();
        assert!(matches!(run_experiment(&s), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn max_iters_is_flagged() {
        let mut s = small_spec(2);
        s.methods[0].config.max_iters = 3;
        let r = run_experiment(&s).unwrap();
        assert_eq!(r.methods[0].max_iter_hits, 2);
        assert_eq!(r.methods[0].mean_iters, 3.0);
        assert!(r.any_max_iters());
    }

    #[test]
    fn csv_and_json_output() {
        let mut s = small_spec(2);
        s.keep_traces = true;
        let r = run_experiment(&s).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // header + methods × trials + one summary per method
        assert_eq!(text.lines().count(), 1 + 2 * 2 + 2);
        let mut js = Vec::new();
        write_results_json(&r, &mut js).unwrap();
        assert_eq!(read_results_json(js.as_slice()).unwrap(), r);
    }

    #[test]
    fn trace_csv_roundtrip() {
        let mut buf = Vec::new();
        write_trace_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().trim(), TRACE_HEADER.join(","));
        assert!(read_trace_csv(buf.as_slice(), Path::new("t")).unwrap().is_empty());

        let p = gen_random_problem(&RandomProblemSpec::new(30, 5, 5, 3.0, 1)).unwrap();
        let t = run(&p, &SolverConfig::grk().with_seed(2)).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t.records, &mut buf).unwrap();
        let back = read_trace_csv(buf.as_slice(), Path::new("t")).unwrap();
        assert_eq!(back.len(), t.records.len());
        for (a, b) in back.iter().zip(&t.records) {
            assert_eq!((a.k, a.selected, a.gamma_k, a.err_sq, a.res_sq), (b.k, b.selected, b.gamma_k, b.err_sq, b.res_sq));
        }
    }

    #[test]
    fn method_descriptions() {
        let d = SolverConfig::default();
        let m = parse_method("mgrk beta=0.4 label=m4", &d).unwrap();
        assert_eq!((m.label.as_str(), m.config.variant, m.config.beta), ("m4", Variant::Mgrk, 0.4));
        let g = parse_method("igrk", &d).unwrap();
        assert_eq!(g.config.gamma_mode, crate::selection::GammaMode::Exact);
        assert_eq!(parse_method("mgrk:beta=0.1,theta=0.3", &d).unwrap().config.theta, 0.3);
        assert!(parse_method("grk beta=0.2", &d).is_err());
        assert!(parse_method("sgd", &d).is_err());
        assert!(parse_method("grk foo=1", &d).is_err());
    }

    #[test]
    fn config_file() {
        let text = "# bench\nm = 40\nn = 8\nkappa = 3\nseed = 9\ntrials = 2\nmethod = grk\nmethod = mgrk beta=0.3\n";
        let s = parse_experiment_config(text.as_bytes(), Path::new("c")).unwrap();
        assert_eq!(s.trials, 2);
        assert_eq!(s.base_seed, 9);
        assert_eq!(s.methods.len(), 2);
        assert!(matches!(s.source, ProblemSource::Random(RandomProblemSpec { rank: 8, .. })));
        assert!(parse_experiment_config("m = 4\n".as_bytes(), Path::new("c")).is_err());
        assert!(parse_experiment_config("bogus\n".as_bytes(), Path::new("c")).is_err());
    }

    #[test]
    fn file_source_synthesizes_rhs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let p = gen_random_problem(&RandomProblemSpec::new(25, 6, 4, 3.0, 1)).unwrap();
        crate::mtx::write_matrix_market_file(&p.a, &path).unwrap();
        let src = ProblemSource::File { matrix: path, rhs: None, pattern_as_ones: false };
        let f = InstanceFactory::new(&src).unwrap();
        let i1 = f.instance(1).unwrap();
        let i2 = f.instance(2).unwrap();
        assert_ne!(i1.problem.b, i2.problem.b);
        assert!(i1.problem.x_star.is_some());
        assert!(i1.sigma_min_sq.unwrap() >= 1.0 - 1e-9);
    }
}
