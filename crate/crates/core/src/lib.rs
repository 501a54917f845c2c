//! Greedy randomized Kaczmarz solvers (RK, GRK, iGRK, mGRK) for consistent
//! linear systems, with tools that evaluate and check their convergence
//! bounds along actual trajectories.
//!
//! ```
//! use kaczmarz::{gen_random_problem, run, RandomProblemSpec, SolverConfig};
//!
//! let problem = gen_random_problem(&RandomProblemSpec::new(200, 20, 20, 5.0, 1)).unwrap();
//! let trace = run(&problem, &SolverConfig::mgrk(0.4).with_seed(3)).unwrap();
//! assert!(trace.final_rse().unwrap() <= 1e-12);
//! ```

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod linalg;
pub mod mtx;
pub mod selection;
pub mod solvers;

pub use analysis::{
    beta_upper, certify_global, certify_trace, gamma_leaveout, grk_bounds, iteration_complexity,
    momentum_factors, rate_report, Certification, ComplexityReport, MomentumReport, RateReport,
};
pub use error::{Error, Result};
pub use experiment::{
    emit_results, run_experiment, ExperimentResult, ExperimentSpec, MethodSpec, OutputFormat,
    ProblemSource,
};
pub use generate::{gen_random_problem, RandomProblemSpec};
pub use linalg::{min_norm_solution, residual, smallest_nonzero_singular_value, Problem, RowAccessMatrix, SvdOracle};
pub use selection::{GammaMode, ProbabilityRule};
pub use solvers::{run, SolverConfig, Termination, Trace, TraceRecord, Variant};
