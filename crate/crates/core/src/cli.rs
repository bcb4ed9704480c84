//! Command-line front end: problem files, result JSON, trace CSV and the
//! certificate report.
//!
//! Everything here is a library function returning an [`Outcome`] so that the
//! binary is a thin wrapper and the commands can be tested in process.
//!
//! Exit codes: 0 success, 1 unreadable input or bad dimensions, 2 restricted
//! injectivity violated, 3 solver did not converge, 4 instance too large for
//! the oracle. A certificate that fails its checks is still a successful run
//! and reports `"pass": false`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::geometry::{
    certify_maximal, d_support, default_support_tol, CertificateReport, CertifyError,
};
use crate::ipm::{self, IpmError, SolveTrace, SolverConfig, Status};
use crate::model::{ModelError, Problem};
use crate::oracle::{run_oracle, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INJECTIVITY: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_ORACLE_LIMIT: i32 = 4;

/// Tolerance of the geometric checks in `certify`.
pub const CERTIFY_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid problem file: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(IpmError),
    #[error("solver did not converge (status {})", .0.as_str())]
    NonConvergence(Status),
    #[error(transparent)]
    Oracle(OracleError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) => EXIT_INPUT,
            CliError::Model(ModelError::RestrictedInjectivity { .. }) => EXIT_INJECTIVITY,
            CliError::Model(_) => EXIT_INPUT,
            CliError::Solver(IpmError::Model(m)) => CliError::Model(m.clone()).exit_code(),
            CliError::Solver(IpmError::Start(_) | IpmError::Config(_)) => EXIT_INPUT,
            CliError::Solver(_) | CliError::NonConvergence(_) => EXIT_NONCONVERGENCE,
            CliError::Oracle(OracleError::TooLarge { .. }) => EXIT_ORACLE_LIMIT,
            CliError::Oracle(OracleError::Model(m)) => CliError::Model(m.clone()).exit_code(),
            CliError::Oracle(_) => EXIT_INPUT,
        }
    }
}

impl From<IpmError> for CliError {
    fn from(e: IpmError) -> Self {
        match e {
            IpmError::Model(m) => CliError::Model(m),
            other => CliError::Solver(other),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Model(m) => CliError::Model(m),
            other => CliError::Oracle(other),
        }
    }
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub phi: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_x: Option<Vec<f64>>,
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>, CliError> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(CliError::Parse(format!(
            "row {} of {name} has length {}, expected {ncols}",
            i + 1,
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Builds the problem (structurally checked) and the optional start.
    pub fn to_problem(&self) -> Result<(Problem, Option<DVector<f64>>), CliError> {
        let n = self.d.len();
        if n == 0 {
            return Err(CliError::Parse("d must have at least one row".into()));
        }
        let p = self.d[0].len();
        let phi = rows_to_matrix("phi", &self.phi, n)?;
        let d = rows_to_matrix("d", &self.d, p)?;
        let y = DVector::from_column_slice(&self.y);
        let problem = Problem::new(phi, d, y, self.lambda)?;
        let start = match &self.start_x {
            Some(x) if x.len() != n => {
                return Err(CliError::Parse(format!(
                    "start_x has length {}, expected {n}",
                    x.len()
                )));
            }
            Some(x) => Some(DVector::from_column_slice(x)),
            None => None,
        };
        Ok((problem, start))
    }
}

/// A number printed with 17 significant digits; non-finite values become
/// `null`.
fn num(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_owned()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

fn nums(v: &DVector<f64>) -> Vec<Box<RawValue>> {
    v.iter().map(|x| num(*x)).collect()
}

#[derive(Serialize)]
struct Summary {
    min: Box<RawValue>,
    max: Box<RawValue>,
    len: usize,
}

#[derive(Serialize)]
struct FinalResiduals {
    r1: Box<RawValue>,
    r2: Box<RawValue>,
    r3: Box<RawValue>,
    r4: Box<RawValue>,
    mu: Box<RawValue>,
}

#[derive(Serialize)]
struct SolveReport {
    x: Vec<Box<RawValue>>,
    u: Vec<Box<RawValue>>,
    s_summary: Summary,
    objective: Box<RawValue>,
    support_indices: Vec<usize>,
    support_signs: Vec<i8>,
    iterations: usize,
    final_residuals: FinalResiduals,
    status: &'static str,
}

/// Flags of the `solve` command.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveFlags {
    pub eps: f64,
    pub eta: f64,
    pub max_iters: usize,
    pub tol_support: Option<f64>,
}

impl Default for SolveFlags {
    fn default() -> Self {
        let cfg = SolverConfig::default();
        Self {
            eps: cfg.eps,
            eta: cfg.eta,
            max_iters: cfg.max_iters,
            tol_support: None,
        }
    }
}

/// Result of running a command: what goes to stdout and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn failure(err: &CliError) -> Self {
        Self {
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
            code: err.exit_code(),
        }
    }
}

/// Output of a solve: the result JSON and the trace CSV.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub json: String,
    pub trace_csv: String,
    pub status: Status,
}

pub fn solve_problem(file: &ProblemFile, flags: &SolveFlags) -> Result<SolveOutput, CliError> {
    let (problem, start_x) = file.to_problem()?;
    let config = SolverConfig {
        eps: flags.eps,
        eta: flags.eta,
        max_iters: flags.max_iters,
        ..SolverConfig::default()
    };
    let start = start_x
        .map(|x| ipm::start_from_x(&problem, &x))
        .transpose()?;
    let (pt, trace) = ipm::solve(&problem, &config, start)?;

    let dx = problem.analysis(&pt.x);
    let tol = flags
        .tol_support
        .unwrap_or_else(|| default_support_tol(&dx));
    let support = d_support(&pt.x, problem.d(), tol);
    let res = trace.last().residuals;
    let report = SolveReport {
        x: nums(&pt.x),
        u: nums(&pt.u),
        s_summary: Summary {
            min: num(pt.s.min()),
            max: num(pt.s.max()),
            len: pt.s.len(),
        },
        objective: num(problem.objective(&pt.x)),
        support_indices: support.one_based(),
        support_signs: support.indices.iter().map(|&i| support.signs[i]).collect(),
        iterations: trace.iterations(),
        final_residuals: FinalResiduals {
            r1: num(res.r1),
            r2: num(res.r2),
            r3: num(res.r3),
            r4: num(res.r4),
            mu: num(res.mu),
        },
        status: trace.status.as_str(),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    Ok(SolveOutput {
        json,
        trace_csv: trace_csv(&trace),
        status: trace.status,
    })
}

/// Per-iteration CSV; the initial point is row `iter = 0`.
pub fn trace_csv(trace: &SolveTrace) -> String {
    let n = trace.records.first().map_or(0, |r| r.point.x.len());
    let mut out = String::from("iter,mu,r1,r2,r3,r4,step,sigma");
    for j in 1..=n {
        let _ = write!(out, ",x_{j}");
    }
    out.push('\n');
    for rec in &trace.records {
        let r = &rec.residuals;
        let _ = write!(out, "{}", rec.iter);
        for v in [r.mu, r.r1, r.r2, r.r3, r.r4, rec.step, rec.sigma]
            .into_iter()
            .chain(rec.point.x.iter().copied())
        {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// The `solve` command.
pub fn cmd_solve(path: &Path, flags: &SolveFlags, trace: Option<&Path>) -> Outcome {
    let run =
        || -> Result<SolveOutput, CliError> { solve_problem(&ProblemFile::read(path)?, flags) };
    let out = match run() {
        Ok(out) => out,
        Err(e) => return Outcome::failure(&e),
    };
    let mut stderr = String::new();
    if let Some(trace_path) = trace {
        if let Err(source) = std::fs::write(trace_path, &out.trace_csv) {
            let err = CliError::Io {
                path: trace_path.to_path_buf(),
                source,
            };
            return Outcome::failure(&err);
        }
    }
    let code = if out.status == Status::Converged {
        EXIT_OK
    } else {
        let _ = writeln!(stderr, "error: {}", CliError::NonConvergence(out.status));
        EXIT_NONCONVERGENCE
    };
    Outcome {
        stdout: out.json + "\n",
        stderr,
        code,
    }
}

#[derive(Serialize)]
struct CertifyReportJson {
    support_inclusion: bool,
    sign_consistency: bool,
    same_image: bool,
    orthant: bool,
    pass: bool,
    candidate_source: &'static str,
    candidate: Vec<Box<RawValue>>,
    candidate_support: Vec<usize>,
    vertices: Vec<Vec<Box<RawValue>>>,
    uncovered_vertices: Vec<usize>,
    oracle_objective: Box<RawValue>,
    solver_objective: Option<Box<RawValue>>,
    objective_difference: Option<Box<RawValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

/// Runs the oracle and, unless `oracle_only`, the solver, and checks the
/// candidate against the oracle vertices.
pub fn certify_problem(file: &ProblemFile, oracle_only: bool) -> Result<String, CliError> {
    let (problem, start_x) = file.to_problem()?;
    let oracle = run_oracle(&problem)?;
    let (candidate, source) = if oracle_only {
        (oracle.analytic_center.clone(), "oracle")
    } else {
        let start = start_x
            .map(|x| ipm::start_from_x(&problem, &x))
            .transpose()?;
        let (pt, trace) = ipm::solve(&problem, &SolverConfig::default(), start)?;
        if trace.status != Status::Converged {
            return Err(CliError::NonConvergence(trace.status));
        }
        (pt.x, "solver")
    };

    let (report, note) = match certify_maximal(&candidate, &oracle.vertices, &problem, CERTIFY_TOL)
    {
        Ok(r) => (r, None),
        Err(e @ CertifyError::NotOptimal { .. }) => (
            CertificateReport {
                support_inclusion: false,
                sign_consistency: false,
                same_image: false,
                orthant: false,
                pass: false,
                uncovered_vertices: Vec::new(),
            },
            Some(e.to_string()),
        ),
        Err(e) => return Err(CliError::Parse(e.to_string())),
    };
    let support = d_support(&candidate, problem.d(), CERTIFY_TOL);
    let solver_objective = (!oracle_only).then(|| problem.objective(&candidate));
    let json = CertifyReportJson {
        support_inclusion: report.support_inclusion,
        sign_consistency: report.sign_consistency,
        same_image: report.same_image,
        orthant: report.orthant,
        pass: report.pass,
        candidate_source: source,
        candidate: nums(&candidate),
        candidate_support: support.one_based(),
        vertices: oracle.vertices.iter().map(nums).collect(),
        uncovered_vertices: report.uncovered_vertices.iter().map(|i| i + 1).collect(),
        oracle_objective: num(oracle.optimal_value),
        solver_objective: solver_objective.map(num),
        objective_difference: solver_objective.map(|v| num(v - oracle.optimal_value)),
        note,
    };
    Ok(serde_json::to_string_pretty(&json).expect("report serializes"))
}

/// The `certify` command.
pub fn cmd_certify(path: &Path, oracle_only: bool) -> Outcome {
    match ProblemFile::read(path).and_then(|f| certify_problem(&f, oracle_only)) {
        Ok(json) => Outcome {
            stdout: json + "\n",
            stderr: String::new(),
            code: EXIT_OK,
        },
        Err(e) => Outcome::failure(&e),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "alasso",
    version,
    about = "Analysis-Lasso solver returning the maximal D-support solution"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file and print the result as JSON.
    Solve {
        path: PathBuf,
        /// Stopping tolerance on every residual block.
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        /// Fraction of the maximal step taken each iteration, in (0, 1).
        #[arg(long, default_value_t = 0.95)]
        eta: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        /// Threshold for reading the support of D*x (default scales with ‖D*x‖∞).
        #[arg(long)]
        tol_support: Option<f64>,
        /// Write the per-iteration trace as CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare the solver limit against brute-force vertices of the solution set.
    Certify {
        path: PathBuf,
        /// Certify the oracle's analytic center without running the solver.
        #[arg(long)]
        oracle_only: bool,
    },
}

/// Parses arguments and runs the selected command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code,
                }
            } else {
                Outcome {
                    stdout: text,
                    stderr: String::new(),
                    code,
                }
            };
        }
    };
    match args.command {
        Command::Solve {
            path,
            eps,
            eta,
            max_iters,
            tol_support,
            trace,
        } => {
            let flags = SolveFlags {
                eps,
                eta,
                max_iters,
                tol_support,
            };
            cmd_solve(&path, &flags, trace.as_deref())
        }
        Command::Certify { path, oracle_only } => cmd_certify(&path, oracle_only),
    }
}
