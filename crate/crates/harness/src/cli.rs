//! The `ghrelax` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghrelax::ghmatch::GhMatchError;
use ghrelax::metric::{parse_graph, write_distance_csv, GraphMetricMode};
use ghrelax::oracle::OracleError;
use ghrelax::relaxed::{compose_certificate, relaxed_distance, relaxed_distance_inf, FeasibleSetKind, RelaxedError};
use ghrelax::sdp::SdpError;
use ghrelax::{exact_gh, exact_gh_bijective, gh_match, FiniteMetricSpace, GhMatchConfig, SolverConfig, SolverStatus};
use serde::Serialize;

use crate::classify::nearest_neighbor_classify;
use crate::input::{load_dir, load_space, parse_labels, parse_matrix, read_text, InputError};
use crate::mesh::{mesh_geodesic_metric, sample_vertices, MeshGraph, SampleMode};
use crate::pairwise::{pairwise_distance_matrix, Method, PairwiseConfig};
use crate::synthetic::{synthetic_benchmark, SyntheticConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ghrelax", version, about = "Relaxations, upper bounds and exact values of the Gromov-Hausdorff distance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for pairwise jobs (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Write the main result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Skip the triangle-inequality check on distance-matrix inputs.
    #[arg(long, global = true)]
    pub no_validate: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Gh,
    Reg,
    Sur,
}

impl From<KindArg> for FeasibleSetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gh => FeasibleSetKind::GH,
            KindArg::Reg => FeasibleSetKind::Reg,
            KindArg::Sur => FeasibleSetKind::Sur,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Sdp,
    Ghmatch,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Random,
    Farthest,
}

fn parse_order(s: &str) -> Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    let p: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if p >= 1.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(format!("order must be at least 1 or `inf`, got {s}"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SdpArgs {
    #[arg(long, value_enum, default_value = "gh")]
    pub kind: KindArg,
    /// Order of the relaxed distance: a number ≥ 1 or `inf`.
    #[arg(long, default_value = "1", value_parser = parse_order)]
    pub p: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    /// Dump solver iterates as CSV into this directory.
    #[arg(long)]
    pub trace_dir: Option<PathBuf>,
}

impl SdpArgs {
    fn solver(&self) -> SolverConfig {
        SolverConfig { max_iter: self.max_iter, trace_dir: self.trace_dir.clone(), ..SolverConfig::default().with_tol(self.tol) }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    #[arg(long, default_value_t = 5.0)]
    pub sigma0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 12)]
    pub outer_iters: usize,
}

impl MatchArgs {
    fn config(&self, p: f64) -> GhMatchConfig {
        GhMatchConfig { sigma0: self.sigma0, mu: self.mu, outer_iters: self.outer_iters, p, ..GhMatchConfig::default() }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relaxed distance between two spaces.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        sdp: SdpArgs,
    },
    /// Distance matrix over every space in a directory (CSV output).
    Matrix {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "sdp")]
        method: MethodArg,
        #[command(flatten)]
        sdp: SdpArgs,
        #[command(flatten)]
        matching: MatchArgs,
        /// Per-pair diagnostics as JSON.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// GHMatch upper bound and matching between two spaces of equal size.
    Match {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        matching: MatchArgs,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Per-outer-iteration CSV (iteration, objective, violation, sparsity).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Exact Gromov-Hausdorff distance by enumeration (small inputs).
    Exact { a: PathBuf, b: PathBuf },
    /// Nearest-neighbour classification from a distance matrix.
    Classify {
        matrix: PathBuf,
        /// One label per line; defaults to the matrix's `# labels:` line.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Graph file to distance-matrix CSV (1 on edges, K elsewhere).
    Graph2m {
        graph: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Accept any K > 0, even when the result is not a metric.
        #[arg(long)]
        literal: bool,
    },
    /// Geodesic distance matrix of vertices sampled from an OFF mesh.
    Mesh {
        mesh: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value = "random")]
        mode: ModeArg,
    },
    /// Composition certificate for three spaces of equal size.
    Certify {
        a: PathBuf,
        b: PathBuf,
        c: PathBuf,
        #[command(flatten)]
        sdp: SdpArgs,
    },
    /// Writes a labelled benchmark of near-isometric classes: `DIR/spaces/*.csv`
    /// and `DIR/labels.txt`.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 6)]
        per_class: usize,
        #[arg(long, default_value_t = 8)]
        points: usize,
        #[arg(long, default_value_t = 0.4)]
        noise: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Solver(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RelaxedError> for CliError {
    fn from(e: RelaxedError) -> Self {
        match e {
            RelaxedError::Solver(SdpError::BadConfig(m)) => CliError::Usage(m),
            RelaxedError::SolverInfeasible | RelaxedError::BisectionExhausted | RelaxedError::Solver(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GhMatchError> for CliError {
    fn from(e: GhMatchError) -> Self {
        match e {
            GhMatchError::BadConfig(m) => CliError::Usage(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable result");
    s.push('\n');
    s
}

fn load(cli: &Cli, path: &Path) -> Result<FiniteMetricSpace, CliError> {
    Ok(load_space(path, !cli.no_validate)?)
}

fn warn_status(status: SolverStatus, iterations: usize) {
    if status != SolverStatus::Optimal {
        eprintln!("warning: solver stopped with status {status:?} after {iterations} iterations");
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Dist { a, b, sdp } => {
            let (x, y) = (load(cli, a)?, load(cli, b)?);
            let kind = sdp.kind.into();
            let r = if sdp.p.is_infinite() {
                relaxed_distance_inf(&x, &y, kind, &sdp.solver())?
            } else {
                relaxed_distance(&x, &y, kind, sdp.p, &sdp.solver())?
            };
            warn_status(r.solution.status, r.solution.iterations);
            emit(cli, &json(&r.summary()))
        }
        Command::Matrix { dir, method, sdp, matching, diagnostics } => {
            let named = load_dir(dir, !cli.no_validate)?;
            let (names, spaces): (Vec<String>, Vec<FiniteMetricSpace>) = named.into_iter().unzip();
            let method = match method {
                MethodArg::Sdp => Method::Sdp { kind: sdp.kind.into(), p: sdp.p },
                MethodArg::Ghmatch => Method::GhMatch,
                MethodArg::Exact => Method::Exact,
            };
            let cfg = PairwiseConfig { method, solver: sdp.solver(), ghmatch: matching.config(1.0), jobs: cli.jobs };
            let m = pairwise_distance_matrix(&spaces, &cfg);
            for f in m.failures() {
                eprintln!("warning: pair ({}, {}) failed: {}", names[f.i], names[f.j], f.error.as_deref().unwrap_or(""));
            }
            if let Some(path) = diagnostics {
                write_file(path, &json(&m.diagnostics))?;
            }
            emit(cli, &m.to_csv(Some(&names)))
        }
        Command::Match { a, b, matching, p, trajectory } => {
            let (x, y) = (load(cli, a)?, load(cli, b)?);
            let r = gh_match(&x, &y, &matching.config(*p))?;
            if let Some(path) = trajectory {
                let mut csv = String::from("iteration,objective,violation,sparsity\n");
                for t in &r.trajectory {
                    csv.push_str(&format!("{},{},{},{}\n", t.iteration, t.objective, t.violation, t.sparsity));
                }
                write_file(path, &csv)?;
            }
            #[derive(Serialize)]
            struct Out<'a> {
                map: Vec<usize>,
                pairs: &'a [(usize, usize)],
                raw_map: &'a [usize],
                bijective: bool,
                upper_bound: f64,
                p_mean_value: f64,
                constraint_violation: f64,
                sparsity: f64,
                inner_stalls: usize,
            }
            let out = Out {
                map: r.matching.map().unwrap_or_default(),
                pairs: &r.matching.pairs,
                raw_map: &r.raw_map,
                bijective: r.bijective,
                upper_bound: r.upper_bound,
                p_mean_value: r.p_mean_value,
                constraint_violation: r.constraint_violation,
                sparsity: r.sparsity,
                inner_stalls: r.inner_stalls,
            };
            emit(cli, &json(&out))
        }
        Command::Exact { a, b } => {
            let (x, y) = (load(cli, a)?, load(cli, b)?);
            let r = exact_gh(&x, &y)?;
            let bijective = if x.len() == y.len() { exact_gh_bijective(&x, &y).ok() } else { None };
            #[derive(Serialize)]
            struct Out {
                value: f64,
                argmin: Vec<(usize, usize)>,
                enumerated_count: u64,
                bijective: Option<ghrelax::OracleResult>,
            }
            emit(cli, &json(&Out { value: r.value, argmin: r.argmin, enumerated_count: r.enumerated_count, bijective }))
        }
        Command::Classify { matrix, labels } => {
            let (values, inline) = parse_matrix(&read_text(matrix)?)?;
            let labels = match labels {
                Some(path) => parse_labels(&read_text(path)?),
                None => inline.ok_or_else(|| CliError::Input("no --labels file and no `# labels:` line in the matrix".into()))?,
            };
            let report = nearest_neighbor_classify(&values, &labels).map_err(|e| CliError::Input(e.to_string()))?;
            emit(cli, &json(&report))
        }
        Command::Graph2m { graph, k, literal } => {
            let g = parse_graph(&read_text(graph)?).map_err(|e| CliError::Input(format!("{}: {e}", graph.display())))?;
            let mode = if *literal { GraphMetricMode::Literal } else { GraphMetricMode::Strict };
            let space = g.to_metric(*k, mode).map_err(|e| CliError::Input(e.to_string()))?;
            emit(cli, &write_distance_csv(&space))
        }
        Command::Mesh { mesh, count, mode } => {
            let m = MeshGraph::parse_off(&read_text(mesh)?).map_err(|e| CliError::Input(format!("{}: {e}", mesh.display())))?;
            let mode = match mode {
                ModeArg::Random => SampleMode::Random,
                ModeArg::Farthest => SampleMode::FarthestPoint,
            };
            let sample = sample_vertices(&m, *count, mode, cli.seed).map_err(|e| CliError::Input(e.to_string()))?;
            let space = mesh_geodesic_metric(&m, &sample).map_err(|e| CliError::Input(e.to_string()))?;
            let labels = sample.iter().map(|v| format!("v{v}")).collect();
            let space = space.with_labels(labels).map_err(|e| CliError::Input(e.to_string()))?;
            emit(cli, &write_distance_csv(&space))
        }
        Command::Certify { a, b, c, sdp } => {
            let (x, y, w) = (load(cli, a)?, load(cli, b)?, load(cli, c)?);
            if sdp.p.is_infinite() {
                return Err(CliError::Usage("certify needs a finite --p".into()));
            }
            let kind: FeasibleSetKind = sdp.kind.into();
            let cfg = sdp.solver();
            let xy = relaxed_distance(&x, &y, kind, sdp.p, &cfg)?;
            let yw = relaxed_distance(&y, &w, kind, sdp.p, &cfg)?;
            let xw = relaxed_distance(&x, &w, kind, sdp.p, &cfg)?;
            let cert = compose_certificate(&xy.solution.z, &yw.solution.z, &x, &y, &w, kind, sdp.p)?;
            #[derive(Serialize)]
            struct Out {
                kind: String,
                p: f64,
                d_xy: f64,
                d_yw: f64,
                d_xw: f64,
                triangle_slack: f64,
                objective_t: f64,
                objective_sum: f64,
                certificate_holds: bool,
                t_max_violation: Option<f64>,
                support_max_t: f64,
                support_max_sum: f64,
            }
            let out = Out {
                kind: kind.to_string(),
                p: sdp.p,
                d_xy: xy.value,
                d_yw: yw.value,
                d_xw: xw.value,
                triangle_slack: xy.value + yw.value - xw.value,
                objective_t: cert.objective_t,
                objective_sum: cert.objective_sum,
                certificate_holds: cert.objective_t <= cert.objective_sum + 10.0 * sdp.tol,
                t_max_violation: cert.feasibility_report.as_ref().map(|r| r.max_violation()),
                support_max_t: cert.support_max_t,
                support_max_sum: cert.support_max_sum,
            };
            emit(cli, &json(&out))
        }
        Command::Synth { dir, classes, per_class, points, noise } => {
            let cfg = SyntheticConfig {
                classes: *classes,
                per_class: *per_class,
                points: *points,
                noise: *noise,
                seed: cli.seed,
                ..SyntheticConfig::default()
            };
            let bench = synthetic_benchmark(&cfg);
            let spaces_dir = dir.join("spaces");
            std::fs::create_dir_all(&spaces_dir).map_err(|e| CliError::Input(format!("{}: {e}", spaces_dir.display())))?;
            for (k, space) in bench.spaces.iter().enumerate() {
                write_file(&spaces_dir.join(format!("space{k:03}.csv")), &write_distance_csv(space))?;
            }
            let labels = bench.labels.join("\n") + "\n";
            write_file(&dir.join("labels.txt"), &labels)?;
            emit(cli, &format!("wrote {} spaces to {}\n", bench.spaces.len(), dir.display()))
        }
    }
}
