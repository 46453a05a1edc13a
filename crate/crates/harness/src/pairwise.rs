//! Distance matrices over collections of spaces.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ghrelax::relaxed::{relaxed_distance, relaxed_distance_inf, FeasibleSetKind};
use ghrelax::{exact_gh, gh_match, FiniteMetricSpace, GhMatchConfig, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Relaxed distance; `p = ∞` selects the max-type distance.
    Sdp { kind: FeasibleSetKind, p: f64 },
    /// GHMatch upper bound (square pairs only).
    GhMatch,
    /// Brute-force Gromov–Hausdorff distance (small pairs only).
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sdp { kind, p } => write!(f, "sdp({kind},{p})"),
            Method::GhMatch => f.write_str("ghmatch"),
            Method::Exact => f.write_str("exact"),
        }
    }
}

/// Parses `sdp`, `ghmatch` or `exact`; the `sdp` kind and order come from
/// separate flags, so this yields `sdp(GH,1)` for `sdp`.
impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sdp" => Ok(Method::Sdp { kind: FeasibleSetKind::GH, p: 1.0 }),
            "ghmatch" | "match" => Ok(Method::GhMatch),
            "exact" => Ok(Method::Exact),
            other => Err(format!("unknown method `{other}` (expected sdp, ghmatch or exact)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairwiseConfig {
    pub method: Method,
    pub solver: SolverConfig,
    pub ghmatch: GhMatchConfig,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl PairwiseConfig {
    pub fn new(method: Method) -> Self {
        Self { method, solver: SolverConfig::default(), ghmatch: GhMatchConfig::default(), jobs: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDiagnostic {
    pub i: usize,
    pub j: usize,
    pub value: Option<f64>,
    pub error: Option<String>,
    /// Solver status or oracle summary.
    pub detail: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceMatrix {
    /// Symmetric with zero diagonal; failed pairs hold `NaN`.
    pub values: Vec<Vec<f64>>,
    /// One record per unordered pair `i < j`, sorted by `(i, j)`.
    pub diagnostics: Vec<PairDiagnostic>,
}

impl DistanceMatrix {
    pub fn failures(&self) -> impl Iterator<Item = &PairDiagnostic> {
        self.diagnostics.iter().filter(|d| d.error.is_some())
    }

    pub fn to_csv(&self, labels: Option<&[String]>) -> String {
        let mut out = String::new();
        if let Some(l) = labels {
            out.push_str(&format!("# labels: {}\n", l.join(",")));
        }
        for row in &self.values {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// One distance and a short solver summary.
pub fn pair_distance(x: &FiniteMetricSpace, y: &FiniteMetricSpace, cfg: &PairwiseConfig) -> Result<(f64, String), String> {
    match cfg.method {
        Method::Sdp { kind, p } => {
            let r = if p.is_infinite() {
                relaxed_distance_inf(x, y, kind, &cfg.solver)
            } else {
                relaxed_distance(x, y, kind, p, &cfg.solver)
            }
            .map_err(|e| e.to_string())?;
            Ok((r.value, format!("{:?} after {} iterations", r.solution.status, r.solution.iterations)))
        }
        Method::GhMatch => {
            let r = gh_match(x, y, &cfg.ghmatch).map_err(|e| e.to_string())?;
            Ok((r.upper_bound, format!("violation {:.1e}, bijective {}", r.constraint_violation, r.bijective)))
        }
        Method::Exact => {
            let r = exact_gh(x, y).map_err(|e| e.to_string())?;
            Ok((r.value, format!("{} relations evaluated", r.enumerated_count)))
        }
    }
}

/// All pairwise distances, each unordered pair computed once. Failures are
/// recorded per pair and do not stop the run.
pub fn pairwise_distance_matrix(spaces: &[FiniteMetricSpace], cfg: &PairwiseConfig) -> DistanceMatrix {
    let n = spaces.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let run = || -> Vec<PairDiagnostic> {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let start = Instant::now();
                let res = pair_distance(&spaces[i], &spaces[j], cfg);
                let seconds = start.elapsed().as_secs_f64();
                match res {
                    Ok((v, detail)) => PairDiagnostic { i, j, value: Some(v), error: None, detail: Some(detail), seconds },
                    Err(e) => PairDiagnostic { i, j, value: None, error: Some(e), detail: None, seconds },
                }
            })
            .collect()
    };
    let diagnostics = match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let mut values = vec![vec![0.0; n]; n];
    for d in &diagnostics {
        let v = d.value.unwrap_or(f64::NAN);
        values[d.i][d.j] = v;
        values[d.j][d.i] = v;
    }
    DistanceMatrix { values, diagnostics }
}
