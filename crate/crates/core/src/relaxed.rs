//! The GH, Reg and Sur feasible sets and the relaxed distances over them.
//!
//! The lifted variable is `Z = [Ẑ z; zᵀ 1]` of side `nm + 1`, where `Ẑ` is
//! indexed by flattened pairs `i·m + j` and the last index `L = nm` is the
//! border. Values are normalized by `N = max(n, m)`:
//! `d̃_p = ½ (⟨Γ^(p), Ẑ⟩ / N²)^{1/p}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::assignment::max_weight_assignment;
use crate::distortion::DistortionTensor;
use crate::matching::Matching;
use crate::metric::FiniteMetricSpace;
use crate::sdp::{self, check_feasible, ConicProgram, FeasibilityReport, Functional, SdpError, SdpSolution, SolverConfig, SolverStatus};

/// Entries of `Z` above this magnitude count as support.
pub const TAU_SUPP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxedError {
    #[error("{kind} needs {requirement}, got n = {n}, m = {m}")]
    IncompatibleCardinalities { kind: FeasibleSetKind, requirement: &'static str, n: usize, m: usize },
    #[error("not a correspondence: {0}")]
    NotACorrespondence(String),
    #[error("relation has no rank-one lift with unit marginals: {0}")]
    NotLiftable(String),
    #[error("order p must be finite and at least 1, got {0}")]
    InvalidP(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("solver reported an infeasible program")]
    SolverInfeasible,
    #[error("no feasible threshold found")]
    BisectionExhausted,
    #[error(transparent)]
    Solver(#[from] SdpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FeasibleSetKind {
    GH,
    Reg,
    Sur,
}

impl fmt::Display for FeasibleSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeasibleSetKind::GH => "GH",
            FeasibleSetKind::Reg => "Reg",
            FeasibleSetKind::Sur => "Sur",
        })
    }
}

impl FromStr for FeasibleSetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gh" => Ok(Self::GH),
            "reg" => Ok(Self::Reg),
            "sur" => Ok(Self::Sur),
            other => Err(format!("unknown feasible set `{other}` (expected gh, reg or sur)")),
        }
    }
}

impl FeasibleSetKind {
    pub const ALL: [FeasibleSetKind; 3] = [Self::GH, Self::Reg, Self::Sur];

    pub fn check(self, n: usize, m: usize) -> Result<(), RelaxedError> {
        let requirement = match self {
            Self::GH => return Ok(()),
            Self::Reg if n != m => "n = m",
            Self::Sur if n < m => "n >= m",
            _ => return Ok(()),
        };
        Err(RelaxedError::IncompatibleCardinalities { kind: self, requirement, n, m })
    }
}

/// The order of a relaxed distance; serializes as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order(pub f64);

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }

    fn border(&self) -> usize {
        self.n * self.m
    }
}

/// Constraints of the chosen set (zero objective).
pub fn build_feasible_set(kind: FeasibleSetKind, n: usize, m: usize) -> Result<ConicProgram, RelaxedError> {
    kind.check(n, m)?;
    if n == 0 || m == 0 {
        return Err(RelaxedError::DimensionMismatch("empty space".into()));
    }
    let lay = Layout { n, m };
    let l = lay.border();
    let mut prog = ConicProgram::new(l + 1);
    let (col_marginal_eq, row_marginal_eq, jblock_eq, iblock_eq) = match kind {
        FeasibleSetKind::GH => (false, false, false, false),
        FeasibleSetKind::Reg => (true, true, true, true),
        FeasibleSetKind::Sur => (false, true, false, true),
    };
    let push = |prog: &mut ConicProgram, f: Functional, eq: bool| {
        if eq {
            prog.add_eq(f, 1.0)
        } else {
            prog.add_ge(f, 1.0)
        }
    };

    // Σ_i z_ij and Σ_j z_ij
    for j in 0..m {
        let f = (0..n).fold(Functional::new(), |f, i| f.with(lay.idx(i, j), l, 1.0));
        push(&mut prog, f, col_marginal_eq);
    }
    for i in 0..n {
        let f = (0..m).fold(Functional::new(), |f, j| f.with(lay.idx(i, j), l, 1.0));
        push(&mut prog, f, row_marginal_eq);
    }
    // block sums over (i, i') for each (j, j'), then over (j, j') for each (i, i')
    for j in 0..m {
        for j2 in 0..m {
            let mut f = Functional::new();
            for i in 0..n {
                for i2 in 0..n {
                    f.add(lay.idx(i, j), lay.idx(i2, j2), 1.0);
                }
            }
            push(&mut prog, f, jblock_eq);
        }
    }
    for i in 0..n {
        for i2 in 0..n {
            let mut f = Functional::new();
            for j in 0..m {
                for j2 in 0..m {
                    f.add(lay.idx(i, j), lay.idx(i2, j2), 1.0);
                }
            }
            push(&mut prog, f, iblock_eq);
        }
    }
    // Ẑ1 = N z
    let big_n = n.max(m) as f64;
    for a in 0..l {
        let mut f = Functional::new();
        for b in 0..l {
            f.add(a, b, 1.0);
        }
        f.add(a, l, -big_n);
        prog.add_eq(f, 0.0);
    }
    if kind != FeasibleSetKind::GH {
        let f = (0..=l).fold(Functional::new(), |f, a| f.with(a, a, 1.0));
        prog.add_eq(f, n as f64 + 1.0);
        for i in 0..n {
            for j in 0..m {
                for j2 in (j + 1)..m {
                    prog.add_zero(lay.idx(i, j), lay.idx(i, j2));
                }
            }
        }
    }
    if kind == FeasibleSetKind::Reg {
        for j in 0..m {
            for i in 0..n {
                for i2 in (i + 1)..n {
                    prog.add_zero(lay.idx(i, j), lay.idx(i2, j));
                }
            }
        }
    }
    prog.pin(l, l, 1.0);
    Ok(prog)
}

/// The zero pattern of `prog` as ordered entries, both orientations.
pub fn zero_pattern_entries(prog: &ConicProgram) -> Vec<(usize, usize)> {
    let mut out: Vec<_> = prog.zero_pattern.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Weights `w_ij` of the rank-one lift of a correspondence.
///
/// When `n ≥ m` every `x_i` carries unit mass split evenly over its partners;
/// otherwise every `y_j` does. The total mass is `N = max(n, m)`, which is
/// what `Ẑ1 = N z` forces on a rank-one point. The other side's marginals
/// must still be at least 1, or there is no rank-one feasible point.
pub fn lift_weights(pairs: &[(usize, usize)], n: usize, m: usize) -> Result<Vec<f64>, RelaxedError> {
    let mut present = vec![false; n * m];
    for &(i, j) in pairs {
        if i >= n || j >= m {
            return Err(RelaxedError::NotACorrespondence(format!("pair ({i}, {j}) out of range")));
        }
        present[i * m + j] = true;
    }
    let row_deg: Vec<usize> = (0..n).map(|i| (0..m).filter(|&j| present[i * m + j]).count()).collect();
    let col_deg: Vec<usize> = (0..m).map(|j| (0..n).filter(|&i| present[i * m + j]).count()).collect();
    if let Some(i) = row_deg.iter().position(|&d| d == 0) {
        return Err(RelaxedError::NotACorrespondence(format!("x_{i} is unmatched")));
    }
    if let Some(j) = col_deg.iter().position(|&d| d == 0) {
        return Err(RelaxedError::NotACorrespondence(format!("y_{j} is unmatched")));
    }
    let by_rows = n >= m;
    let w: Vec<f64> = (0..n * m)
        .map(|a| {
            if !present[a] {
                0.0
            } else if by_rows {
                1.0 / row_deg[a / m] as f64
            } else {
                1.0 / col_deg[a % m] as f64
            }
        })
        .collect();
    let slack = 1e-12;
    if by_rows {
        for j in 0..m {
            let s: f64 = (0..n).map(|i| w[i * m + j]).sum();
            if s < 1.0 - slack {
                return Err(RelaxedError::NotLiftable(format!("y_{j} receives mass {s}")));
            }
        }
    } else {
        for i in 0..n {
            let s: f64 = (0..m).map(|j| w[i * m + j]).sum();
            if s < 1.0 - slack {
                return Err(RelaxedError::NotLiftable(format!("x_{i} receives mass {s}")));
            }
        }
    }
    Ok(w)
}

/// Rank-one lift `[wwᵀ w; wᵀ 1]` of a correspondence given as pairs.
pub fn lift_correspondence(pairs: &[(usize, usize)], n: usize, m: usize) -> Result<DMatrix<f64>, RelaxedError> {
    let w = lift_weights(pairs, n, m)?;
    Ok(lift_vector(&w))
}

/// Rank-one lift of the permutation `i ↦ perm[i]`.
pub fn lift_permutation(perm: &[usize]) -> Result<DMatrix<f64>, RelaxedError> {
    let pairs: Vec<_> = perm.iter().copied().enumerate().collect();
    lift_correspondence(&pairs, perm.len(), perm.len())
}

pub(crate) fn lift_vector(w: &[f64]) -> DMatrix<f64> {
    let l = w.len();
    DMatrix::from_fn(l + 1, l + 1, |a, b| {
        let wa = if a == l { 1.0 } else { w[a] };
        let wb = if b == l { 1.0 } else { w[b] };
        wa * wb
    })
}

/// Relaxed distance together with the solver output it came from.
#[derive(Debug, Clone)]
pub struct RelaxedDistanceResult {
    pub value: f64,
    pub p: f64,
    pub kind: FeasibleSetKind,
    pub solution: SdpSolution,
    /// `n × m`, rows indexed by the first argument.
    pub soft_assignment: Vec<Vec<f64>>,
    pub matching: Matching,
    /// Whether `value ≤ d_GH` is guaranteed (only for the GH set).
    pub lower_bound_of: bool,
    /// Optimal threshold `t*` for the max-type distance.
    pub threshold: Option<f64>,
    pub n: usize,
    pub m: usize,
}

/// Serializable digest of a [`RelaxedDistanceResult`].
#[derive(Debug, Clone, Serialize)]
pub struct ResultSummary<'a> {
    pub value: f64,
    pub p: Order,
    pub kind: FeasibleSetKind,
    pub status: SolverStatus,
    pub iterations: usize,
    pub rank: usize,
    pub soft_assignment: &'a [Vec<f64>],
    pub matching: &'a Matching,
    pub residuals: Residuals,
    pub lower_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub families: FeasibilityReport,
}

impl RelaxedDistanceResult {
    pub fn summary(&self) -> ResultSummary<'_> {
        ResultSummary {
            value: self.value,
            p: Order(self.p),
            kind: self.kind,
            status: self.solution.status,
            iterations: self.solution.iterations,
            rank: self.solution.numerical_rank,
            soft_assignment: &self.soft_assignment,
            matching: &self.matching,
            residuals: Residuals {
                primal: self.solution.primal_residual,
                dual: self.solution.dual_residual,
                families: self.solution.report,
            },
            lower_bound: self.lower_bound_of,
        }
    }
}

/// `½ (max(obj, 0) / N²)^{1/p}`.
pub fn normalized_value(objective: f64, n: usize, m: usize, p: f64) -> f64 {
    let big_n = n.max(m) as f64;
    0.5 * (objective.max(0.0) / (big_n * big_n)).powf(1.0 / p)
}

/// Solves a program built by [`build_feasible_set`] on the face that contains
/// all of its feasible points.
///
/// The marginals give `1ᵀz ≥ N`, and PSD together with `Ẑ1 = N z` gives
/// `1ᵀz ≤ N`. Hence `[1; −N]` is in the kernel of every feasible `Z`, so
/// `Z = MᵀẐM` with `M = [I | 1/N]`, and `Z ⪰ 0` iff `Ẑ ⪰ 0`. The full program
/// has no strictly feasible point, and the splitting iteration stalls on
/// some instances. The reduced one is solved over `Ẑ` and the result lifted
/// back. Border bounds are implied by the unit box on `Ẑ` and PSD. A second
/// kernel, from the tight rows of the larger side, is handled by projecting
/// onto the corresponding face of the cone (see [`face_program`]).
fn solve_on_face(prog: &ConicProgram, n: usize, m: usize, cfg: &SolverConfig) -> Result<SdpSolution, RelaxedError> {
    debug_assert_eq!(prog.bounds, Some((0.0, 1.0)));
    let big_n = n.max(m) as f64;
    let face = face_program(prog, n, m);
    let sol = sdp::solve(&face, cfg)?;
    let z = lift_from_face(&sol.z, big_n);
    let report = check_feasible(prog, &z)?;
    let eigenvalues = crate::eigen::symmetric_eigen(&z).map_err(SdpError::from)?.values;
    let lmax = eigenvalues.last().copied().unwrap_or(0.0);
    Ok(SdpSolution {
        objective_value: prog.objective.component_mul(&z).sum(),
        primal_residual: report.max_violation(),
        numerical_rank: eigenvalues.iter().filter(|&&v| v > cfg.tau_rank * lmax).count(),
        eigenvalues,
        report,
        z,
        ..sol
    })
}

fn face_program(prog: &ConicProgram, n: usize, m: usize) -> ConicProgram {
    let l = prog.dim - 1;
    let big_n = n.max(m) as f64;
    // Z_ab in terms of Ẑ
    let expand = |a: usize, b: usize, c: f64, out: &mut BTreeMap<(usize, usize), f64>| {
        let mut put = |i: usize, j: usize, v: f64| *out.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        match (a.min(b), a.max(b)) {
            (i, j) if j < l => put(i, j, c),
            (i, _) if i < l => (0..l).for_each(|d| put(i, d, c / big_n)),
            _ => (0..l).for_each(|i| (0..l).for_each(|d| put(i, d, c / (big_n * big_n)))),
        }
    };
    let to_functional = |terms: BTreeMap<(usize, usize), f64>| {
        let scale = terms.values().fold(0.0_f64, |m, v| m.max(v.abs()));
        terms
            .into_iter()
            .filter(|&(_, v)| v.abs() > 1e-12 * scale)
            .fold(Functional::new(), |f, ((i, j), v)| f.with(i, j, v))
    };
    let reduce = |f: &Functional| {
        let mut out = BTreeMap::new();
        for (a, b, c) in f.terms() {
            expand(a, b, c, &mut out);
        }
        to_functional(out)
    };

    let c = &prog.objective;
    let objective = DMatrix::from_fn(l, l, |a, b| c[(a, b)] + (c[(a, l)] + c[(l, b)]) / big_n + c[(l, l)] / (big_n * big_n));
    let mut face = ConicProgram::new(l).with_objective(objective);
    face.bounds = prog.bounds;
    for row in &prog.eq_constraints {
        let f = reduce(&row.functional);
        if !f.is_empty() || row.rhs != 0.0 {
            face.add_eq(f, row.rhs);
        }
    }
    // On the larger side the marginals have N terms, each ≥ 1, summing to N,
    // and so do the block sums r_iᵀẐr_i' (Σ_i' r_iᵀẐr_i' = r_iᵀẐ1 = N). Both
    // are tight, which puts r_i − r_k in the kernel of Ẑ.
    let row_cells = |i: usize| (0..m).map(move |j| i * m + j);
    let col_cells = |j: usize| (0..n).map(move |i| i * m + j);
    let mut groups: Vec<Vec<Vec<usize>>> = Vec::new();
    if n >= m {
        groups.push((0..n).map(|i| row_cells(i).collect()).collect());
    }
    if m >= n {
        groups.push((0..m).map(|j| col_cells(j).collect()).collect());
    }
    let mut tight = Vec::new();
    let mut kernel = Vec::new();
    for cells in &groups {
        for a in cells {
            tight.push(reduce(&a.iter().fold(Functional::new(), |f, &c| f.with(c, l, 1.0))));
            for b in cells {
                let mut f = Functional::new();
                for &c in a {
                    for &d in b {
                        f.add(c, d, 1.0);
                    }
                }
                tight.push(reduce(&f));
            }
        }
        for a in &cells[1..] {
            let mut v = vec![0.0; l];
            a.iter().for_each(|&c| v[c] += 1.0);
            cells[0].iter().for_each(|&c| v[c] -= 1.0);
            kernel.push(v);
        }
    }
    face.face = complement_basis(&kernel, l);
    for row in &prog.ineq_constraints {
        let f = reduce(&row.functional);
        if row.rhs == 1.0 && tight.contains(&f) {
            face.add_eq(f, 1.0);
        } else {
            face.add_ge(f, row.rhs);
        }
    }
    let fixed = prog.zero_pattern.iter().map(|&e| (e, 0.0)).chain(prog.pinned_entries.iter().map(|(&e, &v)| (e, v)));
    for ((a, b), v) in fixed {
        if b < l {
            if v == 0.0 {
                face.add_zero(a, b);
            } else {
                face.pin(a, b, v);
            }
        } else {
            let mut out = BTreeMap::new();
            expand(a, b, 1.0, &mut out);
            face.add_eq(to_functional(out), v);
        }
    }
    face
}

/// Orthonormal basis of the complement of `span(vectors)` in `R^dim`, or
/// `None` when the span is trivial.
fn complement_basis(vectors: &[Vec<f64>], dim: usize) -> Option<DMatrix<f64>> {
    if vectors.is_empty() {
        return None;
    }
    let k = DMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]);
    let eig = crate::eigen::symmetric_eigen(&(&k * k.transpose())).ok()?;
    let cut = 1e-9 * eig.values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..dim).filter(|&c| eig.values[c] <= cut).collect();
    (keep.len() < dim).then(|| DMatrix::from_fn(dim, keep.len(), |r, c| eig.vectors[(r, keep[c])]))
}

fn lift_from_face(zh: &DMatrix<f64>, big_n: f64) -> DMatrix<f64> {
    let l = zh.nrows();
    let mut z = DMatrix::zeros(l + 1, l + 1);
    z.view_mut((0, 0), (l, l)).copy_from(zh);
    let mut total = 0.0;
    for a in 0..l {
        let row: f64 = zh.row(a).sum();
        z[(a, l)] = row / big_n;
        z[(l, a)] = row / big_n;
        total += row;
    }
    z[(l, l)] = total / (big_n * big_n);
    z
}

fn objective_matrix(gamma: &DistortionTensor) -> DMatrix<f64> {
    let l = gamma.dim();
    let mut c = DMatrix::zeros(l + 1, l + 1);
    for a in 0..l {
        for b in 0..l {
            c[(a, b)] = gamma.get(a, b);
        }
    }
    c
}

/// `d̃_{A,p}(X, Y)`. For `Sur` with `|X| < |Y|` the arguments are swapped
/// internally and the soft assignment is transposed back.
///
/// The entries of `Γ^(p)` span `p` orders of magnitude per decade of
/// distortion, so for large `p` (beyond about 16) the objective near the
/// optimum falls below the solver's feasibility tolerance and the value is
/// not reliable. Since `d̃_{A,p}` is nondecreasing in `p`, a smaller order
/// gives a sound lower bound.
pub fn relaxed_distance(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    kind: FeasibleSetKind,
    p: f64,
    cfg: &SolverConfig,
) -> Result<RelaxedDistanceResult, RelaxedError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(RelaxedError::InvalidP(p));
    }
    if kind == FeasibleSetKind::Sur && x.len() < y.len() {
        return relaxed_distance(y, x, kind, p, cfg).map(|r| swapped(r, x, y));
    }
    let (n, m) = (x.len(), y.len());
    let prog = build_feasible_set(kind, n, m)?.with_objective(objective_matrix(&DistortionTensor::build(x, y, p)));
    let solution = solve_on_face(&prog, n, m, cfg)?;
    if solution.status == SolverStatus::Infeasible {
        return Err(RelaxedError::SolverInfeasible);
    }
    let value = normalized_value(solution.objective_value, n, m, p);
    Ok(finish(x, y, kind, p, value, solution, None))
}

fn finish(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    kind: FeasibleSetKind,
    p: f64,
    value: f64,
    solution: SdpSolution,
    threshold: Option<f64>,
) -> RelaxedDistanceResult {
    let (n, m) = (x.len(), y.len());
    let soft_assignment = round_soft(&solution.z, n, m);
    let matching = round_hard(&soft_assignment, x, y);
    RelaxedDistanceResult {
        value,
        p,
        kind,
        solution,
        soft_assignment,
        matching,
        lower_bound_of: kind == FeasibleSetKind::GH,
        threshold,
        n,
        m,
    }
}

fn swapped(r: RelaxedDistanceResult, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> RelaxedDistanceResult {
    let (n, m) = (x.len(), y.len());
    let soft: Vec<Vec<f64>> = (0..n).map(|i| (0..m).map(|j| r.soft_assignment[j][i]).collect()).collect();
    let matching = round_hard(&soft, x, y);
    RelaxedDistanceResult { soft_assignment: soft, matching, n, m, ..r }
}

/// `d̃_{A,∞}(X, Y)` by bisection over the distinct values of `Γ`.
///
/// A threshold `t` is accepted when the set admits a point supported on
/// `{Γ ≤ t}`. This is decided by minimizing the mass `Σ_{Γ_ab > t} Z_ab` and
/// checking that every such entry is at most [`TAU_SUPP`].
pub fn relaxed_distance_inf(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    kind: FeasibleSetKind,
    cfg: &SolverConfig,
) -> Result<RelaxedDistanceResult, RelaxedError> {
    if kind == FeasibleSetKind::Sur && x.len() < y.len() {
        return relaxed_distance_inf(y, x, kind, cfg).map(|r| swapped(r, x, y));
    }
    let (n, m) = (x.len(), y.len());
    let base = build_feasible_set(kind, n, m)?;
    let gamma = DistortionTensor::build(x, y, f64::INFINITY);
    let mut levels: Vec<f64> = gamma.as_slice().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let l = gamma.dim();
    let attempt = |t: f64| -> Result<(bool, SdpSolution), RelaxedError> {
        let mut c = DMatrix::zeros(l + 1, l + 1);
        for a in 0..l {
            for b in 0..l {
                if gamma.get(a, b) > t {
                    c[(a, b)] = 1.0;
                }
            }
        }
        let prog = base.clone().with_objective(c);
        let sol = solve_on_face(&prog, n, m, cfg)?;
        if sol.status == SolverStatus::Infeasible {
            return Err(RelaxedError::SolverInfeasible);
        }
        let mut worst = 0.0_f64;
        for a in 0..l {
            for b in 0..l {
                if gamma.get(a, b) > t {
                    worst = worst.max(sol.z[(a, b)]);
                }
            }
        }
        Ok((worst <= TAU_SUPP, sol))
    };

    // levels[hi] is always feasible; find the smallest feasible index.
    let mut lo = 0usize;
    let mut hi = levels.len() - 1;
    let mut best: Option<SdpSolution> = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let (ok, sol) = attempt(levels[mid])?;
        if ok {
            hi = mid;
            best = Some(sol);
        } else {
            lo = mid + 1;
        }
    }
    let t = levels[hi];
    // `best`, when set, was solved at the current `hi`.
    let solution = match best {
        Some(sol) => sol,
        None => attempt(t)?.1,
    };
    Ok(finish(x, y, kind, f64::INFINITY, 0.5 * t, solution, Some(t)))
}

/// `Ẑ1 / N` reshaped to `n × m`.
pub fn round_soft(z: &DMatrix<f64>, n: usize, m: usize) -> Vec<Vec<f64>> {
    let l = n * m;
    assert_eq!(z.nrows(), l + 1, "solution has the wrong dimension");
    let big_n = n.max(m) as f64;
    (0..n)
        .map(|i| (0..m).map(|j| (0..l).map(|b| z[(i * m + j, b)]).sum::<f64>() / big_n).collect())
        .collect()
}

/// Hungarian rounding for square inputs, row argmax (lowest index on ties)
/// otherwise.
pub fn round_hard(soft: &[Vec<f64>], x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Matching {
    let map = if x.len() == y.len() {
        max_weight_assignment(soft)
    } else {
        soft.iter().map(|row| argmax(row)).collect()
    };
    Matching::from_map(x, y, &map)
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// The composed matrix `T` for `(X, W)` built from `Z` for `(X, Y)` and `V`
/// for `(Y, W)`, with the quantities of the triangle-inequality argument.
#[derive(Debug, Clone)]
pub struct CompositionCertificate {
    pub t: DMatrix<f64>,
    /// Residuals of `T` in the target set, when the set is defined for `(n, l)`.
    pub feasibility_report: Option<FeasibilityReport>,
    pub objective_t: f64,
    pub objective_z: f64,
    pub objective_v: f64,
    /// `objective_z + objective_v` for `p = 1`; for `p > 1` the Minkowski
    /// bound `(objective_z^{1/p} + objective_v^{1/p})^p`.
    pub objective_sum: f64,
    /// Largest unpowered `Γ_XW` on the support of `T̂`.
    pub support_max_t: f64,
    /// Sum of the support maxima of `Ẑ` and `V̂`.
    pub support_max_sum: f64,
}

fn support_max(gamma: &DistortionTensor, z: &DMatrix<f64>) -> f64 {
    let l = gamma.dim();
    let mut best = 0.0_f64;
    for a in 0..l {
        for b in 0..l {
            if z[(a, b)] > TAU_SUPP {
                best = best.max(gamma.get(a, b));
            }
        }
    }
    best
}

fn frob_block(gamma: &DistortionTensor, z: &DMatrix<f64>) -> f64 {
    let l = gamma.dim();
    let mut s = 0.0;
    for a in 0..l {
        for b in 0..l {
            s += gamma.get(a, b) * z[(a, b)];
        }
    }
    s
}

/// Builds `T̂_{ik,i'k'} = Σ_{j,j'} Ẑ_{ij,i'j'} V̂_{jk,j'k'}` and borders it with
/// `t = T̂1 / N`, the only border compatible with `Ẑ1 = N z` for a PSD
/// completion. `z` and `v` are full lifted matrices.
#[allow(clippy::too_many_arguments)]
pub fn compose_certificate(
    z: &DMatrix<f64>,
    v: &DMatrix<f64>,
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    w: &FiniteMetricSpace,
    kind: FeasibleSetKind,
    p: f64,
) -> Result<CompositionCertificate, RelaxedError> {
    let (n, m, l) = (x.len(), y.len(), w.len());
    if z.nrows() != n * m + 1 || z.ncols() != n * m + 1 {
        return Err(RelaxedError::DimensionMismatch(format!("Z is {}x{}, expected side {}", z.nrows(), z.ncols(), n * m + 1)));
    }
    if v.nrows() != m * l + 1 || v.ncols() != m * l + 1 {
        return Err(RelaxedError::DimensionMismatch(format!("V is {}x{}, expected side {}", v.nrows(), v.ncols(), m * l + 1)));
    }
    let nl = n * l;
    let mut t_hat = DMatrix::zeros(nl, nl);
    for i in 0..n {
        for i2 in 0..n {
            for j in 0..m {
                for j2 in 0..m {
                    let zij = z[(i * m + j, i2 * m + j2)];
                    if zij == 0.0 {
                        continue;
                    }
                    for k in 0..l {
                        for k2 in 0..l {
                            t_hat[(i * l + k, i2 * l + k2)] += zij * v[(j * l + k, j2 * l + k2)];
                        }
                    }
                }
            }
        }
    }
    let big_n = n.max(l) as f64;
    let mut t = DMatrix::zeros(nl + 1, nl + 1);
    let mut total = 0.0;
    for a in 0..nl {
        let mut row = 0.0;
        for b in 0..nl {
            t[(a, b)] = t_hat[(a, b)];
            row += t_hat[(a, b)];
        }
        t[(a, nl)] = row / big_n;
        t[(nl, a)] = row / big_n;
        total += row;
    }
    t[(nl, nl)] = total / (big_n * big_n);

    let feasibility_report = match build_feasible_set(kind, n, l) {
        Ok(prog) => Some(check_feasible(&prog, &t)?),
        Err(RelaxedError::IncompatibleCardinalities { .. }) => None,
        Err(e) => return Err(e),
    };
    let (g_xw, g_xy, g_yw) = (
        DistortionTensor::build(x, w, p),
        DistortionTensor::build(x, y, p),
        DistortionTensor::build(y, w, p),
    );
    let objective_t = frob_block(&g_xw, &t);
    let objective_z = frob_block(&g_xy, z);
    let objective_v = frob_block(&g_yw, v);
    let objective_sum = if p == 1.0 {
        objective_z + objective_v
    } else {
        (objective_z.max(0.0).powf(1.0 / p) + objective_v.max(0.0).powf(1.0 / p)).powf(p)
    };
    let (u_xw, u_xy, u_yw) = (
        DistortionTensor::build(x, w, f64::INFINITY),
        DistortionTensor::build(x, y, f64::INFINITY),
        DistortionTensor::build(y, w, f64::INFINITY),
    );
    Ok(CompositionCertificate {
        support_max_t: support_max(&u_xw, &t),
        support_max_sum: support_max(&u_xy, z) + support_max(&u_yw, v),
        t,
        feasibility_report,
        objective_t,
        objective_z,
        objective_v,
        objective_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_point_cloud(&points.iter().map(|&p| vec![p]).collect::<Vec<_>>()).unwrap()
    }

    fn exact_zero(report: &FeasibilityReport) -> bool {
        report.equality == 0.0
            && report.inequality <= 0.0
            && report.bounds <= 0.0
            && report.zero_pattern == 0.0
            && report.pins == 0.0
            && report.min_eigenvalue > -1e-12
    }

    #[test]
    fn reg_zero_pattern_for_two_points() {
        let prog = build_feasible_set(FeasibleSetKind::Reg, 2, 2).unwrap();
        let entries = zero_pattern_entries(&prog);
        // same i, different j: (0,1),(1,0),(2,3),(3,2); same j, different i: (0,2),(2,0),(1,3),(3,1)
        let same_i: Vec<_> = entries.iter().filter(|&&(a, b)| a / 2 == b / 2).collect();
        let same_j: Vec<_> = entries.iter().filter(|&&(a, b)| a % 2 == b % 2).collect();
        assert_eq!((same_i.len(), same_j.len(), entries.len()), (4, 4, 8));
    }

    #[test]
    fn gh_marginal_rows_use_max_cardinality() {
        let prog = build_feasible_set(FeasibleSetKind::GH, 2, 3).unwrap();
        let rows: Vec<_> = prog.eq_constraints.iter().filter(|c| c.functional.terms().any(|(_, j, c)| j == 6 && c == -3.0)).collect();
        assert_eq!(rows.len(), 6);
        assert!(prog.zero_pattern.is_empty());
    }

    #[test]
    fn cardinality_guards() {
        assert!(matches!(
            build_feasible_set(FeasibleSetKind::Reg, 2, 3),
            Err(RelaxedError::IncompatibleCardinalities { .. })
        ));
        assert!(build_feasible_set(FeasibleSetKind::Sur, 2, 3).is_err());
        assert!(build_feasible_set(FeasibleSetKind::Sur, 3, 2).is_ok());
    }

    #[test]
    fn permutation_lifts_are_exactly_feasible() {
        let perm = [2, 0, 1];
        let z = lift_permutation(&perm).unwrap();
        assert_eq!(z.trace(), 4.0);
        for kind in FeasibleSetKind::ALL {
            let prog = build_feasible_set(kind, 3, 3).unwrap();
            let r = check_feasible(&prog, &z).unwrap();
            assert!(exact_zero(&r), "{kind}: {r:?}");
        }
        let soft = round_soft(&z, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(soft[i][j], (perm[i] == j) as u8 as f64);
            }
        }
    }

    #[test]
    fn relation_lifts() {
        // one point against two: both pairs carry unit mass
        let z = lift_correspondence(&[(0, 0), (0, 1)], 1, 2).unwrap();
        assert_eq!(round_soft(&z, 1, 2), vec![vec![1.0, 1.0]]);
        let prog = build_feasible_set(FeasibleSetKind::GH, 1, 2).unwrap();
        assert!(exact_zero(&check_feasible(&prog, &z).unwrap()));

        // a surjection of three points onto two
        let z = lift_correspondence(&[(0, 0), (1, 0), (2, 1)], 3, 2).unwrap();
        for kind in [FeasibleSetKind::GH, FeasibleSetKind::Sur] {
            let prog = build_feasible_set(kind, 3, 2).unwrap();
            assert!(exact_zero(&check_feasible(&prog, &z).unwrap()), "{kind}");
        }

        assert!(matches!(
            lift_correspondence(&[(0, 0), (0, 1), (1, 1)], 2, 2),
            Err(RelaxedError::NotLiftable(_))
        ));
        assert!(matches!(lift_correspondence(&[(0, 0)], 2, 2), Err(RelaxedError::NotACorrespondence(_))));
    }

    #[test]
    fn hard_rounding_tie_break() {
        let x = line(&[0.0, 1.0]);
        let m = round_hard(&[vec![0.25, 0.25], vec![0.25, 0.25]], &x, &x);
        assert_eq!(m.map(), Some(vec![0, 1]));
        assert_eq!(m.distortion, 0.0);
    }

    #[test]
    fn composing_permutation_lifts() {
        let x = line(&[0.0, 1.0, 3.0]);
        let y = line(&[0.0, 2.0, 2.5]);
        let w = line(&[0.0, 0.7, 4.0]);
        let sigma = [1, 2, 0];
        let tau = [2, 0, 1];
        let z = lift_permutation(&sigma).unwrap();
        let v = lift_permutation(&tau).unwrap();
        let cert = compose_certificate(&z, &v, &x, &y, &w, FeasibleSetKind::Reg, 1.0).unwrap();
        let composed: Vec<usize> = (0..3).map(|i| tau[sigma[i]]).collect();
        let expected = lift_permutation(&composed).unwrap();
        assert_eq!(cert.t, expected);
        assert!(exact_zero(&cert.feasibility_report.unwrap()));
        assert!(cert.objective_t <= cert.objective_sum + 1e-12);
        assert!(cert.support_max_t <= cert.support_max_sum + 1e-12);

        let id = lift_permutation(&[0, 1, 2]).unwrap();
        let cert = compose_certificate(&id, &id, &x, &x, &x, FeasibleSetKind::GH, 2.0).unwrap();
        assert_eq!(cert.t, id);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalized_value(8.0, 2, 2, 1.0), 1.0);
        assert_eq!(normalized_value(-1e-9, 2, 2, 2.0), 0.0);
        assert_eq!(normalized_value(36.0, 2, 3, 2.0), 1.0);
    }

    #[test]
    fn face_holds_every_rank_one_lift() {
        for (kind, n, m) in [(FeasibleSetKind::GH, 2, 3), (FeasibleSetKind::Sur, 3, 2), (FeasibleSetKind::Reg, 3, 3)] {
            let prog = build_feasible_set(kind, n, m).unwrap();
            let face = face_program(&prog, n, m);
            assert_eq!(face.dim, n * m);
            let pairs: Vec<_> = (0..n.max(m)).map(|k| (k % n, k % m)).collect();
            let z = lift_correspondence(&pairs, n, m).unwrap();
            let zh = z.view((0, 0), (n * m, n * m)).into_owned();
            assert!(check_feasible(&face, &zh).unwrap().within(1e-12), "{kind}");
            let v = face.face.as_ref().unwrap();
            assert!((v * (v.transpose() * &zh * v) * v.transpose() - &zh).amax() < 1e-12);
            assert!((lift_from_face(&zh, n.max(m) as f64) - &z).amax() < 1e-12);
        }
    }

    #[test]
    fn face_and_full_programs_agree() {
        let x = line(&[0.0, 1.0, 3.0]);
        let y = line(&[0.0, 2.0]);
        let cfg = SolverConfig::default().with_tol(1e-9);
        let prog = build_feasible_set(FeasibleSetKind::GH, 3, 2)
            .unwrap()
            .with_objective(objective_matrix(&DistortionTensor::build(&x, &y, 1.0)));
        let full = sdp::solve(&prog, &cfg).unwrap();
        let face = solve_on_face(&prog, 3, 2, &cfg).unwrap();
        assert_eq!(face.status, SolverStatus::Optimal);
        assert!((full.objective_value - face.objective_value).abs() < 1e-5 * full.objective_value);
        assert!(face.report.within(1e-8));
    }
}
