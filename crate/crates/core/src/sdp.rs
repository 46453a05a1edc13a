//! First-order solver for the lifted programs
//!
//! ```text
//! min ⟨C, Z⟩  s.t.  ⟨A_k, Z⟩ = b_k,  ⟨A_l, Z⟩ ≥ b_l,  lo ≤ Z ≤ hi,
//!                  Z_e = v_e on pinned / zero-pattern entries,  Z ⪰ 0.
//! ```
//!
//! The iteration is a two-block consensus ADMM. One block holds `(X, s)` in
//! the affine set `{A_E X = b_E, A_I X − s = b_I}` with pinned entries fixed;
//! the other holds a PSD copy `Y`, a box copy `W` and a nonnegative slack `t`.
//! The affine projection reuses a pseudo-inverse of the constraint Gram
//! matrix computed once per program, so redundant rows are harmless.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::eigen::{self, EigenError};

/// Environment variable naming a directory for per-solve iterate dumps.
pub const TRACE_ENV: &str = "GHRELAX_SDP_TRACE";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    NumericalBreakdown(#[from] EigenError),
}

/// A linear functional `Z ↦ Σ c·Z[i][j]` on symmetric matrices.
///
/// Terms are stored on the upper triangle; adding `(j, i)` is the same as
/// adding `(i, j)` because `Z` is symmetric.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Functional {
    terms: BTreeMap<(usize, usize), f64>,
}

impl Functional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, i: usize, j: usize, coef: f64) -> &mut Self {
        *self.terms.entry((i.min(j), i.max(j))).or_insert(0.0) += coef;
        self
    }

    pub fn with(mut self, i: usize, j: usize, coef: f64) -> Self {
        self.add(i, j, coef);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.terms.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: &DMatrix<f64>) -> f64 {
        self.terms().map(|(i, j, c)| c * z[(i, j)]).sum()
    }

    fn max_index(&self) -> Option<usize> {
        self.terms.keys().map(|&(_, j)| j).max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub functional: Functional,
    pub rhs: f64,
}

/// `min ⟨C, Z⟩` over the intersection of linear constraints, a box, fixed
/// entries and the PSD cone.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub dim: usize,
    pub objective: DMatrix<f64>,
    pub eq_constraints: Vec<LinearConstraint>,
    /// All inequalities read `⟨A, Z⟩ ≥ rhs`.
    pub ineq_constraints: Vec<LinearConstraint>,
    /// Upper-triangle entries pinned to zero.
    pub zero_pattern: BTreeSet<(usize, usize)>,
    /// Upper-triangle entries pinned to a value.
    pub pinned_entries: BTreeMap<(usize, usize), f64>,
    /// Entrywise bounds, `(0, 1)` for every program built by this crate.
    pub bounds: Option<(f64, f64)>,
    /// Orthonormal columns `V` such that every feasible point is `V W Vᵀ`
    /// with `W ⪰ 0`. The solver then projects onto that face of the cone.
    pub face: Option<DMatrix<f64>>,
}

impl ConicProgram {
    /// An unconstrained-but-PSD program with zero objective and the unit box.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            objective: DMatrix::zeros(dim, dim),
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
            zero_pattern: BTreeSet::new(),
            pinned_entries: BTreeMap::new(),
            bounds: Some((0.0, 1.0)),
            face: None,
        }
    }

    pub fn add_eq(&mut self, functional: Functional, rhs: f64) {
        self.eq_constraints.push(LinearConstraint { functional, rhs });
    }

    pub fn add_ge(&mut self, functional: Functional, rhs: f64) {
        self.ineq_constraints.push(LinearConstraint { functional, rhs });
    }

    pub fn add_zero(&mut self, i: usize, j: usize) {
        self.zero_pattern.insert((i.min(j), i.max(j)));
    }

    pub fn pin(&mut self, i: usize, j: usize, value: f64) {
        self.pinned_entries.insert((i.min(j), i.max(j)), value);
    }

    pub fn with_objective(mut self, c: DMatrix<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let bad = |msg: String| Err(SdpError::Malformed(msg));
        if self.dim == 0 {
            return bad("dimension 0".into());
        }
        if self.objective.nrows() != self.dim || self.objective.ncols() != self.dim {
            return bad(format!("objective is {}x{}", self.objective.nrows(), self.objective.ncols()));
        }
        for i in 0..self.dim {
            for j in 0..i {
                let (a, b) = (self.objective[(i, j)], self.objective[(j, i)]);
                if a != b || !a.is_finite() {
                    return bad(format!("objective not symmetric/finite at ({i}, {j})"));
                }
            }
            if !self.objective[(i, i)].is_finite() {
                return bad(format!("objective not finite at ({i}, {i})"));
            }
        }
        for (kind, rows) in [("equality", &self.eq_constraints), ("inequality", &self.ineq_constraints)] {
            for (k, row) in rows.iter().enumerate() {
                if !row.rhs.is_finite() || row.functional.terms().any(|(_, _, c)| !c.is_finite()) {
                    return bad(format!("{kind} {k} has a non-finite coefficient"));
                }
                if row.functional.max_index().is_some_and(|j| j >= self.dim) {
                    return bad(format!("{kind} {k} indexes outside the matrix"));
                }
            }
        }
        for e in &self.zero_pattern {
            if self.pinned_entries.contains_key(e) {
                return bad(format!("entry {e:?} is both zero-pinned and pinned"));
            }
        }
        let entries = self.zero_pattern.iter().chain(self.pinned_entries.keys());
        if let Some(e) = entries.into_iter().find(|&&(_, j)| j >= self.dim) {
            return bad(format!("fixed entry {e:?} outside the matrix"));
        }
        if self.pinned_entries.values().any(|v| !v.is_finite()) {
            return bad("non-finite pinned value".into());
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo <= hi) {
                return bad(format!("empty box [{lo}, {hi}]"));
            }
        }
        if let Some(v) = &self.face {
            if v.nrows() != self.dim || v.ncols() == 0 || v.ncols() > self.dim {
                return bad(format!("face basis is {}x{}", v.nrows(), v.ncols()));
            }
            let gram = v.transpose() * v - DMatrix::identity(v.ncols(), v.ncols());
            if gram.amax() > 1e-9 {
                return bad("face basis is not orthonormal".into());
            }
        }
        Ok(())
    }

    fn fixed_entries(&self) -> BTreeMap<(usize, usize), f64> {
        let mut fixed: BTreeMap<_, _> = self.zero_pattern.iter().map(|&e| (e, 0.0)).collect();
        fixed.extend(self.pinned_entries.iter().map(|(&e, &v)| (e, v)));
        fixed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolverStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub adaptive_rho: bool,
    pub tau_rank: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub alpha: f64,
    /// Directory for iterate dumps; falls back to `GHRELAX_SDP_TRACE`.
    pub trace_dir: Option<PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 50_000,
            rho: 1.0,
            adaptive_rho: true,
            tau_rank: 1e-6,
            alpha: 1.6,
            trace_dir: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let bad = |m: &str| Err(SdpError::BadConfig(m.into()));
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad("alpha must lie in (0, 2)");
        }
        if !(self.tau_rank >= 0.0) {
            return bad("tau_rank must be nonnegative");
        }
        Ok(())
    }
}

/// Worst violation per constraint family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub equality: f64,
    pub inequality: f64,
    pub bounds: f64,
    pub zero_pattern: f64,
    pub pins: f64,
    pub min_eigenvalue: f64,
}

impl FeasibilityReport {
    /// Largest violation over every family, counting a negative eigenvalue as
    /// a violation of its magnitude.
    pub fn max_violation(&self) -> f64 {
        self.linear_violation().max(-self.min_eigenvalue)
    }

    fn linear_violation(&self) -> f64 {
        self.equality.max(self.inequality).max(self.bounds).max(self.zero_pattern).max(self.pins)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub z: DMatrix<f64>,
    pub objective_value: f64,
    /// Equals `report.max_violation()`.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Spectrum of `z`, ascending.
    pub eigenvalues: Vec<f64>,
    pub numerical_rank: usize,
    pub report: FeasibilityReport,
    pub rho: f64,
}

/// Per-family worst violations of `z` against `prog`. Compare against a
/// tolerance with [`FeasibilityReport::within`].
pub fn check_feasible(prog: &ConicProgram, z: &DMatrix<f64>) -> Result<FeasibilityReport, SdpError> {
    if z.nrows() != prog.dim || z.ncols() != prog.dim {
        return Err(SdpError::Malformed(format!(
            "matrix is {}x{}, program has dimension {}",
            z.nrows(),
            z.ncols(),
            prog.dim
        )));
    }
    let mut report = linear_report(prog, z);
    report.min_eigenvalue = eigen::min_eigenvalue(&symmetrized_copy(z))?;
    Ok(report)
}

fn symmetrized_copy(z: &DMatrix<f64>) -> DMatrix<f64> {
    (z + z.transpose()) * 0.5
}

fn linear_report(prog: &ConicProgram, z: &DMatrix<f64>) -> FeasibilityReport {
    let mut r = FeasibilityReport::default();
    for c in &prog.eq_constraints {
        r.equality = r.equality.max((c.functional.eval(z) - c.rhs).abs());
    }
    for c in &prog.ineq_constraints {
        r.inequality = r.inequality.max(c.rhs - c.functional.eval(z));
    }
    if let Some((lo, hi)) = prog.bounds {
        for &v in z.iter() {
            r.bounds = r.bounds.max(lo - v).max(v - hi);
        }
    }
    for &(i, j) in &prog.zero_pattern {
        r.zero_pattern = r.zero_pattern.max(z[(i, j)].abs()).max(z[(j, i)].abs());
    }
    for (&(i, j), &v) in &prog.pinned_entries {
        r.pins = r.pins.max((z[(i, j)] - v).abs()).max((z[(j, i)] - v).abs());
    }
    r
}

/// One constraint row after moving fixed entries to the right-hand side and
/// scaling to unit Frobenius norm.
struct Row {
    terms: Vec<(usize, usize, f64)>,
    rhs: f64,
    slack: Option<usize>,
}

struct Prepared {
    rows: Vec<Row>,
    n_slack: usize,
    kinv: DMatrix<f64>,
    fixed: Vec<(usize, usize, f64)>,
}

fn frob_weight(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.5
    }
}

enum Setup {
    Ready(Prepared),
    Inconsistent,
}

fn prepare(prog: &ConicProgram) -> Result<Setup, SdpError> {
    let fixed = prog.fixed_entries();
    let mut rows = Vec::new();
    let mut n_slack = 0;
    let all = prog.eq_constraints.iter().map(|c| (c, false)).chain(prog.ineq_constraints.iter().map(|c| (c, true)));
    for (c, is_ineq) in all {
        let mut rhs = c.rhs;
        let mut terms = Vec::with_capacity(c.functional.len());
        for (i, j, coef) in c.functional.terms() {
            match fixed.get(&(i, j)) {
                Some(v) => rhs -= coef * v,
                None if coef != 0.0 => terms.push((i, j, coef)),
                None => {}
            }
        }
        let norm = terms.iter().map(|&(i, j, c)| frob_weight(i, j) * c * c).sum::<f64>().sqrt();
        let scale_tol = 1e-12 * (1.0 + c.rhs.abs());
        if norm == 0.0 {
            let violated = if is_ineq { rhs > scale_tol } else { rhs.abs() > scale_tol };
            if violated {
                return Ok(Setup::Inconsistent);
            }
            continue;
        }
        for t in &mut terms {
            t.2 /= norm;
        }
        let slack = is_ineq.then(|| {
            n_slack += 1;
            n_slack - 1
        });
        rows.push(Row { terms, rhs: rhs / norm, slack });
    }

    let k = rows.len();
    let mut by_entry: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
    for (r, row) in rows.iter().enumerate() {
        for &(i, j, c) in &row.terms {
            by_entry.entry((i, j)).or_default().push((r, c));
        }
    }
    let mut kmat = DMatrix::zeros(k, k);
    for (&(i, j), list) in &by_entry {
        let w = 0.5 * frob_weight(i, j);
        for &(a, ca) in list {
            for &(b, cb) in list {
                kmat[(a, b)] += w * ca * cb;
            }
        }
    }
    for (r, row) in rows.iter().enumerate() {
        if row.slack.is_some() {
            kmat[(r, r)] += 1.0;
        }
    }
    let kinv = pseudo_inverse(&kmat)?;
    let fixed = fixed.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    let prepared = Prepared { rows, n_slack, kinv, fixed };

    // The affine set is empty iff projecting the origin leaves a residual.
    let mut x = DMatrix::zeros(prog.dim, prog.dim);
    let q = vec![0.0; prepared.n_slack];
    let mut s = vec![0.0; prepared.n_slack];
    let mut nu = vec![0.0; k];
    prepared.affine_project(&mut x, &q, &mut s, &mut nu);
    let worst = prepared.rows.iter().fold(0.0_f64, |w, row| {
        let mut v: f64 = row.terms.iter().map(|&(i, j, c)| c * x[(i, j)]).sum();
        if let Some(si) = row.slack {
            v -= s[si];
        }
        w.max((v - row.rhs).abs() / (1.0 + row.rhs.abs()))
    });
    if worst > 1e-8 {
        return Ok(Setup::Inconsistent);
    }
    Ok(Setup::Ready(prepared))
}

fn pseudo_inverse(k: &DMatrix<f64>) -> Result<DMatrix<f64>, SdpError> {
    let n = k.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let e = eigen::symmetric_eigen(k)?;
    let lmax = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = lmax * 1e-10 * n as f64;
    let mut scaled = e.vectors.clone();
    for (c, mut col) in scaled.column_iter_mut().enumerate() {
        let l = e.values[c];
        col *= if l > cut { 1.0 / l } else { 0.0 };
    }
    Ok(scaled * e.vectors.transpose())
}

impl Prepared {
    /// Projects `(M, q)` onto the affine set in the metric `‖X‖² + ½‖s‖²`,
    /// overwriting `m` with `X` and filling `s`.
    fn affine_project(&self, m: &mut DMatrix<f64>, q: &[f64], s: &mut [f64], nu: &mut [f64]) {
        for &(i, j, v) in &self.fixed {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        let residual: Vec<f64> = self
            .rows
            .iter()
            .map(|row| {
                let am: f64 = row.terms.iter().map(|&(i, j, c)| c * m[(i, j)]).sum();
                row.rhs - am + row.slack.map_or(0.0, |si| q[si])
            })
            .collect();
        for (r, out) in nu.iter_mut().enumerate() {
            *out = self.kinv.column(r).dot(&nalgebra::DVectorView::from_slice(&residual, residual.len()));
        }
        for (row, &v) in self.rows.iter().zip(nu.iter()) {
            if v == 0.0 {
                continue;
            }
            for &(i, j, c) in &row.terms {
                if i == j {
                    m[(i, i)] += 0.5 * v * c;
                } else {
                    let d = 0.25 * v * c;
                    m[(i, j)] += d;
                    m[(j, i)] += d;
                }
            }
            if let Some(si) = row.slack {
                s[si] = q[si] - v;
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if let (Some(si), 0.0) = (row.slack, nu[r]) {
                s[si] = q[si];
            }
        }
    }
}

static TRACE_COUNTER: AtomicUsize = AtomicUsize::new(0);

struct Trace {
    buf: String,
    path: PathBuf,
}

impl Trace {
    fn open(cfg: &SolverConfig) -> Option<Self> {
        let dir = cfg.trace_dir.clone().or_else(|| std::env::var_os(TRACE_ENV).map(PathBuf::from))?;
        let k = TRACE_COUNTER.fetch_add(1, Ordering::Relaxed);
        let path = dir.join(format!("sdp_{}_{k:05}.csv", std::process::id()));
        Some(Self { buf: "iteration,objective,primal,dual,rho,consensus\n".into(), path })
    }

    fn record(&mut self, it: usize, obj: f64, primal: f64, dual: f64, rho: f64, consensus: f64) {
        let _ = writeln!(self.buf, "{it},{obj:e},{primal:e},{dual:e},{rho:e},{consensus:e}");
    }

    fn flush(self) {
        let res = std::fs::create_dir_all(self.path.parent().unwrap_or(std::path::Path::new(".")))
            .and_then(|_| std::fs::File::create(&self.path))
            .and_then(|mut f| f.write_all(self.buf.as_bytes()));
        if let Err(e) = res {
            eprintln!("warning: could not write SDP trace {}: {e}", self.path.display());
        }
    }
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn infeasible_solution(prog: &ConicProgram, iterations: usize, rho: f64) -> SdpSolution {
    let z = DMatrix::zeros(prog.dim, prog.dim);
    let mut report = linear_report(prog, &z);
    report.min_eigenvalue = 0.0;
    SdpSolution {
        z,
        objective_value: f64::INFINITY,
        primal_residual: report.max_violation(),
        dual_residual: f64::INFINITY,
        iterations,
        status: SolverStatus::Infeasible,
        eigenvalues: vec![0.0; prog.dim],
        numerical_rank: 0,
        report,
        rho,
    }
}

/// Solves `prog`. Deterministic for a fixed program and configuration.
pub fn solve(prog: &ConicProgram, cfg: &SolverConfig) -> Result<SdpSolution, SdpError> {
    prog.validate()?;
    cfg.validate()?;
    let prepared = match prepare(prog)? {
        Setup::Ready(p) => p,
        Setup::Inconsistent => return Ok(infeasible_solution(prog, 0, cfg.rho)),
    };
    let dim = prog.dim;
    let cmax = prog.objective.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let c = if cmax > 0.0 { &prog.objective / cmax } else { prog.objective.clone() };
    let (lo, hi) = prog.bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let k = prepared.rows.len();
    let ns = prepared.n_slack;
    let alpha = cfg.alpha;

    let mut rho = cfg.rho;
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    let mut y = DMatrix::<f64>::zeros(dim, dim);
    let mut w = DMatrix::<f64>::zeros(dim, dim);
    let mut u = DMatrix::<f64>::zeros(dim, dim);
    let mut v = DMatrix::<f64>::zeros(dim, dim);
    let mut s = vec![0.0; ns];
    let mut t = vec![0.0; ns];
    let mut ut = vec![0.0; ns];
    let mut q = vec![0.0; ns];
    let mut nu = vec![0.0; k];
    let mut spectrum = vec![0.0; dim];
    let mut trace = Trace::open(cfg);

    let mut status = SolverStatus::MaxIter;
    let mut iterations = 0;
    let mut dual_res = f64::INFINITY;
    let mut report = FeasibilityReport::default();
    let mut best_primal = f64::INFINITY;
    let mut best_at = 0usize;
    let mut dual_norm_at_best = 0.0;
    const CHECK_EVERY: usize = 10;

    for it in 1..=cfg.max_iter {
        iterations = it;
        // (X, s) step
        let inv2rho = 0.5 / rho;
        for ((((xm, ym), um), wm), (vm, cm)) in x
            .iter_mut()
            .zip(y.iter())
            .zip(u.iter())
            .zip(w.iter())
            .zip(v.iter().zip(c.iter()))
        {
            *xm = 0.5 * ((ym - um) + (wm - vm)) - inv2rho * cm;
        }
        for i in 0..ns {
            q[i] = t[i] - ut[i];
        }
        prepared.affine_project(&mut x, &q, &mut s, &mut nu);

        // (Y, W, t) step with over-relaxation
        let y_old = y.clone();
        let w_old = w.clone();
        let t_old = t.clone();
        let mut arg = DMatrix::zeros(dim, dim);
        for (((a, xm), yo), um) in arg.iter_mut().zip(x.iter()).zip(y_old.iter()).zip(u.iter()) {
            *a = alpha * xm + (1.0 - alpha) * yo + um;
        }
        let (proj, lam) = match &prog.face {
            Some(v) => {
                let (w, lam) = eigen::project_psd_with_spectrum(&(v.transpose() * &arg * v))?;
                (v * w * v.transpose(), lam)
            }
            None => eigen::project_psd_with_spectrum(&arg)?,
        };
        y = proj;
        for (sp, l) in spectrum.iter_mut().zip(&lam) {
            *sp = l.max(0.0);
        }
        for ((um, a), ym) in u.iter_mut().zip(arg.iter()).zip(y.iter()) {
            *um = a - ym;
        }
        for (((wm, xm), vm), wo) in w.iter_mut().zip(x.iter()).zip(v.iter_mut()).zip(w_old.iter()) {
            let xh = alpha * xm + (1.0 - alpha) * wo;
            let target = xh + *vm;
            *wm = target.clamp(lo, hi);
            *vm = target - *wm;
        }
        for &(i, j, val) in &prepared.fixed {
            for (a, b) in [(i, j), (j, i)] {
                let target = v[(a, b)] + w[(a, b)];
                w[(a, b)] = val;
                v[(a, b)] = target - val;
            }
        }
        for i in 0..ns {
            let sh = alpha * s[i] + (1.0 - alpha) * t_old[i];
            let target = sh + ut[i];
            t[i] = target.max(0.0);
            ut[i] = target - t[i];
        }

        if it % CHECK_EVERY == 0 || it == cfg.max_iter {
            let mut pr2 = 0.0;
            let mut dr2 = 0.0;
            let mut dual_var2 = 0.0;
            for idx in 0..dim * dim {
                let (xv, yv, wv) = (x[idx], y[idx], w[idx]);
                pr2 += (xv - yv).powi(2) + (xv - wv).powi(2);
                dr2 += ((yv - y_old[idx]) + (wv - w_old[idx])).powi(2);
                dual_var2 += (u[idx] + v[idx]).powi(2);
            }
            for i in 0..ns {
                pr2 += (s[i] - t[i]).powi(2);
                dr2 += (t[i] - t_old[i]).powi(2);
                dual_var2 += ut[i] * ut[i];
            }
            let scale = 1.0 + x.norm().max(y.norm()).max(w.norm());
            let primal_int = pr2.sqrt() / scale;
            dual_res = rho * dr2.sqrt() / (1.0 + rho * dual_var2.sqrt());

            report = linear_report(prog, &y);
            report.min_eigenvalue = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
            let primal = report.max_violation();
            if let Some(tr) = trace.as_mut() {
                tr.record(it, frob_dot(&prog.objective, &y), primal, dual_res, rho, primal_int);
            }
            if primal <= cfg.tol && dual_res <= cfg.tol {
                status = SolverStatus::Optimal;
                break;
            }

            // stagnation heuristic for infeasible programs
            let dual_norm = rho * dual_var2.sqrt();
            if primal_int < 0.9 * best_primal {
                best_primal = primal_int;
                best_at = it;
                dual_norm_at_best = dual_norm;
            } else if it >= 2000 && it - best_at >= 2000 && primal_int > 1e-3 && dual_norm > 2.0 * dual_norm_at_best {
                status = SolverStatus::Infeasible;
                break;
            }

            if cfg.adaptive_rho && primal > 0.0 && dual_res > 0.0 {
                let factor = if primal > 10.0 * dual_res {
                    2.0
                } else if dual_res > 10.0 * primal {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    rho *= factor;
                    u /= factor;
                    v /= factor;
                    for z in ut.iter_mut() {
                        *z /= factor;
                    }
                }
            }
        }
    }
    if let Some(tr) = trace {
        tr.flush();
    }

    let mut eigenvalues = spectrum;
    eigenvalues.sort_by(f64::total_cmp);
    let lmax = eigenvalues.last().copied().unwrap_or(0.0);
    let numerical_rank = eigenvalues.iter().filter(|&&l| l > cfg.tau_rank * lmax).count();
    Ok(SdpSolution {
        objective_value: frob_dot(&prog.objective, &y),
        z: y,
        primal_residual: report.max_violation(),
        dual_residual: dual_res,
        iterations,
        status,
        eigenvalues,
        numerical_rank,
        report,
        rho,
    })
}
