//! A small nonlinear-program interface and a self-contained solver sized for
//! desk-scale collocation instances (hundreds of variables and constraints).
//!
//! The solver runs an augmented-Lagrangian outer loop (Powell-Hestenes-
//! Rockafellar multipliers for `c_in(x) >= 0`, quadratic penalty for
//! `c_eq(x) = 0`) around a limited-memory quasi-Newton inner minimizer with
//! gradient projection onto variable bounds and a strong-Wolfe line search.
//! All derivatives come from the problem callbacks; nothing is
//! finite-differenced internally outside [`check_gradients`]. There are no
//! randomized components, so identical inputs produce identical iterates.

use std::collections::VecDeque;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Sparse Jacobian in triplet form; duplicate entries sum.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl Jacobian {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols, triplets: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.triplets.push((row, col, value));
    }

    /// `out += J^T w`
    pub fn transpose_mul_acc(&self, w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for &(r, c, v) in &self.triplets {
            out[c] += v * w[r];
        }
    }

    /// Dense row-major copy (test and gradient-check use only).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.rows * self.cols];
        for &(r, c, v) in &self.triplets {
            dense[r * self.cols + c] += v;
        }
        dense
    }
}

pub type ObjectiveFn = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>)>;
pub type ConstraintFn = Box<dyn Fn(&[f64]) -> (Vec<f64>, Jacobian)>;

/// A block of constraints with a known row count.
pub struct ConstraintBlock {
    pub count: usize,
    pub eval: ConstraintFn,
}

impl ConstraintBlock {
    pub fn new(count: usize, eval: ConstraintFn) -> Self {
        Self { count, eval }
    }
}

/// `min f(x)  s.t.  c_eq(x) = 0,  c_in(x) >= 0,  lo <= x <= hi`.
pub struct NlpProblem {
    pub n_vars: usize,
    pub objective: ObjectiveFn,
    pub eq_constraints: Option<ConstraintBlock>,
    pub ineq_constraints: Option<ConstraintBlock>,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol_feas: f64,
    pub tol_opt: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_initial: f64,
    pub penalty_factor: f64,
    pub penalty_max: f64,
    /// L-BFGS memory.
    pub memory: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-6,
            tol_opt: 1e-6,
            max_outer: 60,
            max_inner: 800,
            penalty_initial: 10.0,
            penalty_factor: 10.0,
            penalty_max: 1e8,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    FeasibleSuboptimal,
    Infeasible,
    IterationLimit,
}

/// Augmented-Lagrangian value at the start and end of one outer iteration.
#[derive(Debug, Clone, Serialize)]
pub struct OuterTrace {
    pub al_start: f64,
    pub al_end: f64,
    pub violation: f64,
    pub penalty: f64,
}

/// Solver result. Violations are recomputed from `x_star`, never taken from
/// solver internals.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub x_star: Vec<f64>,
    pub objective_value: f64,
    pub max_eq_violation: f64,
    pub min_ineq_residual: f64,
    /// Total inner iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub wall_time: f64,
    pub lambda_eq: Vec<f64>,
    pub mu_ineq: Vec<f64>,
    #[serde(skip)]
    pub trace: Vec<OuterTrace>,
}

struct Evaluated {
    f: f64,
    grad_f: Vec<f64>,
    c_eq: Vec<f64>,
    jac_eq: Option<Jacobian>,
    c_in: Vec<f64>,
    jac_in: Option<Jacobian>,
}

fn evaluate_all(problem: &NlpProblem, x: &[f64]) -> Result<Evaluated> {
    let (f, grad_f) = (problem.objective)(x);
    if grad_f.len() != problem.n_vars {
        return Err(Error::Dimension { expected: problem.n_vars, got: grad_f.len() });
    }
    let (c_eq, jac_eq) = match &problem.eq_constraints {
        Some(block) => {
            let (c, j) = (block.eval)(x);
            if c.len() != block.count || j.rows != block.count || j.cols != problem.n_vars {
                return Err(Error::Solver(format!(
                    "equality block shape mismatch: {} values, {}x{} jacobian",
                    c.len(),
                    j.rows,
                    j.cols
                )));
            }
            (c, Some(j))
        }
        None => (Vec::new(), None),
    };
    let (c_in, jac_in) = match &problem.ineq_constraints {
        Some(block) => {
            let (c, j) = (block.eval)(x);
            if c.len() != block.count || j.rows != block.count || j.cols != problem.n_vars {
                return Err(Error::Solver(format!(
                    "inequality block shape mismatch: {} values, {}x{} jacobian",
                    c.len(),
                    j.rows,
                    j.cols
                )));
            }
            (c, Some(j))
        }
        None => (Vec::new(), None),
    };
    Ok(Evaluated { f, grad_f, c_eq, jac_eq, c_in, jac_in })
}

/// Augmented-Lagrangian value and gradient; non-finite results are mapped to
/// `+inf` so the line search rejects the trial point.
fn al_value_grad(
    problem: &NlpProblem,
    x: &[f64],
    lambda: &[f64],
    mu: &[f64],
    rho: f64,
) -> Result<(f64, Vec<f64>)> {
    let ev = evaluate_all(problem, x)?;
    let mut val = ev.f;
    let mut grad = ev.grad_f.clone();
    if let Some(jac) = &ev.jac_eq {
        let mut w = vec![0.0; ev.c_eq.len()];
        for (j, c) in ev.c_eq.iter().enumerate() {
            val += -lambda[j] * c + 0.5 * rho * c * c;
            w[j] = -lambda[j] + rho * c;
        }
        jac.transpose_mul_acc(&w, &mut grad);
    }
    if let Some(jac) = &ev.jac_in {
        let mut w = vec![0.0; ev.c_in.len()];
        for (i, c) in ev.c_in.iter().enumerate() {
            let t = mu[i] - rho * c;
            if t > 0.0 {
                val += (t * t - mu[i] * mu[i]) / (2.0 * rho);
                w[i] = -t;
            } else {
                val += -mu[i] * mu[i] / (2.0 * rho);
            }
        }
        jac.transpose_mul_acc(&w, &mut grad);
    }
    if !val.is_finite() || !linalg::all_finite(&grad) {
        return Ok((f64::INFINITY, vec![0.0; x.len()]));
    }
    Ok((val, grad))
}

fn clamp_to_bounds(x: &mut [f64], bounds: Option<&Vec<(f64, f64)>>) {
    if let Some(b) = bounds {
        for (xi, (lo, hi)) in x.iter_mut().zip(b) {
            *xi = xi.clamp(*lo, *hi);
        }
    }
}

/// Gradient with components blocked by an active bound zeroed out.
fn projected_gradient(x: &[f64], g: &[f64], bounds: Option<&Vec<(f64, f64)>>) -> Vec<f64> {
    match bounds {
        None => g.to_vec(),
        Some(b) => x
            .iter()
            .zip(g)
            .zip(b)
            .map(|((xi, gi), (lo, hi))| {
                if (*xi <= *lo && *gi > 0.0) || (*xi >= *hi && *gi < 0.0) {
                    0.0
                } else {
                    *gi
                }
            })
            .collect(),
    }
}

/// Two-loop L-BFGS recursion; `history` holds (s, y, 1/(y.s)).
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * linalg::dot(s, &q);
        linalg::axpy(&mut q, -a, y);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let scale = linalg::dot(s, y) / linalg::dot(y, y);
        for qi in &mut q {
            *qi *= scale;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * linalg::dot(y, &q);
        linalg::axpy(&mut q, a - b, s);
    }
    q
}

struct InnerResult {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    pg_norm: f64,
    al_start: f64,
}

/// Bound-constrained L-BFGS with strong-Wolfe line search. Trial points that
/// evaluate non-finite are treated as +inf and rejected by the search.
fn lbfgs_minimize<E>(
    eval: &E,
    x0: Vec<f64>,
    bounds: Option<&Vec<(f64, f64)>>,
    tol: f64,
    max_iters: usize,
    memory: usize,
) -> Result<InnerResult>
where
    E: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;

    let mut x = x0;
    clamp_to_bounds(&mut x, bounds);
    let (mut f, mut g) = eval(&x)?;
    if !f.is_finite() {
        return Err(Error::Solver(format!("objective non-finite at inner start {x:?}")));
    }
    let al_start = f;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(memory);
    let mut iterations = 0;
    let mut pg_norm = linalg::norm_inf(&projected_gradient(&x, &g, bounds));

    for _ in 0..max_iters {
        if pg_norm <= tol {
            break;
        }
        iterations += 1;

        let masked: Vec<f64> = projected_gradient(&x, &g, bounds);
        let mut d = two_loop(&masked, &history);
        for v in &mut d {
            *v = -*v;
        }
        if let Some(b) = bounds {
            for (j, (lo, hi)) in b.iter().enumerate() {
                if (x[j] <= *lo && d[j] < 0.0) || (x[j] >= *hi && d[j] > 0.0) {
                    d[j] = 0.0;
                }
            }
        }
        let mut dg = linalg::dot(&d, &g);
        if !(dg < -1e-14 * linalg::norm(&d) * linalg::norm(&g)) {
            history.clear();
            d = masked.iter().map(|v| -v).collect();
            dg = linalg::dot(&d, &g);
            if dg >= 0.0 {
                break; // projected gradient direction is not descent: done
            }
        }

        // Largest step keeping x + alpha d inside the box.
        let alpha_max = match bounds {
            None => f64::INFINITY,
            Some(b) => {
                let mut am = f64::INFINITY;
                for j in 0..x.len() {
                    if d[j] > 0.0 && b[j].1.is_finite() {
                        am = am.min((b[j].1 - x[j]) / d[j]);
                    } else if d[j] < 0.0 && b[j].0.is_finite() {
                        am = am.min((b[j].0 - x[j]) / d[j]);
                    }
                }
                am.max(0.0)
            }
        };
        if alpha_max <= 1e-16 {
            break;
        }

        let phi = |alpha: f64| -> Result<(f64, Vec<f64>, f64)> {
            let mut xt = x.clone();
            linalg::axpy(&mut xt, alpha, &d);
            clamp_to_bounds(&mut xt, bounds);
            let (ft, gt) = eval(&xt)?;
            let slope = linalg::dot(&gt, &d);
            Ok((ft, gt, slope))
        };

        // Strong-Wolfe bracketing + zoom (bisection-based).
        let mut accepted: Option<(f64, f64, Vec<f64>)> = None;
        let mut alpha_prev = 0.0;
        let mut f_prev = f;
        let mut slope_prev = dg;
        let mut alpha = 1.0f64.min(0.999 * alpha_max);
        let mut bracket: Option<(f64, f64, f64, f64)> = None; // (lo, f_lo, slope_lo, hi)
        for ls_iter in 0..20 {
            let (ft, gt, slope) = phi(alpha)?;
            if ft > f + C1 * alpha * dg || (ls_iter > 0 && ft >= f_prev) {
                bracket = Some((alpha_prev, f_prev, slope_prev, alpha));
                break;
            }
            if slope.abs() <= -C2 * dg {
                accepted = Some((alpha, ft, gt));
                break;
            }
            if slope >= 0.0 {
                bracket = Some((alpha, ft, slope, alpha_prev));
                break;
            }
            if alpha >= alpha_max * 0.999 {
                accepted = Some((alpha, ft, gt)); // stuck at the box face
                break;
            }
            alpha_prev = alpha;
            f_prev = ft;
            slope_prev = slope;
            alpha = (2.0 * alpha).min(0.999 * alpha_max);
        }
        if accepted.is_none() {
            if let Some((mut lo, mut f_lo, mut slope_lo, mut hi)) = bracket {
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    let (fm, gm, slope_m) = phi(mid)?;
                    if fm > f + C1 * mid * dg || fm >= f_lo {
                        hi = mid;
                    } else {
                        if slope_m.abs() <= -C2 * dg {
                            accepted = Some((mid, fm, gm));
                            break;
                        }
                        if slope_m * (hi - lo) >= 0.0 {
                            hi = lo;
                        }
                        lo = mid;
                        f_lo = fm;
                        slope_lo = slope_m;
                    }
                    if (hi - lo).abs() < 1e-16 * (1.0 + lo.abs()) {
                        break;
                    }
                }
                let _ = slope_lo;
                if accepted.is_none() && f_lo < f {
                    // Sufficient decrease without curvature: take it.
                    let (ft, gt, _) = phi(lo)?;
                    if ft < f {
                        accepted = Some((lo, ft, gt));
                    }
                }
            }
        }
        if accepted.is_none() {
            // Last resort: plain backtracking.
            let mut alpha_bt = 1.0f64.min(0.5 * alpha_max);
            for _ in 0..40 {
                let (ft, gt, _) = phi(alpha_bt)?;
                if ft < f + C1 * alpha_bt * dg {
                    accepted = Some((alpha_bt, ft, gt));
                    break;
                }
                alpha_bt *= 0.5;
            }
        }
        let Some((alpha_acc, f_new, g_new)) = accepted else {
            break; // no progress possible along this direction
        };

        let mut x_new = x.clone();
        linalg::axpy(&mut x_new, alpha_acc, &d);
        clamp_to_bounds(&mut x_new, bounds);
        let s = linalg::sub(&x_new, &x);
        let yv = linalg::sub(&g_new, &g);
        let sy = linalg::dot(&s, &yv);
        if sy > 1e-10 * linalg::norm(&s) * linalg::norm(&yv) {
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        pg_norm = linalg::norm_inf(&projected_gradient(&x, &g, bounds));
    }

    Ok(InnerResult { x, f, iterations, pg_norm, al_start })
}

/// Solve an NLP with the augmented-Lagrangian method.
///
/// Terminates optimal when `max_eq_violation <= tol_feas`,
/// `min_ineq_residual >= -tol_feas`, and the projected Lagrangian gradient
/// (with freshly updated multipliers) is below `tol_opt` in the infinity
/// norm. The penalty starts at `penalty_initial` and is multiplied by
/// `penalty_factor` whenever the constraint violation fails to shrink by 4x
/// in an outer iteration, capped at `penalty_max`; stagnation at the cap is
/// reported infeasible.
pub fn solve(problem: &NlpProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    if problem.x0.len() != problem.n_vars {
        return Err(Error::Dimension { expected: problem.n_vars, got: problem.x0.len() });
    }
    if !linalg::all_finite(&problem.x0) {
        return Err(Error::Solver("x0 must be finite".into()));
    }
    if let Some(b) = &problem.bounds {
        if b.len() != problem.n_vars {
            return Err(Error::Dimension { expected: problem.n_vars, got: b.len() });
        }
        for (lo, hi) in b {
            if lo > hi {
                return Err(Error::Solver(format!("invalid bound pair ({lo}, {hi})")));
            }
        }
    }

    let m_eq = problem.eq_constraints.as_ref().map_or(0, |b| b.count);
    let m_in = problem.ineq_constraints.as_ref().map_or(0, |b| b.count);

    let mut x = problem.x0.clone();
    clamp_to_bounds(&mut x, problem.bounds.as_ref());

    // Probe the callables at x0; a non-finite start is a caller error.
    let ev0 = evaluate_all(problem, &x)?;
    if !ev0.f.is_finite()
        || !linalg::all_finite(&ev0.grad_f)
        || !linalg::all_finite(&ev0.c_eq)
        || !linalg::all_finite(&ev0.c_in)
    {
        return Err(Error::Solver(format!("callable returned non-finite value at x0 = {x:?}")));
    }

    let mut lambda = vec![0.0; m_eq];
    let mut mu = vec![0.0; m_in];
    let mut rho = opts.penalty_initial;
    let mut inner_tol = if m_eq + m_in == 0 { opts.tol_opt } else { 1e-2 };
    let mut total_inner = 0;
    let mut outer_done = 0;
    let mut prev_viol = f64::INFINITY;
    let mut capped_stall = 0;
    let mut trace = Vec::new();
    let mut status = SolveStatus::IterationLimit;

    // Best iterate by (violation, objective), reported on iteration limit.
    let mut best_x = x.clone();
    let mut best_viol = f64::INFINITY;
    let mut best_f = f64::INFINITY;

    for _outer in 0..opts.max_outer {
        outer_done += 1;
        let lam = lambda.clone();
        let muv = mu.clone();
        let eval = |xt: &[f64]| al_value_grad(problem, xt, &lam, &muv, rho);
        let inner = lbfgs_minimize(
            &eval,
            x.clone(),
            problem.bounds.as_ref(),
            inner_tol,
            opts.max_inner,
            opts.memory,
        )?;
        total_inner += inner.iterations;
        x = inner.x;

        let ev = evaluate_all(problem, &x)?;
        let viol_eq = linalg::norm_inf(&ev.c_eq);
        let viol_in = ev.c_in.iter().fold(0.0f64, |m, c| m.max(-c.min(0.0)));
        let viol = viol_eq.max(viol_in);
        trace.push(OuterTrace {
            al_start: inner.al_start,
            al_end: inner.f,
            violation: viol,
            penalty: rho,
        });
        log::debug!(
            "outer {outer_done}: viol {viol:.3e} pg {pg:.3e} rho {rho:.1e} f {f:.6e}",
            pg = inner.pg_norm,
            f = ev.f
        );

        if viol < best_viol - 1e-12 || (viol <= best_viol + 1e-12 && ev.f < best_f) {
            best_viol = viol;
            best_f = ev.f;
            best_x = x.clone();
        }

        if viol <= opts.tol_feas {
            // First-order multiplier update, then check stationarity of the
            // Lagrangian with the updated multipliers (identical to the
            // inner AL gradient at this point).
            for (l, c) in lambda.iter_mut().zip(&ev.c_eq) {
                *l -= rho * c;
            }
            for (m, c) in mu.iter_mut().zip(&ev.c_in) {
                *m = (*m - rho * c).max(0.0);
            }
            let mut grad_l = ev.grad_f.clone();
            if let Some(j) = &ev.jac_eq {
                let w: Vec<f64> = lambda.iter().map(|l| -l).collect();
                j.transpose_mul_acc(&w, &mut grad_l);
            }
            if let Some(j) = &ev.jac_in {
                let w: Vec<f64> = mu.iter().map(|m| -m).collect();
                j.transpose_mul_acc(&w, &mut grad_l);
            }
            let pg = linalg::norm_inf(&projected_gradient(&x, &grad_l, problem.bounds.as_ref()));
            if pg <= opts.tol_opt {
                status = SolveStatus::Optimal;
                best_x = x.clone();
                break;
            }
            inner_tol = opts.tol_opt;
        } else if viol <= prev_viol / 4.0 {
            // Violation shrinking fast enough: standard multiplier update.
            for (l, c) in lambda.iter_mut().zip(&ev.c_eq) {
                *l -= rho * c;
            }
            for (m, c) in mu.iter_mut().zip(&ev.c_in) {
                *m = (*m - rho * c).max(0.0);
            }
            inner_tol = (inner_tol * 0.5).max(opts.tol_opt);
        } else if viol > 50.0 * opts.tol_feas {
            // Stalled while substantially infeasible: raise the penalty
            // without touching multipliers.
            if rho >= opts.penalty_max {
                capped_stall += 1;
                if capped_stall >= 3 {
                    status = SolveStatus::Infeasible;
                    break;
                }
            } else {
                rho = (rho * opts.penalty_factor).min(opts.penalty_max);
            }
            inner_tol = (inner_tol * 0.5).max(opts.tol_opt);
        } else {
            // Near-feasible: a higher penalty only worsens the inner
            // conditioning; keep rho and polish with multiplier updates.
            for (l, c) in lambda.iter_mut().zip(&ev.c_eq) {
                *l -= rho * c;
            }
            for (m, c) in mu.iter_mut().zip(&ev.c_in) {
                *m = (*m - rho * c).max(0.0);
            }
            inner_tol = (inner_tol * 0.3).max(opts.tol_opt);
        }
        prev_viol = viol;
    }

    // Final report, recomputed at the chosen point.
    let x_final = match status {
        SolveStatus::Optimal => best_x,
        SolveStatus::Infeasible | SolveStatus::IterationLimit | SolveStatus::FeasibleSuboptimal => {
            best_x
        }
    };
    let ev = evaluate_all(problem, &x_final)?;
    let max_eq_violation = linalg::norm_inf(&ev.c_eq);
    let min_ineq_residual = ev.c_in.iter().copied().fold(f64::INFINITY, f64::min);
    if status == SolveStatus::IterationLimit
        && max_eq_violation <= opts.tol_feas
        && (m_in == 0 || min_ineq_residual >= -opts.tol_feas)
    {
        status = SolveStatus::FeasibleSuboptimal;
    }

    Ok(SolveReport {
        status,
        objective_value: ev.f,
        x_star: x_final,
        max_eq_violation,
        min_ineq_residual: if m_in == 0 { f64::INFINITY } else { min_ineq_residual },
        iterations: total_inner,
        outer_iterations: outer_done,
        wall_time: start.elapsed().as_secs_f64(),
        lambda_eq: lambda,
        mu_ineq: mu,
        trace,
    })
}

/// Which callable a gradient-check defect belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradBlock {
    Objective,
    Eq,
    Ineq,
}

/// Worst discrepancy between supplied derivatives and central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub block: GradBlock,
    pub row: usize,
    pub col: usize,
}

/// Compare all supplied gradients/Jacobians against central finite
/// differences with step `1e-6 * (1 + |x_i|)` per coordinate. The relative
/// error is `|a - fd| / max(1, |a|, |fd|)`.
pub fn check_gradients(problem: &NlpProblem, point: &[f64]) -> Result<GradCheckReport> {
    let n = problem.n_vars;
    if point.len() != n {
        return Err(Error::Dimension { expected: n, got: point.len() });
    }
    let ev = evaluate_all(problem, point)?;
    let dense_eq = ev.jac_eq.as_ref().map(|j| j.to_dense());
    let dense_in = ev.jac_in.as_ref().map(|j| j.to_dense());
    let m_eq = ev.c_eq.len();
    let m_in = ev.c_in.len();

    let mut report =
        GradCheckReport { max_rel_error: 0.0, block: GradBlock::Objective, row: 0, col: 0 };
    let consider = |analytic: f64, fd: f64, block: GradBlock, row: usize, col: usize, rep: &mut GradCheckReport| {
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1.0);
        if rel > rep.max_rel_error {
            rep.max_rel_error = rel;
            rep.block = block;
            rep.row = row;
            rep.col = col;
        }
    };

    let mut xp = point.to_vec();
    for i in 0..n {
        let eps = 1e-6 * (1.0 + point[i].abs());
        xp[i] = point[i] + eps;
        let plus = evaluate_all(problem, &xp)?;
        xp[i] = point[i] - eps;
        let minus = evaluate_all(problem, &xp)?;
        xp[i] = point[i];

        let fd_obj = (plus.f - minus.f) / (2.0 * eps);
        consider(ev.grad_f[i], fd_obj, GradBlock::Objective, 0, i, &mut report);
        if let Some(dense) = &dense_eq {
            for r in 0..m_eq {
                let fd = (plus.c_eq[r] - minus.c_eq[r]) / (2.0 * eps);
                consider(dense[r * n + i], fd, GradBlock::Eq, r, i, &mut report);
            }
        }
        if let Some(dense) = &dense_in {
            for r in 0..m_in {
                let fd = (plus.c_in[r] - minus.c_in[r]) / (2.0 * eps);
                consider(dense[r * n + i], fd, GradBlock::Ineq, r, i, &mut report);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_1d() -> NlpProblem {
        NlpProblem {
            n_vars: 1,
            objective: Box::new(|x| ((x[0] - 3.0) * (x[0] - 3.0), vec![2.0 * (x[0] - 3.0)])),
            eq_constraints: None,
            ineq_constraints: None,
            bounds: None,
            x0: vec![0.0],
        }
    }

    #[test]
    fn unconstrained_quadratic() {
        let report = solve(&quadratic_1d(), &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.x_star[0] - 3.0).abs() < 1e-4);
        assert!(report.objective_value < 1e-8, "objective {}", report.objective_value);
    }

    #[test]
    fn equality_constrained_closed_form() {
        // min x^2 + y^2 s.t. x + y = 1 -> (0.5, 0.5)
        let problem = NlpProblem {
            n_vars: 2,
            objective: Box::new(|x| {
                (x[0] * x[0] + x[1] * x[1], vec![2.0 * x[0], 2.0 * x[1]])
            }),
            eq_constraints: Some(ConstraintBlock::new(
                1,
                Box::new(|x| {
                    let mut j = Jacobian::new(1, 2);
                    j.push(0, 0, 1.0);
                    j.push(0, 1, 1.0);
                    (vec![x[0] + x[1] - 1.0], j)
                }),
            )),
            ineq_constraints: None,
            bounds: None,
            x0: vec![0.0, 0.0],
        };
        let report = solve(&problem, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.x_star[0] - 0.5).abs() < 1e-5, "{:?}", report.x_star);
        assert!((report.x_star[1] - 0.5).abs() < 1e-5);
        assert!(report.max_eq_violation <= 1e-6);
    }

    fn active_inequality() -> NlpProblem {
        // min x s.t. x >= 2
        NlpProblem {
            n_vars: 1,
            objective: Box::new(|x| (x[0], vec![1.0])),
            eq_constraints: None,
            ineq_constraints: Some(ConstraintBlock::new(
                1,
                Box::new(|x| {
                    let mut j = Jacobian::new(1, 1);
                    j.push(0, 0, 1.0);
                    (vec![x[0] - 2.0], j)
                }),
            )),
            bounds: None,
            x0: vec![5.0],
        }
    }

    #[test]
    fn inequality_active_at_solution() {
        let report = solve(&active_inequality(), &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.x_star[0] - 2.0).abs() < 1e-5, "{:?}", report.x_star);
        assert!(report.min_ineq_residual >= -1e-6);
        // KKT multiplier for the active constraint is 1.
        assert!((report.mu_ineq[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bounds_clip_the_minimizer() {
        let problem = NlpProblem {
            n_vars: 1,
            objective: Box::new(|x| ((x[0] - 3.0) * (x[0] - 3.0), vec![2.0 * (x[0] - 3.0)])),
            eq_constraints: None,
            ineq_constraints: None,
            bounds: Some(vec![(0.0, 2.0)]),
            x0: vec![1.0],
        };
        let report = solve(&problem, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!((report.x_star[0] - 2.0).abs() < 1e-9, "{:?}", report.x_star);
    }

    #[test]
    fn kkt_residuals_on_regression_problems() {
        for problem in [active_inequality()] {
            let report = solve(&problem, &SolveOptions::default()).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal);
            // Lagrangian gradient with reported multipliers.
            let ev = evaluate_all(&problem, &report.x_star).unwrap();
            let mut grad_l = ev.grad_f.clone();
            if let Some(j) = &ev.jac_in {
                let w: Vec<f64> = report.mu_ineq.iter().map(|m| -m).collect();
                j.transpose_mul_acc(&w, &mut grad_l);
            }
            assert!(crate::linalg::norm_inf(&grad_l) < 1e-4);
            // Complementarity.
            for (m, c) in report.mu_ineq.iter().zip(&ev.c_in) {
                assert!((m * c).abs() < 1e-4, "complementarity {m} * {c}");
            }
        }
    }

    #[test]
    fn merit_non_increasing_within_outer_iterations() {
        let problem = equality_problem_for_trace();
        let report = solve(&problem, &SolveOptions::default()).unwrap();
        for tr in &report.trace {
            assert!(
                tr.al_end <= tr.al_start + 1e-9 * (1.0 + tr.al_start.abs()),
                "inner increased the merit: {} -> {}",
                tr.al_start,
                tr.al_end
            );
        }
    }

    fn equality_problem_for_trace() -> NlpProblem {
        NlpProblem {
            n_vars: 2,
            objective: Box::new(|x| {
                ((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2), vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 2.0)])
            }),
            eq_constraints: Some(ConstraintBlock::new(
                1,
                Box::new(|x| {
                    let mut j = Jacobian::new(1, 2);
                    j.push(0, 0, 1.0);
                    j.push(0, 1, 1.0);
                    (vec![x[0] + x[1] - 3.0], j)
                }),
            )),
            ineq_constraints: None,
            bounds: None,
            x0: vec![0.0, 0.0],
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let a = solve(&equality_problem_for_trace(), &SolveOptions::default()).unwrap();
        let b = solve(&equality_problem_for_trace(), &SolveOptions::default()).unwrap();
        assert_eq!(a.x_star, b.x_star);
        assert_eq!(a.objective_value, b.objective_value);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.status, b.status);
    }

    #[test]
    fn infeasible_problem_is_reported() {
        // x >= 1 and x <= -1 simultaneously.
        let problem = NlpProblem {
            n_vars: 1,
            objective: Box::new(|x| (x[0] * x[0], vec![2.0 * x[0]])),
            eq_constraints: None,
            ineq_constraints: Some(ConstraintBlock::new(
                2,
                Box::new(|x| {
                    let mut j = Jacobian::new(2, 1);
                    j.push(0, 0, 1.0);
                    j.push(1, 0, -1.0);
                    (vec![x[0] - 1.0, -1.0 - x[0]], j)
                }),
            )),
            bounds: None,
            x0: vec![0.0],
        };
        let report = solve(&problem, &SolveOptions::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Infeasible);
        // Best iterate splits the difference.
        assert!(report.x_star[0].abs() < 1e-3, "{:?}", report.x_star);
    }

    #[test]
    fn gradient_check_passes_on_correct_problem() {
        let problem = equality_problem_for_trace();
        let report = check_gradients(&problem, &[0.3, -0.7]).unwrap();
        assert!(report.max_rel_error < 1e-6, "error {}", report.max_rel_error);
    }

    #[test]
    fn gradient_check_detects_corrupted_jacobian() {
        let problem = NlpProblem {
            n_vars: 2,
            objective: Box::new(|x| {
                (x[0] * x[0] + x[1] * x[1], vec![2.0 * x[0], 2.0 * x[1]])
            }),
            eq_constraints: Some(ConstraintBlock::new(
                1,
                Box::new(|x| {
                    let mut j = Jacobian::new(1, 2);
                    j.push(0, 0, 1.0 + 0.1); // corrupted entry
                    j.push(0, 1, 1.0);
                    (vec![x[0] + x[1] - 1.0], j)
                }),
            )),
            ineq_constraints: None,
            bounds: None,
            x0: vec![0.0, 0.0],
        };
        let report = check_gradients(&problem, &[0.2, 0.4]).unwrap();
        assert!(report.max_rel_error >= 0.05, "error {}", report.max_rel_error);
        assert_eq!(report.block, GradBlock::Eq);
        assert_eq!(report.row, 0);
        assert_eq!(report.col, 0);
    }

    #[test]
    fn fifty_variable_qp_matches_kkt_oracle() {
        // Convex QP with 10 random equalities; the oracle is a dense KKT
        // solve done with an independent linear-algebra library.
        use nalgebra::{DMatrix, DVector};
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let n = 50;
        let m = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a_raw = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h = &a_raw.transpose() * &a_raw + DMatrix::<f64>::identity(n, n) * n as f64;
        let c = DVector::<f64>::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let e = DMatrix::<f64>::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::<f64>::from_fn(m, |_, _| rng.random_range(-1.0..1.0));

        // KKT system [[H, E^T], [E, 0]] [x; nu] = [-c; b].
        let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        kkt.view_mut((0, n), (n, m)).copy_from(&e.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&e);
        let mut rhs = DVector::<f64>::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&c));
        rhs.rows_mut(n, m).copy_from(&b);
        let sol = kkt.lu().solve(&rhs).expect("KKT solvable");
        let x_oracle: Vec<f64> = sol.rows(0, n).iter().copied().collect();

        // Hand the same problem to the solver.
        let h2 = h.clone();
        let c2 = c.clone();
        let e2 = e.clone();
        let b2 = b.clone();
        let e3 = e.clone();
        let problem = NlpProblem {
            n_vars: n,
            objective: Box::new(move |x| {
                let xv = DVector::from_column_slice(x);
                let hx = &h2 * &xv;
                let val = 0.5 * xv.dot(&hx) + c2.dot(&xv);
                let grad: Vec<f64> = (hx + &c2).iter().copied().collect();
                (val, grad)
            }),
            eq_constraints: Some(ConstraintBlock::new(
                m,
                Box::new(move |x| {
                    let xv = DVector::from_column_slice(x);
                    let cv = &e2 * &xv - &b2;
                    let mut j = Jacobian::new(m, n);
                    for r in 0..m {
                        for col in 0..n {
                            j.push(r, col, e3[(r, col)]);
                        }
                    }
                    (cv.iter().copied().collect(), j)
                }),
            )),
            ineq_constraints: None,
            bounds: None,
            x0: vec![0.0; n],
        };
        let opts = SolveOptions {
            tol_feas: 1e-8,
            tol_opt: 1e-6,
            penalty_initial: 1e3,
            ..Default::default()
        };
        let report = solve(&problem, &opts).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let worst = report
            .x_star
            .iter()
            .zip(&x_oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-5, "max deviation from KKT oracle {worst}");
    }

    #[test]
    fn non_finite_objective_at_x0_is_an_error() {
        let problem = NlpProblem {
            n_vars: 1,
            objective: Box::new(|x| (x[0].ln(), vec![1.0 / x[0]])),
            eq_constraints: None,
            ineq_constraints: None,
            bounds: None,
            x0: vec![-1.0],
        };
        assert!(matches!(solve(&problem, &SolveOptions::default()), Err(Error::Solver(_))));
    }
}
