//! Direct-collocation transcription of the constrained-DMP problem and the
//! certified solve pipeline.
//!
//! The continuous problem perturbs the forcing weights to `w - zeta` and
//! asks the rolled-out trajectory to satisfy the ZBF inequality
//! `dh/dt + gamma h >= 0` (plus an optional deviation tube around the
//! nominal trajectory). It is discretized on a uniform grid with trapezoidal
//! dynamics defects; path constraints hold at the grid points only, so a
//! solution is *certified* by a separate dense re-integration of the
//! perturbed DMP, never by the grid values alone. A coarse grid that passes
//! at the collocation points and fails the dense check is reported
//! UNCERTIFIED and flagged for grid refinement.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::dmp::{perturbed_weights, DmpModel, Trajectory, TrajectoryState};
use crate::error::{Error, Result};
use crate::linalg;
use crate::nlp::{self, ConstraintBlock, Jacobian, NlpProblem, SolveOptions, SolveReport, SolveStatus};
use crate::zbf::SafetyScene;

/// Tolerance on the dense ZBF residual for certification.
pub const CERT_RESIDUAL_TOL: f64 = 1e-6;
/// Tolerance on the grid deviation bound for certification.
pub const CERT_DEVIATION_TOL: f64 = 1e-6;

/// Warm-start point: a perturbation matrix plus grid states.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub zeta: Vec<Vec<f64>>,
    /// States for grid points 1..n-1 (the initial state is fixed).
    pub states: Vec<TrajectoryState>,
}

#[derive(Debug, Clone)]
pub struct CdmpOptions {
    pub n_colloc: usize,
    /// Optimization window; defaults to 1.5x the model tau so the
    /// goal-settling tail is inside it.
    pub horizon: Option<f64>,
    /// Maximum allowable deviation from the nominal trajectory, meters.
    pub epsilon: Option<f64>,
    /// Objective weight on |zeta|^2.
    pub zeta_weight: f64,
    /// Margin added to the grid ZBF rows (`residual >= margin`), covering
    /// the O(dt^2) gap between collocation and dense integration; defaults
    /// to `2 dt^2` capped at half the initial residual slack.
    pub residual_margin: Option<f64>,
    /// Dense verification substeps per collocation interval.
    pub dense_substeps: usize,
    pub solver: SolveOptions,
    pub warm_start: Option<WarmStart>,
}

impl Default for CdmpOptions {
    fn default() -> Self {
        Self {
            n_colloc: 50,
            horizon: None,
            epsilon: None,
            zeta_weight: 1e-3,
            residual_margin: None,
            dense_substeps: 20,
            solver: SolveOptions::default(),
            warm_start: None,
        }
    }
}

/// A validated CDMP instance: model, scene, grid, and the nominal reference
/// trajectory sampled at the collocation times.
#[derive(Debug, Clone)]
pub struct CdmpProblem {
    model: DmpModel,
    scene: SafetyScene,
    opts: CdmpOptions,
    horizon: f64,
    dt: f64,
    residual_margin: f64,
    reference: Trajectory,
}

impl CdmpProblem {
    pub fn new(model: DmpModel, scene: SafetyScene, opts: CdmpOptions) -> Result<Self> {
        if scene.dim() != model.dim() {
            return Err(Error::Dimension { expected: model.dim(), got: scene.dim() });
        }
        if opts.n_colloc < 2 {
            return Err(Error::invalid(format!("n_colloc must be >= 2, got {}", opts.n_colloc)));
        }
        if let Some(eps) = opts.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
            }
        }
        if opts.dense_substeps < 2 {
            return Err(Error::invalid("dense_substeps must be >= 2"));
        }
        if !(opts.zeta_weight.is_finite() && opts.zeta_weight > 0.0) {
            return Err(Error::invalid("zeta_weight must be positive"));
        }
        let horizon = opts.horizon.unwrap_or(1.5 * model.tau());
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        let h0 = scene.barrier_value(model.y0());
        if h0 <= 0.0 {
            return Err(Error::invalid(format!(
                "initial state is outside the safety set (h(y0) = {h0}); no ZBF-certified \
                 trajectory can start there"
            )));
        }
        let dt = horizon / (opts.n_colloc - 1) as f64;
        // Cap the margin so the (constant) initial ZBF row stays satisfiable.
        let margin = opts
            .residual_margin
            .unwrap_or(2.0 * dt * dt)
            .min(0.5 * scene.gamma() * h0);
        if let Some(ws) = &opts.warm_start {
            if ws.states.len() != opts.n_colloc - 1 {
                return Err(Error::Dimension { expected: opts.n_colloc - 1, got: ws.states.len() });
            }
        }
        let reference = model.rollout(dt, horizon, None)?;
        debug_assert_eq!(reference.len(), opts.n_colloc);
        Ok(Self { model, scene, horizon, dt, residual_margin: margin, reference, opts })
    }

    pub fn model(&self) -> &DmpModel {
        &self.model
    }

    pub fn scene(&self) -> &SafetyScene {
        &self.scene
    }

    pub fn n_colloc(&self) -> usize {
        self.opts.n_colloc
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn grid_dt(&self) -> f64 {
        self.dt
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.opts.epsilon
    }

    /// Nominal DMP trajectory on the collocation grid.
    pub fn reference(&self) -> &Trajectory {
        &self.reference
    }
}

/// Constraint row identity, for error reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    Defect { interval: usize, component: String },
    ZbfResidual { grid: usize },
    Deviation { grid: usize },
}

impl std::fmt::Display for RowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowKind::Defect { interval, component } => {
                write!(f, "dynamics defect ({component}, interval {interval})")
            }
            RowKind::ZbfResidual { grid } => write!(f, "ZBF residual (grid point {grid})"),
            RowKind::Deviation { grid } => write!(f, "deviation bound (grid point {grid})"),
        }
    }
}

/// Owned transcription data shared by the NLP closures.
struct Transcription {
    model: DmpModel,
    scene: SafetyScene,
    n: usize,
    d: usize,
    nb: usize,
    dt: f64,
    horizon: f64,
    zeta_weight: f64,
    margin: f64,
    epsilon_eff: Option<f64>,
    z0: Vec<f64>,
    ref_y: Vec<Vec<f64>>,
    x_init: Vec<f64>,
}

/// Per-grid-point dynamics and partials.
struct PointDyn {
    xdot: Vec<f64>,
    dfds: Vec<f64>,
    phi: Vec<f64>,
}

impl Transcription {
    fn build(problem: &CdmpProblem) -> Result<Arc<Self>> {
        let n = problem.opts.n_colloc;
        let d = problem.model.dim();
        let nb = problem.model.forcing().n_basis();
        let z0 = vec![0.0; d];
        let ref_y: Vec<Vec<f64>> =
            problem.reference.states().iter().map(|st| st.y.clone()).collect();
        // Internal shrink of epsilon so the certified grid deviation bound
        // `|y_k - ref_k| <= epsilon + 1e-6` survives the solver feasibility
        // tolerance on the squared constraint.
        let epsilon_eff = problem.opts.epsilon.map(|e| e - (5e-5f64).min(e / 10.0));

        let n_vars = d * nb + (n - 1) * (1 + 2 * d);
        let mut x_init = vec![0.0; n_vars];
        match &problem.opts.warm_start {
            Some(ws) => {
                if ws.zeta.len() != d || ws.zeta.iter().any(|r| r.len() != nb) {
                    return Err(Error::invalid("warm start zeta shape mismatch"));
                }
                for j in 0..d {
                    for i in 0..nb {
                        x_init[j * nb + i] = ws.zeta[j][i];
                    }
                }
                for (k, st) in ws.states.iter().enumerate() {
                    if st.y.len() != d || st.z.len() != d {
                        return Err(Error::Dimension { expected: d, got: st.y.len() });
                    }
                    let base = d * nb + k * (1 + 2 * d);
                    x_init[base] = st.s;
                    x_init[base + 1..base + 1 + d].copy_from_slice(&st.z);
                    x_init[base + 1 + d..base + 1 + 2 * d].copy_from_slice(&st.y);
                }
            }
            None => {
                for k in 1..n {
                    let st = &problem.reference.states()[k];
                    let base = d * nb + (k - 1) * (1 + 2 * d);
                    x_init[base] = st.s;
                    x_init[base + 1..base + 1 + d].copy_from_slice(&st.z);
                    x_init[base + 1 + d..base + 1 + 2 * d].copy_from_slice(&st.y);
                }
            }
        }

        Ok(Arc::new(Self {
            model: problem.model.clone(),
            scene: problem.scene.clone(),
            n,
            d,
            nb,
            dt: problem.dt,
            horizon: problem.horizon,
            zeta_weight: problem.opts.zeta_weight,
            margin: problem.residual_margin,
            epsilon_eff,
            z0,
            ref_y,
            x_init,
        }))
    }

    fn n_vars(&self) -> usize {
        self.d * self.nb + (self.n - 1) * (1 + 2 * self.d)
    }

    fn n_eq(&self) -> usize {
        (self.n - 1) * (1 + 2 * self.d)
    }

    fn n_ineq(&self) -> usize {
        self.n + if self.epsilon_eff.is_some() { self.n } else { 0 }
    }

    fn zeta_col(&self, j: usize, i: usize) -> usize {
        j * self.nb + i
    }

    fn state_base(&self, k: usize) -> usize {
        debug_assert!(k >= 1);
        self.d * self.nb + (k - 1) * (1 + 2 * self.d)
    }

    fn unpack_zeta(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|j| x[j * self.nb..(j + 1) * self.nb].to_vec())
            .collect()
    }

    fn state(&self, x: &[f64], k: usize) -> TrajectoryState {
        if k == 0 {
            TrajectoryState { s: 1.0, z: self.z0.clone(), y: self.model.y0().to_vec() }
        } else {
            let base = self.state_base(k);
            TrajectoryState {
                s: x[base],
                z: x[base + 1..base + 1 + self.d].to_vec(),
                y: x[base + 1 + self.d..base + 1 + 2 * self.d].to_vec(),
            }
        }
    }

    fn point_dynamics(&self, st: &TrajectoryState, zeta: &[Vec<f64>]) -> Result<PointDyn> {
        let d = self.d;
        let tau = self.model.tau();
        let wpert = perturbed_weights(self.model.forcing().weights(), zeta)?;
        let (f, dfds) = self.model.forcing().eval_with_phase_derivative(st.s, Some(&wpert))?;
        let phi = self.model.forcing().activations(st.s)?;
        let mut xdot = vec![0.0; 1 + 2 * d];
        xdot[0] = -self.model.canonical().alpha_s() * st.s / tau;
        for j in 0..d {
            xdot[1 + j] = (self.model.alpha_z()
                * (self.model.beta_z() * (self.model.goal()[j] - st.y[j]) - st.z[j])
                + f[j])
                / tau;
            xdot[1 + d + j] = st.z[j] / tau;
        }
        Ok(PointDyn { xdot, dfds, phi })
    }

    /// Scatter `-(dt/2) * A(point)` plus the identity business for one side
    /// of a defect row block. `sign` is -1 for the left state, +1 for the
    /// right; the identity term is included only for decision states.
    fn defect_jacobian_state(
        &self,
        jac: &mut Jacobian,
        row0: usize,
        k: usize,
        pd: &PointDyn,
        sign: f64,
    ) {
        if k == 0 {
            return; // fixed initial state: no columns
        }
        let d = self.d;
        let tau = self.model.tau();
        let base = self.state_base(k);
        let half = -self.dt / 2.0;
        let alpha_s = self.model.canonical().alpha_s();
        let alpha_z = self.model.alpha_z();
        let beta_z = self.model.beta_z();

        // Identity block.
        jac.push(row0, base, sign);
        for j in 0..d {
            jac.push(row0 + 1 + j, base + 1 + j, sign);
            jac.push(row0 + 1 + d + j, base + 1 + d + j, sign);
        }
        // -(dt/2) A entries (A = d xdot / d state).
        jac.push(row0, base, half * (-alpha_s / tau));
        for j in 0..d {
            jac.push(row0 + 1 + j, base, half * (pd.dfds[j] / tau));
            jac.push(row0 + 1 + j, base + 1 + j, half * (-alpha_z / tau));
            jac.push(row0 + 1 + j, base + 1 + d + j, half * (-alpha_z * beta_z / tau));
            jac.push(row0 + 1 + d + j, base + 1 + j, half * (1.0 / tau));
        }
    }

    fn defect_jacobian_zeta(&self, jac: &mut Jacobian, row0: usize, pd_a: &PointDyn, pd_b: &PointDyn) {
        let d = self.d;
        let tau = self.model.tau();
        let half = -self.dt / 2.0;
        for j in 0..d {
            for i in 0..self.nb {
                // d xdot_z_j / d zeta_{j,i} = -phi_i / tau at both interval ends.
                let v = half * (-(pd_a.phi[i] + pd_b.phi[i]) / tau);
                jac.push(row0 + 1 + j, self.zeta_col(j, i), v);
            }
        }
    }

    fn eval_objective(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.d;
        let coef = self.dt * self.n as f64 * self.zeta_weight / self.horizon;
        let mut val = 0.0;
        let mut grad = vec![0.0; self.n_vars()];
        for j in 0..d {
            for i in 0..self.nb {
                let col = self.zeta_col(j, i);
                val += coef * x[col] * x[col];
                grad[col] = 2.0 * coef * x[col];
            }
        }
        // Terminal cost |y_last - g|^2.
        let last = self.state(x, self.n - 1);
        let base = self.state_base(self.n - 1);
        for j in 0..d {
            let e = last.y[j] - self.model.goal()[j];
            val += e * e;
            grad[base + 1 + d + j] += 2.0 * e;
        }
        (val, grad)
    }

    fn eval_eq(&self, x: &[f64]) -> (Vec<f64>, Jacobian) {
        let d = self.d;
        let rows = self.n_eq();
        let mut values = vec![0.0; rows];
        let mut jac = Jacobian::new(rows, self.n_vars());
        let zeta = self.unpack_zeta(x);

        // Point dynamics once per grid point.
        let mut points = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let st = self.state(x, k);
            // Non-finite iterates surface as non-finite values; the solver's
            // line search rejects them.
            match self.point_dynamics(&st, &zeta) {
                Ok(pd) => points.push((st, pd)),
                Err(_) => {
                    return (vec![f64::NAN; rows], jac);
                }
            }
        }

        for k in 0..self.n - 1 {
            let row0 = k * (1 + 2 * d);
            let (st_a, pd_a) = &points[k];
            let (st_b, pd_b) = &points[k + 1];
            let half = self.dt / 2.0;
            values[row0] = st_b.s - st_a.s - half * (pd_a.xdot[0] + pd_b.xdot[0]);
            for j in 0..d {
                values[row0 + 1 + j] = st_b.z[j]
                    - st_a.z[j]
                    - half * (pd_a.xdot[1 + j] + pd_b.xdot[1 + j]);
                values[row0 + 1 + d + j] = st_b.y[j]
                    - st_a.y[j]
                    - half * (pd_a.xdot[1 + d + j] + pd_b.xdot[1 + d + j]);
            }
            self.defect_jacobian_state(&mut jac, row0, k, pd_a, -1.0);
            self.defect_jacobian_state(&mut jac, row0, k + 1, pd_b, 1.0);
            self.defect_jacobian_zeta(&mut jac, row0, pd_a, pd_b);
        }
        (values, jac)
    }

    fn eval_ineq(&self, x: &[f64]) -> (Vec<f64>, Jacobian) {
        let d = self.d;
        let tau = self.model.tau();
        let gamma = self.scene.gamma();
        let rows = self.n_ineq();
        let mut values = vec![0.0; rows];
        let mut jac = Jacobian::new(rows, self.n_vars());

        for k in 0..self.n {
            let st = self.state(x, k);
            if !(linalg::all_finite(&st.y) && linalg::all_finite(&st.z)) {
                return (vec![f64::NAN; rows], jac);
            }
            // ZBF residual with margin: grad h . z/tau + gamma h - margin.
            let (h, gh, hv) = self.scene.barrier_hvp(&st.y, &st.z);
            values[k] = linalg::dot(&gh, &st.z) / tau + gamma * h - self.margin;
            if k >= 1 {
                let base = self.state_base(k);
                for j in 0..d {
                    jac.push(k, base + 1 + j, gh[j] / tau);
                    jac.push(k, base + 1 + d + j, hv[j] / tau + gamma * gh[j]);
                }
            }
            if let Some(eps) = self.epsilon_eff {
                let row = self.n + k;
                let diff = linalg::sub(&st.y, &self.ref_y[k]);
                values[row] = eps * eps - linalg::dot(&diff, &diff);
                if k >= 1 {
                    let base = self.state_base(k);
                    for j in 0..d {
                        jac.push(row, base + 1 + d + j, -2.0 * diff[j]);
                    }
                }
            }
        }
        (values, jac)
    }

    fn row_kind_eq(&self, row: usize) -> RowKind {
        let d = self.d;
        let interval = row / (1 + 2 * d);
        let comp = row % (1 + 2 * d);
        let component = if comp == 0 {
            "s".to_string()
        } else if comp < 1 + d {
            format!("z{}", comp)
        } else {
            format!("y{}", comp - d)
        };
        RowKind::Defect { interval, component }
    }

    fn row_kind_ineq(&self, row: usize) -> RowKind {
        if row < self.n {
            RowKind::ZbfResidual { grid: row }
        } else {
            RowKind::Deviation { grid: row - self.n }
        }
    }

    /// Worst constraint at `x`, as (kind, violation).
    fn most_violated(&self, x: &[f64]) -> (RowKind, f64) {
        let (eq, _) = self.eval_eq(x);
        let (ineq, _) = self.eval_ineq(x);
        let mut worst = (RowKind::Defect { interval: 0, component: "s".into() }, 0.0);
        for (r, v) in eq.iter().enumerate() {
            if v.abs() > worst.1 {
                worst = (self.row_kind_eq(r), v.abs());
            }
        }
        for (r, v) in ineq.iter().enumerate() {
            let viol = (-v).max(0.0);
            if viol > worst.1 {
                worst = (self.row_kind_ineq(r), viol);
            }
        }
        worst
    }

    fn grid_trajectory(&self, x: &[f64]) -> Result<Trajectory> {
        let times: Vec<f64> = (0..self.n).map(|k| k as f64 * self.dt).collect();
        let states: Vec<TrajectoryState> = (0..self.n).map(|k| self.state(x, k)).collect();
        Trajectory::new(times, states)
    }
}

/// Assemble the collocation NLP: decision vector `[zeta; x_1 .. x_{n-1}]`
/// with the initial state fixed, trapezoidal defects as equalities, ZBF
/// residual rows (and deviation rows when epsilon is set) as inequalities,
/// and objective `dt * sum_k zeta_weight |zeta|^2 / horizon + |y_末 - g|^2`.
pub fn transcribe(problem: &CdmpProblem) -> Result<NlpProblem> {
    let tr = Transcription::build(problem)?;
    Ok(nlp_from_transcription(&tr))
}

fn nlp_from_transcription(tr: &Arc<Transcription>) -> NlpProblem {
    let t_obj = Arc::clone(tr);
    let t_eq = Arc::clone(tr);
    let t_in = Arc::clone(tr);
    NlpProblem {
        n_vars: tr.n_vars(),
        objective: Box::new(move |x| t_obj.eval_objective(x)),
        eq_constraints: Some(ConstraintBlock::new(
            tr.n_eq(),
            Box::new(move |x| t_eq.eval_eq(x)),
        )),
        ineq_constraints: Some(ConstraintBlock::new(
            tr.n_ineq(),
            Box::new(move |x| t_in.eval_ineq(x)),
        )),
        bounds: None,
        x0: tr.x_init.clone(),
    }
}

/// Outcome of the dense verification rollout.
#[derive(Debug, Clone, Serialize)]
pub struct DenseCheck {
    pub step: f64,
    pub min_h: f64,
    pub min_h_time: f64,
    pub min_residual: f64,
    pub min_residual_time: f64,
}

/// A solved CDMP: perturbation, grid states, dense verification, and the
/// solver report. `certified` is true only when the dense re-integration of
/// the perturbed model satisfies `h > 0` everywhere, the ZBF residual stays
/// above `-1e-6`, and (when epsilon is set) the grid deviation bound holds.
#[derive(Debug, Clone)]
pub struct CdmpSolution {
    pub zeta: Vec<Vec<f64>>,
    pub states: Trajectory,
    pub dense: Trajectory,
    pub dense_check: DenseCheck,
    pub max_grid_deviation: Option<f64>,
    pub certified: bool,
    pub solve_report: SolveReport,
}

impl CdmpSolution {
    pub fn zeta_norm(&self) -> f64 {
        self.zeta.iter().flatten().map(|z| z * z).sum::<f64>().sqrt()
    }

    /// Linear interpolation of this solution onto a finer grid, used to warm
    /// start a refinement solve.
    pub fn warm_start_for(&self, n_new: usize) -> Result<WarmStart> {
        if n_new < 2 {
            return Err(Error::invalid("n_new must be >= 2"));
        }
        let times = self.states.times();
        let horizon = *times.last().expect("non-empty") - times[0];
        let dt_new = horizon / (n_new - 1) as f64;
        let mut states = Vec::with_capacity(n_new - 1);
        for k in 1..n_new {
            let t = times[0] + k as f64 * dt_new;
            states.push(interpolate_state(&self.states, t));
        }
        Ok(WarmStart { zeta: self.zeta.clone(), states })
    }
}

fn interpolate_state(traj: &Trajectory, t: f64) -> TrajectoryState {
    let times = traj.times();
    let states = traj.states();
    if t <= times[0] {
        return states[0].clone();
    }
    if t >= *times.last().unwrap() {
        return states.last().unwrap().clone();
    }
    let idx = times.partition_point(|x| *x <= t).min(times.len() - 1);
    let (a, b) = (idx - 1, idx);
    let w = (t - times[a]) / (times[b] - times[a]);
    let lerp = |u: &[f64], v: &[f64]| -> Vec<f64> {
        u.iter().zip(v).map(|(x, y)| x + w * (y - x)).collect()
    };
    TrajectoryState {
        s: states[a].s + w * (states[b].s - states[a].s),
        z: lerp(&states[a].z, &states[b].z),
        y: lerp(&states[a].y, &states[b].y),
    }
}

/// Solve a CDMP instance and verify the result densely.
///
/// The NLP starts from `zeta = 0` and the nominal rollout states (or a
/// caller-supplied warm start). On a feasible solve the perturbed model is
/// re-integrated at `dt/dense_substeps`; the solution is CERTIFIED only if
/// that dense rollout keeps `h > 0` and the ZBF residual above `-1e-6`
/// throughout (and within the deviation bound at the grid, when set).
/// Infeasibility is returned as an error naming the most violated
/// constraint.
pub fn solve_cdmp(problem: &CdmpProblem) -> Result<CdmpSolution> {
    let tr = Transcription::build(problem)?;
    let nlp_problem = nlp_from_transcription(&tr);
    let report = nlp::solve(&nlp_problem, &problem.opts.solver)?;
    match report.status {
        SolveStatus::Optimal | SolveStatus::FeasibleSuboptimal => {}
        SolveStatus::Infeasible => {
            let (kind, violation) = tr.most_violated(&report.x_star);
            return Err(Error::Infeasible { kind: kind.to_string(), violation });
        }
        SolveStatus::IterationLimit => {
            let (kind, violation) = tr.most_violated(&report.x_star);
            return Err(Error::Solver(format!(
                "iteration limit before feasibility; most violated constraint is {kind} \
                 (violation {violation:.3e})"
            )));
        }
    }

    let zeta = tr.unpack_zeta(&report.x_star);
    let states = tr.grid_trajectory(&report.x_star)?;
    let perturbed = problem.model.with_perturbed_weights(&zeta)?;
    let dense_dt = problem.dt / problem.opts.dense_substeps as f64;
    let dense = perturbed.rollout(dense_dt, problem.horizon, None)?;

    let tau = problem.model.tau();
    let gamma = problem.scene.gamma();
    let mut min_h = f64::INFINITY;
    let mut min_h_time = 0.0;
    let mut min_res = f64::INFINITY;
    let mut min_res_time = 0.0;
    for (t, st) in dense.times().iter().zip(dense.states()) {
        let (h, gh) = problem.scene.barrier(&st.y);
        let res = linalg::dot(&gh, &st.z) / tau + gamma * h;
        if h < min_h {
            min_h = h;
            min_h_time = *t;
        }
        if res < min_res {
            min_res = res;
            min_res_time = *t;
        }
    }

    let max_grid_deviation = problem.opts.epsilon.map(|_| {
        states
            .states()
            .iter()
            .zip(problem.reference.states())
            .map(|(a, b)| linalg::dist(&a.y, &b.y))
            .fold(0.0f64, f64::max)
    });

    let mut certified = min_h > 0.0 && min_res >= -CERT_RESIDUAL_TOL;
    if let (Some(eps), Some(dev)) = (problem.opts.epsilon, max_grid_deviation) {
        certified = certified && dev <= eps + CERT_DEVIATION_TOL;
    }
    log::info!(
        "cdmp solve: status {:?}, |zeta| {:.4}, dense min h {:.5} @ {:.3}s, min residual {:.5} @ {:.3}s, certified {}",
        report.status,
        zeta.iter().flatten().map(|z| z * z).sum::<f64>().sqrt(),
        min_h,
        min_h_time,
        min_res,
        min_res_time,
        certified
    );

    Ok(CdmpSolution {
        zeta,
        states,
        dense,
        dense_check: DenseCheck {
            step: dense_dt,
            min_h,
            min_h_time,
            min_residual: min_res,
            min_residual_time: min_res_time,
        },
        max_grid_deviation,
        certified,
        solve_report: report,
    })
}

/// One row of the collocation-count profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub wall_time: f64,
    pub certified: Option<bool>,
    pub status: String,
}

/// Run `solve_cdmp` for each collocation count and tabulate wall time and
/// certification. Per-run failures become table rows, not aborts.
pub fn runtime_profile(
    model: &DmpModel,
    scene: &SafetyScene,
    n_values: &[usize],
    base: &CdmpOptions,
) -> Result<Vec<ProfileRow>> {
    if n_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("n_values must be sorted ascending"));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let opts = CdmpOptions { n_colloc: n, warm_start: None, ..base.clone() };
        let start = Instant::now();
        let outcome = CdmpProblem::new(model.clone(), scene.clone(), opts).and_then(|p| solve_cdmp(&p));
        let wall_time = start.elapsed().as_secs_f64();
        let row = match outcome {
            Ok(sol) => ProfileRow {
                n,
                wall_time,
                certified: Some(sol.certified),
                status: if sol.certified { "certified".into() } else { "uncertified".into() },
            },
            Err(e) => ProfileRow {
                n,
                wall_time,
                certified: None,
                status: match e {
                    Error::Infeasible { .. } => "infeasible".into(),
                    other => format!("error: {other}"),
                },
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// CSV table for a profile: `n,wall_time_s,certified,status`.
pub fn profile_to_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("n,wall_time_s,certified,status\n");
    for r in rows {
        let cert = match r.certified {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        out.push_str(&format!("{},{},{},{}\n", r.n, r.wall_time, cert, r.status));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos;
    use crate::dmp::fit_lwr;
    use crate::dmp::FitConfig;
    use crate::sdf::{Polarity, SdfPrimitive, Shape};

    fn line_model() -> DmpModel {
        let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.0], 1.0, 201).unwrap();
        fit_lwr(&demo, &FitConfig { n_basis: 20, ..Default::default() }).unwrap()
    }

    fn disc_scene(radius: f64) -> SafetyScene {
        SafetyScene::new(
            vec![SdfPrimitive {
                shape: Shape::Sphere { center: vec![0.5, 0.0], radius },
                polarity: Polarity::Avoid,
            }],
            0.1,
            4.0,
        )
        .unwrap()
    }

    fn far_scene() -> SafetyScene {
        SafetyScene::new(
            vec![SdfPrimitive {
                shape: Shape::Sphere { center: vec![100.0, 100.0], radius: 0.1 },
                polarity: Polarity::Avoid,
            }],
            0.1,
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn nominal_states_nearly_satisfy_defects() {
        // zeta = 0 with states from the nominal RK4 rollout: trapezoidal
        // defects are the RK4-vs-trapezoid discrepancy, O(dt^2) per interval.
        let model = line_model();
        for n in [20usize, 40, 80] {
            let problem = CdmpProblem::new(
                model.clone(),
                far_scene(),
                CdmpOptions { n_colloc: n, ..Default::default() },
            )
            .unwrap();
            let tr = Transcription::build(&problem).unwrap();
            let (defects, _) = tr.eval_eq(&tr.x_init);
            let max_defect = defects.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dt = problem.grid_dt();
            // Scale constant measured on this model family; the point is the
            // quadratic trend, checked by the factor-4 drop below.
            assert!(
                max_defect < 60.0 * dt * dt,
                "n = {n}: defect {max_defect} vs dt^2 = {}",
                dt * dt
            );
        }
    }

    #[test]
    fn transcription_gradients_match_finite_differences() {
        let model = line_model();
        let problem = CdmpProblem::new(
            model,
            disc_scene(0.12),
            CdmpOptions {
                n_colloc: 12,
                epsilon: Some(0.3),
                ..Default::default()
            },
        )
        .unwrap();
        let nlp_problem = transcribe(&problem).unwrap();
        // At the initial guess...
        let report = nlp::check_gradients(&nlp_problem, &nlp_problem.x0).unwrap();
        assert!(report.max_rel_error < 1e-4, "initial point: {report:?}");
        // ...and at a deterministically jittered interior point.
        let jittered: Vec<f64> = nlp_problem
            .x0
            .iter()
            .enumerate()
            .map(|(i, v)| v + 0.02 * ((i as f64 * 0.7).sin()))
            .collect();
        let report = nlp::check_gradients(&nlp_problem, &jittered).unwrap();
        assert!(report.max_rel_error < 1e-4, "jittered point: {report:?}");
    }

    #[test]
    fn obstacle_free_solve_keeps_zeta_zero() {
        let model = line_model();
        let wnorm = model
            .forcing()
            .weights()
            .iter()
            .flatten()
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt();
        let problem = CdmpProblem::new(
            model.clone(),
            far_scene(),
            CdmpOptions { n_colloc: 30, ..Default::default() },
        )
        .unwrap();
        let sol = solve_cdmp(&problem).unwrap();
        assert!(sol.certified, "free-space solution must certify");
        assert!(
            sol.zeta_norm() <= 1e-3 * (1.0 + wnorm),
            "zeta norm {} vs weights norm {wnorm}",
            sol.zeta_norm()
        );
        // Optimized trajectory matches the nominal rollout.
        let nominal = model.rollout(sol.dense_check.step, problem.horizon(), None).unwrap();
        let worst = sol
            .dense
            .states()
            .iter()
            .zip(nominal.states())
            .map(|(a, b)| crate::linalg::dist(&a.y, &b.y))
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-3, "perturbed rollout deviates {worst}");
    }

    #[test]
    fn disc_obstacle_solve_certifies() {
        let model = line_model();
        let problem = CdmpProblem::new(
            model.clone(),
            disc_scene(0.2),
            CdmpOptions { n_colloc: 50, ..Default::default() },
        )
        .unwrap();
        let sol = solve_cdmp(&problem).unwrap();
        assert!(sol.certified, "dense check: {:?}", sol.dense_check);
        assert!(sol.dense_check.min_h > 0.0);
        assert!(sol.dense_check.min_residual >= -1e-3, "{:?}", sol.dense_check);
        // Grid h stays nonnegative and the endpoint reaches the goal.
        let min_grid_h = sol
            .states
            .states()
            .iter()
            .map(|st| problem.scene().barrier_value(&st.y))
            .fold(f64::INFINITY, f64::min);
        assert!(min_grid_h >= -1e-9, "grid min h {min_grid_h}");
        let gap = crate::linalg::dist(&sol.dense.final_state().y, model.goal());
        assert!(gap < 1e-2, "endpoint misses goal by {gap}");
    }

    #[test]
    fn infeasible_contain_sphere_is_reported() {
        // Goal far outside a small containment sphere around the start.
        let model = line_model(); // y0 (0,0), g (1,0)
        let scene = SafetyScene::new(
            vec![SdfPrimitive {
                shape: Shape::Sphere { center: vec![0.0, 0.0], radius: 0.3 },
                polarity: Polarity::Contain,
            }],
            0.1,
            4.0,
        )
        .unwrap();
        let problem = CdmpProblem::new(
            model,
            scene,
            CdmpOptions { n_colloc: 20, ..Default::default() },
        )
        .unwrap();
        match solve_cdmp(&problem) {
            Err(Error::Infeasible { kind, violation }) => {
                assert!(violation > 0.0);
                assert!(!kind.is_empty());
            }
            other => panic!("expected infeasible, got {:?}", other.map(|s| s.certified)),
        }
    }

    #[test]
    fn construction_rejects_start_outside_safety_set() {
        let model = line_model();
        // Obstacle right on top of the start.
        let scene = SafetyScene::new(
            vec![SdfPrimitive {
                shape: Shape::Sphere { center: vec![0.0, 0.0], radius: 0.1 },
                polarity: Polarity::Avoid,
            }],
            0.1,
            4.0,
        )
        .unwrap();
        assert!(CdmpProblem::new(model, scene, CdmpOptions::default()).is_err());
    }

    #[test]
    fn deterministic_solutions() {
        let model = line_model();
        let mk = || {
            CdmpProblem::new(
                model.clone(),
                disc_scene(0.15),
                CdmpOptions { n_colloc: 25, ..Default::default() },
            )
            .unwrap()
        };
        let a = solve_cdmp(&mk()).unwrap();
        let b = solve_cdmp(&mk()).unwrap();
        assert_eq!(a.zeta, b.zeta);
        assert_eq!(a.certified, b.certified);
    }

    #[test]
    fn profile_rows_cover_failures() {
        let model = line_model();
        let rows = runtime_profile(
            &model,
            &far_scene(),
            &[2, 10],
            &CdmpOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n, 2);
        let csv = profile_to_csv(&rows);
        assert!(csv.starts_with("n,wall_time_s,certified,status\n"));
        // Unsorted n-list is rejected.
        assert!(runtime_profile(&model, &far_scene(), &[20, 10], &CdmpOptions::default()).is_err());
    }
}
