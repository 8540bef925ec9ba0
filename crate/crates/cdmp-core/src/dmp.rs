//! Dynamic movement primitives: demonstration container, canonical system,
//! radial-basis forcing term, LWR fitting, and fixed-step RK4 rollout.
//!
//! The model is the coupled first-order system
//!
//! ```text
//! tau * ds/dt = -alpha_s * s
//! tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(s)
//! tau * dy/dt = z
//! ```
//!
//! with `f(s) = sum_i w_i psi_i(s) / sum_i psi_i(s)` and
//! `psi_i(s) = exp(-h_i (s - c_i)^2)`. The forcing carries no phase or
//! goal-distance modulation, so goal convergence relies on the fitted
//! weights decaying toward the end of the demonstration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Maximum supported spatial dimension (CSV headers go up to `y3`).
pub const MAX_DIM: usize = 3;

/// A uniformly sampled workspace trajectory used to fit a DMP.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    dt: f64,
    positions: Vec<Vec<f64>>,
    dim: usize,
}

impl Demonstration {
    /// Requires at least 3 samples (velocity and acceleration are estimated
    /// by finite differences), `dt > 0`, and a consistent dimension 1..=3.
    pub fn new(dt: f64, positions: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("demo dt must be positive, got {dt}")));
        }
        if positions.len() < 3 {
            return Err(Error::invalid(format!(
                "demonstration needs at least 3 samples, got {}",
                positions.len()
            )));
        }
        let dim = positions[0].len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!(
                "demonstration dimension must be 1..={MAX_DIM}, got {dim}"
            )));
        }
        for (k, p) in positions.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Dimension { expected: dim, got: p.len() });
            }
            if !linalg::all_finite(p) {
                return Err(Error::invalid(format!("non-finite demo sample at index {k}")));
            }
        }
        Ok(Self { dt, positions, dim })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires >= 3 samples
    }

    /// Total duration `dt * (len - 1)`.
    pub fn duration(&self) -> f64 {
        self.dt * (self.positions.len() - 1) as f64
    }
}

/// Phase dynamics `tau * ds/dt = -alpha_s * s`, `s(0) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSystem {
    alpha_s: f64,
    tau: f64,
}

impl CanonicalSystem {
    pub fn new(alpha_s: f64, tau: f64) -> Result<Self> {
        if !(alpha_s.is_finite() && alpha_s > 0.0) {
            return Err(Error::invalid(format!("alpha_s must be positive, got {alpha_s}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { alpha_s, tau })
    }

    pub fn alpha_s(&self) -> f64 {
        self.alpha_s
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Closed-form phase `s(t) = exp(-alpha_s * t / tau)`.
    pub fn phase_at(&self, t: f64) -> f64 {
        (-self.alpha_s * t / self.tau).exp()
    }
}

/// Normalized radial-basis forcing term with per-dimension weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTerm {
    centers: Vec<f64>,
    widths: Vec<f64>,
    /// d rows of N weights each.
    weights: Vec<Vec<f64>>,
}

impl ForcingTerm {
    /// Centers must be strictly decreasing in (0, 1]; widths positive; the
    /// weight matrix is d x N.
    pub fn new(centers: Vec<f64>, widths: Vec<f64>, weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = centers.len();
        if n == 0 {
            return Err(Error::invalid("forcing term needs at least one basis"));
        }
        if widths.len() != n {
            return Err(Error::Dimension { expected: n, got: widths.len() });
        }
        for (i, c) in centers.iter().enumerate() {
            if !(c.is_finite() && *c > 0.0 && *c <= 1.0) {
                return Err(Error::invalid(format!("basis center {i} must lie in (0, 1], got {c}")));
            }
            if i + 1 < n && centers[i + 1] >= *c {
                return Err(Error::invalid(format!(
                    "basis centers must be strictly decreasing (violated at index {})",
                    i + 1
                )));
            }
        }
        for (i, h) in widths.iter().enumerate() {
            if !(h.is_finite() && *h > 0.0) {
                return Err(Error::invalid(format!("basis width {i} must be positive, got {h}")));
            }
        }
        if weights.is_empty() || weights.len() > MAX_DIM {
            return Err(Error::invalid(format!(
                "weight matrix must have 1..={MAX_DIM} rows, got {}",
                weights.len()
            )));
        }
        for row in &weights {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
        }
        Ok(Self { centers, widths, weights })
    }

    /// Evenly covers the phase interval: centers at the phase values of
    /// uniformly spaced times, `c_i = exp(-alpha_s * i / (N - 1))`, with
    /// widths `h_i = 1 / (2 (0.65 (c_{i+1} - c_i))^2)` and the last width
    /// copied. The 0.65 overlap factor keeps each activation local enough
    /// that the normalized mixture decays to the last basis weight as
    /// `s -> 0`; with full-gap widths every basis keeps finite support at
    /// `s = 0` and the forcing tends to a blend of all weights, which pushes
    /// the long-horizon attractor visibly off the goal.
    pub fn with_uniform_bases(alpha_s: f64, n_basis: usize, dim: usize) -> Result<Self> {
        if n_basis < 2 {
            return Err(Error::invalid(format!("need at least 2 bases, got {n_basis}")));
        }
        let centers: Vec<f64> = (0..n_basis)
            .map(|i| (-alpha_s * i as f64 / (n_basis - 1) as f64).exp())
            .collect();
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|w| {
                let gap = 0.65 * (w[1] - w[0]);
                1.0 / (2.0 * gap * gap)
            })
            .collect();
        widths.push(*widths.last().expect("n_basis >= 2"));
        ForcingTerm::new(centers, widths, vec![vec![0.0; n_basis]; dim])
    }

    pub fn n_basis(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<Vec<f64>>) -> Result<()> {
        if weights.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: weights.len() });
        }
        for row in &weights {
            if row.len() != self.n_basis() {
                return Err(Error::Dimension { expected: self.n_basis(), got: row.len() });
            }
        }
        self.weights = weights;
        Ok(())
    }

    /// Activations rescaled by the dominant basis: `exp(m - e_i(s))` where
    /// `e_i = h_i (s - c_i)^2` and `m = min_i e_i`. The normalized mixture is
    /// invariant under this shift, and the rescaling removes the underflow
    /// cliff far from all centers (where every raw Gaussian rounds to zero
    /// but the ratio is still perfectly well-defined). NLP iterates
    /// legitimately evaluate at phases outside (0, 1].
    fn raw_activations(&self, s: f64) -> Vec<f64> {
        let mut exps: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| h * (s - c) * (s - c))
            .collect();
        let m = exps.iter().copied().fold(f64::INFINITY, f64::min);
        for e in &mut exps {
            *e = (m - *e).exp();
        }
        exps
    }

    /// Unshifted Gaussians `exp(-h_i (s - c_i)^2)`, used by the LWR fit
    /// where each basis weights samples on an absolute scale.
    fn plain_activations(&self, s: f64) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| (-h * (s - c) * (s - c)).exp())
            .collect()
    }

    /// Normalized activations `psi_i(s) / sum_j psi_j(s)`.
    pub fn activations(&self, s: f64) -> Result<Vec<f64>> {
        if !s.is_finite() {
            return Err(Error::invalid(format!("phase must be finite, got {s}")));
        }
        let raw = self.raw_activations(s);
        let total: f64 = raw.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            // Name the basis whose activation degenerated (NaN exponent).
            let basis = raw.iter().position(|p| !p.is_finite()).unwrap_or(0);
            return Err(Error::NonFiniteForcing { basis, phase: s });
        }
        Ok(raw.into_iter().map(|p| p / total).collect())
    }

    /// `f(s)` per dimension, optionally with an override weight matrix (this
    /// is how the perturbed forcing `f~(s)` is evaluated with `w - zeta`).
    pub fn eval(&self, s: f64, weights_override: Option<&[Vec<f64>]>) -> Result<Vec<f64>> {
        let weights = match weights_override {
            Some(w) => {
                if w.len() != self.dim() {
                    return Err(Error::Dimension { expected: self.dim(), got: w.len() });
                }
                for row in w {
                    if row.len() != self.n_basis() {
                        return Err(Error::Dimension { expected: self.n_basis(), got: row.len() });
                    }
                }
                w
            }
            None => &self.weights,
        };
        let phi = self.activations(s)?;
        let out: Vec<f64> = weights.iter().map(|row| linalg::dot(row, &phi)).collect();
        for (i, v) in out.iter().enumerate() {
            if !v.is_finite() {
                // A finite activation vector with non-finite output means a
                // non-finite weight; report the offending basis.
                let basis = weights[i]
                    .iter()
                    .position(|w| !w.is_finite())
                    .unwrap_or(0);
                return Err(Error::NonFiniteForcing { basis, phase: s });
            }
        }
        Ok(out)
    }

    /// `d f / d s` per dimension, used by the collocation Jacobians.
    pub(crate) fn eval_with_phase_derivative(
        &self,
        s: f64,
        weights_override: Option<&[Vec<f64>]>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let weights = weights_override.unwrap_or(&self.weights);
        let raw = self.raw_activations(s);
        let total: f64 = raw.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            // Reuse the diagnostic path.
            self.activations(s)?;
        }
        let draw: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .zip(&raw)
            .map(|((c, h), p)| -2.0 * h * (s - c) * p)
            .collect();
        let dtotal: f64 = draw.iter().sum();
        let value: Vec<f64> = weights
            .iter()
            .map(|row| linalg::dot(row, &raw) / total)
            .collect();
        let deriv: Vec<f64> = weights
            .iter()
            .zip(&value)
            .map(|(row, v)| (linalg::dot(row, &draw) - v * dtotal) / total)
            .collect();
        Ok((value, deriv))
    }
}

/// A fitted DMP: canonical system, forcing term, and attractor gains.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpModel {
    canonical: CanonicalSystem,
    forcing: ForcingTerm,
    alpha_z: f64,
    beta_z: f64,
    y0: Vec<f64>,
    g: Vec<f64>,
}

/// Gains and basis count for [`fit_lwr`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub n_basis: usize,
    pub alpha_s: f64,
    pub alpha_z: f64,
    pub beta_z: f64,
}

impl Default for FitConfig {
    /// Critically damped attractor (`beta_z = alpha_z / 4`) with ~98% phase
    /// decay at `t = tau`.
    fn default() -> Self {
        Self { n_basis: 25, alpha_s: 4.0, alpha_z: 25.0, beta_z: 6.25 }
    }
}

impl DmpModel {
    pub fn new(
        canonical: CanonicalSystem,
        forcing: ForcingTerm,
        alpha_z: f64,
        beta_z: f64,
        y0: Vec<f64>,
        g: Vec<f64>,
    ) -> Result<Self> {
        if !(alpha_z.is_finite() && alpha_z > 0.0) {
            return Err(Error::invalid(format!("alpha_z must be positive, got {alpha_z}")));
        }
        if !(beta_z.is_finite() && beta_z > 0.0) {
            return Err(Error::invalid(format!("beta_z must be positive, got {beta_z}")));
        }
        let dim = forcing.dim();
        if y0.len() != dim {
            return Err(Error::Dimension { expected: dim, got: y0.len() });
        }
        if g.len() != dim {
            return Err(Error::Dimension { expected: dim, got: g.len() });
        }
        if !(linalg::all_finite(&y0) && linalg::all_finite(&g)) {
            return Err(Error::invalid("start/goal must be finite"));
        }
        Ok(Self { canonical, forcing, alpha_z, beta_z, y0, g })
    }

    pub fn canonical(&self) -> &CanonicalSystem {
        &self.canonical
    }

    pub fn forcing(&self) -> &ForcingTerm {
        &self.forcing
    }

    pub fn alpha_z(&self) -> f64 {
        self.alpha_z
    }

    pub fn beta_z(&self) -> f64 {
        self.beta_z
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn goal(&self) -> &[f64] {
        &self.g
    }

    pub fn tau(&self) -> f64 {
        self.canonical.tau()
    }

    pub fn dim(&self) -> usize {
        self.forcing.dim()
    }

    /// Reparameterize to a new start position.
    pub fn with_start(mut self, y0: Vec<f64>) -> Result<Self> {
        if y0.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: y0.len() });
        }
        self.y0 = y0;
        Ok(self)
    }

    /// Reparameterize to a new goal position.
    pub fn with_goal(mut self, g: Vec<f64>) -> Result<Self> {
        if g.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: g.len() });
        }
        self.g = g;
        Ok(self)
    }

    /// Model with `weights - zeta` substituted into the forcing term.
    pub fn with_perturbed_weights(&self, zeta: &[Vec<f64>]) -> Result<Self> {
        let perturbed = perturbed_weights(self.forcing.weights(), zeta)?;
        let mut model = self.clone();
        model.forcing.set_weights(perturbed)?;
        Ok(model)
    }

    /// Fixed-step classical RK4 integration of the coupled system from
    /// `s = 1`, `z = 0`, `y = y0`.
    pub fn rollout(
        &self,
        dt: f64,
        duration: f64,
        weights_override: Option<&[Vec<f64>]>,
    ) -> Result<Trajectory> {
        self.rollout_with_coupling(dt, duration, weights_override, |_, _, out| {
            out.fill(0.0);
            Ok(())
        })
    }

    /// Rollout with an additive acceleration coupling: the closure writes a
    /// d-dimensional term into `out` that is added to `tau * dz/dt` (used by
    /// the potential-field baseline).
    pub(crate) fn rollout_with_coupling<F>(
        &self,
        dt: f64,
        duration: f64,
        weights_override: Option<&[Vec<f64>]>,
        mut coupling: F,
    ) -> Result<Trajectory>
    where
        F: FnMut(&[f64], &[f64], &mut [f64]) -> Result<()>,
    {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("rollout dt must be positive, got {dt}")));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(format!("rollout duration must be positive, got {duration}")));
        }
        let d = self.dim();
        let n_steps = (duration / dt).round().max(1.0) as usize;
        let tau = self.tau();
        let alpha_s = self.canonical.alpha_s();

        // Packed state [s, z_1..z_d, y_1..y_d].
        let mut state = vec![0.0; 1 + 2 * d];
        state[0] = 1.0;
        state[1 + d..].copy_from_slice(&self.y0);

        let mut couple = vec![0.0; d];
        let mut deriv = |x: &[f64], couple: &mut Vec<f64>, dx: &mut [f64]| -> Result<()> {
            let s = x[0];
            let z = &x[1..1 + d];
            let y = &x[1 + d..];
            let f = self.forcing.eval(s, weights_override)?;
            coupling(y, z, couple)?;
            dx[0] = -alpha_s * s / tau;
            for j in 0..d {
                dx[1 + j] =
                    (self.alpha_z * (self.beta_z * (self.g[j] - y[j]) - z[j]) + f[j] + couple[j])
                        / tau;
                dx[1 + d + j] = z[j] / tau;
            }
            Ok(())
        };

        let n_state = 1 + 2 * d;
        let mut times = Vec::with_capacity(n_steps + 1);
        let mut states = Vec::with_capacity(n_steps + 1);
        let push =
            |times: &mut Vec<f64>, states: &mut Vec<TrajectoryState>, t: f64, x: &[f64]| {
                times.push(t);
                states.push(TrajectoryState {
                    s: x[0],
                    z: x[1..1 + d].to_vec(),
                    y: x[1 + d..].to_vec(),
                });
            };
        push(&mut times, &mut states, 0.0, &state);

        let mut k1 = vec![0.0; n_state];
        let mut k2 = vec![0.0; n_state];
        let mut k3 = vec![0.0; n_state];
        let mut k4 = vec![0.0; n_state];
        let mut tmp = vec![0.0; n_state];

        for step in 0..n_steps {
            let t = step as f64 * dt;
            deriv(&state, &mut couple, &mut k1)?;
            for i in 0..n_state {
                tmp[i] = state[i] + 0.5 * dt * k1[i];
            }
            deriv(&tmp, &mut couple, &mut k2)?;
            for i in 0..n_state {
                tmp[i] = state[i] + 0.5 * dt * k2[i];
            }
            deriv(&tmp, &mut couple, &mut k3)?;
            for i in 0..n_state {
                tmp[i] = state[i] + dt * k3[i];
            }
            deriv(&tmp, &mut couple, &mut k4)?;
            for i in 0..n_state {
                state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let t_next = (step + 1) as f64 * dt;
            if !linalg::all_finite(&state) {
                return Err(Error::Divergence { time: t_next });
            }
            push(&mut times, &mut states, t_next, &state);
            let _ = t;
        }
        Trajectory::new(times, states)
    }
}

/// `w - zeta`, validating shapes.
pub fn perturbed_weights(weights: &[Vec<f64>], zeta: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if zeta.len() != weights.len() {
        return Err(Error::Dimension { expected: weights.len(), got: zeta.len() });
    }
    let mut out = Vec::with_capacity(weights.len());
    for (wrow, zrow) in weights.iter().zip(zeta) {
        if zrow.len() != wrow.len() {
            return Err(Error::Dimension { expected: wrow.len(), got: zrow.len() });
        }
        out.push(wrow.iter().zip(zrow).map(|(w, z)| w - z).collect());
    }
    Ok(out)
}

/// Fit a DMP to a demonstration by locally weighted regression.
///
/// Sets `tau` to the demo duration and `y0`/`g` to its first/last sample,
/// computes target forces `f_t = tau^2 ydd - alpha_z (beta_z (g - y) - tau yd)`
/// (the transformation system rearranged with `z = tau yd`), and solves the
/// per-basis weighted least squares `w_i = sum_t psi_i(s_t) f_t / sum_t
/// psi_i(s_t)` independently per dimension. Because the forcing has no phase
/// modulation the regressor is the constant 1 and this weighted mean is the
/// exact LWR solution.
pub fn fit_lwr(demo: &Demonstration, config: &FitConfig) -> Result<DmpModel> {
    if config.n_basis < 2 {
        return Err(Error::invalid(format!("n_basis must be >= 2, got {}", config.n_basis)));
    }
    if demo.len() < config.n_basis {
        return Err(Error::Fit(format!(
            "{} samples cannot support {} bases (ill-conditioned fit)",
            demo.len(),
            config.n_basis
        )));
    }
    let d = demo.dim();
    let n = demo.len();
    let dt = demo.dt();
    let tau = demo.duration();
    let pos = demo.positions();
    let y0 = pos[0].clone();
    let g = pos[n - 1].clone();

    // Central differences in the interior, one-sided at the ends.
    let mut vel = vec![vec![0.0; d]; n];
    let mut acc = vec![vec![0.0; d]; n];
    for j in 0..d {
        vel[0][j] = (pos[1][j] - pos[0][j]) / dt;
        vel[n - 1][j] = (pos[n - 1][j] - pos[n - 2][j]) / dt;
        for k in 1..n - 1 {
            vel[k][j] = (pos[k + 1][j] - pos[k - 1][j]) / (2.0 * dt);
        }
        for k in 1..n - 1 {
            acc[k][j] = (pos[k + 1][j] - 2.0 * pos[k][j] + pos[k - 1][j]) / (dt * dt);
        }
        acc[0][j] = (pos[2][j] - 2.0 * pos[1][j] + pos[0][j]) / (dt * dt);
        acc[n - 1][j] = (pos[n - 1][j] - 2.0 * pos[n - 2][j] + pos[n - 3][j]) / (dt * dt);
    }

    let canonical = CanonicalSystem::new(config.alpha_s, tau)?;
    let mut forcing = ForcingTerm::with_uniform_bases(config.alpha_s, config.n_basis, d)?;

    // Target forces and per-basis weighted means.
    let mut weights = vec![vec![0.0; config.n_basis]; d];
    let mut psi_sums = vec![0.0; config.n_basis];
    let mut psi_force = vec![vec![0.0; config.n_basis]; d];
    for k in 0..n {
        let t = k as f64 * dt;
        let s = canonical.phase_at(t);
        let raw = forcing.plain_activations(s);
        for (i, p) in raw.iter().enumerate() {
            psi_sums[i] += p;
            for j in 0..d {
                let f_target = tau * tau * acc[k][j]
                    - config.alpha_z * (config.beta_z * (g[j] - pos[k][j]) - tau * vel[k][j]);
                psi_force[j][i] += p * f_target;
            }
        }
    }
    for i in 0..config.n_basis {
        if psi_sums[i] <= 0.0 || !psi_sums[i].is_finite() {
            return Err(Error::Fit(format!("basis {i} has no support on the demonstration")));
        }
        for j in 0..d {
            weights[j][i] = psi_force[j][i] / psi_sums[i];
        }
    }
    forcing.set_weights(weights)?;
    DmpModel::new(canonical, forcing, config.alpha_z, config.beta_z, y0, g)
}

/// A single rollout state: phase, scaled velocity, and position.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub s: f64,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

/// A time-stamped state rollout: `x(t) = [s, z, y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<TrajectoryState>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<TrajectoryState>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Dimension { expected: times.len(), got: states.len() });
        }
        if times.is_empty() {
            return Err(Error::invalid("trajectory must have at least one sample"));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "trajectory times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let d = states[0].y.len();
        for st in &states {
            if st.y.len() != d || st.z.len() != d {
                return Err(Error::Dimension { expected: d, got: st.y.len().max(st.z.len()) });
            }
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[TrajectoryState] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].y.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &TrajectoryState {
        self.states.last().expect("trajectory non-empty")
    }

    /// Position error against a reference sampled on the same grid:
    /// `sqrt(mean_k |y_k - ref_k|^2)`.
    pub fn position_rmse(&self, reference: &[Vec<f64>]) -> f64 {
        let n = self.states.len().min(reference.len());
        let mut acc = 0.0;
        for k in 0..n {
            let e = linalg::dist(&self.states[k].y, &reference[k]);
            acc += e * e;
        }
        (acc / n as f64).sqrt()
    }
}
