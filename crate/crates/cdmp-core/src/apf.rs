//! Velocity-dependent artificial-potential-field coupling, the comparison
//! baseline. For each obstacle point `o` the dynamic potential
//! `U = lambda * cos(theta)^beta * |v| / |y - o|` is active while the
//! velocity points into the approach cone (`theta`, the angle between `v`
//! and `o - y`, below pi/2); its negative position-gradient is added to the
//! transformation-system acceleration. Steering fields of this family are
//! cheap but have no certificate and are trapped by concave obstacle
//! arrangements, which is the point of the comparison.

use serde::{Deserialize, Serialize};

use crate::dmp::{DmpModel, Trajectory};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sdf::{Polarity, Shape};
use crate::zbf::SafetyScene;

/// Scene-file parameters (the optional `"apf"` key).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApfParams {
    pub lambda: f64,
    pub beta: f64,
    pub points_per_primitive: usize,
}

impl Default for ApfParams {
    fn default() -> Self {
        Self { lambda: 1.0, beta: 2.0, points_per_primitive: 1 }
    }
}

impl ApfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!("apf lambda must be positive, got {}", self.lambda)));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::invalid(format!("apf beta must be > 1, got {}", self.beta)));
        }
        if self.points_per_primitive == 0 {
            return Err(Error::invalid("apf points_per_primitive must be >= 1"));
        }
        Ok(())
    }
}

/// Runtime configuration: gains plus the explicit obstacle point set.
#[derive(Debug, Clone, PartialEq)]
pub struct ApfConfig {
    pub lambda_gain: f64,
    pub beta_exp: f64,
    pub obstacle_points: Vec<Vec<f64>>,
    /// Per-obstacle contribution cap (singularity guard).
    pub max_coupling: f64,
}

impl ApfConfig {
    pub fn new(lambda_gain: f64, beta_exp: f64, obstacle_points: Vec<Vec<f64>>) -> Result<Self> {
        if !(lambda_gain.is_finite() && lambda_gain > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda_gain}")));
        }
        if !(beta_exp.is_finite() && beta_exp > 1.0) {
            return Err(Error::invalid(format!("beta must be > 1, got {beta_exp}")));
        }
        Ok(Self { lambda_gain, beta_exp, obstacle_points, max_coupling: 1e3 })
    }

    /// Extract obstacle points from the avoid primitives of a scene.
    pub fn from_scene(scene: &SafetyScene, params: &ApfParams) -> Result<Self> {
        params.validate()?;
        let mut points = Vec::new();
        for prim in scene.primitives() {
            if prim.polarity == Polarity::Avoid {
                points.extend(obstacle_points(&prim.shape, params.points_per_primitive));
            }
        }
        Self::new(params.lambda, params.beta, points)
    }
}

/// Representative point plus deterministic surface samples for a shape.
fn obstacle_points(shape: &Shape, count: usize) -> Vec<Vec<f64>> {
    let d = shape.dim();
    let center: Vec<f64> = match shape {
        Shape::Sphere { center, .. } => center.clone(),
        Shape::Box { center, .. } => center.clone(),
        Shape::Halfspace { normal, offset } => linalg::scaled(normal, *offset),
        Shape::Capsule { a, b, .. } => {
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
        }
        Shape::Cone { apex, .. } => apex.clone(),
    };
    let mut out = vec![center.clone()];
    if count <= 1 {
        return out;
    }
    // Surface samples: cast deterministic unit directions from the
    // representative point and project them to the boundary by bisecting the
    // signed distance along the ray (all shapes are star-shaped from their
    // representative except the halfspace, handled separately).
    match shape {
        Shape::Halfspace { normal, .. } => {
            // Lattice in the plane around the representative point.
            let t1 = tangent(normal, 0);
            for i in 0..count - 1 {
                let step = (i / 2 + 1) as f64 * 0.2 * if i % 2 == 0 { 1.0 } else { -1.0 };
                let mut p = center.clone();
                linalg::axpy(&mut p, step, &t1);
                out.push(p);
            }
        }
        _ => {
            for i in 0..count - 1 {
                let dir = unit_direction(d, i, count - 1);
                if let Some(p) = surface_point(shape, &center, &dir) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn tangent(normal: &[f64], which: usize) -> Vec<f64> {
    let d = normal.len();
    let mut best = 0;
    for j in 1..d {
        if normal[j].abs() < normal[best].abs() {
            best = j;
        }
    }
    let mut v = vec![0.0; d];
    v[(best + which) % d] = 1.0;
    let proj = linalg::dot(&v, normal);
    for j in 0..d {
        v[j] -= proj * normal[j];
    }
    linalg::normalized(&v).unwrap_or(v)
}

fn unit_direction(d: usize, i: usize, n: usize) -> Vec<f64> {
    if d == 2 {
        let ang = std::f64::consts::TAU * i as f64 / n as f64;
        vec![ang.cos(), ang.sin()]
    } else {
        // Fibonacci sphere.
        let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let ang = golden * i as f64;
        vec![r * ang.cos(), r * ang.sin(), z]
    }
}

fn surface_point(shape: &Shape, from: &[f64], dir: &[f64]) -> Option<Vec<f64>> {
    // Bracket the boundary along the ray, then bisect sigma to ~1e-9.
    let at = |t: f64| -> Vec<f64> {
        let mut p = from.to_vec();
        linalg::axpy(&mut p, t, dir);
        p
    };
    let mut hi = 0.1;
    let mut tries = 0;
    while shape.signed_distance(&at(hi)) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shape.signed_distance(&at(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(at(0.5 * (lo + hi)))
}

/// The scalar dynamic potential summed over active obstacle points (used by
/// the finite-difference tests).
pub fn apf_potential(config: &ApfConfig, y: &[f64], ydot: &[f64]) -> f64 {
    let speed = linalg::norm(ydot);
    if speed == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for o in &config.obstacle_points {
        let r = linalg::sub(y, o);
        let dist = linalg::norm(&r);
        if dist <= 1e-12 {
            continue;
        }
        let cos_theta = -linalg::dot(ydot, &r) / (speed * dist);
        if cos_theta <= 0.0 {
            continue;
        }
        total += config.lambda_gain * cos_theta.powf(config.beta_exp) * speed / dist;
    }
    total
}

/// Steering coupling: sum over obstacle points of the negative position
/// gradient of the dynamic potential, zero outside the approach cone or at
/// rest, capped per obstacle at `max_coupling`.
pub fn apf_coupling(config: &ApfConfig, y: &[f64], ydot: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut out = vec![0.0; d];
    let speed = linalg::norm(ydot);
    if speed == 0.0 {
        return out;
    }
    let vhat = linalg::scaled(ydot, 1.0 / speed);
    for o in &config.obstacle_points {
        let r = linalg::sub(y, o);
        let dist = linalg::norm(&r);
        if dist <= 1e-12 {
            // Coincident with the obstacle point: direction undefined; push
            // back along the velocity at the cap.
            linalg::axpy(&mut out, -config.max_coupling, &vhat);
            continue;
        }
        let rhat = linalg::scaled(&r, 1.0 / dist);
        let cos_theta = -linalg::dot(&vhat, &rhat);
        if cos_theta <= 0.0 {
            continue;
        }
        // grad C = ((vhat.rhat) rhat - vhat) / dist, C = -vhat.rhat
        let vr = linalg::dot(&vhat, &rhat);
        let mut grad_c = vec![0.0; d];
        for j in 0..d {
            grad_c[j] = (vr * rhat[j] - vhat[j]) / dist;
        }
        // -grad U = lambda |v| (C^beta rhat / dist^2 - beta C^(beta-1) grad C / dist)
        let c_beta = cos_theta.powf(config.beta_exp);
        let c_beta1 = cos_theta.powf(config.beta_exp - 1.0);
        let mut contrib = vec![0.0; d];
        for j in 0..d {
            contrib[j] = config.lambda_gain
                * speed
                * (c_beta * rhat[j] / (dist * dist)
                    - config.beta_exp * c_beta1 * grad_c[j] / dist);
        }
        let mag = linalg::norm(&contrib);
        if mag > config.max_coupling {
            let scale = config.max_coupling / mag;
            for c in &mut contrib {
                *c *= scale;
            }
        }
        for j in 0..d {
            out[j] += contrib[j];
        }
    }
    out
}

/// DMP rollout with the potential-field coupling added to `tau * dz/dt`.
pub fn rollout_with_apf(
    model: &DmpModel,
    config: &ApfConfig,
    dt: f64,
    duration: f64,
) -> Result<Trajectory> {
    for o in &config.obstacle_points {
        if o.len() != model.dim() {
            return Err(Error::Dimension { expected: model.dim(), got: o.len() });
        }
    }
    let tau = model.tau();
    model.rollout_with_coupling(dt, duration, None, |y, z, out| {
        let ydot: Vec<f64> = z.iter().map(|zj| zj / tau).collect();
        let c = apf_coupling(config, y, &ydot);
        out.copy_from_slice(&c);
        Ok(())
    })
}
