//! Signed-distance primitives and the smooth-min blend.
//!
//! Sign convention: `sigma < 0` strictly inside the shape, `0` on the
//! boundary, `> 0` outside. `|grad sigma| = 1` wherever the gradient is
//! defined; at measure-zero non-smooth sets (box medial axis, capsule spine,
//! cone axis) a deterministic subgradient is returned, always preferring the
//! lowest axis index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Geometric primitive. All lengths in meters; `normal`/`axis` must be unit
/// vectors (validated, not normalized, so files round-trip losslessly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Sphere {
        center: Vec<f64>,
        radius: f64,
    },
    /// Axis-aligned box.
    Box {
        center: Vec<f64>,
        half_extents: Vec<f64>,
    },
    /// The obstacle occupies `{p : normal . p <= offset}`.
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    Capsule {
        a: Vec<f64>,
        b: Vec<f64>,
        radius: f64,
    },
    /// Swept-circle cone: apex point, unit axis, and the slope of the radius
    /// as a linear function of the axial coordinate (`radius = slope * t` at
    /// axial distance `t >= 0` from the apex).
    Cone {
        apex: Vec<f64>,
        axis: Vec<f64>,
        slope: f64,
    },
}

/// Whether the safe set excludes the shape (`avoid`) or is the shape
/// interior (`contain`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Avoid,
    Contain,
}

/// A shape with avoid/contain polarity; the unit every scene is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfPrimitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub polarity: Polarity,
}

const UNIT_TOL: f64 = 1e-9;

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Sphere { center, .. } => center.len(),
            Shape::Box { center, .. } => center.len(),
            Shape::Halfspace { normal, .. } => normal.len(),
            Shape::Capsule { a, .. } => a.len(),
            Shape::Cone { apex, .. } => apex.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d < 2 || d > crate::dmp::MAX_DIM {
            return Err(Error::invalid(format!("shape dimension must be 2 or 3, got {d}")));
        }
        match self {
            Shape::Sphere { center, radius } => {
                require_finite(center, "sphere center")?;
                require_positive(*radius, "sphere radius")?;
            }
            Shape::Box { center, half_extents } => {
                require_finite(center, "box center")?;
                if half_extents.len() != d {
                    return Err(Error::Dimension { expected: d, got: half_extents.len() });
                }
                for h in half_extents {
                    require_positive(*h, "box half extent")?;
                }
            }
            Shape::Halfspace { normal, offset } => {
                require_finite(normal, "halfspace normal")?;
                if !offset.is_finite() {
                    return Err(Error::invalid("halfspace offset must be finite"));
                }
                if (linalg::norm(normal) - 1.0).abs() > UNIT_TOL {
                    return Err(Error::invalid("halfspace normal must be unit length"));
                }
            }
            Shape::Capsule { a, b, radius } => {
                require_finite(a, "capsule endpoint a")?;
                require_finite(b, "capsule endpoint b")?;
                if b.len() != d {
                    return Err(Error::Dimension { expected: d, got: b.len() });
                }
                require_positive(*radius, "capsule radius")?;
                if linalg::dist(a, b) <= f64::EPSILON {
                    return Err(Error::invalid("capsule endpoints must be distinct"));
                }
            }
            Shape::Cone { apex, axis, slope } => {
                require_finite(apex, "cone apex")?;
                require_finite(axis, "cone axis")?;
                if axis.len() != d {
                    return Err(Error::Dimension { expected: d, got: axis.len() });
                }
                if (linalg::norm(axis) - 1.0).abs() > UNIT_TOL {
                    return Err(Error::invalid("cone axis must be unit length"));
                }
                require_positive(*slope, "cone slope")?;
            }
        }
        Ok(())
    }

    /// Exact signed distance (exact interior face distance for the box).
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        self.signed_distance_grad(p).0
    }

    /// Signed distance with its analytic gradient.
    pub fn signed_distance_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let (sigma, grad, _) = self.eval(p, None);
        (sigma, grad)
    }

    /// Signed distance, gradient, and Hessian-vector product `H sigma . v`.
    pub fn signed_distance_grad_hvp(&self, p: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let (sigma, grad, hvp) = self.eval(p, Some(v));
        (sigma, grad, hvp.expect("hvp requested"))
    }

    fn eval(&self, p: &[f64], v: Option<&[f64]>) -> (f64, Vec<f64>, Option<Vec<f64>>) {
        let d = self.dim();
        debug_assert_eq!(p.len(), d);
        match self {
            Shape::Sphere { center, radius } => {
                let u = linalg::sub(p, center);
                point_distance_eval(&u, *radius, v)
            }
            Shape::Box { center, half_extents } => box_eval(p, center, half_extents, v),
            Shape::Halfspace { normal, offset } => {
                let sigma = linalg::dot(normal, p) - offset;
                let hvp = v.map(|_| vec![0.0; d]);
                (sigma, normal.clone(), hvp)
            }
            Shape::Capsule { a, b, radius } => capsule_eval(p, a, b, *radius, v),
            Shape::Cone { apex, axis, slope } => cone_eval(p, apex, axis, *slope, v),
        }
    }
}

impl SdfPrimitive {
    pub fn avoid(shape: Shape) -> Self {
        Self { shape, polarity: Polarity::Avoid }
    }

    pub fn contain(shape: Shape) -> Self {
        Self { shape, polarity: Polarity::Contain }
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()
    }

    /// Barrier contribution: `sigma` for avoid, `-sigma` for contain.
    pub fn term(&self, p: &[f64]) -> f64 {
        let s = self.shape.signed_distance(p);
        match self.polarity {
            Polarity::Avoid => s,
            Polarity::Contain => -s,
        }
    }

    pub fn term_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let (s, g) = self.shape.signed_distance_grad(p);
        match self.polarity {
            Polarity::Avoid => (s, g),
            Polarity::Contain => (-s, linalg::scaled(&g, -1.0)),
        }
    }

    pub fn term_grad_hvp(&self, p: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let (s, g, hv) = self.shape.signed_distance_grad_hvp(p, v);
        match self.polarity {
            Polarity::Avoid => (s, g, hv),
            Polarity::Contain => (-s, linalg::scaled(&g, -1.0), linalg::scaled(&hv, -1.0)),
        }
    }
}

fn require_finite(v: &[f64], what: &str) -> Result<()> {
    if !linalg::all_finite(v) {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    Ok(())
}

fn require_positive(x: f64, what: &str) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(format!("{what} must be positive, got {x}")));
    }
    Ok(())
}

/// Deterministic unit vector orthogonal to a unit `axis`: take the basis
/// vector with the smallest |component| (lowest index on ties), project out
/// the axis, normalize.
fn orthogonal_unit(axis: &[f64]) -> Vec<f64> {
    let d = axis.len();
    let mut best = 0;
    for j in 1..d {
        if axis[j].abs() < axis[best].abs() {
            best = j;
        }
    }
    let mut v = vec![0.0; d];
    v[best] = 1.0;
    let proj = axis[best];
    for j in 0..d {
        v[j] -= proj * axis[j];
    }
    linalg::normalized(&v).expect("axis is unit, basis projection nonzero")
}

const TINY: f64 = 1e-300;

/// Distance to a point (sphere-like): `sigma = |u| - radius` with
/// `H = (I - uu^T/|u|^2) / |u|`.
fn point_distance_eval(u: &[f64], radius: f64, v: Option<&[f64]>) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let d = u.len();
    let n = linalg::norm(u);
    if n <= TINY {
        // Exact center: any unit subgradient; pick +x. Curvature undefined.
        let mut g = vec![0.0; d];
        g[0] = 1.0;
        return (-radius, g, v.map(|_| vec![0.0; d]));
    }
    let uhat = linalg::scaled(u, 1.0 / n);
    let hvp = v.map(|vv| {
        let t = linalg::dot(&uhat, vv);
        let mut out = vec![0.0; d];
        for j in 0..d {
            out[j] = (vv[j] - t * uhat[j]) / n;
        }
        out
    });
    (n - radius, uhat, hvp)
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn box_eval(
    p: &[f64],
    center: &[f64],
    half: &[f64],
    v: Option<&[f64]>,
) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let d = p.len();
    let mut q = vec![0.0; d];
    let mut m = vec![0.0; d];
    for j in 0..d {
        let r = p[j] - center[j];
        m[j] = sgn(r);
        q[j] = r.abs() - half[j];
    }
    let outside = q.iter().any(|x| *x > 0.0);
    if outside {
        let w: Vec<f64> = q.iter().map(|x| x.max(0.0)).collect();
        let n = linalg::norm(&w);
        let mut g = vec![0.0; d];
        for j in 0..d {
            if q[j] > 0.0 {
                g[j] = m[j] * w[j] / n;
            }
        }
        let hvp = v.map(|vv| {
            let mut t = 0.0;
            for j in 0..d {
                if q[j] > 0.0 {
                    t += m[j] * w[j] * vv[j];
                }
            }
            let mut out = vec![0.0; d];
            for j in 0..d {
                if q[j] > 0.0 {
                    out[j] = vv[j] / n - m[j] * w[j] * t / (n * n * n);
                }
            }
            out
        });
        (n, g, hvp)
    } else {
        // Interior: exact distance to the nearest face; lowest axis on ties.
        let mut jstar = 0;
        for j in 1..d {
            if q[j] > q[jstar] {
                jstar = j;
            }
        }
        let mut g = vec![0.0; d];
        g[jstar] = m[jstar];
        (q[jstar], g, v.map(|_| vec![0.0; d]))
    }
}

fn capsule_eval(
    p: &[f64],
    a: &[f64],
    b: &[f64],
    radius: f64,
    v: Option<&[f64]>,
) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let d = p.len();
    let ba = linalg::sub(b, a);
    let pa = linalg::sub(p, a);
    let t = linalg::dot(&pa, &ba) / linalg::dot(&ba, &ba);
    if t <= 0.0 {
        return point_distance_eval(&pa, radius, v);
    }
    if t >= 1.0 {
        let pb = linalg::sub(p, b);
        return point_distance_eval(&pb, radius, v);
    }
    // Cylindrical section: distance to the spine line.
    let bhat = linalg::normalized(&ba).expect("capsule endpoints distinct");
    let mut u = pa.clone();
    let along = linalg::dot(&pa, &bhat);
    linalg::axpy(&mut u, -along, &bhat);
    let n = linalg::norm(&u);
    if n <= TINY {
        // On the spine: deterministic radial subgradient.
        let g = orthogonal_unit(&bhat);
        return (-radius, g, v.map(|_| vec![0.0; d]));
    }
    let uhat = linalg::scaled(&u, 1.0 / n);
    let hvp = v.map(|vv| {
        let va = linalg::dot(&bhat, vv);
        let vu = linalg::dot(&uhat, vv);
        let mut out = vec![0.0; d];
        for j in 0..d {
            out[j] = (vv[j] - va * bhat[j] - vu * uhat[j]) / n;
        }
        out
    });
    (n - radius, uhat, hvp)
}

fn cone_eval(
    p: &[f64],
    apex: &[f64],
    axis: &[f64],
    slope: f64,
    v: Option<&[f64]>,
) -> (f64, Vec<f64>, Option<Vec<f64>>) {
    let d = p.len();
    let hyp = (1.0 + slope * slope).sqrt();
    let sin_t = slope / hyp;
    let cos_t = 1.0 / hyp;
    let u = linalg::sub(p, apex);
    let x = linalg::dot(&u, axis);
    let mut w = u.clone();
    linalg::axpy(&mut w, -x, axis);
    let rho = linalg::norm(&w);

    // Projection onto the boundary ray in (radial, axial) coordinates; when
    // non-positive the nearest boundary point is the apex itself.
    let proj = rho * sin_t + x * cos_t;
    if proj <= 0.0 {
        let n = linalg::norm(&u);
        if n <= TINY {
            let g = linalg::scaled(axis, -1.0);
            return (0.0, g, v.map(|_| vec![0.0; d]));
        }
        let uhat = linalg::scaled(&u, 1.0 / n);
        let hvp = v.map(|vv| {
            let t = linalg::dot(&uhat, vv);
            let mut out = vec![0.0; d];
            for j in 0..d {
                out[j] = (vv[j] - t * uhat[j]) / n;
            }
            out
        });
        return (n, uhat, hvp);
    }

    let what = if rho <= TINY { orthogonal_unit(axis) } else { linalg::scaled(&w, 1.0 / rho) };
    let sigma = rho * cos_t - x * sin_t;
    let mut g = vec![0.0; d];
    for j in 0..d {
        g[j] = cos_t * what[j] - sin_t * axis[j];
    }
    let hvp = v.map(|vv| {
        let mut out = vec![0.0; d];
        if rho > TINY {
            let va = linalg::dot(axis, vv);
            let vw = linalg::dot(&what, vv);
            for j in 0..d {
                out[j] = cos_t * (vv[j] - va * axis[j] - vw * what[j]) / rho;
            }
        }
        out
    });
    (sigma, g, hvp)
}

/// Twice-differentiable lower bound of `min(d1, d2)` with blending radius
/// `k`: `min(d1,d2) - k/6 * (max(k - |d1-d2|, 0)/k)^3`.
pub fn smooth_min(d1: f64, d2: f64, k: f64) -> f64 {
    debug_assert!(k > 0.0);
    let t = (k - (d1 - d2).abs()).max(0.0) / k;
    d1.min(d2) - k * t * t * t / 6.0
}

/// `(value, d/d_d1, d/d_d2)`. The partials are continuous across both the
/// `d1 = d2` tie and the `|d1 - d2| = k` blend edge and always sum to 1.
pub(crate) fn smooth_min_partials(d1: f64, d2: f64, k: f64) -> (f64, f64, f64) {
    let delta = d1 - d2;
    let t = (k - delta.abs()).max(0.0) / k;
    let value = d1.min(d2) - k * t * t * t / 6.0;
    let half = t * t / 2.0;
    let (p1, p2) = if delta < 0.0 {
        (1.0 - half, half)
    } else if delta > 0.0 {
        (half, 1.0 - half)
    } else {
        (0.5, 0.5)
    };
    (value, p1, p2)
}

/// Second partials `(f_11, f_12, f_22)`; zero outside the blend zone.
pub(crate) fn smooth_min_second_partials(d1: f64, d2: f64, k: f64) -> (f64, f64, f64) {
    let delta = (d1 - d2).abs();
    if delta >= k {
        (0.0, 0.0, 0.0)
    } else {
        let t = (k - delta) / k;
        (-t / k, t / k, -t / k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_trivial_values() {
        let s = Shape::Sphere { center: vec![0.0, 0.0, 0.0], radius: 1.0 };
        assert_abs_diff_eq!(s.signed_distance(&[0.0, 0.0, 0.0]), -1.0);
        assert_abs_diff_eq!(s.signed_distance(&[2.0, 0.0, 0.0]), 1.0);
    }

    #[test]
    fn box_corner_distance() {
        let b = Shape::Box { center: vec![0.0, 0.0, 0.0], half_extents: vec![1.0, 1.0, 1.0] };
        assert_abs_diff_eq!(b.signed_distance(&[2.0, 2.0, 0.0]), 2.0f64.sqrt(), epsilon = 1e-15);
        // Interior: distance to nearest face.
        assert_abs_diff_eq!(b.signed_distance(&[0.5, 0.0, 0.0]), -0.5, epsilon = 1e-15);
        // Face.
        assert_abs_diff_eq!(b.signed_distance(&[1.5, 0.0, 0.0]), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn halfspace_distance_is_linear() {
        let h = Shape::Halfspace { normal: vec![0.0, 0.0, 1.0], offset: 0.0 };
        assert_abs_diff_eq!(h.signed_distance(&[5.0, -2.0, 0.3]), 0.3);
        assert_abs_diff_eq!(h.signed_distance(&[0.0, 0.0, -0.7]), -0.7);
    }

    #[test]
    fn capsule_distances() {
        let c = Shape::Capsule { a: vec![0.0, 0.0, 0.0], b: vec![0.0, 0.0, 1.0], radius: 0.5 };
        assert_abs_diff_eq!(c.signed_distance(&[1.0, 0.0, 0.5]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.signed_distance(&[0.0, 0.0, 2.0]), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.signed_distance(&[0.0, 0.0, 0.5]), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn cone_distances() {
        // 45-degree cone opening along +z from the origin.
        let c = Shape::Cone { apex: vec![0.0, 0.0, 0.0], axis: vec![0.0, 0.0, 1.0], slope: 1.0 };
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(c.signed_distance(&[0.0, 0.0, 1.0]), -inv_sqrt2, epsilon = 1e-12);
        assert_abs_diff_eq!(c.signed_distance(&[2.0, 0.0, 0.0]), 2.0 * inv_sqrt2, epsilon = 1e-12);
        // Behind the apex the nearest point is the apex.
        assert_abs_diff_eq!(c.signed_distance(&[0.0, 0.0, -2.0]), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.signed_distance(&[0.0, 0.0, 0.0]), 0.0, epsilon = 1e-12);
    }

    fn sample_shapes() -> Vec<Shape> {
        vec![
            Shape::Sphere { center: vec![0.2, -0.1, 0.3], radius: 0.7 },
            Shape::Box { center: vec![0.1, 0.0, -0.2], half_extents: vec![0.4, 0.6, 0.3] },
            Shape::Halfspace {
                normal: vec![0.6, 0.8, 0.0],
                offset: 0.25,
            },
            Shape::Capsule { a: vec![-0.3, 0.0, 0.1], b: vec![0.4, 0.2, 0.5], radius: 0.25 },
            Shape::Cone { apex: vec![0.0, 0.1, -0.5], axis: vec![0.0, 0.0, 1.0], slope: 0.5 },
        ]
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eps = 1e-6;
        for shape in sample_shapes() {
            let mut checked = 0;
            while checked < 200 {
                let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                // Stay clear of non-smooth sets: require a healthy gradient
                // one step before and after, and consistency.
                let (_, g) = shape.signed_distance_grad(&p);
                let mut fd = vec![0.0; 3];
                let mut ok = true;
                for j in 0..3 {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    pp[j] += eps;
                    pm[j] -= eps;
                    fd[j] = (shape.signed_distance(&pp) - shape.signed_distance(&pm)) / (2.0 * eps);
                    if (fd[j] - g[j]).abs() > 0.3 {
                        ok = false; // crossed a branch boundary; skip sample
                    }
                }
                if !ok {
                    continue;
                }
                for j in 0..3 {
                    assert!(
                        (fd[j] - g[j]).abs() < 1e-6,
                        "{shape:?} at {p:?}: fd {fd:?} vs grad {g:?}"
                    );
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn hessian_vector_products_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps = 1e-5;
        for shape in sample_shapes() {
            let mut checked = 0;
            while checked < 100 {
                let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (_, _, hv) = shape.signed_distance_grad_hvp(&p, &v);
                let pp: Vec<f64> = p.iter().zip(&v).map(|(x, w)| x + eps * w).collect();
                let pm: Vec<f64> = p.iter().zip(&v).map(|(x, w)| x - eps * w).collect();
                let (_, gp) = shape.signed_distance_grad(&pp);
                let (_, gm) = shape.signed_distance_grad(&pm);
                let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
                // Skip branch crossings (gradient jumps).
                if fd.iter().zip(&hv).any(|(a, b)| (a - b).abs() > 0.5) {
                    continue;
                }
                for j in 0..3 {
                    assert!(
                        (fd[j] - hv[j]).abs() < 1e-4,
                        "{shape:?} at {p:?} dir {v:?}: fd {fd:?} vs hvp {hv:?}"
                    );
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn gradient_is_unit_where_defined() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for shape in sample_shapes() {
            for _ in 0..300 {
                let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                let (sigma, g) = shape.signed_distance_grad(&p);
                if sigma.abs() < 1e-6 {
                    continue;
                }
                let n = crate::linalg::norm(&g);
                assert!((n - 1.0).abs() < 1e-9, "{shape:?} grad norm {n} at {p:?}");
            }
        }
    }

    #[test]
    fn smooth_min_trivial_values() {
        // |d1 - d2| = 0: full blend correction k/6.
        assert_abs_diff_eq!(smooth_min(3.0, 3.0, 0.6), 2.9, epsilon = 1e-15);
        // Gap >= k: exactly the min.
        assert_abs_diff_eq!(smooth_min(0.0, 5.0, 1.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn smooth_min_partials_match_finite_differences() {
        let eps = 1e-7;
        for (d1, d2, k) in [(0.3, 0.5, 0.4), (1.0, -0.2, 0.7), (2.0, 2.1, 0.5), (0.0, 3.0, 1.0)] {
            let (_, p1, p2) = smooth_min_partials(d1, d2, k);
            let fd1 = (smooth_min(d1 + eps, d2, k) - smooth_min(d1 - eps, d2, k)) / (2.0 * eps);
            let fd2 = (smooth_min(d1, d2 + eps, k) - smooth_min(d1, d2 - eps, k)) / (2.0 * eps);
            assert_abs_diff_eq!(p1, fd1, epsilon = 1e-6);
            assert_abs_diff_eq!(p2, fd2, epsilon = 1e-6);
        }
    }

    #[test]
    fn smooth_min_second_partials_match_finite_differences() {
        let eps = 1e-5;
        for (d1, d2, k) in [(0.3, 0.5, 0.4), (1.0, 0.8, 0.7), (2.0, 2.05, 0.5)] {
            let (f11, f12, f22) = smooth_min_second_partials(d1, d2, k);
            let p = |a: f64, b: f64| smooth_min_partials(a, b, k);
            let fd11 = (p(d1 + eps, d2).1 - p(d1 - eps, d2).1) / (2.0 * eps);
            let fd12 = (p(d1, d2 + eps).1 - p(d1, d2 - eps).1) / (2.0 * eps);
            let fd22 = (p(d1, d2 + eps).2 - p(d1, d2 - eps).2) / (2.0 * eps);
            assert_abs_diff_eq!(f11, fd11, epsilon = 1e-5);
            assert_abs_diff_eq!(f12, fd12, epsilon = 1e-5);
            assert_abs_diff_eq!(f22, fd22, epsilon = 1e-5);
        }
    }

    #[test]
    fn smooth_min_is_c2_across_blend_edge() {
        // Directional second differences from both sides of |d1-d2| = k agree.
        let k = 0.5;
        let h = 1e-4;
        let f = |x: f64| smooth_min(x, 0.0, k);
        for edge in [-k, k] {
            let d2_minus = (f(edge - 2.0 * h) - 2.0 * f(edge - h) + f(edge)) / (h * h);
            let d2_plus = (f(edge) - 2.0 * f(edge + h) + f(edge + 2.0 * h)) / (h * h);
            assert!(
                (d2_minus - d2_plus).abs() < 1e-3,
                "second derivative jump at edge {edge}: {d2_minus} vs {d2_plus}"
            );
        }
    }

    proptest! {
        #[test]
        fn smooth_min_lower_bound_and_symmetry(
            d1 in -10.0f64..10.0,
            d2 in -10.0f64..10.0,
            k in 0.01f64..5.0,
        ) {
            let v = smooth_min(d1, d2, k);
            let m = d1.min(d2);
            prop_assert!(v <= m + 1e-15);
            // Equality iff the gap is at least k.
            if (d1 - d2).abs() >= k {
                prop_assert_eq!(v, m);
            } else {
                prop_assert!(v < m);
            }
            prop_assert_eq!(v, smooth_min(d2, d1, k));
        }
    }

    #[test]
    fn serde_shape_tags() {
        let p = SdfPrimitive::avoid(Shape::Sphere { center: vec![1.0, 2.0], radius: 0.5 });
        let js = serde_json::to_string(&p).unwrap();
        assert!(js.contains("\"shape\":\"sphere\""), "{js}");
        assert!(js.contains("\"polarity\":\"avoid\""), "{js}");
        let back: SdfPrimitive = serde_json::from_str(&js).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        assert!(Shape::Sphere { center: vec![0.0, 0.0], radius: 0.0 }.validate().is_err());
        assert!(Shape::Halfspace { normal: vec![1.0, 1.0], offset: 0.0 }.validate().is_err());
        assert!(Shape::Cone { apex: vec![0.0; 3], axis: vec![0.0, 0.0, 2.0], slope: 0.5 }
            .validate()
            .is_err());
        assert!(Shape::Capsule { a: vec![0.0; 3], b: vec![0.0; 3], radius: 0.1 }
            .validate()
            .is_err());
        assert!(Shape::Box { center: vec![0.0; 3], half_extents: vec![0.1, -0.1, 0.1] }
            .validate()
            .is_err());
    }
}
