//! Synthetic demonstration generators shared by tests, the scene library,
//! and the CLI examples.

use crate::dmp::Demonstration;
use crate::error::Result;

/// Minimum-jerk interpolation factor: 10u^3 - 15u^4 + 6u^5.
pub fn min_jerk_profile(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// Sample a parametric curve `p(u)`, `u` in [0, 1], at `n_samples` uniform
/// times over `duration`.
pub fn sample_curve<F>(duration: f64, n_samples: usize, curve: F) -> Result<Demonstration>
where
    F: Fn(f64) -> Vec<f64>,
{
    let dt = duration / (n_samples - 1) as f64;
    let positions = (0..n_samples)
        .map(|k| curve(k as f64 / (n_samples - 1) as f64))
        .collect();
    Demonstration::new(dt, positions)
}

/// Straight-line demonstration with a minimum-jerk speed profile.
pub fn min_jerk(from: &[f64], to: &[f64], duration: f64, n_samples: usize) -> Result<Demonstration> {
    let from = from.to_vec();
    let to = to.to_vec();
    sample_curve(duration, n_samples, move |u| {
        let a = min_jerk_profile(u);
        from.iter().zip(&to).map(|(p, q)| p + a * (q - p)).collect()
    })
}

/// 3-D helix rising along z with a minimum-jerk time warp so the demo starts
/// and ends at rest.
pub fn helix(radius: f64, height: f64, turns: f64, duration: f64, n_samples: usize) -> Result<Demonstration> {
    sample_curve(duration, n_samples, move |u| {
        let a = min_jerk_profile(u);
        let ang = std::f64::consts::TAU * turns * a;
        vec![radius * ang.cos(), radius * ang.sin(), height * a]
    })
}

/// Diagonal length of the axis-aligned bounding box of a path; used to
/// normalize fit errors.
pub fn path_extent(positions: &[Vec<f64>]) -> f64 {
    let d = positions[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in positions {
        for j in 0..d {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    (0..d).map(|j| (hi[j] - lo[j]) * (hi[j] - lo[j])).sum::<f64>().sqrt()
}
