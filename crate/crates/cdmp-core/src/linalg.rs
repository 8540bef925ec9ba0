//! Small dense-vector helpers. Workspace points are 2- or 3-dimensional and
//! NLP decision vectors are a few hundred entries, so plain slices suffice.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

/// out += scale * v
pub(crate) fn axpy(out: &mut [f64], scale: f64, v: &[f64]) {
    debug_assert_eq!(out.len(), v.len());
    for (o, x) in out.iter_mut().zip(v) {
        *o += scale * x;
    }
}

pub(crate) fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Unit vector along `v`, or `None` when `v` is (numerically) zero.
pub(crate) fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n <= f64::EPSILON * 16.0 {
        None
    } else {
        Some(scaled(v, 1.0 / n))
    }
}
