//! Safety scenes and the zeroing barrier function built from them.
//!
//! A scene composes per-primitive terms (`sigma` for avoid primitives,
//! `-sigma` for contain primitives) with a left fold of the smooth minimum,
//! in declaration order. The smooth min is not associative, so the fold
//! order is part of the scene definition and files evaluate reproducibly.
//! Because the smooth min underestimates the true min, the zero super-level
//! set of the composed `h` is a subset of the true safety set.

use serde::{Deserialize, Serialize};

use crate::apf::ApfParams;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sdf::{smooth_min_partials, smooth_min_second_partials, SdfPrimitive};

/// A set of SDF primitives with blend radius and ZBF rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SceneData", into = "SceneData")]
pub struct SafetyScene {
    gamma: f64,
    blend_k: f64,
    primitives: Vec<SdfPrimitive>,
    apf: Option<ApfParams>,
}

/// Wire format; field order fixes the JSON schema
/// `{"gamma", "blend_k", "primitives", "apf"?}`.
#[derive(Serialize, Deserialize)]
struct SceneData {
    gamma: f64,
    blend_k: f64,
    primitives: Vec<SdfPrimitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    apf: Option<ApfParams>,
}

impl TryFrom<SceneData> for SafetyScene {
    type Error = Error;

    fn try_from(data: SceneData) -> Result<Self> {
        let mut scene = SafetyScene::new(data.primitives, data.blend_k, data.gamma)?;
        if let Some(apf) = data.apf {
            apf.validate()?;
            scene.apf = Some(apf);
        }
        Ok(scene)
    }
}

impl From<SafetyScene> for SceneData {
    fn from(s: SafetyScene) -> Self {
        SceneData { gamma: s.gamma, blend_k: s.blend_k, primitives: s.primitives, apf: s.apf }
    }
}

impl SafetyScene {
    pub fn new(primitives: Vec<SdfPrimitive>, blend_k: f64, gamma: f64) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::invalid("scene needs at least one primitive"));
        }
        if !(blend_k.is_finite() && blend_k > 0.0) {
            return Err(Error::invalid(format!("blend_k must be positive, got {blend_k}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        let dim = primitives[0].dim();
        for prim in &primitives {
            prim.validate()?;
            if prim.dim() != dim {
                return Err(Error::Dimension { expected: dim, got: prim.dim() });
            }
        }
        Ok(Self { gamma, blend_k, primitives, apf: None })
    }

    pub fn with_apf(mut self, apf: ApfParams) -> Result<Self> {
        apf.validate()?;
        self.apf = Some(apf);
        Ok(self)
    }

    pub fn primitives(&self) -> &[SdfPrimitive] {
        &self.primitives
    }

    pub fn blend_k(&self) -> f64 {
        self.blend_k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn apf(&self) -> Option<&ApfParams> {
        self.apf.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.primitives[0].dim()
    }

    /// Barrier value `h(p)`.
    pub fn barrier_value(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.dim(), "barrier point dimension");
        let mut h = self.primitives[0].term(p);
        for prim in &self.primitives[1..] {
            h = crate::sdf::smooth_min(h, prim.term(p), self.blend_k);
        }
        h
    }

    /// Barrier value and analytic gradient. At non-differentiable interior
    /// points of constituent SDFs this returns the deterministic subgradient
    /// picked by the primitive.
    pub fn barrier(&self, p: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(p.len(), self.dim(), "barrier point dimension");
        let (mut h, mut grad) = self.primitives[0].term_grad(p);
        for prim in &self.primitives[1..] {
            let (t, gt) = prim.term_grad(p);
            let (v, p1, p2) = smooth_min_partials(h, t, self.blend_k);
            for j in 0..grad.len() {
                grad[j] = p1 * grad[j] + p2 * gt[j];
            }
            h = v;
        }
        (h, grad)
    }

    /// Barrier value, gradient, and Hessian-vector product `H_h(p) . v`,
    /// propagating second derivatives through the smooth-min fold.
    pub fn barrier_hvp(&self, p: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        assert_eq!(p.len(), self.dim(), "barrier point dimension");
        assert_eq!(v.len(), self.dim(), "barrier direction dimension");
        let d = self.dim();
        let (mut h, mut grad, mut hv) = self.primitives[0].term_grad_hvp(p, v);
        for prim in &self.primitives[1..] {
            let (t, gt, hvt) = prim.term_grad_hvp(p, v);
            let (val, p1, p2) = smooth_min_partials(h, t, self.blend_k);
            let (f11, f12, f22) = smooth_min_second_partials(h, t, self.blend_k);
            let ga_v = linalg::dot(&grad, v);
            let gb_v = linalg::dot(&gt, v);
            let ca = f11 * ga_v + f12 * gb_v;
            let cb = f12 * ga_v + f22 * gb_v;
            let mut new_hv = vec![0.0; d];
            for j in 0..d {
                new_hv[j] = p1 * hv[j] + p2 * hvt[j] + ca * grad[j] + cb * gt[j];
                grad[j] = p1 * grad[j] + p2 * gt[j];
            }
            hv = new_hv;
            h = val;
        }
        (h, grad, hv)
    }

    /// ZBF inequality residual `grad h(y) . ydot + gamma * h(y)`; nonnegative
    /// means the inequality holds at this state.
    pub fn zbf_residual(&self, y: &[f64], ydot: &[f64]) -> f64 {
        assert_eq!(ydot.len(), self.dim(), "residual velocity dimension");
        let (h, grad) = self.barrier(y);
        linalg::dot(&grad, ydot) + self.gamma * h
    }
}
