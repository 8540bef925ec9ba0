//! Constrained dynamic movement primitives (CDMP).
//!
//! A DMP learned from a single demonstration is a small autonomous dynamical
//! system: a phase variable that decays exponentially, a spring-damper
//! attractor toward a goal, and a radial-basis forcing term fitted by locally
//! weighted regression. This crate adds workspace safety on top: scenes built
//! from signed-distance primitives compose (via a twice-differentiable smooth
//! minimum) into a zeroing barrier function `h`, and the forcing weights are
//! perturbed by a direct-collocation nonlinear program so that the rolled-out
//! trajectory satisfies `dh/dt + gamma * h >= 0` and therefore provably stays
//! in the safety set `{h >= 0}`.
//!
//! Modules:
//! - [`dmp`]: demonstrations, DMP models, LWR fitting, RK4 rollout.
//! - [`demos`]: synthetic demonstration generators used by tests and scenes.
//! - [`sdf`]: signed-distance primitives and the smooth-min blend.
//! - [`zbf`]: safety scenes, barrier evaluation, ZBF residual.
//! - [`nlp`]: augmented-Lagrangian solver with an L-BFGS inner loop.
//! - [`cdmp`]: collocation transcription and the certified solve pipeline.
//! - [`apf`]: the velocity-dependent potential-field baseline.
//! - [`scenes`]: the named regression scene library.
//! - [`formats`]: CSV/JSON readers and writers for all file interfaces.
//! - [`svg`]: deterministic SVG plots of trajectories and obstacle outlines.

pub mod apf;
pub mod cdmp;
pub mod demos;
pub mod dmp;
pub mod error;
pub mod formats;
mod linalg;
pub mod nlp;
pub mod scenes;
pub mod sdf;
pub mod svg;
pub mod zbf;

pub use crate::cdmp::{solve_cdmp, CdmpOptions, CdmpProblem, CdmpSolution};
pub use crate::dmp::{CanonicalSystem, Demonstration, DmpModel, ForcingTerm, Trajectory};
pub use crate::error::{Error, Result};
pub use crate::nlp::{NlpProblem, SolveOptions, SolveReport, SolveStatus};
pub use crate::sdf::{smooth_min, Polarity, SdfPrimitive, Shape};
pub use crate::zbf::SafetyScene;
