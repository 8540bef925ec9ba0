//! Named regression scenes. Each bundles a synthetic demonstration, a
//! safety scene, fit settings, and a recommended collocation count; the
//! same definitions are shipped as files under `scenes/` for the CLI.
//!
//! Geometry is synthetic desk-scale (~1 m workspaces). The demonstrations
//! are provided in obstacle-free conditions; the obstacles are "novel" in
//! the sense that the nominal DMP collides with them.

use crate::apf::ApfParams;
use crate::demos;
use crate::dmp::{Demonstration, FitConfig};
use crate::error::Result;
use crate::sdf::{Polarity, SdfPrimitive, Shape};
use crate::zbf::SafetyScene;

/// A named demo + scene pair.
#[derive(Debug, Clone)]
pub struct NamedScene {
    pub name: &'static str,
    pub demo: Demonstration,
    pub scene: SafetyScene,
    pub fit: FitConfig,
    pub default_n_colloc: usize,
}

pub const SCENE_NAMES: [&str; 5] =
    ["wall-jump", "disc-midpath", "cone-contain", "apf-trap", "chessboard-block"];

pub fn by_name(name: &str) -> Option<NamedScene> {
    let build = match name {
        "wall-jump" => wall_jump,
        "disc-midpath" => disc_midpath,
        "cone-contain" => cone_contain,
        "apf-trap" => apf_trap,
        "chessboard-block" => chessboard_block,
        _ => return None,
    };
    Some(build().expect("library scenes are statically valid"))
}

pub fn all() -> Vec<NamedScene> {
    SCENE_NAMES.iter().map(|n| by_name(n).expect("named")).collect()
}

/// Straight 2-D reach crossed by a thin tall wall. The nominal path pierces
/// the wall; a fine grid forces a certified detour while a coarse one lets
/// the trajectory slip between collocation points and fail the dense check.
pub fn wall_jump() -> Result<NamedScene> {
    let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.0], 1.0, 201)?;
    let wall = SdfPrimitive {
        shape: Shape::Box { center: vec![0.5, 0.04], half_extents: vec![0.02, 0.18] },
        polarity: Polarity::Avoid,
    };
    let scene = SafetyScene::new(vec![wall], 0.1, 4.0)?;
    Ok(NamedScene {
        name: "wall-jump",
        demo,
        scene,
        fit: FitConfig { n_basis: 20, ..Default::default() },
        default_n_colloc: 50,
    })
}

/// Straight 2-D reach through a disc centered on the path midpoint.
pub fn disc_midpath() -> Result<NamedScene> {
    let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.0], 1.0, 201)?;
    let disc = SdfPrimitive {
        shape: Shape::Sphere { center: vec![0.5, 0.0], radius: 0.08 },
        polarity: Polarity::Avoid,
    };
    let scene = SafetyScene::new(vec![disc], 0.1, 4.0)?;
    Ok(NamedScene {
        name: "disc-midpath",
        demo,
        scene,
        fit: FitConfig { n_basis: 20, ..Default::default() },
        default_n_colloc: 50,
    })
}

/// Rising 3-D arc that must stay inside an opening cone. The demonstration
/// bulges slightly outside the cone wall mid-flight.
pub fn cone_contain() -> Result<NamedScene> {
    let demo = demos::sample_curve(1.2, 201, |u| {
        let a = demos::min_jerk_profile(u);
        let z = 0.3 + 0.7 * a;
        let bulge = 0.35 * (std::f64::consts::PI * a).sin();
        let swirl = 0.06 * (2.0 * std::f64::consts::PI * a).sin();
        vec![bulge, swirl, z]
    })?;
    let cone = SdfPrimitive {
        shape: Shape::Cone {
            apex: vec![0.0, 0.0, 0.0],
            axis: vec![0.0, 0.0, 1.0],
            slope: 0.5,
        },
        polarity: Polarity::Contain,
    };
    let scene = SafetyScene::new(vec![cone], 0.1, 4.0)?;
    Ok(NamedScene {
        name: "cone-contain",
        demo,
        scene,
        fit: FitConfig { n_basis: 20, ..Default::default() },
        default_n_colloc: 50,
    })
}

/// Cup-shaped arc of overlapping small discs facing the start: the
/// potential-field baseline dives into the pocket and stalls, while the
/// CDMP routes around it.
pub fn apf_trap() -> Result<NamedScene> {
    let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.0], 1.0, 201)?;
    let arc_center = [0.62, 0.0];
    let arc_radius = 0.16;
    let n_points = 13;
    let mut prims = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let phi = (-75.0 + 150.0 * i as f64 / (n_points - 1) as f64).to_radians();
        prims.push(SdfPrimitive {
            shape: Shape::Sphere {
                center: vec![
                    arc_center[0] + arc_radius * phi.cos(),
                    arc_center[1] + arc_radius * phi.sin(),
                ],
                radius: 0.035,
            },
            polarity: Polarity::Avoid,
        });
    }
    let scene = SafetyScene::new(prims, 0.05, 4.0)?
        .with_apf(ApfParams { lambda: 1.0, beta: 2.0, points_per_primitive: 1 })?;
    Ok(NamedScene {
        name: "apf-trap",
        demo,
        scene,
        fit: FitConfig { n_basis: 20, ..Default::default() },
        default_n_colloc: 50,
    })
}

/// Knight-style 3-D hop over a board blocked by a standing piece (capsule),
/// with the board itself as a halfspace floor.
pub fn chessboard_block() -> Result<NamedScene> {
    let demo = demos::sample_curve(1.0, 201, |u| {
        let a = demos::min_jerk_profile(u);
        vec![
            0.30 * a,
            0.15 * a,
            0.03 + 0.09 * (std::f64::consts::PI * a).sin(),
        ]
    })?;
    let piece = SdfPrimitive {
        shape: Shape::Capsule {
            a: vec![0.15, 0.075, 0.0],
            b: vec![0.15, 0.075, 0.16],
            radius: 0.035,
        },
        polarity: Polarity::Avoid,
    };
    let board = SdfPrimitive {
        shape: Shape::Halfspace { normal: vec![0.0, 0.0, 1.0], offset: 0.0 },
        polarity: Polarity::Avoid,
    };
    let scene = SafetyScene::new(vec![piece, board], 0.05, 4.0)?;
    Ok(NamedScene {
        name: "chessboard-block",
        demo,
        scene,
        fit: FitConfig { n_basis: 20, ..Default::default() },
        default_n_colloc: 50,
    })
}
