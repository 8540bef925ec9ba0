//! File formats: model JSON, demo/trajectory CSV, and the bench table.
//!
//! Floats are written with Rust's shortest round-trip formatting and parsed
//! exactly, so every format round-trips losslessly at full precision.
//!
//! - model JSON: `{alpha_s, tau, alpha_z, beta_z, y0, g, centers, widths,
//!   weights}` with `weights` stored as d rows of N columns (row-major).
//! - demo CSV: header `t,y1[,y2[,y3]]`.
//! - trajectory CSV: header `t,s,z1..zd,y1..yd`.
//! - scene JSON: serde on [`SafetyScene`](crate::zbf::SafetyScene).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dmp::{CanonicalSystem, Demonstration, DmpModel, ForcingTerm, Trajectory, TrajectoryState};
use crate::error::{Error, Result};
use crate::zbf::SafetyScene;

#[derive(Serialize, Deserialize)]
struct ModelJson {
    alpha_s: f64,
    tau: f64,
    alpha_z: f64,
    beta_z: f64,
    y0: Vec<f64>,
    g: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

pub fn model_to_json(model: &DmpModel) -> Result<String> {
    let wire = ModelJson {
        alpha_s: model.canonical().alpha_s(),
        tau: model.canonical().tau(),
        alpha_z: model.alpha_z(),
        beta_z: model.beta_z(),
        y0: model.y0().to_vec(),
        g: model.goal().to_vec(),
        centers: model.forcing().centers().to_vec(),
        widths: model.forcing().widths().to_vec(),
        weights: model.forcing().weights().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&wire)?)
}

pub fn model_from_json(text: &str) -> Result<DmpModel> {
    let wire: ModelJson = serde_json::from_str(text)?;
    let canonical = CanonicalSystem::new(wire.alpha_s, wire.tau)?;
    let forcing = ForcingTerm::new(wire.centers, wire.widths, wire.weights)?;
    DmpModel::new(canonical, forcing, wire.alpha_z, wire.beta_z, wire.y0, wire.g)
}

pub fn write_model(path: impl AsRef<Path>, model: &DmpModel) -> Result<()> {
    fs::write(path, model_to_json(model)? + "\n")?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<DmpModel> {
    model_from_json(&fs::read_to_string(path)?)
}

pub fn scene_to_json(scene: &SafetyScene) -> Result<String> {
    Ok(serde_json::to_string_pretty(scene)?)
}

pub fn scene_from_json(text: &str) -> Result<SafetyScene> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_scene(path: impl AsRef<Path>, scene: &SafetyScene) -> Result<()> {
    fs::write(path, scene_to_json(scene)? + "\n")?;
    Ok(())
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<SafetyScene> {
    scene_from_json(&fs::read_to_string(path)?)
}

fn fmt_float(v: f64) -> String {
    format!("{v}")
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: {field:?}"),
    })
}

pub fn demo_to_csv(demo: &Demonstration) -> String {
    let d = demo.dim();
    let mut out = String::new();
    out.push('t');
    for j in 1..=d {
        out.push_str(&format!(",y{j}"));
    }
    out.push('\n');
    for (k, p) in demo.positions().iter().enumerate() {
        out.push_str(&fmt_float(k as f64 * demo.dt()));
        for v in p {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

pub fn demo_from_csv(text: &str) -> Result<Demonstration> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(Error::Parse { line: 1, msg: format!("expected header t,y1[,y2[,y3]], got {header:?}") });
    }
    let d = cols.len() - 1;
    for (j, col) in cols[1..].iter().enumerate() {
        let expect = format!("y{}", j + 1);
        if *col != expect {
            return Err(Error::Parse { line: 1, msg: format!("expected column {expect}, got {col:?}") });
        }
    }
    let mut times = Vec::new();
    let mut positions = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} fields, got {}", d + 1, fields.len()),
            });
        }
        times.push(parse_float(fields[0], lineno)?);
        let row: Result<Vec<f64>> = fields[1..].iter().map(|f| parse_float(f, lineno)).collect();
        positions.push(row?);
    }
    if times.len() < 3 {
        return Err(Error::invalid(format!(
            "demonstration needs at least 3 samples, got {}",
            times.len()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("demo dt must be positive, got {dt}")));
    }
    for (k, t) in times.iter().enumerate() {
        let expected = times[0] + k as f64 * dt;
        if (t - expected).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::invalid(format!(
                "non-uniform dt at sample {k}: t = {t}, expected {expected}"
            )));
        }
    }
    Demonstration::new(dt, positions)
}

pub fn write_demo(path: impl AsRef<Path>, demo: &Demonstration) -> Result<()> {
    fs::write(path, demo_to_csv(demo))?;
    Ok(())
}

pub fn read_demo(path: impl AsRef<Path>) -> Result<Demonstration> {
    demo_from_csv(&fs::read_to_string(path)?)
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let d = traj.dim();
    let mut out = String::from("t,s");
    for j in 1..=d {
        out.push_str(&format!(",z{j}"));
    }
    for j in 1..=d {
        out.push_str(&format!(",y{j}"));
    }
    out.push('\n');
    for (t, st) in traj.times().iter().zip(traj.states()) {
        out.push_str(&fmt_float(*t));
        out.push(',');
        out.push_str(&fmt_float(st.s));
        for v in &st.z {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        for v in &st.y {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 4 || cols.len() % 2 != 0 || cols[0] != "t" || cols[1] != "s" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header t,s,z1..zd,y1..yd, got {header:?}"),
        });
    }
    let d = (cols.len() - 2) / 2;
    for j in 0..d {
        if cols[2 + j] != format!("z{}", j + 1) || cols[2 + d + j] != format!("y{}", j + 1) {
            return Err(Error::Parse { line: 1, msg: format!("malformed header {header:?}") });
        }
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + 2 * d {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {} fields, got {}", 2 + 2 * d, fields.len()),
            });
        }
        times.push(parse_float(fields[0], lineno)?);
        let s = parse_float(fields[1], lineno)?;
        let z: Result<Vec<f64>> =
            fields[2..2 + d].iter().map(|f| parse_float(f, lineno)).collect();
        let y: Result<Vec<f64>> =
            fields[2 + d..].iter().map(|f| parse_float(f, lineno)).collect();
        states.push(TrajectoryState { s, z: z?, y: y? });
    }
    Trajectory::new(times, states)
}

pub fn write_trajectory(path: impl AsRef<Path>, traj: &Trajectory) -> Result<()> {
    fs::write(path, trajectory_to_csv(traj))?;
    Ok(())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    trajectory_from_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos;
    use crate::dmp::{fit_lwr, FitConfig};
    use crate::sdf::{Polarity, SdfPrimitive, Shape};
    use proptest::prelude::*;

    #[test]
    fn model_json_round_trip_is_exact() {
        let demo = demos::min_jerk(&[0.0, 0.2], &[1.0, -0.3], 1.0, 60).unwrap();
        let model = fit_lwr(&demo, &FitConfig { n_basis: 12, ..Default::default() }).unwrap();
        let js = model_to_json(&model).unwrap();
        let back = model_from_json(&js).unwrap();
        assert_eq!(back, model);
        // Schema field names.
        for field in ["alpha_s", "tau", "alpha_z", "beta_z", "y0", "g", "centers", "widths", "weights"] {
            assert!(js.contains(&format!("\"{field}\"")), "missing {field} in {js}");
        }
    }

    #[test]
    fn demo_csv_round_trip_is_exact() {
        let demo = demos::min_jerk(&[0.1], &[0.9], 0.7, 41).unwrap();
        let csv = demo_to_csv(&demo);
        assert!(csv.starts_with("t,y1\n"));
        let back = demo_from_csv(&csv).unwrap();
        assert_eq!(back, demo);
    }

    #[test]
    fn trajectory_csv_round_trip_is_exact() {
        let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.5], 1.0, 50).unwrap();
        let model = fit_lwr(&demo, &FitConfig { n_basis: 10, ..Default::default() }).unwrap();
        let traj = model.rollout(0.01, 1.5, None).unwrap();
        let csv = trajectory_to_csv(&traj);
        assert!(csv.starts_with("t,s,z1,z2,y1,y2\n"));
        let back = trajectory_from_csv(&csv).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn demo_csv_rejects_malformed_input() {
        assert!(matches!(
            demo_from_csv("q,y1\n0,0\n0.1,1\n0.2,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            demo_from_csv("t,y1\n0,0\n0.1,abc\n0.2,2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        // Two samples: precondition failure.
        assert!(demo_from_csv("t,y1\n0,0\n0.1,1\n").is_err());
        // Non-uniform dt.
        let err = demo_from_csv("t,y1\n0,0\n0.1,1\n0.35,2\n").unwrap_err();
        assert!(err.to_string().contains("non-uniform"), "{err}");
    }

    #[test]
    fn scene_json_round_trip_is_exact() {
        let scene = SafetyScene::new(
            vec![
                SdfPrimitive {
                    shape: Shape::Sphere { center: vec![0.5, 0.25], radius: 0.125 },
                    polarity: Polarity::Avoid,
                },
                SdfPrimitive {
                    shape: Shape::Box {
                        center: vec![0.1, -0.7],
                        half_extents: vec![0.0625, 0.03125],
                    },
                    polarity: Polarity::Avoid,
                },
            ],
            0.1,
            4.0,
        )
        .unwrap();
        let js = scene_to_json(&scene).unwrap();
        let back = scene_from_json(&js).unwrap();
        assert_eq!(back, scene);
    }

    proptest! {
        #[test]
        fn float_fields_round_trip_bit_exact(bits in any::<u32>()) {
            // Random (finite) f64 values through the CSV float path.
            let v = f64::from_bits(((bits as u64) << 20) | 0x3ff0_0000_0000_0000u64.wrapping_add(bits as u64));
            prop_assume!(v.is_finite());
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(v.to_bits(), back.to_bits());
        }
    }
}
