//! Deterministic SVG plots: trajectory polylines over obstacle outlines.
//!
//! Obstacle outlines are the in-plane zero contours of each primitive's
//! signed distance, traced by marching squares on a fixed grid; 3-D scenes
//! are cut at a chosen out-of-plane coordinate. Identical inputs produce
//! byte-identical files.

use crate::dmp::Trajectory;
use crate::error::{Error, Result};
use crate::zbf::SafetyScene;

/// Projection plane for plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "xy" => Ok(Plane::Xy),
            "xz" => Ok(Plane::Xz),
            "yz" => Ok(Plane::Yz),
            other => Err(Error::invalid(format!("unknown plane {other:?} (use xy, xz, or yz)"))),
        }
    }

    /// Indices of the two in-plane axes.
    fn axes(&self) -> (usize, usize) {
        match self {
            Plane::Xy => (0, 1),
            Plane::Xz => (0, 2),
            Plane::Yz => (1, 2),
        }
    }

    fn out_axis(&self) -> usize {
        match self {
            Plane::Xy => 2,
            Plane::Xz => 1,
            Plane::Yz => 0,
        }
    }
}

/// A labeled path to draw.
pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub trajectory: &'a Trajectory,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 50.0;
const CONTOUR_CELLS: usize = 220;

struct Frame {
    min_u: f64,
    min_v: f64,
    scale: f64,
}

impl Frame {
    fn map(&self, u: f64, v: f64) -> (f64, f64) {
        // y axis flipped: SVG grows downward.
        let x = MARGIN + (u - self.min_u) * self.scale;
        let y = HEIGHT - MARGIN - (v - self.min_v) * self.scale;
        (x, y)
    }
}

fn fmt(v: f64) -> String {
    // Fixed decimals keep the output deterministic and diff-friendly.
    format!("{v:.2}")
}

/// Render a scene and a set of trajectories to an SVG document.
///
/// For 3-D data the plane cut is taken at the mean out-of-plane coordinate
/// of the first series (0 when there are no series).
pub fn render(scene: &SafetyScene, series: &[PlotSeries<'_>], plane: Plane) -> Result<String> {
    let dim = scene.dim();
    for s in series {
        if s.trajectory.dim() != dim {
            return Err(Error::Dimension { expected: dim, got: s.trajectory.dim() });
        }
    }
    let (au, av) = if dim == 2 { (0, 1) } else { plane.axes() };
    let cut = if dim == 3 {
        series
            .first()
            .map(|s| {
                let k = plane.out_axis();
                let sum: f64 = s.trajectory.states().iter().map(|st| st.y[k]).sum();
                sum / s.trajectory.len() as f64
            })
            .unwrap_or(0.0)
    } else {
        0.0
    };

    // Bounding box over trajectories and primitive outlines (probed via the
    // contour grid below, so just use trajectories plus a fixed pad here).
    let mut min_u = f64::INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for s in series {
        for st in s.trajectory.states() {
            min_u = min_u.min(st.y[au]);
            max_u = max_u.max(st.y[au]);
            min_v = min_v.min(st.y[av]);
            max_v = max_v.max(st.y[av]);
        }
    }
    if !min_u.is_finite() {
        min_u = -1.0;
        max_u = 1.0;
        min_v = -1.0;
        max_v = 1.0;
    }
    let pad = 0.15 * ((max_u - min_u).max(max_v - min_v)).max(0.5);
    min_u -= pad;
    max_u += pad;
    min_v -= pad;
    max_v += pad;

    let scale = ((WIDTH - 2.0 * MARGIN) / (max_u - min_u))
        .min((HEIGHT - 2.0 * MARGIN) / (max_v - min_v));
    let frame = Frame { min_u, min_v, scale };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Obstacle outlines.
    for prim in scene.primitives() {
        let segments = contour_segments(
            |u, v| {
                let mut p = vec![0.0; dim];
                p[au] = u;
                p[av] = v;
                if dim == 3 {
                    p[plane.out_axis()] = cut;
                }
                prim.shape.signed_distance(&p)
            },
            min_u,
            max_u,
            min_v,
            max_v,
        );
        if segments.is_empty() {
            continue;
        }
        let mut d = String::new();
        for ((u0, v0), (u1, v1)) in &segments {
            let (x0, y0) = frame.map(*u0, *v0);
            let (x1, y1) = frame.map(*u1, *v1);
            d.push_str(&format!("M{} {} L{} {} ", fmt(x0), fmt(y0), fmt(x1), fmt(y1)));
        }
        svg.push_str(&format!(
            "<path d=\"{}\" stroke=\"#444444\" stroke-width=\"1.5\" fill=\"none\"/>\n",
            d.trim_end()
        ));
    }

    // Trajectories.
    for s in series {
        let mut points = String::new();
        for st in s.trajectory.states() {
            let (x, y) = frame.map(st.y[au], st.y[av]);
            points.push_str(&format!("{},{} ", fmt(x), fmt(y)));
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" stroke=\"{}\" stroke-width=\"2\" fill=\"none\"/>\n",
            points.trim_end(),
            s.color
        ));
        // Start and end markers.
        if let (Some(first), Some(last)) = (s.trajectory.states().first(), s.trajectory.states().last())
        {
            let (x0, y0) = frame.map(first.y[au], first.y[av]);
            let (x1, y1) = frame.map(last.y[au], last.y[av]);
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>\n",
                fmt(x0),
                fmt(y0),
                s.color
            ));
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                fmt(x1),
                fmt(y1),
                s.color
            ));
        }
    }

    // Legend.
    for (i, s) in series.iter().enumerate() {
        let y = MARGIN / 2.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(MARGIN),
            fmt(y),
            fmt(MARGIN + 24.0),
            fmt(y),
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>\n",
            fmt(MARGIN + 30.0),
            fmt(y + 4.0),
            s.label
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Marching squares over `f = 0` on a fixed grid; returns line segments.
fn contour_segments<F>(
    f: F,
    min_u: f64,
    max_u: f64,
    min_v: f64,
    max_v: f64,
) -> Vec<((f64, f64), (f64, f64))>
where
    F: Fn(f64, f64) -> f64,
{
    let n = CONTOUR_CELLS;
    let du = (max_u - min_u) / n as f64;
    let dv = (max_v - min_v) / n as f64;
    // Sample the grid once.
    let mut vals = vec![0.0; (n + 1) * (n + 1)];
    for i in 0..=n {
        for j in 0..=n {
            vals[i * (n + 1) + j] = f(min_u + i as f64 * du, min_v + j as f64 * dv);
        }
    }
    let at = |i: usize, j: usize| vals[i * (n + 1) + j];
    let mut segments = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let u0 = min_u + i as f64 * du;
            let v0 = min_v + j as f64 * dv;
            let corners = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let mut crossings: Vec<(f64, f64)> = Vec::new();
            // Edges: (corner a, corner b, position fn)
            let edges: [((f64, f64), (f64, f64), f64, f64); 4] = [
                ((u0, v0), (u0 + du, v0), corners[0], corners[1]),
                ((u0 + du, v0), (u0 + du, v0 + dv), corners[1], corners[2]),
                ((u0 + du, v0 + dv), (u0, v0 + dv), corners[2], corners[3]),
                ((u0, v0 + dv), (u0, v0), corners[3], corners[0]),
            ];
            for (pa, pb, fa, fb) in edges {
                if (fa < 0.0) != (fb < 0.0) {
                    let t = fa / (fa - fb);
                    crossings.push((pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1)));
                }
            }
            // 0, 2, or 4 crossings; pair them in order (the ambiguous saddle
            // case draws both segments, fine for outlines).
            let mut it = crossings.chunks_exact(2);
            for pair in &mut it {
                segments.push((pair[0], pair[1]));
            }
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos;
    use crate::dmp::{fit_lwr, FitConfig};
    use crate::scenes;

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let named = scenes::by_name("disc-midpath").unwrap();
        let model = fit_lwr(&named.demo, &named.fit).unwrap();
        let traj = model.rollout(0.01, 1.5, None).unwrap();
        let series =
            [PlotSeries { label: "nominal", color: "#1f77b4", trajectory: &traj }];
        let a = render(&named.scene, &series, Plane::Xy).unwrap();
        let b = render(&named.scene, &series, Plane::Xy).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg "));
        assert!(a.ends_with("</svg>\n"));
        assert!(a.contains("<polyline"));
        assert!(a.contains("<path")); // obstacle outline present
    }

    #[test]
    fn three_dimensional_scene_renders_cross_section() {
        let named = scenes::by_name("cone-contain").unwrap();
        let demo_traj = {
            let model = fit_lwr(&named.demo, &named.fit).unwrap();
            model.rollout(0.01, 1.2, None).unwrap()
        };
        let series = [PlotSeries { label: "demo", color: "#d62728", trajectory: &demo_traj }];
        let svg = render(&named.scene, &series, Plane::Xz).unwrap();
        assert!(svg.contains("<path"));
    }

    #[test]
    fn plane_parsing() {
        assert_eq!(Plane::parse("xy").unwrap(), Plane::Xy);
        assert_eq!(Plane::parse("XZ").unwrap(), Plane::Xz);
        assert!(Plane::parse("ab").is_err());
    }

    #[test]
    fn min_jerk_curve_extent_is_positive() {
        let demo = demos::min_jerk(&[0.0, 0.0], &[1.0, 0.0], 1.0, 11).unwrap();
        assert!(demos::path_extent(demo.positions()) > 0.9);
    }
}
