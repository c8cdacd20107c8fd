//! Sketching instances and trajectories as SVG.
//!
//! Works for the three grid families, which are all planar: point markers,
//! region rectangles recovered from axis-aligned constraint rows, and the
//! trajectory drawn according to the layout (polyline through points,
//! glued segments, or sampled curve pieces).

use gcs_tsp::model::{ConvexSet, GcsInstance, Layout};

#[derive(Debug, thiserror::Error)]
#[error("not plottable: {0}")]
pub struct NotPlottable(pub String);

const SCALE: f64 = 80.0;
const MARGIN: f64 = 0.7;
/// Sample count per curve piece; 33 points means 32 sub-segments.
const CURVE_SAMPLES: usize = 33;

/// Bounds of coordinate `k` implied by single-coordinate rows of the set.
fn coord_bounds(set: &ConvexSet, k: usize) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let single = |row: &[f64]| {
        let mut nz = row.iter().enumerate().filter(|(_, &c)| c != 0.0);
        match (nz.next(), nz.next()) {
            (Some((i, &c)), None) if i == k => Some(c),
            _ => None,
        }
    };
    for (row, &rhs) in set.a.iter().zip(&set.b) {
        if let Some(c) = single(row) {
            if c > 0.0 {
                hi = hi.min(rhs / c);
            } else {
                lo = lo.max(rhs / c);
            }
        }
    }
    for (row, &rhs) in set.c.iter().zip(&set.d) {
        if let Some(c) = single(row) {
            lo = lo.max(rhs / c);
            hi = hi.min(rhs / c);
        }
    }
    (lo, hi)
}

fn quartic(ctrl: &[[f64; 2]; 5], t: f64) -> [f64; 2] {
    let s = 1.0 - t;
    let w = [s * s * s * s, 4.0 * s * s * s * t, 6.0 * s * s * t * t, 4.0 * s * t * t * t, t * t * t * t];
    let mut p = [0.0, 0.0];
    for (weight, point) in w.iter().zip(ctrl) {
        p[0] += weight * point[0];
        p[1] += weight * point[1];
    }
    p
}

/// Flatten a trajectory into plane points according to the layout.
fn planar_trajectory(layout: Layout, trajectory: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, NotPlottable> {
    let mut pts = Vec::new();
    for (i, p) in trajectory.iter().enumerate() {
        match layout {
            Layout::Point => {
                if p.len() != 2 {
                    return Err(NotPlottable(format!("trajectory point {i} is not planar")));
                }
                pts.push([p[0], p[1]]);
            }
            Layout::Linear => {
                if p.len() != 4 {
                    return Err(NotPlottable(format!("trajectory point {i} is not a segment")));
                }
                if i == 0 {
                    pts.push([p[0], p[1]]);
                }
                pts.push([p[2], p[3]]);
            }
            Layout::Bezier => {
                if p.len() != 15 {
                    return Err(NotPlottable(format!("trajectory point {i} is not a curve piece")));
                }
                let ctrl = [
                    [p[0], p[1]],
                    [p[2], p[3]],
                    [p[4], p[5]],
                    [p[6], p[7]],
                    [p[8], p[9]],
                ];
                let from = if i == 0 { 0 } else { 1 };
                for s in from..CURVE_SAMPLES {
                    pts.push(quartic(&ctrl, s as f64 / (CURVE_SAMPLES - 1) as f64));
                }
            }
        }
    }
    Ok(pts)
}

pub fn render(
    instance: &GcsInstance,
    trajectory: Option<&[Vec<f64>]>,
) -> Result<String, NotPlottable> {
    let layout = instance
        .layout
        .ok_or_else(|| NotPlottable("instance has no planar layout".into()))?;

    // regions and markers in data space
    let mut rects: Vec<[f64; 4]> = Vec::new(); // x, y, w, h
    let mut markers: Vec<[f64; 2]> = Vec::new();
    for v in instance.vertices() {
        let (x0, x1) = coord_bounds(&v.set, 0);
        let (y0, y1) = coord_bounds(&v.set, 1);
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(NotPlottable(format!("vertex {:?} has no bounded planar region", v.id)));
        }
        if x1 - x0 < 1e-9 && y1 - y0 < 1e-9 {
            markers.push([x0, y0]);
        } else {
            rects.push([x0, y0, x1 - x0, y1 - y0]);
        }
    }
    let line = match trajectory {
        Some(t) if !t.is_empty() => planar_trajectory(layout, t)?,
        _ => Vec::new(),
    };

    // bounding box over grid, regions, markers, and the trajectory
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (0.0f64, 0.0f64, 4.0f64, 4.0f64);
    let mut cover = |x: f64, y: f64| {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    };
    for r in &rects {
        cover(r[0], r[1]);
        cover(r[0] + r[2], r[1] + r[3]);
    }
    for m in &markers {
        cover(m[0], m[1]);
    }
    for p in &line {
        cover(p[0], p[1]);
    }
    min_x -= MARGIN;
    min_y -= MARGIN;
    max_x += MARGIN;
    max_y += MARGIN;

    let width = (max_x - min_x) * SCALE;
    let height = (max_y - min_y) * SCALE;
    let px = |x: f64| (x - min_x) * SCALE;
    let py = |y: f64| (max_y - y) * SCALE; // SVG's y axis points down

    let mut svg = String::new();
    svg.push_str(&format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ",
            "width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.2} {:.2}\">\n"
        ),
        width, height, width, height
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width:.2}\" height=\"{height:.2}\" fill=\"white\"/>\n"
    ));
    for i in 0..=4 {
        let g = i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
            px(g), py(0.0), px(g), py(4.0)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
            px(0.0), py(g), px(4.0), py(g)
        ));
    }
    for r in &rects {
        svg.push_str(&format!(
            concat!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" ",
                "fill=\"#88bbbb\" fill-opacity=\"0.25\" stroke=\"#558888\"/>\n"
            ),
            px(r[0]),
            py(r[1] + r[3]),
            r[2] * SCALE,
            r[3] * SCALE
        ));
    }
    if !line.is_empty() {
        let pts: Vec<String> =
            line.iter().map(|p| format!("{:.2},{:.2}", px(p[0]), py(p[1]))).collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#dd3333\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
    }
    for m in &markers {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#dd3333\"/>\n",
            px(m[0]),
            py(m[1])
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
