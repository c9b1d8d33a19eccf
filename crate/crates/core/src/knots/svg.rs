use std::fmt::Write;

use super::diagram::{sample_polyline, PlanarDiagram, Point2};

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

/// Renders the diagram with a gap in the under strand at every crossing.
pub fn to_svg(d: &PlanarDiagram) -> String {
    let all: Vec<Point2> = d.components.iter().flatten().copied().collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &all {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    if all.is_empty() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let scale = (SIZE - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0).max(1e-300);
    let map = |p: Point2| [MARGIN + (p[0] - x0) * scale, SIZE - MARGIN - (p[1] - y0) * scale];
    // gap half-width in diagram units
    let gap = 6.0 / scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (ci, pts) in d.components.iter().enumerate() {
        if pts.len() < 2 {
            continue;
        }
        let n = pts.len() as f64;
        let mut cuts: Vec<f64> =
            d.crossings.iter().filter(|c| c.under.component == ci).map(|c| c.under.param).collect();
        cuts.sort_by(f64::total_cmp);
        let pieces: Vec<(f64, f64)> = if cuts.is_empty() {
            vec![(0.0, n)]
        } else {
            (0..cuts.len())
                .map(|k| {
                    let end = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + n };
                    (cuts[k], end)
                })
                .collect()
        };
        for (a, b) in pieces {
            let pts = sample_polyline(pts, a, b);
            let pts = trim(&pts, if cuts.is_empty() { 0.0 } else { gap });
            if pts.len() < 2 {
                continue;
            }
            let path: Vec<String> = pts
                .iter()
                .map(|&p| {
                    let q = map(p);
                    format!("{:.2},{:.2}", q[0], q[1])
                })
                .collect();
            let _ =
                writeln!(out, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#, path.join(" "));
        }
    }
    for c in &d.crossings {
        let q = map(c.position);
        let color = if c.sign > 0 { "#c0392b" } else { "#2471a3" };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, q[0], q[1]);
    }
    out.push_str("</svg>\n");
    out
}

/// Shortens an open polyline by `gap` at both ends.
fn trim(pts: &[Point2], gap: f64) -> Vec<Point2> {
    if gap == 0.0 {
        return pts.to_vec();
    }
    let cut_front = |pts: Vec<Point2>| -> Vec<Point2> {
        let mut left = gap;
        for k in 0..pts.len() - 1 {
            let (a, b) = (pts[k], pts[k + 1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if len > left {
                let f = left / len;
                let mut out = vec![[a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]];
                out.extend_from_slice(&pts[k + 1..]);
                return out;
            }
            left -= len;
        }
        Vec::new()
    };
    let front = cut_front(pts.to_vec());
    if front.len() < 2 {
        return front;
    }
    let mut rev = cut_front(front.into_iter().rev().collect());
    rev.reverse();
    rev
}
