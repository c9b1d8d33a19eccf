use std::collections::HashMap;

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::diagram::{Crossing, Passage, PlanarDiagram};
use super::KnotError;
use crate::heteroclinic::ClosedCurve3;

const MAX_RETRIES: usize = 32;
const MIN_ANGLE: f64 = 1e-6;
const ENDPOINT_TOL: f64 = 1e-9;

/// Orthogonal projection of a closed space curve along `direction`, viewed
/// from the tip of `direction`. A strand is over when it lies further along
/// `direction`. Degenerate views (tangencies, triple points, crossings at
/// vertices) are retried along small seeded rotations of the direction.
pub fn project(curve: &ClosedCurve3, direction: Vector3<f64>) -> Result<PlanarDiagram, KnotError> {
    project_seeded(curve, direction, 0)
}

pub fn project_seeded(curve: &ClosedCurve3, direction: Vector3<f64>, seed: u64) -> Result<PlanarDiagram, KnotError> {
    if !curve.is_closed() {
        return Err(KnotError::Malformed("curve is not closed".into()));
    }
    let d0 =
        direction.try_normalize(1e-300).ok_or_else(|| KnotError::Malformed("projection direction is zero".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = d0;
    for attempt in 0..=MAX_RETRIES {
        match project_once(&curve.vertices, &d) {
            Ok(diagram) => return Ok(diagram),
            Err(Degenerate) if attempt < MAX_RETRIES => {
                let axis = Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                let angle = 1e-4 * (1.0 + attempt as f64);
                let rot = Rotation3::from_scaled_axis(axis.normalize() * angle);
                d = rot * d0;
            }
            Err(Degenerate) => break,
        }
    }
    Err(KnotError::DegenerateProjection { retries: MAX_RETRIES })
}

/// `count` directions tilted from `base` by seeded random rotations of at most
/// `spread` radians; the first one is `base` itself.
pub fn direction_fan(base: Vector3<f64>, count: usize, spread: f64, seed: u64) -> Vec<Vector3<f64>> {
    let base = base.normalize();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            if k == 0 {
                return base;
            }
            let axis =
                base.cross(&Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let angle = spread * rng.gen::<f64>();
            Rotation3::from_scaled_axis(axis.normalize() * angle) * base
        })
        .collect()
}

/// Screen basis (e1, e2) with e1 × e2 = d.
pub fn screen_basis(d: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if d.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
    let e1 = helper.cross(d).normalize();
    let e2 = d.cross(&e1);
    (e1, e2)
}

struct Degenerate;

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn project_once(vertices: &[Vector3<f64>], d: &Vector3<f64>) -> Result<PlanarDiagram, Degenerate> {
    let (e1, e2) = screen_basis(d);
    let n = vertices.len() - 1;
    let pts: Vec<[f64; 2]> = vertices[..n].iter().map(|v| [v.dot(&e1), v.dot(&e2)]).collect();
    let depth: Vec<f64> = vertices[..n].iter().map(|v| v.dot(d)).collect();
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);

    let pairs = candidate_pairs(&pts);
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs())).max(1e-300);
    let mut crossings = Vec::new();
    for (i, j) in pairs {
        let gap = i.abs_diff(j);
        if gap == 0 || gap == 1 || gap == n - 1 {
            continue;
        }
        let (a0, a1) = seg(i);
        let (b0, b1) = seg(j);
        let da = [a1[0] - a0[0], a1[1] - a0[1]];
        let db = [b1[0] - b0[0], b1[1] - b0[1]];
        let denom = cross2(da, db);
        let r = [b0[0] - a0[0], b0[1] - a0[1]];
        let la = da[0].hypot(da[1]);
        let lb = db[0].hypot(db[1]);
        if la == 0.0 || lb == 0.0 {
            continue;
        }
        if denom.abs() <= MIN_ANGLE * la * lb {
            // near-parallel: degenerate only if the segments overlap
            let off = cross2(r, da).abs() / la;
            if off <= 1e-12 * scale {
                let proj = |p: [f64; 2]| ((p[0] - a0[0]) * da[0] + (p[1] - a0[1]) * da[1]) / (la * la);
                let (s0, s1) = (proj(b0), proj(b1));
                if s0.max(s1) >= -ENDPOINT_TOL && s0.min(s1) <= 1.0 + ENDPOINT_TOL {
                    return Err(Degenerate);
                }
            }
            continue;
        }
        let s = cross2(r, db) / denom;
        let t = cross2(r, da) / denom;
        let inside = |x: f64| (-ENDPOINT_TOL..=1.0 + ENDPOINT_TOL).contains(&x);
        if !inside(s) || !inside(t) {
            continue;
        }
        if s.abs() <= ENDPOINT_TOL
            || (1.0 - s).abs() <= ENDPOINT_TOL
            || t.abs() <= ENDPOINT_TOL
            || (1.0 - t).abs() <= ENDPOINT_TOL
        {
            return Err(Degenerate);
        }
        let za = depth[i] + (depth[(i + 1) % n] - depth[i]) * s;
        let zb = depth[j] + (depth[(j + 1) % n] - depth[j]) * t;
        let zscale = za.abs().max(zb.abs()).max(1e-300);
        if (za - zb).abs() <= 1e-12 * zscale {
            return Err(Degenerate);
        }
        let pos = [a0[0] + da[0] * s, a0[1] + da[1] * s];
        let (pa, pb) = (i as f64 + s, j as f64 + t);
        let (over, under, dover, dunder) = if za > zb { (pa, pb, da, db) } else { (pb, pa, db, da) };
        let sign = if cross2(dover, dunder) > 0.0 { 1 } else { -1 };
        crossings.push(Crossing {
            over: Passage { component: 0, param: over },
            under: Passage { component: 0, param: under },
            sign,
            position: pos,
        });
    }

    // triple points: two crossings at the same place
    let mut sorted: Vec<[f64; 2]> = crossings.iter().map(|c| c.position).collect();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let tol = 1e-9 * scale;
    for (k, p) in sorted.iter().enumerate() {
        for q in &sorted[k + 1..] {
            if q[0] - p[0] > tol {
                break;
            }
            if (q[1] - p[1]).abs() <= tol {
                return Err(Degenerate);
            }
        }
    }
    Ok(PlanarDiagram { components: vec![pts], crossings })
}

/// Segment pairs whose bounding boxes share a grid cell. Segments spanning
/// many cells are tested against everything.
fn candidate_pairs(pts: &[[f64; 2]]) -> Vec<(usize, usize)> {
    let n = pts.len();
    let mut lens: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .collect();
    lens.sort_by(f64::total_cmp);
    let cell = (lens[n / 2] * 2.0).max(f64::MIN_POSITIVE);
    let key = |x: f64| (x / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut large = Vec::new();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let (x0, x1) = (key(a[0].min(b[0])), key(a[0].max(b[0])));
        let (y0, y1) = (key(a[1].min(b[1])), key(a[1].max(b[1])));
        if (x1 - x0 + 1) * (y1 - y0 + 1) > 64 {
            large.push(i);
            continue;
        }
        for x in x0..=x1 {
            for y in y0..=y1 {
                grid.entry((x, y)).or_default().push(i);
            }
        }
    }
    let mut out = Vec::new();
    for bucket in grid.values() {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    for &i in &large {
        for j in 0..n {
            if j != i && !(large.contains(&j) && j < i) {
                out.push((i.min(j), i.max(j)));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heteroclinic::ArcTag;

    fn trefoil_curve(n: usize) -> ClosedCurve3 {
        let pts = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                Vector3::new(t.sin() + 2.0 * (2.0 * t).sin(), t.cos() - 2.0 * (2.0 * t).cos(), -(3.0 * t).sin())
            })
            .collect();
        ClosedCurve3::from_polygon(pts, ArcTag::Closure)
    }

    // brute force over all segment pairs, independent of the grid
    fn brute_force_crossings(c: &ClosedCurve3, d: Vector3<f64>) -> Vec<i8> {
        let (e1, e2) = screen_basis(&d);
        let n = c.vertices.len() - 1;
        let p: Vec<[f64; 2]> = c.vertices.iter().map(|v| [v.dot(&e1), v.dot(&e2)]).collect();
        let z: Vec<f64> = c.vertices.iter().map(|v| v.dot(&d)).collect();
        let mut signs = Vec::new();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let da = [p[i + 1][0] - p[i][0], p[i + 1][1] - p[i][1]];
                let db = [p[j + 1][0] - p[j][0], p[j + 1][1] - p[j][1]];
                let r = [p[j][0] - p[i][0], p[j][1] - p[i][1]];
                let den = cross2(da, db);
                let s = cross2(r, db) / den;
                let t = cross2(r, da) / den;
                if (0.0..1.0).contains(&s) && (0.0..1.0).contains(&t) {
                    let za = z[i] + (z[i + 1] - z[i]) * s;
                    let zb = z[j] + (z[j + 1] - z[j]) * t;
                    let (o, u) = if za > zb { (da, db) } else { (db, da) };
                    signs.push(if cross2(o, u) > 0.0 { 1 } else { -1 });
                }
            }
        }
        signs
    }

    #[test]
    fn planar_circle_has_no_crossings() {
        let pts = (0..50)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 50.0;
                Vector3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
        let c = ClosedCurve3::from_polygon(pts, ArcTag::Closure);
        let d = project(&c, Vector3::new(0.3, -0.2, 0.9)).unwrap();
        assert_eq!(d.crossing_count(), 0);
    }

    #[test]
    fn parametric_trefoil_along_z() {
        let c = trefoil_curve(400);
        let d = project(&c, Vector3::z()).unwrap();
        let oracle = brute_force_crossings(&c, Vector3::z());
        assert_eq!(oracle.len(), 3);
        assert_eq!(d.crossing_count(), 3);
        let mut got: Vec<i8> = d.signs().collect();
        let mut want = oracle.clone();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        assert!(got.iter().all(|&s| s == got[0]));
    }

    #[test]
    fn sign_convention_on_two_strands() {
        // over strand heads up-right, under strand up-left: positive
        let over = [[-1.0, -1.0], [1.0, 1.0]];
        let under = [[1.0, -1.0], [-1.0, 1.0]];
        let dover = [over[1][0] - over[0][0], over[1][1] - over[0][1]];
        let dunder = [under[1][0] - under[0][0], under[1][1] - under[0][1]];
        assert!(cross2(dover, dunder) > 0.0);
    }

    #[test]
    fn basis_is_right_handed() {
        for d in [Vector3::z(), Vector3::new(1.0, -1.0, 0.0).normalize(), Vector3::new(0.2, 0.3, -0.9).normalize()] {
            let (e1, e2) = screen_basis(&d);
            assert!((e1.cross(&e2) - d).norm() < 1e-12);
        }
    }

    #[test]
    fn vertex_on_crossing_is_retried() {
        // a figure drawn so that a vertex sits exactly on another segment in the z view
        let pts = vec![
            Vector3::new(-1.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, -1.0, 0.0),
            Vector3::new(-1.0, -1.0, 0.0),
        ];
        let c = ClosedCurve3::from_polygon(pts, ArcTag::Closure);
        let d = project(&c, Vector3::z()).unwrap();
        assert_eq!(d.crossing_count(), 1);
    }
}
