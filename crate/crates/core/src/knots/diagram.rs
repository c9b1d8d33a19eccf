use serde::{Deserialize, Serialize};

use super::KnotError;

pub type Point2 = [f64; 2];

/// A point on a component, measured as polyline segment index plus fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passage {
    pub component: usize,
    pub param: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub over: Passage,
    pub under: Passage,
    pub sign: i8,
    pub position: Point2,
}

/// Oriented link diagram. Each component is a closed polyline (first point
/// not repeated) used only for drawing; the combinatorics live in the
/// crossings and the order of their passages along each component.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarDiagram {
    pub components: Vec<Vec<Point2>>,
    pub crossings: Vec<Crossing>,
}

/// One visit of a component to a crossing, in traversal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub crossing: usize,
    pub over: bool,
}

impl PlanarDiagram {
    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Crossing visits of every component sorted by parameter.
    pub fn visits(&self) -> Vec<Vec<Visit>> {
        let mut per: Vec<Vec<(f64, Visit)>> = vec![Vec::new(); self.components.len()];
        for (k, c) in self.crossings.iter().enumerate() {
            per[c.over.component].push((c.over.param, Visit { crossing: k, over: true }));
            per[c.under.component].push((c.under.param, Visit { crossing: k, over: false }));
        }
        per.into_iter()
            .map(|mut v| {
                v.sort_by(|a, b| a.0.total_cmp(&b.0));
                v.into_iter().map(|(_, x)| x).collect()
            })
            .collect()
    }

    pub fn signs(&self) -> impl Iterator<Item = i8> + '_ {
        self.crossings.iter().map(|c| c.sign)
    }

    pub fn writhe(&self) -> i64 {
        self.signs().map(i64::from).sum()
    }

    /// Builds a one-component diagram from a signed Gauss sequence: entries
    /// `(crossing, over, sign)` in traversal order. Crossings are drawn on a
    /// circle in visiting order; the drawing is schematic.
    pub fn from_gauss(seq: &[(usize, bool, i8)]) -> Result<Self, KnotError> {
        let n = seq.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let mut over: Vec<Option<f64>> = vec![None; n];
        let mut under: Vec<Option<f64>> = vec![None; n];
        let mut sign: Vec<Option<i8>> = vec![None; n];
        for (k, &(c, is_over, s)) in seq.iter().enumerate() {
            let slot = if is_over { &mut over[c] } else { &mut under[c] };
            if slot.replace(k as f64).is_some() || sign[c].is_some_and(|x| x != s) || s.abs() != 1 {
                return Err(KnotError::Malformed(format!("crossing {c} is not visited once over and once under")));
            }
            sign[c] = Some(s);
        }
        let len = seq.len().max(3);
        let points: Vec<Point2> = (0..len)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / len as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let crossings = (0..n)
            .map(|c| {
                let (Some(o), Some(u), Some(s)) = (over[c], under[c], sign[c]) else {
                    return Err(KnotError::Malformed(format!("crossing {c} is missing a passage")));
                };
                let mid = |p: f64| points[p as usize];
                let (a, b) = (mid(o), mid(u));
                Ok(Crossing {
                    over: Passage { component: 0, param: o },
                    under: Passage { component: 0, param: u },
                    sign: s,
                    position: [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0],
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { components: vec![points], crossings })
    }

    /// Arcs between consecutive undercrossings, numbered component by
    /// component; arc k of a component starts at its k-th under visit.
    pub fn arc_structure(&self) -> ArcStructure {
        let visits = self.visits();
        let mut next_arc = 0;
        let mut incoming = vec![usize::MAX; self.crossings.len()];
        let mut outgoing = vec![usize::MAX; self.crossings.len()];
        let mut over_arc = vec![usize::MAX; self.crossings.len()];
        for vs in &visits {
            let unders: Vec<usize> = vs.iter().enumerate().filter(|(_, v)| !v.over).map(|(i, _)| i).collect();
            let base = next_arc;
            let count = unders.len().max(1);
            next_arc += count;
            // the arc index in effect at visit i: number of unders strictly before i, cyclically
            let mut current = if unders.is_empty() { base } else { base + unders.len() - 1 };
            let mut seen = 0;
            for v in vs {
                if v.over {
                    over_arc[v.crossing] = current;
                } else {
                    incoming[v.crossing] = current;
                    current = base + seen;
                    seen += 1;
                    outgoing[v.crossing] = current;
                }
            }
        }
        ArcStructure { arc_count: next_arc, over: over_arc, incoming, outgoing }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcStructure {
    pub arc_count: usize,
    pub over: Vec<usize>,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcView {
    pub id: usize,
    pub component: usize,
    pub points: Vec<Point2>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingView {
    pub over: usize,
    pub under: usize,
    pub sign: i8,
    pub x: f64,
    pub y: f64,
}

/// Export form: drawn arcs between undercrossings and crossings referring to
/// them. `under` is the arc arriving at the crossing.
#[derive(Debug, Clone, Serialize)]
pub struct DiagramExport {
    pub arcs: Vec<ArcView>,
    pub crossings: Vec<CrossingView>,
}

impl PlanarDiagram {
    pub fn export(&self) -> DiagramExport {
        let st = self.arc_structure();
        let mut arcs: Vec<ArcView> = Vec::with_capacity(st.arc_count);
        for (ci, pts) in self.components.iter().enumerate() {
            let mut unders: Vec<f64> =
                self.crossings.iter().filter(|c| c.under.component == ci).map(|c| c.under.param).collect();
            unders.sort_by(f64::total_cmp);
            let n = pts.len() as f64;
            let base = arcs.len();
            let cuts = if unders.is_empty() { vec![0.0] } else { unders.clone() };
            for k in 0..cuts.len() {
                let start = cuts[k];
                let end = if k + 1 < cuts.len() { cuts[k + 1] } else { cuts[0] + n };
                arcs.push(ArcView { id: base + k, component: ci, points: sample_polyline(pts, start, end) });
            }
        }
        let crossings = self
            .crossings
            .iter()
            .enumerate()
            .map(|(k, c)| CrossingView {
                over: st.over[k],
                under: st.incoming[k],
                sign: c.sign,
                x: c.position[0],
                y: c.position[1],
            })
            .collect();
        DiagramExport { arcs, crossings }
    }
}

fn point_at(pts: &[Point2], param: f64) -> Point2 {
    let n = pts.len();
    let p = param.rem_euclid(n as f64);
    let i = (p.floor() as usize).min(n - 1);
    let f = p - i as f64;
    let a = pts[i];
    let b = pts[(i + 1) % n];
    [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]
}

/// Points of a closed polyline between two parameters (`end` may exceed the length).
pub(crate) fn sample_polyline(pts: &[Point2], start: f64, end: f64) -> Vec<Point2> {
    let mut out = vec![point_at(pts, start)];
    let mut k = start.floor() + 1.0;
    while k < end {
        out.push(point_at(pts, k));
        k += 1.0;
    }
    out.push(point_at(pts, end));
    out
}
