//! Piecewise-linear return map on the unit square: vertical columns stretched
//! horizontally by λ and squeezed vertically by 1/λ, all in exact ℚ(√3).

mod qsqrt3;

pub use qsqrt3::QSqrt3;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::templates::{enumerate_words, Band, TemplateError, TemplateSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PLError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("point ({0}) lies outside the unit square")]
    OutOfDomain(String),
    #[error("point ({0}) lies on a discontinuity line")]
    Boundary(String),
    #[error("itinerary truncated after {prefix:?}: point ({point}) lies on a discontinuity line")]
    Truncated { prefix: String, point: String },
    #[error("unknown piece '{0}'")]
    UnknownSymbol(char),
    #[error("empty word")]
    EmptyWord,
    #[error("word {word} is not admissible: {from} cannot be followed by {to}")]
    Inadmissible { word: String, from: char, to: char },
    #[error("word {word}: {reason}")]
    NoFixedPoint { word: String, reason: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Point {
    pub x: QSqrt3,
    pub y: QSqrt3,
}

impl Point {
    pub fn new(x: QSqrt3, y: QSqrt3) -> Self {
        Self { x, y }
    }

    /// The rotation symmetry seen on the section: `(x, y) ↦ (1 − x, 1 − y)`.
    pub fn involution(&self) -> Self {
        Self::new(QSqrt3::one() - self.x.clone(), QSqrt3::one() - self.y.clone())
    }

    pub fn approx(&self) -> (f64, f64) {
        (self.x.to_f64(), self.y.to_f64())
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}, {}", self.x, self.y)
    }
}

/// `p ↦ m p + t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affine {
    pub m: [[QSqrt3; 2]; 2],
    pub t: [QSqrt3; 2],
}

impl Affine {
    pub fn identity() -> Self {
        let (o, z) = (QSqrt3::one(), QSqrt3::zero());
        Self { m: [[o.clone(), z.clone()], [z.clone(), o]], t: [z.clone(), z] }
    }

    pub fn apply(&self, p: &Point) -> Point {
        let [[a, b], [c, d]] = &self.m;
        Point::new(
            a.clone() * p.x.clone() + b.clone() * p.y.clone() + self.t[0].clone(),
            c.clone() * p.x.clone() + d.clone() * p.y.clone() + self.t[1].clone(),
        )
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &Affine) -> Affine {
        let m = |i: usize, j: usize| {
            self.m[i][0].clone() * inner.m[0][j].clone() + self.m[i][1].clone() * inner.m[1][j].clone()
        };
        let t = |i: usize| {
            self.m[i][0].clone() * inner.t[0].clone() + self.m[i][1].clone() * inner.t[1].clone() + self.t[i].clone()
        };
        Affine { m: [[m(0, 0), m(0, 1)], [m(1, 0), m(1, 1)]], t: [t(0), t(1)] }
    }

    pub fn det(&self) -> QSqrt3 {
        let [[a, b], [c, d]] = &self.m;
        a.clone() * d.clone() - b.clone() * c.clone()
    }

    /// Linear part of the inverse; `None` when singular.
    pub fn inverse_linear(&self) -> Option<[[QSqrt3; 2]; 2]> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        let [[a, b], [c, d]] = &self.m;
        let s = |x: &QSqrt3| x.clone() / det.clone();
        Some([[s(d), s(&-b.clone())], [s(&-c.clone()), s(a)]])
    }

    /// Solves `p = self(p)` exactly.
    pub fn fixed_point(&self) -> Option<Point> {
        let one = QSqrt3::one();
        let shifted = Affine {
            m: [
                [one.clone() - self.m[0][0].clone(), -self.m[0][1].clone()],
                [-self.m[1][0].clone(), one - self.m[1][1].clone()],
            ],
            t: [QSqrt3::zero(), QSqrt3::zero()],
        };
        let inv = shifted.inverse_linear()?;
        let lin = Affine { m: inv, t: [QSqrt3::zero(), QSqrt3::zero()] };
        Some(lin.apply(&Point::new(self.t[0].clone(), self.t[1].clone())))
    }
}

/// A full-height column `[x0, x1] × [0, 1]` and its affine map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub symbol: char,
    pub x0: QSqrt3,
    pub x1: QSqrt3,
    pub map: Affine,
}

impl Piece {
    fn contains_closed(&self, p: &Point) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && in_unit(&p.y)
    }

    fn image_x_range(&self) -> (QSqrt3, QSqrt3) {
        let corners = [(&self.x0, 0), (&self.x0, 1), (&self.x1, 0), (&self.x1, 1)]
            .map(|(x, y)| self.map.apply(&Point::new(x.clone(), QSqrt3::int(y))));
        let xs: Vec<QSqrt3> = corners.iter().map(|c| c.x.clone()).collect();
        (xs.iter().min().unwrap().clone(), xs.iter().max().unwrap().clone())
    }
}

/// Column data for [`PLMap::markov`]: the column of width `width` is stretched
/// onto the union of the `image` columns and squeezed into the strip
/// `[offset, offset + 1/λ]`. A flipped column reverses both directions.
#[derive(Debug, Clone)]
pub struct Column {
    pub symbol: char,
    pub width: QSqrt3,
    pub image: Vec<char>,
    pub flip: bool,
    pub offset: QSqrt3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLMap {
    pub name: String,
    /// Declared expansion rate.
    pub lambda: QSqrt3,
    /// How the geometry was obtained; the shipped layouts are reconstructed from
    /// transition data rather than read off a figure.
    pub layout: String,
    pub pieces: Vec<Piece>,
    matrix: Vec<Vec<u64>>,
}

fn in_unit(v: &QSqrt3) -> bool {
    &QSqrt3::zero() <= v && v <= &QSqrt3::one()
}

impl PLMap {
    /// Validates that the pieces tile the square left to right and map into it.
    /// The transition matrix records which open columns each image crosses.
    pub fn new(
        name: impl Into<String>,
        lambda: QSqrt3,
        layout: impl Into<String>,
        pieces: Vec<Piece>,
    ) -> Result<Self, PLError> {
        if pieces.is_empty() {
            return Err(PLError::Invalid("no pieces".into()));
        }
        let mut edge = QSqrt3::zero();
        let mut seen = BTreeSet::new();
        for p in &pieces {
            if !seen.insert(p.symbol) {
                return Err(PLError::Invalid(format!("duplicate piece '{}'", p.symbol)));
            }
            if p.x0 != edge || p.x1 <= p.x0 {
                return Err(PLError::Invalid(format!("piece '{}' does not continue the tiling at {edge}", p.symbol)));
            }
            for x in [&p.x0, &p.x1] {
                for y in [QSqrt3::zero(), QSqrt3::one()] {
                    let q = p.map.apply(&Point::new(x.clone(), y));
                    if !in_unit(&q.x) || !in_unit(&q.y) {
                        return Err(PLError::Invalid(format!("image of piece '{}' leaves the square", p.symbol)));
                    }
                }
            }
            edge = p.x1.clone();
        }
        if edge != QSqrt3::one() {
            return Err(PLError::Invalid("pieces do not reach x = 1".into()));
        }
        let matrix = pieces
            .iter()
            .map(|p| {
                let (lo, hi) = p.image_x_range();
                pieces.iter().map(|q| u64::from(lo.clone().max(q.x0.clone()) < hi.clone().min(q.x1.clone()))).collect()
            })
            .collect();
        Ok(Self { name: name.into(), lambda, layout: layout.into(), pieces, matrix })
    }

    /// Builds a Markov map whose images exactly cover their target columns.
    pub fn markov(name: impl Into<String>, lambda: QSqrt3, columns: &[Column]) -> Result<Self, PLError> {
        let mut starts = Vec::with_capacity(columns.len());
        let mut edge = QSqrt3::zero();
        for c in columns {
            starts.push(edge.clone());
            edge = edge + c.width.clone();
        }
        let index = |s: char| columns.iter().position(|c| c.symbol == s).ok_or(PLError::UnknownSymbol(s));
        let inv = lambda.recip();
        let mut pieces = Vec::with_capacity(columns.len());
        for (k, c) in columns.iter().enumerate() {
            let targets = c.image.iter().map(|&s| index(s)).collect::<Result<Vec<_>, _>>()?;
            if targets.is_empty() || targets.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(PLError::Invalid(format!("image of '{}' is not a run of adjacent columns", c.symbol)));
            }
            let lo = starts[targets[0]].clone();
            let last = *targets.last().unwrap();
            let hi = starts[last].clone() + columns[last].width.clone();
            if hi.clone() - lo.clone() != lambda.clone() * c.width.clone() {
                return Err(PLError::Invalid(format!("column '{}' does not stretch exactly onto its image", c.symbol)));
            }
            let x0 = starts[k].clone();
            let z = QSqrt3::zero();
            let map = if c.flip {
                Affine {
                    m: [[-lambda.clone(), z.clone()], [z, -inv.clone()]],
                    t: [hi + lambda.clone() * x0.clone(), c.offset.clone() + inv.clone()],
                }
            } else {
                Affine {
                    m: [[lambda.clone(), z.clone()], [z, inv.clone()]],
                    t: [lo - lambda.clone() * x0.clone(), c.offset.clone()],
                }
            };
            pieces.push(Piece { symbol: c.symbol, x1: x0.clone() + c.width.clone(), x0, map });
        }
        Self::new(name, lambda, "reconstructed", pieces)
    }

    pub fn symbols(&self) -> Vec<char> {
        self.pieces.iter().map(|p| p.symbol).collect()
    }

    pub fn transition_matrix(&self) -> &[Vec<u64>] {
        &self.matrix
    }

    fn index_of(&self, s: char) -> Result<usize, PLError> {
        self.pieces.iter().position(|p| p.symbol == s).ok_or(PLError::UnknownSymbol(s))
    }

    /// Piece whose open column contains `p`. The outer edges `x = 0` and
    /// `x = 1` belong to the first and last piece; interior column lines do not.
    pub fn piece_of(&self, p: &Point) -> Result<usize, PLError> {
        if !in_unit(&p.x) || !in_unit(&p.y) {
            return Err(PLError::OutOfDomain(p.to_string()));
        }
        if p.x.is_zero() {
            return Ok(0);
        }
        if p.x == QSqrt3::one() {
            return Ok(self.pieces.len() - 1);
        }
        self.pieces.iter().position(|q| q.x0 < p.x && p.x < q.x1).ok_or_else(|| PLError::Boundary(p.to_string()))
    }

    pub fn step(&self, p: &Point) -> Result<Point, PLError> {
        let k = self.piece_of(p)?;
        Ok(self.pieces[k].map.apply(p))
    }

    /// Piece labels of `p, step(p), …` for `n` steps.
    pub fn itinerary(&self, p: &Point, n: usize) -> Result<String, PLError> {
        let mut word = String::with_capacity(n);
        let mut cur = p.clone();
        for _ in 0..n {
            let k = match self.piece_of(&cur) {
                Ok(k) => k,
                Err(PLError::Boundary(point)) => return Err(PLError::Truncated { prefix: word, point }),
                Err(e) => return Err(e),
            };
            word.push(self.pieces[k].symbol);
            cur = self.pieces[k].map.apply(&cur);
        }
        Ok(word)
    }

    fn parse(&self, word: &str) -> Result<Vec<usize>, PLError> {
        let idx = word.chars().map(|c| self.index_of(c)).collect::<Result<Vec<_>, _>>()?;
        if idx.is_empty() {
            return Err(PLError::EmptyWord);
        }
        for k in 0..idx.len() {
            let (i, j) = (idx[k], idx[(k + 1) % idx.len()]);
            if self.matrix[i][j] == 0 {
                return Err(PLError::Inadmissible {
                    word: word.into(),
                    from: self.pieces[i].symbol,
                    to: self.pieces[j].symbol,
                });
            }
        }
        Ok(idx)
    }

    /// Composite map along `word`, first letter applied first.
    pub fn composite(&self, word: &str) -> Result<Affine, PLError> {
        let idx = self.parse(word)?;
        Ok(idx.iter().fold(Affine::identity(), |acc, &k| self.pieces[k].map.after(&acc)))
    }

    /// The point whose orbit follows `word` periodically, solved exactly.
    pub fn periodic_point(&self, word: &str) -> Result<Point, PLError> {
        let idx = self.parse(word)?;
        let f = idx.iter().fold(Affine::identity(), |acc, &k| self.pieces[k].map.after(&acc));
        let fail = |reason: &str| PLError::NoFixedPoint { word: word.into(), reason: reason.into() };
        let p = f.fixed_point().ok_or_else(|| fail("composite map has no isolated fixed point"))?;
        let mut cur = p.clone();
        for &k in &idx {
            if !self.pieces[k].contains_closed(&cur) {
                return Err(fail(&format!("orbit leaves piece '{}'", self.pieces[k].symbol)));
            }
            cur = self.pieces[k].map.apply(&cur);
        }
        if cur != p {
            return Err(fail("orbit does not close"));
        }
        Ok(p)
    }

    /// All points of period dividing `n`, one per admissible cyclic sequence.
    pub fn periodic_points(&self, n: usize) -> Result<Vec<(String, Point)>, PLError> {
        self.closed_walks(n).into_par_iter().map(|w| self.periodic_point(&w).map(|p| (w, p))).collect()
    }

    fn closed_walks(&self, n: usize) -> Vec<String> {
        let k = self.pieces.len();
        let mut out = Vec::new();
        let mut path = Vec::with_capacity(n);
        fn go(m: &PLMap, k: usize, n: usize, path: &mut Vec<usize>, out: &mut Vec<String>) {
            if path.len() == n {
                if m.matrix[path[n - 1]][path[0]] == 1 {
                    out.push(path.iter().map(|&i| m.pieces[i].symbol).collect());
                }
                return;
            }
            for j in 0..k {
                if path.last().is_none_or(|&i| m.matrix[i][j] == 1) {
                    path.push(j);
                    go(m, k, n, path, out);
                    path.pop();
                }
            }
        }
        if n > 0 {
            go(self, k, n, &mut path, &mut out);
        }
        out
    }

    /// Mirror image of a word under the left-right reflection of the columns.
    pub fn mirror_word(&self, word: &str) -> Result<String, PLError> {
        let k = self.pieces.len();
        word.chars().map(|c| Ok(self.pieces[k - 1 - self.index_of(c)?].symbol)).collect()
    }

    pub fn cone_report(&self) -> ConeReport {
        let mut pass = true;
        let mut expansion: Option<QSqrt3> = None;
        let mut contraction: Option<QSqrt3> = None;
        for p in &self.pieces {
            let [[a, b], [c, d]] = p.map.m.clone();
            let (h, h_ok) = cone_gain(&a, &b, &c, &d);
            let (v, v_ok) = match p.map.inverse_linear() {
                // inverse on the vertical cone: swap the roles of the coordinates
                Some([[ia, ib], [ic, id]]) => cone_gain(&id, &ic, &ib, &ia),
                None => (QSqrt3::zero(), false),
            };
            pass &= h_ok && v_ok && h >= self.lambda && v >= self.lambda;
            expansion = Some(expansion.map_or(h.clone(), |e| e.min(h)));
            contraction = Some(contraction.map_or(v.clone(), |e| e.min(v)));
        }
        ConeReport {
            pass,
            lambda: self.lambda.clone(),
            expansion: expansion.unwrap_or_else(QSqrt3::zero),
            contraction: contraction.unwrap_or_else(QSqrt3::zero),
        }
    }

    /// Horizontal cones `|v_y| ≤ |v_x|` map strictly inside themselves with gain
    /// at least λ, and vertical cones do the same under the inverse.
    pub fn cone_check(&self) -> bool {
        self.cone_report().pass
    }

    /// The template obtained by collapsing the vertical direction: each piece
    /// becomes a band over the columns its image crosses.
    pub fn collapse(&self) -> Result<TemplateSpec, PLError> {
        let bands = self
            .pieces
            .iter()
            .zip(&self.matrix)
            .map(|(p, row)| Band {
                symbol: p.symbol,
                image: self.pieces.iter().zip(row).filter(|(_, &e)| e == 1).map(|(q, _)| q.symbol).collect(),
                twist: if p.map.m[0][0].signum() < 0 { -1 } else { 1 },
                layer: 0,
            })
            .collect();
        Ok(TemplateSpec::new(self.name.clone(), bands)?)
    }

    /// Exact periodic point and checks for every primitive word up to `n_max`.
    pub fn orbit_reports(&self, n_max: usize) -> Result<Vec<OrbitReport>, PLError> {
        let t = self.collapse()?;
        let words: Vec<String> = enumerate_words(&t, n_max).iter().map(|w| t.spell(w)).collect();
        words
            .into_par_iter()
            .map(|word| {
                let point = self.periodic_point(&word)?;
                let itinerary = self.itinerary(&point, word.len()).ok();
                let round_trip = itinerary.as_deref() == Some(word.as_str());
                let mirror = self.periodic_point(&self.mirror_word(&word)?)?;
                let f = self.composite(&word)?;
                Ok(OrbitReport {
                    approx: point.approx(),
                    symmetric: mirror == point.involution(),
                    horizontal_factor: f.m[0][0].abs(),
                    word,
                    point,
                    itinerary,
                    round_trip,
                })
            })
            .collect()
    }
}

/// Gain of `v ↦ (a v₁ + b v₂, c v₁ + d v₂)` on the cone `|v₂| ≤ |v₁|`, and
/// whether the cone maps strictly inside itself. Both sides are linear in
/// `v₂/v₁`, so the two edges of the cone decide.
fn cone_gain(a: &QSqrt3, b: &QSqrt3, c: &QSqrt3, d: &QSqrt3) -> (QSqrt3, bool) {
    let plus = a.clone() + b.clone();
    let minus = a.clone() - b.clone();
    let same_side = plus.signum() != 0 && plus.signum() == minus.signum();
    let inside = (c.clone() + d.clone()).abs() < plus.abs() && (c.clone() - d.clone()).abs() < minus.abs();
    (plus.abs().min(minus.abs()), same_side && inside)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConeReport {
    pub pass: bool,
    pub lambda: QSqrt3,
    /// Smallest horizontal gain over the pieces.
    pub expansion: QSqrt3,
    /// Smallest vertical gain of the inverse over the pieces.
    pub contraction: QSqrt3,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitReport {
    pub word: String,
    pub point: Point,
    pub approx: (f64, f64),
    pub itinerary: Option<String>,
    pub round_trip: bool,
    pub symmetric: bool,
    pub horizontal_factor: QSqrt3,
}

/// Minimal rotation of a spelled cyclic word.
fn canonical_spelling(w: &str) -> String {
    let chars: Vec<char> = w.chars().collect();
    (0..chars.len()).map(|k| chars[k..].iter().chain(&chars[..k]).collect::<String>()).min().unwrap_or_default()
}

/// Do the model and the template carry the same primitive cyclic words up to
/// length `n_max`?
pub fn model_template_correspondence(m: &PLMap, t: &TemplateSpec, n_max: usize) -> Result<bool, PLError> {
    let collapsed = m.collapse()?;
    let set = |t: &TemplateSpec| -> BTreeSet<String> {
        enumerate_words(t, n_max).iter().map(|w| canonical_spelling(&t.spell(w))).collect()
    };
    Ok(set(&collapsed) == set(t))
}

fn ratio(p: i64, q: i64) -> QSqrt3 {
    QSqrt3::from_ratio(p, q)
}

/// Figure-eight model. Columns run B, A, D, C; widths come from the right
/// Perron vector of the transition matrix. Every column line lands on the
/// square's outer edge after a step or two, so no periodic orbit touches the
/// discontinuity set.
pub fn figure8_model() -> PLMap {
    let l = QSqrt3::lambda();
    let inv = l.recip();
    let inv2 = inv.clone() * inv.clone();
    let spare = QSqrt3::one() - inv.clone();
    let all = vec!['B', 'A', 'D', 'C'];
    let col = |symbol, width: &QSqrt3, image: Vec<char>, offset: QSqrt3| Column {
        symbol,
        width: width.clone(),
        image,
        flip: false,
        offset,
    };
    PLMap::markov(
        "fig8",
        l,
        &[
            col('B', &inv, all.clone(), ratio(1, 10)),
            col('A', &inv2, vec!['B'], spare.clone() / QSqrt3::int(2)),
            col('D', &inv2, vec!['C'], spare.clone() / QSqrt3::int(2)),
            col('C', &inv, all, spare - ratio(1, 10)),
        ],
    )
    .expect("shipped layout is valid")
}

/// Two-column analogue for the Lorenz template: the baker's map with λ = 2.
pub fn lorenz_model() -> PLMap {
    let half = ratio(1, 2);
    let col = |symbol, offset| Column { symbol, width: half.clone(), image: vec!['L', 'R'], flip: false, offset };
    PLMap::markov("lorenz", QSqrt3::int(2), &[col('L', QSqrt3::zero()), col('R', half.clone())]).expect("valid")
}

/// Two sheared columns with horizontal stretch 11/10, declared against λ = 1 + √3.
/// Fails the cone check.
pub fn sheared_test_map() -> PLMap {
    let shear = |x0: QSqrt3| Affine {
        m: [[ratio(11, 10), ratio(1, 4)], [QSqrt3::zero(), ratio(10, 11)]],
        t: [-(ratio(11, 10) * x0), QSqrt3::zero()],
    };
    let pieces = vec![
        Piece { symbol: 'A', x0: QSqrt3::zero(), x1: ratio(1, 2), map: shear(QSqrt3::zero()) },
        Piece { symbol: 'B', x0: ratio(1, 2), x1: QSqrt3::one(), map: shear(ratio(1, 2)) },
    ];
    PLMap::new("sheared", QSqrt3::lambda(), "test", pieces).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates::{figure8_template, lorenz_template};
    use proptest::prelude::*;

    fn pt(x: (i64, i64), y: (i64, i64)) -> Point {
        Point::new(ratio(x.0, x.1), ratio(y.0, y.1))
    }

    #[test]
    fn figure8_transitions_match_the_template() {
        let m = figure8_model();
        assert_eq!(m.symbols(), vec!['B', 'A', 'D', 'C']);
        let t = figure8_template();
        let order = m.symbols();
        let want = t.transition_matrix_in(&order).unwrap();
        assert_eq!(m.transition_matrix(), want.as_slice());
        assert!(model_template_correspondence(&m, &t, 8).unwrap());
        assert!(model_template_correspondence(&lorenz_model(), &lorenz_template(), 8).unwrap());
        assert!(!model_template_correspondence(&lorenz_model(), &t, 8).unwrap());
    }

    #[test]
    fn segments_scale_exactly() {
        let m = figure8_model();
        let l = QSqrt3::lambda();
        let (p, q) = (pt((1, 10), (1, 3)), pt((1, 5), (1, 3)));
        let (fp, fq) = (m.step(&p).unwrap(), m.step(&q).unwrap());
        assert_eq!(fq.x.clone() - fp.x.clone(), l.clone() * (q.x.clone() - p.x.clone()));
        assert_eq!(fp.y, fq.y);
        let r = pt((1, 10), (2, 3));
        let fr = m.step(&r).unwrap();
        assert_eq!(fr.y - fp.y, (r.y - p.y) / l);
    }

    #[test]
    fn column_lines_are_discontinuities() {
        let m = figure8_model();
        let line = Point::new(QSqrt3::lambda().recip(), ratio(1, 2));
        assert!(matches!(m.step(&line), Err(PLError::Boundary(_))));
        assert!(matches!(m.step(&pt((3, 2), (1, 2))), Err(PLError::OutOfDomain(_))));
        assert_eq!(m.piece_of(&pt((0, 1), (1, 2))).unwrap(), 0);
        let start = pt((1, 2), (1, 2));
        assert!(matches!(m.itinerary(&start, 3), Err(PLError::Truncated { prefix, .. }) if prefix.is_empty()));
    }

    #[test]
    fn single_letter_fixed_points() {
        let m = figure8_model();
        for (w, x) in [("B", QSqrt3::zero()), ("C", QSqrt3::one())] {
            let p = m.periodic_point(w).unwrap();
            assert_eq!(p.x, x);
            assert_eq!(m.step(&p).unwrap(), p);
            assert_eq!(m.itinerary(&p, 5).unwrap(), w.repeat(5));
        }
        assert!(matches!(m.periodic_point("A"), Err(PLError::Inadmissible { .. })));
        assert!(matches!(m.periodic_point("AD"), Err(PLError::Inadmissible { .. })));
    }

    #[test]
    fn period_counts_are_traces() {
        let m = figure8_model();
        let t = figure8_template();
        for n in 1..=8 {
            let pts = m.periodic_points(n).unwrap();
            assert_eq!(num_bigint::BigUint::from(pts.len()), t.trace_power(n), "n={n}");
            let distinct: BTreeSet<&Point> = pts.iter().map(|(_, p)| p).collect();
            assert_eq!(distinct.len(), pts.len());
        }
    }

    #[test]
    fn orbits_round_trip_and_respect_symmetry() {
        let m = figure8_model();
        let reports = m.orbit_reports(8).unwrap();
        assert_eq!(reports.len(), 661);
        for r in &reports {
            assert!(r.round_trip, "{} -> {:?}", r.word, r.itinerary);
            assert!(r.symmetric, "{}", r.word);
            assert_eq!(r.horizontal_factor, QSqrt3::lambda().pow(r.word.len() as u32));
        }
        let distinct: BTreeSet<&Point> = reports.iter().map(|r| &r.point).collect();
        assert_eq!(distinct.len(), reports.len());
    }

    #[test]
    fn cones() {
        let r = figure8_model().cone_report();
        assert!(r.pass);
        assert_eq!(r.expansion, QSqrt3::lambda());
        assert_eq!(r.contraction, QSqrt3::lambda());
        assert!(lorenz_model().cone_check());
        let s = sheared_test_map().cone_report();
        assert!(!s.pass);
        assert_eq!(s.expansion, ratio(17, 20));
    }

    #[test]
    fn flipped_outer_columns_also_stay_off_the_lines() {
        let l = QSqrt3::lambda();
        let inv = l.recip();
        let spare = QSqrt3::one() - inv.clone();
        let all = vec!['B', 'A', 'D', 'C'];
        let col = |symbol, width: QSqrt3, image: Vec<char>, flip, offset| Column { symbol, width, image, flip, offset };
        let m = PLMap::markov(
            "fig8-flipped",
            l,
            &[
                col('B', inv.clone(), all.clone(), false, ratio(1, 10)),
                col('A', inv.clone() * inv.clone(), vec!['B'], true, spare.clone() / QSqrt3::int(2)),
                col('D', inv.clone() * inv.clone(), vec!['C'], true, spare.clone() / QSqrt3::int(2)),
                col('C', inv, all, false, spare - ratio(1, 10)),
            ],
        )
        .unwrap();
        assert!(m.cone_check());
        assert!(m.orbit_reports(7).unwrap().iter().all(|r| r.round_trip && r.symmetric));
        assert_eq!(m.collapse().unwrap().bands[1].twist, -1);
    }

    #[test]
    fn markov_rejects_bad_data() {
        let l = QSqrt3::lambda();
        let bad = PLMap::markov(
            "bad",
            l,
            &[Column { symbol: 'A', width: QSqrt3::one(), image: vec!['A'], flip: false, offset: QSqrt3::zero() }],
        );
        assert!(matches!(bad, Err(PLError::Invalid(_))));
    }

    fn small() -> impl Strategy<Value = (i64, i64)> {
        (1i64..200).prop_map(|k| (k, 201))
    }

    proptest! {
        #[test]
        fn step_commutes_with_involution(x in small(), y in small()) {
            let m = figure8_model();
            let p = pt(x, y);
            if let Ok(fp) = m.step(&p) {
                prop_assert_eq!(m.step(&p.involution()).unwrap(), fp.involution());
            }
        }

        #[test]
        fn equal_itineraries_pin_x(x1 in small(), x2 in small(), y in small(), n in 1usize..6) {
            let m = figure8_model();
            let (p, q) = (pt(x1, y), pt(x2, y));
            if let (Ok(a), Ok(b)) = (m.itinerary(&p, n), m.itinerary(&q, n)) {
                if a == b {
                    let bound = m.lambda.recip().pow(n as u32);
                    prop_assert!((p.x - q.x).abs() <= bound);
                }
            }
        }
    }
}
