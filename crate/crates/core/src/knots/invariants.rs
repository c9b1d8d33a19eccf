use std::fmt;

use serde::{Serialize, Serializer};

use super::diagram::PlanarDiagram;
use super::laurent::{determinant, LaurentPoly};
use super::KnotError;

/// Alexander polynomial from the crossing/arc presentation matrix with one
/// row and one column removed, normalized.
pub fn alexander(d: &PlanarDiagram) -> Result<LaurentPoly, KnotError> {
    if d.component_count() != 1 {
        return Err(KnotError::MultiComponent(d.component_count()));
    }
    let n = d.crossing_count();
    if n == 0 {
        return Ok(LaurentPoly::one());
    }
    let m = alexander_matrix(d);
    let minor: Vec<Vec<LaurentPoly>> = m[..n - 1].iter().map(|row| row[..n - 1].to_vec()).collect();
    let det = determinant(minor);
    if det.is_zero() {
        return Err(KnotError::Singular);
    }
    Ok(det.normalized())
}

/// Rows indexed by crossing, columns by arc.
pub fn alexander_matrix(d: &PlanarDiagram) -> Vec<Vec<LaurentPoly>> {
    let st = d.arc_structure();
    let one = LaurentPoly::one();
    let t = LaurentPoly::t();
    let omt = &one - &t;
    let neg = -&one;
    let mut m = vec![vec![LaurentPoly::zero(); st.arc_count]; d.crossing_count()];
    for (k, c) in d.crossings.iter().enumerate() {
        let row = &mut m[k];
        row[st.over[k]] = &row[st.over[k]] + &omt;
        let (a_in, a_out) = if c.sign > 0 { (&t, &neg) } else { (&neg, &t) };
        row[st.incoming[k]] = &row[st.incoming[k]] + a_in;
        row[st.outgoing[k]] = &row[st.outgoing[k]] + a_out;
    }
    m
}

pub fn is_positive(d: &PlanarDiagram) -> bool {
    d.signs().all(|s| s > 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KnotName {
    UnknotCandidate,
    Trefoil,
    FigureEight,
    NineFortySix,
    Unidentified(String),
}

impl KnotName {
    /// Label for reports; identification rests on the Alexander polynomial alone.
    pub fn verdict(&self) -> String {
        match self {
            KnotName::Unidentified(_) | KnotName::UnknotCandidate => self.to_string(),
            _ => format!("consistent with {self}"),
        }
    }
}

impl fmt::Display for KnotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotName::UnknotCandidate => write!(f, "unknot-candidate"),
            KnotName::Trefoil => write!(f, "trefoil"),
            KnotName::FigureEight => write!(f, "figure-eight"),
            KnotName::NineFortySix => write!(f, "9_46"),
            KnotName::Unidentified(p) => write!(f, "unidentified({p})"),
        }
    }
}

impl Serialize for KnotName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn identify_polynomial(p: &LaurentPoly) -> KnotName {
    let p = p.normalized();
    let table: [(&[i64], KnotName); 4] = [
        (&[1], KnotName::UnknotCandidate),
        (&[1, -1, 1], KnotName::Trefoil),
        (&[1, -3, 1], KnotName::FigureEight),
        (&[2, -5, 2], KnotName::NineFortySix),
    ];
    for (c, name) in table {
        if p == LaurentPoly::from_i64(0, c) {
            return name;
        }
    }
    KnotName::Unidentified(p.to_string())
}

pub fn identify(d: &PlanarDiagram) -> KnotName {
    match alexander(d) {
        Ok(p) => identify_polynomial(&p),
        Err(e) => KnotName::Unidentified(e.to_string()),
    }
}
