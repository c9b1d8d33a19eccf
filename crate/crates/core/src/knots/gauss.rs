use std::fmt;

use serde::Serialize;

use super::diagram::PlanarDiagram;
use super::KnotError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GaussEntry {
    pub crossing: usize,
    pub over: bool,
    pub sign: i8,
}

/// Signed Gauss code of a knot diagram in canonical form: crossings are
/// renumbered by first appearance and the cyclic start is the rotation with
/// the lexicographically smallest sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GaussCode {
    pub entries: Vec<GaussEntry>,
}

impl GaussCode {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn crossing_count(&self) -> usize {
        self.entries.len() / 2
    }

    /// Canonical form of a raw cyclic sequence.
    pub fn canonical(raw: &[GaussEntry]) -> Self {
        let n = raw.len();
        let mut best: Option<Vec<GaussEntry>> = None;
        for start in 0..n {
            let mut labels = std::collections::HashMap::new();
            let seq: Vec<GaussEntry> = (0..n)
                .map(|k| {
                    let e = raw[(start + k) % n];
                    let next = labels.len();
                    let id = *labels.entry(e.crossing).or_insert(next);
                    GaussEntry { crossing: id, ..e }
                })
                .collect();
            if best.as_ref().is_none_or(|b| seq < *b) {
                best = Some(seq);
            }
        }
        Self { entries: best.unwrap_or_default() }
    }

    pub fn to_diagram(&self) -> Result<PlanarDiagram, KnotError> {
        let seq: Vec<(usize, bool, i8)> = self.entries.iter().map(|e| (e.crossing, e.over, e.sign)).collect();
        PlanarDiagram::from_gauss(&seq)
    }
}

impl fmt::Display for GaussCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}{}", if e.over { 'O' } else { 'U' }, e.crossing + 1, if e.sign > 0 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

pub fn gauss_code(d: &PlanarDiagram) -> Result<GaussCode, KnotError> {
    if d.component_count() != 1 {
        return Err(KnotError::MultiComponent(d.component_count()));
    }
    let raw: Vec<GaussEntry> = d.visits()[0]
        .iter()
        .map(|v| GaussEntry { crossing: v.crossing, over: v.over, sign: d.crossings[v.crossing].sign })
        .collect();
    Ok(GaussCode::canonical(&raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trefoil_seq() -> Vec<(usize, bool, i8)> {
        vec![(0, true, 1), (1, false, 1), (2, true, 1), (0, false, 1), (1, true, 1), (2, false, 1)]
    }

    #[test]
    fn empty_code_for_circle() {
        let d = PlanarDiagram { components: vec![vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]], crossings: vec![] };
        assert!(gauss_code(&d).unwrap().is_empty());
    }

    #[test]
    fn trefoil_code_visits_each_crossing_twice() {
        let code = gauss_code(&PlanarDiagram::from_gauss(&trefoil_seq()).unwrap()).unwrap();
        assert_eq!(code.len(), 6);
        for c in 0..3 {
            let visits: Vec<_> = code.entries.iter().filter(|e| e.crossing == c).collect();
            assert_eq!(visits.len(), 2);
            assert_ne!(visits[0].over, visits[1].over);
        }
        assert_eq!(code.to_string(), "U1+ O2+ U3+ O1+ U2+ O3+");
    }

    #[test]
    fn canonical_under_relabeling_and_rotation() {
        let base = gauss_code(&PlanarDiagram::from_gauss(&trefoil_seq()).unwrap()).unwrap();
        let perm = [2usize, 0, 1];
        for shift in 0..6 {
            let mut seq = trefoil_seq();
            seq.rotate_left(shift);
            let seq: Vec<_> = seq.into_iter().map(|(c, o, s)| (perm[c], o, s)).collect();
            let code = gauss_code(&PlanarDiagram::from_gauss(&seq).unwrap()).unwrap();
            assert_eq!(code, base);
        }
    }

    #[test]
    fn links_are_rejected() {
        let d = PlanarDiagram { components: vec![vec![[0.0, 0.0]; 3]; 2], crossings: vec![] };
        assert!(matches!(gauss_code(&d), Err(KnotError::MultiComponent(2))));
    }
}
