use super::diagram::PlanarDiagram;

/// Number of circles left after smoothing every crossing along the orientation.
///
/// Edges run between consecutive visits of a component. At a crossing the
/// oriented smoothing sends the edge arriving on one strand into the edge
/// leaving on the other strand; Seifert circles are the resulting cycles.
pub fn seifert_circles(d: &PlanarDiagram) -> usize {
    let visits = d.visits();
    // edge id of the edge leaving a (crossing, strand) visit, and the visit each edge ends at
    let mut leaving = vec![[usize::MAX; 2]; d.crossing_count()];
    let mut ends_at = Vec::new();
    let mut free_circles = 0;
    for vs in &visits {
        if vs.is_empty() {
            free_circles += 1;
            continue;
        }
        let base = ends_at.len();
        let n = vs.len();
        for k in 0..n {
            let v = vs[k];
            leaving[v.crossing][usize::from(!v.over)] = base + k;
            let w = vs[(k + 1) % n];
            ends_at.push((w.crossing, usize::from(!w.over)));
        }
    }
    let m = ends_at.len();
    let next: Vec<usize> = ends_at.iter().map(|&(c, strand)| leaving[c][1 - strand]).collect();
    let mut seen = vec![false; m];
    let mut cycles = 0;
    for start in 0..m {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            e = next[e];
        }
    }
    cycles + free_circles
}

/// Genus of the surface built by Seifert's algorithm: (2 − s + c − μ) / 2.
pub fn seifert_genus(d: &PlanarDiagram) -> i64 {
    let s = seifert_circles(d) as i64;
    let c = d.crossing_count() as i64;
    let mu = d.component_count() as i64;
    (2 - s + c - mu) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trefoil_has_two_circles() {
        let d = PlanarDiagram::from_gauss(&[
            (0, true, 1),
            (1, false, 1),
            (2, true, 1),
            (0, false, 1),
            (1, true, 1),
            (2, false, 1),
        ])
        .unwrap();
        assert_eq!(seifert_circles(&d), 2);
        assert_eq!(seifert_genus(&d), 1);
    }

    #[test]
    fn kink_splits_into_two_circles() {
        let d = PlanarDiagram::from_gauss(&[(0, true, 1), (0, false, 1)]).unwrap();
        assert_eq!(seifert_circles(&d), 2);
        assert_eq!(seifert_genus(&d), 0);
    }

    #[test]
    fn free_circles_count() {
        let d = PlanarDiagram { components: vec![vec![[0.0, 0.0]; 3]; 3], crossings: vec![] };
        assert_eq!(seifert_circles(&d), 3);
    }
}
