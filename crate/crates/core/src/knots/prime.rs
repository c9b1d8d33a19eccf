use super::diagram::{PlanarDiagram, Visit};

/// Edges of the underlying 4-valent graph: one per stretch of a component
/// between consecutive crossing visits, as (from crossing, to crossing).
fn graph_edges(d: &PlanarDiagram) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for vs in d.visits() {
        let n = vs.len();
        for k in 0..n {
            edges.push((vs[k].crossing, vs[(k + 1) % n].crossing));
        }
    }
    edges
}

fn components_without(n: usize, edges: &[(usize, usize)], skip: (usize, usize)) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (k, &(a, b)) in edges.iter().enumerate() {
        if k == skip.0 || k == skip.1 {
            continue;
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

/// Whether the diagram is connected (no crossing-free components and a
/// connected crossing graph).
pub fn is_connected(d: &PlanarDiagram) -> bool {
    let visits = d.visits();
    if d.crossing_count() == 0 {
        return d.component_count() <= 1;
    }
    if visits.iter().any(|v| v.is_empty()) {
        return false;
    }
    let roots = components_without(d.crossing_count(), &graph_edges(d), (usize::MAX, usize::MAX));
    roots.iter().all(|&r| r == roots[0])
}

/// True iff no two edges of the 4-valent diagram graph separate it into two
/// parts that both contain crossings. Disconnected diagrams are not prime.
pub fn is_prime_diagram(d: &PlanarDiagram) -> bool {
    if !is_connected(d) {
        return false;
    }
    let n = d.crossing_count();
    if n == 0 {
        return true;
    }
    let edges = graph_edges(d);
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let roots = components_without(n, &edges, (i, j));
            if roots.iter().any(|&r| r != roots[0]) {
                return false;
            }
        }
    }
    true
}

/// Crossings whose two visits bound a stretch of one component that no other
/// crossing enters and leaves: the stretch can be flipped over to remove them.
pub fn nugatory_crossings(d: &PlanarDiagram) -> Vec<usize> {
    let visits = d.visits();
    let mut pos = vec![Vec::new(); d.crossing_count()];
    for (ci, vs) in visits.iter().enumerate() {
        for (k, v) in vs.iter().enumerate() {
            pos[v.crossing].push((ci, k));
        }
    }
    let mut out = Vec::new();
    for c in 0..d.crossing_count() {
        let (ca, a) = pos[c][0];
        let (cb, b) = pos[c][1];
        if ca != cb {
            continue;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let inside = |x: &(usize, usize)| x.0 == ca && x.1 > lo && x.1 < hi;
        let closed = (lo + 1..hi).all(|k| {
            let other = visits[ca][k].crossing;
            pos[other].iter().all(inside)
        });
        if closed {
            out.push(c);
        }
    }
    out
}

/// Removes nugatory crossings one at a time, flipping the enclosed stretch
/// (which swaps over and under at the crossings it contains) until none remain.
pub fn reduce_nugatory(d: &PlanarDiagram) -> PlanarDiagram {
    let mut cur = d.clone();
    loop {
        let Some(&c) = nugatory_crossings(&cur).first() else {
            return cur;
        };
        let visits = cur.visits();
        let comp = cur.crossings[c].over.component;
        let seq: &[Visit] = &visits[comp];
        let a = seq.iter().position(|v| v.crossing == c).unwrap();
        let b = seq.iter().rposition(|v| v.crossing == c).unwrap();
        let flipped: Vec<usize> = seq[a + 1..b].iter().map(|v| v.crossing).collect();
        for &k in &flipped {
            let x = &mut cur.crossings[k];
            std::mem::swap(&mut x.over, &mut x.under);
        }
        cur.crossings.remove(c);
    }
}
