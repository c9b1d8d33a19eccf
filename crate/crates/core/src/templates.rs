//! Braided templates: band data, symbolic orbits, and compilation of orbits
//! to braids and knot reports.

use std::cmp::{Ordering, Reverse};
use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braids::{burau_alexander, closure_components, closure_diagram, genus_positive, BraidError, BraidWord};
use crate::knots::{identify_polynomial, is_prime_diagram, reduce_nugatory, seifert_genus, KnotName, LaurentPoly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("invalid template: {0}")]
    Invalid(String),
    #[error("unknown band symbol {0:?}")]
    UnknownSymbol(char),
    #[error("empty word")]
    EmptyWord,
    #[error("word {word} is not admissible: {from} cannot be followed by {to}")]
    Inadmissible { word: String, from: char, to: char },
    #[error("word {0} is a proper power")]
    NotPrimitive(String),
    #[error("band subset {0} carries no cycle")]
    NoCycle(String),
    #[error(transparent)]
    Braid(#[from] BraidError),
}

/// One band of a template. It leaves the branch line from its own interval
/// and returns stretched across the intervals listed in `image`, in
/// branch-line order. `twist = -1` marks a half-twisted band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub symbol: char,
    pub image: Vec<char>,
    pub twist: i8,
    #[serde(default)]
    pub layer: i32,
}

/// Bands listed left to right along the branch line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSpec {
    #[serde(default)]
    pub name: String,
    pub bands: Vec<Band>,
}

impl TemplateSpec {
    pub fn new(name: impl Into<String>, bands: Vec<Band>) -> Result<Self, TemplateError> {
        let t = Self { name: name.into(), bands };
        t.validate()?;
        Ok(t)
    }

    pub fn from_json(s: &str) -> Result<Self, TemplateError> {
        let t: Self = serde_json::from_str(s).map_err(|e| TemplateError::Invalid(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let bad = |m: String| Err(TemplateError::Invalid(m));
        if self.bands.is_empty() {
            return bad("no bands".into());
        }
        for (i, b) in self.bands.iter().enumerate() {
            if self.bands[..i].iter().any(|o| o.symbol == b.symbol) {
                return bad(format!("duplicate symbol {:?}", b.symbol));
            }
        }
        for b in &self.bands {
            if b.twist != 1 && b.twist != -1 {
                return bad(format!("band {:?} has twist {}, expected ±1", b.symbol, b.twist));
            }
            if b.image.is_empty() {
                return bad(format!("band {:?} has an empty image", b.symbol));
            }
            let idx = b
                .image
                .iter()
                .map(|&c| {
                    self.index_of(c).ok_or_else(|| TemplateError::Invalid(format!("unknown symbol {c:?} in image")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if idx.windows(2).any(|w| w[1] != w[0] + 1) {
                return bad(format!("image of band {:?} is not a run of consecutive intervals", b.symbol));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn symbols(&self) -> Vec<char> {
        self.bands.iter().map(|b| b.symbol).collect()
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.bands.iter().position(|b| b.symbol == c)
    }

    pub fn transition_matrix(&self) -> Vec<Vec<u64>> {
        let k = self.len();
        let mut m = vec![vec![0; k]; k];
        for (i, b) in self.bands.iter().enumerate() {
            for &c in &b.image {
                m[i][self.index_of(c).expect("validated")] = 1;
            }
        }
        m
    }

    /// Transition matrix with rows and columns in the given symbol order.
    pub fn transition_matrix_in(&self, order: &[char]) -> Result<Vec<Vec<u64>>, TemplateError> {
        let idx = order
            .iter()
            .map(|&c| self.index_of(c).ok_or(TemplateError::UnknownSymbol(c)))
            .collect::<Result<Vec<_>, _>>()?;
        let m = self.transition_matrix();
        Ok(idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect())
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        let target = self.bands[to].symbol;
        self.bands[from].image.contains(&target)
    }

    /// Subtemplate on the given bands; images are cut down to the kept bands.
    pub fn restrict(&self, keep: &[char]) -> Result<Self, TemplateError> {
        for &c in keep {
            self.index_of(c).ok_or(TemplateError::UnknownSymbol(c))?;
        }
        let bands = self
            .bands
            .iter()
            .filter(|b| keep.contains(&b.symbol))
            .map(|b| Band { image: b.image.iter().copied().filter(|c| keep.contains(c)).collect(), ..b.clone() })
            .collect();
        Self::new(format!("{}[{}]", self.name, keep.iter().collect::<String>()), bands)
    }

    /// Integer coefficients of det(xI − M), constant term first.
    pub fn characteristic_polynomial(&self) -> Vec<i64> {
        // Faddeev–LeVerrier; every division is exact
        let m = self.transition_matrix();
        let k = self.len();
        let mm: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
        let mut coeffs = vec![0i64; k + 1];
        coeffs[k] = 1;
        let mut n_mat: Vec<Vec<i64>> = (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
        for step in 1..=k {
            let am: Vec<Vec<i64>> =
                (0..k).map(|i| (0..k).map(|j| (0..k).map(|l| mm[i][l] * n_mat[l][j]).sum()).collect()).collect();
            let tr: i64 = (0..k).map(|i| am[i][i]).sum();
            let c = -tr / step as i64;
            coeffs[k - step] = c;
            n_mat = (0..k).map(|i| (0..k).map(|j| am[i][j] + if i == j { c } else { 0 }).collect()).collect();
        }
        coeffs
    }

    /// Eigenvalues of M. Zero roots are split off exactly (they are often
    /// defective); the rest come from the companion matrix.
    pub fn spectrum(&self) -> Vec<Complex<f64>> {
        let c = self.characteristic_polynomial();
        let zeros = c.iter().take_while(|&&x| x == 0).count();
        let rest = &c[zeros..];
        let d = rest.len() - 1;
        let mut out = vec![Complex::new(0.0, 0.0); zeros];
        if d > 0 {
            let comp = DMatrix::from_fn(d, d, |i, j| {
                if j == d - 1 {
                    -(rest[i] as f64)
                } else if i == j + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            out.extend(comp.complex_eigenvalues().iter().copied());
        }
        out
    }

    pub fn perron_root(&self) -> f64 {
        self.spectrum().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// tr(Mⁿ), the number of points of period dividing n in the shift.
    pub fn trace_power(&self, n: usize) -> BigUint {
        let m: Vec<Vec<BigUint>> =
            self.transition_matrix().into_iter().map(|r| r.into_iter().map(BigUint::from).collect()).collect();
        let k = m.len();
        let mut p: Vec<Vec<BigUint>> =
            (0..k).map(|i| (0..k).map(|j| BigUint::from(u8::from(i == j))).collect()).collect();
        for _ in 0..n {
            p = (0..k).map(|i| (0..k).map(|j| (0..k).map(|l| &p[i][l] * &m[l][j]).sum()).collect()).collect();
        }
        (0..k).map(|i| p[i][i].clone()).sum()
    }

    /// The symbol opposite along the branch line (A↔D, B↔C for four bands).
    pub fn mirror(&self, w: &OrbitWord) -> OrbitWord {
        let k = self.len();
        OrbitWord::canonical(w.letters.iter().map(|&l| k - 1 - l).collect())
    }

    pub fn spell(&self, w: &OrbitWord) -> String {
        w.letters.iter().map(|&l| self.bands[l].symbol).collect()
    }

    /// Parses a word spelled in band symbols; it must be admissible and primitive.
    pub fn parse_word(&self, s: &str) -> Result<OrbitWord, TemplateError> {
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| self.index_of(c).ok_or(TemplateError::UnknownSymbol(c)))
            .collect::<Result<Vec<_>, _>>()?;
        let w = OrbitWord::canonical(letters);
        self.check(&w)?;
        Ok(w)
    }

    pub fn check(&self, w: &OrbitWord) -> Result<(), TemplateError> {
        let n = w.len();
        if n == 0 {
            return Err(TemplateError::EmptyWord);
        }
        if let Some(&l) = w.letters.iter().find(|&&l| l >= self.len()) {
            return Err(TemplateError::Invalid(format!("letter index {l} out of range")));
        }
        for i in 0..n {
            let (a, b) = (w.letters[i], w.letters[(i + 1) % n]);
            if !self.allows(a, b) {
                return Err(TemplateError::Inadmissible {
                    word: self.spell(w),
                    from: self.bands[a].symbol,
                    to: self.bands[b].symbol,
                });
            }
        }
        if !w.is_primitive() {
            return Err(TemplateError::NotPrimitive(self.spell(w)));
        }
        Ok(())
    }
}

/// Two untwisted bands with full two-shift transitions.
pub fn lorenz_template() -> TemplateSpec {
    TemplateSpec::new(
        "lorenz",
        vec![
            Band { symbol: 'L', image: vec!['L', 'R'], twist: 1, layer: 0 },
            Band { symbol: 'R', image: vec!['L', 'R'], twist: 1, layer: 0 },
        ],
    )
    .expect("valid")
}

/// Figure-eight template in its positive form. Along the branch line the
/// bands read A, C, B, D: the Lorenz pair C, B sits in the middle and each
/// outer band feeds the inner band on the far side.
pub fn figure8_template() -> TemplateSpec {
    figure8_with_twist("fig8", 1)
}

/// The same band structure before the outer bands are untwisted; used for
/// orientability questions.
pub fn figure8_twisted_template() -> TemplateSpec {
    figure8_with_twist("fig8-twisted", -1)
}

fn figure8_with_twist(name: &str, outer: i8) -> TemplateSpec {
    let all = vec!['A', 'C', 'B', 'D'];
    TemplateSpec::new(
        name,
        vec![
            Band { symbol: 'A', image: vec!['B'], twist: outer, layer: 0 },
            Band { symbol: 'C', image: all.clone(), twist: 1, layer: 0 },
            Band { symbol: 'B', image: all, twist: 1, layer: 0 },
            Band { symbol: 'D', image: vec!['C'], twist: outer, layer: 0 },
        ],
    )
    .expect("valid")
}

/// Cyclic word over band indices, stored as its lexicographically least rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitWord {
    pub letters: Vec<usize>,
}

impl OrbitWord {
    pub fn canonical(letters: Vec<usize>) -> Self {
        let n = letters.len();
        let best = (0..n.max(1))
            .min_by(|&a, &b| (0..n).map(|k| letters[(a + k) % n]).cmp((0..n).map(|k| letters[(b + k) % n])))
            .unwrap_or(0);
        let mut letters = letters;
        letters.rotate_left(best.min(n.saturating_sub(1)));
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_primitive(&self) -> bool {
        let n = self.len();
        (1..n).filter(|d| n.is_multiple_of(*d)).all(|d| (0..n).any(|i| self.letters[i] != self.letters[(i + d) % n]))
    }

    pub fn rotations(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let n = self.len();
        (0..n).map(move |r| (0..n).map(|k| self.letters[(r + k) % n]).collect())
    }
}

fn is_lyndon(w: &[usize]) -> bool {
    let n = w.len();
    (1..n).all(|r| (0..n).map(|k| w[(r + k) % n]).cmp(w.iter().copied()) == Ordering::Greater)
}

/// All primitive admissible cyclic words of length 1..=n_max, canonical and
/// sorted by length, then lexicographically.
pub fn enumerate_words(t: &TemplateSpec, n_max: usize) -> Vec<OrbitWord> {
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(n_max);
    for first in 0..t.len() {
        path.push(first);
        collect_cycles(t, n_max, &mut path, &mut out);
        path.pop();
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.letters.cmp(&b.letters)));
    out
}

fn collect_cycles(t: &TemplateSpec, n_max: usize, path: &mut Vec<usize>, out: &mut Vec<OrbitWord>) {
    let last = *path.last().expect("nonempty");
    if t.allows(last, path[0]) && is_lyndon(path) {
        out.push(OrbitWord { letters: path.clone() });
    }
    if path.len() == n_max {
        return;
    }
    // a Lyndon word never has a letter smaller than its first
    for next in path[0]..t.len() {
        if t.allows(last, next) {
            path.push(next);
            collect_cycles(t, n_max, path, out);
            path.pop();
        }
    }
}

/// Branch-line order of the points of an orbit: `order[i]` is the position
/// of the point whose itinerary is the word shifted by `i`.
pub fn kneading_positions(t: &TemplateSpec, w: &OrbitWord) -> Vec<usize> {
    let n = w.len();
    let cmp = |i: usize, j: usize| {
        let mut flip = false;
        for d in 0..2 * n {
            let (a, b) = (w.letters[(i + d) % n], w.letters[(j + d) % n]);
            if a != b {
                let o = a.cmp(&b);
                return if flip { o.reverse() } else { o };
            }
            flip ^= t.bands[a].twist < 0;
        }
        Ordering::Equal
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| cmp(i, j));
    let mut pos = vec![0; n];
    for (p, &i) in idx.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

/// Braid traced by the orbit between two returns to the branch line. Each
/// strand keeps a constant depth: higher layers pass over lower ones, ties go
/// to the band further left, and inside a half-twisted band the strand
/// starting further left is on top.
pub fn word_to_braid(t: &TemplateSpec, w: &OrbitWord) -> Result<BraidWord, TemplateError> {
    t.check(w)?;
    let n = w.len();
    let pos = kneading_positions(t, w);
    let depth = |i: usize| {
        let band = w.letters[i];
        (t.bands[band].layer, Reverse(band), Reverse(pos[i]))
    };
    let end = |i: usize| pos[(i + 1) % n];
    let mut arr: Vec<usize> = vec![0; n];
    for i in 0..n {
        arr[pos[i]] = i;
    }
    let mut letters = Vec::new();
    loop {
        let mut swapped = false;
        for k in 0..n.saturating_sub(1) {
            let (a, b) = (arr[k], arr[k + 1]);
            if end(a) > end(b) {
                let gen = (k + 1) as i32;
                letters.push(if depth(a) > depth(b) { gen } else { -gen });
                arr.swap(k, k + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    Ok(BraidWord::new(n, letters)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KnotReport {
    pub word: String,
    pub braid: String,
    pub n: usize,
    pub c: usize,
    pub mu: usize,
    pub positive: bool,
    pub prime: bool,
    pub fibered: bool,
    /// From 2g = c − n + 2 − μ; present for prime positive knots.
    pub genus: Option<i64>,
    /// Genus of the Seifert surface built from the closure diagram.
    pub seifert_genus: i64,
    pub alexander: LaurentPoly,
    pub identification: KnotName,
}

pub fn knot_report(t: &TemplateSpec, w: &OrbitWord) -> Result<KnotReport, TemplateError> {
    let braid = word_to_braid(t, w)?;
    let mu = closure_components(&braid);
    let diagram = closure_diagram(&braid);
    let positive = braid.is_positive();
    let prime = is_prime_diagram(&reduce_nugatory(&diagram));
    let genus = if mu == 1 && prime && positive { Some(genus_positive(braid.len(), braid.n, mu)?) } else { None };
    let alexander = burau_alexander(&braid)?;
    Ok(KnotReport {
        word: t.spell(w),
        braid: braid.to_string(),
        n: braid.n,
        c: braid.len(),
        mu,
        positive,
        prime,
        fibered: positive,
        genus,
        seifert_genus: seifert_genus(&diagram),
        identification: identify_polynomial(&alexander),
        alexander,
    })
}

/// Reports for many words, computed in parallel, in input order.
pub fn knot_reports(t: &TemplateSpec, words: &[OrbitWord]) -> Result<Vec<KnotReport>, TemplateError> {
    words.par_iter().map(|w| knot_report(t, w)).collect()
}

pub fn reports_csv(reports: &[KnotReport]) -> String {
    let mut out = String::from("word,n,c,mu,genus,alexander,ident,positive,prime,fibered\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.word,
            r.n,
            r.c,
            r.mu,
            r.genus.map(|g| g.to_string()).unwrap_or_default(),
            r.alexander,
            r.identification,
            r.positive,
            r.prime,
            r.fibered
        ));
    }
    out
}

/// Whether every cycle of bands inside `subset` has an even number of
/// half-twisted bands.
pub fn orientable(t: &TemplateSpec, subset: &[char]) -> Result<bool, TemplateError> {
    let idx =
        subset.iter().map(|&c| t.index_of(c).ok_or(TemplateError::UnknownSymbol(c))).collect::<Result<Vec<_>, _>>()?;
    let inside = |j: usize| idx.contains(&j);
    let has_cycle = idx.iter().any(|&s| reaches(t, s, s, &inside));
    if !has_cycle {
        return Err(TemplateError::NoCycle(subset.iter().collect()));
    }
    // two-colour each strongly connected piece; an edge u→v forces label(v) = label(u)·twist(u)
    let mut label: Vec<Option<i8>> = vec![None; t.len()];
    for &s in &idx {
        if label[s].is_some() {
            continue;
        }
        label[s] = Some(1);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in (0..t.len()).filter(|&v| inside(v) && t.allows(u, v)) {
                if !(reaches(t, v, u, &inside)) {
                    continue; // edge not on any cycle
                }
                let want = label[u].expect("labelled") * t.bands[u].twist;
                match label[v] {
                    None => {
                        label[v] = Some(want);
                        queue.push_back(v);
                    }
                    Some(l) if l != want => return Ok(false),
                    Some(_) => {}
                }
            }
        }
    }
    Ok(true)
}

fn reaches(t: &TemplateSpec, from: usize, to: usize, inside: &dyn Fn(usize) -> bool) -> bool {
    let mut seen = vec![false; t.len()];
    let mut stack: Vec<usize> = (0..t.len()).filter(|&v| inside(v) && t.allows(from, v)).collect();
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if std::mem::replace(&mut seen[u], true) {
            continue;
        }
        stack.extend((0..t.len()).filter(|&v| inside(v) && t.allows(u, v)));
    }
    false
}

/// The given bands together with the bands of a shortest cycle through each.
pub fn cycle_closure(t: &TemplateSpec, subset: &[char]) -> Result<Vec<char>, TemplateError> {
    let mut keep = vec![false; t.len()];
    for &c in subset {
        let s = t.index_of(c).ok_or(TemplateError::UnknownSymbol(c))?;
        keep[s] = true;
        // breadth-first search back to s
        let mut prev = vec![usize::MAX; t.len()];
        let mut queue = VecDeque::new();
        for v in (0..t.len()).filter(|&v| t.allows(s, v)) {
            if prev[v] == usize::MAX {
                prev[v] = s;
                queue.push_back(v);
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            if u == s {
                found = true;
                break;
            }
            for v in (0..t.len()).filter(|&v| t.allows(u, v)) {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if !found {
            return Err(TemplateError::NoCycle(c.to_string()));
        }
        let mut u = prev[s];
        while u != s {
            keep[u] = true;
            u = prev[u];
        }
    }
    Ok(t.bands.iter().enumerate().filter(|(i, _)| keep[*i]).map(|(_, b)| b.symbol).collect())
}

/// Fixed points of the n-th power of the cat map (x, y) ↦ (x + y, x + 2y) mod 1,
/// i.e. |det(Aⁿ − I)|.
pub fn cat_map_count(n: u32) -> BigUint {
    let a = [[BigInt::from(1), BigInt::from(1)], [BigInt::from(1), BigInt::from(2)]];
    let mut p = [[BigInt::from(1), BigInt::from(0)], [BigInt::from(0), BigInt::from(1)]];
    for _ in 0..n {
        p = [
            [&p[0][0] * &a[0][0] + &p[0][1] * &a[1][0], &p[0][0] * &a[0][1] + &p[0][1] * &a[1][1]],
            [&p[1][0] * &a[0][0] + &p[1][1] * &a[1][0], &p[1][0] * &a[0][1] + &p[1][1] * &a[1][1]],
        ];
    }
    let one = BigInt::from(1);
    let det: BigInt = (&p[0][0] - &one) * (&p[1][1] - &one) - &p[0][1] * &p[1][0];
    det.abs().to_biguint().expect("nonnegative")
}

impl fmt::Display for TemplateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.name)?;
        for (i, b) in self.bands.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}→{}", b.symbol, b.image.iter().collect::<String>())?;
            if b.twist < 0 {
                write!(f, "~")?;
            }
        }
        write!(f, ")")
    }
}
