//! Braid words, their closures, and the reduced Burau representation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knots::{determinant, Crossing, LaurentPoly, Passage, PlanarDiagram, Point2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BraidError {
    #[error("a braid needs at least one strand")]
    NoStrands,
    #[error("generator index {index} out of range for {n} strands")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("cannot parse braid letter {0:?}")]
    Parse(String),
    #[error("closure has {0} components, expected a knot")]
    MultiComponent(usize),
    #[error("c − n + 2 − μ = {value} is not a nonnegative even number (c={c}, n={n}, μ={mu})")]
    InvalidGenus { c: usize, n: usize, mu: usize, value: i64 },
}

/// Word in the braid group on `n` strands. Letter `±i` is σᵢ^±1, 1 ≤ i < n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    pub n: usize,
    pub letters: Vec<i32>,
}

impl BraidWord {
    pub fn new(n: usize, letters: Vec<i32>) -> Result<Self, BraidError> {
        if n == 0 {
            return Err(BraidError::NoStrands);
        }
        for &l in &letters {
            let i = l.unsigned_abs() as usize;
            if i == 0 || i >= n {
                return Err(BraidError::IndexOutOfRange { index: i, n });
            }
        }
        Ok(Self { n, letters })
    }

    /// Parses `"s1 s2 -s1"` on `n` strands.
    pub fn parse(s: &str, n: usize) -> Result<Self, BraidError> {
        let letters = s
            .split_whitespace()
            .map(|tok| {
                let (neg, rest) = match tok.strip_prefix('-') {
                    Some(r) => (true, r),
                    None => (false, tok),
                };
                let idx: i32 = rest
                    .strip_prefix('s')
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| BraidError::Parse(tok.to_string()))?;
                Ok(if neg { -idx } else { idx })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, letters)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|&l| l > 0)
    }

    /// The same word on one more strand with σₙ appended.
    pub fn stabilized(&self) -> Self {
        let mut letters = self.letters.clone();
        letters.push(self.n as i32);
        Self { n: self.n + 1, letters }
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.letters.iter().map(|&l| if l > 0 { format!("s{l}") } else { format!("-s{}", -l) }).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for BraidWord {
    type Err = BraidError;
    /// Strand count is the smallest that fits the letters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let probe = Self::parse(s, usize::MAX)?;
        let n = probe.letters.iter().map(|l| l.unsigned_abs() as usize + 1).max().unwrap_or(1);
        Self::new(n, probe.letters)
    }
}

/// `perm[p]` is the final position (0-based) of the strand starting at position `p`.
pub fn permutation(b: &BraidWord) -> Vec<usize> {
    let mut at: Vec<usize> = (0..b.n).collect(); // at[position] = strand
    for &l in &b.letters {
        let i = l.unsigned_abs() as usize - 1;
        at.swap(i, i + 1);
    }
    let mut perm = vec![0; b.n];
    for (pos, &strand) in at.iter().enumerate() {
        perm[strand] = pos;
    }
    perm
}

pub fn closure_components(b: &BraidWord) -> usize {
    let perm = permutation(b);
    let mut seen = vec![false; b.n];
    let mut count = 0;
    for s in 0..b.n {
        if !seen[s] {
            count += 1;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = perm[x];
            }
        }
    }
    count
}

/// g = (c − n + 2 − μ) / 2 for the closure of a positive braid.
pub fn genus_positive(c: usize, n: usize, mu: usize) -> Result<i64, BraidError> {
    let value = c as i64 - n as i64 + 2 - mu as i64;
    if value < 0 || value % 2 != 0 {
        return Err(BraidError::InvalidGenus { c, n, mu, value });
    }
    Ok(value / 2)
}

/// Reduced Burau matrix of one generator (or its inverse), size (n−1)².
pub fn burau_generator(n: usize, letter: i32) -> Vec<Vec<LaurentPoly>> {
    let m = n - 1;
    let mut out: Vec<Vec<LaurentPoly>> =
        (0..m).map(|r| (0..m).map(|c| LaurentPoly::constant(i64::from(r == c))).collect()).collect();
    let i = letter.unsigned_abs() as usize - 1; // 0-based row of the −t entry
    let block: [[LaurentPoly; 3]; 3] = if letter > 0 {
        [
            [LaurentPoly::one(), LaurentPoly::t(), LaurentPoly::zero()],
            [LaurentPoly::zero(), LaurentPoly::monomial(-1, 1), LaurentPoly::zero()],
            [LaurentPoly::zero(), LaurentPoly::one(), LaurentPoly::one()],
        ]
    } else {
        [
            [LaurentPoly::one(), LaurentPoly::one(), LaurentPoly::zero()],
            [LaurentPoly::zero(), LaurentPoly::monomial(-1, -1), LaurentPoly::zero()],
            [LaurentPoly::zero(), LaurentPoly::monomial(1, -1), LaurentPoly::one()],
        ]
    };
    for (br, row) in block.iter().enumerate() {
        for (bc, v) in row.iter().enumerate() {
            let (r, c) = (i as isize + br as isize - 1, i as isize + bc as isize - 1);
            if (0..m as isize).contains(&r) && (0..m as isize).contains(&c) {
                out[r as usize][c as usize] = v.clone();
            }
        }
    }
    out
}

fn mat_mul(a: &[Vec<LaurentPoly>], b: &[Vec<LaurentPoly>]) -> Vec<Vec<LaurentPoly>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(LaurentPoly::zero(), |acc, k| {
                        if a[i][k].is_zero() || b[k][j].is_zero() {
                            acc
                        } else {
                            &acc + &(&a[i][k] * &b[k][j])
                        }
                    })
                })
                .collect()
        })
        .collect()
}

pub fn burau_matrix(b: &BraidWord) -> Vec<Vec<LaurentPoly>> {
    let m = b.n.saturating_sub(1);
    let mut acc: Vec<Vec<LaurentPoly>> =
        (0..m).map(|r| (0..m).map(|c| LaurentPoly::constant(i64::from(r == c))).collect()).collect();
    for &l in &b.letters {
        acc = mat_mul(&acc, &burau_generator(b.n, l));
    }
    acc
}

/// Δ(t) ≐ det(I − ρ(b)) (1 − t) / (1 − tⁿ), normalized.
pub fn burau_alexander(b: &BraidWord) -> Result<LaurentPoly, BraidError> {
    let mu = closure_components(b);
    if mu != 1 {
        return Err(BraidError::MultiComponent(mu));
    }
    if b.n == 1 {
        return Ok(LaurentPoly::one());
    }
    let rho = burau_matrix(b);
    let m = b.n - 1;
    let diff: Vec<Vec<LaurentPoly>> =
        (0..m).map(|r| (0..m).map(|c| &LaurentPoly::constant(i64::from(r == c)) - &rho[r][c]).collect()).collect();
    let det = determinant(diff);
    let q = det.div_exact(&LaurentPoly::geometric(b.n)).expect("1 + t + … + t^(n−1) divides det(I − ρ)");
    Ok(q.normalized())
}

/// Standard closure drawn with strands going up; crossing k sits at height
/// k + ½ and the return loops nest to the right of the braid.
pub fn closure_diagram(b: &BraidWord) -> PlanarDiagram {
    let n = b.n;
    let len = b.letters.len();
    let perm = permutation(b);
    let mut comp_of_start = vec![usize::MAX; n];
    let mut components: Vec<Vec<Point2>> = Vec::new();
    // (letter index, strand position before the letter) → (component, param)
    let mut hits: Vec<[Option<Passage>; 2]> = vec![[None, None]; len];

    for start in 0..n {
        if comp_of_start[start] != usize::MAX {
            continue;
        }
        let ci = components.len();
        let mut pts: Vec<Point2> = Vec::new();
        let mut p = start;
        loop {
            comp_of_start[p] = ci;
            let mut pos = p;
            for (k, &l) in b.letters.iter().enumerate() {
                pts.push([pos as f64 + 1.0, k as f64]);
                let i = l.unsigned_abs() as usize - 1;
                if pos == i || pos == i + 1 {
                    let moving_right = pos == i;
                    let param = (pts.len() - 1) as f64 + 0.5;
                    hits[k][usize::from(!moving_right)] = Some(Passage { component: ci, param });
                    pos = if moving_right { i + 1 } else { i };
                }
            }
            // return loop from the top at `pos` down to the bottom at `pos`
            let off = (n - pos) as f64;
            let x = pos as f64 + 1.0;
            let top = len as f64;
            pts.push([x, top]);
            pts.push([x, top + off]);
            pts.push([n as f64 + off, top + off]);
            pts.push([n as f64 + off, -off]);
            pts.push([x, -off]);
            p = perm[p];
            debug_assert_eq!(p, pos);
            if p == start {
                break;
            }
        }
        components.push(pts);
    }

    let crossings = b
        .letters
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let i = l.unsigned_abs() as usize - 1;
            let right = hits[k][0].expect("left strand moves right");
            let left = hits[k][1].expect("right strand moves left");
            // σᵢ: the strand moving rightwards is over
            let (over, under) = if l > 0 { (right, left) } else { (left, right) };
            Crossing { over, under, sign: if l > 0 { 1 } else { -1 }, position: [i as f64 + 1.5, k as f64 + 0.5] }
        })
        .collect();
    PlanarDiagram { components, crossings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knots::{alexander, gauss_code, is_positive, is_prime_diagram, seifert_circles, seifert_genus};
    use proptest::prelude::*;

    fn w(n: usize, l: &[i32]) -> BraidWord {
        BraidWord::new(n, l.to_vec()).unwrap()
    }

    fn poly(c: &[i64]) -> LaurentPoly {
        LaurentPoly::from_i64(0, c)
    }

    #[test]
    fn parsing_round_trip() {
        let b = BraidWord::parse("s1 s2 -s1", 3).unwrap();
        assert_eq!(b.letters, vec![1, 2, -1]);
        assert_eq!(b.to_string(), "s1 s2 -s1");
        assert_eq!("s3 -s1".parse::<BraidWord>().unwrap().n, 4);
        assert!(BraidWord::parse("s3", 3).is_err());
        assert!(BraidWord::parse("x1", 3).is_err());
        assert!(BraidWord::new(0, vec![]).is_err());
    }

    #[test]
    fn permutations() {
        assert_eq!(permutation(&w(3, &[])), vec![0, 1, 2]);
        assert_eq!(permutation(&w(2, &[1, 1, 1])), vec![1, 0]);
        // σ1σ2: strand 0 → 1 → 2, strand 1 → 0, strand 2 → 1
        let p = permutation(&w(3, &[1, 2]));
        assert_eq!(p, vec![2, 0, 1]);
        assert_eq!(closure_components(&w(3, &[1, 2])), 1);
    }

    #[test]
    fn component_counts() {
        assert_eq!(closure_components(&w(3, &[])), 3);
        assert_eq!(closure_components(&w(2, &[1, 1, 1])), 1);
        assert_eq!(closure_components(&w(2, &[1, 1])), 2);
    }

    #[test]
    fn genus_formula() {
        assert_eq!(genus_positive(3, 2, 1), Ok(1));
        assert_eq!(genus_positive(0, 1, 1), Ok(0));
        assert_eq!(genus_positive(2, 2, 2), Ok(0));
        assert!(genus_positive(2, 2, 1).is_err());
        assert!(genus_positive(0, 3, 1).is_err());
    }

    #[test]
    fn burau_generators_are_invertible() {
        for n in 2..6 {
            for i in 1..n as i32 {
                let prod = mat_mul(&burau_generator(n, i), &burau_generator(n, -i));
                for (r, row) in prod.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        assert_eq!(*v, LaurentPoly::constant(i64::from(r == c)), "n={n} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn burau_satisfies_braid_relations() {
        let n = 4;
        let m = |l: &[i32]| burau_matrix(&w(n, l));
        assert_eq!(m(&[1, 2, 1]), m(&[2, 1, 2]));
        assert_eq!(m(&[2, 3, 2]), m(&[3, 2, 3]));
        assert_eq!(m(&[1, 3]), m(&[3, 1]));
    }

    #[test]
    fn burau_alexander_examples() {
        assert_eq!(burau_alexander(&w(2, &[1, 1, 1])).unwrap(), poly(&[1, -1, 1]));
        assert_eq!(burau_alexander(&w(3, &[1, -2, 1, -2])).unwrap(), poly(&[1, -3, 1]));
        assert_eq!(burau_alexander(&w(2, &[1])).unwrap(), poly(&[1]));
        assert_eq!(burau_alexander(&w(1, &[])).unwrap(), poly(&[1]));
        assert!(matches!(burau_alexander(&w(2, &[1, 1])), Err(BraidError::MultiComponent(2))));
    }

    #[test]
    fn closure_examples() {
        let d = closure_diagram(&w(1, &[]));
        assert_eq!(d.crossing_count(), 0);
        assert_eq!(d.component_count(), 1);

        let d = closure_diagram(&w(2, &[1, 1, 1]));
        assert_eq!(d.crossing_count(), 3);
        assert!(is_positive(&d));
        assert_eq!(alexander(&d).unwrap(), poly(&[1, -1, 1]));
        assert_eq!(seifert_circles(&d), 2);

        let b = w(3, &[1, -2, 1, -2]);
        let d = closure_diagram(&b);
        assert!(!is_positive(&d));
        let signs: Vec<i8> = d.signs().collect();
        assert_eq!(signs, vec![1, -1, 1, -1]);
        assert_eq!(alexander(&d).unwrap(), poly(&[1, -3, 1]));
    }

    #[test]
    fn granny_knot_diagram_is_composite() {
        let d = closure_diagram(&w(3, &[1, 1, 1, 2, 2, 2]));
        assert!(!is_prime_diagram(&d));
        assert_eq!(alexander(&d).unwrap(), poly(&[1, -2, 3, -2, 1]));
        assert!(is_prime_diagram(&closure_diagram(&w(2, &[1, 1, 1]))));
    }

    #[test]
    fn figure_eight_gauss_code_matches_hand_diagram() {
        let from_braid = gauss_code(&closure_diagram(&w(3, &[1, -2, 1, -2]))).unwrap();
        let hand = gauss_code(
            &PlanarDiagram::from_gauss(&[
                (0, true, -1),
                (1, false, -1),
                (2, true, 1),
                (3, false, 1),
                (1, true, -1),
                (0, false, -1),
                (3, true, 1),
                (2, false, 1),
            ])
            .unwrap(),
        )
        .unwrap();
        assert_eq!(from_braid.len(), hand.len());
        assert_eq!(alexander(&from_braid.to_diagram().unwrap()), alexander(&hand.to_diagram().unwrap()));
    }

    fn positive_knot_braid() -> impl Strategy<Value = BraidWord> {
        (2usize..5)
            .prop_flat_map(|n| (Just(n), prop::collection::vec(1..n as i32, 0..=10)))
            .prop_map(|(n, l)| BraidWord { n, letters: l })
            .prop_filter("single component", |b| closure_components(b) == 1)
    }

    fn mixed_knot_braid() -> impl Strategy<Value = BraidWord> {
        (2usize..5)
            .prop_flat_map(|n| (Just(n), prop::collection::vec((1..n as i32, any::<bool>()), 0..=8)))
            .prop_map(|(n, l)| BraidWord { n, letters: l.into_iter().map(|(i, s)| if s { i } else { -i }).collect() })
            .prop_filter("single component", |b| closure_components(b) == 1)
    }

    proptest! {
        #[test]
        fn diagram_and_burau_agree_on_positive_braids(b in positive_knot_braid()) {
            let d = closure_diagram(&b);
            prop_assert!(is_positive(&d));
            prop_assert_eq!(alexander(&d).unwrap(), burau_alexander(&b).unwrap());
        }

        #[test]
        fn diagram_and_burau_agree_on_mixed_braids(b in mixed_knot_braid()) {
            let d = closure_diagram(&b);
            let signs: Vec<i8> = d.signs().collect();
            let letters: Vec<i8> = b.letters.iter().map(|&l| l.signum() as i8).collect();
            prop_assert_eq!(signs, letters);
            prop_assert_eq!(alexander(&d).unwrap(), burau_alexander(&b).unwrap());
        }

        #[test]
        fn seifert_genus_matches_formula(b in positive_knot_braid()) {
            let d = closure_diagram(&b);
            prop_assert_eq!(seifert_circles(&d), b.n);
            let g = genus_positive(b.len(), b.n, 1).unwrap();
            prop_assert_eq!(seifert_genus(&d), g);
            // positive braid closures are fibered: the Alexander degree is 2g
            prop_assert_eq!(burau_alexander(&b).unwrap().span(), 2 * g);
        }

        #[test]
        fn markov_stabilization_keeps_alexander(b in mixed_knot_braid()) {
            prop_assert_eq!(burau_alexander(&b.stabilized()).unwrap(), burau_alexander(&b).unwrap());
            prop_assert_eq!(alexander(&closure_diagram(&b.stabilized())).unwrap(), alexander(&closure_diagram(&b)).unwrap());
        }
    }
}
