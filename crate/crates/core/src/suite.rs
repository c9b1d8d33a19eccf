//! End-to-end checks of the main claims, shared by `tpoint-knots --paper-suite`
//! and the acceptance test. Each check reports pass/fail with a one-line detail;
//! nothing here panics on a failed claim.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use serde::Serialize;

use crate::braids::{burau_alexander, closure_diagram, genus_positive};
use crate::classify::{classify_knot, default_view, Classification};
use crate::heteroclinic::{find_tpoint, trace_heteroclinic_knot, SearchConfig, TPoint};
use crate::knots::{alexander, LaurentPoly};
use crate::plmodel::{figure8_model, QSqrt3};
use crate::templates::{
    cat_map_count, enumerate_words, figure8_template, knot_reports, lorenz_template, word_to_braid, KnotReport,
    TemplateSpec,
};

pub const BETA: f64 = 8.0 / 3.0;
pub const SECOND_SEED: (f64, f64) = (85.0, 11.8);
pub const SECOND_PUBLISHED: (f64, f64) = (85.0292, 11.8279);
pub const FIRST_SEED: (f64, f64) = (31.0, 10.2);
pub const FAN_COUNT: usize = 10;
pub const FAN_SPREAD: f64 = 0.35;
pub const FAN_SEED: u64 = 7;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {}  {} ({}; {:.1} s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

fn timed(id: u8, title: &'static str, f: impl FnOnce() -> (bool, String)) -> CriterionResult {
    let t0 = Instant::now();
    let (pass, detail) = f();
    CriterionResult { id, title, pass, detail, seconds: t0.elapsed().as_secs_f64() }
}

pub fn tpoint_recovery(tp: &Result<TPoint, String>) -> CriterionResult {
    timed(1, "T-point recovery", || match tp {
        Ok(tp) => {
            let dr = (tp.r - SECOND_PUBLISHED.0).abs();
            let ds = (tp.sigma - SECOND_PUBLISHED.1).abs();
            (dr < 0.05 && ds < 0.05, format!("r = {:.6}, sigma = {:.6}, gap {:.1e}", tp.r, tp.sigma, tp.gap_norm))
        }
        Err(e) => (false, e.clone()),
    })
}

fn classify_at(tp: &TPoint, cfg: &SearchConfig) -> Result<Classification, String> {
    let knot = trace_heteroclinic_knot(&tp.params(), &tp.matching, cfg).map_err(|e| e.to_string())?;
    classify_knot(&knot, default_view(), FAN_COUNT, FAN_SPREAD, FAN_SEED).map_err(|e| e.to_string())
}

/// Classifications at the second and first T-points, in that order.
pub fn heteroclinic_classes(
    second: &Result<TPoint, String>,
    cfg: &SearchConfig,
) -> Vec<Result<Classification, String>> {
    let second = second.as_ref().map_err(Clone::clone).and_then(|tp| classify_at(tp, cfg));
    let first = find_tpoint(FIRST_SEED, BETA, cfg).map_err(|e| e.to_string()).and_then(|tp| classify_at(&tp, cfg));
    vec![second, first]
}

pub fn heteroclinic_classification(classes: &[Result<Classification, String>]) -> CriterionResult {
    timed(2, "heteroclinic classification", || {
        let want =
            [(LaurentPoly::from_i64(0, &[1, -3, 1]), "second"), (LaurentPoly::from_i64(0, &[1, -1, 1]), "first")];
        let mut pass = true;
        let mut parts = Vec::new();
        for (c, (poly, label)) in classes.iter().zip(want) {
            match c {
                Ok(c) => {
                    let ok = c.alexander == poly && c.stable && c.views.len() == FAN_COUNT;
                    pass &= ok;
                    parts.push(format!(
                        "{label}: {} in {}/{} views",
                        c.alexander,
                        c.views.iter().filter(|v| v.alexander == poly).count(),
                        c.views.len()
                    ));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("{label}: {e}"));
                }
            }
        }
        (pass, parts.join("; "))
    })
}

/// Reports for every primitive word up to `n_max`, computed once and shared.
pub fn template_reports(t: &TemplateSpec, n_max: usize) -> Result<Vec<KnotReport>, String> {
    knot_reports(t, &enumerate_words(t, n_max)).map_err(|e| e.to_string())
}

pub fn main_theorem(reports: &Result<Vec<KnotReport>, String>) -> CriterionResult {
    timed(3, "positive, prime and fibered on the figure-eight template", || match reports {
        Ok(rs) => {
            let knots: Vec<&KnotReport> = rs.iter().filter(|r| r.mu == 1).collect();
            let bad: Vec<&str> =
                knots.iter().filter(|r| !(r.positive && r.prime && r.fibered)).map(|r| r.word.as_str()).collect();
            let detail = format!("{} knots of {} words, {} failing{}", knots.len(), rs.len(), bad.len(), sample(&bad));
            (bad.is_empty() && !knots.is_empty(), detail)
        }
        Err(e) => (false, e.clone()),
    })
}

fn sample(words: &[&str]) -> String {
    if words.is_empty() {
        String::new()
    } else {
        format!(", e.g. {}", words.iter().take(3).copied().collect::<Vec<_>>().join(" "))
    }
}

pub fn genus_cross_check(reports: &Result<Vec<KnotReport>, String>) -> CriterionResult {
    timed(4, "braid genus formula against Seifert's algorithm", || match reports {
        Ok(rs) => {
            let mut checked = 0;
            let mut bad = Vec::new();
            for r in rs.iter().filter(|r| r.mu == 1) {
                checked += 1;
                if genus_positive(r.c, r.n, r.mu).ok() != Some(r.seifert_genus) {
                    bad.push(r.word.as_str());
                }
            }
            (bad.is_empty() && checked > 0, format!("{checked} knots, {} mismatches{}", bad.len(), sample(&bad)))
        }
        Err(e) => (false, e.clone()),
    })
}

/// Renames the letters of a word on the inner pair to the Lorenz alphabet by
/// branch-line position.
fn to_lorenz_alphabet(inner: &TemplateSpec, lorenz: &TemplateSpec, word: &str) -> String {
    word.chars().map(|c| lorenz.bands[inner.index_of(c).expect("inner symbol")].symbol).collect()
}

pub fn subtemplate(n_max: usize) -> CriterionResult {
    timed(5, "Lorenz subtemplate", || {
        let lorenz = lorenz_template();
        let inner = match figure8_template().restrict(&['B', 'C']) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        let (a, b) = match (template_reports(&lorenz, n_max), template_reports(&inner, n_max)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return (false, e),
        };
        let mut b: Vec<KnotReport> = b
            .into_iter()
            .map(|mut r| {
                r.word = to_lorenz_alphabet(&inner, &lorenz, &r.word);
                r
            })
            .collect();
        let mut a = a;
        a.sort_by(|x, y| x.word.cmp(&y.word));
        b.sort_by(|x, y| x.word.cmp(&y.word));
        let agree = a == b;
        let trefoil = a
            .iter()
            .filter(|r| r.word.len() <= 6 && r.alexander == LaurentPoly::from_i64(0, &[1, -1, 1]))
            .min_by_key(|r| (r.word.len(), r.word.clone()))
            .map(|r| r.word.clone());
        let detail = format!(
            "{} reports {}, shortest trefoil {}",
            a.len(),
            if agree { "identical" } else { "differ" },
            trefoil.as_deref().unwrap_or("none")
        );
        (agree && trefoil.is_some(), detail)
    })
}

pub fn counting_and_spectrum(n_max: usize) -> CriterionResult {
    timed(6, "period counts and Perron root", || {
        let mut pass = true;
        for t in [lorenz_template(), figure8_template()] {
            let words = enumerate_words(&t, n_max);
            for n in 1..=n_max {
                let points: usize =
                    (1..=n).filter(|d| n % d == 0).map(|d| d * words.iter().filter(|w| w.len() == d).count()).sum();
                pass &= BigUint::from(points) == t.trace_power(n);
            }
        }
        let perron = figure8_template().perron_root();
        let cone = figure8_model().cone_report();
        let lambda = 1.0 + 3f64.sqrt();
        pass &= (perron - lambda).abs() < 1e-9
            && cone.expansion == QSqrt3::lambda()
            && (perron - cone.expansion.to_f64()).abs() < 1e-9;
        (pass, format!("n <= {n_max} on both templates, Perron root {perron:.12}, model expansion {}", cone.expansion))
    })
}

pub fn pl_model(n_max: usize) -> CriterionResult {
    timed(7, "piecewise-linear model", || {
        let m = figure8_model();
        let cone = m.cone_report();
        let cone_ok = cone.pass && cone.expansion == QSqrt3::lambda() && cone.contraction == QSqrt3::lambda();
        let l = QSqrt3::lambda();
        let poly_ok = l.clone() * l.clone() == QSqrt3::int(2) * l + QSqrt3::int(2);
        match m.orbit_reports(n_max) {
            Ok(reports) => {
                let bad: Vec<&str> = reports.iter().filter(|r| !r.round_trip).map(|r| r.word.as_str()).collect();
                let detail = format!(
                    "cone check {}, gain {}, {} orbits with {} round-trip failures{}, lambda^2 = 2 lambda + 2 {}",
                    if cone.pass { "passes" } else { "fails" },
                    cone.expansion,
                    reports.len(),
                    bad.len(),
                    sample(&bad),
                    if poly_ok { "holds" } else { "fails" }
                );
                (cone_ok && poly_ok && bad.is_empty(), detail)
            }
            Err(e) => (false, e.to_string()),
        }
    })
}

/// `|2 − L(2n)|` with Lucas numbers, since det(Aⁿ − I) = 2 − tr Aⁿ and
/// tr Aⁿ = φ²ⁿ + φ⁻²ⁿ for the cat map.
pub fn cat_map_oracle(n: u32) -> BigUint {
    let (mut a, mut b) = (BigInt::from(2), BigInt::from(1));
    for _ in 0..2 * n {
        let c = &a + &b;
        a = b;
        b = c;
    }
    (BigInt::from(2) - a).magnitude().clone()
}

pub fn cat_map(n_max: u32) -> CriterionResult {
    timed(8, "cat map periodic points", || {
        let values: Vec<BigUint> = (1..=n_max).map(cat_map_count).collect();
        let pass = values.iter().zip(1..=n_max).all(|(v, n)| *v == cat_map_oracle(n));
        let shown: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        (pass, shown.join(", "))
    })
}

/// Alexander polynomial sanity checks shared by every computed knot.
pub fn alexander_sane(p: &LaurentPoly) -> bool {
    let at_one = p.eval(1);
    let at_minus_one = p.eval(-1);
    p.is_symmetric() && (at_one == BigInt::from(1) || at_one == BigInt::from(-1)) && at_minus_one.bit(0)
}

pub fn oracle_equivalence(
    max_letters: usize,
    word_len: usize,
    extra: &[&KnotReport],
    heteroclinic: &[Result<Classification, String>],
) -> CriterionResult {
    timed(9, "diagram and Burau oracles agree", || {
        let mut compared = 0;
        let mut mismatched = Vec::new();
        let mut insane = Vec::new();
        for t in [lorenz_template(), figure8_template()] {
            for w in enumerate_words(&t, word_len) {
                let Ok(b) = word_to_braid(&t, &w) else { continue };
                if b.len() > max_letters {
                    continue;
                }
                let Ok(burau) = burau_alexander(&b) else { continue };
                compared += 1;
                match alexander(&closure_diagram(&b)) {
                    Ok(d) if d == burau => {}
                    _ => mismatched.push(t.spell(&w)),
                }
                if !alexander_sane(&burau) {
                    insane.push(t.spell(&w));
                }
            }
        }
        let mut checked = compared;
        for r in extra.iter().filter(|r| r.mu == 1) {
            checked += 1;
            if !alexander_sane(&r.alexander) {
                insane.push(r.word.clone());
            }
        }
        for c in heteroclinic.iter().flatten() {
            for v in &c.views {
                checked += 1;
                if !alexander_sane(&v.alexander) {
                    insane.push(format!("view of r = {:.4}", c.r));
                }
            }
        }
        let detail = format!(
            "{compared} braids compared, {} mismatches; symmetry and values at ±1 on {checked} polynomials, {} failures",
            mismatched.len(),
            insane.len()
        );
        (compared > 0 && mismatched.is_empty() && insane.is_empty(), detail)
    })
}

/// Runs all nine checks. `progress` sees each result as soon as it is ready.
pub fn run_suite(mut progress: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let cfg = SearchConfig::default();
    let mut out = Vec::new();
    // times include the shared work done just before each check
    let mut clock = Instant::now();
    let mut emit = |mut r: CriterionResult, out: &mut Vec<CriterionResult>| {
        r.seconds = clock.elapsed().as_secs_f64();
        progress(&r);
        out.push(r);
        clock = Instant::now();
    };
    let second = find_tpoint(SECOND_SEED, BETA, &cfg).map_err(|e| e.to_string());
    emit(tpoint_recovery(&second), &mut out);
    let classes = heteroclinic_classes(&second, &cfg);
    emit(heteroclinic_classification(&classes), &mut out);
    let reports = template_reports(&figure8_template(), 10);
    emit(main_theorem(&reports), &mut out);
    emit(genus_cross_check(&reports), &mut out);
    emit(subtemplate(8), &mut out);
    emit(counting_and_spectrum(12), &mut out);
    emit(pl_model(8), &mut out);
    emit(cat_map(10), &mut out);
    let extra: Vec<&KnotReport> = reports.iter().flatten().collect();
    emit(oracle_equivalence(8, 8, &extra, &classes), &mut out);
    out
}
