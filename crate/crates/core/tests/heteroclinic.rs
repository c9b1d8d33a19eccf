use std::sync::OnceLock;

use nalgebra::Vector3;
use tpoint_core::dynamics::{symmetry, vector_field, ParamSet, State3};
use tpoint_core::heteroclinic::*;
use tpoint_core::knots::{alexander, direction_fan, identify, project, KnotName, LaurentPoly};

const BETA: f64 = 8.0 / 3.0;

fn cfg() -> SearchConfig {
    SearchConfig::default()
}

fn second_tpoint() -> &'static (TPoint, HeteroclinicKnot) {
    static CELL: OnceLock<(TPoint, HeteroclinicKnot)> = OnceLock::new();
    CELL.get_or_init(|| {
        let tp = find_tpoint((85.0, 11.8), BETA, &cfg()).expect("second T-point");
        let knot = trace_heteroclinic_knot(&tp.params(), &tp.matching, &cfg()).expect("knot");
        (tp, knot)
    })
}

fn first_tpoint() -> &'static (TPoint, HeteroclinicKnot) {
    static CELL: OnceLock<(TPoint, HeteroclinicKnot)> = OnceLock::new();
    CELL.get_or_init(|| {
        let tp = find_tpoint((31.0, 10.2), BETA, &cfg()).expect("first T-point");
        let knot = trace_heteroclinic_knot(&tp.params(), &tp.matching, &cfg()).expect("knot");
        (tp, knot)
    })
}

// at classical parameters the separatrix stays about 7 away from p⁺
fn classical_matching() -> Matching {
    Matching { target: Side::Plus, branch: 1, radius: 10.0 }
}

#[test]
fn unstable_separatrix_leaves_the_origin() {
    let p = ParamSet::classical();
    let traj = unstable_separatrix(&p, Side::Plus, 1e-6, 40.0, &classical_matching()).unwrap();
    let z: Vec<f64> = traj.polyline(0.05).iter().map(|s| s.z).collect();
    let first_max = z.windows(3).find(|w| w[1] >= w[0] && w[1] > w[2]).map(|w| w[1]).unwrap();
    assert!(first_max > 1.0, "first z maximum {first_max}");
    assert!(traj.first().x > 0.0);
}

#[test]
fn unstable_separatrices_are_mirror_images() {
    let p = ParamSet::classical();
    let m = classical_matching();
    let plus = unstable_separatrix(&p, Side::Plus, 1e-6, 30.0, &m).unwrap();
    let minus = unstable_separatrix(&p, Side::Minus, 1e-6, 30.0, &m).unwrap();
    let worst =
        (0..=600).map(|k| k as f64 * 0.05).map(|t| (minus.at(t) - symmetry(&plus.at(t))).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-7, "max deviation {worst:e}");
}

#[test]
fn halving_eps_barely_moves_the_section_hit() {
    let p = ParamSet::classical();
    let m = classical_matching();
    let eps = 1e-6;
    let a = unstable_separatrix(&p, Side::Plus, eps, 40.0, &m).unwrap().crossings[0].state;
    let b = unstable_separatrix(&p, Side::Plus, eps / 2.0, 40.0, &m).unwrap().crossings[0].state;
    assert!((a - b).norm() < 10.0 * eps, "moved {:e}", (a - b).norm());
}

#[test]
fn eps_outside_range_is_rejected() {
    let p = ParamSet::classical();
    for eps in [1e-9, 1e-3] {
        assert!(matches!(
            unstable_separatrix(&p, Side::Plus, eps, 40.0, &classical_matching()),
            Err(HeteroclinicError::Precondition(_))
        ));
    }
}

#[test]
fn stable_separatrices_are_mirror_images() {
    let (tp, _) = second_tpoint();
    let p = tp.params();
    let eps = cfg().eps(&p);
    let plus = stable_separatrix_wing(&p, Side::Plus, eps, 40.0, &tp.matching).unwrap();
    let minus = stable_separatrix_wing(&p, Side::Minus, eps, 40.0, &tp.matching).unwrap();
    assert!((plus.t_end() - minus.t_end()).abs() < 1e-9);
    let worst = (0..=200)
        .map(|k| plus.t_end() * k as f64 / 200.0)
        .map(|t| (minus.at(t) - symmetry(&plus.at(t))).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-7, "max deviation {worst:e}");
}

#[test]
fn classical_parameters_are_not_a_tpoint() {
    let p = ParamSet::classical();
    let m = select_matching(&p, &cfg()).unwrap();
    let g = gap(&p, Side::Plus, &m, &cfg()).unwrap();
    assert!(g.norm() > 1e-2, "gap {}", g.norm());
}

#[test]
fn gap_is_small_at_the_published_second_tpoint() {
    let p = ParamSet::new(11.8279, 85.0292, BETA).unwrap();
    let m = select_matching(&p, &cfg()).unwrap();
    let g = gap(&p, Side::Plus, &m, &cfg()).unwrap();
    assert!(g.norm() < 0.05, "gap {}", g.norm());
}

#[test]
fn gap_is_symmetric_between_sides() {
    let p = ParamSet::new(11.8, 85.0, BETA).unwrap();
    let m = select_matching(&p, &cfg()).unwrap();
    let a = gap(&p, Side::Plus, &m, &cfg()).unwrap();
    let b = gap(&p, Side::Minus, &m, &cfg()).unwrap();
    assert!((a.u - b.u).abs() < 1e-7 && (a.v - b.v).abs() < 1e-7, "{a:?} vs {b:?}");
}

#[test]
fn gap_jacobian_is_nonsingular_near_the_seed() {
    let c = cfg();
    let p0 = ParamSet::new(11.8, 85.0, BETA).unwrap();
    let m = select_matching(&p0, &c).unwrap();
    let g = |r: f64, s: f64| gap(&ParamSet::new(s, r, BETA).unwrap(), Side::Plus, &m, &c).unwrap();
    let h = 1e-4;
    let g0 = g(85.0, 11.8);
    let gr = g(85.0 + h, 11.8);
    let gs = g(85.0, 11.8 + h);
    let j = [[(gr.u - g0.u) / h, (gs.u - g0.u) / h], [(gr.v - g0.v) / h, (gs.v - g0.v) / h]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = j.iter().flatten().map(|x| x * x).sum::<f64>();
    assert!(det.abs() > 1e-6 * scale, "det {det:e}, |J|² {scale:e}");
}

#[test]
fn gap_is_continuous_near_the_tpoint() {
    let (tp, _) = second_tpoint();
    let g = |dr: f64, ds: f64| {
        let p = ParamSet::new(tp.sigma + ds, tp.r + dr, BETA).unwrap();
        gap(&p, Side::Plus, &tp.matching, &cfg()).unwrap()
    };
    let g0 = g(0.0, 0.0);
    for (dr, ds) in [(1e-6, 0.0), (0.0, 1e-6), (-1e-6, 1e-6)] {
        let g1 = g(dr, ds);
        let change = (g1.u - g0.u).hypot(g1.v - g0.v);
        assert!(change < 1e-3, "change {change:e}");
    }
}

#[test]
fn search_recovers_the_second_tpoint() {
    let (tp, _) = second_tpoint();
    assert!((tp.r - 85.0292).abs() < 0.05, "r = {}", tp.r);
    assert!((tp.sigma - 11.8279).abs() < 0.05, "σ = {}", tp.sigma);
    assert!(tp.gap_norm < 1e-6);
}

#[test]
fn search_far_from_the_basin_fails() {
    assert!(matches!(find_tpoint((5.0, 5.0), BETA, &cfg()), Err(HeteroclinicError::NoConvergence { .. })));
}

#[test]
fn assembled_curves_are_closed_and_embedded() {
    for (_, knot) in [second_tpoint(), first_tpoint()] {
        let c = &knot.curve;
        assert!(c.is_closed());
        assert_eq!(c.arcs.len(), c.segment_count());
        assert_eq!(c.times.len(), c.vertices.len());
        assert!(knot.min_separation > 1e-9);
        for tag in [ArcTag::SeparatrixPlus, ArcTag::SeparatrixMinus, ArcTag::Closure] {
            assert!(c.arcs.contains(&tag));
        }
    }
}

#[test]
fn assembled_curve_is_symmetric_as_a_set() {
    let (_, knot) = first_tpoint();
    let v = &knot.curve.vertices;
    for s in v {
        let m = symmetry(s);
        let nearest = v.iter().map(|w| (w - m).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-6, "vertex {s:?} has no mirror ({nearest:e})");
    }
}

#[test]
fn separatrices_are_monotone_off_the_paraboloid() {
    for (tp, knot) in [second_tpoint(), first_tpoint()] {
        let p = tp.params();
        let c = &knot.curve;
        for (i, s) in c.vertices[..c.segment_count()].iter().enumerate() {
            if c.arcs[i] == ArcTag::Closure {
                continue;
            }
            let dz = vector_field(s, &p).z;
            let q = s.x * s.y - p.beta * s.z;
            assert_eq!(dz.signum(), q.signum(), "vertex {i}");
        }
    }
}

#[test]
fn separatrices_pass_the_section_proxy() {
    for (_, knot) in [second_tpoint(), first_tpoint()] {
        assert!(knot.passages >= 1);
    }
}

fn check_class(knot: &HeteroclinicKnot, expected: &[i64], name: KnotName) {
    let want = LaurentPoly::from_i64(0, expected);
    for dir in direction_fan(Vector3::new(1.0, -1.0, 0.0), 10, 0.35, 7) {
        let d = project(&knot.curve, dir).unwrap();
        assert_eq!(alexander(&d).unwrap(), want, "direction {dir:?}");
        assert_eq!(identify(&d), name);
    }
}

#[test]
fn second_tpoint_gives_a_figure_eight() {
    check_class(&second_tpoint().1, &[1, -3, 1], KnotName::FigureEight);
}

#[test]
fn first_tpoint_gives_a_trefoil() {
    let (tp, knot) = first_tpoint();
    assert!(tp.r < 40.0 && tp.gap_norm < 1e-6);
    check_class(knot, &[1, -1, 1], KnotName::Trefoil);
}

#[test]
fn closure_arcs_add_no_crossings_on_the_diagonal_plane() {
    for (_, knot) in [second_tpoint(), first_tpoint()] {
        let c = &knot.curve;
        let d = project(c, Vector3::new(1.0, -1.0, 0.0)).unwrap();
        let tag = |param: f64| c.arcs[param as usize];
        let closure_only = d
            .crossings
            .iter()
            .filter(|x| tag(x.over.param) == ArcTag::Closure && tag(x.under.param) == ArcTag::Closure);
        assert_eq!(closure_only.count(), 0);
    }
}

#[test]
fn csv_export_has_one_row_per_vertex() {
    let (_, knot) = first_tpoint();
    let csv = knot.curve.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("arc,t,x,y,z"));
    assert_eq!(lines.count(), knot.curve.vertices.len());
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "separatrix+");
    let origin: State3 = Vector3::new(row[2].parse().unwrap(), row[3].parse().unwrap(), row[4].parse().unwrap());
    assert_eq!(origin, State3::zeros());
}
