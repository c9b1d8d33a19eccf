//! Separatrices of the origin and the wing centers, the two-parameter search
//! for heteroclinic T-points, and assembly of the closed invariant curve that
//! runs through the far field.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    eigen_split, integrate, integrate_field, symmetry, wing_center, Direction, DynamicsError, ParamSet, Reversed,
    Section, Stability, State3, Tolerances, Trajectory,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeteroclinicError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{what} did not reach its section within t = {t_max}")]
    Timeout { what: &'static str, t_max: f64 },
    #[error("no convergence after {iterations} iterations (|gap| = {gap_norm:e}): {reason}")]
    NoConvergence { iterations: usize, gap_norm: f64, reason: String },
    #[error("gap {gap_norm:e} exceeds {limit:e}; parameters are not at a T-point")]
    GapTooLarge { gap_norm: f64, limit: f64 },
    #[error("assembled curve comes within {distance:e} of itself")]
    SelfIntersecting { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Side {
    pub fn sign(self) -> i8 {
        match self {
            Side::Plus => 1,
            Side::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }

    fn times(self, other: Side) -> Side {
        if self == other {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

/// Mismatch between the two separatrices on the matching sphere, in an
/// orthonormal tangent frame at the stable-side hit point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapVector {
    pub u: f64,
    pub v: f64,
}

impl GapVector {
    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.u, self.v)
    }
}

/// How the two separatrices are compared.
///
/// The unstable separatrix on side `+` is matched with the stable manifold of
/// the wing center `target`, on a sphere of `radius` around it. `branch`
/// selects which half of that one-dimensional stable manifold is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub target: Side,
    pub branch: i8,
    pub radius: f64,
}

impl Matching {
    fn wing(&self, p: &ParamSet, side: Side) -> Result<State3, HeteroclinicError> {
        wing_center(p, side.times(self.target).sign())
            .ok_or_else(|| HeteroclinicError::Precondition(format!("r = {} ≤ 1 has no wing centers", p.r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub radius: f64,
    /// Separatrix seeds sit at distance `eps_scale · |p⁺|` from the equilibrium.
    pub eps_scale: f64,
    pub t_max: f64,
    pub tol: Tolerances,
    pub fd_step: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Recompute the finite-difference Jacobian every this many iterations.
    pub refresh: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            radius: 5.0,
            eps_scale: 1e-6,
            t_max: 40.0,
            tol: Tolerances::heteroclinic(),
            fd_step: 1e-4,
            gap_tol: 1e-6,
            max_iter: 40,
            refresh: 5,
        }
    }
}

impl SearchConfig {
    pub fn eps(&self, p: &ParamSet) -> f64 {
        let scale = wing_center(p, 1).map_or(1.0, |w| w.norm());
        self.eps_scale * scale
    }
}

fn check_eps(eps: f64) -> Result<(), HeteroclinicError> {
    if (1e-8..=1e-4).contains(&eps) {
        Ok(())
    } else {
        Err(HeteroclinicError::Precondition(format!("seed offset {eps:e} outside [1e-8, 1e-4]")))
    }
}

/// Unit unstable eigenvector of the origin, pointing into x > 0.
pub fn origin_unstable_direction(p: &ParamSet) -> Result<State3, HeteroclinicError> {
    if p.r <= 1.0 {
        return Err(HeteroclinicError::Precondition(format!("r = {} ≤ 1: origin is stable", p.r)));
    }
    let split = eigen_split(&State3::zeros(), p)?;
    let (_, v) = split
        .unique_real(Stability::Unstable)
        .ok_or_else(|| HeteroclinicError::Precondition("origin lacks a single unstable direction".into()))?;
    Ok(if v.x < 0.0 { -v } else { v })
}

// σ-equivariant reference used to orient stable eigenvectors of p± consistently.
fn orientation_reference(side: i8) -> State3 {
    let s = f64::from(side);
    Vector3::new(s, 2.0 * s, 3.0)
}

/// Unit stable eigenvector of the wing center on `side`, oriented consistently
/// with the rotation symmetry.
pub fn wing_stable_direction(p: &ParamSet, side: Side) -> Result<(State3, State3), HeteroclinicError> {
    let w = wing_center(p, side.sign())
        .ok_or_else(|| HeteroclinicError::Precondition(format!("r = {} ≤ 1 has no wing centers", p.r)))?;
    let split = eigen_split(&w, p)?;
    if split.count(Stability::Stable) != 1 {
        return Err(HeteroclinicError::Precondition(format!(
            "wing center has {} stable eigenvalues, need exactly one",
            split.count(Stability::Stable)
        )));
    }
    let (_, v) = split
        .unique_real(Stability::Stable)
        .ok_or_else(|| HeteroclinicError::Precondition("stable eigenvalue of the wing center is complex".into()))?;
    let v = if v.dot(&orientation_reference(side.sign())) < 0.0 { -v } else { v };
    Ok((w, v))
}

/// Forward branch of the origin's unstable manifold on `side`, integrated to
/// `t_max` while recording inward crossings of the matching sphere.
pub fn unstable_separatrix(
    p: &ParamSet,
    side: Side,
    eps: f64,
    t_max: f64,
    m: &Matching,
) -> Result<Trajectory, HeteroclinicError> {
    check_eps(eps)?;
    let v = origin_unstable_direction(p)? * f64::from(side.sign());
    let center = m.wing(p, side)?;
    let section = Section::sphere(center, m.radius, Direction::Decreasing);
    let traj = integrate(v * eps, p, t_max, &Tolerances::heteroclinic(), &[section])?;
    if traj.crossings.is_empty() {
        return Err(HeteroclinicError::Timeout { what: "unstable separatrix", t_max });
    }
    Ok(traj)
}

/// Backward continuation of the matched stable branch of the target wing
/// center, stopped where it leaves the matching sphere. Time runs backwards:
/// trajectory time τ corresponds to flow time −τ.
pub fn stable_separatrix_wing(
    p: &ParamSet,
    side: Side,
    eps: f64,
    t_max: f64,
    m: &Matching,
) -> Result<Trajectory, HeteroclinicError> {
    check_eps(eps)?;
    let wing_side = side.times(m.target);
    let (w, v) = wing_stable_direction(p, wing_side)?;
    let start = w + v * (eps * f64::from(m.branch));
    let exit = Section::sphere(w, m.radius, Direction::Increasing).terminal();
    let traj = integrate_field(&Reversed(*p), start, t_max, &Tolerances::heteroclinic(), &[exit])?;
    if traj.stopped_by.is_none() {
        return Err(HeteroclinicError::Timeout { what: "stable separatrix", t_max });
    }
    Ok(traj)
}

fn tangent_frame(center: &State3, hit: &State3) -> (State3, State3) {
    let d = (hit - center).normalize();
    let mut e1 = Vector3::z().cross(&d);
    if e1.norm() < 1e-12 {
        e1 = Vector3::x().cross(&d);
    }
    let e1 = e1.normalize();
    (e1, d.cross(&e1))
}

/// Signed mismatch of the separatrices on the matching sphere for the given side.
pub fn gap(p: &ParamSet, side: Side, m: &Matching, cfg: &SearchConfig) -> Result<GapVector, HeteroclinicError> {
    Ok(matched_pair(p, side, m, cfg)?.gap)
}

struct MatchedPair {
    unstable: Trajectory,
    /// Index of the matched sphere crossing of the unstable separatrix.
    crossing: usize,
    stable: Trajectory,
    gap: GapVector,
}

fn matched_pair(p: &ParamSet, side: Side, m: &Matching, cfg: &SearchConfig) -> Result<MatchedPair, HeteroclinicError> {
    if p.r <= 1.0 {
        return Err(HeteroclinicError::Precondition(format!("r = {} ≤ 1", p.r)));
    }
    let eps = cfg.eps(p);
    let stable = stable_separatrix_wing(p, side, eps, cfg.t_max, m)?;
    let unstable = unstable_separatrix(p, side, eps, cfg.t_max, m)?;
    let b = stable.last();
    let (crossing, a) = unstable
        .crossings
        .iter()
        .enumerate()
        .map(|(k, c)| (k, c.state))
        .min_by(|x, y| (x.1 - b).norm().total_cmp(&(y.1 - b).norm()))
        .expect("at least one crossing");
    let (e1, e2) = tangent_frame(&m.wing(p, side)?, &b);
    let diff = a - b;
    Ok(MatchedPair { unstable, crossing, stable, gap: GapVector { u: diff.dot(&e1), v: diff.dot(&e2) } })
}

/// Chooses the matching data at given parameters: the wing center that the
/// unstable separatrix approaches most closely, and the stable branch whose
/// backward continuation comes closest to the origin.
pub fn select_matching(p: &ParamSet, cfg: &SearchConfig) -> Result<Matching, HeteroclinicError> {
    let eps = cfg.eps(p);
    check_eps(eps)?;
    let v = origin_unstable_direction(p)?;
    let fwd = integrate(v * eps, p, cfg.t_max, &cfg.tol, &[])?;
    let pts = fwd.polyline(0.05);
    let closest = |w: State3| pts.iter().map(|s| (s - w).norm()).fold(f64::INFINITY, f64::min);
    let plus = wing_center(p, 1).expect("r > 1");
    let target = if closest(plus) <= closest(symmetry(&plus)) { Side::Plus } else { Side::Minus };

    let (w, vs) = wing_stable_direction(p, target)?;
    let escape = 100.0 * (1.0 + w.norm());
    let mut best = (f64::INFINITY, 1i8);
    for branch in [1i8, -1] {
        let start = w + vs * (eps * f64::from(branch));
        let out = Section::sphere(State3::zeros(), escape, Direction::Increasing).terminal();
        let back = integrate_field(&Reversed(*p), start, cfg.t_max, &cfg.tol, &[out])?;
        let nearest = back.polyline(0.05).iter().map(|s| s.norm()).fold(f64::INFINITY, f64::min);
        if nearest < best.0 {
            best = (nearest, branch);
        }
    }
    Ok(Matching { target, branch: best.1, radius: cfg.radius })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TPoint {
    pub r: f64,
    pub sigma: f64,
    pub beta: f64,
    pub gap_norm: f64,
    pub iterations: usize,
    pub matching: Matching,
}

impl TPoint {
    pub fn params(&self) -> ParamSet {
        ParamSet { sigma: self.sigma, r: self.r, beta: self.beta }
    }
}

/// Broyden iteration on the gap in the (r, σ) plane, starting from `seed = (r, σ)`.
pub fn find_tpoint(seed: (f64, f64), beta: f64, cfg: &SearchConfig) -> Result<TPoint, HeteroclinicError> {
    let fail = |iterations: usize, gap_norm: f64, reason: String| HeteroclinicError::NoConvergence {
        iterations,
        gap_norm,
        reason,
    };
    let p0 = ParamSet::new(seed.1, seed.0, beta).map_err(|e| fail(0, f64::NAN, e.to_string()))?;
    let m = select_matching(&p0, cfg).map_err(|e| fail(0, f64::NAN, e.to_string()))?;
    let eval = |x: &Vector2<f64>| -> Result<Vector2<f64>, HeteroclinicError> {
        let p = ParamSet::new(x[1], x[0], beta)?;
        Ok(gap(&p, Side::Plus, &m, cfg)?.as_vector())
    };
    let jacobian = |x: &Vector2<f64>, g: &Vector2<f64>| -> Result<Matrix2<f64>, HeteroclinicError> {
        let h = cfg.fd_step;
        let (gr, gs) = rayon::join(|| eval(&(x + Vector2::new(h, 0.0))), || eval(&(x + Vector2::new(0.0, h))));
        Ok(Matrix2::from_columns(&[(gr? - g) / h, (gs? - g) / h]))
    };

    let mut x = Vector2::new(seed.0, seed.1);
    let mut g = eval(&x).map_err(|e| fail(0, f64::NAN, e.to_string()))?;
    let mut j = jacobian(&x, &g).map_err(|e| fail(0, g.norm(), e.to_string()))?;
    let mut since_refresh = 0;
    for it in 0..cfg.max_iter {
        if g.norm() < cfg.gap_tol {
            return Ok(TPoint { r: x[0], sigma: x[1], beta, gap_norm: g.norm(), iterations: it, matching: m });
        }
        let mut fresh = since_refresh == 0;
        let (step, g_new) = loop {
            let dx = match j.try_inverse() {
                Some(inv) => -(inv * g),
                None => return Err(fail(it, g.norm(), "singular Jacobian".into())),
            };
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..10 {
                let trial = x + dx * lambda;
                if let Ok(gt) = eval(&trial) {
                    if gt.norm() < (1.0 - 1e-4 * lambda) * g.norm() {
                        accepted = Some((dx * lambda, gt));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some(a) => break a,
                None if !fresh => {
                    j = jacobian(&x, &g).map_err(|e| fail(it, g.norm(), e.to_string()))?;
                    since_refresh = 0;
                    fresh = true;
                }
                None => return Err(fail(it, g.norm(), "line search failed".into())),
            }
        };
        x += step;
        let dg = g_new - g;
        g = g_new;
        since_refresh += 1;
        if since_refresh >= cfg.refresh {
            j = jacobian(&x, &g).map_err(|e| fail(it + 1, g.norm(), e.to_string()))?;
            since_refresh = 0;
        } else {
            j += (dg - j * step) * step.transpose() / step.norm_squared();
        }
    }
    if g.norm() < cfg.gap_tol {
        return Ok(TPoint { r: x[0], sigma: x[1], beta, gap_norm: g.norm(), iterations: cfg.max_iter, matching: m });
    }
    Err(fail(cfg.max_iter, g.norm(), "iteration budget exhausted".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcTag {
    #[serde(rename = "separatrix+")]
    SeparatrixPlus,
    #[serde(rename = "separatrix-")]
    SeparatrixMinus,
    #[serde(rename = "infinity-closure")]
    Closure,
}

impl ArcTag {
    pub fn name(self) -> &'static str {
        match self {
            ArcTag::SeparatrixPlus => "separatrix+",
            ArcTag::SeparatrixMinus => "separatrix-",
            ArcTag::Closure => "infinity-closure",
        }
    }
}

/// Closed polygon in phase space. `vertices` repeats its first point at the
/// end; `arcs[i]` tags the segment from vertex `i` to `i + 1` and `times[i]` is
/// the curve parameter at vertex `i` within its arc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedCurve3 {
    pub vertices: Vec<State3>,
    pub arcs: Vec<ArcTag>,
    pub times: Vec<f64>,
}

impl ClosedCurve3 {
    /// Closes an open vertex list; all segments carry the same tag.
    pub fn from_polygon(mut vertices: Vec<State3>, tag: ArcTag) -> Self {
        if vertices.first() != vertices.last() {
            vertices.push(vertices[0]);
        }
        let n = vertices.len();
        Self { arcs: vec![tag; n - 1], times: (0..n).map(|i| i as f64).collect(), vertices }
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.len() >= 4 && self.vertices.first() == self.vertices.last()
    }

    /// `arc,t,x,y,z` rows, one per vertex; the last vertex carries the tag of the last segment.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arc,t,x,y,z\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let tag = self.arcs[i.min(self.arcs.len() - 1)];
            out.push_str(&format!("{},{:.16e},{:.16e},{:.16e},{:.16e}\n", tag.name(), self.times[i], v.x, v.y, v.z));
        }
        out
    }

    /// Smallest distance between segments that are not neighbours along the curve.
    pub fn min_separation(&self) -> f64 {
        min_nonadjacent_distance(&self.vertices)
    }
}

/// The assembled heteroclinic curve with measurements taken along the way.
#[derive(Debug, Clone, Serialize)]
pub struct HeteroclinicKnot {
    pub params: ParamSet,
    pub matching: Matching,
    pub gap_norm: f64,
    pub curve: ClosedCurve3,
    /// Downward passages of the separatrix through the proxy section near the wings.
    pub passages: usize,
    pub far_radius: f64,
    pub min_separation: f64,
}

const CHORD: f64 = 0.2;
const FAR_CHORD: f64 = 2.0;
const JOIN_SAMPLES: usize = 96;

/// Builds the closed curve: the unstable separatrix of the origin into the
/// target wing center, the far branch of that center's stable manifold out to
/// a large sphere, a path on that sphere through the pole, and the mirror
/// images of these pieces back to the origin.
pub fn trace_heteroclinic_knot(
    p: &ParamSet,
    m: &Matching,
    cfg: &SearchConfig,
) -> Result<HeteroclinicKnot, HeteroclinicError> {
    let pair = matched_pair(p, Side::Plus, m, cfg)?;
    let gap_norm = pair.gap.norm();
    if gap_norm >= cfg.gap_tol {
        return Err(HeteroclinicError::GapTooLarge { gap_norm, limit: cfg.gap_tol });
    }
    let eps = cfg.eps(p);
    let (wing, vs) = wing_stable_direction(p, m.target)?;

    // origin → wing in forward time, jumping from the unstable run onto the matched stable point
    let t_hit = pair.unstable.crossings[pair.crossing].t;
    let mut sep: Vec<(f64, State3)> = vec![(f64::NEG_INFINITY, State3::zeros())];
    sep.extend(pair.unstable.timed_polyline(CHORD).into_iter().take_while(|(t, _)| *t < t_hit));
    let stable_pts = pair.stable.timed_polyline(CHORD);
    let tau_end = pair.stable.t_end();
    sep.extend(stable_pts.iter().rev().map(|(tau, s)| (t_hit + tau_end - tau, *s)));
    let t_wing = t_hit + tau_end;
    sep.push((f64::INFINITY, wing));

    let passages = count_passages(p, sep.iter().map(|(_, s)| s));
    let far_radius = 10.0 * sep.iter().map(|(_, s)| s.norm()).fold(0.0, f64::max);

    // far branch of the stable manifold, followed backwards to the large sphere
    let start = wing - vs * (eps * f64::from(m.branch));
    let out = Section::sphere(State3::zeros(), far_radius, Direction::Increasing).terminal();
    let far = integrate_field(&Reversed(*p), start, cfg.t_max, &cfg.tol, &[out])?;
    if far.stopped_by.is_none() {
        return Err(HeteroclinicError::Timeout { what: "far stable branch", t_max: cfg.t_max });
    }
    let far_pts = far.timed_polyline(FAR_CHORD);
    let e = far.last();
    let pole = Vector3::new(0.0, 0.0, far_radius * if e.z >= 0.0 { 1.0 } else { -1.0 });
    let join = great_circle(&e, &pole, JOIN_SAMPLES);

    let mut vertices = Vec::new();
    let mut arcs = Vec::new();
    let mut times = Vec::new();
    let mut push = |v: State3, t: f64, tag: ArcTag| {
        vertices.push(v);
        times.push(t);
        arcs.push(tag);
    };
    // separatrix⁺: origin → wing
    for (t, s) in &sep[..sep.len() - 1] {
        let t = if t.is_finite() { *t } else { 0.0 };
        push(*s, t, ArcTag::SeparatrixPlus);
    }
    push(wing, t_wing, ArcTag::Closure);
    // far branch: wing → E, parameter is backward time
    for (tau, s) in &far_pts {
        push(*s, *tau, ArcTag::Closure);
    }
    let tau_far = far.t_end();
    // E → pole → σ(E)
    for (k, s) in join.iter().enumerate().skip(1) {
        push(*s, tau_far + k as f64 / JOIN_SAMPLES as f64, ArcTag::Closure);
    }
    for (k, s) in join.iter().rev().enumerate().skip(1) {
        push(symmetry(s), tau_far + 1.0 + k as f64 / JOIN_SAMPLES as f64, ArcTag::Closure);
    }
    // mirrored far branch: σ(E) → σ(wing)
    for (tau, s) in far_pts.iter().rev().skip(1) {
        push(symmetry(s), 2.0 * tau_far + 2.0 - tau, ArcTag::Closure);
    }
    let t_back = 2.0 * tau_far + 2.0;
    // mirrored separatrix: σ(wing) → origin
    for (t, s) in sep.iter().rev() {
        let t = if t.is_finite() {
            *t
        } else if *t > 0.0 {
            t_wing
        } else {
            0.0
        };
        push(symmetry(s), t_back + t_wing - t, ArcTag::SeparatrixMinus);
    }
    // the last vertex is the origin again and starts no segment
    arcs.pop();
    let curve = ClosedCurve3 { vertices, arcs, times };
    debug_assert!(curve.is_closed());

    let min_separation = curve.min_separation();
    if min_separation <= 1e-9 {
        return Err(HeteroclinicError::SelfIntersecting { distance: min_separation });
    }
    Ok(HeteroclinicKnot { params: *p, matching: *m, gap_norm, curve, passages, far_radius, min_separation })
}

fn great_circle(a: &State3, b: &State3, n: usize) -> Vec<State3> {
    let r = a.norm();
    let (ua, ub) = (a / r, b.normalize());
    let omega = ua.dot(&ub).clamp(-1.0, 1.0).acos();
    (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            if omega < 1e-12 {
                return *a;
            }
            (ua * ((1.0 - s) * omega).sin() + ub * (s * omega).sin()) / omega.sin() * r
        })
        .collect()
}

/// Downward crossings of the plane z = r − 1 inside the disk around each wing
/// center's vertical axis that reaches the z axis.
pub fn count_passages<'a>(p: &ParamSet, pts: impl Iterator<Item = &'a State3>) -> usize {
    let plane = p.r - 1.0;
    let a = (p.beta * (p.r - 1.0)).sqrt();
    let reach = a * std::f64::consts::SQRT_2;
    let near_wing = |s: &State3| {
        let side = if s.x >= 0.0 { 1.0 } else { -1.0 };
        (s.x - side * a).hypot(s.y - side * a) < reach
    };
    let pts: Vec<&State3> = pts.collect();
    pts.windows(2)
        .filter(|w| {
            let (s0, s1) = (w[0], w[1]);
            if !(s0.z > plane && s1.z <= plane) {
                return false;
            }
            let f = (s0.z - plane) / (s0.z - s1.z);
            near_wing(&(s0 + (s1 - s0) * f))
        })
        .count()
}

fn segment_distance(p0: &State3, p1: &State3, q0: &State3, q1: &State3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    (p0 + d1 * s - (q0 + d2 * t)).norm()
}

/// Minimum distance between segments of a closed polygon that share no vertex,
/// searched within a uniform grid; pairs farther apart than one cell are not
/// examined, so the result is capped at the cell size.
fn min_nonadjacent_distance(v: &[State3]) -> f64 {
    use std::collections::HashMap;
    let n = v.len() - 1;
    if n < 4 {
        return f64::INFINITY;
    }
    let mut lens: Vec<f64> = (0..n).map(|i| (v[i + 1] - v[i]).norm()).collect();
    lens.sort_by(f64::total_cmp);
    let cell = (lens[n / 2] * 2.0).max(1e-9);
    let key = |x: f64| (x / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (a, b) = (v[i], v[i + 1]);
        let lo = a.inf(&b);
        let hi = a.sup(&b);
        for x in key(lo.x)..=key(hi.x) {
            for y in key(lo.y)..=key(hi.y) {
                for z in key(lo.z)..=key(hi.z) {
                    grid.entry((x, y, z)).or_default().push(i);
                }
            }
        }
    }
    let mut best = cell;
    for bucket in grid.values() {
        for (ai, &i) in bucket.iter().enumerate() {
            for &j in &bucket[ai + 1..] {
                let gap = (i as isize - j as isize).unsigned_abs();
                if gap <= 1 || gap >= n - 1 {
                    continue;
                }
                best = best.min(segment_distance(&v[i], &v[i + 1], &v[j], &v[j + 1]));
            }
        }
    }
    best
}
