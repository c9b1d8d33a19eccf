use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{vector_field, DynamicsError, ParamSet, State3};

pub trait VectorField {
    fn eval(&self, s: &State3) -> State3;
}

impl VectorField for ParamSet {
    fn eval(&self, s: &State3) -> State3 {
        vector_field(s, self)
    }
}

/// Time-reversed field: integrating it for time τ follows the original flow
/// backwards for τ.
#[derive(Debug, Clone, Copy)]
pub struct Reversed<F>(pub F);

impl<F: VectorField> VectorField for Reversed<F> {
    fn eval(&self, s: &State3) -> State3 {
        -self.0.eval(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    /// Upper bound on |h|; `None` leaves steps bounded only by the horizon.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Tolerances {
    /// Tight setting used for separatrix and gap computations.
    pub fn heteroclinic() -> Self {
        Self { rel: 1e-10, abs: 1e-12, h_max: Some(0.05), max_steps: 2_000_000 }
    }

    /// Looser setting for long runs and sweeps.
    pub fn sweep() -> Self {
        Self { rel: 1e-8, abs: 1e-10, h_max: Some(0.05), max_steps: 2_000_000 }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = Some(h_max);
        self
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::sweep()
    }
}

/// Which sign changes of the section function trigger an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// g goes from negative to non-negative (leaving a sphere, crossing a plane along its normal).
    Increasing,
    Decreasing,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SectionShape {
    /// g(s) = n·s − offset
    Plane { normal: [f64; 3], offset: f64 },
    /// g(s) = ‖s − center‖ − radius
    Sphere { center: [f64; 3], radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub shape: SectionShape,
    pub direction: Direction,
    pub terminal: bool,
}

impl Section {
    pub fn plane(normal: Vector3<f64>, offset: f64, direction: Direction) -> Self {
        Self { shape: SectionShape::Plane { normal: normal.into(), offset }, direction, terminal: false }
    }

    /// The horizontal plane z = c.
    pub fn plane_z(c: f64, direction: Direction) -> Self {
        Self::plane(Vector3::z(), c, direction)
    }

    pub fn sphere(center: State3, radius: f64, direction: Direction) -> Self {
        Self { shape: SectionShape::Sphere { center: center.into(), radius }, direction, terminal: false }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn eval(&self, s: &State3) -> f64 {
        match self.shape {
            SectionShape::Plane { normal, offset } => Vector3::from(normal).dot(s) - offset,
            SectionShape::Sphere { center, radius } => (s - Vector3::from(center)).norm() - radius,
        }
    }

    fn triggers(&self, g0: f64, g1: f64) -> bool {
        let up = g0 < 0.0 && g1 >= 0.0;
        let down = g0 > 0.0 && g1 <= 0.0;
        match self.direction {
            Direction::Increasing => up,
            Direction::Decreasing => down,
            Direction::Either => up || down,
        }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub t0: f64,
    pub h: f64,
    rcont: [State3; 5],
}

impl Step {
    pub fn eval(&self, t: f64) -> State3 {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        r[0] + (r[1] + (r[2] + (r[3] + r[4] * theta1) * theta) * theta1) * theta
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    /// Index into the section list passed to the integrator.
    pub section: usize,
    pub t: f64,
    pub state: State3,
}

/// Samples at accepted step boundaries plus the dense output of every step.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, State3)>,
    pub steps: Vec<Step>,
    pub crossings: Vec<Crossing>,
    /// Section whose terminal crossing stopped the run.
    pub stopped_by: Option<usize>,
}

impl Trajectory {
    pub fn first(&self) -> State3 {
        self.samples[0].1
    }

    pub fn last(&self) -> State3 {
        self.samples.last().expect("trajectory has at least one sample").1
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().expect("trajectory has at least one sample").0
    }

    pub fn states(&self) -> impl Iterator<Item = &State3> {
        self.samples.iter().map(|(_, s)| s)
    }

    /// Dense-output evaluation; clamps to the covered interval.
    pub fn at(&self, t: f64) -> State3 {
        if self.steps.is_empty() || t <= self.samples[0].0 {
            return self.first();
        }
        if t >= self.t_end() {
            return self.last();
        }
        let k = self.steps.partition_point(|s| s.t1() < t);
        self.steps[k.min(self.steps.len() - 1)].eval(t)
    }

    /// Polyline through the trajectory with every chord at most `max_chord`,
    /// refined with the dense output.
    pub fn polyline(&self, max_chord: f64) -> Vec<State3> {
        self.timed_polyline(max_chord).into_iter().map(|(_, s)| s).collect()
    }

    pub fn timed_polyline(&self, max_chord: f64) -> Vec<(f64, State3)> {
        let mut out = vec![self.samples[0]];
        for w in self.samples.windows(2) {
            let (t0, s0) = w[0];
            let (t1, s1) = w[1];
            let pieces = ((s1 - s0).norm() / max_chord).ceil().max(1.0) as usize;
            for k in 1..pieces {
                let t = t0 + (t1 - t0) * k as f64 / pieces as f64;
                out.push((t, self.at(t)));
            }
            out.push((t1, s1));
        }
        out
    }

    pub fn first_crossing(&self, section: usize) -> Option<&Crossing> {
        self.crossings.iter().find(|c| c.section == section)
    }
}

// Dormand–Prince 5(4) tableau with Hairer's dense output coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const EVENT_T_TOL: f64 = 1e-12;
const EVENT_PROBES: usize = 4;

/// Integrates the Lorenz field from `s0` over `[0, t_end]`.
pub fn integrate(
    s0: State3,
    p: &ParamSet,
    t_end: f64,
    tol: &Tolerances,
    events: &[Section],
) -> Result<Trajectory, DynamicsError> {
    integrate_field(p, s0, t_end, tol, events)
}

/// Adaptive Dormand–Prince 5(4) integration of an arbitrary autonomous field.
/// Section crossings are located on the dense output by bracketed root
/// finding; a terminal crossing ends the run at the crossing time.
pub fn integrate_field<F: VectorField>(
    field: &F,
    s0: State3,
    t_end: f64,
    tol: &Tolerances,
    events: &[Section],
) -> Result<Trajectory, DynamicsError> {
    if !(tol.rel > 0.0 && tol.abs > 0.0) {
        return Err(DynamicsError::InvalidTolerances);
    }
    if !s0.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFinite { t: 0.0 });
    }
    let mut traj = Trajectory { samples: vec![(0.0, s0)], steps: Vec::new(), crossings: Vec::new(), stopped_by: None };
    if t_end <= 0.0 {
        return Ok(traj);
    }
    let h_max = tol.h_max.unwrap_or(t_end).min(t_end);

    let mut t = 0.0;
    let mut y = s0;
    let mut k1 = field.eval(&y);
    let mut h = initial_step(field, &y, &k1, tol).min(h_max);
    let mut rejected_last = false;
    let mut g_prev: Vec<f64> = events.iter().map(|e| e.eval(&y)).collect();

    for _ in 0..tol.max_steps {
        if t >= t_end {
            return Ok(traj);
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(DynamicsError::Diverged { t });
        }

        let k2 = field.eval(&(y + (k1 * A21) * h));
        let k3 = field.eval(&(y + (k1 * A31 + k2 * A32) * h));
        let k4 = field.eval(&(y + (k1 * A41 + k2 * A42 + k3 * A43) * h));
        let k5 = field.eval(&(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h));
        let k6 = field.eval(&(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h));
        let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
        let k7 = field.eval(&y1);
        let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;

        let mut err = 0.0;
        for i in 0..3 {
            let sc = tol.abs + tol.rel * y[i].abs().max(y1[i].abs());
            err += (err_vec[i] / sc).powi(2);
        }
        let err = (err / 3.0).sqrt();
        if !err.is_finite() || !y1.iter().all(|v| v.is_finite()) {
            if h <= 1e-14 * t.abs().max(1.0) * 10.0 {
                return Err(DynamicsError::NonFinite { t });
            }
            h *= FAC_MIN;
            rejected_last = true;
            continue;
        }

        if err <= 1.0 {
            let ydiff = y1 - y;
            let bspl = k1 * h - ydiff;
            let step = Step {
                t0: t,
                h,
                rcont: [
                    y,
                    ydiff,
                    bspl,
                    ydiff - k7 * h - bspl,
                    (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
                ],
            };
            let t1 = t + h;

            let mut stop: Option<Crossing> = None;
            for (idx, sec) in events.iter().enumerate() {
                let g1 = sec.eval(&y1);
                if let Some(c) = locate(sec, idx, &step, g_prev[idx], g1) {
                    traj.crossings.push(c);
                    if sec.terminal && stop.is_none_or(|s| c.t < s.t) {
                        stop = Some(c);
                    }
                }
                g_prev[idx] = g1;
            }

            traj.steps.push(step);
            if let Some(c) = stop {
                traj.crossings.retain(|x| x.t <= c.t);
                traj.crossings.sort_by(|a, b| a.t.total_cmp(&b.t));
                traj.samples.push((c.t, c.state));
                traj.stopped_by = Some(c.section);
                return Ok(traj);
            }
            traj.samples.push((t1, y1));

            t = t1;
            y = y1;
            k1 = k7;
            let mut fac = if err == 0.0 { FAC_MAX } else { (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX) };
            if rejected_last {
                fac = fac.min(1.0);
            }
            rejected_last = false;
            h = (h * fac).min(h_max);
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            rejected_last = true;
        }
    }
    Err(DynamicsError::StepBudget { steps: tol.max_steps, t })
}

fn initial_step<F: VectorField>(field: &F, y: &State3, f0: &State3, tol: &Tolerances) -> f64 {
    let scaled = |v: &State3| {
        let mut acc = 0.0;
        for i in 0..3 {
            let sc = tol.abs + tol.rel * y[i].abs();
            acc += (v[i] / sc).powi(2);
        }
        (acc / 3.0).sqrt()
    };
    let d0 = scaled(y);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let f1 = field.eval(&(y + f0 * h0));
    let d2 = scaled(&(f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1)
}

/// Finds the first qualifying sign change of the section function inside a step.
fn locate(sec: &Section, idx: usize, step: &Step, g0: f64, g1: f64) -> Option<Crossing> {
    let mut ta = step.t0;
    let mut ga = g0;
    for k in 1..=EVENT_PROBES {
        let tb = if k == EVENT_PROBES { step.t1() } else { step.t0 + step.h * k as f64 / EVENT_PROBES as f64 };
        let gb = if k == EVENT_PROBES { g1 } else { sec.eval(&step.eval(tb)) };
        if sec.triggers(ga, gb) {
            let t = refine(sec, step, ta, ga, tb, gb);
            return Some(Crossing { section: idx, t, state: step.eval(t) });
        }
        ta = tb;
        ga = gb;
    }
    None
}

/// Illinois-modified regula falsi on the dense output.
fn refine(sec: &Section, step: &Step, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= EVENT_T_TOL {
            break;
        }
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = 0.5 * (a + b);
        }
        let gc = sec.eval(&step.eval(c));
        if gc == 0.0 {
            return c;
        }
        if (gc < 0.0) == (gb < 0.0) {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    // report the side on which the crossing has completed
    b
}
