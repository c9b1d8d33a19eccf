//! The Lorenz vector field, its equilibria and linearization, and an adaptive
//! Runge–Kutta 5(4) integrator with dense output and section events.

mod eigen;
mod integrator;

pub use eigen::{eigen_split, EigenPair, EigenSplit, Stability};
pub use integrator::{
    integrate, integrate_field, Crossing, Direction, Reversed, Section, SectionShape, Step, Tolerances, Trajectory,
    VectorField,
};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of phase space.
pub type State3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("parameters must be finite and strictly positive (sigma={sigma}, r={r}, beta={beta})")]
    InvalidParams { sigma: f64, r: f64, beta: f64 },
    #[error("tolerances must be strictly positive")]
    InvalidTolerances,
    #[error("state is not an equilibrium (|f| = {residual:e})")]
    NotEquilibrium { residual: f64 },
    #[error("step size underflow at t = {t}")]
    Diverged { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {steps} exhausted at t = {t}")]
    StepBudget { steps: usize, t: f64 },
}

/// The Lorenz parameters (σ, r, β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub sigma: f64,
    pub r: f64,
    pub beta: f64,
}

impl ParamSet {
    pub fn new(sigma: f64, r: f64, beta: f64) -> Result<Self, DynamicsError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(sigma) && ok(r) && ok(beta) {
            Ok(Self { sigma, r, beta })
        } else {
            Err(DynamicsError::InvalidParams { sigma, r, beta })
        }
    }

    /// σ = 10, r = 28, β = 8/3.
    pub fn classical() -> Self {
        Self { sigma: 10.0, r: 28.0, beta: 8.0 / 3.0 }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        Self::new(self.sigma, self.r, self.beta).map(|_| ())
    }
}

/// The rotation (x, y, z) ↦ (−x, −y, z) under which the field is equivariant.
pub fn symmetry(s: &State3) -> State3 {
    Vector3::new(-s.x, -s.y, s.z)
}

pub fn vector_field(s: &State3, p: &ParamSet) -> State3 {
    Vector3::new(p.sigma * (s.y - s.x), p.r * s.x - s.y - s.x * s.z, s.x * s.y - p.beta * s.z)
}

pub fn jacobian(s: &State3, p: &ParamSet) -> Matrix3<f64> {
    Matrix3::new(-p.sigma, p.sigma, 0.0, p.r - s.z, -1.0, -s.x, s.y, s.x, -p.beta)
}

/// Divergence of the field; constant in phase space.
pub fn divergence(p: &ParamSet) -> f64 {
    -(p.sigma + 1.0 + p.beta)
}

/// The origin, followed by the wing centers p⁺ and p⁻ when r > 1.
pub fn equilibria(p: &ParamSet) -> Vec<State3> {
    let mut out = vec![State3::zeros()];
    if p.r > 1.0 {
        let a = (p.beta * (p.r - 1.0)).sqrt();
        out.push(Vector3::new(a, a, p.r - 1.0));
        out.push(Vector3::new(-a, -a, p.r - 1.0));
    }
    out
}

/// Wing center on the given side (+1 → p⁺, −1 → p⁻). `None` when r ≤ 1.
pub fn wing_center(p: &ParamSet, side: i8) -> Option<State3> {
    if p.r <= 1.0 {
        return None;
    }
    let a = (p.beta * (p.r - 1.0)).sqrt() * f64::from(side.signum());
    Some(Vector3::new(a, a, p.r - 1.0))
}

/// Quadratic function V = r x² + σ y² + σ (z − 2r)², whose time derivative is
/// −2σ (r x² + y² + β (z − r)² − β r²).
pub fn lyapunov(s: &State3, p: &ParamSet) -> f64 {
    let dz = s.z - 2.0 * p.r;
    p.r * s.x * s.x + p.sigma * s.y * s.y + p.sigma * dz * dz
}

pub fn lyapunov_rate(s: &State3, p: &ParamSet) -> f64 {
    let dz = s.z - p.r;
    -2.0 * p.sigma * (p.r * s.x * s.x + s.y * s.y + p.beta * dz * dz - p.beta * p.r * p.r)
}

/// A level `c` such that `{V ≤ c}` is forward invariant: V decreases outside the
/// ellipsoid `E = {r x² + y² + β (z − r)² ≤ β r²}`, so any level above max_E V
/// traps orbits. The maximum of the convex V over E is attained on ∂E; it is
/// bracketed by a dense angular scan plus a local refinement, then padded.
pub fn trapping_level(p: &ParamSet) -> f64 {
    let rad = p.r * p.beta.sqrt();
    let axes = Vector3::new(rad / p.r.sqrt(), rad, rad / p.beta.sqrt());
    let center = Vector3::new(0.0, 0.0, p.r);
    let at = |theta: f64, phi: f64| {
        let u = Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        center + axes.component_mul(&u)
    };
    let n = 180;
    let mut best = (f64::MIN, 0.0, 0.0);
    for i in 0..=n {
        let theta = std::f64::consts::PI * i as f64 / n as f64;
        for j in 0..(2 * n) {
            let phi = std::f64::consts::PI * j as f64 / n as f64;
            let v = lyapunov(&at(theta, phi), p);
            if v > best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let (mut v, mut theta, mut phi) = best;
    let mut h = std::f64::consts::PI / n as f64;
    while h > 1e-9 {
        let mut improved = false;
        for (dt, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let cand = lyapunov(&at(theta + dt, phi + dp), p);
            if cand > v {
                v = cand;
                theta += dt;
                phi += dp;
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    v * (1.0 + 1e-6) + 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn field_at_reference_points() {
        let p = ParamSet::classical();
        assert_eq!(vector_field(&State3::zeros(), &p), State3::zeros());
        let f = vector_field(&Vector3::new(1.0, 1.0, 1.0), &p);
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, 26.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.z, -5.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_at_origin() {
        let j = jacobian(&State3::zeros(), &ParamSet::classical());
        let expected = Matrix3::new(-10.0, 10.0, 0.0, 28.0, -1.0, 0.0, 0.0, 0.0, -8.0 / 3.0);
        assert_eq!(j, expected);
        // block triangular on the z axis
        let jz = jacobian(&Vector3::new(0.0, 0.0, 5.0), &ParamSet::classical());
        assert_eq!((jz[(2, 0)], jz[(2, 1)]), (0.0, 0.0));
        assert_eq!((jz[(0, 2)], jz[(1, 2)]), (0.0, 0.0));
    }

    #[test]
    fn equilibria_classical_and_subcritical() {
        let p = ParamSet::classical();
        let eq = equilibria(&p);
        assert_eq!(eq.len(), 3);
        let a = 72f64.sqrt();
        assert_abs_diff_eq!(eq[1].x, a, epsilon = 1e-12);
        assert_abs_diff_eq!(eq[1].x, 8.48528, epsilon = 1e-5);
        assert_abs_diff_eq!(eq[2].y, -a, epsilon = 1e-12);
        assert_eq!(eq[1].z, 27.0);
        for e in &eq {
            assert!(vector_field(e, &p).norm() < 1e-12);
        }
        let low = ParamSet::new(10.0, 0.5, 8.0 / 3.0).unwrap();
        assert_eq!(equilibria(&low), vec![State3::zeros()]);
    }

    #[test]
    fn rejects_nonpositive_params() {
        assert!(ParamSet::new(0.0, 28.0, 1.0).is_err());
        assert!(ParamSet::new(10.0, -1.0, 1.0).is_err());
        assert!(ParamSet::new(10.0, 28.0, f64::NAN).is_err());
    }

    #[test]
    fn lyapunov_rate_matches_chain_rule() {
        let p = ParamSet::classical();
        let s = Vector3::new(3.0, -7.0, 40.0);
        let h = 1e-6;
        let f = vector_field(&s, &p);
        let num = (lyapunov(&(s + f * h), &p) - lyapunov(&(s - f * h), &p)) / (2.0 * h);
        assert!((num - lyapunov_rate(&s, &p)).abs() < 1e-4 * num.abs().max(1.0));
    }

    #[test]
    fn trapping_level_bounds_the_decrease_region() {
        let p = ParamSet::classical();
        let c = trapping_level(&p);
        // every state with V > c has dV/dt < 0
        let mut rng_state = 12345u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20000 {
            let s = Vector3::new(next() * 200.0 - 100.0, next() * 200.0 - 100.0, next() * 200.0 - 80.0);
            if lyapunov(&s, &p) > c {
                assert!(lyapunov_rate(&s, &p) < 0.0);
            }
        }
    }

    fn params() -> impl Strategy<Value = ParamSet> {
        (0.5f64..20.0, 0.5f64..120.0, 0.2f64..5.0).prop_map(|(s, r, b)| ParamSet::new(s, r, b).unwrap())
    }

    fn state() -> impl Strategy<Value = State3> {
        (-50.0f64..50.0, -50.0f64..50.0, -20.0f64..120.0).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn equivariant_under_rotation(s in state(), p in params()) {
            let lhs = vector_field(&symmetry(&s), &p);
            let rhs = symmetry(&vector_field(&s, &p));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn jacobian_matches_central_differences(s in state(), p in params()) {
            let j = jacobian(&s, &p);
            let h = 1e-6;
            for k in 0..3 {
                let mut e = State3::zeros();
                e[k] = h;
                let col = (vector_field(&(s + e), &p) - vector_field(&(s - e), &p)) / (2.0 * h);
                for i in 0..3 {
                    prop_assert!((col[i] - j[(i, k)]).abs() < 1e-6 * (1.0 + j[(i, k)].abs()));
                }
            }
        }

        #[test]
        fn trace_is_divergence(s in state(), p in params()) {
            prop_assert!((jacobian(&s, &p).trace() - divergence(&p)).abs() < 1e-12);
        }

        #[test]
        fn equilibria_are_zeros(p in params()) {
            for e in equilibria(&p) {
                prop_assert!(vector_field(&e, &p).norm() < 1e-12 * (1.0 + e.norm()));
            }
        }
    }
}
