use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use super::{jacobian, vector_field, DynamicsError, ParamSet, State3};

const EQUILIBRIUM_TOL: f64 = 1e-8;
const IMAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Center,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit eigenvector; present only for real eigenvalues.
    pub vector: Option<Vector3<f64>>,
    pub stability: Stability,
}

/// Eigen-decomposition of the linearization at an equilibrium, sorted by
/// increasing real part.
#[derive(Debug, Clone, Serialize)]
pub struct EigenSplit {
    pub pairs: Vec<EigenPair>,
}

impl EigenSplit {
    pub fn count(&self, s: Stability) -> usize {
        self.pairs.iter().filter(|p| p.stability == s).count()
    }

    /// The unique real eigenpair with the given stability, if there is exactly one
    /// eigenvalue of that stability and it is real.
    pub fn unique_real(&self, s: Stability) -> Option<(f64, Vector3<f64>)> {
        let mut it = self.pairs.iter().filter(|p| p.stability == s);
        let first = it.next()?;
        if it.next().is_some() {
            return None;
        }
        first.vector.map(|v| (first.value.re, v))
    }
}

pub fn eigen_split(s: &State3, p: &ParamSet) -> Result<EigenSplit, DynamicsError> {
    let residual = vector_field(s, p).norm();
    if residual > EQUILIBRIUM_TOL * (1.0 + s.norm()) {
        return Err(DynamicsError::NotEquilibrium { residual });
    }
    Ok(decompose(&jacobian(s, p)))
}

pub(crate) fn decompose(j: &Matrix3<f64>) -> EigenSplit {
    // λ³ + a λ² + b λ + c
    let a = -j.trace();
    let b = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)] + j[(0, 0)] * j[(2, 2)] - j[(0, 2)] * j[(2, 0)]
        + j[(1, 1)] * j[(2, 2)]
        - j[(1, 2)] * j[(2, 1)];
    let c = -j.determinant();
    let mut values = cubic_roots(a, b, c);
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let scale = j.abs().max().max(1.0);
    let pairs = values
        .into_iter()
        .map(|value| {
            let stability = if value.re.abs() <= 1e-12 * scale {
                Stability::Center
            } else if value.re < 0.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            let vector = (value.im == 0.0).then(|| null_vector(&(j - Matrix3::identity() * value.re)));
            EigenPair { value, vector, stability }
        })
        .collect();
    EigenSplit { pairs }
}

fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let poly = |x: f64| ((x + a) * x + b) * x + c;
    let dpoly = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    // bracket one real root inside the Cauchy bound
    let bound = 1.0 + a.abs().max(b.abs()).max(c.abs());
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (poly(mid) > 0.0) == (poly(hi) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * bound {
            break;
        }
    }
    let root = polish(0.5 * (lo + hi), poly, dpoly);
    // deflate: λ² + (a + root) λ + (b + root (a + root))
    let p = a + root;
    let q = b + root * p;
    let disc = p * p - 4.0 * q;
    let mut out = vec![Complex64::new(root, 0.0)];
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let r1 = if p >= 0.0 { (-p - sq) / 2.0 } else { (-p + sq) / 2.0 };
        let r2 = if r1 != 0.0 { q / r1 } else { -p - r1 };
        out.push(Complex64::new(polish(r1, poly, dpoly), 0.0));
        out.push(Complex64::new(polish(r2, poly, dpoly), 0.0));
    } else {
        let im = (-disc).sqrt() / 2.0;
        if im <= IMAG_TOL * (1.0 + p.abs()) {
            let re = polish(-p / 2.0, poly, dpoly);
            out.push(Complex64::new(re, 0.0));
            out.push(Complex64::new(re, 0.0));
        } else {
            out.push(Complex64::new(-p / 2.0, im));
            out.push(Complex64::new(-p / 2.0, -im));
        }
    }
    out
}

fn polish(mut x: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..8 {
        let d = df(x);
        if d == 0.0 {
            break;
        }
        let step = f(x) / d;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Unit vector spanning the kernel of a rank-2 matrix: the largest cross
/// product of two rows.
fn null_vector(m: &Matrix3<f64>) -> Vector3<f64> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let mut best = Vector3::zeros();
    for (i, k) in [(0, 1), (0, 2), (1, 2)] {
        let c = rows[i].cross(&rows[k]);
        if c.norm() > best.norm() {
            best = c;
        }
    }
    if best.norm() == 0.0 {
        // rank ≤ 1: any vector orthogonal to the nonzero row
        let r = rows.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let trial = if r.x.abs() < 0.9 * r.norm() { Vector3::x() } else { Vector3::y() };
        best = r.cross(&trial);
        if best.norm() == 0.0 {
            return Vector3::x();
        }
    }
    best.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{wing_center, ParamSet};

    fn check_pairs(j: &Matrix3<f64>, split: &EigenSplit) {
        for pair in &split.pairs {
            if let Some(v) = pair.vector {
                let res = j * v - v * pair.value.re;
                assert!(res.norm() < 1e-10 * j.abs().max().max(1.0), "residual {res}");
                assert!((v.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn origin_classical_spectrum() {
        let p = ParamSet::classical();
        let split = eigen_split(&State3::zeros(), &p).unwrap();
        // roots of (λ + β)(λ² + (σ + 1)λ − σ(r − 1))
        let disc = (121.0f64 + 4.0 * 270.0).sqrt();
        let expected = [(-11.0 - disc) / 2.0, -8.0 / 3.0, (-11.0 + disc) / 2.0];
        for (pair, e) in split.pairs.iter().zip(expected) {
            assert!((pair.value.re - e).abs() < 1e-10, "{} vs {e}", pair.value);
            assert_eq!(pair.value.im, 0.0);
        }
        assert!((split.pairs[2].value.re - 11.8277).abs() < 1e-4);
        assert!((split.pairs[0].value.re + 22.8277).abs() < 1e-4);
        assert_eq!(split.count(Stability::Unstable), 1);
        check_pairs(&jacobian(&State3::zeros(), &p), &split);
    }

    #[test]
    fn wing_at_second_tpoint_has_one_stable_direction() {
        let p = ParamSet::new(11.8279, 85.0292, 8.0 / 3.0).unwrap();
        let w = wing_center(&p, 1).unwrap();
        let split = eigen_split(&w, &p).unwrap();
        assert_eq!(split.count(Stability::Stable), 1);
        assert!(split.unique_real(Stability::Stable).is_some());
        assert_eq!(split.count(Stability::Unstable), 2);
        assert!(split.pairs[1].value.im != 0.0);
        check_pairs(&jacobian(&w, &p), &split);
    }

    #[test]
    fn rejects_non_equilibrium() {
        let p = ParamSet::classical();
        assert!(matches!(eigen_split(&Vector3::new(1.0, 1.0, 1.0), &p), Err(DynamicsError::NotEquilibrium { .. })));
    }

    #[test]
    fn real_spectrum_residuals_on_random_matrices() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 20.0 - 10.0
        };
        for _ in 0..200 {
            let m = Matrix3::from_fn(|_, _| next());
            let split = decompose(&m);
            let tr: f64 = split.pairs.iter().map(|p| p.value.re).sum();
            assert!((tr - m.trace()).abs() < 1e-9);
            check_pairs(&m, &split);
        }
    }
}
