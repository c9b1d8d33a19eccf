use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Exact number `a + b√3` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt3 {
    pub a: BigRational,
    pub b: BigRational,
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl QSqrt3 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Self::new(rat(p, q), BigRational::zero())
    }

    pub fn int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn sqrt3() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    /// `1 + √3`, the expansion rate of the figure-eight model.
    pub fn lambda() -> Self {
        Self::one() + Self::sqrt3()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.a.clone(), -self.b.clone())
    }

    /// Field norm `a² − 3b²`; zero only for zero.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - rat(3, 1) * &self.b * &self.b
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero in Q(√3)");
        let n = self.norm();
        let c = self.conjugate();
        Self::new(c.a / &n, c.b / n)
    }

    /// Exact sign, decided by comparing `a²` with `3b²` when the parts disagree.
    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sa == sb || sb == 0 {
            return sa;
        }
        if sa == 0 {
            return sb;
        }
        let aa = &self.a * &self.a;
        let bb = rat(3, 1) * &self.b * &self.b;
        match aa.cmp(&bb) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * 3f64.sqrt()
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc * self.clone())
    }
}

fn sign(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

impl PartialOrd for QSqrt3 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt3 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum().cmp(&0)
    }
}

impl Add for QSqrt3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for QSqrt3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl Mul for QSqrt3 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.a * &o.a + rat(3, 1) * &self.b * &o.b;
        let b = &self.a * &o.b + &self.b * &o.a;
        Self::new(a, b)
    }
}

impl Div for QSqrt3 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for QSqrt3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl fmt::Display for QSqrt3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let root = |b: &BigRational| if b.is_one() { "√3".to_string() } else { format!("{b}√3") };
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) if self.b.is_negative() => write!(f, "-{}", root(&-self.b.clone())),
            (true, false) => write!(f, "{}", root(&self.b)),
            (false, false) if self.b.is_negative() => write!(f, "{} - {}", self.a, root(&-self.b.clone())),
            (false, false) => write!(f, "{} + {}", self.a, root(&self.b)),
        }
    }
}

impl Serialize for QSqrt3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("QSqrt3", 3)?;
        st.serialize_field("a", &self.a.to_string())?;
        st.serialize_field("b", &self.b.to_string())?;
        st.serialize_field("approx", &self.to_f64())?;
        st.end()
    }
}
