use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::{Error as _, SerializeStruct};
use serde::{Serialize, Serializer};

/// Integer Laurent polynomial `Σ coeffs[k] t^(low + k)`, kept trimmed so that
/// the first and last coefficients are nonzero. Zero has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    low: i64,
    coeffs: Vec<BigInt>,
}

impl LaurentPoly {
    pub fn new(low: i64, coeffs: Vec<BigInt>) -> Self {
        let mut p = Self { low, coeffs };
        p.trim();
        p
    }

    pub fn from_i64(low: i64, coeffs: &[i64]) -> Self {
        Self::new(low, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { low: 0, coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        Self::from_i64(0, &[c])
    }

    /// `c · t^k`
    pub fn monomial(c: i64, k: i64) -> Self {
        Self::from_i64(k, &[c])
    }

    pub fn t() -> Self {
        Self::monomial(1, 1)
    }

    fn trim(&mut self) {
        let lead_zeros = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead_zeros == self.coeffs.len() {
            self.coeffs.clear();
            self.low = 0;
            return;
        }
        self.coeffs.drain(..lead_zeros);
        self.low += lead_zeros as i64;
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn low_degree(&self) -> i64 {
        self.low
    }

    pub fn high_degree(&self) -> i64 {
        self.low + self.coeffs.len() as i64 - 1
    }

    /// Difference between the highest and lowest exponent.
    pub fn span(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.coeffs.len() as i64 - 1
        }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> BigInt {
        let i = k - self.low;
        if i < 0 || i >= self.coeffs.len() as i64 {
            BigInt::zero()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    pub fn shift(&self, k: i64) -> Self {
        Self { low: self.low + k, coeffs: self.coeffs.clone() }
    }

    /// Representative up to units ±tᵏ: lowest exponent 0, positive leading coefficient.
    pub fn normalized(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        if coeffs.last().unwrap().is_negative() {
            coeffs.iter_mut().for_each(|c| *c = -c.clone());
        }
        Self { low: 0, coeffs }
    }

    /// p(1/t)
    pub fn reciprocal(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        Self { low: -self.high_degree(), coeffs }
    }

    /// Whether p(t) = ±tᵏ p(1/t) for some k.
    pub fn is_symmetric(&self) -> bool {
        self.normalized() == self.reciprocal().normalized()
    }

    pub fn eval(&self, x: i64) -> BigInt {
        if self.is_zero() {
            return BigInt::zero();
        }
        assert!(x != 0 || self.low >= 0, "negative power at zero");
        let x = BigInt::from(x);
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * &x + c;
        }
        if self.low >= 0 {
            acc * x.pow(self.low as u32)
        } else {
            // only ±1 are needed for knot invariants
            assert!(x.abs().is_one(), "evaluation with negative powers restricted to ±1");
            acc * x.pow((-self.low) as u32)
        }
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        let mut rem = self.coeffs.clone();
        let dl = d.coeffs.len();
        if rem.len() < dl {
            return None;
        }
        let lead = d.coeffs.last().unwrap();
        let mut q = vec![BigInt::zero(); rem.len() - dl + 1];
        for k in (0..q.len()).rev() {
            let top = &rem[k + dl - 1];
            if top.is_zero() {
                continue;
            }
            if !(top % lead).is_zero() {
                return None;
            }
            let f = top / lead;
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &f * dc;
            }
            q[k] = f;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(Self::new(self.low - d.low, q))
    }

    /// `1 + t + … + t^(n−1)`
    pub fn geometric(n: usize) -> Self {
        Self::new(0, vec![BigInt::one(); n])
    }

    pub fn to_i64_vec(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| c.to_i64()).collect()
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, o: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let low = self.low.min(o.low);
        let high = self.high_degree().max(o.high_degree());
        let coeffs = (low..=high).map(|k| self.coeff(k) + o.coeff(k)).collect();
        LaurentPoly::new(low, coeffs)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly { low: self.low, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, o: &LaurentPoly) -> LaurentPoly {
        self + &(-o)
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, o: &LaurentPoly) -> LaurentPoly {
        if self.is_zero() || o.is_zero() {
            return LaurentPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentPoly::new(self.low + o.low, coeffs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, o: LaurentPoly) -> LaurentPoly {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let k = self.low + i as i64;
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let unit = mag.is_one();
            match k {
                0 => write!(f, "{mag}")?,
                1 if unit => write!(f, "t")?,
                1 => write!(f, "{mag}t")?,
                _ if unit => write!(f, "t^{k}")?,
                _ => write!(f, "{mag}t^{k}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coeffs = self.to_i64_vec().ok_or_else(|| S::Error::custom("coefficient exceeds i64"))?;
        let mut st = s.serialize_struct("LaurentPoly", 3)?;
        st.serialize_field("low", &self.low)?;
        st.serialize_field("coeffs", &coeffs)?;
        st.serialize_field("text", &self.to_string())?;
        st.end()
    }
}

/// Determinant of a square matrix over ℤ[t, t⁻¹] by fraction-free Bareiss
/// elimination with pivot search.
pub fn determinant(mut m: Vec<Vec<LaurentPoly>>) -> LaurentPoly {
    let n = m.len();
    if n == 0 {
        return LaurentPoly::one();
    }
    let mut sign_flip = false;
    let mut prev = LaurentPoly::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some((pi, pj)) = (k..n)
                .flat_map(|i| (k..n).map(move |j| (i, j)))
                .filter(|&(i, j)| !m[i][j].is_zero())
                .min_by_key(|&(i, j)| m[i][j].span())
            else {
                return LaurentPoly::zero();
            };
            if pi != k {
                m.swap(pi, k);
                sign_flip = !sign_flip;
            }
            if pj != k {
                for row in m.iter_mut() {
                    row.swap(pj, k);
                }
                sign_flip = !sign_flip;
            }
        }
        let pivot = m[k][k].clone();
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&pivot * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = num.div_exact(&prev).expect("Bareiss division is exact");
            }
            m[i][k] = LaurentPoly::zero();
        }
        prev = pivot;
    }
    let d = m[n - 1][n - 1].clone();
    if sign_flip {
        -&d
    } else {
        d
    }
}
