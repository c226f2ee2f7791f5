// SPDX-License-Identifier: Apache-2.0

//! Exact Clebsch–Gordan coefficients from the Racah sum.
//!
//! Condon–Shortley convention: `⟨j1 j1; j2 (J−j1) | J J⟩ > 0`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::HalfInt;
use crate::error::Result;
use crate::scalar::Real;

/// A real number of the form `sign · √(square)` with `square` rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SqrtRational {
    sign: i8,
    square: BigRational,
}

impl SqrtRational {
    pub fn zero() -> Self {
        SqrtRational { sign: 0, square: BigRational::zero() }
    }

    pub fn one() -> Self {
        SqrtRational { sign: 1, square: BigRational::one() }
    }

    /// Builds `sign · √square`; `square` must be non-negative.
    pub fn new(sign: i8, square: BigRational) -> Self {
        assert!(!square.is_negative(), "square must be non-negative");
        if square.is_zero() || sign == 0 {
            return Self::zero();
        }
        SqrtRational { sign: sign.signum(), square }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn square(&self) -> &BigRational {
        &self.square
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Exact product.
    pub fn mul(&self, other: &SqrtRational) -> SqrtRational {
        SqrtRational::new(self.sign * other.sign, &self.square * &other.square)
    }

    /// Exact quotient; `None` when dividing by zero.
    pub fn div(&self, other: &SqrtRational) -> Option<SqrtRational> {
        if other.is_zero() {
            return None;
        }
        Some(SqrtRational::new(self.sign * other.sign, &self.square / &other.square))
    }

    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let sq = self.square.to_f64().unwrap_or_else(|| {
            self.square.numer().to_f64().unwrap() / self.square.denom().to_f64().unwrap()
        });
        f64::from(self.sign) * sq.sqrt()
    }

    pub fn to_real<T: Real>(&self) -> T {
        T::lit(self.to_f64())
    }
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

type Key = [i32; 6];

fn cache() -> &'static RwLock<HashMap<Key, SqrtRational>> {
    static CACHE: OnceLock<RwLock<HashMap<Key, SqrtRational>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Exact `⟨j1 m1; j2 m2 | J M⟩`.
///
/// Returns zero when `m1 + m2 ≠ M`, the triangle rule fails or a projection is out of range.
/// A projection whose parity does not match its magnitude is a domain error.
pub fn clebsch_gordan_exact(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<SqrtRational> {
    for (a, b) in [(j1, m1), (j2, m2), (j, m)] {
        if a.twice() < 0 {
            return Err(crate::Error::Domain(format!("negative magnitude {a}")));
        }
        a.check_parity(b)?;
    }
    let key = [j1.twice(), m1.twice(), j2.twice(), m2.twice(), j.twice(), m.twice()];
    if let Some(v) = cache().read().expect("cache lock").get(&key) {
        return Ok(v.clone());
    }
    let value = racah(key);
    cache().write().expect("cache lock").insert(key, value.clone());
    Ok(value)
}

fn racah([tj1, tm1, tj2, tm2, tj, tm]: Key) -> SqrtRational {
    if tm1 + tm2 != tm || tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return SqrtRational::zero();
    }
    if tj > tj1 + tj2 || tj < (tj1 - tj2).abs() || (tj1 + tj2 + tj) % 2 != 0 {
        return SqrtRational::zero();
    }
    let h = |t: i32| i64::from(t / 2);
    // All combinations below are integers once the parity checks above pass.
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tj2 + tj);
    let cc = h(-tj1 + tj2 + tj);
    let d = h(tj1 + tj2 + tj) + 1;
    let jp = h(tj + tm);
    let jm = h(tj - tm);
    let j1m = h(tj1 - tm1);
    let j1p = h(tj1 + tm1);
    let j2m = h(tj2 - tm2);
    let j2p = h(tj2 + tm2);
    let u = h(tj - tj2 + tm1);
    let v = h(tj - tj1 - tm2);

    let prefactor = BigRational::new(
        BigInt::from(tj + 1)
            * factorial(a)
            * factorial(b)
            * factorial(cc)
            * factorial(jp)
            * factorial(jm)
            * factorial(j1m)
            * factorial(j1p)
            * factorial(j2m)
            * factorial(j2p),
        factorial(d),
    );

    let kmin = 0.max(-u).max(-v);
    let kmax = a.min(j1m).min(j2p);
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(a - k)
            * factorial(j1m - k)
            * factorial(j2p - k)
            * factorial(u + k)
            * factorial(v + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return SqrtRational::zero();
    }
    let sign = if sum.is_negative() { -1 } else { 1 };
    SqrtRational::new(sign, &sum * &sum * prefactor)
}

/// Floating-point `⟨j1 m1; j2 m2 | J M⟩`.
pub fn clebsch_gordan<T: Real>(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<T> {
    Ok(clebsch_gordan_exact(j1, m1, j2, m2, j, m)?.to_real())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn spin_half_pair_values() {
        let s = 1.0 / 2f64.sqrt();
        let v = |a, b, c, d| clebsch_gordan::<f64>(h(1), h(a), h(1), h(b), h(c), h(d)).unwrap();
        assert!((v(1, -1, 0, 0) - s).abs() < 1e-15);
        assert!((v(-1, 1, 0, 0) + s).abs() < 1e-15);
        assert!((v(1, -1, 2, 0) - s).abs() < 1e-15);
        assert!((v(1, 1, 2, 2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parity_mismatch_is_a_domain_error() {
        assert!(clebsch_gordan::<f64>(h(1), h(2), h(1), h(-1), h(2), h(1)).is_err());
    }

    #[test]
    fn exact_arithmetic() {
        let a = clebsch_gordan_exact(h(1), h(1), h(2), h(0), h(1), h(1)).unwrap();
        let b = clebsch_gordan_exact(h(1), h(-1), h(2), h(0), h(1), h(-1)).unwrap();
        assert_eq!(a.div(&b).unwrap().to_f64(), -1.0);
        assert_eq!(a.mul(&a).square(), &BigRational::new(1.into(), 9.into()));
    }
}
