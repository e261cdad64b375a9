//! Witt numbers, Hirsch lengths of free nilpotent groups, and the numeric
//! obstruction to a `d`-generator subgroup of an `m`-fold product containing
//! a term of the lower central series of a finite-index subgroup.
//!
//! `W_n(k) = (1/n) Σ_{d | n} μ(d) k^{n/d}` is the rank of the `n`-th lower
//! central quotient of a free group of rank `k`, and `h(k,c) = Σ_{i ≤ c} W_i(k)`
//! is the Hirsch length of the free nilpotent group of rank `k` and class `c`.
//! A `d`-generator subgroup of a product of `m` groups, each mapping onto a
//! non-abelian free group, can contain `γ_c(D₀)` for a finite-index `D₀` only
//! if `m · W_c(2) ≤ h(d, c)`.

use std::collections::HashMap;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest class tried by [`excluded_classes`] before giving up.
pub const MAX_CLASS: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("Witt sum for n = {n}, k = {k} is not divisible by n")]
    NonIntegralResult { n: u32, k: u32 },
    #[error("argument out of range: {0}")]
    OutOfRange(&'static str),
}

pub fn mobius(n: u64) -> i8 {
    assert!(n >= 1, "mobius is defined for n >= 1");
    let mut n = n;
    let mut sign = 1i8;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

fn witt_uncached(n: u32, k: u32) -> Result<BigInt, NumericsError> {
    let base = BigInt::from(k);
    let sum: BigInt = divisors(n)
        .into_iter()
        .map(|d| BigInt::from(mobius(d as u64)) * Pow::pow(&base, n / d))
        .sum();
    let (q, r) = sum.div_rem(&BigInt::from(n));
    if !r.is_zero() {
        return Err(NumericsError::NonIntegralResult { n, k });
    }
    Ok(q)
}

/// Memoized Witt numbers and Hirsch lengths. Safe to share between threads;
/// concurrent inserts of the same key write the same value.
#[derive(Debug, Default)]
pub struct WittTable {
    witt: RwLock<HashMap<(u32, u32), BigInt>>,
}

impl WittTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn witt(&self, n: u32, k: u32) -> Result<BigInt, NumericsError> {
        if n == 0 || k == 0 {
            return Err(NumericsError::OutOfRange("witt needs n >= 1 and k >= 1"));
        }
        if let Some(v) = self.witt.read().expect("witt cache poisoned").get(&(n, k)) {
            return Ok(v.clone());
        }
        let v = witt_uncached(n, k)?;
        self.witt
            .write()
            .expect("witt cache poisoned")
            .insert((n, k), v.clone());
        Ok(v)
    }

    pub fn hirsch(&self, k: u32, c: u32) -> Result<BigInt, NumericsError> {
        if c == 0 || k == 0 {
            return Err(NumericsError::OutOfRange("hirsch needs k >= 1 and c >= 1"));
        }
        (1..=c).map(|i| self.witt(i, k)).sum()
    }

    pub fn max_m_for(&self, d: u32, c: u32) -> Result<BigInt, NumericsError> {
        if d < 2 || c == 0 {
            return Err(NumericsError::OutOfRange("max_m_for needs d >= 2 and c >= 1"));
        }
        Ok(self.hirsch(d, c)?.div_floor(&self.witt(c, 2)?))
    }

    /// Smallest class `c` whose containment is not ruled out, i.e. the least
    /// `c` with `m ≤ ⌊h(d,c)/W_c(2)⌋`. Every class below it is excluded.
    /// `None` if no class up to [`MAX_CLASS`] qualifies.
    pub fn excluded_classes(&self, d: u32, m: u32) -> Result<Option<u32>, NumericsError> {
        if m < 2 {
            return Err(NumericsError::OutOfRange("excluded_classes needs m >= 2"));
        }
        let m = BigInt::from(m);
        for c in 1..=MAX_CLASS {
            if m <= self.max_m_for(d, c)? {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }

    /// `p_c(t) = (1/W_c(2)) Σ_{i=1}^{c} t^i`.
    pub fn poly_pc(&self, c: u32, t: &BigRational) -> Result<BigRational, NumericsError> {
        if c == 0 {
            return Err(NumericsError::OutOfRange("p_c needs c >= 1"));
        }
        let mut power = BigRational::one();
        let mut sum = BigRational::zero();
        for _ in 0..c {
            power *= t;
            sum += &power;
        }
        Ok(sum / BigRational::from_integer(self.witt(c, 2)?))
    }
}

fn shared() -> &'static WittTable {
    static TABLE: std::sync::OnceLock<WittTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(WittTable::new)
}

pub fn witt(n: u32, k: u32) -> Result<BigInt, NumericsError> {
    shared().witt(n, k)
}

pub fn hirsch(k: u32, c: u32) -> Result<BigInt, NumericsError> {
    shared().hirsch(k, c)
}

pub fn poly_pc(c: u32, t: &BigRational) -> Result<BigRational, NumericsError> {
    shared().poly_pc(c, t)
}

pub fn max_m_for(d: u32, c: u32) -> Result<BigInt, NumericsError> {
    shared().max_m_for(d, c)
}

pub fn excluded_classes(d: u32, m: u32) -> Result<Option<u32>, NumericsError> {
    shared().excluded_classes(d, m)
}

/// Renders a rational as `p` or `p/q`.
pub fn format_rational(v: &BigRational) -> String {
    if v.is_integer() {
        v.to_integer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// `u64` view, for callers that know the value is small.
pub fn small(v: &BigInt) -> Option<u64> {
    if v.is_negative() {
        None
    } else {
        v.to_u64()
    }
}
