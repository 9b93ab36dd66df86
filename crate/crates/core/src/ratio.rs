//! Exact rational helpers: parsing, formatting and exact Bernoulli sampling.

use crate::error::{param, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.027"` exactly.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Format(format!("not a rational: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let v = Q::new(num, den);
    Ok(if neg { -v } else { v })
}

pub fn format_rational(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Smallest integer ≥ v.
pub fn ceil_int(v: &Q) -> BigInt {
    v.ceil().to_integer()
}

/// A probability in `[0, 1]` with an exact sampling rule.
///
/// The value is kept as `num/den` with 64-bit parts. A draw succeeds iff
/// `U · den < num · 2^64` for a uniform 64-bit `U`, so `p = 0` never fires and
/// `p = 1` always does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probability {
    num: u64,
    den: u64,
}

impl Probability {
    pub const ZERO: Probability = Probability { num: 0, den: 1 };
    pub const ONE: Probability = Probability { num: 1, den: 1 };

    pub fn from_ratio(v: &Q) -> Result<Self> {
        if v.is_negative() || v > &Q::one() {
            return param(format!("probability {} outside [0,1]", format_rational(v)));
        }
        if let (Some(n), Some(d)) = (v.numer().to_u64(), v.denom().to_u64()) {
            return Ok(Probability { num: n, den: d });
        }
        // Oversized parts: round to 63 fractional bits.
        let scaled = (v * Q::from_integer(BigInt::from(1u64 << 63))).round().to_integer();
        Ok(Probability { num: scaled.to_u64().unwrap_or(1u64 << 63), den: 1u64 << 63 })
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return param(format!("probability {p} outside [0,1]"));
        }
        if p == 1.0 {
            return Ok(Self::ONE);
        }
        let den = 1u64 << 63;
        Ok(Probability { num: (p * den as f64).round() as u64, den })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::from_ratio(&parse_rational(s)?)
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> bool {
        if self.num == 0 {
            return false;
        }
        if self.num == self.den {
            return true;
        }
        let u = rng.next_u64() as u128;
        u * (self.den as u128) < (self.num as u128) << 64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/5").unwrap(), q(3, 5));
        assert_eq!(parse_rational("0.027").unwrap(), q(27, 1000));
        assert_eq!(parse_rational("2").unwrap(), qi(2));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_round_trips() {
        for v in [q(5, 2), qi(3), q(-1, 7)] {
            assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
        }
    }

    #[test]
    fn probability_extremes() {
        let mut rng = crate::rng::Seed::new(1).rng();
        assert!((0..200).all(|_| !Probability::ZERO.sample(&mut rng)));
        assert!((0..200).all(|_| Probability::ONE.sample(&mut rng)));
        assert!(Probability::parse("1.5").is_err());
        assert!(Probability::from_f64(-0.1).is_err());
    }

    #[test]
    fn probability_half_is_fair() {
        let p = Probability::parse("1/2").unwrap();
        let mut rng = crate::rng::Seed::new(3).rng();
        let hits = (0..20000).filter(|_| p.sample(&mut rng)).count();
        assert!((hits as i64 - 10000).abs() < 400, "{hits}");
    }
}
