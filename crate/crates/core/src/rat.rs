//! Exact rationals and the helpers the bound formulas need.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always normalised with a positive denominator.
pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_biguint(n: &BigUint) -> Rat {
    Rat::from_integer(BigInt::from(n.clone()))
}

/// `q^e` for any integer exponent.
pub fn qpow(q: u64, e: i64) -> Rat {
    let base = int(q as i64);
    if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

pub fn pow(x: &Rat, e: u64) -> Rat {
    num_traits::pow(x.clone(), e as usize)
}

/// Lower rational bracket of Euler's number.
pub fn e_lower() -> Rat {
    Rat::new(BigInt::from(2_718_281_828u64), BigInt::from(1_000_000_000u64))
}

/// Upper rational bracket of Euler's number.
pub fn e_upper() -> Rat {
    Rat::new(BigInt::from(2_718_281_829u64), BigInt::from(1_000_000_000u64))
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `"num/den"`, the wire form used in every report.
pub fn to_fraction_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_fraction(s: &str) -> Option<Rat> {
    let (n, d) = s.split_once('/')?;
    let n: BigInt = n.trim().parse().ok()?;
    let d: BigInt = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rat::new(n, d))
}

/// Decimal scientific notation with `digits` significant digits, truncated
/// toward zero (e.g. `1.36718750000e-2`).
pub fn to_sci(r: &Rat, digits: usize) -> String {
    if r.is_zero() {
        return format!("0.{}e0", "0".repeat(digits.saturating_sub(1)));
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let a = r.abs();
    let (n, d) = (a.numer().clone(), a.denom().clone());
    // Estimate the decimal exponent from bit lengths, then correct.
    let approx = (n.bits() as f64 - d.bits() as f64) * std::f64::consts::LOG10_2;
    let mut exp = approx.floor() as i64;
    let ten = BigInt::from(10);
    let scaled = |exp: i64| -> BigInt {
        // floor(a * 10^(digits-1-exp))
        let shift = digits as i64 - 1 - exp;
        if shift >= 0 {
            (&n * num_traits::pow(ten.clone(), shift as usize)).div_floor(&d)
        } else {
            n.div_floor(&(&d * num_traits::pow(ten.clone(), (-shift) as usize)))
        }
    };
    let lo = num_traits::pow(ten.clone(), digits - 1);
    let hi = num_traits::pow(ten.clone(), digits);
    let mut m = scaled(exp);
    while m >= hi {
        exp += 1;
        m = scaled(exp);
    }
    while m < lo {
        exp -= 1;
        m = scaled(exp);
    }
    let s = m.to_string();
    format!("{sign}{}.{}e{exp}", &s[..1], &s[1..])
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| to_sci(r, 17).parse().unwrap_or(f64::NAN))
}

/// Serde adapter writing a [`Rat`] as `"num/den"`.
pub mod serde_fraction {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_fraction_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse_fraction(&s).ok_or_else(|| serde::de::Error::custom(format!("bad fraction `{s}`")))
    }
}

/// A rational with its decimal rendering, as emitted in JSON reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RatValue {
    #[serde(with = "serde_fraction")]
    pub exact: Rat,
    pub decimal: String,
}

impl From<&Rat> for RatValue {
    fn from(r: &Rat) -> Self {
        RatValue {
            exact: r.clone(),
            decimal: to_sci(r, 12),
        }
    }
}

impl From<Rat> for RatValue {
    fn from(r: Rat) -> Self {
        RatValue::from(&r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn brackets_contain_e() {
        let e = std::f64::consts::E;
        assert!(to_f64(&e_lower()) < e && e < to_f64(&e_upper()));
    }

    #[test]
    fn sci_formatting() {
        assert_eq!(to_sci(&ratio(7, 512), 12), "1.36718750000e-2");
        assert_eq!(to_sci(&ratio(-1, 3), 4), "-3.333e-1");
        assert_eq!(to_sci(&int(1000), 3), "1.00e3");
        assert_eq!(to_sci(&int(0), 3), "0.00e0");
        assert_eq!(to_sci(&qpow(2, -100), 5), "7.8886e-31");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 2), BigUint::from(21u32));
        assert_eq!(binomial(13, 6), BigUint::from(1716u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(21, 8), BigUint::from(203_490u32));
    }

    proptest! {
        #[test]
        fn fraction_strings_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let r = ratio(n, d);
            prop_assert_eq!(parse_fraction(&to_fraction_string(&r)), Some(r.clone()));
            let approx: f64 = to_sci(&r, 15).parse().unwrap();
            prop_assert!((approx - n as f64 / d as f64).abs() <= 1e-12 * (n as f64 / d as f64).abs().max(1e-300));
        }
    }
}
