//! Exact rational helpers shared by every module.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `2^-e` as an exact rational.
pub fn pow2_neg(e: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << e as usize)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge denominators overflow the direct conversion; fall back to a
        // scaled quotient.
        let scale = 1u64 << 53;
        let scaled = (r.numer() * BigInt::from(scale)) / r.denom();
        scaled.to_f64().unwrap_or(f64::NAN) / scale as f64
    })
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

/// Parses `p`, `p/q`, or a finite decimal such as `5.5`.
pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let whole = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| err())?
        };
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let frac = BigInt::from_str(frac).map_err(|_| err())?;
        let mag = whole.abs() * &den + frac;
        let num = if negative { -mag } else { mag };
        return Ok(Rational::new(num, den));
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| err())
}

/// If `r` equals `a / 2^b` for some integer `a`, returns the minimal such `b`.
pub fn dyadic_exponent(r: &Rational) -> Option<u32> {
    let d = r.denom();
    if d.is_zero() {
        return None;
    }
    let tz = d.trailing_zeros().unwrap_or(0);
    if (d >> tz as usize).is_one() {
        Some(tz as u32)
    } else {
        None
    }
}

/// Numerator of `r` over the denominator `2^bits`, when representable.
pub fn dyadic_numerator(r: &Rational, bits: u32) -> Option<BigInt> {
    let e = dyadic_exponent(r)?;
    if e > bits {
        return None;
    }
    Some(r.numer() << (bits - e) as usize)
}

pub fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && r <= &one()
}

/// Serde adapters that write rationals as `"p/q"` strings.
pub mod serde_str {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_str(&format(r)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let v = Option::<String>::deserialize(d)?;
            v.map(|s| parse(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("5/11").unwrap(), ratio(5, 11));
        assert_eq!(parse("3").unwrap(), int(3));
        assert_eq!(parse("5.5").unwrap(), ratio(11, 2));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
    }

    #[test]
    fn format_canonical() {
        assert_eq!(format(&ratio(10, 22)), "5/11");
        assert_eq!(format(&int(4)), "4");
    }

    #[test]
    fn dyadic() {
        assert_eq!(dyadic_exponent(&ratio(7, 8)), Some(3));
        assert_eq!(dyadic_exponent(&int(1)), Some(0));
        assert_eq!(dyadic_exponent(&ratio(1, 3)), None);
        assert_eq!(dyadic_numerator(&ratio(3, 4), 3), Some(BigInt::from(6)));
        assert_eq!(dyadic_numerator(&ratio(1, 16), 3), None);
    }

    #[test]
    fn f64_of_huge_denominator() {
        let tiny = pow2_neg(5000);
        assert_eq!(to_f64(&(one() - tiny)), 1.0);
    }
}
