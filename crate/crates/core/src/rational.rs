//! Exact rational scalars and their string forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// The scalar field of every computation in this crate.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Serialized form: always `p/q` in lowest terms with `q > 0`.
pub fn to_pq(x: &Q) -> String {
    // BigRational is kept reduced with a positive denominator.
    format!("{}/{}", x.numer(), x.denom())
}

/// Compact human form: `p` for integers, `p/q` otherwise.
pub fn to_short(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        to_pq(x)
    }
}

/// Accepts `p/q` or a bare integer `p`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(num, den))
}

/// Term prefix used by the text renderers: `+ 1/2 * ` / `- 3 * `.
pub(crate) fn signed_prefix(c: &Q, first: bool) -> String {
    let mag = to_short(&c.abs());
    match (first, c.is_negative()) {
        (true, false) => format!("{mag} * "),
        (true, true) => format!("-{mag} * "),
        (false, false) => format!(" + {mag} * "),
        (false, true) => format!(" - {mag} * "),
    }
}

pub mod serde_pq {
    //! Serde adapter writing rationals as `p/q` strings.
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&to_pq(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pq_is_lowest_terms_positive_denominator() {
        assert_eq!(to_pq(&qf(2, -4)), "-1/2");
        assert_eq!(to_pq(&q(3)), "3/1");
        assert_eq!(to_short(&q(3)), "3");
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["0/1", "-7/3", "12/1"] {
            assert_eq!(to_pq(&parse_q(s).unwrap()), s);
        }
        assert_eq!(parse_q("4").unwrap(), q(4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }
}
