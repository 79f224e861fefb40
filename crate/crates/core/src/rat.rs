//! Exact rationals and their two-point extension by ±∞.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Exact rational in lowest terms with positive denominator.
pub type Rat = BigRational;

/// Build `n/d`; panics when `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer as a rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parse `p`, `p/q` or `-p/q`.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    let bad = || Error::Parse {
        line: 0,
        col: 0,
        msg: format!("not a rational: {s:?}"),
    };
    if s.is_empty() {
        return Err(bad());
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p).map_err(|_| bad())?;
            let q = BigInt::from_str(q).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
        None => Ok(Rat::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Lossy conversion for reporting and quadrature only.
pub fn to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Absolute value.
pub fn abs(r: &Rat) -> Rat {
    r.abs()
}

/// A rational or one of the two infinities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Fin(Rat::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Fin(_))
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Fin(r) => Some(r),
            _ => None,
        }
    }

    /// Add a finite rational; infinities absorb it.
    pub fn add_rat(&self, c: &Rat) -> ExtRat {
        match self {
            ExtRat::Fin(r) => ExtRat::Fin(r + c),
            other => other.clone(),
        }
    }

    pub fn sub_rat(&self, c: &Rat) -> ExtRat {
        self.add_rat(&-c)
    }

    /// `self - other`, with `∞ - finite = ∞`; `None` for `∞ - ∞` or `-∞ - (-∞)`.
    pub fn minus(&self, other: &ExtRat) -> Option<ExtRat> {
        use ExtRat::*;
        match (self, other) {
            (Fin(a), Fin(b)) => Some(Fin(a - b)),
            (PosInf, Fin(_)) | (PosInf, NegInf) | (Fin(_), NegInf) => Some(PosInf),
            (NegInf, Fin(_)) | (NegInf, PosInf) | (Fin(_), PosInf) => Some(NegInf),
            _ => None,
        }
    }

    /// Multiply by a positive rational.
    pub fn scale(&self, k: &Rat) -> ExtRat {
        debug_assert!(k.is_positive());
        match self {
            ExtRat::Fin(r) => ExtRat::Fin(r * k),
            other => other.clone(),
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Fin(r)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtRat::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::NegInf => write!(f, "-inf"),
            ExtRat::PosInf => write!(f, "inf"),
            ExtRat::Fin(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for ExtRat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "inf" | "+inf" => Ok(ExtRat::PosInf),
            "-inf" => Ok(ExtRat::NegInf),
            other => parse_rat(other).map(ExtRat::Fin),
        }
    }
}

/// Least common denominator of a list of rationals.
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    use num_integer::Integer;
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3").unwrap(), int(3));
        assert_eq!(parse_rat("-6/4").unwrap(), rat(-3, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert_eq!("inf".parse::<ExtRat>().unwrap(), ExtRat::PosInf);
        assert_eq!("-inf".parse::<ExtRat>().unwrap(), ExtRat::NegInf);
    }

    #[test]
    fn display_round_trip() {
        for s in ["0", "2/3", "-5/7", "inf", "-inf", "12"] {
            assert_eq!(s.parse::<ExtRat>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn order() {
        let v = [ExtRat::NegInf, ExtRat::Fin(int(-3)), ExtRat::Fin(rat(1, 2)), ExtRat::PosInf];
        for i in 0..v.len() {
            for j in 0..v.len() {
                assert_eq!(v[i].cmp(&v[j]), i.cmp(&j));
            }
        }
    }

    #[test]
    fn minus_rules() {
        assert_eq!(ExtRat::PosInf.minus(&ExtRat::Fin(int(2))), Some(ExtRat::PosInf));
        assert_eq!(ExtRat::Fin(int(2)).minus(&ExtRat::NegInf), Some(ExtRat::PosInf));
        assert_eq!(ExtRat::PosInf.minus(&ExtRat::PosInf), None);
    }
}
