//! Ground fields: small prime fields and the rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rat::{parse_rat, Rat};

/// Which field a computation runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Prime(u32),
    Rational,
}

impl Default for Field {
    fn default() -> Self {
        Field::Prime(2)
    }
}

impl Field {
    pub const F2: Field = Field::Prime(2);

    /// Checked constructor; `p` must be a prime below 2^16.
    pub fn prime(p: u32) -> Result<Field> {
        let is_prime = p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0);
        if !is_prime || p >= 1 << 16 {
            return Err(Error::Parameter(format!("{p} is not a small prime")));
        }
        Ok(Field::Prime(p))
    }

    pub fn zero(self) -> FieldElem {
        match self {
            Field::Prime(p) => FieldElem::Prime { p, v: 0 },
            Field::Rational => FieldElem::Rational(Rat::zero()),
        }
    }

    pub fn one(self) -> FieldElem {
        self.from_i64(1)
    }

    pub fn from_i64(self, n: i64) -> FieldElem {
        match self {
            Field::Prime(p) => FieldElem::Prime { p, v: n.rem_euclid(p as i64) as u32 },
            Field::Rational => FieldElem::Rational(Rat::from_integer(BigInt::from(n))),
        }
    }

    /// Image of a rational; fails when the denominator vanishes mod p.
    pub fn from_rat(self, r: &Rat) -> Result<FieldElem> {
        match self {
            Field::Rational => Ok(FieldElem::Rational(r.clone())),
            Field::Prime(p) => {
                let pb = BigInt::from(p);
                let num = r.numer().mod_floor(&pb).to_i64().unwrap_or(0);
                let den = r.denom().mod_floor(&pb).to_i64().unwrap_or(0);
                if den == 0 {
                    return Err(Error::Parameter(format!("{r} has no image in F_{p}")));
                }
                Ok(self.from_i64(num).mul(&self.from_i64(den).inv()))
            }
        }
    }

    /// Parse a coefficient written as an integer or `p/q`.
    pub fn parse(self, s: &str) -> Result<FieldElem> {
        self.from_rat(&parse_rat(s)?)
    }

    /// Number of elements, `None` for the rationals.
    pub fn order(self) -> Option<u32> {
        match self {
            Field::Prime(p) => Some(p),
            Field::Rational => None,
        }
    }

    /// The name used in text formats: `f2`, `f3`, ..., `q`.
    pub fn tag(self) -> String {
        match self {
            Field::Prime(p) => format!("f{p}"),
            Field::Rational => "q".to_string(),
        }
    }

    pub fn from_tag(s: &str) -> Result<Field> {
        let s = s.trim();
        if s == "q" || s == "Q" {
            return Ok(Field::Rational);
        }
        let p = s
            .strip_prefix('f')
            .or_else(|| s.strip_prefix('F'))
            .and_then(|d| d.parse::<u32>().ok())
            .ok_or_else(|| Error::Parse { line: 0, col: 0, msg: format!("unknown field {s:?}") })?;
        Field::prime(p)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// An element of a [`Field`]; mixing fields in one operation panics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FieldElem {
    Prime { p: u32, v: u32 },
    Rational(Rat),
}

impl FieldElem {
    pub fn field(&self) -> Field {
        match self {
            FieldElem::Prime { p, .. } => Field::Prime(*p),
            FieldElem::Rational(_) => Field::Rational,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElem::Prime { v, .. } => *v == 0,
            FieldElem::Rational(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldElem::Prime { v, .. } => *v == 1,
            FieldElem::Rational(r) => r.is_one(),
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> FieldElem {
        assert!(!self.is_zero(), "inverse of zero");
        match self {
            FieldElem::Prime { p, v } => FieldElem::Prime { p: *p, v: pow_mod(*v, *p - 2, *p) },
            FieldElem::Rational(r) => FieldElem::Rational(r.recip()),
        }
    }

    pub fn div(&self, o: &FieldElem) -> FieldElem {
        self * &o.inv()
    }

    /// Rational representative: the value itself, or the residue in `0..p`.
    pub fn to_rat(&self) -> Rat {
        match self {
            FieldElem::Prime { v, .. } => Rat::from_integer(BigInt::from(*v)),
            FieldElem::Rational(r) => r.clone(),
        }
    }

    /// Signed short text: prime residues above p/2 print as negatives.
    pub fn to_text(&self) -> String {
        match self {
            FieldElem::Prime { p, v } if *p > 2 && *v > p / 2 => format!("-{}", p - v),
            FieldElem::Prime { v, .. } => v.to_string(),
            FieldElem::Rational(r) => r.to_string(),
        }
    }

    fn check(&self, o: &FieldElem) {
        assert_eq!(self.field(), o.field(), "field mismatch in arithmetic");
    }
}

fn pow_mod(b: u32, mut e: u32, p: u32) -> u32 {
    let (mut r, p64) = (1u64, p as u64);
    let mut b64 = b as u64 % p64;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b64 % p64;
        }
        b64 = b64 * b64 % p64;
        e >>= 1;
    }
    r as u32
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl Add for &FieldElem {
    type Output = FieldElem;
    fn add(self, o: &FieldElem) -> FieldElem {
        self.check(o);
        match (self, o) {
            (FieldElem::Prime { p, v }, FieldElem::Prime { v: w, .. }) => {
                FieldElem::Prime { p: *p, v: ((*v as u64 + *w as u64) % *p as u64) as u32 }
            }
            (FieldElem::Rational(a), FieldElem::Rational(b)) => FieldElem::Rational(a + b),
            _ => unreachable!(),
        }
    }
}

impl Sub for &FieldElem {
    type Output = FieldElem;
    fn sub(self, o: &FieldElem) -> FieldElem {
        self + &(-o)
    }
}

impl Neg for &FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        match self {
            FieldElem::Prime { p, v } => FieldElem::Prime { p: *p, v: (*p - *v) % *p },
            FieldElem::Rational(a) => FieldElem::Rational(-a),
        }
    }
}

impl Mul for &FieldElem {
    type Output = FieldElem;
    fn mul(self, o: &FieldElem) -> FieldElem {
        self.check(o);
        match (self, o) {
            (FieldElem::Prime { p, v }, FieldElem::Prime { v: w, .. }) => {
                FieldElem::Prime { p: *p, v: ((*v as u64 * *w as u64) % *p as u64) as u32 }
            }
            (FieldElem::Rational(a), FieldElem::Rational(b)) => FieldElem::Rational(a * b),
            _ => unreachable!(),
        }
    }
}

/// Every element of a finite field, in residue order.
pub fn elements(field: Field) -> Vec<FieldElem> {
    match field {
        Field::Prime(p) => (0..p).map(|v| FieldElem::Prime { p, v }).collect(),
        Field::Rational => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn any_field() -> impl Strategy<Value = Field> {
        prop_oneof![Just(Field::Prime(2)), Just(Field::Prime(3)), Just(Field::Prime(7)), Just(Field::Rational)]
    }

    #[test]
    fn tags() {
        for f in [Field::Prime(2), Field::Prime(3), Field::Rational] {
            assert_eq!(Field::from_tag(&f.tag()).unwrap(), f);
        }
        assert!(Field::from_tag("f4").is_err());
    }

    #[test]
    fn rational_images() {
        let f3 = Field::Prime(3);
        assert_eq!(f3.from_rat(&rat(1, 2)).unwrap(), f3.from_i64(2));
        assert!(f3.from_rat(&rat(1, 3)).is_err());
        assert_eq!(f3.from_i64(-1).to_text(), "-1");
    }

    proptest! {
        #[test]
        fn field_axioms(f in any_field(), a in -20i64..20, b in -20i64..20, c in -20i64..20) {
            let (a, b, c) = (f.from_i64(a), f.from_i64(b), f.from_i64(c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&a - &a).is_zero());
            if !a.is_zero() {
                prop_assert!((&a * &a.inv()).is_one());
            }
        }
    }
}
