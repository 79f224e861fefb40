//! Truncated Novikov scalars `Σ c_i T^{λ_i}` with rational exponents `λ_i ≥ 0`,
//! and valuation-pivot elimination of matrices over them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::rat::{int, Rat};

/// Default exponent cutoff.
pub fn default_precision() -> Rat {
    int(64)
}

/// A truncated series. Every exponent is `< precision`; the value is known
/// only modulo `T^precision`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovikovScalar {
    field: Field,
    terms: Vec<(FieldElem, Rat)>,
    precision: Rat,
}

impl NovikovScalar {
    pub fn zero(field: Field, precision: Rat) -> Self {
        NovikovScalar { field, terms: Vec::new(), precision }
    }

    /// `coef · T^exp`; an exponent at or above the precision cannot be represented.
    pub fn monomial(coef: FieldElem, exp: Rat, precision: Rat) -> Result<Self> {
        if exp.is_negative() {
            return Err(Error::Parameter(format!("negative exponent {exp}")));
        }
        if exp >= precision {
            return Err(Error::Precision(format!("exponent {exp} at or above precision {precision}")));
        }
        let field = coef.field();
        let terms = if coef.is_zero() { Vec::new() } else { vec![(coef, exp)] };
        Ok(NovikovScalar { field, terms, precision })
    }

    pub fn one(field: Field, precision: Rat) -> Self {
        Self::monomial(field.one(), Rat::zero(), precision).expect("precision must be positive")
    }

    /// `T^exp`.
    pub fn t_pow(field: Field, exp: Rat, precision: Rat) -> Result<Self> {
        Self::monomial(field.one(), exp, precision)
    }

    /// Build from arbitrary terms; combines equal exponents and drops those `≥ precision`.
    pub fn from_terms(field: Field, terms: Vec<(FieldElem, Rat)>, precision: Rat) -> Result<Self> {
        let mut acc: BTreeMap<Rat, FieldElem> = BTreeMap::new();
        for (c, e) in terms {
            if e.is_negative() {
                return Err(Error::Parameter(format!("negative exponent {e}")));
            }
            if e >= precision {
                return Err(Error::Precision(format!("exponent {e} at or above precision {precision}")));
            }
            let slot = acc.entry(e).or_insert_with(|| field.zero());
            *slot = &*slot + &c;
        }
        Ok(Self::from_map(field, acc, precision))
    }

    fn from_map(field: Field, acc: BTreeMap<Rat, FieldElem>, precision: Rat) -> Self {
        let terms = acc
            .into_iter()
            .filter(|(e, c)| !c.is_zero() && *e < precision)
            .map(|(e, c)| (c, e))
            .collect();
        NovikovScalar { field, terms, precision }
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn precision(&self) -> &Rat {
        &self.precision
    }
    pub fn terms(&self) -> &[(FieldElem, Rat)] {
        &self.terms
    }

    /// Zero modulo `T^precision`.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Least exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<&Rat> {
        self.terms.first().map(|(_, e)| e)
    }

    /// Valuation, or the precision for a (truncated) zero.
    pub fn valuation_or_precision(&self) -> Rat {
        self.valuation().cloned().unwrap_or_else(|| self.precision.clone())
    }

    pub fn neg(&self) -> Self {
        NovikovScalar {
            field: self.field,
            terms: self.terms.iter().map(|(c, e)| (-c, e.clone())).collect(),
            precision: self.precision.clone(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.field, o.field, "field mismatch in Novikov sum");
        let precision = self.precision.clone().min(o.precision.clone());
        let mut acc: BTreeMap<Rat, FieldElem> = BTreeMap::new();
        for (c, e) in self.terms.iter().chain(&o.terms) {
            let slot = acc.entry(e.clone()).or_insert_with(|| self.field.zero());
            *slot = &*slot + c;
        }
        Self::from_map(self.field, acc, precision)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Product; the result is known modulo `T^min(Px + v(y), Py + v(x))`.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.field, o.field, "field mismatch in Novikov product");
        let p1 = &self.precision + o.valuation_or_precision();
        let p2 = &o.precision + self.valuation_or_precision();
        let precision = p1.min(p2);
        let mut acc: BTreeMap<Rat, FieldElem> = BTreeMap::new();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                let e = x + y;
                if e < precision {
                    let slot = acc.entry(e).or_insert_with(|| self.field.zero());
                    *slot = &*slot + &(a * b);
                }
            }
        }
        Self::from_map(self.field, acc, precision)
    }

    pub fn scale(&self, k: &FieldElem) -> Self {
        let terms = if k.is_zero() {
            Vec::new()
        } else {
            self.terms.iter().map(|(c, e)| (c * k, e.clone())).collect()
        };
        NovikovScalar { field: self.field, terms, precision: self.precision.clone() }
    }

    /// Divide by `T^v`; requires `v` not to exceed the valuation.
    pub fn div_t(&self, v: &Rat) -> Result<Self> {
        if let Some(val) = self.valuation() {
            if val < v {
                return Err(Error::Parameter(format!("valuation {val} below divisor exponent {v}")));
            }
        }
        Ok(NovikovScalar {
            field: self.field,
            terms: self.terms.iter().map(|(c, e)| (c.clone(), e - v)).collect(),
            precision: &self.precision - v,
        })
    }

    /// Equality of the known parts: compares terms below the smaller precision.
    pub fn agrees_with(&self, o: &Self) -> bool {
        let p = self.precision.clone().min(o.precision.clone());
        let cut = |s: &Self| -> Vec<(FieldElem, Rat)> {
            s.terms.iter().filter(|(_, e)| *e < p).cloned().collect()
        };
        cut(self) == cut(o)
    }
}

impl fmt::Display for NovikovScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, e)| {
                if e.is_zero() {
                    c.to_text()
                } else {
                    format!("{}*T^{}", c.to_text(), e)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Outcome of diagonalizing a presentation matrix over the valuation ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elimination {
    /// Elementary exponents, one per pivot, ascending.
    pub exponents: Vec<Rat>,
    /// Generators left without any relation.
    pub free_rank: usize,
}

/// Valuation-pivot elimination of a `generators × relations` matrix.
///
/// Repeatedly takes an entry of least valuation `v`, writes it as `T^v·u`
/// with `u` a unit, and clears its row and column with the unit operations
/// `r_i ← u·r_i − (a_il/T^v)·r_k` (and likewise for columns). No inverse of a
/// series is ever needed.
pub fn eliminate(
    rows: usize,
    cols: usize,
    entries: &[NovikovScalar],
    precision: &Rat,
) -> Result<Elimination> {
    assert_eq!(entries.len(), rows * cols);
    let mut a: Vec<Vec<NovikovScalar>> =
        (0..rows).map(|r| entries[r * cols..(r + 1) * cols].to_vec()).collect();
    let mut live_rows: Vec<usize> = (0..rows).collect();
    let mut live_cols: Vec<usize> = (0..cols).collect();
    let mut exponents = Vec::new();
    loop {
        let mut best: Option<(Rat, usize, usize)> = None;
        for &r in &live_rows {
            for &c in &live_cols {
                if let Some(v) = a[r][c].valuation() {
                    if best.as_ref().map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v.clone(), r, c));
                    }
                }
            }
        }
        let Some((v, k, l)) = best else {
            // Remaining block is zero below its precision.
            for &r in &live_rows {
                for &c in &live_cols {
                    if a[r][c].precision() < precision {
                        return Err(Error::Precision(format!(
                            "cannot separate a free summand from T^{} torsion",
                            a[r][c].precision()
                        )));
                    }
                }
            }
            break;
        };
        for &r in &live_rows {
            for &c in &live_cols {
                if a[r][c].is_zero() && *a[r][c].precision() <= v {
                    return Err(Error::Precision(format!("entry known only below T^{}", a[r][c].precision())));
                }
            }
        }
        let u = a[k][l].div_t(&v)?;
        for &i in &live_rows {
            if i == k || a[i][l].is_zero() {
                continue;
            }
            let q = a[i][l].div_t(&v)?;
            for &c in &live_cols {
                a[i][c] = u.mul(&a[i][c]).sub(&q.mul(&a[k][c]));
            }
        }
        for &j in &live_cols {
            if j == l || a[k][j].is_zero() {
                continue;
            }
            let q = a[k][j].div_t(&v)?;
            for &r in &live_rows {
                a[r][j] = u.mul(&a[r][j]).sub(&q.mul(&a[r][l]));
            }
        }
        exponents.push(v);
        live_rows.retain(|&r| r != k);
        live_cols.retain(|&c| c != l);
    }
    exponents.sort();
    Ok(Elimination { exponents, free_rank: live_rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn scalar(f: Field, terms: &[(i64, Rat)], p: Rat) -> NovikovScalar {
        NovikovScalar::from_terms(f, terms.iter().map(|(c, e)| (f.from_i64(*c), e.clone())).collect(), p)
            .unwrap()
    }

    #[test]
    fn monomial_precision() {
        let f = Field::F2;
        assert!(matches!(NovikovScalar::t_pow(f, int(5), int(5)), Err(Error::Precision(_))));
        let t = NovikovScalar::t_pow(f, rat(1, 2), int(2)).unwrap();
        let t4 = t.mul(&t).mul(&t).mul(&t);
        assert_eq!(t4.valuation(), Some(&int(2)));
        let lossy = NovikovScalar::one(f, int(2)).add(&t);
        assert_eq!(lossy.mul(&NovikovScalar::zero(f, int(1))).precision(), &int(1));
        assert_eq!(t.mul(&t).valuation(), Some(&int(1)));
    }

    #[test]
    fn product_precision_tracks_valuation() {
        let f = Field::Rational;
        let x = scalar(f, &[(1, rat(1, 3))], int(4));
        let y = scalar(f, &[(2, int(1))], int(3));
        let z = x.mul(&y);
        assert_eq!(z.precision(), &rat(10, 3));
        assert_eq!(z.valuation(), Some(&rat(4, 3)));
    }

    #[test]
    fn diagonal_elimination() {
        let f = Field::F2;
        let p = int(8);
        let z = NovikovScalar::zero(f, p.clone());
        let a = NovikovScalar::t_pow(f, rat(1, 5), p.clone()).unwrap();
        let b = NovikovScalar::t_pow(f, rat(9, 10), p.clone()).unwrap();
        let e = eliminate(2, 2, &[a, z.clone(), z, b], &p).unwrap();
        assert_eq!(e.exponents, vec![rat(1, 5), rat(9, 10)]);
        assert_eq!(e.free_rank, 0);
    }

    #[test]
    fn rank_deficient_has_free_part() {
        let f = Field::F2;
        let p = int(8);
        let t = NovikovScalar::t_pow(f, int(1), p.clone()).unwrap();
        let e = eliminate(2, 1, &[t.clone(), t], &p).unwrap();
        assert_eq!(e.exponents, vec![int(1)]);
        assert_eq!(e.free_rank, 1);
    }

    fn arb_scalar(f: Field) -> impl Strategy<Value = NovikovScalar> {
        proptest::collection::vec((1i64..3, 0i64..8), 0..4).prop_map(move |ts| {
            let ts: Vec<(i64, Rat)> = ts.into_iter().map(|(c, e)| (c, rat(e, 4))).collect();
            scalar(f, &ts, int(2))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn mul_assoc_comm(x in arb_scalar(Field::Prime(3)), y in arb_scalar(Field::Prime(3)), z in arb_scalar(Field::Prime(3))) {
            prop_assert!(x.mul(&y).agrees_with(&y.mul(&x)));
            prop_assert!(x.mul(&y).mul(&z).agrees_with(&x.mul(&y.mul(&z))));
        }

        #[test]
        fn valuation_additive(x in arb_scalar(Field::Prime(3)), y in arb_scalar(Field::Prime(3))) {
            let xy = x.mul(&y);
            if let (Some(a), Some(b)) = (x.valuation(), y.valuation()) {
                if a + b < *xy.precision() {
                    prop_assert_eq!(xy.valuation().cloned(), Some(a + b));
                }
            }
        }
    }
}
