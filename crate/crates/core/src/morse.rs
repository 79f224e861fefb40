//! Filtered chain complexes from Morse and Morse–Novikov data: sublevel and
//! quotient persistence, the max-min estimate on flow graphs, and the circle
//! one-form model.
//!
//! Filtration values are those of `-f`: a generator at value `ℓ` enters the
//! sublevel complex `C_{≤c}` once `c ≥ ℓ`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::barcode::{content_lines, expect_header, key_values, parse_err};
use crate::energy::TorsionExponent;
use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::linalg::Matrix;
use crate::novikov::{eliminate, NovikovScalar};
use crate::rat::{parse_rat, ExtRat, Rat};
use crate::{Bar, GradedBarcode};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub id: String,
    pub degree: i32,
    pub value: Rat,
}

/// Coefficient ring of a filtered complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coefficients {
    Field(Field),
    Novikov { field: Field, precision: Rat },
}

impl Coefficients {
    pub fn field(&self) -> Field {
        match self {
            Coefficients::Field(f) | Coefficients::Novikov { field: f, .. } => *f,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coef {
    Field(FieldElem),
    Novikov(NovikovScalar),
}

impl Coef {
    fn is_zero(&self) -> bool {
        match self {
            Coef::Field(x) => x.is_zero(),
            Coef::Novikov(x) => x.is_zero(),
        }
    }
}

/// A finitely generated filtered complex. `entries` holds `(h, g, a)` for
/// `∂g ∋ a·h`; each pair `(h, g)` appears at most once.
#[derive(Clone, Debug)]
pub struct FilteredComplex {
    coefficients: Coefficients,
    generators: Vec<Generator>,
    entries: Vec<(usize, usize, Coef)>,
}

impl FilteredComplex {
    /// Field coefficients. The boundary may not raise the filtration value.
    pub fn new(field: Field, generators: Vec<Generator>, entries: Vec<(usize, usize, FieldElem)>) -> Result<Self> {
        let entries = entries.into_iter().map(|(h, g, a)| (h, g, Coef::Field(a))).collect();
        Self::build(Coefficients::Field(field), generators, entries)
    }

    /// Novikov coefficients. An entry `a` at `(h, g)` needs valuation `≥ ℓ(h) − ℓ(g)`.
    pub fn new_novikov(
        field: Field,
        precision: Rat,
        generators: Vec<Generator>,
        entries: Vec<(usize, usize, NovikovScalar)>,
    ) -> Result<Self> {
        if !precision.is_positive() {
            return Err(Error::Parameter(format!("precision {precision} must be positive")));
        }
        let entries = entries.into_iter().map(|(h, g, a)| (h, g, Coef::Novikov(a))).collect();
        Self::build(Coefficients::Novikov { field, precision }, generators, entries)
    }

    fn build(coefficients: Coefficients, generators: Vec<Generator>, entries: Vec<(usize, usize, Coef)>) -> Result<Self> {
        let n = generators.len();
        let mut seen = HashMap::new();
        for (i, g) in generators.iter().enumerate() {
            if g.id.is_empty() || g.id.contains(|c: char| c.is_whitespace() || c == '*' || c == '=') {
                return Err(Error::Parameter(format!("bad generator id {:?}", g.id)));
            }
            if seen.insert(g.id.clone(), i).is_some() {
                return Err(Error::Structure(format!("duplicate generator id {}", g.id)));
            }
        }
        let field = coefficients.field();
        let mut merged: BTreeMap<(usize, usize), Coef> = BTreeMap::new();
        for (h, g, a) in entries {
            if h >= n || g >= n {
                return Err(Error::Structure("boundary entry refers to a missing generator".into()));
            }
            let (gh, gg) = (&generators[h], &generators[g]);
            if gh.degree != gg.degree - 1 {
                return Err(Error::Structure(format!("∂{} has a term {} outside degree {}", gg.id, gh.id, gg.degree - 1)));
            }
            let a = match (a, &coefficients) {
                (Coef::Field(x), Coefficients::Field(_)) if x.field() == field => Coef::Field(x),
                (Coef::Novikov(x), Coefficients::Novikov { .. }) if x.field() == field => Coef::Novikov(x),
                _ => return Err(Error::FieldMismatch(format!("coefficient of {} in ∂{}", gh.id, gg.id))),
            };
            let sum = match (merged.remove(&(h, g)), a) {
                (None, a) => a,
                (Some(Coef::Field(x)), Coef::Field(y)) => Coef::Field(&x + &y),
                (Some(Coef::Novikov(x)), Coef::Novikov(y)) => Coef::Novikov(x.add(&y)),
                _ => unreachable!(),
            };
            merged.insert((h, g), sum);
        }
        let entries: Vec<(usize, usize, Coef)> =
            merged.into_iter().filter(|(_, a)| !a.is_zero()).map(|((h, g), a)| (h, g, a)).collect();
        for (h, g, a) in &entries {
            let (gh, gg) = (&generators[*h], &generators[*g]);
            let ok = match a {
                Coef::Field(_) => gh.value <= gg.value,
                Coef::Novikov(x) => x.valuation().is_some_and(|v| *v >= &gh.value - &gg.value),
            };
            if !ok {
                return Err(Error::Structure(format!("∂{} raises the filtration through {}", gg.id, gh.id)));
            }
        }
        let c = FilteredComplex { coefficients, generators, entries };
        c.check_square_zero()?;
        Ok(c)
    }

    fn check_square_zero(&self) -> Result<()> {
        let mut cols: Vec<Vec<(usize, &Coef)>> = vec![Vec::new(); self.generators.len()];
        for (h, g, a) in &self.entries {
            cols[*g].push((*h, a));
        }
        for (g, col) in cols.iter().enumerate() {
            let mut acc: BTreeMap<usize, Coef> = BTreeMap::new();
            for (h, a) in col {
                for (k, b) in &cols[*h] {
                    let term = match (a, b) {
                        (Coef::Field(x), Coef::Field(y)) => Coef::Field(x * y),
                        (Coef::Novikov(x), Coef::Novikov(y)) => Coef::Novikov(x.mul(y)),
                        _ => unreachable!(),
                    };
                    let sum = match (acc.remove(k), term) {
                        (None, t) => t,
                        (Some(Coef::Field(x)), Coef::Field(y)) => Coef::Field(&x + &y),
                        (Some(Coef::Novikov(x)), Coef::Novikov(y)) => Coef::Novikov(x.add(&y)),
                        _ => unreachable!(),
                    };
                    acc.insert(*k, sum);
                }
            }
            if let Some((k, _)) = acc.iter().find(|(_, v)| !v.is_zero()) {
                return Err(Error::Structure(format!(
                    "∂∂{} ≠ 0 (coefficient of {})",
                    self.generators[g].id, self.generators[*k].id
                )));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn entries(&self) -> &[(usize, usize, Coef)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    fn field_only(&self) -> Result<Field> {
        match self.coefficients {
            Coefficients::Field(f) => Ok(f),
            Coefficients::Novikov { .. } => {
                Err(Error::Unsupported("persistence over Novikov scalars; use the torsion exponent".into()))
            }
        }
    }

    /// Boundary restricted to the generators picked by `keep`, as a
    /// `(degree k−1) × (degree k)` matrix over the field.
    fn block(&self, k: i32, keep: &dyn Fn(&Generator) -> bool) -> Matrix {
        let field = self.coefficients.field();
        let idx = |d: i32| -> Vec<usize> {
            (0..self.len()).filter(|&i| self.generators[i].degree == d && keep(&self.generators[i])).collect()
        };
        let (rows, cols) = (idx(k - 1), idx(k));
        let mut m = Matrix::zeros(field, rows.len(), cols.len());
        for (h, g, a) in &self.entries {
            if let (Some(r), Some(c), Coef::Field(x)) =
                (rows.iter().position(|i| i == h), cols.iter().position(|i| i == g), a)
            {
                m[(r, c)] = x.clone();
            }
        }
        m
    }

    fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.generators.iter().map(|g| g.degree).collect();
        d.sort();
        d.dedup();
        d
    }

    /// `dim H_k` of the subquotient spanned by the generators picked by `keep`.
    fn homology_rank(&self, k: i32, keep: &dyn Fn(&Generator) -> bool) -> usize {
        let n = self.generators.iter().filter(|g| g.degree == k && keep(g)).count();
        n - self.block(k, keep).rank() - self.block(k + 1, keep).rank()
    }

    /// `dim H_k(C_{≤c})` by direct rank computation.
    pub fn sublevel_rank(&self, k: i32, c: &Rat) -> Result<usize> {
        self.field_only()?;
        Ok(self.homology_rank(k, &|g| g.value <= *c))
    }

    /// `dim H_k(C/C_{≤c})` by direct rank computation.
    pub fn quotient_rank(&self, k: i32, c: &Rat) -> Result<usize> {
        self.field_only()?;
        Ok(self.homology_rank(k, &|g| g.value > *c))
    }

    /// `dim H_k(C)`.
    pub fn total_rank(&self, k: i32) -> Result<usize> {
        self.field_only()?;
        Ok(self.homology_rank(k, &|_| true))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("filtered v1\n");
        match &self.coefficients {
            Coefficients::Field(f) => writeln!(s, "field {}", f.tag()).unwrap(),
            Coefficients::Novikov { field, precision } => {
                writeln!(s, "novikov precision={precision} field={}", field.tag()).unwrap()
            }
        }
        for g in &self.generators {
            writeln!(s, "gen id={} degree={} value={}", g.id, g.degree, g.value).unwrap();
        }
        for (gi, g) in self.generators.iter().enumerate() {
            let mut terms = Vec::new();
            for (h, _, a) in self.entries.iter().filter(|e| e.1 == gi) {
                let id = &self.generators[*h].id;
                match a {
                    Coef::Field(x) => terms.push(format!("{}*{id}", x.to_text())),
                    Coef::Novikov(x) => {
                        for (c, e) in x.terms() {
                            terms.push(format!("{}*T^{e}*{id}", c.to_text()));
                        }
                    }
                }
            }
            if !terms.is_empty() {
                writeln!(s, "bnd {} = {}", g.id, terms.join(" + ")).unwrap();
            }
        }
        s
    }

    /// Parse the `filtered v1` format.
    pub fn from_text(text: &str) -> Result<FilteredComplex> {
        let mut lines = content_lines(text);
        expect_header(&mut lines, "filtered")?;
        let coefficients = match lines.next() {
            Some((ln, l)) => {
                let mut t = l.split_whitespace();
                match t.next() {
                    Some("field") => {
                        let tag = t.next().ok_or_else(|| parse_err(ln, 7, "missing field tag".into()))?;
                        Coefficients::Field(Field::from_tag(tag).map_err(|e| parse_err(ln, 7, e.to_string()))?)
                    }
                    Some("novikov") => {
                        let kv = key_values(ln, t)?;
                        let mut precision = None;
                        let mut field = Field::F2;
                        for (k, v, col) in kv {
                            match k.as_str() {
                                "precision" => {
                                    precision = Some(parse_rat(&v).map_err(|e| parse_err(ln, col, e.to_string()))?)
                                }
                                "field" => field = Field::from_tag(&v).map_err(|e| parse_err(ln, col, e.to_string()))?,
                                _ => return Err(parse_err(ln, col, format!("unknown key {k:?}"))),
                            }
                        }
                        let precision = precision.ok_or_else(|| parse_err(ln, 9, "missing `precision=`".into()))?;
                        Coefficients::Novikov { field, precision }
                    }
                    _ => return Err(parse_err(ln, 1, format!("expected `field` or `novikov`, found {l:?}"))),
                }
            }
            None => return Err(parse_err(2, 1, "missing coefficient line".into())),
        };
        let field = coefficients.field();
        let mut generators = Vec::new();
        let mut raw_bnd = Vec::new();
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("gen") => {
                    let kv = key_values(ln, toks)?;
                    let get = |k: &str| {
                        kv.iter()
                            .find(|(key, _, _)| key == k)
                            .ok_or_else(|| parse_err(ln, 1, format!("missing `{k}=`")))
                    };
                    let (_, id, _) = get("id")?;
                    let (_, d, dcol) = get("degree")?;
                    let degree: i32 = d.parse().map_err(|_| parse_err(ln, *dcol, format!("bad degree {d:?}")))?;
                    let (_, v, vcol) = get("value")?;
                    let value = parse_rat(v).map_err(|e| parse_err(ln, *vcol, e.to_string()))?;
                    generators.push(Generator { id: id.clone(), degree, value });
                }
                Some("bnd") => raw_bnd.push((ln, toks.map(str::to_string).collect::<Vec<_>>())),
                _ => return Err(parse_err(ln, 1, format!("expected `gen` or `bnd`, found {line:?}"))),
            }
        }
        let index: HashMap<&str, usize> = generators.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect();
        let lookup = |ln: usize, id: &str| {
            index.get(id).copied().ok_or_else(|| parse_err(ln, 1, format!("unknown generator {id:?}")))
        };
        let mut field_entries = Vec::new();
        let mut nov_entries = Vec::new();
        for (ln, toks) in raw_bnd {
            let (Some(target), Some("=")) = (toks.first(), toks.get(1).map(String::as_str)) else {
                return Err(parse_err(ln, 5, "expected `bnd <id> = ...`".into()));
            };
            let g = lookup(ln, target)?;
            let rest = &toks[2..];
            let mut sign_neg = false;
            let mut expect_term = true;
            for t in rest {
                if !expect_term {
                    sign_neg = match t.as_str() {
                        "+" => false,
                        "-" => true,
                        _ => return Err(parse_err(ln, 1, format!("expected `+` or `-`, found {t:?}"))),
                    };
                    expect_term = true;
                    continue;
                }
                expect_term = false;
                if t == "0" && rest.len() == 1 {
                    break;
                }
                let (coef, exp, id) = parse_term(ln, t, field)?;
                let h = lookup(ln, id)?;
                let coef = if sign_neg { -&coef } else { coef };
                match &coefficients {
                    Coefficients::Field(_) => {
                        if exp.is_some() {
                            return Err(parse_err(ln, 1, "T^ powers need Novikov coefficients".into()));
                        }
                        field_entries.push((h, g, coef));
                    }
                    Coefficients::Novikov { precision, .. } => {
                        let e = exp.unwrap_or_else(Rat::zero);
                        let x = NovikovScalar::monomial(coef, e, precision.clone()).map_err(|e| parse_err(ln, 1, e.to_string()))?;
                        nov_entries.push((h, g, x));
                    }
                }
            }
            if expect_term && !rest.is_empty() {
                return Err(parse_err(ln, 1, "dangling sign".into()));
            }
        }
        match coefficients {
            Coefficients::Field(f) => FilteredComplex::new(f, generators, field_entries),
            Coefficients::Novikov { field, precision } => {
                FilteredComplex::new_novikov(field, precision, generators, nov_entries)
            }
        }
    }
}

/// `[<coef>*][T^<exp>*]<id>`, with a leading `-` allowed.
fn parse_term(ln: usize, t: &str, field: Field) -> Result<(FieldElem, Option<Rat>, &str)> {
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let parts: Vec<&str> = body.split('*').collect();
    let (id, factors) = parts.split_last().ok_or_else(|| parse_err(ln, 1, "empty term".into()))?;
    let mut coef = field.one();
    let mut exp = None;
    for f in factors {
        if let Some(e) = f.strip_prefix("T^") {
            exp = Some(parse_rat(e).map_err(|e| parse_err(ln, 1, e.to_string()))?);
        } else {
            coef = &coef * &field.parse(f).map_err(|e| parse_err(ln, 1, e.to_string()))?;
        }
    }
    if neg {
        coef = -&coef;
    }
    Ok((coef, exp, id))
}

/// Column reduction of sparse columns given in filtration order; returns the
/// pivot row (lowest nonzero) of each reduced column.
fn reduce(field: Field, mut cols: Vec<BTreeMap<usize, FieldElem>>) -> Vec<Option<usize>> {
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut low = vec![None; cols.len()];
    for j in 0..cols.len() {
        while let Some((&l, v)) = cols[j].iter().next_back() {
            let Some(&i) = owner.get(&l) else { break };
            let f = v.div(&cols[i][&l]);
            let pivot_col = cols[i].clone();
            for (r, x) in pivot_col {
                let y = cols[j].get(&r).cloned().unwrap_or_else(|| field.zero());
                let z = &y - &(&f * &x);
                if z.is_zero() {
                    cols[j].remove(&r);
                } else {
                    cols[j].insert(r, z);
                }
            }
        }
        if let Some((&l, _)) = cols[j].iter().next_back() {
            owner.insert(l, j);
            low[j] = Some(l);
        }
    }
    low
}

/// Generators in sublevel order: value, then degree, then input position.
fn sublevel_order(c: &FilteredComplex) -> Vec<usize> {
    let mut ord: Vec<usize> = (0..c.len()).collect();
    ord.sort_by(|&a, &b| {
        let (x, y) = (&c.generators[a], &c.generators[b]);
        (&x.value, x.degree, a).cmp(&(&y.value, y.degree, b))
    });
    ord
}

/// Barcode of `c ↦ H_*(C_{≤c})` by the standard column reduction.
pub fn sublevel_persistence(c: &FilteredComplex) -> Result<GradedBarcode> {
    let field = c.field_only()?;
    let ord = sublevel_order(c);
    let mut pos = vec![0; c.len()];
    for (p, &i) in ord.iter().enumerate() {
        pos[i] = p;
    }
    let mut cols = vec![BTreeMap::new(); c.len()];
    for (h, g, a) in &c.entries {
        if let Coef::Field(x) = a {
            cols[pos[*g]].insert(pos[*h], x.clone());
        }
    }
    let low = reduce(field, cols);
    let mut killed = vec![false; c.len()];
    let mut bars = Vec::new();
    for (j, l) in low.iter().enumerate() {
        if let Some(i) = *l {
            killed[i] = true;
            let (h, g) = (&c.generators[ord[i]], &c.generators[ord[j]]);
            if h.value < g.value {
                bars.push(Bar::new(h.degree, ExtRat::Fin(h.value.clone()), ExtRat::Fin(g.value.clone()))?);
            }
        }
    }
    for j in 0..c.len() {
        if low[j].is_none() && !killed[j] {
            let g = &c.generators[ord[j]];
            bars.push(Bar::new(g.degree, ExtRat::Fin(g.value.clone()), ExtRat::PosInf)?);
        }
    }
    Ok(GradedBarcode::new(bars).into_sorted())
}

/// Barcode of `c ↦ H_*(C/C_{≤c})`, from the coboundary reduced in reverse
/// filtration order. A pair `(h, g)` with `∂g ∋ h` gives `[ℓ(h), ℓ(g))` in
/// degree `deg g`; an essential generator `g` gives `[−∞, ℓ(g))`.
pub fn quotient_persistence(c: &FilteredComplex) -> Result<GradedBarcode> {
    let field = c.field_only()?;
    let mut ord = sublevel_order(c);
    ord.reverse();
    let mut pos = vec![0; c.len()];
    for (p, &i) in ord.iter().enumerate() {
        pos[i] = p;
    }
    // coboundary column of h has entries at every g with ∂g ∋ h
    let mut cols = vec![BTreeMap::new(); c.len()];
    for (h, g, a) in &c.entries {
        if let Coef::Field(x) = a {
            cols[pos[*h]].insert(pos[*g], x.clone());
        }
    }
    let low = reduce(field, cols);
    let mut killed = vec![false; c.len()];
    let mut bars = Vec::new();
    for (j, l) in low.iter().enumerate() {
        if let Some(i) = *l {
            killed[i] = true;
            let (h, g) = (&c.generators[ord[j]], &c.generators[ord[i]]);
            if h.value < g.value {
                bars.push(Bar::new(g.degree, ExtRat::Fin(h.value.clone()), ExtRat::Fin(g.value.clone()))?);
            }
        }
    }
    for j in 0..c.len() {
        if low[j].is_none() && !killed[j] {
            let g = &c.generators[ord[j]];
            bars.push(Bar::new(g.degree, ExtRat::NegInf, ExtRat::Fin(g.value.clone()))?);
        }
    }
    Ok(GradedBarcode::new(bars).into_sorted())
}

/// Persistence of many complexes at once.
pub fn persistence_batch(cs: &[FilteredComplex], quotient: bool) -> Vec<Result<GradedBarcode>> {
    cs.par_iter()
        .map(|c| if quotient { quotient_persistence(c) } else { sublevel_persistence(c) })
        .collect()
}

/// Longest concise bar of a Novikov complex.
///
/// Each generator is renormalized to filtration level 0, which multiplies the
/// entry at `(h, g)` by `T^{ℓ(g) − ℓ(h)}`. The finite bar lengths are then the
/// elementary exponents of the boundary blocks; homology left over after all
/// pivots is free and makes the exponent infinite.
pub fn novikov_torsion(c: &FilteredComplex) -> Result<TorsionExponent> {
    let Coefficients::Novikov { field, precision } = &c.coefficients else {
        return Err(Error::Unsupported("torsion exponent needs Novikov coefficients".into()));
    };
    let degrees = c.degrees();
    let mut pivots: BTreeMap<i32, usize> = BTreeMap::new();
    let mut longest: Option<Rat> = None;
    for &k in &degrees {
        let rows: Vec<usize> = (0..c.len()).filter(|&i| c.generators[i].degree == k - 1).collect();
        let cols: Vec<usize> = (0..c.len()).filter(|&i| c.generators[i].degree == k).collect();
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let mut m = vec![NovikovScalar::zero(*field, precision.clone()); rows.len() * cols.len()];
        for (h, g, a) in &c.entries {
            let (Some(r), Some(s), Coef::Novikov(x)) =
                (rows.iter().position(|i| i == h), cols.iter().position(|i| i == g), a)
            else {
                continue;
            };
            let shift = &c.generators[*g].value - &c.generators[*h].value;
            let terms = x.terms().iter().map(|(co, e)| (co.clone(), e + &shift)).collect();
            m[r * cols.len() + s] = NovikovScalar::from_terms(*field, terms, precision.clone())?;
        }
        let e = eliminate(rows.len(), cols.len(), &m, precision)?;
        pivots.insert(k, e.exponents.len());
        if let Some(x) = e.exponents.last() {
            if longest.as_ref().map_or(true, |l| x > l) {
                longest = Some(x.clone());
            }
        }
    }
    let free_rank: usize = degrees
        .iter()
        .map(|&k| {
            let n = c.generators.iter().filter(|g| g.degree == k).count();
            n - pivots.get(&k).copied().unwrap_or(0) - pivots.get(&(k + 1)).copied().unwrap_or(0)
        })
        .sum();
    let value = if free_rank > 0 {
        ExtRat::PosInf
    } else {
        longest.map_or_else(ExtRat::zero, ExtRat::Fin)
    };
    Ok(TorsionExponent { value, free_rank })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalPoint {
    pub id: String,
    pub index: i32,
    pub value: Rat,
}

/// Critical points with directed flow connections `(from, to)`.
#[derive(Clone, Debug)]
pub struct MorseGraph {
    points: Vec<CriticalPoint>,
    flows: Vec<(usize, usize)>,
}

impl MorseGraph {
    pub fn new(points: Vec<CriticalPoint>, flows: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            if seen.insert(p.id.clone(), i).is_some() {
                return Err(Error::Structure(format!("duplicate critical point {}", p.id)));
            }
        }
        for &(a, b) in &flows {
            let (Some(p), Some(q)) = (points.get(a), points.get(b)) else {
                return Err(Error::Structure("flow refers to a missing critical point".into()));
            };
            if (p.index - q.index).abs() != 1 {
                return Err(Error::Structure(format!(
                    "flow {} -> {} joins indices {} and {}",
                    p.id, q.id, p.index, q.index
                )));
            }
        }
        Ok(MorseGraph { points, flows })
    }

    pub fn points(&self) -> &[CriticalPoint] {
        &self.points
    }

    pub fn flows(&self) -> &[(usize, usize)] {
        &self.flows
    }

    /// Add `k` to every critical value.
    pub fn shifted(&self, k: &Rat) -> MorseGraph {
        let points = self
            .points
            .iter()
            .map(|p| CriticalPoint { value: &p.value + k, ..p.clone() })
            .collect();
        MorseGraph { points, flows: self.flows.clone() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("morsegraph v1\n");
        for p in &self.points {
            writeln!(s, "crit id={} index={} value={}", p.id, p.index, p.value).unwrap();
        }
        for &(a, b) in &self.flows {
            writeln!(s, "flow {} {}", self.points[a].id, self.points[b].id).unwrap();
        }
        s
    }

    /// Parse the `morsegraph v1` format.
    pub fn from_text(text: &str) -> Result<MorseGraph> {
        let mut lines = content_lines(text);
        expect_header(&mut lines, "morsegraph")?;
        let mut points = Vec::new();
        let mut raw = Vec::new();
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            match toks.next() {
                Some("crit") => {
                    let kv = key_values(ln, toks)?;
                    let get = |k: &str| {
                        kv.iter()
                            .find(|(key, _, _)| key == k)
                            .ok_or_else(|| parse_err(ln, 1, format!("missing `{k}=`")))
                    };
                    let (_, id, _) = get("id")?;
                    let (_, i, icol) = get("index")?;
                    let index: i32 = i.parse().map_err(|_| parse_err(ln, *icol, format!("bad index {i:?}")))?;
                    let (_, v, vcol) = get("value")?;
                    let value = parse_rat(v).map_err(|e| parse_err(ln, *vcol, e.to_string()))?;
                    points.push(CriticalPoint { id: id.clone(), index, value });
                }
                Some("flow") => {
                    let ends: Vec<&str> = toks.collect();
                    if ends.len() != 2 {
                        return Err(parse_err(ln, 6, "expected `flow <from> <to>`".into()));
                    }
                    raw.push((ln, ends[0].to_string(), ends[1].to_string()));
                }
                _ => return Err(parse_err(ln, 1, format!("expected `crit` or `flow`, found {line:?}"))),
            }
        }
        let find = |ln: usize, id: &str| {
            points
                .iter()
                .position(|p| p.id == id)
                .ok_or_else(|| parse_err(ln, 6, format!("unknown critical point {id:?}")))
        };
        let flows = raw.iter().map(|(ln, a, b)| Ok((find(*ln, a)?, find(*ln, b)?))).collect::<Result<Vec<_>>>()?;
        MorseGraph::new(points, flows)
    }
}

/// `max_p min_q |f(p) − f(q)|`, where `p` runs over flow sources and `q` over
/// the targets of flows leaving `p`.
pub fn morse_energy_estimate(g: &MorseGraph) -> Result<Rat> {
    let mut best: BTreeMap<usize, Rat> = BTreeMap::new();
    for &(a, b) in &g.flows {
        let d = (&g.points[a].value - &g.points[b].value).abs();
        best.entry(a).and_modify(|m| if d < *m { *m = d.clone() }).or_insert(d);
    }
    best.into_values()
        .max()
        .ok_or_else(|| Error::Undefined("no connected pair of critical points".into()))
}

fn check_areas(a_plus: &Rat, a_minus: &Rat) -> Result<()> {
    if !a_plus.is_positive() || !a_minus.is_positive() {
        return Err(Error::Parameter(format!("areas must be positive, got {a_plus} and {a_minus}")));
    }
    Ok(())
}

/// Two-critical-point model of a one-form on the circle whose graph encloses
/// areas `A±` with the zero section. Returns the Novikov complex and the
/// expected energy `min(A+, A−)`.
///
/// Both generators sit at level 0 and `∂q = (T^{A+} − T^{A−}) p`: the two
/// flow lines leaving `q` reach `p` and its deck translate. With `A+ = A−`
/// the form is exact, the boundary vanishes and the torsion exponent is `+∞`.
pub fn circle_one_form(a_plus: &Rat, a_minus: &Rat) -> Result<(FilteredComplex, Rat)> {
    check_areas(a_plus, a_minus)?;
    let field = Field::F2;
    let precision = a_plus + a_minus + Rat::from_integer(1.into());
    let gens = vec![
        Generator { id: "p".into(), degree: 0, value: Rat::zero() },
        Generator { id: "q".into(), degree: 1, value: Rat::zero() },
    ];
    let d = NovikovScalar::t_pow(field, a_plus.clone(), precision.clone())?
        .sub(&NovikovScalar::t_pow(field, a_minus.clone(), precision.clone())?);
    let c = FilteredComplex::new_novikov(field, precision, gens, vec![(0, 1, d)])?;
    Ok((c, a_plus.min(a_minus).clone()))
}

/// The same model unrolled over `periods` fundamental domains of the cover,
/// as a field complex filtered by `-f`. `q_n` sits at `-nP` and `p_n` at
/// `-nP - A+`, with `P = A+ − A−` and `∂q_n = p_n − p_{n−1}`.
pub fn circle_cover(a_plus: &Rat, a_minus: &Rat, periods: usize) -> Result<FilteredComplex> {
    check_areas(a_plus, a_minus)?;
    if periods == 0 {
        return Err(Error::Parameter("need at least one period".into()));
    }
    let field = Field::Rational;
    let period = a_plus - a_minus;
    let n = periods as i64;
    let mut gens = vec![Generator { id: "p-1".into(), degree: 0, value: &period - a_plus }];
    let mut entries = Vec::new();
    for i in 0..n {
        let shift = -(&period * Rat::from_integer(i.into()));
        gens.push(Generator { id: format!("p{i}"), degree: 0, value: &shift - a_plus });
        gens.push(Generator { id: format!("q{i}"), degree: 1, value: shift });
        // p_{-1} is generator 0, then p_i and q_i alternate
        let i = i as usize;
        let (p_prev, p_cur, q) = (if i == 0 { 0 } else { 2 * i - 1 }, 2 * i + 1, 2 * i + 2);
        entries.push((p_cur, q, field.one()));
        entries.push((p_prev, q, -&field.one()));
    }
    FilteredComplex::new(field, gens, entries)
}

/// Energy through the Novikov complex: its torsion exponent.
pub fn circle_energy_novikov(a_plus: &Rat, a_minus: &Rat) -> Result<ExtRat> {
    let (c, _) = circle_one_form(a_plus, a_minus)?;
    Ok(novikov_torsion(&c)?.value)
}

/// Energy through quotient persistence on the unrolled cover: the longest
/// finite bar. Truncating the cover only adds the essential bars.
pub fn circle_energy_quotient(a_plus: &Rat, a_minus: &Rat, periods: usize) -> Result<ExtRat> {
    let c = circle_cover(a_plus, a_minus, periods)?;
    let bars = quotient_persistence(&c)?;
    Ok(bars.bars().iter().filter(|b| b.is_finite()).map(Bar::length).max().unwrap_or_else(ExtRat::zero))
}
