//! Half-open bars with a cohomological degree, and multisets of them.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::rat::{ExtRat, Rat};

/// The interval module on `[birth, death)` placed in `degree`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bar {
    pub degree: i32,
    pub birth: ExtRat,
    pub death: ExtRat,
}

impl Bar {
    pub fn new(degree: i32, birth: ExtRat, death: ExtRat) -> Result<Bar> {
        if birth == ExtRat::PosInf || death == ExtRat::NegInf || birth >= death {
            return Err(Error::Parameter(format!("invalid bar [{birth}, {death})")));
        }
        Ok(Bar { degree, birth, death })
    }

    /// Finite bar `[b, d)` in degree 0; panics unless `b < d`.
    pub fn finite(b: Rat, d: Rat) -> Bar {
        Bar::new(0, ExtRat::Fin(b), ExtRat::Fin(d)).expect("birth < death")
    }

    /// `death − birth`, possibly `+∞`.
    pub fn length(&self) -> ExtRat {
        self.death.minus(&self.birth).unwrap_or(ExtRat::PosInf)
    }

    pub fn is_finite(&self) -> bool {
        self.birth.is_finite() && self.death.is_finite()
    }

    pub fn shifted(&self, c: &Rat) -> Bar {
        Bar { degree: self.degree, birth: self.birth.add_rat(c), death: self.death.add_rat(c) }
    }

    /// Contains `t` in `[birth, death)`.
    pub fn contains(&self, t: &ExtRat) -> bool {
        self.birth <= *t && *t < self.death
    }
}

impl fmt::Display for Bar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "deg{}:[{}, {})", self.degree, self.birth, self.death)
    }
}

/// A finite multiset of bars. Equality ignores order.
#[derive(Clone, Debug, Default, Eq)]
pub struct GradedBarcode {
    bars: Vec<Bar>,
}

impl PartialEq for GradedBarcode {
    fn eq(&self, o: &Self) -> bool {
        self.sorted() == o.sorted()
    }
}

impl FromIterator<Bar> for GradedBarcode {
    fn from_iter<I: IntoIterator<Item = Bar>>(it: I) -> Self {
        GradedBarcode { bars: it.into_iter().collect() }
    }
}

impl GradedBarcode {
    pub fn new(bars: Vec<Bar>) -> Self {
        GradedBarcode { bars }
    }

    pub fn empty() -> Self {
        GradedBarcode::default()
    }

    /// Degree-0 barcode from finite `(birth, death)` pairs.
    pub fn from_pairs(pairs: &[(Rat, Rat)]) -> Self {
        pairs.iter().map(|(b, d)| Bar::finite(b.clone(), d.clone())).collect()
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn push(&mut self, b: Bar) {
        self.bars.push(b);
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = Bar>) {
        self.bars.extend(it);
    }

    /// Bars in canonical order (degree, birth, death).
    pub fn sorted(&self) -> Vec<Bar> {
        let mut v = self.bars.clone();
        v.sort();
        v
    }

    pub fn into_sorted(self) -> GradedBarcode {
        GradedBarcode { bars: self.sorted() }
    }

    /// Degrees present, ascending.
    pub fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.bars.iter().map(|b| b.degree).collect();
        d.sort();
        d.dedup();
        d
    }

    pub fn in_degree(&self, k: i32) -> GradedBarcode {
        self.bars.iter().filter(|b| b.degree == k).cloned().collect()
    }

    /// Translate every bar by `+c`; `c` must be a finite rational `≥ 0`.
    pub fn shift(&self, c: &Rat) -> Result<GradedBarcode> {
        if c.is_negative() {
            return Err(Error::Parameter(format!("negative shift {c}")));
        }
        Ok(self.shift_any(c))
    }

    /// Translate by any finite rational, including negative ones.
    pub fn shift_any(&self, c: &Rat) -> GradedBarcode {
        self.bars.iter().map(|b| b.shifted(c)).collect()
    }

    /// Multiply every endpoint by a positive rational.
    pub fn scale(&self, k: &Rat) -> Result<GradedBarcode> {
        if !k.is_positive() {
            return Err(Error::Parameter(format!("non-positive scale {k}")));
        }
        Ok(self
            .bars
            .iter()
            .map(|b| Bar { degree: b.degree, birth: b.birth.scale(k), death: b.death.scale(k) })
            .collect())
    }

    /// Longest bar length; `0` when empty, `+∞` when some bar is infinite.
    pub fn torsion_threshold(&self) -> ExtRat {
        self.bars.iter().map(Bar::length).max().unwrap_or_else(ExtRat::zero)
    }

    /// All finite endpoints, sorted and deduplicated.
    pub fn endpoints(&self) -> Vec<Rat> {
        let mut v: Vec<Rat> = self
            .bars
            .iter()
            .flat_map(|b| [b.birth.finite().cloned(), b.death.finite().cloned()])
            .flatten()
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn all_finite(&self) -> bool {
        self.bars.iter().all(Bar::is_finite)
    }

    /// Number of bars containing `t` in degree `k`.
    pub fn rank_at(&self, k: i32, t: &ExtRat) -> usize {
        self.bars.iter().filter(|b| b.degree == k && b.contains(t)).count()
    }

    /// Disjoint union.
    pub fn union(&self, o: &GradedBarcode) -> GradedBarcode {
        self.bars.iter().chain(&o.bars).cloned().collect()
    }

    /// Serialize in the `barcode v1` format.
    pub fn to_text(&self, field: Field) -> String {
        let mut s = format!("barcode v1\nfield {}\n", field.tag());
        for b in self.sorted() {
            s.push_str(&format!("bar degree={} birth={} death={}\n", b.degree, b.birth, b.death));
        }
        s
    }

    /// Parse the `barcode v1` format; returns the declared field too.
    pub fn from_text(text: &str) -> Result<(Field, GradedBarcode)> {
        let mut lines = content_lines(text);
        expect_header(&mut lines, "barcode")?;
        let field = expect_field(&mut lines)?;
        let mut bars = Vec::new();
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            if toks.next() != Some("bar") {
                return Err(parse_err(ln, 1, format!("expected `bar`, found {line:?}")));
            }
            let kv = key_values(ln, toks)?;
            let get = |k: &str| {
                kv.iter()
                    .find(|(key, _, _)| key == k)
                    .ok_or_else(|| parse_err(ln, 1, format!("missing `{k}=`")))
            };
            let (_, deg, dcol) = get("degree")?;
            let degree: i32 = deg.parse().map_err(|_| parse_err(ln, *dcol, format!("bad degree {deg:?}")))?;
            let (_, b, bcol) = get("birth")?;
            let birth: ExtRat = b.parse().map_err(|e: Error| e.at_line(ln)).map_err(|e| with_col(e, *bcol))?;
            let (_, d, dcol2) = get("death")?;
            let death: ExtRat = d.parse().map_err(|e: Error| e.at_line(ln)).map_err(|e| with_col(e, *dcol2))?;
            let bar = Bar::new(degree, birth, death)
                .map_err(|e| parse_err(ln, 1, e.to_string()))?;
            bars.push(bar);
        }
        Ok((field, GradedBarcode::new(bars)))
    }
}

impl fmt::Display for GradedBarcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.sorted().iter().map(|b| b.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub(crate) fn parse_err(line: usize, col: usize, msg: String) -> Error {
    Error::Parse { line, col, msg }
}

fn with_col(e: Error, col: usize) -> Error {
    match e {
        Error::Parse { line, msg, .. } => Error::Parse { line, col, msg },
        other => other,
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> std::iter::Peekable<impl Iterator<Item = (usize, &str)>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable()
}

pub(crate) fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    kind: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == [kind, "v1"] => Ok(()),
        Some((ln, l)) => Err(parse_err(ln, 1, format!("expected `{kind} v1` header, found {l:?}"))),
        None => Err(parse_err(1, 1, format!("empty input, expected `{kind} v1`"))),
    }
}

pub(crate) fn expect_field<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Field> {
    match lines.next() {
        Some((ln, l)) => {
            let mut t = l.split_whitespace();
            if t.next() != Some("field") {
                return Err(parse_err(ln, 1, format!("expected `field`, found {l:?}")));
            }
            let tag = t.next().ok_or_else(|| parse_err(ln, 7, "missing field tag".into()))?;
            Field::from_tag(tag).map_err(|e| parse_err(ln, 7, e.to_string()))
        }
        None => Err(parse_err(2, 1, "missing `field` line".into())),
    }
}

/// Split `key=value` tokens, remembering an approximate column per token.
pub(crate) fn key_values<'a>(
    ln: usize,
    toks: impl Iterator<Item = &'a str>,
) -> Result<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    let mut col = 1;
    for t in toks {
        col += t.len() + 1;
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| parse_err(ln, col, format!("expected key=value, found {t:?}")))?;
        out.push((k.to_string(), v.to_string(), col));
    }
    Ok(out)
}

/// `0` when empty, else max; convenience for thresholds that may be absent.
pub fn max_or_zero<I: IntoIterator<Item = ExtRat>>(it: I) -> ExtRat {
    it.into_iter().max().unwrap_or_else(|| ExtRat::Fin(Rat::zero()))
}
