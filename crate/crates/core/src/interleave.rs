//! Interleavings between barcodes.
//!
//! Morphisms between direct sums of interval modules are recorded as
//! coefficient matrices on canonical generators; every space
//! `Hom(k[b1,d1), T_c k[b2,d2))` is at most one-dimensional, so composition
//! reduces to a support test on three intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::barcode::{content_lines, expect_field, expect_header, key_values, parse_err, Bar, GradedBarcode};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::grid::{morphism_space_on, tau, union_points, GridModule, GridMorphism};
use crate::linalg::Matrix;
use crate::rat::{common_denominator, parse_rat, ExtRat, Rat};

/// `dim Hom(k[src], T_c k[dst])`: components `src_t → dst_{t+c}`.
pub fn hom_dim(src: &Bar, dst: &Bar, c: &Rat) -> usize {
    if src.degree != dst.degree {
        return 0;
    }
    let b1 = src.birth.add_rat(c);
    let d1 = src.death.add_rat(c);
    usize::from(dst.birth <= b1 && dst.death <= d1 && b1 < dst.death)
}

/// Whether canonical generators `i → T_x j` and `j → T_y k` compose to a nonzero map.
pub fn composite_nonzero(i: &Bar, j: &Bar, k: &Bar, x: &Rat, y: &Rat) -> bool {
    if hom_dim(i, j, x) == 0 || hom_dim(j, k, y) == 0 {
        return false;
    }
    let xy = x + y;
    let lo = [i.birth.clone(), j.birth.sub_rat(x), k.birth.sub_rat(&xy)].into_iter().max().unwrap();
    let hi = [i.death.clone(), j.death.sub_rat(x), k.death.sub_rat(&xy)].into_iter().min().unwrap();
    lo < hi
}

/// The `Hom` generator bar of a pair, as a function of the shift `c ≥ 0`.
///
/// Degree is `deg(g) − deg(f)`; `None` when the clipped interval is empty.
pub fn pair_hom_bar(f: &Bar, g: &Bar) -> Option<Bar> {
    use ExtRat::*;
    let mut start = ExtRat::zero();
    // b_g − b_f and d_g − d_f; the undefined ∞−∞ cases impose nothing.
    for (x, y) in [(&g.birth, &f.birth), (&g.death, &f.death)] {
        if let Some(v) = x.minus(y) {
            start = start.max(v);
        }
    }
    let end = g.death.minus(&f.birth).unwrap_or(PosInf);
    (start < end && start != PosInf).then(|| Bar { degree: g.degree - f.degree, birth: start, death: end })
}

/// The `Ext¹` generator bar of a pair, in degree `deg(g) − deg(f) + 1`.
///
/// `Ext¹(k[b1,d1), T_c k[b2,d2))` is one-dimensional exactly when
/// `b1 < b2−c ≤ d1 < d2−c`, i.e. for `c ∈ [b2−d1, min(b2−b1, d2−d1))`.
pub fn pair_ext_bar(f: &Bar, g: &Bar) -> Option<Bar> {
    let d1 = f.death.finite()?;
    let start = g.birth.sub_rat(d1).max(ExtRat::zero());
    let e1 = g.birth.minus(&f.birth).unwrap_or(ExtRat::NegInf);
    let e2 = g.death.sub_rat(d1);
    let end = e1.min(e2);
    (start < end).then(|| Bar { degree: g.degree - f.degree + 1, birth: start, death: end })
}

/// A morphism between barcodes, `source → T_shift target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BarMorphism {
    pub shift: Rat,
    pub source: Vec<Bar>,
    pub target: Vec<Bar>,
    /// `target.len() × source.len()` coefficients on canonical generators.
    pub coef: Matrix,
}

impl BarMorphism {
    pub fn zero(field: Field, shift: Rat, source: Vec<Bar>, target: Vec<Bar>) -> Self {
        let coef = Matrix::zeros(field, target.len(), source.len());
        BarMorphism { shift, source, target, coef }
    }

    pub fn field(&self) -> Field {
        self.coef.field()
    }

    /// Set the coefficient from source bar `i` to target bar `j`.
    pub fn set(&mut self, j: usize, i: usize, v: FieldElem) -> Result<()> {
        if !v.is_zero() && hom_dim(&self.source[i], &self.target[j], &self.shift) == 0 {
            return Err(Error::Verification(format!(
                "no shift-{} morphism {} -> {}",
                self.shift, self.source[i], self.target[j]
            )));
        }
        self.coef[(j, i)] = v;
        Ok(())
    }

    /// Every nonzero coefficient sits on a nonzero Hom space.
    pub fn supported(&self) -> bool {
        (0..self.target.len()).all(|j| {
            (0..self.source.len())
                .all(|i| self.coef[(j, i)].is_zero() || hom_dim(&self.source[i], &self.target[j], &self.shift) == 1)
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coef.is_zero()
    }

    /// `(T_x next) ∘ self`, a morphism `source → T_{x+y} next.target`.
    pub fn then(&self, next: &BarMorphism) -> Result<BarMorphism> {
        if self.target != next.source {
            return Err(Error::Parameter("composed morphisms do not share a middle barcode".into()));
        }
        let (x, y) = (&self.shift, &next.shift);
        let mut out = BarMorphism::zero(self.field(), x + y, self.source.clone(), next.target.clone());
        for (i, bi) in self.source.iter().enumerate() {
            for (k, bk) in next.target.iter().enumerate() {
                let mut acc = self.field().zero();
                for (j, bj) in self.target.iter().enumerate() {
                    let (p, q) = (&self.coef[(j, i)], &next.coef[(k, j)]);
                    if !p.is_zero() && !q.is_zero() && composite_nonzero(bi, bj, bk, x, y) {
                        acc = &acc + &(q * p);
                    }
                }
                out.coef[(k, i)] = acc;
            }
        }
        Ok(out)
    }

    /// `τ_{0,c}` on the given bars.
    pub fn tau(field: Field, bars: &[Bar], c: &Rat) -> BarMorphism {
        let mut m = BarMorphism::zero(field, c.clone(), bars.to_vec(), bars.to_vec());
        for (i, b) in bars.iter().enumerate() {
            if ExtRat::Fin(c.clone()) < b.length() {
                m.coef[(i, i)] = field.one();
            }
        }
        m
    }

    /// Entries `(source, target, coefficient)` with nonzero coefficient.
    pub fn entries(&self) -> Vec<(usize, usize, FieldElem)> {
        let mut v = Vec::new();
        for i in 0..self.source.len() {
            for j in 0..self.target.len() {
                if !self.coef[(j, i)].is_zero() {
                    v.push((i, j, self.coef[(j, i)].clone()));
                }
            }
        }
        v
    }
}

/// An `(a,b)`-interleaving between `F` and `G`, bars in canonical order.
///
/// `α, δ : F → T_a G` and `β, γ : G → T_b F` with
/// `(T_a β)∘α = τ_{0,a+b}(F)` and `(T_b δ)∘γ = τ_{0,a+b}(G)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterleavingCertificate {
    pub a: Rat,
    pub b: Rat,
    pub f: Vec<Bar>,
    pub g: Vec<Bar>,
    pub alpha: BarMorphism,
    pub beta: BarMorphism,
    pub gamma: BarMorphism,
    pub delta: BarMorphism,
    pub provenance: String,
}

impl InterleavingCertificate {
    pub fn field(&self) -> Field {
        self.alpha.field()
    }

    pub fn f_barcode(&self) -> GradedBarcode {
        GradedBarcode::new(self.f.clone())
    }

    pub fn g_barcode(&self) -> GradedBarcode {
        GradedBarcode::new(self.g.clone())
    }

    /// The `(0,0)` certificate of `F` with itself.
    pub fn identity(field: Field, f: &GradedBarcode) -> Self {
        let bars = f.sorted();
        let id = BarMorphism::tau(field, &bars, &Rat::zero());
        InterleavingCertificate {
            a: Rat::zero(),
            b: Rat::zero(),
            f: bars.clone(),
            g: bars,
            alpha: id.clone(),
            beta: id.clone(),
            gamma: id.clone(),
            delta: id,
            provenance: "identity".into(),
        }
    }

    /// The same interleaving read from `G` to `F`, with shifts `(b, a)`.
    pub fn reversed(&self) -> Self {
        InterleavingCertificate {
            a: self.b.clone(),
            b: self.a.clone(),
            f: self.g.clone(),
            g: self.f.clone(),
            alpha: self.gamma.clone(),
            beta: self.delta.clone(),
            gamma: self.alpha.clone(),
            delta: self.beta.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Exact check of shapes, supports and both composite identities.
    pub fn verify(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Verification(m));
        if self.a.is_negative() || self.b.is_negative() {
            return fail("negative shift".into());
        }
        let shapes = [
            ("alpha", &self.alpha, &self.f, &self.g, &self.a),
            ("beta", &self.beta, &self.g, &self.f, &self.b),
            ("gamma", &self.gamma, &self.g, &self.f, &self.b),
            ("delta", &self.delta, &self.f, &self.g, &self.a),
        ];
        for (name, m, src, dst, s) in shapes {
            if &m.source != src || &m.target != dst || &m.shift != s {
                return fail(format!("{name} has the wrong source, target or shift"));
            }
            if m.field() != self.field() {
                return fail(format!("{name} is over a different field"));
            }
            if !m.supported() {
                return fail(format!("{name} has a coefficient on a zero Hom space"));
            }
        }
        let s = &self.a + &self.b;
        if self.alpha.then(&self.beta)? != BarMorphism::tau(self.field(), &self.f, &s) {
            return fail("beta after alpha is not the shift map of F".into());
        }
        if self.gamma.then(&self.delta)? != BarMorphism::tau(self.field(), &self.g, &s) {
            return fail("delta after gamma is not the shift map of G".into());
        }
        Ok(())
    }

    /// Serialize in the `cert v1` format.
    pub fn to_text(&self) -> String {
        let mut s = format!("cert v1\nfield {}\nshifts a={} b={}\n", self.field().tag(), self.a, self.b);
        for (tag, bars) in [("fbar", &self.f), ("gbar", &self.g)] {
            for b in bars {
                s.push_str(&format!("{tag} degree={} birth={} death={}\n", b.degree, b.birth, b.death));
            }
        }
        for (name, m) in [("alpha", &self.alpha), ("beta", &self.beta), ("gamma", &self.gamma), ("delta", &self.delta)] {
            for (i, j, v) in m.entries() {
                s.push_str(&format!("{name} {i} {j} {}\n", v.to_text()));
            }
        }
        if !self.provenance.is_empty() {
            s.push_str(&format!("provenance {}\n", self.provenance));
        }
        s
    }

    /// Parse `cert v1`; the result is verified before it is returned.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        expect_header(&mut lines, "cert")?;
        let field = expect_field(&mut lines)?;
        let (ln, line) = lines.next().ok_or_else(|| parse_err(3, 1, "missing `shifts` line".into()))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some("shifts") {
            return Err(parse_err(ln, 1, format!("expected `shifts`, found {line:?}")));
        }
        let kv = key_values(ln, toks)?;
        let shift = |k: &str| -> Result<Rat> {
            let (_, v, col) = kv
                .iter()
                .find(|(key, _, _)| key == k)
                .ok_or_else(|| parse_err(ln, 1, format!("missing `{k}=`")))?;
            parse_rat(v).map_err(|_| parse_err(ln, *col, format!("bad shift {v:?}")))
        };
        let (a, b) = (shift("a")?, shift("b")?);
        let mut f = Vec::new();
        let mut g = Vec::new();
        let mut entries: Vec<(usize, &str, usize, usize, FieldElem)> = Vec::new();
        let mut provenance = String::new();
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or("");
            match head {
                "fbar" | "gbar" => {
                    let kv = key_values(ln, toks)?;
                    let get = |k: &str| -> Result<ExtRat> {
                        let (_, v, col) = kv
                            .iter()
                            .find(|(key, _, _)| key == k)
                            .ok_or_else(|| parse_err(ln, 1, format!("missing `{k}=`")))?;
                        v.parse().map_err(|_| parse_err(ln, *col, format!("bad endpoint {v:?}")))
                    };
                    let degree = kv
                        .iter()
                        .find(|(key, _, _)| key == "degree")
                        .and_then(|(_, v, _)| v.parse::<i32>().ok())
                        .ok_or_else(|| parse_err(ln, 1, "missing or bad `degree=`".into()))?;
                    let bar = Bar::new(degree, get("birth")?, get("death")?)
                        .map_err(|e| parse_err(ln, 1, e.to_string()))?;
                    if head == "fbar" { f.push(bar) } else { g.push(bar) }
                }
                "alpha" | "beta" | "gamma" | "delta" => {
                    let rest: Vec<&str> = toks.collect();
                    if rest.len() != 3 {
                        return Err(parse_err(ln, 1, format!("expected `{head} <source> <target> <coef>`")));
                    }
                    let idx = |s: &str, col| s.parse::<usize>().map_err(|_| parse_err(ln, col, format!("bad index {s:?}")));
                    let i = idx(rest[0], head.len() + 2)?;
                    let j = idx(rest[1], head.len() + rest[0].len() + 3)?;
                    let v = field.parse(rest[2]).map_err(|e| parse_err(ln, 1, e.to_string()))?;
                    entries.push((ln, head, i, j, v));
                }
                "provenance" => provenance = toks.collect::<Vec<_>>().join(" "),
                _ => return Err(parse_err(ln, 1, format!("unexpected line {line:?}"))),
            }
        }
        let sorted_ok = |v: &[Bar]| v.windows(2).all(|w| w[0] <= w[1]);
        if !sorted_ok(&f) || !sorted_ok(&g) {
            return Err(Error::Structure("certificate bars must be listed in canonical order".into()));
        }
        let mut cert = InterleavingCertificate {
            alpha: BarMorphism::zero(field, a.clone(), f.clone(), g.clone()),
            beta: BarMorphism::zero(field, b.clone(), g.clone(), f.clone()),
            gamma: BarMorphism::zero(field, b.clone(), g.clone(), f.clone()),
            delta: BarMorphism::zero(field, a.clone(), f.clone(), g.clone()),
            a,
            b,
            f,
            g,
            provenance,
        };
        for (ln, name, i, j, v) in entries {
            let m = match name {
                "alpha" => &mut cert.alpha,
                "beta" => &mut cert.beta,
                "gamma" => &mut cert.gamma,
                _ => &mut cert.delta,
            };
            if i >= m.source.len() || j >= m.target.len() {
                return Err(parse_err(ln, 1, format!("bar index out of range in {name}")));
            }
            m.coef[(j, i)] = v;
        }
        cert.verify()?;
        Ok(cert)
    }
}

/// Three-way answer of a search that may hit its enumeration bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision<T> {
    Yes(T),
    No,
    Unknown(String),
}

impl<T> Decision<T> {
    pub fn is_yes(&self) -> bool {
        matches!(self, Decision::Yes(_))
    }
}

/// Knobs for the factorization search.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub field: Field,
    /// Largest number of free `F_2` coefficients enumerated per component.
    pub enum_bits: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { field: Field::F2, enum_bits: 20 }
    }
}

// ---------------------------------------------------------------------------
// Integer core of the decision procedure. Endpoints are scaled to integers by a
// common denominator (times 8, so that midpoints and the perturbation used by
// the distance search stay integral); infinities become ±BIG.

const BIG: i128 = 1 << 100;
const LIMIT: i128 = 1 << 90;

#[derive(Clone, Copy, Debug)]
struct IBar {
    deg: i32,
    b: i128,
    d: i128,
}

fn ihom(s: &IBar, t: &IBar, c: i128) -> bool {
    s.deg == t.deg && t.b <= s.b + c && t.d <= s.d + c && s.b + c < t.d
}

fn itriple(i: &IBar, j: &IBar, k: &IBar, x: i128, y: i128) -> bool {
    let lo = i.b.max(j.b - x).max(k.b - x - y);
    let hi = i.d.min(j.d - x).min(k.d - x - y);
    lo < hi
}

struct Scale {
    k: BigInt,
}

impl Scale {
    fn new<'a>(vals: impl IntoIterator<Item = &'a Rat>) -> Scale {
        Scale { k: common_denominator(vals) * BigInt::from(8) }
    }

    fn int(&self, r: &Rat) -> Result<i128> {
        let v = r * Rat::from_integer(self.k.clone());
        debug_assert!(v.is_integer());
        v.to_integer()
            .to_i128()
            .filter(|x| x.abs() < LIMIT)
            .ok_or_else(|| Error::Unsupported(format!("endpoint {r} is too large for the search")))
    }

    fn ext(&self, e: &ExtRat) -> Result<i128> {
        match e {
            ExtRat::NegInf => Ok(-BIG),
            ExtRat::PosInf => Ok(BIG),
            ExtRat::Fin(r) => self.int(r),
        }
    }

    fn back(&self, v: i128) -> Rat {
        Rat::new(BigInt::from(v), self.k.clone())
    }

    fn bars(&self, bars: &[Bar]) -> Result<Vec<IBar>> {
        bars.iter()
            .map(|b| Ok(IBar { deg: b.degree, b: self.ext(&b.birth)?, d: self.ext(&b.death)? }))
            .collect()
    }
}

fn finite_values(bars: &[Bar]) -> Vec<Rat> {
    bars.iter().flat_map(|b| [b.birth.finite().cloned(), b.death.finite().cloned()]).flatten().collect()
}

/// Outcome of the integer search; entries are `(row, column)` of `α` and `β`.
#[derive(Clone, Debug)]
enum Found {
    Yes { alpha: Vec<(usize, usize)>, beta: Vec<(usize, usize)>, how: &'static str },
    No,
    Unknown(String),
}

/// Maximum bipartite matching (Kuhn). Returns, per left vertex, its partner.
fn matching(left: usize, right: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    fn augment(
        u: usize,
        right: usize,
        edge: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for v in 0..right {
            if edge(u, v) && !seen[v] {
                seen[v] = true;
                if owner[v].is_none_or(|w| augment(w, right, edge, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; right];
    for u in 0..left {
        let mut seen = vec![false; right];
        augment(u, right, &edge, &mut seen, &mut owner);
    }
    let mut partner = vec![None; left];
    for (v, o) in owner.iter().enumerate() {
        if let Some(u) = o {
            partner[*u] = Some(v);
        }
    }
    partner
}

/// Solve a small `F_2` system; rows are `(coefficient bits, rhs)`.
fn solve_f2(mut rows: Vec<(u64, bool)>, nvars: usize) -> Option<u64> {
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, var)
    let mut r = 0;
    for v in 0..nvars {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].0 >> v & 1 == 1) else { continue };
        rows.swap(r, p);
        let (pm, pb) = rows[r];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.0 >> v & 1 == 1 {
                row.0 ^= pm;
                row.1 ^= pb;
            }
        }
        pivots.push((r, v));
        r += 1;
    }
    if rows[r..].iter().any(|&(_, b)| b) {
        return None;
    }
    let mut x = 0u64;
    for (row, v) in pivots {
        if rows[row].1 {
            x |= 1 << v;
        }
    }
    Some(x)
}

/// Does `τ_{0,a+b}(F)` factor as `(T_a β)∘α` through `G`?
///
/// A matching of long `F` bars to `G` bars that admit maps both ways gives a
/// certificate directly. Failing that, Hall's condition on each direction is
/// necessary (the long-bar block of `βα` is unitriangular in death order), and
/// the remaining cases are settled by an exhaustive `F_2` search, split into
/// connected components of the support graph.
fn decide(f: &[IBar], g: &[IBar], a: i128, b: i128, bits: usize) -> Found {
    let s = a + b;
    let long: Vec<usize> = (0..f.len()).filter(|&i| f[i].d - f[i].b > s).collect();
    if long.is_empty() {
        return Found::Yes { alpha: vec![], beta: vec![], how: "torsion" };
    }
    let sa = |i: usize, j: usize| ihom(&f[i], &g[j], a);
    let sb = |j: usize, i: usize| ihom(&g[j], &f[i], b);
    let n = long.len();
    let hall_a = matching(n, g.len(), |u, j| sa(long[u], j));
    let hall_b = matching(n, g.len(), |u, j| sb(j, long[u]));
    if hall_a.iter().any(Option::is_none) || hall_b.iter().any(Option::is_none) {
        return Found::No;
    }
    let both = matching(n, g.len(), |u, j| sa(long[u], j) && sb(j, long[u]));
    if both.iter().all(Option::is_some) {
        let pairs: Vec<(usize, usize)> = both.iter().enumerate().map(|(u, j)| (long[u], j.unwrap())).collect();
        return Found::Yes {
            alpha: pairs.iter().map(|&(i, j)| (j, i)).collect(),
            beta: pairs,
            how: "matching",
        };
    }

    // Components of the bipartite support graph on long F bars and G bars.
    let mut parent: Vec<usize> = (0..n + g.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for u in 0..n {
        for j in 0..g.len() {
            if sa(long[u], j) || sb(j, long[u]) {
                let (x, y) = (find(&mut parent, u), find(&mut parent, n + j));
                parent[x] = y;
            }
        }
    }
    let mut comps: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for u in 0..n {
        let r = find(&mut parent, u);
        comps.entry(r).or_default().0.push(long[u]);
    }
    for j in 0..g.len() {
        let r = find(&mut parent, n + j);
        if let Some(c) = comps.get_mut(&r) {
            c.1.push(j);
        }
    }
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for (ls, gs) in comps.values() {
        match search_component(f, g, a, b, ls, gs, bits) {
            Found::Yes { alpha: al, beta: be, .. } => {
                alpha.extend(al);
                beta.extend(be);
            }
            other => return other,
        }
    }
    Found::Yes { alpha, beta, how: "exhaustive" }
}

fn search_component(f: &[IBar], g: &[IBar], a: i128, b: i128, ls: &[usize], gs: &[usize], bits: usize) -> Found {
    // α variables (j, i) and β variables (i', j) restricted to long rows/columns.
    let avars: Vec<(usize, usize)> =
        ls.iter().flat_map(|&i| gs.iter().filter(move |&&j| ihom(&f[i], &g[j], a)).map(move |&j| (j, i))).collect();
    let bvars: Vec<(usize, usize)> =
        ls.iter().flat_map(|&i| gs.iter().filter(move |&&j| ihom(&g[j], &f[i], b)).map(move |&j| (i, j))).collect();
    let free = avars.len().min(bvars.len());
    if free > bits || free > 63 {
        return Found::Unknown(format!("{free} free coefficients exceed the enumeration bound {bits}"));
    }
    let mask = |i: usize, j: usize, k: usize| itriple(&f[i], &g[j], &f[k], a, b);
    if avars.len() <= bvars.len() {
        for bitsa in 0u64..(1u64 << avars.len()) {
            let on = |j: usize, i: usize| avars.iter().position(|&v| v == (j, i)).is_some_and(|p| bitsa >> p & 1 == 1);
            let mut chosen = Vec::new();
            let ok = ls.iter().all(|&k| {
                let unknowns: Vec<usize> = bvars.iter().filter(|v| v.0 == k).map(|v| v.1).collect();
                let rows = ls
                    .iter()
                    .map(|&i| {
                        let mut m = 0u64;
                        for (x, &j) in unknowns.iter().enumerate() {
                            if on(j, i) && mask(i, j, k) {
                                m |= 1 << x;
                            }
                        }
                        (m, i == k)
                    })
                    .collect();
                match solve_f2(rows, unknowns.len()) {
                    Some(x) => {
                        chosen.extend(unknowns.iter().enumerate().filter(|(p, _)| x >> p & 1 == 1).map(|(_, &j)| (k, j)));
                        true
                    }
                    None => false,
                }
            });
            if ok {
                let alpha = avars.iter().enumerate().filter(|(p, _)| bitsa >> p & 1 == 1).map(|(_, &v)| v).collect();
                return Found::Yes { alpha, beta: chosen, how: "exhaustive" };
            }
        }
    } else {
        for bitsb in 0u64..(1u64 << bvars.len()) {
            let on = |k: usize, j: usize| bvars.iter().position(|&v| v == (k, j)).is_some_and(|p| bitsb >> p & 1 == 1);
            let mut chosen = Vec::new();
            let ok = ls.iter().all(|&i| {
                let unknowns: Vec<usize> = avars.iter().filter(|v| v.1 == i).map(|v| v.0).collect();
                let rows = ls
                    .iter()
                    .map(|&k| {
                        let mut m = 0u64;
                        for (x, &j) in unknowns.iter().enumerate() {
                            if on(k, j) && mask(i, j, k) {
                                m |= 1 << x;
                            }
                        }
                        (m, i == k)
                    })
                    .collect();
                match solve_f2(rows, unknowns.len()) {
                    Some(x) => {
                        chosen.extend(unknowns.iter().enumerate().filter(|(p, _)| x >> p & 1 == 1).map(|(_, &j)| (j, i)));
                        true
                    }
                    None => false,
                }
            });
            if ok {
                let beta = bvars.iter().enumerate().filter(|(p, _)| bitsb >> p & 1 == 1).map(|(_, &v)| v).collect();
                return Found::Yes { alpha: chosen, beta, how: "exhaustive" };
            }
        }
    }
    Found::No
}

fn both_ways(f: &[IBar], g: &[IBar], a: i128, b: i128, bits: usize) -> Decision<(Found, Found)> {
    let x = decide(f, g, a, b, bits);
    if matches!(x, Found::No) {
        return Decision::No;
    }
    let y = decide(g, f, b, a, bits);
    match (x, y) {
        (_, Found::No) => Decision::No,
        (Found::Unknown(m), _) | (_, Found::Unknown(m)) => Decision::Unknown(m),
        (x, y) => Decision::Yes((x, y)),
    }
}

fn build_pair(
    field: Field,
    f: &[Bar],
    g: &[Bar],
    a: &Rat,
    b: &Rat,
    found: &Found,
) -> Result<(BarMorphism, BarMorphism, &'static str)> {
    let Found::Yes { alpha, beta, how } = found else { unreachable!("build_pair on a negative answer") };
    let mut al = BarMorphism::zero(field, a.clone(), f.to_vec(), g.to_vec());
    for &(j, i) in alpha {
        al.set(j, i, field.one())?;
    }
    let mut be = BarMorphism::zero(field, b.clone(), g.to_vec(), f.to_vec());
    for &(i, j) in beta {
        be.set(i, j, field.one())?;
    }
    Ok((al, be, how))
}

fn certificate_from(
    field: Field,
    f: &[Bar],
    g: &[Bar],
    a: &Rat,
    b: &Rat,
    x: &Found,
    y: &Found,
) -> Result<Decision<InterleavingCertificate>> {
    let (alpha, beta, h1) = build_pair(field, f, g, a, b, x)?;
    let (gamma, delta, h2) = build_pair(field, g, f, b, a, y)?;
    let cert = InterleavingCertificate {
        a: a.clone(),
        b: b.clone(),
        f: f.to_vec(),
        g: g.to_vec(),
        alpha,
        beta,
        gamma,
        delta,
        provenance: if h1 == h2 { h1.to_string() } else { format!("{h1}+{h2}") },
    };
    match cert.verify() {
        Ok(()) => Ok(Decision::Yes(cert)),
        // A 0/1 solution found over F_2 need not lift to other characteristics.
        Err(_) if field != Field::F2 => {
            Ok(Decision::Unknown(format!("the f2 solution does not verify over {field}")))
        }
        Err(e) => Err(e),
    }
}

/// `τ_{0,c}(F)` as a barcode morphism `F → T_c F`.
pub fn tau_morphism(field: Field, f: &GradedBarcode, c: &Rat) -> Result<BarMorphism> {
    if c.is_negative() {
        return Err(Error::Parameter(format!("negative shift {c}")));
    }
    Ok(BarMorphism::tau(field, &f.sorted(), c))
}

fn scaled_pair(f: &[Bar], g: &[Bar], a: &Rat, b: &Rat) -> Result<(Vec<IBar>, Vec<IBar>, i128, i128)> {
    if a.is_negative() || b.is_negative() {
        return Err(Error::Parameter("negative shift".into()));
    }
    let mut vals = finite_values(f);
    vals.extend(finite_values(g));
    vals.push(a.clone());
    vals.push(b.clone());
    let sc = Scale::new(&vals);
    Ok((sc.bars(f)?, sc.bars(g)?, sc.int(a)?, sc.int(b)?))
}

/// Condition (1) alone: a verified pair `(α, β)` with `(T_a β)∘α = τ_{0,a+b}(F)`.
pub fn factors_through(
    f: &GradedBarcode,
    g: &GradedBarcode,
    a: &Rat,
    b: &Rat,
    cfg: &SearchConfig,
) -> Result<Decision<(BarMorphism, BarMorphism)>> {
    let (fs, gs) = (f.sorted(), g.sorted());
    let (fi, gi, ai, bi) = scaled_pair(&fs, &gs, a, b)?;
    let found = decide(&fi, &gi, ai, bi, cfg.enum_bits);
    match found {
        Found::No => Ok(Decision::No),
        Found::Unknown(m) => Ok(Decision::Unknown(m)),
        yes => {
            let (al, be, _) = build_pair(cfg.field, &fs, &gs, a, b, &yes)?;
            if al.then(&be)? == BarMorphism::tau(cfg.field, &fs, &(a + b)) {
                Ok(Decision::Yes((al, be)))
            } else if cfg.field != Field::F2 {
                Ok(Decision::Unknown(format!("the f2 solution does not verify over {}", cfg.field)))
            } else {
                Err(Error::Verification("factorization failed its exact check".into()))
            }
        }
    }
}

/// Decide whether `F` and `G` are `(a,b)`-interleaved, returning a verified certificate.
pub fn is_interleaved(
    f: &GradedBarcode,
    g: &GradedBarcode,
    a: &Rat,
    b: &Rat,
    cfg: &SearchConfig,
) -> Result<Decision<InterleavingCertificate>> {
    let (fs, gs) = (f.sorted(), g.sorted());
    let (fi, gi, ai, bi) = scaled_pair(&fs, &gs, a, b)?;
    match both_ways(&fi, &gi, ai, bi, cfg.enum_bits) {
        Decision::Yes((x, y)) => certificate_from(cfg.field, &fs, &gs, a, b, &x, &y),
        Decision::No => Ok(Decision::No),
        Decision::Unknown(m) => Ok(Decision::Unknown(m)),
    }
}

/// Result of the translation-distance search.
#[derive(Clone, Debug)]
pub struct Distance {
    /// Infimum of `a + b` over interleavings; the upper end when the search was inconclusive.
    pub value: ExtRat,
    /// Lower end of the bracket; equals `value` when every decision was definite.
    pub lower: ExtRat,
    /// Whether some interleaving realizes the infimum exactly.
    pub attained: bool,
    /// Shifts of the witness: at the optimum when attained, else just above it.
    pub shifts: Option<(Rat, Rat)>,
    pub certificate: Option<InterleavingCertificate>,
}

impl Distance {
    pub fn is_exact(&self) -> bool {
        self.value == self.lower
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.value)
        } else {
            write!(f, "[{}, {}]", self.lower, self.value)
        }
    }
}

/// Translation distance `inf { a + b : F, G (a,b)-interleaved }`.
///
/// Feasibility is monotone in `(a,b)` and only changes across lines
/// `a = const`, `b = const`, `a + b = const` whose constants are endpoint
/// differences, so the infimum sits at a vertex of that arrangement. Each
/// vertex is tested just above and to the right (inside the open cell), and
/// attainment is checked on the optimal line itself.
pub fn translation_distance(f: &GradedBarcode, g: &GradedBarcode, cfg: &SearchConfig) -> Result<Distance> {
    let (fs, gs) = (f.sorted(), g.sorted());
    let (ef, eg) = (finite_values(&fs), finite_values(&gs));
    let sc = Scale::new(ef.iter().chain(&eg));
    let (fi, gi) = (sc.bars(&fs)?, sc.bars(&gs)?);
    let ints = |v: &[Rat]| -> Result<BTreeSet<i128>> { v.iter().map(|r| sc.int(r)).collect() };
    let (ef, eg) = (ints(&ef)?, ints(&eg)?);
    let diffs = |xs: &BTreeSet<i128>, ys: &BTreeSet<i128>| -> BTreeSet<i128> {
        let mut d: BTreeSet<i128> = xs.iter().flat_map(|x| ys.iter().map(move |y| x - y)).filter(|v| *v >= 0).collect();
        d.insert(0);
        d
    };
    let da = diffs(&eg, &ef);
    let db = diffs(&ef, &eg);
    let mut ds = diffs(&ef, &ef);
    ds.extend(diffs(&eg, &eg));

    let mut verts: BTreeSet<(i128, i128)> = BTreeSet::new();
    for &x in &da {
        for &y in &db {
            verts.insert((x, y));
        }
        for &s in ds.range(x..) {
            verts.insert((x, s - x));
        }
    }
    for &y in &db {
        for &s in ds.range(y..) {
            verts.insert((s - y, y));
        }
    }
    let mut verts: Vec<(i128, i128)> = verts.into_iter().collect();
    verts.sort_by_key(|&(x, y)| (x + y, x));

    const EPS: i128 = 2;
    let bits = cfg.enum_bits;
    let mut lower: Option<i128> = None;
    let mut best: Option<(i128, i128)> = None;
    for chunk in verts.chunks(256) {
        let res: Vec<Decision<()>> = chunk
            .par_iter()
            .map(|&(x, y)| match both_ways(&fi, &gi, x + EPS, y + EPS, bits) {
                Decision::Yes(_) => Decision::Yes(()),
                Decision::No => Decision::No,
                Decision::Unknown(m) => Decision::Unknown(m),
            })
            .collect();
        for (v, r) in chunk.iter().zip(res) {
            match r {
                Decision::Yes(()) => {
                    best = Some(*v);
                    break;
                }
                Decision::Unknown(_) => {
                    lower.get_or_insert(v.0 + v.1);
                }
                Decision::No => {}
            }
        }
        if best.is_some() {
            break;
        }
    }
    let Some((bx, by)) = best else {
        return Ok(Distance {
            value: ExtRat::PosInf,
            lower: lower.map_or(ExtRat::PosInf, |l| ExtRat::Fin(sc.back(l))),
            attained: false,
            shifts: None,
            certificate: None,
        });
    };
    let total = bx + by;

    // Attainment: every crossing of the line a + b = total, and the midpoints between them.
    let mut xs: BTreeSet<i128> = da.iter().copied().filter(|&x| x <= total).collect();
    xs.extend(db.iter().filter(|&&y| y <= total).map(|&y| total - y));
    xs.insert(0);
    xs.insert(total);
    let xs: Vec<i128> = xs.into_iter().collect();
    let mut probes: Vec<i128> = xs.clone();
    probes.extend(xs.windows(2).map(|w| (w[0] + w[1]) / 2));
    probes.sort();
    let exact: Option<(i128, i128)> = probes
        .par_iter()
        .find_first(|&&x| both_ways(&fi, &gi, x, total - x, bits).is_yes())
        .map(|&x| (x, total - x));
    let (wx, wy) = exact.unwrap_or((bx + EPS, by + EPS));
    let (wa, wb) = (sc.back(wx), sc.back(wy));
    let certificate = match both_ways(&fi, &gi, wx, wy, bits) {
        Decision::Yes((x, y)) => match certificate_from(cfg.field, &fs, &gs, &wa, &wb, &x, &y)? {
            Decision::Yes(c) => Some(c),
            _ => None,
        },
        _ => None,
    };
    let value = ExtRat::Fin(sc.back(total));
    Ok(Distance {
        lower: lower.filter(|&l| l < total).map_or(value.clone(), |l| ExtRat::Fin(sc.back(l))),
        value,
        attained: exact.is_some(),
        shifts: Some((wa, wb)),
        certificate,
    })
}

/// Compose an `(a0,b0)`-interleaving `F0 ~ F1` with an `(a1,b1)`-interleaving `F1 ~ F2`.
pub fn compose_certificates(c01: &InterleavingCertificate, c12: &InterleavingCertificate) -> Result<InterleavingCertificate> {
    if c01.g != c12.f {
        return Err(Error::Parameter("certificates do not share the middle barcode".into()));
    }
    c01.verify()?;
    c12.verify()?;
    let out = InterleavingCertificate {
        a: &c01.a + &c12.a,
        b: &c01.b + &c12.b,
        f: c01.f.clone(),
        g: c12.g.clone(),
        alpha: c01.alpha.then(&c12.alpha)?,
        beta: c12.beta.then(&c01.beta)?,
        gamma: c12.gamma.then(&c01.gamma)?,
        delta: c01.delta.then(&c12.delta)?,
        provenance: "composite".into(),
    };
    out.verify()?;
    Ok(out)
}

/// Certificate for a rigid translation of every bar by `u` (either sign).
///
/// Moving bars left by `u ≥ 0` costs `(0,u)`: `α = δ` are the shift maps and
/// `β = γ` the identifications; moving right costs `(u,0)`.
pub fn translation_certificate(field: Field, f: &GradedBarcode, u: &Rat) -> Result<InterleavingCertificate> {
    let fs = f.sorted();
    let g = f.shift_any(u).sorted();
    let (a, b) = if u.is_negative() { (Rat::zero(), -u) } else { (u.clone(), Rat::zero()) };
    let mut alpha = BarMorphism::zero(field, a.clone(), fs.clone(), g.clone());
    let mut beta = BarMorphism::zero(field, b.clone(), g.clone(), fs.clone());
    for i in 0..fs.len() {
        if hom_dim(&fs[i], &g[i], &a) == 1 {
            alpha.coef[(i, i)] = field.one();
        }
        if hom_dim(&g[i], &fs[i], &b) == 1 {
            beta.coef[(i, i)] = field.one();
        }
    }
    let cert = InterleavingCertificate {
        a,
        b,
        f: fs,
        g,
        gamma: beta.clone(),
        delta: alpha.clone(),
        alpha,
        beta,
        provenance: "translation".into(),
    };
    cert.verify()?;
    Ok(cert)
}

/// Per-step shifts `(g_k Δs_k + ε, f_k Δs_k + ε)` of a discretized homotopy.
pub fn homotopy_step_shifts(f_bounds: &[Rat], g_bounds: &[Rat], ds: &[Rat], eps: &Rat) -> Result<Vec<(Rat, Rat)>> {
    if f_bounds.len() != ds.len() || g_bounds.len() != ds.len() {
        return Err(Error::Parameter("bound and step lists differ in length".into()));
    }
    if eps.is_negative() || ds.iter().chain(f_bounds).chain(g_bounds).any(Signed::is_negative) {
        return Err(Error::Parameter("bounds, steps and slack must be non-negative".into()));
    }
    Ok(ds.iter().zip(f_bounds.iter().zip(g_bounds)).map(|(d, (fk, gk))| (gk * d + eps, fk * d + eps)).collect())
}

/// Chain step certificates along a sampled family into one `F_0 ~ F_N` certificate.
///
/// `steps[k]` is either a supplied certificate for `F_k ~ F_{k+1}` or the
/// shifts at which one is searched for. Fails naming the first step without one.
pub fn homotopy_compose(
    family: &[GradedBarcode],
    steps: &[HomotopyStep],
    cfg: &SearchConfig,
) -> Result<InterleavingCertificate> {
    if family.is_empty() || steps.len() + 1 != family.len() {
        return Err(Error::Parameter("a family of N+1 barcodes needs N steps".into()));
    }
    let mut acc = InterleavingCertificate::identity(cfg.field, &family[0]);
    for (k, step) in steps.iter().enumerate() {
        let cert = match step {
            HomotopyStep::Given(c) => {
                c.verify().map_err(|e| Error::Verification(format!("step {k}: {e}")))?;
                if c.f_barcode() != family[k] || c.g_barcode() != family[k + 1] {
                    return Err(Error::Verification(format!("step {k}: certificate is for different barcodes")));
                }
                c.clone()
            }
            HomotopyStep::Search(a, b) => match is_interleaved(&family[k], &family[k + 1], a, b, cfg)? {
                Decision::Yes(c) => c,
                Decision::No => {
                    return Err(Error::Verification(format!("step {k}: not ({a},{b})-interleaved")))
                }
                Decision::Unknown(m) => return Err(Error::Verification(format!("step {k}: undecided ({m})"))),
            },
        };
        acc = compose_certificates(&acc, &cert)?;
    }
    acc.provenance = format!("homotopy of {} steps", steps.len());
    Ok(acc)
}

/// One step of [`homotopy_compose`].
#[derive(Clone, Debug)]
pub enum HomotopyStep {
    Given(InterleavingCertificate),
    Search(Rat, Rat),
}

/// Family moved rigidly in `t`: step `k` translates every bar by `h_k·Δs`.
///
/// Returns the family and its composed certificate, whose total `a + b` is
/// the Riemann sum `Σ |h_k| Δs`.
pub fn pure_shift_family(
    field: Field,
    f: &GradedBarcode,
    profile: &[Rat],
    ds: &Rat,
) -> Result<(Vec<GradedBarcode>, InterleavingCertificate)> {
    if !ds.is_positive() {
        return Err(Error::Parameter(format!("step {ds} must be positive")));
    }
    let mut family = vec![f.clone().into_sorted()];
    let mut steps = Vec::new();
    for h in profile {
        let last = family.last().unwrap();
        let cert = translation_certificate(field, last, &(h * ds))?;
        family.push(cert.g_barcode());
        steps.push(HomotopyStep::Given(cert));
    }
    let cfg = SearchConfig { field, ..SearchConfig::default() };
    let cert = homotopy_compose(&family, &steps, &cfg)?;
    Ok((family, cert))
}

/// Bars of the `Hom` part of the Hom persistence module, labelled by `(f index, g index)`.
pub fn hom_bars_labelled(f: &[Bar], g: &[Bar]) -> Vec<(Bar, usize, usize)> {
    let mut v: Vec<(Bar, usize, usize)> = f
        .iter()
        .enumerate()
        .flat_map(|(i, fb)| g.iter().enumerate().filter_map(move |(j, gb)| pair_hom_bar(fb, gb).map(|h| (h, i, j))))
        .collect();
    v.sort();
    v
}

/// Interleaving of `Hom` persistence modules induced by interleavings of both arguments.
///
/// From `F0 ~ F1` with `(a_F, b_F)` and `G0 ~ G1` with `(a_G, b_G)` the maps
/// `φ ↦ α_G φ β_F` and `ψ ↦ β_G ψ α_F` (and likewise with `γ, δ`) interleave
/// `Hom(F0, T_c G0)` with `Hom(F1, T_c G1)` at shifts `(b_F + a_G, a_F + b_G)`.
pub fn hom_certificate(cf: &InterleavingCertificate, cg: &InterleavingCertificate) -> Result<InterleavingCertificate> {
    cf.verify()?;
    cg.verify()?;
    let field = cf.field();
    if cg.field() != field {
        return Err(Error::FieldMismatch("certificates over different fields".into()));
    }
    let h0 = hom_bars_labelled(&cf.f, &cg.f);
    let h1 = hom_bars_labelled(&cf.g, &cg.g);
    let bars = |h: &[(Bar, usize, usize)]| h.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    let (a, b) = (&cf.b + &cg.a, &cf.a + &cg.b);
    // Pre-composition with `pre` (indexed (target i_src_side, source)) and post with `post`.
    let induced = |src: &[(Bar, usize, usize)],
                   dst: &[(Bar, usize, usize)],
                   shift: &Rat,
                   post: &BarMorphism,
                   pre: &BarMorphism|
     -> BarMorphism {
        let mut m = BarMorphism::zero(field, shift.clone(), bars(src), bars(dst));
        for (s, (sb, si, sj)) in src.iter().enumerate() {
            for (t, (tb, ti, tj)) in dst.iter().enumerate() {
                if hom_dim(sb, tb, shift) == 0 {
                    continue;
                }
                // post: G_src → G_dst at (tj, sj); pre: F_dst → F_src at (si, ti).
                let v = &post.coef[(*tj, *sj)] * &pre.coef[(*si, *ti)];
                m.coef[(t, s)] = v;
            }
        }
        m
    };
    let cert = InterleavingCertificate {
        alpha: induced(&h0, &h1, &a, &cg.alpha, &cf.beta),
        beta: induced(&h1, &h0, &b, &cg.beta, &cf.alpha),
        gamma: induced(&h1, &h0, &b, &cg.gamma, &cf.delta),
        delta: induced(&h0, &h1, &a, &cg.delta, &cf.gamma),
        f: bars(&h0),
        g: bars(&h1),
        a,
        b,
        provenance: "hom".into(),
    };
    cert.verify()?;
    Ok(cert)
}

// ---------------------------------------------------------------------------
// Grid-level certificates.

fn comp(m: &GridMorphism, k: i32, t: &ExtRat) -> Matrix {
    let rows = m.target.dim_at(k, t);
    let cols = m.source.dim_at(k, t);
    match (m.points.iter().rposition(|p| p <= t), m.comps.get(&k)) {
        (Some(i), Some(c)) => c[i].clone(),
        _ => Matrix::zeros(m.source.field(), rows, cols),
    }
}

/// `(T_x second) ∘ first` for `first : X → T_x Y` and `second : Y → T_y Z`.
pub fn compose_grid(first: &GridMorphism, second: &GridMorphism) -> Result<GridMorphism> {
    let x = &first.shift;
    let back: Vec<ExtRat> = second.points.iter().map(|p| p.sub_rat(x)).collect();
    let points = union_points([&first.points[..], &back[..]]);
    let source = first.source.refine(&points)?;
    let target = second.target.relabel(x).refine(&points)?;
    let degrees: BTreeSet<i32> = source.degrees().into_iter().chain(target.degrees()).collect();
    let comps = degrees
        .into_iter()
        .map(|k| {
            let cs = points.iter().map(|t| comp(second, k, &t.add_rat(x)).mul(&comp(first, k, t))).collect();
            (k, cs)
        })
        .collect();
    Ok(GridMorphism { shift: x + &second.shift, points, source, target, comps })
}

/// The grid presentation of a barcode morphism, on the grid of all relevant endpoints.
pub fn to_grid(m: &BarMorphism) -> Result<GridMorphism> {
    let field = m.field();
    let src = GradedBarcode::new(m.source.clone());
    let dst = GradedBarcode::new(m.target.clone());
    let fm = GridModule::from_barcode(&src, field);
    let gm = GridModule::from_barcode(&dst, field).relabel(&m.shift);
    let points = union_points([fm.points(), gm.points()]);
    let source = fm.refine(&points)?;
    let target = gm.refine(&points)?;
    let degrees: BTreeSet<i32> = src.degrees().into_iter().chain(dst.degrees()).collect();
    let mut comps = BTreeMap::new();
    for k in degrees {
        let si: Vec<usize> = (0..m.source.len()).filter(|&i| m.source[i].degree == k).collect();
        let ti: Vec<usize> = (0..m.target.len()).filter(|&j| m.target[j].degree == k).collect();
        let cs = points
            .iter()
            .map(|t| {
                let ts = t.add_rat(&m.shift);
                let alive_s: Vec<usize> = si.iter().copied().filter(|&i| m.source[i].contains(t)).collect();
                let alive_t: Vec<usize> = ti.iter().copied().filter(|&j| m.target[j].contains(&ts)).collect();
                let mut c = Matrix::zeros(field, alive_t.len(), alive_s.len());
                for (r, &j) in alive_t.iter().enumerate() {
                    for (col, &i) in alive_s.iter().enumerate() {
                        c[(r, col)] = m.coef[(j, i)].clone();
                    }
                }
                c
            })
            .collect();
        comps.insert(k, cs);
    }
    let g = GridMorphism { shift: m.shift.clone(), points, source, target, comps };
    if !g.is_natural() {
        return Err(Error::Verification("barcode morphism is not natural on the grid".into()));
    }
    Ok(g)
}

/// Equality of two grid morphisms with the same shift, compared on a common grid.
pub fn grid_morphisms_equal(x: &GridMorphism, y: &GridMorphism) -> bool {
    if x.shift != y.shift {
        return false;
    }
    let points = union_points([&x.points[..], &y.points[..]]);
    let degrees: BTreeSet<i32> = x.comps.keys().chain(y.comps.keys()).copied().collect();
    degrees.iter().all(|&k| points.iter().all(|t| comp(x, k, t) == comp(y, k, t)))
}

/// An `(a,b)`-interleaving of grid modules.
#[derive(Clone, Debug)]
pub struct GridCertificate {
    pub a: Rat,
    pub b: Rat,
    pub f: GridModule,
    pub g: GridModule,
    pub alpha: GridMorphism,
    pub beta: GridMorphism,
    pub gamma: GridMorphism,
    pub delta: GridMorphism,
}

impl GridCertificate {
    pub fn verify(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Verification(m.into()));
        for (name, m, s) in [("alpha", &self.alpha, &self.a), ("beta", &self.beta, &self.b), ("gamma", &self.gamma, &self.b), ("delta", &self.delta, &self.a)] {
            if &m.shift != s {
                return fail(&format!("{name} has the wrong shift"));
            }
            if !m.is_natural() {
                return fail(&format!("{name} is not natural"));
            }
        }
        let s = &self.a + &self.b;
        if !grid_morphisms_equal(&compose_grid(&self.alpha, &self.beta)?, &tau(&self.f, &s)?) {
            return fail("beta after alpha is not the shift map of F");
        }
        if !grid_morphisms_equal(&compose_grid(&self.gamma, &self.delta)?, &tau(&self.g, &s)?) {
            return fail("delta after gamma is not the shift map of G");
        }
        Ok(())
    }
}

/// `(0,c)`-interleaving of `G` and `H` from a short exact sequence `0 → F → G → H → 0`
/// whose kernel `F` is `c`-torsion: `α = δ = p` and `β = γ` the lift of `τ_{0,c}(G)`.
pub fn ses_certificate(i: &GridMorphism, p: &GridMorphism, c: &Rat) -> Result<GridCertificate> {
    if !i.shift.is_zero() || !p.shift.is_zero() {
        return Err(Error::Parameter("sequence maps must have shift 0".into()));
    }
    if c.is_negative() {
        return Err(Error::Parameter(format!("negative shift {c}")));
    }
    let (f, g, h) = (&i.source, &p.source, &p.target);
    let field = g.field();
    let pts = union_points([&i.points[..], &p.points[..]]);
    let degrees: BTreeSet<i32> = f.degrees().into_iter().chain(g.degrees()).chain(h.degrees()).collect();
    for &k in &degrees {
        for t in &pts {
            let (ik, pk) = (comp(i, k, t), comp(p, k, t));
            let (df, dg, dh) = (f.dim_at(k, t), g.dim_at(k, t), h.dim_at(k, t));
            let exact = ik.rows() == dg
                && pk.cols() == dg
                && (dg == 0 || pk.mul(&ik).is_zero())
                && ik.rank() == df
                && pk.rank() == dh
                && dg == df + dh;
            if !exact {
                return Err(Error::Structure(format!("sequence is not exact in degree {k} at {t}")));
            }
        }
    }
    if !tau(f, c)?.is_zero() {
        return Err(Error::Precondition(format!("kernel is not {c}-torsion")));
    }
    // Solve Σ y_m (β_m ∘ p) = τ_{0,c}(G) over a basis β_m of Hom(H, T_c G).
    let extra = union_points([&pts[..], g.points()]);
    let basis = morphism_space_on(h, g, c, &extra)?;
    let target = tau(g, c)?;
    let prods: Vec<GridMorphism> = basis.iter().map(|be| compose_grid(p, be)).collect::<Result<_>>()?;
    let grid = union_points(prods.iter().map(|m| &m.points[..]).chain([&target.points[..]]));
    let mut cols: Vec<Vec<FieldElem>> = Vec::new();
    let flatten = |m: &GridMorphism| -> Vec<FieldElem> {
        let mut v = Vec::new();
        for &k in &degrees {
            for t in &grid {
                let x = comp(m, k, t);
                for r in 0..x.rows() {
                    for s in 0..x.cols() {
                        v.push(x[(r, s)].clone());
                    }
                }
            }
        }
        v
    };
    for m in &prods {
        cols.push(flatten(m));
    }
    let rhs = flatten(&target);
    let sys = Matrix::from_columns(field, rhs.len(), &cols);
    let y = sys
        .solve(&rhs)
        .ok_or_else(|| Error::Verification("no lift of the shift map through the quotient".into()))?;
    let mut beta = match basis.first() {
        Some(m) => GridMorphism { comps: BTreeMap::new(), ..m.clone() },
        None => {
            let gs = g.relabel(c);
            let points = union_points([&extra[..], h.points(), gs.points()]);
            GridMorphism {
                shift: c.clone(),
                source: h.refine(&points)?,
                target: gs.refine(&points)?,
                points,
                comps: BTreeMap::new(),
            }
        }
    };
    if let Some(first) = basis.first() {
        for (k, cs) in &first.comps {
            let mut acc: Vec<Matrix> = cs.iter().map(|m| Matrix::zeros(field, m.rows(), m.cols())).collect();
            for (ym, bm) in y.iter().zip(&basis) {
                for (a, m) in acc.iter_mut().zip(&bm.comps[k]) {
                    *a = a.add(&m.scale(ym));
                }
            }
            beta.comps.insert(*k, acc);
        }
    }
    let cert = GridCertificate {
        a: Rat::zero(),
        b: c.clone(),
        f: g.clone(),
        g: h.clone(),
        alpha: p.clone(),
        beta: beta.clone(),
        gamma: beta,
        delta: p.clone(),
    };
    cert.verify()?;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::brute_force_interleaved;
    use crate::rat::{int, rat};
    use proptest::prelude::*;

    fn bar(b: i64, d: i64) -> Bar {
        Bar::finite(int(b), int(d))
    }

    fn half(b: i64, d: i64) -> Bar {
        Bar::finite(rat(b, 2), rat(d, 2))
    }

    #[test]
    fn hom_rule_matches_grid_morphisms() {
        let cs = [int(0), rat(1, 2), int(1), rat(3, 2), int(2)];
        for b1 in 0..4 {
            for d1 in b1 + 1..5 {
                for b2 in 0..4 {
                    for d2 in b2 + 1..5 {
                        let (x, y) = (half(b1, d1), half(b2, d2));
                        let fx = GridModule::from_barcode(&GradedBarcode::new(vec![x.clone()]), Field::F2);
                        let gy = GridModule::from_barcode(&GradedBarcode::new(vec![y.clone()]), Field::F2);
                        for c in &cs {
                            let dim = crate::grid::morphism_space(&fx, &gy, c).unwrap().len();
                            assert_eq!(hom_dim(&x, &y, c), dim, "{x} -> {y} at {c}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hom_examples() {
        assert_eq!(hom_dim(&bar(0, 1), &bar(0, 1), &rat(1, 2)), 1);
        assert_eq!(hom_dim(&bar(0, 1), &bar(0, 1), &int(1)), 0);
        assert_eq!(hom_dim(&bar(0, 4), &bar(1, 3), &int(1)), 1);
        assert_eq!(hom_dim(&bar(0, 4), &Bar::new(1, ExtRat::zero(), ExtRat::Fin(int(4))).unwrap(), &int(0)), 0);
    }

    #[test]
    fn ext_and_hom_pair_bars() {
        // [0,2) against [1,3): Hom generators for c ∈ [1,3), Ext for c ∈ [0,1).
        let h = pair_hom_bar(&bar(0, 2), &bar(1, 3)).unwrap();
        assert_eq!((h.birth, h.death), (ExtRat::Fin(int(1)), ExtRat::Fin(int(3))));
        let e = pair_ext_bar(&bar(0, 2), &bar(1, 3)).unwrap();
        assert_eq!((e.degree, e.birth, e.death), (1, ExtRat::zero(), ExtRat::Fin(int(1))));
        assert!(pair_ext_bar(&bar(1, 3), &bar(0, 2)).is_none());
        let same = pair_hom_bar(&half(0, 1), &half(0, 1)).unwrap();
        assert_eq!(same.length(), ExtRat::Fin(rat(1, 2)));
        // G entirely earlier than F: nothing for c ≥ 0.
        assert!(pair_hom_bar(&bar(10, 11), &bar(0, 1)).is_none());
    }

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    fn bc(v: &[(i64, i64)]) -> GradedBarcode {
        v.iter().map(|&(b, d)| bar(b, d)).collect()
    }

    #[test]
    fn distance_examples() {
        let d = translation_distance(&bc(&[(0, 1)]), &GradedBarcode::from_pairs(&[(int(0), rat(1, 2))]), &cfg()).unwrap();
        assert_eq!(d.value, ExtRat::Fin(rat(1, 2)));
        assert!(d.attained);
        let d = translation_distance(&bc(&[(0, 4)]), &bc(&[(1, 3)]), &cfg()).unwrap();
        assert_eq!(d.value, ExtRat::Fin(int(2)));
        let same = bc(&[(0, 2), (1, 5)]);
        let d = translation_distance(&same, &same, &cfg()).unwrap();
        assert_eq!(d.value, ExtRat::zero());
        assert!(d.attained);
        let inf = GradedBarcode::new(vec![Bar::new(0, ExtRat::zero(), ExtRat::PosInf).unwrap()]);
        let d = translation_distance(&inf, &bc(&[(0, 5)]), &cfg()).unwrap();
        assert_eq!(d.value, ExtRat::PosInf);
    }

    #[test]
    fn interleaving_examples() {
        let f = bc(&[(0, 1)]);
        let zero = GradedBarcode::empty();
        assert!(is_interleaved(&f, &zero, &rat(1, 2), &rat(1, 2), &cfg()).unwrap().is_yes());
        assert_eq!(is_interleaved(&f, &zero, &rat(1, 4), &rat(1, 4), &cfg()).unwrap(), Decision::No);
        let Decision::Yes(c) = is_interleaved(&bc(&[(0, 4)]), &bc(&[(1, 3)]), &int(1), &int(1), &cfg()).unwrap() else {
            panic!("expected an interleaving")
        };
        c.verify().unwrap();
    }

    #[test]
    fn translation_certificates_compose() {
        let f = bc(&[(0, 3), (1, 2)]);
        let c = translation_certificate(Field::F2, &f, &rat(-1, 2)).unwrap();
        assert_eq!((c.a.clone(), c.b.clone()), (int(0), rat(1, 2)));
        let c2 = translation_certificate(Field::F2, &c.g_barcode(), &rat(-1, 4)).unwrap();
        let both = compose_certificates(&c, &c2).unwrap();
        assert_eq!((both.a, both.b), (int(0), rat(3, 4)));
        let right = translation_certificate(Field::Rational, &f, &int(1)).unwrap();
        assert_eq!((right.a, right.b), (int(1), int(0)));
    }

    #[test]
    fn cert_text_round_trip() {
        let Decision::Yes(c) = is_interleaved(&bc(&[(0, 4), (2, 3)]), &bc(&[(1, 3)]), &int(1), &int(1), &cfg()).unwrap() else {
            panic!()
        };
        let back = InterleavingCertificate::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let mut bad = c.to_text().replace("alpha 0 0 1", "");
        bad.push('\n');
        assert!(matches!(InterleavingCertificate::from_text(&bad), Err(Error::Verification(_))));
        assert!(matches!(InterleavingCertificate::from_text("cert v1\nfield f2\nshifts a=x b=1\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn hom_certificate_of_translation() {
        let f = bc(&[(0, 3)]);
        let g = bc(&[(1, 4), (0, 2)]);
        let cf = InterleavingCertificate::identity(Field::F2, &f);
        let cg = translation_certificate(Field::F2, &g, &rat(-1, 2)).unwrap();
        let h = hom_certificate(&cf, &cg).unwrap();
        assert_eq!((h.a, h.b), (int(0), rat(1, 2)));
    }

    #[test]
    fn factorization_examples() {
        let (f, g) = (bc(&[(0, 4)]), bc(&[(1, 3)]));
        assert!(factors_through(&f, &g, &int(1), &int(1), &cfg()).unwrap().is_yes());
        assert_eq!(factors_through(&f, &g, &rat(1, 2), &rat(1, 2), &cfg()).unwrap(), Decision::No);
        assert_eq!(is_interleaved(&f, &g, &rat(1, 2), &int(1), &cfg()).unwrap(), Decision::No);
        let short = bc(&[(0, 1), (3, 4)]);
        let Decision::Yes((al, be)) = factors_through(&short, &g, &int(1), &int(0), &cfg()).unwrap() else { panic!() };
        assert!(al.is_zero() && be.is_zero());
        assert!(tau_morphism(Field::F2, &f, &int(-1)).is_err());
        let t = |c: Rat| tau_morphism(Field::F2, &GradedBarcode::from_pairs(&[(int(0), rat(2, 3))]), &c).unwrap();
        assert!(!t(rat(1, 2)).is_zero());
        assert!(t(rat(2, 3)).is_zero());
    }

    #[test]
    fn identity_is_neutral_for_composition() {
        let Decision::Yes(c) = is_interleaved(&bc(&[(0, 4), (2, 3)]), &bc(&[(1, 3)]), &int(1), &int(2), &cfg()).unwrap() else {
            panic!()
        };
        let id = InterleavingCertificate::identity(Field::F2, &c.f_barcode());
        let back = compose_certificates(&id, &c).unwrap();
        assert_eq!((&back.alpha, &back.beta, &back.gamma, &back.delta), (&c.alpha, &c.beta, &c.gamma, &c.delta));
    }

    #[test]
    fn quotient_direction_sequence_is_not_exact() {
        // [0,1) is a quotient of [0,3), not a submodule: there is no nonzero map [0,1) → [0,3).
        let field = Field::F2;
        let f = GridModule::from_barcode(&bc(&[(0, 1)]), field);
        let g = GridModule::from_barcode(&bc(&[(0, 3)]), field);
        assert!(crate::grid::morphism_space(&f, &g, &int(0)).unwrap().is_empty());
        let h = GridModule::from_barcode(&bc(&[(1, 3)]), field);
        let p = crate::grid::morphism_space(&g, &h, &int(0)).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn ses_from_torsion_kernel() {
        // 0 → [2,3) → [0,3) → [0,2) → 0; the kernel is 1-torsion.
        let field = Field::Rational;
        let g = GridModule::from_barcode(&bc(&[(0, 3)]), field);
        let f = GridModule::from_barcode(&bc(&[(2, 3)]), field);
        let h = GridModule::from_barcode(&bc(&[(0, 2)]), field);
        let i = crate::grid::morphism_space(&f, &g, &int(0)).unwrap().remove(0);
        let p = crate::grid::morphism_space(&g, &h, &int(0)).unwrap().remove(0);
        let cert = ses_certificate(&i, &p, &int(1)).unwrap();
        cert.verify().unwrap();
        assert!(matches!(ses_certificate(&i, &p, &rat(1, 2)), Err(Error::Precondition(_))));
    }

    fn small_barcode() -> impl Strategy<Value = GradedBarcode> {
        proptest::collection::vec((0i64..5, 1i64..4, 0i32..2), 0..4).prop_map(|v| {
            v.into_iter()
                .map(|(b, l, deg)| Bar::new(deg, ExtRat::Fin(rat(b, 2)), ExtRat::Fin(rat(b + l, 2))).unwrap())
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn search_agrees_with_exhaustive_oracle(f in small_barcode(), g in small_barcode(), a in 0i64..4, b in 0i64..4) {
            let (a, b) = (rat(a, 2), rat(b, 2));
            let fast = is_interleaved(&f, &g, &a, &b, &cfg()).unwrap();
            let gf = GridModule::from_barcode(&f, Field::F2);
            let gg = GridModule::from_barcode(&g, Field::F2);
            let slow = brute_force_interleaved(&gf, &gg, &a, &b).unwrap();
            prop_assert_eq!(fast.is_yes(), slow);
            if let Decision::Yes(c) = fast {
                prop_assert!(c.verify().is_ok());
            }
        }

        #[test]
        fn distance_is_a_pseudometric(f in small_barcode(), g in small_barcode(), h in small_barcode()) {
            let d = |x: &GradedBarcode, y: &GradedBarcode| translation_distance(x, y, &cfg()).unwrap().value;
            let (fg, gf) = (d(&f, &g), d(&g, &f));
            prop_assert_eq!(&fg, &gf);
            prop_assert_eq!(d(&f, &f), ExtRat::zero());
            let (gh, fh) = (d(&g, &h), d(&f, &h));
            if let (ExtRat::Fin(x), ExtRat::Fin(y)) = (&fg, &gh) {
                prop_assert!(fh <= ExtRat::Fin(x + y));
            }
        }

        #[test]
        fn distance_witness_verifies(f in small_barcode(), g in small_barcode()) {
            let d = translation_distance(&f, &g, &cfg()).unwrap();
            if d.value.is_finite() {
                let c = d.certificate.expect("finite distance has a witness");
                prop_assert!(c.verify().is_ok());
                let (a, b) = d.shifts.unwrap();
                let s = ExtRat::Fin(&a + &b);
                if d.attained { prop_assert_eq!(s, d.value.clone()); } else { prop_assert!(s > d.value.clone()); }
            }
        }
    }
}
