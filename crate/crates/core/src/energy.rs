//! Hom persistence between barcodes, the energy threshold `e_D`, and the
//! Novikov-module view of the same data.
//!
//! For each pair of bars the two-term complex
//! `⊕_p Hom(F_p, G_{p+c}) → ⊕_{p→p'} Hom(F_p, G_{p'+c})` on a common grid
//! computes `Hom` (kernel) and `Ext¹` (cokernel); post-composition with the
//! structure maps of `G` gives the maps in `c`. The resulting `c`-indexed grid
//! module is decomposed directly, so the closed-form pair bars in
//! [`crate::interleave`] stay an independent check.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::barcode::{Bar, GradedBarcode};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::grid::{GridModule, Layer};
use crate::interleave::{pair_ext_bar, pair_hom_bar};
use crate::linalg::Matrix;
use crate::novikov::{eliminate, NovikovScalar};
use crate::rat::{ExtRat, Rat};

/// The Hom persistence module in the shift variable `c ≥ 0`.
#[derive(Clone, Debug)]
pub struct HomPersistence {
    /// Bars in `c`; degree `deg G − deg F` for Hom, one more for `Ext¹`.
    pub barcode: GradedBarcode,
    /// One `c`-indexed module per bar pair.
    pub parts: Vec<GridModule>,
}

impl HomPersistence {
    pub fn dim_at(&self, k: i32, c: &Rat) -> usize {
        self.parts.iter().map(|m| m.dim_at(k, &ExtRat::Fin(c.clone()))).sum()
    }

    /// Rank of the map induced by `τ_{c,c'}` in degree `k`.
    pub fn rank(&self, k: i32, c: &Rat, c2: &Rat) -> usize {
        let (s, t) = (ExtRat::Fin(c.clone()), ExtRat::Fin(c2.clone()));
        self.parts.iter().map(|m| m.structure_map(k, &s, &t).rank()).sum()
    }

    /// Longest bar in `c`, optionally restricted to degree 0.
    pub fn threshold(&self, deg0_only: bool) -> ExtRat {
        if deg0_only {
            self.barcode.in_degree(0).torsion_threshold()
        } else {
            self.barcode.torsion_threshold()
        }
    }
}

struct TwoTerm {
    d: Matrix,
    offs0: Vec<usize>,
    offs1: Vec<usize>,
}

/// The complex for `Hom(F, T_c G)` of single-degree modules on grid `q`.
fn two_term(f: &GridModule, g: &GridModule, c: &Rat, q: &[ExtRat]) -> TwoTerm {
    let field = f.field();
    let n = q.len();
    let df: Vec<usize> = q.iter().map(|p| f.dim_at(0, p)).collect();
    let dg: Vec<usize> = q.iter().map(|p| g.dim_at(0, &p.add_rat(c))).collect();
    let mut offs0 = vec![0; n + 1];
    for i in 0..n {
        offs0[i + 1] = offs0[i] + dg[i] * df[i];
    }
    let mut offs1 = vec![0; n];
    for i in 0..n.saturating_sub(1) {
        offs1[i + 1] = offs1[i] + dg[i + 1] * df[i];
    }
    let rows = if n == 0 { 0 } else { offs1[n - 1] };
    let mut d = Matrix::zeros(field, rows, offs0[n]);
    for i in 0..n.saturating_sub(1) {
        let a = f.structure_map(0, &q[i], &q[i + 1]);
        let b = g.structure_map(0, &q[i].add_rat(c), &q[i + 1].add_rat(c));
        // (B φ_i − φ_{i+1} A)[r][s]
        for r in 0..dg[i + 1] {
            for s in 0..df[i] {
                let row = offs1[i] + r * df[i] + s;
                for m in 0..dg[i] {
                    let v = offs0[i] + m * df[i] + s;
                    d[(row, v)] = &d[(row, v)] + &b[(r, m)];
                }
                for m in 0..df[i + 1] {
                    let v = offs0[i + 1] + r * df[i + 1] + m;
                    d[(row, v)] = &d[(row, v)] - &a[(m, s)];
                }
            }
        }
    }
    TwoTerm { d, offs0, offs1 }
}

/// Post-composition with `G_{p+c} → G_{p+c'}` on both terms.
fn post_compose(f: &GridModule, g: &GridModule, c: &Rat, c2: &Rat, q: &[ExtRat], x: &TwoTerm, y: &TwoTerm) -> (Matrix, Matrix) {
    let field = f.field();
    let n = q.len();
    let mut t0 = Matrix::zeros(field, y.d.cols(), x.d.cols());
    let mut t1 = Matrix::zeros(field, y.d.rows(), x.d.rows());
    for i in 0..n {
        let df = f.dim_at(0, &q[i]);
        let s = g.structure_map(0, &q[i].add_rat(c), &q[i].add_rat(c2));
        for r in 0..s.rows() {
            for m in 0..s.cols() {
                if s[(r, m)].is_zero() {
                    continue;
                }
                for col in 0..df {
                    t0[(y.offs0[i] + r * df + col, x.offs0[i] + m * df + col)] = s[(r, m)].clone();
                }
            }
        }
        if i + 1 < n {
            let s = g.structure_map(0, &q[i + 1].add_rat(c), &q[i + 1].add_rat(c2));
            for r in 0..s.rows() {
                for m in 0..s.cols() {
                    if s[(r, m)].is_zero() {
                        continue;
                    }
                    for col in 0..df {
                        t1[(y.offs1[i] + r * df + col, x.offs1[i] + m * df + col)] = s[(r, m)].clone();
                    }
                }
            }
        }
    }
    (t0, t1)
}

/// Columns of `[D | I]` beyond `D` that complete `col(D)` to the whole space.
fn cokernel_basis(d: &Matrix) -> Vec<Vec<FieldElem>> {
    let field = d.field();
    let aug = d.hstack(&Matrix::identity(field, d.rows()));
    aug.independent_columns()
        .into_iter()
        .filter(|&c| c >= d.cols())
        .map(|c| aug.column(c))
        .collect()
}

fn single(bar: &Bar, field: Field) -> GridModule {
    let b = Bar { degree: 0, ..bar.clone() };
    GridModule::from_barcode(&GradedBarcode::new(vec![b]), field)
}

/// Critical shifts of a pair: `0` and the positive finite endpoint differences.
fn critical(f: &Bar, g: &Bar) -> Vec<Rat> {
    let mut s: BTreeSet<Rat> = BTreeSet::new();
    s.insert(Rat::zero());
    for x in [&g.birth, &g.death] {
        for y in [&f.birth, &f.death] {
            if let (Some(x), Some(y)) = (x.finite(), y.finite()) {
                if x > y {
                    s.insert(x - y);
                }
            }
        }
    }
    s.into_iter().collect()
}

/// The `c`-indexed module of one bar pair, in degrees `l−k` (Hom) and `l−k+1` (Ext¹).
pub fn pair_module(f: &Bar, g: &Bar, field: Field) -> Result<GridModule> {
    let (fm, gm) = (single(f, field), single(g, field));
    let cs = critical(f, g);
    let q: Vec<ExtRat> = {
        let mut s: BTreeSet<ExtRat> = fm.points().iter().cloned().collect();
        for c in &cs {
            s.extend(gm.points().iter().map(|p| p.sub_rat(c)));
        }
        s.into_iter().collect()
    };
    let cx: Vec<TwoTerm> = cs.iter().map(|c| two_term(&fm, &gm, c, &q)).collect();
    let kers: Vec<Vec<Vec<FieldElem>>> = cx.iter().map(|t| t.d.nullspace()).collect();
    let cokers: Vec<Vec<Vec<FieldElem>>> = cx.iter().map(|t| cokernel_basis(&t.d)).collect();
    let mut hom = Layer { dims: kers.iter().map(Vec::len).collect(), maps: Vec::new() };
    let mut ext = Layer { dims: cokers.iter().map(Vec::len).collect(), maps: Vec::new() };
    for i in 0..cs.len().saturating_sub(1) {
        let (t0, t1) = post_compose(&fm, &gm, &cs[i], &cs[i + 1], &q, &cx[i], &cx[i + 1]);
        let next_k = Matrix::from_columns(field, cx[i + 1].d.cols(), &kers[i + 1]);
        let mut m0 = Matrix::zeros(field, kers[i + 1].len(), kers[i].len());
        for (j, v) in kers[i].iter().enumerate() {
            let y = next_k
                .solve(&t0.mul_vec(v))
                .ok_or_else(|| Error::Structure("post-composition left the kernel".into()))?;
            for (r, x) in y.into_iter().enumerate() {
                m0[(r, j)] = x;
            }
        }
        let w = Matrix::from_columns(field, cx[i + 1].d.rows(), &cokers[i + 1]).hstack(&cx[i + 1].d);
        let mut m1 = Matrix::zeros(field, cokers[i + 1].len(), cokers[i].len());
        for (j, v) in cokers[i].iter().enumerate() {
            let y = w.solve(&t1.mul_vec(v)).expect("complement and image span the space");
            for r in 0..cokers[i + 1].len() {
                m1[(r, j)] = y[r].clone();
            }
        }
        hom.maps.push(m0);
        ext.maps.push(m1);
    }
    let k = g.degree - f.degree;
    let layers = BTreeMap::from([(k, hom), (k + 1, ext)]);
    GridModule::new(field, cs.into_iter().map(ExtRat::Fin).collect(), layers)
}

/// Hom persistence of two barcodes, computed pair by pair on grids.
pub fn hom_persistence(f: &GradedBarcode, g: &GradedBarcode, field: Field) -> Result<HomPersistence> {
    let pairs: Vec<(Bar, Bar)> =
        f.sorted().into_iter().flat_map(|x| g.sorted().into_iter().map(move |y| (x.clone(), y))).collect();
    let parts: Vec<GridModule> = pairs.par_iter().map(|(x, y)| pair_module(x, y, field)).collect::<Result<_>>()?;
    let barcode = parts.iter().flat_map(|m| m.decompose().bars().to_vec()).collect::<GradedBarcode>().into_sorted();
    Ok(HomPersistence { barcode, parts })
}

/// The same barcode from the closed-form pair rules.
pub fn hom_barcode_closed_form(f: &GradedBarcode, g: &GradedBarcode) -> GradedBarcode {
    let mut out = GradedBarcode::empty();
    for x in f.bars() {
        for y in g.bars() {
            out.extend(pair_hom_bar(x, y));
            out.extend(pair_ext_bar(x, y));
        }
    }
    out.into_sorted()
}

/// Energy threshold: longest bar of the Hom persistence module.
pub fn e_d(f: &GradedBarcode, g: &GradedBarcode, field: Field, deg0_only: bool) -> Result<ExtRat> {
    Ok(hom_persistence(f, g, field)?.threshold(deg0_only))
}

/// A finitely presented module `Λ^generators / (relation columns)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovikovPresentation {
    pub field: Field,
    pub generators: usize,
    pub relations: usize,
    /// Row-major `generators × relations`.
    pub entries: Vec<NovikovScalar>,
    pub precision: Rat,
}

impl NovikovPresentation {
    pub fn new(field: Field, generators: usize, relations: usize, entries: Vec<NovikovScalar>, precision: Rat) -> Result<Self> {
        if entries.len() != generators * relations {
            return Err(Error::Structure("relation matrix has the wrong size".into()));
        }
        if entries.iter().any(|e| e.field() != field) {
            return Err(Error::FieldMismatch("relation entries over another field".into()));
        }
        Ok(NovikovPresentation { field, generators, relations, entries, precision })
    }

    /// `⊕ Λ/T^{e_i}`.
    pub fn diagonal(field: Field, exps: &[Rat], precision: Rat) -> Result<Self> {
        let n = exps.len();
        let mut entries = vec![NovikovScalar::zero(field, precision.clone()); n * n];
        for (i, e) in exps.iter().enumerate() {
            entries[i * n + i] = NovikovScalar::t_pow(field, e.clone(), precision.clone())?;
        }
        Self::new(field, n, n, entries, precision)
    }

    pub fn entry(&self, r: usize, c: usize) -> &NovikovScalar {
        &self.entries[r * self.relations + c]
    }
}

/// Degree-0 part of the Hom module over the Novikov ring.
///
/// One generator per degree-0 bar in `c`, placed at the bar's start and killed
/// by `T^{length}`.
pub fn novikov_module(f: &GradedBarcode, g: &GradedBarcode, field: Field, precision: &Rat) -> Result<NovikovPresentation> {
    if !f.all_finite() || !g.all_finite() {
        return Err(Error::Unsupported("infinite bars give a free Novikov summand".into()));
    }
    let bars = hom_barcode_closed_form(f, g).in_degree(0).sorted();
    let lengths: Vec<Rat> = bars.iter().map(|b| b.length().finite().cloned().expect("finite inputs")).collect();
    NovikovPresentation::diagonal(field, &lengths, precision.clone())
}

/// `inf { c : T^c annihilates }`, with the rank of any free part found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionExponent {
    pub value: ExtRat,
    pub free_rank: usize,
}

pub fn torsion_exponent(p: &NovikovPresentation) -> Result<TorsionExponent> {
    let e = eliminate(p.generators, p.relations, &p.entries, &p.precision)?;
    let value = if e.free_rank > 0 {
        ExtRat::PosInf
    } else {
        e.exponents.last().cloned().map_or_else(ExtRat::zero, ExtRat::Fin)
    };
    Ok(TorsionExponent { value, free_rank: e.free_rank })
}

/// Brute-force annihilator of a presentation whose exponents lie on `step·ℤ`.
///
/// Works in `k[s]/s^N` with `s = T^step` and `N = precision/step`, and finds
/// the least `m` with `s^m e_i` in the relation span for every generator by
/// solving the coefficient systems directly. Returns `+∞` when no `m < N` works.
pub fn brute_annihilator(p: &NovikovPresentation, step: &Rat) -> Result<ExtRat> {
    if !step.is_positive() {
        return Err(Error::Parameter("lattice step must be positive".into()));
    }
    let ratio = &p.precision / step;
    if !ratio.is_integer() {
        return Err(Error::Parameter("precision is not on the exponent lattice".into()));
    }
    let n: usize = num_traits::ToPrimitive::to_usize(&ratio.to_integer())
        .filter(|&n| n <= 512)
        .ok_or_else(|| Error::OracleScope("truncation too long for the brute-force oracle".into()))?;
    let (g, r, field) = (p.generators, p.relations, p.field);
    // coefficient tables a[i][j][t]
    let mut a = vec![vec![vec![field.zero(); n]; r]; g];
    for i in 0..g {
        for j in 0..r {
            for (c, e) in p.entry(i, j).terms() {
                let t = e / step;
                if !t.is_integer() {
                    return Err(Error::Parameter(format!("exponent {e} is off the lattice")));
                }
                let t: usize = num_traits::ToPrimitive::to_usize(&t.to_integer()).unwrap();
                a[i][j][t] = c.clone();
            }
        }
    }
    let mut sys = Matrix::zeros(field, g * n, r * n);
    for i in 0..g {
        for j in 0..r {
            for u in 0..n {
                if a[i][j][u].is_zero() {
                    continue;
                }
                for v in 0..n - u {
                    sys[(i * n + u + v, j * n + v)] = a[i][j][u].clone();
                }
            }
        }
    }
    let reachable = |m: usize| {
        (0..g).all(|i| {
            let mut rhs = vec![field.zero(); g * n];
            rhs[i * n + m] = field.one();
            sys.solve(&rhs).is_some()
        })
    };
    if g == 0 {
        return Ok(ExtRat::zero());
    }
    if !reachable(n - 1) {
        return Ok(ExtRat::PosInf);
    }
    let (mut lo, mut hi) = (0usize, n - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if reachable(mid) { hi = mid } else { lo = mid + 1 }
    }
    Ok(ExtRat::Fin(step * Rat::from_integer(lo.into())))
}
