//! Persistence modules presented on a finite grid of parameter values.
//!
//! A module on points `t_0 < … < t_{n-1}` is zero below `t_0`, constant on
//! each cell `[t_i, t_{i+1})`, and constant after `t_{n-1}`. Only `t_0` may be
//! `-∞`. A generator that should die at the end of the window is expressed by
//! a final point of dimension zero.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;

use crate::barcode::{content_lines, expect_field, expect_header, parse_err, Bar, GradedBarcode};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::linalg::Matrix;
use crate::rat::{ExtRat, Rat};

/// Dimensions and consecutive structure maps in one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub dims: Vec<usize>,
    /// `maps[i]` is `dims[i+1] × dims[i]`.
    pub maps: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridModule {
    field: Field,
    points: Vec<ExtRat>,
    layers: BTreeMap<i32, Layer>,
}

impl GridModule {
    pub fn new(field: Field, points: Vec<ExtRat>, layers: BTreeMap<i32, Layer>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if *p == ExtRat::PosInf || (i > 0 && *p == ExtRat::NegInf) {
                return Err(Error::Structure(format!("grid point {i} is {p}")));
            }
            if i > 0 && points[i - 1] >= *p {
                return Err(Error::Structure("grid must be strictly increasing".into()));
            }
        }
        let n = points.len();
        for (k, l) in &layers {
            if l.dims.len() != n || l.maps.len() != n.saturating_sub(1) {
                return Err(Error::Structure(format!("degree {k}: expected {n} dims and {} maps", n.saturating_sub(1))));
            }
            for (i, m) in l.maps.iter().enumerate() {
                if m.rows() != l.dims[i + 1] || m.cols() != l.dims[i] {
                    return Err(Error::Structure(format!(
                        "degree {k}: map {i} -> {} is {}x{}, expected {}x{}",
                        i + 1,
                        m.rows(),
                        m.cols(),
                        l.dims[i + 1],
                        l.dims[i]
                    )));
                }
                if m.field() != field {
                    return Err(Error::FieldMismatch(format!("map over {} in a {field} module", m.field())));
                }
            }
        }
        Ok(GridModule { field, points, layers })
    }

    pub fn zero(field: Field) -> Self {
        GridModule { field, points: Vec::new(), layers: BTreeMap::new() }
    }

    /// Present a barcode on the grid of its endpoints, with a formal `-∞`
    /// point when some bar is born at `-∞`.
    pub fn from_barcode(b: &GradedBarcode, field: Field) -> Self {
        let mut pts: BTreeSet<ExtRat> = b.endpoints().into_iter().map(ExtRat::Fin).collect();
        if b.bars().iter().any(|x| x.birth == ExtRat::NegInf) {
            pts.insert(ExtRat::NegInf);
        }
        Self::from_barcode_on(b, field, &pts.into_iter().collect::<Vec<_>>())
            .expect("endpoints lie on their own grid")
    }

    /// Present a barcode on a given grid, which must contain every endpoint.
    pub fn from_barcode_on(b: &GradedBarcode, field: Field, points: &[ExtRat]) -> Result<Self> {
        for bar in b.bars() {
            for e in [&bar.birth, &bar.death] {
                if *e != ExtRat::PosInf && !points.contains(e) {
                    return Err(Error::Structure(format!("endpoint {e} is not a grid point")));
                }
            }
        }
        let mut layers = BTreeMap::new();
        for k in b.degrees() {
            let bars = b.in_degree(k).sorted();
            let alive: Vec<Vec<usize>> = points
                .iter()
                .map(|p| (0..bars.len()).filter(|&j| bars[j].contains(p)).collect())
                .collect();
            let dims: Vec<usize> = alive.iter().map(Vec::len).collect();
            let maps = (0..points.len().saturating_sub(1))
                .map(|i| {
                    let mut m = Matrix::zeros(field, dims[i + 1], dims[i]);
                    for (c, j) in alive[i].iter().enumerate() {
                        if let Some(r) = alive[i + 1].iter().position(|x| x == j) {
                            m[(r, c)] = field.one();
                        }
                    }
                    m
                })
                .collect();
            layers.insert(k, Layer { dims, maps });
        }
        GridModule::new(field, points.to_vec(), layers)
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn points(&self) -> &[ExtRat] {
        &self.points
    }
    pub fn degrees(&self) -> Vec<i32> {
        self.layers.keys().copied().collect()
    }
    pub fn layer(&self, k: i32) -> Option<&Layer> {
        self.layers.get(&k)
    }

    /// Dimension at grid index `i` in degree `k`.
    pub fn dim(&self, k: i32, i: usize) -> usize {
        self.layers.get(&k).map_or(0, |l| l.dims[i])
    }

    /// Greatest grid index `i` with `points[i] ≤ t`.
    pub fn cell(&self, t: &ExtRat) -> Option<usize> {
        self.points.iter().rposition(|p| p <= t)
    }

    /// Dimension of the module at any parameter value.
    pub fn dim_at(&self, k: i32, t: &ExtRat) -> usize {
        self.cell(t).map_or(0, |i| self.dim(k, i))
    }

    /// Structure map between grid indices `i ≤ j`.
    pub fn map_between(&self, k: i32, i: usize, j: usize) -> Matrix {
        assert!(i <= j);
        let mut m = Matrix::identity(self.field, self.dim(k, i));
        if let Some(l) = self.layers.get(&k) {
            for s in i..j {
                m = l.maps[s].mul(&m);
            }
        }
        m
    }

    /// Structure map `M_s → M_t` for `s ≤ t`.
    pub fn structure_map(&self, k: i32, s: &ExtRat, t: &ExtRat) -> Matrix {
        assert!(s <= t, "structure maps go forward");
        match (self.cell(s), self.cell(t)) {
            (Some(i), Some(j)) => self.map_between(k, i, j),
            (None, Some(j)) => Matrix::zeros(self.field, self.dim(k, j), 0),
            (None, None) => Matrix::zeros(self.field, 0, 0),
            (Some(_), None) => unreachable!(),
        }
    }

    /// Same module on a finer grid containing every current point.
    pub fn refine(&self, points: &[ExtRat]) -> Result<GridModule> {
        for p in &self.points {
            if !points.contains(p) {
                return Err(Error::Structure(format!("refinement drops grid point {p}")));
            }
        }
        let cells: Vec<Option<usize>> = points.iter().map(|q| self.cell(q)).collect();
        let mut layers = BTreeMap::new();
        for k in self.degrees() {
            let dims: Vec<usize> = cells.iter().map(|c| c.map_or(0, |i| self.dim(k, i))).collect();
            let maps = (0..points.len().saturating_sub(1))
                .map(|s| match (cells[s], cells[s + 1]) {
                    (Some(i), Some(j)) => self.map_between(k, i, j),
                    _ => Matrix::zeros(self.field, dims[s + 1], dims[s]),
                })
                .collect();
            layers.insert(k, Layer { dims, maps });
        }
        GridModule::new(self.field, points.to_vec(), layers)
    }

    /// The module `t ↦ M_{t+c}`: every grid point moves to `p − c`.
    pub fn relabel(&self, c: &Rat) -> GridModule {
        GridModule {
            field: self.field,
            points: self.points.iter().map(|p| p.sub_rat(c)).collect(),
            layers: self.layers.clone(),
        }
    }

    /// Append a point of dimension zero: everything alive at the end dies there.
    pub fn ending_at(&self, t: Rat) -> Result<GridModule> {
        let t = ExtRat::Fin(t);
        if self.points.last().is_some_and(|p| *p >= t) {
            return Err(Error::Structure(format!("end point {t} is not after the grid")));
        }
        let mut points = self.points.clone();
        points.push(t);
        let mut layers = self.layers.clone();
        for l in layers.values_mut() {
            let last = *l.dims.last().unwrap_or(&0);
            l.dims.push(0);
            if points.len() > 1 {
                l.maps.push(Matrix::zeros(self.field, 0, last));
            }
        }
        GridModule::new(self.field, points, layers)
    }

    /// Change basis at every point: `V_i ↦ S_i V_i`. Each `S_i` must be invertible.
    pub fn conjugate(&self, k: i32, bases: &[Matrix]) -> Result<GridModule> {
        let Some(l) = self.layers.get(&k) else { return Ok(self.clone()) };
        let inv: Vec<Matrix> = bases
            .iter()
            .map(|s| {
                s.solve_matrix(&Matrix::identity(self.field, s.rows()))
                    .filter(|_| s.rank() == s.rows())
                    .ok_or_else(|| Error::Structure("basis change is not invertible".into()))
            })
            .collect::<Result<_>>()?;
        let maps = l.maps.iter().enumerate().map(|(i, a)| bases[i + 1].mul(a).mul(&inv[i])).collect();
        let mut out = self.clone();
        out.layers.insert(k, Layer { dims: l.dims.clone(), maps });
        Ok(out)
    }

    /// Interval decomposition by left-to-right basis change.
    ///
    /// A birth-tagged basis is carried along the grid; at each step images are
    /// tested for independence oldest first, so a dependent image marks the
    /// youngest generator involved as dying there.
    pub fn decompose(&self) -> GradedBarcode {
        let mut out = GradedBarcode::empty();
        let f = self.field;
        for (&k, l) in &self.layers {
            let n = self.points.len();
            if n == 0 {
                continue;
            }
            let mut basis: Vec<(usize, Vec<FieldElem>)> = unit_vectors(f, l.dims[0]).into_iter().map(|v| (0, v)).collect();
            for i in 0..n - 1 {
                basis.sort_by_key(|(b, _)| *b);
                let mut echelon = Echelon::new(l.dims[i + 1]);
                let mut next = Vec::new();
                for (b, v) in basis {
                    let w = l.maps[i].mul_vec(&v);
                    if echelon.insert(&w) {
                        next.push((b, w));
                    } else {
                        out.push(Bar { degree: k, birth: self.points[b].clone(), death: self.points[i + 1].clone() });
                    }
                }
                for e in unit_vectors(f, l.dims[i + 1]) {
                    if echelon.insert(&e) {
                        next.push((i + 1, e));
                    }
                }
                basis = next;
            }
            for (b, _) in basis {
                out.push(Bar { degree: k, birth: self.points[b].clone(), death: ExtRat::PosInf });
            }
        }
        out
    }

    /// Number of interval summands.
    pub fn total_bars(&self) -> usize {
        self.decompose().len()
    }

    /// Serialize in the `gridmod v1` format.
    pub fn to_text(&self) -> String {
        let mut s = format!("gridmod v1\nfield {}\ngrid", self.field.tag());
        for p in &self.points {
            s.push_str(&format!(" {p}"));
        }
        s.push('\n');
        for (k, l) in &self.layers {
            s.push_str(&format!("degree {k}\ndims"));
            for d in &l.dims {
                s.push_str(&format!(" {d}"));
            }
            s.push('\n');
            for (i, m) in l.maps.iter().enumerate() {
                s.push_str(&format!("map {} -> {}\n", i, i + 1));
                for r in 0..m.rows() {
                    let row: Vec<String> = m.row(r).iter().map(FieldElem::to_text).collect();
                    s.push_str(&row.join(" "));
                    s.push('\n');
                }
            }
        }
        s
    }

    /// Parse the `gridmod v1` format. An optional `end <rat>` line makes every
    /// generator alive at the last point die at `<rat>`.
    pub fn from_text(text: &str) -> Result<GridModule> {
        let mut lines = content_lines(text);
        expect_header(&mut lines, "gridmod")?;
        let field = expect_field(&mut lines)?;
        let (ln, gl) = lines.next().ok_or_else(|| parse_err(3, 1, "missing `grid` line".into()))?;
        let mut toks = gl.split_whitespace();
        if toks.next() != Some("grid") {
            return Err(parse_err(ln, 1, format!("expected `grid`, found {gl:?}")));
        }
        let points: Vec<ExtRat> = toks
            .map(|t| t.parse::<ExtRat>().map_err(|e| e.at_line(ln)))
            .collect::<Result<_>>()?;
        let n = points.len();
        let mut layers: BTreeMap<i32, Layer> = BTreeMap::new();
        let mut degree = 0i32;
        let mut end: Option<Rat> = None;
        let mut pending: Option<(usize, usize, usize, Vec<FieldElem>)> = None; // (line, map index, rows*cols, entries)
        let mut cur_dims: Option<Vec<usize>> = None;
        let mut cur_maps: Vec<Option<Matrix>> = Vec::new();
        let flush = |layers: &mut BTreeMap<i32, Layer>,
                     degree: i32,
                     dims: &mut Option<Vec<usize>>,
                     maps: &mut Vec<Option<Matrix>>,
                     ln: usize|
         -> Result<()> {
            if let Some(d) = dims.take() {
                let mut ms = Vec::new();
                for (i, m) in maps.drain(..).enumerate() {
                    match m {
                        Some(m) => ms.push(m),
                        None if d[i] == 0 || d[i + 1] == 0 => ms.push(Matrix::zeros(field, d[i + 1], d[i])),
                        None => return Err(parse_err(ln, 1, format!("degree {degree}: missing map {i} -> {}", i + 1))),
                    }
                }
                layers.insert(degree, Layer { dims: d, maps: ms });
            }
            Ok(())
        };
        let mut last_ln = ln;
        for (ln, line) in lines {
            last_ln = ln;
            let mut toks = line.split_whitespace().peekable();
            let head = *toks.peek().unwrap_or(&"");
            if let Some((mln, idx, want, entries)) = pending.as_mut() {
                if !matches!(head, "degree" | "dims" | "map" | "end") {
                    for t in toks {
                        entries.push(field.parse(t).map_err(|e| parse_err(ln, 1, e.to_string()))?);
                    }
                    if entries.len() > *want {
                        return Err(parse_err(ln, 1, format!("too many entries for map {idx}")));
                    }
                    if entries.len() == *want {
                        let d = cur_dims.as_ref().expect("dims before map");
                        let (r, c) = (d[*idx + 1], d[*idx]);
                        let mut m = Matrix::zeros(field, r, c);
                        for (e, x) in entries.drain(..).enumerate() {
                            m[(e / c.max(1), e % c.max(1))] = x;
                        }
                        cur_maps[*idx] = Some(m);
                        pending = None;
                    }
                    continue;
                } else if entries.len() < *want {
                    return Err(parse_err(*mln, 1, format!("map {idx}: expected {want} entries, found {}", entries.len())));
                }
            }
            match head {
                "degree" => {
                    flush(&mut layers, degree, &mut cur_dims, &mut cur_maps, ln)?;
                    toks.next();
                    degree = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(ln, 8, "expected an integer degree".into()))?;
                }
                "dims" => {
                    flush(&mut layers, degree, &mut cur_dims, &mut cur_maps, ln)?;
                    toks.next();
                    let d: Vec<usize> = toks
                        .map(|t| t.parse().map_err(|_| parse_err(ln, 6, format!("bad dimension {t:?}"))))
                        .collect::<Result<_>>()?;
                    if d.len() != n {
                        return Err(parse_err(ln, 1, format!("expected {n} dims, found {}", d.len())));
                    }
                    cur_maps = vec![None; n.saturating_sub(1)];
                    cur_dims = Some(d);
                }
                "map" => {
                    let parts: Vec<&str> = toks.collect();
                    let ok = parts.len() == 4 && parts[2] == "->";
                    let i: Option<usize> = if ok { parts[1].parse().ok() } else { None };
                    let j: Option<usize> = if ok { parts[3].parse().ok() } else { None };
                    let (Some(i), Some(j)) = (i, j) else {
                        return Err(parse_err(ln, 1, format!("expected `map i -> i+1`, found {line:?}")));
                    };
                    if j != i + 1 || j >= n {
                        return Err(parse_err(ln, 1, format!("map {i} -> {j} is not a grid step")));
                    }
                    let d = cur_dims.as_ref().ok_or_else(|| parse_err(ln, 1, "`map` before `dims`".into()))?;
                    let want = d[i] * d[j];
                    if want == 0 {
                        cur_maps[i] = Some(Matrix::zeros(field, d[j], d[i]));
                    } else {
                        pending = Some((ln, i, want, Vec::new()));
                    }
                }
                "end" => {
                    toks.next();
                    let t = toks.next().ok_or_else(|| parse_err(ln, 5, "missing end value".into()))?;
                    end = Some(crate::rat::parse_rat(t).map_err(|e| e.at_line(ln))?);
                }
                other => return Err(parse_err(ln, 1, format!("unexpected token {other:?}"))),
            }
        }
        if let Some((mln, idx, want, entries)) = pending {
            return Err(parse_err(mln, 1, format!("map {idx}: expected {want} entries, found {}", entries.len())));
        }
        flush(&mut layers, degree, &mut cur_dims, &mut cur_maps, last_ln)?;
        let m = GridModule::new(field, points, layers).map_err(|e| parse_err(last_ln, 1, e.to_string()))?;
        match end {
            Some(t) => m.ending_at(t).map_err(|e| parse_err(last_ln, 1, e.to_string())),
            None => Ok(m),
        }
    }
}

fn unit_vectors(f: Field, n: usize) -> Vec<Vec<FieldElem>> {
    (0..n)
        .map(|i| {
            let mut v = vec![f.zero(); n];
            v[i] = f.one();
            v
        })
        .collect()
}

/// Incremental row echelon basis for independence tests.
struct Echelon {
    rows: Vec<(usize, Vec<FieldElem>)>,
    n: usize,
}

impl Echelon {
    fn new(n: usize) -> Self {
        Echelon { rows: Vec::new(), n }
    }

    /// Insert `v`; returns false when it is already in the span.
    fn insert(&mut self, v: &[FieldElem]) -> bool {
        assert_eq!(v.len(), self.n);
        let mut w = v.to_vec();
        for (p, r) in &self.rows {
            if !w[*p].is_zero() {
                let c = w[*p].clone();
                for j in 0..self.n {
                    w[j] = &w[j] - &(&c * &r[j]);
                }
            }
        }
        match (0..self.n).find(|&j| !w[j].is_zero()) {
            None => false,
            Some(p) => {
                let inv = w[p].inv();
                let w: Vec<FieldElem> = w.iter().map(|x| x * &inv).collect();
                for (_, r) in self.rows.iter_mut() {
                    if !r[p].is_zero() {
                        let c = r[p].clone();
                        for j in 0..self.n {
                            r[j] = &r[j] - &(&c * &w[j]);
                        }
                    }
                }
                self.rows.push((p, w));
                true
            }
        }
    }
}

/// A shift-`c` natural transformation `F → T_c G`, with components `F_t → G_{t+c}`
/// stored at the points of a common grid (in the source's coordinate).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMorphism {
    pub shift: Rat,
    pub points: Vec<ExtRat>,
    /// `F` refined to `points`.
    pub source: GridModule,
    /// `t ↦ G_{t+c}` refined to `points`.
    pub target: GridModule,
    pub comps: BTreeMap<i32, Vec<Matrix>>,
}

impl GridMorphism {
    /// Exact check of the naturality squares at every grid step.
    pub fn is_natural(&self) -> bool {
        for (k, comps) in &self.comps {
            for i in 0..self.points.len().saturating_sub(1) {
                let lhs = self.target.map_between(*k, i, i + 1).mul(&comps[i]);
                let rhs = comps[i + 1].mul(&self.source.map_between(*k, i, i + 1));
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|v| v.iter().all(Matrix::is_zero))
    }

    /// Component at parameter `t` (zero below the grid).
    pub fn component_at(&self, k: i32, t: &ExtRat) -> Matrix {
        let f = self.source.field();
        match self.points.iter().rposition(|p| p <= t) {
            Some(i) => self.comps.get(&k).map_or_else(|| Matrix::zeros(f, 0, 0), |c| c[i].clone()),
            None => Matrix::zeros(f, self.target.dim_at(k, t), self.source.dim_at(k, t)),
        }
    }
}

/// Sorted union of grids.
pub fn union_points<'a>(grids: impl IntoIterator<Item = &'a [ExtRat]>) -> Vec<ExtRat> {
    let s: BTreeSet<ExtRat> = grids.into_iter().flat_map(|g| g.iter().cloned()).collect();
    s.into_iter().collect()
}

/// Basis of shift-`c` morphisms `F → T_c G`, by solving the naturality system.
pub fn morphism_space(f: &GridModule, g: &GridModule, c: &Rat) -> Result<Vec<GridMorphism>> {
    morphism_space_on(f, g, c, &[])
}

/// As [`morphism_space`], computed on a grid that also contains `extra`.
pub fn morphism_space_on(f: &GridModule, g: &GridModule, c: &Rat, extra: &[ExtRat]) -> Result<Vec<GridMorphism>> {
    if c.is_negative() {
        return Err(Error::Parameter(format!("negative shift {c}")));
    }
    if f.field() != g.field() {
        return Err(Error::FieldMismatch(format!("{} vs {}", f.field(), g.field())));
    }
    let field = f.field();
    let gs = g.relabel(c);
    let points = union_points([f.points(), gs.points(), extra]);
    let fr = f.refine(&points)?;
    let gr = gs.refine(&points)?;
    let n = points.len();
    let mut out = Vec::new();
    let degrees: BTreeSet<i32> = fr.degrees().into_iter().chain(gr.degrees()).collect();
    for &k in &degrees {
        let df: Vec<usize> = (0..n).map(|i| fr.dim(k, i)).collect();
        let dg: Vec<usize> = (0..n).map(|i| gr.dim(k, i)).collect();
        let mut offs = vec![0usize; n + 1];
        for i in 0..n {
            offs[i + 1] = offs[i] + dg[i] * df[i];
        }
        let nvars = offs[n];
        if nvars == 0 {
            continue;
        }
        let neq: usize = (0..n.saturating_sub(1)).map(|i| dg[i + 1] * df[i]).sum();
        let mut sys = Matrix::zeros(field, neq, nvars);
        let mut row = 0;
        for i in 0..n.saturating_sub(1) {
            let a = fr.map_between(k, i, i + 1);
            let b = gr.map_between(k, i, i + 1);
            // (B φ_i − φ_{i+1} A)[r][s] = 0
            for r in 0..dg[i + 1] {
                for s in 0..df[i] {
                    for m in 0..dg[i] {
                        let coef = &b[(r, m)];
                        if !coef.is_zero() {
                            let v = offs[i] + m * df[i] + s;
                            sys[(row, v)] = &sys[(row, v)] + coef;
                        }
                    }
                    for m in 0..df[i + 1] {
                        let coef = &a[(m, s)];
                        if !coef.is_zero() {
                            let v = offs[i + 1] + r * df[i + 1] + m;
                            sys[(row, v)] = &sys[(row, v)] - coef;
                        }
                    }
                    row += 1;
                }
            }
        }
        for vec in sys.nullspace() {
            let comps: Vec<Matrix> = (0..n)
                .map(|i| {
                    let mut m = Matrix::zeros(field, dg[i], df[i]);
                    for r in 0..dg[i] {
                        for s in 0..df[i] {
                            m[(r, s)] = vec[offs[i] + r * df[i] + s].clone();
                        }
                    }
                    m
                })
                .collect();
            let mut all = BTreeMap::new();
            for &kk in &degrees {
                if kk == k {
                    all.insert(kk, comps.clone());
                } else {
                    all.insert(kk, (0..n).map(|i| Matrix::zeros(field, gr.dim(kk, i), fr.dim(kk, i))).collect());
                }
            }
            let m = GridMorphism { shift: c.clone(), points: points.clone(), source: fr.clone(), target: gr.clone(), comps: all };
            debug_assert!(m.is_natural());
            out.push(m);
        }
    }
    Ok(out)
}

/// `τ_{0,c}`: the structure maps `F_t → F_{t+c}` as a morphism `F → T_c F`.
pub fn tau(f: &GridModule, c: &Rat) -> Result<GridMorphism> {
    if c.is_negative() {
        return Err(Error::Parameter(format!("negative shift {c}")));
    }
    let fs = f.relabel(c);
    let points = union_points([f.points(), fs.points()]);
    let fr = f.refine(&points)?;
    let gr = fs.refine(&points)?;
    let comps = fr
        .degrees()
        .into_iter()
        .map(|k| {
            let cs = points.iter().map(|p| f.structure_map(k, p, &p.add_rat(c))).collect();
            (k, cs)
        })
        .collect();
    Ok(GridMorphism { shift: c.clone(), points, source: fr, target: gr, comps })
}

/// Default bound on the number of bars of each input to the exhaustive oracle.
pub const ORACLE_BAR_BOUND: usize = 6;
/// Largest morphism-space dimension the oracle enumerates.
pub const ORACLE_ENUM_BITS: usize = 22;

/// Ground-truth `(a,b)`-interleaving test over `F_2` by exhaustive enumeration.
///
/// Condition (1) enumerates every `α ∈ Hom(F, T_a G)` and, for each, decides
/// by an exact linear solve whether some `β ∈ Hom(G, T_b F)` gives
/// `(T_a β)∘α = τ_{0,a+b}(F)`. Condition (2) is the same test with the roles
/// swapped.
pub fn brute_force_interleaved(f: &GridModule, g: &GridModule, a: &Rat, b: &Rat) -> Result<bool> {
    brute_force_interleaved_with(f, g, a, b, ORACLE_BAR_BOUND)
}

pub fn brute_force_interleaved_with(f: &GridModule, g: &GridModule, a: &Rat, b: &Rat, bound: usize) -> Result<bool> {
    if f.field() != Field::F2 || g.field() != Field::F2 {
        return Err(Error::OracleScope("the exhaustive oracle runs over f2 only".into()));
    }
    if a.is_negative() || b.is_negative() {
        return Err(Error::Parameter("negative shift".into()));
    }
    for m in [f, g] {
        let n = m.total_bars();
        if n > bound {
            return Err(Error::OracleScope(format!("{n} bars exceed the oracle bound {bound}")));
        }
    }
    Ok(brute_condition(f, g, a, b)? && brute_condition(g, f, b, a)?)
}

/// Does `τ_{0,a+b}(F)` factor through `T_a G`?
pub fn brute_condition(f: &GridModule, g: &GridModule, a: &Rat, b: &Rat) -> Result<bool> {
    let s = a + b;
    let p = union_points([
        f.points(),
        &g.relabel(a).points().to_vec()[..],
        &f.relabel(&s).points().to_vec()[..],
    ]);
    let alphas = morphism_space_on(f, g, a, &p)?;
    let p_shift: Vec<ExtRat> = p.iter().map(|x| x.add_rat(a)).collect();
    let betas = morphism_space_on(g, f, b, &p_shift)?;
    if alphas.len() > ORACLE_ENUM_BITS {
        return Err(Error::OracleScope(format!("Hom space of dimension {} is too large to enumerate", alphas.len())));
    }
    // Flatten every component product β_{p+a}∘α_p and the target τ into F_2 bit vectors.
    let degrees: BTreeSet<i32> = f.degrees().into_iter().chain(g.degrees()).collect();
    let mut slots: Vec<(i32, usize, usize, usize)> = Vec::new(); // (degree, point, rows, cols)
    for &k in &degrees {
        for (i, t) in p.iter().enumerate() {
            let rows = f.dim_at(k, &t.add_rat(&s));
            let cols = f.dim_at(k, t);
            if rows * cols > 0 {
                slots.push((k, i, rows, cols));
            }
        }
    }
    let len: usize = slots.iter().map(|(_, _, r, c)| r * c).sum();
    let words = len.div_ceil(64).max(1);
    let flatten = |get: &dyn Fn(i32, usize) -> Matrix| -> Vec<u64> {
        let mut v = vec![0u64; words];
        let mut pos = 0;
        for &(k, i, r, c) in &slots {
            let m = get(k, i);
            for x in 0..r {
                for y in 0..c {
                    if !m[(x, y)].is_zero() {
                        v[pos / 64] |= 1 << (pos % 64);
                    }
                    pos += 1;
                }
            }
        }
        v
    };
    let target = flatten(&|k, i| f.structure_map(k, &p[i], &p[i].add_rat(&s)));
    let prods: Vec<Vec<Vec<u64>>> = alphas
        .iter()
        .map(|al| {
            betas
                .iter()
                .map(|be| {
                    flatten(&|k, i| {
                        let bcomp = be.comps.get(&k).map(|c| c[i].clone());
                        let acomp = al.comps.get(&k).map(|c| c[i].clone());
                        match (bcomp, acomp) {
                            (Some(bm), Some(am)) if bm.cols() == am.rows() => bm.mul(&am),
                            _ => Matrix::zeros(Field::F2, f.dim_at(k, &p[i].add_rat(&s)), f.dim_at(k, &p[i])),
                        }
                    })
                })
                .collect()
        })
        .collect();
    let nb = betas.len();
    let mut cols = vec![vec![0u64; words]; nb];
    // Gray-code walk over all α.
    let total: u64 = 1 << alphas.len();
    for step in 0..total {
        if step > 0 {
            let flip = step.trailing_zeros() as usize;
            for (kb, col) in cols.iter_mut().enumerate() {
                for (w, x) in col.iter_mut().zip(&prods[flip][kb]) {
                    *w ^= x;
                }
            }
        }
        if f2_in_span(&cols, &target) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Is `t` in the F_2-span of the bit vectors `cols`?
fn f2_in_span(cols: &[Vec<u64>], t: &[u64]) -> bool {
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let reduce = |v: &mut Vec<u64>, basis: &[(usize, Vec<u64>)]| {
        for (p, b) in basis {
            if v[p / 64] >> (p % 64) & 1 == 1 {
                for (x, y) in v.iter_mut().zip(b) {
                    *x ^= y;
                }
            }
        }
    };
    for c in cols {
        let mut v = c.clone();
        reduce(&mut v, &basis);
        if let Some(p) = first_bit(&v) {
            basis.push((p, v));
        }
    }
    let mut v = t.to_vec();
    reduce(&mut v, &basis);
    first_bit(&v).is_none()
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
