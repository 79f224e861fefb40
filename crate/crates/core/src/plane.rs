//! Constructible sheaves on the `(x,t)`-plane: polygonal locally closed
//! regions, a cell decomposition refining them, cellular sheaves on its face
//! poset, derived Hom between constant sheaves, and the sweep over vertical
//! translations `t ↦ t + c`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::barcode::{content_lines, expect_header, parse_err};
use crate::error::{Error, Result};
use crate::field::{Field, FieldElem};
use crate::linalg::{sparse_rank, Matrix};
use crate::rat::{parse_rat, Rat};

/// `(x, t)`.
pub type Point = (Rat, Rat);

fn cross(o: &Point, a: &Point, b: &Point) -> Rat {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Where a point sits relative to a polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Outside,
    Interior,
    Edge(usize),
    Vertex(usize),
}

/// A strictly convex polygon, counter-clockwise, with inclusion flags for its
/// open edges (edge `i` joins vertex `i` to `i+1`) and its vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polygon {
    vertices: Vec<Point>,
    edge_include: Vec<bool>,
    vertex_include: Vec<bool>,
}

impl Polygon {
    /// Either orientation is accepted; clockwise input is reversed together with its flags.
    pub fn new(vertices: Vec<Point>, edge_include: Vec<bool>, vertex_include: Vec<bool>) -> Result<Polygon> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Parameter(format!("polygon needs 3 vertices, got {n}")));
        }
        if edge_include.len() != n || vertex_include.len() != n {
            return Err(Error::Parameter("one flag per edge and per vertex".into()));
        }
        let area2 = signed_area2(&vertices);
        if area2.is_zero() {
            return Err(Error::Parameter("degenerate polygon with zero area".into()));
        }
        let (vertices, edge_include, vertex_include) = if area2.is_negative() {
            let v: Vec<Point> = vertices.into_iter().rev().collect();
            let e = (0..n).map(|k| edge_include[(2 * n - 2 - k) % n]).collect();
            let f = vertex_include.into_iter().rev().collect();
            (v, e, f)
        } else {
            (vertices, edge_include, vertex_include)
        };
        for i in 0..n {
            if !cross(&vertices[i], &vertices[(i + 1) % n], &vertices[(i + 2) % n]).is_positive() {
                return Err(Error::Parameter(format!("polygon is not strictly convex at vertex {}", (i + 1) % n)));
            }
        }
        Ok(Polygon { vertices, edge_include, vertex_include })
    }

    /// Closed polygon: every edge and vertex included.
    pub fn closed(vertices: Vec<Point>) -> Result<Polygon> {
        let n = vertices.len();
        Polygon::new(vertices, vec![true; n], vec![true; n])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edge_included(&self, i: usize) -> bool {
        self.edge_include[i]
    }

    pub fn vertex_included(&self, i: usize) -> bool {
        self.vertex_include[i]
    }

    pub fn area(&self) -> Rat {
        signed_area2(&self.vertices) / Rat::from_integer(2.into())
    }

    pub fn locate(&self, p: &Point) -> Location {
        let n = self.vertices.len();
        let mut on = None;
        for i in 0..n {
            let c = cross(&self.vertices[i], &self.vertices[(i + 1) % n], p);
            if c.is_negative() {
                return Location::Outside;
            }
            if c.is_zero() {
                on = Some(i);
            }
        }
        match on {
            None => Location::Interior,
            Some(i) => match self.vertices.iter().position(|v| v == p) {
                Some(v) => Location::Vertex(v),
                None => Location::Edge(i),
            },
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self.locate(p) {
            Location::Outside => false,
            Location::Interior => true,
            Location::Edge(i) => self.edge_include[i],
            Location::Vertex(i) => self.vertex_include[i],
        }
    }

    fn map(&self, f: impl Fn(&Point) -> Point) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(f).collect(),
            edge_include: self.edge_include.clone(),
            vertex_include: self.vertex_include.clone(),
        }
    }

    fn x_range(&self) -> (Rat, Rat) {
        let xs = self.vertices.iter().map(|v| &v.0);
        (xs.clone().min().unwrap().clone(), xs.max().unwrap().clone())
    }
}

fn signed_area2(v: &[Point]) -> Rat {
    let n = v.len();
    (0..n).fold(Rat::zero(), |acc, i| {
        let (a, b) = (&v[i], &v[(i + 1) % n]);
        acc + &a.0 * &b.1 - &b.0 * &a.1
    })
}

/// Union of flagged convex polygons. A point belongs to the region when some
/// polygon contains it in its interior or on an included edge or vertex.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PlaneRegion {
    polygons: Vec<Polygon>,
}

impl PlaneRegion {
    pub fn new(polygons: Vec<Polygon>) -> PlaneRegion {
        PlaneRegion { polygons }
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.polygons.iter().any(|q| q.contains(p))
    }

    /// Translate by `c` in `t`.
    pub fn translated(&self, c: &Rat) -> PlaneRegion {
        PlaneRegion { polygons: self.polygons.iter().map(|q| q.map(|v| (v.0.clone(), &v.1 + c))).collect() }
    }

    /// Scale `x` by `sx > 0` and `t` by `st > 0`.
    pub fn scaled(&self, sx: &Rat, st: &Rat) -> Result<PlaneRegion> {
        if !sx.is_positive() || !st.is_positive() {
            return Err(Error::Parameter("scale factors must be positive".into()));
        }
        Ok(PlaneRegion { polygons: self.polygons.iter().map(|q| q.map(|v| (&v.0 * sx, &v.1 * st))).collect() })
    }

    /// Sum of polygon areas; the polygons are assumed not to overlap.
    pub fn area(&self) -> Rat {
        self.polygons.iter().map(Polygon::area).sum()
    }

    pub fn bbox(&self) -> Option<(Point, Point)> {
        let vs: Vec<&Point> = self.polygons.iter().flat_map(|q| q.vertices.iter()).collect();
        let first = vs.first()?;
        let mut lo = (*first).clone();
        let mut hi = (*first).clone();
        for v in vs {
            lo = (lo.0.min(v.0.clone()), lo.1.min(v.1.clone()));
            hi = (hi.0.max(v.0.clone()), hi.1.max(v.1.clone()));
        }
        Some((lo, hi))
    }

    fn segments(&self) -> Vec<Seg> {
        self.polygons
            .iter()
            .flat_map(|q| {
                let n = q.vertices.len();
                (0..n).map(move |i| Seg::new(q.vertices[i].clone(), q.vertices[(i + 1) % n].clone()))
            })
            .collect()
    }

    fn vertex_set(&self) -> BTreeSet<Point> {
        self.polygons.iter().flat_map(|q| q.vertices.iter().cloned()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("region v1\n");
        let flag = |b: bool| if b { "include" } else { "exclude" };
        for q in &self.polygons {
            s.push_str("polygon\n");
            for v in &q.vertices {
                writeln!(s, "vertex {} {}", v.0, v.1).unwrap();
            }
            for (i, e) in q.edge_include.iter().enumerate() {
                writeln!(s, "edge {i} {}", flag(*e)).unwrap();
            }
            for (i, e) in q.vertex_include.iter().enumerate() {
                writeln!(s, "vertexflag {i} {}", flag(*e)).unwrap();
            }
        }
        s
    }

    /// Parse the `region v1` format. Unflagged edges and vertices are included.
    pub fn from_text(text: &str) -> Result<PlaneRegion> {
        struct Pending {
            line: usize,
            vertices: Vec<Point>,
            edges: Vec<(usize, usize, bool)>,
            vflags: Vec<(usize, usize, bool)>,
        }
        fn finish(p: Pending) -> Result<Polygon> {
            let n = p.vertices.len();
            let mut e = vec![true; n];
            let mut f = vec![true; n];
            for (ln, i, b) in p.edges {
                *e.get_mut(i).ok_or_else(|| parse_err(ln, 6, format!("edge index {i} out of range")))? = b;
            }
            for (ln, i, b) in p.vflags {
                *f.get_mut(i).ok_or_else(|| parse_err(ln, 12, format!("vertex index {i} out of range")))? = b;
            }
            Polygon::new(p.vertices, e, f).map_err(|err| parse_err(p.line, 1, err.to_string()))
        }
        let mut lines = content_lines(text);
        expect_header(&mut lines, "region")?;
        let mut polygons = Vec::new();
        let mut cur: Option<Pending> = None;
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let flag = |t: Option<&&str>| match t.copied() {
                Some("include") => Ok(true),
                Some("exclude") => Ok(false),
                other => Err(parse_err(ln, 1, format!("expected include|exclude, found {other:?}"))),
            };
            let index = |t: Option<&&str>| {
                t.and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| parse_err(ln, 1, "bad index".into()))
            };
            match toks[0] {
                "polygon" => {
                    if let Some(p) = cur.take() {
                        polygons.push(finish(p)?);
                    }
                    cur = Some(Pending { line: ln, vertices: Vec::new(), edges: Vec::new(), vflags: Vec::new() });
                }
                kw @ ("vertex" | "edge" | "vertexflag") => {
                    let p = cur.as_mut().ok_or_else(|| parse_err(ln, 1, format!("`{kw}` outside a polygon")))?;
                    match kw {
                        "vertex" => {
                            if toks.len() != 3 {
                                return Err(parse_err(ln, 1, "expected `vertex <x> <t>`".into()));
                            }
                            let x = parse_rat(toks[1]).map_err(|e| parse_err(ln, 8, e.to_string()))?;
                            let t = parse_rat(toks[2]).map_err(|e| parse_err(ln, 9 + toks[1].len(), e.to_string()))?;
                            p.vertices.push((x, t));
                        }
                        "edge" => p.edges.push((ln, index(toks.get(1))?, flag(toks.get(2))?)),
                        _ => p.vflags.push((ln, index(toks.get(1))?, flag(toks.get(2))?)),
                    }
                }
                other => return Err(parse_err(ln, 1, format!("unexpected keyword {other:?}"))),
            }
        }
        if let Some(p) = cur.take() {
            polygons.push(finish(p)?);
        }
        Ok(PlaneRegion { polygons })
    }
}

/// PL model of `{|x| ≤ ε, −h_ε(x) ≤ t < h_ε(x)}` with `h_ε(x) = (ε² − x²)^{3/2}/(3ε)`.
///
/// The unit region (`ε = 1`) has vertices on the x-grid `−1 + k·mesh` (plus
/// `x = 1`), at heights rounded down from `h` by at most `1/(48·⌈1/mesh⌉²)`;
/// `h` is `1/2`-Lipschitz, so the t-error of the PL boundary is at most
/// `mesh/2 + mesh²/48`. At `x = 0` the height `1/3` is exact whenever `0` is
/// a grid point. The `ε` region is the image under `(x, t) ↦ (εx, ε²t)`.
///
/// Each x-interval is one trapezoid (a triangle at the ends). Lower edges and
/// vertices are included, upper ones excluded, shared vertical edges included.
pub fn sphere_region(mesh: &Rat, epsilon: &Rat) -> Result<PlaneRegion> {
    if !mesh.is_positive() || *mesh > Rat::new(1.into(), 2.into()) {
        return Err(Error::Parameter(format!("mesh {mesh} outside (0, 1/2]")));
    }
    if !epsilon.is_positive() {
        return Err(Error::Parameter(format!("epsilon {epsilon} must be positive")));
    }
    let one = Rat::one();
    let mut xs = Vec::new();
    let mut x = -one.clone();
    while x < one {
        xs.push(x.clone());
        x += mesh;
    }
    xs.push(one.clone());
    let inv = (one.clone() / mesh).ceil().to_integer();
    let d: BigInt = &inv * &inv * 16;
    let height = |x: &Rat| -> Rat {
        let (p, q) = (x.numer().clone(), x.denom().clone());
        let rad: BigInt = &q * &q - &p * &p;
        let root = (rad.clone() * &d * &d).sqrt();
        let s = Rat::new(root, &q * &d);
        let base = Rat::new(rad, &q * &q);
        base * s / Rat::from_integer(3.into())
    };
    let hs: Vec<Rat> = xs.iter().map(height).collect();
    let mut polygons = Vec::new();
    let n = xs.len();
    for i in 0..n - 1 {
        let (x0, x1, h0, h1) = (&xs[i], &xs[i + 1], &hs[i], &hs[i + 1]);
        let lo0 = (x0.clone(), -h0.clone());
        let lo1 = (x1.clone(), -h1.clone());
        let hi0 = (x0.clone(), h0.clone());
        let hi1 = (x1.clone(), h1.clone());
        let poly = if h0.is_zero() && h1.is_zero() {
            continue;
        } else if h0.is_zero() {
            Polygon::new(vec![hi0, lo1, hi1], vec![true, true, false], vec![false, true, false])?
        } else if h1.is_zero() {
            Polygon::new(vec![lo0, lo1, hi0], vec![true, false, true], vec![true, false, false])?
        } else {
            Polygon::new(vec![lo0, lo1, hi1, hi0], vec![true, true, false, true], vec![true, true, false, false])?
        };
        polygons.push(poly);
    }
    PlaneRegion::new(polygons).scaled(epsilon, &(epsilon * epsilon))
}

/// A segment with `a ≤ b` lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Seg {
    a: Point,
    b: Point,
}

impl Seg {
    fn new(p: Point, q: Point) -> Seg {
        if p <= q {
            Seg { a: p, b: q }
        } else {
            Seg { a: q, b: p }
        }
    }

    fn vertical(&self) -> bool {
        self.a.0 == self.b.0
    }

    /// `t` at `x` for a non-vertical segment.
    fn t_at(&self, x: &Rat) -> Rat {
        if *x == self.a.0 {
            return self.a.1.clone();
        }
        if *x == self.b.0 {
            return self.b.1.clone();
        }
        &self.a.1 + (&self.b.1 - &self.a.1) * (x - &self.a.0) / (&self.b.0 - &self.a.0)
    }
}

/// Shape of a cell in a planar decomposition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CellShape {
    Point(Point),
    /// Open vertical segment `{x} × (t0, t1)`.
    Vertical { x: Rat, t0: Rat, t1: Rat },
    /// Open segment from `(x0, t0)` to `(x1, t1)`, `x0 < x1`.
    Slanted { x0: Rat, x1: Rat, t0: Rat, t1: Rat },
    /// Open region over `(x0, x1)` between two segments, given by their end heights.
    Trapezoid { x0: Rat, x1: Rat, bottom: (Rat, Rat), top: (Rat, Rat) },
}

impl CellShape {
    pub fn dim(&self) -> u8 {
        match self {
            CellShape::Point(_) => 0,
            CellShape::Vertical { .. } | CellShape::Slanted { .. } => 1,
            CellShape::Trapezoid { .. } => 2,
        }
    }

    /// The point with parameters `u, v ∈ (0,1)` inside the cell.
    pub fn point_at(&self, u: &Rat, v: &Rat) -> Point {
        let lerp = |a: &Rat, b: &Rat, s: &Rat| a + (b - a) * s;
        match self {
            CellShape::Point(p) => p.clone(),
            CellShape::Vertical { x, t0, t1 } => (x.clone(), lerp(t0, t1, u)),
            CellShape::Slanted { x0, x1, t0, t1 } => (lerp(x0, x1, u), lerp(t0, t1, u)),
            CellShape::Trapezoid { x0, x1, bottom, top } => {
                let lo = lerp(&bottom.0, &bottom.1, u);
                let hi = lerp(&top.0, &top.1, u);
                (lerp(x0, x1, u), lerp(&lo, &hi, v))
            }
        }
    }

    pub fn sample(&self) -> Point {
        let half = Rat::new(1.into(), 2.into());
        self.point_at(&half, &half)
    }
}

/// A regular cell complex given by its face poset: cell dimensions and the
/// codimension-one faces of every cell.
#[derive(Clone, Debug)]
pub struct CellComplex {
    dims: Vec<u8>,
    faces: Vec<Vec<usize>>,
    cofaces: Vec<Vec<usize>>,
    below: Vec<Vec<usize>>,
    above: Vec<Vec<usize>>,
    shapes: Vec<CellShape>,
}

impl CellComplex {
    /// An abstract complex. Every face must have dimension one less.
    pub fn from_faces(dims: Vec<u8>, faces: Vec<Vec<usize>>) -> Result<CellComplex> {
        Self::build(dims, faces, Vec::new())
    }

    fn build(dims: Vec<u8>, faces: Vec<Vec<usize>>, shapes: Vec<CellShape>) -> Result<CellComplex> {
        let n = dims.len();
        if faces.len() != n {
            return Err(Error::Structure("one face list per cell".into()));
        }
        let mut cofaces = vec![Vec::new(); n];
        for (t, fs) in faces.iter().enumerate() {
            for &s in fs {
                if s >= n || dims[s] + 1 != dims[t] {
                    return Err(Error::Structure(format!("cell {s} is not a codimension-one face of {t}")));
                }
                cofaces[s].push(t);
            }
        }
        // transitive closure, by increasing dimension
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| dims[i]);
        let mut below: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &t in &order {
            let mut b: BTreeSet<usize> = BTreeSet::new();
            for &s in &faces[t] {
                b.insert(s);
                b.extend(below[s].iter().copied());
            }
            below[t] = b.into_iter().collect();
        }
        let mut above = vec![Vec::new(); n];
        for (t, b) in below.iter().enumerate() {
            for &s in b {
                above[s].push(t);
            }
        }
        Ok(CellComplex { dims, faces, cofaces, below, above, shapes })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn dim(&self, i: usize) -> u8 {
        self.dims[i]
    }

    pub fn faces(&self, i: usize) -> &[usize] {
        &self.faces[i]
    }

    pub fn cofaces(&self, i: usize) -> &[usize] {
        &self.cofaces[i]
    }

    /// Every cell strictly below `i` in the face poset.
    pub fn below(&self, i: usize) -> &[usize] {
        &self.below[i]
    }

    /// Every cell strictly above `i`.
    pub fn above(&self, i: usize) -> &[usize] {
        &self.above[i]
    }

    pub fn shape(&self, i: usize) -> Option<&CellShape> {
        self.shapes.get(i)
    }

    /// Number of cells in each dimension.
    pub fn counts(&self) -> Vec<usize> {
        let top = self.dims.iter().copied().max().map_or(0, |d| d as usize + 1);
        let mut c = vec![0; top];
        for &d in &self.dims {
            c[d as usize] += 1;
        }
        c
    }

    /// A set of cells is locally closed when its closure minus itself is closed.
    pub fn is_locally_closed(&self, mask: &[bool]) -> bool {
        let mut closure = mask.to_vec();
        for t in 0..self.len() {
            if mask[t] {
                for &s in &self.below[t] {
                    closure[s] = true;
                }
            }
        }
        (0..self.len()).all(|s| !(closure[s] && !mask[s]) || self.below[s].iter().all(|&r| !mask[r]))
    }
}

/// A decomposition together with the cells lying in each input region.
#[derive(Clone, Debug)]
pub struct Arrangement {
    pub complex: CellComplex,
    pub members: Vec<Vec<bool>>,
}

/// Vertical-slab decomposition of a box around the regions.
///
/// Slab walls sit at every vertex abscissa and every crossing of two edges,
/// so no two edges cross inside a slab. Cells are the wall points, the open
/// wall pieces between them, the open edge pieces inside slabs and the open
/// trapezoids between consecutive edges. Membership of a cell is decided at
/// one interior point, which is exact because every region boundary is a
/// union of cells.
pub fn arrange(regions: &[&PlaneRegion]) -> Result<Arrangement> {
    let boxes: Vec<(Point, Point)> = regions.iter().filter_map(|r| r.bbox()).collect();
    let (lo, hi) = match boxes.split_first() {
        None => ((Rat::zero(), Rat::zero()), (Rat::one(), Rat::one())),
        Some((first, rest)) => rest.iter().fold(first.clone(), |(l, h), (a, b)| {
            ((l.0.min(a.0.clone()), l.1.min(a.1.clone())), (h.0.max(b.0.clone()), h.1.max(b.1.clone())))
        }),
    };
    let one = Rat::one();
    let (bx0, bx1, bt0, bt1) = (&lo.0 - &one, &hi.0 + &one, &lo.1 - &one, &hi.1 + &one);
    let mut segs: BTreeSet<Seg> = regions.iter().flat_map(|r| r.segments()).collect();
    segs.insert(Seg::new((bx0.clone(), bt0.clone()), (bx1.clone(), bt0.clone())));
    segs.insert(Seg::new((bx0.clone(), bt1.clone()), (bx1.clone(), bt1.clone())));
    let segs: Vec<Seg> = segs.into_iter().collect();
    let slanted: Vec<&Seg> = segs.iter().filter(|s| !s.vertical()).collect();

    let mut walls: BTreeSet<Rat> = BTreeSet::new();
    walls.insert(bx0.clone());
    walls.insert(bx1.clone());
    for s in &segs {
        walls.insert(s.a.0.clone());
        walls.insert(s.b.0.clone());
    }
    // crossings: sweep by left end, compare against segments still open
    let mut by_left: Vec<&Seg> = slanted.clone();
    by_left.sort_by(|p, q| p.a.0.cmp(&q.a.0));
    let mut open: Vec<&Seg> = Vec::new();
    for s in &by_left {
        open.retain(|o| o.b.0 > s.a.0);
        for o in &open {
            let l = s.a.0.clone().max(o.a.0.clone());
            let r = s.b.0.clone().min(o.b.0.clone());
            if l >= r {
                continue;
            }
            let dl = s.t_at(&l) - o.t_at(&l);
            let dr = s.t_at(&r) - o.t_at(&r);
            if (dl.is_positive() && dr.is_negative()) || (dl.is_negative() && dr.is_positive()) {
                let x = &l + (&r - &l) * &dl / (&dl - &dr);
                walls.insert(x);
            }
        }
        open.push(s);
    }
    let walls: Vec<Rat> = walls.into_iter().collect();
    let m = walls.len();
    let wall_index = |x: &Rat| walls.binary_search(x).expect("wall");

    // points on each wall, and the segment pieces in each slab
    let mut wall_pts: Vec<BTreeSet<Rat>> = vec![BTreeSet::new(); m];
    let mut slab_segs: Vec<BTreeSet<(Rat, Rat)>> = vec![BTreeSet::new(); m.saturating_sub(1)];
    for s in &segs {
        let (i0, i1) = (wall_index(&s.a.0), wall_index(&s.b.0));
        if s.vertical() {
            wall_pts[i0].insert(s.a.1.clone());
            wall_pts[i0].insert(s.b.1.clone());
            continue;
        }
        let ts: Vec<Rat> = (i0..=i1).map(|j| s.t_at(&walls[j])).collect();
        for j in i0..=i1 {
            wall_pts[j].insert(ts[j - i0].clone());
        }
        for j in i0..i1 {
            slab_segs[j].insert((ts[j - i0].clone(), ts[j - i0 + 1].clone()));
        }
    }

    let mut cells = Builder::default();
    // per wall: point ids by t, vertical piece ids keyed by lower end
    let mut pt_id: Vec<BTreeMap<Rat, usize>> = vec![BTreeMap::new(); m];
    let mut vert_id: Vec<BTreeMap<Rat, usize>> = vec![BTreeMap::new(); m];
    for j in 0..m {
        let x = &walls[j];
        let ts: Vec<&Rat> = wall_pts[j].iter().collect();
        for t in &ts {
            let id = cells.push(vec![], CellShape::Point((x.clone(), (*t).clone())));
            pt_id[j].insert((*t).clone(), id);
        }
        for w in ts.windows(2) {
            let f = vec![pt_id[j][w[0]], pt_id[j][w[1]]];
            let id = cells.push(f, CellShape::Vertical { x: x.clone(), t0: w[0].clone(), t1: w[1].clone() });
            vert_id[j].insert(w[0].clone(), id);
        }
        if j == 0 {
            continue;
        }
        let i = j - 1;
        let (x0, x1) = (&walls[i], x);
        let pieces: Vec<&(Rat, Rat)> = slab_segs[i].iter().collect();
        let edge_ids: Vec<usize> = pieces
            .iter()
            .map(|(tl, tr)| {
                let shape = CellShape::Slanted { x0: x0.clone(), x1: x1.clone(), t0: tl.clone(), t1: tr.clone() };
                cells.push(vec![pt_id[i][tl], pt_id[j][tr]], shape)
            })
            .collect();
        for k in 1..pieces.len() {
            let (b, t) = (pieces[k - 1], pieces[k]);
            let mut f = vec![edge_ids[k - 1], edge_ids[k]];
            f.extend(vert_id[i].range(b.0.clone()..t.0.clone()).map(|(_, id)| *id));
            f.extend(vert_id[j].range(b.1.clone()..t.1.clone()).map(|(_, id)| *id));
            let shape = CellShape::Trapezoid { x0: x0.clone(), x1: x1.clone(), bottom: b.clone(), top: t.clone() };
            cells.push(f, shape);
        }
    }
    let complex = CellComplex::build(cells.dims, cells.faces, cells.shapes)?;
    let samples: Vec<Point> = complex.shapes.iter().map(CellShape::sample).collect();
    let members = regions.iter().map(|r| membership(r, &samples)).collect();
    Ok(Arrangement { complex, members })
}

#[derive(Default)]
struct Builder {
    dims: Vec<u8>,
    faces: Vec<Vec<usize>>,
    shapes: Vec<CellShape>,
}

impl Builder {
    fn push(&mut self, faces: Vec<usize>, shape: CellShape) -> usize {
        self.dims.push(shape.dim());
        self.faces.push(faces);
        self.shapes.push(shape);
        self.dims.len() - 1
    }
}

/// Region membership of many points, pruning polygons by x-range.
fn membership(r: &PlaneRegion, pts: &[Point]) -> Vec<bool> {
    let mut idx: Vec<(Rat, Rat, usize)> =
        r.polygons.iter().enumerate().map(|(i, q)| {
            let (a, b) = q.x_range();
            (a, b, i)
        }).collect();
    idx.sort();
    let width = idx.iter().map(|(a, b, _)| b - a).max().unwrap_or_else(Rat::zero);
    pts.par_iter()
        .map(|p| {
            let end = idx.partition_point(|(a, _, _)| *a <= p.0);
            let start = idx.partition_point(|(a, _, _)| *a < &p.0 - &width);
            idx[start..end].iter().any(|(_, b, i)| *b >= p.0 && r.polygons[*i].contains(p))
        })
        .collect()
}

/// A sheaf on the face poset: a stalk per cell and a map `F(σ) → F(τ)` for
/// every codimension-one face `σ` of `τ`. Missing maps are zero.
#[derive(Clone, Debug)]
pub struct CellularSheaf {
    field: Field,
    stalks: Vec<usize>,
    maps: HashMap<(usize, usize), Matrix>,
}

impl CellularSheaf {
    pub fn new(field: Field, cx: &CellComplex, stalks: Vec<usize>, maps: HashMap<(usize, usize), Matrix>) -> Result<Self> {
        if stalks.len() != cx.len() {
            return Err(Error::Structure("one stalk per cell".into()));
        }
        for (&(s, t), m) in &maps {
            if !cx.faces(t).contains(&s) {
                return Err(Error::Structure(format!("map {s} -> {t} is not a face incidence")));
            }
            if m.field() != field || m.rows() != stalks[t] || m.cols() != stalks[s] {
                return Err(Error::Structure(format!("map {s} -> {t} has the wrong shape")));
            }
        }
        let sheaf = CellularSheaf { field, stalks, maps };
        sheaf.check(cx)?;
        Ok(sheaf)
    }

    /// The constant sheaf on a locally closed set of cells.
    pub fn indicator(field: Field, cx: &CellComplex, mask: &[bool]) -> Result<Self> {
        if !cx.is_locally_closed(mask) {
            return Err(Error::Parameter("cell set is not locally closed".into()));
        }
        let stalks = mask.iter().map(|&b| usize::from(b)).collect();
        let mut maps = HashMap::new();
        for t in 0..cx.len() {
            for &s in cx.faces(t) {
                if mask[s] && mask[t] {
                    maps.insert((s, t), Matrix::identity(field, 1));
                }
            }
        }
        Ok(CellularSheaf { field, stalks, maps })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn stalk(&self, i: usize) -> usize {
        self.stalks[i]
    }

    fn cover(&self, s: usize, t: usize) -> Matrix {
        self.maps.get(&(s, t)).cloned().unwrap_or_else(|| Matrix::zeros(self.field, self.stalks[t], self.stalks[s]))
    }

    /// `F(σ) → F(τ)` for `σ < τ`, composed along a chain of faces.
    pub fn map(&self, cx: &CellComplex, s: usize, t: usize) -> Matrix {
        if cx.faces(t).contains(&s) {
            return self.cover(s, t);
        }
        let mid = cx
            .faces(t)
            .iter()
            .copied()
            .find(|&m| m == s || cx.below(m).contains(&s))
            .expect("cells are not comparable");
        self.cover(mid, t).mul(&self.map(cx, s, mid))
    }

    /// Every pair of face chains between the same cells composes to the same map.
    pub fn check(&self, cx: &CellComplex) -> Result<()> {
        for t in 0..cx.len() {
            for &s in cx.below(t) {
                if cx.dim(t) - cx.dim(s) < 2 {
                    continue;
                }
                let mut seen: Option<Matrix> = None;
                for &m in cx.faces(t) {
                    if m != s && !cx.below(m).contains(&s) {
                        continue;
                    }
                    let c = self.cover(m, t).mul(&self.map(cx, s, m));
                    match &seen {
                        None => seen = Some(c),
                        Some(x) if *x != c => {
                            return Err(Error::Structure(format!("maps from {s} to {t} do not commute")))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }
}

/// `dim Ext^k(A, B)` for all `k`, via the normalized bar complex of the face
/// poset: cochains on strict chains `σ0 < … < σn` with values in
/// `Hom(A(σ0), B(σn))`.
pub fn derived_hom_on(cx: &CellComplex, a: &CellularSheaf, b: &CellularSheaf) -> Result<Vec<(i32, usize)>> {
    if a.field != b.field {
        return Err(Error::FieldMismatch(format!("{} vs {}", a.field, b.field)));
    }
    let field = a.field;
    let top = cx.dims.iter().copied().max().unwrap_or(0) as usize;
    // chains by length, with variable offsets
    let mut levels: Vec<Vec<Vec<usize>>> = vec![Vec::new(); top + 1];
    for s0 in 0..cx.len() {
        if a.stalks[s0] == 0 {
            continue;
        }
        let mut stack = vec![vec![s0]];
        while let Some(ch) = stack.pop() {
            let last = *ch.last().unwrap();
            if b.stalks[last] > 0 {
                levels[ch.len() - 1].push(ch.clone());
            }
            for &u in cx.above(last) {
                let mut c = ch.clone();
                c.push(u);
                stack.push(c);
            }
        }
    }
    let mut offsets: Vec<HashMap<Vec<usize>, usize>> = Vec::new();
    let mut sizes = Vec::new();
    for lv in &levels {
        let mut off = HashMap::new();
        let mut n = 0;
        for ch in lv {
            off.insert(ch.clone(), n);
            n += b.stalks[*ch.last().unwrap()] * a.stalks[ch[0]];
        }
        offsets.push(off);
        sizes.push(n);
    }
    let mut cache: HashMap<(bool, usize, usize), Matrix> = HashMap::new();
    let mut get_map = |which_b: bool, s: usize, t: usize| -> Matrix {
        cache
            .entry((which_b, s, t))
            .or_insert_with(|| if which_b { b.map(cx, s, t) } else { a.map(cx, s, t) })
            .clone()
    };
    let mut ranks = vec![0usize; top + 1];
    for n in 0..top {
        let mut rows = Vec::new();
        for ch in &levels[n + 1] {
            let (s0, last) = (ch[0], *ch.last().unwrap());
            let (da, db) = (a.stalks[s0], b.stalks[last]);
            let mut terms: Vec<(usize, Matrix, Matrix, FieldElem)> = Vec::new();
            // B(σn<σn+1)·φ(σ0..σn)
            let head: Vec<usize> = ch[..ch.len() - 1].to_vec();
            if let Some(&o) = offsets[n].get(&head) {
                let bm = get_map(true, head[head.len() - 1], last);
                terms.push((o, bm, Matrix::identity(field, da), field.one()));
            }
            for i in 1..ch.len() - 1 {
                let mut c = ch.clone();
                c.remove(i);
                if let Some(&o) = offsets[n].get(&c) {
                    let sign = if i % 2 == 1 { -&field.one() } else { field.one() };
                    terms.push((o, Matrix::identity(field, db), Matrix::identity(field, da), sign));
                }
            }
            // φ(σ1..σn+1)·A(σ0<σ1)
            let tail: Vec<usize> = ch[1..].to_vec();
            if let Some(&o) = offsets[n].get(&tail) {
                let am = get_map(false, s0, ch[1]);
                let sign = if (n + 1) % 2 == 1 { -&field.one() } else { field.one() };
                terms.push((o, Matrix::identity(field, db), am, sign));
            }
            // entry (r, s) of the image: Σ_terms sign · Σ_{r', s'} L[r, r'] φ[r', s'] R[s', s]
            for r in 0..db {
                for s in 0..da {
                    let mut row: BTreeMap<usize, FieldElem> = BTreeMap::new();
                    for (o, l, rm, sign) in &terms {
                        let (pdb, pda) = (l.cols(), rm.rows());
                        for rp in 0..pdb {
                            if l[(r, rp)].is_zero() {
                                continue;
                            }
                            for sp in 0..pda {
                                if rm[(sp, s)].is_zero() {
                                    continue;
                                }
                                let v = &(sign * &l[(r, rp)]) * &rm[(sp, s)];
                                let col = o + rp * pda + sp;
                                let e = row.entry(col).or_insert_with(|| field.zero());
                                *e = &*e + &v;
                            }
                        }
                    }
                    rows.push(row.into_iter().collect());
                }
            }
        }
        ranks[n] = sparse_rank(field, rows);
    }
    Ok((0..=top)
        .map(|n| {
            let prev = if n == 0 { 0 } else { ranks[n - 1] };
            (n as i32, sizes[n] - ranks[n] - prev)
        })
        .collect())
}

/// `dim Hom^k(k_Z, k_{Z'})` in the derived category of sheaves on the plane.
pub fn derived_hom_dims(z: &PlaneRegion, zp: &PlaneRegion, field: Field) -> Result<Vec<(i32, usize)>> {
    let arr = arrange(&[z, zp])?;
    hom_on_arrangement(&arr, 0, 1, field)
}

fn hom_on_arrangement(arr: &Arrangement, i: usize, j: usize, field: Field) -> Result<Vec<(i32, usize)>> {
    let a = CellularSheaf::indicator(field, &arr.complex, &arr.members[i])?;
    let b = CellularSheaf::indicator(field, &arr.complex, &arr.members[j])?;
    derived_hom_on(&arr.complex, &a, &b)
}

/// Basis of `Hom(k_A, k_B)` for cell sets `A`, `B`: the indicator functions
/// of the components of `A ∩ B` (under face adjacency) on which a morphism
/// is not forced to vanish.
pub fn hom0_basis(cx: &CellComplex, a: &[bool], b: &[bool]) -> Vec<Vec<usize>> {
    let n = cx.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    let both = |i: usize| a[i] && b[i];
    let mut dead = vec![false; n];
    for t in 0..n {
        for &s in cx.faces(t) {
            match (both(s), both(t)) {
                (true, true) => {
                    let (x, y) = (find(&mut parent, s), find(&mut parent, t));
                    parent[x] = y;
                }
                (true, false) if b[t] => dead[s] = true,
                (false, true) if a[s] => dead[t] = true,
                _ => {}
            }
        }
    }
    let mut comps: BTreeMap<usize, (bool, Vec<usize>)> = BTreeMap::new();
    for i in (0..n).filter(|&i| both(i)) {
        let r = find(&mut parent, i);
        let e = comps.entry(r).or_insert((false, Vec::new()));
        e.0 |= dead[i];
        e.1.push(i);
    }
    comps.into_values().filter(|(d, _)| !d).map(|(_, c)| c).collect()
}

/// Whether the stalkwise identity on `A ∩ B` is a morphism `k_A → k_B`.
pub fn restriction_is_morphism(cx: &CellComplex, a: &[bool], b: &[bool]) -> bool {
    (0..cx.len()).all(|t| {
        cx.faces(t).iter().all(|&s| {
            let (ss, tt) = (a[s] && b[s], a[t] && b[t]);
            !((ss && !tt && b[t]) || (tt && !ss && a[s]))
        })
    })
}

/// One step of a sweep: a single value `c = lo` when `hi == lo`, otherwise the
/// open interval `(lo, hi)` (or `(lo, c_max]` for the last one).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepStep {
    pub lo: Rat,
    pub hi: Rat,
    /// `Hom^k(k_Z, k_{T_c Z'})` dimensions, when requested.
    pub dims: Option<Vec<(i32, usize)>>,
    /// Whether `Hom(k_Z, k_{Z'}) → Hom(k_Z, k_{T_c Z'})` is zero here.
    pub vanishes: bool,
}

impl SweepStep {
    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub critical: Vec<Rat>,
    pub steps: Vec<SweepStep>,
    /// `inf{c : the composite vanishes}`; `None` when it survives up to `c_max`.
    pub threshold: Option<Rat>,
    /// Whether the composite already vanishes at the threshold itself.
    pub attained: bool,
}

/// Values of `c ∈ [0, c_max]` where a vertex of `T_c Z'` meets an edge of
/// `Z ∪ Z'` or a vertex of `Z ∪ Z'` meets an edge of `T_c Z'`. Between them
/// the combinatorics of the arrangement of `Z, Z', T_c Z'` is constant.
pub fn contact_values(z: &PlaneRegion, zp: &PlaneRegion, c_max: &Rat) -> Vec<Rat> {
    let mut all_v = z.vertex_set();
    all_v.extend(zp.vertex_set());
    let vp = zp.vertex_set();
    let index = |segs: Vec<Seg>| -> (Vec<Seg>, Rat) {
        let mut v: Vec<Seg> = segs.into_iter().filter(|s| !s.vertical()).collect::<BTreeSet<_>>().into_iter().collect();
        v.sort_by(|p, q| p.a.0.cmp(&q.a.0));
        let w = v.iter().map(|s| &s.b.0 - &s.a.0).max().unwrap_or_else(Rat::zero);
        (v, w)
    };
    let mut all_e = z.segments();
    all_e.extend(zp.segments());
    let (all_e, w_all) = index(all_e);
    let (ep, w_p) = index(zp.segments());
    let hits = |segs: &[Seg], w: &Rat, x: &Rat| -> Vec<Rat> {
        let end = segs.partition_point(|s| s.a.0 <= *x);
        let start = segs.partition_point(|s| s.a.0 < x - w);
        segs[start..end].iter().filter(|s| s.b.0 >= *x).map(|s| s.t_at(x)).collect()
    };
    let mut out: BTreeSet<Rat> = BTreeSet::new();
    out.insert(Rat::zero());
    for v in &vp {
        for t in hits(&all_e, &w_all, &v.0) {
            out.insert(t - &v.1);
        }
    }
    for v in &all_v {
        for t in hits(&ep, &w_p, &v.0) {
            out.insert(&v.1 - t);
        }
    }
    out.into_iter().filter(|c| !c.is_negative() && c <= c_max).collect()
}

/// Whether `Hom(k_Z, k_{Z'}) → Hom(k_Z, k_{T_c Z'})` vanishes, together with
/// the dimensions of `Hom^*(k_Z, k_{T_c Z'})` when asked.
pub fn evaluate_shift(
    z: &PlaneRegion,
    zp: &PlaneRegion,
    c: &Rat,
    field: Field,
    with_dims: bool,
) -> Result<(bool, Option<Vec<(i32, usize)>>)> {
    let moved = zp.translated(c);
    let arr = arrange(&[z, zp, &moved])?;
    let cx = &arr.complex;
    for (k, m) in arr.members.iter().enumerate() {
        if !cx.is_locally_closed(m) {
            return Err(Error::Parameter(format!("region {k} of the sweep is not locally closed")));
        }
    }
    if !restriction_is_morphism(cx, &arr.members[1], &arr.members[2]) {
        return Err(Error::Precondition(format!("translation by {c} is not a restriction morphism of Z'")));
    }
    let basis = hom0_basis(cx, &arr.members[0], &arr.members[1]);
    let vanishes = basis.iter().all(|comp| comp.iter().all(|&i| !arr.members[2][i]));
    let dims = if with_dims { Some(hom_on_arrangement(&arr, 0, 2, field)?) } else { None };
    Ok((vanishes, dims))
}

/// Sweep `c` over `[0, c_max]`. The steps are the contact values and the
/// open intervals between them. With `with_dims` every step is evaluated;
/// otherwise only those a bisection for the threshold visits.
pub fn hom_sweep(z: &PlaneRegion, zp: &PlaneRegion, c_max: &Rat, field: Field, with_dims: bool) -> Result<Sweep> {
    if c_max.is_negative() {
        return Err(Error::Parameter(format!("c_max {c_max} is negative")));
    }
    let critical = contact_values(z, zp, c_max);
    let two = Rat::from_integer(2.into());
    let mut spans: Vec<(Rat, Rat, Rat)> = Vec::new();
    for (i, c) in critical.iter().enumerate() {
        spans.push((c.clone(), c.clone(), c.clone()));
        let next = critical.get(i + 1).unwrap_or(c_max);
        if next > c {
            spans.push((c.clone(), next.clone(), (c + next) / &two));
        }
    }
    let eval = |k: usize| -> Result<SweepStep> {
        let (lo, hi, at) = &spans[k];
        let (vanishes, dims) = evaluate_shift(z, zp, at, field, with_dims)?;
        Ok(SweepStep { lo: lo.clone(), hi: hi.clone(), dims, vanishes })
    };
    let steps: Vec<SweepStep> = if with_dims {
        (0..spans.len()).into_par_iter().map(eval).collect::<Result<_>>()?
    } else {
        // vanishing is preserved by further translation, so bisect
        let mut seen: BTreeMap<usize, SweepStep> = BTreeMap::new();
        let (mut lo, mut hi) = (0, spans.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            let step = eval(mid)?;
            let v = step.vanishes;
            seen.insert(mid, step);
            if v {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        seen.into_values().collect()
    };
    let first = steps.iter().find(|s| s.vanishes);
    let (threshold, attained) = match first {
        Some(s) => (Some(s.lo.clone()), s.is_point()),
        None => (None, false),
    };
    Ok(Sweep { critical, steps, threshold, attained })
}

/// Floating view of a rational, for reports only.
pub fn approx(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};
    use proptest::prelude::*;

    fn square(x0: i64, t0: i64, x1: i64, t1: i64) -> Polygon {
        Polygon::closed(vec![(int(x0), int(t0)), (int(x1), int(t0)), (int(x1), int(t1)), (int(x0), int(t1))]).unwrap()
    }

    #[test]
    fn unit_square_cells() {
        let z = PlaneRegion::new(vec![square(0, 0, 1, 1)]);
        let arr = arrange(&[&z]).unwrap();
        let mut counts = [0; 3];
        for i in 0..arr.complex.len() {
            if arr.members[0][i] {
                counts[arr.complex.dim(i) as usize] += 1;
            }
        }
        assert_eq!(counts, [4, 4, 1]);
        assert!(arr.complex.is_locally_closed(&arr.members[0]));
        assert_eq!(derived_hom_dims(&z, &z, Field::F2).unwrap(), vec![(0, 1), (1, 0), (2, 0)]);
    }

    #[test]
    fn overlapping_squares_meet_at_vertices() {
        let a = PlaneRegion::new(vec![square(0, 0, 2, 2)]);
        let b = PlaneRegion::new(vec![Polygon::closed(vec![(int(1), int(-1)), (int(3), int(1)), (int(1), int(3))]).unwrap()]);
        let arr = arrange(&[&a, &b]).unwrap();
        let pts: BTreeSet<Point> = (0..arr.complex.len())
            .filter_map(|i| match arr.complex.shape(i) {
                Some(CellShape::Point(p)) => Some(p.clone()),
                _ => None,
            })
            .collect();
        for p in [(int(2), int(0)), (int(2), int(2)), (int(1), int(0)), (int(1), int(2))] {
            assert!(pts.contains(&p), "{p:?} missing");
        }
    }

    #[test]
    fn disjoint_closures_have_no_hom() {
        let a = PlaneRegion::new(vec![square(0, 0, 1, 1)]);
        let b = PlaneRegion::new(vec![square(3, 0, 4, 1)]);
        assert!(derived_hom_dims(&a, &b, Field::F2).unwrap().iter().all(|(_, d)| *d == 0));
    }

    #[test]
    fn half_open_flags_and_local_closure() {
        let bad = PlaneRegion::new(vec![Polygon::new(
            vec![(int(0), int(0)), (int(1), int(0)), (int(1), int(1)), (int(0), int(1))],
            vec![false, true, false, true],
            vec![true, false, true, false],
        )
        .unwrap()]);
        let arr = arrange(&[&bad]).unwrap();
        assert!(!arr.complex.is_locally_closed(&arr.members[0]));
        assert!(matches!(derived_hom_dims(&bad, &bad, Field::F2), Err(Error::Parameter(_))));
        assert!(matches!(
            Polygon::closed(vec![(int(0), int(0)), (int(1), int(1)), (int(2), int(2))]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn clockwise_polygons_keep_their_flags() {
        let ccw = Polygon::new(
            vec![(int(0), int(0)), (int(1), int(0)), (int(1), int(1)), (int(0), int(1))],
            vec![true, true, false, true],
            vec![true, true, false, false],
        )
        .unwrap();
        let mut v = ccw.vertices().to_vec();
        v.reverse();
        let cw = Polygon::new(v, vec![false, true, true, true], vec![false, false, true, true]).unwrap();
        for p in [(rat(1, 2), int(1)), (rat(1, 2), int(0)), (int(1), int(1)), (int(0), int(0)), (int(0), rat(1, 2))] {
            assert_eq!(ccw.contains(&p), cw.contains(&p), "{p:?}");
        }
    }

    #[test]
    fn sphere_region_shape() {
        let coarse = sphere_region(&rat(1, 2), &int(1)).unwrap();
        assert_eq!(coarse.polygons().len(), 4);
        let arr = arrange(&[&coarse]).unwrap();
        assert!(arr.complex.is_locally_closed(&arr.members[0]));
        for q in coarse.polygons() {
            let n = q.vertices().len();
            for i in 0..n {
                let (a, b) = (&q.vertices()[i], &q.vertices()[(i + 1) % n]);
                if a.0 != b.0 {
                    // lower edges run left to right in counter-clockwise order
                    assert_eq!(q.edge_included(i), a.0 < b.0);
                }
            }
        }
        assert!(coarse.contains(&(int(0), rat(-1, 3))));
        assert!(!coarse.contains(&(int(0), rat(1, 3))));
        assert!(!coarse.contains(&(int(1), int(0))));
        assert!(matches!(sphere_region(&int(1), &int(1)), Err(Error::Parameter(_))));
    }

    #[test]
    fn sphere_area_close_to_exact() {
        let r = sphere_region(&rat(1, 100), &int(1)).unwrap();
        // Simpson quadrature of 4/3 ∫_0^1 (1 − x²)^{3/2} dx
        let n = 20000;
        let f = |x: f64| (1.0 - x * x).max(0.0).powf(1.5);
        let h = 1.0 / n as f64;
        let s: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let exact = 4.0 / 3.0 * s;
        let got = approx(&r.area());
        assert!((got - exact).abs() / exact < 0.01, "{got} vs {exact}");
    }

    #[test]
    fn sweep_on_a_rectangle() {
        // [0,1] × [0,1): lower edge in, upper edge out
        let z = PlaneRegion::new(vec![Polygon::new(
            vec![(int(0), int(0)), (int(1), int(0)), (int(1), int(1)), (int(0), int(1))],
            vec![true, true, false, true],
            vec![true, true, false, false],
        )
        .unwrap()]);
        let sw = hom_sweep(&z, &z, &int(2), Field::F2, true).unwrap();
        assert_eq!(sw.threshold, Some(int(1)));
        assert!(sw.attained);
        let at0 = &sw.steps[0];
        assert_eq!(at0.dims.as_ref().unwrap()[0], (0, 1));
        let far = z.translated(&int(5));
        let sw = hom_sweep(&z, &far, &int(1), Field::F2, false).unwrap();
        assert_eq!(sw.threshold, Some(int(0)));
    }

    #[test]
    fn translation_must_be_a_restriction() {
        // closed square: translating up is not a restriction morphism
        let z = PlaneRegion::new(vec![square(0, 0, 1, 1)]);
        assert!(matches!(hom_sweep(&z, &z, &int(2), Field::F2, false), Err(Error::Precondition(_))));
    }

    #[test]
    fn region_text_round_trip() {
        let r = sphere_region(&rat(1, 4), &rat(1, 2)).unwrap();
        let again = PlaneRegion::from_text(&r.to_text()).unwrap();
        assert_eq!(r, again);
        let bad = "region v1\npolygon\nvertex 0 0\nvertex 1 0\nvertex 1 1\nedge 7 include\n";
        assert!(matches!(PlaneRegion::from_text(bad), Err(Error::Parse { line: 6, .. })));
        let flat = "region v1\npolygon\nvertex 0 0\nvertex 1 0\nvertex 2 0\n";
        assert!(matches!(PlaneRegion::from_text(flat), Err(Error::Parse { line: 2, .. })));
    }

    fn arb_poly() -> impl Strategy<Value = Polygon> {
        (0i64..6, 0i64..6, 1i64..5, 1i64..5, any::<bool>(), proptest::collection::vec(any::<bool>(), 8)).prop_map(
            |(x, t, w, h, tri, flags)| {
                let v = if tri {
                    vec![(int(x), int(t)), (int(x + w), int(t)), (int(x), int(t + h))]
                } else {
                    vec![(int(x), int(t)), (int(x + w), int(t)), (int(x + w), int(t + h)), (int(x), int(t + h))]
                };
                let n = v.len();
                Polygon::new(v, flags[..n].to_vec(), flags[4..4 + n].to_vec()).unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn cells_are_uniform(p in arb_poly(), q in arb_poly(), us in proptest::collection::vec((1i64..9, 1i64..9), 3)) {
            let (a, b) = (PlaneRegion::new(vec![p]), PlaneRegion::new(vec![q]));
            let arr = arrange(&[&a, &b]).unwrap();
            for i in 0..arr.complex.len() {
                let shape = arr.complex.shape(i).unwrap();
                for (u, v) in &us {
                    let pt = shape.point_at(&rat(*u, 10), &rat(*v, 10));
                    prop_assert_eq!(a.contains(&pt), arr.members[0][i]);
                    prop_assert_eq!(b.contains(&pt), arr.members[1][i]);
                }
            }
        }

        #[test]
        fn degree_zero_matches_union_find(p in arb_poly(), q in arb_poly()) {
            let (a, b) = (PlaneRegion::new(vec![p]), PlaneRegion::new(vec![q]));
            let arr = arrange(&[&a, &b]).unwrap();
            let cx = &arr.complex;
            prop_assume!(cx.is_locally_closed(&arr.members[0]) && cx.is_locally_closed(&arr.members[1]));
            let dims = hom_on_arrangement(&arr, 0, 1, Field::F2).unwrap();
            prop_assert_eq!(dims[0].1, hom0_basis(cx, &arr.members[0], &arr.members[1]).len());
            let self_dims = hom_on_arrangement(&arr, 0, 0, Field::F2).unwrap();
            prop_assert!(self_dims[0].1 >= 1);
        }
    }
}
