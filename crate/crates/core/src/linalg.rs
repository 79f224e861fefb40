//! Dense matrices over a [`Field`] with exact Gaussian elimination.

use std::fmt;

use crate::field::{Field, FieldElem};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix[{}x{} {}](", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_text()).collect();
            write!(f, "[{}]", row.join(" "))?;
        }
        write!(f, ")")
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = FieldElem;
    fn index(&self, (r, c): (usize, usize)) -> &FieldElem {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FieldElem {
        &mut self.data[r * self.cols + c]
    }
}

/// Result of row reduction: the reduced matrix and its pivot columns.
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Matrix {
        Matrix { field, rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m[(i, i)] = field.one();
        }
        m
    }

    /// Build from integer rows; all rows must have equal length.
    pub fn from_i64(field: Field, rows: &[Vec<i64>]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::zeros(field, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols);
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = field.from_i64(x);
            }
        }
        m
    }

    /// Build from a list of column vectors, each of length `rows`.
    pub fn from_columns(field: Field, rows: usize, cols: &[Vec<FieldElem>]) -> Matrix {
        let mut m = Matrix::zeros(field, rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn field(&self) -> Field {
        self.field
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(FieldElem::is_zero)
    }

    pub fn column(&self, c: usize) -> Vec<FieldElem> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn row(&self, r: usize) -> Vec<FieldElem> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &Matrix) -> Matrix {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        assert_eq!(self.field, o.field, "field mismatch in product");
        let mut out = Matrix::zeros(self.field, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = &out[(i, j)] + &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[FieldElem]) -> Vec<FieldElem> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(self.field.zero(), |acc, j| &acc + &(&self[(i, j)] * &v[j]))
            })
            .collect()
    }

    pub fn add(&self, o: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, o: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect();
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &FieldElem) -> Matrix {
        let data = self.data.iter().map(|a| a * k).collect();
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    /// Stack `[self | o]`.
    pub fn hstack(&self, o: &Matrix) -> Matrix {
        assert_eq!(self.rows, o.rows);
        let mut m = Matrix::zeros(self.field, self.rows, self.cols + o.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self[(r, c)].clone();
            }
            for c in 0..o.cols {
                m[(r, self.cols + c)] = o[(r, c)].clone();
            }
        }
        m
    }

    /// Stack `self` above `o`.
    pub fn vstack(&self, o: &Matrix) -> Matrix {
        assert_eq!(self.cols, o.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&o.data);
        Matrix { field: self.field, rows: self.rows + o.rows, cols: self.cols, data }
    }

    /// Submatrix of the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.field, rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self[(r, c)].clone();
            }
        }
        m
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Reduced row echelon form.
    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].inv();
            for j in c..m.cols {
                m[(r, j)] = &m[(r, j)] * &inv;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        let d = &f * &m[(r, j)];
                        m[(i, j)] = &m[(i, j)] - &d;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        self.rref().pivots.len()
    }

    /// Basis of `{x : self·x = 0}` as column vectors.
    pub fn nullspace(&self) -> Vec<Vec<FieldElem>> {
        let Rref { matrix: m, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![self.field.zero(); self.cols];
                v[f] = self.field.one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -&m[(r, f)];
                }
                v
            })
            .collect()
    }

    /// One solution of `self·x = b`, or `None` when inconsistent.
    pub fn solve(&self, b: &[FieldElem]) -> Option<Vec<FieldElem>> {
        assert_eq!(b.len(), self.rows);
        let bm = Matrix::from_columns(self.field, self.rows, &[b.to_vec()]);
        let Rref { matrix: m, pivots } = self.hstack(&bm).rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![self.field.zero(); self.cols];
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = m[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Solve `self·X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Option<Matrix> {
        assert_eq!(b.rows, self.rows);
        let cols: Option<Vec<_>> = (0..b.cols).map(|c| self.solve(&b.column(c))).collect();
        cols.map(|cs| Matrix::from_columns(self.field, self.cols, &cs))
    }

    /// Column indices of a maximal independent set of columns, greedy left to right.
    pub fn independent_columns(&self) -> Vec<usize> {
        self.rref().pivots
    }
}

/// Rank of a sparse matrix given by rows of `(column, value)` entries.
///
/// Rows are reduced against pivots keyed by their leading column; listing
/// rows and columns in a spatially coherent order keeps fill-in small.
pub fn sparse_rank(field: Field, rows: Vec<Vec<(usize, FieldElem)>>) -> usize {
    let mut pivots: std::collections::HashMap<usize, Vec<(usize, FieldElem)>> = std::collections::HashMap::new();
    for row in rows {
        let mut row: Vec<(usize, FieldElem)> = row.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        row.sort_by_key(|e| e.0);
        while let Some((lead, lv)) = row.first().cloned() {
            let Some(p) = pivots.get(&lead) else {
                pivots.insert(lead, row);
                break;
            };
            let f = lv.div(&p[0].1);
            row = axpy(field, &row, &f, p);
        }
    }
    pivots.len()
}

/// `x − f·y` for sorted sparse vectors.
fn axpy(field: Field, x: &[(usize, FieldElem)], f: &FieldElem, y: &[(usize, FieldElem)]) -> Vec<(usize, FieldElem)> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take = match (x.get(i), y.get(j)) {
            (Some(a), Some(b)) => a.0.cmp(&b.0),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        let (c, v) = match take {
            std::cmp::Ordering::Less => {
                i += 1;
                (x[i - 1].0, x[i - 1].1.clone())
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                (y[j - 1].0, &field.zero() - &(f * &y[j - 1].1))
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                (x[i - 1].0, &x[i - 1].1 - &(f * &y[j - 1].1))
            }
        };
        if !v.is_zero() {
            out.push((c, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(f: Field, r: usize, c: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-3i64..4, r * c).prop_map(move |v| {
            let rows: Vec<Vec<i64>> = v.chunks(c.max(1)).map(|x| x.to_vec()).take(r).collect();
            if c == 0 {
                Matrix::zeros(f, r, 0)
            } else {
                Matrix::from_i64(f, &rows)
            }
        })
    }

    #[test]
    fn rank_examples() {
        let f = Field::Rational;
        let m = Matrix::from_i64(f, &[vec![1, 2], vec![2, 4]]);
        assert_eq!(m.rank(), 1);
        let m2 = Matrix::from_i64(Field::F2, &[vec![1, 1], vec![1, 1]]);
        assert_eq!(m2.rank(), 1);
        assert_eq!(Matrix::identity(f, 3).rank(), 3);
    }

    proptest! {
        #[test]
        fn rank_nullity(m in mat(Field::Prime(3), 4, 5)) {
            let ns = m.nullspace();
            prop_assert_eq!(ns.len() + m.rank(), 5);
            for v in &ns {
                prop_assert!(m.mul_vec(v).iter().all(FieldElem::is_zero));
            }
        }

        #[test]
        fn sparse_rank_matches_dense(m in mat(Field::Prime(5), 5, 6)) {
            let rows = (0..5).map(|r| (0..6).map(|c| (c, m[(r, c)].clone())).collect()).collect();
            prop_assert_eq!(sparse_rank(Field::Prime(5), rows), m.rank());
        }

        #[test]
        fn solve_consistent(m in mat(Field::Rational, 3, 4), x in proptest::collection::vec(-3i64..4, 4)) {
            let f = Field::Rational;
            let x: Vec<FieldElem> = x.into_iter().map(|v| f.from_i64(v)).collect();
            let b = m.mul_vec(&x);
            let y = m.solve(&b).expect("consistent system");
            prop_assert_eq!(m.mul_vec(&y), b);
        }

        #[test]
        fn rank_transpose(m in mat(Field::F2, 4, 3)) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }
    }

    #[test]
    fn inconsistent() {
        let f = Field::F2;
        let m = Matrix::from_i64(f, &[vec![1, 0], vec![1, 0]]);
        assert!(m.solve(&[f.one(), f.zero()]).is_none());
    }
}
