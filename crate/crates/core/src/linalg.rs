//! Dense linear algebra over [`Field`], with a bit-packed path for GF(2).

use crate::field::{Field, Sym};
use serde::{Deserialize, Serialize};

/// Row-major dense matrix of field symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Sym>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<Sym>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Sym {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Sym) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Sym] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Sym] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Sym> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Sym>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Submatrix keeping the listed columns in order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.set(r, j, self.get(r, c));
            }
        }
        m
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let data = rows.iter().flat_map(|&r| self.row(r).to_vec()).collect();
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, field: &Field, v: &[Sym]) -> Vec<Sym> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0; self.cols];
        for (r, &coef) in v.iter().enumerate() {
            if coef == 0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(r)) {
                *o = field.mul_add(*o, coef, x);
            }
        }
        out
    }

    pub fn is_zero_column(&self, c: usize) -> bool {
        (0..self.rows).all(|r| self.get(r, c) == 0)
    }
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(field: &Field, m: &mut Matrix) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols() {
        if r == m.rows() {
            break;
        }
        let Some(p) = (r..m.rows()).find(|&i| m.get(i, c) != 0) else {
            continue;
        };
        if p != r {
            for j in 0..m.cols() {
                let (a, b) = (m.get(r, j), m.get(p, j));
                m.set(r, j, b);
                m.set(p, j, a);
            }
        }
        let inv = field.inv(m.get(r, c)).expect("pivot is nonzero");
        if inv != 1 {
            for j in 0..m.cols() {
                let v = field.mul(m.get(r, j), inv);
                m.set(r, j, v);
            }
        }
        for i in 0..m.rows() {
            if i == r {
                continue;
            }
            let factor = m.get(i, c);
            if factor == 0 {
                continue;
            }
            for j in 0..m.cols() {
                let v = field.sub(m.get(i, j), field.mul(factor, m.get(r, j)));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(field: &Field, m: &Matrix) -> usize {
    if field.is_binary() {
        return BitMatrix::from_matrix(m).rank();
    }
    let mut work = m.clone();
    rref(field, &mut work).len()
}

/// Inverse of a square matrix, or `None` when singular.
pub fn invert(field: &Field, m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut aug = Matrix::zeros(n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, m.get(r, c));
        }
        aug.set(r, n + r, 1);
    }
    let pivots = rref(field, &mut aug);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    let cols: Vec<usize> = (n..2 * n).collect();
    Some(aug.select_columns(&cols))
}

/// Expresses vectors as linear combinations of a fixed generating list.
///
/// Built once from `generators`; [`SpanSolver::express`] then returns
/// coefficients `t` with `Σ t_i generators[i] = target`, or `None` when the
/// target is outside the span.
#[derive(Debug, Clone)]
pub struct SpanSolver {
    dim: usize,
    /// reduced basis vectors with their pivot and combination over generators
    basis: Vec<(usize, Vec<Sym>, Vec<Sym>)>,
    generators: usize,
}

impl SpanSolver {
    pub fn new(field: &Field, generators: &[Vec<Sym>], dim: usize) -> Self {
        let mut solver = SpanSolver {
            dim,
            basis: Vec::new(),
            generators: generators.len(),
        };
        for (i, g) in generators.iter().enumerate() {
            let mut combo = vec![0; generators.len()];
            combo[i] = 1;
            let (v, combo) = solver.reduce(field, g.clone(), combo);
            if let Some(p) = v.iter().position(|&x| x != 0) {
                let inv = field.inv(v[p]).unwrap();
                let v: Vec<Sym> = v.iter().map(|&x| field.mul(x, inv)).collect();
                let combo: Vec<Sym> = combo.iter().map(|&x| field.mul(x, inv)).collect();
                solver.basis.push((p, v, combo));
            }
        }
        solver
    }

    fn reduce(&self, field: &Field, mut v: Vec<Sym>, mut combo: Vec<Sym>) -> (Vec<Sym>, Vec<Sym>) {
        debug_assert_eq!(v.len(), self.dim);
        for (p, b, bc) in &self.basis {
            let factor = v[*p];
            if factor == 0 {
                continue;
            }
            for (x, &y) in v.iter_mut().zip(b) {
                *x = field.sub(*x, field.mul(factor, y));
            }
            for (x, &y) in combo.iter_mut().zip(bc) {
                *x = field.sub(*x, field.mul(factor, y));
            }
        }
        (v, combo)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn express(&self, field: &Field, target: &[Sym]) -> Option<Vec<Sym>> {
        let (v, combo) = self.reduce(field, target.to_vec(), vec![0; self.generators]);
        if v.iter().any(|&x| x != 0) {
            return None;
        }
        // reduce() tracked -combination of subtracted basis vectors
        Some(combo.iter().map(|&x| field.neg(x)).collect())
    }
}

/// Bit-packed GF(2) matrix used for rank computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix {
            cols,
            words: cols.div_ceil(64).max(1),
            rows: Vec::new(),
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        let mut b = BitMatrix::new(m.cols());
        for r in 0..m.rows() {
            b.push_row(m.row(r));
        }
        b
    }

    pub fn push_row(&mut self, row: &[Sym]) {
        assert_eq!(row.len(), self.cols);
        let mut bits = vec![0u64; self.words];
        for (c, &v) in row.iter().enumerate() {
            if v & 1 == 1 {
                bits[c / 64] |= 1 << (c % 64);
            }
        }
        self.rows.push(bits);
    }

    pub fn push_bits(&mut self, bits: Vec<u64>) {
        assert_eq!(bits.len(), self.words);
        self.rows.push(bits);
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let (w, bit) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && row[w] & bit != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_binary_and_generic_agree() {
        let f2 = Field::binary();
        let m = Matrix::from_rows(&[vec![1, 0, 1, 1], vec![0, 1, 1, 0], vec![1, 1, 0, 1]]);
        assert_eq!(rank(&f2, &m), 2);
        let mut w = m.clone();
        assert_eq!(rref(&f2, &mut w).len(), 2);
    }

    #[test]
    fn invert_gf5() {
        let f = Field::new(5).unwrap();
        let m = Matrix::from_rows(&[vec![2, 1], vec![1, 1]]);
        let inv = invert(&f, &m).unwrap();
        for i in 0..2 {
            let e: Vec<Sym> = (0..2).map(|j| f.dot(m.row(i), &inv.column(j))).collect();
            assert_eq!(e, (0..2).map(|j| (i == j) as Sym).collect::<Vec<_>>());
        }
        assert!(invert(&f, &Matrix::from_rows(&[vec![1, 2], vec![2, 4]])).is_none());
    }

    #[test]
    fn span_solver_expresses() {
        let f = Field::new(3).unwrap();
        let gens = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 2]];
        let s = SpanSolver::new(&f, &gens, 3);
        assert_eq!(s.rank(), 2);
        let target = vec![2, 1, 0];
        let t = s.express(&f, &target).unwrap();
        let mut acc = vec![0; 3];
        for (c, g) in t.iter().zip(&gens) {
            for (a, &x) in acc.iter_mut().zip(g) {
                *a = f.mul_add(*a, *c, x);
            }
        }
        assert_eq!(acc, target);
        assert!(s.express(&f, &[0, 0, 1]).is_none());
    }
}
