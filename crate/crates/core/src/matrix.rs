//! Dense row-major matrices over a [`Scalar`] and the small amount of
//! linear algebra the crate needs: elimination, rank, inverses and
//! Moore-Penrose pseudo-inverses via full-rank factorization.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::scalar::{negligible, Scalar};

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.data[r * self.cols..(r + 1) * self.cols].iter().map(|x| format!("{x:?}")).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<S> = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        Self::from_vec(rows.len(), cols, data)
    }

    /// A single column.
    pub fn column_vector(v: Vec<S>) -> Self {
        let n = v.len();
        Self::from_vec(n, 1, v)
    }

    pub fn row_vector(v: Vec<S>) -> Self {
        let n = v.len();
        Self::from_vec(1, n, v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    /// Panics on inner-dimension mismatch; callers check signatures first.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    if !b.is_zero() {
                        *o = o.clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    /// Kronecker product with the left factor most significant.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = &other[(k, l)];
                        if !b.is_zero() {
                            out[(i * other.rows + k, j * other.cols + l)] = a.clone() * b.clone();
                        }
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// Entrywise max-abs difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<S> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a.clone() - b.clone()).abs())
                .fold(S::zero(), |m, x| if x > m { x } else { m }),
        )
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().map(|x| x.abs()).fold(S::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |r, c| self[(r, cols[c])].clone())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.cols, |r, c| self[(rows[r], c)].clone())
    }

    /// Reduced row echelon form with partial pivoting. Entries whose
    /// magnitude is within `tol` are treated as zero.
    pub fn rref(&self, tol: f64) -> Echelon<S> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let mut best = row;
            let mut best_abs = m[(row, col)].abs();
            for r in row + 1..m.rows {
                let a = m[(r, col)].abs();
                if a > best_abs {
                    best = r;
                    best_abs = a;
                }
            }
            if negligible(&best_abs, tol) {
                continue;
            }
            m.swap_rows(row, best);
            let p = m[(row, col)].clone();
            for c in col..m.cols {
                m[(row, c)] = m[(row, c)].clone() / p.clone();
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let f = m[(r, col)].clone();
                if f.is_zero() {
                    continue;
                }
                for c in col..m.cols {
                    let v = m[(row, c)].clone();
                    if !v.is_zero() {
                        m[(r, c)] = m[(r, c)].clone() - f.clone() * v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        Echelon { reduced: m, pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.rref(tol).pivots.len()
    }

    /// Indices of a maximal linearly independent set of rows, greedily in
    /// row order.
    pub fn independent_rows(&self, tol: f64) -> Vec<usize> {
        self.transpose().rref(tol).pivots
    }

    pub fn inverse(&self, tol: f64) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let aug = Self::from_fn(n, 2 * n, |r, c| {
            if c < n {
                self[(r, c)].clone()
            } else if c - n == r {
                S::one()
            } else {
                S::zero()
            }
        });
        let e = aug.rref(tol);
        if e.pivots.len() < n || e.pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |r, c| e.reduced[(r, n + c)].clone()))
    }

    /// Moore-Penrose pseudo-inverse from the full-rank factorization
    /// `A = C R`: `A⁺ = Rᵀ (R Rᵀ)⁻¹ (Cᵀ C)⁻¹ Cᵀ`. Exact in the rational
    /// backend.
    pub fn pinv(&self, tol: f64) -> Self {
        let e = self.rref(tol);
        let r = e.pivots.len();
        if r == 0 {
            return Self::zeros(self.cols, self.rows);
        }
        let c_mat = self.select_columns(&e.pivots);
        let r_mat = Self::from_fn(r, self.cols, |i, j| e.reduced[(i, j)].clone());
        let rt = r_mat.transpose();
        let ct = c_mat.transpose();
        let rrt_inv = r_mat.matmul(&rt).inverse(0.0).expect("R Rᵀ is nonsingular");
        let ctc_inv = ct.matmul(&c_mat).inverse(0.0).expect("Cᵀ C is nonsingular");
        rt.matmul(&rrt_inv).matmul(&ctc_inv).matmul(&ct)
    }

    /// Basis of the right null space, one column per vector.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<S>> {
        let e = self.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !e.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (i, &p) in e.pivots.iter().enumerate() {
                    v[p] = -e.reduced[(i, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols, "apply shape mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }
}

/// Output of [`Matrix::rref`].
#[derive(Debug, Clone)]
pub struct Echelon<S> {
    pub reduced: Matrix<S>,
    pub pivots: Vec<usize>,
}

/// Rank of a family of vectors (each entry one vector).
pub fn rank_of<S: Scalar>(vectors: &[Vec<S>], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Matrix::from_rows(vectors).rank(tol)
}

/// Rank of the affine hull: rank of the differences to the first member.
pub fn affine_rank_of<S: Scalar>(vectors: &[Vec<S>], tol: f64) -> usize {
    let Some(first) = vectors.first() else { return 0 };
    let diffs: Vec<Vec<S>> = vectors[1..]
        .iter()
        .map(|v| v.iter().zip(first).map(|(a, b)| a.clone() - b.clone()).collect())
        .collect();
    rank_of(&diffs, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn kron_respects_left_significance() {
        let a = Matrix::from_rows(&[vec![q(1, 2)], vec![q(2, 3)]]);
        let b = Matrix::from_rows(&[vec![q(1, 2)], vec![q(1, 2)]]);
        let k = a.kron(&b);
        assert_eq!(k.data(), &[q(1, 4), q(1, 4), q(1, 3), q(1, 3)]);
    }

    #[test]
    fn pinv_is_exact_on_rank_deficient_input() {
        let a = Matrix::from_rows(&[
            vec![q(1, 1), q(2, 1), q(3, 1)],
            vec![q(2, 1), q(4, 1), q(6, 1)],
            vec![q(1, 1), q(0, 1), q(1, 1)],
        ]);
        let p = a.pinv(0.0);
        // Penrose conditions.
        assert_eq!(a.matmul(&p).matmul(&a), a);
        assert_eq!(p.matmul(&a).matmul(&p), p);
        assert_eq!(a.matmul(&p).transpose(), a.matmul(&p));
        assert_eq!(p.matmul(&a).transpose(), p.matmul(&a));
    }

    #[test]
    fn nullspace_vectors_are_annihilated() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let ns = a.nullspace(1e-12);
        assert_eq!(ns.len(), 1);
        for x in a.apply(&ns[0]) {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_of_singular_is_none() {
        let a = Matrix::from_rows(&[vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]]);
        assert!(a.inverse(0.0).is_none());
        let b = Matrix::from_rows(&[vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]]);
        assert_eq!(b.matmul(&b.inverse(0.0).unwrap()), Matrix::identity(2));
    }
}
