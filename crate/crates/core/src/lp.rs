//! Dense two-phase simplex with Bland's rule, generic over the scalar
//! backend (exact in rationals).
//!
//! Solves `min cᵀx  s.t.  A x = b, x ≥ 0`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{negligible, Scalar};

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
}

struct Tableau<S> {
    /// rows 0..m are constraints, row m is the objective (reduced costs);
    /// last column is the right-hand side.
    t: Matrix<S>,
    basis: Vec<usize>,
    tol: f64,
}

impl<S: Scalar> Tableau<S> {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.t.cols() - 1
    }

    fn is_pos(&self, x: &S) -> bool {
        x.is_positive() && !negligible(x, self.tol)
    }

    fn is_neg(&self, x: &S) -> bool {
        x.is_negative() && !negligible(x, self.tol)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.t.cols();
        let p = self.t[(row, col)].clone();
        for c in 0..cols {
            self.t[(row, c)] = self.t[(row, c)].clone() / p.clone();
        }
        for r in 0..self.t.rows() {
            if r == row {
                continue;
            }
            let f = self.t[(r, col)].clone();
            if f.is_zero() {
                continue;
            }
            for c in 0..cols {
                let v = self.t[(row, c)].clone();
                if !v.is_zero() {
                    self.t[(r, c)] = self.t[(r, c)].clone() - f.clone() * v;
                }
            }
            // keep the pivot column exact
            self.t[(r, col)] = S::zero();
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on columns `< allowed`. Returns false when
    /// unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let m = self.rows();
        let rhs = self.rhs_col();
        loop {
            let entering = (0..allowed).find(|&j| self.is_neg(&self.t[(m, j)]));
            let Some(col) = entering else { return true };
            let mut best: Option<(usize, S)> = None;
            for r in 0..m {
                let a = &self.t[(r, col)];
                if !self.is_pos(a) {
                    continue;
                }
                let ratio = self.t[(r, rhs)].clone() / a.clone();
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        if ratio < bv || (ratio == bv && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

pub fn minimize<S: Scalar>(a: &Matrix<S>, b: &[S], c: &[S], tol: f64) -> Result<LpSolution<S>> {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length");
    assert_eq!(c.len(), n, "cost length");
    // [A | I_art | b], objective row for phase 1
    let width = n + m + 1;
    let mut t = Matrix::zeros(m + 1, width);
    for r in 0..m {
        let flip = b[r].is_negative();
        for j in 0..n {
            let v = a[(r, j)].clone();
            t[(r, j)] = if flip { -v } else { v };
        }
        t[(r, n + r)] = S::one();
        t[(r, width - 1)] = if flip { -b[r].clone() } else { b[r].clone() };
    }
    // phase-1 reduced costs: −Σ rows over the original columns
    for j in (0..n).chain(std::iter::once(width - 1)) {
        let s = (0..m).fold(S::zero(), |acc, r| acc + t[(r, j)].clone());
        t[(m, j)] = -s;
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect(), tol };
    tab.optimize(n + m);
    let phase1 = -tab.t[(m, width - 1)].clone();
    if !negligible(&phase1, tol.max(if tol > 0.0 { 1e-9 } else { 0.0 })) {
        return Err(Error::Infeasible);
    }
    // drive artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < tab.rows() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| !negligible(&tab.t[(r, j)], tol)) {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    remove_row(&mut tab, r);
                }
            }
        } else {
            r += 1;
        }
    }
    // phase 2 on the original columns only
    let m2 = tab.rows();
    for (j, cj) in c.iter().take(n).enumerate() {
        tab.t[(m2, j)] = cj.clone();
    }
    for j in n..width {
        tab.t[(m2, j)] = S::zero();
    }
    for row in 0..m2 {
        let bj = tab.basis[row];
        let cb = c[bj].clone();
        if cb.is_zero() {
            continue;
        }
        for j in 0..width {
            let v = tab.t[(row, j)].clone();
            if !v.is_zero() {
                tab.t[(m2, j)] = tab.t[(m2, j)].clone() - cb.clone() * v;
            }
        }
    }
    if !tab.optimize(n) {
        return Err(Error::Infeasible);
    }
    let mut x = vec![S::zero(); n];
    for (row, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[(row, width - 1)].clone();
        }
    }
    let objective = x.iter().zip(c).fold(S::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    Ok(LpSolution { x, objective })
}

fn remove_row<S: Scalar>(tab: &mut Tableau<S>, r: usize) {
    let keep: Vec<usize> = (0..tab.t.rows()).filter(|&i| i != r).collect();
    tab.t = tab.t.select_rows(&keep);
    tab.basis.remove(r);
}

/// Feasibility of `A x = b, x ≥ 0`.
pub fn feasible<S: Scalar>(a: &Matrix<S>, b: &[S], tol: f64) -> bool {
    let c = vec![S::zero(); a.cols()];
    minimize(a, b, &c, tol).is_ok()
}
