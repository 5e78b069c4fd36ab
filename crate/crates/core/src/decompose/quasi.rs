//! Affine decomposition of a non-signalling channel over products of local
//! frame channels.

use std::fmt;

use crate::decompose::frame::LocalChannelFrame;
use crate::decompose::tensor::{body_to_tensor, multi_mode_product, wing_dims};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lp;
use crate::matrix::Matrix;
use crate::ns::{check_nonsignalling_with, MultipartiteChannel};
use crate::scalar::{negligible, Arithmetic, Scalar};
use crate::system::{decode_index, encode_index};

/// Coefficients at or below this magnitude are dropped in float mode.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Largest product frame the LP mode accepts.
pub const MAX_LP_TERMS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecomposeMode {
    /// Least-squares minimum-norm affine solution.
    #[default]
    MinNorm,
    /// Minimizes `Σ|c_k|` by linear programming.
    MinNegativity,
}

impl DecomposeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecomposeMode::MinNorm => "min-norm",
            DecomposeMode::MinNegativity => "min-neg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "min-norm" => Some(DecomposeMode::MinNorm),
            "min-neg" | "min-negativity" => Some(DecomposeMode::MinNegativity),
            _ => None,
        }
    }
}

impl fmt::Display for DecomposeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiTerm<S> {
    pub coeff: S,
    /// Frame member index per wing.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiMixture<S> {
    pub terms: Vec<QuasiTerm<S>>,
    pub residual: S,
    pub mode: DecomposeMode,
    pub frame: LocalChannelFrame<S>,
}

impl<S: Scalar> QuasiMixture<S> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient_sum(&self) -> S {
        self.terms.iter().fold(S::zero(), |a, t| a + t.coeff.clone())
    }

    pub fn min_coefficient(&self) -> Option<S> {
        self.terms.iter().map(|t| t.coeff.clone()).reduce(|a, b| if b < a { b } else { a })
    }

    /// Dense coefficient tensor over the product frame.
    pub fn coefficient_tensor(&self) -> Vec<S> {
        let sizes = self.frame.sizes();
        let mut c = vec![S::zero(); sizes.iter().product()];
        for t in &self.terms {
            let k = encode_index(&t.indices, &sizes);
            c[k] = c[k].clone() + t.coeff.clone();
        }
        c
    }
}

/// Sum of the negative parts of the coefficients.
pub fn negativity<S: Scalar>(qm: &QuasiMixture<S>) -> S {
    qm.terms
        .iter()
        .filter(|t| t.coeff.is_negative())
        .fold(S::zero(), |a, t| a - t.coeff.clone())
}

pub fn decompose_quasimixture<S: Scalar>(ch: &MultipartiteChannel<S>, mode: DecomposeMode, tol: f64) -> Result<QuasiMixture<S>> {
    decompose_with(ch, mode, tol, Execution::default())
}

pub fn decompose_with<S: Scalar>(
    ch: &MultipartiteChannel<S>,
    mode: DecomposeMode,
    tol: f64,
    exec: Execution,
) -> Result<QuasiMixture<S>> {
    let report = check_nonsignalling_with(ch, tol, exec);
    if !report.verdict {
        return Err(Error::NotNonSignalling { residual: report.max_residual().to_string() });
    }
    let frame = LocalChannelFrame::<S>::for_wings(ch.theory(), ch.wings())?;
    let stacked: Vec<Matrix<S>> = frame.wings.iter().map(|w| w.stacked()).collect();
    let dims = wing_dims(ch.wings());
    let target = body_to_tensor(&ch.body().matrix(), ch.wings());
    let rank_tol = S::default_tol();
    let coeffs = match mode {
        DecomposeMode::MinNorm => {
            let pinvs: Vec<Matrix<S>> = stacked.iter().map(|f| f.pinv(rank_tol)).collect();
            multi_mode_product(&target, &dims, &pinvs, exec)
        }
        DecomposeMode::MinNegativity => min_negativity(&stacked, &dims, &target, tol, exec)?,
    };
    let sizes = frame.sizes();
    let terms: Vec<QuasiTerm<S>> = coeffs
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !prunable(c))
        .map(|(k, coeff)| QuasiTerm { coeff, indices: decode_index(k, &sizes) })
        .collect();
    let mut qm = QuasiMixture { terms, residual: S::zero(), mode, frame };
    let rebuilt = multi_mode_product(&qm.coefficient_tensor(), &sizes, &stacked, exec);
    qm.residual = rebuilt
        .iter()
        .zip(&target)
        .map(|(a, b)| (a.clone() - b.clone()).abs())
        .fold(S::zero(), |m, x| if x > m { x } else { m });
    if !negligible(&qm.residual, tol) {
        return Err(Error::ResidualTooLarge { residual: qm.residual.to_string(), tol });
    }
    Ok(qm)
}

fn prunable<S: Scalar>(c: &S) -> bool {
    match S::ARITHMETIC {
        Arithmetic::Rational => c.is_zero(),
        Arithmetic::Float64 => c.abs().as_f64() <= PRUNE_THRESHOLD,
    }
}

/// `min Σ(c⁺ + c⁻)` subject to `(⊗ F_i[R_i]) (c⁺ − c⁻) = T[R]`, with `R_i`
/// a maximal independent row set of each wing's stacked frame.
fn min_negativity<S: Scalar>(stacked: &[Matrix<S>], dims: &[usize], target: &[S], tol: f64, exec: Execution) -> Result<Vec<S>> {
    let n: usize = stacked.iter().map(Matrix::cols).product();
    if n > MAX_LP_TERMS {
        return Err(Error::ProblemTooLarge(2 * n));
    }
    let rank_tol = S::default_tol();
    let mut a = Matrix::from_vec(1, 1, vec![S::one()]);
    let mut selectors = Vec::with_capacity(stacked.len());
    for (f, &d) in stacked.iter().zip(dims) {
        let rows = f.independent_rows(rank_tol);
        a = a.kron(&f.select_rows(&rows));
        selectors.push(Matrix::from_fn(rows.len(), d, |r, c| if rows[r] == c { S::one() } else { S::zero() }));
    }
    let b = multi_mode_product(target, dims, &selectors, exec);
    let neg = a.map(|x| -x.clone());
    let full = Matrix::from_fn(a.rows(), 2 * n, |r, c| if c < n { a[(r, c)].clone() } else { neg[(r, c - n)].clone() });
    let lp_tol = match S::ARITHMETIC {
        Arithmetic::Rational => 0.0,
        Arithmetic::Float64 => tol.min(1e-10),
    };
    let sol = lp::minimize(&full, &b, &vec![S::one(); 2 * n], lp_tol)?;
    Ok((0..n).map(|k| sol.x[k].clone() - sol.x[n + k].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{noisy_pr_box, pr_box, swap_channel};
    use crate::scalar::Rational;

    #[test]
    fn pr_box_min_norm_is_affine_and_negative() {
        let pr = pr_box::<Rational>().unwrap();
        let qm = decompose_quasimixture(&pr, DecomposeMode::MinNorm, 0.0).unwrap();
        assert_eq!(qm.coefficient_sum(), Rational::from_int(1));
        assert!(qm.min_coefficient().unwrap() < Rational::from_int(0));
        assert_eq!(qm.residual, Rational::from_int(0));
    }

    #[test]
    fn pr_box_min_negativity() {
        let pr = pr_box::<Rational>().unwrap();
        let qm = decompose_quasimixture(&pr, DecomposeMode::MinNegativity, 0.0).unwrap();
        assert_eq!(qm.coefficient_sum(), Rational::from_int(1));
        // Σ|c| = 2, cross-checked with an independent LP solver
        assert_eq!(negativity(&qm), Rational::from_ratio(1, 2));
        let mn = decompose_quasimixture(&pr, DecomposeMode::MinNorm, 0.0).unwrap();
        assert!(negativity(&mn) >= negativity(&qm));
    }

    #[test]
    fn local_noisy_box_has_zero_negativity() {
        let ch = noisy_pr_box(Rational::from_ratio(1, 2)).unwrap();
        let qm = decompose_quasimixture(&ch, DecomposeMode::MinNegativity, 0.0).unwrap();
        assert_eq!(negativity(&qm), Rational::from_int(0));
    }

    #[test]
    fn signalling_is_rejected() {
        let sw = swap_channel::<Rational>(2).unwrap();
        assert!(matches!(
            decompose_quasimixture(&sw, DecomposeMode::MinNorm, 0.0),
            Err(Error::NotNonSignalling { .. })
        ));
    }
}
