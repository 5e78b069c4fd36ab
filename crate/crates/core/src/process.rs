//! Real linear processes between signatures, and the strict symmetric
//! monoidal operations on them.

use std::borrow::Cow;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{negligible, Arithmetic, Rational, Scalar};
use crate::system::{decode_index, encode_index, invert_permutation, validate_permutation, Signature};

#[derive(Debug, Clone, PartialEq)]
enum Repr<S> {
    Dense(Matrix<S>),
    /// Output wire `j` carries input wire `perm[j]`. Kept symbolic so large
    /// wire shuffles compose by reindexing instead of matrix products.
    Permutation(Arc<Vec<usize>>),
}

/// A linear map `inputs → outputs` with matrix shape
/// `outputs.total_dim() × inputs.total_dim()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProcess<S> {
    inputs: Signature,
    outputs: Signature,
    repr: Repr<S>,
}

impl<S: Scalar> LinearProcess<S> {
    pub fn new(inputs: Signature, outputs: Signature, matrix: Matrix<S>) -> Result<Self> {
        let expected = (outputs.total_dim(), inputs.total_dim());
        if matrix.shape() != expected {
            return Err(Error::SignatureMismatch(format!(
                "matrix is {}x{} but {} -> {} needs {}x{}",
                matrix.rows(),
                matrix.cols(),
                inputs,
                outputs,
                expected.0,
                expected.1
            )));
        }
        Ok(LinearProcess { inputs, outputs, repr: Repr::Dense(matrix) })
    }

    /// A state: no inputs.
    pub fn state(outputs: Signature, vector: Vec<S>) -> Result<Self> {
        Self::new(Signature::empty(), outputs, Matrix::column_vector(vector))
    }

    /// An effect: no outputs.
    pub fn effect(inputs: Signature, row: Vec<S>) -> Result<Self> {
        Self::new(inputs, Signature::empty(), Matrix::row_vector(row))
    }

    /// An `I → I` process.
    pub fn number(value: S) -> Self {
        LinearProcess {
            inputs: Signature::empty(),
            outputs: Signature::empty(),
            repr: Repr::Dense(Matrix::from_vec(1, 1, vec![value])),
        }
    }

    pub fn identity(sig: Signature) -> Self {
        let n = sig.len();
        LinearProcess {
            inputs: sig.clone(),
            outputs: sig,
            repr: Repr::Permutation(Arc::new((0..n).collect())),
        }
    }

    /// Wire permutation: output position `j` carries input wire `perm[j]`.
    pub fn permutation(sig: Signature, perm: &[usize]) -> Result<Self> {
        validate_permutation(perm, sig.len())?;
        let outputs = sig.permuted(perm);
        Ok(LinearProcess { inputs: sig, outputs, repr: Repr::Permutation(Arc::new(perm.to_vec())) })
    }

    /// Swap of two wire groups `a ⊗ b → b ⊗ a`.
    pub fn swap(a: &Signature, b: &Signature) -> Self {
        let (na, nb) = (a.len(), b.len());
        let perm: Vec<usize> = (na..na + nb).chain(0..na).collect();
        Self::permutation(a.concat(b), &perm).expect("swap is a bijection")
    }

    pub fn inputs(&self) -> &Signature {
        &self.inputs
    }

    pub fn outputs(&self) -> &Signature {
        &self.outputs
    }

    pub fn arithmetic(&self) -> Arithmetic {
        S::ARITHMETIC
    }

    pub fn is_permutation(&self) -> bool {
        matches!(self.repr, Repr::Permutation(_))
    }

    pub fn permutation_map(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Permutation(p) => Some(p),
            Repr::Dense(_) => None,
        }
    }

    /// The dense matrix; materialized on demand for permutations.
    pub fn matrix(&self) -> Cow<'_, Matrix<S>> {
        match &self.repr {
            Repr::Dense(m) => Cow::Borrowed(m),
            Repr::Permutation(p) => Cow::Owned(permutation_matrix(&self.inputs, p)),
        }
    }

    pub fn into_matrix(self) -> Matrix<S> {
        match self.repr {
            Repr::Dense(m) => m,
            Repr::Permutation(p) => permutation_matrix(&self.inputs, &p),
        }
    }

    /// Entrywise max-abs distance; errors when signatures differ.
    pub fn distance(&self, other: &Self) -> Result<S> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return Err(Error::SignatureMismatch(format!(
                "{} -> {} vs {} -> {}",
                self.inputs, self.outputs, other.inputs, other.outputs
            )));
        }
        Ok(self.matrix().max_abs_diff(&other.matrix()).expect("shapes follow signatures"))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other).map(|d| negligible(&d, tol)).unwrap_or(false)
    }

    /// The value of an `I → I` process.
    pub fn scalar_value(&self) -> Option<S> {
        (self.inputs.total_dim() == 1 && self.outputs.total_dim() == 1)
            .then(|| self.matrix()[(0, 0)].clone())
    }

    /// Converts the entries to another backend.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LinearProcess<T> {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.map(f)),
            Repr::Permutation(p) => Repr::Permutation(p.clone()),
        };
        LinearProcess { inputs: self.inputs.clone(), outputs: self.outputs.clone(), repr }
    }
}

impl LinearProcess<Rational> {
    pub fn to_float(&self) -> LinearProcess<f64> {
        self.convert(|x| x.as_f64())
    }
}

fn permutation_matrix<S: Scalar>(inputs: &Signature, perm: &[usize]) -> Matrix<S> {
    let n = inputs.total_dim();
    let mut m = Matrix::zeros(n, n);
    for col in 0..n {
        m[(permute_index(col, inputs, perm), col)] = S::one();
    }
    m
}

/// Where input basis index `index` lands under the wire permutation.
fn permute_index(index: usize, inputs: &Signature, perm: &[usize]) -> usize {
    let dims = inputs.dims();
    let digits = decode_index(index, &dims);
    let out_digits: Vec<usize> = perm.iter().map(|&p| digits[p]).collect();
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    encode_index(&out_digits, &out_dims)
}

/// `g ∘ f`: apply `f` then `g`.
pub fn compose_seq<S: Scalar>(f: &LinearProcess<S>, g: &LinearProcess<S>) -> Result<LinearProcess<S>> {
    if f.outputs != g.inputs {
        return Err(Error::TypeMismatch {
            context: "sequential composition".into(),
            expected: g.inputs.to_string(),
            found: f.outputs.to_string(),
        });
    }
    let inputs = f.inputs.clone();
    let outputs = g.outputs.clone();
    let repr = match (&f.repr, &g.repr) {
        (Repr::Permutation(p), Repr::Permutation(q)) => {
            // output j of g carries g-input q[j] = f-output q[j] = f-input p[q[j]]
            Repr::Permutation(Arc::new(q.iter().map(|&j| p[j]).collect()))
        }
        (Repr::Dense(m), Repr::Permutation(q)) => {
            // reorder rows of m
            let mid = &f.outputs;
            let mut out = Matrix::zeros(m.rows(), m.cols());
            for r in 0..m.rows() {
                let nr = permute_index(r, mid, q);
                for c in 0..m.cols() {
                    out[(nr, c)] = m[(r, c)].clone();
                }
            }
            Repr::Dense(out)
        }
        (Repr::Permutation(p), Repr::Dense(m)) => {
            // column c of result = column permute(c) of m
            let mut out = Matrix::zeros(m.rows(), m.cols());
            for c in 0..m.cols() {
                let src = permute_index(c, &f.inputs, p);
                for r in 0..m.rows() {
                    out[(r, c)] = m[(r, src)].clone();
                }
            }
            Repr::Dense(out)
        }
        (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(b.matmul(a)),
    };
    Ok(LinearProcess { inputs, outputs, repr })
}

/// `f ⊗ g`, concatenating signatures.
pub fn compose_par<S: Scalar>(f: &LinearProcess<S>, g: &LinearProcess<S>) -> LinearProcess<S> {
    let inputs = f.inputs.concat(&g.inputs);
    let outputs = f.outputs.concat(&g.outputs);
    let repr = match (&f.repr, &g.repr) {
        (Repr::Permutation(p), Repr::Permutation(q)) => {
            let off = f.inputs.len();
            Repr::Permutation(Arc::new(p.iter().copied().chain(q.iter().map(|&j| j + off)).collect()))
        }
        _ => Repr::Dense(f.matrix().kron(&g.matrix())),
    };
    LinearProcess { inputs, outputs, repr }
}

/// `p·f + (1−p)·g`.
pub fn convex_mix<S: Scalar>(p: &S, f: &LinearProcess<S>, g: &LinearProcess<S>) -> Result<LinearProcess<S>> {
    if p.is_negative() || *p > S::one() {
        return Err(Error::InvalidProbability(p.to_string()));
    }
    if f.inputs != g.inputs || f.outputs != g.outputs {
        return Err(Error::TypeMismatch {
            context: "convex mixture".into(),
            expected: format!("{} -> {}", f.inputs, f.outputs),
            found: format!("{} -> {}", g.inputs, g.outputs),
        });
    }
    let q = S::one() - p.clone();
    let m = f.matrix().scale(p).add(&g.matrix().scale(&q));
    LinearProcess::new(f.inputs.clone(), f.outputs.clone(), m)
}

/// Parallel composition of a list (the empty list gives the number 1).
pub fn tensor_all<S: Scalar>(items: &[LinearProcess<S>]) -> LinearProcess<S> {
    items
        .iter()
        .fold(LinearProcess::number(S::one()), |acc, p| compose_par(&acc, p))
}

/// Inverse of a permutation process.
pub fn inverse_permutation<S: Scalar>(p: &LinearProcess<S>) -> Option<LinearProcess<S>> {
    let perm = p.permutation_map()?;
    LinearProcess::permutation(p.outputs().clone(), &invert_permutation(perm)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemType;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn bit() -> Signature {
        Signature::new(vec![SystemType::classical(2).unwrap()])
    }

    #[test]
    fn stochastic_times_state() {
        let f = LinearProcess::new(
            bit(),
            bit(),
            Matrix::from_rows(&[vec![q(1, 2), q(1, 3)], vec![q(1, 2), q(2, 3)]]),
        )
        .unwrap();
        let s = LinearProcess::state(bit(), vec![q(1, 2), q(1, 2)]).unwrap();
        let out = compose_seq(&s, &f).unwrap();
        assert_eq!(out.matrix().data(), &[q(5, 12), q(7, 12)]);
    }

    #[test]
    fn kronecker_of_states() {
        let a = LinearProcess::state(bit(), vec![q(1, 2), q(2, 3)]).unwrap();
        let b = LinearProcess::state(bit(), vec![q(1, 2), q(1, 2)]).unwrap();
        let ab = compose_par(&a, &b);
        assert_eq!(ab.matrix().data(), &[q(1, 4), q(1, 4), q(1, 3), q(1, 3)]);
        let one = LinearProcess::number(q(1, 1));
        assert_eq!(compose_par(&a, &one), a);
    }

    #[test]
    fn swap_on_two_three() {
        let sig = Signature::new(vec![SystemType::classical(2).unwrap(), SystemType::classical(3).unwrap()]);
        let sw = LinearProcess::<Rational>::permutation(sig, &[1, 0]).unwrap();
        let m = sw.matrix();
        for i in 0..2 {
            for j in 0..3 {
                // input (i, j) at index 3i + j lands on (j, i) at index 2j + i
                for r in 0..6 {
                    let expect = if r == 2 * j + i { q(1, 1) } else { q(0, 1) };
                    assert_eq!(m[(r, 3 * i + j)], expect);
                }
            }
        }
    }

    #[test]
    fn seq_type_mismatch() {
        let f = LinearProcess::<Rational>::identity(bit());
        let g = LinearProcess::identity(Signature::new(vec![SystemType::classical(3).unwrap()]));
        assert!(matches!(compose_seq(&f, &g), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn mix_checks_probability() {
        let d0 = LinearProcess::state(bit(), vec![q(1, 1), q(0, 1)]).unwrap();
        let d1 = LinearProcess::state(bit(), vec![q(0, 1), q(1, 1)]).unwrap();
        let u = convex_mix(&q(1, 2), &d0, &d1).unwrap();
        assert_eq!(u.matrix().data(), &[q(1, 2), q(1, 2)]);
        assert_eq!(convex_mix(&q(1, 1), &d0, &d1).unwrap(), d0);
        assert!(matches!(convex_mix(&q(3, 2), &d0, &d1), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn symbolic_and_dense_permutations_agree() {
        let sig = Signature::new(vec![
            SystemType::classical(2).unwrap(),
            SystemType::classical(3).unwrap(),
            SystemType::classical(2).unwrap(),
        ]);
        let p = LinearProcess::<Rational>::permutation(sig.clone(), &[2, 0, 1]).unwrap();
        let dense = LinearProcess::new(sig.clone(), p.outputs().clone(), p.matrix().into_owned()).unwrap();
        let f = LinearProcess::new(
            Signature::empty(),
            sig.clone(),
            Matrix::from_fn(12, 1, |r, _| Rational::from_int(r as i64 + 1)),
        )
        .unwrap();
        assert_eq!(compose_seq(&f, &p).unwrap().matrix(), compose_seq(&f, &dense).unwrap().matrix());
        let inv = inverse_permutation(&p).unwrap();
        let round = compose_seq(&p, &inv).unwrap();
        assert_eq!(round.matrix().into_owned(), Matrix::identity(12));
        let e = LinearProcess::new(sig.permuted(&[2, 0, 1]), Signature::empty(), Matrix::from_fn(1, 12, |_, c| Rational::from_int(c as i64))).unwrap();
        let e_dense_first = LinearProcess::new(sig.permuted(&[2, 0, 1]), Signature::empty(), e.matrix().into_owned()).unwrap();
        assert_eq!(compose_seq(&p, &e).unwrap().matrix(), compose_seq(&dense, &e_dense_first).unwrap().matrix());
    }
}
