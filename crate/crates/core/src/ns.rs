//! Multipartite channels and the non-signalling test.
//!
//! A channel with wings `(i, i′)` is non-signalling when, for every
//! nonempty proper subset `K` of wings, discarding the `K` outputs leaves
//! a process that ignores the `K` inputs: it factors as
//! `discard_K ⊗ Λ_K̄` after bringing `K` to the front.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::process::{compose_par, compose_seq, inverse_permutation, LinearProcess};
use crate::scalar::{negligible, Scalar};
use crate::system::{Signature, SystemType};
use crate::theory::Theory;

/// One party's input and output wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Wing {
    pub input: SystemType,
    pub output: SystemType,
}

impl Wing {
    pub fn new(input: SystemType, output: SystemType) -> Self {
        Wing { input, output }
    }
}

impl fmt::Display for Wing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.input, self.output)
    }
}

/// A valid channel `⊗ i → ⊗ i′` with one wire per wing.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartiteChannel<S> {
    wings: Vec<Wing>,
    body: LinearProcess<S>,
    theory: Theory,
}

impl<S: Scalar> MultipartiteChannel<S> {
    /// Rejects bodies that do not match the wings or fail the theory's
    /// channel validity.
    pub fn new(theory: Theory, wings: Vec<Wing>, body: LinearProcess<S>, tol: f64) -> Result<Self> {
        if wings.is_empty() {
            return Err(Error::InvalidChannel("a channel needs at least one wing".into()));
        }
        let ins = Signature::new(wings.iter().map(|w| w.input).collect());
        let outs = Signature::new(wings.iter().map(|w| w.output).collect());
        if body.inputs() != &ins || body.outputs() != &outs {
            return Err(Error::SignatureMismatch(format!(
                "body is {} -> {}, wings need {} -> {}",
                body.inputs(),
                body.outputs(),
                ins,
                outs
            )));
        }
        if !theory.is_valid_channel(&body, tol)? {
            return Err(Error::InvalidChannel(format!("body is not a valid {theory} channel")));
        }
        Ok(MultipartiteChannel { wings, body, theory })
    }

    /// Wraps a matrix over wings.
    pub fn from_matrix(theory: Theory, wings: Vec<Wing>, matrix: crate::matrix::Matrix<S>, tol: f64) -> Result<Self> {
        let ins = Signature::new(wings.iter().map(|w| w.input).collect());
        let outs = Signature::new(wings.iter().map(|w| w.output).collect());
        Self::new(theory, wings, LinearProcess::new(ins, outs, matrix)?, tol)
    }

    pub fn wings(&self) -> &[Wing] {
        &self.wings
    }

    pub fn parties(&self) -> usize {
        self.wings.len()
    }

    pub fn body(&self) -> &LinearProcess<S> {
        &self.body
    }

    pub fn theory(&self) -> Theory {
        self.theory
    }

    pub fn input_signature(&self) -> &Signature {
        self.body.inputs()
    }

    pub fn output_signature(&self) -> &Signature {
        self.body.outputs()
    }
}

/// Permutation taking wire positions `(0..m)` to `(k_1..k_n, k̄_1..k̄_n′)`,
/// with `K̄` in increasing order. Entry `j` is the wire that lands at `j`.
pub fn bipartition_perm(m: usize, subset: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; m];
    for &k in subset {
        if k >= m || seen[k] {
            return Err(Error::OutOfRange(format!("subset {subset:?} of {m} wings")));
        }
        seen[k] = true;
    }
    Ok(subset.iter().copied().chain((0..m).filter(|i| !seen[*i])).collect())
}

fn complement(m: usize, subset: &[usize]) -> Vec<usize> {
    (0..m).filter(|i| !subset.contains(i)).collect()
}

/// Contracts the outputs indexed by `subset` with the theory's discard;
/// remaining outputs keep their relative order.
pub fn discard_outputs<S: Scalar>(channel: &MultipartiteChannel<S>, subset: &[usize]) -> Result<LinearProcess<S>> {
    if subset.is_empty() {
        return Err(Error::OutOfRange("discarded subset must be nonempty".into()));
    }
    let m = channel.parties();
    let perm = bipartition_perm(m, subset)?;
    let outs = channel.output_signature();
    let p = LinearProcess::permutation(outs.clone(), &perm)?;
    let k_sig = Signature::new(subset.iter().map(|&k| outs.wires()[k]).collect());
    let rest_sig = Signature::new(complement(m, subset).iter().map(|&k| outs.wires()[k]).collect());
    let tail = compose_par(&channel.theory().discard_signature(&k_sig)?, &LinearProcess::identity(rest_sig));
    compose_seq(&compose_seq(channel.body(), &p)?, &tail)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetEntry<S> {
    /// Zero-based wing indices whose outputs were discarded.
    pub subset: Vec<usize>,
    pub residual: S,
    /// The candidate `Λ_K̄`.
    pub marginal: LinearProcess<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NsReport<S> {
    pub entries: Vec<SubsetEntry<S>>,
    pub verdict: bool,
    pub tol: f64,
}

impl<S: Scalar> NsReport<S> {
    pub fn max_residual(&self) -> S {
        self.entries
            .iter()
            .map(|e| e.residual.clone())
            .fold(S::zero(), |m, r| if r > m { r } else { m })
    }

    pub fn entry(&self, subset: &[usize]) -> Option<&SubsetEntry<S>> {
        self.entries.iter().find(|e| e.subset == subset)
    }
}

/// All nonempty proper subsets of `0..m`, by size then lexicographically.
pub fn proper_subsets(m: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (1u64..(1 << m) - 1)
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all
}

/// Residual and candidate marginal for one subset.
pub fn check_subset<S: Scalar>(channel: &MultipartiteChannel<S>, subset: &[usize]) -> Result<SubsetEntry<S>> {
    let m = channel.parties();
    let theory = channel.theory();
    let marginal_full = discard_outputs(channel, subset)?;
    let ins = channel.input_signature();
    let perm = bipartition_perm(m, subset)?;
    let p_in = LinearProcess::permutation(ins.clone(), &perm)?;
    let p_back = inverse_permutation(&p_in).expect("symbolic permutation");
    let k_in = Signature::new(subset.iter().map(|&k| ins.wires()[k]).collect());
    let rest_in = Signature::new(complement(m, subset).iter().map(|&k| ins.wires()[k]).collect());
    // plug reference states into the K inputs
    let plug = compose_par(&theory.reference_state_signature(&k_in)?, &LinearProcess::identity(rest_in));
    let candidate = compose_seq(&compose_seq(&plug, &p_back)?, &marginal_full)?;
    let factored = compose_seq(&p_in, &compose_par(&theory.discard_signature(&k_in)?, &candidate))?;
    let residual = marginal_full.distance(&factored)?;
    Ok(SubsetEntry { subset: subset.to_vec(), residual, marginal: candidate })
}

/// Checks all `2^m − 2` nonempty proper subsets.
pub fn check_nonsignalling<S: Scalar>(channel: &MultipartiteChannel<S>, tol: f64) -> NsReport<S> {
    check_nonsignalling_with(channel, tol, Execution::default())
}

pub fn check_nonsignalling_with<S: Scalar>(channel: &MultipartiteChannel<S>, tol: f64, exec: Execution) -> NsReport<S> {
    let subsets = proper_subsets(channel.parties());
    let entries: Vec<SubsetEntry<S>> = exec
        .map(&subsets, |k| check_subset(channel, k))
        .into_iter()
        .collect::<Result<_>>()
        .expect("subsets and signatures are consistent by construction");
    let verdict = entries.iter().all(|e| negligible(&e.residual, tol));
    NsReport { entries, verdict, tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::scalar::Rational;

    fn bit() -> SystemType {
        SystemType::classical(2).unwrap()
    }

    fn one_based(v: Vec<usize>) -> Vec<usize> {
        v.into_iter().map(|i| i + 1).collect()
    }

    #[test]
    fn bipartition_examples() {
        assert_eq!(one_based(bipartition_perm(3, &[1, 2]).unwrap()), vec![2, 3, 1]);
        assert_eq!(one_based(bipartition_perm(4, &[0, 3]).unwrap()), vec![1, 4, 2, 3]);
        assert_eq!(bipartition_perm(3, &[0, 1, 2]).unwrap(), vec![0, 1, 2]);
        assert!(bipartition_perm(3, &[3]).is_err());
        assert!(bipartition_perm(3, &[1, 1]).is_err());
    }

    #[test]
    fn subset_enumeration() {
        let s = proper_subsets(3);
        assert_eq!(s.len(), 6);
        assert_eq!(s[0], vec![0]);
        assert_eq!(s[5], vec![1, 2]);
    }

    fn swap_channel() -> MultipartiteChannel<Rational> {
        let wings = vec![Wing::new(bit(), bit()), Wing::new(bit(), bit())];
        let sw = LinearProcess::<Rational>::permutation(Signature::new(vec![bit(), bit()]), &[1, 0]).unwrap();
        MultipartiteChannel::from_matrix(Theory::Stoch, wings, sw.matrix().into_owned(), 0.0).unwrap()
    }

    #[test]
    fn swap_signals() {
        let r = check_nonsignalling(&swap_channel(), 0.0);
        assert!(!r.verdict);
        assert_eq!(r.max_residual(), Rational::from_ratio(1, 2));
        let trits = crate::samples::swap_channel::<Rational>(3).unwrap();
        let r3 = check_nonsignalling(&trits, 0.0);
        assert_eq!(r3.max_residual(), Rational::from_ratio(2, 3));
    }

    #[test]
    fn discarding_everything_gives_input_discard() {
        let ch = swap_channel();
        let d = discard_outputs(&ch, &[0, 1]).unwrap();
        assert_eq!(d.matrix().data(), &vec![Rational::from_int(1); 4][..]);
    }

    #[test]
    fn construction_rejects_invalid_bodies() {
        let wings = vec![Wing::new(bit(), bit())];
        let bad = Matrix::from_rows(&[vec![Rational::from_int(1), Rational::from_int(1)], vec![Rational::from_int(1), Rational::from_int(0)]]);
        assert!(matches!(
            MultipartiteChannel::from_matrix(Theory::Stoch, wings, bad, 0.0),
            Err(Error::InvalidChannel(_))
        ));
    }
}
