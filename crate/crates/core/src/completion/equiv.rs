//! Bounded operational equivalence and class handles.

use std::fmt;

use crate::completion::spans::{cartesian, Spanned};
use crate::completion::GeneratedTheory;
use crate::diagram::{DiagramTerm, Weight};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::process::LinearProcess;
use crate::scalar::{negligible, Scalar};
use crate::decompose::tensor::multi_mode_product;
use crate::system::{decode_index, invert_permutation, Signature};

/// Largest tester table (product testers times joint states) evaluated
/// in one comparison.
pub const MAX_TESTER_ENTRIES: usize = 1 << 22;

/// A concrete tester: `state ; f ; effect` gives `left`, and `right` for
/// the other process. `None` stands for an empty boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness<S> {
    pub state: Option<DiagramTerm>,
    pub effect: Option<DiagramTerm>,
    pub left: S,
    pub right: S,
}

impl<S: Scalar> Witness<S> {
    /// The closed diagram obtained by plugging `f` into the tester.
    pub fn close(&self, f: &DiagramTerm) -> Result<DiagramTerm> {
        let mut t = f.clone();
        if let Some(s) = &self.state {
            t = DiagramTerm::seq(s.clone(), t)?;
        }
        if let Some(e) = &self.effect {
            t = DiagramTerm::seq(t, e.clone())?;
        }
        Ok(t)
    }
}

impl<S: Scalar> fmt::Display for Witness<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.state.as_ref().map_or("·".to_string(), |t| t.to_string());
        let e = self.effect.as_ref().map_or("·".to_string(), |t| t.to_string());
        write!(f, "({s}) ; [·] ; ({e}) gives {} vs {}", self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence<S> {
    /// Conclusively different.
    Distinguished(Box<Witness<S>>),
    /// No tester up to this depth tells the two apart.
    EquivalentUpToDepth(usize),
}

impl<S> Equivalence<S> {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::EquivalentUpToDepth(_))
    }
}

/// Joint input states: a vector on the whole input space and its diagram.
type Joint<S> = Vec<(Vec<S>, DiagramTerm)>;

fn kron_all<S: Scalar>(parts: &[&[S]]) -> Vec<S> {
    parts.iter().fold(vec![S::one()], |acc, p| {
        Matrix::column_vector(acc).kron(&Matrix::column_vector(p.to_vec())).into_data()
    })
}

fn argmax_abs<S: Scalar>(v: &[S]) -> Option<(S, usize)> {
    let mut best: Option<(S, usize)> = None;
    for (k, x) in v.iter().enumerate() {
        let a = x.abs();
        if best.as_ref().is_none_or(|(b, _)| a > *b) {
            best = Some((a, k));
        }
    }
    best
}

fn span_matrix<S: Scalar>(span: &[Spanned<S>]) -> Matrix<S> {
    Matrix::from_rows(&span.iter().map(|s| s.vector.clone()).collect::<Vec<_>>())
}

enum Probe {
    Product(Vec<usize>),
    Joint(usize, Vec<usize>),
}

impl<S: Scalar> GeneratedTheory<S> {
    /// From depth 2 on: states drawn jointly from one `ξ` across several of
    /// its legs, the remaining input wires fed product states.
    fn joint_family(&mut self, sig: &Signature, depth: usize, per_wire: &[Vec<Spanned<S>>]) -> Result<Joint<S>> {
        let mut fam = Vec::new();
        if depth < 2 {
            return Ok(fam);
        }
        // group extension wires by owning channel; distinct legs only
        let mut groups: std::collections::BTreeMap<u64, Vec<(usize, usize)>> = Default::default();
        for (p, t) in sig.wires().iter().enumerate() {
            if t.is_extension() {
                let (id, leg) = self.owner(t)?;
                let g = groups.entry(id).or_default();
                if !g.iter().any(|&(_, l)| l == leg) {
                    g.push((p, leg));
                }
            }
        }
        for (id, group) in groups {
            if group.len() >= 2 {
                fam.extend(self.joint_states(sig, id, &group, per_wire)?);
            }
        }
        Ok(fam)
    }

    fn joint_states(
        &mut self,
        sig: &Signature,
        id: u64,
        group: &[(usize, usize)],
        per_wire: &[Vec<Spanned<S>>],
    ) -> Result<Joint<S>> {
        let anc = self.registration(id)?.realization.ancilla_types();
        let legs: Vec<usize> = group.iter().map(|&(_, l)| l).collect();
        let others: Vec<usize> = (0..anc.len()).filter(|l| !legs.contains(l)).collect();
        let order: Vec<usize> = legs.iter().chain(&others).copied().collect();
        let perm = self.permutation(&Signature::new(anc.clone()), &order)?;
        let xi = self.leaf(&format!("xi_{id}"))?;
        let mut closers: Vec<Vec<DiagramTerm>> = Vec::new();
        for &l in &legs {
            closers.push(vec![self.identity(anc[l])?]);
        }
        for &o in &others {
            closers.push(self.effect_span_at(&anc[o], 1)?.into_iter().map(|s| s.term).collect());
        }
        let positions: Vec<usize> = group.iter().map(|&(p, _)| p).collect();
        let rest: Vec<usize> = (0..sig.len()).filter(|p| !positions.contains(p)).collect();
        let current: Vec<usize> = positions.iter().chain(&rest).copied().collect();
        let restore = self.permutation(&sig.permuted(&current), &invert_permutation(&current))?;
        let rest_spans: Vec<Vec<Spanned<S>>> = rest.iter().map(|&p| per_wire[p].clone()).collect();
        let count = cartesian(&closers).len() * rest_spans.iter().map(Vec::len).product::<usize>();
        if count * sig.total_dim() > MAX_TESTER_ENTRIES {
            return Err(Error::ProblemTooLarge(count));
        }
        let mut fam = Vec::new();
        for close in cartesian(&closers) {
            let joint = DiagramTerm::seq_all(vec![xi.clone(), perm.clone(), DiagramTerm::par_all(close)?])?;
            for tail in cartesian(&rest_spans) {
                let mut parts = vec![joint.clone()];
                parts.extend(tail.into_iter().map(|s| s.term));
                let t = DiagramTerm::seq(DiagramTerm::par_all(parts)?, restore.clone())?;
                let v = self.eval(&t)?.into_matrix().into_data();
                fam.push((v, t));
            }
        }
        Ok(fam)
    }

    /// Searches testers up to the configured depth for one that separates
    /// `f` and `g`.
    pub fn op_equiv(&mut self, f: &DiagramTerm, g: &DiagramTerm) -> Result<Equivalence<S>> {
        self.op_equiv_at(f, g, self.tester_depth())
    }

    pub fn op_equiv_at(&mut self, f: &DiagramTerm, g: &DiagramTerm, depth: usize) -> Result<Equivalence<S>> {
        if f.inputs() != g.inputs() || f.outputs() != g.outputs() {
            return Err(Error::SignatureMismatch(format!(
                "{} -> {} vs {} -> {}",
                f.inputs(),
                f.outputs(),
                g.inputs(),
                g.outputs()
            )));
        }
        let pf = self.eval(f)?;
        let pg = self.eval(g)?;
        self.compare_processes(&pf, &pg, depth)
    }

    /// Every product tester (per-wire generated states on the inputs,
    /// per-wire generated effects on the outputs) is applied at once by
    /// contracting the difference of the two matrices axis by axis; joint
    /// states are applied one at a time. The largest response becomes the
    /// witness.
    pub(crate) fn compare_processes(
        &mut self,
        pf: &LinearProcess<S>,
        pg: &LinearProcess<S>,
        depth: usize,
    ) -> Result<Equivalence<S>> {
        let (ins, outs) = (pf.inputs().clone(), pf.outputs().clone());
        let in_spans = ins.wires().iter().map(|t| self.state_span_at(t, depth)).collect::<Result<Vec<_>>>()?;
        let out_spans = outs.wires().iter().map(|t| self.effect_span_at(t, depth)).collect::<Result<Vec<_>>>()?;
        let joints = self.joint_family(&ins, depth, &in_spans)?;
        let out_sizes: Vec<usize> = out_spans.iter().map(Vec::len).collect();
        let in_sizes: Vec<usize> = in_spans.iter().map(Vec::len).collect();
        let table = out_sizes.iter().chain(&in_sizes).product::<usize>() + joints.len() * out_sizes.iter().product::<usize>();
        if table > MAX_TESTER_ENTRIES {
            return Err(Error::ProblemTooLarge(table));
        }
        let (mf, mg) = (pf.matrix(), pg.matrix());
        let diff = mf.sub(&mg);
        let out_mats: Vec<Matrix<S>> = out_spans.iter().map(|s| span_matrix(s)).collect();
        let mut mats = out_mats.clone();
        mats.extend(in_spans.iter().map(|s| span_matrix(s)));
        let dims: Vec<usize> = outs.dims().into_iter().chain(ins.dims()).collect();
        let response = multi_mode_product(diff.data(), &dims, &mats, self.exec);
        let mut best = argmax_abs(&response).map(|(v, k)| (v, Probe::Product(decode_index(k, &[out_sizes.clone(), in_sizes.clone()].concat()))));
        for (j, (state, _)) in joints.iter().enumerate() {
            let image = diff.apply(state);
            let r = multi_mode_product(&image, &outs.dims(), &out_mats, self.exec);
            if let Some((v, k)) = argmax_abs(&r) {
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, Probe::Joint(j, decode_index(k, &out_sizes))));
                }
            }
        }
        let Some((v, probe)) = best else {
            return Ok(Equivalence::EquivalentUpToDepth(depth));
        };
        if negligible(&v, self.tol()) {
            return Ok(Equivalence::EquivalentUpToDepth(depth));
        }
        let (out_choice, state, state_term) = match probe {
            Probe::Product(digits) => {
                let (o, i) = digits.split_at(out_sizes.len());
                let chosen: Vec<&Spanned<S>> = i.iter().enumerate().map(|(w, &k)| &in_spans[w][k]).collect();
                let vec = kron_all(&chosen.iter().map(|s| s.vector.as_slice()).collect::<Vec<_>>());
                let term = if chosen.is_empty() {
                    None
                } else {
                    Some(DiagramTerm::par_all(chosen.iter().map(|s| s.term.clone()).collect())?)
                };
                (o.to_vec(), vec, term)
            }
            Probe::Joint(j, o) => (o, joints[j].0.clone(), Some(joints[j].1.clone())),
        };
        let chosen: Vec<&Spanned<S>> = out_choice.iter().enumerate().map(|(w, &k)| &out_spans[w][k]).collect();
        let effect = kron_all(&chosen.iter().map(|s| s.vector.as_slice()).collect::<Vec<_>>());
        let effect_term = if chosen.is_empty() {
            None
        } else {
            Some(DiagramTerm::par_all(chosen.iter().map(|s| s.term.clone()).collect())?)
        };
        Ok(Equivalence::Distinguished(Box::new(Witness {
            state: state_term,
            effect: effect_term,
            left: dot(&effect, &mf.apply(&state)),
            right: dot(&effect, &mg.apply(&state)),
        })))
    }

    pub fn class_of(&self, term: DiagramTerm) -> Result<EquivClassHandle<S>> {
        let process = self.eval(&term)?;
        Ok(EquivClassHandle { term, process })
    }

    pub fn same_class(&mut self, a: &EquivClassHandle<S>, b: &EquivClassHandle<S>) -> Result<Equivalence<S>> {
        if a.term.inputs() != b.term.inputs() || a.term.outputs() != b.term.outputs() {
            return Err(Error::SignatureMismatch(format!("{} vs {}", a.term, b.term)));
        }
        let depth = self.tester_depth();
        self.compare_processes(&a.process, &b.process, depth)
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// A representative of an operational equivalence class together with its
/// evaluated process. Composition acts on representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivClassHandle<S> {
    pub term: DiagramTerm,
    pub process: LinearProcess<S>,
}

impl<S: Scalar> EquivClassHandle<S> {
    pub fn signature(&self) -> (&Signature, &Signature) {
        (self.term.inputs(), self.term.outputs())
    }

    pub fn seq(&self, next: &Self) -> Result<Self> {
        Ok(EquivClassHandle {
            term: DiagramTerm::seq(self.term.clone(), next.term.clone())?,
            process: crate::process::compose_seq(&self.process, &next.process)?,
        })
    }

    pub fn par(&self, other: &Self) -> Self {
        EquivClassHandle {
            term: DiagramTerm::par(self.term.clone(), other.term.clone()),
            process: crate::process::compose_par(&self.process, &other.process),
        }
    }

    pub fn mix(&self, weight: Weight, other: &Self) -> Result<Self> {
        let p = S::from_rational(weight.value());
        Ok(EquivClassHandle {
            process: crate::process::convex_mix(&p, &self.process, &other.process)?,
            term: DiagramTerm::mix(weight, self.term.clone(), other.term.clone())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::pr_box;
    use crate::scalar::Rational;
    use crate::system::SystemType;
    use crate::theory::Theory;

    fn pr() -> (GeneratedTheory<Rational>, u64) {
        let mut gt = GeneratedTheory::new(Theory::Stoch, 0.0);
        let id = gt.register(pr_box().unwrap()).unwrap();
        (gt, id)
    }

    #[test]
    fn a_term_is_equivalent_to_itself() {
        let (mut gt, id) = pr();
        let t = gt.recomposition_term(id).unwrap();
        assert_eq!(gt.op_equiv(&t, &t).unwrap(), Equivalence::EquivalentUpToDepth(2));
    }

    #[test]
    fn different_base_processes_are_distinguished() {
        let (mut gt, _) = pr();
        let bit = Signature::new(vec![SystemType::classical(2).unwrap()]);
        let q = Rational::from_ratio;
        let a = LinearProcess::new(bit.clone(), bit.clone(), Matrix::from_rows(&[vec![q(1, 2), q(0, 1)], vec![q(1, 2), q(1, 1)]])).unwrap();
        let b = LinearProcess::identity(bit);
        let ta = gt.bind_base("a", a).unwrap();
        let tb = gt.bind_base("b", b).unwrap();
        let Equivalence::Distinguished(w) = gt.op_equiv(&ta, &tb).unwrap() else { panic!("not distinguished") };
        let left = gt.eval(&w.close(&ta).unwrap()).unwrap().scalar_value().unwrap();
        let right = gt.eval(&w.close(&tb).unwrap()).unwrap().scalar_value().unwrap();
        assert_eq!((left, right), (w.left.clone(), w.right.clone()));
        assert_ne!(w.left, w.right);
    }

    #[test]
    fn perturbation_outside_the_effect_span_is_invisible() {
        let (mut gt, id) = pr();
        let r = gt.registration(id).unwrap().realization.clone();
        let mut pairing = Matrix::from_vec(1, 1, vec![Rational::from_int(1)]);
        for t in r.ancilla_types() {
            let rows: Vec<Vec<Rational>> = gt.effect_span_at(&t, 1).unwrap().into_iter().map(|s| s.vector).collect();
            pairing = pairing.kron(&Matrix::from_rows(&rows));
        }
        let kernel = pairing.nullspace(0.0);
        assert!(!kernel.is_empty());
        let v: Vec<Rational> = r.xi.matrix().data().iter().zip(&kernel[0]).map(|(a, b)| a + b).collect();
        let p = LinearProcess::state(r.xi.outputs().clone(), v).unwrap();
        let xi = gt.leaf(&format!("xi_{id}")).unwrap();
        let rep = gt.admit("xi_alt", p, &xi).unwrap();
        assert!(gt.op_equiv_at(&rep, &xi, 1).unwrap().is_equivalent());
        // but the two are different vectors
        assert_ne!(gt.eval(&rep).unwrap(), gt.eval(&xi).unwrap());
    }

    #[test]
    fn handles_compose() {
        let (mut gt, id) = pr();
        let t = gt.recomposition_term(id).unwrap();
        let a = gt.class_of(t.clone()).unwrap();
        let b = a.par(&a);
        let w = Weight::new(Rational::from_ratio(1, 3)).unwrap();
        let c = a.mix(w, &a).unwrap();
        assert!(gt.same_class(&a, &c).unwrap().is_equivalent());
        assert_eq!(b.process, gt.eval(&DiagramTerm::par(t.clone(), t)).unwrap());
    }
}
