//! Generated states and effects of a system type, each kept together with
//! the diagram that produces it.

use crate::completion::GeneratedTheory;
use crate::diagram::DiagramTerm;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::system::{decode_index, SystemType};

#[derive(Debug, Clone)]
pub struct Spanned<S> {
    pub vector: Vec<S>,
    pub term: DiagramTerm,
}

/// Greedy maximal-rank subfamily, in input order.
pub(crate) fn max_rank_subset<S: Scalar>(items: Vec<Spanned<S>>, tol: f64) -> Vec<Spanned<S>> {
    let mut kept: Vec<Spanned<S>> = Vec::new();
    let mut rows: Vec<Vec<S>> = Vec::new();
    for it in items {
        rows.push(it.vector.clone());
        if Matrix::from_rows(&rows).rank(tol) == rows.len() {
            kept.push(it);
        } else {
            rows.pop();
        }
    }
    kept
}

impl<S: Scalar> GeneratedTheory<S> {
    fn rank_tol(&self) -> f64 {
        S::default_tol()
    }

    /// Basis of the generated states of `ty` at the configured depth.
    pub fn state_span(&mut self, ty: &SystemType) -> Result<Vec<Spanned<S>>> {
        self.state_span_at(ty, self.tester_depth())
    }

    pub fn effect_span(&mut self, ty: &SystemType) -> Result<Vec<Spanned<S>>> {
        self.effect_span_at(ty, self.tester_depth())
    }

    pub fn state_span_at(&mut self, ty: &SystemType, depth: usize) -> Result<Vec<Spanned<S>>> {
        let all = self.generated_states(ty, depth)?;
        Ok(max_rank_subset(all, self.rank_tol()))
    }

    pub fn effect_span_at(&mut self, ty: &SystemType, depth: usize) -> Result<Vec<Spanned<S>>> {
        let all = self.generated_effects(ty, depth)?;
        Ok(max_rank_subset(all, self.rank_tol()))
    }

    fn spanned(&self, term: DiagramTerm) -> Result<Spanned<S>> {
        let vector = self.eval(&term)?.into_matrix().into_data();
        Ok(Spanned { vector, term })
    }

    fn frame_leaves(&mut self, ty: &SystemType, states: bool) -> Result<Vec<DiagramTerm>> {
        self.ensure_base_type(*ty)?;
        let names = if states { self.frame_state_names(ty) } else { self.frame_effect_names(ty) };
        names.iter().map(|n| self.leaf(n)).collect()
    }

    /// Base types: the frame effects. Extension type `A_i`: a frame effect
    /// after `η_i` fed a frame state on its base input.
    pub fn generated_effects(&mut self, ty: &SystemType, _depth: usize) -> Result<Vec<Spanned<S>>> {
        if !ty.is_extension() {
            let leaves = self.frame_leaves(ty, false)?;
            return leaves.into_iter().map(|t| self.spanned(t)).collect();
        }
        let (id, wing) = self.owner(ty)?;
        let w = self.registration(id)?.channel.wings()[wing];
        let states = self.frame_leaves(&w.input, true)?;
        let effects = self.frame_leaves(&w.output, false)?;
        let id_a = self.identity(*ty)?;
        let eta = self.leaf(&format!("eta_{id}_{}", wing + 1))?;
        let mut out = Vec::with_capacity(states.len() * effects.len());
        for s in &states {
            let fed = DiagramTerm::seq(DiagramTerm::par(s.clone(), id_a.clone()), eta.clone())?;
            for e in &effects {
                out.push(self.spanned(DiagramTerm::seq(fed.clone(), e.clone())?)?);
            }
        }
        Ok(out)
    }

    /// Base types: the frame states. Extension type `A_i`: `ξ` with every
    /// other leg closed by a generated effect. From depth 2 on, pairs of
    /// other legs may also be closed jointly by chaining `η_j` into `η_k`.
    pub fn generated_states(&mut self, ty: &SystemType, depth: usize) -> Result<Vec<Spanned<S>>> {
        if !ty.is_extension() {
            let leaves = self.frame_leaves(ty, true)?;
            return leaves.into_iter().map(|t| self.spanned(t)).collect();
        }
        let (id, wing) = self.owner(ty)?;
        let reg = self.registration(id)?;
        let anc = reg.realization.ancilla_types();
        let wings = reg.channel.wings().to_vec();
        let m = anc.len();
        let xi = self.leaf(&format!("xi_{id}"))?;
        let mut closers: Vec<Vec<DiagramTerm>> = Vec::with_capacity(m);
        for (j, t) in anc.iter().enumerate() {
            if j == wing {
                closers.push(vec![self.identity(*t)?]);
            } else {
                closers.push(self.effect_span_at(t, 1)?.into_iter().map(|s| s.term).collect());
            }
        }
        let mut out = Vec::new();
        for legs in cartesian(&closers) {
            out.push(self.spanned(DiagramTerm::seq(xi.clone(), DiagramTerm::par_all(legs)?)?)?);
        }
        if depth >= 2 && m >= 3 {
            for j in (0..m).filter(|&j| j != wing) {
                for k in (0..m).filter(|&k| k != wing && k != j) {
                    if wings[j].output != wings[k].input {
                        continue;
                    }
                    let chains = self.chain_effects(id, j, k)?;
                    let rest: Vec<usize> = (0..m).filter(|&r| r != wing && r != j && r != k).collect();
                    let order: Vec<usize> = [wing, j, k].into_iter().chain(rest.iter().copied()).collect();
                    let perm = self.permutation(&crate::system::Signature::new(anc.clone()), &order)?;
                    let rest_closers: Vec<Vec<DiagramTerm>> = rest.iter().map(|&r| closers[r].clone()).collect();
                    let id_a = self.identity(anc[wing])?;
                    for chain in &chains {
                        for tail in cartesian(&rest_closers) {
                            let mut legs = vec![id_a.clone(), chain.clone()];
                            legs.extend(tail);
                            let t = DiagramTerm::seq_all(vec![xi.clone(), perm.clone(), DiagramTerm::par_all(legs)?])?;
                            out.push(self.spanned(t)?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Effects on `A_j ⊗ A_k` that feed the output of `η_j` into `η_k`.
    fn chain_effects(&mut self, id: u64, j: usize, k: usize) -> Result<Vec<DiagramTerm>> {
        let reg = self.registration(id)?;
        let wj = reg.channel.wings()[j];
        let wk = reg.channel.wings()[k];
        let (aj, ak) = (reg.realization.brands[j].ty, reg.realization.brands[k].ty);
        let states = self.frame_leaves(&wj.input, true)?;
        let effects = self.frame_leaves(&wk.output, false)?;
        let (id_j, id_k) = (self.identity(aj)?, self.identity(ak)?);
        let eta_j = self.leaf(&format!("eta_{id}_{}", j + 1))?;
        let eta_k = self.leaf(&format!("eta_{id}_{}", k + 1))?;
        let mut out = Vec::new();
        for s in &states {
            for e in &effects {
                out.push(DiagramTerm::seq_all(vec![
                    DiagramTerm::par_all(vec![s.clone(), id_j.clone(), id_k.clone()])?,
                    DiagramTerm::par(eta_j.clone(), id_k.clone()),
                    eta_k.clone(),
                    e.clone(),
                ])?);
            }
        }
        Ok(out)
    }
}

/// All ways of choosing one entry from each list.
pub(crate) fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let dims: Vec<usize> = lists.iter().map(Vec::len).collect();
    let total: usize = dims.iter().product();
    (0..total)
        .map(|k| {
            decode_index(k, &dims)
                .into_iter()
                .enumerate()
                .map(|(i, d)| lists[i][d].clone())
                .collect()
        })
        .collect()
}
