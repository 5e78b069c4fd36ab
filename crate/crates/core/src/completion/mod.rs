//! The finitely generated fragment of the common-cause completion: base
//! processes plus, for every registered non-signalling channel, its shared
//! quasi-state `ξ` and local channels `η_i` on branded extension types.
//!
//! Processes on extension types are compared operationally: two processes
//! are identified when no tester assembled from generated states and
//! effects (up to a depth bound) tells them apart.

mod equiv;
mod spans;
pub mod suite;

use std::collections::BTreeMap;

use crate::decompose::{
    build_realization_for, decompose_with, next_channel_id, verify_realization, CommonCauseRealization, DecomposeMode,
    QuasiMixture,
};
use crate::diagram::{eval_diagram, Bindings, DiagramTerm, Node};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ns::{check_nonsignalling_with, MultipartiteChannel};
use crate::process::{compose_par, compose_seq, LinearProcess};
use crate::scalar::{negligible, Scalar};
use crate::system::{Signature, SystemType};
use crate::theory::Theory;

pub use equiv::{EquivClassHandle, Equivalence, Witness};
pub use spans::Spanned;

/// Default bound on tester construction depth.
pub const DEFAULT_TESTER_DEPTH: usize = 2;

/// How a generator entered the theory; decides whether it may touch
/// extension wires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorKind {
    /// A valid process of the base theory.
    Base { deterministic: bool },
    /// Shared quasi-state of a registered channel.
    Xi(u64),
    /// Local channel of one wing (zero-based) of a registered channel.
    Eta(u64, usize),
    /// Identities and wire permutations.
    Structural,
    /// Discarding effect of an extension type.
    Discard,
    /// Representative admitted after an equivalence check against a
    /// generated term.
    Admitted,
}

impl GeneratorKind {
    fn may_touch_extension(&self) -> bool {
        !matches!(self, GeneratorKind::Base { .. })
    }

    fn deterministic(&self) -> bool {
        match self {
            GeneratorKind::Base { deterministic } => *deterministic,
            _ => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Registered<S> {
    pub channel: MultipartiteChannel<S>,
    pub quasi: QuasiMixture<S>,
    pub realization: CommonCauseRealization<S>,
    pub residual: S,
}

/// Result of [`GeneratedTheory::discard_ext`].
#[derive(Debug, Clone)]
pub struct ExtensionDiscard<S> {
    pub effect: LinearProcess<S>,
    /// Largest deviation over the input's state frame from the value at
    /// the reference state.
    pub deviation: S,
}

#[derive(Debug, Clone)]
pub struct GeneratedTheory<S> {
    base: Theory,
    tol: f64,
    tester_depth: usize,
    mode: DecomposeMode,
    exec: Execution,
    registered: BTreeMap<u64, Registered<S>>,
    kinds: BTreeMap<String, GeneratorKind>,
    bindings: Bindings<S>,
}

impl<S: Scalar> GeneratedTheory<S> {
    pub fn new(base: Theory, tol: f64) -> Self {
        GeneratedTheory {
            base,
            tol,
            tester_depth: DEFAULT_TESTER_DEPTH,
            mode: DecomposeMode::MinNorm,
            exec: Execution::default(),
            registered: BTreeMap::new(),
            kinds: BTreeMap::new(),
            bindings: Bindings::new(),
        }
    }

    pub fn with_tester_depth(mut self, depth: usize) -> Self {
        self.tester_depth = depth.max(1);
        self
    }

    pub fn with_mode(mut self, mode: DecomposeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn base(&self) -> Theory {
        self.base
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn tester_depth(&self) -> usize {
        self.tester_depth
    }

    pub fn bindings(&self) -> &Bindings<S> {
        &self.bindings
    }

    pub fn generator_kind(&self, name: &str) -> Option<&GeneratorKind> {
        self.kinds.get(name)
    }

    pub fn registered(&self) -> impl Iterator<Item = (u64, &Registered<S>)> {
        self.registered.iter().map(|(k, v)| (*k, v))
    }

    pub fn registration(&self, id: u64) -> Result<&Registered<S>> {
        self.registered
            .get(&id)
            .ok_or_else(|| Error::OutOfRange(format!("no registered channel {id}")))
    }

    /// Every extension type currently known.
    pub fn extension_types(&self) -> Vec<SystemType> {
        self.registered.values().flat_map(|r| r.realization.ancilla_types()).collect()
    }

    /// Registration and wing that own an extension type.
    pub fn owner(&self, ty: &SystemType) -> Result<(u64, usize)> {
        let b = ty.brand().ok_or_else(|| Error::WrongKind(format!("{ty} is not an extension type")))?;
        let reg = self.registered.get(&b.channel).ok_or_else(|| Error::UnknownType(ty.to_string()))?;
        if reg.realization.brands.get(b.wing).map(|tb| tb.ty) != Some(*ty) {
            return Err(Error::UnknownType(ty.to_string()));
        }
        Ok((b.channel, b.wing))
    }

    fn install(&mut self, name: String, p: LinearProcess<S>, kind: GeneratorKind) {
        self.bindings.insert(name.clone(), p);
        self.kinds.insert(name, kind);
    }

    /// Binds a valid base-theory process under `name`.
    pub fn bind_base(&mut self, name: &str, p: LinearProcess<S>) -> Result<DiagramTerm> {
        if p.inputs().has_extension() || p.outputs().has_extension() {
            return Err(Error::BrandViolation(format!(
                "`{name}` touches an extension wire but is not a registered generator"
            )));
        }
        if !self.base.is_valid_process(&p, self.tol)? {
            return Err(Error::InvalidChannel(format!("`{name}` is not a valid {} process", self.base)));
        }
        if let Some(existing) = self.kinds.get(name) {
            if !matches!(existing, GeneratorKind::Base { .. }) {
                return Err(Error::BrandViolation(format!("`{name}` is reserved")));
            }
        }
        let deterministic = self.base.is_valid_channel(&p, self.tol)?;
        self.install(name.to_string(), p, GeneratorKind::Base { deterministic });
        self.leaf(name)
    }

    pub fn leaf(&self, name: &str) -> Result<DiagramTerm> {
        DiagramTerm::leaf(name, &self.bindings)
    }

    /// Identity on one wire, installed on first use.
    pub fn identity(&mut self, ty: SystemType) -> Result<DiagramTerm> {
        let name = format!("id_{}", ty.tag());
        if !self.bindings.contains_key(&name) {
            self.check_known(&ty)?;
            let p = LinearProcess::identity(Signature::new(vec![ty]));
            self.install(name.clone(), p, GeneratorKind::Structural);
        }
        self.leaf(&name)
    }

    /// Wire permutation (output `j` carries input `perm[j]`), installed on
    /// first use.
    pub fn permutation(&mut self, sig: &Signature, perm: &[usize]) -> Result<DiagramTerm> {
        let tags: Vec<String> = sig.wires().iter().map(SystemType::tag).collect();
        let digits: Vec<String> = perm.iter().map(usize::to_string).collect();
        let name = format!("perm_{}__{}", tags.join("_"), digits.join("_"));
        if !self.bindings.contains_key(&name) {
            for t in sig.wires() {
                self.check_known(t)?;
            }
            let p = LinearProcess::permutation(sig.clone(), perm)?;
            self.install(name.clone(), p, GeneratorKind::Structural);
        }
        self.leaf(&name)
    }

    fn check_known(&self, ty: &SystemType) -> Result<()> {
        if ty.is_extension() {
            self.owner(ty).map(|_| ())
        } else if self.base.contains(ty) {
            Ok(())
        } else {
            Err(Error::UnknownType(format!("{ty} in {}", self.base)))
        }
    }

    /// Installs frame states `st_<tag>_<k>`, frame effects `ef_<tag>_<k>`,
    /// the discard `disc_<tag>` and the identity of a base type.
    pub fn ensure_base_type(&mut self, ty: SystemType) -> Result<()> {
        let tag = ty.tag();
        if self.bindings.contains_key(&format!("disc_{tag}")) {
            return Ok(());
        }
        let frames = self.base.frames::<S>(&ty)?;
        for (k, s) in frames.states.into_iter().enumerate() {
            self.install(format!("st_{tag}_{k}"), s, GeneratorKind::Base { deterministic: true });
        }
        for (k, e) in frames.effects.into_iter().enumerate() {
            self.install(format!("ef_{tag}_{k}"), e, GeneratorKind::Base { deterministic: false });
        }
        let disc = self.base.discard::<S>(&ty)?;
        self.install(format!("disc_{tag}"), disc, GeneratorKind::Base { deterministic: true });
        self.identity(ty)?;
        Ok(())
    }

    pub(crate) fn frame_state_names(&self, ty: &SystemType) -> Vec<String> {
        let prefix = format!("st_{}_", ty.tag());
        self.numbered(&prefix)
    }

    pub(crate) fn frame_effect_names(&self, ty: &SystemType) -> Vec<String> {
        let prefix = format!("ef_{}_", ty.tag());
        self.numbered(&prefix)
    }

    fn numbered(&self, prefix: &str) -> Vec<String> {
        let mut v: Vec<(usize, String)> = self
            .bindings
            .keys()
            .filter_map(|k| k.strip_prefix(prefix).and_then(|n| n.parse().ok()).map(|n| (n, k.clone())))
            .collect();
        v.sort();
        v.into_iter().map(|(_, k)| k).collect()
    }

    /// Decomposes, realizes and verifies a non-signalling channel, then
    /// installs `xi_<id>` and `eta_<id>_<i>` (wings numbered from 1).
    pub fn register(&mut self, channel: MultipartiteChannel<S>) -> Result<u64> {
        if channel.theory() != self.base {
            return Err(Error::WrongKind(format!(
                "{} channel registered into C[{}]",
                channel.theory(),
                self.base
            )));
        }
        let report = check_nonsignalling_with(&channel, self.tol, self.exec);
        if !report.verdict {
            return Err(Error::NotNonSignalling { residual: report.max_residual().to_string() });
        }
        let quasi = decompose_with(&channel, self.mode, self.tol, self.exec)?;
        let id = next_channel_id();
        let realization = build_realization_for(id, &channel, &quasi, self.tol)?;
        let residual = verify_realization(&channel, &realization)?;
        if !negligible(&residual, self.tol) {
            return Err(Error::ResidualTooLarge { residual: residual.to_string(), tol: self.tol });
        }
        for w in channel.wings() {
            self.ensure_base_type(w.input)?;
            self.ensure_base_type(w.output)?;
        }
        self.install(format!("xi_{id}"), realization.xi.clone(), GeneratorKind::Xi(id));
        for (i, eta) in realization.etas.iter().enumerate() {
            self.install(format!("eta_{id}_{}", i + 1), eta.clone(), GeneratorKind::Eta(id, i));
        }
        let types = realization.ancilla_types();
        self.registered.insert(id, Registered { channel, quasi, realization, residual });
        for ty in types {
            self.identity(ty)?;
            let d = self.discard_ext(&ty)?;
            self.install(format!("disc_{}", ty.tag()), d.effect, GeneratorKind::Discard);
        }
        Ok(id)
    }

    /// Admits `p` as a representative of the class of `like` when no tester
    /// up to the configured depth distinguishes them.
    pub fn admit(&mut self, name: &str, p: LinearProcess<S>, like: &DiagramTerm) -> Result<DiagramTerm> {
        if self.bindings.contains_key(name) {
            return Err(Error::BrandViolation(format!("`{name}` is already bound")));
        }
        let candidate = DiagramTerm::leaf_typed(name, p.inputs().clone(), p.outputs().clone());
        let mut probe = self.clone();
        probe.install(name.to_string(), p.clone(), GeneratorKind::Admitted);
        match probe.op_equiv(&candidate, like)? {
            Equivalence::EquivalentUpToDepth(_) => {
                self.install(name.to_string(), p, GeneratorKind::Admitted);
                Ok(candidate)
            }
            Equivalence::Distinguished(w) => Err(Error::BrandViolation(format!(
                "`{name}` is distinguished from {like}: {w}"
            ))),
        }
    }

    /// Every leaf is bound, and leaves touching extension wires are
    /// registered, structural or admitted generators.
    pub fn check_brands(&self, term: &DiagramTerm) -> Result<()> {
        match term.node() {
            Node::Leaf(name) => {
                let kind = self.kinds.get(name).ok_or_else(|| Error::UnboundGenerator(name.clone()))?;
                let p = &self.bindings[name];
                let touches = p.inputs().has_extension() || p.outputs().has_extension();
                if touches && !kind.may_touch_extension() {
                    return Err(Error::BrandViolation(format!("`{name}` may not touch extension wires")));
                }
                for t in p.inputs().wires().iter().chain(p.outputs().wires()) {
                    if t.is_extension() {
                        self.owner(t)?;
                    }
                }
                Ok(())
            }
            Node::Seq(a, b) | Node::Par(a, b) | Node::Mix(_, a, b) => {
                self.check_brands(a)?;
                self.check_brands(b)
            }
        }
    }

    pub fn eval(&self, term: &DiagramTerm) -> Result<LinearProcess<S>> {
        self.check_brands(term)?;
        eval_diagram(term, &self.bindings)
    }

    fn all_deterministic(&self, term: &DiagramTerm) -> bool {
        term.leaves()
            .iter()
            .all(|n| self.kinds.get(n).is_some_and(GeneratorKind::deterministic))
    }

    /// Evaluates a diagram with base-theory boundary and applies the base
    /// validity predicate: channel validity when every leaf is
    /// deterministic, process validity otherwise.
    pub fn is_in_base(&self, term: &DiagramTerm) -> Result<bool> {
        if let Some(t) = term.inputs().wires().iter().chain(term.outputs().wires()).find(|t| !self.base.contains(t)) {
            return Err(Error::WrongKind(format!("boundary wire {t} is not a {} system", self.base)));
        }
        let p = self.eval(term)?;
        if self.all_deterministic(term) {
            self.base.is_valid_channel(&p, self.tol)
        } else {
            self.base.is_valid_process(&p, self.tol)
        }
    }

    /// `(id_inputs ⊗ ξ) ; interleave ; (η_1 ⊗ … ⊗ η_m)`.
    pub fn recomposition_term(&mut self, id: u64) -> Result<DiagramTerm> {
        let reg = self.registration(id)?;
        let wings = reg.channel.wings().to_vec();
        let anc = reg.realization.ancilla_types();
        let m = wings.len();
        let mut front = Vec::with_capacity(m + 1);
        for w in &wings {
            front.push(self.identity(w.input)?);
        }
        front.push(self.leaf(&format!("xi_{id}"))?);
        let front = DiagramTerm::par_all(front)?;
        let sig = Signature::new(wings.iter().map(|w| w.input).chain(anc.iter().copied()).collect());
        let interleave: Vec<usize> = (0..m).flat_map(|i| [i, m + i]).collect();
        let perm = self.permutation(&sig, &interleave)?;
        let etas = (1..=m).map(|i| self.leaf(&format!("eta_{id}_{i}"))).collect::<Result<Vec<_>>>()?;
        DiagramTerm::seq_all(vec![front, perm, DiagramTerm::par_all(etas)?])
    }

    /// `discard ∘ η_i ∘ (σ′ ⊗ id)` with `σ′` the reference state, and the
    /// largest deviation when `σ′` ranges over the input's state frame.
    pub fn discard_ext(&self, ty: &SystemType) -> Result<ExtensionDiscard<S>> {
        let (id, wing) = self.owner(ty)?;
        let reg = &self.registered[&id];
        let w = reg.channel.wings()[wing];
        let eta = &reg.realization.etas[wing];
        let disc_out = self.base.discard::<S>(&w.output)?;
        let id_a = LinearProcess::identity(Signature::new(vec![*ty]));
        let through = |sigma: &LinearProcess<S>| -> Result<LinearProcess<S>> {
            compose_seq(&compose_seq(&compose_par(sigma, &id_a), eta)?, &disc_out)
        };
        let effect = through(&self.base.reference_state::<S>(&w.input)?)?;
        let mut deviation = S::zero();
        for sigma in self.base.frames::<S>(&w.input)?.states {
            let d = through(&sigma)?.distance(&effect)?;
            if d > deviation {
                deviation = d;
            }
        }
        if !negligible(&deviation, self.tol) {
            return Err(Error::InvalidChannel(format!(
                "discard on {ty} depends on the input state (deviation {deviation})"
            )));
        }
        Ok(ExtensionDiscard { effect, deviation })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::{pr_box, swap_channel};
    use crate::scalar::Rational;

    fn pr_theory() -> (GeneratedTheory<Rational>, u64) {
        let mut gt = GeneratedTheory::new(Theory::Stoch, 0.0);
        let id = gt.register(pr_box().unwrap()).unwrap();
        (gt, id)
    }

    #[test]
    fn register_pr_and_recompose() {
        let (mut gt, id) = pr_theory();
        let t = gt.recomposition_term(id).unwrap();
        assert!(gt.is_in_base(&t).unwrap());
        assert_eq!(gt.eval(&t).unwrap(), *gt.registration(id).unwrap().channel.body());
    }

    #[test]
    fn signalling_channels_are_refused() {
        let mut gt = GeneratedTheory::<Rational>::new(Theory::Stoch, 0.0);
        assert!(matches!(gt.register(swap_channel(2).unwrap()), Err(Error::NotNonSignalling { .. })));
    }

    #[test]
    fn reregistration_gets_fresh_brands() {
        let (mut gt, a) = pr_theory();
        let b = gt.register(pr_box().unwrap()).unwrap();
        assert_ne!(a, b);
        let ta = gt.registration(a).unwrap().realization.ancilla_types();
        let tb = gt.registration(b).unwrap().realization.ancilla_types();
        assert!(ta.iter().all(|t| !tb.contains(t)));
    }

    #[test]
    fn pr_discard_is_all_ones() {
        let (gt, _) = pr_theory();
        for ty in gt.extension_types() {
            let d = gt.discard_ext(&ty).unwrap();
            assert_eq!(d.deviation, Rational::from_int(0));
            assert!(d.effect.matrix().data().iter().all(|x| *x == Rational::from_int(1)));
        }
    }

    #[test]
    fn brands_are_enforced() {
        let (mut gt, id) = pr_theory();
        let ty = gt.registration(id).unwrap().realization.brands[0].ty;
        let sig = Signature::new(vec![ty]);
        let fake = LinearProcess::identity(sig).into_matrix();
        let p = LinearProcess::new(Signature::new(vec![ty]), Signature::new(vec![ty]), fake).unwrap();
        assert!(matches!(gt.bind_base("fake", p), Err(Error::BrandViolation(_))));
        // a classical channel on the carrier dimension cannot feed η
        let c = SystemType::classical(ty.dim()).unwrap();
        let flip = gt
            .bind_base("noise", LinearProcess::identity(Signature::new(vec![c])))
            .unwrap();
        let bit = SystemType::classical(2).unwrap();
        let pre = DiagramTerm::par(gt.identity(bit).unwrap(), flip);
        let eta = gt.leaf(&format!("eta_{id}_1")).unwrap();
        assert!(matches!(DiagramTerm::seq(pre, eta), Err(Error::TypeMismatch { .. })));
    }
}
