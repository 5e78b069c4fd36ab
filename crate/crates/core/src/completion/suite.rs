//! Executable property suites over a generated theory: validity of
//! base-boundary diagrams, uniqueness of discarding, and independence of
//! composition from the choice of class representatives.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::completion::{Equivalence, GeneratedTheory, GeneratorKind, Witness};
use crate::diagram::{eval_diagram, DiagramTerm, Weight};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::process::LinearProcess;
use crate::samples::random_channel;
use crate::scalar::{within, Rational, Scalar};
use crate::system::{invert_permutation, Signature, SystemType};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed
    }
}

/// Scratch copy of a theory plus a random source and a name counter.
struct Bench<S> {
    gt: GeneratedTheory<S>,
    rng: ChaCha8Rng,
    serial: usize,
}

impl<S: Scalar> Bench<S> {
    fn new(gt: &GeneratedTheory<S>, seed: u64) -> Self {
        Bench { gt: gt.clone(), rng: ChaCha8Rng::seed_from_u64(seed), serial: 0 }
    }

    fn name(&mut self, stem: &str) -> String {
        loop {
            self.serial += 1;
            let n = format!("{stem}{}", self.serial);
            if !self.gt.bindings.contains_key(&n) {
                return n;
            }
        }
    }

    fn ids(&self) -> Vec<u64> {
        self.gt.registered.keys().copied().collect()
    }

    fn weight(&mut self) -> Weight {
        let k: i64 = self.rng.gen_range(1..8);
        Weight::new(Rational::new(k.into(), 8.into())).expect("in range")
    }

    fn random_base(&mut self, ins: Vec<SystemType>, outs: Vec<SystemType>) -> Result<DiagramTerm> {
        let p = random_channel::<S, _>(&mut self.rng, self.gt.base, &Signature::new(ins), &Signature::new(outs))?;
        let name = self.name("rnd_");
        self.gt.bind_base(&name, p)
    }

    fn random_state(&mut self, ty: SystemType) -> Result<DiagramTerm> {
        if !ty.is_extension() {
            return self.random_base(vec![], vec![ty]);
        }
        let span = self.gt.state_span(&ty)?;
        Ok(span.choose(&mut self.rng).expect("nonempty span").term.clone())
    }

    /// A frame effect, the discard, or (extension types) a generated effect.
    fn random_effect(&mut self, ty: SystemType) -> Result<DiagramTerm> {
        let disc = format!("disc_{}", ty.tag());
        if self.rng.gen_bool(0.25) {
            return self.gt.leaf(&disc);
        }
        if ty.is_extension() {
            let span = self.gt.effect_span(&ty)?;
            return Ok(span.choose(&mut self.rng).expect("nonempty span").term.clone());
        }
        let names = self.gt.frame_effect_names(&ty);
        let n = names.choose(&mut self.rng).expect("frame").clone();
        self.gt.leaf(&n)
    }

    fn identity_on(&mut self, sig: &Signature) -> Result<Option<DiagramTerm>> {
        if sig.is_empty() {
            return Ok(None);
        }
        let ids = sig.wires().iter().map(|t| self.gt.identity(*t)).collect::<Result<Vec<_>>>()?;
        DiagramTerm::par_all(ids).map(Some)
    }

    /// `η_j` of the owning channel, fed a random base state: `A_j → out_j`.
    fn open_leg(&mut self, ty: SystemType) -> Result<DiagramTerm> {
        let (id, wing) = self.gt.owner(&ty)?;
        let w = self.gt.registration(id)?.channel.wings()[wing];
        let s = self.random_state(w.input)?;
        let id_a = self.gt.identity(ty)?;
        let eta = self.gt.leaf(&format!("eta_{id}_{}", wing + 1))?;
        DiagramTerm::seq(DiagramTerm::par(s, id_a), eta)
    }
}

fn seq_opt(parts: Vec<Option<DiagramTerm>>) -> Result<DiagramTerm> {
    DiagramTerm::seq_all(parts.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------------
// validity of base-boundary diagrams

#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub checked: usize,
    pub by_pattern: BTreeMap<&'static str, usize>,
    /// Rendered terms that failed, with the reason.
    pub failures: Vec<String>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }
}

impl<S: Scalar> Bench<S> {
    /// Recomposition diagram with each input either pre-processed by a random
    /// channel or fed a random state, and each output either post-processed
    /// or closed by an effect.
    fn dressed(&mut self, id: u64, close_in: &[bool], close_out: &[bool]) -> Result<DiagramTerm> {
        let wings = self.gt.registration(id)?.channel.wings().to_vec();
        let core = self.gt.recomposition_term(id)?;
        let mut pre = Vec::with_capacity(wings.len());
        let mut post = Vec::with_capacity(wings.len());
        for (i, w) in wings.iter().enumerate() {
            pre.push(if close_in[i] { self.random_state(w.input)? } else { self.random_base(vec![w.input], vec![w.input])? });
            post.push(if close_out[i] {
                self.random_effect(w.output)?
            } else {
                self.random_base(vec![w.output], vec![w.output])?
            });
        }
        DiagramTerm::seq_all(vec![DiagramTerm::par_all(pre)?, core, DiagramTerm::par_all(post)?])
    }

    fn masks(&mut self, m: usize) -> (Vec<bool>, Vec<bool>) {
        let a = (0..m).map(|_| self.rng.gen_bool(0.3)).collect();
        let b = (0..m).map(|_| self.rng.gen_bool(0.3)).collect();
        (a, b)
    }

    /// The output of wing 1 is processed together with a copy of wing 2's
    /// input before `η_2` acts: `(x, y) ↦ η_2(g(h(η_1(x)), y))`.
    fn feedforward(&mut self, id: u64) -> Result<Option<DiagramTerm>> {
        let reg = self.gt.registration(id)?;
        if reg.channel.parties() != 2 {
            return Ok(None);
        }
        let w = reg.channel.wings().to_vec();
        let anc = reg.realization.ancilla_types();
        let (in1, in2, out1) = (w[0].input, w[1].input, w[0].output);
        let front = DiagramTerm::par_all(vec![self.gt.identity(in1)?, self.gt.identity(in2)?, self.gt.leaf(&format!("xi_{id}"))?])?;
        let perm = self.gt.permutation(&Signature::new(vec![in1, in2, anc[0], anc[1]]), &[0, 2, 1, 3])?;
        let (id_in2, id_a2, id_out1) = (self.gt.identity(in2)?, self.gt.identity(anc[1])?, self.gt.identity(out1)?);
        let eta1 = self.gt.leaf(&format!("eta_{id}_1"))?;
        let eta2 = self.gt.leaf(&format!("eta_{id}_2"))?;
        let h = self.random_base(vec![out1], vec![out1, in2])?;
        let g = self.random_base(vec![in2, in2], vec![in2])?;
        DiagramTerm::seq_all(vec![
            front,
            perm,
            DiagramTerm::par_all(vec![eta1, id_in2.clone(), id_a2.clone()])?,
            DiagramTerm::par_all(vec![h, id_in2, id_a2.clone()])?,
            DiagramTerm::par_all(vec![id_out1.clone(), g, id_a2])?,
            DiagramTerm::par(id_out1, eta2),
        ])
        .map(Some)
    }

    /// Some wings act through `η_i`, the remaining legs of `ξ` are discarded.
    fn marginal(&mut self, id: u64) -> Result<DiagramTerm> {
        let reg = self.gt.registration(id)?;
        let wings = reg.channel.wings().to_vec();
        let anc = reg.realization.ancilla_types();
        let m = wings.len();
        let keep: Vec<bool> = (0..m).map(|_| self.rng.gen_bool(0.5)).collect();
        let kept: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
        let dropped: Vec<usize> = (0..m).filter(|&i| !keep[i]).collect();
        let mut front = Vec::new();
        for &i in &kept {
            front.push(self.gt.identity(wings[i].input)?);
        }
        front.push(self.gt.leaf(&format!("xi_{id}"))?);
        let wires: Vec<SystemType> = kept.iter().map(|&i| wings[i].input).chain(anc.iter().copied()).collect();
        let k = kept.len();
        let mut order = Vec::with_capacity(wires.len());
        for (p, &i) in kept.iter().enumerate() {
            order.push(p);
            order.push(k + i);
        }
        order.extend(dropped.iter().map(|&i| k + i));
        let perm = self.gt.permutation(&Signature::new(wires), &order)?;
        let mut back = Vec::new();
        for &i in &kept {
            back.push(self.gt.leaf(&format!("eta_{id}_{}", i + 1))?);
        }
        for &i in &dropped {
            back.push(self.gt.leaf(&format!("disc_{}", anc[i].tag()))?);
        }
        DiagramTerm::seq_all(vec![DiagramTerm::par_all(front)?, perm, DiagramTerm::par_all(back)?])
    }

    fn random_valid_diagram(&mut self) -> Result<(&'static str, DiagramTerm)> {
        let ids = self.ids();
        let id = *ids.choose(&mut self.rng).ok_or_else(|| Error::OutOfRange("no registered channel".into()))?;
        let m = self.gt.registration(id)?.channel.parties();
        match self.rng.gen_range(0..5) {
            0 => {
                let (a, b) = self.masks(m);
                Ok(("dressed", self.dressed(id, &a, &b)?))
            }
            1 => match self.feedforward(id)? {
                Some(t) => Ok(("feedforward", t)),
                None => Ok(("marginal", self.marginal(id)?)),
            },
            2 => Ok(("marginal", self.marginal(id)?)),
            3 => {
                let (a, b) = self.masks(m);
                let f = self.dressed(id, &a, &b)?;
                let g = self.dressed(id, &a, &b)?;
                let w = self.weight();
                Ok(("mixture", DiagramTerm::mix(w, f, g)?))
            }
            _ => {
                let other = *ids.choose(&mut self.rng).expect("nonempty");
                let f = self.marginal(id)?;
                let g = self.marginal(other)?;
                Ok(("parallel", DiagramTerm::par(f, g)))
            }
        }
    }
}

/// Builds `samples` random well-typed diagrams over the generators whose
/// boundary wires are all base types, and checks each with
/// [`GeneratedTheory::is_in_base`].
pub fn validity_suite<S: Scalar>(gt: &GeneratedTheory<S>, samples: usize, seed: u64) -> Result<ValidityReport> {
    let mut bench = Bench::new(gt, seed);
    let mut report = ValidityReport::default();
    for _ in 0..samples {
        let (pattern, term) = bench.random_valid_diagram()?;
        *report.by_pattern.entry(pattern).or_default() += 1;
        report.checked += 1;
        match bench.gt.is_in_base(&term) {
            Ok(true) => {}
            Ok(false) => report.failures.push(format!("{pattern}: {term}: not valid")),
            Err(e) => report.failures.push(format!("{pattern}: {term}: {e}")),
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// discarding

/// Deviation of each extension type's discard from input-state
/// independence.
pub fn discard_suite<S: Scalar>(gt: &GeneratedTheory<S>) -> Result<Vec<(SystemType, S)>> {
    gt.extension_types()
        .into_iter()
        .map(|ty| Ok((ty, gt.discard_ext(&ty)?.deviation)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct DiscardUniqueness {
    pub ty: SystemType,
    pub candidates: usize,
    /// Candidates giving 1 on every normalized generated state.
    pub normalizing: usize,
    /// Every normalizing candidate agrees with the discard on the state span.
    pub all_discard: bool,
    pub discard_normalizing: bool,
}

impl DiscardUniqueness {
    pub fn passed(&self) -> bool {
        self.all_discard && self.discard_normalizing
    }
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn subset_sums<S: Scalar>(rows: &[Vec<S>]) -> Vec<Vec<S>> {
    let n = rows.len().min(12);
    (1usize..1 << n)
        .map(|mask| {
            let mut v = vec![S::zero(); rows[0].len()];
            for (j, r) in rows.iter().enumerate().take(n) {
                if mask >> j & 1 == 1 {
                    for (x, y) in v.iter_mut().zip(r) {
                        *x = x.clone() + y.clone();
                    }
                }
            }
            v
        })
        .collect()
}

impl<S: Scalar> GeneratedTheory<S> {
    fn effect_vector(&self, name: &str) -> Result<Vec<S>> {
        Ok(self.eval(&self.leaf(name)?)?.into_matrix().into_data())
    }

    /// Generated effects on `ty` that give 1 on every normalized generated
    /// state are compared against the discard.
    ///
    /// Candidates are coarse-grainings (sums over nonempty subsets) of the
    /// frame effects on a base type, and on `A_i` the same coarse-grainings
    /// of the output frame after `η_i` fed a frame state. Normalized states
    /// are the generated states rescaled by their discard value, plus `ξ`
    /// with every other leg discarded.
    pub fn discard_uniqueness(&mut self, ty: &SystemType) -> Result<DiscardUniqueness> {
        let tol = self.tol.max(if self.tol > 0.0 { 1e-9 } else { 0.0 });
        let disc_name = format!("disc_{}", ty.tag());
        if !ty.is_extension() {
            self.ensure_base_type(*ty)?;
        }
        let disc = self.effect_vector(&disc_name)?;
        let depth = self.tester_depth;
        let mut states: Vec<Vec<S>> = Vec::new();
        for s in self.generated_states(ty, depth)? {
            let d = dot(&disc, &s.vector);
            if !within(&d, &S::zero(), tol) {
                states.push(s.vector.iter().map(|x| x.clone() / d.clone()).collect());
            }
        }
        let mut candidates: Vec<Vec<S>> = Vec::new();
        if ty.is_extension() {
            let (id, wing) = self.owner(ty)?;
            let w = self.registration(id)?.channel.wings()[wing];
            let anc = self.registration(id)?.realization.ancilla_types();
            let mut legs = Vec::with_capacity(anc.len());
            for (j, t) in anc.iter().enumerate() {
                legs.push(if j == wing { self.identity(*t)? } else { self.leaf(&format!("disc_{}", t.tag()))? });
            }
            let xi = self.leaf(&format!("xi_{id}"))?;
            states.push(self.eval(&DiagramTerm::seq(xi, DiagramTerm::par_all(legs)?)?)?.into_matrix().into_data());
            let eta = self.registration(id)?.realization.etas[wing].clone();
            let base_states = self.base.frames::<S>(&w.input)?.states;
            let out_effects: Vec<Vec<S>> =
                self.base.frames::<S>(&w.output)?.effects.into_iter().map(|e| e.into_matrix().into_data()).collect();
            let id_a = LinearProcess::identity(Signature::new(vec![*ty]));
            for s in &base_states {
                let fed = crate::process::compose_seq(&crate::process::compose_par(s, &id_a), &eta)?.into_matrix();
                // fed: out_i × carrier; effect e gives the row e · fed
                for e in subset_sums(&out_effects) {
                    candidates.push(Matrix::row_vector(e).matmul(&fed).into_data());
                }
            }
        } else {
            let effects: Vec<Vec<S>> = self
                .frame_effect_names(ty)
                .iter()
                .map(|n| self.effect_vector(n))
                .collect::<Result<_>>()?;
            candidates = subset_sums(&effects);
        }
        candidates.push(disc.clone());
        let normalizes = |e: &[S]| states.iter().all(|s| within(&dot(e, s), &S::one(), tol));
        let mut normalizing = 0;
        let mut all_discard = true;
        for e in &candidates {
            if normalizes(e) {
                normalizing += 1;
                let diff: Vec<S> = e.iter().zip(&disc).map(|(a, b)| a.clone() - b.clone()).collect();
                if !states.iter().all(|s| within(&dot(&diff, s), &S::zero(), tol)) {
                    all_discard = false;
                }
            }
        }
        Ok(DiscardUniqueness {
            ty: *ty,
            candidates: candidates.len(),
            normalizing,
            all_discard,
            discard_normalizing: normalizes(&disc),
        })
    }
}

// ---------------------------------------------------------------------------
// independence of representatives

/// A planted inequivalent pair and the tester that separates it, with both
/// sides re-evaluated directly from the bindings.
#[derive(Debug, Clone)]
pub struct NegativeControl<S> {
    pub original: DiagramTerm,
    pub perturbed: DiagramTerm,
    pub witness: Witness<S>,
    pub left: S,
    pub right: S,
}

impl<S: Scalar> NegativeControl<S> {
    pub fn conclusive(&self, tol: f64) -> bool {
        !within(&self.left, &self.right, tol)
    }
}

#[derive(Debug, Clone)]
pub struct QuotientReport<S> {
    pub depth: usize,
    pub tol: f64,
    pub pairs: usize,
    pub by_source: BTreeMap<&'static str, usize>,
    /// The pair itself compared.
    pub pair: Tally,
    pub seq: Tally,
    pub par: Tally,
    pub mix: Tally,
    pub failures: Vec<String>,
    pub negative_control: Option<NegativeControl<S>>,
}

impl<S: Scalar> QuotientReport<S> {
    pub fn passed(&self) -> bool {
        let clean = [self.pair, self.seq, self.par, self.mix].iter().all(|t| t.failed == 0);
        clean && self.negative_control.as_ref().is_some_and(|n| n.conclusive(self.tol))
    }
}

/// Random element of the span of `basis` with small nonzero coefficients.
fn random_combination<S: Scalar>(rng: &mut ChaCha8Rng, basis: &[Vec<S>]) -> Vec<S> {
    let mut v = vec![S::zero(); basis[0].len()];
    for b in basis {
        let mut k: i64 = rng.gen_range(-3..=3);
        if k == 0 {
            k = 1;
        }
        let c = S::from_ratio(k, 4);
        for (x, y) in v.iter_mut().zip(b) {
            *x = x.clone() + c.clone() * y.clone();
        }
    }
    v
}

impl<S: Scalar> Bench<S> {
    /// Pairing of a state on `A_1 ⊗ … ⊗ A_m` against products of generated
    /// effects; its kernel holds perturbations no product tester sees.
    fn pairing(&mut self, anc: &[SystemType]) -> Result<Matrix<S>> {
        let mut p = Matrix::from_vec(1, 1, vec![S::one()]);
        for t in anc {
            let rows: Vec<Vec<S>> = self.gt.effect_span(t)?.into_iter().map(|s| s.vector).collect();
            p = p.kron(&Matrix::from_rows(&rows));
        }
        Ok(p)
    }

    fn install_rep(&mut self, stem: &str, p: LinearProcess<S>) -> DiagramTerm {
        let name = self.name(stem);
        let term = DiagramTerm::leaf_typed(&name, p.inputs().clone(), p.outputs().clone());
        self.gt.install(name, p, GeneratorKind::Admitted);
        term
    }

    /// `ξ` and `ξ + v` with `v` in the kernel of the product pairing.
    fn xi_kernel_pair(&mut self, id: u64) -> Result<Option<(DiagramTerm, DiagramTerm)>> {
        let reg = self.gt.registration(id)?;
        let anc = reg.realization.ancilla_types();
        let xi = reg.realization.xi.clone();
        let kernel = self.pairing(&anc)?.nullspace(S::default_tol());
        if kernel.is_empty() {
            return Ok(None);
        }
        let v = random_combination(&mut self.rng, &kernel);
        let data: Vec<S> = xi.matrix().data().iter().zip(&v).map(|(a, b)| a.clone() + b.clone()).collect();
        let rep = self.install_rep(&format!("xi_{id}_k"), LinearProcess::state(xi.outputs().clone(), data)?);
        Ok(Some((self.gt.leaf(&format!("xi_{id}"))?, rep)))
    }

    /// `η_i` and `η_i + u ⊗ r ⊗ k` with `k` annihilating the generated
    /// states of `A_i`.
    fn eta_kernel_pair(&mut self, id: u64) -> Result<Option<(DiagramTerm, DiagramTerm)>> {
        let reg = self.gt.registration(id)?;
        let wing = self.rng.gen_range(0..reg.channel.parties());
        let ty = reg.realization.brands[wing].ty;
        let eta = reg.realization.etas[wing].clone();
        let rows: Vec<Vec<S>> = self.gt.state_span(&ty)?.into_iter().map(|s| s.vector).collect();
        let kernel = Matrix::from_rows(&rows).nullspace(S::default_tol());
        if kernel.is_empty() {
            return Ok(None);
        }
        let k = random_combination(&mut self.rng, &kernel);
        let (vo, vi) = (eta.outputs().total_dim(), eta.inputs().wires()[0].vdim());
        let n = ty.vdim();
        let u: Vec<S> = (0..vo).map(|_| S::from_ratio(self.rng.gen_range(-2..=2), 2)).collect();
        let r: Vec<S> = (0..vi).map(|_| S::from_ratio(self.rng.gen_range(-2..=2), 2)).collect();
        let base = eta.matrix();
        let m = Matrix::from_fn(vo, vi * n, |o, c| {
            base[(o, c)].clone() + u[o].clone() * r[c / n].clone() * k[c % n].clone()
        });
        let rep = self.install_rep(&format!("eta_{id}_{}_k", wing + 1), LinearProcess::new(eta.inputs().clone(), eta.outputs().clone(), m)?);
        Ok(Some((self.gt.leaf(&format!("eta_{id}_{}", wing + 1))?, rep)))
    }

    /// A generated term and a padded copy of it: identities before or
    /// after, a permutation and its inverse, or a trivial self-mixture.
    fn padded_pair(&mut self, id: u64) -> Result<(DiagramTerm, DiagramTerm)> {
        let reg = self.gt.registration(id)?;
        let m = reg.channel.parties();
        let f = match self.rng.gen_range(0..4) {
            0 => self.gt.leaf(&format!("xi_{id}"))?,
            1 => self.gt.leaf(&format!("eta_{id}_{}", self.rng.gen_range(1..=m)))?,
            2 => self.gt.recomposition_term(id)?,
            _ => self.marginal(id)?,
        };
        let (ins, outs) = (f.inputs().clone(), f.outputs().clone());
        let g = match self.rng.gen_range(0..4) {
            0 if !ins.is_empty() => seq_opt(vec![self.identity_on(&ins)?, Some(f.clone())])?,
            1 if outs.len() >= 2 => {
                let mut perm: Vec<usize> = (0..outs.len()).collect();
                perm.shuffle(&mut self.rng);
                let p = self.gt.permutation(&outs, &perm)?;
                let back = self.gt.permutation(&outs.permuted(&perm), &invert_permutation(&perm))?;
                DiagramTerm::seq_all(vec![f.clone(), p, back])?
            }
            2 => {
                let w = self.weight();
                DiagramTerm::mix(w, f.clone(), f.clone())?
            }
            _ => seq_opt(vec![Some(f.clone()), self.identity_on(&outs)?])?,
        };
        Ok((f, g))
    }

    /// Pre-composes inputs with random channels or closes them with states,
    /// post-composes outputs likewise; applied identically to both sides.
    fn seq_context(&mut self, sig_in: &Signature, sig_out: &Signature) -> Result<(Option<DiagramTerm>, Option<DiagramTerm>)> {
        let mut pre = Vec::new();
        for t in sig_in.wires() {
            pre.push(match (t.is_extension(), self.rng.gen_range(0..3)) {
                (_, 0) => self.random_state(*t)?,
                (true, _) => self.gt.identity(*t)?,
                (false, _) => self.random_base(vec![*t], vec![*t])?,
            });
        }
        let mut post = Vec::new();
        for t in sig_out.wires() {
            post.push(match (t.is_extension(), self.rng.gen_range(0..3)) {
                (_, 0) => self.random_effect(*t)?,
                (true, _) => self.open_leg(*t)?,
                (false, _) => self.random_base(vec![*t], vec![*t])?,
            });
        }
        let wrap = |v: Vec<DiagramTerm>| if v.is_empty() { Ok(None) } else { DiagramTerm::par_all(v).map(Some) };
        Ok((wrap(pre)?, wrap(post)?))
    }

    /// Any generated term to place alongside.
    fn companion(&mut self) -> Result<DiagramTerm> {
        let ids = self.ids();
        let id = *ids.choose(&mut self.rng).expect("registered");
        let m = self.gt.registration(id)?.channel.parties();
        let w = self.gt.registration(id)?.channel.wings()[0];
        match self.rng.gen_range(0..4) {
            0 => self.gt.leaf(&format!("xi_{id}")),
            1 => self.gt.leaf(&format!("eta_{id}_{}", self.rng.gen_range(1..=m))),
            2 => self.random_base(vec![w.input], vec![w.output]),
            _ => self.random_state(w.input),
        }
    }

    fn equivalent(&mut self, f: &DiagramTerm, g: &DiagramTerm, what: &str, failures: &mut Vec<String>) -> Result<bool> {
        match self.gt.op_equiv(f, g)? {
            Equivalence::EquivalentUpToDepth(_) => Ok(true),
            Equivalence::Distinguished(w) => {
                failures.push(format!("{what}: {f} vs {g}: {w}"));
                Ok(false)
            }
        }
    }

    fn negative_control(&mut self) -> Result<Option<NegativeControl<S>>> {
        for id in self.ids() {
            let reg = self.gt.registration(id)?;
            let anc = reg.realization.ancilla_types();
            let xi = reg.realization.xi.clone();
            let pairing = self.pairing(&anc)?;
            let Some(col) = (0..pairing.cols()).find(|&c| pairing.column(c).iter().any(|x| !x.is_zero())) else {
                continue;
            };
            let mut data = xi.matrix().into_owned().into_data();
            data[col] = data[col].clone() + S::from_ratio(1, 4);
            let perturbed = self.install_rep(&format!("xi_{id}_x"), LinearProcess::state(xi.outputs().clone(), data)?);
            let original = self.gt.leaf(&format!("xi_{id}"))?;
            if let Equivalence::Distinguished(witness) = self.gt.op_equiv(&perturbed, &original)? {
                let value = |t: &DiagramTerm| -> Result<S> {
                    eval_diagram(&witness.close(t)?, &self.gt.bindings)?
                        .scalar_value()
                        .ok_or_else(|| Error::SignatureMismatch("tester does not close the diagram".into()))
                };
                let (left, right) = (value(&perturbed)?, value(&original)?);
                return Ok(Some(NegativeControl { original, perturbed, witness: *witness, left, right }));
            }
        }
        Ok(None)
    }
}

/// Samples pairs of representatives that are equivalent by construction
/// and checks that sequential and parallel contexts and convex mixtures
/// keep them equivalent at the theory's tester depth. Also plants one
/// inequivalent pair that has to come back distinguished.
pub fn quotient_suite<S: Scalar>(gt: &GeneratedTheory<S>, samples: usize, seed: u64) -> Result<QuotientReport<S>> {
    let mut bench = Bench::new(gt, seed);
    let ids = bench.ids();
    if ids.is_empty() {
        return Err(Error::OutOfRange("quotient suite needs a registered channel".into()));
    }
    let mut report = QuotientReport {
        depth: gt.tester_depth,
        tol: gt.tol,
        pairs: 0,
        by_source: BTreeMap::new(),
        pair: Tally::default(),
        seq: Tally::default(),
        par: Tally::default(),
        mix: Tally::default(),
        failures: Vec::new(),
        negative_control: None,
    };
    let mut failures = Vec::new();
    while report.pairs < samples {
        let id = *ids.choose(&mut bench.rng).expect("nonempty");
        let (source, pair) = match bench.rng.gen_range(0..3) {
            0 => ("xi-kernel", bench.xi_kernel_pair(id)?),
            1 => ("eta-kernel", bench.eta_kernel_pair(id)?),
            _ => ("padding", Some(bench.padded_pair(id)?)),
        };
        let Some((f, g)) = pair else { continue };
        report.pairs += 1;
        *report.by_source.entry(source).or_default() += 1;

        let ok = bench.equivalent(&f, &g, "pair", &mut failures)?;
        report.pair.record(ok);

        let (pre, post) = bench.seq_context(f.inputs(), f.outputs())?;
        let fs = seq_opt(vec![pre.clone(), Some(f.clone()), post.clone()])?;
        let gs = seq_opt(vec![pre, Some(g.clone()), post])?;
        let ok = bench.equivalent(&fs, &gs, "seq", &mut failures)?;
        report.seq.record(ok);

        let h = bench.companion()?;
        let (fp, gp) = if bench.rng.gen_bool(0.5) {
            (DiagramTerm::par(f.clone(), h.clone()), DiagramTerm::par(g.clone(), h))
        } else {
            (DiagramTerm::par(h.clone(), f.clone()), DiagramTerm::par(h, g.clone()))
        };
        let ok = bench.equivalent(&fp, &gp, "par", &mut failures)?;
        report.par.record(ok);

        let w = bench.weight();
        let other = if bench.rng.gen_bool(0.5) { f.clone() } else { g.clone() };
        let (fm, gm) = if bench.rng.gen_bool(0.5) {
            (DiagramTerm::mix(w.clone(), f, other.clone())?, DiagramTerm::mix(w, g, other)?)
        } else {
            (DiagramTerm::mix(w.clone(), other.clone(), f)?, DiagramTerm::mix(w, other, g)?)
        };
        let ok = bench.equivalent(&fm, &gm, "mix", &mut failures)?;
        report.mix.record(ok);
    }
    report.failures = failures;
    report.negative_control = bench.negative_control()?;
    Ok(report)
}
