//! Common-cause realizations over branded extension systems.
//!
//! Wing `i` gets an extension type `A_i` whose carrier enumerates the frame
//! members that wing actually uses. The shared quasi-state is
//! `ξ = Σ_k c_k δ_{a_1(k)} ⊗ … ⊗ δ_{a_m(k)}` and `η_i : i ⊗ A_i → i′`
//! applies member `a` when the carrier reads `a`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::decompose::quasi::QuasiMixture;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ns::{MultipartiteChannel, Wing};
use crate::process::{compose_par, compose_seq, LinearProcess};
use crate::scalar::{within, Scalar};
use crate::system::{decode_index, encode_index, Brand, Signature, SystemType};
use crate::theory::{hybrid_valid, Theory};

static NEXT_CHANNEL: AtomicU64 = AtomicU64::new(1);

/// A channel id that has not been handed out before in this process.
pub fn next_channel_id() -> u64 {
    NEXT_CHANNEL.fetch_add(1, Ordering::Relaxed)
}

/// Extension type of one wing and the frame members its carrier selects.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeBrand {
    pub ty: SystemType,
    pub channel: u64,
    pub wing: usize,
    /// Carrier value `a` selects frame member `members[a]`.
    pub members: Vec<usize>,
}

impl TypeBrand {
    pub fn carrier(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommonCauseRealization<S> {
    pub channel: u64,
    pub theory: Theory,
    pub wings: Vec<Wing>,
    pub brands: Vec<TypeBrand>,
    pub xi: LinearProcess<S>,
    pub etas: Vec<LinearProcess<S>>,
}

impl<S: Scalar> CommonCauseRealization<S> {
    pub fn ancilla_types(&self) -> Vec<SystemType> {
        self.brands.iter().map(|b| b.ty).collect()
    }

    pub fn ancilla_signature(&self) -> Signature {
        Signature::new(self.ancilla_types())
    }

    /// Nonzero entries of `ξ` as (coefficient, carrier digits).
    pub fn xi_terms(&self) -> Vec<(S, Vec<usize>)> {
        let dims = self.ancilla_signature().dims();
        let v = self.xi.matrix();
        (0..v.rows())
            .filter(|&k| !v[(k, 0)].is_zero())
            .map(|k| (v[(k, 0)].clone(), decode_index(k, &dims)))
            .collect()
    }
}

/// Same process with every extension wire replaced by a classical wire of
/// the carrier dimension, so that instrument validity applies to it.
pub fn carrier_view<S: Scalar>(p: &LinearProcess<S>) -> Result<LinearProcess<S>> {
    let strip = |sig: &Signature| -> Result<Signature> {
        sig.wires()
            .iter()
            .map(|t| if t.is_extension() { SystemType::classical(t.dim()) } else { Ok(*t) })
            .collect::<Result<Vec<_>>>()
            .map(Signature::new)
    };
    LinearProcess::new(strip(p.inputs())?, strip(p.outputs())?, p.matrix().into_owned())
}

pub fn build_realization<S: Scalar>(ch: &MultipartiteChannel<S>, qm: &QuasiMixture<S>, tol: f64) -> Result<CommonCauseRealization<S>> {
    build_realization_for(next_channel_id(), ch, qm, tol)
}

/// As [`build_realization`] with a caller-chosen channel id.
pub fn build_realization_for<S: Scalar>(
    channel: u64,
    ch: &MultipartiteChannel<S>,
    qm: &QuasiMixture<S>,
    tol: f64,
) -> Result<CommonCauseRealization<S>> {
    let m = ch.parties();
    if qm.frame.wings.len() != m || qm.frame.wings.iter().zip(ch.wings()).any(|(f, w)| f.wing != *w) {
        return Err(Error::SignatureMismatch("quasi-mixture frame does not match the channel's wings".into()));
    }
    if !crate::scalar::negligible(&qm.residual, tol) {
        return Err(Error::ResidualTooLarge { residual: qm.residual.to_string(), tol });
    }
    let theory = ch.theory();
    let mut brands = Vec::with_capacity(m);
    for i in 0..m {
        let mut used: Vec<usize> = qm.terms.iter().map(|t| t.indices[i]).collect();
        used.sort_unstable();
        used.dedup();
        if used.is_empty() {
            return Err(Error::InvalidChannel("empty quasi-mixture".into()));
        }
        let ty = SystemType::extension(Brand::fresh(channel, i), used.len())?;
        brands.push(TypeBrand { ty, channel, wing: i, members: used });
    }
    let anc = Signature::new(brands.iter().map(|b| b.ty).collect());
    let anc_dims = anc.dims();
    let mut xi = vec![S::zero(); anc.total_dim()];
    for t in &qm.terms {
        let digits: Vec<usize> = (0..m)
            .map(|i| brands[i].members.binary_search(&t.indices[i]).expect("member recorded"))
            .collect();
        let k = encode_index(&digits, &anc_dims);
        xi[k] = xi[k].clone() + t.coeff.clone();
    }
    let total = xi.iter().fold(S::zero(), |a, x| a + x.clone());
    if !within(&total, &S::one(), tol.max(if tol > 0.0 { 1e-12 } else { 0.0 })) {
        return Err(Error::InvalidChannel(format!("quasi-state sums to {total}")));
    }
    let xi = LinearProcess::state(anc, xi)?;
    let mut etas = Vec::with_capacity(m);
    for (i, (wing, brand)) in ch.wings().iter().zip(&brands).enumerate() {
        let (vi, vo, n) = (wing.input.vdim(), wing.output.vdim(), brand.carrier());
        let members = &qm.frame.wings[i].members;
        let mut eta = Matrix::zeros(vo, vi * n);
        for (a, &j) in brand.members.iter().enumerate() {
            let phi = members[j].matrix();
            for x in 0..vi {
                for o in 0..vo {
                    eta[(o, x * n + a)] = phi[(o, x)].clone();
                }
            }
        }
        let eta = LinearProcess::new(
            Signature::new(vec![wing.input, brand.ty]),
            Signature::new(vec![wing.output]),
            eta,
        )?;
        check_eta(theory, &eta, tol)?;
        etas.push(eta);
    }
    Ok(CommonCauseRealization { channel, theory, wings: ch.wings().to_vec(), brands, xi, etas })
}

/// Instrument validity on the carrier view and discard preservation.
pub(crate) fn check_eta<S: Scalar>(theory: Theory, eta: &LinearProcess<S>, tol: f64) -> Result<()> {
    let view = carrier_view(eta)?;
    if !hybrid_valid(&view, tol) {
        return Err(Error::InvalidChannel("η fails instrument validity".into()));
    }
    let [input, carrier] = view.inputs().wires() else {
        return Err(Error::SignatureMismatch("η must have two inputs".into()));
    };
    let out = view.outputs().wires()[0];
    let lhs = compose_seq(&view, &theory.discard(&out)?)?;
    let rhs = compose_par(&theory.discard(input)?, &Theory::Stoch.discard(carrier)?);
    if !lhs.approx_eq(&rhs, tol) {
        return Err(Error::InvalidChannel("η does not preserve discarding".into()));
    }
    Ok(())
}

/// Contracts `(⊗ η_i) ∘ (id ⊗ ξ)` one wing at a time and returns the
/// resulting body.
pub fn recompose<S: Scalar>(r: &CommonCauseRealization<S>) -> Result<LinearProcess<S>> {
    let m = r.wings.len();
    if r.etas.len() != m || r.brands.len() != m {
        return Err(Error::SignatureMismatch("one η and one brand per wing required".into()));
    }
    for (i, (eta, w)) in r.etas.iter().zip(&r.wings).enumerate() {
        let want_in = Signature::new(vec![w.input, r.brands[i].ty]);
        let want_out = Signature::new(vec![w.output]);
        if eta.inputs() != &want_in || eta.outputs() != &want_out {
            return Err(Error::SignatureMismatch(format!(
                "η_{} is {} -> {}, expected {} -> {}",
                i + 1,
                eta.inputs(),
                eta.outputs(),
                want_in,
                want_out
            )));
        }
    }
    if r.xi.outputs() != &r.ancilla_signature() || !r.xi.inputs().is_empty() {
        return Err(Error::SignatureMismatch(format!("ξ must be a state on {}", r.ancilla_signature())));
    }
    // axis i holds the carrier of wing i until it is contracted, then the
    // pair (o_i, x_i) flattened as o·vdim(in) + x
    let mut dims: Vec<usize> = r.brands.iter().map(|b| b.carrier()).collect();
    let mut cur: Vec<S> = r.xi.matrix().into_owned().into_data();
    for (i, eta) in r.etas.iter().enumerate() {
        let w = &r.wings[i];
        let (vi, vo, n) = (w.input.vdim(), w.output.vdim(), dims[i]);
        let e = eta.matrix();
        let outer: usize = dims[..i].iter().product();
        let inner: usize = dims[i + 1..].iter().product();
        let mut next = vec![S::zero(); outer * vo * vi * inner];
        for p in 0..outer {
            for a in 0..n {
                for q in 0..inner {
                    let c = &cur[(p * n + a) * inner + q];
                    if c.is_zero() {
                        continue;
                    }
                    for o in 0..vo {
                        for x in 0..vi {
                            let v = &e[(o, x * n + a)];
                            if v.is_zero() {
                                continue;
                            }
                            let k = (p * vo * vi + o * vi + x) * inner + q;
                            next[k] = next[k].clone() + v.clone() * c.clone();
                        }
                    }
                }
            }
        }
        cur = next;
        dims[i] = vo * vi;
    }
    let ins: Vec<usize> = r.wings.iter().map(|w| w.input.vdim()).collect();
    let outs: Vec<usize> = r.wings.iter().map(|w| w.output.vdim()).collect();
    let body = Matrix::from_fn(outs.iter().product(), ins.iter().product(), |row, col| {
        let o = decode_index(row, &outs);
        let x = decode_index(col, &ins);
        let digits: Vec<usize> = (0..m).map(|i| o[i] * ins[i] + x[i]).collect();
        cur[encode_index(&digits, &dims)].clone()
    });
    LinearProcess::new(
        Signature::new(r.wings.iter().map(|w| w.input).collect()),
        Signature::new(r.wings.iter().map(|w| w.output).collect()),
        body,
    )
}

/// Max-abs distance between the recomposed realization and the channel.
pub fn verify_realization<S: Scalar>(ch: &MultipartiteChannel<S>, r: &CommonCauseRealization<S>) -> Result<S> {
    if r.wings != ch.wings() {
        return Err(Error::SignatureMismatch("realization wings differ from the channel's".into()));
    }
    recompose(r)?.distance(ch.body())
}
