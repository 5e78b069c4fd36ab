//! Spanning families of local channels.
//!
//! Between classical systems the family is every deterministic function,
//! so convex combinations of product members are exactly the local
//! polytope. Otherwise it is the two-outcome measure-and-prepare family
//! `Φ_0 = σ_0·discard`, `Φ_{j,l} = σ_l·e_j + σ_0·(discard − e_j)` over the
//! effect frame `e_j` and the non-reference states `σ_l` of the output.

use crate::error::{Error, Result};
use crate::matrix::{affine_rank_of, Matrix};
use crate::ns::Wing;
use crate::process::LinearProcess;
use crate::scalar::Scalar;
use crate::system::{decode_index, Signature, SystemType};
use crate::theory::Theory;

/// Upper bound on the number of members of one wing's frame.
pub const MAX_FRAME_MEMBERS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct WingFrame<S> {
    pub wing: Wing,
    pub members: Vec<LinearProcess<S>>,
    /// Human-readable member descriptors, e.g. `fn[1,0]` or `mp[e2,s1]`.
    pub labels: Vec<String>,
}

impl<S: Scalar> WingFrame<S> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Matrix whose column `j` is member `j` flattened as `o·vdim(in) + x`.
    pub fn stacked(&self) -> Matrix<S> {
        let vi = self.wing.input.vdim();
        let vo = self.wing.output.vdim();
        let mut f = Matrix::zeros(vo * vi, self.members.len());
        for (j, m) in self.members.iter().enumerate() {
            let mm = m.matrix();
            for o in 0..vo {
                for x in 0..vi {
                    f[(o * vi + x, j)] = mm[(o, x)].clone();
                }
            }
        }
        f
    }
}

/// One frame per wing.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannelFrame<S> {
    pub wings: Vec<WingFrame<S>>,
}

impl<S: Scalar> LocalChannelFrame<S> {
    pub fn for_wings(theory: Theory, wings: &[Wing]) -> Result<Self> {
        let wings = wings
            .iter()
            .map(|w| labelled_frame(theory, w.input, w.output))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalChannelFrame { wings })
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.wings.iter().map(WingFrame::len).collect()
    }

    /// Number of product terms.
    pub fn product_size(&self) -> usize {
        self.sizes().iter().product()
    }
}

/// The frame members for one wing type pair.
pub fn local_channel_frame<S: Scalar>(theory: Theory, input: SystemType, output: SystemType) -> Result<Vec<LinearProcess<S>>> {
    Ok(labelled_frame(theory, input, output)?.members)
}

/// Affine rank of the discard-preserving maps `input → output`.
pub fn expected_affine_rank(input: SystemType, output: SystemType) -> usize {
    output.vdim() * input.vdim() - input.vdim()
}

pub fn labelled_frame<S: Scalar>(theory: Theory, input: SystemType, output: SystemType) -> Result<WingFrame<S>> {
    for t in [input, output] {
        if !theory.contains(&t) {
            return Err(Error::UnknownType(format!("{t} in {theory}")));
        }
    }
    let (members, labels) = if input.is_classical() && output.is_classical() {
        deterministic_functions(input, output)?
    } else {
        measure_and_prepare(theory, input, output)?
    };
    let frame = WingFrame { wing: Wing::new(input, output), members, labels };
    let flat: Vec<Vec<S>> = {
        let f = frame.stacked().transpose();
        (0..f.rows()).map(|r| f.row(r).to_vec()).collect()
    };
    let rank = affine_rank_of(&flat, S::default_tol());
    let expected = expected_affine_rank(input, output);
    if rank != expected {
        return Err(Error::FrameDeficient {
            input: input.to_string(),
            output: output.to_string(),
            rank,
            expected,
        });
    }
    Ok(frame)
}

type Members<S> = (Vec<LinearProcess<S>>, Vec<String>);

fn deterministic_functions<S: Scalar>(input: SystemType, output: SystemType) -> Result<Members<S>> {
    let (n_in, n_out) = (input.dim(), output.dim());
    let count = (n_out as u64).checked_pow(n_in as u32).unwrap_or(u64::MAX);
    if count > MAX_FRAME_MEMBERS as u64 {
        return Err(Error::ProblemTooLarge(count as usize));
    }
    let radix = vec![n_out; n_in];
    let ins = Signature::new(vec![input]);
    let outs = Signature::new(vec![output]);
    let mut members = Vec::with_capacity(count as usize);
    let mut labels = Vec::with_capacity(count as usize);
    for k in 0..count as usize {
        let table = decode_index(k, &radix);
        let m = Matrix::from_fn(n_out, n_in, |o, x| if table[x] == o { S::one() } else { S::zero() });
        members.push(LinearProcess::new(ins.clone(), outs.clone(), m)?);
        let t: Vec<String> = table.iter().map(usize::to_string).collect();
        labels.push(format!("fn[{}]", t.join(",")));
    }
    Ok((members, labels))
}

fn measure_and_prepare<S: Scalar>(theory: Theory, input: SystemType, output: SystemType) -> Result<Members<S>> {
    let fin = theory.frames::<S>(&input)?;
    let fout = theory.frames::<S>(&output)?;
    let disc = theory.discard::<S>(&input)?.into_matrix().into_data();
    let sigma0 = theory.reference_state::<S>(&output)?.into_matrix().into_data();
    let ins = Signature::new(vec![input]);
    let outs = Signature::new(vec![output]);
    let outer = |s: &[S], e: &[S]| Matrix::from_fn(s.len(), e.len(), |r, c| s[r].clone() * e[c].clone());
    let mut members = vec![LinearProcess::new(ins.clone(), outs.clone(), outer(&sigma0, &disc))?];
    let mut labels = vec!["ref".to_string()];
    let effects: Vec<Vec<S>> = fin.effects.into_iter().map(|e| e.into_matrix().into_data()).collect();
    let states: Vec<(usize, Vec<S>)> = fout
        .states
        .into_iter()
        .map(|s| s.into_matrix().into_data())
        .enumerate()
        .filter(|(_, s)| *s != sigma0)
        .collect();
    for (j, e) in effects.iter().enumerate() {
        let rest: Vec<S> = disc.iter().zip(e).map(|(d, x)| d.clone() - x.clone()).collect();
        for (l, s) in &states {
            let m = outer(s, e).add(&outer(&sigma0, &rest));
            members.push(LinearProcess::new(ins.clone(), outs.clone(), m)?);
            labels.push(format!("mp[e{j},s{l}]"));
        }
    }
    Ok((members, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::compose_seq;
    use crate::scalar::Rational;

    #[test]
    fn bit_to_bit_has_four_functions() {
        let bit = SystemType::classical(2).unwrap();
        let f = labelled_frame::<Rational>(Theory::Stoch, bit, bit).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f.labels, vec!["fn[0,0]", "fn[0,1]", "fn[1,0]", "fn[1,1]"]);
    }

    #[test]
    fn qubit_frame_size_and_rank() {
        let q = SystemType::quantum(2).unwrap();
        let f = labelled_frame::<f64>(Theory::Quant, q, q).unwrap();
        assert_eq!(f.len(), 13);
        assert_eq!(expected_affine_rank(q, q), 12);
        let prep = labelled_frame::<f64>(Theory::Quant, SystemType::TRIVIAL, q).unwrap();
        assert_eq!(prep.len(), 4);
    }

    #[test]
    fn members_are_valid_and_discard_preserving() {
        let q = SystemType::quantum(2).unwrap();
        let c3 = SystemType::classical(3).unwrap();
        for (i, o) in [(q, q), (c3, q), (q, c3), (SystemType::TRIVIAL, q), (c3, c3)] {
            let f = labelled_frame::<f64>(Theory::Quant, i, o).unwrap();
            let d_in = Theory::Quant.discard::<f64>(&i).unwrap();
            let d_out = Theory::Quant.discard::<f64>(&o).unwrap();
            for m in &f.members {
                assert!(Theory::Quant.is_valid_channel(m, 1e-9).unwrap(), "{i} -> {o}");
                assert!(compose_seq(m, &d_out).unwrap().approx_eq(&d_in, 1e-12));
            }
        }
    }

    #[test]
    fn rational_quantum_frames_are_refused() {
        let q = SystemType::quantum(2).unwrap();
        assert!(matches!(
            labelled_frame::<Rational>(Theory::Quant, q, q),
            Err(Error::InexactArithmetic(..))
        ));
    }
}
