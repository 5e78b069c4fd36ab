//! Base theories embedded in real-linear maps: classical stochastic
//! processes, and quantum theory with classical wires (instruments).
//!
//! Validity of a *channel* means it is a valid deterministic process:
//! stochastic for classical wires, CPTP for quantum wires, and for hybrids
//! a family of CP blocks `Φ_{a|x}` with `Σ_a Φ_{a|x}` trace preserving.
//! [`Theory::is_valid_process`] relaxes determinism to trace
//! non-increasing, which is what states and effects satisfy.

use std::fmt;

use crate::error::{Error, Result};
use crate::hermitian::{choi_from_transfer, composite_basis, gell_mann_basis, min_eigenvalue, op_norm, operator_from};
use crate::matrix::Matrix;
use crate::process::{tensor_all, LinearProcess};
use crate::scalar::{negligible, nonnegative, within, Arithmetic, Scalar};
use crate::system::{decode_index, encode_index, Kind, Signature, SystemType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theory {
    /// Classical probability theory.
    Stoch,
    /// Finite-dimensional quantum theory together with classical wires.
    Quant,
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Spanning states and effects of one system type.
#[derive(Debug, Clone)]
pub struct Frames<S> {
    pub states: Vec<LinearProcess<S>>,
    pub effects: Vec<LinearProcess<S>>,
}

impl Theory {
    pub fn name(&self) -> &'static str {
        match self {
            Theory::Stoch => "Stoch",
            Theory::Quant => "Quant",
        }
    }

    pub fn classical_type(&self, n: usize) -> Result<SystemType> {
        SystemType::classical(n)
    }

    pub fn quantum_type(&self, d: usize) -> Result<SystemType> {
        match self {
            Theory::Stoch if d > 1 => Err(Error::WrongKind("Stoch has no quantum systems".into())),
            _ => SystemType::quantum(d),
        }
    }

    pub fn contains(&self, ty: &SystemType) -> bool {
        match ty.kind() {
            Kind::Classical => true,
            Kind::Quantum => *self == Theory::Quant,
            Kind::Extension => false,
        }
    }

    pub fn contains_signature(&self, sig: &Signature) -> bool {
        sig.wires().iter().all(|t| self.contains(t))
    }

    fn check_types<S: Scalar>(&self, p: &LinearProcess<S>) -> Result<()> {
        for t in p.inputs().wires().iter().chain(p.outputs().wires()) {
            if !self.contains(t) {
                return Err(Error::WrongKind(format!("{t} is not a system of {self}")));
            }
        }
        Ok(())
    }

    /// Channel validity (deterministic processes).
    pub fn is_valid_channel<S: Scalar>(&self, p: &LinearProcess<S>, tol: f64) -> Result<bool> {
        self.check_types(p)?;
        let all_classical = p.inputs().wires().iter().chain(p.outputs().wires()).all(SystemType::is_classical);
        if all_classical {
            return stoch_valid(p, tol);
        }
        let has_classical = p
            .inputs()
            .wires()
            .iter()
            .chain(p.outputs().wires())
            .any(|t| t.is_classical() && !t.is_trivial());
        if has_classical {
            Ok(hybrid_valid(p, tol))
        } else {
            quant_valid(p, tol)
        }
    }

    /// Validity of a possibly non-deterministic process (trace
    /// non-increasing).
    pub fn is_valid_process<S: Scalar>(&self, p: &LinearProcess<S>, tol: f64) -> Result<bool> {
        self.check_types(p)?;
        Ok(block_validity(p, tol, false))
    }

    pub fn discard<S: Scalar>(&self, ty: &SystemType) -> Result<LinearProcess<S>> {
        if !self.contains(ty) {
            return Err(Error::UnknownType(format!("{ty} in {self}")));
        }
        discard_row(ty)
    }

    pub fn discard_signature<S: Scalar>(&self, sig: &Signature) -> Result<LinearProcess<S>> {
        let parts = sig.wires().iter().map(|t| self.discard(t)).collect::<Result<Vec<_>>>()?;
        Ok(tensor_all(&parts))
    }

    /// Uniform distribution or maximally mixed state.
    pub fn reference_state<S: Scalar>(&self, ty: &SystemType) -> Result<LinearProcess<S>> {
        if !self.contains(ty) {
            return Err(Error::UnknownType(format!("{ty} in {self}")));
        }
        let sig = Signature::new(vec![*ty]);
        match ty.kind() {
            Kind::Classical => {
                let n = ty.dim() as i64;
                LinearProcess::state(sig, vec![S::from_ratio(1, n); ty.dim()])
            }
            _ => {
                let d = ty.dim();
                let mut v = vec![S::zero(); ty.vdim()];
                v[0] = S::one() / exact_sqrt::<S>(d)?;
                LinearProcess::state(sig, v)
            }
        }
    }

    pub fn reference_state_signature<S: Scalar>(&self, sig: &Signature) -> Result<LinearProcess<S>> {
        let parts = sig.wires().iter().map(|t| self.reference_state(t)).collect::<Result<Vec<_>>>()?;
        Ok(tensor_all(&parts))
    }

    /// Spanning states and effects. Classical: point distributions and
    /// indicator rows. Quantum: `I/d`, `(I + B̂_k)/d` and the trace,
    /// `(I + B̂_k)/2`, where `B̂_k = B_k/‖B_k‖_op`.
    pub fn frames<S: Scalar>(&self, ty: &SystemType) -> Result<Frames<S>> {
        if !self.contains(ty) {
            return Err(Error::UnknownType(format!("{ty} in {self}")));
        }
        let sig = Signature::new(vec![*ty]);
        match ty.kind() {
            Kind::Classical => {
                let n = ty.dim();
                let unit = |j: usize| (0..n).map(|i| if i == j { S::one() } else { S::zero() }).collect::<Vec<_>>();
                let states = (0..n).map(|j| LinearProcess::state(sig.clone(), unit(j))).collect::<Result<_>>()?;
                let effects = (0..n).map(|j| LinearProcess::effect(sig.clone(), unit(j))).collect::<Result<_>>()?;
                Ok(Frames { states, effects })
            }
            _ => {
                if S::ARITHMETIC == Arithmetic::Rational {
                    return Err(Error::InexactArithmetic("rational", format!("frames of {ty}")));
                }
                let d = ty.dim();
                let basis = gell_mann_basis(d);
                let n = d * d;
                let sd = (d as f64).sqrt();
                let mut states = Vec::with_capacity(n);
                let mut effects = Vec::with_capacity(n);
                let mut v0 = vec![0.0; n];
                v0[0] = 1.0 / sd;
                states.push(v0);
                let mut e0 = vec![0.0; n];
                e0[0] = sd;
                effects.push(e0);
                for (k, bk) in basis.iter().enumerate().skip(1) {
                    let norm = op_norm(bk);
                    let mut s = vec![0.0; n];
                    s[0] = 1.0 / sd;
                    s[k] = 1.0 / (norm * d as f64);
                    states.push(s);
                    let mut e = vec![0.0; n];
                    e[0] = sd / 2.0;
                    e[k] = 1.0 / (2.0 * norm);
                    effects.push(e);
                }
                let conv = |v: Vec<f64>| v.into_iter().map(|x| S::try_from_f64(x).expect("finite")).collect::<Vec<S>>();
                Ok(Frames {
                    states: states.into_iter().map(|v| LinearProcess::state(sig.clone(), conv(v))).collect::<Result<_>>()?,
                    effects: effects.into_iter().map(|v| LinearProcess::effect(sig.clone(), conv(v))).collect::<Result<_>>()?,
                })
            }
        }
    }

    /// Embeds a classical stochastic map as a decoherent quantum channel:
    /// diagonal in, diagonal out.
    pub fn decoherent_embedding(stochastic: &Matrix<f64>) -> Result<LinearProcess<f64>> {
        let (n_out, n_in) = stochastic.shape();
        let qin = SystemType::quantum(n_in)?;
        let qout = SystemType::quantum(n_out)?;
        let bin = gell_mann_basis(n_in);
        let bout = gell_mann_basis(n_out);
        let t = Matrix::from_fn(n_out * n_out, n_in * n_in, |j, k| {
            // Φ(X) = Σ_{a,x} S[a,x] ⟨x|X|x⟩ |a⟩⟨a|
            let mut image = crate::hermitian::CMatrix::zeros(n_out, n_out);
            for x in 0..n_in {
                let diag = bin[k][(x, x)];
                for a in 0..n_out {
                    image[(a, a)] += diag * stochastic[(a, x)];
                }
            }
            (&bout[j] * image).trace().re
        });
        LinearProcess::new(Signature::new(vec![qin]), Signature::new(vec![qout]), t)
    }
}

fn exact_sqrt<S: Scalar>(d: usize) -> Result<S> {
    S::from_int(d as i64)
        .sqrt()
        .ok_or_else(|| Error::InexactArithmetic(S::ARITHMETIC.as_str(), format!("sqrt({d})")))
}

fn discard_row<S: Scalar>(ty: &SystemType) -> Result<LinearProcess<S>> {
    let sig = Signature::new(vec![*ty]);
    match ty.kind() {
        Kind::Quantum => {
            let mut row = vec![S::zero(); ty.vdim()];
            row[0] = exact_sqrt::<S>(ty.dim())?;
            LinearProcess::effect(sig, row)
        }
        _ => LinearProcess::effect(sig, vec![S::one(); ty.vdim()]),
    }
}

/// Classical-only validity: entries in `[0, 1]`, columns summing to 1.
pub fn stoch_valid<S: Scalar>(p: &LinearProcess<S>, tol: f64) -> Result<bool> {
    if let Some(t) = p.inputs().wires().iter().chain(p.outputs().wires()).find(|t| !t.is_classical()) {
        return Err(Error::WrongKind(format!("stoch_valid on non-classical wire {t}")));
    }
    let m = p.matrix();
    for c in 0..m.cols() {
        let mut sum = S::zero();
        for r in 0..m.rows() {
            let x = &m[(r, c)];
            if !nonnegative(x, tol) || !nonnegative(&(S::one() - x.clone()), tol) {
                return Ok(false);
            }
            sum = sum + x.clone();
        }
        if !within(&sum, &S::one(), tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Quantum-only validity: trace preserving and completely positive.
pub fn quant_valid<S: Scalar>(p: &LinearProcess<S>, tol: f64) -> Result<bool> {
    if let Some(t) = p
        .inputs()
        .wires()
        .iter()
        .chain(p.outputs().wires())
        .find(|t| !(t.is_quantum() || t.is_trivial()))
    {
        return Err(Error::WrongKind(format!("quant_valid on non-quantum wire {t}")));
    }
    Ok(block_validity(p, tol, true))
}

/// Instrument validity for mixed classical/quantum signatures.
pub fn hybrid_valid<S: Scalar>(p: &LinearProcess<S>, tol: f64) -> bool {
    let base_only = p
        .inputs()
        .wires()
        .iter()
        .chain(p.outputs().wires())
        .all(|t| !t.is_extension());
    base_only && block_validity(p, tol, true)
}

/// Blocks `Φ_{a|x}` of a hybrid process: classical digits select the block,
/// quantum digits index the transfer matrix.
pub(crate) struct Blocks {
    pub q_in: Vec<usize>,
    pub q_out: Vec<usize>,
    /// `blocks[x][a]`
    pub blocks: Vec<Vec<Matrix<f64>>>,
}

pub(crate) fn slice_blocks<S: Scalar>(p: &LinearProcess<S>) -> Blocks {
    let split = |sig: &Signature| {
        let dims = sig.dims();
        let cl: Vec<usize> = (0..sig.len()).filter(|&i| !sig.wires()[i].is_quantum()).collect();
        let qu: Vec<usize> = (0..sig.len()).filter(|&i| sig.wires()[i].is_quantum()).collect();
        (dims, cl, qu)
    };
    let (in_dims, in_cl, in_qu) = split(p.inputs());
    let (out_dims, out_cl, out_qu) = split(p.outputs());
    let pick = |dims: &[usize], idx: &[usize]| idx.iter().map(|&i| dims[i]).collect::<Vec<_>>();
    let in_cl_dims = pick(&in_dims, &in_cl);
    let in_qu_dims = pick(&in_dims, &in_qu);
    let out_cl_dims = pick(&out_dims, &out_cl);
    let out_qu_dims = pick(&out_dims, &out_qu);
    let nx: usize = in_cl_dims.iter().product();
    let na: usize = out_cl_dims.iter().product();
    let kin: usize = in_qu_dims.iter().product();
    let kout: usize = out_qu_dims.iter().product();
    let m = p.matrix();
    let mut blocks = vec![vec![Matrix::<f64>::zeros(kout, kin); na]; nx];
    for col in 0..m.cols() {
        let d = decode_index(col, &in_dims);
        let x = encode_index(&in_cl.iter().map(|&i| d[i]).collect::<Vec<_>>(), &in_cl_dims);
        let k = encode_index(&in_qu.iter().map(|&i| d[i]).collect::<Vec<_>>(), &in_qu_dims);
        for row in 0..m.rows() {
            let v = &m[(row, col)];
            if v.is_zero() {
                continue;
            }
            let e = decode_index(row, &out_dims);
            let a = encode_index(&out_cl.iter().map(|&i| e[i]).collect::<Vec<_>>(), &out_cl_dims);
            let j = encode_index(&out_qu.iter().map(|&i| e[i]).collect::<Vec<_>>(), &out_qu_dims);
            blocks[x][a][(j, k)] = v.as_f64();
        }
    }
    let hilbert = |sig: &Signature, idx: &[usize]| idx.iter().map(|&i| sig.wires()[i].dim()).collect::<Vec<_>>();
    Blocks { q_in: hilbert(p.inputs(), &in_qu), q_out: hilbert(p.outputs(), &out_qu), blocks }
}

/// Every block CP, and per classical input either trace preserving
/// (`deterministic`) or trace non-increasing.
fn block_validity<S: Scalar>(p: &LinearProcess<S>, tol: f64, deterministic: bool) -> bool {
    if p.inputs().has_extension() || p.outputs().has_extension() {
        return false;
    }
    // Exact path for purely classical processes.
    let classical = p.inputs().wires().iter().chain(p.outputs().wires()).all(SystemType::is_classical);
    if classical {
        let m = p.matrix();
        return (0..m.cols()).all(|c| {
            let mut sum = S::zero();
            for r in 0..m.rows() {
                if !nonnegative(&m[(r, c)], tol) {
                    return false;
                }
                sum = sum + m[(r, c)].clone();
            }
            if deterministic {
                within(&sum, &S::one(), tol)
            } else {
                nonnegative(&(S::one() - sum), tol)
            }
        });
    }
    let b = slice_blocks(p);
    let in_basis = composite_basis(&b.q_in);
    let out_basis = composite_basis(&b.q_out);
    let sd_in = (b.q_in.iter().product::<usize>() as f64).sqrt();
    let sd_out = (b.q_out.iter().product::<usize>() as f64).sqrt();
    let kin = in_basis.len();
    for per_x in &b.blocks {
        // deficit effect: discard_in − Σ_a discard_out · Φ_{a|x}
        let mut deficit = vec![0.0; kin];
        deficit[0] = sd_in;
        for block in per_x {
            if min_eigenvalue(&choi_from_transfer(block, &in_basis, &out_basis)) < -tol {
                return false;
            }
            for (k, d) in deficit.iter_mut().enumerate() {
                *d -= sd_out * block[(0, k)];
            }
        }
        if deterministic {
            if deficit.iter().any(|d| !negligible(d, tol)) {
                return false;
            }
        } else if min_eigenvalue(&operator_from(&in_basis, &deficit)) < -tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{ket, projector, transfer_from_kraus, CMatrix};
    use crate::process::compose_seq;
    use crate::scalar::Rational;
    use num_complex::Complex64;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn cl(n: usize) -> Signature {
        Signature::new(vec![SystemType::classical(n).unwrap()])
    }

    fn qb() -> Signature {
        Signature::new(vec![SystemType::quantum(2).unwrap()])
    }

    #[test]
    fn stochastic_examples() {
        let ok = LinearProcess::new(cl(2), cl(2), Matrix::from_rows(&[vec![q(1, 2), q(1, 3)], vec![q(1, 2), q(2, 3)]]))
            .unwrap();
        assert!(stoch_valid(&ok, 0.0).unwrap());
        let det = LinearProcess::new(cl(2), cl(2), Matrix::from_rows(&[vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(0, 1)]]))
            .unwrap();
        assert!(stoch_valid(&det, 0.0).unwrap());
        let bad = LinearProcess::new(cl(2), cl(2), Matrix::from_rows(&[vec![q(2, 1), q(-1, 1)], vec![q(-1, 1), q(2, 1)]]))
            .unwrap();
        assert!(!stoch_valid(&bad, 0.0).unwrap());
        let quantum = LinearProcess::<f64>::identity(qb());
        assert!(matches!(stoch_valid(&quantum, 1e-9), Err(Error::WrongKind(_))));
    }

    #[test]
    fn quantum_examples() {
        let id = LinearProcess::new(qb(), qb(), Matrix::<f64>::identity(4)).unwrap();
        assert!(quant_valid(&id, 1e-9).unwrap());
        let mut t = Matrix::<f64>::identity(4);
        t[(2, 2)] = -1.0;
        let transpose = LinearProcess::new(qb(), qb(), t).unwrap();
        assert!(!quant_valid(&transpose, 1e-9).unwrap());
        let mut dep = Matrix::<f64>::zeros(4, 4);
        dep[(0, 0)] = 1.0;
        let depol = LinearProcess::new(qb(), qb(), dep).unwrap();
        assert!(quant_valid(&depol, 1e-9).unwrap());
    }

    #[test]
    fn discard_rows() {
        let d: LinearProcess<Rational> = Theory::Stoch.discard(&SystemType::classical(3).unwrap()).unwrap();
        assert_eq!(d.matrix().data(), &[q(1, 1), q(1, 1), q(1, 1)]);
        let dq: LinearProcess<f64> = Theory::Quant.discard(&SystemType::quantum(2).unwrap()).unwrap();
        assert!((dq.matrix()[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
        assert!(dq.matrix().data()[1..].iter().all(|x| *x == 0.0));
        let r: Result<LinearProcess<Rational>> = Theory::Quant.discard(&SystemType::quantum(2).unwrap());
        assert!(matches!(r, Err(Error::InexactArithmetic(..))));
        assert!(Theory::Stoch.discard::<f64>(&SystemType::quantum(2).unwrap()).is_err());
    }

    #[test]
    fn measurement_is_hybrid_valid() {
        let b = gell_mann_basis(2);
        // ρ ↦ (⟨0|ρ|0⟩, ⟨1|ρ|1⟩)
        let m = Matrix::from_fn(2, 4, |a, k| b[k][(a, a)].re);
        let meas = LinearProcess::new(qb(), cl(2), m).unwrap();
        assert!(hybrid_valid(&meas, 1e-9));
        assert!(Theory::Quant.is_valid_channel(&meas, 1e-9).unwrap());
    }

    #[test]
    fn controlled_channels() {
        // δ_k-controlled: k=0 identity, k=1 full dephasing (or transpose).
        let b = gell_mann_basis(2);
        let deph: Vec<CMatrix> = (0..2).map(|i| projector(&ket(2, i))).collect();
        let t_deph = transfer_from_kraus(&deph, &b, &b);
        let mut t_transpose = Matrix::<f64>::identity(4);
        t_transpose[(2, 2)] = -1.0;
        let build = |second: &Matrix<f64>| {
            let sig_in = Signature::new(vec![SystemType::quantum(2).unwrap(), SystemType::classical(2).unwrap()]);
            let m = Matrix::from_fn(4, 8, |j, col| {
                let (k, ctl) = (col / 2, col % 2);
                if ctl == 0 {
                    if j == k { 1.0 } else { 0.0 }
                } else {
                    second[(j, k)]
                }
            });
            LinearProcess::new(sig_in, qb(), m).unwrap()
        };
        assert!(hybrid_valid(&build(&t_deph), 1e-9));
        assert!(!hybrid_valid(&build(&t_transpose), 1e-9));
    }

    #[test]
    fn frames_span_and_are_normalized() {
        for ty in [SystemType::classical(3).unwrap(), SystemType::quantum(2).unwrap(), SystemType::quantum(3).unwrap()] {
            let th = Theory::Quant;
            let f: Frames<f64> = th.frames(&ty).unwrap();
            let disc: LinearProcess<f64> = th.discard(&ty).unwrap();
            assert_eq!(f.states.len(), ty.vdim());
            let sm: Vec<Vec<f64>> = f.states.iter().map(|s| s.matrix().data().to_vec()).collect();
            let em: Vec<Vec<f64>> = f.effects.iter().map(|e| e.matrix().data().to_vec()).collect();
            assert_eq!(crate::matrix::rank_of(&sm, 1e-10), ty.vdim());
            assert_eq!(crate::matrix::rank_of(&em, 1e-10), ty.vdim());
            let pairing = Matrix::from_rows(&em).matmul(&Matrix::from_rows(&sm).transpose());
            assert!(pairing.inverse(1e-10).is_some());
            for s in &f.states {
                let norm = compose_seq(s, &disc).unwrap().scalar_value().unwrap();
                assert!((norm - 1.0).abs() < 1e-12);
                assert!(th.is_valid_process(s, 1e-9).unwrap());
                for e in &f.effects {
                    let v = compose_seq(s, e).unwrap().scalar_value().unwrap();
                    assert!((-1e-12..=1.0 + 1e-12).contains(&v));
                }
            }
            for e in &f.effects {
                assert!(th.is_valid_process(e, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn decoherent_embedding_is_cptp() {
        let s = Matrix::from_rows(&[vec![0.5, 1.0 / 3.0], vec![0.5, 2.0 / 3.0]]);
        let ch = Theory::decoherent_embedding(&s).unwrap();
        assert!(quant_valid(&ch, 1e-9).unwrap());
        let _ = Complex64::new(0.0, 0.0);
    }
}
