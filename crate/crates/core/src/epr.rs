//! EPR assemblages as non-signalling quantum-classical channels.
//!
//! Untrusted parties `1..m−1` each choose a classical setting and report a
//! classical outcome; the trusted party holds a quantum system and has no
//! input (a trivial wire). The channel sends `δ_x⃗` to
//! `Σ_a⃗ δ_a⃗ ⊗ σ_{a⃗|x⃗}`.

use crate::completion::GeneratedTheory;
use crate::decompose::CommonCauseRealization;
use crate::error::{Error, Result};
use crate::hermitian::{coords_of, gell_mann_basis, ket, min_eigenvalue, operator_from, projector, CMatrix};
use crate::matrix::Matrix;
use crate::ns::{check_nonsignalling, MultipartiteChannel, Wing};
use crate::process::LinearProcess;
use crate::system::{decode_index, encode_index, SystemType};
use crate::theory::Theory;

/// Settings and outcomes of one untrusted party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Party {
    pub settings: usize,
    pub outcomes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    pub parties: Vec<Party>,
    /// Hilbert dimension of the trusted system.
    pub dim: usize,
    /// `elements[x][a]`: coordinates of `σ_{a|x}` in the trace-orthonormal
    /// basis, with `x` and `a` the mixed-radix codes of the setting and
    /// outcome tuples (first party most significant).
    pub elements: Vec<Vec<Vec<f64>>>,
}

impl Assemblage {
    /// Builds from operators and checks every invariant.
    pub fn from_operators(parties: Vec<Party>, dim: usize, ops: &[Vec<CMatrix>], tol: f64) -> Result<Self> {
        let basis = gell_mann_basis(dim);
        let elements = ops.iter().map(|row| row.iter().map(|s| coords_of(&basis, s)).collect()).collect();
        let asm = Assemblage { parties, dim, elements };
        asm.validate(tol)?;
        Ok(asm)
    }

    pub fn settings(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.settings).collect()
    }

    pub fn outcomes(&self) -> Vec<usize> {
        self.parties.iter().map(|p| p.outcomes).collect()
    }

    pub fn element(&self, x: &[usize], a: &[usize]) -> &[f64] {
        &self.elements[encode_index(x, &self.settings())][encode_index(a, &self.outcomes())]
    }

    pub fn operator(&self, x: usize, a: usize) -> CMatrix {
        operator_from(&gell_mann_basis(self.dim), &self.elements[x][a])
    }

    fn check_shape(&self) -> Result<()> {
        if self.parties.is_empty() || self.dim < 2 {
            return Err(Error::InvalidAssemblage("need at least one untrusted party and a quantum trusted system".into()));
        }
        if self.parties.iter().any(|p| p.settings == 0 || p.outcomes == 0) {
            return Err(Error::InvalidAssemblage("setting and outcome counts must be positive".into()));
        }
        let (nx, na, v): (usize, usize, usize) = (self.settings().iter().product(), self.outcomes().iter().product(), self.dim * self.dim);
        if self.elements.len() != nx || self.elements.iter().any(|r| r.len() != na || r.iter().any(|e| e.len() != v)) {
            return Err(Error::InvalidAssemblage(format!("shape: expected {nx} settings × {na} outcomes × {v} coordinates")));
        }
        Ok(())
    }

    /// Positivity, normalization and no-signalling for every nonempty set
    /// of untrusted parties.
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_shape()?;
        let basis = gell_mann_basis(self.dim);
        let tr = |e: &[f64]| e[0] * (self.dim as f64).sqrt();
        for (x, row) in self.elements.iter().enumerate() {
            for (a, e) in row.iter().enumerate() {
                let lam = min_eigenvalue(&operator_from(&basis, e));
                if lam < -tol {
                    return Err(Error::InvalidAssemblage(format!("positivity: σ[a={a}|x={x}] has eigenvalue {lam}")));
                }
            }
            let total: f64 = row.iter().map(|e| tr(e)).sum();
            if (total - 1.0).abs() > tol {
                return Err(Error::InvalidAssemblage(format!("normalization: Σ_a tr σ[a|x={x}] = {total}")));
            }
        }
        let m = self.parties.len();
        for mask in 1usize..1 << m {
            let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            let dev = self.marginal_deviation(&subset);
            if dev > tol {
                return Err(Error::InvalidAssemblage(format!(
                    "no-signalling: summing outcomes of parties {subset:?} leaves a dependence on their settings ({dev})"
                )));
            }
        }
        Ok(())
    }

    /// Largest change of `Σ_{a_K} σ_{a|x}` under a change of `x_K`.
    fn marginal_deviation(&self, subset: &[usize]) -> f64 {
        let (sx, sa) = (self.settings(), self.outcomes());
        let nx: usize = sx.iter().product();
        let na: usize = sa.iter().product();
        let v = self.dim * self.dim;
        let mut worst = 0.0f64;
        // marginal indexed by (x with x_K zeroed, a with a_K zeroed)
        let mut reference: std::collections::BTreeMap<(Vec<usize>, Vec<usize>), Vec<f64>> = Default::default();
        let mut sums: std::collections::BTreeMap<(Vec<usize>, Vec<usize>), Vec<f64>> = Default::default();
        for x in 0..nx {
            let xd = decode_index(x, &sx);
            for a in 0..na {
                let ad = decode_index(a, &sa);
                let mut ak = ad.clone();
                for &i in subset {
                    ak[i] = 0;
                }
                let e = sums.entry((xd.clone(), ak)).or_insert_with(|| vec![0.0; v]);
                for (s, y) in e.iter_mut().zip(&self.elements[x][a]) {
                    *s += y;
                }
            }
        }
        for ((xd, ak), s) in sums {
            let mut xk = xd.clone();
            for &i in subset {
                xk[i] = 0;
            }
            match reference.get(&(xk.clone(), ak.clone())) {
                Some(r) => {
                    for (p, q) in r.iter().zip(&s) {
                        worst = worst.max((p - q).abs());
                    }
                }
                None => {
                    reference.insert((xk, ak), s);
                }
            }
        }
        worst
    }

    fn wings(&self) -> Result<Vec<Wing>> {
        let mut wings = self
            .parties
            .iter()
            .map(|p| Ok(Wing::new(SystemType::classical(p.settings)?, SystemType::classical(p.outcomes)?)))
            .collect::<Result<Vec<_>>>()?;
        wings.push(Wing::new(SystemType::TRIVIAL, SystemType::quantum(self.dim)?));
        Ok(wings)
    }

    /// The channel body without any assemblage checks; row `a·d² + k`,
    /// column `x`.
    pub fn encode_unchecked(&self, tol: f64) -> Result<MultipartiteChannel<f64>> {
        self.check_shape()?;
        let v = self.dim * self.dim;
        let nx = self.elements.len();
        let na = self.elements[0].len();
        let m = Matrix::from_fn(na * v, nx, |row, col| self.elements[col][row / v][row % v]);
        MultipartiteChannel::from_matrix(Theory::Quant, self.wings()?, m, tol)
    }
}

/// Validates the assemblage and encodes it as an `m`-partite channel.
pub fn assemblage_to_channel(asm: &Assemblage, tol: f64) -> Result<MultipartiteChannel<f64>> {
    asm.validate(tol)?;
    let ch = asm.encode_unchecked(tol)?;
    let report = check_nonsignalling(&ch, tol);
    if !report.verdict {
        return Err(Error::InvalidAssemblage(format!("encoded channel signals ({})", report.max_residual())));
    }
    Ok(ch)
}

/// Reads an assemblage back from a channel body shaped like the output of
/// [`assemblage_to_channel`].
pub fn extract_assemblage(body: &LinearProcess<f64>) -> Result<Assemblage> {
    let (ins, outs) = (body.inputs().wires(), body.outputs().wires());
    let bad = || Error::SignatureMismatch(format!("{} -> {} is not an assemblage channel", body.inputs(), body.outputs()));
    let (Some(trusted), Some(last_in)) = (outs.last(), ins.last()) else { return Err(bad()) };
    if ins.len() != outs.len() || !last_in.is_trivial() || !trusted.is_quantum() {
        return Err(bad());
    }
    let n = ins.len() - 1;
    if ins[..n].iter().chain(&outs[..n]).any(|t| !t.is_classical()) {
        return Err(bad());
    }
    let parties: Vec<Party> = (0..n).map(|i| Party { settings: ins[i].dim(), outcomes: outs[i].dim() }).collect();
    let v = trusted.vdim();
    let mat = body.matrix();
    let nx: usize = parties.iter().map(|p| p.settings).product();
    let na: usize = parties.iter().map(|p| p.outcomes).product();
    let elements = (0..nx).map(|x| (0..na).map(|a| (0..v).map(|k| mat[(a * v + k, x)]).collect()).collect()).collect();
    Ok(Assemblage { parties, dim: trusted.dim(), elements })
}

/// Largest coordinate difference between two assemblages of equal shape.
pub fn assemblage_distance(a: &Assemblage, b: &Assemblage) -> Result<f64> {
    if a.parties != b.parties || a.dim != b.dim {
        return Err(Error::SignatureMismatch("assemblages differ in shape".into()));
    }
    Ok(a.elements
        .iter()
        .flatten()
        .flatten()
        .zip(b.elements.iter().flatten().flatten())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// Encodes, registers in `gt` and returns the verified realization.
pub fn realize_assemblage(gt: &mut GeneratedTheory<f64>, asm: &Assemblage) -> Result<(u64, CommonCauseRealization<f64>)> {
    if gt.base() != Theory::Quant {
        return Err(Error::WrongKind("assemblages are realized in C[Quant]".into()));
    }
    let ch = assemblage_to_channel(asm, gt.tol())?;
    let id = gt.register(ch)?;
    Ok((id, gt.registration(id)?.realization.clone()))
}

fn plus_minus(s: f64) -> CMatrix {
    let mut v = ket(2, 0) + ket(2, 1).map(|z| z * s);
    v /= num_complex::Complex64::new(2f64.sqrt(), 0.0);
    projector(&v)
}

/// `σ_{a|0} = ½|a⟩⟨a|`, `σ_{a|1} = ½|±⟩⟨±|`.
pub fn bb84() -> Result<Assemblage> {
    let half = |m: CMatrix| m.map(|z| z * 0.5);
    let ops = vec![
        vec![half(projector(&ket(2, 0))), half(projector(&ket(2, 1)))],
        vec![half(plus_minus(1.0)), half(plus_minus(-1.0))],
    ];
    Assemblage::from_operators(vec![Party { settings: 2, outcomes: 2 }; 1], 2, &ops, 1e-12)
}

/// A one-party assemblage with no steering: `σ_{a|x} = p(a|x)·ρ`, with
/// `p(0|0) = 3/4`, `p(0|1) = 1/3` and `ρ = (I + Z/2)/2`.
pub fn unsteerable() -> Result<Assemblage> {
    let p = [[0.75, 0.25], [1.0 / 3.0, 2.0 / 3.0]];
    let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        num_complex::Complex64::new(0.75, 0.0),
        num_complex::Complex64::new(0.25, 0.0),
    ]));
    let ops: Vec<Vec<CMatrix>> = p.iter().map(|row| row.iter().map(|q| rho.map(|z| z * *q)).collect()).collect();
    Assemblage::from_operators(vec![Party { settings: 2, outcomes: 2 }], 2, &ops, 1e-12)
}

/// Two untrusted parties sharing PR-box statistics, the trusted qubit in a
/// fixed state: `σ_{ab|xy} = P_PR(ab|xy)·ρ`.
pub fn pr_tripartite() -> Result<Assemblage> {
    let rho = CMatrix::from_row_slice(
        2,
        2,
        &[
            num_complex::Complex64::new(0.7, 0.0),
            num_complex::Complex64::new(0.2, -0.1),
            num_complex::Complex64::new(0.2, 0.1),
            num_complex::Complex64::new(0.3, 0.0),
        ],
    );
    let ops: Vec<Vec<CMatrix>> = (0..4)
        .map(|xy| {
            let (x, y) = (xy / 2, xy % 2);
            (0..4)
                .map(|ab| {
                    let (a, b) = (ab / 2, ab % 2);
                    let p = if (a ^ b) == (x & y) { 0.5 } else { 0.0 };
                    rho.map(|z| z * p)
                })
                .collect()
        })
        .collect();
    Assemblage::from_operators(vec![Party { settings: 2, outcomes: 2 }; 2], 2, &ops, 1e-12)
}
