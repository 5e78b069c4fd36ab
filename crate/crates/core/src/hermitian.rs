//! Real coordinates for quantum systems.
//!
//! The operator basis for Hilbert dimension `d` is the generalized
//! Gell-Mann family normalized to `tr(B_j B_k) = δ_jk`, in this order:
//!
//! 1. `B_0 = I/√d`;
//! 2. for each pair `j < k` in lexicographic order, the symmetric element
//!    `(|j⟩⟨k| + |k⟩⟨j|)/√2` followed by the antisymmetric element
//!    `(−i|j⟩⟨k| + i|k⟩⟨j|)/√2`;
//! 3. for `l = 1..d−1`, the diagonal element
//!    `(Σ_{m<l} |m⟩⟨m| − l|l⟩⟨l|)/√(l(l+1))`.
//!
//! For a qubit this is `(I, X, Y, Z)/√2`. Composite quantum systems use the
//! Kronecker products of the factor bases, leftmost factor most
//! significant. A state `ρ` has coordinates `c_k = tr(B_k ρ)`; a map `Φ`
//! has transfer matrix `T_jk = tr(B_j Φ(B_k))`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::matrix::Matrix;

pub type CMatrix = DMatrix<Complex64>;

/// Identifier written into files that carry coordinates in this basis.
pub const BASIS_CONVENTION: &str = "gell-mann-normalized-v1";

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The ordered basis for one Hilbert space of dimension `d`.
pub fn gell_mann_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    basis.push(CMatrix::identity(d, d).map(|x| x / (d as f64).sqrt()));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, k)] = c(r, 0.0);
            sym[(k, j)] = c(r, 0.0);
            basis.push(sym);
            let mut anti = CMatrix::zeros(d, d);
            anti[(j, k)] = c(0.0, -r);
            anti[(k, j)] = c(0.0, r);
            basis.push(anti);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for m in 0..l {
            diag[(m, m)] = c(1.0 / norm, 0.0);
        }
        diag[(l, l)] = c(-(l as f64) / norm, 0.0);
        basis.push(diag);
    }
    basis
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Basis of a composite of Hilbert dimensions `dims` (empty ⇒ the 1×1 `[1]`).
pub fn composite_basis(dims: &[usize]) -> Vec<CMatrix> {
    let mut acc = vec![CMatrix::identity(1, 1)];
    for &d in dims {
        let factor = gell_mann_basis(d);
        acc = acc.iter().flat_map(|a| factor.iter().map(move |b| kron(a, b))).collect();
    }
    acc
}

pub fn coords_of(basis: &[CMatrix], op: &CMatrix) -> Vec<f64> {
    basis.iter().map(|b| (b * op).trace().re).collect()
}

pub fn operator_from(basis: &[CMatrix], coords: &[f64]) -> CMatrix {
    let d = basis[0].nrows();
    basis.iter().zip(coords).fold(CMatrix::zeros(d, d), |acc, (b, &x)| acc + b.map(|z| z * x))
}

/// Transfer matrix of `X ↦ Σ_k K_k X K_k†` between the given bases.
pub fn transfer_from_kraus(kraus: &[CMatrix], in_basis: &[CMatrix], out_basis: &[CMatrix]) -> Matrix<f64> {
    let images: Vec<CMatrix> = in_basis
        .iter()
        .map(|b| kraus.iter().fold(CMatrix::zeros(kraus[0].nrows(), kraus[0].nrows()), |acc, k| acc + k * b * k.adjoint()))
        .collect();
    Matrix::from_fn(out_basis.len(), in_basis.len(), |j, k| (&out_basis[j] * &images[k]).trace().re)
}

/// Choi operator `Σ_k conj(B_k) ⊗ Φ(B_k)` of a transfer matrix.
pub fn choi_from_transfer(t: &Matrix<f64>, in_basis: &[CMatrix], out_basis: &[CMatrix]) -> CMatrix {
    let d_in = in_basis[0].nrows();
    let d_out = out_basis[0].nrows();
    let mut choi = CMatrix::zeros(d_in * d_out, d_in * d_out);
    for (k, bk) in in_basis.iter().enumerate() {
        let coords: Vec<f64> = (0..out_basis.len()).map(|j| t[(j, k)]).collect();
        if coords.iter().all(|x| *x == 0.0) {
            continue;
        }
        let image = operator_from(out_basis, &coords);
        choi += kron(&bk.map(|z| z.conj()), &image);
    }
    choi
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    let sym = (h + h.adjoint()).map(|z| z * 0.5);
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(h: &CMatrix) -> f64 {
    if h.nrows() == 1 {
        return h[(0, 0)].re;
    }
    let sym = (h + h.adjoint()).map(|z| z * 0.5);
    sym.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Operator norm of a Hermitian matrix.
pub fn op_norm(h: &CMatrix) -> f64 {
    min_eigenvalue(h).abs().max(max_eigenvalue(h).abs())
}

pub fn ket(d: usize, i: usize) -> CMatrix {
    let mut v = CMatrix::zeros(d, 1);
    v[(i, 0)] = c(1.0, 0.0);
    v
}

pub fn projector(v: &CMatrix) -> CMatrix {
    v * v.adjoint()
}
