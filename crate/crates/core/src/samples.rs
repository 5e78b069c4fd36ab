//! Channel constructions and seeded random instances: common-cause
//! channels, the PR box, signalling controls, random CPTP maps.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::hermitian::{composite_basis, coords_of, transfer_from_kraus, CMatrix};
use crate::matrix::Matrix;
use crate::ns::{MultipartiteChannel, Wing};
use crate::process::{compose_par, compose_seq, tensor_all, LinearProcess};
use crate::scalar::{Rational, Scalar};
use crate::system::{Signature, SystemType};
use crate::theory::Theory;

/// Local processes applied to a shared state:
/// `(⊗ T_i) ∘ interleave ∘ (id_inputs ⊗ shared)`, where
/// `T_i : i ⊗ h_i → i′` and `shared : I → ⊗ h_i`.
pub fn common_cause_channel<S: Scalar>(
    theory: Theory,
    shared: &LinearProcess<S>,
    locals: &[LinearProcess<S>],
    tol: f64,
) -> Result<MultipartiteChannel<S>> {
    let m = locals.len();
    let wings: Vec<Wing> = locals
        .iter()
        .map(|t| Wing::new(t.inputs().wires()[0], t.outputs().wires()[0]))
        .collect();
    let ins = Signature::new(wings.iter().map(|w| w.input).collect());
    let lifted = compose_par(&LinearProcess::identity(ins.clone()), shared);
    let interleave: Vec<usize> = (0..m).flat_map(|i| [i, m + i]).collect();
    let p = LinearProcess::permutation(lifted.outputs().clone(), &interleave)?;
    let body = compose_seq(&compose_seq(&lifted, &p)?, &tensor_all(locals))?;
    MultipartiteChannel::new(theory, wings, body, tol)
}

/// Column-stochastic matrix with small-denominator rational entries.
pub fn random_stochastic_rational<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<Rational> {
    let mut m = Matrix::zeros(rows, cols);
    for c in 0..cols {
        let weights: Vec<i64> = loop {
            let w: Vec<i64> = (0..rows).map(|_| rng.gen_range(0..5)).collect();
            if w.iter().sum::<i64>() > 0 {
                break w;
            }
        };
        let total: i64 = weights.iter().sum();
        for (r, w) in weights.into_iter().enumerate() {
            m[(r, c)] = Rational::from_ratio(w, total);
        }
    }
    m
}

pub fn random_stochastic_float<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(rows, cols);
    for c in 0..cols {
        let w: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        for (r, x) in w.into_iter().enumerate() {
            m[(r, c)] = x / total;
        }
    }
    m
}

/// Random classical common-cause channel: wing dims `(in, out)`, hidden
/// variable of dimension `hidden` per wing.
pub fn random_classical_common_cause<R: Rng>(
    rng: &mut R,
    wings: &[(usize, usize)],
    hidden: usize,
) -> Result<MultipartiteChannel<Rational>> {
    let h = SystemType::classical(hidden)?;
    let shared_sig = Signature::new(vec![h; wings.len()]);
    let shared = LinearProcess::new(
        Signature::empty(),
        shared_sig.clone(),
        random_stochastic_rational(rng, shared_sig.total_dim(), 1),
    )?;
    let locals = wings
        .iter()
        .map(|&(i, o)| {
            let input = Signature::new(vec![SystemType::classical(i)?, h]);
            let output = Signature::new(vec![SystemType::classical(o)?]);
            LinearProcess::new(input, output, random_stochastic_rational(rng, o, i * hidden))
        })
        .collect::<Result<Vec<_>>>()?;
    common_cause_channel(Theory::Stoch, &shared, &locals, 0.0)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

/// Random full-rank density matrix (Ginibre ensemble).
pub fn random_density<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let g = complex_gaussian(rng, d, d);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho.map(|z| z / tr)
}

/// Random isometry `C^{d_in} → C^{d_out} ⊗ C^{env}` split into Kraus
/// operators `K_e[o, i] = V[o·env + e, i]`.
pub fn random_kraus<R: Rng>(rng: &mut R, d_in: usize, d_out: usize, env: usize) -> Vec<CMatrix> {
    let g = complex_gaussian(rng, d_out * env, d_in);
    let v = g.qr().q();
    (0..env)
        .map(|e| DMatrix::from_fn(d_out, d_in, |o, i| v[(o * env + e, i)]))
        .collect()
}

/// Transfer matrix of a random CPTP map between composite quantum systems.
pub fn random_cptp<R: Rng>(rng: &mut R, in_dims: &[usize], out_dims: &[usize], env: usize) -> Matrix<f64> {
    let d_in: usize = in_dims.iter().product();
    let d_out: usize = out_dims.iter().product();
    let kraus = random_kraus(rng, d_in, d_out, env);
    transfer_from_kraus(&kraus, &composite_basis(in_dims), &composite_basis(out_dims))
}

pub fn density_coords(rho: &CMatrix, dims: &[usize]) -> Vec<f64> {
    coords_of(&composite_basis(dims), rho)
}

/// Random quantum common-cause channel on qubit wings: a random shared
/// state of one qubit per wing and random local CPTP maps.
pub fn random_quantum_common_cause<R: Rng>(rng: &mut R, parties: usize) -> Result<MultipartiteChannel<f64>> {
    let q = SystemType::quantum(2)?;
    let dims = vec![2; parties];
    let rho = random_density(rng, 1 << parties);
    let shared = LinearProcess::state(Signature::new(vec![q; parties]), density_coords(&rho, &dims))?;
    let locals = (0..parties)
        .map(|_| {
            let t = random_cptp(rng, &[2, 2], &[2], 2);
            LinearProcess::new(Signature::new(vec![q, q]), Signature::new(vec![q]), t)
        })
        .collect::<Result<Vec<_>>>()?;
    common_cause_channel(Theory::Quant, &shared, &locals, 1e-9)
}

/// Popescu-Rohrlich box: `P(ab|xy) = 1/2` iff `a ⊕ b = x·y`.
pub fn pr_box<S: Scalar>() -> Result<MultipartiteChannel<S>> {
    let bit = SystemType::classical(2)?;
    let m = Matrix::from_fn(4, 4, |row, col| {
        let (a, b) = (row / 2, row % 2);
        let (x, y) = (col / 2, col % 2);
        if (a ^ b) == (x & y) { S::from_ratio(1, 2) } else { S::zero() }
    });
    MultipartiteChannel::from_matrix(Theory::Stoch, vec![Wing::new(bit, bit); 2], m, S::default_tol())
}

/// Noisy PR box `v·PR + (1−v)·uniform`.
pub fn noisy_pr_box<S: Scalar>(visibility: S) -> Result<MultipartiteChannel<S>> {
    let pr = pr_box::<S>()?;
    let m = pr.body().matrix().map(|x| {
        x.clone() * visibility.clone() + (S::one() - visibility.clone()) * S::from_ratio(1, 4)
    });
    MultipartiteChannel::from_matrix(Theory::Stoch, pr.wings().to_vec(), m, S::default_tol())
}

/// Wing 1's input routed to wing 2's output and vice versa.
pub fn swap_channel<S: Scalar>(dim: usize) -> Result<MultipartiteChannel<S>> {
    let c = SystemType::classical(dim)?;
    let sw = LinearProcess::<S>::permutation(Signature::new(vec![c, c]), &[1, 0])?;
    MultipartiteChannel::from_matrix(Theory::Stoch, vec![Wing::new(c, c); 2], sw.into_matrix(), S::default_tol())
}

/// Random classical channel where wing 2's output depends on wing 1's
/// input: `P(a|x) · P(b|x, y)`.
pub fn random_feedforward<R: Rng>(rng: &mut R, dim: usize) -> Result<MultipartiteChannel<Rational>> {
    let c = SystemType::classical(dim)?;
    loop {
        let pa = random_stochastic_rational(rng, dim, dim);
        let pb = random_stochastic_rational(rng, dim, dim * dim);
        let m = Matrix::from_fn(dim * dim, dim * dim, |row, col| {
            let (a, b) = (row / dim, row % dim);
            let (x, y) = (col / dim, col % dim);
            pa[(a, x)].clone() * pb[(b, x * dim + y)].clone()
        });
        let ch = MultipartiteChannel::from_matrix(Theory::Stoch, vec![Wing::new(c, c); 2], m, 0.0)?;
        // keep only instances where b really depends on x
        let depends = (0..dim).any(|y| (0..dim).any(|b| pb[(b, y)] != pb[(b, dim + y)]));
        if depends {
            return Ok(ch);
        }
    }
}

/// Random two-qubit unitary channel (generically signalling both ways).
pub fn random_unitary_channel<R: Rng>(rng: &mut R) -> Result<MultipartiteChannel<f64>> {
    let q = SystemType::quantum(2)?;
    let t = random_cptp(rng, &[2, 2], &[2, 2], 1);
    MultipartiteChannel::from_matrix(Theory::Quant, vec![Wing::new(q, q); 2], t, 1e-9)
}

/// Random valid channel `ins → outs` in the given theory. Purely classical
/// signatures get a random stochastic matrix, purely quantum ones a random
/// CPTP map, a single classical-to-quantum wire a random preparation per
/// input, and anything else a random discard-and-prepare map.
pub fn random_channel<S: Scalar, R: Rng>(rng: &mut R, theory: Theory, ins: &Signature, outs: &Signature) -> Result<LinearProcess<S>> {
    for t in ins.wires().iter().chain(outs.wires()) {
        if !theory.contains(t) {
            return Err(crate::error::Error::UnknownType(format!("{t} in {theory}")));
        }
    }
    let classical = |s: &Signature| s.wires().iter().all(SystemType::is_classical);
    let quantum = |s: &Signature| s.wires().iter().all(|t| t.is_quantum() || t.is_trivial());
    let (rows, cols) = (outs.total_dim(), ins.total_dim());
    if classical(ins) && classical(outs) {
        let m = match S::ARITHMETIC {
            crate::scalar::Arithmetic::Rational => random_stochastic_rational(rng, rows, cols).map(S::from_rational),
            crate::scalar::Arithmetic::Float64 => {
                random_stochastic_float(rng, rows, cols).map(|x| S::try_from_f64(*x).expect("finite"))
            }
        };
        return LinearProcess::new(ins.clone(), outs.clone(), m);
    }
    if S::ARITHMETIC == crate::scalar::Arithmetic::Rational {
        return Err(crate::error::Error::InexactArithmetic("rational", "random quantum channel".into()));
    }
    let hilbert = |s: &Signature| s.wires().iter().map(SystemType::dim).collect::<Vec<_>>();
    let m: Matrix<f64> = if quantum(ins) && quantum(outs) {
        random_cptp(rng, &hilbert(ins), &hilbert(outs), 2)
    } else if classical(ins) && quantum(outs) {
        let dims = hilbert(outs);
        let d: usize = dims.iter().product();
        let cols_v: Vec<Vec<f64>> = (0..cols).map(|_| density_coords(&random_density(rng, d), &dims)).collect();
        Matrix::from_fn(rows, cols, |r, c| cols_v[c][r])
    } else {
        let sigma = tensor_all(
            &outs
                .wires()
                .iter()
                .map(|t| random_channel::<f64, R>(rng, theory, &Signature::empty(), &Signature::new(vec![*t])))
                .collect::<Result<Vec<_>>>()?,
        );
        let disc = theory.discard_signature::<f64>(ins)?;
        compose_seq(&disc, &sigma)?.into_matrix()
    };
    LinearProcess::new(ins.clone(), outs.clone(), m.map(|x| S::try_from_f64(*x).expect("finite")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ns::check_nonsignalling;
    use crate::theory::quant_valid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pr_box_is_stochastic_and_nonsignalling() {
        let pr = pr_box::<Rational>().unwrap();
        let r = check_nonsignalling(&pr, 0.0);
        assert!(r.verdict);
        assert!(r.entries.iter().all(|e| e.residual == Rational::from_int(0)));
    }

    #[test]
    fn random_cptp_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let t = random_cptp(&mut rng, &[2], &[2], 3);
            let q = Signature::new(vec![SystemType::quantum(2).unwrap()]);
            let p = LinearProcess::new(q.clone(), q, t).unwrap();
            assert!(quant_valid(&p, 1e-9).unwrap());
        }
    }

    #[test]
    fn random_channels_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c2 = SystemType::classical(2).unwrap();
        let q2 = SystemType::quantum(2).unwrap();
        let sigs = [
            (vec![c2], vec![c2, c2]),
            (vec![q2], vec![q2, q2]),
            (vec![c2], vec![q2]),
            (vec![q2], vec![c2]),
            (vec![], vec![q2]),
            (vec![q2, c2], vec![q2]),
        ];
        for (i, o) in sigs {
            let (i, o) = (Signature::new(i), Signature::new(o));
            let p = random_channel::<f64, _>(&mut rng, Theory::Quant, &i, &o).unwrap();
            assert!(Theory::Quant.is_valid_channel(&p, 1e-9).unwrap(), "{i} -> {o}");
        }
        let r = random_channel::<Rational, _>(&mut rng, Theory::Stoch, &Signature::new(vec![c2]), &Signature::new(vec![c2])).unwrap();
        assert!(Theory::Stoch.is_valid_channel(&r, 0.0).unwrap());
    }

    #[test]
    fn feedforward_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = random_feedforward(&mut rng, 2).unwrap();
        assert!(!check_nonsignalling(&ch, 0.0).verdict);
    }
}
