//! Wing-major tensors: a channel body reshaped so that each wing owns one
//! axis of length `vdim(out)·vdim(in)` with digit `o·vdim(in) + x`.

use crate::exec::Execution;
use crate::matrix::Matrix;
use crate::ns::Wing;
use crate::scalar::Scalar;
use crate::system::{decode_index, encode_index};

pub(crate) fn wing_dims(wings: &[Wing]) -> Vec<usize> {
    wings.iter().map(|w| w.output.vdim() * w.input.vdim()).collect()
}

pub(crate) fn body_to_tensor<S: Scalar>(body: &Matrix<S>, wings: &[Wing]) -> Vec<S> {
    let ins: Vec<usize> = wings.iter().map(|w| w.input.vdim()).collect();
    let outs: Vec<usize> = wings.iter().map(|w| w.output.vdim()).collect();
    let dims = wing_dims(wings);
    let mut t = vec![S::zero(); dims.iter().product()];
    for row in 0..body.rows() {
        let o = decode_index(row, &outs);
        for col in 0..body.cols() {
            let v = &body[(row, col)];
            if v.is_zero() {
                continue;
            }
            let x = decode_index(col, &ins);
            let digits: Vec<usize> = (0..wings.len()).map(|i| o[i] * ins[i] + x[i]).collect();
            t[encode_index(&digits, &dims)] = v.clone();
        }
    }
    t
}

/// Applies `mat` (new × dims[mode]) along one axis.
pub(crate) fn mode_product<S: Scalar>(
    data: &[S],
    dims: &[usize],
    mode: usize,
    mat: &Matrix<S>,
    exec: Execution,
) -> Vec<S> {
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    let k = dims[mode];
    let new = mat.rows();
    assert_eq!(mat.cols(), k, "mode product shape");
    let blocks = exec.map_range(outer, |o| {
        let mut out = vec![S::zero(); new * inner];
        for kk in 0..k {
            let src = &data[(o * k + kk) * inner..(o * k + kk + 1) * inner];
            if src.iter().all(|x| x.is_zero()) {
                continue;
            }
            for r in 0..new {
                let a = &mat[(r, kk)];
                if a.is_zero() {
                    continue;
                }
                let dst = &mut out[r * inner..(r + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    if !s.is_zero() {
                        *d = d.clone() + a.clone() * s.clone();
                    }
                }
            }
        }
        out
    });
    blocks.into_iter().flatten().collect()
}

/// Applies one matrix per axis.
pub(crate) fn multi_mode_product<S: Scalar>(data: &[S], dims: &[usize], mats: &[Matrix<S>], exec: Execution) -> Vec<S> {
    let mut cur = data.to_vec();
    let mut d = dims.to_vec();
    for (mode, m) in mats.iter().enumerate() {
        cur = mode_product(&cur, &d, mode, m, exec);
        d[mode] = m.rows();
    }
    cur
}
