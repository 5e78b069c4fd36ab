//! Certificate checking from the files alone.
//!
//! The channel is rebuilt twice: once as the direct sum over the listed
//! `ξ` entries of products of `η` columns, once as the quasi-mixture over
//! the inlined frame members. Both must match the channel file, the two
//! coefficient lists must agree through the brand table, and each `η`
//! block must equal the member it claims to apply.

use std::collections::BTreeMap;

use procgpt_core::scalar::negligible;
use procgpt_core::system::decode_index;
use procgpt_core::Rational;
use serde::{Deserialize, Serialize};

use crate::certificate::CertificateFile;
use crate::error::CliError;
use crate::format::{parse_entries, ArithmeticTag, ChannelFile, Entry, FileScalar, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub arithmetic: ArithmeticTag,
    pub channel_digest: String,
    pub digest_matches: bool,
    /// Structural problems; any entry fails the certificate.
    pub problems: Vec<String>,
    pub realization_residual: Entry,
    pub quasi_residual: Entry,
    pub coefficient_sum_deviation: Entry,
    pub consistency_deviation: Entry,
    /// Largest of the four deviations above.
    pub residual: Entry,
    pub tolerance: f64,
    pub verdict: bool,
}

/// Wing shapes as `(vdim in, vdim out)`.
type Shapes = Vec<(usize, usize)>;

struct Tally<S> {
    problems: Vec<String>,
    worst: S,
}

impl<S: FileScalar> Tally<S> {
    fn see(&mut self, a: &S, b: &S) -> S {
        let d = (a.clone() - b.clone()).abs();
        if d > self.worst {
            self.worst = d.clone();
        }
        d
    }
}

pub fn verify_certificate(cert: &CertificateFile, channel: &ChannelFile) -> Result<VerifyReport, CliError> {
    match cert.arithmetic {
        ArithmeticTag::Rational => check::<Rational>(cert, channel),
        ArithmeticTag::Float64 => check::<f64>(cert, channel),
    }
}

fn max_abs<S: FileScalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |m, (x, y)| {
        let d = (x.clone() - y.clone()).abs();
        if d > m {
            d
        } else {
            m
        }
    })
}

/// `Σ_t c_t ⊗_i L_{t,i}` with `L_{t,i}` a `vo_i × vi_i` row-major block.
fn direct_sum<S: FileScalar>(shapes: &Shapes, terms: &[(S, Vec<Vec<S>>)]) -> Vec<S> {
    let ins: Vec<usize> = shapes.iter().map(|s| s.0).collect();
    let outs: Vec<usize> = shapes.iter().map(|s| s.1).collect();
    let (rows, cols): (usize, usize) = (outs.iter().product(), ins.iter().product());
    let row_digits: Vec<Vec<usize>> = (0..rows).map(|r| decode_index(r, &outs)).collect();
    let col_digits: Vec<Vec<usize>> = (0..cols).map(|c| decode_index(c, &ins)).collect();
    let mut body = vec![S::zero(); rows * cols];
    for (coeff, blocks) in terms {
        if coeff.is_zero() {
            continue;
        }
        for (r, od) in row_digits.iter().enumerate() {
            for (c, xd) in col_digits.iter().enumerate() {
                let mut v = coeff.clone();
                for (i, block) in blocks.iter().enumerate() {
                    let e = &block[od[i] * ins[i] + xd[i]];
                    if e.is_zero() {
                        v = S::zero();
                        break;
                    }
                    v = v * e.clone();
                }
                if !v.is_zero() {
                    body[r * cols + c] = body[r * cols + c].clone() + v;
                }
            }
        }
    }
    body
}

fn check<S: FileScalar>(cert: &CertificateFile, channel: &ChannelFile) -> Result<VerifyReport, CliError> {
    let digest = channel.digest()?;
    let mut t = Tally { problems: Vec::new(), worst: S::zero() };
    if cert.version != FORMAT_VERSION {
        t.problems.push(format!("certificate version {} is not {FORMAT_VERSION}", cert.version));
    }
    if channel.arithmetic != cert.arithmetic {
        t.problems.push(format!("channel is {}, certificate is {}", channel.arithmetic, cert.arithmetic));
    }
    if cert.wings != channel.wings {
        t.problems.push("certificate wings differ from the channel's".into());
    }
    if cert.arithmetic == ArithmeticTag::Rational && cert.tolerance != 0.0 {
        t.problems.push("rational certificates must have tolerance 0".into());
    }
    if !cert.ns_report.verdict {
        t.problems.push("certificate records a signalling channel".into());
    }
    if cert.mode != cert.quasi_mixture.mode {
        t.problems.push("solver mode recorded twice with different values".into());
    }
    let zero = S::zero().to_entry();
    let fail = |t: Tally<S>| VerifyReport {
        arithmetic: cert.arithmetic,
        channel_digest: digest.clone(),
        digest_matches: digest == cert.channel_digest,
        problems: t.problems,
        realization_residual: zero.clone(),
        quasi_residual: zero.clone(),
        coefficient_sum_deviation: zero.clone(),
        consistency_deviation: zero.clone(),
        residual: zero.clone(),
        tolerance: cert.tolerance,
        verdict: false,
    };
    if !t.problems.is_empty() {
        return Ok(fail(t));
    }
    let wings = channel.wing_types()?;
    let m = wings.len();
    let shapes: Shapes = wings.iter().map(|w| (w.input.vdim(), w.output.vdim())).collect();
    let body: Vec<S> = parse_entries(&channel.matrix)?;
    let expected_len: usize = shapes.iter().map(|s| s.0 * s.1).product();
    if body.len() != expected_len {
        t.problems.push("channel matrix has the wrong length".into());
        return Ok(fail(t));
    }

    let rec = &cert.realization;
    let qr = &cert.quasi_mixture;
    if rec.brands.len() != m || rec.etas.len() != m || qr.frames.len() != m {
        t.problems.push(format!("expected {m} brands, η matrices and frames"));
        return Ok(fail(t));
    }
    // inlined members, by frame index
    let mut members: Vec<BTreeMap<usize, Vec<S>>> = Vec::with_capacity(m);
    for (i, f) in qr.frames.iter().enumerate() {
        let (vi, vo) = shapes[i];
        let mut map = BTreeMap::new();
        if f.wing != i {
            t.problems.push(format!("frame {i} is labelled as wing {}", f.wing));
        }
        for mem in &f.members {
            let v: Vec<S> = parse_entries(&mem.matrix)?;
            if v.len() != vi * vo || mem.index >= f.frame_size || map.insert(mem.index, v).is_some() {
                t.problems.push(format!("wing {i} member {} is malformed or repeated", mem.index));
            }
        }
        members.push(map);
    }
    // η blocks against the members named by the brand table
    let mut eta_blocks: Vec<Vec<Vec<S>>> = Vec::with_capacity(m);
    for (i, (b, eta)) in rec.brands.iter().zip(&rec.etas).enumerate() {
        let (vi, vo) = shapes[i];
        let n = b.carrier;
        let ordered = b.members.windows(2).all(|w| w[0] < w[1]);
        if b.wing != i || n == 0 || b.members.len() != n || !ordered || eta.len() != vo * vi * n {
            t.problems.push(format!("brand or η of wing {i} is malformed"));
            eta_blocks.push(Vec::new());
            continue;
        }
        let eta: Vec<S> = parse_entries(eta)?;
        let mut blocks = Vec::with_capacity(n);
        for (a, idx) in b.members.iter().enumerate() {
            let block: Vec<S> = (0..vo * vi).map(|k| eta[(k / vi) * vi * n + (k % vi) * n + a].clone()).collect();
            match members[i].get(idx) {
                Some(mem) => {
                    for (x, y) in block.iter().zip(mem) {
                        t.see(x, y);
                    }
                }
                None => t.problems.push(format!("wing {i} carrier {a} names member {idx}, which is not inlined")),
            }
            blocks.push(block);
        }
        eta_blocks.push(blocks);
    }
    if !t.problems.is_empty() {
        return Ok(fail(t));
    }

    let one = S::one();
    let mut xi: BTreeMap<Vec<usize>, S> = BTreeMap::new();
    let mut xi_terms = Vec::with_capacity(rec.xi.len());
    let mut xi_sum = S::zero();
    for term in &rec.xi {
        let c = S::from_entry(&term.coeff)?;
        let d = &term.carrier;
        if d.len() != m || d.iter().zip(&rec.brands).any(|(a, b)| *a >= b.carrier) || xi.contains_key(d) {
            t.problems.push(format!("ξ entry {d:?} is out of range or repeated"));
            continue;
        }
        xi_sum = xi_sum + c.clone();
        xi.insert(d.clone(), c.clone());
        xi_terms.push((c, (0..m).map(|i| eta_blocks[i][d[i]].clone()).collect()));
    }

    let mut quasi: BTreeMap<Vec<usize>, S> = BTreeMap::new();
    let mut quasi_terms = Vec::with_capacity(qr.terms.len());
    let mut quasi_sum = S::zero();
    for term in &qr.terms {
        let c = S::from_entry(&term.coeff)?;
        if term.members.len() != m {
            t.problems.push("quasi-mixture term has the wrong number of wings".into());
            continue;
        }
        let mut blocks = Vec::with_capacity(m);
        let mut digits = Vec::with_capacity(m);
        for (i, j) in term.members.iter().enumerate() {
            match (members[i].get(j), rec.brands[i].members.binary_search(j)) {
                (Some(mem), Ok(a)) => {
                    blocks.push(mem.clone());
                    digits.push(a);
                }
                _ => t.problems.push(format!("quasi-mixture names wing {i} member {j}, which has no carrier value")),
            }
        }
        if blocks.len() != m {
            continue;
        }
        quasi_sum = quasi_sum + c.clone();
        let slot = quasi.entry(digits).or_insert_with(S::zero);
        *slot = slot.clone() + c.clone();
        quasi_terms.push((c, blocks));
    }
    if !t.problems.is_empty() {
        return Ok(fail(t));
    }

    let mut consistency = S::zero();
    for key in xi.keys().chain(quasi.keys()) {
        let a = xi.get(key).cloned().unwrap_or_else(S::zero);
        let b = quasi.get(key).cloned().unwrap_or_else(S::zero);
        let d = t.see(&a, &b);
        if d > consistency {
            consistency = d;
        }
    }
    // η-versus-member deviations were folded into `worst` above
    let consistency = if t.worst > consistency { t.worst.clone() } else { consistency };

    let realization_residual = max_abs(&direct_sum(&shapes, &xi_terms), &body);
    let quasi_residual = max_abs(&direct_sum(&shapes, &quasi_terms), &body);
    let dx = (xi_sum - one.clone()).abs();
    let dq = (quasi_sum - one).abs();
    let sum_dev = if dx > dq { dx } else { dq };
    let residual = [&realization_residual, &quasi_residual, &sum_dev, &consistency]
        .into_iter()
        .fold(S::zero(), |m, x| if *x > m { x.clone() } else { m });
    let digest_matches = digest == cert.channel_digest;
    let verdict = digest_matches && negligible(&residual, cert.tolerance);
    Ok(VerifyReport {
        arithmetic: cert.arithmetic,
        channel_digest: digest,
        digest_matches,
        problems: Vec::new(),
        realization_residual: realization_residual.to_entry(),
        quasi_residual: quasi_residual.to_entry(),
        coefficient_sum_deviation: sum_dev.to_entry(),
        consistency_deviation: consistency.to_entry(),
        residual: residual.to_entry(),
        tolerance: cert.tolerance,
        verdict,
    })
}
