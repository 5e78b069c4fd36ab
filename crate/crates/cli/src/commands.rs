//! Command implementations. Each returns the text for stdout and the exit
//! status; failures come back as [`CliError`].

use std::path::Path;

use num_traits::{Signed, Zero};
use procgpt_core::completion::suite::{discard_suite, quotient_suite, validity_suite};
use procgpt_core::completion::GeneratedTheory;
use procgpt_core::decompose::{build_realization, decompose_quasimixture, verify_realization, DecomposeMode};
use procgpt_core::epr::{assemblage_distance, extract_assemblage, realize_assemblage};
use procgpt_core::samples::pr_box;
use procgpt_core::scalar::rational_to_string;
use procgpt_core::{check_nonsignalling, Bindings, MultipartiteChannel, Rational, Theory};
use serde_json::json;

use crate::certificate::{default_tol, CertificateFile, NsRecord, QuasiRecord};
use crate::error::CliError;
use crate::expr::parse_process_expr;
use crate::format::{
    process_from_value, read_json, to_pretty, write_json, ArithmeticTag, AssemblageFile, ChannelFile, FileScalar,
    LoadedChannel, ProcessFile,
};
use crate::verify::verify_certificate;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

fn tol_for(file: &ChannelFile, tol: Option<f64>) -> f64 {
    match file.arithmetic {
        ArithmeticTag::Rational => 0.0,
        ArithmeticTag::Float64 => tol.unwrap_or_else(|| default_tol(ArithmeticTag::Float64)),
    }
}

pub fn check_ns(path: &Path, tol: Option<f64>) -> Result<Outcome, CliError> {
    let file: ChannelFile = read_json(path)?;
    let tol = match (file.arithmetic, tol) {
        (ArithmeticTag::Rational, Some(t)) => t,
        _ => tol_for(&file, tol),
    };
    let record = match file.load(Some(tol))? {
        LoadedChannel::Exact(ch) => NsRecord::from_report(&check_nonsignalling(&ch, tol)),
        LoadedChannel::Float(ch) => NsRecord::from_report(&check_nonsignalling(&ch, tol)),
    };
    let code = if record.verdict { 0 } else { 1 };
    Ok(Outcome { stdout: to_pretty(&record)?, code })
}

pub fn decompose(path: &Path, mode: DecomposeMode, tol: Option<f64>) -> Result<Outcome, CliError> {
    let file: ChannelFile = read_json(path)?;
    let tol = tol_for(&file, tol);
    let record = match file.load(Some(tol))? {
        LoadedChannel::Exact(ch) => QuasiRecord::from_mixture(&decompose_quasimixture(&ch, mode, tol)?),
        LoadedChannel::Float(ch) => QuasiRecord::from_mixture(&decompose_quasimixture(&ch, mode, tol)?),
    };
    Ok(Outcome::ok(to_pretty(&record)?))
}

/// Runs the full pipeline on a loaded channel and assembles the certificate.
pub fn certify<S: FileScalar>(
    file: &ChannelFile,
    ch: &MultipartiteChannel<S>,
    mode: DecomposeMode,
    tol: f64,
) -> Result<CertificateFile, CliError> {
    let report = check_nonsignalling(ch, tol);
    if !report.verdict {
        return Err(CliError::verdict(format!("channel signals (max residual {})", report.max_residual())));
    }
    let qm = decompose_quasimixture(ch, mode, tol)?;
    let r = build_realization(ch, &qm, tol)?;
    let residual = verify_realization(ch, &r)?;
    CertificateFile::build(file, &report, &qm, &r, &residual, tol)
}

fn summary(cert: &CertificateFile, out: &Path) -> serde_json::Value {
    json!({
        "certificate": out.display().to_string(),
        "arithmetic": cert.arithmetic,
        "terms": cert.quasi_mixture.terms.len(),
        "negativity": cert.quasi_mixture.negativity,
        "residual": cert.residuals.realization,
    })
}

pub fn realize(path: &Path, out: &Path, mode: DecomposeMode, tol: Option<f64>) -> Result<Outcome, CliError> {
    let file: ChannelFile = read_json(path)?;
    let tol = tol_for(&file, tol);
    let cert = match file.load(Some(tol))? {
        LoadedChannel::Exact(ch) => certify(&file, &ch, mode, tol)?,
        LoadedChannel::Float(ch) => certify(&file, &ch, mode, tol)?,
    };
    write_json(out, &cert)?;
    Ok(Outcome::ok(to_pretty(&summary(&cert, out))?))
}

pub fn verify(cert: &Path, against: &Path) -> Result<Outcome, CliError> {
    let c: CertificateFile = read_json(cert)?;
    let ch: ChannelFile = read_json(against)?;
    let report = verify_certificate(&c, &ch)?;
    let code = if report.verdict { 0 } else { 1 };
    Ok(Outcome { stdout: to_pretty(&report)?, code })
}

pub fn assemblage_realize(path: &Path, out: &Path, channel_out: Option<&Path>, tol: Option<f64>) -> Result<Outcome, CliError> {
    let afile: AssemblageFile = read_json(path)?;
    let asm = afile.to_assemblage()?;
    let tol = tol.unwrap_or_else(|| default_tol(ArithmeticTag::Float64));
    let mut gt = GeneratedTheory::<f64>::new(Theory::Quant, tol);
    let (id, r) = realize_assemblage(&mut gt, &asm)?;
    let reg = gt.registration(id)?;
    let file = ChannelFile::from_channel(&reg.channel, None)?;
    let report = check_nonsignalling(&reg.channel, tol);
    let mut cert = CertificateFile::build(&file, &report, &reg.quasi, &r, &reg.residual, tol)?;
    cert.assemblage_digest = Some(afile.digest()?);
    let back = extract_assemblage(&procgpt_core::decompose::recompose(&r)?)?;
    let distance = assemblage_distance(&asm, &back)?;
    write_json(out, &cert)?;
    if let Some(p) = channel_out {
        write_json(p, &file)?;
    }
    let mut v = summary(&cert, out);
    v["extractedDistance"] = json!(distance);
    Ok(Outcome::ok(to_pretty(&v)?))
}

pub fn eval(expr: &Path, bindings_dir: &Path) -> Result<Outcome, CliError> {
    let src = std::fs::read_to_string(expr).map_err(|e| CliError::io(expr, e))?;
    let mut values = Vec::new();
    let rd = std::fs::read_dir(bindings_dir).map_err(|e| CliError::io(bindings_dir, e))?;
    for entry in rd {
        let p = entry.map_err(|e| CliError::io(bindings_dir, e))?.path();
        if p.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let v: serde_json::Value = read_json(&p)?;
        values.push((name, v));
    }
    values.sort_by(|a, b| a.0.cmp(&b.0));
    let tags: Vec<&str> = values.iter().filter_map(|(_, v)| v.get("arithmetic").and_then(|a| a.as_str())).collect();
    if tags.iter().all(|t| *t == "rational") {
        eval_in::<Rational>(&src, values)
    } else if tags.iter().all(|t| *t == "float64") {
        eval_in::<f64>(&src, values)
    } else {
        Err(CliError::input("bindings mix rational and float64 files"))
    }
}

fn eval_in<S: FileScalar>(src: &str, values: Vec<(String, serde_json::Value)>) -> Result<Outcome, CliError> {
    let mut bindings: Bindings<S> = Bindings::new();
    for (name, v) in values {
        let (_, p) = process_from_value::<S>(v)?;
        bindings.insert(name, p);
    }
    let term = parse_process_expr(src.trim(), &bindings)?;
    let p = procgpt_core::eval_diagram(&term, &bindings)?;
    Ok(Outcome::ok(to_pretty(&ProcessFile::from_process(&p)?)?))
}

/// The PR box in the classical fragment: exact quasi-state, its negative
/// entries, and the validity, discard and quotient spot checks.
pub fn demo_pr(samples: usize, pairs: usize, seed: u64) -> Result<Outcome, CliError> {
    let mut out = String::new();
    let mut ok = true;
    let pr = pr_box::<Rational>()?;
    let report = check_nonsignalling(&pr, 0.0);
    out += &format!("PR box: non-signalling = {} (max residual {})\n", report.verdict, report.max_residual());
    let mut gt = GeneratedTheory::<Rational>::new(Theory::Stoch, 0.0);
    let id = gt.register(pr)?;
    let reg = gt.registration(id)?;
    let qm = &reg.quasi;
    out += &format!(
        "quasi-mixture: {} terms, sum {}, min {}\n",
        qm.len(),
        rational_to_string(&qm.coefficient_sum()),
        qm.min_coefficient().map(|c| rational_to_string(&c)).unwrap_or_default()
    );
    let xi = reg.realization.xi_terms();
    let negative: Vec<_> = xi.iter().filter(|(c, _)| c.is_negative()).collect();
    out += &format!("xi_{id}: {} nonzero entries, {} negative\n", xi.len(), negative.len());
    for (c, d) in &negative {
        out += &format!("  xi{d:?} = {}\n", rational_to_string(c));
    }
    out += &format!("realization residual: {}\n", rational_to_string(&reg.residual));
    ok &= report.verdict && !negative.is_empty() && reg.residual.is_zero();

    let v = validity_suite(&gt, samples, seed)?;
    out += &format!("validity: {} diagrams, {} failures\n", v.checked, v.failures.len());
    ok &= v.passed();
    for (ty, dev) in discard_suite(&gt)? {
        out += &format!("discard on {ty}: deviation {}\n", rational_to_string(&dev));
        ok &= dev.is_zero();
    }
    for ty in gt.extension_types() {
        let u = gt.discard_uniqueness(&ty)?;
        out += &format!(
            "discard uniqueness on {ty}: {} candidates, {} normalizing, unique = {}\n",
            u.candidates,
            u.normalizing,
            u.passed()
        );
        ok &= u.passed();
    }
    let q = quotient_suite(&gt, pairs, seed.wrapping_add(1))?;
    out += &format!(
        "quotient: {} pairs at depth {}, {} failures\n",
        q.pairs,
        q.depth,
        q.failures.len()
    );
    if let Some(nc) = &q.negative_control {
        out += &format!("negative control: {}\n", nc.witness);
    }
    ok &= q.passed();
    out += &format!("result: {}\n", if ok { "pass" } else { "FAIL" });
    Ok(Outcome { stdout: out, code: if ok { 0 } else { 1 } })
}

/// Parses a mode flag.
pub fn parse_mode(s: &str) -> Result<DecomposeMode, CliError> {
    DecomposeMode::parse(s).ok_or_else(|| CliError::input(format!("unknown mode `{s}` (min-norm or min-neg)")))
}
