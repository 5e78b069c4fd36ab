use procgpt_cli::commands::certify;
use procgpt_cli::format::{Entry, FileScalar};
use procgpt_cli::{verify_certificate, CertificateFile, ChannelFile};
use procgpt_core::decompose::DecomposeMode;
use procgpt_core::samples::{noisy_pr_box, pr_box, random_classical_common_cause, random_quantum_common_cause};
use procgpt_core::scalar::parse_rational;
use procgpt_core::{MultipartiteChannel, Rational, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every number the verifier consumes, in a fixed order.
fn slots(cert: &mut CertificateFile) -> Vec<(&'static str, &mut Entry)> {
    let mut out: Vec<(&'static str, &mut Entry)> = Vec::new();
    let q = &mut cert.quasi_mixture;
    out.extend(q.terms.iter_mut().map(|t| ("quasi coefficient", &mut t.coeff)));
    for f in &mut q.frames {
        for m in &mut f.members {
            out.extend(m.matrix.iter_mut().map(|e| ("frame member", e)));
        }
    }
    let r = &mut cert.realization;
    out.extend(r.xi.iter_mut().map(|t| ("xi coefficient", &mut t.coeff)));
    for eta in &mut r.etas {
        out.extend(eta.iter_mut().map(|e| ("eta entry", e)));
    }
    out
}

fn shifted(e: &Entry, delta: f64) -> Entry {
    match e {
        Entry::Number(x) => Entry::Number(x + delta),
        Entry::Text(s) => {
            let r = parse_rational(s).unwrap() + Rational::from_ratio((delta * 1e6).round() as i64, 1_000_000);
            Rational::to_entry(&r)
        }
    }
}

fn pipeline<S: FileScalar>(ch: &MultipartiteChannel<S>, mode: DecomposeMode) -> (ChannelFile, CertificateFile) {
    let file = ChannelFile::from_channel(ch, None).unwrap();
    let cert = certify(&file, ch, mode, S::default_tol()).unwrap();
    (file, cert)
}

fn every_single_tamper_fails(file: &ChannelFile, cert: &CertificateFile) -> usize {
    let clean = verify_certificate(cert, file).unwrap();
    assert!(clean.verdict, "{clean:?}");
    let n = slots(&mut cert.clone()).len();
    for k in 0..n {
        for delta in [1e-6, -1e-6] {
            let mut bad = cert.clone();
            let (what, slot) = slots(&mut bad).swap_remove(k);
            *slot = shifted(slot, delta);
            let report = verify_certificate(&bad, file).unwrap();
            assert!(!report.verdict, "{what} #{k} shifted by {delta} passed: {report:?}");
        }
    }
    n
}

#[test]
fn exact_certificates_reject_every_single_coefficient_tamper() {
    let (file, cert) = pipeline(&pr_box::<Rational>().unwrap(), DecomposeMode::MinNorm);
    assert!(every_single_tamper_fails(&file, &cert) > 50);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ch = random_classical_common_cause(&mut rng, &[(2, 3), (3, 2)], 2).unwrap();
    let (file, cert) = pipeline(&ch, DecomposeMode::MinNegativity);
    every_single_tamper_fails(&file, &cert);
}

#[test]
fn float_certificates_reject_every_single_coefficient_tamper() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = random_quantum_common_cause(&mut rng, 2).unwrap();
    let (file, cert) = pipeline(&ch, DecomposeMode::MinNorm);
    assert!(every_single_tamper_fails(&file, &cert) > 500);
    let (file, cert) = pipeline(&noisy_pr_box(0.8f64).unwrap(), DecomposeMode::MinNorm);
    every_single_tamper_fails(&file, &cert);
}

#[test]
fn verification_is_deterministic_and_file_only() {
    let (file, cert) = pipeline(&pr_box::<Rational>().unwrap(), DecomposeMode::MinNorm);
    let a = serde_json::to_string(&verify_certificate(&cert, &file).unwrap()).unwrap();
    let text = serde_json::to_string(&cert).unwrap();
    let reread: CertificateFile = serde_json::from_str(&text).unwrap();
    let b = serde_json::to_string(&verify_certificate(&reread, &file).unwrap()).unwrap();
    assert_eq!(a, b);
    let report = verify_certificate(&cert, &file).unwrap();
    assert_eq!(report.residual, Entry::Text("0".into()));
}

#[test]
fn structural_tampering_fails() {
    let (file, cert) = pipeline(&pr_box::<Rational>().unwrap(), DecomposeMode::MinNorm);

    let mut other = file.clone();
    other.matrix.swap(0, 3);
    let r = verify_certificate(&cert, &other).unwrap();
    assert!(!r.digest_matches && !r.verdict);

    let mut bad = cert.clone();
    bad.realization.brands[0].members.swap(0, 1);
    assert!(!verify_certificate(&bad, &file).unwrap().verdict);

    let mut bad = cert.clone();
    bad.realization.xi.pop();
    assert!(!verify_certificate(&bad, &file).unwrap().verdict);

    let mut bad = cert.clone();
    bad.quasi_mixture.frames[1].members.pop();
    assert!(!verify_certificate(&bad, &file).unwrap().verdict);

    let mut bad = cert.clone();
    bad.tolerance = 1.0;
    assert!(!verify_certificate(&bad, &file).unwrap().verdict);

    let mut bad = cert.clone();
    bad.ns_report.verdict = false;
    assert!(!verify_certificate(&bad, &file).unwrap().verdict);

    // swapping two ξ entries keeps the sum but moves weight between carriers
    let mut bad = cert.clone();
    let (a, b) = (bad.realization.xi[0].coeff.clone(), bad.realization.xi[2].coeff.clone());
    assert_ne!(a, b);
    bad.realization.xi[0].coeff = b;
    bad.realization.xi[2].coeff = a;
    assert!(!verify_certificate(&bad, &file).unwrap().verdict);
}
