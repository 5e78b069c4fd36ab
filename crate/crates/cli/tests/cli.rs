use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use procgpt_cli::format::write_json;
use procgpt_cli::{AssemblageFile, ChannelFile, ProcessFile};
use procgpt_core::epr::{bb84, pr_tripartite};
use procgpt_core::samples::{pr_box, random_quantum_common_cause, swap_channel};
use procgpt_core::{LinearProcess, Matrix, Rational, Scalar, Signature, SystemType};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn procgpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procgpt")).args(args).env_remove("PROCGPT_TOL").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture { dir: tempfile::tempdir().unwrap() };
        let pr = ChannelFile::from_channel(&pr_box::<Rational>().unwrap(), Some(&["alice".into(), "bob".into()])).unwrap();
        write_json(&f.path("pr_box.json"), &pr).unwrap();
        write_json(&f.path("swap.json"), &ChannelFile::from_channel(&swap_channel::<Rational>(2).unwrap(), None).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = random_quantum_common_cause(&mut rng, 2).unwrap();
        write_json(&f.path("qubits.json"), &ChannelFile::from_channel(&q, None).unwrap()).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn check_ns_exit_codes() {
    let f = Fixture::new();
    let o = procgpt(&["check-ns", s(&f.path("pr_box.json"))]);
    assert_eq!(code(&o), 0);
    let v = stdout(&o);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["subsets"].as_array().unwrap().len(), 2);
    let o = procgpt(&["check-ns", s(&f.path("swap.json"))]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o)["verdict"], false);
    assert_eq!(code(&procgpt(&["check-ns", s(&f.path("qubits.json"))])), 0);
}

#[test]
fn realize_then_verify_is_exact_for_the_pr_box() {
    let f = Fixture::new();
    let cert = f.path("pr_cert.json");
    let o = procgpt(&["realize", s(&f.path("pr_box.json")), "-o", s(&cert)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o)["residual"], "0");
    let first = procgpt(&["verify", s(&cert), "--against", s(&f.path("pr_box.json"))]);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first)["residual"], "0");
    let second = procgpt(&["verify", s(&cert), "--against", s(&f.path("pr_box.json"))]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn byte_tampered_certificates_fail() {
    let f = Fixture::new();
    let cert = f.path("cert.json");
    assert_eq!(code(&procgpt(&["realize", s(&f.path("pr_box.json")), "-o", s(&cert)])), 0);
    let text = std::fs::read_to_string(&cert).unwrap();
    // first ξ coefficient 3/16 becomes 3/17
    let i = text.find("\"xi\"").unwrap();
    let j = i + text[i..].find("\"3/16\"").unwrap();
    let mut bytes = text.into_bytes();
    bytes[j + 4] = b'7';
    let bad = f.path("bad.json");
    std::fs::write(&bad, &bytes).unwrap();
    let o = procgpt(&["verify", s(&bad), "--against", s(&f.path("pr_box.json"))]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o)["verdict"], false);
    // a certificate checked against the wrong channel
    let o = procgpt(&["verify", s(&cert), "--against", s(&f.path("swap.json"))]);
    assert_ne!(code(&o), 0);
    // truncated file
    std::fs::write(&bad, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(code(&procgpt(&["verify", s(&bad), "--against", s(&f.path("pr_box.json"))])), 2);
}

#[test]
fn float_pipeline_and_decompose_modes() {
    let f = Fixture::new();
    let cert = f.path("q.json");
    assert_eq!(code(&procgpt(&["realize", s(&f.path("qubits.json")), "-o", s(&cert)])), 0);
    let o = procgpt(&["verify", s(&cert), "--against", s(&f.path("qubits.json"))]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o)["residual"].as_f64().unwrap() <= 1e-8);
    for mode in ["min-norm", "min-neg"] {
        let o = procgpt(&["decompose", s(&f.path("pr_box.json")), "--mode", mode]);
        assert_eq!(code(&o), 0);
        let v = stdout(&o);
        assert_eq!(v["coefficientSum"], "1");
        assert_eq!(v["negativity"], "1/2");
    }
    assert_eq!(code(&procgpt(&["decompose", s(&f.path("pr_box.json")), "--mode", "fastest"])), 2);
    assert_eq!(code(&procgpt(&["realize", s(&f.path("swap.json")), "-o", s(&f.path("x.json"))])), 1);
}

#[test]
fn json_errors_and_exit_classes() {
    let f = Fixture::new();
    let o = procgpt(&["--json", "check-ns", s(&f.path("missing.json"))]);
    assert_eq!(code(&o), 2);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["class"], "input");
    assert_eq!(err["error"]["code"], 2);

    std::fs::write(f.path("e.expr"), "f ; nope").unwrap();
    let bind = f.path("bind");
    std::fs::create_dir(&bind).unwrap();
    let bit = SystemType::classical(2).unwrap();
    let flip = LinearProcess::<Rational>::permutation(Signature::new(vec![bit]), &[0]).unwrap();
    write_json(&bind.join("f.json"), &ProcessFile::from_process(&flip).unwrap()).unwrap();
    let o = procgpt(&["--json", "eval", "--expr", s(&f.path("e.expr")), "--bindings", s(&bind)]);
    assert_eq!(code(&o), 2);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["position"]["offset"], 4);
    assert_eq!(code(&procgpt(&["no-such-command"])), 2);
}

#[test]
fn tolerance_comes_from_the_environment() {
    let f = Fixture::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = random_quantum_common_cause(&mut rng, 2).unwrap();
    let mut file = ChannelFile::from_channel(&q, None).unwrap();
    // a 1e-6 bump on one entry signals at the default tolerance only
    if let procgpt_cli::format::Entry::Number(x) = &mut file.matrix[1] {
        *x += 1e-6;
    }
    write_json(&f.path("bumped.json"), &file).unwrap();
    let path = f.path("bumped.json");
    let strict = procgpt(&["check-ns", s(&path)]);
    assert_ne!(code(&strict), 0);
    let loose = Command::new(env!("CARGO_BIN_EXE_procgpt"))
        .args(["check-ns", s(&path)])
        .env("PROCGPT_TOL", "1e-4")
        .output()
        .unwrap();
    assert_eq!(code(&loose), 0, "{}", String::from_utf8_lossy(&loose.stderr));
}

#[test]
fn eval_prints_the_composite() {
    let f = Fixture::new();
    let bind = f.path("bind");
    std::fs::create_dir(&bind).unwrap();
    let bit = SystemType::classical(2).unwrap();
    let sig = Signature::new(vec![bit]);
    let flip = LinearProcess::<Rational>::permutation(Signature::new(vec![bit, bit]), &[1, 0]).unwrap();
    let coin = LinearProcess::state(sig.clone(), vec![Rational::from_ratio(1, 3), Rational::from_ratio(2, 3)]).unwrap();
    let not = LinearProcess::new(sig.clone(), sig.clone(), Matrix::from_fn(2, 2, |r, c| Rational::from_int((r != c) as i64))).unwrap();
    write_json(&bind.join("swap.json"), &ProcessFile::from_process(&flip).unwrap()).unwrap();
    write_json(&bind.join("coin.json"), &ProcessFile::from_process(&coin).unwrap()).unwrap();
    write_json(&bind.join("not.json"), &ProcessFile::from_process(&not).unwrap()).unwrap();
    write_json(&bind.join("pr.json"), &ChannelFile::from_channel(&pr_box::<Rational>().unwrap(), None).unwrap()).unwrap();
    std::fs::write(f.path("a.expr"), "coin ; mix(1/2, not, not ; not)").unwrap();
    let o = procgpt(&["eval", "--expr", s(&f.path("a.expr")), "--bindings", s(&bind)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o)["matrix"], serde_json::json!(["1/2", "1/2"]));
    std::fs::write(f.path("b.expr"), "(coin * coin) ; swap ; pr").unwrap();
    let o = procgpt(&["eval", "--expr", s(&f.path("b.expr")), "--bindings", s(&bind)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o)["inputs"], serde_json::json!([]));
}

#[test]
fn assemblages_realize_and_verify() {
    let f = Fixture::new();
    for (name, asm) in [("bb84", bb84().unwrap()), ("pr3", pr_tripartite().unwrap())] {
        let a = f.path(&format!("{name}.json"));
        write_json(&a, &AssemblageFile::from_assemblage(&asm)).unwrap();
        let (cert, ch) = (f.path(&format!("{name}_cert.json")), f.path(&format!("{name}_ch.json")));
        let o = procgpt(&["assemblage", "realize", s(&a), "-o", s(&cert), "--channel-out", s(&ch)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o)["extractedDistance"].as_f64().unwrap() <= 1e-8);
        assert_eq!(code(&procgpt(&["verify", s(&cert), "--against", s(&ch)])), 0);
    }
}

#[test]
fn completion_demo_passes() {
    let o = procgpt(&["completion", "demo-pr", "--samples", "60", "--pairs", "12"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("8 negative"), "{text}");
    assert!(text.contains("result: pass"));
}
