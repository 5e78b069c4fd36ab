use procgpt_cli::commands::certify;
use procgpt_cli::format::{Entry, LoadedChannel};
use procgpt_cli::{AssemblageFile, CertificateFile, ChannelFile, ProcessFile};
use procgpt_core::decompose::DecomposeMode;
use procgpt_core::epr::bb84;
use procgpt_core::samples::{pr_box, random_classical_common_cause, random_quantum_common_cause};
use procgpt_core::{LinearProcess, Matrix, Rational, Scalar, Signature, SystemType};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn roundtrip<T>(v: &T) -> (T, String)
where
    T: serde::Serialize + for<'de> serde::Deserialize<'de>,
{
    let text = serde_json::to_string_pretty(v).unwrap();
    (serde_json::from_str(&text).unwrap(), text)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rational_channel_files_round_trip_bit_exactly(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_classical_common_cause(&mut rng, &[(a, b), (b, a)], 2).unwrap();
        let file = ChannelFile::from_channel(&ch, None).unwrap();
        let (back, text) = roundtrip(&file);
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        let LoadedChannel::Exact(again) = back.load(None).unwrap() else { panic!("arithmetic changed") };
        prop_assert_eq!(again.body(), ch.body());
    }

    #[test]
    fn float_channel_files_round_trip_bit_exactly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_quantum_common_cause(&mut rng, 2).unwrap();
        let file = ChannelFile::from_channel(&ch, None).unwrap();
        let (back, _) = roundtrip(&file);
        let LoadedChannel::Float(again) = back.load(None).unwrap() else { panic!("arithmetic changed") };
        let same = again.body().matrix().data().iter().zip(ch.body().matrix().data()).all(|(x, y)| x.to_bits() == y.to_bits());
        prop_assert!(same);
    }
}

#[test]
fn certificates_round_trip_in_both_arithmetics() {
    let pr = pr_box::<Rational>().unwrap();
    let file = ChannelFile::from_channel(&pr, None).unwrap();
    let cert = certify(&file, &pr, DecomposeMode::MinNorm, 0.0).unwrap();
    let (back, text) = roundtrip(&cert);
    assert_eq!(back, cert);
    assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = random_quantum_common_cause(&mut rng, 2).unwrap();
    let file = ChannelFile::from_channel(&q, None).unwrap();
    let cert: CertificateFile = certify(&file, &q, DecomposeMode::MinNorm, 1e-9).unwrap();
    let (back, text) = roundtrip(&cert);
    assert_eq!(back, cert);
    assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
}

#[test]
fn digest_ignores_layout_and_number_spelling() {
    let pr = pr_box::<Rational>().unwrap();
    let file = ChannelFile::from_channel(&pr, None).unwrap();
    let mut respelled = file.clone();
    for e in &mut respelled.matrix {
        if *e == Entry::Text("1/2".into()) {
            *e = Entry::Text("2/4".into());
        } else {
            *e = Entry::Number(0.0);
        }
    }
    assert_eq!(file.digest().unwrap(), respelled.digest().unwrap());
    let mut changed = file.clone();
    changed.wings[0].name = "alice".into();
    assert_ne!(file.digest().unwrap(), changed.digest().unwrap());
}

#[test]
fn malformed_channel_files_are_rejected() {
    let pr = pr_box::<Rational>().unwrap();
    let good = ChannelFile::from_channel(&pr, None).unwrap();

    let mut f = good.clone();
    f.version = 2;
    assert!(f.load(None).unwrap_err().message.contains("version"));

    let mut f = good.clone();
    f.matrix.pop();
    assert!(f.load(None).unwrap_err().message.contains("entries"));

    let mut f = good.clone();
    f.matrix[0] = Entry::Number(0.5);
    assert!(f.load(None).unwrap_err().message.contains("p/q"));

    let mut f = good.clone();
    f.matrix[0] = Entry::Text("1/3".into());
    assert!(f.load(None).unwrap_err().message.contains("rejected"));

    let text = serde_json::to_string(&good).unwrap().replace("\"version\"", "\"extra\":1,\"version\"");
    assert!(serde_json::from_str::<ChannelFile>(&text).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let q = random_quantum_common_cause(&mut rng, 2).unwrap();
    let mut f = ChannelFile::from_channel(&q, None).unwrap();
    f.basis_convention = Some("pauli".into());
    assert!(f.load(None).unwrap_err().message.contains("basis"));
    f.basis_convention = None;
    assert!(f.load(None).unwrap_err().message.contains("basisConvention"));
}

#[test]
fn process_and_assemblage_files_round_trip() {
    let bit = SystemType::classical(2).unwrap();
    let q = SystemType::quantum(2).unwrap();
    let m = Matrix::from_fn(4, 2, |r, c| if r == 0 { Rational::from_ratio(1, 2) } else if r == c + 1 { Rational::from_ratio(1, 3) } else { Rational::from_int(0) });
    let p = LinearProcess::new(Signature::new(vec![bit]), Signature::new(vec![q]), m.map(|x| x.as_f64())).unwrap();
    let f = ProcessFile::from_process(&p).unwrap();
    let (back, _) = roundtrip(&f);
    assert_eq!(back.to_process::<f64>().unwrap(), p);

    let exact = LinearProcess::new(Signature::new(vec![bit]), Signature::new(vec![bit, bit]), Matrix::from_fn(4, 2, |r, c| if r == 3 * c { Rational::from_int(1) } else { Rational::from_int(0) })).unwrap();
    let (back, _) = roundtrip(&ProcessFile::from_process(&exact).unwrap());
    assert_eq!(back.to_process::<Rational>().unwrap(), exact);

    let a = AssemblageFile::from_assemblage(&bb84().unwrap());
    let (back, _) = roundtrip(&a);
    assert_eq!(back, a);
    assert_eq!(back.to_assemblage().unwrap(), bb84().unwrap());
}
