//! The generated fragment of the completion: spans, brands and the
//! executable validity, discard and quotient suites.

use procgpt_core::completion::suite::{discard_suite, quotient_suite, validity_suite};
use procgpt_core::completion::GeneratedTheory;
use procgpt_core::samples::{pr_box, random_classical_common_cause, random_quantum_common_cause};
use procgpt_core::{DiagramTerm, Matrix, Rational, Scalar, SystemType, Theory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn classical() -> GeneratedTheory<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut gt = GeneratedTheory::new(Theory::Stoch, 0.0);
    gt.register(pr_box().unwrap()).unwrap();
    gt.register(random_classical_common_cause(&mut rng, &[(2, 3), (3, 2), (2, 2)], 2).unwrap()).unwrap();
    gt
}

#[test]
fn spans_grow_with_depth_and_respect_the_carrier() {
    let mut gt = classical();
    for ty in gt.extension_types() {
        let s1 = gt.state_span_at(&ty, 1).unwrap();
        let s2 = gt.state_span_at(&ty, 2).unwrap();
        assert!(s1.len() <= s2.len() && s2.len() <= ty.vdim());
        let e = gt.effect_span_at(&ty, 1).unwrap();
        let disc = gt.eval(&gt.leaf(&format!("disc_{}", ty.tag())).unwrap()).unwrap().into_matrix().into_data();
        let mut rows: Vec<Vec<Rational>> = e.iter().map(|s| s.vector.clone()).collect();
        let r = Matrix::from_rows(&rows).rank(0.0);
        rows.push(disc);
        assert_eq!(Matrix::from_rows(&rows).rank(0.0), r, "discard lies in the effect span");
        let pairing = Matrix::from_rows(&e.iter().map(|s| s.vector.clone()).collect::<Vec<_>>())
            .matmul(&Matrix::from_rows(&s2.iter().map(|s| s.vector.clone()).collect::<Vec<_>>()).transpose());
        assert!(pairing.rank(0.0) <= ty.vdim());
    }
    let bit = SystemType::classical(2).unwrap();
    assert_eq!(gt.state_span(&bit).unwrap().len(), 2);
    assert_eq!(gt.effect_span(&bit).unwrap().len(), 2);
}

#[test]
fn classical_suites_pass() {
    let gt = classical();
    let v = validity_suite(&gt, 150, 1).unwrap();
    assert!(v.passed(), "{:?}", v.failures);
    for (ty, dev) in discard_suite(&gt).unwrap() {
        assert_eq!(dev, Rational::from_int(0), "{ty}");
    }
    let q = quotient_suite(&gt, 40, 2).unwrap();
    assert!(q.passed(), "{:?}", q.failures);
}

#[test]
fn quantum_suites_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut gt = GeneratedTheory::<f64>::new(Theory::Quant, 1e-9);
    gt.register(random_quantum_common_cause(&mut rng, 2).unwrap()).unwrap();
    let v = validity_suite(&gt, 60, 3).unwrap();
    assert!(v.passed(), "{:?}", v.failures);
    for (_, dev) in discard_suite(&gt).unwrap() {
        assert!(dev <= 1e-9);
    }
    let q = quotient_suite(&gt, 20, 4).unwrap();
    assert!(q.passed(), "{:?}", q.failures);
    for ty in gt.extension_types() {
        assert!(gt.discard_uniqueness(&ty).unwrap().passed());
    }
}

#[test]
fn extension_wires_cannot_reach_the_boundary_of_a_base_check() {
    let mut gt = classical();
    let id = gt.registered().next().unwrap().0;
    let xi = gt.leaf(&format!("xi_{id}")).unwrap();
    assert!(gt.is_in_base(&xi).is_err());
    let t = gt.recomposition_term(id).unwrap();
    let twice = DiagramTerm::par(t.clone(), t);
    assert!(gt.is_in_base(&twice).unwrap());
}
