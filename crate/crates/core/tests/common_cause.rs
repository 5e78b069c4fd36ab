//! Common-cause channels are non-signalling, and every non-signalling
//! channel decomposes and recomposes through a shared quasi-state.

use procgpt_core::decompose::{
    build_realization, decompose_quasimixture, recompose, verify_realization, DecomposeMode,
};
use procgpt_core::ns::MultipartiteChannel;
use procgpt_core::samples::{random_classical_common_cause, random_feedforward, random_quantum_common_cause};
use procgpt_core::{check_nonsignalling, Rational, Scalar, Theory};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn round_trip<S: Scalar>(ch: &MultipartiteChannel<S>, mode: DecomposeMode, tol: f64) -> S {
    let loose = if tol > 0.0 { tol.max(1e-9) } else { 0.0 };
    let qm = decompose_quasimixture(ch, mode, tol).unwrap();
    assert!(procgpt_core::scalar::within(&qm.coefficient_sum(), &S::one(), loose));
    let r = build_realization(ch, &qm, tol).unwrap();
    let body = recompose(&r).unwrap();
    let again = MultipartiteChannel::new(ch.theory(), ch.wings().to_vec(), body, loose).unwrap();
    assert!(check_nonsignalling(&again, loose).verdict);
    verify_realization(ch, &r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn classical_common_causes_round_trip_exactly(
        seed in any::<u64>(),
        wings in prop::collection::vec((1usize..=3, 1usize..=3), 2..=3),
        hidden in 1usize..=3,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_classical_common_cause(&mut rng, &wings, hidden).unwrap();
        prop_assert!(check_nonsignalling(&ch, 0.0).verdict);
        prop_assert_eq!(round_trip(&ch, DecomposeMode::MinNorm, 0.0), Rational::from_int(0));
    }

    #[test]
    fn feedforward_channels_signal(seed in any::<u64>(), dim in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_feedforward(&mut rng, dim).unwrap();
        prop_assert!(!check_nonsignalling(&ch, 0.0).verdict);
    }
}

#[test]
fn quantum_common_causes_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for parties in [2, 2, 3] {
        let ch = random_quantum_common_cause(&mut rng, parties).unwrap();
        assert_eq!(ch.theory(), Theory::Quant);
        assert!(check_nonsignalling(&ch, 1e-9).verdict);
        assert!(round_trip(&ch, DecomposeMode::MinNorm, 1e-9) <= 1e-8);
    }
}

#[test]
fn min_negativity_round_trips_too() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let ch = random_classical_common_cause(&mut rng, &[(2, 2), (2, 3)], 2).unwrap();
    assert_eq!(round_trip(&ch, DecomposeMode::MinNegativity, 0.0), Rational::from_int(0));
}
