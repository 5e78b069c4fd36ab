//! Strict symmetric monoidal structure of exact linear processes on random
//! classical signatures.

use procgpt_core::{compose_par, compose_seq, LinearProcess, Matrix, Rational, Scalar, Signature, SystemType};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sig(rng: &mut ChaCha8Rng) -> Signature {
    let n = rng.gen_range(0..=2);
    Signature::new((0..n).map(|_| SystemType::classical(rng.gen_range(1..=3)).unwrap()).collect())
}

fn process(rng: &mut ChaCha8Rng, ins: &Signature, outs: &Signature) -> LinearProcess<Rational> {
    let m = Matrix::from_fn(outs.total_dim(), ins.total_dim(), |_, _| {
        Rational::from_ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3))
    });
    LinearProcess::new(ins.clone(), outs.clone(), m).unwrap()
}

fn sigs(seed: u64, n: usize) -> (ChaCha8Rng, Vec<Signature>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (0..n).map(|_| sig(&mut rng)).collect();
    (rng, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn sequential_composition_is_associative(seed in any::<u64>()) {
        let (mut rng, s) = sigs(seed, 4);
        let f = process(&mut rng, &s[0], &s[1]);
        let g = process(&mut rng, &s[1], &s[2]);
        let h = process(&mut rng, &s[2], &s[3]);
        let left = compose_seq(&compose_seq(&f, &g).unwrap(), &h).unwrap();
        let right = compose_seq(&f, &compose_seq(&g, &h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn parallel_composition_is_associative_with_unit(seed in any::<u64>()) {
        let (mut rng, s) = sigs(seed, 6);
        let f = process(&mut rng, &s[0], &s[1]);
        let g = process(&mut rng, &s[2], &s[3]);
        let h = process(&mut rng, &s[4], &s[5]);
        let left = compose_par(&compose_par(&f, &g), &h);
        let right = compose_par(&f, &compose_par(&g, &h));
        prop_assert_eq!(&left, &right);
        let unit = LinearProcess::number(Rational::from_int(1));
        prop_assert_eq!(compose_par(&f, &unit), f.clone());
        prop_assert_eq!(compose_par(&unit, &f), f.clone());
        let id_in = LinearProcess::identity(s[0].clone());
        let id_out = LinearProcess::identity(s[1].clone());
        prop_assert_eq!(compose_seq(&id_in, &f).unwrap().matrix().into_owned(), f.matrix().into_owned());
        prop_assert_eq!(compose_seq(&f, &id_out).unwrap().matrix().into_owned(), f.matrix().into_owned());
    }

    #[test]
    fn interchange_law(seed in any::<u64>()) {
        let (mut rng, s) = sigs(seed, 6);
        let f = process(&mut rng, &s[0], &s[1]);
        let h = process(&mut rng, &s[1], &s[2]);
        let g = process(&mut rng, &s[3], &s[4]);
        let k = process(&mut rng, &s[4], &s[5]);
        let left = compose_seq(&compose_par(&f, &g), &compose_par(&h, &k)).unwrap();
        let right = compose_par(&compose_seq(&f, &h).unwrap(), &compose_seq(&g, &k).unwrap());
        prop_assert_eq!(left.matrix().into_owned(), right.matrix().into_owned());
    }

    #[test]
    fn swap_is_natural_and_involutive(seed in any::<u64>()) {
        let (mut rng, s) = sigs(seed, 4);
        let f = process(&mut rng, &s[0], &s[1]);
        let g = process(&mut rng, &s[2], &s[3]);
        let before = compose_seq(&compose_par(&f, &g), &LinearProcess::swap(&s[1], &s[3])).unwrap();
        let after = compose_seq(&LinearProcess::swap(&s[0], &s[2]), &compose_par(&g, &f)).unwrap();
        prop_assert_eq!(before.matrix().into_owned(), after.matrix().into_owned());
        let twice = compose_seq(&LinearProcess::<Rational>::swap(&s[0], &s[2]), &LinearProcess::swap(&s[2], &s[0])).unwrap();
        prop_assert_eq!(twice.matrix().into_owned(), LinearProcess::<Rational>::identity(s[0].concat(&s[2])).into_matrix());
    }

    #[test]
    fn dense_and_symbolic_permutations_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let s = Signature::new((0..n).map(|_| SystemType::classical(rng.gen_range(1..=3)).unwrap()).collect());
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let p = LinearProcess::<Rational>::permutation(s.clone(), &perm).unwrap();
        let dense = LinearProcess::new(s.clone(), p.outputs().clone(), p.matrix().into_owned()).unwrap();
        let f = process(&mut rng, p.outputs(), &s);
        prop_assert_eq!(compose_seq(&p, &f).unwrap(), compose_seq(&dense, &f).unwrap());
    }
}
