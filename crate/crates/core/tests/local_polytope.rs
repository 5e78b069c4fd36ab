//! Classical common-cause membership checked against an independent LP
//! over deterministic local strategies.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use procgpt_core::decompose::{decompose_quasimixture, negativity, DecomposeMode};
use procgpt_core::samples::{noisy_pr_box, pr_box};
use procgpt_core::{MultipartiteChannel, Rational, Scalar};

/// Deterministic strategies `(a(x), b(y))` of two bit-to-bit parties as
/// columns of `P(ab|xy)`, row `2a + b`, column `2x + y`.
fn strategies() -> Vec<[[f64; 4]; 4]> {
    let mut out = Vec::new();
    for fa in 0..4usize {
        for fb in 0..4usize {
            let mut p = [[0.0; 4]; 4];
            for x in 0..2 {
                for y in 0..2 {
                    let a = (fa >> x) & 1;
                    let b = (fb >> y) & 1;
                    p[2 * a + b][2 * x + y] = 1.0;
                }
            }
            out.push(p);
        }
    }
    out
}

fn body(ch: &MultipartiteChannel<f64>) -> [[f64; 4]; 4] {
    let m = ch.body().matrix();
    let mut p = [[0.0; 4]; 4];
    for (r, row) in p.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m[(r, c)];
        }
    }
    p
}

/// `min Σ|w|` with `Σ w_λ D_λ = P`; returns `None` for infeasible
/// nonnegative problems.
fn lp(p: &[[f64; 4]; 4], signed: bool) -> Option<f64> {
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let s = strategies();
    let pos: Vec<_> = s.iter().map(|_| prob.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let neg: Vec<_> = if signed { s.iter().map(|_| prob.add_var(1.0, (0.0, f64::INFINITY))).collect() } else { vec![] };
    for r in 0..4 {
        for c in 0..4 {
            let mut expr: Vec<(minilp::Variable, f64)> = Vec::new();
            for (k, d) in s.iter().enumerate() {
                if d[r][c] != 0.0 {
                    expr.push((pos[k], d[r][c]));
                    if signed {
                        expr.push((neg[k], -d[r][c]));
                    }
                }
            }
            prob.add_constraint(&expr[..], ComparisonOp::Eq, p[r][c]);
        }
    }
    prob.solve().ok().map(|sol| sol.objective())
}

#[test]
fn pr_box_is_outside_the_local_polytope() {
    let pr = pr_box::<f64>().unwrap();
    assert!(lp(&body(&pr), false).is_none());
    let l1 = lp(&body(&pr), true).unwrap();
    assert!((l1 - 2.0).abs() < 1e-9);
    let exact = decompose_quasimixture(&pr_box::<Rational>().unwrap(), DecomposeMode::MinNegativity, 0.0).unwrap();
    assert_eq!(negativity(&exact), Rational::from_ratio(1, 2));
}

#[test]
fn negativity_tracks_local_membership_along_the_noise_line() {
    for k in 0..=16 {
        let v = k as f64 / 16.0;
        let ch = noisy_pr_box(v).unwrap();
        let local = lp(&body(&ch), false).is_some();
        let l1 = lp(&body(&ch), true).unwrap();
        let qm = decompose_quasimixture(&ch, DecomposeMode::MinNegativity, 1e-9).unwrap();
        let ours = negativity(&qm);
        assert_eq!(local, ours <= 1e-9, "v = {v}");
        assert!((1.0 + 2.0 * ours - l1).abs() < 1e-7, "v = {v}: {ours} vs {l1}");
        // exact agreement at rational visibility
        let exact = decompose_quasimixture(&noisy_pr_box(Rational::from_ratio(k, 16)).unwrap(), DecomposeMode::MinNegativity, 0.0)
            .unwrap();
        assert!((negativity(&exact).as_f64() - ours).abs() < 1e-9);
    }
}
