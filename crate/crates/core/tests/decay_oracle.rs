//! Correlations of cos(2πy₁) under the lazy ℤ³ walk driving the Cartan action
//! equal half the return probability of the walk, which a lattice recursion
//! computes exactly.

use kalikow_core::base::{BaseSystem, MarkovShift};
use kalikow_core::cocycle::{Cocycle, SymbolCocycle};
use kalikow_core::fiber::{FiberAction, FiberFunction, ToralZdAction};
use kalikow_core::skew::{FiberObservable, Observable, Rounding, SkewSystem};
use kalikow_core::stats::clt::correlation_decay;
use kalikow_core::trig::TrigPolynomial;

fn steps() -> Vec<Vec<i64>> {
    let mut v = vec![vec![0, 0, 0]];
    for j in 0..3 {
        for s in [10, -10] {
            let mut e = vec![0; 3];
            e[j] = s;
            v.push(e);
        }
    }
    v
}

/// P(S_n = 0) for the walk with seven equally likely steps {0, ±e_j}.
fn return_probability(n: usize) -> f64 {
    let w = 2 * n + 1;
    let idx = |x: usize, y: usize, z: usize| (x * w + y) * w + z;
    let mut p = vec![0.0; w * w * w];
    p[idx(n, n, n)] = 1.0;
    for _ in 0..n {
        let mut q = vec![0.0; w * w * w];
        for x in 0..w {
            for y in 0..w {
                for z in 0..w {
                    let v = p[idx(x, y, z)];
                    if v == 0.0 {
                        continue;
                    }
                    let share = v / 7.0;
                    q[idx(x, y, z)] += share;
                    q[idx(x + 1, y, z)] += share;
                    q[idx(x - 1, y, z)] += share;
                    q[idx(x, y + 1, z)] += share;
                    q[idx(x, y - 1, z)] += share;
                    q[idx(x, y, z + 1)] += share;
                    q[idx(x, y, z - 1)] += share;
                }
            }
        }
        p = q;
    }
    p[idx(n, n, n)]
}

#[test]
fn return_probability_small_cases() {
    assert_eq!(return_probability(0), 1.0);
    assert!((return_probability(1) - 1.0 / 7.0).abs() < 1e-15);
    assert!((return_probability(2) - 7.0 / 49.0).abs() < 1e-15);
}

#[test]
fn lagged_correlations_match_half_return_probability() {
    let sys = SkewSystem::new(
        BaseSystem::Markov(MarkovShift::uniform(7).unwrap()),
        FiberAction::Toral(ToralZdAction::cartan_t4()),
        Cocycle::Symbol(SymbolCocycle::single(steps()).unwrap()),
        Rounding::None,
    )
    .unwrap();
    let h = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 0]))));
    let lags = [1u64, 2, 4, 8, 16];
    let fit = correlation_decay(&sys, (&h, &h), &lags, 2000, 200, 31, 4).unwrap();
    for (i, &lag) in lags.iter().enumerate() {
        let exact = 0.5 * return_probability(lag as usize);
        let err = (fit.values[i] - exact).abs();
        assert!(err <= 4.0 * fit.std_errors[i], "lag {lag}: {} vs {exact} (se {})", fit.values[i], fit.std_errors[i]);
    }
}
