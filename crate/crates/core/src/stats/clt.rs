//! Distributional experiments on skew-product Birkhoff sums: CLT tests,
//! Green–Kubo variance, correlation decay and the coboundary test.

use super::ks::ks_normal;
use super::{linear_fit, LinearFit};
use crate::base::CompensatedSum;
use crate::error::{invalid, Error, Result};
use crate::parallel::{fold, map, Moments};
use crate::rng::stream;
use crate::skew::{birkhoff_sum, BaseFunction, Observable, SkewSystem};
use serde::{Deserialize, Serialize};

pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// a_N = √N.
    #[default]
    Sqrt,
    /// a_N = √(N ln N).
    SqrtLog,
    /// a_N = N / ln^{1/4} N.
    LogQuarter,
}

impl Normalization {
    pub fn scale(self, n: u64) -> f64 {
        let x = n as f64;
        match self {
            Normalization::Sqrt => x.sqrt(),
            Normalization::SqrtLog => (x * x.ln().max(f64::MIN_POSITIVE)).sqrt(),
            Normalization::LogQuarter => x / x.ln().max(f64::MIN_POSITIVE).powf(0.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; bins];
        if values.is_empty() {
            return Self { lo: 0.0, hi: 0.0, counts };
        }
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let b = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
            counts[b] += 1;
        }
        Self { lo, hi, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub samples: u64,
    pub normalization: Normalization,
    pub a_n: f64,
    pub mean: f64,
    pub variance: f64,
    /// KS distance to N(0, σ̂²); `None` when the variance is zero.
    pub ks: Option<f64>,
    pub degenerate_variance: bool,
    pub histogram: Histogram,
    pub seed: u64,
    /// H_N / a_N per sample, in sample order.
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Builds a report from already normalised samples.
pub fn clt_report_from_samples(values: Vec<f64>, n: u64, normalization: Normalization, seed: u64) -> CltReport {
    let mut m = Moments::new(1);
    for &v in &values {
        m.push(&[v]);
    }
    let (mean, variance) = (m.mean(0), m.variance(0));
    let degenerate = !(variance > 0.0);
    let ks = if degenerate {
        None
    } else {
        let mut sorted = values.clone();
        Some(ks_normal(&mut sorted, variance.sqrt()))
    };
    CltReport {
        n,
        samples: values.len() as u64,
        normalization,
        a_n: normalization.scale(n),
        mean,
        variance,
        ks,
        degenerate_variance: degenerate,
        histogram: Histogram::new(&values, HISTOGRAM_BINS),
        seed,
        values,
    }
}

/// Distribution of H_N/a_N over M initial points drawn from μ × ν.
pub fn clt_experiment(
    system: &SkewSystem,
    observable: &Observable,
    n: u64,
    samples: u64,
    normalization: Normalization,
    seed: u64,
    workers: usize,
) -> Result<CltReport> {
    if samples < 500 {
        return invalid("clt_experiment needs at least 500 samples");
    }
    if n == 0 {
        return invalid("N must be positive");
    }
    let a_n = normalization.scale(n);
    let values = map(workers, samples, |i| {
        let state = system.sample(&mut stream(seed, i));
        Ok(birkhoff_sum(system, observable, &state, n)? / a_n)
    })?;
    Ok(clt_report_from_samples(values, n, normalization, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagTerm {
    pub k: u64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenKubo {
    pub sigma2: f64,
    pub std_error: f64,
    #[serde(rename = "L")]
    pub truncation: u64,
    pub window: u64,
    /// c_k for k = 0..=L; σ² = c_0 + 2 Σ_{k≥1} c_k.
    pub terms: Vec<LagTerm>,
}

fn zero_mean_base_function(system: &SkewSystem, f: &BaseFunction) -> bool {
    use crate::base::BaseSystem;
    let mean = match (f, &system.base) {
        (BaseFunction::Trig { poly }, _) => poly.mean(),
        (BaseFunction::Symbol { values }, BaseSystem::Markov(m)) => {
            values.iter().zip(m.stationary()).map(|(v, p)| v * p).sum()
        }
        _ => return false,
    };
    mean.abs() < 1e-12
}

/// Lagged products H_t·H_{t+k} averaged over a window of `window` starting
/// times along each orbit, then over samples.
fn lagged_products(
    system: &SkewSystem,
    pair: (&Observable, &Observable),
    lags: &[u64],
    window: u64,
    samples: u64,
    seed: u64,
    workers: usize,
    with_sum: bool,
) -> Result<Moments> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let len = lags.len() + usize::from(with_sum);
    fold(
        workers,
        samples,
        || Moments::new(len),
        |acc, i| {
            let mut state = system.sample(&mut stream(seed, i));
            let horizon = (window + max_lag) as usize;
            let mut a = Vec::with_capacity(window as usize);
            let mut b = Vec::with_capacity(horizon);
            for t in 0..horizon {
                if t < window as usize {
                    a.push(pair.0.eval(system, &state)?);
                }
                b.push(pair.1.eval(system, &state)?);
                system.step(&mut state)?;
            }
            let mut row = Vec::with_capacity(len);
            for &k in lags {
                let mut s = CompensatedSum::default();
                for t in 0..window as usize {
                    s.add(a[t] * b[t + k as usize]);
                }
                row.push(s.value() / window as f64);
            }
            if with_sum {
                let s: f64 = row[0] + 2.0 * row[1..].iter().sum::<f64>();
                row.push(s);
            }
            acc.push(&row);
            Ok(())
        },
        Moments::merge,
    )
}

/// σ² = Σ_{|k|≤L} ∫∫ H·H∘F^k, with the lag terms estimated along orbits.
pub fn green_kubo_variance(
    system: &SkewSystem,
    observable: &Observable,
    truncation: u64,
    samples: u64,
    window: u64,
    seed: u64,
    workers: usize,
) -> Result<GreenKubo> {
    let admissible = observable.is_fiber_mean_zero()
        || matches!(observable, Observable::Coboundary(_))
        || matches!(observable, Observable::BaseOnly(f) if zero_mean_base_function(system, f));
    if !admissible {
        return Err(Error::NotFiberMeanZero);
    }
    if truncation > 200 {
        return invalid("truncation lag must be at most 200");
    }
    if samples < 2 || window == 0 {
        return invalid("need at least two samples and a positive window");
    }
    let lags: Vec<u64> = (0..=truncation).collect();
    let m = lagged_products(system, (observable, observable), &lags, window, samples, seed, workers, true)?;
    let terms = lags.iter().enumerate().map(|(i, &k)| LagTerm { k, value: m.mean(i), std_error: m.std_error(i) }).collect();
    let last = lags.len();
    Ok(GreenKubo { sigma2: m.mean(last), std_error: m.std_error(last), truncation, window, terms })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub lags: Vec<u64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Lags with |ρ_n| above three standard errors.
    pub fitted_lags: Vec<u64>,
    pub all_lags_pass: bool,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
}

/// ρ_n = ∫ A · B∘F^n dζ for mean-zero A, B, with a log-log fit of |ρ_n|.
pub fn correlation_decay(
    system: &SkewSystem,
    pair: (&Observable, &Observable),
    lags: &[u64],
    samples: u64,
    window: u64,
    seed: u64,
    workers: usize,
) -> Result<DecayFit> {
    if lags.is_empty() || window == 0 {
        return invalid("need a nonempty lag grid and a positive window");
    }
    let m = lagged_products(system, pair, lags, window, samples, seed, workers, false)?;
    let values: Vec<f64> = (0..lags.len()).map(|i| m.mean(i)).collect();
    let std_errors: Vec<f64> = (0..lags.len()).map(|i| m.std_error(i)).collect();
    let keep: Vec<usize> = (0..lags.len()).filter(|&i| lags[i] > 0 && values[i].abs() > 3.0 * std_errors[i]).collect();
    if keep.len() < 2 {
        return Err(Error::AllLagsBelowNoise);
    }
    let x: Vec<f64> = keep.iter().map(|&i| (lags[i] as f64).ln()).collect();
    let y: Vec<f64> = keep.iter().map(|&i| values[i].abs().ln()).collect();
    let fit = linear_fit(&x, &y).ok_or(Error::AllLagsBelowNoise)?;
    Ok(DecayFit {
        lags: lags.to_vec(),
        values,
        std_errors,
        fitted_lags: keep.iter().map(|&i| lags[i]).collect(),
        all_lags_pass: keep.len() == lags.iter().filter(|&&k| k > 0).count(),
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        slope_std_error: fit.slope_std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Diffusive,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub l2_norm: f64,
    pub sup_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoboundaryReport {
    pub rows: Vec<NormRow>,
    pub fit: Option<LinearFit>,
    pub verdict: Verdict,
    /// For constructed coboundaries A = B∘F − B: whether |A_N| ≤ 2‖B‖_∞ held for every sample.
    pub telescoping_bound: Option<bool>,
}

pub const BOUNDED_SLOPE: f64 = 0.1;
pub const DIFFUSIVE_SLOPES: (f64, f64) = (0.4, 0.6);

/// Growth of ‖A_N‖₂ over an N grid, classified by its log-log slope.
pub fn coboundary_test(
    system: &SkewSystem,
    observable: &Observable,
    n_grid: &[u64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<CoboundaryReport> {
    if n_grid.len() < 2 || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return invalid("N grid must be strictly increasing and positive");
    }
    let g = n_grid.len();
    let (sq, sup) = fold(
        workers,
        samples,
        || (Moments::new(g), vec![0.0f64; g]),
        |(m, sup), i| {
            let mut state = system.sample(&mut stream(seed, i));
            let mut sum = CompensatedSum::default();
            let mut row = Vec::with_capacity(g);
            let mut t = 0u64;
            for (j, &n) in n_grid.iter().enumerate() {
                while t < n {
                    sum.add(observable.eval(system, &state)?);
                    system.step(&mut state)?;
                    t += 1;
                }
                let v = sum.value();
                row.push(v * v);
                sup[j] = sup[j].max(v.abs());
            }
            m.push(&row);
            Ok(())
        },
        |(a, sa), (b, sb)| (a.merge(b), sa.iter().zip(sb).map(|(x, y)| x.max(y)).collect()),
    )?;
    let rows: Vec<NormRow> =
        n_grid.iter().enumerate().map(|(j, &n)| NormRow { n, l2_norm: sq.mean(j).sqrt(), sup_abs: sup[j] }).collect();
    let telescoping_bound = match observable {
        Observable::Coboundary(b) => Some(rows.iter().all(|r| r.sup_abs <= 2.0 * b.sup() + 1e-9)),
        _ => None,
    };
    if rows.iter().all(|r| r.l2_norm == 0.0) {
        return Ok(CoboundaryReport { rows, fit: None, verdict: Verdict::Bounded, telescoping_bound });
    }
    if rows.iter().any(|r| r.l2_norm == 0.0) {
        return Ok(CoboundaryReport { rows, fit: None, verdict: Verdict::Indeterminate, telescoping_bound });
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.l2_norm.ln()).collect();
    let fit = linear_fit(&x, &y);
    let verdict = match fit {
        Some(f) if f.slope <= BOUNDED_SLOPE => Verdict::Bounded,
        Some(f) if (DIFFUSIVE_SLOPES.0..=DIFFUSIVE_SLOPES.1).contains(&f.slope) => Verdict::Diffusive,
        _ => Verdict::Indeterminate,
    };
    Ok(CoboundaryReport { rows, fit, verdict, telescoping_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{BaseSystem, HyperbolicToralAutomorphism, MarkovShift};
    use crate::cocycle::{Cocycle, IndicatorCocycle, SymbolCocycle};
    use crate::fiber::{FiberAction, FiberFunction, ToralZdAction};
    use crate::skew::{make_coboundary, FiberObservable, Rounding};
    use crate::stats::ks::ks_critical_value;
    use crate::trig::TrigPolynomial;
    use rand_distr::{Distribution, StandardNormal};

    fn two_shift_system() -> SkewSystem {
        SkewSystem::new(
            BaseSystem::Markov(MarkovShift::uniform(2).unwrap()),
            FiberAction::Toral(ToralZdAction::cat()),
            Cocycle::Symbol(SymbolCocycle::single(vec![vec![1], vec![-1]]).unwrap()),
            Rounding::None,
        )
        .unwrap()
    }

    fn sign_observable() -> Observable {
        Observable::BaseOnly(BaseFunction::Symbol { values: vec![1.0, -1.0] })
    }

    fn cat_system() -> SkewSystem {
        SkewSystem::new(
            BaseSystem::Automorphism(HyperbolicToralAutomorphism::cat()),
            FiberAction::Toral(ToralZdAction::cat()),
            Cocycle::Indicator(IndicatorCocycle::new(vec![1], vec![1], vec![0.0, 0.0], vec![0.5, 1.0]).unwrap()),
            Rounding::None,
        )
        .unwrap()
    }

    #[test]
    fn zero_observable_is_degenerate() {
        let r = clt_experiment(&two_shift_system(), &Observable::Constant(0.0), 64, 500, Normalization::Sqrt, 1, 2).unwrap();
        assert!(r.degenerate_variance && r.ks.is_none());
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coboundary_variance_vanishes() {
        let sys = two_shift_system();
        let b = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 0]))));
        let a = make_coboundary(b.clone());
        for n in [16u64, 256, 4096] {
            let r = clt_experiment(&sys, &a, n, 500, Normalization::Sqrt, 2, 4).unwrap();
            assert!(r.variance * (500.0 - 1.0) / 500.0 <= (2.0 * b.sup()).powi(2) / n as f64 + 1e-12);
        }
    }

    #[test]
    fn iid_observable_is_gaussian() {
        let r = clt_experiment(&two_shift_system(), &sign_observable(), 1024, 2000, Normalization::Sqrt, 3, 4).unwrap();
        assert!(r.ks.unwrap() < ks_critical_value(2000, 0.01));
        assert!((r.variance - 1.0).abs() < 0.1);
        assert_eq!(r.histogram.counts.iter().sum::<u64>(), 2000);
    }

    #[test]
    fn ks_self_consistency() {
        let crit = ks_critical_value(1000, 0.01);
        let mut below = 0;
        for trial in 0..100u64 {
            let mut rng = stream(77, trial);
            let values: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = clt_report_from_samples(values, 1, Normalization::Sqrt, 77);
            below += u32::from(r.ks.unwrap() < crit);
        }
        assert!(below >= 95, "{below}");
    }

    #[test]
    fn deterministic_across_workers() {
        let sys = cat_system();
        let h = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 0]))));
        let a = clt_experiment(&sys, &h, 128, 600, Normalization::Sqrt, 4, 1).unwrap();
        let b = clt_experiment(&sys, &h, 128, 600, Normalization::Sqrt, 4, 8).unwrap();
        assert_eq!(a, b);
        let g1 = green_kubo_variance(&sys, &h, 5, 300, 8, 4, 1).unwrap();
        let g8 = green_kubo_variance(&sys, &h, 5, 300, 8, 4, 8).unwrap();
        assert_eq!(g1, g8);
    }

    #[test]
    fn green_kubo_iid_base() {
        let g = green_kubo_variance(&two_shift_system(), &sign_observable(), 10, 2000, 32, 5, 4).unwrap();
        assert_eq!(g.terms[0].value, 1.0);
        for t in &g.terms[1..] {
            assert!(t.value.abs() <= 4.0 * t.std_error);
        }
        assert!((g.sigma2 - 1.0).abs() <= 4.0 * g.std_error);
    }

    #[test]
    fn green_kubo_requires_fiber_mean_zero() {
        let h = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 0]).plus_constant(1.0))));
        assert!(matches!(green_kubo_variance(&cat_system(), &h, 5, 100, 8, 1, 1), Err(Error::NotFiberMeanZero)));
    }

    #[test]
    fn green_kubo_of_coboundary_vanishes() {
        let inner = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 1]))));
        let g = green_kubo_variance(&cat_system(), &make_coboundary(inner), 5, 2000, 16, 6, 4).unwrap();
        assert!(g.sigma2.abs() <= 3.0 * g.std_error, "{} {}", g.sigma2, g.std_error);
    }

    #[test]
    fn decay_examples() {
        let sys = two_shift_system();
        let a = sign_observable();
        let d = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 0]))));
        let r = correlation_decay(&sys, (&a, &d), &[0, 1, 2, 4], 2000, 8, 7, 4);
        assert!(matches!(r, Err(Error::AllLagsBelowNoise)));
        let ones = Observable::Constant(1.0);
        let r = correlation_decay(&sys, (&ones, &ones), &[0, 1, 2], 100, 4, 7, 2).unwrap();
        assert_eq!(r.values, vec![1.0; 3]);
        let c = crate::parallel::fold(2, 4000, || Moments::new(1), |m, i| {
            let s = sys.sample(&mut stream(8, i));
            m.push(&[d.eval(&sys, &s).unwrap().powi(2)]);
            Ok(())
        }, Moments::merge).unwrap();
        assert!((c.mean(0) - 0.5).abs() < 4.0 * c.std_error(0));
    }

    #[test]
    fn coboundary_verdicts() {
        let sys = two_shift_system();
        let grid = [16u64, 64, 256, 1024];
        let b = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 1]))));
        let r = coboundary_test(&sys, &make_coboundary(b), &grid, 500, 9, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
        assert_eq!(r.telescoping_bound, Some(true));
        let r = coboundary_test(&sys, &sign_observable(), &grid, 2000, 9, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Diffusive, "{:?}", r.fit);
        let r = coboundary_test(&sys, &Observable::Constant(0.0), &grid, 500, 9, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Bounded);
    }

    #[test]
    fn normalizations() {
        assert_eq!(Normalization::Sqrt.scale(16), 4.0);
        assert!((Normalization::SqrtLog.scale(16) - (16.0 * 16f64.ln()).sqrt()).abs() < 1e-12);
        assert!((Normalization::LogQuarter.scale(16) - 16.0 / 16f64.ln().powf(0.25)).abs() < 1e-12);
    }
}
