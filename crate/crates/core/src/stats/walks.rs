//! Scans over cocycle orbits τ_n(x): large deviations, maximal and
//! anticoncentration inequalities, cone visits and occupation counts.

use super::{linear_fit, Frequency, LinearFit};
use crate::base::BaseSystem;
use crate::cocycle::{norm, Cocycle, CocycleWalk};
use crate::error::{invalid, Error, Result};
use crate::parallel::{fold, Moments};
use crate::rng::stream;
use serde::Serialize;

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    a
}

fn increasing(grid: &[u64]) -> bool {
    !grid.is_empty() && grid.windows(2).all(|w| w[0] < w[1])
}

fn fit_nonzero(x: &[f64], freq: &[Frequency], transform: impl Fn(f64) -> f64) -> Option<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        x.iter().zip(freq).filter(|(_, f)| f.hits > 0).map(|(&x, f)| (transform(x), f.frequency.ln())).unzip();
    linear_fit(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub x: f64,
    #[serde(flatten)]
    pub estimate: Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeDeviationScan {
    pub epsilon: f64,
    pub mean: Vec<f64>,
    pub rows: Vec<GridRow>,
    /// −slope of log P vs log N over the rows with hits.
    pub kappa_hat: Option<f64>,
    pub fit: Option<LinearFit>,
}

/// μ(‖τ_N/N − ∫τ‖ ≥ ε) per N.
pub fn large_deviation_scan(
    tau: &Cocycle,
    base: &BaseSystem,
    epsilon: f64,
    n_grid: &[u64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<LargeDeviationScan> {
    if !(epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    if !increasing(n_grid) || n_grid[0] == 0 {
        return invalid("N grid must be strictly increasing and positive");
    }
    let mean = tau.mean(base)?;
    let d = tau.dim();
    let hits = fold(
        workers,
        samples,
        || vec![0u64; n_grid.len()],
        |acc, i| {
            let mut walk = CocycleWalk::new(tau, base, base.sample(&mut stream(seed, i)));
            let mut buf = vec![0.0; d];
            for (g, &n) in n_grid.iter().enumerate() {
                while walk.steps() < n {
                    walk.advance();
                }
                walk.sum_into(&mut buf);
                let dev: Vec<f64> = buf.iter().zip(&mean).map(|(s, m)| s / n as f64 - m).collect();
                acc[g] += u64::from(norm(&dev) >= epsilon);
            }
            Ok(())
        },
        add_counts,
    )?;
    let freq: Vec<Frequency> = hits.into_iter().map(|h| Frequency::new(h, samples)).collect();
    let x: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let fit = fit_nonzero(&x, &freq, f64::ln);
    let rows = x.iter().zip(&freq).map(|(&x, &estimate)| GridRow { x, estimate }).collect();
    Ok(LargeDeviationScan { epsilon, mean, rows, kappa_hat: fit.map(|f| -f.slope), fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailScan {
    pub m: u64,
    pub rows: Vec<GridRow>,
    pub fit: Option<LinearFit>,
}

fn scalar_zero_mean(tau: &Cocycle, base: &BaseSystem, scalar: bool) -> Result<()> {
    if scalar && tau.dim() != 1 {
        return invalid("a scalar cocycle is required");
    }
    let mean = tau.mean(base)?;
    if mean.iter().any(|m| m.abs() > 1e-12) {
        return Err(Error::NotZeroMean { mean });
    }
    Ok(())
}

/// μ(max_{n≤m} |τ_n| ≥ L√m) per L, with a fit of log-frequency against L².
pub fn maximal_inequality_scan(
    tau: &Cocycle,
    base: &BaseSystem,
    m: u64,
    l_grid: &[f64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<TailScan> {
    scalar_zero_mean(tau, base, true)?;
    if m < 256 {
        return invalid("m must be at least 256");
    }
    let root = (m as f64).sqrt();
    let hits = fold(
        workers,
        samples,
        || vec![0u64; l_grid.len()],
        |acc, i| {
            let mut walk = CocycleWalk::new(tau, base, base.sample(&mut stream(seed, i)));
            let mut buf = [0.0];
            let mut max = 0.0f64;
            for _ in 0..m {
                walk.advance();
                walk.sum_into(&mut buf);
                max = max.max(buf[0].abs());
            }
            for (a, l) in acc.iter_mut().zip(l_grid) {
                *a += u64::from(max >= l * root);
            }
            Ok(())
        },
        add_counts,
    )?;
    let freq: Vec<Frequency> = hits.into_iter().map(|h| Frequency::new(h, samples)).collect();
    let fit = fit_nonzero(l_grid, &freq, |l| l * l);
    let rows = l_grid.iter().zip(&freq).map(|(&x, &estimate)| GridRow { x, estimate }).collect();
    Ok(TailScan { m, rows, fit })
}

/// μ(‖τ_m‖ ≤ ε√m) per ε, with a log-log fit in ε.
pub fn anticoncentration_fixed_m(
    tau: &Cocycle,
    base: &BaseSystem,
    m: u64,
    epsilon_grid: &[f64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<TailScan> {
    scalar_zero_mean(tau, base, false)?;
    let root = (m as f64).sqrt();
    let hits = fold(
        workers,
        samples,
        || vec![0u64; epsilon_grid.len()],
        |acc, i| {
            let x = base.sample(&mut stream(seed, i));
            let s = match tau.fast_sum(base, &x, m) {
                Some(s) => s,
                None => {
                    let mut walk = CocycleWalk::new(tau, base, x);
                    for _ in 0..m {
                        walk.advance();
                    }
                    walk.sum()
                }
            };
            let r = norm(&s);
            for (a, e) in acc.iter_mut().zip(epsilon_grid) {
                *a += u64::from(r <= e * root);
            }
            Ok(())
        },
        add_counts,
    )?;
    let freq: Vec<Frequency> = hits.into_iter().map(|h| Frequency::new(h, samples)).collect();
    let fit = fit_nonzero(epsilon_grid, &freq, f64::ln);
    let rows = epsilon_grid.iter().zip(&freq).map(|(&x, &estimate)| GridRow { x, estimate }).collect();
    Ok(TailScan { m, rows, fit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeScan {
    pub horizon: u64,
    pub threshold: f64,
    /// Per orthant (sign pattern bit j set ⇔ coordinate j negative): fraction of
    /// samples whose visits reached norm above the threshold.
    pub per_cone: Vec<Frequency>,
    pub all_cones: Frequency,
    /// Mean over samples of the number of distinct orthants visited.
    pub mean_cones_visited: f64,
    #[serde(skip)]
    pub max_norms: Vec<Vec<f64>>,
}

/// Open orthant containing v, or `None` on a coordinate hyperplane.
pub fn orthant(v: &[f64]) -> Option<usize> {
    let mut idx = 0;
    for (j, &x) in v.iter().enumerate() {
        if x == 0.0 {
            return None;
        }
        if x < 0.0 {
            idx |= 1 << j;
        }
    }
    Some(idx)
}

/// Largest ‖τ_n‖ attained inside each orthant for 1 ≤ n ≤ horizon.
pub fn cone_visit_scan(
    tau: &Cocycle,
    base: &BaseSystem,
    horizon: u64,
    threshold: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<ConeScan> {
    let d = tau.dim();
    if !(2..=3).contains(&d) {
        return invalid("cone visits need d in {2, 3}");
    }
    scalar_zero_mean(tau, base, false)?;
    let cones = 1usize << d;
    let max_norms = crate::parallel::map(workers, samples, |i| {
        let mut walk = CocycleWalk::new(tau, base, base.sample(&mut stream(seed, i)));
        let mut buf = vec![0.0; d];
        let mut best = vec![0.0f64; cones];
        for _ in 0..horizon {
            walk.advance();
            walk.sum_into(&mut buf);
            if let Some(c) = orthant(&buf) {
                best[c] = best[c].max(norm(&buf));
            }
        }
        Ok(best)
    })?;
    let per_cone = (0..cones)
        .map(|c| Frequency::new(max_norms.iter().filter(|b| b[c] > threshold).count() as u64, samples))
        .collect();
    let all = max_norms.iter().filter(|b| b.iter().all(|&x| x > threshold)).count() as u64;
    let visited: u64 = max_norms.iter().map(|b| b.iter().filter(|&&x| x > 0.0).count() as u64).sum();
    Ok(ConeScan {
        horizon,
        threshold,
        per_cone,
        all_cones: Frequency::new(all, samples),
        mean_cones_visited: visited as f64 / samples as f64,
        max_norms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnRow {
    #[serde(rename = "N")]
    pub n: u64,
    /// Orbits with at least N^{0.24} returns to ‖τ_n‖ ≤ K ln N.
    pub many_returns: Frequency,
    /// E[ℓ] and E[ℓ²] for ℓ = #{n ≤ N : ‖τ_n‖ ≤ 1}.
    pub local_time_moments: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnScan {
    pub k: f64,
    pub rows: Vec<ReturnRow>,
    /// Log-log slopes of the two local-time moments in N.
    pub moment_slopes: [Option<f64>; 2],
}

/// Return statistics of τ_n near the origin over an N grid.
pub fn return_count_scan(
    tau: &Cocycle,
    base: &BaseSystem,
    k: f64,
    n_grid: &[u64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<ReturnScan> {
    if !increasing(n_grid) || n_grid[0] < 2 {
        return invalid("N grid must be strictly increasing with N >= 2");
    }
    let g = n_grid.len();
    let radii: Vec<f64> = n_grid.iter().map(|&n| k * (n as f64).ln()).collect();
    let (hits, moments) = fold(
        workers,
        samples,
        || (vec![0u64; g], Moments::new(2 * g)),
        |(hits, moments), i| {
            let mut walk = CocycleWalk::new(tau, base, base.sample(&mut stream(seed, i)));
            let mut buf = vec![0.0; tau.dim()];
            let max = *n_grid.last().expect("nonempty");
            let mut near = vec![0u64; g];
            let mut local = 0u64;
            let mut row = vec![0.0; 2 * g];
            let mut next = 0;
            for n in 1..=max {
                walk.advance();
                walk.sum_into(&mut buf);
                let r = norm(&buf);
                local += u64::from(r <= 1.0);
                for (c, rad) in near.iter_mut().zip(&radii) {
                    *c += u64::from(r <= *rad);
                }
                if n == n_grid[next] {
                    hits[next] += u64::from(near[next] as f64 >= (n as f64).powf(0.24));
                    row[2 * next] = local as f64;
                    row[2 * next + 1] = (local * local) as f64;
                    next += 1;
                }
            }
            moments.push(&row);
            Ok(())
        },
        |(a, ma), (b, mb)| (add_counts(a, b), ma.merge(mb)),
    )?;
    let rows: Vec<ReturnRow> = n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| ReturnRow {
            n,
            many_returns: Frequency::new(hits[j], samples),
            local_time_moments: [moments.mean(2 * j), moments.mean(2 * j + 1)],
        })
        .collect();
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let slope = |p: usize| {
        let y: Vec<f64> = rows.iter().map(|r| r.local_time_moments[p]).collect();
        if y.iter().any(|&v| v <= 0.0) {
            return None;
        }
        linear_fit(&x, &y.iter().map(|v| v.ln()).collect::<Vec<_>>()).map(|f| f.slope)
    };
    let moment_slopes = [slope(0), slope(1)];
    Ok(ReturnScan { k, rows, moment_slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{HyperbolicToralAutomorphism, MarkovShift};
    use crate::cocycle::{SmoothCocycle, SymbolCocycle};
    use crate::trig::TrigPolynomial;

    fn coin() -> (Cocycle, BaseSystem) {
        (
            Cocycle::Symbol(SymbolCocycle::single(vec![vec![1], vec![-1]]).unwrap()),
            BaseSystem::Markov(MarkovShift::uniform(2).unwrap()),
        )
    }

    fn cat() -> BaseSystem {
        BaseSystem::Automorphism(HyperbolicToralAutomorphism::cat())
    }

    #[test]
    fn large_deviation_trivial_cases() {
        let c = Cocycle::Constant { value: vec![2.0] };
        let r = large_deviation_scan(&c, &cat(), 0.01, &[4, 8, 16], 500, 1, 2).unwrap();
        assert!(r.rows.iter().all(|row| row.estimate.hits == 0));
        let (tau, base) = coin();
        let r = large_deviation_scan(&tau, &base, 1.5, &[4, 8, 16], 500, 1, 2).unwrap();
        assert!(r.rows.iter().all(|row| row.estimate.hits == 0));
    }

    #[test]
    fn anosov_large_deviations_decay() {
        let tau = Cocycle::Smooth(SmoothCocycle::new(vec![TrigPolynomial::cosine(vec![1, 0])], 2, false).unwrap());
        let grid: Vec<u64> = (6..=12).map(|k| 1u64 << k).collect();
        let r = large_deviation_scan(&tau, &cat(), 0.1, &grid, 20_000, 2, 4).unwrap();
        assert!(r.kappa_hat.unwrap() >= 1.0);
        assert!(r.rows.windows(2).all(|w| w[1].estimate.frequency <= w[0].estimate.frequency));
    }

    #[test]
    fn maximal_inequality_examples() {
        let (tau, base) = coin();
        let grid = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 40.0];
        let r = maximal_inequality_scan(&tau, &base, 1024, &grid, 20_000, 3, 4).unwrap();
        assert_eq!(r.rows[0].estimate.frequency, 1.0);
        assert_eq!(r.rows[7].estimate.hits, 0);
        // Brownian oracle: P(sup_{t≤1} |B_t| < L) = (4/π) Σ_k (−1)^k/(2k+1) exp(−(2k+1)²π²/(8L²)).
        let oracle = |l: f64| {
            let pi = std::f64::consts::PI;
            let inside: f64 = (0..50)
                .map(|k| {
                    let o = (2 * k + 1) as f64;
                    (-1f64).powi(k) / o * (-o * o * pi * pi / (8.0 * l * l)).exp()
                })
                .sum::<f64>()
                * 4.0
                / pi;
            1.0 - inside
        };
        for row in &r.rows[1..7] {
            let oracle = oracle(row.x);
            assert!((row.estimate.frequency - oracle).abs() < 0.03 + 5.0 * row.estimate.std_error, "{row:?}");
        }
        assert!(r.fit.unwrap().r_squared >= 0.9);
    }

    #[test]
    fn anticoncentration_examples() {
        let (tau, base) = coin();
        let eps = [0.05, 0.1, 0.2, 0.4, 100.0];
        let r = anticoncentration_fixed_m(&tau, &base, 4096, &eps, 20_000, 4, 4).unwrap();
        assert_eq!(r.rows[4].estimate.frequency, 1.0);
        assert!(r.rows.windows(2).all(|w| w[0].estimate.hits <= w[1].estimate.hits));
        let ratio = r.rows[1].estimate.frequency / r.rows[2].estimate.frequency;
        assert!((ratio - 0.5).abs() <= 0.1, "{ratio}");
    }

    #[test]
    fn cone_visit_examples() {
        let tau = Cocycle::Symbol(SymbolCocycle::simple_walk(2, 1).unwrap());
        let base = BaseSystem::Markov(MarkovShift::uniform(4).unwrap());
        let r = cone_visit_scan(&tau, &base, 1, 0.0, 200, 5, 2).unwrap();
        assert!(r.max_norms.iter().all(|b| b.iter().filter(|&&x| x > 0.0).count() <= 1));
        let diag = Cocycle::Symbol(SymbolCocycle::single(vec![vec![1, 1], vec![-1, -1], vec![1, -1], vec![-1, 1]]).unwrap());
        let r = cone_visit_scan(&diag, &base, 1, 0.0, 200, 5, 2).unwrap();
        assert!(r.max_norms.iter().all(|b| b.iter().filter(|&&x| x > 0.0).count() == 1));
        let drift = Cocycle::Symbol(SymbolCocycle::single(vec![vec![1, 1]; 4]).unwrap());
        assert!(matches!(cone_visit_scan(&drift, &base, 10, 0.0, 10, 5, 2), Err(Error::NotZeroMean { .. })));
        let r = cone_visit_scan(&tau, &base, 100_000, 10.0, 200, 6, 4).unwrap();
        for c in &r.per_cone {
            assert!(c.frequency >= 0.8);
            assert!(r.all_cones.frequency <= c.frequency);
            for other in &r.per_cone {
                assert!((c.frequency - other.frequency).abs() <= 5.0 * c.std_error.max(other.std_error));
            }
        }
    }

    #[test]
    fn orthant_indexing() {
        assert_eq!(orthant(&[1.0, 2.0]), Some(0));
        assert_eq!(orthant(&[-1.0, 2.0]), Some(1));
        assert_eq!(orthant(&[1.0, -2.0, -1.0]), Some(6));
        assert_eq!(orthant(&[0.0, 1.0]), None);
    }

    #[test]
    fn return_counts() {
        let (tau, base) = coin();
        let r = return_count_scan(&tau, &base, 1.0, &[64, 256], 2000, 7, 2).unwrap();
        // Recurrent walk: E ℓ grows like √N.
        let s = r.moment_slopes[0].unwrap();
        assert!((s - 0.5).abs() < 0.15, "{s}");
        assert!(r.rows[1].many_returns.frequency >= r.rows[0].many_returns.frequency - 0.1);
    }
}
