//! Statistics of special flows over rotations with singular roofs.

use super::{linear_fit, Frequency, LinearFit};
use crate::arithmetic::{continued_fraction, theta_min_direct_raw, theta_min_euclid_raw, THETA_MIN_DIRECT_LIMIT};
use crate::base::{CompensatedSum, RoofFunction, RoofKind, SpecialFlow};
use crate::cocycle::{continuous_cocycle_integral, FlowFunction};
use crate::error::{invalid, Result};
use crate::parallel::{map, Moments};
use crate::rng::{derive_seed, stream};
use crate::torus::{from_fixed, to_fixed};
use rand::Rng as _;
use serde::Serialize;

pub const DEVIATION_EXPONENT: f64 = 0.49;
const MEAN_BATCHES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub bound: f64,
    pub within: Frequency,
    pub mean_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub mu_hat: f64,
    pub mu_std_error: f64,
    pub rows: Vec<DeviationRow>,
}

/// μ(H̄) from a single long orbit, with a batch-means standard error.
pub fn long_orbit_mean(flow: &SpecialFlow, hbar: &FlowFunction, total_time: f64, seed: u64) -> Result<(f64, f64)> {
    if let Some(c) = hbar.is_constant() {
        return Ok((c, 0.0));
    }
    let batch = total_time / MEAN_BATCHES as f64;
    let mut state = flow.sample(&mut stream(derive_seed(seed, "long-orbit"), 0));
    let mut m = Moments::new(1);
    for _ in 0..MEAN_BATCHES {
        let integral = continuous_cocycle_integral(hbar, flow, state, batch)?;
        m.push(&[integral / batch]);
        state = flow.evolve(state, batch)?.0;
    }
    Ok((m.mean(0), m.std_error(0)))
}

/// Fraction of initial states with |H̄_T − T μ̂(H̄)| ≤ T^{0.49}, per T.
pub fn special_flow_deviation(
    flow: &SpecialFlow,
    hbar: &FlowFunction,
    t_grid: &[f64],
    samples: u64,
    mean_time: f64,
    seed: u64,
    workers: usize,
) -> Result<DeviationReport> {
    if t_grid.iter().any(|t| !(*t >= 0.0)) {
        return invalid("T values must be nonnegative");
    }
    let (mu_hat, mu_std_error) = long_orbit_mean(flow, hbar, mean_time, seed)?;
    let deviations = map(workers, samples, |i| {
        let x = flow.sample(&mut stream(seed, i));
        t_grid.iter().map(|&t| Ok((continuous_cocycle_integral(hbar, flow, x, t)? - t * mu_hat).abs())).collect::<Result<Vec<f64>>>()
    })?;
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(g, &t)| {
            let bound = t.powf(DEVIATION_EXPONENT);
            let within = deviations.iter().filter(|d| d[g] <= bound).count() as u64;
            let mut mean = CompensatedSum::default();
            deviations.iter().for_each(|d| mean.add(d[g]));
            DeviationRow { t, bound, within: Frequency::new(within, samples), mean_abs_deviation: mean.value() / samples as f64 }
        })
        .collect();
    Ok(DeviationReport { mu_hat, mu_std_error, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KoksmaRow {
    pub n: usize,
    pub q_n: u64,
    pub max_ratio: f64,
    pub mean_log_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KoksmaReport {
    pub gamma: f64,
    pub integral: f64,
    pub rows: Vec<KoksmaRow>,
    /// Slope of ln(max ratio) against ln q_n.
    pub max_ratio_fit: Option<LinearFit>,
    /// Slope of the mean log-ratio against ln q_n.
    pub mean_log_ratio_fit: Option<LinearFit>,
    /// ratio[i][n] for sample i.
    #[serde(skip)]
    pub ratios: Vec<Vec<f64>>,
}

fn singularity_exponent(j: &RoofFunction) -> f64 {
    match j.kind {
        RoofKind::Power { gamma, .. } => gamma,
        _ => 0.0,
    }
}

/// |J_{q_n}(θ) − q_n ∫J| · θ_min(θ, α, q_n)^γ over random θ and n ≤ n_max.
pub fn denjoy_koksma_check(j: &RoofFunction, alpha: f64, n_max: usize, theta_samples: u64, seed: u64, workers: usize) -> Result<KoksmaReport> {
    let cf = continued_fraction(alpha, n_max.max(1))?;
    let gamma = singularity_exponent(j);
    let integral = j.numerical_integral();
    let a = to_fixed(alpha);
    let qs: Vec<u64> = (0..=n_max).map(|n| cf.q(n)).collect();
    let ratios = map(workers, theta_samples, |i| {
        let theta: u64 = stream(seed, i).random();
        let mut out = Vec::with_capacity(qs.len());
        for &q in &qs {
            let mut sum = CompensatedSum::default();
            let mut x = theta;
            for _ in 0..q {
                sum.add(j.eval_fixed(x)?);
                x = x.wrapping_add(a);
            }
            let raw = if q <= THETA_MIN_DIRECT_LIMIT { theta_min_direct_raw(theta, a, q) } else { theta_min_euclid_raw(theta, a, q) };
            let dist = from_fixed(raw);
            let dev = (sum.value() - q as f64 * integral).abs();
            out.push(dev * dist.powf(gamma));
        }
        Ok(out)
    })?;
    let rows: Vec<KoksmaRow> = qs
        .iter()
        .enumerate()
        .map(|(n, &q)| {
            let max_ratio = ratios.iter().map(|r| r[n]).fold(0.0, f64::max);
            let logs: Vec<f64> = ratios.iter().map(|r| r[n]).filter(|&r| r > 0.0).map(f64::ln).collect();
            let mean_log_ratio = (!logs.is_empty()).then(|| logs.iter().sum::<f64>() / logs.len() as f64);
            KoksmaRow { n, q_n: q, max_ratio, mean_log_ratio }
        })
        .collect();
    let fit_of = |ys: Vec<Option<f64>>| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            rows.iter().zip(ys).filter_map(|(r, y)| y.map(|y| ((r.q_n as f64).ln(), y))).unzip();
        if y.len() < rows.len() { None } else { linear_fit(&x, &y) }
    };
    let max_ratio_fit = fit_of(rows.iter().map(|r| (r.max_ratio > 0.0).then(|| r.max_ratio.ln())).collect());
    let mean_log_ratio_fit = fit_of(rows.iter().map(|r| r.mean_log_ratio).collect());
    Ok(KoksmaReport { gamma, integral, rows, max_ratio_fit, mean_log_ratio_fit, ratios })
}
