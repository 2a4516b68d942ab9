//! Executes one configured experiment and collects its JSON result and CSV table.

use crate::config::{ExperimentConfig, ExperimentSpec};
use crate::error::CliError;
use crate::system;
use kalikow_core::arithmetic::{
    continued_fraction, minkowski_postconditions, minkowski_search, ostrowski_expand, sobolev_ergodic_sum_norm,
    theta_min, Complex, DiophantineVector,
};
use kalikow_core::base::RoofKind;
use kalikow_core::cocycle::{anticoncentration_scan, norm, CocycleWalk};
use kalikow_core::parallel::{map, Moments};
use kalikow_core::probe::{
    d_set_measure, good_pair_count, is_close, omega1_frequency, ClosenessParams, GoodPairParams, ProbePoint,
    ProbeSystem,
};
use kalikow_core::rng::{derive_seed, stream};
use kalikow_core::skew::{occupation_measure, prbg_condition_b};
use kalikow_core::stats::clt::{clt_experiment, coboundary_test, correlation_decay, green_kubo_variance, Normalization};
use kalikow_core::stats::flows::{denjoy_koksma_check, special_flow_deviation};
use kalikow_core::stats::walks::{cone_visit_scan, large_deviation_scan, maximal_inequality_scan};
use kalikow_core::torus::TorusPoint;
use rand::Rng as _;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// Past and future margin, in symbols, around the compared window of a probe point.
const PROBE_MARGIN: usize = 32;

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub units: BTreeMap<String, String>,
}

impl Outcome {
    fn new(result: Value, columns: &[&str]) -> Self {
        Self { result, columns: columns.iter().map(|s| s.to_string()).collect(), rows: vec![], units: BTreeMap::new() }
    }

    fn unit(mut self, key: &str, text: impl Into<String>) -> Self {
        self.units.insert(key.into(), text.into());
        self
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn bad<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::ConfigInvalid(msg.into()))
}

fn strictly_increasing(grid: &[u64]) -> bool {
    !grid.is_empty() && grid.windows(2).all(|w| w[0] < w[1])
}

fn tau_columns(d: usize, prefix: &str) -> Vec<String> {
    (1..=d).map(|j| format!("{prefix}_{j}")).collect()
}

pub fn execute(cfg: &ExperimentConfig, seed: u64, workers: usize) -> Result<Outcome, CliError> {
    match &cfg.experiment {
        ExperimentSpec::Cf { alpha, depth } => {
            let cf = continued_fraction(*alpha, *depth)?;
            let mut out = Outcome::new(to_value(&cf), &["k", "a_k", "p_k", "q_k"]);
            for k in 0..cf.denominators.len() {
                let a = if k == 0 { String::new() } else { cf.a(k).to_string() };
                out.rows.push(vec![k.to_string(), a, cf.numerators[k].to_string(), cf.denominators[k].to_string()]);
            }
            Ok(out)
        }
        ExperimentSpec::Ostrowski { alpha, depth, n } => {
            let cf = continued_fraction(*alpha, *depth)?;
            let digits = n.iter().map(|&n| ostrowski_expand(n, &cf)).collect::<Result<Vec<_>, _>>()?;
            let mut out = Outcome::new(json!({ "continued_fraction": cf, "expansions": digits }), &["N", "k", "b_k", "q_k"]);
            for d in &digits {
                for (k, b) in d.digits.iter().enumerate() {
                    out.rows.push(vec![d.n.to_string(), k.to_string(), b.to_string(), cf.q(k).to_string()]);
                }
            }
            Ok(out)
        }
        ExperimentSpec::Thetamin { theta, alpha, n } => {
            if n.iter().any(|&n| n == 0) {
                return bad("N must be positive");
            }
            let values: Vec<f64> = n.iter().map(|&n| theta_min(*theta, *alpha, n)).collect();
            let mut out = Outcome::new(json!({ "theta": theta, "alpha": alpha, "N": n, "theta_min": values }), &["N", "theta_min"]);
            out.rows = n.iter().zip(&values).map(|(n, v)| vec![n.to_string(), f(*v)]).collect();
            Ok(out)
        }
        ExperimentSpec::Minkowski { alphas, n } => minkowski(alphas, n),
        ExperimentSpec::Reconstruct { alphas, reconstructions, depth } => reconstruct(*alphas, *reconstructions, *depth, seed),
        ExperimentSpec::Sobolev { alpha, r, frequencies, radius, n } => sobolev(alpha, *r, *frequencies, *radius, n, seed),
        ExperimentSpec::Orbit { n } => {
            let sys = system::skew_system(cfg)?;
            let x = sys.base.sample(&mut stream(seed, 0));
            let d = sys.d();
            let mut cols = vec!["n".to_string()];
            cols.extend(tau_columns(d, "tau"));
            let mut out = Outcome::new(Value::Null, &[]).unit("n", "base steps");
            out.columns = cols;
            let mut walk = CocycleWalk::new(&sys.cocycle, &sys.base, x);
            let mut buf = vec![0.0; d];
            let mut max_norm = 0.0f64;
            for step in 0..=*n {
                walk.sum_into(&mut buf);
                max_norm = max_norm.max(norm(&buf));
                let mut row = vec![step.to_string()];
                row.extend(buf.iter().map(|&v| f(v)));
                out.rows.push(row);
                if step < *n {
                    walk.advance();
                }
            }
            out.result = json!({ "N": n, "d": d, "final": buf, "max_norm": max_norm });
            Ok(out)
        }
        ExperimentSpec::Occupation { n } => {
            let sys = system::skew_system(cfg)?;
            let x = sys.base.sample(&mut stream(seed, 0));
            let m = occupation_measure(&sys, &x, *n)?;
            let locations = m.locations();
            let mut cols = tau_columns(sys.d(), "t");
            cols.push("weight".into());
            let mut out = Outcome::new(
                json!({ "N": n, "d": sys.d(), "atoms": m.n, "distinct_locations": locations.len(), "atom_weight": m.weight(), "total_mass": m.total_mass() }),
                &[],
            )
            .unit("weight", "multiplicity times N^(-1/2)");
            out.columns = cols;
            for (t, mult) in locations {
                let mut row: Vec<String> = t.iter().map(|&v| f(v)).collect();
                row.push(f(mult as f64 * m.weight()));
                out.rows.push(row);
            }
            Ok(out)
        }
        ExperimentSpec::Prbg { n, r, k, base_points } => prbg(cfg, n, *r, *k, *base_points, seed, workers),
        ExperimentSpec::Clt { n, samples, normalization, green_kubo } => {
            let sys = system::skew_system(cfg)?;
            let obs = system::observable(cfg.observable.as_ref().expect("checked"))?;
            system::check_observable(&sys, &obs)?;
            let report = clt_experiment(&sys, &obs, *n, *samples, *normalization, seed, workers)?;
            let mut result = to_value(&report);
            if let Some(gk) = green_kubo {
                let g = green_kubo_variance(&sys, &obs, gk.truncation, gk.samples, gk.window, derive_seed(seed, "green-kubo"), workers)?;
                let empirical = report.variance * report.a_n * report.a_n / *n as f64;
                let ratio = g.sigma2 / empirical;
                result["green_kubo"] = json!({
                    "sigma2": g.sigma2,
                    "std_error": g.std_error,
                    "L": g.truncation,
                    "window": g.window,
                    "empirical_variance_per_step": empirical,
                    "ratio": ratio,
                    "relative_error": (ratio - 1.0).abs(),
                    "terms": g.terms,
                });
            }
            let mut out = Outcome::new(result, &["sample", "value"])
                .unit("value", "H_N / a_N")
                .unit("a_N", normalization_text(*normalization))
                .unit("ks", "sup distance to N(0, sample variance)");
            out.rows = report.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), f(*v)]).collect();
            Ok(out)
        }
        ExperimentSpec::Gk { truncation, samples, window } => {
            let sys = system::skew_system(cfg)?;
            let obs = system::observable(cfg.observable.as_ref().expect("checked"))?;
            system::check_observable(&sys, &obs)?;
            let g = green_kubo_variance(&sys, &obs, *truncation, *samples, *window, seed, workers)?;
            let mut out = Outcome::new(to_value(&g), &["k", "c_k", "std_error"]).unit("sigma2", "c_0 + 2 sum_{k=1..L} c_k");
            out.rows = g.terms.iter().map(|t| vec![t.k.to_string(), f(t.value), f(t.std_error)]).collect();
            Ok(out)
        }
        ExperimentSpec::Decay { lags, samples, window } => {
            let sys = system::skew_system(cfg)?;
            let obs = system::observable(cfg.observable.as_ref().expect("checked"))?;
            system::check_observable(&sys, &obs)?;
            let fit = correlation_decay(&sys, (&obs, &obs), lags, *samples, *window, seed, workers)?;
            let mut out = Outcome::new(to_value(&fit), &["lag", "rho", "std_error", "fitted"])
                .unit("rho", "integral of H times H after lag steps")
                .unit("slope", "least-squares slope of ln|rho| against ln(lag)")
                .unit("correlation_samples", (samples * window).to_string());
            out.rows = (0..fit.lags.len())
                .map(|i| {
                    let lag = fit.lags[i];
                    vec![lag.to_string(), f(fit.values[i]), f(fit.std_errors[i]), fit.fitted_lags.contains(&lag).to_string()]
                })
                .collect();
            Ok(out)
        }
        ExperimentSpec::Ld { epsilon, n, samples } => {
            let base = system::base(cfg)?;
            let tau = system::cocycle(cfg, &base)?;
            let scan = large_deviation_scan(&tau, &base, *epsilon, n, *samples, seed, workers)?;
            let mut out = Outcome::new(to_value(&scan), &["N", "frequency", "std_error", "hits"]);
            out.rows = scan.rows.iter().map(|r| vec![f(r.x), f(r.estimate.frequency), f(r.estimate.std_error), r.estimate.hits.to_string()]).collect();
            Ok(out)
        }
        ExperimentSpec::Maxineq { m, l, samples } => {
            let base = system::base(cfg)?;
            let tau = system::cocycle(cfg, &base)?;
            let scan = maximal_inequality_scan(&tau, &base, *m, l, *samples, seed, workers)?;
            let mut out = Outcome::new(to_value(&scan), &["L", "frequency", "std_error", "hits"])
                .unit("frequency", "share of orbits with max_{n<=m} |tau_n| >= L sqrt(m)")
                .unit("fit", "ln(frequency) against L^2");
            out.rows = scan.rows.iter().map(|r| vec![f(r.x), f(r.estimate.frequency), f(r.estimate.std_error), r.estimate.hits.to_string()]).collect();
            Ok(out)
        }
        ExperimentSpec::Anticonc { epsilon, n, samples } => {
            let base = system::base(cfg)?;
            let tau = system::cocycle(cfg, &base)?;
            let rows = anticoncentration_scan(&tau, &base, *epsilon, n, *samples, seed, workers)?;
            let mut out = Outcome::new(json!({ "epsilon": epsilon, "rows": rows }), &["N", "threshold", "frequency", "std_error", "hits"])
                .unit("threshold", "ln(N)^(1+epsilon)");
            out.rows = rows
                .iter()
                .map(|r| vec![r.n.to_string(), f(r.threshold), f(r.estimate.frequency), f(r.estimate.std_error), r.estimate.hits.to_string()])
                .collect();
            Ok(out)
        }
        ExperimentSpec::Cones { horizon, threshold, samples } => {
            let base = system::base(cfg)?;
            let tau = system::cocycle(cfg, &base)?;
            let scan = cone_visit_scan(&tau, &base, *horizon, *threshold, *samples, seed, workers)?;
            let mut out = Outcome::new(to_value(&scan), &["sample", "cone", "max_norm"])
                .unit("cone", "open orthant index, bit j set when coordinate j is negative");
            for (i, norms) in scan.max_norms.iter().enumerate() {
                for (c, v) in norms.iter().enumerate() {
                    out.rows.push(vec![i.to_string(), c.to_string(), f(*v)]);
                }
            }
            Ok(out)
        }
        ExperimentSpec::Cobtest { n, samples, contrast } => {
            let sys = system::skew_system(cfg)?;
            let obs = system::observable(cfg.observable.as_ref().expect("checked"))?;
            system::check_observable(&sys, &obs)?;
            let primary = coboundary_test(&sys, &obs, n, *samples, seed, workers)?;
            let mut out = Outcome::new(Value::Null, &["observable", "N", "l2_norm", "sup_abs"])
                .unit("l2_norm", "root mean square of the Birkhoff sum A_N");
            let mut result = json!({ "primary": primary });
            let mut reports = vec![("primary", primary)];
            if let Some(c) = contrast {
                let c_obs = system::observable(c)?;
                system::check_observable(&sys, &c_obs)?;
                let rep = coboundary_test(&sys, &c_obs, n, *samples, derive_seed(seed, "contrast"), workers)?;
                result["contrast"] = to_value(&rep);
                reports.push(("contrast", rep));
            }
            for (label, rep) in &reports {
                for row in &rep.rows {
                    out.rows.push(vec![label.to_string(), row.n.to_string(), f(row.l2_norm), f(row.sup_abs)]);
                }
            }
            out.result = result;
            Ok(out)
        }
        ExperimentSpec::Sfdev { t, samples, mean_time, hbar } => {
            let flow = system::special_flow(cfg)?;
            let rep = special_flow_deviation(&flow, hbar, t, *samples, *mean_time, seed, workers)?;
            let mut out = Outcome::new(to_value(&rep), &["T", "bound", "within", "std_error", "mean_abs_deviation"])
                .unit("within", "share of initial states with |H_T - T mu_hat| <= T^0.49");
            out.rows = rep
                .rows
                .iter()
                .map(|r| vec![f(r.t), f(r.bound), f(r.within.frequency), f(r.within.std_error), f(r.mean_abs_deviation)])
                .collect();
            Ok(out)
        }
        ExperimentSpec::Dk { n_max, theta_samples } => {
            let flow = system::special_flow(cfg)?;
            if !matches!(flow.roof.kind, RoofKind::Power { .. }) {
                return bad("dk needs a power roof");
            }
            let rep = denjoy_koksma_check(&flow.roof, flow.alpha, *n_max, *theta_samples, seed, workers)?;
            let mut out = Outcome::new(to_value(&rep), &["sample", "n", "q_n", "ratio"])
                .unit("ratio", "|J_q - q int J| * theta_min^gamma");
            for (i, row) in rep.ratios.iter().enumerate() {
                for (n, r) in row.iter().enumerate() {
                    out.rows.push(vec![i.to_string(), n.to_string(), rep.rows[n].q_n.to_string(), f(*r)]);
                }
            }
            Ok(out)
        }
        ExperimentSpec::Close { epsilon, n, pairs, perturbation } => close(cfg, epsilon, n, *pairs, *perturbation, seed, workers),
        ExperimentSpec::Dset { epsilon, n, samples, candidates, y_prime } => {
            let sys = system::skew_system(cfg)?;
            let probe = ProbeSystem::from_skew(&sys)?;
            if !strictly_increasing(n) || n[0] == 0 {
                return bad("n grid must be strictly increasing and positive");
            }
            if y_prime.len() != probe.fiber.dim() {
                return bad("y_prime must be a point of the fiber torus");
            }
            let n_max = *n.last().expect("nonempty") as usize;
            let mut rng = stream(derive_seed(seed, "dset-omega"), 0);
            let omega = ProbePoint::sample(probe.shift, PROBE_MARGIN, n_max + PROBE_MARGIN, probe.fiber.dim(), &mut rng);
            let yp = TorusPoint::from_f64(y_prime);
            let mut rows = Vec::with_capacity(n.len());
            for &steps in n {
                let params = ClosenessParams::new(*epsilon, steps)?;
                rows.push(d_set_measure(&sys, &omega, &yp, &params, *samples, *candidates, seed, workers)?);
            }
            let nonincreasing = rows.windows(2).all(|w| {
                let (a, b) = (&w[0].estimate, &w[1].estimate);
                b.frequency <= a.frequency + 2.0 * a.std_error.hypot(b.std_error)
            });
            let mut out = Outcome::new(
                json!({ "epsilon": epsilon, "rows": rows, "lower_bound": true, "nonincreasing_within_2se": nonincreasing }),
                &["n", "estimate", "std_error", "hits"],
            )
            .unit("estimate", "lower bound: share of y for which a candidate past certifies closeness");
            out.rows = rows
                .iter()
                .map(|r| vec![r.n.to_string(), f(r.estimate.frequency), f(r.estimate.std_error), r.estimate.hits.to_string()])
                .collect();
            Ok(out)
        }
        ExperimentSpec::Omega1 { n1, exponent, samples } => {
            let base = system::base(cfg)?;
            let tau = system::cocycle(cfg, &base)?;
            let rep = omega1_frequency(&tau, &base, *n1, *exponent, *samples, seed, workers)?;
            let mut out = Outcome::new(to_value(&rep), &["n1", "threshold", "frequency", "std_error", "hits"])
                .unit("threshold", "n1^exponent");
            out.rows = vec![vec![
                n1.to_string(),
                f(rep.threshold),
                f(rep.estimate.frequency),
                f(rep.estimate.std_error),
                rep.estimate.hits.to_string(),
            ]];
            Ok(out)
        }
        ExperimentSpec::Goodpairs { k, n_prev, grid, lower, upper, samples } => {
            let base = system::base(cfg)?;
            let tau = system::cocycle(cfg, &base)?;
            let mut params = GoodPairParams::at_level(*k, *n_prev, *grid);
            if let Some(l) = lower {
                params.lower = *l;
            }
            if let Some(u) = upper {
                params.upper = *u;
            }
            let rep = good_pair_count(&tau, &base, &params, *samples, seed, workers)?;
            let mut out = Outcome::new(to_value(&rep), &["sample", "good_pairs"])
                .unit("log10_full_scale_n", "log10 of (10k)^100 n_prev");
            out.rows = rep.counts.iter().enumerate().map(|(i, c)| vec![i.to_string(), c.to_string()]).collect();
            Ok(out)
        }
    }
}

fn normalization_text(n: Normalization) -> &'static str {
    match n {
        Normalization::Sqrt => "sqrt(N)",
        Normalization::SqrtLog => "sqrt(N ln N)",
        Normalization::LogQuarter => "N / (ln N)^(1/4)",
    }
}

fn minkowski(alphas: &[Vec<f64>], n: &[u64]) -> Result<Outcome, CliError> {
    if n.iter().any(|&n| n == 0) {
        return bad("N must be positive");
    }
    let mut out = Outcome::new(Value::Null, &["m", "N", "k", "distance", "postconditions"])
        .unit("distance", "distance from <k, alpha> to the nearest integer");
    let mut rows = Vec::new();
    let mut all_ok = true;
    for a in alphas {
        let alpha = system::diophantine(a, None, None)?;
        for &n in n {
            let k = minkowski_search(&alpha, n)?;
            let ok = minkowski_postconditions(&alpha, n, &k);
            all_ok &= ok;
            let dist = kalikow_core::torus::circle_dist(alpha.pairing(&k));
            let ks: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            out.rows.push(vec![alpha.m().to_string(), n.to_string(), ks.join(" "), f(dist), ok.to_string()]);
            rows.push(json!({ "alpha": a, "N": n, "k": k, "distance": dist, "postconditions": ok }));
        }
    }
    out.result = json!({ "rows": rows, "checks": rows.len(), "all_postconditions_hold": all_ok });
    Ok(out)
}

fn reconstruct(alphas: u64, reconstructions: u64, depth: usize, seed: u64) -> Result<Outcome, CliError> {
    if alphas == 0 || depth == 0 {
        return bad("alphas and depth must be positive");
    }
    let mut rng = stream(seed, 0);
    let per_alpha = reconstructions.div_ceil(alphas);
    let mut out = Outcome::new(Value::Null, &["alpha", "levels", "reconstructions", "exact", "digits_bounded", "convergent_levels_ok"]);
    let (mut total, mut exact, mut bounded, mut levels, mut levels_ok, mut rational) = (0u64, 0u64, 0u64, 0u64, 0u64, 0u64);
    let mut done = 0u64;
    let mut accepted = 0u64;
    while accepted < alphas {
        if rational > 100 * alphas {
            return Err(CliError::RuntimeFailure("too many rational rotation numbers drawn".into()));
        }
        let alpha: f64 = rng.random_range(0.001..0.999);
        let mut cf = match continued_fraction(alpha, depth + 1) {
            Ok(cf) if cf.partial_quotients.len() == depth + 1 => cf,
            Ok(_) | Err(kalikow_core::Error::RationalDetected { .. }) => {
                rational += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        accepted += 1;
        cf.depth = depth;
        let m = depth;
        let conv_ok = (0..m).filter(|&l| cf.convergent_inequality_holds(l)).count() as u64;
        levels += m as u64;
        levels_ok += conv_ok;
        let cap = cf.q(m) as u128 * (cf.a(m) as u128 + 1);
        let cap = cap.min(u64::MAX as u128) as u64;
        let count = per_alpha.min(reconstructions - done);
        let (mut e, mut b) = (0u64, 0u64);
        for _ in 0..count {
            let n = rng.random_range(1..cap);
            let digits = ostrowski_expand(n, &cf)?;
            e += u64::from(digits.reconstruct(&cf) == n as u128);
            b += u64::from(digits.digits_bounded(&cf));
        }
        done += count;
        total += count;
        exact += e;
        bounded += b;
        out.rows.push(vec![f(alpha), m.to_string(), count.to_string(), e.to_string(), b.to_string(), format!("{conv_ok}/{m}")]);
    }
    out.result = json!({
        "alphas": alphas,
        "rational_rejections": rational,
        "reconstructions": total,
        "exact": exact,
        "digits_bounded": bounded,
        "failures": total - exact.min(bounded),
        "convergent_levels": levels,
        "convergent_levels_ok": levels_ok,
        "all_exact": exact == total && bounded == total && total == reconstructions,
        "all_convergents_ok": levels_ok == levels,
    });
    Ok(out)
}

fn sobolev(alpha: &[f64], r: f64, frequencies: usize, radius: i64, n: &[u64], seed: u64) -> Result<Outcome, CliError> {
    if frequencies == 0 || radius < 1 || !strictly_increasing(n) || n[0] == 0 {
        return bad("sobolev needs frequencies >= 1, radius >= 1 and an increasing positive N grid");
    }
    let alpha: DiophantineVector = system::diophantine(alpha, None, None)?;
    let m = alpha.m();
    let mut rng = stream(seed, 0);
    let mut coeffs = Vec::with_capacity(frequencies);
    while coeffs.len() < frequencies {
        let k: Vec<i64> = (0..m).map(|_| rng.random_range(-radius..=radius)).collect();
        if k.iter().all(|&x| x == 0) {
            continue;
        }
        let sup = k.iter().map(|x| x.unsigned_abs()).max().expect("nonempty") as f64;
        let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        coeffs.push((k, Complex::from_polar(sup.powf(-r), phase)));
    }
    let mut out = Outcome::new(Value::Null, &["N", "norm", "norm_over_sqrt_N"]).unit("norm", "L2 norm of the ergodic sum phi_N");
    let mut rows = Vec::new();
    for &steps in n {
        let v = sobolev_ergodic_sum_norm(&coeffs, &alpha, steps)?;
        let scaled = v / (steps as f64).sqrt();
        out.rows.push(vec![steps.to_string(), f(v), f(scaled)]);
        rows.push(json!({ "N": steps, "norm": v, "norm_over_sqrt_N": scaled }));
    }
    let first = rows[0]["norm_over_sqrt_N"].as_f64().unwrap_or(f64::NAN);
    let last = rows[rows.len() - 1]["norm_over_sqrt_N"].as_f64().unwrap_or(f64::NAN);
    let freq: Vec<Value> = coeffs.iter().map(|(k, a)| json!({ "k": k, "abs": a.norm() })).collect();
    out.result = json!({ "alpha": alpha.alpha, "r": r, "frequencies": freq, "rows": rows, "decay_factor": first / last });
    Ok(out)
}

fn prbg(cfg: &ExperimentConfig, n: &[u64], r: u32, k: f64, base_points: u64, seed: u64, workers: usize) -> Result<Outcome, CliError> {
    let sys = system::skew_system(cfg)?;
    if !strictly_increasing(n) || n[0] < 2 || base_points == 0 {
        return bad("prbg needs an increasing N grid starting at 2 or more and base_points >= 1");
    }
    let values = map(workers, base_points, |i| {
        let x = sys.base.sample(&mut stream(seed, i));
        n.iter().map(|&steps| prbg_condition_b(&occupation_measure(&sys, &x, steps)?, r, k)).collect::<Result<Vec<f64>, _>>()
    })?;
    let mut moments = Moments::new(n.len());
    values.iter().for_each(|v| moments.push(v));
    let rows: Vec<Value> = n
        .iter()
        .enumerate()
        .map(|(g, &steps)| json!({ "N": steps, "mean": moments.mean(g), "std_error": moments.std_error(g) }))
        .collect();
    let decreasing = (1..n.len()).all(|g| moments.mean(g) < moments.mean(g - 1));
    let mut out = Outcome::new(
        json!({ "r": r, "K": k, "base_points": base_points, "rows": rows, "strictly_decreasing": decreasing }),
        &["N", "base_point", "value"],
    )
    .unit("value", "integral of m^(r-1)(B(t, K ln|m|)) dm(t)");
    for (i, v) in values.iter().enumerate() {
        for (g, &steps) in n.iter().enumerate() {
            out.rows.push(vec![steps.to_string(), i.to_string(), f(v[g])]);
        }
    }
    Ok(out)
}

fn close(cfg: &ExperimentConfig, epsilon: &[f64], n: &[u64], pairs: u64, perturbation: f64, seed: u64, workers: usize) -> Result<Outcome, CliError> {
    let sys = system::skew_system(cfg)?;
    let probe = ProbeSystem::from_skew(&sys)?;
    if n.is_empty() || epsilon.is_empty() || pairs == 0 || !(perturbation >= 0.0) {
        return bad("close needs epsilon and n grids, pairs >= 1 and perturbation >= 0");
    }
    let grid: Vec<ClosenessParams> =
        epsilon.iter().flat_map(|&e| n.iter().map(move |&s| ClosenessParams::new(e, s))).collect::<Result<_, _>>()?;
    let n_max = *n.iter().max().expect("nonempty") as usize;
    let dim = probe.fiber.dim();
    let hits = map(workers, pairs, |i| {
        let mut rng = stream(seed, i);
        let p = ProbePoint::sample(probe.shift, PROBE_MARGIN, n_max + PROBE_MARGIN, dim, &mut rng);
        let mut q = p.clone();
        let shift: Vec<f64> = (0..dim).map(|j| p.y.coord(j) + perturbation * (rng.random::<f64>() - 0.5)).collect();
        q.y = TorusPoint::from_f64(&shift);
        grid.iter().map(|params| is_close(params, &p, &q, &sys)).collect::<Result<Vec<bool>, _>>()
    })?;
    let mut out = Outcome::new(Value::Null, &["epsilon", "n", "close_fraction"]);
    let mut rows = Vec::new();
    for (g, params) in grid.iter().enumerate() {
        let count = hits.iter().filter(|h| h[g]).count() as u64;
        let freq = kalikow_core::stats::Frequency::new(count, pairs);
        out.rows.push(vec![f(params.epsilon), params.n.to_string(), f(freq.frequency)]);
        rows.push(json!({ "epsilon": params.epsilon, "n": params.n, "close": freq }));
    }
    out.result = json!({ "pairs": pairs, "perturbation": perturbation, "rows": rows });
    Ok(out)
}
