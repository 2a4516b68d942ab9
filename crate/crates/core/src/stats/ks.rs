//! Kolmogorov–Smirnov distances and critical values.

use statrs::function::erf::erfc;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// sup |F_n − F| for a continuous reference `cdf`. Sorts `samples` in place.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

pub fn ks_uniform(samples: &mut [f64]) -> f64 {
    ks_distance(samples, |x| x.clamp(0.0, 1.0))
}

/// KS distance to N(0, σ²).
pub fn ks_normal(samples: &mut [f64], sigma: f64) -> f64 {
    ks_distance(samples, |x| normal_cdf(x / sigma))
}

/// Two-sample KS distance between two empirical distributions.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, P(K > λ).
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Critical distance at level `alpha` for `m` samples (Stephens' correction).
pub fn ks_critical_value(m: usize, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > alpha { lo = mid } else { hi = mid }
    }
    let sm = (m as f64).sqrt();
    0.5 * (lo + hi) / (sm + 0.12 + 0.11 / sm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_critical_values() {
        let lam = |a| ks_critical_value(1_000_000, a) * 1000.0;
        assert!((lam(0.05) - 1.3581).abs() < 1e-3);
        assert!((lam(0.01) - 1.6276).abs() < 1e-3);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let v = normal_cdf(1.96);
        assert!((v - 0.975_002_104_851_780).abs() < 1e-11);
    }

    #[test]
    fn exact_grid_distance() {
        let mut s: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&mut s) - 0.005).abs() < 1e-12);
        let mut t = vec![0.5; 10];
        assert!((ks_uniform(&mut t) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let mut a = vec![1.0, 2.0, 3.0];
        let mut b = a.clone();
        assert_eq!(ks_two_sample(&mut a, &mut b), 0.0);
        let mut c = vec![10.0, 11.0, 12.0];
        assert_eq!(ks_two_sample(&mut a, &mut c), 1.0);
    }
}
