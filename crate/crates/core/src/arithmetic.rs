//! Continued fractions, Ostrowski numeration, small linear forms and the
//! harmonic ratios |sin(πNβ)/sin(πβ)|.
//!
//! Rotation numbers are given as `f64`. Every `f64` is a dyadic rational, so the
//! Gauss map is run exactly on that rational with integer Euclid steps; the
//! partial quotients agree with those of the intended irrational as long as
//! q_n² stays well below 2⁵³. Orbit computations use the fixed-point circle of
//! [`crate::torus`].

use crate::error::{Error, Result};
use crate::torus::{circle_dist_raw, signed_fixed, to_fixed};
pub use nalgebra::Complex;
use serde::{Deserialize, Serialize};

/// Default floor below which a Gauss-map iterate counts as zero.
pub const GAUSS_FLOOR: f64 = 1e-14;
/// Orbit length up to which [`theta_min`] enumerates directly.
pub const THETA_MIN_DIRECT_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFractionData {
    pub alpha: f64,
    /// a_1..a_M.
    pub partial_quotients: Vec<u64>,
    /// p_0..p_M.
    pub numerators: Vec<u64>,
    /// q_0..q_M, with q_0 = 1.
    pub denominators: Vec<u64>,
    pub depth: usize,
}

impl ContinuedFractionData {
    /// a_k for 1 ≤ k ≤ M.
    pub fn a(&self, k: usize) -> u64 {
        self.partial_quotients[k - 1]
    }

    pub fn q(&self, k: usize) -> u64 {
        self.denominators[k]
    }

    /// Exact check of |q_n α − p_n| < 1/q_{n+1} against the stored `f64` α.
    pub fn convergent_inequality_holds(&self, n: usize) -> bool {
        let (num, den) = dyadic(self.alpha);
        let q = self.denominators[n] as i128;
        let p = self.numerators[n] as i128;
        let q_next = self.denominators[n + 1] as i128;
        let lhs = q
            .checked_mul(num as i128)
            .zip(p.checked_mul(den as i128))
            .map(|(a, b)| (a - b).unsigned_abs())
            .and_then(|d| d.checked_mul(q_next as u128));
        match lhs {
            Some(l) => l < den,
            None => ((q as f64) * self.alpha - p as f64).abs() < 1.0 / q_next as f64,
        }
    }
}

/// The exact rational value `num / den` of a finite `f64` in (0, 1).
fn dyadic(x: f64) -> (u128, u128) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
    let shift = mant.trailing_zeros().min((-e) as u32);
    let mant = (mant >> shift) as u128;
    let e = e + shift as i32;
    if -e >= 127 {
        // Far below any usable rotation; callers reject such inputs before this.
        return (1, 1 << 126);
    }
    (mant, 1u128 << (-e))
}

/// Continued-fraction expansion of `alpha` to `depth` levels.
pub fn continued_fraction(alpha: f64, depth: usize) -> Result<ContinuedFractionData> {
    continued_fraction_with_floor(alpha, depth, GAUSS_FLOOR)
}

pub fn continued_fraction_with_floor(alpha: f64, depth: usize, floor: f64) -> Result<ContinuedFractionData> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if alpha < floor {
        return Err(Error::RationalDetected { level: 0, iterate: alpha });
    }
    let (mut num, mut den) = dyadic(alpha);
    let mut a = Vec::with_capacity(depth);
    let (mut p_prev, mut p) = (1u128, 0u128);
    let (mut q_prev, mut q) = (0u128, 1u128);
    let mut ps = vec![0u64];
    let mut qs = vec![1u64];
    for level in 1..=depth {
        let an = den / num;
        let r = den % num;
        let (p_next, q_next) = (an * p + p_prev, an * q + q_prev);
        let overflow = || Error::InvalidParameter(format!("denominator overflow at level {level}"));
        ps.push(u64::try_from(p_next).map_err(|_| overflow())?);
        qs.push(u64::try_from(q_next).map_err(|_| overflow())?);
        a.push(u64::try_from(an).map_err(|_| overflow())?);
        (p_prev, p, q_prev, q) = (p, p_next, q, q_next);
        let iterate = r as f64 / num as f64;
        if level < depth && (r == 0 || iterate < floor) {
            return Err(Error::RationalDetected { level, iterate });
        }
        (den, num) = (num, r);
        if r == 0 {
            break;
        }
    }
    Ok(ContinuedFractionData { alpha, partial_quotients: a, numerators: ps, denominators: qs, depth })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OstrowskiDigits {
    #[serde(rename = "N")]
    pub n: u64,
    /// b_k multiplying q_k, for k = 0..=M.
    pub digits: Vec<u64>,
}

impl OstrowskiDigits {
    pub fn reconstruct(&self, cf: &ContinuedFractionData) -> u128 {
        self.digits.iter().zip(&cf.denominators).map(|(&b, &q)| b as u128 * q as u128).sum()
    }

    /// Greedy digit bounds: b_0 < a_1, b_k ≤ a_{k+1} below the top level, b_M ≤ a_M.
    pub fn digits_bounded(&self, cf: &ContinuedFractionData) -> bool {
        let m = cf.depth;
        self.digits.iter().enumerate().all(|(k, &b)| match k {
            0 => b < cf.a(1).max(1) || (m == 0 && b == self.n),
            k if k < m => b <= cf.a(k + 1),
            _ => b <= cf.a(m),
        })
    }
}

/// Greedy Ostrowski expansion N = Σ b_k q_k over q_0..q_M.
///
/// Among equal denominators (q_0 = q_1 when a_1 = 1) the larger index is used.
pub fn ostrowski_expand(n: u64, cf: &ContinuedFractionData) -> Result<OstrowskiDigits> {
    let m = cf.depth.min(cf.partial_quotients.len());
    if m == 0 {
        return Err(Error::DepthExhausted { n, depth: 0 });
    }
    let cap = cf.q(m) as u128 * (cf.a(m) as u128 + 1);
    if n as u128 >= cap {
        return Err(Error::DepthExhausted { n, depth: m });
    }
    let mut rem = n;
    let mut digits = vec![0u64; m + 1];
    for k in (0..=m).rev() {
        digits[k] = rem / cf.q(k);
        rem -= digits[k] * cf.q(k);
    }
    Ok(OstrowskiDigits { n, digits })
}

/// min over 0 ≤ j < n of ‖θ + jα‖.
pub fn theta_min(theta: f64, alpha: f64, n: u64) -> f64 {
    if n <= THETA_MIN_DIRECT_LIMIT {
        theta_min_direct(theta, alpha, n)
    } else {
        theta_min_euclid(theta, alpha, n)
    }
}

/// Direct enumeration of the orbit segment on the fixed-point circle.
pub fn theta_min_direct(theta: f64, alpha: f64, n: u64) -> f64 {
    raw_to_f64(theta_min_direct_raw(to_fixed(theta), to_fixed(alpha), n))
}

/// Euclid-type descent through the gap structure of {jα}; O(log) steps.
pub fn theta_min_euclid(theta: f64, alpha: f64, n: u64) -> f64 {
    raw_to_f64(theta_min_euclid_raw(to_fixed(theta), to_fixed(alpha), n))
}

fn raw_to_f64(u: u64) -> f64 {
    u as f64 / 18_446_744_073_709_551_616.0
}

pub fn theta_min_direct_raw(theta: u64, alpha: u64, n: u64) -> u64 {
    assert!(n >= 1, "theta_min needs n >= 1");
    let mut x = theta;
    let mut best = u64::MAX;
    for _ in 0..n {
        best = best.min(circle_dist_raw(x));
        x = x.wrapping_add(alpha);
    }
    best
}

pub fn theta_min_euclid_raw(theta: u64, alpha: u64, n: u64) -> u64 {
    assert!(n >= 1, "theta_min needs n >= 1");
    const M: u128 = 1 << 64;
    let below = min_mod_linear(n as u128, M, alpha as u128, theta as u128);
    let above = min_mod_linear(n as u128, M, (M - alpha as u128) % M, (M - theta as u128) % M);
    below.min(above) as u64
}

/// min over 0 ≤ x < n of (a·x + b) mod m, for n ≥ 1, 0 ≤ a, b < m.
///
/// Each step replaces the modulus by at most half of itself: increasing runs
/// are minimised at their starts (one per wrap), decreasing runs at their ends,
/// and both families are again linear sequences modulo a smaller number.
fn min_mod_linear(n: u128, m: u128, a: u128, b: u128) -> u128 {
    if a == 0 || n == 1 {
        return b;
    }
    if 2 * a <= m {
        let wraps = (a * (n - 1) + b) / m;
        if wraps == 0 {
            return b;
        }
        let c = (a - m % a) % a;
        b.min(min_mod_linear(wraps, a, c, (b % a + c) % a))
    } else {
        let d = m - a;
        let last = (b + m - (d % m) * ((n - 1) % m) % m) % m;
        let reach = d * n;
        if reach <= b {
            return last;
        }
        let ends = (reach - 1 - b) / m + 1;
        last.min(min_mod_linear(ends, d, m % d, b % d))
    }
}

/// |Σ_{n<N} e^{2πinβ}| = |sin(πNβ)| / |sin(πβ)|.
pub fn harmonic_ratio(beta: f64, n: u64) -> Result<f64> {
    let b = beta - beta.round();
    if b.abs() < 1e-15 {
        return Err(Error::ResonantFrequency { beta });
    }
    Ok(harmonic_ratio_reduced(b, n))
}

/// Same as [`harmonic_ratio`] with β given on the fixed-point circle.
pub fn harmonic_ratio_fixed(beta: u64, n: u64) -> Result<f64> {
    if circle_dist_raw(beta) < 1 << 14 {
        return Err(Error::ResonantFrequency { beta: signed_fixed(beta) });
    }
    Ok(harmonic_ratio_reduced(signed_fixed(beta), n))
}

fn harmonic_ratio_reduced(b: f64, n: u64) -> f64 {
    let x = (n as f64) * b;
    let x = x - x.round();
    let r = (std::f64::consts::PI * x).sin().abs() / (std::f64::consts::PI * b).sin().abs();
    r.min(n as f64)
}

/// A rotation vector α ∈ [0,1)^m with an optional Diophantine certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineVector {
    pub alpha: Vec<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "D")]
    pub d_const: Option<f64>,
}

impl DiophantineVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() > 4 {
            return Err(Error::InvalidParameter(format!("dimension {} outside 1..=4", alpha.len())));
        }
        Ok(Self { alpha, kappa: None, d_const: None })
    }

    pub fn with_certificate(mut self, kappa: f64, d_const: f64) -> Self {
        self.kappa = Some(kappa);
        self.d_const = Some(d_const);
        self
    }

    pub fn golden() -> Self {
        Self::new(vec![(5f64.sqrt() - 1.0) / 2.0]).expect("dimension 1")
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn fixed(&self) -> Vec<u64> {
        self.alpha.iter().map(|&a| to_fixed(a)).collect()
    }

    /// ⟨k, α⟩ mod 1 on the fixed-point circle.
    pub fn pairing(&self, k: &[i64]) -> u64 {
        pairing_fixed(&self.fixed(), k)
    }

    /// Smallest value of ‖⟨k,α⟩‖·|k|^κ over 0 < |k|_∞ ≤ radius, with its minimiser.
    pub fn certificate_margin(&self, kappa: f64, radius: u64) -> (f64, Vec<i64>) {
        let fixed = self.fixed();
        let mut best = (f64::INFINITY, vec![]);
        for s in 1..=radius as i64 {
            for_each_shell_vector(self.m(), s, |k| {
                let v = circle_dist_raw(pairing_fixed(&fixed, k)) as f64 / 18_446_744_073_709_551_616.0
                    * (s as f64).powf(kappa);
                if v < best.0 {
                    best = (v, k.to_vec());
                }
            });
        }
        best
    }

    /// Checks the stored certificate up to the given sup-norm radius.
    pub fn verify_certificate(&self, radius: u64) -> Option<bool> {
        let (kappa, d) = (self.kappa?, self.d_const?);
        Some(self.certificate_margin(kappa, radius).0 >= d)
    }
}

pub fn pairing_fixed(alpha: &[u64], k: &[i64]) -> u64 {
    alpha.iter().zip(k).fold(0u64, |acc, (&a, &ki)| acc.wrapping_add(a.wrapping_mul(ki as u64)))
}

/// Radius of the m-ball of volume 2^{m+3}.
pub fn minkowski_radius(m: usize) -> f64 {
    use std::f64::consts::PI;
    let unit_volume = match m {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        _ => panic!("minkowski_radius: m = {m} outside 1..=4"),
    };
    (2f64.powi(m as i32 + 3) / unit_volume).powf(1.0 / m as f64)
}

/// Visits every integer vector of sup-norm exactly `s` whose first nonzero
/// coordinate is positive, in a fixed order.
fn for_each_shell_vector(m: usize, s: i64, mut f: impl FnMut(&[i64])) {
    let mut k = vec![0i64; m];
    // The first coordinate of absolute value s sits at index `lead`.
    for lead in 0..m {
        for sign in [1, -1] {
            let free: Vec<(i64, i64)> = (0..m)
                .map(|j| match j.cmp(&lead) {
                    std::cmp::Ordering::Less => (-(s - 1), s - 1),
                    std::cmp::Ordering::Equal => (sign * s, sign * s),
                    std::cmp::Ordering::Greater => (-s, s),
                })
                .collect();
            for (j, r) in free.iter().enumerate() {
                k[j] = r.0;
            }
            loop {
                if k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
                    f(&k);
                }
                let mut j = m;
                loop {
                    if j == 0 {
                        break;
                    }
                    j -= 1;
                    if k[j] < free[j].1 {
                        k[j] += 1;
                        for (t, r) in free.iter().enumerate().skip(j + 1) {
                            k[t] = r.0;
                        }
                        j = usize::MAX;
                        break;
                    }
                }
                if j != usize::MAX {
                    break;
                }
            }
        }
    }
}

/// Nonzero k with ‖⟨k,α⟩‖ < 1/(4N) and |k|_∞ ≤ R_m N^{1/m}, of minimal sup-norm.
///
/// Within the minimal shell the vector with the smallest ‖⟨k,α⟩‖ is returned.
pub fn minkowski_search(alpha: &DiophantineVector, n: u64) -> Result<Vec<i64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    let m = alpha.m();
    let bound = minkowski_radius(m) * (n as f64).powf(1.0 / m as f64);
    let radius = bound.ceil() as u64;
    let fixed = alpha.fixed();
    for s in 1..=radius as i64 {
        let mut best: Option<(u64, Vec<i64>)> = None;
        for_each_shell_vector(m, s, |k| {
            let d = circle_dist_raw(pairing_fixed(&fixed, k));
            if (d as u128) * (n as u128) < (1u128 << 62) && best.as_ref().is_none_or(|b| d < b.0) {
                best = Some((d, k.to_vec()));
            }
        });
        if let Some((_, k)) = best {
            if !minkowski_postconditions(alpha, n, &k) {
                return Err(Error::SearchExhausted { radius });
            }
            return Ok(k);
        }
    }
    Err(Error::SearchExhausted { radius })
}

/// Re-verifies both bounds for a returned vector.
pub fn minkowski_postconditions(alpha: &DiophantineVector, n: u64, k: &[i64]) -> bool {
    let m = alpha.m();
    let sup = k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    let d = circle_dist_raw(alpha.pairing(k));
    sup > 0
        && (d as u128) * (n as u128) < (1u128 << 62)
        && (sup as f64) <= minkowski_radius(m) * (n as f64).powf(1.0 / m as f64)
}

/// ‖φ_N‖₂ = (Σ |a_k|² |A_k(N)|²)^{1/2} for φ = Σ a_k e^{2πi⟨k,x⟩}.
pub fn sobolev_ergodic_sum_norm(coeffs: &[(Vec<i64>, Complex<f64>)], alpha: &DiophantineVector, n: u64) -> Result<f64> {
    let fixed = alpha.fixed();
    let mut total = 0.0;
    for (k, a) in coeffs {
        let h = harmonic_ratio_fixed(pairing_fixed(&fixed, k), n)?;
        total += a.norm_sqr() * h * h;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn golden_and_silver_expansions() {
        let cf = continued_fraction(golden(), 10).unwrap();
        assert_eq!(cf.partial_quotients, vec![1; 10]);
        assert_eq!(&cf.denominators[1..], &[1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        assert_eq!(cf.denominators[0], 1);
        let cf = continued_fraction(2f64.sqrt() - 1.0, 5).unwrap();
        assert_eq!(cf.partial_quotients, vec![2; 5]);
    }

    #[test]
    fn rational_input_is_detected() {
        assert!(matches!(continued_fraction(1.0 / 3.0, 5), Err(Error::RationalDetected { .. })));
        assert!(matches!(continued_fraction(0.375, 5), Err(Error::RationalDetected { .. })));
    }

    #[test]
    fn convergents_satisfy_the_inequality() {
        let cf = continued_fraction(golden(), 30).unwrap();
        assert!((0..30).all(|n| cf.convergent_inequality_holds(n)));
    }

    #[test]
    fn ostrowski_golden_ten() {
        let cf = continued_fraction(golden(), 5).unwrap();
        let b = ostrowski_expand(10, &cf).unwrap();
        // Levels q_1..q_5 = 1, 2, 3, 5, 8; q_0 = 1 never carries a digit here.
        assert_eq!(b.digits, vec![0, 0, 1, 0, 0, 1]);
        assert_eq!(b.reconstruct(&cf), 10);
        assert_eq!(ostrowski_expand(1, &cf).unwrap().digits, vec![0, 1, 0, 0, 0, 0]);
        for k in 1..=5 {
            let d = ostrowski_expand(cf.q(k), &cf).unwrap().digits;
            assert_eq!(d.iter().sum::<u64>(), 1);
            assert_eq!(d[k], 1);
        }
        assert!(matches!(ostrowski_expand(16, &cf), Err(Error::DepthExhausted { .. })));
        assert!(ostrowski_expand(15, &cf).is_ok());
    }

    #[test]
    fn ostrowski_silver_small_values() {
        let cf = continued_fraction(2f64.sqrt() - 1.0, 6).unwrap();
        assert_eq!(&cf.denominators, &[1, 2, 5, 12, 29, 70, 169]);
        assert_eq!(ostrowski_expand(1, &cf).unwrap().digits[..2], [1, 0]);
        let b = ostrowski_expand(11, &cf).unwrap();
        assert_eq!(b.digits[..4], [1, 0, 2, 0]);
        assert!(b.digits_bounded(&cf));
    }

    #[test]
    fn theta_min_examples() {
        let g = golden();
        let direct: f64 = (0..5).map(|j| {
            let x = (0.25 + j as f64 * g).rem_euclid(1.0);
            x.min(1.0 - x)
        }).fold(f64::INFINITY, f64::min);
        assert!((theta_min(0.25, g, 5) - direct).abs() < 1e-12);
        assert!((direct - 0.104_101_966_249_684_5).abs() < 1e-12);
        assert_eq!(theta_min(0.0, 0.3, 1), 0.0);
        assert_eq!(theta_min(0.5, g, 1), 0.5);
    }

    #[test]
    fn min_mod_linear_small_cases() {
        for m in 1..40u128 {
            for a in 0..m {
                for b in 0..m {
                    for n in 1..30u128 {
                        let brute = (0..n).map(|x| (a * x + b) % m).min().unwrap();
                        assert_eq!(min_mod_linear(n, m, a, b), brute, "n={n} m={m} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn harmonic_ratio_examples() {
        let g = golden();
        assert_eq!(harmonic_ratio(g, 1).unwrap(), 1.0);
        assert_eq!(harmonic_ratio(0.37, 1).unwrap(), 1.0);
        assert!(harmonic_ratio(0.25, 4).unwrap() < 1e-15);
        let direct = (0..8)
            .map(|n| Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * n as f64 * g))
            .sum::<Complex<f64>>()
            .norm();
        assert!((harmonic_ratio(g, 8).unwrap() - direct).abs() < 1e-12);
        assert!((direct - 0.186_884_003_097_961_08).abs() < 1e-12);
        assert!(matches!(harmonic_ratio(3.0, 5), Err(Error::ResonantFrequency { .. })));
    }

    #[test]
    fn minkowski_golden() {
        let g = DiophantineVector::golden();
        assert_eq!(minkowski_search(&g, 8).unwrap(), vec![21]);
        // ‖2α‖ ≈ 0.2361 < 1/4 already.
        assert_eq!(minkowski_search(&g, 1).unwrap(), vec![2]);
        let exhaustive = |n: u64| {
            (1..=500i64).find(|&k| circle_dist(g.pairing(&[k])) < 1.0 / (4.0 * n as f64)).unwrap()
        };
        for n in [1, 2, 4, 8, 16, 32] {
            assert_eq!(minkowski_search(&g, n).unwrap()[0], exhaustive(n));
        }
    }

    use crate::torus::circle_dist;

    #[test]
    fn minkowski_radius_values() {
        assert!((minkowski_radius(1) - 8.0).abs() < 1e-12);
        assert!((minkowski_radius(2) - (32.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shell_enumeration_counts() {
        for m in 1..=4 {
            for s in 1..=3i64 {
                let mut seen = std::collections::HashSet::new();
                for_each_shell_vector(m, s, |k| {
                    assert_eq!(k.iter().map(|x| x.abs()).max().unwrap(), s);
                    assert!(seen.insert(k.to_vec()));
                });
                let full = (2 * s + 1).pow(m as u32) - (2 * s - 1).pow(m as u32);
                assert_eq!(seen.len() as i64, full / 2);
            }
        }
    }

    #[test]
    fn sobolev_single_frequency() {
        let g = DiophantineVector::golden();
        let coeffs = vec![(vec![3], Complex::new(1.0, 0.0))];
        let expected = harmonic_ratio(3.0 * golden(), 50).unwrap();
        assert!((sobolev_ergodic_sum_norm(&coeffs, &g, 50).unwrap() - expected).abs() < 1e-9);
        assert!((sobolev_ergodic_sum_norm(&coeffs, &g, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn golden_certificate() {
        let g = DiophantineVector::golden().with_certificate(1.0, 0.3);
        assert_eq!(g.verify_certificate(200), Some(true));
        assert_eq!(DiophantineVector::golden().verify_certificate(10), None);
    }

    proptest! {
        #[test]
        fn ostrowski_reconstructs(alpha in 0.01f64..0.99, frac in 0.0f64..1.0) {
            if let Ok(cf) = continued_fraction(alpha, 8) {
                let n = (frac * (cf.q(8) - 1) as f64) as u64;
                let b = ostrowski_expand(n, &cf).unwrap();
                prop_assert_eq!(b.reconstruct(&cf), n as u128);
                prop_assert!(b.digits_bounded(&cf));
            }
        }

        #[test]
        fn theta_min_paths_agree(theta in any::<u64>(), alpha in any::<u64>(), n in 1u64..5000) {
            prop_assert_eq!(theta_min_direct_raw(theta, alpha, n), theta_min_euclid_raw(theta, alpha, n));
        }

        #[test]
        fn theta_min_nonincreasing(theta in 0.0f64..1.0, alpha in 0.0f64..1.0, n in 1u64..3000) {
            prop_assert!(theta_min(theta, alpha, n + 1) <= theta_min(theta, alpha, n));
            prop_assert!(theta_min_euclid(theta, alpha, 1 << 40) <= theta_min(theta, alpha, n));
        }

        #[test]
        fn harmonic_envelope(beta in -5.0f64..5.0, n in 1u64..100_000) {
            if let Ok(h) = harmonic_ratio(beta, n) {
                let b = (beta - beta.round()).abs();
                prop_assert!(h <= (n as f64).min(1.0 / (2.0 * b)) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn minkowski_postconditions_hold(a1 in 0.01f64..0.99, a2 in 0.01f64..0.99, e in 1u32..8) {
            let alpha = DiophantineVector::new(vec![a1, a2]).unwrap();
            let n = 1u64 << e;
            let k = minkowski_search(&alpha, n).unwrap();
            prop_assert!(minkowski_postconditions(&alpha, n, &k));
        }
    }
}
