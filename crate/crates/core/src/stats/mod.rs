//! Statistical experiments and estimators.

pub mod clt;
pub mod flows;
pub mod ks;
pub mod walks;

use serde::Serialize;

/// Empirical frequency of an event with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub hits: u64,
    pub trials: u64,
    pub frequency: f64,
    pub std_error: f64,
}

impl Frequency {
    pub fn new(hits: u64, trials: u64) -> Self {
        let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        let se = if trials == 0 { 0.0 } else { (p * (1.0 - p) / trials as f64).sqrt() };
        Self { hits, trials, frequency: p, std_error: se }
    }
}

/// Ordinary least squares y = intercept + slope·x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_std_error = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LinearFit { slope, intercept, r_squared, slope_std_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12 && f.slope_std_error < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn binomial_error() {
        let f = Frequency::new(25, 100);
        assert_eq!(f.frequency, 0.25);
        assert!((f.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(Frequency::new(0, 0).frequency, 0.0);
    }
}
