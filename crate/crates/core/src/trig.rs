//! Real trigonometric polynomials on a torus, evaluated at fixed-point points.

use crate::arithmetic::pairing_fixed;
use crate::torus::{signed_fixed, TorusPoint};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// c·cos(2π⟨k,x⟩) + s·sin(2π⟨k,x⟩).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigPolynomial {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: vec![] }
    }

    /// cos(2π⟨k,x⟩).
    pub fn cosine(k: Vec<i64>) -> Self {
        Self { constant: 0.0, terms: vec![TrigTerm { k, cos: 1.0, sin: 0.0 }] }
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, f: f64) -> Self {
        self.constant *= f;
        for t in &mut self.terms {
            t.cos *= f;
            t.sin *= f;
        }
        self
    }

    pub fn eval(&self, x: &TorusPoint) -> f64 {
        let raw = x.raw();
        self.terms.iter().fold(self.constant, |acc, t| {
            let phase = TAU * signed_fixed(pairing_fixed(raw, &t.k));
            let (s, c) = phase.sin_cos();
            acc + t.cos * c + t.sin * s
        })
    }

    /// Integral over the torus (terms with k = 0 count as constants).
    pub fn mean(&self) -> f64 {
        self.constant + self.terms.iter().filter(|t| t.k.iter().all(|&x| x == 0)).map(|t| t.cos).sum::<f64>()
    }

    /// The polynomial with its mean removed.
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        out.constant = 0.0;
        out.terms.retain(|t| t.k.iter().any(|&x| x != 0));
        out
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum::<f64>()
    }

    /// Lipschitz constant for the flat Euclidean metric.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| TAU * (t.k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt() * (t.cos.abs() + t.sin.abs()))
            .sum()
    }

    pub fn max_dim(&self) -> usize {
        self.terms.iter().map(|t| t.k.len()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_mean() {
        let p = TrigPolynomial {
            constant: 1.0,
            terms: vec![TrigTerm { k: vec![1, 0], cos: 0.5, sin: 0.0 }, TrigTerm { k: vec![0, 2], cos: 0.0, sin: 2.0 }],
        };
        let x = TorusPoint::from_f64(&[0.25, 0.125]);
        assert!((p.eval(&x) - (1.0 + 0.0 + 2.0)).abs() < 1e-12);
        assert_eq!(p.mean(), 1.0);
        assert_eq!(p.centered().mean(), 0.0);
        assert_eq!(p.sup_bound(), 3.5);
    }

    #[test]
    fn periodicity_is_exact() {
        let p = TrigPolynomial::cosine(vec![3, -2]);
        let a = TorusPoint::from_f64(&[0.1875, 0.9375]);
        let b = TorusPoint::from_f64(&[1.1875, -0.0625]);
        assert_eq!(p.eval(&a), p.eval(&b));
        let c = TorusPoint::from_f64(&[0.1234, 0.9876]);
        let d = TorusPoint::from_f64(&[1.1234, -0.0124]);
        assert!((p.eval(&c) - p.eval(&d)).abs() < 1e-12);
    }
}
