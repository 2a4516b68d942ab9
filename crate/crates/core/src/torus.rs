//! Points of the torus 𝕋ⁿ stored as 64-bit fixed-point fractions (value / 2⁶⁴),
//! and integer matrices acting on them.
//!
//! Because the grid 2⁻⁶⁴ℤⁿ/ℤⁿ is invariant under every integer matrix, toral
//! automorphisms and their powers act on it exactly through wrapping
//! arithmetic. Rotations by a fixed-point vector are exact as well.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

pub const MAX_DIM: usize = 8;
const TWO64: f64 = 18_446_744_073_709_551_616.0;

/// Convert a real number to its fixed-point class modulo 1 (round to nearest).
pub fn to_fixed(x: f64) -> u64 {
    let f = x.rem_euclid(1.0);
    let v = (f * TWO64).round();
    if v >= TWO64 { 0 } else { v as u64 }
}

/// Representative in `[0, 1)`.
pub fn from_fixed(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Signed representative in `[-1/2, 1/2)`.
pub fn signed_fixed(u: u64) -> f64 {
    (u as i64) as f64 / TWO64
}

/// Distance to the nearest integer, as a raw fixed-point magnitude.
pub fn circle_dist_raw(u: u64) -> u64 {
    u.min(u.wrapping_neg())
}

/// Distance to the nearest integer.
pub fn circle_dist(u: u64) -> f64 {
    circle_dist_raw(u) as f64 / TWO64
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct TorusPoint {
    dim: usize,
    c: [u64; MAX_DIM],
}

impl TorusPoint {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "torus dimension {dim} exceeds {MAX_DIM}");
        Self { dim, c: [0; MAX_DIM] }
    }

    pub fn from_raw(raw: &[u64]) -> Self {
        let mut p = Self::zeros(raw.len());
        p.c[..raw.len()].copy_from_slice(raw);
        p
    }

    pub fn from_f64(x: &[f64]) -> Self {
        let mut p = Self::zeros(x.len());
        for (c, &v) in p.c.iter_mut().zip(x) {
            *c = to_fixed(v);
        }
        p
    }

    /// Haar-distributed point on the 2⁻⁶⁴ grid.
    pub fn uniform<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(dim);
        for c in &mut p.c[..dim] {
            *c = rng.random();
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self) -> &[u64] {
        &self.c[..self.dim]
    }

    pub fn raw_mut(&mut self) -> &mut [u64] {
        &mut self.c[..self.dim]
    }

    pub fn coord(&self, i: usize) -> f64 {
        from_fixed(self.c[i])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.raw().iter().map(|&u| from_fixed(u)).collect()
    }

    pub fn translate(&mut self, by: &TorusPoint) {
        for (a, b) in self.raw_mut().iter_mut().zip(by.raw()) {
            *a = a.wrapping_add(*b);
        }
    }

    /// Euclidean distance in the flat metric of 𝕋ⁿ.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        self.raw()
            .iter()
            .zip(other.raw())
            .map(|(a, b)| circle_dist(a.wrapping_sub(*b)).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    n: usize,
    a: Vec<i64>,
}

impl IntMatrix {
    pub fn new(n: usize, entries: Vec<i64>) -> Result<Self> {
        if n == 0 || n > MAX_DIM || entries.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "expected {n}x{n} matrix with 1 <= n <= {MAX_DIM}, got {} entries",
                entries.len()
            )));
        }
        Ok(Self { n, a: entries })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("matrix rows must form a square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        Self { n, a }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.n + j]
    }

    pub fn entries(&self) -> &[i64] {
        &self.a
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.a.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Option<IntMatrix> {
        WideMatrix::from(self).checked_mul(&WideMatrix::from(rhs))?.narrow()
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn det(&self) -> i128 {
        WideMatrix::from(self).det()
    }

    /// Exact inverse, available when |det| = 1.
    pub fn inverse(&self) -> Option<IntMatrix> {
        if self.det().abs() != 1 {
            return None;
        }
        let inv = self.to_f64().try_inverse()?;
        let cand: Vec<i64> = inv.transpose().iter().map(|x| x.round() as i64).collect();
        let cand = IntMatrix::new(self.n, cand).ok()?;
        (self.checked_mul(&cand)? == IntMatrix::identity(self.n)).then_some(cand)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a.iter().map(|&x| x as f64).collect::<Vec<_>>())
    }

    /// Eigenvalue moduli, via the real Schur form.
    pub fn eigen_moduli(&self) -> Vec<f64> {
        self.to_f64().complex_eigenvalues().iter().map(|z| z.norm()).collect()
    }

    /// True when no eigenvalue has modulus within `tol` of 1.
    pub fn is_hyperbolic(&self, tol: f64) -> bool {
        self.eigen_moduli().iter().all(|m| (m - 1.0).abs() > tol)
    }

    /// Exact power `M^e` for `e ≥ 0` in 128-bit arithmetic; `None` on overflow.
    pub fn pow_wide(&self, e: u32) -> Option<WideMatrix> {
        let mut result = WideMatrix::identity(self.n);
        let mut base = WideMatrix::from(self);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Some(result)
    }

    pub fn to_mod(&self) -> ModMatrix {
        ModMatrix::from_i128(self.n, self.a.iter().map(|&x| x as i128))
    }
}

/// Integer matrix with 128-bit entries, used for exact powers.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WideMatrix {
    n: usize,
    a: Vec<i128>,
}

impl From<&IntMatrix> for WideMatrix {
    fn from(m: &IntMatrix) -> Self {
        Self { n: m.n, a: m.a.iter().map(|&x| x as i128).collect() }
    }
}

impl WideMatrix {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        Self { n, a }
    }

    pub fn get(&self, i: usize, j: usize) -> i128 {
        self.a[i * self.n + j]
    }

    pub fn checked_mul(&self, rhs: &WideMatrix) -> Option<WideMatrix> {
        let n = self.n;
        let mut out = vec![0i128; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x == 0 {
                    continue;
                }
                for j in 0..n {
                    let t = x.checked_mul(rhs.a[k * n + j])?;
                    out[i * n + j] = out[i * n + j].checked_add(t)?;
                }
            }
        }
        Some(WideMatrix { n, a: out })
    }

    pub fn narrow(&self) -> Option<IntMatrix> {
        let a = self.a.iter().map(|&x| i64::try_from(x).ok()).collect::<Option<Vec<_>>>()?;
        Some(IntMatrix { n: self.n, a })
    }

    pub fn det(&self) -> i128 {
        let n = self.n;
        let mut m = self.a.clone();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if m[k * n + k] == 0 {
                let Some(p) = (k + 1..n).find(|&r| m[r * n + k] != 0) else { return 0 };
                for j in 0..n {
                    m.swap(k * n + j, p * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
                }
            }
            prev = m[k * n + k];
        }
        sign * m[(n - 1) * n + (n - 1)]
    }

    pub fn to_mod(&self) -> ModMatrix {
        ModMatrix::from_i128(self.n, self.a.iter().copied())
    }
}

/// Integer matrix reduced modulo 2⁶⁴, acting on fixed-point torus points.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ModMatrix {
    n: usize,
    a: [u64; MAX_DIM * MAX_DIM],
}

impl ModMatrix {
    fn from_i128(n: usize, entries: impl Iterator<Item = i128>) -> Self {
        let mut a = [0u64; MAX_DIM * MAX_DIM];
        for (slot, x) in a.iter_mut().zip(entries) {
            *slot = x as u64;
        }
        Self { n, a }
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        let n = self.n;
        let x = p.raw();
        let mut out = TorusPoint::zeros(n);
        for (i, o) in out.raw_mut().iter_mut().enumerate() {
            let row = &self.a[i * n..i * n + n];
            *o = row.iter().zip(x).fold(0u64, |acc, (m, v)| acc.wrapping_add(m.wrapping_mul(*v)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn cat() -> IntMatrix {
        IntMatrix::new(2, vec![2, 1, 1, 1]).unwrap()
    }

    #[test]
    fn fixed_point_round_trip() {
        for x in [0.0, 0.25, 0.5, 0.999_999, 0.123_456_789] {
            assert!((from_fixed(to_fixed(x)) - x).abs() < 1e-15);
        }
        assert_eq!(to_fixed(1.0), 0);
        assert_eq!(to_fixed(-0.25), to_fixed(0.75));
        assert!(from_fixed(u64::MAX) < 1.0);
        assert_eq!(signed_fixed(to_fixed(0.75)), -0.25);
        assert_eq!(circle_dist(to_fixed(0.875)), circle_dist(to_fixed(0.125)));
        assert!((circle_dist(to_fixed(0.9)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cat_map_period_three_orbit() {
        let m = cat().to_mod();
        let mut p = TorusPoint::from_f64(&[0.5, 0.5]);
        let expected = [[0.5, 0.0], [0.0, 0.5], [0.5, 0.5]];
        for e in expected {
            p = m.apply(&p);
            assert_eq!(p, TorusPoint::from_f64(&e));
        }
    }

    #[test]
    fn powers_agree_with_repeated_application() {
        let m = cat();
        let p0 = TorusPoint::uniform(2, &mut stream(1, 0));
        let mut p = p0;
        for _ in 0..40 {
            p = m.to_mod().apply(&p);
        }
        assert_eq!(m.pow_wide(40).unwrap().to_mod().apply(&p0), p);
    }

    #[test]
    fn determinant_and_inverse() {
        assert_eq!(cat().det(), 1);
        let inv = cat().inverse().unwrap();
        assert_eq!(inv.entries(), &[1, -1, -1, 2]);
        let c = IntMatrix::new(3, vec![0, 0, -1, 1, 0, 3, 0, 1, 0]).unwrap();
        assert_eq!(c.det(), -1);
        assert_eq!(c.checked_mul(&c.inverse().unwrap()).unwrap(), IntMatrix::identity(3));
        assert!(IntMatrix::new(2, vec![2, 0, 0, 1]).unwrap().inverse().is_none());
    }

    #[test]
    fn hyperbolicity() {
        assert!(cat().is_hyperbolic(1e-9));
        assert!(!IntMatrix::identity(2).is_hyperbolic(1e-9));
        assert!(!IntMatrix::new(2, vec![0, -1, 1, 0]).unwrap().is_hyperbolic(1e-9));
    }

    #[test]
    fn overflow_is_detected() {
        assert!(cat().pow_wide(64).is_some());
        assert!(cat().pow_wide(200).is_none());
    }

    #[test]
    fn distance_wraps() {
        let a = TorusPoint::from_f64(&[0.05, 0.0]);
        let b = TorusPoint::from_f64(&[0.95, 0.0]);
        assert!((a.distance(&b) - 0.1).abs() < 1e-15);
    }
}
