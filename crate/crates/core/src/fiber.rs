//! Fiber actions (G, Y, ν).

use crate::base::HyperbolicToralAutomorphism;
use crate::error::{invalid, Error, Result};
use crate::parallel::{fold, Moments};
use crate::rng::{splitmix64, stream, Rng};
use crate::torus::{IntMatrix, ModMatrix, TorusPoint};
use crate::trig::TrigPolynomial;
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;
use std::f64::consts::TAU;

pub const DEFAULT_POWER_CAP: i64 = 64;
/// Largest ℤ^d rank supported by the fixed-size fiber state.
pub const MAX_RANK: usize = 4;

/// ℤ^d action by commuting integer matrices on 𝕋ⁿ.
#[derive(Debug, Clone)]
pub struct ToralZdAction {
    generators: Vec<IntMatrix>,
    cap: i64,
    /// `powers[j][e + cap]` = M_j^e mod 2⁶⁴, or `None` past 128-bit range.
    powers: Vec<Vec<Option<ModMatrix>>>,
}

impl ToralZdAction {
    pub fn new(generators: Vec<IntMatrix>, cap: i64) -> Result<Self> {
        let Some(first) = generators.first() else { return invalid("at least one generator required") };
        let n = first.dim();
        if generators.len() > MAX_RANK {
            return invalid(format!("rank {} exceeds {MAX_RANK}", generators.len()));
        }
        if cap < 1 {
            return invalid("power cap must be positive");
        }
        for (i, m) in generators.iter().enumerate() {
            if m.dim() != n {
                return invalid("generators must share one dimension");
            }
            if m.det().abs() != 1 {
                return invalid(format!("generator {i} has |det| != 1"));
            }
            if !m.is_hyperbolic(1e-9) {
                return invalid(format!("generator {i} is not hyperbolic"));
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                let ab = generators[i].checked_mul(&generators[j]);
                let ba = generators[j].checked_mul(&generators[i]);
                if ab.is_none() || ab != ba {
                    return invalid(format!("generators {i} and {j} do not commute"));
                }
                if !ab.expect("checked").is_hyperbolic(1e-9) {
                    return invalid(format!("product of generators {i} and {j} is not hyperbolic"));
                }
            }
        }
        let mut powers = Vec::with_capacity(generators.len());
        for m in &generators {
            let inv = m.inverse().ok_or_else(|| Error::InvalidParameter("generator not invertible".into()))?;
            let table = (-cap..=cap)
                .map(|e| {
                    let (base, k) = if e < 0 { (&inv, -e) } else { (m, e) };
                    base.pow_wide(k as u32).map(|w| w.to_mod())
                })
                .collect();
            powers.push(table);
        }
        Ok(Self { generators, cap, powers })
    }

    /// ℤ action of the cat map on 𝕋².
    pub fn cat() -> Self {
        Self::new(vec![HyperbolicToralAutomorphism::cat().matrix().clone()], DEFAULT_POWER_CAP).expect("cat map")
    }

    /// ℤ² Cartan action on 𝕋³ from the totally real cubic field of x³ − 3x + 1:
    /// the companion matrix C and C − I.
    pub fn cartan_t3() -> Self {
        let c = IntMatrix::new(3, vec![0, 0, -1, 1, 0, 3, 0, 1, 0]).expect("3x3");
        let c1 = IntMatrix::new(3, vec![-1, 0, -1, 1, -1, 3, 0, 1, -1]).expect("3x3");
        Self::new(vec![c, c1], DEFAULT_POWER_CAP).expect("cubic Cartan action")
    }

    /// ℤ³ Cartan action on 𝕋⁴ by the units 1+√2, 2+√3, √2+√3 of ℚ(√2,√3),
    /// acting on the basis (1, √2, √3, √6).
    pub fn cartan_t4() -> Self {
        let s2 = [0, 2, 0, 0, 1, 0, 0, 0, 0, 0, 0, 2, 0, 0, 1, 0];
        let s3 = [0, 0, 3, 0, 0, 0, 0, 3, 1, 0, 0, 0, 0, 1, 0, 0];
        let id = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
        let combo = |a: i64, b: i64, c: i64| {
            IntMatrix::new(4, (0..16).map(|i| a * id[i] + b * s2[i] + c * s3[i]).collect()).expect("4x4")
        };
        Self::new(vec![combo(1, 1, 0), combo(2, 0, 1), combo(0, 1, 1)], DEFAULT_POWER_CAP).expect("biquadratic Cartan action")
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn generators(&self) -> &[IntMatrix] {
        &self.generators
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    /// G_v y = M_1^{v_1}···M_d^{v_d} y.
    pub fn apply(&self, v: &[i64], p: &TorusPoint) -> Result<TorusPoint> {
        let mut out = *p;
        for (j, &e) in v.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let m = self.power(j, e)?;
            out = m.apply(&out);
        }
        Ok(out)
    }

    fn power(&self, j: usize, e: i64) -> Result<&ModMatrix> {
        let overflow = Error::ExponentOverflow { exponent: e, cap: self.cap };
        if e.abs() > self.cap {
            return Err(overflow);
        }
        self.powers[j][(e + self.cap) as usize].as_ref().ok_or(overflow)
    }

    /// Exact integer matrix M^v (for norm-growth checks).
    pub fn word_matrix(&self, v: &[i64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut acc = DMatrix::<f64>::identity(n, n);
        for (j, &e) in v.iter().enumerate() {
            let base = if e < 0 { self.generators[j].inverse().expect("unimodular") } else { self.generators[j].clone() };
            let w = base.pow_wide(e.unsigned_abs() as u32).ok_or(Error::ExponentOverflow { exponent: e, cap: self.cap })?;
            let m = DMatrix::from_fn(n, n, |r, c| w.get(r, c) as f64);
            acc = m * acc;
        }
        Ok(acc)
    }
}

/// Joint Lyapunov functionals of a commuting action.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LyapunovData {
    /// `functionals[i][j]` = χ_i(e_j) = log|λ_{i,j}|.
    pub functionals: Vec<Vec<f64>>,
    pub multiplicities: Vec<usize>,
}

impl LyapunovData {
    pub fn eval(&self, i: usize, v: &[f64]) -> f64 {
        self.functionals[i].iter().zip(v).map(|(c, x)| c * x).sum()
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }
}

/// Eigenvalues of a generic combination of the generators; every eigenvector
/// is checked to be a joint eigenvector.
pub fn lyapunov_functionals(action: &ToralZdAction) -> Result<LyapunovData> {
    let n = action.dim();
    let mats: Vec<DMatrix<f64>> = action.generators.iter().map(|m| m.to_f64()).collect();
    let mut combo = DMatrix::<f64>::zeros(n, n);
    for (j, m) in mats.iter().enumerate() {
        combo += m * (1.0 / ((j as f64) + 1.618_033_988_749_895).sqrt());
    }
    let eig = combo.clone().complex_eigenvalues();
    let complex = |m: &DMatrix<f64>| m.map(|x| Complex::new(x, 0.0));
    let combo_c = complex(&combo);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for lambda in eig.iter() {
        let shifted = &combo_c - DMatrix::<Complex<f64>>::identity(n, n) * *lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let idx = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("n > 0");
        let v: DVector<Complex<f64>> = v_t.row(idx).adjoint().into_owned();
        let vv = v.norm();
        let mut row = Vec::with_capacity(mats.len());
        for m in &mats {
            let mv = complex(m) * &v;
            let mu = v.dotc(&mv) / Complex::new(vv * vv, 0.0);
            let residual = (&mv - &v * mu).norm() / vv;
            if residual > 1e-6 * m.norm().max(1.0) {
                return Err(Error::NotSimultaneouslyDiagonalizable { residual });
            }
            row.push(mu.norm().ln());
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| b.iter().zip(a).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut functionals: Vec<Vec<f64>> = Vec::new();
    let mut multiplicities = Vec::new();
    for row in rows {
        match functionals.last() {
            Some(last) if last.iter().zip(&row).all(|(a, b)| (a - b).abs() < 1e-8) => {
                *multiplicities.last_mut().expect("parallel vectors") += 1;
            }
            _ => {
                functionals.push(row);
                multiplicities.push(1);
            }
        }
    }
    Ok(LyapunovData { functionals, multiplicities })
}

/// h_μ(f) + Σ_i m_i max{χ_i(mean τ), 0}.
pub fn entropy_formula(base_entropy: f64, mean_tau: &[f64], lyap: &LyapunovData) -> f64 {
    base_entropy
        + (0..lyap.len()).map(|i| lyap.multiplicities[i] as f64 * lyap.eval(i, mean_tau).max(0.0)).sum::<f64>()
}

/// I.i.d. standard normal scenery indexed by ℤ^d, generated from a hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneryFiber {
    pub d: usize,
}

/// ξ_z for the scenery keyed by `seed`.
pub fn scenery_value(seed: u64, z: &[i64]) -> f64 {
    let key = z.iter().fold(splitmix64(seed), |h, &c| splitmix64(h ^ c as u64));
    Rng::seed_from_u64(key).sample(StandardNormal)
}

/// Suspension of the cat map under r(y) = 1 + 0.2 cos(2π y_1).
#[derive(Debug, Clone)]
pub struct SuspensionFlow {
    pub automorphism: HyperbolicToralAutomorphism,
}

impl SuspensionFlow {
    pub fn cat() -> Self {
        Self { automorphism: HyperbolicToralAutomorphism::cat() }
    }

    pub fn roof(y: &TorusPoint) -> f64 {
        1.0 + 0.2 * (TAU * y.coord(0)).cos()
    }

    pub fn flow(&self, y: &mut TorusPoint, u: &mut f64, t: f64) {
        *u += t;
        loop {
            let r = Self::roof(y);
            if *u < r {
                break;
            }
            *u -= r;
            *y = self.automorphism.apply(y);
        }
        while *u < 0.0 {
            *y = self.automorphism.apply_inverse(y);
            *u += Self::roof(y);
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> (TorusPoint, f64) {
        loop {
            let y = TorusPoint::uniform(2, rng);
            let r = Self::roof(&y);
            if rng.random::<f64>() * 1.2 < r {
                return (y, rng.random::<f64>() * r);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum FiberAction {
    Toral(ToralZdAction),
    Scenery(SceneryFiber),
    Suspension(SuspensionFlow),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberState {
    Torus(TorusPoint),
    Scenery { seed: u64, offset: [i64; MAX_RANK] },
    Suspension { y: TorusPoint, u: f64 },
}

impl FiberState {
    pub fn torus(&self) -> Option<&TorusPoint> {
        match self {
            FiberState::Torus(p) => Some(p),
            _ => None,
        }
    }
}

impl FiberAction {
    /// Rank d of the acting group.
    pub fn rank(&self) -> usize {
        match self {
            FiberAction::Toral(a) => a.rank(),
            FiberAction::Scenery(s) => s.d,
            FiberAction::Suspension(_) => 1,
        }
    }

    /// True for ℤ^d actions, false for the ℝ-flow.
    pub fn is_discrete(&self) -> bool {
        !matches!(self, FiberAction::Suspension(_))
    }

    pub fn sample(&self, rng: &mut Rng) -> FiberState {
        match self {
            FiberAction::Toral(a) => FiberState::Torus(TorusPoint::uniform(a.dim(), rng)),
            FiberAction::Scenery(_) => FiberState::Scenery { seed: rng.random(), offset: [0; MAX_RANK] },
            FiberAction::Suspension(s) => {
                let (y, u) = s.sample(rng);
                FiberState::Suspension { y, u }
            }
        }
    }

    /// Apply G_v. Discrete actions expect integral entries in `v`.
    pub fn apply(&self, v: &[f64], state: &mut FiberState) -> Result<()> {
        match (self, state) {
            (FiberAction::Toral(a), FiberState::Torus(p)) => {
                let mut w = [0i64; MAX_RANK];
                for (slot, &x) in w.iter_mut().zip(v) {
                    *slot = x as i64;
                }
                *p = a.apply(&w[..a.rank()], p)?;
                Ok(())
            }
            (FiberAction::Scenery(s), FiberState::Scenery { offset, .. }) => {
                for (o, &x) in offset.iter_mut().zip(v).take(s.d) {
                    *o += x as i64;
                }
                Ok(())
            }
            (FiberAction::Suspension(f), FiberState::Suspension { y, u }) => {
                f.flow(y, u, v[0]);
                Ok(())
            }
            _ => invalid("fiber state does not match the fiber action"),
        }
    }
}

pub fn fiber_apply(action: &FiberAction, v: &[f64], state: &mut FiberState) -> Result<()> {
    action.apply(v, state)
}

/// Bounded functions on a toral fiber.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberFunction {
    Trig(TrigPolynomial),
    /// Indicator of a Euclidean ball (radius below 1/2).
    Ball { center: Vec<f64>, radius: f64 },
}

impl FiberFunction {
    pub fn eval(&self, y: &TorusPoint) -> f64 {
        match self {
            FiberFunction::Trig(p) => p.eval(y),
            FiberFunction::Ball { center, radius } => {
                f64::from(u8::from(y.distance(&TorusPoint::from_f64(center)) < *radius))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            FiberFunction::Trig(p) => p.mean(),
            FiberFunction::Ball { center, radius } => {
                let n = center.len() as i32;
                let unit = std::f64::consts::PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0 + 1.0);
                unit * radius.powi(n)
            }
        }
    }
}

/// Monte Carlo ∫A₁(y)A₂(G_v y)dν − ν(A₁)ν(A₂); returns (estimate, standard error).
pub fn fiber_correlation(
    action: &ToralZdAction,
    pair: (&FiberFunction, &FiberFunction),
    v: &[i64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<(f64, f64)> {
    if samples < 1000 {
        return invalid("fiber_correlation needs at least 1000 samples");
    }
    let (a1, a2) = pair;
    let moments = fold(
        workers,
        samples,
        || Moments::new(1),
        |acc, i| {
            let y = TorusPoint::uniform(action.dim(), &mut stream(seed, i));
            let gy = action.apply(v, &y)?;
            acc.push(&[a1.eval(&y) * a2.eval(&gy)]);
            Ok(())
        },
        Moments::merge,
    )?;
    Ok((moments.mean(0) - a1.mean() * a2.mean(), moments.std_error(0)))
}
