//! Base systems (X, f, μ).

use crate::arithmetic::{theta_min, DiophantineVector};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::torus::{from_fixed, to_fixed, IntMatrix, ModMatrix, TorusPoint};
use rand::{Rng as _, SeedableRng};

/// Symbols remembered by a shift state.
pub const SHIFT_WINDOW: usize = 16;
/// Distance from the roof singularity that counts as hitting it.
pub const SINGULARITY_GUARD: f64 = 1e-13;
const TWO64: f64 = 18_446_744_073_709_551_616.0;

#[derive(Debug, Clone)]
pub struct TorusTranslation {
    pub alpha: DiophantineVector,
    shift: TorusPoint,
}

impl TorusTranslation {
    pub fn new(alpha: DiophantineVector) -> Self {
        let shift = TorusPoint::from_raw(&alpha.fixed());
        Self { alpha, shift }
    }

    pub fn dim(&self) -> usize {
        self.alpha.m()
    }

    pub fn shift(&self) -> &TorusPoint {
        &self.shift
    }
}

#[derive(Debug, Clone)]
pub struct HyperbolicToralAutomorphism {
    matrix: IntMatrix,
    forward: ModMatrix,
    backward: ModMatrix,
}

impl HyperbolicToralAutomorphism {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        if matrix.det().abs() != 1 {
            return invalid(format!("|det| = {} but must be 1", matrix.det().abs()));
        }
        if !matrix.is_hyperbolic(1e-9) {
            return invalid("matrix has an eigenvalue of modulus 1");
        }
        let inverse = matrix.inverse().ok_or_else(|| Error::InvalidParameter("matrix not invertible over Z".into()))?;
        Ok(Self { forward: matrix.to_mod(), backward: inverse.to_mod(), matrix })
    }

    pub fn cat() -> Self {
        Self::new(IntMatrix::new(2, vec![2, 1, 1, 1]).expect("2x2")).expect("cat map is hyperbolic")
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        self.forward.apply(p)
    }

    pub fn apply_inverse(&self, p: &TorusPoint) -> TorusPoint {
        self.backward.apply(p)
    }

    /// Σ log|λ| over eigenvalues outside the unit circle.
    pub fn entropy(&self) -> f64 {
        self.matrix.eigen_moduli().iter().filter(|&&m| m > 1.0).map(|m| m.ln()).sum()
    }
}

/// Subshift of finite type with a stationary Markov measure.
#[derive(Debug, Clone)]
pub struct MarkovShift {
    allowed: Vec<Vec<bool>>,
    p: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    pi: Vec<f64>,
    pi_cumulative: Vec<f64>,
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

impl MarkovShift {
    pub fn new(allowed: Vec<Vec<bool>>, p: Vec<Vec<f64>>) -> Result<Self> {
        let k = p.len();
        if k == 0 || k > 255 {
            return invalid(format!("alphabet size {k} outside 1..=255"));
        }
        if allowed.len() != k || p.iter().chain(std::iter::once(&vec![0.0; k])).any(|r| r.len() != k)
            || allowed.iter().any(|r| r.len() != k)
        {
            return invalid("transition matrices must be square and of equal size");
        }
        for (i, row) in p.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 || row.iter().any(|&x| x < 0.0) {
                return invalid(format!("row {i} of P is not a probability vector"));
            }
            if row.iter().zip(&allowed[i]).any(|(&x, &a)| x > 0.0 && !a) {
                return invalid(format!("row {i} of P charges a forbidden transition"));
            }
        }
        if !Self::is_mixing(&allowed) {
            return invalid("transition matrix A is not topologically mixing");
        }
        let pi = stationary(&p);
        let cumulative = p.iter().map(|r| cumulative(r)).collect();
        let pi_cumulative = cumulative_of(&pi);
        Ok(Self { allowed, p, cumulative, pi, pi_cumulative })
    }

    /// Full shift on `k` symbols with the given letter probabilities.
    pub fn bernoulli(weights: &[f64]) -> Result<Self> {
        let k = weights.len();
        Self::new(vec![vec![true; k]; k], vec![weights.to_vec(); k])
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::bernoulli(&vec![1.0 / k as f64; k])
    }

    /// Some power of A strictly positive (Wielandt bound (k−1)² + 1).
    fn is_mixing(a: &[Vec<bool>]) -> bool {
        let k = a.len();
        let mut power = a.to_vec();
        for _ in 0..(k - 1) * (k - 1) + 1 {
            if power.iter().all(|r| r.iter().all(|&x| x)) {
                return true;
            }
            power = (0..k)
                .map(|i| (0..k).map(|j| (0..k).any(|l| power[i][l] && a[l][j])).collect())
                .collect();
        }
        power.iter().all(|r| r.iter().all(|&x| x))
    }

    pub fn alphabet(&self) -> usize {
        self.p.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn allowed(&self) -> &[Vec<bool>] {
        &self.allowed
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Entropy −Σ π_i P_ij log P_ij.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (i, row) in self.p.iter().enumerate() {
            for &x in row {
                if x > 0.0 {
                    h -= self.pi[i] * x * x.ln();
                }
            }
        }
        h
    }

    fn draw(cum: &[f64], u: f64) -> u8 {
        cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) as u8
    }

    pub fn next_symbol(&self, current: u8, rng: &mut Rng) -> u8 {
        Self::draw(&self.cumulative[current as usize], rng.random())
    }

    pub fn initial_symbol(&self, rng: &mut Rng) -> u8 {
        Self::draw(&self.pi_cumulative, rng.random())
    }

    /// Probability of the admissible word `w` under the stationary measure.
    pub fn word_probability(&self, w: &[u8]) -> f64 {
        let Some(&first) = w.first() else { return 1.0 };
        w.windows(2).fold(self.pi[first as usize], |acc, t| acc * self.p[t[0] as usize][t[1] as usize])
    }

    /// Stationary path of the given length.
    pub fn sample_path(&self, length: usize, rng: &mut Rng) -> Vec<u8> {
        let mut out = Vec::with_capacity(length);
        if length == 0 {
            return out;
        }
        out.push(self.initial_symbol(rng));
        for _ in 1..length {
            let last = *out.last().expect("nonempty");
            out.push(self.next_symbol(last, rng));
        }
        out
    }
}

fn cumulative_of(v: &[f64]) -> Vec<f64> {
    cumulative(v)
}

fn stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let k = p.len();
    let mut pi = vec![1.0 / k as f64; k];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..k).map(|j| (0..k).map(|i| pi[i] * p[i][j]).sum()).collect();
        let lazy: Vec<f64> = pi.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
        let diff: f64 = lazy.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = lazy;
        if diff < 1e-16 {
            break;
        }
    }
    let s: f64 = pi.iter().sum();
    pi.iter().map(|x| x / s).collect()
}

/// Sliding window of a two-sided symbol sequence: the last [`SHIFT_WINDOW`]
/// symbols ω_{−15..0} plus the generator producing the future.
#[derive(Debug, Clone)]
pub struct ShiftState {
    history: u128,
    rng: Rng,
}

impl ShiftState {
    /// Window holding `past` (oldest first, last entry is ω_0).
    pub fn from_past(past: &[u8], seed: u64) -> Self {
        let history = past.iter().fold(0u128, |h, &s| (h << 8) | s as u128);
        Self { history, rng: Rng::seed_from_u64(seed) }
    }

    pub fn current(&self) -> u8 {
        self.history as u8
    }

    /// ω_{−back}.
    pub fn symbol(&self, back: usize) -> u8 {
        (self.history >> (8 * back)) as u8
    }

    pub fn history(&self) -> u128 {
        self.history
    }

    fn push(&mut self, s: u8) {
        self.history = (self.history << 8) | s as u128;
    }
}

#[derive(Debug, Clone)]
pub enum BaseSystem {
    Rotation(TorusTranslation),
    Automorphism(HyperbolicToralAutomorphism),
    Markov(MarkovShift),
}

#[derive(Debug, Clone)]
pub enum BaseState {
    Torus(TorusPoint),
    Shift(ShiftState),
}

impl BaseState {
    pub fn torus(&self) -> Option<&TorusPoint> {
        match self {
            BaseState::Torus(p) => Some(p),
            BaseState::Shift(_) => None,
        }
    }

    pub fn shift(&self) -> Option<&ShiftState> {
        match self {
            BaseState::Shift(s) => Some(s),
            BaseState::Torus(_) => None,
        }
    }
}

impl BaseSystem {
    /// Draw a point from the invariant measure μ.
    pub fn sample(&self, rng: &mut Rng) -> BaseState {
        match self {
            BaseSystem::Rotation(t) => BaseState::Torus(TorusPoint::uniform(t.dim(), rng)),
            BaseSystem::Automorphism(a) => BaseState::Torus(TorusPoint::uniform(a.dim(), rng)),
            BaseSystem::Markov(m) => {
                let past = m.sample_path(SHIFT_WINDOW, rng);
                BaseState::Shift(ShiftState::from_past(&past, rng.random()))
            }
        }
    }

    /// One application of f.
    pub fn step(&self, state: &mut BaseState) {
        match (self, state) {
            (BaseSystem::Rotation(t), BaseState::Torus(p)) => p.translate(t.shift()),
            (BaseSystem::Automorphism(a), BaseState::Torus(p)) => *p = a.apply(p),
            (BaseSystem::Markov(m), BaseState::Shift(s)) => {
                let next = m.next_symbol(s.current(), &mut s.rng);
                s.push(next);
            }
            _ => panic!("base state does not match the base system"),
        }
    }

    /// Metric entropy h_μ(f).
    pub fn entropy(&self) -> f64 {
        match self {
            BaseSystem::Rotation(_) => 0.0,
            BaseSystem::Automorphism(a) => a.entropy(),
            BaseSystem::Markov(m) => m.entropy(),
        }
    }

    pub fn torus_dim(&self) -> Option<usize> {
        match self {
            BaseSystem::Rotation(t) => Some(t.dim()),
            BaseSystem::Automorphism(a) => Some(a.dim()),
            BaseSystem::Markov(_) => None,
        }
    }
}

/// Stationary Markov path of `length` symbols.
pub fn markov_sample(shift: &MarkovShift, length: usize, rng: &mut Rng) -> Vec<u8> {
    shift.sample_path(length, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoofKind {
    /// 1 − A(log θ + log(1−θ)).
    LogSymmetric { a: f64 },
    /// 1 − A log θ − B log(1−θ).
    LogAsymmetric { a: f64, b: f64 },
    /// 1 + P θ^{−γ} + Q (1−θ)^{−γ}.
    Power { p: f64, q: f64, gamma: f64 },
    Constant,
}

/// Roof f = g / Z with ∫f = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofFunction {
    pub kind: RoofKind,
    pub normalizer: f64,
    pub floor: f64,
}

impl RoofFunction {
    pub fn new(kind: RoofKind) -> Result<Self> {
        let normalizer = match kind {
            RoofKind::LogSymmetric { a } if a > 0.0 => 1.0 + 2.0 * a,
            RoofKind::LogAsymmetric { a, b } if a >= 0.0 && b >= 0.0 && a + b > 0.0 => 1.0 + a + b,
            RoofKind::Power { p, q, gamma } if p >= 0.0 && q >= 0.0 && p + q > 0.0 && gamma > 0.0 && gamma < 1.0 => {
                1.0 + (p + q) / (1.0 - gamma)
            }
            RoofKind::Constant => 1.0,
            other => return invalid(format!("roof parameters out of range: {other:?}")),
        };
        let mut roof = Self { kind, normalizer, floor: 0.0 };
        roof.floor = roof.minimise();
        Ok(roof)
    }

    pub fn power(p: f64, q: f64, gamma: f64) -> Result<Self> {
        Self::new(RoofKind::Power { p, q, gamma })
    }

    pub fn constant() -> Self {
        Self::new(RoofKind::Constant).expect("constant roof")
    }

    /// Unnormalised profile g at θ, given as θ and 1 − θ.
    fn profile(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            RoofKind::LogSymmetric { a } => 1.0 - a * (lo.ln() + hi.ln()),
            RoofKind::LogAsymmetric { a, b } => 1.0 - a * lo.ln() - b * hi.ln(),
            RoofKind::Power { p, q, gamma } => 1.0 + p * lo.powf(-gamma) + q * hi.powf(-gamma),
            RoofKind::Constant => 1.0,
        }
    }

    fn is_singular_at(&self, lo: f64, hi: f64) -> bool {
        let (left, right) = match self.kind {
            RoofKind::LogSymmetric { .. } => (true, true),
            RoofKind::LogAsymmetric { a, b } => (a > 0.0, b > 0.0),
            RoofKind::Power { p, q, .. } => (p > 0.0, q > 0.0),
            RoofKind::Constant => (false, false),
        };
        (left && lo < SINGULARITY_GUARD) || (right && hi < SINGULARITY_GUARD)
    }

    /// f(θ) for θ on the fixed-point circle.
    pub fn eval_fixed(&self, theta: u64) -> Result<f64> {
        let lo = theta as f64 / TWO64;
        let hi = theta.wrapping_neg() as f64 / TWO64;
        let hi = if theta == 0 { 1.0 } else { hi };
        if self.kind != RoofKind::Constant && (theta == 0 || self.is_singular_at(lo, hi)) {
            return Err(Error::SingularityOverflow { theta: lo });
        }
        Ok(self.profile(lo, hi) / self.normalizer)
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        let lo = theta.rem_euclid(1.0);
        let hi = 1.0 - lo;
        if self.is_singular_at(lo, hi) || (self.kind != RoofKind::Constant && lo == 0.0) {
            return Err(Error::SingularityOverflow { theta: lo });
        }
        Ok(self.profile(lo, hi) / self.normalizer)
    }

    /// inf f via golden-section search (the profiles are convex).
    fn minimise(&self) -> f64 {
        if self.kind == RoofKind::Constant {
            return 1.0;
        }
        let g = |x: f64| self.profile(x, 1.0 - x);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if g(c) < g(d) { b = d } else { a = c }
        }
        g(0.5 * (a + b)) / self.normalizer
    }

    /// ∫₀¹ f by quadrature with closed forms for the singular end pieces.
    pub fn numerical_integral(&self) -> f64 {
        let delta = 1e-3;
        let (left, right) = match self.kind {
            RoofKind::LogSymmetric { a } => (a * delta * (1.0 - delta.ln()), a * delta * (1.0 - delta.ln())),
            RoofKind::LogAsymmetric { a, b } => (a * delta * (1.0 - delta.ln()), b * delta * (1.0 - delta.ln())),
            RoofKind::Power { p, q, gamma } => {
                let e = delta.powf(1.0 - gamma) / (1.0 - gamma);
                (p * e, q * e)
            }
            RoofKind::Constant => (0.0, 0.0),
        };
        let without_left = |x: f64| self.profile(x, 1.0 - x) - self.left_singular(x);
        let without_right = |x: f64| self.profile(x, 1.0 - x) - self.right_singular(1.0 - x);
        let mut middle = 0.0;
        let mut a = delta;
        while a < 0.5 {
            let b = (2.0 * a).min(0.5);
            middle += gauss_legendre(|x| self.profile(x, 1.0 - x), a, b, 8);
            middle += gauss_legendre(|x| self.profile(x, 1.0 - x), 1.0 - b, 1.0 - a, 8);
            a = b;
        }
        let ends = gauss_legendre(without_left, 0.0, delta, 40) + gauss_legendre(without_right, 1.0 - delta, 1.0, 40);
        (middle + ends + left + right) / self.normalizer
    }

    fn left_singular(&self, x: f64) -> f64 {
        match self.kind {
            RoofKind::LogSymmetric { a } | RoofKind::LogAsymmetric { a, .. } => -a * x.ln(),
            RoofKind::Power { p, gamma, .. } => p * x.powf(-gamma),
            RoofKind::Constant => 0.0,
        }
    }

    fn right_singular(&self, y: f64) -> f64 {
        match self.kind {
            RoofKind::LogSymmetric { a } => -a * y.ln(),
            RoofKind::LogAsymmetric { b, .. } => -b * y.ln(),
            RoofKind::Power { q, gamma, .. } => q * y.powf(-gamma),
            RoofKind::Constant => 0.0,
        }
    }

    /// θ distributed with density f.
    pub fn sample_theta(&self, rng: &mut Rng) -> u64 {
        let wl = match self.kind {
            RoofKind::LogSymmetric { a } | RoofKind::LogAsymmetric { a, .. } => a,
            RoofKind::Power { p, gamma, .. } => p / (1.0 - gamma),
            RoofKind::Constant => 0.0,
        };
        loop {
            let pick: f64 = rng.random::<f64>() * self.normalizer;
            let theta = if pick < 1.0 {
                rng.random::<u64>()
            } else {
                let x = match self.kind {
                    RoofKind::Power { gamma, .. } => rng.random::<f64>().powf(1.0 / (1.0 - gamma)),
                    _ => rng.random::<f64>() * rng.random::<f64>(),
                };
                if pick < 1.0 + wl { to_fixed(x) } else { to_fixed(-x) }
            };
            if self.eval_fixed(theta).is_ok() {
                return theta;
            }
        }
    }
}

/// n-point composite Gauss–Legendre (5 nodes per panel).
fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Special flow under `roof` over the rotation by `alpha`.
#[derive(Debug, Clone)]
pub struct SpecialFlow {
    pub roof: RoofFunction,
    pub alpha: f64,
    alpha_fixed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFlowState {
    /// θ on the fixed-point circle.
    pub theta: u64,
    pub s: f64,
}

impl SpecialFlowState {
    pub fn new(theta: f64, s: f64) -> Self {
        Self { theta: to_fixed(theta), s }
    }

    pub fn theta_f64(&self) -> f64 {
        from_fixed(self.theta)
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

impl SpecialFlow {
    pub fn new(roof: RoofFunction, alpha: f64) -> Self {
        Self { roof, alpha, alpha_fixed: to_fixed(alpha) }
    }

    pub fn alpha_fixed(&self) -> u64 {
        self.alpha_fixed
    }

    /// Point of the invariant probability measure (θ with density f, s uniform below the roof).
    pub fn sample(&self, rng: &mut Rng) -> SpecialFlowState {
        let theta = self.roof.sample_theta(rng);
        let top = self.roof.eval_fixed(theta).expect("sampled away from the singularity");
        SpecialFlowState { theta, s: rng.random::<f64>() * top }
    }

    /// f_n(θ) = Σ_{j<n} f(θ + jα).
    pub fn roof_sum(&self, theta: u64, n: u64) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        let mut x = theta;
        for _ in 0..n {
            acc.add(self.roof.eval_fixed(x)?);
            x = x.wrapping_add(self.alpha_fixed);
        }
        Ok(acc.value())
    }

    /// Flow for time `t ≥ 0`; returns the new state and the crossing count N.
    pub fn evolve(&self, state: SpecialFlowState, t: f64) -> Result<(SpecialFlowState, u64)> {
        if !(t >= 0.0) {
            return invalid(format!("flow time {t} must be nonnegative"));
        }
        let mut target = CompensatedSum::default();
        target.add(state.s);
        target.add(t);
        let goal = target.value();
        let mut acc = CompensatedSum::default();
        let mut theta = state.theta;
        let mut n = 0u64;
        loop {
            let r = self.roof.eval_fixed(theta)?;
            if acc.value() + r > goal {
                break;
            }
            acc.add(r);
            theta = theta.wrapping_add(self.alpha_fixed);
            n += 1;
        }
        target.add(-acc.value());
        Ok((SpecialFlowState { theta, s: target.value().max(0.0) }, n))
    }
}

pub fn special_flow_evolve(flow: &SpecialFlow, state: SpecialFlowState, t: f64) -> Result<(SpecialFlowState, u64)> {
    flow.evolve(state, t)
}

/// Orbit points scanned by [`is_t_good`]: ⌈T/c⌉.
fn t_good_points(roof: &RoofFunction, t: f64) -> u64 {
    ((t / roof.floor).ceil() as u64).max(1)
}

/// True when the first ⌈T/c⌉ points θ + jα avoid [−T^{−1.01}, T^{−1.01}].
pub fn is_t_good(roof: &RoofFunction, alpha: f64, theta: f64, t: f64) -> bool {
    let points = t_good_points(roof, t);
    let radius = t.powf(-1.01);
    theta_min(theta, alpha, points) > radius
}

/// Measure of the set of θ that are not T-good: the union of intervals of
/// half-width T^{−1.01} around −jα, j < ⌈T/c⌉.
pub fn t_bad_measure(roof: &RoofFunction, alpha: f64, t: f64) -> f64 {
    let points = t_good_points(roof, t);
    let radius = t.powf(-1.01);
    let a = to_fixed(alpha);
    let mut centres: Vec<f64> = (0..points).map(|j| from_fixed(a.wrapping_mul(j).wrapping_neg())).collect();
    centres.sort_by(f64::total_cmp);
    let mut covered = 0.0;
    let n = centres.len();
    for i in 0..n {
        let next = if i + 1 < n { centres[i + 1] } else { centres[0] + 1.0 };
        covered += (next - centres[i]).min(2.0 * radius);
    }
    covered.min(1.0)
}
