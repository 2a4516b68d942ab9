//! Skewing functions τ over the base systems, their Birkhoff sums and scans.

use crate::arithmetic::{minkowski_search, pairing_fixed, DiophantineVector};
use crate::base::{BaseState, BaseSystem, CompensatedSum, MarkovShift, SpecialFlow, SpecialFlowState};
use crate::error::{invalid, Error, Result};
use crate::parallel::fold;
use crate::rng::{stream, Rng};
use crate::stats::Frequency;
use crate::torus::{signed_fixed, TorusPoint};
use crate::trig::TrigPolynomial;
use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// τ_j(x) = Σ_l a_l^{(j)} |k_l|^{−r} l^{−2} cos(2π⟨k_l, x⟩), where k_l is the
/// Minkowski vector for N = 2^l.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCocycle {
    pub frequencies: Vec<Vec<i64>>,
    /// `coefficients[l][j]` = a_{l+1}^{(j)} ∈ [−1, 1].
    pub coefficients: Vec<Vec<f64>>,
    pub r: f64,
    pub d: usize,
    /// `weights[l][j]` = a_l^{(j)} / (|k_l|^r l²).
    weights: Vec<Vec<f64>>,
}

impl FourierCocycle {
    pub fn new(frequencies: Vec<Vec<i64>>, coefficients: Vec<Vec<f64>>, r: f64) -> Result<Self> {
        if frequencies.len() != coefficients.len() || frequencies.is_empty() {
            return invalid("one coefficient row per frequency is required");
        }
        let d = coefficients[0].len();
        if d == 0 || coefficients.iter().any(|c| c.len() != d || c.iter().any(|a| !(-1.0..=1.0).contains(a))) {
            return invalid("coefficients must be rows of equal length with entries in [-1, 1]");
        }
        let weights = frequencies
            .iter()
            .zip(&coefficients)
            .enumerate()
            .map(|(i, (k, a))| {
                let l = (i + 1) as f64;
                let norm = k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
                a.iter().map(|aj| aj / (norm.powf(r) * l * l)).collect()
            })
            .collect();
        Ok(Self { frequencies, coefficients, r, d, weights })
    }

    /// The coefficient of frequency k_l in component j.
    pub fn weight(&self, l: usize, j: usize) -> f64 {
        self.weights[l - 1][j]
    }

    pub fn eval(&self, x: &TorusPoint, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, w) in self.frequencies.iter().zip(&self.weights) {
            let c = (TAU * signed_fixed(pairing_fixed(x.raw(), k))).cos();
            for (o, wj) in out.iter_mut().zip(w) {
                *o += wj * c;
            }
        }
    }

    /// Closed-form τ_N over the rotation by α:
    /// Σ_{n<N} cos 2π(φ + nβ) = sin(πNβ)/sin(πβ) · cos 2π(φ + (N−1)β/2).
    pub fn rotation_sum(&self, alpha: &[u64], x: &TorusPoint, n: u64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if n == 0 {
            return;
        }
        for (k, w) in self.frequencies.iter().zip(&self.weights) {
            let phi = pairing_fixed(x.raw(), k);
            let beta = pairing_fixed(alpha, k) as i64 as i128;
            let s = if beta == 0 {
                n as f64 * (TAU * signed_fixed(phi)).cos()
            } else {
                let mid = phi.wrapping_add((((n - 1) as i128 * beta) >> 1) as u64);
                let odd = ((n - 1) as i128 * beta) & 1;
                let centre = TAU * (signed_fixed(mid) + odd as f64 / 36_893_488_147_419_103_232.0);
                let total = wrap_two(n as i128 * beta);
                let ratio = (PI * total).sin() / (PI * beta as f64 / 18_446_744_073_709_551_616.0).sin();
                ratio * centre.cos()
            };
            for (o, wj) in out.iter_mut().zip(w) {
                *o += wj * s;
            }
        }
    }
}

/// x / 2⁶⁴ reduced to [−1, 1).
fn wrap_two(x: i128) -> f64 {
    let m = x.rem_euclid(1i128 << 65);
    let m = if m >= 1i128 << 64 { m - (1i128 << 65) } else { m };
    m as f64 / 18_446_744_073_709_551_616.0
}

/// Diophantine Fourier cocycle with L_max frequencies and coefficients
/// drawn uniformly from [−1, 1].
pub fn build_dioph_cocycle(alpha: &DiophantineVector, r: f64, d: usize, l_max: usize, seed: u64) -> Result<FourierCocycle> {
    let m = alpha.m() as f64;
    let kappa = alpha.kappa.unwrap_or(m);
    if !(kappa / 2.0 < r && r < m) {
        return invalid(format!("r = {r} outside ({}, {m})", kappa / 2.0));
    }
    if l_max < 4 || l_max > 62 {
        return invalid("L_max must lie in 4..=62");
    }
    if d == 0 {
        return invalid("d must be positive");
    }
    let frequencies = (1..=l_max).map(|l| minkowski_search(alpha, 1u64 << l)).collect::<Result<Vec<_>>>()?;
    let mut rng = Rng::seed_from_u64(seed);
    let coefficients = (0..l_max).map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
    FourierCocycle::new(frequencies, coefficients, r)
}

/// Integer cocycle over a Markov shift that reads the last W symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolCocycle {
    pub alphabet: usize,
    pub window: usize,
    pub d: usize,
    /// Row `Σ_i ω_{−i} K^i` holds τ for that window.
    table: Vec<i64>,
}

impl SymbolCocycle {
    pub fn new(alphabet: usize, window: usize, table: Vec<Vec<i64>>) -> Result<Self> {
        if window == 0 || window > crate::base::SHIFT_WINDOW {
            return invalid(format!("window must lie in 1..={}", crate::base::SHIFT_WINDOW));
        }
        let rows = alphabet.checked_pow(window as u32).filter(|&r| r <= 1 << 20);
        if rows != Some(table.len()) {
            return invalid(format!("expected {alphabet}^{window} table rows, got {}", table.len()));
        }
        let d = table[0].len();
        if d == 0 || table.iter().any(|row| row.len() != d) {
            return invalid("table rows must share one positive length");
        }
        Ok(Self { alphabet, window, d, table: table.concat() })
    }

    /// τ(ω) = values[ω_0].
    pub fn single(values: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(values.len(), 1, values)
    }

    /// The ±e_j steps of a d-dimensional simple random walk, scaled.
    pub fn simple_walk(d: usize, scale: i64) -> Result<Self> {
        let mut values = Vec::with_capacity(2 * d);
        for j in 0..d {
            for sign in [1, -1] {
                let mut v = vec![0; d];
                v[j] = sign * scale;
                values.push(v);
            }
        }
        Self::single(values)
    }

    pub fn value(&self, index: usize) -> &[i64] {
        &self.table[index * self.d..(index + 1) * self.d]
    }

    pub fn index(&self, history: u128) -> usize {
        (0..self.window).rev().fold(0usize, |acc, i| acc * self.alphabet + ((history >> (8 * i)) as u8) as usize)
    }

    /// E[τ] under the stationary Markov measure, summed over admissible windows.
    pub fn expectation(&self, shift: &MarkovShift) -> Result<Vec<f64>> {
        if shift.alphabet() != self.alphabet {
            return invalid("cocycle alphabet differs from the shift alphabet");
        }
        let mut mean = vec![CompensatedSum::default(); self.d];
        let mut word = vec![0u8; self.window];
        for idx in 0..self.table.len() / self.d {
            let mut rest = idx;
            for i in 0..self.window {
                word[self.window - 1 - i] = (rest % self.alphabet) as u8;
                rest /= self.alphabet;
            }
            let p = shift.word_probability(&word);
            if p > 0.0 {
                for (m, &v) in mean.iter_mut().zip(self.value(idx)) {
                    m.add(p * v as f64);
                }
            }
        }
        Ok(mean.iter().map(CompensatedSum::value).collect())
    }

    pub fn certify_zero_mean(&self, shift: &MarkovShift) -> Result<()> {
        let mean = self.expectation(shift)?;
        if mean.iter().any(|m| m.abs() > 1e-12) {
            return Err(Error::NotZeroMean { mean });
        }
        Ok(())
    }
}

/// Trigonometric-polynomial cocycle on a base torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothCocycle {
    pub components: Vec<TrigPolynomial>,
    pub dim: usize,
    pub positive: bool,
}

impl SmoothCocycle {
    pub fn new(components: Vec<TrigPolynomial>, dim: usize, positive: bool) -> Result<Self> {
        if components.is_empty() || components.iter().any(|c| c.max_dim() > dim) {
            return invalid("components must be polynomials on the base torus");
        }
        let out = Self { components, dim, positive };
        if positive {
            for (j, c) in out.components.iter().enumerate() {
                let floor = grid_floor(c, dim);
                if floor <= 0.0 {
                    return invalid(format!("component {j} is not certified positive (bound {floor:.3e})"));
                }
            }
        }
        Ok(out)
    }

    pub fn mean(&self) -> Vec<f64> {
        self.components.iter().map(TrigPolynomial::mean).collect()
    }
}

/// Minimum on a grid of about 1024 points minus the Lipschitz slack of a cell.
pub fn grid_floor(p: &TrigPolynomial, dim: usize) -> f64 {
    let per_axis = (1024f64.powf(1.0 / dim as f64)).ceil() as usize;
    let h = 1.0 / per_axis as f64;
    let total = per_axis.pow(dim as u32);
    let mut coords = vec![0.0; dim];
    let mut min = f64::INFINITY;
    for idx in 0..total {
        let mut rest = idx;
        for c in coords.iter_mut() {
            *c = (rest % per_axis) as f64 * h + 0.5 * h;
            rest /= per_axis;
        }
        min = min.min(p.eval(&TorusPoint::from_f64(&coords)));
    }
    min - p.lipschitz_bound() * 0.5 * h * (dim as f64).sqrt()
}

/// τ(x) = base + jump·1_B(x) for a coordinate box B on the base torus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorCocycle {
    pub base: Vec<i64>,
    pub jump: Vec<i64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IndicatorCocycle {
    pub fn new(base: Vec<i64>, jump: Vec<i64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if base.len() != jump.len() || lower.len() != upper.len() || lower.is_empty() {
            return invalid("indicator cocycle shape mismatch");
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(0.0 <= *a && a < b && *b <= 1.0)) {
            return invalid("box bounds must satisfy 0 <= lower < upper <= 1");
        }
        Ok(Self { base, jump, lower, upper })
    }

    pub fn contains(&self, x: &TorusPoint) -> bool {
        self.lower.iter().zip(&self.upper).enumerate().all(|(i, (a, b))| {
            let c = x.coord(i);
            *a <= c && c < *b
        })
    }

    pub fn mean(&self) -> Vec<f64> {
        let vol: f64 = self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product();
        self.base.iter().zip(&self.jump).map(|(b, j)| *b as f64 + vol * *j as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cocycle {
    Fourier(FourierCocycle),
    Symbol(SymbolCocycle),
    Smooth(SmoothCocycle),
    Indicator(IndicatorCocycle),
    Constant { value: Vec<f64> },
}

impl Cocycle {
    pub fn dim(&self) -> usize {
        match self {
            Cocycle::Fourier(f) => f.d,
            Cocycle::Symbol(s) => s.d,
            Cocycle::Smooth(s) => s.components.len(),
            Cocycle::Indicator(i) => i.base.len(),
            Cocycle::Constant { value } => value.len(),
        }
    }

    /// True when every value lies in ℤ^d.
    pub fn is_integer(&self) -> bool {
        match self {
            Cocycle::Symbol(_) | Cocycle::Indicator(_) => true,
            Cocycle::Constant { value } => value.iter().all(|v| v.fract() == 0.0),
            Cocycle::Fourier(_) | Cocycle::Smooth(_) => false,
        }
    }

    /// Checks that the cocycle can be evaluated on states of `base`.
    pub fn check_base(&self, base: &BaseSystem) -> Result<()> {
        let ok = match (self, base) {
            (Cocycle::Constant { .. }, _) => true,
            (Cocycle::Symbol(s), BaseSystem::Markov(m)) => s.alphabet == m.alphabet(),
            (Cocycle::Fourier(f), b) => b.torus_dim() == Some(f.frequencies[0].len()),
            (Cocycle::Smooth(s), b) => b.torus_dim() == Some(s.dim),
            (Cocycle::Indicator(i), b) => b.torus_dim() == Some(i.lower.len()),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            invalid("cocycle is not defined on this base")
        }
    }

    /// τ(x) written into `out` (length `dim()`).
    pub fn eval(&self, x: &BaseState, out: &mut [f64]) {
        match (self, x) {
            (Cocycle::Fourier(f), BaseState::Torus(p)) => f.eval(p, out),
            (Cocycle::Symbol(s), BaseState::Shift(w)) => {
                for (o, &v) in out.iter_mut().zip(s.value(s.index(w.history()))) {
                    *o = v as f64;
                }
            }
            (Cocycle::Smooth(s), BaseState::Torus(p)) => {
                for (o, c) in out.iter_mut().zip(&s.components) {
                    *o = c.eval(p);
                }
            }
            (Cocycle::Indicator(ind), BaseState::Torus(p)) => {
                let hit = ind.contains(p);
                for ((o, b), j) in out.iter_mut().zip(&ind.base).zip(&ind.jump) {
                    *o = (*b + if hit { *j } else { 0 }) as f64;
                }
            }
            (Cocycle::Constant { value }, _) => out.copy_from_slice(value),
            _ => panic!("cocycle evaluated on a state of the wrong base"),
        }
    }

    /// ∫τ dμ.
    pub fn mean(&self, base: &BaseSystem) -> Result<Vec<f64>> {
        self.check_base(base)?;
        Ok(match (self, base) {
            (Cocycle::Fourier(f), _) => vec![0.0; f.d],
            (Cocycle::Symbol(s), BaseSystem::Markov(m)) => s.expectation(m)?,
            (Cocycle::Smooth(s), _) => s.mean(),
            (Cocycle::Indicator(i), _) => i.mean(),
            (Cocycle::Constant { value }, _) => value.clone(),
            _ => unreachable!("checked above"),
        })
    }

    /// Closed-form τ_N when available (Fourier cocycle over a rotation).
    pub fn fast_sum(&self, base: &BaseSystem, x: &BaseState, n: u64) -> Option<Vec<f64>> {
        match (self, base, x) {
            (Cocycle::Fourier(f), BaseSystem::Rotation(t), BaseState::Torus(p)) => {
                let mut out = vec![0.0; f.d];
                f.rotation_sum(t.shift().raw(), p, n, &mut out);
                Some(out)
            }
            (Cocycle::Constant { value }, _, _) => Some(value.iter().map(|v| v * n as f64).collect()),
            _ => None,
        }
    }
}

/// Running Birkhoff sum τ_n(x) along a base orbit.
#[derive(Debug, Clone)]
pub struct CocycleWalk<'a> {
    tau: &'a Cocycle,
    base: &'a BaseSystem,
    state: BaseState,
    sum: Vec<CompensatedSum>,
    buf: Vec<f64>,
    n: u64,
}

impl<'a> CocycleWalk<'a> {
    pub fn new(tau: &'a Cocycle, base: &'a BaseSystem, start: BaseState) -> Self {
        let d = tau.dim();
        Self { tau, base, state: start, sum: vec![CompensatedSum::default(); d], buf: vec![0.0; d], n: 0 }
    }

    /// τ_{n+1}(x) = τ_n(x) + τ(f^n x).
    pub fn advance(&mut self) {
        self.tau.eval(&self.state, &mut self.buf);
        for (s, &v) in self.sum.iter_mut().zip(&self.buf) {
            s.add(v);
        }
        self.base.step(&mut self.state);
        self.n += 1;
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    /// Current τ_n(x).
    pub fn sum_into(&self, out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.sum) {
            *o = s.value();
        }
    }

    pub fn sum(&self) -> Vec<f64> {
        self.sum.iter().map(CompensatedSum::value).collect()
    }

    /// f^n x.
    pub fn state(&self) -> &BaseState {
        &self.state
    }
}

/// τ_N(x₀) = Σ_{n<N} τ(f^n x₀).
pub fn cocycle_sum(tau: &Cocycle, base: &BaseSystem, x0: &BaseState, n: u64) -> Result<Vec<f64>> {
    tau.check_base(base)?;
    let mut walk = CocycleWalk::new(tau, base, x0.clone());
    for _ in 0..n {
        walk.advance();
    }
    Ok(walk.sum())
}

/// Functions on the special-flow phase space {(θ, s): 0 ≤ s < r(θ)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowFunction {
    Constant { value: f64 },
    /// g(θ), independent of height.
    Theta { g: TrigPolynomial },
    /// g(θ)·e^{−λs}.
    ThetaDecay { g: TrigPolynomial, rate: f64 },
}

impl FlowFunction {
    pub fn eval(&self, theta: &TorusPoint, s: f64) -> f64 {
        match self {
            FlowFunction::Constant { value } => *value,
            FlowFunction::Theta { g } => g.eval(theta),
            FlowFunction::ThetaDecay { g, rate } => g.eval(theta) * (-rate * s).exp(),
        }
    }

    /// Value in the limit s → ∞ along the singular fibre.
    pub fn limit(&self, theta: &TorusPoint) -> f64 {
        match self {
            FlowFunction::ThetaDecay { .. } => 0.0,
            other => other.eval(theta, 0.0),
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            FlowFunction::Constant { value } => Some(*value),
            _ => None,
        }
    }
}

pub const SEGMENT_TOLERANCE: f64 = 1e-8;

/// Adaptive Simpson quadrature of `f` on [a, b].
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 40)
}

/// τ_T(x) = ∫₀ᵀ τ(h_t x) dt, integrated between consecutive roof crossings.
pub fn continuous_cocycle_integral(tau: &FlowFunction, flow: &SpecialFlow, state: SpecialFlowState, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return invalid(format!("time {t} must be nonnegative"));
    }
    let mut total = CompensatedSum::default();
    let mut remaining = t;
    let (mut theta, mut s) = (state.theta, state.s);
    while remaining > 0.0 {
        let r = flow.roof.eval_fixed(theta)?;
        let end = r.min(s + remaining);
        let point = TorusPoint::from_raw(&[theta]);
        let piece = match tau {
            FlowFunction::Constant { value } => value * (end - s),
            FlowFunction::Theta { g } => g.eval(&point) * (end - s),
            _ => adaptive_simpson(&|u| tau.eval(&point, u), s, end, SEGMENT_TOLERANCE),
        };
        total.add(piece);
        remaining -= end - s;
        if end < r {
            break;
        }
        theta = theta.wrapping_add(flow.alpha_fixed());
        s = 0.0;
    }
    Ok(total.value())
}

/// Row of an anticoncentration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallSumRow {
    pub n: u64,
    pub threshold: f64,
    #[serde(flatten)]
    pub estimate: Frequency,
}

/// Frequency of ‖τ_N‖ < log^{1+ε} N for each N in the grid.
pub fn anticoncentration_scan(
    tau: &Cocycle,
    base: &BaseSystem,
    epsilon: f64,
    n_grid: &[u64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<SmallSumRow>> {
    tau.check_base(base)?;
    if samples < 1000 {
        return invalid("anticoncentration_scan needs at least 1000 samples");
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 2 {
        return invalid("N grid must be strictly increasing with N >= 2");
    }
    let thresholds: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln().powf(1.0 + epsilon)).collect();
    let hits = fold(
        workers,
        samples,
        || vec![0u64; n_grid.len()],
        |acc, i| {
            let mut rng = stream(seed, i);
            let x = base.sample(&mut rng);
            if tau.fast_sum(base, &x, 1).is_some() {
                for (g, (&n, th)) in n_grid.iter().zip(&thresholds).enumerate() {
                    let v = tau.fast_sum(base, &x, n).expect("available");
                    acc[g] += u64::from(norm(&v) < *th);
                }
            } else {
                let mut walk = CocycleWalk::new(tau, base, x);
                let mut buf = vec![0.0; tau.dim()];
                for (g, (&n, th)) in n_grid.iter().zip(&thresholds).enumerate() {
                    while walk.steps() < n {
                        walk.advance();
                    }
                    walk.sum_into(&mut buf);
                    acc[g] += u64::from(norm(&buf) < *th);
                }
            }
            Ok(())
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )?;
    Ok(n_grid
        .iter()
        .zip(thresholds)
        .zip(hits)
        .map(|((&n, threshold), h)| SmallSumRow { n, threshold, estimate: Frequency::new(h, samples) })
        .collect())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
