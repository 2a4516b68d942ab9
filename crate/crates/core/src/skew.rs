//! The skew product F(x, y) = (f x, G_{τ(x)} y), observables on X × Y and
//! occupation measures of cocycle orbits.

use crate::base::{BaseState, BaseSystem, CompensatedSum, SpecialFlow, SpecialFlowState};
use crate::cocycle::{continuous_cocycle_integral, Cocycle, FlowFunction};
use crate::error::{invalid, Error, Result};
use crate::fiber::{scenery_value, FiberAction, FiberFunction, FiberState, MAX_RANK};
use crate::rng::Rng;
use crate::trig::TrigPolynomial;
use crate::torus::TorusPoint;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Cocycle values are used as they are.
    #[default]
    None,
    /// Real values are rounded down before acting on a ℤ^d fiber.
    Floor,
}

#[derive(Debug, Clone)]
pub struct SkewSystem {
    pub base: BaseSystem,
    pub fiber: FiberAction,
    pub cocycle: Cocycle,
    pub rounding: Rounding,
}

#[derive(Debug, Clone)]
pub struct SkewState {
    pub x: BaseState,
    pub y: FiberState,
}

impl SkewSystem {
    pub fn new(base: BaseSystem, fiber: FiberAction, cocycle: Cocycle, rounding: Rounding) -> Result<Self> {
        cocycle.check_base(&base)?;
        if cocycle.dim() != fiber.rank() {
            return invalid(format!("cocycle dimension {} differs from fiber rank {}", cocycle.dim(), fiber.rank()));
        }
        if fiber.rank() > MAX_RANK {
            return invalid(format!("fiber rank above {MAX_RANK}"));
        }
        if fiber.is_discrete() && !cocycle.is_integer() && rounding == Rounding::None {
            return Err(Error::RoundingPolicyViolation);
        }
        Ok(Self { base, fiber, cocycle, rounding })
    }

    pub fn d(&self) -> usize {
        self.cocycle.dim()
    }

    /// A point of ζ = μ × ν.
    pub fn sample(&self, rng: &mut Rng) -> SkewState {
        let x = self.base.sample(rng);
        let y = self.fiber.sample(rng);
        SkewState { x, y }
    }

    /// τ(x) as applied to the fiber (after rounding).
    pub fn effective_tau(&self, x: &BaseState, out: &mut [f64]) {
        self.cocycle.eval(x, out);
        if self.rounding == Rounding::Floor && self.fiber.is_discrete() {
            out.iter_mut().for_each(|v| *v = v.floor());
        }
    }

    pub fn step(&self, state: &mut SkewState) -> Result<()> {
        let mut v = [0.0; MAX_RANK];
        let v = &mut v[..self.d()];
        self.effective_tau(&state.x, v);
        self.fiber.apply(v, &mut state.y)?;
        self.base.step(&mut state.x);
        Ok(())
    }
}

pub fn skew_step(system: &SkewSystem, state: &mut SkewState) -> Result<()> {
    system.step(state)
}

/// Profile φ ≥ 0 supported in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// exp(1 − 1/(1 − t²)).
    Smooth,
    /// (1 + cos πt)/2.
    Cosine,
    Indicator,
}

impl Profile {
    pub fn eval(self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Profile::Smooth => (1.0 - 1.0 / (1.0 - t * t)).exp(),
            Profile::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * t).cos()),
            Profile::Indicator => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaseFunction {
    Trig { poly: TrigPolynomial },
    /// Value read from the current symbol ω_0.
    Symbol { values: Vec<f64> },
}

impl BaseFunction {
    pub fn eval(&self, x: &BaseState) -> f64 {
        match (self, x) {
            (BaseFunction::Trig { poly }, BaseState::Torus(p)) => poly.eval(p),
            (BaseFunction::Symbol { values }, BaseState::Shift(s)) => values[s.current() as usize],
            _ => panic!("base function evaluated on the wrong base"),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            BaseFunction::Trig { poly } => poly.sup_bound(),
            BaseFunction::Symbol { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// A function of the fiber coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberObservable {
    /// Evaluated on a toral fiber, or on the base point of a suspension fiber.
    Torus(FiberFunction),
    /// Scenery value ξ at the current offset.
    Scenery,
}

impl FiberObservable {
    pub fn eval(&self, y: &FiberState) -> f64 {
        match (self, y) {
            (FiberObservable::Torus(f), FiberState::Torus(p)) => f.eval(p),
            (FiberObservable::Torus(f), FiberState::Suspension { y, .. }) => f.eval(y),
            (FiberObservable::Scenery, FiberState::Scenery { seed, offset }) => scenery_value(*seed, offset),
            _ => panic!("fiber observable evaluated on the wrong fiber"),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            FiberObservable::Torus(f) => f.mean(),
            FiberObservable::Scenery => 0.0,
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            FiberObservable::Torus(FiberFunction::Trig(p)) => p.sup_bound(),
            FiberObservable::Torus(FiberFunction::Ball { .. }) => 1.0,
            FiberObservable::Scenery => f64::INFINITY,
        }
    }
}

/// Observables H: X × Y → ℝ.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// φ(|x − x₀|/δ)·(D(y) − ν(D) when centred).
    ProductBump { center: TorusPoint, radius: f64, profile: Profile, fiber: FiberObservable, center_fiber: bool },
    /// A(x)·D(y).
    TensorTrig { base: TrigPolynomial, fiber: TrigPolynomial },
    BaseOnly(BaseFunction),
    FiberOnly(FiberObservable),
    /// B∘F − B.
    Coboundary(Box<Observable>),
    Constant(f64),
}

impl Observable {
    pub fn eval(&self, system: &SkewSystem, state: &SkewState) -> Result<f64> {
        Ok(match self {
            Observable::ProductBump { center, radius, profile, fiber, center_fiber } => {
                let p = state.x.torus().ok_or_else(|| Error::InvalidParameter("product bump needs a toral base".into()))?;
                let bump = profile.eval(p.distance(center) / radius);
                if bump == 0.0 {
                    return Ok(0.0);
                }
                let shift = if *center_fiber { fiber.mean() } else { 0.0 };
                bump * (fiber.eval(&state.y) - shift)
            }
            Observable::TensorTrig { base, fiber } => {
                let p = state.x.torus().ok_or_else(|| Error::InvalidParameter("tensor observable needs a toral base".into()))?;
                let y = match &state.y {
                    FiberState::Torus(y) | FiberState::Suspension { y, .. } => y,
                    FiberState::Scenery { .. } => return invalid("tensor observable needs a toral fiber"),
                };
                base.eval(p) * fiber.eval(y)
            }
            Observable::BaseOnly(f) => f.eval(&state.x),
            Observable::FiberOnly(f) => f.eval(&state.y),
            Observable::Coboundary(b) => {
                let mut next = state.clone();
                system.step(&mut next)?;
                b.eval(system, &next)? - b.eval(system, state)?
            }
            Observable::Constant(c) => *c,
        })
    }

    /// True when ∫H(x, y) dν(y) = 0 for every x by construction.
    pub fn is_fiber_mean_zero(&self) -> bool {
        match self {
            Observable::ProductBump { fiber, center_fiber, .. } => *center_fiber || fiber.mean() == 0.0,
            Observable::TensorTrig { fiber, .. } => fiber.mean() == 0.0,
            Observable::BaseOnly(_) => false,
            Observable::FiberOnly(f) => f.mean() == 0.0,
            Observable::Coboundary(_) => false,
            Observable::Constant(c) => *c == 0.0,
        }
    }

    /// Upper bound for ‖H‖_∞.
    pub fn sup(&self) -> f64 {
        match self {
            Observable::ProductBump { fiber, center_fiber, .. } => {
                fiber.sup() + if *center_fiber { fiber.mean().abs() } else { 0.0 }
            }
            Observable::TensorTrig { base, fiber } => base.sup_bound() * fiber.sup_bound(),
            Observable::BaseOnly(f) => f.sup(),
            Observable::FiberOnly(f) => f.sup(),
            Observable::Coboundary(b) => 2.0 * b.sup(),
            Observable::Constant(c) => c.abs(),
        }
    }
}

/// A = B∘F − B, whose Birkhoff sums telescope to B∘F^N − B.
pub fn make_coboundary(b: Observable) -> Observable {
    Observable::Coboundary(Box::new(b))
}

/// H_N = Σ_{n<N} H(F^n(x, y)).
pub fn birkhoff_sum(system: &SkewSystem, observable: &Observable, state: &SkewState, n: u64) -> Result<f64> {
    let mut s = state.clone();
    let mut acc = CompensatedSum::default();
    for _ in 0..n {
        acc.add(observable.eval(system, &s)?);
        system.step(&mut s)?;
    }
    Ok(acc.value())
}

type CellKey = [i64; MAX_RANK];

/// 𝔪_N = Σ_{n<N} N^{−1/2} δ_{τ_n(x)}.
#[derive(Debug, Clone)]
pub struct OccupationMeasure {
    pub d: usize,
    pub n: u64,
    /// Flattened atom locations, `d` coordinates per atom.
    pub atoms: Vec<f64>,
    cell: f64,
    grid: HashMap<CellKey, Vec<u32>>,
}

impl OccupationMeasure {
    pub fn from_atoms(d: usize, atoms: Vec<f64>, cell: f64) -> Result<Self> {
        if d == 0 || d > MAX_RANK || atoms.len() % d != 0 || atoms.is_empty() {
            return invalid("atoms must be a nonempty list of points in dimension 1..=4");
        }
        if !(cell > 0.0) {
            return invalid("grid cell must be positive");
        }
        let n = (atoms.len() / d) as u64;
        let mut out = Self { d, n, atoms, cell, grid: HashMap::new() };
        for i in 0..n as usize {
            let key = out.key(out.atom(i));
            out.grid.entry(key).or_default().push(i as u32);
        }
        Ok(out)
    }

    /// The same atoms indexed with a different grid cell.
    pub fn reindexed(&self, cell: f64) -> Result<Self> {
        Self::from_atoms(self.d, self.atoms.clone(), cell)
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.d..(i + 1) * self.d]
    }

    pub fn weight(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// ‖𝔪‖ = √N.
    pub fn total_mass(&self) -> f64 {
        let mut s = CompensatedSum::default();
        for _ in 0..self.n {
            s.add(self.weight());
        }
        s.value()
    }

    fn key(&self, t: &[f64]) -> CellKey {
        let mut k = [0; MAX_RANK];
        for (slot, x) in k.iter_mut().zip(t) {
            *slot = (x / self.cell).floor() as i64;
        }
        k
    }

    /// Number of atoms in the closed ball B(t, ρ).
    pub fn ball_count(&self, t: &[f64], rho: f64) -> u64 {
        let lo = self.key(&t.iter().map(|x| x - rho).collect::<Vec<_>>());
        let hi = self.key(&t.iter().map(|x| x + rho).collect::<Vec<_>>());
        let mut count = 0;
        let mut k = lo;
        loop {
            if let Some(list) = self.grid.get(&k) {
                count += list.iter().filter(|&&i| dist2(self.atom(i as usize), t) <= rho * rho).count() as u64;
            }
            let mut j = 0;
            loop {
                if j == self.d {
                    return count;
                }
                if k[j] < hi[j] {
                    k[j] += 1;
                    break;
                }
                k[j] = lo[j];
                j += 1;
            }
        }
    }

    pub fn ball_mass(&self, t: &[f64], rho: f64) -> f64 {
        self.ball_count(t, rho) as f64 * self.weight()
    }

    /// Distinct atom locations with their multiplicities, in first-visit order.
    pub fn locations(&self) -> Vec<(Vec<f64>, u64)> {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut out: Vec<(Vec<f64>, u64)> = Vec::new();
        for i in 0..self.n as usize {
            let a = self.atom(i);
            let key: Vec<u64> = a.iter().map(|x| x.to_bits()).collect();
            match seen.get(&key) {
                Some(&j) => out[j].1 += 1,
                None => {
                    seen.insert(key, out.len());
                    out.push((a.to_vec(), 1));
                }
            }
        }
        out
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Occupation measure of τ_0 = 0, τ_1, …, τ_{N−1} along the orbit of x.
pub fn occupation_measure(system: &SkewSystem, x: &BaseState, n: u64) -> Result<OccupationMeasure> {
    if n == 0 {
        return invalid("N must be positive");
    }
    let d = system.d();
    let mut atoms = Vec::with_capacity(n as usize * d);
    let mut sum = vec![CompensatedSum::default(); d];
    let mut v = vec![0.0; d];
    let mut state = x.clone();
    for _ in 0..n {
        atoms.extend(sum.iter().map(CompensatedSum::value));
        system.effective_tau(&state, &mut v);
        for (s, &val) in sum.iter_mut().zip(&v) {
            s.add(val);
        }
        system.base.step(&mut state);
    }
    OccupationMeasure::from_atoms(d, atoms, 1.0)
}

/// ∫ 𝔪^{r−1}(B(t, K ln‖𝔪‖)) d𝔪(t), grouped over distinct locations.
pub fn prbg_condition_b(measure: &OccupationMeasure, r: u32, k: f64) -> Result<f64> {
    if r < 3 {
        return invalid("r must be at least 3");
    }
    let rho = k * measure.total_mass().ln();
    let indexed = if rho > 0.0 { measure.reindexed(rho)? } else { measure.clone() };
    let w = measure.weight();
    let mut acc = CompensatedSum::default();
    for (t, mult) in measure.locations() {
        let mass = indexed.ball_count(&t, rho.max(0.0)) as f64 * w;
        acc.add(mult as f64 * w * mass.powi(r as i32 - 1));
    }
    Ok(acc.value())
}

/// Reference O(N²) evaluation of [`prbg_condition_b`].
pub fn prbg_condition_b_direct(measure: &OccupationMeasure, r: u32, k: f64) -> f64 {
    let rho = k * measure.total_mass().ln();
    let w = measure.weight();
    let n = measure.n as usize;
    (0..n)
        .map(|i| {
            let c = (0..n).filter(|&j| dist2(measure.atom(i), measure.atom(j)) <= rho * rho).count();
            w * (c as f64 * w).powi(r as i32 - 1)
        })
        .sum()
}

/// Special-flow base with a scalar continuous-time cocycle.
#[derive(Debug, Clone)]
pub struct ContinuousSkewSystem {
    pub flow: SpecialFlow,
    pub fiber: FiberAction,
    pub tau: FlowFunction,
    pub rounding: Rounding,
}

impl ContinuousSkewSystem {
    pub fn new(flow: SpecialFlow, fiber: FiberAction, tau: FlowFunction, rounding: Rounding) -> Result<Self> {
        if fiber.rank() != 1 {
            return invalid("continuous skew products need a rank-one fiber");
        }
        if fiber.is_discrete() && rounding == Rounding::None {
            return Err(Error::RoundingPolicyViolation);
        }
        Ok(Self { flow, fiber, tau, rounding })
    }
}

/// (h_T x, G_{τ_T(x)} y).
pub fn continuous_skew_evolve(
    system: &ContinuousSkewSystem,
    x: SpecialFlowState,
    y: &FiberState,
    t: f64,
) -> Result<(SpecialFlowState, FiberState)> {
    let integral = continuous_cocycle_integral(&system.tau, &system.flow, x, t)?;
    let (x1, _) = system.flow.evolve(x, t)?;
    let shift = if system.fiber.is_discrete() { integral.floor() } else { integral };
    let mut y1 = *y;
    system.fiber.apply(&[shift], &mut y1)?;
    Ok((x1, y1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{HyperbolicToralAutomorphism, MarkovShift, RoofFunction};
    use crate::cocycle::{IndicatorCocycle, SymbolCocycle};
    use crate::fiber::{SuspensionFlow, ToralZdAction};
    use crate::rng::stream;
    use crate::stats::ks::ks_two_sample;
    use proptest::prelude::*;

    fn cat_base() -> BaseSystem {
        BaseSystem::Automorphism(HyperbolicToralAutomorphism::cat())
    }

    fn cat_fiber() -> FiberAction {
        FiberAction::Toral(ToralZdAction::cat())
    }

    fn walk_system() -> SkewSystem {
        let mut steps = vec![vec![0, 0, 0]];
        for j in 0..3 {
            for s in [10, -10] {
                let mut v = vec![0; 3];
                v[j] = s;
                steps.push(v);
            }
        }
        SkewSystem::new(
            BaseSystem::Markov(MarkovShift::uniform(7).unwrap()),
            FiberAction::Toral(ToralZdAction::cartan_t4()),
            Cocycle::Symbol(SymbolCocycle::single(steps).unwrap()),
            Rounding::None,
        )
        .unwrap()
    }

    fn cos_y1() -> Observable {
        Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 0]))))
    }

    #[test]
    fn rounding_policy() {
        let smooth = crate::cocycle::SmoothCocycle::new(vec![TrigPolynomial::constant(1.5)], 2, false).unwrap();
        let r = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Smooth(smooth.clone()), Rounding::None);
        assert!(matches!(r, Err(Error::RoundingPolicyViolation)));
        let sys = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Smooth(smooth), Rounding::Floor).unwrap();
        let mut v = [0.0];
        sys.effective_tau(&BaseState::Torus(TorusPoint::zeros(2)), &mut v);
        assert_eq!(v, [1.0]);
    }

    #[test]
    fn zero_cocycle_leaves_fiber() {
        let sys = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Constant { value: vec![0.0] }, Rounding::None).unwrap();
        let mut s = sys.sample(&mut stream(1, 0));
        let y0 = s.y;
        let mut x = s.x.clone();
        for _ in 0..25 {
            sys.step(&mut s).unwrap();
            sys.base.step(&mut x);
        }
        assert_eq!(s.y, y0);
        assert_eq!(s.x.torus(), x.torus());
    }

    #[test]
    fn composition_matches_cocycle_sum() {
        let sys = walk_system();
        let mut s = sys.sample(&mut stream(2, 0));
        let start = s.clone();
        let tau = crate::cocycle::cocycle_sum(&sys.cocycle, &sys.base, &start.x, 50).unwrap();
        for _ in 0..50 {
            sys.step(&mut s).unwrap();
        }
        let v: Vec<i64> = tau.iter().map(|&t| t as i64).collect();
        let FiberAction::Toral(a) = &sys.fiber else { unreachable!() };
        assert_eq!(s.y.torus().unwrap(), &a.apply(&v, start.y.torus().unwrap()).unwrap());
    }

    #[test]
    fn fixed_base_point_orbit() {
        let tau = IndicatorCocycle::new(vec![1], vec![1], vec![0.0, 0.0], vec![0.1, 0.1]).unwrap();
        let sys = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Indicator(tau), Rounding::None).unwrap();
        let y = TorusPoint::from_f64(&[0.2, 0.7]);
        let mut s = SkewState { x: BaseState::Torus(TorusPoint::zeros(2)), y: FiberState::Torus(y) };
        let FiberAction::Toral(a) = &sys.fiber else { unreachable!() };
        for n in 1..=20 {
            sys.step(&mut s).unwrap();
            let mut expected = y;
            for _ in 0..n {
                expected = a.apply(&[2], &expected).unwrap();
            }
            assert_eq!(s.y.torus().unwrap(), &expected);
        }
    }

    #[test]
    fn birkhoff_examples() {
        let sys = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Constant { value: vec![1.0] }, Rounding::None).unwrap();
        let s = sys.sample(&mut stream(3, 0));
        assert_eq!(birkhoff_sum(&sys, &Observable::Constant(1.0), &s, 777).unwrap(), 777.0);
        let avg = birkhoff_sum(&sys, &cos_y1(), &s, 100_000).unwrap() / 1e5;
        assert!(avg.abs() < 0.02, "{avg}");
    }

    #[test]
    fn coboundary_telescopes() {
        let sys = walk_system();
        let b = Observable::FiberOnly(FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial::cosine(vec![1, 1, 0, 0]))));
        let a = make_coboundary(b.clone());
        let mut rng = stream(4, 0);
        for _ in 0..100 {
            let s = sys.sample(&mut rng);
            for n in [1u64, 10, 100, 1000] {
                let an = birkhoff_sum(&sys, &a, &s, n).unwrap();
                assert!(an.abs() <= 2.0 * b.sup() + 1e-9);
            }
            let one = birkhoff_sum(&sys, &a, &s, 1).unwrap();
            assert_eq!(one, a.eval(&sys, &s).unwrap());
        }
        let constant = make_coboundary(Observable::Constant(3.0));
        let s = sys.sample(&mut rng);
        assert_eq!(constant.eval(&sys, &s).unwrap(), 0.0);
    }

    #[test]
    fn measure_preservation() {
        let sys = SkewSystem::new(
            cat_base(),
            cat_fiber(),
            Cocycle::Indicator(IndicatorCocycle::new(vec![1], vec![1], vec![0.0, 0.0], vec![0.5, 0.5]).unwrap()),
            Rounding::None,
        )
        .unwrap();
        let mut rng = stream(5, 0);
        let mut before = vec![Vec::new(); 4];
        let mut after = vec![Vec::new(); 4];
        for _ in 0..100_000 {
            let mut s = sys.sample(&mut rng);
            let coords = |s: &SkewState| {
                let (x, y) = (s.x.torus().unwrap(), s.y.torus().unwrap());
                [x.coord(0), x.coord(1), y.coord(0), y.coord(1)]
            };
            let c0 = coords(&s);
            sys.step(&mut s).unwrap();
            let c1 = coords(&s);
            for i in 0..4 {
                before[i].push(c0[i]);
                after[i].push(c1[i]);
            }
        }
        for i in 0..4 {
            assert!(ks_two_sample(&mut before[i], &mut after[i]) <= 0.02);
        }
    }

    #[test]
    fn fiber_mean_zero_bump() {
        let sys = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Constant { value: vec![1.0] }, Rounding::None).unwrap();
        let h = Observable::ProductBump {
            center: TorusPoint::from_f64(&[0.5, 0.5]),
            radius: 0.4,
            profile: Profile::Smooth,
            fiber: FiberObservable::Torus(FiberFunction::Ball { center: vec![0.3, 0.3], radius: 0.25 }),
            center_fiber: true,
        };
        assert!(h.is_fiber_mean_zero());
        let mut rng = stream(6, 0);
        for _ in 0..20 {
            let x = BaseState::Torus(TorusPoint::from_f64(&[0.4 + 0.2 * rand::Rng::random::<f64>(&mut rng), 0.5]));
            let mut m = crate::parallel::Moments::new(1);
            for _ in 0..20_000 {
                let y = sys.fiber.sample(&mut rng);
                m.push(&[h.eval(&sys, &SkewState { x: x.clone(), y }).unwrap()]);
            }
            assert!(m.mean(0).abs() <= 3.0 * m.std_error(0) + 1e-12);
        }
    }

    #[test]
    fn occupation_basics() {
        let zero = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Constant { value: vec![0.0] }, Rounding::None).unwrap();
        let x = zero.base.sample(&mut stream(7, 0));
        let m = occupation_measure(&zero, &x, 400).unwrap();
        assert!((m.total_mass() - 20.0).abs() < 1e-9);
        assert_eq!(m.locations(), vec![(vec![0.0], 400)]);
        assert_eq!(m.ball_count(&[0.0], 0.0), 400);
        assert!((prbg_condition_b(&m, 3, 1.0).unwrap() - 400f64.powf(1.5)).abs() < 1e-6);

        let unit = SkewSystem::new(cat_base(), cat_fiber(), Cocycle::Constant { value: vec![100.0] }, Rounding::None).unwrap();
        let m = occupation_measure(&unit, &x, 256).unwrap();
        assert_eq!(m.atom(3), &[300.0]);
        let expected = 256f64.powf(1.0 - 4.0 / 2.0);
        assert!((prbg_condition_b(&m, 4, 1.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn grid_matches_direct() {
        let sys = walk_system();
        let mut rng = stream(8, 0);
        for n in [64u64, 300, 1024] {
            let x = sys.base.sample(&mut rng);
            let m = occupation_measure(&sys, &x, n).unwrap();
            let fast = prbg_condition_b(&m, 3, 1.0).unwrap();
            let slow = prbg_condition_b_direct(&m, 3, 1.0);
            assert!((fast - slow).abs() <= 1e-12 * slow);
            for i in (0..n as usize).step_by(37) {
                let t = m.atom(i).to_vec();
                for rho in [0.0, 5.0, 10.0, 17.3] {
                    let brute = (0..n as usize).filter(|&j| dist2(m.atom(j), &t) <= rho * rho).count() as u64;
                    assert_eq!(m.ball_count(&t, rho), brute);
                }
            }
        }
    }

    #[test]
    fn continuous_evolution() {
        let flow = SpecialFlow::new(RoofFunction::power(1.0, 1.0, 1.0 / 3.0).unwrap(), golden_alpha());
        let sys = ContinuousSkewSystem::new(
            flow.clone(),
            FiberAction::Suspension(SuspensionFlow::cat()),
            FlowFunction::Constant { value: 1.0 },
            Rounding::None,
        )
        .unwrap();
        let mut rng = stream(9, 0);
        let x = flow.sample(&mut rng);
        let y = sys.fiber.sample(&mut rng);
        let (x0, y0) = continuous_skew_evolve(&sys, x, &y, 0.0).unwrap();
        assert_eq!((x0, y0), (x, y));
        let (_, y1) = continuous_skew_evolve(&sys, x, &y, 3.5).unwrap();
        let mut direct = y;
        sys.fiber.apply(&[3.5], &mut direct).unwrap();
        assert_eq!(y1, direct);
        assert!(ContinuousSkewSystem::new(flow, cat_fiber(), FlowFunction::Constant { value: 1.0 }, Rounding::None).is_err());
    }

    fn golden_alpha() -> f64 {
        crate::arithmetic::DiophantineVector::golden().alpha[0]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn flow_semigroup(seed in any::<u64>(), t1 in 0.0f64..20.0, t2 in 0.0f64..20.0) {
            let flow = SpecialFlow::new(RoofFunction::power(1.0, 1.0, 1.0 / 3.0).unwrap(), golden_alpha());
            let tau = FlowFunction::Theta { g: TrigPolynomial::cosine(vec![1]).plus_constant(0.5) };
            let sys = ContinuousSkewSystem::new(flow.clone(), FiberAction::Suspension(SuspensionFlow::cat()), tau, Rounding::None).unwrap();
            let mut rng = stream(seed, 0);
            let x = flow.sample(&mut rng);
            let y = sys.fiber.sample(&mut rng);
            let (xa, ya) = continuous_skew_evolve(&sys, x, &y, t1 + t2).unwrap();
            let (xm, ym) = continuous_skew_evolve(&sys, x, &y, t1).unwrap();
            let (xb, yb) = continuous_skew_evolve(&sys, xm, &ym, t2).unwrap();
            prop_assert_eq!(xa.theta, xb.theta);
            prop_assert!((xa.s - xb.s).abs() < 1e-6);
            match (ya, yb) {
                (FiberState::Suspension { y: p, u: a }, FiberState::Suspension { y: q, u: b }) => {
                    prop_assert!(p.distance(&q) < 1e-6);
                    prop_assert!((a - b).abs() < 1e-6);
                }
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn composition_law(seed in any::<u64>(), n in 0u64..60, m in 0u64..60) {
            let sys = walk_system();
            let s0 = sys.sample(&mut stream(seed, 0));
            let mut a = s0.clone();
            for _ in 0..n + m { sys.step(&mut a).unwrap(); }
            let mut b = s0;
            for _ in 0..n { sys.step(&mut b).unwrap(); }
            for _ in 0..m { sys.step(&mut b).unwrap(); }
            prop_assert_eq!(a.y, b.y);
            prop_assert_eq!(a.x.shift().unwrap().history(), b.x.shift().unwrap().history());
        }
    }
}
