//! Turns configuration sections into core objects.

use crate::config::{BaseConfig, CocycleConfig, ExperimentConfig, FiberConfig, FiberFunctionConfig, ObservableConfig, RoofConfig};
use crate::error::CliError;
use kalikow_core::arithmetic::DiophantineVector;
use kalikow_core::base::{
    BaseSystem, HyperbolicToralAutomorphism, MarkovShift, RoofFunction, RoofKind, SpecialFlow, TorusTranslation,
};
use kalikow_core::cocycle::{build_dioph_cocycle, Cocycle, IndicatorCocycle, SmoothCocycle, SymbolCocycle};
use kalikow_core::fiber::{FiberAction, FiberFunction, SceneryFiber, SuspensionFlow, ToralZdAction, DEFAULT_POWER_CAP};
use kalikow_core::skew::{BaseFunction, FiberObservable, Observable, SkewSystem};
use kalikow_core::torus::{IntMatrix, TorusPoint};
use kalikow_core::trig::TrigPolynomial;

fn bad<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::ConfigInvalid(msg.into()))
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::ConfigInvalid(format!("missing [{name}] section")))
}

pub fn roof(cfg: &RoofConfig) -> Result<RoofFunction, CliError> {
    let kind = match *cfg {
        RoofConfig::LogSymmetric { a } => RoofKind::LogSymmetric { a },
        RoofConfig::LogAsymmetric { a, b } => RoofKind::LogAsymmetric { a, b },
        RoofConfig::Power { p, q, gamma } => RoofKind::Power { p, q, gamma },
        RoofConfig::Constant => RoofKind::Constant,
    };
    Ok(RoofFunction::new(kind)?)
}

pub fn diophantine(alpha: &[f64], kappa: Option<f64>, d_const: Option<f64>) -> Result<DiophantineVector, CliError> {
    let mut v = DiophantineVector::new(alpha.to_vec())?;
    if alpha.iter().any(|a| !(0.0..1.0).contains(a)) {
        return bad("rotation components must lie in [0, 1)");
    }
    v.kappa = kappa;
    v.d_const = d_const;
    Ok(v)
}

pub fn base(cfg: &ExperimentConfig) -> Result<BaseSystem, CliError> {
    Ok(match section(&cfg.base, "base")? {
        BaseConfig::Rotation { alpha, kappa, d_const } => {
            BaseSystem::Rotation(TorusTranslation::new(diophantine(alpha, *kappa, *d_const)?))
        }
        BaseConfig::Automorphism { matrix } => BaseSystem::Automorphism(match matrix {
            Some(rows) => HyperbolicToralAutomorphism::new(IntMatrix::from_rows(rows)?)?,
            None => HyperbolicToralAutomorphism::cat(),
        }),
        BaseConfig::Markov { alphabet, weights, transition, allowed } => {
            BaseSystem::Markov(match (alphabet, weights, transition) {
                (Some(k), None, None) => MarkovShift::uniform(*k)?,
                (None, Some(w), None) => MarkovShift::bernoulli(w)?,
                (None, None, Some(p)) => {
                    let allowed = allowed
                        .clone()
                        .unwrap_or_else(|| p.iter().map(|row| row.iter().map(|&x| x > 0.0).collect()).collect());
                    MarkovShift::new(allowed, p.clone())?
                }
                _ => return bad("[base] markov needs exactly one of alphabet, weights or transition"),
            })
        }
        BaseConfig::SpecialFlow { .. } => return bad("a special-flow base cannot drive a discrete skew product"),
    })
}

pub fn special_flow(cfg: &ExperimentConfig) -> Result<SpecialFlow, CliError> {
    match section(&cfg.base, "base")? {
        BaseConfig::SpecialFlow { alpha, roof: r } => {
            if !(0.0 < *alpha && *alpha < 1.0) {
                return bad("special-flow alpha must lie in (0, 1)");
            }
            Ok(SpecialFlow::new(roof(r)?, *alpha))
        }
        _ => bad("this experiment needs a special_flow [base]"),
    }
}

pub fn toral_action(preset: Option<&str>, generators: Option<&Vec<Vec<Vec<i64>>>>, cap: Option<i64>) -> Result<ToralZdAction, CliError> {
    match (preset, generators) {
        (Some(_), Some(_)) => bad("[fiber] takes either a preset or generators"),
        (Some("cat"), None) => Ok(ToralZdAction::cat()),
        (Some("cartan_t3"), None) => Ok(ToralZdAction::cartan_t3()),
        (Some("cartan_t4"), None) => Ok(ToralZdAction::cartan_t4()),
        (Some(other), None) => bad(format!("unknown toral preset {other:?}")),
        (None, Some(gens)) => {
            let mats = gens.iter().map(|g| IntMatrix::from_rows(g)).collect::<Result<Vec<_>, _>>()?;
            Ok(ToralZdAction::new(mats, cap.unwrap_or(DEFAULT_POWER_CAP))?)
        }
        (None, None) => bad("[fiber] toral needs a preset or generators"),
    }
}

pub fn fiber(cfg: &ExperimentConfig) -> Result<FiberAction, CliError> {
    Ok(match section(&cfg.fiber, "fiber")? {
        FiberConfig::Toral { preset, generators, cap } => {
            FiberAction::Toral(toral_action(preset.as_deref(), generators.as_ref(), *cap)?)
        }
        FiberConfig::Scenery { d } => {
            if !(1..=4).contains(d) {
                return bad("scenery dimension must lie in 1..=4");
            }
            FiberAction::Scenery(SceneryFiber { d: *d })
        }
        FiberConfig::Suspension => FiberAction::Suspension(SuspensionFlow::cat()),
    })
}

pub fn cocycle(cfg: &ExperimentConfig, base: &BaseSystem) -> Result<Cocycle, CliError> {
    let tau = match section(&cfg.cocycle, "cocycle")? {
        CocycleConfig::Symbol { values, window, table } => Cocycle::Symbol(match (values, table) {
            (Some(v), None) if window.is_none_or(|w| w == 1) => SymbolCocycle::single(v.clone())?,
            (None, Some(t)) => {
                let w = window.ok_or_else(|| CliError::ConfigInvalid("symbol table needs a window".into()))?;
                let k = match base {
                    BaseSystem::Markov(m) => m.alphabet(),
                    _ => return bad("symbol cocycles need a markov base"),
                };
                SymbolCocycle::new(k, w, t.clone())?
            }
            _ => return bad("symbol cocycle needs either values or window + table"),
        }),
        CocycleConfig::SimpleWalk { d, scale, lazy } => {
            let mut values = Vec::new();
            if *lazy {
                values.push(vec![0; *d]);
            }
            for j in 0..*d {
                for sign in [1, -1] {
                    let mut v = vec![0; *d];
                    v[j] = sign * scale;
                    values.push(v);
                }
            }
            Cocycle::Symbol(SymbolCocycle::single(values)?)
        }
        CocycleConfig::Fourier { r, d, l_max, coefficient_seed } => {
            let alpha = match base {
                BaseSystem::Rotation(t) => &t.alpha,
                _ => return bad("fourier cocycles need a rotation base"),
            };
            Cocycle::Fourier(build_dioph_cocycle(alpha, *r, *d, *l_max, *coefficient_seed)?)
        }
        CocycleConfig::Smooth { components, positive } => {
            let dim = base.torus_dim().ok_or_else(|| CliError::ConfigInvalid("smooth cocycles need a toral base".into()))?;
            Cocycle::Smooth(SmoothCocycle::new(components.clone(), dim, *positive)?)
        }
        CocycleConfig::Indicator { base, jump, lower, upper } => {
            Cocycle::Indicator(IndicatorCocycle::new(base.clone(), jump.clone(), lower.clone(), upper.clone())?)
        }
        CocycleConfig::Constant { value } => Cocycle::Constant { value: value.clone() },
    };
    tau.check_base(base)?;
    if let (Cocycle::Symbol(s), BaseSystem::Markov(m)) = (&tau, base) {
        if s.alphabet != m.alphabet() {
            return bad(format!("cocycle has {} symbols but the shift has {}", s.alphabet, m.alphabet()));
        }
    }
    Ok(tau)
}

fn fiber_function(cfg: &FiberFunctionConfig) -> Result<FiberObservable, CliError> {
    Ok(match cfg {
        FiberFunctionConfig::Trig { constant, terms } => {
            FiberObservable::Torus(FiberFunction::Trig(TrigPolynomial { constant: *constant, terms: terms.clone() }))
        }
        FiberFunctionConfig::Ball { center, radius } => {
            if !(0.0 < *radius && *radius < 0.5) {
                return bad("ball radius must lie in (0, 1/2)");
            }
            FiberObservable::Torus(FiberFunction::Ball { center: center.clone(), radius: *radius })
        }
        FiberFunctionConfig::Scenery => FiberObservable::Scenery,
    })
}

pub fn observable(cfg: &ObservableConfig) -> Result<Observable, CliError> {
    Ok(match cfg {
        ObservableConfig::ProductBump { center, radius, profile, fiber, center_fiber } => {
            if !(*radius > 0.0) {
                return bad("bump radius must be positive");
            }
            Observable::ProductBump {
                center: TorusPoint::from_f64(center),
                radius: *radius,
                profile: *profile,
                fiber: fiber_function(fiber)?,
                center_fiber: *center_fiber,
            }
        }
        ObservableConfig::TensorTrig { base, fiber } => Observable::TensorTrig { base: base.clone(), fiber: fiber.clone() },
        ObservableConfig::BaseTrig { poly } => Observable::BaseOnly(BaseFunction::Trig { poly: poly.clone() }),
        ObservableConfig::BaseSymbol { values } => Observable::BaseOnly(BaseFunction::Symbol { values: values.clone() }),
        ObservableConfig::Fiber { function } => Observable::FiberOnly(fiber_function(function)?),
        ObservableConfig::Coboundary { of } => Observable::Coboundary(Box::new(observable(of)?)),
        ObservableConfig::Constant { value } => Observable::Constant(*value),
    })
}

pub fn skew_system(cfg: &ExperimentConfig) -> Result<SkewSystem, CliError> {
    let b = base(cfg)?;
    let f = fiber(cfg)?;
    let tau = cocycle(cfg, &b)?;
    Ok(SkewSystem::new(b, f, tau, cfg.rounding)?)
}

/// Checks that an observable can be evaluated on the system's spaces.
pub fn check_observable(sys: &SkewSystem, obs: &Observable) -> Result<(), CliError> {
    let toral_base = sys.base.torus_dim();
    match obs {
        Observable::ProductBump { center, fiber, .. } => {
            if toral_base != Some(center.dim()) {
                return bad("product bump center must match a toral base");
            }
            check_fiber(sys, fiber)
        }
        Observable::TensorTrig { .. } => {
            if toral_base.is_none() || matches!(sys.fiber, FiberAction::Scenery(_)) {
                return bad("tensor observables need a toral base and a toral fiber");
            }
            Ok(())
        }
        Observable::BaseOnly(BaseFunction::Trig { .. }) if toral_base.is_none() => bad("base trig observable needs a toral base"),
        Observable::BaseOnly(BaseFunction::Symbol { values }) => match &sys.base {
            BaseSystem::Markov(m) if m.alphabet() == values.len() => Ok(()),
            _ => bad("base symbol observable needs one value per shift symbol"),
        },
        Observable::FiberOnly(f) => check_fiber(sys, f),
        Observable::Coboundary(b) => check_observable(sys, b),
        _ => Ok(()),
    }
}

fn check_fiber(sys: &SkewSystem, f: &FiberObservable) -> Result<(), CliError> {
    match (f, &sys.fiber) {
        (FiberObservable::Scenery, FiberAction::Scenery(_)) => Ok(()),
        (FiberObservable::Torus(_), FiberAction::Toral(_) | FiberAction::Suspension(_)) => Ok(()),
        _ => bad("fiber observable does not match the fiber"),
    }
}
