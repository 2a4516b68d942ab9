//! Experiment configuration files.
//!
//! A configuration names the experiment, composes a system from `[base]`,
//! `[fiber]`, `[cocycle]` and `[observable]` sections, and carries the
//! experiment parameters under `[experiment]` (tagged by `kind`) together
//! with optional `[[assert]]` thresholds. Unknown keys are rejected.

use crate::error::CliError;
use kalikow_core::cocycle::FlowFunction;
use kalikow_core::skew::{Profile, Rounding};
use kalikow_core::stats::clt::Normalization;
use kalikow_core::trig::TrigPolynomial;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Worker threads. Not part of the resolved configuration.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    /// Output root. Not part of the resolved configuration.
    #[serde(default, skip_serializing)]
    pub outdir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableConfig>,
    /// How real cocycle values act on a ℤ^d fiber.
    #[serde(default)]
    pub rounding: Rounding,
    pub experiment: ExperimentSpec,
    #[serde(default, rename = "assert", skip_serializing_if = "Vec::is_empty")]
    pub asserts: Vec<AssertSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseConfig {
    Rotation {
        alpha: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
        d_const: Option<f64>,
    },
    /// Hyperbolic toral automorphism; the cat map when no matrix is given.
    #[serde(rename = "cat", alias = "automorphism")]
    Automorphism {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<i64>>>,
    },
    /// Uniform full shift on `alphabet` symbols, a Bernoulli shift with
    /// `weights`, or a Markov shift given by `transition` (and `allowed`).
    Markov {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transition: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        allowed: Option<Vec<Vec<bool>>>,
    },
    SpecialFlow { alpha: f64, roof: RoofConfig },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoofConfig {
    LogSymmetric { a: f64 },
    LogAsymmetric { a: f64, b: f64 },
    Power { p: f64, q: f64, gamma: f64 },
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberConfig {
    /// Built-in action (`cat`, `cartan_t3`, `cartan_t4`) or explicit
    /// commuting generator matrices.
    #[serde(rename = "toral_zd", alias = "toral")]
    Toral {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preset: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<Vec<Vec<i64>>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<i64>,
    },
    Scenery { d: usize },
    Suspension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleConfig {
    /// τ(ω) = values[ω_0], or a lookup `table` over windows of `window` symbols.
    Symbol {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<Vec<i64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<Vec<i64>>>,
    },
    /// Steps ±scale·e_j, one symbol each, plus a zero step when `lazy`.
    SimpleWalk {
        d: usize,
        #[serde(default = "one")]
        scale: i64,
        #[serde(default)]
        lazy: bool,
    },
    /// Fourier cocycle over the rotation in `[base]`; coefficients seeded
    /// from `coefficient_seed`.
    Fourier {
        r: f64,
        d: usize,
        #[serde(rename = "L_max", alias = "l_max")]
        l_max: usize,
        #[serde(rename = "seed", alias = "coefficient_seed")]
        coefficient_seed: u64,
    },
    /// Trigonometric polynomial components over a toral base.
    #[serde(rename = "trig", alias = "smooth")]
    Smooth {
        components: Vec<TrigPolynomial>,
        #[serde(default)]
        positive: bool,
    },
    Indicator { base: Vec<i64>, jump: Vec<i64>, lower: Vec<f64>, upper: Vec<f64> },
    Constant { value: Vec<f64> },
}

fn one() -> i64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberFunctionConfig {
    Trig {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        terms: Vec<kalikow_core::trig::TrigTerm>,
    },
    Ball { center: Vec<f64>, radius: f64 },
    Scenery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    /// φ(|x − x₀|/δ)·(D(y) − ν(D)).
    ProductBump {
        center: Vec<f64>,
        radius: f64,
        profile: Profile,
        fiber: FiberFunctionConfig,
        #[serde(default = "yes")]
        center_fiber: bool,
    },
    TensorTrig { base: TrigPolynomial, fiber: TrigPolynomial },
    BaseTrig { poly: TrigPolynomial },
    /// Function of the current symbol ω_0.
    BaseSymbol { values: Vec<f64> },
    Fiber { function: FiberFunctionConfig },
    Coboundary { of: Box<ObservableConfig> },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenKuboSpec {
    #[serde(rename = "L")]
    pub truncation: u64,
    #[serde(rename = "M")]
    pub samples: u64,
    pub window: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    Cf { alpha: f64, depth: usize },
    Ostrowski { alpha: f64, depth: usize, n: Vec<u64> },
    Thetamin { theta: f64, alpha: f64, n: Vec<u64> },
    Minkowski { alphas: Vec<Vec<f64>>, n: Vec<u64> },
    /// Randomised Ostrowski reconstructions and convergent checks.
    Reconstruct { alphas: u64, reconstructions: u64, depth: usize },
    /// ‖φ_N‖₂ for φ with random frequencies and |a_k| = |k|^{−r}.
    Sobolev { alpha: Vec<f64>, r: f64, frequencies: usize, radius: i64, n: Vec<u64> },
    Orbit {
        #[serde(rename = "N")]
        n: u64,
    },
    Occupation {
        #[serde(rename = "N")]
        n: u64,
    },
    Prbg {
        n: Vec<u64>,
        r: u32,
        #[serde(rename = "K")]
        k: f64,
        base_points: u64,
    },
    Clt {
        #[serde(rename = "N")]
        n: u64,
        #[serde(rename = "M")]
        samples: u64,
        #[serde(default)]
        normalization: Normalization,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        green_kubo: Option<GreenKuboSpec>,
    },
    Gk {
        #[serde(rename = "L")]
        truncation: u64,
        #[serde(rename = "M")]
        samples: u64,
        window: u64,
    },
    Decay {
        lags: Vec<u64>,
        #[serde(rename = "M")]
        samples: u64,
        window: u64,
    },
    Ld {
        epsilon: f64,
        n: Vec<u64>,
        #[serde(rename = "M")]
        samples: u64,
    },
    Maxineq {
        m: u64,
        #[serde(rename = "L")]
        l: Vec<f64>,
        #[serde(rename = "M")]
        samples: u64,
    },
    Anticonc {
        epsilon: f64,
        n: Vec<u64>,
        #[serde(rename = "M")]
        samples: u64,
    },
    Cones {
        horizon: u64,
        threshold: f64,
        #[serde(rename = "M")]
        samples: u64,
    },
    /// Coboundary test of `[observable]`, optionally against a contrast observable.
    Cobtest {
        n: Vec<u64>,
        #[serde(rename = "M")]
        samples: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contrast: Option<ObservableConfig>,
    },
    Sfdev {
        #[serde(rename = "T")]
        t: Vec<f64>,
        #[serde(rename = "M")]
        samples: u64,
        mean_time: f64,
        hbar: FlowFunction,
    },
    Dk { n_max: usize, theta_samples: u64 },
    Close {
        epsilon: Vec<f64>,
        n: Vec<u64>,
        pairs: u64,
        perturbation: f64,
    },
    Dset {
        epsilon: f64,
        n: Vec<u64>,
        #[serde(rename = "M")]
        samples: u64,
        candidates: u64,
        y_prime: Vec<f64>,
    },
    Omega1 {
        n1: u64,
        #[serde(default = "omega1_exponent")]
        exponent: f64,
        #[serde(rename = "M")]
        samples: u64,
    },
    Goodpairs {
        k: u32,
        n_prev: u64,
        grid: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
        #[serde(rename = "M")]
        samples: u64,
    },
}

fn omega1_exponent() -> f64 {
    kalikow_core::probe::OMEGA1_EXPONENT
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Cf { .. } => "cf",
            ExperimentSpec::Ostrowski { .. } => "ostrowski",
            ExperimentSpec::Thetamin { .. } => "thetamin",
            ExperimentSpec::Minkowski { .. } => "minkowski",
            ExperimentSpec::Reconstruct { .. } => "reconstruct",
            ExperimentSpec::Sobolev { .. } => "sobolev",
            ExperimentSpec::Orbit { .. } => "orbit",
            ExperimentSpec::Occupation { .. } => "occupation",
            ExperimentSpec::Prbg { .. } => "prbg",
            ExperimentSpec::Clt { .. } => "clt",
            ExperimentSpec::Gk { .. } => "gk",
            ExperimentSpec::Decay { .. } => "decay",
            ExperimentSpec::Ld { .. } => "ld",
            ExperimentSpec::Maxineq { .. } => "maxineq",
            ExperimentSpec::Anticonc { .. } => "anticonc",
            ExperimentSpec::Cones { .. } => "cones",
            ExperimentSpec::Cobtest { .. } => "cobtest",
            ExperimentSpec::Sfdev { .. } => "sfdev",
            ExperimentSpec::Dk { .. } => "dk",
            ExperimentSpec::Close { .. } => "close",
            ExperimentSpec::Dset { .. } => "dset",
            ExperimentSpec::Omega1 { .. } => "omega1",
            ExperimentSpec::Goodpairs { .. } => "goodpairs",
        }
    }

    /// The CLI subcommand that owns this experiment kind.
    pub fn command(&self) -> &'static str {
        match self.kind() {
            "cf" | "ostrowski" | "thetamin" | "minkowski" | "reconstruct" | "sobolev" => "arith",
            "orbit" | "occupation" | "prbg" => "skew",
            "close" | "dset" | "omega1" | "goodpairs" => "probe",
            other => other,
        }
    }

    /// Sections of the configuration this experiment reads.
    pub fn sections(&self) -> &'static [&'static str] {
        match self.kind() {
            "cf" | "ostrowski" | "thetamin" | "minkowski" | "reconstruct" | "sobolev" => &[],
            "orbit" | "occupation" | "prbg" | "close" | "dset" => &["base", "fiber", "cocycle"],
            "clt" | "gk" | "decay" | "cobtest" => &["base", "fiber", "cocycle", "observable"],
            "ld" | "maxineq" | "anticonc" | "cones" | "omega1" | "goodpairs" => &["base", "cocycle"],
            "sfdev" | "dk" => &["base"],
            _ => unreachable!("every kind is listed"),
        }
    }
}

/// Comparison applied to every value selected by an assertion path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertSpec {
    /// Slash-separated path into the result; `*` matches every array element.
    pub metric: String,
    pub op: AssertOp,
    pub value: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Parse TOML, or JSON when the path ends in `.json`.
pub fn parse_config(text: &str, json: bool) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = if json {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?
    };
    cfg.check_sections()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_config(&text, json)
}

impl ExperimentConfig {
    fn check_sections(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(CliError::ConfigInvalid(format!("invalid experiment name {:?}", self.name)));
        }
        let present = |s: &str| match s {
            "base" => self.base.is_some(),
            "fiber" => self.fiber.is_some(),
            "cocycle" => self.cocycle.is_some(),
            "observable" => self.observable.is_some(),
            _ => false,
        };
        for s in self.experiment.sections() {
            if !present(s) {
                return Err(CliError::ConfigInvalid(format!(
                    "experiment kind `{}` requires a [{s}] section",
                    self.experiment.kind()
                )));
            }
        }
        Ok(())
    }

    /// Apply the seed precedence flag > environment > file.
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
        let env_seed = match env {
            Some(s) => Some(
                s.trim().parse::<u64>().map_err(|_| CliError::ConfigInvalid(format!("KALIKOW_SEED={s:?} is not a u64")))?,
            ),
            None => None,
        };
        let seed = flag
            .or(env_seed)
            .or(self.seed)
            .ok_or_else(|| CliError::ConfigInvalid("no seed in the config, KALIKOW_SEED or --seed".into()))?;
        self.seed = Some(seed);
        Ok(seed)
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
