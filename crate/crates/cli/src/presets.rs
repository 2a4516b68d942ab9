//! Bundled experiment configurations, one per acceptance criterion.

use crate::config::{parse_config, ExperimentConfig};
use crate::error::CliError;

const PRESETS: &[(&str, &str)] = &[
    ("ostrowski_exact", include_str!("../presets/ostrowski_exact.toml")),
    ("minkowski_bounds", include_str!("../presets/minkowski_bounds.toml")),
    ("dioph_d1", include_str!("../presets/dioph_d1.toml")),
    ("dioph_d2", include_str!("../presets/dioph_d2.toml")),
    ("anosov_clt", include_str!("../presets/anosov_clt.toml")),
    ("zero_mean_clt_d3", include_str!("../presets/zero_mean_clt_d3.toml")),
    ("decay_d3", include_str!("../presets/decay_d3.toml")),
    ("prbg_d3", include_str!("../presets/prbg_d3.toml")),
    ("coboundary_dichotomy", include_str!("../presets/coboundary_dichotomy.toml")),
    ("special_flow_deviation", include_str!("../presets/special_flow_deviation.toml")),
    ("denjoy_koksma", include_str!("../presets/denjoy_koksma.toml")),
    ("maximal_inequality", include_str!("../presets/maximal_inequality.toml")),
    ("cone_visits", include_str!("../presets/cone_visits.toml")),
    ("determinism", include_str!("../presets/determinism.toml")),
    ("probe_dset", include_str!("../presets/probe_dset.toml")),
];

/// Preset names in acceptance order.
pub fn list_presets() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// TOML source of a preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let text = preset_source(name).ok_or_else(|| CliError::ConfigInvalid(format!("unknown preset {name:?}")))?;
    parse_config(text, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_is_stable_and_complete() {
        let names = list_presets();
        assert_eq!(names.len(), 15);
        assert!(names.contains(&"anosov_clt"));
        assert!(names.contains(&"dioph_d2"));
        assert_eq!(names, list_presets());
    }

    #[test]
    fn every_preset_parses_and_is_named_after_its_file() {
        for name in list_presets() {
            let cfg = load_preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
            assert!(cfg.seed.is_some(), "{name} ships a seed");
            assert!(!cfg.asserts.is_empty(), "{name} ships thresholds");
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(load_preset("nope"), Err(CliError::ConfigInvalid(_))));
    }
}
