//! Checked-in experiment configurations named after the figures they
//! reproduce.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2-sc-lf", include_str!("../../presets/fig2-sc-lf.conf")),
    ("fig2-sc-hf", include_str!("../../presets/fig2-sc-hf.conf")),
    ("fig2-na-lf", include_str!("../../presets/fig2-na-lf.conf")),
    ("fig2-na-hf", include_str!("../../presets/fig2-na-hf.conf")),
    ("fig3-tau", include_str!("../../presets/fig3-tau.conf")),
    ("fig3-tau-na", include_str!("../../presets/fig3-tau-na.conf")),
    ("fig5-bb", include_str!("../../presets/fig5-bb.conf")),
];

const ALIASES: &[(&str, &str)] =
    &[("sc-lf", "fig2-sc-lf"), ("sc-hf", "fig2-sc-hf"), ("na-lf", "fig2-na-lf"), ("na-hf", "fig2-na-hf"), ("bb", "fig5-bb")];

/// Text of a preset by name or alias.
pub fn preset(name: &str) -> Option<&'static str> {
    let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, n)| n);
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ExperimentConfig, Sweep};
    use crate::noise::Platform;

    #[test]
    fn every_preset_parses() {
        for (name, text) in PRESETS {
            ExperimentConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn regime_grids() {
        let hf = ExperimentConfig::parse(preset("sc-hf").unwrap()).unwrap();
        assert_eq!(hf.p, vec![0.002, 0.003, 0.004, 0.005, 0.006, 0.007]);
        assert_eq!(hf.noise(0.004, None).target_ps(), 5.0 * 0.004);
        let lf = ExperimentConfig::parse(preset("na-lf").unwrap()).unwrap();
        assert_eq!(lf.platform, Platform::Na);
        assert_eq!(lf.p, vec![0.005, 0.006, 0.007, 0.008, 0.009, 0.01]);
        assert_eq!(lf.noise(0.007, None).target_ps(), 0.007);
        assert_eq!(lf.noise(0.007, None).bias, 100.0);
        let tau = ExperimentConfig::parse(preset("fig3-tau").unwrap()).unwrap();
        assert_eq!(tau.sweep, Sweep::Tau);
        assert_eq!((tau.tau_m[0], *tau.tau_m.last().unwrap()), (200e-9, 1500e-9));
        assert!(preset("nope").is_none());
    }
}
