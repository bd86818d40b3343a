//! Scenario files: one cloak configuration plus per-command sections.

use std::path::Path;

use cloak_core::config::CloakConfig;
use cloak_core::experiments::{Frequency, RateModel, SourceDescriptor};
use cloak_core::timesynth::PulseSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub config: CloakConfig,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub resonance: Option<ResonanceSection>,
    #[serde(default)]
    pub field: Option<FieldSection>,
    #[serde(default)]
    pub timedomain: Option<TimeSection>,
}

fn power_law() -> RateModel {
    RateModel::PowerLaw
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    BoundedBelow,
    InteriorGrowing,
    ExteriorNonDecaying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub omega: Frequency,
    #[serde(default)]
    pub rho_list: Option<Vec<f64>>,
    pub source: SourceDescriptor,
    pub n_max: usize,
    #[serde(default = "power_law")]
    pub model: RateModel,
    /// Run as a resonance blow-up probe.
    #[serde(default)]
    pub probe: bool,
    /// Window for the fitted exponent of the exterior H1 norm
    /// (for the logarithmic model: the spread of `norm |ln rho|`, lower bound ignored).
    #[serde(default)]
    pub expect_slope: Option<[f64; 2]>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    pub orders: Vec<usize>,
    pub window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub omega: Frequency,
    pub source: SourceDescriptor,
    pub n_max: usize,
    pub r_max: f64,
    pub radial_points: usize,
    pub angular_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub pulse: PulseSpec,
    pub frequencies: usize,
    pub source: SourceDescriptor,
    pub n_max: usize,
    #[serde(default)]
    pub probes: Vec<[f64; 3]>,
    /// Time window; defaults to the free-propagation window.
    #[serde(default)]
    pub window: Option<f64>,
    /// When present, also sweeps these radii and fits the rate of the
    /// sup-in-time visibility.
    #[serde(default)]
    pub rho_list: Option<Vec<f64>>,
    #[serde(default)]
    pub expect_slope: Option<[f64; 2]>,
}

/// Parses and validates a scenario; errors carry line and column.
pub fn parse(text: &str) -> Result<Scenario, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn load(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

impl Scenario {
    pub fn override_rho_list(&mut self, list: &[f64]) {
        if let Some(s) = &mut self.sweep {
            s.rho_list = Some(list.to_vec());
        }
        if let Some(t) = &mut self.timedomain {
            t.rho_list = Some(list.to_vec());
        }
    }

    pub fn override_modes(&mut self, n: usize) {
        if let Some(s) = &mut self.sweep {
            s.n_max = n;
        }
        if let Some(f) = &mut self.field {
            f.n_max = n;
        }
        if let Some(t) = &mut self.timedomain {
            t.n_max = n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[config]
dimension = 3
rho = 0.1
variant = { kind = "fixed_lossy" }
object = { lambda1 = 2.0, lambda2 = 3.0 }
"#;

    #[test]
    fn minimal_config_parses() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.config.rho, 0.1);
        assert!(s.sweep.is_none());
    }

    #[test]
    fn bad_rho_rejected_with_line() {
        let e = parse(&MINIMAL.replace("rho = 0.1", "rho = 0.7")).unwrap_err();
        assert!(e.contains("not in (0, 1/2)"), "{e}");
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn missing_gamma_rejected() {
        let e = parse(&MINIMAL.replace(r#"kind = "fixed_lossy""#, r#"kind = "rho_lossy""#)).unwrap_err();
        assert!(e.contains("gamma"), "{e}");
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let e = parse(&format!("{MINIMAL}\n[sweep]\nomega = 1.0\nn_max = 2\nsorce = 1\n")).unwrap_err();
        assert!(e.contains("sorce") && e.contains("line 11"), "{e}");
    }

    #[test]
    fn resonance_frequency_and_sources_parse() {
        let text = format!(
            "{MINIMAL}\n[sweep]\nomega = {{ order = 0 }}\nn_max = 0\nprobe = true\nexpect = [\"bounded_below\"]\n\
             source = {{ kind = \"resonant_mode\", n = 0 }}\n"
        );
        let s = parse(&text).unwrap();
        let sw = s.sweep.unwrap();
        assert_eq!(sw.omega, Frequency::Resonance { order: 0, index: 0 });
        assert_eq!(sw.expect, vec![Expectation::BoundedBelow]);
    }
}
