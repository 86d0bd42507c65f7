//! Configuration schema for scenario runs. Parsing is strict: unknown keys
//! anywhere in the document are rejected, and error messages carry the JSON
//! path of the offending key.

use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::Deserialize;

/// A frequency or rate. Accepts either a plain JSON number (angular units,
/// rad/s in physical runs) or a string `"2pi*<value>"` that is multiplied out
/// during parsing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency(pub f64);

impl FromStr for Frequency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("2pi*") {
            return rest
                .trim()
                .parse::<f64>()
                .map(|v| Frequency(std::f64::consts::TAU * v))
                .map_err(|e| format!("bad frequency {t:?}: {e}"));
        }
        t.parse::<f64>()
            .map(Frequency)
            .map_err(|_| format!("bad frequency {t:?}: expected a number or \"2pi*<value>\""))
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(Frequency(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A complex amplitude: a plain number is taken as real, an object form
/// `{"re": x, "im": y}` gives both quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSpec(pub C64);

impl<'de> Deserialize<'de> for ComplexSpec {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Parts {
            re: f64,
            #[serde(default)]
            im: f64,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Parts(Parts),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Real(v) => Ok(ComplexSpec(C64::new(v, 0.0))),
            Repr::Parts(p) => Ok(ComplexSpec(C64::new(p.re, p.im))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    JcmRabi,
    FockLadder,
    CatResonant,
    CatDispersive,
    TwoSample,
    WState,
    Wigner,
    FullVsEffective,
    Decoherence,
    Feasibility,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::JcmRabi => "jcm-rabi",
            ScenarioKind::FockLadder => "fock-ladder",
            ScenarioKind::CatResonant => "cat-resonant",
            ScenarioKind::CatDispersive => "cat-dispersive",
            ScenarioKind::TwoSample => "two-sample",
            ScenarioKind::WState => "w-state",
            ScenarioKind::Wigner => "wigner",
            ScenarioKind::FullVsEffective => "full-vs-effective",
            ScenarioKind::Decoherence => "decoherence",
            ScenarioKind::Feasibility => "feasibility",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Full,
    Effective,
    Jcm,
    Dispersive,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Effective => "effective",
            ModelKind::Jcm => "jcm",
            ModelKind::Dispersive => "dispersive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeUnits {
    /// CSV time column in units of `1/g` (the default).
    InverseG,
    /// CSV time column in the raw units implied by the frequency inputs.
    Physical,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub g: Frequency,
    /// Omitted: solved from the collective resonance condition.
    pub rabi: Option<Frequency>,
    pub cavity_detuning: Frequency,
    pub drive_detuning: Frequency,
    pub atoms_per_sample: u32,
    pub samples: Option<u32>,
    pub mean_cavity_photons: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanBlock {
    pub cavity_g: Frequency,
    pub classical_rabi: Frequency,
    pub one_photon_detuning: Frequency,
    pub raman_detuning: Frequency,
    pub atoms: u32,
    pub atomic_linewidth: Frequency,
    pub cavity_linewidth: Frequency,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationBlock {
    /// Photon levels kept for the cavity in full-model runs (default 2).
    pub cavity_n_max: Option<usize>,
    /// Excitation levels kept for the collective mode (scenario-dependent
    /// default, usually target excitation + 8).
    pub mode_m_max: Option<usize>,
    /// Fock truncation per bosonized sample in multi-sample runs (default 5).
    pub per_mode_n_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    /// Record every `stride`-th step of `dt` (default 1).
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesBlock {
    pub control_decay: Frequency,
    pub mode_atom_decay: Frequency,
    pub mode_cavity_decay: Frequency,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub half_extent: f64,
    pub points_per_side: usize,
    pub center: Option<ComplexSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Vacuum,
    Fock,
    Coherent,
    DispersiveCat,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBlock {
    pub kind: StateKind,
    pub n: Option<usize>,
    pub alpha: Option<ComplexSpec>,
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub system: Option<SystemBlock>,
    pub raman: Option<RamanBlock>,
    pub truncations: Option<TruncationBlock>,
    pub time: Option<TimeBlock>,
    pub model: Option<ModelKind>,
    pub decoherence: Option<bool>,
    pub rates: Option<RatesBlock>,
    pub out_dir: Option<PathBuf>,
    pub time_units: Option<TimeUnits>,
    /// Initial mode excitation for `jcm-rabi` (default 0).
    pub excitation: Option<usize>,
    /// Target Fock level for `fock-ladder`.
    pub target_n: Option<usize>,
    /// Coherent amplitude for the cat scenarios.
    pub alpha: Option<ComplexSpec>,
    /// Conditional phase target for `cat-dispersive` (default pi/2).
    pub phase: Option<f64>,
    /// Input state for `wigner`.
    pub state: Option<StateBlock>,
    /// Phase-space grid for `wigner`.
    pub grid: Option<GridBlock>,
    /// Budget window in raw time units for `decoherence` (default: one
    /// quarter swap).
    pub duration: Option<f64>,
    /// For `wigner`: also evaluate the direct quasiprobability and report
    /// the largest deviation (default false).
    pub compare_exact: Option<bool>,
}

/// Parses a strict JSON config, reporting the JSON path of any offending key.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            format!("config: {}", e.inner())
        } else {
            format!("config key `{path}`: {}", e.inner())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_forms() {
        let f: Frequency = serde_json::from_str("6.5").unwrap();
        assert_eq!(f.0, 6.5);
        let f: Frequency = serde_json::from_str("\"2pi*2.0\"").unwrap();
        assert!((f.0 - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let bad: Result<Frequency, _> = serde_json::from_str("\"two pi\"");
        assert!(bad.is_err());
    }

    #[test]
    fn complex_forms() {
        let c: ComplexSpec = serde_json::from_str("4.0").unwrap();
        assert_eq!(c.0, C64::new(4.0, 0.0));
        let c: ComplexSpec = serde_json::from_str("{\"re\": 1.0, \"im\": -2.0}").unwrap();
        assert_eq!(c.0, C64::new(1.0, -2.0));
        let bad: Result<ComplexSpec, _> = serde_json::from_str("{\"re\": 1.0, \"imag\": 0.0}");
        assert!(bad.is_err());
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let err = parse_config(
            r#"{"scenario": "jcm-rabi", "system": {"g": 1.0, "cavity_detuning": 100.0,
                "drive_detuning": 100.0, "atoms_per_sample": 10, "coupling": 3.0}}"#,
        )
        .unwrap_err();
        assert!(err.contains("system"), "{err}");
        assert!(err.contains("coupling"), "{err}");
    }

    #[test]
    fn negative_atom_count_rejected() {
        let err = parse_config(
            r#"{"scenario": "jcm-rabi", "system": {"g": 1.0, "cavity_detuning": 100.0,
                "drive_detuning": 100.0, "atoms_per_sample": -5}}"#,
        )
        .unwrap_err();
        assert!(err.contains("atoms_per_sample"), "{err}");
    }

    #[test]
    fn scenario_names_round_trip() {
        for (text, kind) in [
            ("jcm-rabi", ScenarioKind::JcmRabi),
            ("fock-ladder", ScenarioKind::FockLadder),
            ("cat-resonant", ScenarioKind::CatResonant),
            ("cat-dispersive", ScenarioKind::CatDispersive),
            ("two-sample", ScenarioKind::TwoSample),
            ("w-state", ScenarioKind::WState),
            ("wigner", ScenarioKind::Wigner),
            ("full-vs-effective", ScenarioKind::FullVsEffective),
            ("decoherence", ScenarioKind::Decoherence),
            ("feasibility", ScenarioKind::Feasibility),
        ] {
            let parsed: ScenarioKind =
                serde_json::from_str(&format!("\"{text}\"")).unwrap();
            assert_eq!(parsed, kind);
            assert_eq!(kind.name(), text);
        }
    }
}
