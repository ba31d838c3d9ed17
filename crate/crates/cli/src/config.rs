//! JSON run configuration: schema validation plus conversion into the core
//! types. Unknown keys are rejected; physics constraints are re-checked by
//! the owning constructors on load.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use spopo_core::{
    Branch, Field, InitMode, LOProfile, LOShape, OscillatorParams, PhaseModulation, PumpProfile,
    QuadraturePhase, SimConfig, SimMode,
};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub oscillator: OscillatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<LoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<SteadyStateTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combs: Option<CombsTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fig4: Option<Fig4Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity: Option<ValidityTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homodyne: Option<HomodyneTask>,
}

/// Cavity constants. The coupling is given either directly (`coupling`) or
/// through the SI boundary as a continuous-generation threshold power plus
/// pump wavelength.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OscillatorConfig {
    pub roundtrip_time_s: f64,
    pub loss_rate_signal_hz: f64,
    pub loss_rate_pump_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_wavelength_m: Option<f64>,
}

impl OscillatorConfig {
    pub fn build(&self) -> anyhow::Result<OscillatorParams> {
        match (self.coupling, self.threshold_power_w, self.pump_wavelength_m) {
            (Some(g), None, None) => Ok(OscillatorParams::new(
                self.roundtrip_time_s,
                self.loss_rate_signal_hz,
                self.loss_rate_pump_hz,
                g,
            )?),
            (None, Some(p), Some(lambda)) => Ok(OscillatorParams::from_threshold_power(
                self.roundtrip_time_s,
                self.loss_rate_signal_hz,
                self.loss_rate_pump_hz,
                p,
                lambda,
            )?),
            _ => bail!(
                "oscillator: give either `coupling`, or `threshold_power_w` with `pump_wavelength_m`"
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    /// rectangular | gaussian | sampled
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_p_s: Option<f64>,
    /// (t_s, mu) samples for the sampled shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<(f64, f64)>>,
    /// Optional phase modulation samples (t_s, radians).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_points: Option<Vec<(f64, f64)>>,
}

impl PumpConfig {
    pub fn build(&self) -> anyhow::Result<PumpProfile> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| anyhow!("pump.{what} required for shape `{}`", self.shape))
        };
        let profile = match self.shape.as_str() {
            "rectangular" => {
                PumpProfile::rectangular(need(self.mu0, "mu0")?, need(self.tau_p_s, "tau_p_s")?)?
            }
            "gaussian" => {
                PumpProfile::gaussian(need(self.mu0, "mu0")?, need(self.tau_p_s, "tau_p_s")?)?
            }
            "sampled" => PumpProfile::sampled(
                self.points
                    .clone()
                    .ok_or_else(|| anyhow!("pump.points required for shape `sampled`"))?,
            )?,
            other => bail!("pump.shape: unknown shape `{other}`"),
        };
        Ok(match &self.phase_points {
            Some(points) => {
                profile.with_phase_modulation(PhaseModulation::Sampled(points.clone()))
            }
            None => profile,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LoConfig {
    /// rectangular | gaussian | delta | sampled
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_lo_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub delay_s: f64,
    /// x | y
    pub phase: String,
    /// pump | signal
    pub target: String,
}

pub fn parse_field(s: &str) -> anyhow::Result<Field> {
    match s {
        "pump" => Ok(Field::Pump),
        "signal" => Ok(Field::Signal),
        other => bail!("unknown field `{other}` (pump | signal)"),
    }
}

pub fn parse_quadrature(s: &str) -> anyhow::Result<QuadraturePhase> {
    match s {
        "x" => Ok(QuadraturePhase::X),
        "y" => Ok(QuadraturePhase::Y),
        other => bail!("unknown quadrature `{other}` (x | y)"),
    }
}

impl LoConfig {
    pub fn build(&self) -> anyhow::Result<LOProfile> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| anyhow!("lo.{what} required for shape `{}`", self.shape))
        };
        let shape = match self.shape.as_str() {
            "rectangular" => LOShape::Rectangular {
                peak: need(self.peak, "peak")?,
                tau_lo: need(self.tau_lo_s, "tau_lo_s")?,
            },
            "gaussian" => LOShape::Gaussian {
                peak: need(self.peak, "peak")?,
                tau_lo: need(self.tau_lo_s, "tau_lo_s")?,
            },
            "delta" => LOShape::Delta,
            "sampled" => LOShape::Sampled(
                self.points
                    .clone()
                    .ok_or_else(|| anyhow!("lo.points required for shape `sampled`"))?,
            ),
            other => bail!("lo.shape: unknown shape `{other}`"),
        };
        Ok(LOProfile::new(
            shape,
            self.delay_s,
            parse_quadrature(&self.phase)?,
            parse_field(&self.target)?,
        )?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// adiabatic | full | vacuum
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_s: Option<f64>,
    pub pulses: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<usize>,
    pub slices: usize,
    pub bin_width_s: f64,
    pub trajectories: usize,
    /// stationary | zero
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins_per_period: Option<usize>,
    /// +1 | -1
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<i8>,
}

impl SimulationConfig {
    pub fn build(
        &self,
        params: &OscillatorParams,
        mu0: f64,
        seed: u64,
    ) -> anyhow::Result<SimConfig> {
        let mode = match self.mode.as_str() {
            "adiabatic" => SimMode::Adiabatic,
            "full" => SimMode::Full,
            "vacuum" => SimMode::Vacuum,
            other => bail!("sim.mode: unknown mode `{other}`"),
        };
        let mut cfg = SimConfig::new(
            mode,
            params,
            mu0,
            self.slices,
            self.bin_width_s,
            self.pulses,
            self.trajectories,
            seed,
        );
        if let Some(step) = self.step_s {
            cfg.step = step;
        }
        if let Some(w) = self.warmup {
            cfg.warmup = w;
        }
        if let Some(init) = &self.init {
            cfg.init = match init.as_str() {
                "stationary" => InitMode::Stationary,
                "zero" => InitMode::Zero,
                other => bail!("sim.init: unknown mode `{other}`"),
            };
        }
        cfg.bins_per_period = self.bins_per_period;
        if let Some(b) = self.branch {
            cfg.branch = match b {
                1 => Branch::Plus,
                -1 => Branch::Minus,
                other => bail!("sim.branch must be +1 or -1, got {other}"),
            };
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SteadyStateTask {
    pub mu0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    /// pump | signal
    pub field: String,
    /// x | y
    pub quadrature: String,
    pub mu0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max_rad_s: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
}

fn default_points() -> usize {
    2001
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CombsTask {
    pub mu0: f64,
    #[serde(default)]
    pub estimate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Fig4Task {
    pub mu0_list: Vec<f64>,
    pub tau_p_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_span_s: Option<f64>,
    #[serde(default = "default_delay_points")]
    pub delay_points: usize,
    /// 0 = idealized delta probe.
    #[serde(default)]
    pub lo_width_s: f64,
    #[serde(default)]
    pub m_max: usize,
}

fn default_delay_points() -> usize {
    241
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidityTask {
    pub t_f_s: f64,
    pub mu0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HomodyneTask {
    /// Paths to existing record dumps; when absent the run simulates inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_record: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_record: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_pulses: Option<usize>,
    /// Compare against the prediction (exit 4 on failure).
    #[serde(default = "default_true")]
    pub compare: bool,
    /// Band kept for the comparison, in units of the repetition frequency.
    #[serde(default = "default_band")]
    pub compare_band_reps: f64,
    /// analytic (from the configured pump and LO) | shot-noise (flat 1,
    /// for vacuum calibration runs).
    #[serde(default = "default_prediction")]
    pub prediction: String,
}

fn default_prediction() -> String {
    "analytic".into()
}

fn default_true() -> bool {
    true
}

fn default_band() -> f64 {
    1.5
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| anyhow!("config parse error: {e}"))?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "oscillator": {
                "roundtrip_time_s": 1e-8,
                "loss_rate_signal_hz": 1e6,
                "loss_rate_pump_hz": 1e8,
                "coupling": 1e-4
            },
            "task": "steady-state",
            "steady_state": {"mu0": 1.5},
            "seed": 42
        }"#
    }

    #[test]
    fn round_trip_is_identity() {
        let a = RunConfig::from_json(minimal()).unwrap();
        let b = RunConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        let c = RunConfig::from_json(&b.to_json()).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = minimal().replace("\"seed\": 42", "\"seed\": 42, \"sneed\": 1");
        let err = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("sneed"), "error should name the key: {err}");
    }

    #[test]
    fn oscillator_units_are_exclusive() {
        let cfg = RunConfig::from_json(minimal()).unwrap();
        assert!(cfg.oscillator.build().is_ok());
        let mut both = cfg.oscillator.clone();
        both.threshold_power_w = Some(50.0);
        both.pump_wavelength_m = Some(0.4e-6);
        assert!(both.build().is_err());
        let mut si = cfg.oscillator.clone();
        si.coupling = None;
        si.threshold_power_w = Some(50.0);
        si.pump_wavelength_m = Some(0.4e-6);
        assert!(si.build().is_ok());
    }
}
