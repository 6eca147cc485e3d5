//! Experiment configuration: TOML at the boundary, SI units inside.
//!
//! Unit conversions happen exactly once, at ingestion: optical powers
//! arrive in dBm (0 dBm = 1 mW) and frequencies in linear Hz; everything
//! downstream sees watts and rad/s. The SHA-256 hash of the effective
//! configuration (after any seed override) is embedded in every emitted
//! artifact so a pipeline never silently mixes runs.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::ChainCalibration;
use crate::error::{Error, Result};
use crate::physics::ResonatorParams;
use crate::sim::{BathModel, PulseTrain, ResonatorResponse, SlowChannel};

/// Convert a dBm power level to watts (exactly once, at ingestion).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Convert linear Hz to angular rad/s.
pub fn hz_to_angular(f_hz: f64) -> f64 {
    TAU * f_hz
}

// ---------------------------------------------------------------------------
// Raw file schema (human units)

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawConfig {
    pub seed: u64,
    pub pulse: RawPulse,
    pub bath: RawBath,
    pub resonator: RawResonator,
    pub chain: RawChain,
    pub grid: RawGrid,
    pub lockin: RawLockin,
    #[serde(default)]
    pub noise: RawNoise,
    pub calibration: RawCalibration,
    #[serde(default)]
    pub analysis: RawAnalysis,
    pub powerlaw: RawPowerlaw,
    pub heat_budget: RawHeatBudget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPulse {
    pub peak_dbm: f64,
    pub width_s: f64,
    pub period_s: f64,
    pub edge_time_s: f64,
    #[serde(default)]
    pub delay_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSlowChannel {
    pub gain: f64,
    pub tau_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawBath {
    pub fast_gain: f64,
    pub fast_exponent: f64,
    pub fast_tau_s: f64,
    pub slow_channels: Vec<RawSlowChannel>,
    pub slow_exponent: f64,
    pub bg_gain: f64,
    pub bg_exponent: f64,
    pub bg_tau_s: f64,
    pub external_share: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawResonator {
    pub f0_hz: f64,
    pub kappa_i_hz: f64,
    pub kappa_e_hz: f64,
    pub freq_shift_hz_per_quantum: f64,
    pub linewidth_hz_per_quantum: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawChain {
    pub g_sys: f64,
    pub n_sys: f64,
    pub bw_hz: f64,
    pub f_signal_hz: f64,
    pub f_idler_hz: f64,
    #[serde(default = "default_attenuation")]
    pub attenuation_l: f64,
}

fn default_attenuation() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawGrid {
    pub time_step_s: f64,
    /// Defaults to one pulse period when omitted.
    #[serde(default)]
    pub time_span_s: Option<f64>,
    pub freq_span_hz: f64,
    pub freq_step_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawLockin {
    pub time_constant_s: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawNoise {
    #[serde(default)]
    pub heatmap_sigma_w: f64,
    #[serde(default)]
    pub coherent_sigma: f64,
    #[serde(default)]
    pub sweep_sigma_w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCalibration {
    pub temperatures_mk: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawAnalysis {
    /// 0 means the default of 5 lock-in time constants.
    #[serde(default)]
    pub exclusion_window_s: f64,
    #[serde(default = "default_decay_k")]
    pub decay_k: usize,
}

fn default_decay_k() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPowerlaw {
    pub peak_dbm_points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawHeatBudget {
    pub eta_in: f64,
    pub eta_out: f64,
    pub t_opt_sq: f64,
    pub eta_in_improved: f64,
    pub eta_out_improved: f64,
    pub conductivity_exponent: f64,
    pub reference_power_w: f64,
    pub reference_temperature_k: f64,
    pub base_temperature_k: f64,
    pub anchor_power_w: f64,
    pub anchor_occupancy: f64,
    pub anchor_exponent: f64,
    pub eval_power_w: f64,
}

// ---------------------------------------------------------------------------
// Resolved configuration (SI units)

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub time_span: f64,
    pub time_step: f64,
    /// Grid center (rad/s); equals the dark resonance.
    pub freq_center: f64,
    pub freq_span: f64,
    pub freq_step: f64,
}

impl GridSpec {
    pub fn times(&self) -> Vec<f64> {
        let n = (self.time_span / self.time_step).round() as usize;
        (0..=n).map(|i| i as f64 * self.time_step).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = (self.freq_span / self.freq_step).round() as usize;
        (0..=n)
            .map(|j| self.freq_center - 0.5 * self.freq_span + j as f64 * self.freq_step)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Edge exclusion window (s), resolved from 5·t_c when unset.
    pub exclusion_window: f64,
    pub decay_k: usize,
}

#[derive(Debug, Clone)]
pub struct NoiseLevels {
    pub heatmap_sigma: f64,
    pub coherent_sigma: f64,
    pub sweep_sigma: f64,
}

#[derive(Debug, Clone)]
pub struct HeatBudgetConfig {
    pub eta_in: f64,
    pub eta_out: f64,
    pub t_opt_sq: f64,
    pub eta_in_improved: f64,
    pub eta_out_improved: f64,
    pub conductivity_exponent: f64,
    pub reference_power: f64,
    pub reference_temperature: f64,
    pub base_temperature: f64,
    pub anchor_power: f64,
    pub anchor_occupancy: f64,
    pub anchor_exponent: f64,
    pub eval_power: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub hash: String,
    pub seed: u64,
    pub pulse: PulseTrain,
    pub bath: BathModel,
    pub resonator: ResonatorResponse,
    pub chain: ChainCalibration,
    pub grid: GridSpec,
    pub t_c: f64,
    pub noise: NoiseLevels,
    pub calibration_temperatures: Vec<f64>,
    pub analysis: AnalysisOptions,
    pub powerlaw_peaks_w: Vec<f64>,
    pub heat: HeatBudgetConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, seed_override)
    }

    pub fn from_toml_str(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        if let Some(seed) = seed_override {
            raw.seed = seed;
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let hash = config_hash(&raw)?;

        let pulse = PulseTrain::new(
            dbm_to_watts(raw.pulse.peak_dbm),
            raw.pulse.width_s,
            raw.pulse.period_s,
            raw.pulse.edge_time_s,
            raw.pulse.delay_s,
        )?;

        let bath = BathModel {
            fast_gain: raw.bath.fast_gain,
            fast_exponent: raw.bath.fast_exponent,
            fast_tau: raw.bath.fast_tau_s,
            slow_channels: raw
                .bath
                .slow_channels
                .iter()
                .map(|c| SlowChannel {
                    gain: c.gain,
                    tau: c.tau_s,
                })
                .collect(),
            slow_exponent: raw.bath.slow_exponent,
            bg_gain: raw.bath.bg_gain,
            bg_exponent: raw.bath.bg_exponent,
            bg_tau: raw.bath.bg_tau_s,
            external_share: raw.bath.external_share,
        };
        bath.validate()?;

        let base = ResonatorParams::new(
            hz_to_angular(raw.resonator.f0_hz),
            hz_to_angular(raw.resonator.kappa_i_hz),
            hz_to_angular(raw.resonator.kappa_e_hz),
        )?;
        let resonator = ResonatorResponse {
            base,
            freq_shift_coeff: hz_to_angular(raw.resonator.freq_shift_hz_per_quantum),
            linewidth_coeff: hz_to_angular(raw.resonator.linewidth_hz_per_quantum),
        };

        let chain = ChainCalibration::new(
            raw.chain.g_sys,
            raw.chain.n_sys,
            raw.chain.bw_hz,
            hz_to_angular(raw.chain.f_signal_hz),
            hz_to_angular(raw.chain.f_idler_hz),
            raw.chain.attenuation_l,
        )?;

        let t_c = raw.lockin.time_constant_s;
        if !(t_c.is_finite() && t_c > 0.0) {
            return Err(Error::Config(format!(
                "lock-in time constant must be positive, got {t_c}"
            )));
        }
        if raw.grid.time_step_s > t_c / 5.0 {
            return Err(Error::Config(format!(
                "grid time step {:e} s must not exceed t_c/5 = {:e} s",
                raw.grid.time_step_s,
                t_c / 5.0
            )));
        }
        let time_span = raw.grid.time_span_s.unwrap_or(raw.pulse.period_s);
        if time_span < raw.pulse.period_s {
            return Err(Error::Config(format!(
                "grid time span {time_span:e} s must cover one pulse period {:e} s",
                raw.pulse.period_s
            )));
        }
        if raw.grid.freq_step_hz <= 0.0 || raw.grid.freq_span_hz <= 0.0 {
            return Err(Error::Config("frequency grid must be positive".into()));
        }
        let grid = GridSpec {
            time_span,
            time_step: raw.grid.time_step_s,
            freq_center: base.omega0,
            freq_span: hz_to_angular(raw.grid.freq_span_hz),
            freq_step: hz_to_angular(raw.grid.freq_step_hz),
        };
        if grid.frequencies().len() < 8 {
            return Err(Error::Config(
                "frequency grid needs at least 8 points for resonance fits".into(),
            ));
        }

        let calibration_temperatures: Vec<f64> = raw
            .calibration
            .temperatures_mk
            .iter()
            .map(|t| t * 1e-3)
            .collect();
        if calibration_temperatures.len() < 2 {
            return Err(Error::Config(
                "calibration needs at least two VTS temperatures".into(),
            ));
        }

        let exclusion_window = if raw.analysis.exclusion_window_s > 0.0 {
            raw.analysis.exclusion_window_s
        } else {
            5.0 * t_c
        };
        let analysis = AnalysisOptions {
            exclusion_window,
            decay_k: raw.analysis.decay_k.max(1),
        };

        let powerlaw_peaks_w: Vec<f64> = raw
            .powerlaw
            .peak_dbm_points
            .iter()
            .map(|&dbm| dbm_to_watts(dbm))
            .collect();

        let hb = &raw.heat_budget;
        let heat = HeatBudgetConfig {
            eta_in: hb.eta_in,
            eta_out: hb.eta_out,
            t_opt_sq: hb.t_opt_sq,
            eta_in_improved: hb.eta_in_improved,
            eta_out_improved: hb.eta_out_improved,
            conductivity_exponent: hb.conductivity_exponent,
            reference_power: hb.reference_power_w,
            reference_temperature: hb.reference_temperature_k,
            base_temperature: hb.base_temperature_k,
            anchor_power: hb.anchor_power_w,
            anchor_occupancy: hb.anchor_occupancy,
            anchor_exponent: hb.anchor_exponent,
            eval_power: hb.eval_power_w,
        };

        Ok(ExperimentConfig {
            hash,
            seed: raw.seed,
            pulse,
            bath,
            resonator,
            chain,
            grid,
            t_c,
            noise: NoiseLevels {
                heatmap_sigma: raw.noise.heatmap_sigma_w,
                coherent_sigma: raw.noise.coherent_sigma,
                sweep_sigma: raw.noise.sweep_sigma_w,
            },
            calibration_temperatures,
            analysis,
            powerlaw_peaks_w,
            heat,
        })
    }

    /// Drive-on and -off edge times within the first recorded period.
    pub fn pulse_edges(&self) -> (f64, f64) {
        (self.pulse.delay, self.pulse.delay + self.pulse.width)
    }
}

/// SHA-256 of the canonical JSON form of the effective raw configuration.
fn config_hash(raw: &RawConfig) -> Result<String> {
    let canonical = serde_json::to_string(raw)
        .map_err(|e| Error::Config(format!("cannot canonicalize config: {e}")))?;
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = std::fmt::Write::write_fmt(&mut out, format_args!("{byte:02x}"));
    }
    Ok(out)
}

/// A ready-to-run example configuration mirroring the published pulse and
/// resonator scales.
pub fn example_toml() -> &'static str {
    include_str!("../resources/example.toml")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions_are_exact() {
        assert_eq!(dbm_to_watts(0.0), 1e-3);
        assert!((dbm_to_watts(5.0) - 3.1622776601683794e-3).abs() < 1e-18);
        assert!((dbm_to_watts(-30.0) - 1e-6).abs() < 1e-21);
    }

    #[test]
    fn example_config_parses_and_resolves() {
        let cfg = ExperimentConfig::from_toml_str(example_toml(), None).unwrap();
        assert!(cfg.pulse.peak_power > 0.0);
        assert_eq!(cfg.grid.freq_center, cfg.resonator.base.omega0);
        // dBm and Hz conversions applied exactly once.
        assert!((cfg.chain.omega_s - TAU * 6.587e9).abs() < 1.0);
        assert_eq!(cfg.hash.len(), 64);
    }

    #[test]
    fn seed_override_changes_hash() {
        let a = ExperimentConfig::from_toml_str(example_toml(), None).unwrap();
        let b = ExperimentConfig::from_toml_str(example_toml(), Some(a.seed + 1)).unwrap();
        let c = ExperimentConfig::from_toml_str(example_toml(), Some(a.seed)).unwrap();
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash, c.hash);
        assert_eq!(b.seed, a.seed + 1);
    }

    #[test]
    fn grid_spec_generates_uniform_axes() {
        let cfg = ExperimentConfig::from_toml_str(example_toml(), None).unwrap();
        let times = cfg.grid.times();
        assert!(times.len() > 100);
        let dt = times[1] - times[0];
        for w in times.windows(2) {
            assert!(((w[1] - w[0]) - dt).abs() < 1e-9 * dt);
        }
        let freqs = cfg.grid.frequencies();
        assert!(freqs.len() >= 8);
        assert!(freqs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn step_larger_than_tc_over_five_rejected() {
        let text = example_toml().replace("time_step_s = 40e-9", "time_step_s = 1e-6");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text, None),
            Err(Error::Config(_))
        ));
    }
}
