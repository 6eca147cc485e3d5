//! Amplification-chain model: forward noise-power evaluation, chain
//! calibration from a variable-temperature-stage sweep, and conversion of
//! raw on/off spectra into the device excess-noise spectrum.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numfit::linear_least_squares;
use crate::physics::{bose_einstein_occupancy, Occupancy, HBAR};

/// Measurement-chain constants referred to the VTS output plane.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainCalibration {
    /// Linear system power gain G_sys (dimensionless).
    pub g_sys: f64,
    /// Added noise n_sys referred to the VTS (quanta).
    pub n_sys: f64,
    /// Resolution bandwidth BW (Hz).
    pub bw: f64,
    /// Amplifier signal angular frequency ω_s (rad/s).
    pub omega_s: f64,
    /// Amplifier idler angular frequency ω_i (rad/s).
    pub omega_i: f64,
    /// VTS-to-device transmission L ∈ (0, 1]. Extraction always assumes 1;
    /// the simulator may apply the true value to exercise the resulting
    /// systematic bias.
    pub attenuation_l: f64,
}

impl ChainCalibration {
    pub fn new(
        g_sys: f64,
        n_sys: f64,
        bw: f64,
        omega_s: f64,
        omega_i: f64,
        attenuation_l: f64,
    ) -> Result<Self> {
        if !(g_sys.is_finite() && g_sys > 0.0) {
            return Err(Error::InvalidInput(format!("gain must be positive, got {g_sys}")));
        }
        if !(n_sys.is_finite() && n_sys >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "added noise must be non-negative, got {n_sys}"
            )));
        }
        if !(bw.is_finite() && bw > 0.0) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bw}")));
        }
        if !(omega_s.is_finite() && omega_s > 0.0 && omega_i.is_finite() && omega_i > 0.0) {
            return Err(Error::InvalidInput(
                "signal and idler frequencies must be positive".into(),
            ));
        }
        if !(attenuation_l.is_finite() && attenuation_l > 0.0 && attenuation_l <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "attenuation must lie in (0, 1], got {attenuation_l}"
            )));
        }
        Ok(ChainCalibration {
            g_sys,
            n_sys,
            bw,
            omega_s,
            omega_i,
            attenuation_l,
        })
    }

    /// Power-to-quanta conversion factor BW·G_sys·ħω_s (W per quantum).
    pub fn quanta_scale(&self) -> f64 {
        self.bw * self.g_sys * HBAR * self.omega_s
    }
}

/// A VTS temperature sweep at one measurement frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSweep {
    /// Stage temperatures (K).
    pub temperatures: Vec<f64>,
    /// Measured noise power at each temperature (W).
    pub powers: Vec<f64>,
}

impl CalibrationSweep {
    pub fn new(temperatures: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        if temperatures.len() != powers.len() {
            return Err(Error::InvalidInput(format!(
                "sweep has {} temperatures but {} powers",
                temperatures.len(),
                powers.len()
            )));
        }
        if temperatures.len() < 2 {
            return Err(Error::InvalidInput(
                "sweep needs at least two points".into(),
            ));
        }
        if temperatures.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::InvalidInput(
                "sweep temperatures must be positive".into(),
            ));
        }
        if powers.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("sweep powers must be finite".into()));
        }
        Ok(CalibrationSweep {
            temperatures,
            powers,
        })
    }
}

/// Device excess-noise spectrum s_dev(ω) in quanta.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessNoiseSpectrum {
    /// Angular frequencies (rad/s), strictly increasing.
    pub frequencies: Vec<f64>,
    /// Excess noise (quanta); may be negative under measurement noise.
    pub s_dev: Vec<f64>,
}

impl ExcessNoiseSpectrum {
    pub fn new(frequencies: Vec<f64>, s_dev: Vec<f64>) -> Result<Self> {
        if frequencies.len() != s_dev.len() {
            return Err(Error::InvalidInput(format!(
                "spectrum has {} frequencies but {} values",
                frequencies.len(),
                s_dev.len()
            )));
        }
        if frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "spectrum frequencies must be strictly increasing".into(),
            ));
        }
        Ok(ExcessNoiseSpectrum { frequencies, s_dev })
    }
}

/// Fitted calibration plus regression diagnostics.
#[derive(Debug, Clone)]
pub struct CalibrationFit {
    pub calibration: ChainCalibration,
    pub residual_rms: f64,
}

/// Noise power at the chain output for given VTS occupancies:
/// P = BW·G_sys·(n_s·ħω_s + n_i·ħω_i + ½ħω_s + n_sys·ħω_s).
pub fn chain_output_power(n_vts_s: Occupancy, n_vts_i: Occupancy, cal: &ChainCalibration) -> f64 {
    cal.bw
        * cal.g_sys
        * HBAR
        * (n_vts_s.quanta() * cal.omega_s
            + n_vts_i.quanta() * cal.omega_i
            + 0.5 * cal.omega_s
            + cal.n_sys * cal.omega_s)
}

/// Combined Bose-Einstein regressor x(T) = n_BE(ω_s, T) + (ω_i/ω_s)·n_BE(ω_i, T).
fn sweep_regressor(temperature: f64, omega_s: f64, omega_i: f64) -> Result<f64> {
    let n_s = bose_einstein_occupancy(omega_s / TAU, temperature)?.quanta();
    let n_i = bose_einstein_occupancy(omega_i / TAU, temperature)?.quanta();
    Ok(n_s + (omega_i / omega_s) * n_i)
}

/// Fit G_sys and n_sys from a temperature sweep.
///
/// The model P = a·x(T) + c is exactly linear in (a, c), so the fit is a
/// closed-form two-parameter regression; afterwards G_sys = a/(BW·ħω_s)
/// and n_sys = c/a − ½. Returns the fitted attenuation as 1 (extraction
/// convention). Order of sweep points does not matter.
pub fn fit_calibration(
    sweep: &CalibrationSweep,
    bw: f64,
    omega_s: f64,
    omega_i: f64,
) -> Result<CalibrationFit> {
    let n = sweep.temperatures.len();
    let first = sweep.temperatures[0];
    if sweep.temperatures.iter().all(|&t| t == first) {
        return Err(Error::DegenerateSweep(format!(
            "all {n} sweep temperatures equal {first} K"
        )));
    }

    let mut design = Vec::with_capacity(2 * n);
    for &t in &sweep.temperatures {
        design.push(sweep_regressor(t, omega_s, omega_i)?);
        design.push(1.0);
    }
    let design = DMatrix::from_row_slice(n, 2, &design);
    let obs = DVector::from_vec(sweep.powers.clone());
    let solution = match linear_least_squares(&design, &obs) {
        Ok(s) => s,
        Err(Error::DegenerateDesign { .. }) => {
            return Err(Error::DegenerateSweep(
                "sweep temperatures do not separate the regressor".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    let (a, c) = (solution[0], solution[1]);
    if a <= 0.0 {
        return Err(Error::FitFailure {
            message: format!("fitted gain slope is non-positive ({a:e})"),
            residual_rms: f64::NAN,
        });
    }
    let g_sys = a / (bw * HBAR * omega_s);
    let n_sys = c / a - 0.5;
    let residual = &design * &solution - &obs;
    let residual_rms = (residual.norm_squared() / n as f64).sqrt();
    if n_sys < 0.0 {
        return Err(Error::FitFailure {
            message: format!("fitted added noise is negative ({n_sys:e})"),
            residual_rms,
        });
    }
    Ok(CalibrationFit {
        calibration: ChainCalibration::new(g_sys, n_sys, bw, omega_s, omega_i, 1.0)?,
        residual_rms,
    })
}

/// Elementwise excess noise s_dev = (P_on − P_off)/(BW·G_sys·ħω_s).
pub fn compute_sdev(
    frequencies: &[f64],
    p_on: &[f64],
    p_off: &[f64],
    cal: &ChainCalibration,
) -> Result<ExcessNoiseSpectrum> {
    if p_on.len() != p_off.len() || p_on.len() != frequencies.len() {
        return Err(Error::InvalidInput(format!(
            "spectrum length mismatch: {} frequencies, {} on, {} off",
            frequencies.len(),
            p_on.len(),
            p_off.len()
        )));
    }
    let scale = cal.quanta_scale();
    let s_dev = p_on
        .iter()
        .zip(p_off)
        .map(|(on, off)| (on - off) / scale)
        .collect();
    ExcessNoiseSpectrum::new(frequencies.to_vec(), s_dev)
}

/// Input-line attenuation from total setup transmission and calibrated
/// output gain, as a linear power ratio. (The subtraction the lab performs
/// happens on the dB scale; in linear units it is this division.)
pub fn input_attenuation(total_transmission: f64, g_sys: f64) -> Result<f64> {
    if !(total_transmission.is_finite() && total_transmission > 0.0) {
        return Err(Error::InvalidInput(format!(
            "total transmission must be positive, got {total_transmission}"
        )));
    }
    if !(g_sys.is_finite() && g_sys > 0.0) {
        return Err(Error::InvalidInput(format!(
            "gain must be positive, got {g_sys}"
        )));
    }
    Ok(total_transmission / g_sys)
}
