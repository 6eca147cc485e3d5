//! Design-analysis formulas: optical heat dissipation through the fiber
//! interfaces and the point-heater equilibrium-temperature scaling.

use crate::error::{Error, Result};

/// Fiber-chip optical interface and drive level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OpticalInterface {
    /// Input fiber-to-waveguide efficiency η_in ∈ (0, 1].
    pub eta_in: f64,
    /// Waveguide-to-output-fiber efficiency η_out ∈ (0, 1].
    pub eta_out: f64,
    /// Optical cavity power transmission |T|² ∈ [0, 1].
    pub t_opt_sq: f64,
    /// Waveguide power before the cavity P_t (W).
    pub p_t: f64,
}

impl OpticalInterface {
    pub fn new(eta_in: f64, eta_out: f64, t_opt_sq: f64, p_t: f64) -> Result<Self> {
        if !(eta_in > 0.0 && eta_in <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "eta_in must lie in (0, 1], got {eta_in}"
            )));
        }
        if !(eta_out > 0.0 && eta_out <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "eta_out must lie in (0, 1], got {eta_out}"
            )));
        }
        if !(0.0..=1.0).contains(&t_opt_sq) {
            return Err(Error::InvalidInput(format!(
                "|T|^2 must lie in [0, 1], got {t_opt_sq}"
            )));
        }
        if !(p_t.is_finite() && p_t >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "waveguide power must be non-negative, got {p_t}"
            )));
        }
        Ok(OpticalInterface {
            eta_in,
            eta_out,
            t_opt_sq,
            p_t,
        })
    }

    /// Power sent into the input fiber, P_in = P_t/η_in.
    pub fn input_power(&self) -> f64 {
        self.p_t / self.eta_in
    }
}

/// Total optical power dissipated in the package:
/// P_heat = P_t·[1/η_in − 1 + |T|²·(1 − η_out)].
///
/// Straight-waveguide propagation loss (≈0.03 dB/cm for these waveguides)
/// is far below the resonance extinction and is deliberately excluded.
pub fn heat_dissipated(iface: &OpticalInterface) -> f64 {
    iface.p_t * (1.0 / iface.eta_in - 1.0 + iface.t_opt_sq * (1.0 - iface.eta_out))
}

/// Fractional heat reduction 1 − P_heat(after)/P_heat(before).
pub fn heat_reduction_factor(before: &OpticalInterface, after: &OpticalInterface) -> Result<f64> {
    let base = heat_dissipated(before);
    if base <= 0.0 {
        return Err(Error::UndefinedRatio(format!(
            "baseline heat dissipation is {base:e} W"
        )));
    }
    Ok(1.0 - heat_dissipated(after) / base)
}

/// Point heater thermalized through a medium with conductivity k ∝ T^α.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThermalLink {
    /// Conductivity exponent α (3 for phonon-dominated dielectrics, 1 for
    /// metallic links).
    pub conductivity_exponent: f64,
    /// Power that heats the reference point to `reference_temperature` (W).
    pub reference_power: f64,
    pub reference_temperature: f64,
    pub base_temperature: f64,
}

impl ThermalLink {
    pub fn new(
        conductivity_exponent: f64,
        reference_power: f64,
        reference_temperature: f64,
        base_temperature: f64,
    ) -> Result<Self> {
        if conductivity_exponent < 0.0 {
            return Err(Error::InvalidInput(format!(
                "conductivity exponent must be non-negative, got {conductivity_exponent}"
            )));
        }
        if !(reference_power.is_finite() && reference_power > 0.0) {
            return Err(Error::InvalidInput("reference power must be positive".into()));
        }
        if !(base_temperature > 0.0 && reference_temperature > base_temperature) {
            return Err(Error::InvalidInput(format!(
                "need reference temperature {reference_temperature} above base {base_temperature} > 0"
            )));
        }
        Ok(ThermalLink {
            conductivity_exponent,
            reference_power,
            reference_temperature,
            base_temperature,
        })
    }
}

/// Equilibrium heater temperature at dissipated power `p`.
///
/// The conducted power is the conductivity integral ∫k(T)dT between the
/// base and the heater, so T_eq^(α+1) − T_base^(α+1) scales linearly with
/// p. In the T_base-negligible regime with α = 3 this is the quarter-power
/// law T_eq ∝ p^(1/4); the integral form stays well-defined down to p = 0.
pub fn equilibrium_temperature(p: f64, link: &ThermalLink) -> Result<f64> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "dissipated power must be non-negative, got {p}"
        )));
    }
    let m = link.conductivity_exponent + 1.0;
    let base = link.base_temperature.powf(m);
    let reference = link.reference_temperature.powf(m);
    let value = base + (p / link.reference_power) * (reference - base);
    Ok(value.powf(1.0 / m))
}

/// Occupancy power law n(P) = n_anchor·(P/P_anchor)^exponent anchored at a
/// single calibration point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OccupancyPowerLaw {
    pub anchor_power: f64,
    pub anchor_occupancy: f64,
    pub exponent: f64,
}

impl OccupancyPowerLaw {
    pub fn occupancy(&self, power: f64) -> f64 {
        self.anchor_occupancy * (power / self.anchor_power).powf(self.exponent)
    }
}

pub fn occupancy_powerlaw_consistency(
    exponent: f64,
    anchor_power: f64,
    anchor_occupancy: f64,
) -> Result<OccupancyPowerLaw> {
    if !(exponent > 0.0) {
        return Err(Error::InvalidInput(format!(
            "exponent must be positive, got {exponent}"
        )));
    }
    if !(anchor_power > 0.0 && anchor_occupancy > 0.0) {
        return Err(Error::InvalidInput(
            "anchor power and occupancy must be positive".into(),
        ));
    }
    Ok(OccupancyPowerLaw {
        anchor_power,
        anchor_occupancy,
        exponent,
    })
}
