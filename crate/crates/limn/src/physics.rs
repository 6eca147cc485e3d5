//! Physical constants, thermal occupancies, and one-port resonator lineshapes.
//!
//! Everything here is pure and stateless. All frequencies are angular
//! (rad/s) except where a function explicitly takes linear Hz; the I/O
//! layer applies the 2π conversion at the boundary.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Planck constant (J·s), CODATA 2018 exact value.
pub const PLANCK_H: f64 = 6.62607015e-34;

/// Boltzmann constant (J/K), CODATA 2018 exact value.
pub const BOLTZMANN_K: f64 = 1.380649e-23;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);

/// Photon-number occupancy of a physical bath (quanta, ≥ 0).
///
/// Difference occupancies such as n_i − n_e are not `Occupancy`; they may
/// be negative and are carried as plain `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupancy(f64);

impl Occupancy {
    pub fn new(quanta: f64) -> Result<Self> {
        if !quanta.is_finite() || quanta < 0.0 {
            return Err(Error::InvalidInput(format!(
                "bath occupancy must be finite and non-negative, got {quanta}"
            )));
        }
        Ok(Occupancy(quanta))
    }

    pub fn quanta(self) -> f64 {
        self.0
    }
}

/// One-port resonator: resonant angular frequency and coupling rates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResonatorParams {
    /// Resonant angular frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Intrinsic coupling rate κ_i (rad/s).
    pub kappa_i: f64,
    /// External coupling rate κ_e (rad/s).
    pub kappa_e: f64,
}

impl ResonatorParams {
    pub fn new(omega0: f64, kappa_i: f64, kappa_e: f64) -> Result<Self> {
        if !(omega0.is_finite() && kappa_i.is_finite() && kappa_e.is_finite()) {
            return Err(Error::InvalidInput(
                "resonator parameters must be finite".into(),
            ));
        }
        if omega0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "resonant frequency must be positive, got {omega0}"
            )));
        }
        if kappa_i < 0.0 || kappa_e < 0.0 {
            return Err(Error::InvalidInput(format!(
                "coupling rates must be non-negative, got kappa_i={kappa_i}, kappa_e={kappa_e}"
            )));
        }
        if kappa_i + kappa_e <= 0.0 {
            return Err(Error::InvalidInput(
                "total linewidth kappa_i + kappa_e must be positive".into(),
            ));
        }
        Ok(ResonatorParams {
            omega0,
            kappa_i,
            kappa_e,
        })
    }

    /// Total linewidth κ = κ_i + κ_e (rad/s).
    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_e
    }
}

/// Bose-Einstein occupancy 1/(exp(hf/k_B·T) − 1) at linear frequency `f_hz`
/// and temperature `temperature_k`.
///
/// The T = 0 limit is defined as exactly zero so simulator baselines can
/// use it directly.
pub fn bose_einstein_occupancy(f_hz: f64, temperature_k: f64) -> Result<Occupancy> {
    if !f_hz.is_finite() || f_hz <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "frequency must be positive, got {f_hz}"
        )));
    }
    if !temperature_k.is_finite() || temperature_k < 0.0 {
        return Err(Error::InvalidInput(format!(
            "temperature must be non-negative, got {temperature_k}"
        )));
    }
    if temperature_k == 0.0 {
        return Ok(Occupancy(0.0));
    }
    let x = PLANCK_H * f_hz / (BOLTZMANN_K * temperature_k);
    // exp_m1 keeps precision in the small-x (high-T) regime; large x
    // overflows to +inf and the occupancy underflows cleanly to 0.
    Occupancy::new(1.0 / x.exp_m1())
}

/// Noise transmission T(ω) = κ_iκ_e / ((κ/2)² + (ω − ω₀)²).
///
/// Lies in [0, 1] for any non-negative coupling rates (AM-GM bound).
pub fn noise_transmission(omega: f64, r: &ResonatorParams) -> f64 {
    let half_kappa = 0.5 * r.kappa();
    let detuning = omega - r.omega0;
    r.kappa_i * r.kappa_e / (half_kappa * half_kappa + detuning * detuning)
}

/// Noise reflection R(ω) = 1 − T(ω).
pub fn noise_reflection(omega: f64, r: &ResonatorParams) -> f64 {
    1.0 - noise_transmission(omega, r)
}

/// Coherent one-port reflection S(ω) = 1 − κ_e / (κ/2 + i(ω − ω₀)).
///
/// The dip in |S|² obeys 1 − |S(ω)|² = T(ω), so the coherent probe and the
/// noise lineshapes stay mutually consistent.
pub fn coherent_reflection(omega: f64, r: &ResonatorParams) -> Complex64 {
    let denom = Complex64::new(0.5 * r.kappa(), omega - r.omega0);
    Complex64::new(1.0, 0.0) - r.kappa_e / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = std::f64::consts::TAU;

    fn demo_resonator() -> ResonatorParams {
        ResonatorParams::new(TAU * 6.587e9, TAU * 0.4e6, TAU * 0.8e6).unwrap()
    }

    #[test]
    fn occupancy_is_one_when_hf_equals_kt_ln2() {
        // hf = k_B·T·ln 2 makes the exponential exactly 2.
        let t = 0.1;
        let f = BOLTZMANN_K * t * std::f64::consts::LN_2 / PLANCK_H;
        let n = bose_einstein_occupancy(f, t).unwrap().quanta();
        assert!((n - 1.0).abs() < 1e-12, "got {n}");
    }

    #[test]
    fn occupancy_frozen_value_at_experiment_point() {
        // Independent high-precision evaluation (mpmath, 40 digits):
        // n_BE(6.587 GHz, 60 mK) = 0.0051766053887916885
        let n = bose_einstein_occupancy(6.587e9, 0.060).unwrap().quanta();
        assert!(
            (n - 5.1766053887916885e-3).abs() < 1e-15,
            "got {n:e}"
        );
    }

    #[test]
    fn occupancy_zero_temperature_limit() {
        assert_eq!(bose_einstein_occupancy(6.587e9, 0.0).unwrap().quanta(), 0.0);
        assert_eq!(bose_einstein_occupancy(1.0, 0.0).unwrap().quanta(), 0.0);
    }

    #[test]
    fn occupancy_rejects_nonpositive_frequency() {
        assert!(matches!(
            bose_einstein_occupancy(0.0, 0.1),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            bose_einstein_occupancy(-1e9, 0.1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn occupancy_monotone_in_temperature_and_frequency() {
        let temps: Vec<f64> = (1..50).map(|i| 0.02 * i as f64).collect();
        let mut prev = 0.0;
        for &t in &temps {
            let n = bose_einstein_occupancy(5e9, t).unwrap().quanta();
            assert!(n > prev, "not increasing in T at {t}");
            prev = n;
        }
        let freqs: Vec<f64> = (1..50).map(|i| 2e8 * i as f64).collect();
        let mut prev = f64::INFINITY;
        for &f in &freqs {
            let n = bose_einstein_occupancy(f, 0.1).unwrap().quanta();
            assert!(n < prev, "not decreasing in f at {f}");
            prev = n;
        }
    }

    #[test]
    fn transmission_matched_coupling_on_resonance_is_one() {
        let r = ResonatorParams::new(TAU * 6.587e9, TAU * 0.6e6, TAU * 0.6e6).unwrap();
        let t = noise_transmission(r.omega0, &r);
        assert!((t - 1.0).abs() < 1e-12, "got {t}");
    }

    #[test]
    fn transmission_zero_without_external_coupling() {
        let r = ResonatorParams::new(TAU * 6.587e9, TAU * 1e6, 0.0).unwrap();
        for k in 0..10 {
            let omega = r.omega0 + (k as f64 - 5.0) * TAU * 1e6;
            assert_eq!(noise_transmission(omega, &r), 0.0);
            assert_eq!(noise_reflection(omega, &r), 1.0);
        }
    }

    #[test]
    fn transmission_halves_one_half_linewidth_off_resonance() {
        // Substituting ω − ω₀ = κ/2 into the Lorentzian doubles the
        // denominator relative to the on-resonance evaluation.
        let r = demo_resonator();
        let on = noise_transmission(r.omega0, &r);
        let off = noise_transmission(r.omega0 + 0.5 * r.kappa(), &r);
        assert!((off - 0.5 * on).abs() < 1e-15 * on, "on={on} off={off}");
    }

    #[test]
    fn reflection_plus_transmission_is_one() {
        let r = demo_resonator();
        for k in 0..200 {
            let omega = r.omega0 + (k as f64 - 100.0) * TAU * 0.05e6;
            let sum = noise_transmission(omega, &r) + noise_reflection(omega, &r);
            assert_eq!(sum, 1.0);
        }
    }

    #[test]
    fn transmission_peaks_on_resonance() {
        let r = demo_resonator();
        let mut best = (0.0, f64::MIN);
        for k in 0..=4000 {
            let omega = r.omega0 + (k as f64 - 2000.0) * TAU * 5e3;
            let t = noise_transmission(omega, &r);
            if t > best.1 {
                best = (omega, t);
            }
        }
        assert_eq!(best.0, r.omega0);
        let half_kappa = 0.5 * r.kappa();
        let expect = r.kappa_i * r.kappa_e / (half_kappa * half_kappa);
        assert!((best.1 - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn coherent_reflection_critical_coupling_absorbs_fully() {
        let r = ResonatorParams::new(TAU * 6.587e9, TAU * 0.6e6, TAU * 0.6e6).unwrap();
        let s = coherent_reflection(r.omega0, &r);
        assert!(s.norm() < 1e-12, "got {s}");
    }

    #[test]
    fn coherent_reflection_far_detuned_is_unity() {
        let r = demo_resonator();
        let s = coherent_reflection(r.omega0 + 1e6 * r.kappa(), &r);
        assert!((s.re - 1.0).abs() < 1e-5);
        assert!(s.im.abs() < 1e-5);
    }

    #[test]
    fn coherent_reflection_overcoupled_phase_flip() {
        let r = ResonatorParams::new(TAU * 6.587e9, 0.0, TAU * 1e6).unwrap();
        let s = coherent_reflection(r.omega0, &r);
        assert!((s.re + 1.0).abs() < 1e-12 && s.im.abs() < 1e-12, "got {s}");
    }

    #[test]
    fn coherent_dip_magnitude_matches_noise_transmission() {
        let r = demo_resonator();
        let mut min = (0.0, f64::MAX);
        for k in 0..=2000 {
            let omega = r.omega0 + (k as f64 - 1000.0) * TAU * 10e3;
            let s2 = coherent_reflection(omega, &r).norm_sqr();
            let t = noise_transmission(omega, &r);
            assert!((1.0 - s2 - t).abs() < 1e-12, "identity broken at {omega}");
            if s2 < min.1 {
                min = (omega, s2);
            }
        }
        assert_eq!(min.0, r.omega0);
    }

    #[test]
    fn resonator_params_validation() {
        assert!(ResonatorParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ResonatorParams::new(1e9, -1.0, 1.0).is_err());
        assert!(ResonatorParams::new(1e9, 0.0, 0.0).is_err());
        assert!(ResonatorParams::new(1e9, 0.0, 1.0).is_ok());
    }
}
