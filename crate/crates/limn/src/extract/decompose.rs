//! Split an n_i^diff time trace into fast, slow-off, and slow-on parts.
//!
//! The slow-off level is the mean of the trace just before the drive turns
//! on; the pulse-on segment (with filter-settling windows excluded around
//! both edges) is fit with a line and extrapolated back to the on-edge for
//! the after-laser value and forward to the pulse midpoint for the mean
//! intrinsic level. The identity
//! n_fast + n_slow_off = n_i^diff|after-laser holds by construction.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Decomposition {
    /// Fast-responding component (quanta).
    pub n_fast: f64,
    /// Residual slow component just before the drive turns on (quanta).
    pub n_slow_off: f64,
    /// Slow buildup across the pulse-on period (quanta).
    pub n_slow_on: f64,
    /// Linear extrapolation of the on-segment to the on-edge (quanta).
    pub after_laser: f64,
    /// Linear extrapolation to the pulse midpoint (quanta).
    pub midpulse: f64,
    pub t_on: f64,
    pub t_off: f64,
}

pub fn decompose_nidiff(
    times: &[f64],
    values: &[f64],
    t_on: f64,
    t_off: f64,
    exclusion_window: f64,
) -> Result<Decomposition> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "trace has {} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("trace times must be strictly increasing".into()));
    }
    if !(t_on < t_off) {
        return Err(Error::InvalidInput(format!(
            "need t_on < t_off, got {t_on} and {t_off}"
        )));
    }
    if exclusion_window < 0.0 {
        return Err(Error::InvalidInput("exclusion window must be non-negative".into()));
    }
    if t_off - t_on <= 2.0 * exclusion_window {
        return Err(Error::InsufficientData(format!(
            "pulse-on span {:e} s is shorter than twice the exclusion window {:e} s",
            t_off - t_on,
            exclusion_window
        )));
    }

    let baseline: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t <= t_on - exclusion_window)
        .map(|(_, &v)| v)
        .collect();
    if baseline.is_empty() {
        return Err(Error::InsufficientData(
            "no pre-pulse samples outside the exclusion window".into(),
        ));
    }
    let n_slow_off = baseline.iter().sum::<f64>() / baseline.len() as f64;

    let on: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= t_on + exclusion_window && t <= t_off - exclusion_window)
        .map(|(&t, &v)| (t, v))
        .collect();
    if on.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} usable pulse-on samples after edge exclusion",
            on.len()
        )));
    }

    // Least-squares line through the retained on-segment, centered for
    // numerical stability.
    let n = on.len() as f64;
    let t_mean = on.iter().map(|(t, _)| t).sum::<f64>() / n;
    let v_mean = on.iter().map(|(_, v)| v).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stv = 0.0;
    for (t, v) in &on {
        let dt = t - t_mean;
        stt += dt * dt;
        stv += dt * (v - v_mean);
    }
    let slope = if stt > 0.0 { stv / stt } else { 0.0 };
    let after_laser = v_mean + slope * (t_on - t_mean);
    let midpulse = v_mean + slope * (0.5 * (t_on + t_off) - t_mean);

    let n_fast = after_laser - n_slow_off;
    let n_slow_on = midpulse - after_laser;

    Ok(Decomposition {
        n_fast,
        n_slow_off,
        n_slow_on,
        after_laser,
        midpulse,
        t_on,
        t_off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trace_decomposes_to_zero() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.1e-6).collect();
        let values = vec![0.0; 200];
        let d = decompose_nidiff(&times, &values, 5e-6, 12e-6, 1e-6).unwrap();
        assert_eq!(d.n_fast, 0.0);
        assert_eq!(d.n_slow_off, 0.0);
        assert_eq!(d.n_slow_on, 0.0);
    }

    #[test]
    fn identity_holds_by_construction() {
        // Piecewise trace: baseline 0.2, jump to 1.0 at t_on, slope up.
        let times: Vec<f64> = (0..300).map(|i| i as f64 * 0.1e-6).collect();
        let t_on = 10e-6;
        let t_off = 22e-6;
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                if t < t_on {
                    0.2
                } else if t < t_off {
                    1.0 + 3e4 * (t - t_on)
                } else {
                    0.3
                }
            })
            .collect();
        let d = decompose_nidiff(&times, &values, t_on, t_off, 1e-6).unwrap();
        let drift = (d.n_fast + d.n_slow_off - d.after_laser).abs();
        assert!(drift <= 1e-12 * d.after_laser.abs().max(1.0));
        assert!((d.n_slow_off - 0.2).abs() < 1e-9);
        assert!((d.after_laser - 1.0).abs() < 1e-6);
        assert!((d.n_fast - 0.8).abs() < 1e-6);
        // Midpulse of the linear ramp: 1.0 + slope·(t_off − t_on)/2.
        assert!((d.n_slow_on - 3e4 * 6e-6).abs() < 1e-6);
    }

    #[test]
    fn short_pulse_on_segment_is_insufficient() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1e-6).collect();
        let values = vec![0.0; 100];
        assert!(matches!(
            decompose_nidiff(&times, &values, 5e-6, 6e-6, 1e-6),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn missing_baseline_is_insufficient() {
        let times: Vec<f64> = (0..100).map(|i| 10e-6 + i as f64 * 0.1e-6).collect();
        let values = vec![0.0; 100];
        // t_on − window falls before the first sample.
        assert!(matches!(
            decompose_nidiff(&times, &values, 10.5e-6, 18e-6, 1e-6),
            Err(Error::InsufficientData(_))
        ));
    }
}
