//! Per-time-slice extraction of (n_bg, n_i^diff) from the excess-noise
//! spectrum: s_dev(ω) = n_bg + T(ω)·n_i^diff is linear in both parameters,
//! so each slice is a closed-form two-column least-squares solve.

use nalgebra::{DMatrix, DVector};

use crate::chain::{compute_sdev, ChainCalibration, ExcessNoiseSpectrum};
use crate::error::{Error, Result};
use crate::numfit::linear_least_squares;
use crate::physics::{noise_transmission, ResonatorParams};
use crate::sim::NoiseHeatMap;

/// Relative variation of T(ω) below which the slice design is degenerate.
const MIN_T_VARIATION: f64 = 1e-10;

/// One slice of the extraction: fitted occupancies plus the occupancy
/// bounds the on/off protocol can place on the underlying baths.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NoiseSliceFit {
    /// Frequency-flat background (quanta).
    pub n_bg: f64,
    /// Lorentzian peak amplitude n_i − n_e (quanta).
    pub n_i_diff: f64,
    pub residual_rms: f64,
    /// External-bath occupancy bounds (0, n_bg).
    pub n_e_bounds: (f64, f64),
    /// Intrinsic-bath occupancy bounds (n_i^diff, n_i^diff + n_bg).
    pub n_i_bounds: (f64, f64),
}

/// Closed-form fit of one excess-noise spectrum at known resonator state.
pub fn fit_noise_slice(spectrum: &ExcessNoiseSpectrum, r: &ResonatorParams) -> Result<NoiseSliceFit> {
    let n = spectrum.frequencies.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "slice fit needs at least two frequency points".into(),
        ));
    }
    let transmissions: Vec<f64> = spectrum
        .frequencies
        .iter()
        .map(|&w| noise_transmission(w, r))
        .collect();
    let t_max = transmissions.iter().cloned().fold(f64::MIN, f64::max);
    let t_min = transmissions.iter().cloned().fold(f64::MAX, f64::min);
    if t_max - t_min <= MIN_T_VARIATION * t_max.abs().max(1e-300) {
        return Err(Error::DegenerateDesign { rank: 1, cols: 2 });
    }

    let mut design = Vec::with_capacity(2 * n);
    for &t in &transmissions {
        design.push(1.0);
        design.push(t);
    }
    let design = DMatrix::from_row_slice(n, 2, &design);
    let obs = DVector::from_vec(spectrum.s_dev.clone());
    let solution = linear_least_squares(&design, &obs)?;
    let residual = &design * &solution - &obs;
    let residual_rms = (residual.norm_squared() / n as f64).sqrt();
    let (n_bg, n_i_diff) = (solution[0], solution[1]);
    Ok(NoiseSliceFit {
        n_bg,
        n_i_diff,
        residual_rms,
        n_e_bounds: (0.0, n_bg),
        n_i_bounds: (n_i_diff, n_i_diff + n_bg),
    })
}

/// Run compute_sdev then fit_noise_slice on every time slice of a heat map.
/// `resonances` supplies the per-slice resonator state (from the coherent
/// probe), one entry per time sample.
pub fn extract_nidiff_trace(
    heatmap: &NoiseHeatMap,
    cal: &ChainCalibration,
    resonances: &[ResonatorParams],
) -> Result<Vec<NoiseSliceFit>> {
    if resonances.len() != heatmap.times.len() {
        return Err(Error::InvalidInput(format!(
            "got {} resonator states for {} time slices",
            resonances.len(),
            heatmap.times.len()
        )));
    }
    let mut out = Vec::with_capacity(heatmap.times.len());
    for (i, r) in resonances.iter().enumerate() {
        let spectrum = compute_sdev(
            &heatmap.frequencies,
            &heatmap.power_on[i],
            &heatmap.power_off[i],
            cal,
        )?;
        out.push(fit_noise_slice(&spectrum, r)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numfit::{nonlinear_least_squares, FitOptions, FitProblem};

    const TAU: f64 = std::f64::consts::TAU;

    fn demo_resonator() -> ResonatorParams {
        ResonatorParams::new(TAU * 6.587e9, TAU * 0.4e6, TAU * 0.8e6).unwrap()
    }

    fn synth_spectrum(n_bg: f64, n_i_diff: f64, r: &ResonatorParams) -> ExcessNoiseSpectrum {
        let freqs: Vec<f64> = (0..41)
            .map(|j| r.omega0 + (j as f64 - 20.0) * TAU * 0.25e6)
            .collect();
        let s: Vec<f64> = freqs
            .iter()
            .map(|&w| n_bg + noise_transmission(w, r) * n_i_diff)
            .collect();
        ExcessNoiseSpectrum::new(freqs, s).unwrap()
    }

    #[test]
    fn exact_recovery_of_background_and_peak() {
        // Background level from the published spectra: 0.55 quanta.
        let r = demo_resonator();
        let spectrum = synth_spectrum(0.55, 2.0, &r);
        let fit = fit_noise_slice(&spectrum, &r).unwrap();
        assert!(((fit.n_bg - 0.55) / 0.55).abs() < 1e-9, "n_bg {}", fit.n_bg);
        assert!(((fit.n_i_diff - 2.0) / 2.0).abs() < 1e-9);
        assert!(fit.residual_rms < 1e-12);
        assert_eq!(fit.n_e_bounds, (0.0, fit.n_bg));
        assert_eq!(fit.n_i_bounds, (fit.n_i_diff, fit.n_i_diff + fit.n_bg));
    }

    #[test]
    fn flat_spectrum_gives_zero_peak() {
        let r = demo_resonator();
        let spectrum = synth_spectrum(0.7, 0.0, &r);
        let fit = fit_noise_slice(&spectrum, &r).unwrap();
        assert!(fit.n_i_diff.abs() < 1e-12);
        assert!((fit.n_bg - 0.7).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_iterative_solver() {
        let r = demo_resonator();
        let spectrum = synth_spectrum(0.42, 1.37, &r);
        // Perturb so the fit is not trivially exact.
        let noisy: Vec<f64> = spectrum
            .s_dev
            .iter()
            .enumerate()
            .map(|(k, v)| v + 1e-3 * ((k * 2654435761) % 97) as f64 / 97.0)
            .collect();
        let spectrum = ExcessNoiseSpectrum::new(spectrum.frequencies.clone(), noisy).unwrap();
        let closed = fit_noise_slice(&spectrum, &r).unwrap();

        let transmissions: Vec<f64> = spectrum
            .frequencies
            .iter()
            .map(|&w| noise_transmission(w, &r))
            .collect();
        let problem = FitProblem::new(2, |p: &[f64]| {
            transmissions
                .iter()
                .zip(&spectrum.s_dev)
                .map(|(t, y)| p[0] + p[1] * t - y)
                .collect()
        });
        let iterative = nonlinear_least_squares(&problem, &[0.0, 0.0], &FitOptions::default()).unwrap();
        assert!((closed.n_bg - iterative.parameters[0]).abs() < 1e-8);
        assert!((closed.n_i_diff - iterative.parameters[1]).abs() < 1e-8);
    }

    #[test]
    fn resonance_outside_window_is_degenerate() {
        let r = demo_resonator();
        // Window far above resonance where T(ω) is numerically flat.
        let freqs: Vec<f64> = (0..16)
            .map(|j| r.omega0 + TAU * (5e12 + j as f64 * 1e5))
            .collect();
        let s = vec![0.5; 16];
        let spectrum = ExcessNoiseSpectrum::new(freqs, s).unwrap();
        assert!(matches!(
            fit_noise_slice(&spectrum, &r),
            Err(Error::DegenerateDesign { .. })
        ));
    }
}
