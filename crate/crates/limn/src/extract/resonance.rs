//! Complex one-port reflection fit: recovers (ω₀, κ_i, κ_e) from an S11
//! trace.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numfit::{nonlinear_least_squares, FitOptions, FitProblem};
use crate::physics::{coherent_reflection, ResonatorParams};

/// Minimum |S| contrast below which there is no dip to fit.
const MIN_DIP_CONTRAST: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ResonanceFit {
    pub params: ResonatorParams,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Least-squares fit of the coherent reflection model to `s11`.
///
/// Self-initializes from the |S| minimum and the half-depth width of the
/// absorption dip when no `init` is given; the over/under-coupled branch is
/// picked from the sign of Re S on resonance.
pub fn fit_resonance(
    freqs: &[f64],
    s11: &[Complex64],
    init: Option<ResonatorParams>,
) -> Result<ResonanceFit> {
    if freqs.len() != s11.len() {
        return Err(Error::InvalidInput(format!(
            "got {} frequencies but {} reflection samples",
            freqs.len(),
            s11.len()
        )));
    }
    if freqs.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "resonance fit needs at least 8 points, got {}",
            freqs.len()
        )));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "frequencies must be strictly increasing".into(),
        ));
    }

    let guess = match init {
        Some(p) => p,
        None => initial_guess(freqs, s11)?,
    };

    // Center frequencies on the guess so all three parameters share the
    // linewidth scale; ω₀ enters as a detuning offset.
    let omega_ref = guess.omega0;
    let shifted: Vec<f64> = freqs.iter().map(|f| f - omega_ref).collect();

    let model = |p: &[f64], delta: f64| -> Complex64 {
        let denom = Complex64::new(0.5 * (p[1] + p[2]), delta - p[0]);
        Complex64::new(1.0, 0.0) - p[2] / denom
    };
    let residual = |p: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * shifted.len());
        for (d, s) in shifted.iter().zip(s11) {
            let diff = model(p, *d) - s;
            out.push(diff.re);
            out.push(diff.im);
        }
        out
    };
    let jacobian = |p: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(6 * shifted.len());
        for &d in &shifted {
            let denom = Complex64::new(0.5 * (p[1] + p[2]), d - p[0]);
            let inv2 = 1.0 / (denom * denom);
            // ∂S/∂d0 = −iκ_e/D², ∂S/∂κ_i = κ_e/(2D²), ∂S/∂κ_e = −1/D + κ_e/(2D²)
            let ds_d0 = Complex64::new(0.0, -p[2]) * inv2;
            let ds_ki = 0.5 * p[2] * inv2;
            let ds_ke = -1.0 / denom + 0.5 * p[2] * inv2;
            out.extend_from_slice(&[ds_d0.re, ds_ki.re, ds_ke.re]);
            out.extend_from_slice(&[ds_d0.im, ds_ki.im, ds_ke.im]);
        }
        out
    };

    let problem = FitProblem::new(3, residual).with_jacobian(jacobian);
    let start = [guess.omega0 - omega_ref, guess.kappa_i, guess.kappa_e];
    let fit = nonlinear_least_squares(&problem, &start, &FitOptions::default())?;
    let [d0, kappa_i, kappa_e] = [fit.parameters[0], fit.parameters[1], fit.parameters[2]];
    if kappa_i < 0.0 || kappa_e < 0.0 {
        return Err(Error::FitFailure {
            message: format!(
                "fit wandered to negative coupling (kappa_i={kappa_i:e}, kappa_e={kappa_e:e})"
            ),
            residual_rms: fit.residual_rms,
        });
    }
    Ok(ResonanceFit {
        params: ResonatorParams::new(omega_ref + d0, kappa_i, kappa_e)?,
        residual_rms: fit.residual_rms,
        iterations: fit.iterations,
    })
}

fn initial_guess(freqs: &[f64], s11: &[Complex64]) -> Result<ResonatorParams> {
    let mags: Vec<f64> = s11.iter().map(|s| s.norm()).collect();
    let (i_min, &m_min) = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let m_max = mags.iter().cloned().fold(f64::MIN, f64::max);
    if m_max - m_min < MIN_DIP_CONTRAST * m_max.max(1.0) {
        return Err(Error::FitFailure {
            message: format!(
                "no discernible dip: |S| contrast {:e} below threshold",
                m_max - m_min
            ),
            residual_rms: f64::NAN,
        });
    }
    let omega0 = freqs[i_min];

    // Width of the absorption dip 1 − |S|² at half its peak height gives κ.
    let absorption: Vec<f64> = s11.iter().map(|s| 1.0 - s.norm_sqr()).collect();
    let peak = absorption[i_min];
    let half = 0.5 * peak;
    let mut lo = freqs[0];
    for k in (0..i_min).rev() {
        if absorption[k] <= half {
            lo = freqs[k];
            break;
        }
    }
    let mut hi = freqs[freqs.len() - 1];
    for k in i_min..freqs.len() {
        if absorption[k] <= half {
            hi = freqs[k];
            break;
        }
    }
    let kappa = (hi - lo).max(freqs[1] - freqs[0]);

    // peak = 4κ_iκ_e/κ² with κ_e = κ/2·(1 ± √(1−peak)); the branch follows
    // the sign of Re S on resonance (negative means over-coupled).
    let root = (1.0 - peak).max(0.0).sqrt();
    let kappa_e = if s11[i_min].re < 0.0 {
        0.5 * kappa * (1.0 + root)
    } else {
        0.5 * kappa * (1.0 - root)
    };
    let kappa_e = kappa_e.clamp(1e-6 * kappa, kappa * (1.0 - 1e-9));
    ResonatorParams::new(omega0, kappa - kappa_e, kappa_e)
}
