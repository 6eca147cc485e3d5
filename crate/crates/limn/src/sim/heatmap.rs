//! Synthetic measurement records: on/off noise heat maps, coherent-probe
//! heat maps, and VTS calibration sweeps.
//!
//! Every record is deterministic under its seed. Each frequency column
//! draws from its own sub-seeded generator, so columns are independent and
//! the output does not depend on evaluation order.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chain::{chain_output_power, CalibrationSweep, ChainCalibration};
use crate::error::{Error, Result};
use crate::physics::{bose_einstein_occupancy, coherent_reflection, noise_transmission, ResonatorParams, HBAR};
use crate::sim::bath::{bath_trajectory, BathModel};
use crate::sim::lockin::lockin_filter;
use crate::sim::pulse::PulseTrain;

/// Linear response of the resonator to the fast-bath occupancy.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResonatorResponse {
    pub base: ResonatorParams,
    /// Frequency pull per quantum of fast-bath occupancy (rad/s, typically
    /// negative).
    pub freq_shift_coeff: f64,
    /// Intrinsic-linewidth broadening per quantum (rad/s, ≥ 0).
    pub linewidth_coeff: f64,
}

/// Time-resolved resonator parameters on the trajectory grid.
pub type ResonatorTrajectory = Vec<ResonatorParams>;

/// ω₀(t) = ω₀ + c_f·n_fast(t), κ_i(t) = κ_i + c_κ·n_fast(t), κ_e constant.
pub fn resonator_trajectory(n_fast: &[f64], rr: &ResonatorResponse) -> Result<ResonatorTrajectory> {
    let mut out = Vec::with_capacity(n_fast.len());
    for (i, &n) in n_fast.iter().enumerate() {
        let kappa_i = rr.base.kappa_i + rr.linewidth_coeff * n;
        if kappa_i < 0.0 {
            return Err(Error::Config(format!(
                "linewidth response drives kappa_i negative ({kappa_i:e}) at sample {i}"
            )));
        }
        out.push(ResonatorParams::new(
            rr.base.omega0 + rr.freq_shift_coeff * n,
            kappa_i,
            rr.base.kappa_e,
        )?);
    }
    Ok(out)
}

/// Time × frequency grid of measured noise power with drive-on/off records.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseHeatMap {
    /// Sample times (s), strictly increasing and uniform.
    pub times: Vec<f64>,
    /// Angular frequencies (rad/s), strictly increasing.
    pub frequencies: Vec<f64>,
    /// Drive-on power, time-major: power_on[i][j] at (times[i], freq[j]).
    pub power_on: Vec<Vec<f64>>,
    /// Drive-off power, same layout.
    pub power_off: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Time × frequency grid of complex reflection snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentHeatMap {
    pub times: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Time-major complex reflection s11[i][j].
    pub s11: Vec<Vec<Complex64>>,
    pub seed: u64,
}

/// Deterministic per-stream seed derivation (splitmix64 finalizer).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn validate_grid(times: &[f64], frequencies: &[f64], pulse: &PulseTrain) -> Result<()> {
    if times.len() < 2 || frequencies.is_empty() {
        return Err(Error::InvalidInput("grid must have at least 2 times and 1 frequency".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid times must be strictly increasing".into()));
    }
    if frequencies.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "grid frequencies must be strictly increasing".into(),
        ));
    }
    let span = times[times.len() - 1] - times[0];
    if span < pulse.period * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "grid span {span:e} s must cover at least one pulse period {:e} s",
            pulse.period
        )));
    }
    Ok(())
}

/// Synthesize the on/off noise heat map.
///
/// For the on record, each grid point evaluates the chain output with the
/// device emission s_out = n_e + T(ω; params(t))·n_i^diff added through the
/// device-plane gain G_sys/L (the VTS-referred calibration under-reports
/// the device-plane gain by the VTS-to-device transmission L, which is why
/// an L = 1 extraction slightly over-estimates occupancies). The off record
/// is the same chain with the drive dark. Each frequency column is lock-in
/// filtered, then Gaussian noise of `noise_sigma` watts is added per sample
/// from a per-column deterministic sub-seed.
pub fn synthesize_heatmap(
    pulse: &PulseTrain,
    model: &BathModel,
    rr: &ResonatorResponse,
    cal: &ChainCalibration,
    times: &[f64],
    frequencies: &[f64],
    t_c: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<NoiseHeatMap> {
    validate_grid(times, frequencies, pulse)?;
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidInput("noise sigma must be non-negative".into()));
    }
    let traj = bath_trajectory(pulse, model, times)?;
    let params = resonator_trajectory(&traj.n_fast, rr)?;
    let n_i_diff = traj.n_i_diff();

    let n_t = times.len();
    let n_f = frequencies.len();
    let base_power = cal.bw * cal.g_sys * HBAR * cal.omega_s * (0.5 + cal.n_sys);
    let sys_scale = cal.bw * cal.g_sys * HBAR * cal.omega_s;
    let dev_scale = sys_scale / cal.attenuation_l;

    let mut power_on = vec![vec![0.0; n_f]; n_t];
    let mut power_off = vec![vec![0.0; n_f]; n_t];
    let mut column = vec![0.0; n_t];
    for j in 0..n_f {
        let omega = frequencies[j];
        for i in 0..n_t {
            let n_e = model.external_share * traj.n_bg[i];
            let delta_n_sys = (1.0 - model.external_share) * traj.n_bg[i];
            let s_out = n_e + noise_transmission(omega, &params[i]) * n_i_diff[i];
            column[i] = base_power + sys_scale * delta_n_sys + dev_scale * s_out;
        }
        let filtered = lockin_filter(times, &column, t_c)?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 2 * j as u64));
        let normal = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for i in 0..n_t {
            let noise = if noise_sigma > 0.0 {
                noise_sigma * normal.sample(&mut rng)
            } else {
                0.0
            };
            power_on[i][j] = filtered[i] + noise;
        }

        // Off record: drive dark, flat chain floor through the same filter.
        let off_column = vec![base_power; n_t];
        let filtered_off = lockin_filter(times, &off_column, t_c)?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 2 * j as u64 + 1));
        for i in 0..n_t {
            let noise = if noise_sigma > 0.0 {
                noise_sigma * normal.sample(&mut rng)
            } else {
                0.0
            };
            power_off[i][j] = filtered_off[i] + noise;
        }
    }

    Ok(NoiseHeatMap {
        times: times.to_vec(),
        frequencies: frequencies.to_vec(),
        power_on,
        power_off,
        seed,
    })
}

/// Synthesize a coherent-probe heat map: complex reflection snapshots of
/// the drive-tracked resonator with additive complex Gaussian noise.
pub fn synthesize_coherent_heatmap(
    pulse: &PulseTrain,
    model: &BathModel,
    rr: &ResonatorResponse,
    times: &[f64],
    frequencies: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<CoherentHeatMap> {
    validate_grid(times, frequencies, pulse)?;
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidInput("noise sigma must be non-negative".into()));
    }
    let traj = bath_trajectory(pulse, model, times)?;
    let params = resonator_trajectory(&traj.n_fast, rr)?;

    let n_t = times.len();
    let n_f = frequencies.len();
    let mut s11 = vec![vec![Complex64::new(0.0, 0.0); n_f]; n_t];
    for j in 0..n_f {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, j as u64));
        let normal = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for (i, row) in s11.iter_mut().enumerate() {
            let clean = coherent_reflection(frequencies[j], &params[i]);
            let noise = if noise_sigma > 0.0 {
                Complex64::new(
                    noise_sigma * normal.sample(&mut rng),
                    noise_sigma * normal.sample(&mut rng),
                )
            } else {
                Complex64::new(0.0, 0.0)
            };
            row[j] = clean + noise;
        }
    }

    Ok(CoherentHeatMap {
        times: times.to_vec(),
        frequencies: frequencies.to_vec(),
        s11,
        seed,
    })
}

/// Forward-evaluate the chain at each VTS temperature, with Gaussian noise.
pub fn synthesize_calibration_sweep(
    true_cal: &ChainCalibration,
    temperatures: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<CalibrationSweep> {
    if temperatures.len() < 2 {
        return Err(Error::InvalidInput(
            "calibration sweep needs at least two temperatures".into(),
        ));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidInput("noise sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut powers = Vec::with_capacity(temperatures.len());
    for &t in temperatures {
        let n_s = bose_einstein_occupancy(true_cal.omega_s / TAU, t)?;
        let n_i = bose_einstein_occupancy(true_cal.omega_i / TAU, t)?;
        let mut p = chain_output_power(n_s, n_i, true_cal);
        if noise_sigma > 0.0 {
            p += noise_sigma * normal.sample(&mut rng);
        }
        powers.push(p);
    }
    CalibrationSweep::new(temperatures.to_vec(), powers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::fit_calibration;
    use crate::sim::bath::SlowChannel;

    fn demo_pulse() -> PulseTrain {
        PulseTrain::new(3.16e-3, 5e-6, 100e-6, 0.0, 20e-6).unwrap()
    }

    fn demo_model() -> BathModel {
        BathModel {
            fast_gain: 1.0,
            fast_exponent: 0.75,
            fast_tau: 60e-9,
            slow_channels: vec![SlowChannel { gain: 0.4, tau: 33e-6 }],
            slow_exponent: 0.3,
            bg_gain: 1.5,
            bg_exponent: 0.82,
            bg_tau: 100.0,
            external_share: 0.5,
        }
    }

    fn demo_rr() -> ResonatorResponse {
        let base = ResonatorParams::new(TAU * 6.587e9, TAU * 0.4e6, TAU * 0.8e6).unwrap();
        ResonatorResponse {
            base,
            freq_shift_coeff: -TAU * 0.5e6,
            linewidth_coeff: TAU * 0.1e6,
        }
    }

    fn demo_cal() -> ChainCalibration {
        ChainCalibration::new(1e9, 5.0, 1e5, TAU * 6.587e9, TAU * 7.413e9, 1.0).unwrap()
    }

    fn demo_grid() -> (Vec<f64>, Vec<f64>) {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1e-6).collect();
        let f0 = TAU * 6.587e9;
        let freqs: Vec<f64> = (0..21).map(|j| f0 + (j as f64 - 10.0) * TAU * 0.5e6).collect();
        (times, freqs)
    }

    #[test]
    fn zero_drive_makes_on_equal_off() {
        let mut pulse = demo_pulse();
        pulse.peak_power = 0.0;
        let (times, freqs) = demo_grid();
        let map = synthesize_heatmap(
            &pulse,
            &demo_model(),
            &demo_rr(),
            &demo_cal(),
            &times,
            &freqs,
            1e-6,
            0.0,
            7,
        )
        .unwrap();
        assert_eq!(map.power_on, map.power_off);
    }

    #[test]
    fn same_seed_reproduces_bit_identical_maps() {
        let (times, freqs) = demo_grid();
        let a = synthesize_heatmap(
            &demo_pulse(),
            &demo_model(),
            &demo_rr(),
            &demo_cal(),
            &times,
            &freqs,
            1e-6,
            5e-12,
            42,
        )
        .unwrap();
        let b = synthesize_heatmap(
            &demo_pulse(),
            &demo_model(),
            &demo_rr(),
            &demo_cal(),
            &times,
            &freqs,
            1e-6,
            5e-12,
            42,
        )
        .unwrap();
        assert_eq!(a, b);
        let c = synthesize_heatmap(
            &demo_pulse(),
            &demo_model(),
            &demo_rr(),
            &demo_cal(),
            &times,
            &freqs,
            1e-6,
            5e-12,
            43,
        )
        .unwrap();
        assert_ne!(a.power_on, c.power_on);
    }

    #[test]
    fn pulse_on_resonance_downshifts_and_broadens() {
        // Mirrors the published heat-map configuration: 5 dBm peak, 5 µs
        // width; the drive-on spectrum peaks below the dark resonance.
        let (times, freqs) = demo_grid();
        let cal = demo_cal();
        let map = synthesize_heatmap(
            &demo_pulse(),
            &demo_model(),
            &demo_rr(),
            &cal,
            &times,
            &freqs,
            0.2e-6,
            0.0,
            1,
        )
        .unwrap();
        let argmax = |row: &[f64]| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        // Mid-pulse slice (pulse on 20–25 µs) vs late off slice.
        let i_on = times.iter().position(|&t| t >= 23e-6).unwrap();
        let i_off = times.iter().position(|&t| t >= 90e-6).unwrap();
        let excess_on: Vec<f64> = (0..freqs.len())
            .map(|j| map.power_on[i_on][j] - map.power_off[i_on][j])
            .collect();
        let excess_off: Vec<f64> = (0..freqs.len())
            .map(|j| map.power_on[i_off][j] - map.power_off[i_off][j])
            .collect();
        assert!(argmax(&excess_on) < argmax(&excess_off), "no downshift");
    }

    #[test]
    fn coherent_map_zero_drive_slices_identical() {
        let mut pulse = demo_pulse();
        pulse.peak_power = 0.0;
        let (times, freqs) = demo_grid();
        let map =
            synthesize_coherent_heatmap(&pulse, &demo_model(), &demo_rr(), &times, &freqs, 0.0, 3)
                .unwrap();
        for row in &map.s11 {
            assert_eq!(row, &map.s11[0]);
        }
    }

    #[test]
    fn coherent_map_pulse_on_minimum_sits_at_shifted_resonance() {
        let (times, freqs) = demo_grid();
        let rr = demo_rr();
        let model = demo_model();
        let pulse = demo_pulse();
        let map = synthesize_coherent_heatmap(&pulse, &model, &rr, &times, &freqs, 0.0, 3).unwrap();
        let i_on = times.iter().position(|&t| t >= 23e-6).unwrap();
        let argmin = map.s11[i_on]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        // Expected shift from the steady fast occupancy.
        let n_fast = model.fast_gain * (pulse.peak_power / 1e-3).powf(model.fast_exponent);
        let expect = rr.base.omega0 + rr.freq_shift_coeff * n_fast;
        let grid_step = freqs[1] - freqs[0];
        assert!((freqs[argmin] - expect).abs() <= grid_step);
    }

    #[test]
    fn coherent_map_seed_reproducible() {
        let (times, freqs) = demo_grid();
        let a = synthesize_coherent_heatmap(
            &demo_pulse(),
            &demo_model(),
            &demo_rr(),
            &times,
            &freqs,
            1e-3,
            11,
        )
        .unwrap();
        let b = synthesize_coherent_heatmap(
            &demo_pulse(),
            &demo_model(),
            &demo_rr(),
            &times,
            &freqs,
            1e-3,
            11,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_shorter_than_period_rejected() {
        let pulse = demo_pulse();
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1e-6).collect();
        let freqs = vec![TAU * 6.587e9];
        assert!(matches!(
            synthesize_heatmap(
                &pulse,
                &demo_model(),
                &demo_rr(),
                &demo_cal(),
                &times,
                &freqs,
                1e-6,
                0.0,
                0,
            ),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn noiseless_sweep_round_trips_calibration() {
        let truth = demo_cal();
        let temps = [0.060, 0.100, 0.200, 0.400, 0.800];
        let sweep = synthesize_calibration_sweep(&truth, &temps, 0.0, 5).unwrap();
        let fit = fit_calibration(&sweep, truth.bw, truth.omega_s, truth.omega_i).unwrap();
        assert!(((fit.calibration.g_sys - truth.g_sys) / truth.g_sys).abs() < 1e-10);
        assert!(((fit.calibration.n_sys - truth.n_sys) / truth.n_sys).abs() < 1e-10);
    }

    #[test]
    fn constant_temperature_sweep_fails_in_fit() {
        let truth = demo_cal();
        let sweep = synthesize_calibration_sweep(&truth, &[0.1, 0.1, 0.1], 0.0, 5).unwrap();
        assert!(matches!(
            fit_calibration(&sweep, truth.bw, truth.omega_s, truth.omega_i),
            Err(Error::DegenerateSweep(_))
        ));
    }

    #[test]
    fn monotone_temperatures_give_monotone_powers() {
        let truth = demo_cal();
        let temps: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
        let sweep = synthesize_calibration_sweep(&truth, &temps, 0.0, 5).unwrap();
        assert!(sweep.powers.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn negative_kappa_trajectory_is_config_error() {
        let rr = ResonatorResponse {
            base: ResonatorParams::new(TAU * 6.587e9, TAU * 0.1e6, TAU * 0.8e6).unwrap(),
            freq_shift_coeff: 0.0,
            linewidth_coeff: -TAU * 1e6,
        };
        let n_fast = vec![0.0, 1.0, 2.0];
        assert!(matches!(
            resonator_trajectory(&n_fast, &rr),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_fast_occupancy_keeps_base_resonator() {
        let rr = demo_rr();
        let traj = resonator_trajectory(&[0.0; 5], &rr).unwrap();
        for p in traj {
            assert_eq!(p, rr.base);
        }
    }

    #[test]
    fn resonator_response_is_linear_in_occupancy() {
        let rr = demo_rr();
        let traj = resonator_trajectory(&[1.0, 2.0], &rr).unwrap();
        let shift1 = traj[0].omega0 - rr.base.omega0;
        let shift2 = traj[1].omega0 - rr.base.omega0;
        assert!((shift2 - 2.0 * shift1).abs() < 1e-6 * shift1.abs());
        let broad1 = traj[0].kappa_i - rr.base.kappa_i;
        let broad2 = traj[1].kappa_i - rr.base.kappa_i;
        assert!((broad2 - 2.0 * broad1).abs() < 1e-6 * broad1.abs());
    }
}
