//! Thermal-bath occupancy dynamics under pulsed optical drive.
//!
//! Each bath channel is a Hammerstein model: the static nonlinearity
//! u(t) = (P(t)/1 mW)^exponent feeds a first-order relaxation
//! dn/dt = (gain·u − n)/τ. Integration is exact per piecewise-linear drive
//! segment (the analytic first-order response), so no step-size tuning
//! enters the accuracy budget; power-law ramps are subdivided internally
//! to keep the piecewise-linear approximation of u tight.
//!
//! Trajectories start from the periodic steady state — the drive is assumed
//! to have been running long before the recorded window, matching the
//! repeated-pulse measurement protocol. n_bg is driven by the running
//! period-average of the optical power through its own very slow channel,
//! so over a steady pulse train it is constant in time.

use crate::error::{Error, Result};
use crate::sim::pulse::PulseTrain;

/// Power-law reference scale: gains are quanta at 1 mW drive.
pub const POWER_REF_W: f64 = 1e-3;

/// Internal subdivision of each ramp for piecewise-linear drive segments.
const RAMP_SUBDIV: usize = 16;

/// One slow intrinsic-bath relaxation channel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SlowChannel {
    /// Steady occupancy at 1 mW continuous drive (quanta).
    pub gain: f64,
    /// Relaxation time (s).
    pub tau: f64,
}

/// Generator parameters for the fast, slow, and background bath channels.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BathModel {
    /// Fast-channel steady occupancy at 1 mW (quanta).
    pub fast_gain: f64,
    /// Fast-channel peak-power exponent.
    pub fast_exponent: f64,
    /// Fast-channel relaxation time (s).
    pub fast_tau: f64,
    pub slow_channels: Vec<SlowChannel>,
    /// Common average-power exponent of the slow channels.
    pub slow_exponent: f64,
    /// Background steady occupancy at 1 mW average power (quanta).
    pub bg_gain: f64,
    pub bg_exponent: f64,
    /// Background relaxation time (s); must exceed the simulated span.
    pub bg_tau: f64,
    /// Share of n_bg attributed to the external bath n_e; the remainder is
    /// the downstream added-noise change Δn_sys.
    pub external_share: f64,
}

impl BathModel {
    pub fn validate(&self) -> Result<()> {
        let gains_ok = self.fast_gain >= 0.0
            && self.bg_gain >= 0.0
            && self.slow_channels.iter().all(|c| c.gain >= 0.0);
        if !gains_ok {
            return Err(Error::Config("bath gains must be non-negative".into()));
        }
        let taus_ok = self.fast_tau > 0.0
            && self.bg_tau > 0.0
            && self.slow_channels.iter().all(|c| c.tau > 0.0);
        if !taus_ok {
            return Err(Error::Config("bath relaxation times must be positive".into()));
        }
        if let Some(min_slow) = self
            .slow_channels
            .iter()
            .map(|c| c.tau)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if self.fast_tau >= min_slow {
                return Err(Error::Config(format!(
                    "fast_tau {} must be below the shortest slow tau {}",
                    self.fast_tau, min_slow
                )));
            }
        }
        let exps_ok = self.fast_exponent > 0.0 && self.slow_exponent > 0.0 && self.bg_exponent > 0.0;
        if !exps_ok {
            return Err(Error::Config("bath exponents must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.external_share) {
            return Err(Error::Config(format!(
                "external share must lie in [0, 1], got {}",
                self.external_share
            )));
        }
        Ok(())
    }
}

/// Per-channel occupancy traces on the caller's time grid.
#[derive(Debug, Clone)]
pub struct BathTrajectory {
    pub times: Vec<f64>,
    pub n_fast: Vec<f64>,
    /// Sum over slow channels.
    pub n_slow: Vec<f64>,
    /// Individual slow-channel traces, same order as the model.
    pub n_slow_channels: Vec<Vec<f64>>,
    pub n_bg: Vec<f64>,
}

impl BathTrajectory {
    /// n_i^diff(t) = n_fast(t) + Σ slow channels.
    pub fn n_i_diff(&self) -> Vec<f64> {
        self.n_fast
            .iter()
            .zip(&self.n_slow)
            .map(|(f, s)| f + s)
            .collect()
    }
}

/// Exact response of τ·n' + n = g·u(t) over one segment where u is linear
/// from `u0` to `u1` across `dt`.
fn propagate(n0: f64, gain: f64, tau: f64, u0: f64, u1: f64, dt: f64) -> f64 {
    if dt == 0.0 {
        return n0;
    }
    let slope = (u1 - u0) / dt;
    let decay = (-dt / tau).exp();
    let particular0 = gain * u0 - tau * gain * slope;
    particular0 + gain * slope * dt + (n0 - particular0) * decay
}

/// Merged integration grid: caller sample times plus pulse vertices.
/// `sample_of[k]` is Some(i) when breakpoint k coincides with times[i].
struct SegmentGrid {
    points: Vec<f64>,
    sample_of: Vec<Option<usize>>,
}

fn build_grid(pulse: &PulseTrain, times: &[f64]) -> SegmentGrid {
    let a = times[0];
    let b = times[times.len() - 1];
    let vertices = pulse.breakpoints_in(a, b, RAMP_SUBDIV);
    let mut points = Vec::with_capacity(times.len() + vertices.len());
    let mut sample_of = Vec::with_capacity(times.len() + vertices.len());
    let mut ti = 0;
    let mut vi = 0;
    while ti < times.len() || vi < vertices.len() {
        if vi >= vertices.len() || (ti < times.len() && times[ti] <= vertices[vi]) {
            if ti < times.len() && vi < vertices.len() && times[ti] == vertices[vi] {
                vi += 1;
            }
            points.push(times[ti]);
            sample_of.push(Some(ti));
            ti += 1;
        } else {
            points.push(vertices[vi]);
            sample_of.push(None);
            vi += 1;
        }
    }
    SegmentGrid { points, sample_of }
}

/// Advance one channel across the grid, writing values at sample points.
fn integrate_channel(
    pulse: &PulseTrain,
    gain: f64,
    tau: f64,
    exponent: f64,
    n_init: f64,
    grid: &SegmentGrid,
    out: &mut [f64],
) {
    let mut n = n_init;
    if let Some(i) = grid.sample_of[0] {
        out[i] = n;
    }
    for k in 1..grid.points.len() {
        let (s, e) = (grid.points[k - 1], grid.points[k]);
        let (p0, p1) = pulse.segment_endpoints(s, e);
        let u0 = drive(p0, exponent);
        let u1 = drive(p1, exponent);
        n = propagate(n, gain, tau, u0, u1, e - s);
        if let Some(i) = grid.sample_of[k] {
            out[i] = n;
        }
    }
}

fn drive(power_w: f64, exponent: f64) -> f64 {
    if power_w <= 0.0 {
        0.0
    } else {
        (power_w / POWER_REF_W).powf(exponent)
    }
}

/// Occupancy of a channel in periodic steady state, evaluated at the pulse
/// phase of time `t0`. Obtained from one exact period of forced response B
/// starting from zero: n* = B/(1 − e^(−T/τ)).
fn periodic_steady_state(pulse: &PulseTrain, gain: f64, tau: f64, exponent: f64, t0: f64) -> f64 {
    if pulse.peak_power == 0.0 || gain == 0.0 {
        return 0.0;
    }
    let period_times = [t0, t0 + pulse.period];
    let grid = build_grid(pulse, &period_times);
    let mut out = [0.0; 2];
    integrate_channel(pulse, gain, tau, exponent, 0.0, &grid, &mut out);
    let forced = out[1];
    let denom = -(-pulse.period / tau).exp_m1();
    forced / denom
}

/// Simulate all bath channels on `times` (strictly increasing, seconds).
pub fn bath_trajectory(pulse: &PulseTrain, model: &BathModel, times: &[f64]) -> Result<BathTrajectory> {
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("time grid must be finite".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }
    model.validate()?;
    let span = times[times.len() - 1] - times[0];
    if model.bg_tau <= span {
        return Err(Error::Config(format!(
            "bg_tau {} must exceed the simulated span {}",
            model.bg_tau, span
        )));
    }

    let grid = build_grid(pulse, times);
    let n = times.len();

    let mut n_fast = vec![0.0; n];
    let fast_init = periodic_steady_state(pulse, model.fast_gain, model.fast_tau, model.fast_exponent, times[0]);
    integrate_channel(
        pulse,
        model.fast_gain,
        model.fast_tau,
        model.fast_exponent,
        fast_init,
        &grid,
        &mut n_fast,
    );

    let mut n_slow_channels = Vec::with_capacity(model.slow_channels.len());
    for ch in &model.slow_channels {
        let mut trace = vec![0.0; n];
        let init = periodic_steady_state(pulse, ch.gain, ch.tau, model.slow_exponent, times[0]);
        integrate_channel(pulse, ch.gain, ch.tau, model.slow_exponent, init, &grid, &mut trace);
        n_slow_channels.push(trace);
    }
    let mut n_slow = vec![0.0; n];
    for trace in &n_slow_channels {
        for (acc, v) in n_slow.iter_mut().zip(trace) {
            *acc += v;
        }
    }

    // The background channel sees the running period-average of the drive,
    // which is constant for a steady train, so at periodic steady state the
    // trace sits at its fixed point.
    let bg_level = model.bg_gain * drive(pulse.average_power(), model.bg_exponent);
    let n_bg = vec![bg_level; n];

    Ok(BathTrajectory {
        times: times.to_vec(),
        n_fast,
        n_slow,
        n_slow_channels,
        n_bg,
    })
}
