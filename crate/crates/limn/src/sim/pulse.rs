//! Periodic trapezoidal optical drive waveform.

use crate::error::{Error, Result};

/// Periodic optical pulse train.
///
/// One period holds a trapezoid whose base runs from `delay` to
/// `delay + width`: a linear ramp of `edge_time` up to `peak_power`, a flat
/// top, and a matching ramp down. With `edge_time = 0` the pulse is an
/// exact rectangle over `[delay, delay + width)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseTrain {
    /// Peak optical power (W).
    pub peak_power: f64,
    /// Pulse base duration, ramp start to ramp end (s).
    pub width: f64,
    /// Repetition period (s).
    pub period: f64,
    /// Rise/fall ramp duration (s).
    pub edge_time: f64,
    /// Offset of the ramp start within each period (s).
    pub delay: f64,
}

impl PulseTrain {
    pub fn new(peak_power: f64, width: f64, period: f64, edge_time: f64, delay: f64) -> Result<Self> {
        for (name, v) in [
            ("peak_power", peak_power),
            ("width", width),
            ("period", period),
            ("edge_time", edge_time),
            ("delay", delay),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("pulse {name} must be finite")));
            }
        }
        if peak_power < 0.0 {
            return Err(Error::InvalidInput(format!(
                "peak power must be non-negative, got {peak_power}"
            )));
        }
        if !(width > 0.0 && width < period) {
            return Err(Error::InvalidInput(format!(
                "need 0 < width < period, got width={width}, period={period}"
            )));
        }
        if edge_time < 0.0 || edge_time >= width {
            return Err(Error::InvalidInput(format!(
                "need 0 <= edge_time < width, got edge_time={edge_time}, width={width}"
            )));
        }
        if delay < 0.0 || delay + width > period {
            return Err(Error::InvalidInput(format!(
                "pulse must fit inside one period: delay={delay}, width={width}, period={period}"
            )));
        }
        Ok(PulseTrain {
            peak_power,
            width,
            period,
            edge_time,
            delay,
        })
    }

    pub fn duty_cycle(&self) -> f64 {
        self.width / self.period
    }

    /// Period-averaged power; P_peak·(width − edge_time)/period for the
    /// trapezoid, reducing to P_peak·duty for a rectangle.
    pub fn average_power(&self) -> f64 {
        self.peak_power * (self.width - self.edge_time) / self.period
    }

    /// Instantaneous power at time `t` ≥ 0 (W).
    pub fn waveform(&self, t: f64) -> f64 {
        let phase = (t - self.delay).rem_euclid(self.period);
        if phase >= self.width {
            return 0.0;
        }
        if self.edge_time == 0.0 {
            return self.peak_power;
        }
        let shape = (phase / self.edge_time)
            .min((self.width - phase) / self.edge_time)
            .min(1.0);
        self.peak_power * shape.max(0.0)
    }

    /// One-sided drive values at the ends of a segment containing no pulse
    /// vertex. For rectangles the waveform is piecewise constant with jump
    /// discontinuities at the vertices, so both ends take the midpoint
    /// value; trapezoids are continuous and evaluate directly.
    pub(crate) fn segment_endpoints(&self, start: f64, end: f64) -> (f64, f64) {
        if self.edge_time == 0.0 {
            let mid = self.waveform(0.5 * (start + end));
            (mid, mid)
        } else {
            (self.waveform(start), self.waveform(end))
        }
    }

    /// Vertex times of the waveform (ramp corners and pulse ends) strictly
    /// inside `(a, b)`, in increasing order. Ramps are additionally
    /// subdivided so a power-law nonlinearity applied to the waveform stays
    /// well approximated by a piecewise-linear function.
    pub(crate) fn breakpoints_in(&self, a: f64, b: f64, ramp_subdiv: usize) -> Vec<f64> {
        let mut marks = Vec::new();
        let e = self.edge_time;
        let w = self.width;
        let mut offsets = vec![0.0, w];
        if e > 0.0 {
            let nseg = ramp_subdiv.max(1);
            for s in 0..=nseg {
                let frac = s as f64 / nseg as f64;
                offsets.push(e * frac);
                offsets.push(w - e * frac);
            }
        }
        offsets.sort_by(|x, y| x.partial_cmp(y).unwrap());
        offsets.dedup();

        let first_period = ((a - self.delay) / self.period).floor() as i64 - 1;
        let last_period = ((b - self.delay) / self.period).ceil() as i64 + 1;
        for k in first_period..=last_period {
            let base = self.delay + k as f64 * self.period;
            for &off in &offsets {
                let t = base + off;
                if t > a && t < b {
                    marks.push(t);
                }
            }
        }
        marks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        marks.dedup();
        marks
    }
}
