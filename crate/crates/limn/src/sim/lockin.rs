//! First-order lock-in low-pass filter (discrete exponential smoothing).

use crate::error::{Error, Result};

/// Apply a first-order low-pass with time constant `t_c` to a uniformly
/// sampled trace: y[k] = a·y[k−1] + (1 − a)·x[k] with pole a = exp(−Δt/t_c).
/// DC gain is exactly 1; the state is seeded with the first sample.
pub fn lockin_filter(times: &[f64], values: &[f64], t_c: f64) -> Result<Vec<f64>> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "filter input has {} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if !(t_c.is_finite() && t_c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "time constant must be positive, got {t_c}"
        )));
    }
    if times.len() < 2 {
        return Ok(values.to_vec());
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(Error::InvalidInput("times must be increasing".into()));
    }
    for w in times.windows(2) {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidInput(format!(
                "non-uniform sampling: step {step:e} vs {dt:e}"
            )));
        }
    }
    let pole = (-dt / t_c).exp();
    let feed = 1.0 - pole;
    let mut out = Vec::with_capacity(values.len());
    let mut state = values[0];
    for &x in values {
        state = pole * state + feed * x;
        out.push(state);
    }
    Ok(out)
}
