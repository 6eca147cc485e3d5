//! Analysis pipeline: resonance fitting, per-slice occupancy extraction,
//! trace decomposition, multi-exponential decay fits, and power-law fits.

mod decompose;
mod multiexp;
mod powerlaw;
mod resonance;
mod slice;

pub use decompose::{decompose_nidiff, Decomposition};
pub use multiexp::{fit_multiexponential, MultiExpFit};
pub use powerlaw::{fit_powerlaw, PowerLawFit};
pub use resonance::{fit_resonance, ResonanceFit};
pub use slice::{extract_nidiff_trace, fit_noise_slice, NoiseSliceFit};
