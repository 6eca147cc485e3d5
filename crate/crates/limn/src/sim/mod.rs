//! Synthetic-experiment generation: pulse trains, bath dynamics, lock-in
//! filtering, and heat-map / calibration-sweep records.

mod bath;
mod heatmap;
mod lockin;
mod pulse;

pub use bath::{bath_trajectory, BathModel, BathTrajectory, SlowChannel, POWER_REF_W};
pub use heatmap::{
    resonator_trajectory, sub_seed, synthesize_calibration_sweep, synthesize_coherent_heatmap,
    synthesize_heatmap, CoherentHeatMap, NoiseHeatMap, ResonatorResponse, ResonatorTrajectory,
};
pub use lockin::lockin_filter;
pub use pulse::PulseTrain;
