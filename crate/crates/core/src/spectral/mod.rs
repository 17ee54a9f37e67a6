//! Grids, the unitary centered DFT, Fourier multipliers and preset data.

mod function;
mod grid;
mod preset;
mod transform;

pub use function::{GridFunction, EDGE_DECAY_THRESHOLD, EDGE_FRACTION};
pub use grid::{Grid1D, GridDescriptor};
pub use preset::{sample, sample_at, PresetDatum};
pub use transform::{
    forward_transform, inverse_transform, multiplier_apply, multiplier_apply_with, spectral_derivative,
    MultiplierTable, NyquistPolicy, Spectrum,
};

pub(crate) use transform::{forward_in_place, inverse_in_place};
