//! Spectral tools for fractional derivatives and weighted dispersive estimates.
//!
//! Functions on the line are sampled on a periodic [`Grid1D`]; every operator
//! is either a Fourier multiplier or a direct singular-integral quadrature.

pub mod error;
pub mod experiments;
pub mod fractional;
pub mod gkdv;
pub mod norms;
pub mod propagators;
pub mod spectral;
pub mod special;

pub use error::{Diagnosed, Error, Result, Warning};
pub use rustfft::num_complex::Complex64;
pub use spectral::{GridFunction, Grid1D, PresetDatum, Spectrum};
