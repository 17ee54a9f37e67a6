use serde::{Deserialize, Serialize};

use super::function::GridFunction;
use super::grid::Grid1D;
use crate::error::{Diagnosed, Error, Result};

/// Analytic initial data sampled onto a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PresetDatum {
    /// `amplitude * exp(-(x - center)^2 / (2 width^2))`
    Gaussian {
        amplitude: f64,
        width: f64,
        center: f64,
    },
    /// `amplitude * sech((x - speed t) / scale)`, sampled at `t = 0`.
    Sech {
        amplitude: f64,
        scale: f64,
        speed: f64,
    },
    /// `cos(xi_mode x)` with `xi_mode = 2 pi mode / L`.
    Cosine { mode: i64 },
    Zero,
}

impl PresetDatum {
    pub fn gaussian(amplitude: f64, width: f64, center: f64) -> Self {
        PresetDatum::Gaussian {
            amplitude,
            width,
            center,
        }
    }

    pub fn sech(amplitude: f64, scale: f64, speed: f64) -> Self {
        PresetDatum::Sech {
            amplitude,
            scale,
            speed,
        }
    }

    /// Travelling wave of `u_t + u_xxx + u^2 u_x = 0` with speed `c > 0`:
    /// amplitude `sqrt(6c)`, scale `1/sqrt(c)`.
    pub fn mkdv_solitary_wave(speed: f64) -> Self {
        PresetDatum::Sech {
            amplitude: (6.0 * speed).sqrt(),
            scale: 1.0 / speed.sqrt(),
            speed,
        }
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        match *self {
            PresetDatum::Gaussian {
                amplitude,
                width,
                center,
            } => {
                finite("amplitude", amplitude)?;
                finite("center", center)?;
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::invalid("width", width, "gaussian width must be positive"));
                }
            }
            PresetDatum::Sech {
                amplitude,
                scale,
                speed,
            } => {
                finite("amplitude", amplitude)?;
                finite("speed", speed)?;
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::invalid("scale", scale, "sech scale must be positive"));
                }
            }
            PresetDatum::Cosine { mode } => {
                if mode.unsigned_abs() as usize >= grid.n() / 2 {
                    return Err(Error::invalid("mode", mode as f64, "cosine mode must satisfy |mode| < n/2"));
                }
            }
            PresetDatum::Zero => {}
        }
        Ok(())
    }

    /// Value at `(x, t)`; only the sech preset moves (rigidly, at its speed).
    pub fn evaluate(&self, x: f64, t: f64, grid: &Grid1D) -> f64 {
        match *self {
            PresetDatum::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let z = (x - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            PresetDatum::Sech {
                amplitude,
                scale,
                speed,
            } => amplitude / ((x - speed * t) / scale).cosh(),
            PresetDatum::Cosine { mode } => (mode as f64 * grid.dxi() * x).cos(),
            PresetDatum::Zero => 0.0,
        }
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must be finite"))
    }
}

/// Samples a preset, attaching a wrap-around warning when it has not decayed at the edges.
pub fn sample(preset: &PresetDatum, grid: &Grid1D) -> Result<Diagnosed<GridFunction>> {
    preset.validate(grid)?;
    let f = GridFunction::from_fn(*grid, |x| preset.evaluate(x, 0.0, grid));
    let warning = f.edge_warning("sample");
    Ok(Diagnosed::with(f, warning))
}

/// Samples the exact travelling profile at time `t`.
pub fn sample_at(preset: &PresetDatum, grid: &Grid1D, t: f64) -> Result<GridFunction> {
    preset.validate(grid)?;
    Ok(GridFunction::from_fn(*grid, |x| preset.evaluate(x, t, grid)))
}
