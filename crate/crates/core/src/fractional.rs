//! Fractional derivatives: Riesz and Bessel multipliers, the Stein singular
//! integral, and the Hilbert transform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{forward_transform, inverse_transform, GridFunction, MultiplierTable, NyquistPolicy};
use crate::special::{periodized_kernel, stein_constant};
use crate::Complex64;

/// Mean coefficients below this (relative to the largest coefficient) count as zero.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// `D^s f = (|xi|^s f^)^v`. The mean mode is kept for `s = 0`, zeroed otherwise.
pub fn riesz_derivative(f: &GridFunction, s: f64) -> Result<GridFunction> {
    if !s.is_finite() {
        return Err(Error::invalid("s", s, "order must be finite"));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    let mut spec = forward_transform(f);
    let zero = spec.grid().zero_index();
    if s < 0.0 {
        let top = spec.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let mean = spec.coeffs()[zero].norm();
        if mean > MEAN_TOLERANCE * top {
            return Err(Error::NegativeOrderOnNonzeroMean {
                order: s,
                mean: mean / top,
            });
        }
    }
    let table = MultiplierTable::real(*f.grid(), |xi| if xi == 0.0 { 0.0 } else { xi.abs().powf(s) }, NyquistPolicy::Symmetrize)?;
    spec = table.apply_spectrum(&spec)?;
    Ok(inverse_transform(&spec))
}

/// `J^s f = ((1 + xi^2)^{s/2} f^)^v`.
pub fn bessel_derivative(f: &GridFunction, s: f64) -> Result<GridFunction> {
    if !s.is_finite() {
        return Err(Error::invalid("s", s, "order must be finite"));
    }
    MultiplierTable::real(*f.grid(), |xi| (1.0 + xi * xi).powf(0.5 * s), NyquistPolicy::Symmetrize)?.apply(f)
}

/// `H f = (-i sgn(xi) f^)^v`; the mean and Nyquist modes are annihilated.
pub fn hilbert_transform(f: &GridFunction) -> Result<GridFunction> {
    MultiplierTable::new(
        *f.grid(),
        |xi| Complex64::new(0.0, -xi.signum() * (xi != 0.0) as u8 as f64),
        NyquistPolicy::Symmetrize,
    )?
    .apply(f)
}

/// Normalizing constant of the Stein derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum SteinNormalization {
    /// Closed-form constant from [`stein_constant`].
    Formula,
    /// Constant fitted against the Riesz multiplier.
    Calibrated(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinKernelSpec {
    pub alpha: f64,
    /// Principal-value radius; must not exceed the grid spacing.
    pub epsilon: f64,
    pub normalization: SteinNormalization,
}

impl SteinKernelSpec {
    /// Formula normalization with the truncation radius at one grid spacing.
    pub fn formula(alpha: f64, dx: f64) -> Self {
        Self {
            alpha,
            epsilon: dx,
            normalization: SteinNormalization::Formula,
        }
    }

    pub fn calibrated(alpha: f64, dx: f64, c_alpha: f64) -> Self {
        Self {
            alpha,
            epsilon: dx,
            normalization: SteinNormalization::Calibrated(c_alpha),
        }
    }

    pub fn c_alpha(&self) -> f64 {
        match self.normalization {
            SteinNormalization::Formula => stein_constant(self.alpha),
            SteinNormalization::Calibrated(c) => c,
        }
    }

    fn validate(&self, dx: f64) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.epsilon > 0.0 && self.epsilon <= dx * (1.0 + 1e-12)) {
            return Err(Error::invalid("epsilon", self.epsilon, "truncation radius must lie in (0, dx]"));
        }
        if let SteinNormalization::Calibrated(c) = self.normalization {
            if !(c.is_finite() && c != 0.0) {
                return Err(Error::invalid("c_alpha", c, "calibrated constant must be finite and nonzero"));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", alpha, "order must lie in (0, 1)"))
    }
}

/// Midpoint weights `K(y_m) dy` for grid offsets `m = 1..n-1`, using the
/// kernel summed over periodic images so that the periodic sum equals the line
/// integral of the periodic extension. Offsets closer than `epsilon` to an
/// image of the origin get weight zero.
pub(crate) fn stein_weights(n: usize, period: f64, alpha: f64, epsilon: f64) -> Vec<f64> {
    let h = period / n as f64;
    let mut w = vec![0.0; n];
    for (m, slot) in w.iter_mut().enumerate().skip(1) {
        let y = m as f64 * h;
        if y.min(period - y) >= epsilon * (1.0 - 1e-12) {
            *slot = periodized_kernel(y, period, alpha) * h;
        }
    }
    w
}

/// `sum_m w_m (f_{j+m} - f_j)` for every `j`, cyclic in `j + m`.
pub(crate) fn difference_sum(values: &[Complex64], weights: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .into_par_iter()
        .map(|j| {
            let fj = values[j];
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &w) in weights.iter().enumerate().skip(1) {
                let idx = if j + m >= n { j + m - n } else { j + m };
                acc += w * (values[idx] - fj);
            }
            acc
        })
        .collect()
}

/// Stein singular integral without the `1/c_alpha` factor.
pub fn stein_unnormalized(f: &GridFunction, alpha: f64, epsilon: f64) -> Result<GridFunction> {
    let g = *f.grid();
    SteinKernelSpec::formula(alpha, epsilon).validate(g.dx())?;
    let w = stein_weights(g.n(), g.length(), alpha, epsilon);
    let values = difference_sum(f.values(), &w);
    Ok(GridFunction::new(g, values)?.with_real_flag(f.is_real()))
}

/// `D_alpha f(x) = (1/c_alpha) PV integral (f(x + y) - f(x)) |y|^{-1-alpha} dy`
/// by the midpoint rule over grid offsets.
pub fn stein_derivative(f: &GridFunction, spec: &SteinKernelSpec) -> Result<GridFunction> {
    spec.validate(f.grid().dx())?;
    Ok(stein_unnormalized(f, spec.alpha, spec.epsilon)?.scale(1.0 / spec.c_alpha()))
}

/// Fits `c_alpha` so that the Stein derivative of `f` has the L² norm of `D^alpha f`.
/// The sign follows the closed-form constant (negative).
pub fn calibrate_stein_constant(f: &GridFunction, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let riesz = riesz_derivative(f, alpha)?.l2_norm();
    if riesz == 0.0 {
        return Err(Error::ZeroData);
    }
    let s = stein_unnormalized(f, alpha, f.grid().dx())?.l2_norm();
    Ok(-s / riesz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormEquivalenceReport {
    /// `||J^alpha f||_p`
    pub lhs: f64,
    /// `||f||_p + ||D^alpha f||_p`
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares the Bessel-potential norm with the homogeneous one plus L^p.
/// Both sides are computed spectrally; the zero function reports ratio 1.
pub fn norm_equivalence_report(f: &GridFunction, alpha: f64, p: f64) -> Result<NormEquivalenceReport> {
    check_alpha(alpha)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", p, "exponent must lie in (1, inf)"));
    }
    let lhs = bessel_derivative(f, alpha)?.lp_norm(p);
    let rhs = f.lp_norm(p) + riesz_derivative(f, alpha)?.lp_norm(p);
    let ratio = if rhs == 0.0 && lhs == 0.0 { 1.0 } else { lhs / rhs };
    Ok(NormEquivalenceReport { lhs, rhs, ratio })
}
