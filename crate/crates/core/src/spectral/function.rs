use rustfft::num_complex::Complex64;

use super::grid::Grid1D;
use crate::error::{Error, Result, Warning};

/// Fraction of points at each end of the domain inspected by the edge-decay monitor.
pub const EDGE_FRACTION: f64 = 0.025;

/// Edge amplitude, relative to the sup norm, above which wrap-around is reported.
pub const EDGE_DECAY_THRESHOLD: f64 = 1e-14;

/// Complex samples of a function on a [`Grid1D`].
///
/// `real` records that the samples represent a real-valued function; the flag
/// is carried through operators that preserve realness but the imaginary part
/// is never discarded, so [`GridFunction::max_imag`] measures round-off drift.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
    real: bool,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid,
            values,
            real: false,
        })
    }

    pub fn from_real(grid: Grid1D, values: &[f64]) -> Result<Self> {
        let mut f = Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())?;
        f.real = true;
        Ok(f)
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().into_iter().map(|x| Complex64::new(f(x), 0.0)).collect();
        Self {
            grid,
            values,
            real: true,
        }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
            real: true,
        }
    }

    pub(crate) fn from_parts(grid: Grid1D, values: Vec<Complex64>, real: bool) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values, real }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Marks the function as real-valued (or not) without touching its samples.
    pub fn with_real_flag(mut self, real: bool) -> Self {
        self.real = real;
        self
    }

    /// Drops the imaginary part and flags the result real.
    pub fn real_part(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
            real: true,
        }
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// `(sum |f_j|^2 dx)^{1/2}`, the quadrature approximation of the line L² norm.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let dx = self.grid.dx();
        (self.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `integral f dx` by the rectangle rule.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.dx()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * a).collect(),
            real: self.real,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("operands live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect(),
            real: self.real && other.real,
        })
    }

    /// Pointwise product with a real weight `w(x)`.
    pub fn weighted(&self, w: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * w(self.grid.point(j)))
            .collect();
        Self {
            grid: self.grid,
            values,
            real: self.real,
        }
    }

    /// Cyclic translation by `shift` grid points: `g(x_j) = f(x_{j - shift})`.
    pub fn shifted(&self, shift: isize) -> Self {
        let n = self.grid.n() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - shift).rem_euclid(n) as usize])
            .collect();
        Self {
            grid: self.grid,
            values,
            real: self.real,
        }
    }

    /// Largest modulus among the outer [`EDGE_FRACTION`] of points on either
    /// side, relative to the sup norm. Zero for the zero function.
    pub fn edge_ratio(&self) -> f64 {
        let sup = self.sup_norm();
        if sup == 0.0 {
            return 0.0;
        }
        let n = self.grid.n();
        let width = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
        let edge = self.values[..width]
            .iter()
            .chain(&self.values[n - width..])
            .fold(0.0f64, |m, v| m.max(v.norm()));
        edge / sup
    }

    /// Wrap-around warning when the function has not decayed at the edges.
    pub fn edge_warning(&self, context: &str) -> Option<Warning> {
        let ratio = self.edge_ratio();
        (ratio > EDGE_DECAY_THRESHOLD).then(|| Warning::WrapAround {
            context: context.to_string(),
            edge_ratio: ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_checked() {
        let g = Grid1D::new(8, 1.0).unwrap();
        assert!(GridFunction::new(g, vec![Complex64::new(0.0, 0.0); 7]).is_err());
    }

    #[test]
    fn l2_norm_of_constant_includes_dx() {
        let g = Grid1D::new(64, 4.0).unwrap();
        let f = GridFunction::from_fn(g, |_| 1.0);
        assert!((f.l2_norm() - 2.0).abs() < 1e-14);
        assert!((f.lp_norm(4.0) - 4f64.powf(0.25)).abs() < 1e-14);
    }

    #[test]
    fn shift_is_cyclic() {
        let g = Grid1D::new(8, 8.0).unwrap();
        let f = GridFunction::from_fn(g, |x| x);
        let s = f.shifted(3);
        assert_eq!(s.values()[3].re, f.values()[0].re);
        assert_eq!(s.values()[0].re, f.values()[5].re);
        assert_eq!(f.shifted(-3).shifted(3), f);
    }

    #[test]
    fn edge_monitor() {
        let g = Grid1D::desk();
        let narrow = GridFunction::from_fn(g, |x| (-x * x / 2.0).exp());
        assert!(narrow.edge_warning("narrow").is_none());
        let flat = GridFunction::from_fn(g, |x| x.cos());
        assert!(flat.edge_warning("flat").is_some());
        assert_eq!(GridFunction::zeros(g).edge_ratio(), 0.0);
    }
}
