use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::function::GridFunction;
use super::grid::Grid1D;
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

#[inline]
fn parity(i: usize, n: usize) -> f64 {
    // (-1)^k with k = i - n/2
    if (i + n / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// In place: samples `f_j` become centered coefficients
/// `c_k = n^{-1/2} sum_j f_j exp(-i x_j xi_k)`.
pub(crate) fn forward_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, false).process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    // FFT index of wavenumber k is k mod n, so centering is a rotation by n/2
    buf.rotate_right(n / 2);
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= scale * parity(i, n);
    }
}

/// Inverse of [`forward_in_place`].
pub(crate) fn inverse_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    let scale = 1.0 / (n as f64).sqrt();
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= scale * parity(i, n);
    }
    buf.rotate_left(n / 2);
    plan(n, true).process(buf);
}

/// Centered spectral coefficients of a [`GridFunction`].
///
/// The transform is unitary, so `sum |c_k|^2 dx` equals the discrete L² norm
/// squared, and `dx sqrt(n) c_k` approximates the line Fourier transform
/// `integral f(x) exp(-i x xi_k) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid1D,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl Spectrum {
    pub fn new(grid: Grid1D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid,
            coeffs,
            real: false,
        })
    }

    pub(crate) fn from_parts(grid: Grid1D, coeffs: Vec<Complex64>, real: bool) -> Self {
        Self { grid, coeffs, real }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficient of wavenumber `k`, zero off the grid.
    pub fn at(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Mean coefficient `c_0`.
    pub fn mean_coeff(&self) -> Complex64 {
        self.coeffs[self.grid.zero_index()]
    }

    /// Coefficient-space L² norm with the same quadrature weight as the physical norm.
    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// `max |c_{-k} - conj(c_k)|` over paired modes, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let top = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if top == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 1..self.grid.n() {
            let d = (self.coeffs[self.grid.mirror(i)] - self.coeffs[i].conj()).norm();
            worst = worst.max(d);
        }
        worst.max(self.coeffs[Grid1D::NYQUIST].im.abs()) / top
    }
}

pub fn forward_transform(f: &GridFunction) -> Spectrum {
    let mut buf = f.values().to_vec();
    forward_in_place(&mut buf);
    Spectrum::from_parts(*f.grid(), buf, f.is_real())
}

pub fn inverse_transform(s: &Spectrum) -> GridFunction {
    let mut buf = s.coeffs.clone();
    inverse_in_place(&mut buf);
    GridFunction::from_parts(s.grid, buf, s.real)
}

/// Treatment of the unpaired Nyquist coefficient by a multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NyquistPolicy {
    /// Use `(m(xi_N) + m(-xi_N)) / 2`: odd multipliers annihilate the mode,
    /// even ones act as usual.
    #[default]
    Symmetrize,
    /// Use `m(xi_N)` unchanged. Keeps modulus-one multipliers exactly unitary.
    Keep,
}

/// A multiplier tabulated on the centered frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTable {
    grid: Grid1D,
    factors: Vec<Complex64>,
    hermitian: bool,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl MultiplierTable {
    pub fn new(grid: Grid1D, m: impl Fn(f64) -> Complex64, policy: NyquistPolicy) -> Result<Self> {
        let xi = grid.frequencies();
        let mut factors = Vec::with_capacity(grid.n());
        for &x in &xi {
            let v = m(x);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteMultiplier { xi: x });
            }
            factors.push(v);
        }
        if policy == NyquistPolicy::Symmetrize {
            let minus = m(-xi[Grid1D::NYQUIST]);
            if !(minus.re.is_finite() && minus.im.is_finite()) {
                return Err(Error::NonFiniteMultiplier {
                    xi: -xi[Grid1D::NYQUIST],
                });
            }
            factors[Grid1D::NYQUIST] = 0.5 * (factors[Grid1D::NYQUIST] + minus);
        }
        let scale = factors.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1.0);
        let hermitian = (1..grid.n())
            .all(|i| (factors[grid.mirror(i)] - factors[i].conj()).norm() <= HERMITIAN_TOL * scale);
        Ok(Self {
            grid,
            factors,
            hermitian,
        })
    }

    /// Real multiplier `m(xi)`.
    pub fn real(grid: Grid1D, m: impl Fn(f64) -> f64, policy: NyquistPolicy) -> Result<Self> {
        Self::new(grid, |x| Complex64::new(m(x), 0.0), policy)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }

    /// `m(-xi) = conj(m(xi))` on every paired mode; such multipliers preserve realness.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn apply_spectrum(&self, s: &Spectrum) -> Result<Spectrum> {
        if s.grid != self.grid {
            return Err(Error::GridMismatch("multiplier and spectrum grids differ".into()));
        }
        let coeffs = s.coeffs.iter().zip(&self.factors).map(|(c, m)| c * m).collect();
        Ok(Spectrum::from_parts(self.grid, coeffs, s.real && self.hermitian))
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch("multiplier and function grids differ".into()));
        }
        let mut buf = f.values().to_vec();
        forward_in_place(&mut buf);
        for (c, m) in buf.iter_mut().zip(&self.factors) {
            *c *= m;
        }
        inverse_in_place(&mut buf);
        Ok(GridFunction::from_parts(self.grid, buf, f.is_real() && self.hermitian))
    }
}

/// Applies the Fourier multiplier `m` to `f` with the default Nyquist treatment.
pub fn multiplier_apply(f: &GridFunction, m: impl Fn(f64) -> Complex64) -> Result<GridFunction> {
    multiplier_apply_with(f, m, NyquistPolicy::Symmetrize)
}

pub fn multiplier_apply_with(
    f: &GridFunction,
    m: impl Fn(f64) -> Complex64,
    policy: NyquistPolicy,
) -> Result<GridFunction> {
    MultiplierTable::new(*f.grid(), m, policy)?.apply(f)
}

/// `d^order f / dx^order` as the multiplier `(i xi)^order`.
pub fn spectral_derivative(f: &GridFunction, order: u32) -> GridFunction {
    let i_pow = match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    multiplier_apply(f, |xi| i_pow * xi.powi(order as i32)).expect("polynomial multiplier is finite")
}
