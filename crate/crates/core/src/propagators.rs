//! Linear dispersive groups, the Γ operator, the commutator operator Φ and
//! residual checks of the weighted commutation identities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Diagnosed, Error, Result, Warning};
use crate::fractional::{check_alpha, riesz_derivative, stein_weights};
use crate::spectral::{
    forward_transform, inverse_transform, spectral_derivative, GridDescriptor, GridFunction, MultiplierTable,
    NyquistPolicy, Spectrum,
};
use crate::special::stein_constant;
use crate::Complex64;

/// Fraction of the half-domain over which fractional weights are tapered to zero.
pub const TAPER_FRACTION: f64 = 0.05;

/// `|x|^r` times a raised-cosine taper that falls from 1 at `|x| = (1 - TAPER_FRACTION) L/2`
/// to 0 at `|x| = L/2`.
pub fn tapered_weight(x: f64, r: f64, length: f64) -> f64 {
    let half = 0.5 * length;
    let edge = (1.0 - TAPER_FRACTION) * half;
    let ax = x.abs();
    let base = if r == 0.0 { 1.0 } else { ax.powf(r) };
    if ax <= edge {
        base
    } else {
        base * 0.5 * (1.0 + (PI * (ax - edge) / (half - edge)).cos())
    }
}

/// Real odd dispersion symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    /// `xi^3`
    Airy,
    /// `|xi|^{1+a} xi`, `0 <= a < 1`
    Dgbo { a: f64 },
    /// `sum_j coeffs[j] xi^{2j+1}`
    OddPolynomial { coeffs: Vec<f64> },
}

impl Symbol {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Symbol::Airy => xi * xi * xi,
            Symbol::Dgbo { a } => xi.abs().powf(1.0 + a) * xi,
            Symbol::OddPolynomial { coeffs } => {
                let x2 = xi * xi;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x2 + c) * xi
            }
        }
    }
}

/// The phase `t * symbol(xi)` of a linear group `exp(i t symbol(D))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePolynomial {
    pub t: f64,
    pub symbol: Symbol,
}

impl PhasePolynomial {
    pub fn airy(t: f64) -> Self {
        Self { t, symbol: Symbol::Airy }
    }

    pub fn dgbo(t: f64, a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::invalid("a", a, "dispersion parameter must lie in [0, 1)"));
        }
        Ok(Self {
            t,
            symbol: Symbol::Dgbo { a },
        })
    }

    pub fn at_time(&self, t: f64) -> Self {
        Self {
            t,
            symbol: self.symbol.clone(),
        }
    }

    pub fn phase(&self, xi: f64) -> f64 {
        self.t * self.symbol.eval(xi)
    }

    /// `exp(i t symbol(xi))` on the grid. The Nyquist factor is kept as is, so
    /// the table has modulus one everywhere and the group stays unitary.
    ///
    /// Panics if `t` is not finite.
    pub fn table(&self, grid: crate::Grid1D) -> MultiplierTable {
        MultiplierTable::new(grid, |xi| Complex64::from_polar(1.0, self.phase(xi)), NyquistPolicy::Keep)
            .unwrap_or_else(|_| panic!("non-finite phase at t = {}", self.t))
    }

    pub fn propagate(&self, f: &GridFunction) -> GridFunction {
        self.table(*f.grid()).apply(f).expect("table built on the function's grid")
    }
}

/// `U(t) f = (exp(i t xi^3) f^)^v`.
pub fn airy_propagate(f: &GridFunction, t: f64) -> GridFunction {
    PhasePolynomial::airy(t).propagate(f)
}

/// Linear DGBO group `exp(i t |xi|^{1+a} xi)`.
pub fn dgbo_propagate(f: &GridFunction, t: f64, a: f64) -> Result<GridFunction> {
    Ok(PhasePolynomial::dgbo(t, a)?.propagate(f))
}

/// `Γ f = x f - 3t f''`.
pub fn gamma_apply(f: &GridFunction, t: f64) -> Diagnosed<GridFunction> {
    let xf = f.weighted(|x| x);
    let out = if t == 0.0 {
        xf
    } else {
        xf.sub(&spectral_derivative(f, 2).scale(3.0 * t)).expect("same grid")
    };
    Diagnosed::with(out, f.edge_warning("gamma_apply"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidualReport {
    pub t: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub residual_l2: f64,
    /// L² norm of the identity's left-hand side, the scale for relative residuals.
    pub lhs_l2: f64,
    pub bound_ratio: Option<f64>,
    pub grid: GridDescriptor,
    pub taper_fraction: Option<f64>,
    pub warnings: Vec<Warning>,
}

impl IdentityResidualReport {
    pub fn relative_residual(&self) -> f64 {
        if self.lhs_l2 == 0.0 {
            self.residual_l2
        } else {
            self.residual_l2 / self.lhs_l2
        }
    }
}

fn collect_warnings(items: &[(&GridFunction, &str)]) -> Vec<Warning> {
    items.iter().filter_map(|(f, ctx)| f.edge_warning(ctx)).collect()
}

/// Residual of `Γ U(t) v0 = U(t)(x v0)`, scaled by `||x v0||`.
pub fn gamma_commutation_residual(v0: &GridFunction, t: f64) -> IdentityResidualReport {
    let u = airy_propagate(v0, t);
    let xv0 = v0.weighted(|x| x);
    let lhs = gamma_apply(&u, t).value;
    let rhs = airy_propagate(&xv0, t);
    let residual_l2 = if t == 0.0 { 0.0 } else { lhs.sub(&rhs).expect("same grid").l2_norm() };
    IdentityResidualReport {
        t,
        alpha: None,
        beta: None,
        residual_l2,
        lhs_l2: xv0.l2_norm(),
        bound_ratio: None,
        grid: v0.grid().descriptor(),
        taper_fraction: None,
        warnings: collect_warnings(&[(v0, "initial datum"), (&u, "propagated datum")]),
    }
}

/// `Φ_{t,α}(f^)(xi) = (1/c_α) PV sum_eta (exp(i(φ(xi+eta) - φ(xi))) - 1) f^(xi+eta) |eta|^{-1-α} d eta`
/// on the centered frequency grid of `u0`, cyclic in `eta` with the kernel
/// summed over periodic images; `c_α` is the closed-form constant.
pub fn phi_operator(u0: &GridFunction, phase: &PhasePolynomial, alpha: f64) -> Result<Spectrum> {
    check_alpha(alpha)?;
    let g = *u0.grid();
    let n = g.n();
    let spec = forward_transform(u0);
    if phase.t == 0.0 {
        return Ok(Spectrum::from_parts(g, vec![Complex64::new(0.0, 0.0); n], u0.is_real()));
    }
    let dxi = g.dxi();
    let weights = stein_weights(n, n as f64 * dxi, alpha, dxi);
    let rot: Vec<Complex64> = g
        .frequencies()
        .iter()
        .map(|&xi| Complex64::from_polar(1.0, phase.phase(xi)))
        .collect();
    let c = spec.coeffs();
    let inv_c = 1.0 / stein_constant(alpha);
    let out = (0..n)
        .into_par_iter()
        .map(|k| {
            let back = rot[k].conj();
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &w) in weights.iter().enumerate().skip(1) {
                let j = if k + m >= n { k + m - n } else { k + m };
                acc += w * (rot[j] * back - 1.0) * c[j];
            }
            acc * inv_c
        })
        .collect();
    Ok(Spectrum::from_parts(g, out, u0.is_real()))
}

/// Residual of `|x|^α U(t) u0 = U(t)(|x|^α u0) + U(t) Φ_{t,α}(u0^)^v` under the Airy group.
pub fn weighted_identity_residual(u0: &GridFunction, t: f64, alpha: f64) -> Result<IdentityResidualReport> {
    weighted_identity_residual_with(u0, &PhasePolynomial::airy(t), alpha, None)
}

/// The same identity after applying `D^β` to both sides, `0 < β < α`.
pub fn weighted_identity_residual_beta(
    u0: &GridFunction,
    t: f64,
    alpha: f64,
    beta: f64,
) -> Result<IdentityResidualReport> {
    weighted_identity_residual_with(u0, &PhasePolynomial::airy(t), alpha, Some(beta))
}

/// Weighted identity for an arbitrary odd phase. The bound ratio divides
/// `||D^β Φ^v||` by `(1 + |t|)(||u0|| + ||D^{β + 2α} u0||)` (β = 0 when absent).
pub fn weighted_identity_residual_with(
    u0: &GridFunction,
    phase: &PhasePolynomial,
    alpha: f64,
    beta: Option<f64>,
) -> Result<IdentityResidualReport> {
    check_alpha(alpha)?;
    if let Some(b) = beta {
        if !(b > 0.0 && b < alpha) {
            return Err(Error::invalid("beta", b, "beta must lie in (0, alpha)"));
        }
    }
    let g = *u0.grid();
    let length = g.length();
    let group = phase.table(g);
    let u = group.apply(u0)?;
    let weight = |x: f64| tapered_weight(x, alpha, length);
    let lhs = u.weighted(weight);
    let phi = inverse_transform(&phi_operator(u0, phase, alpha)?);
    let residual = lhs
        .sub(&group.apply(&u0.weighted(weight))?)?
        .sub(&group.apply(&phi)?)?;
    let d = |f: &GridFunction| -> Result<GridFunction> {
        match beta {
            Some(b) => riesz_derivative(f, b),
            None => Ok(f.clone()),
        }
    };
    let lhs_l2 = d(&lhs)?.l2_norm();
    let residual_l2 = d(&residual)?.l2_norm();
    let denom = (1.0 + phase.t.abs())
        * (u0.l2_norm() + riesz_derivative(u0, beta.unwrap_or(0.0) + 2.0 * alpha)?.l2_norm());
    let bound_ratio = if denom == 0.0 { 0.0 } else { d(&phi)?.l2_norm() / denom };
    Ok(IdentityResidualReport {
        t: phase.t,
        alpha: Some(alpha),
        beta,
        residual_l2,
        lhs_l2,
        bound_ratio: Some(bound_ratio),
        grid: g.descriptor(),
        taper_fraction: Some(TAPER_FRACTION),
        warnings: collect_warnings(&[(u0, "initial datum"), (&u, "propagated datum")]),
    })
}

/// `(integral_{-T}^{T} ||U(t) u0||_inf^6 dt)^{1/6} / ||u0||_2` by the trapezoid rule on `n_times` points.
pub fn strichartz_ratio(u0: &GridFunction, t_window: f64, n_times: usize) -> Result<f64> {
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(Error::invalid("t_window", t_window, "time window must be positive"));
    }
    if n_times < 2 {
        return Err(Error::invalid("n_times", n_times as f64, "need at least two time samples"));
    }
    let norm = u0.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroData);
    }
    let spec = forward_transform(u0);
    let g = *u0.grid();
    let dt = 2.0 * t_window / (n_times - 1) as f64;
    let sups: Vec<f64> = (0..n_times)
        .into_par_iter()
        .map(|i| {
            let t = -t_window + i as f64 * dt;
            let s = PhasePolynomial::airy(t).table(g).apply_spectrum(&spec).expect("same grid");
            inverse_transform(&s).sup_norm().powi(6)
        })
        .collect();
    let integral = dt * (sups.iter().sum::<f64>() - 0.5 * (sups[0] + sups[n_times - 1]));
    Ok(integral.powf(1.0 / 6.0) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample, Grid1D, PresetDatum};

    fn gauss(g: Grid1D) -> GridFunction {
        sample(&PresetDatum::gaussian(1.0, 2.0, 0.0), &g).unwrap().value
    }

    #[test]
    fn taper_shape() {
        assert_eq!(tapered_weight(0.0, 0.5, 100.0), 0.0);
        assert!((tapered_weight(4.0, 0.5, 100.0) - 2.0).abs() < 1e-15);
        assert!(tapered_weight(50.0, 0.5, 100.0).abs() < 1e-12);
        assert!((tapered_weight(47.5, 1.0, 100.0) - 47.5).abs() < 1e-12);
    }

    #[test]
    fn symbols() {
        assert_eq!(Symbol::Airy.eval(-2.0), -8.0);
        assert!((Symbol::Dgbo { a: 0.5 }.eval(-4.0) + 32.0).abs() < 1e-12);
        let p = Symbol::OddPolynomial { coeffs: vec![1.0, 2.0] };
        assert_eq!(p.eval(2.0), 2.0 + 16.0);
        assert!(PhasePolynomial::dgbo(1.0, 1.0).is_err());
    }

    #[test]
    fn single_mode_phase_shift() {
        let g = Grid1D::new(32, 2.0 * PI).unwrap();
        let f = GridFunction::new(g, g.points().iter().map(|&x| Complex64::from_polar(1.0, x)).collect()).unwrap();
        let u = airy_propagate(&f, 0.7);
        for (a, b) in u.values().iter().zip(f.values()) {
            assert!((a - b * Complex64::from_polar(1.0, 0.7)).norm() < 1e-13);
        }
    }

    #[test]
    fn gamma_at_zero_time_is_odd() {
        let g = Grid1D::desk();
        let f = sample(&PresetDatum::gaussian(1.0, 1.0, 0.0), &g).unwrap().value;
        let gf = gamma_apply(&f, 0.0);
        assert!(gf.is_clean());
        let v = gf.value.values();
        for j in 1..g.n() {
            assert!((v[j] + v[g.n() - j]).norm() < 1e-12);
        }
        let c = GridFunction::from_fn(g, |x| (g.dxi() * x).cos());
        assert!(!gamma_apply(&c, 1.0).is_clean());
    }

    #[test]
    fn phi_vanishes_at_zero_time_and_is_linear() {
        let g = Grid1D::new(256, 50.0).unwrap();
        let u = gauss(g);
        let z = phi_operator(&u, &PhasePolynomial::airy(0.0), 0.5).unwrap();
        assert!(z.coeffs().iter().all(|c| c.norm() == 0.0));
        let v = sample(&PresetDatum::sech(0.5, 1.0, 0.0), &g).unwrap().value;
        let p = PhasePolynomial::airy(1.0);
        let sum = phi_operator(&u.add(&v).unwrap(), &p, 0.5).unwrap();
        let a = phi_operator(&u, &p, 0.5).unwrap();
        let b = phi_operator(&v, &p, 0.5).unwrap();
        let scale = sum.l2_norm();
        let err = sum
            .coeffs()
            .iter()
            .zip(a.coeffs().iter().zip(b.coeffs()))
            .map(|(s, (x, y))| (s - x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * g.dx().sqrt();
        assert!(err <= 1e-12 * scale);
        assert!(phi_operator(&u, &p, 1.2).is_err());
    }

    #[test]
    fn zero_time_identity_is_exact() {
        let g = Grid1D::new(256, 50.0).unwrap();
        let r = weighted_identity_residual(&gauss(g), 0.0, 0.5).unwrap();
        assert!(r.residual_l2 <= 1e-14 * r.lhs_l2);
        let rb = weighted_identity_residual_beta(&gauss(g), 0.0, 0.5, 0.25).unwrap();
        assert!(rb.residual_l2 <= 1e-14 * rb.lhs_l2);
        assert!(weighted_identity_residual_beta(&gauss(g), 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn strichartz_rejects_zero() {
        let g = Grid1D::new(64, 10.0).unwrap();
        assert!(matches!(strichartz_ratio(&GridFunction::zeros(g), 5.0, 11), Err(Error::ZeroData)));
    }
}
