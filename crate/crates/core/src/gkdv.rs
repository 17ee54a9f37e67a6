//! The generalized KdV equation `u_t + u_xxx + u^k u_x = 0`: Picard iteration on
//! the Duhamel formula, an integrating-factor Runge-Kutta reference integrator,
//! conserved quantities and globalization by patching local solutions.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::fractional::riesz_derivative;
use crate::norms::{mu1, SpaceTimeField};
use crate::propagators::PhasePolynomial;
use crate::spectral::{forward_in_place, inverse_in_place, spectral_derivative, GridFunction};
use crate::{Complex64, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Nonlinearity power.
    pub k: u32,
    /// Time step of the Picard time grid and of the reference integrator.
    pub dt: f64,
    /// Length of the time interval `[0, horizon]`.
    pub horizon: f64,
    pub n_picard: usize,
    /// Stop once `mu1(u_{j+1} - u_j) <= picard_tol * mu1(u_{j+1})`.
    pub picard_tol: f64,
    /// Constant of the linear estimate, fixes the existence time and ball radius.
    pub c0: f64,
    /// Two-thirds truncation of every nonlinear product.
    pub dealias: bool,
    /// Existence time used when the formula degenerates or exceeds it.
    pub t_cap: f64,
    /// Sup-norm level at which the reference integrator reports blow-up.
    pub blowup_ceiling: f64,
    /// Drop the nonlinear term (linear consistency checks).
    pub linear_only: bool,
    /// Let Picard run past the local existence time.
    pub allow_beyond_existence_time: bool,
    /// The reference integrator stores every `record_every`-th step.
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 2,
            dt: 1e-3,
            horizon: 1.0,
            n_picard: 30,
            picard_tol: 1e-12,
            c0: 1.0,
            dealias: true,
            t_cap: 10.0,
            blowup_ceiling: 1e6,
            linear_only: false,
            allow_beyond_existence_time: false,
            record_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, v, "must be positive and finite"))
            }
        };
        if self.k < 1 {
            return Err(Error::invalid("k", self.k as f64, "nonlinearity power must be at least 1"));
        }
        positive("dt", self.dt)?;
        positive("horizon", self.horizon)?;
        positive("c0", self.c0)?;
        positive("t_cap", self.t_cap)?;
        positive("blowup_ceiling", self.blowup_ceiling)?;
        if self.picard_tol < 0.0 || !self.picard_tol.is_finite() {
            return Err(Error::invalid("picard_tol", self.picard_tol, "tolerance must be nonnegative"));
        }
        if self.n_picard < 1 {
            return Err(Error::invalid("n_picard", 0.0, "need at least one Picard iteration"));
        }
        if self.record_every < 1 {
            return Err(Error::invalid("record_every", 0.0, "must be at least 1"));
        }
        Ok(())
    }
}

/// `||D^{1/4} u||_2`
pub fn quarter_derivative_norm(u: &GridFunction) -> f64 {
    riesz_derivative(u, 0.25).expect("positive order").l2_norm()
}

/// `T = 1 / (32 c0^6 K^4)` capped at `t_cap`.
pub fn existence_time_for(k_norm: f64, c0: f64, t_cap: f64) -> f64 {
    if k_norm == 0.0 {
        return t_cap;
    }
    (1.0 / (32.0 * c0.powi(6) * k_norm.powi(4))).min(t_cap)
}

/// Local existence time from `K = ||D^{1/4} u0||_2`.
pub fn local_existence_time(u0: &GridFunction, cfg: &SolverConfig) -> f64 {
    existence_time_for(quarter_derivative_norm(u0), cfg.c0, cfg.t_cap)
}

/// `(k-th power nonlinearity)^` in conservative form `(u^{k+1}/(k+1))_x`.
struct Nonlinear {
    k: u32,
    mask: Vec<f64>,
    ik: Vec<Complex64>,
}

impl Nonlinear {
    fn new(grid: &Grid1D, k: u32, dealias: bool) -> Self {
        let n = grid.n();
        let mask: Vec<f64> = (0..n)
            .map(|i| {
                let kk = grid.wavenumber(i).unsigned_abs() as usize;
                if !dealias || 3 * kk < n {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let ik = (0..n)
            .map(|i| {
                if i == Grid1D::NYQUIST {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.frequency(i) * mask[i])
                }
            })
            .collect();
        Self { k, mask, ik }
    }

    /// Spectrum of `u^k u_x` and the sup norm of the (truncated) `u`.
    fn eval(&self, spec: &[Complex64]) -> (Vec<Complex64>, f64) {
        let mut buf: Vec<Complex64> = spec.iter().zip(&self.mask).map(|(c, m)| c * m).collect();
        inverse_in_place(&mut buf);
        let p = (self.k + 1) as f64;
        let mut sup = 0.0f64;
        for v in buf.iter_mut() {
            let u = v.re;
            sup = sup.max(u.abs());
            *v = Complex64::new(u.powi(self.k as i32 + 1) / p, 0.0);
        }
        forward_in_place(&mut buf);
        for (v, m) in buf.iter_mut().zip(&self.ik) {
            *v *= m;
        }
        (buf, sup)
    }
}

fn phases(grid: &Grid1D, t: f64) -> Vec<Complex64> {
    PhasePolynomial::airy(t).table(*grid).factors().to_vec()
}

fn to_spectrum(u: &GridFunction) -> Vec<Complex64> {
    let mut buf = u.values().to_vec();
    forward_in_place(&mut buf);
    buf
}

fn to_physical(grid: Grid1D, spec: &[Complex64]) -> GridFunction {
    let mut buf = spec.to_vec();
    inverse_in_place(&mut buf);
    GridFunction::new(grid, buf).expect("length matches").with_real_flag(true)
}

fn steps_for(length: f64, dt: f64) -> usize {
    ((length / dt) - 1e-9).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub t_used: f64,
    /// `2 c0 ||D^{1/4} u0||_2`
    pub ball_radius: f64,
    /// `mu1` of the free evolution and of every later iterate.
    pub iterate_mu1: Vec<f64>,
    /// `successive_diffs[j] = mu1(u_{j+1} - u_j)`.
    pub successive_diffs: Vec<f64>,
    /// `successive_diffs[j] / successive_diffs[j-1]`, with `mu1(u_0)` standing in
    /// for the difference before the first one.
    pub contraction_ratios: Vec<f64>,
    /// `c0 T^{1/2} (mu1(u_j) + mu1(u_{j-1}))^k`, the Lipschitz bound of the Duhamel map.
    pub predicted_factors: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<Warning>,
}

impl ContractionReport {
    pub fn iterations(&self) -> usize {
        self.successive_diffs.len()
    }

    pub fn inside_ball(&self) -> bool {
        self.iterate_mu1.iter().all(|&m| m <= self.ball_radius)
    }
}

/// Solves on `[0, cfg.horizon]` by iterating the Duhamel map from the free evolution.
pub fn picard_solve(u0: &GridFunction, cfg: &SolverConfig) -> Result<(SpaceTimeField, ContractionReport)> {
    cfg.validate()?;
    let t_exist = local_existence_time(u0, cfg);
    if !cfg.allow_beyond_existence_time && cfg.horizon > t_exist * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "horizon",
            cfg.horizon,
            "exceeds the local existence time; set allow_beyond_existence_time to override",
        ));
    }
    picard_core(u0, cfg.horizon, steps_for(cfg.horizon, cfg.dt), cfg)
}

fn picard_core(
    u0: &GridFunction,
    length: f64,
    steps: usize,
    cfg: &SolverConfig,
) -> Result<(SpaceTimeField, ContractionReport)> {
    let grid = *u0.grid();
    let dt = length / steps as f64;
    let nl = Nonlinear::new(&grid, cfg.k, cfg.dealias);
    let c = to_spectrum(u0);
    let forward: Vec<Vec<Complex64>> = (0..=steps)
        .into_par_iter()
        .map(|j| phases(&grid, j as f64 * dt))
        .collect();

    let physical = |frames: &[Vec<Complex64>]| -> SpaceTimeField {
        let fs = frames.par_iter().map(|s| to_physical(grid, s)).collect();
        SpaceTimeField::new(grid, 0.0, dt, fs).expect("nonempty aligned frames")
    };

    let mut spec: Vec<Vec<Complex64>> = forward
        .iter()
        .map(|e| e.iter().zip(&c).map(|(a, b)| a * b).collect())
        .collect();
    let mut field = physical(&spec);
    let mut warnings: Vec<Warning> = u0.edge_warning("initial datum").into_iter().collect();

    let ball_radius = 2.0 * cfg.c0 * quarter_derivative_norm(u0);
    let mut report = ContractionReport {
        t_used: length,
        ball_radius,
        iterate_mu1: vec![mu1(&field)],
        successive_diffs: Vec::new(),
        contraction_ratios: Vec::new(),
        predicted_factors: Vec::new(),
        converged: false,
        warnings: Vec::new(),
    };
    let mut prev_diff = report.iterate_mu1[0];
    let mut prev_mu = 0.0;
    let mut streak = 0;

    for iteration in 1..=cfg.n_picard {
        let next = if cfg.linear_only {
            spec.clone()
        } else {
            // U(-t_j) N(v(t_j)), then the cumulative trapezoid rule in t'
            let integrand: Vec<Vec<Complex64>> = spec
                .par_iter()
                .zip(&forward)
                .map(|(s, e)| {
                    let (mut g, _) = nl.eval(s);
                    for (v, p) in g.iter_mut().zip(e) {
                        *v *= p.conj();
                    }
                    g
                })
                .collect();
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.n()];
            let mut out = Vec::with_capacity(steps + 1);
            for j in 0..=steps {
                if j > 0 {
                    for ((a, g1), g0) in acc.iter_mut().zip(&integrand[j]).zip(&integrand[j - 1]) {
                        *a += 0.5 * dt * (g0 + g1);
                    }
                }
                out.push(
                    forward[j]
                        .iter()
                        .zip(c.iter().zip(&acc))
                        .map(|(e, (c0, a))| e * (c0 - a))
                        .collect::<Vec<_>>(),
                );
            }
            out
        };
        let new_field = physical(&next);
        let diff = mu1(&new_field.sub(&field)?);
        let mu_new = mu1(&new_field);
        let mu_old = *report.iterate_mu1.last().expect("seeded");
        let ratio = if prev_diff == 0.0 { 0.0 } else { diff / prev_diff };
        report.predicted_factors.push(cfg.c0 * length.sqrt() * (mu_old + prev_mu).powi(cfg.k as i32));
        report.successive_diffs.push(diff);
        report.contraction_ratios.push(ratio);
        report.iterate_mu1.push(mu_new);
        prev_mu = mu_old;
        spec = next;
        field = new_field;

        if !diff.is_finite() || !mu_new.is_finite() {
            return Err(Error::NonConvergence {
                iteration,
                ratio,
                streak: streak + 1,
            });
        }
        if diff <= cfg.picard_tol * mu_new {
            report.converged = true;
            break;
        }
        streak = if ratio > 1.0 { streak + 1 } else { 0 };
        if streak >= 3 {
            return Err(Error::NonConvergence {
                iteration,
                ratio,
                streak,
            });
        }
        prev_diff = diff;
    }
    warnings.extend(field.frames().last().and_then(|f| f.edge_warning("final frame")));
    report.warnings = warnings;
    Ok((field, report))
}

/// Integrating-factor classical Runge-Kutta on `[0, cfg.horizon]`.
///
/// The linear part is integrated exactly; the nonlinear term is dealiased by
/// the two-thirds rule when `cfg.dealias` is set.
pub fn reference_solve(u0: &GridFunction, cfg: &SolverConfig) -> Result<SpaceTimeField> {
    cfg.validate()?;
    let grid = *u0.grid();
    let steps = steps_for(cfg.horizon, cfg.dt);
    let dt = cfg.horizon / steps as f64;
    let every = cfg.record_every;
    let nl = Nonlinear::new(&grid, cfg.k, cfg.dealias);
    let half = phases(&grid, 0.5 * dt);
    let full: Vec<Complex64> = half.iter().map(|e| e * e).collect();
    let n = grid.n();
    let mut c = to_spectrum(u0);
    let mut frames = vec![to_physical(grid, &c)];
    let rhs = |s: &[Complex64]| -> (Vec<Complex64>, f64) {
        if cfg.linear_only {
            return (vec![Complex64::new(0.0, 0.0); n], 0.0);
        }
        let (g, sup) = nl.eval(s);
        (g.into_iter().map(|v| -v).collect(), sup)
    };
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    for step in 1..=steps {
        let (k1, sup) = rhs(&c);
        let t = (step - 1) as f64 * dt;
        if !sup.is_finite() || sup > cfg.blowup_ceiling {
            return Err(Error::BlowupDetected {
                time: t,
                sup,
                ceiling: cfg.blowup_ceiling,
            });
        }
        for i in 0..n {
            tmp[i] = half[i] * (c[i] + 0.5 * dt * k1[i]);
        }
        let (k2, _) = rhs(&tmp);
        for i in 0..n {
            tmp[i] = half[i] * c[i] + 0.5 * dt * k2[i];
        }
        let (k3, _) = rhs(&tmp);
        for i in 0..n {
            tmp[i] = full[i] * c[i] + dt * half[i] * k3[i];
        }
        let (k4, _) = rhs(&tmp);
        for i in 0..n {
            c[i] = full[i] * c[i] + dt / 6.0 * (full[i] * k1[i] + 2.0 * half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        if step % every == 0 || step == steps {
            let f = to_physical(grid, &c);
            let sup = f.sup_norm();
            if !sup.is_finite() || sup > cfg.blowup_ceiling {
                return Err(Error::BlowupDetected {
                    time: step as f64 * dt,
                    sup,
                    ceiling: cfg.blowup_ceiling,
                });
            }
            if step % every == 0 {
                frames.push(f);
            }
        }
    }
    SpaceTimeField::new(grid, 0.0, dt * every as f64, frames)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedTrajectory {
    pub times: Vec<f64>,
    /// `integral u dx`
    pub mass: Vec<f64>,
    /// `||u||_2`
    pub l2: Vec<f64>,
    /// `integral (u_x^2 / 2 - u^{k+2} / ((k+1)(k+2))) dx`
    pub energy: Vec<f64>,
}

impl ConservedTrajectory {
    /// `max_t |l2(t) - l2(0)| / l2(0)`, zero for zero data.
    pub fn max_relative_l2_drift(&self) -> f64 {
        let l0 = self.l2[0];
        if l0 == 0.0 {
            return 0.0;
        }
        self.l2.iter().fold(0.0f64, |m, v| m.max((v - l0).abs() / l0))
    }
}

pub fn conserved_quantities(w: &SpaceTimeField, k: u32) -> ConservedTrajectory {
    let dx = w.grid().dx();
    let kk = k as f64;
    let rows: Vec<(f64, f64, f64)> = w
        .frames()
        .par_iter()
        .map(|f| {
            let u = f.re();
            let ux = spectral_derivative(f, 1).re();
            let mass = u.iter().sum::<f64>() * dx;
            let energy = u
                .iter()
                .zip(&ux)
                .map(|(u, ux)| 0.5 * ux * ux - u.powi(k as i32 + 2) / ((kk + 1.0) * (kk + 2.0)))
                .sum::<f64>()
                * dx;
            (mass, f.l2_norm(), energy)
        })
        .collect();
    ConservedTrajectory {
        times: w.times(),
        mass: rows.iter().map(|r| r.0).collect(),
        l2: rows.iter().map(|r| r.1).collect(),
        energy: rows.iter().map(|r| r.2).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchReport {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Running bound `K = max ||D^{1/4} u(t)||_2` used to size the patch.
    pub k_bound: f64,
    /// `T' = 1 / (32 c0^6 K^4)`, capped.
    pub t_prime: f64,
    pub contraction: ContractionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSolution {
    pub field: SpaceTimeField,
    pub patches: Vec<PatchReport>,
}

/// Failure of one patch, with whatever was computed before it.
#[derive(Debug)]
pub struct GlobalSolveError {
    pub source: Error,
    pub partial: Option<Box<GlobalSolution>>,
}

impl fmt::Display for GlobalSolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let done = self.partial.as_ref().map_or(0, |p| p.patches.len());
        write!(f, "{} (after {done} completed patches)", self.source)
    }
}

impl std::error::Error for GlobalSolveError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl From<GlobalSolveError> for Error {
    fn from(e: GlobalSolveError) -> Self {
        e.source
    }
}

/// Solves on `[0, t_star]` by chaining Picard solves on patches of length
/// `T'` computed from the running bound on `||D^{1/4} u(t)||_2`. Patches are
/// whole numbers of `cfg.dt` steps, at least one each.
pub fn solve_global(
    u0: &GridFunction,
    t_star: f64,
    cfg: &SolverConfig,
) -> std::result::Result<GlobalSolution, GlobalSolveError> {
    let fail = |source| GlobalSolveError { source, partial: None };
    cfg.validate().map_err(fail)?;
    if !(t_star > 0.0 && t_star.is_finite()) {
        return Err(fail(Error::invalid("t_star", t_star, "must be positive")));
    }
    let grid = *u0.grid();
    let total = steps_for(t_star, cfg.dt);
    let dt = t_star / total as f64;
    let mut k_bound = quarter_derivative_norm(u0);
    let mut frames = vec![u0.clone().with_real_flag(true)];
    let mut patches: Vec<PatchReport> = Vec::new();
    let mut done = 0;
    while done < total {
        let t_prime = existence_time_for(k_bound, cfg.c0, cfg.t_cap);
        let steps = ((t_prime / dt + 1e-9).floor() as usize).clamp(1, total - done);
        let start = frames.last().expect("seeded").clone();
        let outcome = picard_core(&start, steps as f64 * dt, steps, cfg);
        let (field, contraction) = match outcome {
            Ok(v) => v,
            Err(source) => {
                let partial = SpaceTimeField::new(grid, 0.0, dt, frames)
                    .ok()
                    .map(|field| Box::new(GlobalSolution { field, patches }));
                return Err(GlobalSolveError { source, partial });
            }
        };
        for f in &field.frames()[1..] {
            k_bound = k_bound.max(quarter_derivative_norm(f));
        }
        patches.push(PatchReport {
            t_start: done as f64 * dt,
            t_end: (done + steps) as f64 * dt,
            steps,
            k_bound,
            t_prime,
            contraction,
        });
        frames.extend(field.into_frames().into_iter().skip(1));
        done += steps;
    }
    let field = SpaceTimeField::new(grid, 0.0, dt, frames).map_err(fail)?;
    Ok(GlobalSolution { field, patches })
}

/// Largest `mu1^T(U(.) u0) / ||D^{1/4} u0||_2` over the battery and horizons,
/// each linear flow sampled with step `dt`. Zero data are skipped.
pub fn calibrate_c0(battery: &[GridFunction], horizons: &[f64], dt: f64) -> Result<f64> {
    let mut best: Option<f64> = None;
    for u0 in battery {
        let k = quarter_derivative_norm(u0);
        if k == 0.0 {
            continue;
        }
        for &t in horizons {
            if !(t > 0.0) {
                return Err(Error::invalid("horizon", t, "calibration horizons must be positive"));
            }
            let steps = steps_for(t, dt);
            let w = SpaceTimeField::linear_flow(u0, 0.0, t / steps as f64, steps)?;
            let r = mu1(&w) / k;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or(Error::ZeroData)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample, PresetDatum};

    #[test]
    fn existence_time_formula() {
        assert_eq!(existence_time_for(1.0, 1.0, 10.0), 1.0 / 32.0);
        assert_eq!(existence_time_for(0.0, 1.0, 7.0), 7.0);
        assert_eq!(existence_time_for(0.01, 1.0, 7.0), 7.0);
        let t1 = existence_time_for(0.5, 2.0, 1e9);
        let t2 = existence_time_for(1.0, 2.0, 1e9);
        assert!((t1 / t2 - 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_datum_is_a_fixed_point() {
        let g = Grid1D::new(64, 20.0).unwrap();
        let cfg = SolverConfig {
            horizon: 0.1,
            dt: 0.01,
            ..Default::default()
        };
        let (w, rep) = picard_solve(&GridFunction::zeros(g), &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations(), 1);
        assert!(w.frames().iter().all(|f| f.sup_norm() == 0.0));
        let r = reference_solve(&GridFunction::zeros(g), &cfg).unwrap();
        assert!(r.frames().iter().all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn horizon_checked_against_existence_time() {
        let g = Grid1D::new(128, 40.0).unwrap();
        let u0 = sample(&PresetDatum::gaussian(1.0, 1.0, 0.0), &g).unwrap().value;
        let cfg = SolverConfig {
            horizon: 2.0 * local_existence_time(&u0, &SolverConfig::default()),
            ..Default::default()
        };
        assert!(matches!(picard_solve(&u0, &cfg), Err(Error::InvalidParameter { name: "horizon", .. })));
    }

    #[test]
    fn blowup_is_reported() {
        let g = Grid1D::new(128, 40.0).unwrap();
        let u0 = sample(&PresetDatum::gaussian(5.0, 1.0, 0.0), &g).unwrap().value;
        let cfg = SolverConfig {
            k: 4,
            horizon: 1.0,
            dt: 0.01,
            blowup_ceiling: 1.0,
            ..Default::default()
        };
        assert!(matches!(reference_solve(&u0, &cfg), Err(Error::BlowupDetected { .. })));
    }
}
