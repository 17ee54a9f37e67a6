//! Weighted Sobolev norms, mixed space-time Lebesgue norms and the solution
//! norms used by the contraction argument.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Diagnosed, Error, Result};
use crate::fractional::bessel_derivative;
use crate::propagators::{tapered_weight, PhasePolynomial};
use crate::spectral::{forward_transform, inverse_transform, GridFunction, MultiplierTable, NyquistPolicy};
use crate::{Complex64, Grid1D};

/// Moduli below this are treated as zero before raising to large powers.
pub const UNDERFLOW_CLAMP: f64 = 1e-300;

/// Frames `w(t_i)` at `t_i = t0 + i dt`, all on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid1D,
    t0: f64,
    dt: f64,
    frames: Vec<GridFunction>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid1D, t0: f64, dt: f64, frames: Vec<GridFunction>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", dt, "time step must be positive"));
        }
        if frames.is_empty() {
            return Err(Error::invalid("frames", 0.0, "a field needs at least one frame"));
        }
        if frames.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch("all frames must share the field grid".into()));
        }
        Ok(Self { grid, t0, dt, frames })
    }

    /// `U(t) u0` sampled at `t0 + i dt`, `i = 0..=steps`.
    pub fn linear_flow(u0: &GridFunction, t0: f64, dt: f64, steps: usize) -> Result<Self> {
        let spec = forward_transform(u0);
        let g = *u0.grid();
        let frames = (0..=steps)
            .into_par_iter()
            .map(|i| {
                let t = t0 + i as f64 * dt;
                let s = PhasePolynomial::airy(t).table(g).apply_spectrum(&spec).expect("same grid");
                inverse_transform(&s).with_real_flag(u0.is_real())
            })
            .collect();
        Self::new(g, t0, dt, frames)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.frames.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|i| self.time(i)).collect()
    }

    pub fn frames(&self) -> &[GridFunction] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<GridFunction> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.frames.iter().all(GridFunction::is_real)
    }

    pub fn max_imag(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.max_imag()))
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|f| f.scale(a))
    }

    pub fn map(&self, op: impl Fn(&GridFunction) -> GridFunction + Sync + Send) -> Self {
        Self {
            grid: self.grid,
            t0: self.t0,
            dt: self.dt,
            frames: self.frames.par_iter().map(op).collect(),
        }
    }

    pub fn apply(&self, table: &MultiplierTable) -> Result<Self> {
        if *table.grid() != self.grid {
            return Err(Error::GridMismatch("multiplier and field grids differ".into()));
        }
        Ok(self.map(|f| table.apply(f).expect("grid checked")))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        Ok(Self {
            grid: self.grid,
            t0: self.t0,
            dt: self.dt,
            frames: self.frames.iter().zip(&other.frames).map(|(a, b)| a.sub(b).expect("same grid")).collect(),
        })
    }

    fn check_aligned(&self, other: &Self) -> Result<()> {
        let same_times = self.frames.len() == other.frames.len()
            && (self.t0 - other.t0).abs() <= 1e-12 * self.dt
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt;
        if self.grid != other.grid || !same_times {
            return Err(Error::GridMismatch("space-time fields are not aligned".into()));
        }
        Ok(())
    }

    /// `max_i ||w(t_i)||_2`.
    pub fn linf_t_l2_x(&self) -> f64 {
        self.frames.iter().fold(0.0, |m, f| m.max(f.l2_norm()))
    }

    /// `max_i ||a(t_i) - b(t_i)||_2` for aligned fields.
    pub fn linf_t_l2_x_distance(&self, other: &Self) -> Result<f64> {
        self.check_aligned(other)?;
        Ok(self
            .frames
            .iter()
            .zip(&other.frames)
            .fold(0.0, |m, (a, b)| m.max(a.sub(b).expect("same grid").l2_norm())))
    }

    /// Restriction to frames `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.frames.len() {
            return Err(Error::invalid("end", end as f64, "frame range out of bounds"));
        }
        Self::new(self.grid, self.time(start), self.dt, self.frames[start..=end].to_vec())
    }
}

/// Which variable the outer norm is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `L^p_x L^q_T`: time norm at each point, then space.
    SpaceOuter,
    /// `L^q_T L^p_x`: space norm at each time, then time.
    TimeOuter,
}

fn clamp(v: f64) -> f64 {
    if v < UNDERFLOW_CLAMP {
        0.0
    } else {
        v
    }
}

/// Trapezoid `L^q` norm of equally spaced samples; maximum for `q = inf`.
fn time_norm(samples: impl Iterator<Item = f64>, q: f64, dt: f64) -> f64 {
    if q.is_infinite() {
        return samples.fold(0.0, f64::max);
    }
    let vals: Vec<f64> = samples.map(|v| clamp(v).powf(q)).collect();
    if vals.len() < 2 {
        return 0.0;
    }
    let sum = vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]);
    (sum * dt).powf(1.0 / q)
}

/// Riemann `L^p` norm over grid points with weight `dx`; maximum for `p = inf`.
fn space_norm(samples: impl Iterator<Item = f64>, p: f64, dx: f64) -> f64 {
    if p.is_infinite() {
        return samples.fold(0.0, f64::max);
    }
    (samples.map(|v| clamp(v).powf(p)).sum::<f64>() * dx).powf(1.0 / p)
}

fn check_exponent(name: &'static str, v: f64) -> Result<()> {
    if v >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "Lebesgue exponent must lie in [1, inf]"))
    }
}

/// Mixed norm `L^p_x L^q_T` or `L^q_T L^p_x` of a field.
pub fn mixed_norm(w: &SpaceTimeField, p: f64, q: f64, order: Order) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let dx = w.grid.dx();
    let frames = &w.frames;
    Ok(match order {
        Order::SpaceOuter => {
            let inner: Vec<f64> = (0..w.grid.n())
                .into_par_iter()
                .map(|j| time_norm(frames.iter().map(|f| f.values()[j].norm()), q, w.dt))
                .collect();
            space_norm(inner.into_iter(), p, dx)
        }
        Order::TimeOuter => {
            let inner: Vec<f64> = frames
                .par_iter()
                .map(|f| space_norm(f.values().iter().map(|v| v.norm()), p, dx))
                .collect();
            time_norm(inner.iter().copied(), q, w.dt)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub s: f64,
    pub r: f64,
}

impl WeightedNormSpec {
    pub fn new(s: f64, r: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::invalid("s", s, "Sobolev order must be finite"));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", r, "weight power must be nonnegative"));
        }
        Ok(Self { s, r })
    }
}

/// `||J^s f||_2 + || |x|^r f ||_2`, the weight tapered at the domain edges when `r > 0`.
pub fn weighted_norm(f: &GridFunction, spec: &WeightedNormSpec) -> Result<Diagnosed<f64>> {
    let spec = WeightedNormSpec::new(spec.s, spec.r)?;
    let sobolev = bessel_derivative(f, spec.s)?.l2_norm();
    if spec.r == 0.0 {
        return Ok(Diagnosed::clean(sobolev + f.l2_norm()));
    }
    let length = f.grid().length();
    let weight = f.weighted(|x| tapered_weight(x, spec.r, length)).l2_norm();
    Ok(Diagnosed::with(sobolev + weight, f.edge_warning("weighted_norm")))
}

/// The five terms of the contraction norm, each over the field's time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mu1Terms {
    /// `||D^{1/4} w||_{L^inf_T L^2_x}`
    pub quarter_linf_t_l2_x: f64,
    /// `||w_x||_{L^20_x L^{5/2}_T}`
    pub dx_l20_x_l52_t: f64,
    /// `||D^{1/4} w||_{L^5_x L^10_T}`
    pub quarter_l5_x_l10_t: f64,
    /// `||D^{1/4} w_x||_{L^inf_x L^2_T}`
    pub quarter_dx_linf_x_l2_t: f64,
    /// `||w||_{L^4_x L^inf_T}`
    pub l4_x_linf_t: f64,
}

impl Mu1Terms {
    pub fn total(&self) -> f64 {
        self.quarter_linf_t_l2_x + self.dx_l20_x_l52_t + self.quarter_l5_x_l10_t + self.quarter_dx_linf_x_l2_t + self.l4_x_linf_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mu2Terms {
    pub mu1: Mu1Terms,
    /// `||w||_{L^inf_T L^2_x}`
    pub linf_t_l2_x: f64,
    /// `||w_x||_{L^inf_x L^2_T}`
    pub dx_linf_x_l2_t: f64,
    /// `||w||_{L^6_T L^inf_x}`
    pub l6_t_linf_x: f64,
}

impl Mu2Terms {
    pub fn extra(&self) -> f64 {
        self.linf_t_l2_x + self.dx_linf_x_l2_t + self.l6_t_linf_x
    }

    pub fn total(&self) -> f64 {
        self.mu1.total() + self.extra()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mu3Terms {
    pub mu2: Mu2Terms,
    pub r: f64,
    /// `|| |x|^r w ||_{L^inf_T L^2_x}`
    pub weighted_linf_t_l2_x: f64,
}

impl Mu3Terms {
    pub fn total(&self) -> f64 {
        self.mu2.total() + self.weighted_linf_t_l2_x
    }
}

struct Derived {
    quarter: SpaceTimeField,
    dx: SpaceTimeField,
    quarter_dx: SpaceTimeField,
}

fn derived(w: &SpaceTimeField) -> Derived {
    let g = w.grid;
    let tables = [
        MultiplierTable::real(g, |xi| xi.abs().powf(0.25), NyquistPolicy::Symmetrize),
        MultiplierTable::new(g, |xi| Complex64::new(0.0, xi), NyquistPolicy::Symmetrize),
        MultiplierTable::new(g, |xi| Complex64::new(0.0, xi * xi.abs().powf(0.25)), NyquistPolicy::Symmetrize),
    ]
    .map(|t| t.expect("finite multiplier"));
    let outputs: Vec<[GridFunction; 3]> = w
        .frames
        .par_iter()
        .map(|f| {
            let spec = forward_transform(f);
            tables
                .each_ref()
                .map(|t| inverse_transform(&t.apply_spectrum(&spec).expect("same grid")))
        })
        .collect();
    let mut cols: [Vec<GridFunction>; 3] = Default::default();
    for triple in outputs {
        for (col, f) in cols.iter_mut().zip(triple) {
            col.push(f);
        }
    }
    let [quarter, dx, quarter_dx] = cols.map(|frames| SpaceTimeField {
        grid: g,
        t0: w.t0,
        dt: w.dt,
        frames,
    });
    Derived { quarter, dx, quarter_dx }
}

fn mu1_from(w: &SpaceTimeField, d: &Derived) -> Mu1Terms {
    let inf = f64::INFINITY;
    let m = |f: &SpaceTimeField, p, q, o| mixed_norm(f, p, q, o).expect("valid exponents");
    Mu1Terms {
        quarter_linf_t_l2_x: m(&d.quarter, 2.0, inf, Order::TimeOuter),
        dx_l20_x_l52_t: m(&d.dx, 20.0, 2.5, Order::SpaceOuter),
        quarter_l5_x_l10_t: m(&d.quarter, 5.0, 10.0, Order::SpaceOuter),
        quarter_dx_linf_x_l2_t: m(&d.quarter_dx, inf, 2.0, Order::SpaceOuter),
        l4_x_linf_t: m(w, 4.0, inf, Order::SpaceOuter),
    }
}

pub fn mu1_terms(w: &SpaceTimeField) -> Mu1Terms {
    mu1_from(w, &derived(w))
}

/// Contraction norm over the field's time window.
pub fn mu1(w: &SpaceTimeField) -> f64 {
    mu1_terms(w).total()
}

pub fn mu2_terms(w: &SpaceTimeField) -> Mu2Terms {
    let d = derived(w);
    let inf = f64::INFINITY;
    Mu2Terms {
        mu1: mu1_from(w, &d),
        linf_t_l2_x: w.linf_t_l2_x(),
        dx_linf_x_l2_t: mixed_norm(&d.dx, inf, 2.0, Order::SpaceOuter).expect("valid exponents"),
        l6_t_linf_x: mixed_norm(w, inf, 6.0, Order::TimeOuter).expect("valid exponents"),
    }
}

pub fn mu2(w: &SpaceTimeField) -> f64 {
    mu2_terms(w).total()
}

pub fn mu3_terms(w: &SpaceTimeField, r: f64) -> Result<Mu3Terms> {
    WeightedNormSpec::new(0.0, r)?;
    let length = w.grid.length();
    let weighted = w
        .frames
        .iter()
        .fold(0.0f64, |m, f| m.max(f.weighted(|x| tapered_weight(x, r, length)).l2_norm()));
    Ok(Mu3Terms {
        mu2: mu2_terms(w),
        r,
        weighted_linf_t_l2_x: weighted,
    })
}

pub fn mu3(w: &SpaceTimeField, r: f64) -> Result<f64> {
    Ok(mu3_terms(w, r)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{sample, PresetDatum};

    fn constant_field(n: usize, length: f64, steps: usize, dt: f64) -> SpaceTimeField {
        let g = Grid1D::new(n, length).unwrap();
        let f = GridFunction::from_fn(g, |_| 1.0);
        SpaceTimeField::new(g, 0.0, dt, vec![f; steps + 1]).unwrap()
    }

    #[test]
    fn constant_field_closed_form() {
        let w = constant_field(16, 3.0, 10, 0.2);
        for (p, q) in [(2.0, 2.0), (4.0, 2.5), (20.0, 2.5), (f64::INFINITY, 2.0), (5.0, f64::INFINITY)] {
            let exact = 3f64.powf(1.0 / p) * 2f64.powf(1.0 / q);
            for o in [Order::SpaceOuter, Order::TimeOuter] {
                let v = mixed_norm(&w, p, q, o).unwrap();
                assert!((v - exact).abs() < 1e-12 * exact, "{p} {q} {o:?} {v} {exact}");
            }
        }
        assert!(mixed_norm(&w, 0.5, 2.0, Order::SpaceOuter).is_err());
    }

    #[test]
    fn weighted_norm_cases() {
        let g = Grid1D::desk();
        let f = sample(&PresetDatum::gaussian(1.0, 1.0, 0.0), &g).unwrap().value;
        let z = weighted_norm(&GridFunction::zeros(g), &WeightedNormSpec::new(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(z.value, 0.0);
        let two = weighted_norm(&f, &WeightedNormSpec::new(0.0, 0.0).unwrap()).unwrap();
        assert!((two.value - 2.0 * f.l2_norm()).abs() < 1e-13);
        let moment = weighted_norm(&f, &WeightedNormSpec::new(0.0, 1.0).unwrap()).unwrap().value - f.l2_norm();
        let exact = (std::f64::consts::PI.sqrt() / 2.0).sqrt();
        assert!((moment - exact).abs() < 1e-8, "{moment} {exact}");
        assert!(WeightedNormSpec::new(0.0, -0.1).is_err());
    }

    #[test]
    fn mu_norms_nest_and_vanish() {
        let g = Grid1D::new(256, 50.0).unwrap();
        let zero = SpaceTimeField::new(g, 0.0, 0.1, vec![GridFunction::zeros(g); 5]).unwrap();
        assert_eq!(mu1(&zero), 0.0);
        assert_eq!(mu3(&zero, 0.125).unwrap(), 0.0);
        let u0 = sample(&PresetDatum::gaussian(1.0, 2.0, 0.0), &g).unwrap().value;
        let w = SpaceTimeField::linear_flow(&u0, 0.0, 0.05, 20).unwrap();
        let (a, b, c) = (mu1(&w), mu2(&w), mu3(&w, 0.125).unwrap());
        assert!(0.0 < a && a <= b && b <= c);
    }
}
