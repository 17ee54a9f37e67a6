use serde::Serialize;

use crate::error::{Result, Warning};
use crate::gkdv::{solve_global, SolverConfig};
use crate::norms::{weighted_norm, SpaceTimeField, WeightedNormSpec};
use crate::spectral::GridFunction;

/// `Z_{s,r}` norm along a solution, with the free evolution as control.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceTrajectory {
    pub s: f64,
    pub r: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Same norm along `U(t) u0`, when a control field was given.
    pub linear_norms: Option<Vec<f64>>,
    pub initial: f64,
    pub max: f64,
    pub min: f64,
    pub ratio_to_initial: f64,
    /// `ln(max / initial) / T`
    pub growth_index: f64,
    pub warnings: Vec<Warning>,
}

fn norms_along(field: &SpaceTimeField, spec: &WeightedNormSpec) -> Result<(Vec<f64>, Option<Warning>)> {
    let mut first_warning = None;
    let mut out = Vec::with_capacity(field.len());
    for f in field.frames() {
        let d = weighted_norm(f, spec)?;
        if first_warning.is_none() {
            first_warning = d.warnings.into_iter().next();
        }
        out.push(d.value);
    }
    Ok((out, first_warning))
}

pub fn persistence_from_field(
    field: &SpaceTimeField,
    linear: Option<&SpaceTimeField>,
    spec: &WeightedNormSpec,
) -> Result<PersistenceTrajectory> {
    let spec = WeightedNormSpec::new(spec.s, spec.r)?;
    let (norms, warning) = norms_along(field, &spec)?;
    let linear_norms = linear.map(|l| norms_along(l, &spec).map(|v| v.0)).transpose()?;
    let initial = norms[0];
    let max = norms.iter().copied().fold(f64::MIN, f64::max);
    let min = norms.iter().copied().fold(f64::MAX, f64::min);
    let ratio_to_initial = if initial == 0.0 { 1.0 } else { max / initial };
    let span = field.t_end() - field.t0();
    let growth_index = if span > 0.0 { ratio_to_initial.ln() / span } else { 0.0 };
    Ok(PersistenceTrajectory {
        s: spec.s,
        r: spec.r,
        times: field.times(),
        norms,
        linear_norms,
        initial,
        max,
        min,
        ratio_to_initial,
        growth_index,
        warnings: warning.into_iter().collect(),
    })
}

/// Solves to `horizon` by patching and tracks `||u(t)||_{Z_{s,r}}`.
pub fn persistence_experiment(
    u0: &GridFunction,
    s: f64,
    r: f64,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<PersistenceTrajectory> {
    let sol = solve_global(u0, horizon, cfg)?;
    let linear = SpaceTimeField::linear_flow(u0, 0.0, sol.field.dt(), sol.field.len() - 1)?;
    persistence_from_field(&sol.field, Some(&linear), &WeightedNormSpec::new(s, r)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub r: f64,
    pub growth_index: f64,
    pub ratio_to_initial: f64,
    /// `r > s/2`, outside the range where persistence can hold.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityProbe {
    pub s: f64,
    /// Sorted by `r`.
    pub rows: Vec<ProbeRow>,
    /// Growth index nondecreasing in `r`.
    pub nondecreasing: bool,
}

pub fn optimality_probe_from_field(field: &SpaceTimeField, s: f64, r_list: &[f64]) -> Result<OptimalityProbe> {
    let mut rs = r_list.to_vec();
    rs.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(rs.len());
    for r in rs {
        let t = persistence_from_field(field, None, &WeightedNormSpec::new(s, r)?)?;
        rows.push(ProbeRow {
            r,
            growth_index: t.growth_index,
            ratio_to_initial: t.ratio_to_initial,
            flagged: r > 0.5 * s,
        });
    }
    let nondecreasing = rows.windows(2).all(|w| w[1].growth_index >= w[0].growth_index);
    Ok(OptimalityProbe { s, rows, nondecreasing })
}

/// Growth indices of `Z_{s,r}` along one patched solution for every `r`.
pub fn optimality_probe(
    u0: &GridFunction,
    s: f64,
    r_list: &[f64],
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<OptimalityProbe> {
    let sol = solve_global(u0, horizon, cfg)?;
    optimality_probe_from_field(&sol.field, s, r_list)
}
