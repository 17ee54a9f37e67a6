//! Config-driven experiment runner behind the command-line front end.

mod config;
mod persistence;
mod report;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub use config::{
    default_battery, Command, ExperimentConfig, Format, GridConfig, Method, OutputConfig, ScanConfig,
};
pub use persistence::{
    optimality_probe, optimality_probe_from_field, persistence_experiment, persistence_from_field, OptimalityProbe,
    PersistenceTrajectory, ProbeRow,
};
pub use report::{Attachment, Cell, ExperimentReport, Table};

use crate::error::{Error, Result, Warning};
use crate::fractional::calibrate_stein_constant;
use crate::gkdv::{calibrate_c0, conserved_quantities, quarter_derivative_norm, reference_solve, solve_global, GlobalSolution};
use crate::norms::{SpaceTimeField, WeightedNormSpec};
use crate::propagators::{
    airy_propagate, dgbo_propagate, gamma_commutation_residual, phi_operator, strichartz_ratio,
    weighted_identity_residual, weighted_identity_residual_beta, IdentityResidualReport, PhasePolynomial,
};
use crate::spectral::{inverse_transform, sample, GridFunction, PresetDatum};
use crate::Grid1D;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs the configured command. Nothing is written to disk.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let started = Instant::now();
    let grid = cfg.grid()?;
    let out = match cfg.command {
        Command::VerifyIdentities => verify_identities(cfg, &grid)?,
        Command::Solve => solve(cfg, &grid)?,
        Command::Persistence => persistence(cfg, &grid)?,
        Command::PhiScan => phi_scan(cfg, &grid)?,
        Command::Strichartz => strichartz(cfg, &grid)?,
        Command::Calibrate => calibrate(cfg, &grid)?,
    };
    Ok(ExperimentReport {
        command: cfg.command.to_string(),
        version: VERSION.to_string(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
        summary: out.summary,
        warnings: out.warnings,
        tables: out.tables,
        attachments: out.attachments,
    })
}

#[derive(Default)]
struct Output {
    summary: serde_json::Value,
    warnings: Vec<Warning>,
    tables: Vec<Table>,
    attachments: Vec<Attachment>,
}

fn datum(cfg: &ExperimentConfig, grid: &Grid1D, warnings: &mut Vec<Warning>) -> Result<GridFunction> {
    let d = sample(&cfg.datum, grid)?;
    warnings.extend(d.warnings);
    Ok(d.value)
}

fn push_unique(warnings: &mut Vec<Warning>, more: impl IntoIterator<Item = Warning>) {
    for w in more {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
}

/// Sum of a few gaussians with parameters drawn from the seeded generator.
pub fn random_superposition(grid: &Grid1D, seed: u64, terms: usize) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * grid.length();
    let params: Vec<(f64, f64, f64)> = (0..terms)
        .map(|_| {
            let amplitude = rng.random_range(-1.0..1.0);
            let width = rng.random_range(0.02..0.06) * half;
            let center = rng.random_range(-0.2..0.2) * half;
            (amplitude, width, center)
        })
        .collect();
    GridFunction::from_fn(*grid, |x| {
        params
            .iter()
            .map(|&(a, w, c)| PresetDatum::gaussian(a, w, c).evaluate(x, 0.0, grid))
            .sum()
    })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

const GROUP_PARTNER: f64 = -0.7;

enum Job {
    Gamma(f64),
    Weighted(f64, f64),
    Beta(f64, f64, f64),
}

fn identity_row(table: &mut Table, name: &str, r: &IdentityResidualReport) {
    table.push(vec![
        name.into(),
        r.t.into(),
        r.alpha.into(),
        r.beta.into(),
        r.residual_l2.into(),
        r.lhs_l2.into(),
        r.relative_residual().into(),
        r.bound_ratio.into(),
    ]);
}

fn verify_identities(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<Output> {
    let mut warnings = Vec::new();
    let u0 = datum(cfg, grid, &mut warnings)?;
    let s = &cfg.scan;
    let (ts, alphas, ratios) = (sorted(&s.t), sorted(&s.alpha), sorted(&s.beta_ratio));
    let mut jobs = Vec::new();
    for &t in &ts {
        jobs.push(Job::Gamma(t));
    }
    for &a in &alphas {
        for &t in &ts {
            jobs.push(Job::Weighted(a, t));
            for &q in &ratios {
                jobs.push(Job::Beta(a, t, q * a));
            }
        }
    }
    let results: Vec<Result<(&str, IdentityResidualReport)>> = jobs
        .par_iter()
        .map(|job| match *job {
            Job::Gamma(t) => Ok(("gamma_commutation", gamma_commutation_residual(&u0, t))),
            Job::Weighted(a, t) => weighted_identity_residual(&u0, t, a).map(|r| ("weighted_identity", r)),
            Job::Beta(a, t, b) => weighted_identity_residual_beta(&u0, t, a, b).map(|r| ("weighted_identity_beta", r)),
        })
        .collect();
    let mut table = Table::new(
        "identity_residuals",
        &[
            "identity",
            "t",
            "alpha",
            "beta",
            "residual_l2",
            "lhs_l2",
            "relative_residual",
            "bound_ratio",
        ],
    );
    let mut worst = std::collections::BTreeMap::<&str, f64>::new();
    let mut max_bound: f64 = 0.0;
    for r in results {
        let (name, rep) = r?;
        identity_row(&mut table, name, &rep);
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(rep.relative_residual());
        max_bound = max_bound.max(rep.bound_ratio.unwrap_or(0.0));
        push_unique(&mut warnings, rep.warnings);
    }

    let mut group = Table::new("group_checks", &["datum", "t", "s", "unitarity_defect", "group_law_defect", "dgbo_unitarity_defect"]);
    let random = random_superposition(grid, cfg.seed, 4);
    let mut worst_group: f64 = 0.0;
    for (label, f) in [("datum", &u0), ("random_superposition", &random)] {
        let norm = f.l2_norm();
        if norm == 0.0 {
            continue;
        }
        let rows: Vec<[f64; 3]> = ts
            .par_iter()
            .map(|&t| {
                let u = airy_propagate(f, t);
                let unit = (u.l2_norm() - norm).abs() / norm;
                let two = airy_propagate(&airy_propagate(f, GROUP_PARTNER), t);
                let one = airy_propagate(f, t + GROUP_PARTNER);
                let law = two.sub(&one).expect("same grid").l2_norm() / norm;
                let dg = dgbo_propagate(f, t, 0.5).expect("valid dispersion parameter");
                [unit, law, (dg.l2_norm() - norm).abs() / norm]
            })
            .collect();
        for (&t, row) in ts.iter().zip(rows) {
            worst_group = worst_group.max(row[0]).max(row[1]).max(row[2]);
            group.push(vec![label.into(), t.into(), GROUP_PARTNER.into(), row[0].into(), row[1].into(), row[2].into()]);
        }
    }

    Ok(Output {
        summary: json!({
            "max_relative_residual": worst,
            "max_bound_ratio": max_bound,
            "max_group_defect": worst_group,
        }),
        warnings,
        tables: vec![table, group],
        attachments: Vec::new(),
    })
}

fn trajectory_table(field: &SpaceTimeField, k: u32) -> (Table, f64) {
    let cq = conserved_quantities(field, k);
    let mut t = Table::new("trajectory", &["time", "l2_norm", "mass", "energy", "sup_norm", "quarter_derivative_norm"]);
    let quarter: Vec<f64> = field.frames().par_iter().map(quarter_derivative_norm).collect();
    for (i, f) in field.frames().iter().enumerate() {
        t.push(vec![
            cq.times[i].into(),
            cq.l2[i].into(),
            cq.mass[i].into(),
            cq.energy[i].into(),
            f.sup_norm().into(),
            quarter[i].into(),
        ]);
    }
    (t, cq.max_relative_l2_drift())
}

fn patch_table(sol: &GlobalSolution) -> Table {
    let mut t = Table::new(
        "patches",
        &[
            "patch",
            "t_start",
            "t_end",
            "steps",
            "k_bound",
            "t_prime",
            "iterations",
            "converged",
            "final_successive_diff",
            "max_contraction_ratio",
            "final_mu1",
            "ball_radius",
            "inside_ball",
        ],
    );
    for (i, p) in sol.patches.iter().enumerate() {
        let c = &p.contraction;
        t.push(vec![
            i.into(),
            p.t_start.into(),
            p.t_end.into(),
            p.steps.into(),
            p.k_bound.into(),
            p.t_prime.into(),
            c.iterations().into(),
            c.converged.into(),
            c.successive_diffs.last().copied().unwrap_or(0.0).into(),
            c.contraction_ratios.iter().copied().fold(0.0, f64::max).into(),
            c.iterate_mu1.last().copied().unwrap_or(0.0).into(),
            c.ball_radius.into(),
            c.inside_ball().into(),
        ]);
    }
    t
}

fn solve(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<Output> {
    let mut warnings = Vec::new();
    let u0 = datum(cfg, grid, &mut warnings)?;
    let horizon = cfg.solver.horizon;
    let (field, patches) = match cfg.method {
        config::Method::Global => {
            let sol = solve_global(&u0, horizon, &cfg.solver)?;
            for p in &sol.patches {
                push_unique(&mut warnings, p.contraction.warnings.clone());
            }
            let t = patch_table(&sol);
            (sol.field, Some(t))
        }
        config::Method::Reference => (reference_solve(&u0, &cfg.solver)?, None),
    };
    let (traj, drift) = trajectory_table(&field, cfg.solver.k);
    let mut tables = vec![traj];
    let patch_count = patches.as_ref().map(|t| t.rows.len());
    tables.extend(patches);
    Ok(Output {
        summary: json!({
            "final_time": field.t_end(),
            "frames": field.len(),
            "max_relative_l2_drift": drift,
            "max_imaginary_part": field.max_imag(),
            "patches": patch_count,
        }),
        warnings,
        tables,
        attachments: Vec::new(),
    })
}

fn persistence(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<Output> {
    let mut warnings = Vec::new();
    let u0 = datum(cfg, grid, &mut warnings)?;
    let sol = solve_global(&u0, cfg.solver.horizon, &cfg.solver)?;
    let field = &sol.field;
    let linear = SpaceTimeField::linear_flow(&u0, 0.0, field.dt(), field.len() - 1)?;

    let mut traj = Table::new("persistence", &["s", "r", "time", "zsr_norm", "zsr_norm_linear_flow"]);
    let mut summary_table = Table::new(
        "persistence_summary",
        &["s", "r", "initial", "max", "min", "ratio_to_initial", "growth_index", "linear_flow_ratio_to_initial"],
    );
    let mut pairs = cfg.scan.sr.clone();
    pairs.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let runs: Vec<Result<PersistenceTrajectory>> = pairs
        .par_iter()
        .map(|&[s, r]| persistence_from_field(field, Some(&linear), &WeightedNormSpec::new(s, r)?))
        .collect();
    let mut summaries = Vec::new();
    for run in runs {
        let p = run?;
        let lin = p.linear_norms.clone().unwrap_or_default();
        for (i, (&t, &v)) in p.times.iter().zip(&p.norms).enumerate() {
            traj.push(vec![p.s.into(), p.r.into(), t.into(), v.into(), lin.get(i).copied().into()]);
        }
        let lin_ratio = if lin.first().copied().unwrap_or(0.0) == 0.0 {
            1.0
        } else {
            lin.iter().copied().fold(0.0, f64::max) / lin[0]
        };
        summary_table.push(vec![
            p.s.into(),
            p.r.into(),
            p.initial.into(),
            p.max.into(),
            p.min.into(),
            p.ratio_to_initial.into(),
            p.growth_index.into(),
            lin_ratio.into(),
        ]);
        push_unique(&mut warnings, p.warnings.clone());
        summaries.push(json!({"s": p.s, "r": p.r, "ratio_to_initial": p.ratio_to_initial, "growth_index": p.growth_index}));
    }
    let mut tables = vec![traj, summary_table];
    let mut probe_summary = serde_json::Value::Null;
    if !cfg.scan.probe_r.is_empty() {
        let probe = optimality_probe_from_field(field, cfg.scan.probe_s, &cfg.scan.probe_r)?;
        let mut t = Table::new("optimality_probe", &["s", "r", "growth_index", "ratio_to_initial", "flagged"]);
        for row in &probe.rows {
            t.push(vec![probe.s.into(), row.r.into(), row.growth_index.into(), row.ratio_to_initial.into(), row.flagged.into()]);
        }
        tables.push(t);
        probe_summary = json!({"s": probe.s, "nondecreasing": probe.nondecreasing});
    }
    tables.push(patch_table(&sol));
    Ok(Output {
        summary: json!({
            "horizon": field.t_end(),
            "patches": sol.patches.len(),
            "trajectories": summaries,
            "optimality_probe": probe_summary,
        }),
        warnings,
        tables,
        attachments: Vec::new(),
    })
}

fn phi_scan(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<Output> {
    let mut warnings = Vec::new();
    let u0 = datum(cfg, grid, &mut warnings)?;
    let s = &cfg.scan;
    let mut points = Vec::new();
    for &a in &sorted(&s.alpha) {
        for &t in &sorted(&s.t) {
            points.push((a, t, None));
            for &q in &sorted(&s.beta_ratio) {
                points.push((a, t, Some(q * a)));
            }
        }
    }
    let rows: Vec<Result<(f64, IdentityResidualReport)>> = points
        .par_iter()
        .map(|&(a, t, b)| {
            let phi = inverse_transform(&phi_operator(&u0, &PhasePolynomial::airy(t), a)?).l2_norm();
            let rep = match b {
                None => weighted_identity_residual(&u0, t, a)?,
                Some(b) => weighted_identity_residual_beta(&u0, t, a, b)?,
            };
            Ok((phi, rep))
        })
        .collect();
    let mut table = Table::new("phi_scan", &["alpha", "t", "beta", "phi_l2", "bound_ratio", "relative_residual"]);
    let mut c_star: f64 = 0.0;
    for r in rows {
        let (phi, rep) = r?;
        c_star = c_star.max(rep.bound_ratio.unwrap_or(0.0));
        table.push(vec![
            rep.alpha.into(),
            rep.t.into(),
            rep.beta.into(),
            phi.into(),
            rep.bound_ratio.into(),
            rep.relative_residual().into(),
        ]);
        push_unique(&mut warnings, rep.warnings);
    }
    Ok(Output {
        summary: json!({ "max_bound_ratio": c_star }),
        warnings,
        tables: vec![table],
        attachments: Vec::new(),
    })
}

fn battery(cfg: &ExperimentConfig, grid: &Grid1D, warnings: &mut Vec<Warning>) -> Result<Vec<(usize, GridFunction)>> {
    let mut out = Vec::new();
    for (i, d) in cfg.battery.iter().enumerate() {
        let s = sample(d, grid)?;
        push_unique(warnings, s.warnings);
        if s.value.sup_norm() > 0.0 {
            out.push((i, s.value));
        }
    }
    if out.is_empty() {
        return Err(Error::config("battery", "degenerate battery: every datum is zero"));
    }
    Ok(out)
}

fn strichartz_rows(cfg: &ExperimentConfig, data: &[(usize, GridFunction)]) -> Result<(Table, f64, f64)> {
    let windows = sorted(&cfg.scan.t_window);
    let mut t = Table::new("strichartz", &["datum", "t_window", "n_times", "strichartz_ratio"]);
    let mut constant: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for (i, u0) in data {
        let ratios: Vec<Result<f64>> = windows
            .par_iter()
            .map(|&w| strichartz_ratio(u0, w, cfg.scan.n_times))
            .collect();
        let ratios: Vec<f64> = ratios.into_iter().collect::<Result<_>>()?;
        for (j, (&w, &r)) in windows.iter().zip(&ratios).enumerate() {
            constant = constant.max(r);
            if j > 0 {
                tail = tail.max((r - ratios[j - 1]).abs() / ratios[j - 1]);
            }
            t.push(vec![(*i).into(), w.into(), cfg.scan.n_times.into(), r.into()]);
        }
    }
    Ok((t, constant, tail))
}

fn strichartz(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<Output> {
    let mut warnings = Vec::new();
    let data = battery(cfg, grid, &mut warnings)?;
    let (table, constant, tail) = strichartz_rows(cfg, &data)?;
    Ok(Output {
        summary: json!({
            "strichartz_constant": constant,
            "max_relative_change_between_windows": tail,
            "skipped_zero_data": cfg.battery.len() - data.len(),
        }),
        warnings,
        tables: vec![table],
        attachments: Vec::new(),
    })
}

/// Contents of the constants file written by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub c0: f64,
    pub strichartz_constant: f64,
    pub c_alpha: Vec<CalibratedStein>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibratedStein {
    pub alpha: f64,
    /// Fitted on the first nonzero battery datum.
    pub value: f64,
    /// Largest relative deviation of the other data's fits from `value`.
    pub spread: f64,
}

fn calibrate(cfg: &ExperimentConfig, grid: &Grid1D) -> Result<Output> {
    let mut warnings = Vec::new();
    let data = battery(cfg, grid, &mut warnings)?;
    let s = &cfg.scan;

    let mut c0_table = Table::new("linear_estimate_ratios", &["datum", "horizon", "mu1_over_quarter_derivative_norm"]);
    for (i, u0) in &data {
        for &h in &s.calibration_horizons {
            let ratio = calibrate_c0(std::slice::from_ref(u0), &[h], s.calibration_dt)?;
            c0_table.push(vec![(*i).into(), h.into(), ratio.into()]);
        }
    }
    let fields: Vec<GridFunction> = data.iter().map(|(_, f)| f.clone()).collect();
    let c0 = calibrate_c0(&fields, &s.calibration_horizons, s.calibration_dt)?;

    let mut stein_table = Table::new("stein_constants", &["alpha", "datum", "c_alpha_calibrated", "c_alpha_formula"]);
    let mut c_alpha = Vec::new();
    for &a in &sorted(&s.alpha) {
        let fits: Vec<Result<f64>> = data.par_iter().map(|(_, f)| calibrate_stein_constant(f, a)).collect();
        let fits: Vec<f64> = fits.into_iter().collect::<Result<_>>()?;
        for ((i, _), &v) in data.iter().zip(&fits) {
            stein_table.push(vec![a.into(), (*i).into(), v.into(), crate::special::stein_constant(a).into()]);
        }
        let value = fits[0];
        let spread = fits.iter().fold(0.0f64, |m, v| m.max((v / value - 1.0).abs()));
        c_alpha.push(CalibratedStein { alpha: a, value, spread });
    }

    let (str_table, strichartz_constant, _) = strichartz_rows(cfg, &data)?;
    let constants = Constants {
        c0,
        strichartz_constant,
        c_alpha,
    };
    let contents = toml::to_string(&constants).expect("constants serialize");
    Ok(Output {
        summary: serde_json::to_value(&constants).expect("constants serialize"),
        warnings,
        tables: vec![c0_table, stein_table, str_table],
        attachments: vec![Attachment {
            file_name: "constants.toml".into(),
            contents,
        }],
    })
}
