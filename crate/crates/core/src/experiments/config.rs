use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gkdv::SolverConfig;
use crate::spectral::{Grid1D, PresetDatum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyIdentities,
    Solve,
    Persistence,
    PhiScan,
    Strichartz,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::VerifyIdentities,
        Command::Solve,
        Command::Persistence,
        Command::PhiScan,
        Command::Strichartz,
        Command::Calibrate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::Solve => "solve",
            Command::Persistence => "persistence",
            Command::PhiScan => "phi-scan",
            Command::Strichartz => "strichartz",
            Command::Calibrate => "calibrate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config("command", format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config("output.format", format!("unknown format `{s}`, expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = Grid1D::desk();
        Self {
            n: g.n(),
            length: g.length(),
        }
    }
}

/// How the `solve` command integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Patched Picard iteration.
    #[default]
    Global,
    /// Integrating-factor Runge-Kutta only.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub t: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `beta = beta_ratio * alpha`, each ratio in (0, 1).
    pub beta_ratio: Vec<f64>,
    /// `(s, r)` pairs for weighted-norm trajectories.
    pub sr: Vec<[f64; 2]>,
    /// Sobolev order and weight powers of the optimality probe.
    pub probe_s: f64,
    pub probe_r: Vec<f64>,
    pub t_window: Vec<f64>,
    pub n_times: usize,
    pub calibration_horizons: Vec<f64>,
    pub calibration_dt: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            t: vec![0.1, 0.5, 1.0],
            alpha: vec![0.25, 0.5, 0.75],
            beta_ratio: vec![0.5],
            sr: vec![[1.0, 0.5]],
            probe_s: 1.0,
            probe_r: Vec::new(),
            t_window: vec![5.0, 10.0, 20.0],
            n_times: 2001,
            calibration_horizons: vec![1.0, 2.0, 4.0],
            calibration_dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_datum")]
    pub datum: PresetDatum,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default = "default_battery")]
    pub battery: Vec<PresetDatum>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_datum() -> PresetDatum {
    PresetDatum::gaussian(1.0, 2.0, 0.0)
}

/// Gaussians of width 1 and 2 and a unit sech.
pub fn default_battery() -> Vec<PresetDatum> {
    vec![
        PresetDatum::gaussian(1.0, 1.0, 0.0),
        PresetDatum::gaussian(1.0, 2.0, 0.0),
        PresetDatum::sech(1.0, 1.0, 0.0),
    ]
}

fn toml_error(e: toml::de::Error) -> Error {
    let key = e.message().split('`').nth(1).unwrap_or("config").to_string();
    Error::config(key, e.to_string().trim().to_string())
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            method: Method::default(),
            grid: GridConfig::default(),
            datum: default_datum(),
            solver: SolverConfig::default(),
            scan: ScanConfig::default(),
            battery: default_battery(),
            output: OutputConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Like [`parse`](Self::parse), but the command comes from the caller. A
    /// `command` key in the text must agree with it.
    pub fn parse_for(text: &str, command: Command) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(toml_error)?;
        match table.get("command").map(|v| v.as_str()) {
            None => {
                table.insert("command".into(), command.name().into());
            }
            Some(Some(name)) if name == command.name() => {}
            Some(other) => {
                return Err(Error::config(
                    "command",
                    format!("config says {:?} but `{command}` was requested", other.unwrap_or("?")),
                ))
            }
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(toml_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.grid.n, self.grid.length)
    }

    /// Checks everything the chosen command needs; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid().map_err(|e| Error::config("grid", e.to_string()))?;
        self.datum
            .validate(&grid)
            .map_err(|e| Error::config("datum", e.to_string()))?;
        for (i, d) in self.battery.iter().enumerate() {
            d.validate(&grid)
                .map_err(|e| Error::config(format!("battery[{i}]"), e.to_string()))?;
        }
        self.solver
            .validate()
            .map_err(|e| Error::config("solver", e.to_string()))?;
        let s = &self.scan;
        let nonempty = |key: &str, v: &[f64]| {
            if v.is_empty() {
                Err(Error::config(key, "scan list must not be empty"))
            } else {
                Ok(())
            }
        };
        let each = |key: &str, v: &[f64], ok: &dyn Fn(f64) -> bool, what: &str| {
            match v.iter().find(|x| !ok(**x)) {
                Some(x) => Err(Error::config(key, format!("value {x} {what}"))),
                None => Ok(()),
            }
        };
        let unit = |x: f64| x > 0.0 && x < 1.0;
        let finite = |x: f64| x.is_finite();
        match self.command {
            Command::VerifyIdentities | Command::PhiScan => {
                nonempty("scan.t", &s.t)?;
                nonempty("scan.alpha", &s.alpha)?;
                each("scan.t", &s.t, &finite, "is not finite")?;
                each("scan.alpha", &s.alpha, &unit, "must lie in (0, 1)")?;
                each("scan.beta_ratio", &s.beta_ratio, &unit, "must lie in (0, 1)")?;
            }
            Command::Solve => {}
            Command::Persistence => {
                if s.sr.is_empty() && s.probe_r.is_empty() {
                    return Err(Error::config("scan.sr", "scan list must not be empty"));
                }
                for [sv, r] in &s.sr {
                    if !(sv.is_finite() && *r >= 0.0 && r.is_finite()) {
                        return Err(Error::config("scan.sr", format!("pair ({sv}, {r}) needs r >= 0")));
                    }
                }
                each("scan.probe_r", &s.probe_r, &|x| x >= 0.0 && x.is_finite(), "must be nonnegative")?;
            }
            Command::Strichartz => {
                nonempty("scan.t_window", &s.t_window)?;
                each("scan.t_window", &s.t_window, &|x| x > 0.0 && x.is_finite(), "must be positive")?;
                if s.n_times < 2 {
                    return Err(Error::config("scan.n_times", "need at least two time samples"));
                }
                if self.battery.is_empty() {
                    return Err(Error::config("battery", "battery must not be empty"));
                }
            }
            Command::Calibrate => {
                if self.battery.is_empty() {
                    return Err(Error::config("battery", "battery must not be empty"));
                }
                nonempty("scan.calibration_horizons", &s.calibration_horizons)?;
                each("scan.calibration_horizons", &s.calibration_horizons, &|x| x > 0.0, "must be positive")?;
                each("scan.alpha", &s.alpha, &unit, "must lie in (0, 1)")?;
                if !(s.calibration_dt > 0.0) {
                    return Err(Error::config("scan.calibration_dt", "must be positive"));
                }
                nonempty("scan.t_window", &s.t_window)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("command = \"solve\"").unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.grid.n, 1024);
        assert_eq!(cfg.solver.k, 2);
    }

    #[test]
    fn empty_scan_names_field() {
        let err = ExperimentConfig::parse("command = \"verify-identities\"\n[scan]\nt = []").unwrap_err();
        assert!(err.to_string().contains("scan.t"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::parse("command = \"solve\"\n[solver]\nbogus = 1").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn command_from_caller() {
        let cfg = ExperimentConfig::parse_for("[grid]\nn = 256\nlength = 40.0", Command::PhiScan).unwrap();
        assert_eq!(cfg.command, Command::PhiScan);
        assert_eq!(cfg.grid.n, 256);
        let err = ExperimentConfig::parse_for("command = \"solve\"", Command::PhiScan).unwrap_err();
        assert!(err.to_string().contains("`command`"), "{err}");
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = "command = \"persistence\"\nseed = 3\n[datum]\nkind = \"sech\"\namplitude = 0.5\nscale = 2.0\nspeed = 0.0\n[scan]\nprobe_r = [0.25, 0.5]\n";
        let a = ExperimentConfig::parse(text).unwrap();
        let once = a.to_toml();
        let b = ExperimentConfig::parse(&once).unwrap();
        assert_eq!(a, b);
        assert_eq!(once, b.to_toml());
    }
}
