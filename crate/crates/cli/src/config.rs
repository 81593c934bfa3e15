//! Run configuration: a plain `key = value` file, overridden key by key from
//! the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    /// Interaction parameters of the sweep; empty means the subcommand default.
    pub eps: Vec<f64>,
    pub resolution: usize,
    /// Box radius for grids; `None` picks it from the configuration.
    pub box_radius: Option<f64>,
    /// Quadrature tolerance; `None` means 1e-8, or 1e-6 for n ≥ 3.
    pub quad_tolerance: Option<f64>,
    pub cg_tolerance: f64,
    pub seed: u64,
    /// Monte Carlo samples for the kernel cross-check.
    pub samples: usize,
    pub kernel_check: bool,
    /// Wall-clock budget in seconds; later sweep points are dropped past it.
    pub budget: f64,
    /// Multiplies the calibrated `c₀`, for negative controls.
    pub c0_scale: f64,
    /// Test points for the pointwise identities.
    pub points: usize,
    pub input: Option<PathBuf>,
    /// Initial bubbles `(λ, t₀)` for `fit`.
    pub init: Vec<(f64, f64)>,
    pub deficit_only: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 1,
            eps: Vec::new(),
            resolution: 256,
            box_radius: None,
            quad_tolerance: None,
            cg_tolerance: 1e-10,
            seed: 1,
            samples: 2_000_000,
            kernel_check: true,
            budget: 600.0,
            c0_scale: 1.0,
            points: 200,
            input: None,
            init: Vec::new(),
            deficit_only: false,
            out: PathBuf::from("hstab-out"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "n",
    "eps",
    "resolution",
    "box_radius",
    "quad_tolerance",
    "cg_tolerance",
    "seed",
    "samples",
    "kernel_check",
    "budget",
    "c0_scale",
    "points",
    "input",
    "init",
    "deficit_only",
    "out",
];

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Usage(format!("{key} = {value:?}: {what}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| bad(key, value, "not a number"))
}

fn boolean(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn opt_num(key: &str, value: &str) -> Result<Option<f64>, CliError> {
    match value.trim() {
        "auto" | "" => Ok(None),
        v => Ok(Some(num(key, v)?)),
    }
}

impl RunConfig {
    /// Set one key; `-` and `_` are interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "n" => self.n = num(&key, v)?,
            "eps" => {
                self.eps = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|s| num(&key, s)).collect::<Result<_, _>>()?
                }
            }
            "resolution" => self.resolution = num(&key, v)?,
            "box_radius" => self.box_radius = opt_num(&key, v)?,
            "quad_tolerance" => self.quad_tolerance = opt_num(&key, v)?,
            "cg_tolerance" => self.cg_tolerance = num(&key, v)?,
            "seed" => self.seed = num(&key, v)?,
            "samples" => self.samples = num(&key, v)?,
            "kernel_check" => self.kernel_check = boolean(&key, v)?,
            "budget" => self.budget = num(&key, v)?,
            "c0_scale" => self.c0_scale = num(&key, v)?,
            "points" => self.points = num(&key, v)?,
            "input" => self.input = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "init" => {
                self.init = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|pair| {
                            let (l, t) = pair
                                .split_once(':')
                                .ok_or_else(|| bad(&key, v, "expected lambda:t0 pairs separated by commas"))?;
                            Ok((num(&key, l)?, num(&key, t)?))
                        })
                        .collect::<Result<_, CliError>>()?
                }
            }
            "deficit_only" => self.deficit_only = boolean(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse_str(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        self.parse_str(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        hstab_core::Dim::new(self.n).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(CliError::Usage("every eps must lie in (0, 1)".into()));
        }
        if self.resolution < hstab_core::grid::MIN_RESOLUTION {
            return Err(CliError::Usage(format!(
                "resolution must be at least {}",
                hstab_core::grid::MIN_RESOLUTION
            )));
        }
        if let Some(r) = self.box_radius {
            if !(r > 0.0) {
                return Err(CliError::Usage("box_radius must be positive".into()));
            }
        }
        if !(self.budget > 0.0) || !(self.c0_scale > 0.0) || self.points == 0 || self.samples < 2 {
            return Err(CliError::Usage(
                "budget, c0_scale, points and samples must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn quad_tolerance(&self) -> f64 {
        self.quad_tolerance.unwrap_or(if self.n >= 3 { 1e-6 } else { 1e-8 })
    }

    /// Sweep values, or `default` when none were given.
    pub fn eps_or(&self, default: &[f64]) -> Vec<f64> {
        if self.eps.is_empty() {
            default.to_vec()
        } else {
            self.eps.clone()
        }
    }

    /// The resolved configuration in the same `key = value` format it is read from.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "eps = {}", list(&self.eps));
        let _ = writeln!(s, "resolution = {}", self.resolution);
        let _ = writeln!(s, "box_radius = {}", opt(self.box_radius));
        let _ = writeln!(s, "quad_tolerance = {}", self.quad_tolerance());
        let _ = writeln!(s, "cg_tolerance = {}", self.cg_tolerance);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "samples = {}", self.samples);
        let _ = writeln!(s, "kernel_check = {}", self.kernel_check);
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "c0_scale = {}", self.c0_scale);
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(
            s,
            "input = {}",
            self.input.as_ref().map_or(String::new(), |p| p.display().to_string())
        );
        let init = self.init.iter().map(|(l, t)| format!("{l}:{t}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "init = {init}");
        let _ = writeln!(s, "deficit_only = {}", self.deficit_only);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }
}
