//! Key-value run configuration. One `key = value` pair per line, `#` starts
//! a comment; unknown keys are rejected by name so typos cannot silently
//! change a run.

use crate::diagnostics::CalibratedConstants;
use crate::dynamics::{PdeForm, SimConfig};
use crate::error::{Error, Result};
use crate::fields::Profile;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SUPPORTED_PROFILES: &str = "maxwellian, uniform_ball, custom-table";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    Radial { r_max: f64, n: usize },
    Box3 { half_width: f64, n: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    /// Steps between emitted diagnostics rows.
    pub stride: usize,
    /// Emit a checkpoint every k-th emitted slice (0 disables).
    pub checkpoint_stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { stride: 10, checkpoint_stride: 0 }
    }
}

/// Fully resolved run request: grid, initial data, dynamics, outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub form: String,
    pub alpha: f64,
    pub grid: GridSpec,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub blowup_factor: f64,
    pub output: OutputSpec,
    pub init: InitSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibratedConstants>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitSpec {
    pub profile: String,
    pub mass: f64,
    pub sigma: f64,
    pub radius: f64,
    pub height: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            profile: "maxwellian".into(),
            mass: 1.0,
            sigma: 1.0,
            radius: 1.0,
            height: 1.0,
            table: None,
        }
    }
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            form: "divergence".into(),
            alpha: 1.0,
            grid: GridSpec::Radial { r_max: 12.0, n: 1024 },
            t_end: 0.1,
            cfl_safety: 0.5,
            blowup_factor: 1e6,
            output: OutputSpec::default(),
            init: InitSpec::default(),
            calibration: None,
        }
    }
}

impl RunSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_pairs(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Apply `key=value` overrides (command-line flags win over file keys).
    pub fn apply_overrides(self, overrides: &[(String, String)]) -> Result<Self> {
        let mut spec = self;
        for (k, v) in overrides {
            spec = spec.apply(k, v)?;
        }
        Ok(spec)
    }

    fn from_pairs(pairs: BTreeMap<String, String>) -> Result<Self> {
        let mut spec = RunSpec::default();
        // Grid kind first so extent keys land on the right variant.
        if let Some(kind) = pairs.get("grid.kind") {
            spec = spec.apply("grid.kind", kind)?;
        }
        for (k, v) in &pairs {
            if k == "grid.kind" {
                continue;
            }
            spec = spec.apply(k, v)?;
        }
        Ok(spec)
    }

    fn apply(mut self, key: &str, value: &str) -> Result<Self> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{v}` is not a number")))
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("key `{key}`: `{v}` is not a count")))
        };
        match key {
            "form" => match value {
                "divergence" | "nondivergence" => self.form = value.into(),
                other => {
                    return Err(Error::Config(format!(
                        "key `form`: unknown value `{other}` (divergence | nondivergence)"
                    )))
                }
            },
            "alpha" => self.alpha = parse_f64(value)?,
            "t_end" => self.t_end = parse_f64(value)?,
            "cfl_safety" => self.cfl_safety = parse_f64(value)?,
            "blowup_factor" => self.blowup_factor = parse_f64(value)?,
            "grid.kind" => match value {
                "radial" => {
                    if !matches!(self.grid, GridSpec::Radial { .. }) {
                        self.grid = GridSpec::Radial { r_max: 12.0, n: 1024 };
                    }
                }
                "cartesian3" => {
                    if !matches!(self.grid, GridSpec::Box3 { .. }) {
                        self.grid = GridSpec::Box3 { half_width: 6.0, n: 48 };
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "key `grid.kind`: unknown value `{other}` (radial | cartesian3)"
                    )))
                }
            },
            "grid.r_max" => match &mut self.grid {
                GridSpec::Radial { r_max, .. } => *r_max = parse_f64(value)?,
                _ => return Err(Error::Config("grid.r_max applies to radial grids".into())),
            },
            "grid.half_width" => match &mut self.grid {
                GridSpec::Box3 { half_width, .. } => *half_width = parse_f64(value)?,
                _ => return Err(Error::Config("grid.half_width applies to cartesian3 grids".into())),
            },
            "grid.n" => match &mut self.grid {
                GridSpec::Radial { n, .. } | GridSpec::Box3 { n, .. } => *n = parse_usize(value)?,
            },
            "output.stride" => self.output.stride = parse_usize(value)?,
            "output.checkpoint_stride" => self.output.checkpoint_stride = parse_usize(value)?,
            "init.profile" => match value {
                "maxwellian" | "uniform_ball" | "custom-table" => self.init.profile = value.into(),
                other => {
                    return Err(Error::Config(format!(
                        "key `init.profile`: unknown profile `{other}`; supported: {SUPPORTED_PROFILES}"
                    )))
                }
            },
            "init.mass" => self.init.mass = parse_f64(value)?,
            "init.sigma" => self.init.sigma = parse_f64(value)?,
            "init.radius" => self.init.radius = parse_f64(value)?,
            "init.height" => self.init.height = parse_f64(value)?,
            "init.table" => self.init.table = Some(value.into()),
            "calib.est_a1_c" => self.calibration_mut().est_a1_c = parse_f64(value)?,
            "calib.est_a1_p" => self.calibration_mut().est_a1_p = parse_f64(value)?,
            "calib.h_lb_c" => self.calibration_mut().h_lb_c = parse_f64(value)?,
            "calib.h_lb_eps" => self.calibration_mut().h_lb_eps = parse_f64(value)?,
            "calib.e_ub_c" => self.calibration_mut().e_ub_c = parse_f64(value)?,
            unknown => {
                return Err(Error::Config(format!("unknown config key `{unknown}`")));
            }
        }
        Ok(self)
    }

    fn calibration_mut(&mut self) -> &mut CalibratedConstants {
        self.calibration.get_or_insert_with(CalibratedConstants::default)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            form: if self.form == "nondivergence" {
                PdeForm::Nondivergence
            } else {
                PdeForm::Divergence
            },
            alpha: self.alpha,
            t_end: self.t_end,
            cfl_safety: self.cfl_safety,
            output_stride: self.output.stride,
            blowup_factor: self.blowup_factor,
        }
    }

    pub fn calibration(&self) -> CalibratedConstants {
        self.calibration.clone().unwrap_or_default()
    }

    pub fn profile(&self) -> Result<Profile> {
        match self.init.profile.as_str() {
            "maxwellian" => Ok(Profile::Maxwellian { mass: self.init.mass, sigma: self.init.sigma }),
            "uniform_ball" => {
                Ok(Profile::UniformBall { radius: self.init.radius, height: self.init.height })
            }
            "custom-table" => {
                let path = self.init.table.as_ref().ok_or_else(|| {
                    Error::Config("custom-table profile needs init.table = <path>".into())
                })?;
                let text = std::fs::read_to_string(path)?;
                let mut rs = Vec::new();
                let mut us = Vec::new();
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let (r, u) = line.split_once(',').ok_or_else(|| {
                        Error::Config(format!("table line `{line}`: expected `r,u`"))
                    })?;
                    rs.push(r.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("table radius `{r}` is not a number"))
                    })?);
                    us.push(u.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("table value `{u}` is not a number"))
                    })?);
                }
                Ok(Profile::Table { rs, us })
            }
            other => Err(Error::Config(format!(
                "unknown profile `{other}`; supported: {SUPPORTED_PROFILES}"
            ))),
        }
    }
}
