//! Scenario documents: a configuration plus an optional `[sweep]` grid.
//!
//! ```toml
//! [sweep]
//! modes = ["analytic", "displaced"]
//!
//! [[sweep.axis]]
//! name = "noise.gamma_l"
//! start = 1.0e-6
//! stop = 1.0e-2
//! points = 5
//! scale = "log"
//!
//! [[sweep.axis]]
//! name = "system.delta"
//! values = [0.5, 1.0, 2.0]
//! ```
//!
//! Axis values are in the document's units. The grid is the Cartesian
//! product of the axes, first axis outermost.

use std::path::Path;

use phasenoise::config::{Config, Units};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Fields a sweep axis may vary.
pub const AXIS_NAMES: &[&str] = &[
    "system.kappa",
    "system.delta",
    "system.pump_rate",
    "system.photon_number",
    "system.laser_power",
    "system.laser_wavelength",
    "noise.gamma_l",
    "noise.total_strength",
    "noise.center_frequency",
    "noise.half_width",
    "sim.dt",
    "sim.duration",
    "sim.burn_in",
    "sim.n_trajectories",
    "sim.seed",
    "mech.omega_m",
    "mech.gamma_m",
    "mech.n_th",
    "mech.g",
    "mech.g0",
    "analytic.threshold",
    "analytic.target_n_add",
];

const INTEGER_AXES: &[&str] = &["sim.n_trajectories", "sim.seed"];

/// Keys removed when an axis sets one of several mutually exclusive forms.
fn displaced_keys(name: &str) -> &'static [&'static str] {
    match name {
        "system.pump_rate" => &["photon_number", "laser_power", "laser_wavelength"],
        "system.photon_number" => &["pump_rate", "laser_power", "laser_wavelength"],
        "system.laser_power" | "system.laser_wavelength" => &["pump_rate", "photon_number"],
        "mech.g" => &["g0"],
        "mech.g0" => &["g"],
        _ => &[],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Analytic,
    Displaced,
    Lab,
    Twin,
    CoupledLyapunov,
    CoupledSpectral,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::Analytic => "analytic",
            SweepMode::Displaced => "displaced",
            SweepMode::Lab => "lab",
            SweepMode::Twin => "twin",
            SweepMode::CoupledLyapunov => "coupled-lyapunov",
            SweepMode::CoupledSpectral => "coupled-spectral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn list(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values: Some(values),
            start: None,
            stop: None,
            points: None,
            scale: Scale::Linear,
        }
    }

    pub fn range(name: &str, start: f64, stop: f64, points: usize, scale: Scale) -> Self {
        Self {
            name: name.into(),
            values: None,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            scale,
        }
    }

    pub fn values(&self) -> CliResult<Vec<f64>> {
        let bad = |m: &str| CliError::Usage(format!("sweep axis {}: {m}", self.name));
        if !AXIS_NAMES.contains(&self.name.as_str()) {
            return Err(bad(&format!("unknown field; expected one of {}", AXIS_NAMES.join(", "))));
        }
        let out = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(p)) => {
                if p == 0 {
                    return Err(bad("points must be >= 1"));
                }
                if p == 1 {
                    vec![a]
                } else {
                    let f = |i: usize| i as f64 / (p - 1) as f64;
                    match self.scale {
                        Scale::Linear => (0..p).map(|i| a + (b - a) * f(i)).collect(),
                        Scale::Log => {
                            if !(a > 0.0 && b > 0.0) {
                                return Err(bad("log scale needs start and stop > 0"));
                            }
                            let (la, lb) = (a.log10(), b.log10());
                            (0..p).map(|i| 10f64.powf(la + (lb - la) * f(i))).collect()
                        }
                    }
                }
            }
            _ => return Err(bad("give either values, or start, stop and points")),
        };
        if out.is_empty() {
            return Err(bad("no values"));
        }
        if let Some(x) = out.iter().find(|x| !x.is_finite()) {
            return Err(bad(&format!("value {x} is not finite")));
        }
        if INTEGER_AXES.contains(&self.name.as_str()) {
            if let Some(x) = out.iter().find(|x| !(x.fract() == 0.0 && **x >= 0.0 && **x <= i64::MAX as f64)) {
                return Err(bad(&format!("value {x} is not a non-negative integer")));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<SweepMode>,
    #[serde(default, rename = "axis")]
    pub axes: Vec<Axis>,
}

/// One point of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    /// `(axis name, value in document units)`.
    pub coordinates: Vec<(String, f64)>,
    /// Resolved configuration in rad/s.
    pub config: Config,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Configuration as written, in its own units.
    pub config: Config,
    pub sweep: Option<SweepSpec>,
}

#[derive(Serialize)]
struct Canonical<'a> {
    #[serde(flatten)]
    config: &'a Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: &'a Option<SweepSpec>,
}

impl Scenario {
    pub fn new(config: Config) -> Self {
        Self { config, sweep: None }
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> CliResult<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| phasenoise::Error::Config(e.to_string()))?;
        match table.remove("sweep") {
            None => Ok(Self::new(Config::parse(text, base_dir)?)),
            Some(s) => {
                let sweep: SweepSpec = s
                    .try_into()
                    .map_err(|e: toml::de::Error| phasenoise::Error::Config(format!("[sweep]: {e}")))?;
                Ok(Self {
                    config: Config::from_table(table, base_dir)?,
                    sweep: Some(sweep),
                })
            }
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            CliError::Core(phasenoise::Error::Config(m)) => {
                CliError::Core(phasenoise::Error::Config(format!("{}: {m}", path.display())))
            }
            e => e,
        })
    }

    /// Reinterprets every rate in `units`.
    pub fn set_units(&mut self, units: Units) {
        self.config.units = units;
    }

    pub fn set_seed(&mut self, seed: u64) -> CliResult<()> {
        let sim = self
            .config
            .sim
            .as_mut()
            .ok_or_else(|| CliError::Usage("--seed needs a [sim] section".into()))?;
        sim.seed = seed;
        Ok(())
    }

    /// Canonical TOML of the whole scenario, spectrum data inline.
    pub fn canonical(&self) -> CliResult<String> {
        let c = Canonical {
            config: &self.config,
            sweep: &self.sweep,
        };
        toml::to_string(&c).map_err(|e| CliError::Core(phasenoise::Error::Config(e.to_string())))
    }

    /// SHA-256 of [`Scenario::canonical`], lowercase hex.
    pub fn hash(&self) -> CliResult<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// The configuration in rad/s.
    pub fn resolved(&self) -> Config {
        self.config.clone().into_rad()
    }

    /// Expands the sweep grid. Every point is parsed before any is returned,
    /// so a bad axis fails the whole sweep up front.
    pub fn grid(&self) -> CliResult<Vec<GridPoint>> {
        let axes = self.sweep.as_ref().map(|s| s.axes.as_slice()).unwrap_or_default();
        let values = axes.iter().map(Axis::values).collect::<CliResult<Vec<_>>>()?;
        let base = toml::Table::try_from(&self.config)
            .map_err(|e| CliError::Core(phasenoise::Error::Config(e.to_string())))?;
        let total: usize = values.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut coordinates = vec![(String::new(), 0.0); axes.len()];
            for (k, v) in values.iter().enumerate().rev() {
                coordinates[k] = (axes[k].name.clone(), v[rem % v.len()]);
                rem /= v.len();
            }
            let mut table = base.clone();
            for (name, x) in &coordinates {
                set_field(&mut table, name, *x)?;
            }
            let config = toml::Value::Table(table)
                .try_into::<Config>()
                .map_err(|e| CliError::Usage(format!("sweep point {index}: {e}")))?;
            out.push(GridPoint {
                index,
                coordinates,
                config: config.into_rad(),
            });
        }
        Ok(out)
    }
}

fn set_field(table: &mut toml::Table, name: &str, x: f64) -> CliResult<()> {
    let (section, key) = name.split_once('.').expect("axis names are dotted");
    let sec = match table.get_mut(section) {
        Some(toml::Value::Table(t)) => t,
        _ if section == "analytic" => {
            table.insert(section.into(), toml::Value::Table(toml::Table::new()));
            match table.get_mut(section) {
                Some(toml::Value::Table(t)) => t,
                _ => unreachable!(),
            }
        }
        _ => return Err(CliError::Usage(format!("sweep axis {name}: scenario has no [{section}] section"))),
    };
    for k in displaced_keys(name) {
        sec.remove(*k);
    }
    let value = if INTEGER_AXES.contains(&name) {
        toml::Value::Integer(x as i64)
    } else {
        toml::Value::Float(x)
    };
    sec.insert(key.into(), value);
    Ok(())
}
