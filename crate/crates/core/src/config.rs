//! TOML scenario documents.
//!
//! ```toml
//! name = "example"
//! units = "rad"            # or "hz": every rate below is then multiplied by 2π
//!
//! [system]
//! kappa = 1.0e7
//! delta = 1.0e7
//! pump_rate = 1.0e13       # or laser_power + laser_wavelength, or photon_number
//!
//! [noise]
//! kind = "white"           # none | white | lorentzian | tabulated
//! gamma_l = 1.0e-3
//!
//! [sim]
//! dt = 1.0e-9
//! duration = 1.0e-5
//! n_trajectories = 100
//! seed = 1
//!
//! [mech]
//! omega_m = 1.0e7
//! gamma_m = 10.0
//! n_th = 100.0
//! g = 1.0e5
//!
//! [analytic]
//! threshold = 0.01
//! target_n_add = 1.0
//! reference_photon_numbers = [1.0e10, 1.0e11]
//! ```
//!
//! A tabulated spectrum is given inline as `points = [[ω, S], ...]` or as
//! `spectrum_file = "path.csv"`, resolved against the document's directory.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::DEFAULT_THRESHOLD;
use crate::coupled::MechanicalParams;
use crate::model::{NoiseSpec, SimConfig, SystemParams};
use crate::noise::read_spectrum_csv;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Angular frequencies, rad/s.
    #[default]
    Rad,
    /// Cyclic frequencies, Hz.
    Hz,
}

impl std::str::FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rad" => Ok(Units::Rad),
            "hz" => Ok(Units::Hz),
            _ => Err(Error::Config(format!("units must be \"rad\" or \"hz\", got {s:?}"))),
        }
    }
}

fn default_target() -> f64 {
    1.0
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSettings {
    /// Margins below this count as "much less than".
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Occupation for which the tolerable `S(Δ)` is reported.
    #[serde(default = "default_target")]
    pub target_n_add: f64,
    /// Extra photon numbers at which the tolerable linewidth is reported.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_photon_numbers: Vec<f64>,
}

impl Default for AnalyticSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            target_n_add: 1.0,
            reference_photon_numbers: Vec::new(),
        }
    }
}

fn is_default_noise(n: &NoiseSpec) -> bool {
    *n == NoiseSpec::None
}

fn is_default_analytic(a: &AnalyticSettings) -> bool {
    *a == AnalyticSettings::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub units: Units,
    pub system: SystemParams,
    #[serde(default, skip_serializing_if = "is_default_noise")]
    pub noise: NoiseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mech: Option<MechanicalParams>,
    #[serde(default, skip_serializing_if = "is_default_analytic")]
    pub analytic: AnalyticSettings,
}

impl Config {
    pub fn new(system: SystemParams, noise: NoiseSpec) -> Self {
        Self {
            name: None,
            units: Units::Rad,
            system,
            noise,
            sim: None,
            mech: None,
            analytic: AnalyticSettings::default(),
        }
    }

    /// Parses a document; `base_dir` resolves `spectrum_file`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let has_file = matches!(table.get("noise"), Some(toml::Value::Table(t)) if t.contains_key("spectrum_file"));
        if has_file {
            Self::from_table(table, base_dir)
        } else {
            // direct parsing keeps line and column in diagnostics
            toml::from_str(text).map_err(|e: toml::de::Error| Error::Config(e.to_string()))
        }
    }

    pub fn from_table(mut table: toml::Table, base_dir: Option<&Path>) -> Result<Self> {
        if let Some(toml::Value::Table(noise)) = table.get_mut("noise") {
            if let Some(file) = noise.remove("spectrum_file") {
                let file = file
                    .as_str()
                    .ok_or_else(|| Error::Config("noise.spectrum_file must be a string".into()))?;
                if noise.contains_key("points") {
                    return Err(Error::Config("noise: give either points or spectrum_file, not both".into()));
                }
                let path = match base_dir {
                    Some(d) => d.join(file),
                    None => file.into(),
                };
                let f = std::fs::File::open(&path)
                    .map_err(|e| Error::Config(format!("noise.spectrum_file {}: {e}", path.display())))?;
                let points = read_spectrum_csv(f)?;
                let arr = points
                    .into_iter()
                    .map(|(w, s)| toml::Value::Array(vec![w.into(), s.into()]))
                    .collect();
                noise.insert("points".into(), toml::Value::Array(arr));
            }
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Converts to angular units. Rates scale by 2π; `total_strength`, a
    /// variance of φ̇, and tabulated `S`, a density in (rad/s)²/(rad/s) read
    /// from Hz²/Hz, scale by (2π)².
    pub fn into_rad(mut self) -> Self {
        if self.units == Units::Rad {
            return self;
        }
        let c = 2.0 * PI;
        let s = &mut self.system;
        s.kappa *= c;
        s.delta *= c;
        s.pump_rate = s.pump_rate.map(|e| e * c);
        match &mut self.noise {
            NoiseSpec::None => {}
            NoiseSpec::White { gamma_l } => *gamma_l *= c,
            NoiseSpec::Lorentzian(l) => {
                l.gamma_l *= c;
                l.total_strength *= c * c;
                l.center_frequency *= c;
                l.half_width *= c;
            }
            NoiseSpec::Tabulated(t) => {
                t.gamma_l *= c;
                for p in &mut t.points {
                    p.0 *= c;
                    p.1 *= c * c;
                }
            }
        }
        if let Some(m) = &mut self.mech {
            m.omega_m *= c;
            m.gamma_m *= c;
            m.g = m.g.map(|g| g * c);
            m.g0 = m.g0.map(|g| g * c);
        }
        self.units = Units::Rad;
        self
    }

    pub fn sim(&self) -> Result<&SimConfig> {
        self.sim.as_ref().ok_or_else(|| Error::Config("missing [sim] section".into()))
    }

    pub fn mech(&self) -> Result<&MechanicalParams> {
        self.mech.as_ref().ok_or_else(|| Error::Config("missing [mech] section".into()))
    }
}
