//! JSON run configuration.
//!
//! Energies, rates, chemical potentials and hopping amplitudes are given
//! either in absolute units or in units of `k_B T` with the reference
//! temperature `T = (T_H + T_C)/2`. Temperatures are always absolute.
//! Everything is converted to absolute units on [`RunConfig::resolve`].
//!
//! ```
//! use dqd_thermo::config::RunConfig;
//!
//! let cfg = RunConfig::from_json(r#"{
//!     "units": "kBT",
//!     "engine": {
//!         "eps1": 2.0, "eps2": 2.1, "t_hop": 0.025,
//!         "gamma_h": 0.025, "gamma_c": 0.025,
//!         "temp_h": 3.0, "temp_c": 1.0, "mu_h": 0.5, "mu_c": 1.5,
//!         "dephasing": 0.15
//!     },
//!     "qpc": {
//!         "chi00": 0.05, "g_l": 1.0, "g_r": 1.0, "temp": 0.05,
//!         "t00": 0.5, "omega": 10.0, "mu_r": 10.05, "mu_l": 9.95
//!     }
//! }"#).unwrap();
//! let run = cfg.resolve().unwrap();
//! assert_eq!(run.params.eps1, 4.0);
//! assert!((run.params.dephasing - 0.3).abs() < 1e-15);
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dephasing_rate_from_qpc, EngineParams, QpcParams};
use crate::numkernel::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Units {
    #[serde(rename = "absolute")]
    Absolute,
    #[serde(rename = "kBT")]
    KbT,
}

/// Real amplitude or `{"re": .., "im": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hopping {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Hopping {
    fn value(self) -> C64 {
        match self {
            Hopping::Real(x) => C64::new(x, 0.0),
            Hopping::Complex { re, im } => C64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub eps1: f64,
    pub eps2: f64,
    pub t_hop: Hopping,
    pub gamma_h: f64,
    pub gamma_c: f64,
    pub temp_h: f64,
    pub temp_c: f64,
    pub mu_h: f64,
    pub mu_c: f64,
    /// Measurement strength Γ. When absent it follows from the QPC
    /// parameters.
    #[serde(default)]
    pub dephasing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpcSection {
    pub chi00: f64,
    /// Densities of states, in inverse energy units.
    pub g_l: f64,
    pub g_r: f64,
    pub temp: f64,
    pub t00: f64,
    pub omega: f64,
    pub mu_r: f64,
    pub mu_l: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

fn default_n_steps() -> u64 {
    1 << 40
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSection {
    /// Collision times, in inverse energy units.
    pub tau_list: Vec<f64>,
    #[serde(default = "default_n_steps")]
    pub n_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub units: Units,
    pub engine: EngineSection,
    pub qpc: QpcSection,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub collision: Option<CollisionSection>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A configuration in absolute units, validated.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub params: EngineParams,
    pub qpc: QpcParams,
    /// Γ grid in absolute units.
    pub gammas: Option<Vec<f64>>,
    pub tau_list: Option<Vec<f64>>,
    pub n_steps: u64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Energy scale of the `kBT` unit system, `(T_H + T_C)/2`.
    pub fn reference_temperature(&self) -> f64 {
        0.5 * (self.engine.temp_h + self.engine.temp_c)
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let e = &self.engine;
        if !(e.temp_h > 0.0 && e.temp_c > 0.0) {
            return Err(Error::Config("temperatures must be positive".into()));
        }
        let k = match self.units {
            Units::Absolute => 1.0,
            Units::KbT => self.reference_temperature(),
        };
        let q = &self.qpc;
        let qpc = QpcParams {
            chi00: k * q.chi00,
            g_l: q.g_l / k,
            g_r: q.g_r / k,
            temp: q.temp,
            t00: k * q.t00,
            omega: k * q.omega,
            mu_r: k * q.mu_r,
            mu_l: k * q.mu_l,
        };
        qpc.validate().map_err(config_error)?;
        let dephasing = match e.dephasing {
            Some(g) => k * g,
            None => dephasing_rate_from_qpc(&qpc),
        };
        let params = EngineParams {
            eps1: k * e.eps1,
            eps2: k * e.eps2,
            t_hop: e.t_hop.value() * k,
            gamma_h: k * e.gamma_h,
            gamma_c: k * e.gamma_c,
            temp_h: e.temp_h,
            temp_c: e.temp_c,
            mu_h: k * e.mu_h,
            mu_c: k * e.mu_c,
            dephasing,
        };
        params.validate().map_err(config_error)?;
        let gammas = self.sweep.as_ref().map(|s| s.grid(k)).transpose()?;
        let tau_list = match &self.collision {
            Some(c) => {
                if c.tau_list.is_empty() || c.tau_list.iter().any(|&t| !(t > 0.0 && t.is_finite()))
                {
                    return Err(Error::Config(
                        "tau_list needs positive collision times".into(),
                    ));
                }
                Some(c.tau_list.iter().map(|t| t / k).collect())
            }
            None => None,
        };
        Ok(ResolvedConfig {
            params,
            qpc,
            gammas,
            tau_list,
            n_steps: self
                .collision
                .as_ref()
                .map_or_else(default_n_steps, |c| c.n_steps),
            output: self.output.clone(),
        })
    }
}

fn config_error(e: Error) -> Error {
    Error::Config(e.to_string())
}

impl SweepSpec {
    /// Γ grid in absolute units; `energy_unit` converts from config units.
    pub fn grid(&self, energy_unit: f64) -> Result<Vec<f64>> {
        let (lo, hi) = (self.gamma_min * energy_unit, self.gamma_max * energy_unit);
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config(format!(
                "sweep range [{}, {}] must satisfy 0 <= gamma_min <= gamma_max",
                self.gamma_min, self.gamma_max
            )));
        }
        if lo == hi {
            return Ok(vec![lo]);
        }
        if self.n_points < 2 {
            return Err(Error::Config("sweep needs n_points >= 2".into()));
        }
        let last = (self.n_points - 1) as f64;
        Ok(match self.spacing {
            Spacing::Linear => (0..self.n_points)
                .map(|i| lo + (hi - lo) * i as f64 / last)
                .collect(),
            Spacing::Log => {
                if lo <= 0.0 {
                    return Err(Error::Config("log spacing needs gamma_min > 0".into()));
                }
                let (a, b) = (lo.ln(), hi.ln());
                (0..self.n_points)
                    .map(|i| (a + (b - a) * i as f64 / last).exp())
                    .collect()
            }
        })
    }
}
