//! Run configuration read from a TOML file. Every key is optional and
//! unknown keys are rejected; omitted values keep the survey defaults.
//!
//! ```toml
//! [network]
//! fuel_price_uah_per_l = 27.0
//! fuel_consumption_l_per_km = 0.08
//! [network.speed_kmh]
//! bus = 9.0
//! [network.tariff_uah]
//! metro = 8.0
//!
//! [scaling]
//! detour_time_divisor = 10.0
//!
//! [model]
//! models = ["cost-time", "profit-time"]   # preset names or spec-file paths
//! mixture = false
//!
//! [optimizer]
//! max_iterations = 500
//! gradient_tolerance = 1e-6
//!
//! [simulation]
//! draws = 100
//! draw_type = "halton"
//! seed = 1
//!
//! [mpe]
//! levels = [-10.0, -5.0, -1.0, 1.0, 5.0, 10.0]
//! averaging = "available_only"
//!
//! [describe]
//! by_gender = true
//!
//! [output]
//! dir = "out"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{NetworkParams, ScalingConfig};
use crate::error::{Error, Result};
use crate::mixed::{DrawType, SimulationOptions};
use crate::mode::Mode;
use crate::mpe::{Averaging, DEFAULT_LEVELS};
use crate::optim::OptimizerOptions;
use crate::spec::ModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkParams,
    pub scaling: ScalingConfig,
    /// Preset names or paths to spec files.
    pub models: Vec<String>,
    pub mixture: bool,
    pub optimizer: OptimizerOptions,
    pub simulation: SimulationOptions,
    pub mpe_levels: Vec<f64>,
    pub averaging: Averaging,
    pub by_gender: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: NetworkParams::default(),
            scaling: ScalingConfig::default(),
            models: vec!["cost-time".into(), "profit-time".into()],
            mixture: false,
            optimizer: OptimizerOptions::default(),
            simulation: SimulationOptions::default(),
            mpe_levels: DEFAULT_LEVELS.to_vec(),
            averaging: Averaging::AvailableOnly,
            by_gender: true,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    network: Option<RawNetwork>,
    scaling: Option<RawScaling>,
    model: Option<RawModel>,
    optimizer: Option<RawOptimizer>,
    simulation: Option<RawSimulation>,
    mpe: Option<RawMpe>,
    describe: Option<RawDescribe>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    speed_kmh: Option<BTreeMap<String, f64>>,
    tariff_uah: Option<BTreeMap<String, f64>>,
    fuel_price_uah_per_l: Option<f64>,
    fuel_consumption_l_per_km: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScaling {
    detour_time_divisor: Option<f64>,
    detour_cost_divisor: Option<f64>,
    profit_divisor: Option<f64>,
    income_divisor: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    models: Option<Vec<String>>,
    mixture: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    max_iterations: Option<usize>,
    gradient_tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    draws: Option<usize>,
    draw_type: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMpe {
    levels: Option<Vec<f64>>,
    averaging: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescribe {
    by_gender: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

fn apply_modes(
    target: &mut crate::mode::ModeMap<f64>,
    overrides: BTreeMap<String, f64>,
) -> Result<()> {
    for (key, value) in overrides {
        let mode: Mode = key
            .parse()
            .map_err(|_| Error::Config(format!("unknown mode `{key}`")))?;
        target.set(mode, value);
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = RunConfig::default();
        if let Some(n) = raw.network {
            if let Some(m) = n.speed_kmh {
                apply_modes(&mut cfg.network.speed_kmh, m)?;
            }
            if let Some(m) = n.tariff_uah {
                apply_modes(&mut cfg.network.tariff_uah, m)?;
            }
            if let Some(v) = n.fuel_price_uah_per_l {
                cfg.network.fuel_price_uah_per_l = v;
            }
            if let Some(v) = n.fuel_consumption_l_per_km {
                cfg.network.fuel_consumption_l_per_km = v;
            }
        }
        if let Some(s) = raw.scaling {
            let t = &mut cfg.scaling;
            t.detour_time_divisor = s.detour_time_divisor.unwrap_or(t.detour_time_divisor);
            t.detour_cost_divisor = s.detour_cost_divisor.unwrap_or(t.detour_cost_divisor);
            t.profit_divisor = s.profit_divisor.unwrap_or(t.profit_divisor);
            t.income_divisor = s.income_divisor.unwrap_or(t.income_divisor);
        }
        if let Some(m) = raw.model {
            if let Some(v) = m.models {
                cfg.models = v;
            }
            cfg.mixture = m.mixture.unwrap_or(cfg.mixture);
        }
        if let Some(o) = raw.optimizer {
            cfg.optimizer.max_iterations = o.max_iterations.unwrap_or(cfg.optimizer.max_iterations);
            cfg.optimizer.gradient_tolerance = o
                .gradient_tolerance
                .unwrap_or(cfg.optimizer.gradient_tolerance);
        }
        if let Some(s) = raw.simulation {
            cfg.simulation.draws = s.draws.unwrap_or(cfg.simulation.draws);
            if let Some(t) = s.draw_type {
                cfg.simulation.draw_type = t.parse::<DrawType>()?;
            }
            cfg.simulation.seed = s.seed.unwrap_or(cfg.simulation.seed);
        }
        if let Some(m) = raw.mpe {
            if let Some(l) = m.levels {
                cfg.mpe_levels = l;
            }
            if let Some(a) = m.averaging {
                cfg.averaging = a.parse()?;
            }
        }
        if let Some(d) = raw.describe {
            cfg.by_gender = d.by_gender.unwrap_or(cfg.by_gender);
        }
        if let Some(o) = raw.output {
            if let Some(dir) = o.dir {
                cfg.output_dir = dir;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.scaling.validate()?;
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if self.optimizer.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.optimizer.gradient_tolerance.is_finite()
            && self.optimizer.gradient_tolerance > 0.0)
        {
            return Err(Error::Config("gradient_tolerance must be positive".into()));
        }
        if self.simulation.draws == 0 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        if let Some(l) = self
            .mpe_levels
            .iter()
            .find(|l| !(l.is_finite() && **l > -100.0))
        {
            return Err(Error::Config(format!(
                "perturbation level {l} must exceed -100"
            )));
        }
        Ok(())
    }
}

/// A preset name, or else a path to a TOML spec file.
pub fn resolve_model(name: &str) -> Result<ModelSpec> {
    match ModelSpec::preset(name) {
        Ok(spec) => Ok(spec),
        Err(_) if Path::new(name).exists() => ModelSpec::from_file(name),
        Err(e) => Err(e),
    }
}
