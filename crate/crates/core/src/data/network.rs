use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::{Mode, ModeMap};

/// Speeds, fares, and fuel parameters used to reconstruct detours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub speed_kmh: ModeMap<f64>,
    pub tariff_uah: ModeMap<f64>,
    pub fuel_price_uah_per_l: f64,
    pub fuel_consumption_l_per_km: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        let speed_kmh = ModeMap::from_fn(|m| match m {
            Mode::Walking => 4.0,
            Mode::Bike => 25.0,
            Mode::Car => 23.0,
            Mode::Bus => 9.0,
            Mode::Metro => 13.0,
            Mode::ElectricGroundPt => 7.5,
        });
        let tariff_uah = ModeMap::from_fn(|m| match m {
            Mode::Bus => 10.0,
            Mode::Metro => 8.0,
            Mode::ElectricGroundPt => 6.0,
            Mode::Walking | Mode::Bike | Mode::Car => 0.0,
        });
        NetworkParams {
            speed_kmh,
            tariff_uah,
            fuel_price_uah_per_l: 27.0,
            fuel_consumption_l_per_km: 0.08,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        for (mode, speed) in self.speed_kmh.iter() {
            if !(speed.is_finite() && speed > 0.0) {
                return Err(Error::Argument(format!(
                    "speed for {mode} must be positive, got {speed}"
                )));
            }
        }
        for (mode, tariff) in self.tariff_uah.iter() {
            if !(tariff.is_finite() && tariff >= 0.0) {
                return Err(Error::Argument(format!(
                    "tariff for {mode} must be non-negative, got {tariff}"
                )));
            }
            if !mode.is_public_transport() && tariff != 0.0 {
                return Err(Error::Argument(format!(
                    "{mode} carries no fare, got tariff {tariff}"
                )));
            }
        }
        if !(self.fuel_price_uah_per_l.is_finite() && self.fuel_price_uah_per_l > 0.0) {
            return Err(Error::Argument("fuel price must be positive".into()));
        }
        if !(self.fuel_consumption_l_per_km.is_finite() && self.fuel_consumption_l_per_km > 0.0) {
            return Err(Error::Argument("fuel consumption must be positive".into()));
        }
        Ok(())
    }
}

/// Divisors applied to raw attributes before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub detour_time_divisor: f64,
    pub detour_cost_divisor: f64,
    pub profit_divisor: f64,
    pub income_divisor: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            detour_time_divisor: 10.0,
            detour_cost_divisor: 10.0,
            profit_divisor: 100.0,
            income_divisor: 10_000.0,
        }
    }
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("detour_time_divisor", self.detour_time_divisor),
            ("detour_cost_divisor", self.detour_cost_divisor),
            ("profit_divisor", self.profit_divisor),
            ("income_divisor", self.income_divisor),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
