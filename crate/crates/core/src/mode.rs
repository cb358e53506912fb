use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Transport mode a courier can use for a detour. Tram and trolleybus are
/// merged into [`Mode::ElectricGroundPt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Walking,
    Bike,
    Car,
    Bus,
    Metro,
    ElectricGroundPt,
}

pub const N_MODES: usize = 6;

impl Mode {
    pub const ALL: [Mode; N_MODES] = [
        Mode::Walking,
        Mode::Bike,
        Mode::Car,
        Mode::Bus,
        Mode::Metro,
        Mode::ElectricGroundPt,
    ];

    /// Stable column index.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Mode> {
        Mode::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Walking => "walking",
            Mode::Bike => "bike",
            Mode::Car => "car",
            Mode::Bus => "bus",
            Mode::Metro => "metro",
            Mode::ElectricGroundPt => "electric_ground_pt",
        }
    }

    /// Upper-case suffix used in coefficient names (`DT_ELECTRIC_GROUND_PT`).
    pub fn coefficient_suffix(self) -> &'static str {
        match self {
            Mode::Walking => "WALKING",
            Mode::Bike => "BIKE",
            Mode::Car => "CAR",
            Mode::Bus => "BUS",
            Mode::Metro => "METRO",
            Mode::ElectricGroundPt => "ELECTRIC_GROUND_PT",
        }
    }

    /// Human label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Mode::Walking => "Walking",
            Mode::Bike => "Bike",
            Mode::Car => "Car",
            Mode::Bus => "Bus",
            Mode::Metro => "Metro",
            Mode::ElectricGroundPt => "Electric ground PT",
        }
    }

    pub fn is_public_transport(self) -> bool {
        matches!(self, Mode::Bus | Mode::Metro | Mode::ElectricGroundPt)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown mode `{s}`")))
    }
}

/// Fixed-size per-mode table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMap<T>(pub [T; N_MODES]);

impl<T: Copy> ModeMap<T> {
    pub fn from_fn(mut f: impl FnMut(Mode) -> T) -> Self {
        ModeMap(Mode::ALL.map(&mut f))
    }

    pub fn get(&self, mode: Mode) -> T {
        self.0[mode.index()]
    }

    pub fn set(&mut self, mode: Mode, value: T) {
        self.0[mode.index()] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, T)> + '_ {
        Mode::ALL.iter().map(move |&m| (m, self.0[m.index()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_stable_and_distinct() {
        for (i, m) in Mode::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
            assert_eq!(Mode::from_index(i), Some(*m));
        }
        assert_eq!(Mode::from_index(6), None);
    }

    #[test]
    fn parses_identifiers() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("tram".parse::<Mode>().is_err());
    }
}
