//! Survey observations, the dataset container, and the network and scaling
//! parameters shared by every stage.

mod csv_io;
mod network;
mod observation;
mod summary;

use std::collections::HashSet;

pub use csv_io::{load_dataset, read_dataset, write_dataset, COLUMNS};
pub use network::{NetworkParams, ScalingConfig};
pub use observation::{
    AgeBand, Frequency, Gender, Observation, TripChain, WageBand, DETOUR_RANGE_MIN,
    REMUNERATION_RANGE_UAH, WAGE_BANDS,
};
pub use summary::{
    summarize, Breakdown, BreakdownRow, DetourStats, ModeGroupStats, Quartiles, SummaryReport,
};

use crate::error::{Error, Result};
use crate::mode::{Mode, ModeMap, N_MODES};

/// Validated, immutable set of observations with derived choice sets.
///
/// Only the car alternative is conditioned (on household car availability);
/// every other mode is available to everyone.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    availability: Vec<ModeMap<bool>>,
    range_warnings: Vec<(String, String)>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::with_capacity(observations.len());
        let mut range_warnings = Vec::new();
        for obs in &observations {
            if !seen.insert(obs.id.as_str()) {
                return Err(Error::Validation {
                    id: obs.id.clone(),
                    message: "duplicate id".into(),
                });
            }
            validate_observation(obs)?;
            for w in obs.range_warnings() {
                range_warnings.push((obs.id.clone(), w));
            }
        }
        let availability = observations
            .iter()
            .map(|o| ModeMap::from_fn(|m| m != Mode::Car || o.car_available))
            .collect();
        Ok(Dataset {
            observations,
            availability,
            range_warnings,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn is_available(&self, q: usize, mode: Mode) -> bool {
        self.availability[q].get(mode)
    }

    pub fn availability(&self, q: usize) -> ModeMap<bool> {
        self.availability[q]
    }

    pub fn choice_set_size(&self, q: usize) -> usize {
        self.availability[q].0.iter().filter(|&&a| a).count()
    }

    /// Soft range violations found at construction, as `(id, message)`.
    pub fn range_warnings(&self) -> &[(String, String)] {
        &self.range_warnings
    }

    /// Number of observations choosing each mode.
    pub fn chosen_counts(&self) -> [usize; N_MODES] {
        let mut counts = [0; N_MODES];
        for o in &self.observations {
            counts[o.chosen_mode.index()] += 1;
        }
        counts
    }
}

fn validate_observation(o: &Observation) -> Result<()> {
    let fail = |message: String| Error::Validation {
        id: o.id.clone(),
        message,
    };
    if o.id.is_empty() {
        return Err(fail("empty id".into()));
    }
    if !o.car_available && o.chosen_mode == Mode::Car {
        return Err(fail("car chosen but no car available in household".into()));
    }
    for (name, v) in [
        ("income_uah", o.income_uah),
        ("stated_detour_min", o.stated_detour_min),
        ("remuneration_uah", o.remuneration_uah),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(fail(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn observation(id: &str, mode: Mode, car: bool) -> Observation {
        Observation {
            id: id.to_string(),
            gender: Gender::Female,
            age_band: AgeBand::From25To34,
            income_uah: 10_000.0,
            car_available: car,
            chosen_mode: mode,
            stated_detour_min: 30.0,
            remuneration_uah: 90.0,
            trip_chain: TripChain::WorkHome,
            frequency: Frequency::OncePerWeek,
        }
    }
}
