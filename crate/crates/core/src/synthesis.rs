//! Detour reconstruction: from the chosen mode's stated detour time, derive
//! the detour distance, then detour time, cost, and profit for every mode,
//! and assemble the scaled design matrix.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{Dataset, NetworkParams, Observation, ScalingConfig};
use crate::error::{Error, Result};
use crate::mode::{Mode, ModeMap, N_MODES};
use crate::spec::ModelSpec;

/// Detour distance implied by a detour of `detour_min` minutes on `mode`.
pub fn detour_distance(mode: Mode, detour_min: f64, net: &NetworkParams) -> Result<f64> {
    if !(detour_min.is_finite() && detour_min > 0.0) {
        return Err(Error::Argument(format!(
            "detour time must be positive, got {detour_min}"
        )));
    }
    Ok(net.speed_kmh.get(mode) * detour_min / 60.0)
}

/// Minutes needed to cover `distance_km` on each mode.
pub fn alternative_detour_times(distance_km: f64, net: &NetworkParams) -> ModeMap<f64> {
    ModeMap::from_fn(|m| distance_km / net.speed_kmh.get(m) * 60.0)
}

/// Out-of-pocket detour cost: nothing for active modes, one fare for public
/// transport, fuel for the car.
pub fn detour_cost(mode: Mode, distance_km: f64, net: &NetworkParams) -> f64 {
    match mode {
        Mode::Walking | Mode::Bike => 0.0,
        Mode::Bus | Mode::Metro | Mode::ElectricGroundPt => net.tariff_uah.get(mode),
        Mode::Car => distance_km * net.fuel_consumption_l_per_km * net.fuel_price_uah_per_l,
    }
}

pub fn profit(remuneration_uah: f64, cost_uah: f64) -> f64 {
    remuneration_uah - cost_uah
}

/// Raw (unscaled) detour attributes of one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetourAttributes {
    pub distance_km: f64,
    pub detour_time_min: ModeMap<f64>,
    pub detour_cost_uah: ModeMap<f64>,
    pub profit_uah: ModeMap<f64>,
}

impl DetourAttributes {
    pub fn reconstruct(obs: &Observation, net: &NetworkParams) -> Result<Self> {
        let distance_km = detour_distance(obs.chosen_mode, obs.stated_detour_min, net)?;
        Ok(Self::from_distance(
            distance_km,
            obs.chosen_mode,
            obs.stated_detour_min,
            obs.remuneration_uah,
            net,
        ))
    }

    /// Fans a distance out to all modes. The anchor mode keeps `anchor_min`
    /// verbatim so no rounding is introduced on the stated value.
    pub(crate) fn from_distance(
        distance_km: f64,
        anchor: Mode,
        anchor_min: f64,
        remuneration_uah: f64,
        net: &NetworkParams,
    ) -> Self {
        let mut detour_time_min = alternative_detour_times(distance_km, net);
        detour_time_min.set(anchor, anchor_min);
        let detour_cost_uah = ModeMap::from_fn(|m| detour_cost(m, distance_km, net));
        let profit_uah = ModeMap::from_fn(|m| profit(remuneration_uah, detour_cost_uah.get(m)));
        DetourAttributes {
            distance_km,
            detour_time_min,
            detour_cost_uah,
            profit_uah,
        }
    }
}

/// Per-mode explanatory variable available to utility terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    /// Constant 1, carries alternative-specific constants.
    Constant,
    DetourTime,
    DetourCost,
    Profit,
    Income,
}

pub const N_ATTRIBUTES: usize = 5;

impl Attribute {
    pub const ALL: [Attribute; N_ATTRIBUTES] = [
        Attribute::Constant,
        Attribute::DetourTime,
        Attribute::DetourCost,
        Attribute::Profit,
        Attribute::Income,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Constant => "constant",
            Attribute::DetourTime => "detour_time",
            Attribute::DetourCost => "detour_cost",
            Attribute::Profit => "profit",
            Attribute::Income => "income",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Attribute::Constant => "Constant",
            Attribute::DetourTime => "Detour time, min",
            Attribute::DetourCost => "Detour cost, UAH",
            Attribute::Profit => "Profit, UAH",
            Attribute::Income => "Income, UAH",
        }
    }

    fn divisor(self, s: &ScalingConfig) -> f64 {
        match self {
            Attribute::Constant => 1.0,
            Attribute::DetourTime => s.detour_time_divisor,
            Attribute::DetourCost => s.detour_cost_divisor,
            Attribute::Profit => s.profit_divisor,
            Attribute::Income => s.income_divisor,
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attribute::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Specification(format!("unknown attribute `{s}`")))
    }
}

/// Scaled attributes of one observation, one row per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceBlock {
    pub chosen: Mode,
    pub available: ModeMap<bool>,
    pub values: [[f64; N_ATTRIBUTES]; N_MODES],
}

impl ChoiceBlock {
    pub fn value(&self, mode: Mode, attribute: Attribute) -> f64 {
        self.values[mode.index()][attribute.index()]
    }

    pub fn n_available(&self) -> usize {
        self.available.0.iter().filter(|&&a| a).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    blocks: Vec<ChoiceBlock>,
    scaling: ScalingConfig,
}

impl DesignMatrix {
    /// Builds a matrix from explicit blocks; used for toy problems and tests.
    pub fn from_blocks(blocks: Vec<ChoiceBlock>, scaling: ScalingConfig) -> Result<Self> {
        for (q, b) in blocks.iter().enumerate() {
            if !b.available.get(b.chosen) {
                return Err(Error::Argument(format!(
                    "block {q}: chosen mode {} is unavailable",
                    b.chosen
                )));
            }
            if b.n_available() < 2 {
                return Err(Error::DegenerateChoiceSet(b.n_available()));
            }
        }
        Ok(DesignMatrix { blocks, scaling })
    }

    pub fn blocks(&self) -> &[ChoiceBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn scaling(&self) -> &ScalingConfig {
        &self.scaling
    }

    /// `(mode, attribute)` column names in storage order.
    pub fn columns() -> Vec<String> {
        Mode::ALL
            .iter()
            .flat_map(|m| Attribute::ALL.iter().map(move |a| format!("{}:{}", m, a)))
            .collect()
    }

    /// Raw value of a stored cell (undoes the scaling).
    pub fn unscaled(&self, q: usize, mode: Mode, attribute: Attribute) -> f64 {
        self.blocks[q].value(mode, attribute) * attribute.divisor(&self.scaling)
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut [ChoiceBlock] {
        &mut self.blocks
    }

    /// Rejects non-finite cells among available modes.
    pub fn check_finite(&self) -> Result<()> {
        for (q, b) in self.blocks.iter().enumerate() {
            for m in Mode::ALL.iter().filter(|m| b.available.get(**m)) {
                for a in Attribute::ALL {
                    if !b.value(*m, a).is_finite() {
                        return Err(Error::Data {
                            observation: q,
                            mode: m.as_str(),
                            attribute: a.as_str(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn scale_block(
    obs: &Observation,
    attrs: &DetourAttributes,
    available: ModeMap<bool>,
    s: &ScalingConfig,
) -> ChoiceBlock {
    let mut values = [[0.0; N_ATTRIBUTES]; N_MODES];
    for m in Mode::ALL {
        let row = &mut values[m.index()];
        row[Attribute::Constant.index()] = 1.0;
        row[Attribute::DetourTime.index()] = attrs.detour_time_min.get(m) / s.detour_time_divisor;
        row[Attribute::DetourCost.index()] = attrs.detour_cost_uah.get(m) / s.detour_cost_divisor;
        row[Attribute::Profit.index()] = attrs.profit_uah.get(m) / s.profit_divisor;
        row[Attribute::Income.index()] = obs.income_uah / s.income_divisor;
    }
    ChoiceBlock {
        chosen: obs.chosen_mode,
        available,
        values,
    }
}

/// Raw attributes for every observation, in dataset order.
pub fn reconstruct_all(d: &Dataset, net: &NetworkParams) -> Result<Vec<DetourAttributes>> {
    net.validate()?;
    d.observations()
        .par_iter()
        .map(|o| DetourAttributes::reconstruct(o, net))
        .collect()
}

pub fn build_design_matrix(
    d: &Dataset,
    net: &NetworkParams,
    s: &ScalingConfig,
    spec: &ModelSpec,
) -> Result<DesignMatrix> {
    s.validate()?;
    spec.validate()?;
    let attrs = reconstruct_all(d, net)?;
    let blocks: Vec<ChoiceBlock> = d
        .observations()
        .par_iter()
        .zip(attrs.par_iter())
        .enumerate()
        .map(|(q, (o, a))| scale_block(o, a, d.availability(q), s))
        .collect();
    DesignMatrix::from_blocks(blocks, *s)
}

/// Rows of the `synthesize` attribute table: one per observation × mode.
pub fn write_attribute_table(
    d: &Dataset,
    net: &NetworkParams,
    s: &ScalingConfig,
    writer: impl std::io::Write,
) -> Result<()> {
    let attrs = reconstruct_all(d, net)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "id",
        "mode",
        "available",
        "detour_km",
        "detour_min",
        "detour_cost",
        "profit",
        "scaled_detour_time",
        "scaled_detour_cost",
        "scaled_profit",
        "scaled_income",
    ])?;
    for (q, (o, a)) in d.observations().iter().zip(&attrs).enumerate() {
        let block = scale_block(o, a, d.availability(q), s);
        for m in Mode::ALL {
            w.write_record([
                o.id.clone(),
                m.to_string(),
                d.is_available(q, m).to_string(),
                a.distance_km.to_string(),
                a.detour_time_min.get(m).to_string(),
                a.detour_cost_uah.get(m).to_string(),
                a.profit_uah.get(m).to_string(),
                block.value(m, Attribute::DetourTime).to_string(),
                block.value(m, Attribute::DetourCost).to_string(),
                block.value(m, Attribute::Profit).to_string(),
                block.value(m, Attribute::Income).to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<attribute table>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::test_support::observation;
    use approx::assert_relative_eq;

    #[test]
    fn distance_examples() {
        let net = NetworkParams::default();
        assert_relative_eq!(
            detour_distance(Mode::Car, 30.0, &net).unwrap(),
            11.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            detour_distance(Mode::Walking, 15.0, &net).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(detour_distance(Mode::Car, 1e-12, &net).unwrap() < 1e-12);
        assert!(detour_distance(Mode::Car, 0.0, &net).is_err());
        assert!(detour_distance(Mode::Car, -5.0, &net).is_err());
    }

    #[test]
    fn alternative_times_examples() {
        let net = NetworkParams::default();
        let t = alternative_detour_times(11.5, &net);
        assert_eq!(format!("{:.2}", t.get(Mode::Metro)), "53.08");
        assert_eq!(format!("{:.2}", t.get(Mode::Bus)), "76.67");
        let zero = alternative_detour_times(0.0, &net);
        assert!(zero.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn times_ordered_inversely_to_speed() {
        let net = NetworkParams::default();
        let t = alternative_detour_times(3.7, &net);
        let order = [
            Mode::Bike,
            Mode::Car,
            Mode::Metro,
            Mode::Bus,
            Mode::ElectricGroundPt,
            Mode::Walking,
        ];
        for w in order.windows(2) {
            assert!(t.get(w[0]) < t.get(w[1]), "{} !< {}", w[0], w[1]);
        }
    }

    #[test]
    fn cost_examples() {
        let net = NetworkParams::default();
        assert_eq!(detour_cost(Mode::Bus, 0.3, &net), 10.0);
        assert_eq!(detour_cost(Mode::Bus, 30.0, &net), 10.0);
        assert_relative_eq!(detour_cost(Mode::Car, 11.5, &net), 24.84, epsilon = 1e-12);
        assert_eq!(detour_cost(Mode::Bike, 11.5, &net), 0.0);
        assert_eq!(detour_cost(Mode::Walking, 11.5, &net), 0.0);
    }

    #[test]
    fn profit_examples() {
        assert_eq!(profit(90.0, 10.0), 80.0);
        assert_eq!(profit(60.0, 0.0), 60.0);
        assert_relative_eq!(profit(50.0, 24.84), 25.16, epsilon = 1e-12);
        assert!(profit(50.0, 60.0) < 0.0);
    }

    #[test]
    fn design_matrix_example_cell() {
        let mut o = observation("q", Mode::Car, true);
        o.stated_detour_min = 30.0;
        o.remuneration_uah = 90.0;
        o.income_uah = 10_000.0;
        let mut walker = observation("w", Mode::Walking, false);
        walker.stated_detour_min = 17.0;
        let d = Dataset::new(vec![o, walker]).unwrap();
        let x = build_design_matrix(
            &d,
            &NetworkParams::default(),
            &ScalingConfig::default(),
            &ModelSpec::cost_time(),
        )
        .unwrap();
        let b = &x.blocks()[0];
        assert_eq!(
            format!("{:.3}", b.value(Mode::Bus, Attribute::DetourTime)),
            "7.667"
        );
        assert_eq!(b.value(Mode::Bus, Attribute::DetourCost), 1.0);
        assert_eq!(b.value(Mode::Bus, Attribute::Income), 1.0);
        assert_eq!(b.value(Mode::Car, Attribute::DetourTime), 3.0);
        assert_eq!(
            x.blocks()[1].value(Mode::Walking, Attribute::DetourTime),
            1.7
        );
        assert!(!x.blocks()[1].available.get(Mode::Car));
        assert!(x.blocks()[1].available.get(Mode::Bus));
        assert_relative_eq!(
            x.unscaled(0, Mode::Car, Attribute::DetourCost),
            24.84,
            epsilon = 1e-12
        );
    }

    #[test]
    fn attribute_names_parse() {
        for a in Attribute::ALL {
            assert_eq!(a.as_str().parse::<Attribute>().unwrap(), a);
        }
        assert!(matches!(
            "speed".parse::<Attribute>(),
            Err(Error::Specification(_))
        ));
    }
}
