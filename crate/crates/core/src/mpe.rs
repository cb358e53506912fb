//! Marginal probability effects: the sample-average change in a mode's
//! choice probability when one of its attributes is scaled by a percentage.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixed::{make_draws, Draws, MixedLikelihood, SimulationOptions};
use crate::mnl::LogitLikelihood;
use crate::mode::{Mode, N_MODES};
use crate::model::EstimationResult;
use crate::spec::{ModelSpec, ParameterVector};
use crate::synthesis::{Attribute, DesignMatrix};

pub const DEFAULT_LEVELS: [f64; 6] = [-10.0, -5.0, -1.0, 1.0, 5.0, 10.0];

/// Which observations enter the average for a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Only observations where the mode is available.
    #[default]
    AvailableOnly,
    /// Every observation; unavailable ones contribute zero change.
    AllObservations,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "available_only" => Ok(Averaging::AvailableOnly),
            "all_observations" => Ok(Averaging::AllObservations),
            other => Err(Error::Argument(format!("unknown averaging `{other}`"))),
        }
    }
}

/// Copy of `x` with `attribute` of `mode` multiplied by `1 + percent/100`.
pub fn perturb(
    x: &DesignMatrix,
    attribute: Attribute,
    mode: Mode,
    percent: f64,
) -> Result<DesignMatrix> {
    if !(percent.is_finite() && percent > -100.0) {
        return Err(Error::Argument(format!(
            "perturbation must exceed -100%, got {percent}"
        )));
    }
    let factor = 1.0 + percent / 100.0;
    let mut out = x.clone();
    for b in out.blocks_mut() {
        b.values[mode.index()][attribute.index()] *= factor;
    }
    Ok(out)
}

/// Name-based variant of [`perturb`] for CLI input.
pub fn perturb_named(
    x: &DesignMatrix,
    attribute: &str,
    mode: &str,
    percent: f64,
) -> Result<DesignMatrix> {
    let attribute: Attribute = attribute.parse()?;
    let mode: Mode = mode
        .parse()
        .map_err(|e: Error| Error::Specification(e.to_string()))?;
    perturb(x, attribute, mode, percent)
}

/// Point estimates plus, for mixed specs, the simulation draws.
pub struct ChoiceModel {
    spec: ModelSpec,
    theta: Vec<f64>,
    draws: Option<Draws>,
}

impl ChoiceModel {
    pub fn new(
        spec: &ModelSpec,
        parameters: &ParameterVector,
        sim: Option<&SimulationOptions>,
        n_obs: usize,
    ) -> Result<Self> {
        let theta = parameters.aligned_to(spec)?;
        let draws = if spec.is_mixed() {
            let sim = sim.copied().unwrap_or_default();
            Some(make_draws(
                n_obs,
                sim.draws,
                spec.mixing.len(),
                sim.draw_type,
                sim.seed,
            )?)
        } else {
            None
        };
        Ok(ChoiceModel {
            spec: spec.clone(),
            theta,
            draws,
        })
    }

    pub fn from_result(
        result: &EstimationResult,
        spec: &ModelSpec,
        sim: Option<&SimulationOptions>,
        n_obs: usize,
    ) -> Result<Self> {
        Self::new(spec, &result.parameters, sim, n_obs)
    }

    /// Probabilities of every mode for every observation (zero where
    /// unavailable).
    pub fn probabilities(&self, x: &DesignMatrix) -> Result<Vec<[f64; N_MODES]>> {
        match &self.draws {
            None => {
                let m = LogitLikelihood::new(x, &self.spec)?;
                Ok((0..x.len())
                    .into_par_iter()
                    .map(|q| m.probabilities(q, &self.theta))
                    .collect())
            }
            Some(d) => {
                let m = MixedLikelihood::new(x, &self.spec, d)?;
                Ok((0..x.len())
                    .into_par_iter()
                    .map(|q| m.probabilities(q, &self.theta))
                    .collect())
            }
        }
    }
}

fn averaged_change(
    x: &DesignMatrix,
    base: &[[f64; N_MODES]],
    perturbed: &[[f64; N_MODES]],
    mode: Mode,
    averaging: Averaging,
) -> Result<f64> {
    let i = mode.index();
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut any_available = false;
    for (q, b) in x.blocks().iter().enumerate() {
        let available = b.available.get(mode);
        any_available |= available;
        if available {
            sum += perturbed[q][i] - base[q][i];
            n += 1;
        } else if averaging == Averaging::AllObservations {
            n += 1;
        }
    }
    if !any_available {
        return Err(Error::UndefinedCell(mode.as_str()));
    }
    Ok(100.0 * sum / n as f64)
}

/// MPE in percentage points for one attribute, mode, and level.
pub fn mpe(
    x: &DesignMatrix,
    model: &ChoiceModel,
    attribute: Attribute,
    mode: Mode,
    percent: f64,
    averaging: Averaging,
) -> Result<f64> {
    if percent == 0.0 {
        if !x.blocks().iter().any(|b| b.available.get(mode)) {
            return Err(Error::UndefinedCell(mode.as_str()));
        }
        return Ok(0.0);
    }
    let base = model.probabilities(x)?;
    let shifted = model.probabilities(&perturb(x, attribute, mode, percent)?)?;
    averaged_change(x, &base, &shifted, mode, averaging)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeRow {
    pub attribute: Attribute,
    pub mode: Mode,
    /// One value per level, in percentage points.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpeTable {
    pub model: String,
    pub sample_size: usize,
    pub levels: Vec<f64>,
    pub rows: Vec<MpeRow>,
}

/// Full grid over `attributes` × the modes whose utility uses each attribute
/// × `levels`.
pub fn mpe_table(
    x: &DesignMatrix,
    model: &ChoiceModel,
    attributes: &[Attribute],
    levels: &[f64],
    averaging: Averaging,
) -> Result<MpeTable> {
    let cells: Vec<(Attribute, Mode)> = attributes
        .iter()
        .flat_map(|&a| model.spec.modes_with(a).into_iter().map(move |m| (a, m)))
        .collect();
    let base = if cells.is_empty() {
        Vec::new()
    } else {
        model.probabilities(x)?
    };
    let rows = cells
        .par_iter()
        .map(|&(attribute, mode)| {
            let values = levels
                .iter()
                .map(|&pct| {
                    if pct == 0.0 {
                        return Ok(0.0);
                    }
                    let shifted = model.probabilities(&perturb(x, attribute, mode, pct)?)?;
                    averaged_change(x, &base, &shifted, mode, averaging)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(MpeRow {
                attribute,
                mode,
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MpeTable {
        model: model.spec.name.clone(),
        sample_size: x.len(),
        levels: levels.to_vec(),
        rows,
    })
}

fn level_label(l: f64) -> String {
    if l > 0.0 {
        format!("+{l}%")
    } else {
        format!("{l}%")
    }
}

impl MpeTable {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "Marginal probability effects, % ({}; N = {})",
            self.model, self.sample_size
        );
        let mut header = format!("{:<18} {:<20}", "Attribute", "Mode");
        for l in &self.levels {
            let _ = write!(header, " {:>8}", level_label(*l));
        }
        let _ = writeln!(s, "{header}");
        let mut last = None;
        for r in &self.rows {
            let attr = if last == Some(r.attribute) {
                ""
            } else {
                r.attribute.label()
            };
            last = Some(r.attribute);
            let mut line = format!("{:<18} {:<20}", attr, r.mode.label());
            for v in &r.values {
                let _ = write!(line, " {:>8.2}", v);
            }
            let _ = writeln!(s, "{line}");
        }
        s
    }

    /// Long format: `model,attribute,mode,percent,mpe_pct`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,attribute,mode,percent,mpe_pct\n");
        for r in &self.rows {
            for (l, v) in self.levels.iter().zip(&r.values) {
                let _ = writeln!(s, "{},{},{},{},{}", self.model, r.attribute, r.mode, l, v);
            }
        }
        s
    }

    pub fn from_csv(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut table = MpeTable {
            model: String::new(),
            sample_size: 0,
            levels: Vec::new(),
            rows: Vec::new(),
        };
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |m: String| Error::Parse {
                row: i + 1,
                message: m,
            };
            let num = |k: usize| {
                let raw = rec.get(k).unwrap_or_default();
                raw.parse::<f64>()
                    .map_err(|_| bad(format!("`{raw}` is not a number")))
            };
            table.model = rec.get(0).unwrap_or_default().to_string();
            let attribute: Attribute = rec.get(1).unwrap_or_default().parse()?;
            let mode: Mode = rec.get(2).unwrap_or_default().parse()?;
            let (level, value) = (num(3)?, num(4)?);
            if !table.levels.contains(&level) {
                table.levels.push(level);
            }
            match table
                .rows
                .iter_mut()
                .find(|r| r.attribute == attribute && r.mode == mode)
            {
                Some(r) => r.values.push(value),
                None => table.rows.push(MpeRow {
                    attribute,
                    mode,
                    values: vec![value],
                }),
            }
        }
        Ok(table)
    }
}

/// Parses a comma-separated list of percentages.
pub fn parse_levels(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim().trim_start_matches('+');
            t.parse::<f64>()
                .map_err(|_| Error::Argument(format!("bad perturbation level `{t}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScalingConfig;
    use crate::mode::ModeMap;
    use crate::spec::Term;
    use crate::synthesis::{ChoiceBlock, N_ATTRIBUTES};
    use std::collections::BTreeMap;

    fn two_mode_toy(x_val: f64) -> DesignMatrix {
        let mut values = [[0.0; N_ATTRIBUTES]; N_MODES];
        values[Mode::Bus.index()][Attribute::DetourTime.index()] = x_val;
        let b = ChoiceBlock {
            chosen: Mode::Bus,
            available: ModeMap::from_fn(|m| matches!(m, Mode::Walking | Mode::Bus)),
            values,
        };
        DesignMatrix::from_blocks(vec![b], ScalingConfig::default()).unwrap()
    }

    fn toy_spec() -> ModelSpec {
        ModelSpec {
            name: "toy".into(),
            base_mode: Mode::Walking,
            terms: vec![Term {
                coefficient: "B".into(),
                attribute: Attribute::DetourTime,
                modes: vec![Mode::Bus],
            }],
            fixed: BTreeMap::new(),
            mixing: vec![],
        }
    }

    #[test]
    fn perturb_only_touches_named_cells() {
        let mut x = two_mode_toy(3.0);
        x.blocks_mut()[0].values[Mode::Car.index()][Attribute::DetourTime.index()] = 3.0;
        let p = perturb(&x, Attribute::DetourTime, Mode::Bus, -10.0).unwrap();
        assert!((p.blocks()[0].value(Mode::Bus, Attribute::DetourTime) - 2.7).abs() < 1e-12);
        assert_eq!(p.blocks()[0].value(Mode::Car, Attribute::DetourTime), 3.0);
        let q = perturb(&x, Attribute::DetourCost, Mode::Bus, 10.0).unwrap();
        assert_eq!(q.blocks()[0].value(Mode::Bus, Attribute::DetourCost), 0.0);
        assert_eq!(
            perturb(&x, Attribute::DetourTime, Mode::Bus, 0.0).unwrap(),
            x
        );
        assert!(perturb(&x, Attribute::DetourTime, Mode::Bus, -100.0).is_err());
        assert!(perturb_named(&x, "speed", "bus", 1.0).is_err());
        assert!(perturb_named(&x, "detour_time", "tram", 1.0).is_err());
    }

    #[test]
    fn two_alternative_hand_computed() {
        // V_walk = 0, V_bus = 1 * x with x = 1; +10% moves P_bus 0.7311 -> 0.7503
        let x = two_mode_toy(1.0);
        let beta = ParameterVector::from_pairs([("B", 1.0)]).unwrap();
        let model = ChoiceModel::new(&toy_spec(), &beta, None, 1).unwrap();
        let v = mpe(
            &x,
            &model,
            Attribute::DetourTime,
            Mode::Bus,
            10.0,
            Averaging::AvailableOnly,
        )
        .unwrap();
        assert_eq!(format!("{v:.2}"), "1.92");
        assert_eq!(
            mpe(
                &x,
                &model,
                Attribute::DetourTime,
                Mode::Bus,
                0.0,
                Averaging::AvailableOnly
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn unavailable_everywhere_is_error() {
        let x = two_mode_toy(1.0);
        let beta = ParameterVector::from_pairs([("B", 1.0)]).unwrap();
        let model = ChoiceModel::new(&toy_spec(), &beta, None, 1).unwrap();
        assert!(matches!(
            mpe(
                &x,
                &model,
                Attribute::DetourTime,
                Mode::Car,
                5.0,
                Averaging::AvailableOnly
            ),
            Err(Error::UndefinedCell("car"))
        ));
    }

    #[test]
    fn empty_attribute_list_gives_empty_table() {
        let x = two_mode_toy(1.0);
        let beta = ParameterVector::from_pairs([("B", 1.0)]).unwrap();
        let model = ChoiceModel::new(&toy_spec(), &beta, None, 1).unwrap();
        let t = mpe_table(&x, &model, &[], &DEFAULT_LEVELS, Averaging::AvailableOnly).unwrap();
        assert!(t.rows.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let x = two_mode_toy(1.0);
        let beta = ParameterVector::from_pairs([("B", -1.0)]).unwrap();
        let model = ChoiceModel::new(&toy_spec(), &beta, None, 1).unwrap();
        let t = mpe_table(
            &x,
            &model,
            &[Attribute::DetourTime],
            &DEFAULT_LEVELS,
            Averaging::AvailableOnly,
        )
        .unwrap();
        let back = MpeTable::from_csv(t.to_csv().as_bytes()).unwrap();
        assert_eq!(back.rows, t.rows);
        assert_eq!(back.levels, t.levels);
    }

    #[test]
    fn level_parsing() {
        assert_eq!(
            parse_levels("-10,-5,-1,1,5,10").unwrap(),
            DEFAULT_LEVELS.to_vec()
        );
        assert_eq!(parse_levels("+1, +5").unwrap(), vec![1.0, 5.0]);
        assert!(parse_levels("x").is_err());
    }
}
