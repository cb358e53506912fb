//! Declarative utility specifications and parameter vectors.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mode::{Mode, N_MODES};
use crate::synthesis::Attribute;

/// Mode order used for coefficient tables.
pub const TABLE_ORDER: [Mode; N_MODES] = [
    Mode::Bike,
    Mode::Bus,
    Mode::Car,
    Mode::ElectricGroundPt,
    Mode::Metro,
    Mode::Walking,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coefficient: String,
    pub attribute: Attribute,
    pub modes: Vec<Mode>,
}

/// Normal mixing of one coefficient: the term's coefficient is the mean and
/// `sigma` names the companion standard deviation, read as `|sigma|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSpec {
    pub coefficient: String,
    pub sigma: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub base_mode: Mode,
    pub terms: Vec<Term>,
    pub fixed: BTreeMap<String, f64>,
    pub mixing: Vec<MixingSpec>,
}

fn coef(prefix: &str, mode: Mode) -> String {
    format!("{prefix}_{}", mode.coefficient_suffix())
}

fn per_mode(prefix: &str, attribute: Attribute, modes: &[Mode]) -> Vec<Term> {
    modes
        .iter()
        .map(|&m| Term {
            coefficient: coef(prefix, m),
            attribute,
            modes: vec![m],
        })
        .collect()
}

impl ModelSpec {
    /// Detour cost and detour time trade-off: 5 constants, 4 cost, 6 time,
    /// and 5 income coefficients.
    pub fn cost_time() -> Self {
        let non_base = &TABLE_ORDER[..5];
        let priced = [Mode::Bus, Mode::Car, Mode::ElectricGroundPt, Mode::Metro];
        let mut terms = per_mode("ASC", Attribute::Constant, non_base);
        terms.extend(per_mode("DC", Attribute::DetourCost, &priced));
        terms.extend(per_mode("DT", Attribute::DetourTime, &TABLE_ORDER));
        terms.extend(per_mode("INCOME", Attribute::Income, non_base));
        ModelSpec {
            name: "cost-time".into(),
            base_mode: Mode::Walking,
            terms,
            fixed: BTreeMap::new(),
            mixing: Vec::new(),
        }
    }

    /// Profit and detour time trade-off: 5 constants, 6 profit, 6 time, and
    /// 5 income coefficients.
    pub fn profit_time() -> Self {
        let non_base = &TABLE_ORDER[..5];
        let mut terms = per_mode("ASC", Attribute::Constant, non_base);
        terms.extend(per_mode("PROFIT", Attribute::Profit, &TABLE_ORDER));
        terms.extend(per_mode("DT", Attribute::DetourTime, &TABLE_ORDER));
        terms.extend(per_mode("INCOME", Attribute::Income, non_base));
        ModelSpec {
            name: "profit-time".into(),
            base_mode: Mode::Walking,
            terms,
            fixed: BTreeMap::new(),
            mixing: Vec::new(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cost-time" => Ok(Self::cost_time()),
            "profit-time" => Ok(Self::profit_time()),
            other => Err(Error::Specification(format!("unknown preset `{other}`"))),
        }
    }

    /// Adds a normally distributed detour-time coefficient for every mode
    /// that has a `DT_*` term.
    pub fn with_time_mixing(mut self) -> Self {
        for &m in &TABLE_ORDER {
            let c = coef("DT", m);
            if self.terms.iter().any(|t| t.coefficient == c) {
                self.mixing.push(MixingSpec {
                    coefficient: c,
                    sigma: coef("SIGMA_TIME", m),
                });
            }
        }
        self.name = format!("{}-mixture", self.name);
        self
    }

    pub fn without_mixing(mut self) -> Self {
        self.mixing.clear();
        self
    }

    pub fn is_mixed(&self) -> bool {
        !self.mixing.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let spec_err = |m: String| Err(Error::Specification(m));
        let mut names = HashSet::new();
        for t in &self.terms {
            if !names.insert(t.coefficient.as_str()) {
                return spec_err(format!("duplicate coefficient `{}`", t.coefficient));
            }
            if t.modes.is_empty() {
                return spec_err(format!(
                    "coefficient `{}` applies to no mode",
                    t.coefficient
                ));
            }
            let normalized = matches!(t.attribute, Attribute::Constant | Attribute::Income);
            if normalized && t.modes.contains(&self.base_mode) {
                return spec_err(format!(
                    "`{}`: base mode {} carries no {} term",
                    t.coefficient, self.base_mode, t.attribute
                ));
            }
        }
        for name in self.fixed.keys() {
            if !names.contains(name.as_str()) {
                return spec_err(format!("fixed value for unknown coefficient `{name}`"));
            }
        }
        for (name, v) in &self.fixed {
            if !v.is_finite() {
                return spec_err(format!("fixed value for `{name}` is not finite"));
            }
        }
        let mut mixed = HashSet::new();
        for mix in &self.mixing {
            if !names.contains(mix.coefficient.as_str()) {
                return spec_err(format!(
                    "mixing refers to unknown coefficient `{}`",
                    mix.coefficient
                ));
            }
            if self.fixed.contains_key(&mix.coefficient) {
                return spec_err(format!("mixed coefficient `{}` is fixed", mix.coefficient));
            }
            if !mixed.insert(mix.coefficient.as_str()) {
                return spec_err(format!("coefficient `{}` mixed twice", mix.coefficient));
            }
            if !names.insert(mix.sigma.as_str()) {
                return spec_err(format!("duplicate coefficient `{}`", mix.sigma));
            }
        }
        Ok(())
    }

    /// Names of the estimated parameters: free term coefficients in term
    /// order, then the mixing standard deviations.
    pub fn free_parameters(&self) -> Vec<String> {
        self.terms
            .iter()
            .filter(|t| !self.fixed.contains_key(&t.coefficient))
            .map(|t| t.coefficient.clone())
            .chain(self.mixing.iter().map(|m| m.sigma.clone()))
            .collect()
    }

    pub fn term(&self, coefficient: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.coefficient == coefficient)
    }

    /// Modes in which some term uses `attribute`, in [`TABLE_ORDER`].
    pub fn modes_with(&self, attribute: Attribute) -> Vec<Mode> {
        TABLE_ORDER
            .iter()
            .copied()
            .filter(|m| {
                self.terms
                    .iter()
                    .any(|t| t.attribute == attribute && t.modes.contains(m))
            })
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| Error::Specification(e.to_string()))?;
        let terms = file
            .term
            .into_iter()
            .map(|t| {
                let modes = t
                    .modes
                    .iter()
                    .map(|m| {
                        m.parse::<Mode>()
                            .map_err(|e| Error::Specification(e.to_string()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Term {
                    coefficient: t.coefficient,
                    attribute: t.attribute.parse()?,
                    modes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = ModelSpec {
            name: file.name.unwrap_or_else(|| "custom".into()),
            base_mode: match file.base_mode {
                Some(m) => m
                    .parse()
                    .map_err(|e: Error| Error::Specification(e.to_string()))?,
                None => Mode::Walking,
            },
            terms,
            fixed: file.fixed,
            mixing: file
                .mixing
                .into_iter()
                .map(|m| MixingSpec {
                    coefficient: m.coefficient,
                    sigma: m.sigma,
                })
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: Option<String>,
    base_mode: Option<String>,
    #[serde(default)]
    term: Vec<TermEntry>,
    #[serde(default)]
    fixed: BTreeMap<String, f64>,
    #[serde(default)]
    mixing: Vec<MixingEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    coefficient: String,
    attribute: String,
    modes: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixingEntry {
    coefficient: String,
    sigma: String,
}

/// Named coefficient values in estimation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Argument(format!(
                "{} names for {} values",
                names.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "parameter `{}` is not finite",
                names[i]
            )));
        }
        Ok(ParameterVector { names, values })
    }

    pub fn zeros(names: Vec<String>) -> Self {
        let values = vec![0.0; names.len()];
        ParameterVector { names, values }
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let (names, values): (Vec<String>, Vec<f64>) =
            pairs.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }

    /// Values arranged in the spec's free-parameter order. Missing mixing
    /// standard deviations default to zero; any other missing name is an
    /// error.
    pub fn aligned_to(&self, spec: &ModelSpec) -> Result<Vec<f64>> {
        let sigmas: HashSet<&str> = spec.mixing.iter().map(|m| m.sigma.as_str()).collect();
        spec.free_parameters()
            .iter()
            .map(|n| match self.get(n) {
                Some(v) => Ok(v),
                None if sigmas.contains(n.as_str()) => Ok(0.0),
                None => Err(Error::Specification(format!("missing coefficient `{n}`"))),
            })
            .collect()
    }

    /// `name,value` CSV.
    pub fn read_csv(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let name = rec.get(0).unwrap_or_default().trim().to_string();
            let raw = rec.get(1).unwrap_or_default().trim();
            let value = raw.parse::<f64>().map_err(|_| Error::Parse {
                row: i + 1,
                message: format!("`{raw}` is not a number"),
            })?;
            pairs.push((name, value));
        }
        Self::from_pairs(pairs)
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["name", "value"])?;
        for (n, v) in self.iter() {
            w.write_record([n.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<parameter writer>", e))?;
        Ok(())
    }
}

/// Reported point estimates used as ground truth for synthetic data.
pub mod reference {
    use super::ParameterVector;

    /// Cost-time logit estimates.
    pub fn cost_time_mnl() -> ParameterVector {
        ParameterVector::from_pairs([
            ("ASC_BIKE", -14.09),
            ("ASC_BUS", -0.87),
            ("ASC_CAR", -9.59),
            ("ASC_ELECTRIC_GROUND_PT", -2.62),
            ("ASC_METRO", -2.19),
            ("DC_BUS", -0.63),
            ("DC_CAR", -4.92),
            ("DC_ELECTRIC_GROUND_PT", -2.49),
            ("DC_METRO", -3.16),
            ("DT_BIKE", -21.18),
            ("DT_BUS", -9.82),
            ("DT_CAR", -14.59),
            ("DT_ELECTRIC_GROUND_PT", -7.55),
            ("DT_METRO", -12.35),
            ("DT_WALKING", -4.57),
            ("INCOME_BIKE", 1.28),
            ("INCOME_BUS", 0.28),
            ("INCOME_CAR", 1.39),
            ("INCOME_ELECTRIC_GROUND_PT", 0.743),
            ("INCOME_METRO", -0.29),
        ])
        .expect("finite constants")
    }

    /// Profit-time logit estimates.
    pub fn profit_time_mnl() -> ParameterVector {
        ParameterVector::from_pairs([
            ("ASC_BIKE", -7.49),
            ("ASC_BUS", 8.21),
            ("ASC_CAR", -7.70),
            ("ASC_ELECTRIC_GROUND_PT", 3.10),
            ("ASC_METRO", 3.73),
            ("PROFIT_BIKE", 49.95),
            ("PROFIT_BUS", 56.22),
            ("PROFIT_CAR", 58.70),
            ("PROFIT_ELECTRIC_GROUND_PT", 56.62),
            ("PROFIT_METRO", 56.08),
            ("PROFIT_WALKING", 63.98),
            ("DT_BIKE", -31.06),
            ("DT_BUS", -13.67),
            ("DT_CAR", -23.07),
            ("DT_ELECTRIC_GROUND_PT", -10.78),
            ("DT_METRO", -17.85),
            ("DT_WALKING", -6.76),
            ("INCOME_BIKE", 1.55),
            ("INCOME_BUS", 0.23),
            ("INCOME_CAR", 1.45),
            ("INCOME_ELECTRIC_GROUND_PT", 0.72),
            ("INCOME_METRO", -0.29),
        ])
        .expect("finite constants")
    }
}
