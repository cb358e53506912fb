//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use detour_choice::data::{AgeBand, Frequency, Gender, Observation, TripChain};
use detour_choice::mode::{Mode, ModeMap, N_MODES};
use detour_choice::oracle::{generate, SyntheticConfig};
use detour_choice::spec::{reference, MixingSpec, Term};
use detour_choice::synthesis::{Attribute, ChoiceBlock, N_ATTRIBUTES};
use detour_choice::{
    build_design_matrix, Dataset, DesignMatrix, ModelSpec, NetworkParams, ParameterVector,
    ScalingConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn observation(id: &str, mode: Mode, car: bool, detour_min: f64) -> Observation {
    Observation {
        id: id.to_string(),
        gender: Gender::Female,
        age_band: AgeBand::ALL[1],
        income_uah: 15_000.0,
        car_available: car,
        chosen_mode: mode,
        stated_detour_min: detour_min,
        remuneration_uah: 90.0,
        trip_chain: TripChain::ALL[1],
        frequency: Frequency::ALL[2],
    }
}

/// 166 households with a car and 83 without.
pub fn survey_shaped_dataset() -> Dataset {
    let obs = (0..249)
        .map(|q| {
            let car = q < 166;
            let mode = Mode::ALL[q % N_MODES];
            let mode = if mode == Mode::Car && !car {
                Mode::Bus
            } else {
                mode
            };
            observation(&format!("q{q}"), mode, car, [15.0, 30.0, 45.0, 60.0][q % 4])
        })
        .collect();
    Dataset::new(obs).unwrap()
}

/// Walking (base) against bike: a bike constant and, optionally, a bike
/// detour-time slope.
pub fn binary_spec(with_slope: bool) -> ModelSpec {
    let mut terms = vec![Term {
        coefficient: "ASC_BIKE".into(),
        attribute: Attribute::Constant,
        modes: vec![Mode::Bike],
    }];
    if with_slope {
        terms.push(Term {
            coefficient: "DT_BIKE".into(),
            attribute: Attribute::DetourTime,
            modes: vec![Mode::Bike],
        });
    }
    ModelSpec {
        name: "binary".into(),
        base_mode: Mode::Walking,
        terms,
        fixed: BTreeMap::new(),
        mixing: Vec::new(),
    }
}

pub fn binary_block(chosen: Mode, bike_time: f64) -> ChoiceBlock {
    let mut values = [[0.0; N_ATTRIBUTES]; N_MODES];
    for row in values.iter_mut() {
        row[Attribute::Constant.index()] = 1.0;
    }
    values[Mode::Bike.index()][Attribute::DetourTime.index()] = bike_time;
    ChoiceBlock {
        chosen,
        available: ModeMap::from_fn(|m| m == Mode::Walking || m == Mode::Bike),
        values,
    }
}

/// `n` binary observations drawn from a logit with the given bike constant
/// and slope; bike times uniform on (0, 3).
pub fn binary_toy(n: usize, asc: f64, slope: f64, seed: u64) -> DesignMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let blocks = (0..n)
        .map(|_| {
            let t: f64 = rng.random_range(0.0..3.0);
            let p_bike = 1.0 / (1.0 + (-(asc + slope * t)).exp());
            let chosen = if rng.random_bool(p_bike) {
                Mode::Bike
            } else {
                Mode::Walking
            };
            binary_block(chosen, t)
        })
        .collect();
    DesignMatrix::from_blocks(blocks, ScalingConfig::default()).unwrap()
}

/// Random blocks with random availability (at least two modes) and
/// attribute values in the scaled ranges of the survey.
pub fn random_design(n: usize, rng: &mut impl Rng) -> DesignMatrix {
    let blocks = (0..n)
        .map(|_| {
            let mut available = ModeMap::from_fn(|_| rng.random_bool(0.8));
            if available.0.iter().filter(|a| **a).count() < 2 {
                available.set(Mode::Walking, true);
                available.set(Mode::Bus, true);
            }
            let income = rng.random_range(0.25..5.5);
            let mut values = [[0.0; N_ATTRIBUTES]; N_MODES];
            for row in values.iter_mut() {
                row[Attribute::Constant.index()] = 1.0;
                row[Attribute::DetourTime.index()] = rng.random_range(0.3..10.0);
                row[Attribute::DetourCost.index()] = rng.random_range(0.0..3.0);
                row[Attribute::Profit.index()] = rng.random_range(0.0..1.2);
                row[Attribute::Income.index()] = income;
            }
            let choices: Vec<Mode> = Mode::ALL
                .iter()
                .copied()
                .filter(|m| available.get(*m))
                .collect();
            ChoiceBlock {
                chosen: choices[rng.random_range(0..choices.len())],
                available,
                values,
            }
        })
        .collect();
    DesignMatrix::from_blocks(blocks, ScalingConfig::default()).unwrap()
}

pub fn random_parameters(spec: &ModelSpec, scale: f64, rng: &mut impl Rng) -> ParameterVector {
    let names = spec.free_parameters();
    let values = names
        .iter()
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    ParameterVector::new(names, values).unwrap()
}

/// Synthetic survey from the reference estimates of `preset`.
pub fn synthetic(preset: &str, n: usize, seed: u64) -> (Dataset, ModelSpec, ParameterVector) {
    let spec = ModelSpec::preset(preset).unwrap();
    let truth = match preset {
        "cost-time" => reference::cost_time_mnl(),
        _ => reference::profit_time_mnl(),
    };
    let mut cfg = SyntheticConfig::new(spec.clone(), truth.clone(), n, seed);
    cfg.exact_car_count = true;
    (generate(&cfg).unwrap().dataset, spec, truth)
}

pub fn design(d: &Dataset, spec: &ModelSpec) -> DesignMatrix {
    build_design_matrix(
        d,
        &NetworkParams::default(),
        &ScalingConfig::default(),
        spec,
    )
    .unwrap()
}

/// Identified reduced spec with a normally distributed car time
/// coefficient: constants and time slopes, walking slope fixed.
pub fn car_time_mixture_spec() -> (ModelSpec, ParameterVector) {
    let non_base = [
        Mode::Bike,
        Mode::Car,
        Mode::Bus,
        Mode::Metro,
        Mode::ElectricGroundPt,
    ];
    let mut terms: Vec<Term> = non_base
        .iter()
        .map(|m| Term {
            coefficient: format!("ASC_{}", m.coefficient_suffix()),
            attribute: Attribute::Constant,
            modes: vec![*m],
        })
        .collect();
    terms.extend(Mode::ALL.iter().map(|m| Term {
        coefficient: format!("DT_{}", m.coefficient_suffix()),
        attribute: Attribute::DetourTime,
        modes: vec![*m],
    }));
    let mut fixed = BTreeMap::new();
    fixed.insert("DT_WALKING".to_string(), -0.5);
    let spec = ModelSpec {
        name: "car-time-mixture".into(),
        base_mode: Mode::Walking,
        terms,
        fixed,
        mixing: vec![MixingSpec {
            coefficient: "DT_CAR".into(),
            sigma: "SIGMA_TIME_CAR".into(),
        }],
    };
    let truth = ParameterVector::from_pairs([
        ("ASC_BIKE", -1.0),
        ("ASC_CAR", 1.0),
        ("ASC_BUS", -0.5),
        ("ASC_METRO", 0.2),
        ("ASC_ELECTRIC_GROUND_PT", -0.3),
        ("DT_BIKE", -2.0),
        ("DT_BUS", -1.0),
        ("DT_CAR", -1.5),
        ("DT_ELECTRIC_GROUND_PT", -0.8),
        ("DT_METRO", -1.2),
        ("SIGMA_TIME_CAR", 0.5),
    ])
    .unwrap();
    (spec, truth)
}
