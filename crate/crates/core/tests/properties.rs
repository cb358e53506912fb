mod common;

use common::*;
use detour_choice::data::{read_dataset, summarize, write_dataset};
use detour_choice::mnl::{choice_probabilities, utilities};
use detour_choice::mode::Mode;
use detour_choice::mpe::{mpe, mpe_table, perturb, Averaging, ChoiceModel, DEFAULT_LEVELS};
use detour_choice::oracle::{generate, SyntheticConfig};
use detour_choice::synthesis::ChoiceBlock;
use detour_choice::synthesis::{alternative_detour_times, detour_distance, Attribute};
use detour_choice::{
    build_design_matrix, estimate, Dataset, DesignMatrix, ModelSpec, NetworkParams,
    OptimizerOptions, ParameterVector, ScalingConfig,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detour_round_trip(minutes in 1.0f64..240.0, mode_ix in 0usize..6) {
        let net = NetworkParams::default();
        let mode = Mode::ALL[mode_ix];
        let km = detour_distance(mode, minutes, &net).unwrap();
        let back = alternative_detour_times(km, &net).get(mode);
        prop_assert!(((back - minutes) / minutes).abs() < 1e-12);
    }

    #[test]
    fn summary_ignores_row_order(seed in any::<u64>()) {
        let d = survey_shaped_dataset();
        let mut rows = d.observations().to_vec();
        rows.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
        let shuffled = Dataset::new(rows).unwrap();
        prop_assert_eq!(summarize(&d, true).render_text(), summarize(&shuffled, true).render_text());
        prop_assert_eq!(summarize(&d, false).render_text(), summarize(&shuffled, false).render_text());
    }

    #[test]
    fn mpe_sign_and_monotone_for_negative_coefficients(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let spec = ModelSpec::cost_time();
        let x = random_design(30, &mut rng);
        let mut beta = random_parameters(&spec, 1.0, &mut rng);
        beta = ParameterVector::new(
            beta.names().to_vec(),
            beta.iter().map(|(n, v)| if n.starts_with("DT_") || n.starts_with("DC_") { -v.abs() - 0.1 } else { v }).collect(),
        ).unwrap();
        let model = ChoiceModel::new(&spec, &beta, None, x.len()).unwrap();
        let t = mpe_table(&x, &model, &[Attribute::DetourCost, Attribute::DetourTime], &DEFAULT_LEVELS, Averaging::AvailableOnly).unwrap();
        prop_assert_eq!(t.rows.len(), 10);
        for row in &t.rows {
            for (l, v) in t.levels.iter().zip(&row.values) {
                prop_assert!(if *l > 0.0 { *v < 0.0 } else { *v > 0.0 }, "{:?} {} at {}: {}", row.attribute, row.mode, l, v);
            }
            // levels run -10, -5, -1, +1, +5, +10
            let v = &row.values;
            prop_assert!(v[0].abs() >= v[1].abs() && v[1].abs() >= v[2].abs());
            prop_assert!(v[5].abs() >= v[4].abs() && v[4].abs() >= v[3].abs());
        }
    }

    #[test]
    fn probability_changes_sum_to_zero(seed in any::<u64>(), pct in -50.0f64..50.0) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let spec = ModelSpec::profit_time();
        let x = random_design(20, &mut rng);
        let beta = random_parameters(&spec, 1.0, &mut rng);
        let model = ChoiceModel::new(&spec, &beta, None, x.len()).unwrap();
        let base = model.probabilities(&x).unwrap();
        let moved = model.probabilities(&perturb(&x, Attribute::Profit, Mode::Bus, pct).unwrap()).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            let total: f64 = a.iter().zip(b).map(|(p, q)| q - p).sum();
            prop_assert!(total.abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn probabilities_invariant_to_joint_rescaling(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let spec = ModelSpec::profit_time();
        let x = random_design(5, &mut rng);
        let beta = random_parameters(&spec, 2.0, &mut rng);
        let shrunk = ParameterVector::new(beta.names().to_vec(), beta.values().iter().map(|v| v / c).collect()).unwrap();
        let scaled: Vec<ChoiceBlock> = x
            .blocks()
            .iter()
            .map(|b| {
                let mut b = b.clone();
                b.values.iter_mut().flatten().for_each(|v| *v *= c);
                b
            })
            .collect();
        let y = DesignMatrix::from_blocks(scaled, ScalingConfig::default()).unwrap();
        for (a, b) in x.blocks().iter().zip(y.blocks()) {
            let p = choice_probabilities(&utilities(a, &beta, &spec).unwrap()).unwrap();
            let q = choice_probabilities(&utilities(b, &shrunk, &spec).unwrap()).unwrap();
            for ((_, u), (_, v)) in p.iter().zip(&q) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn zero_perturbation_is_identity() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let x = random_design(10, &mut rng);
    assert_eq!(
        perturb(&x, Attribute::DetourCost, Mode::Bus, 0.0).unwrap(),
        x
    );
    let spec = ModelSpec::cost_time();
    let beta = random_parameters(&spec, 1.0, &mut rng);
    let model = ChoiceModel::new(&spec, &beta, None, x.len()).unwrap();
    assert_eq!(
        mpe(
            &x,
            &model,
            Attribute::DetourTime,
            Mode::Car,
            0.0,
            Averaging::AvailableOnly
        )
        .unwrap(),
        0.0
    );
}

#[test]
fn rescaling_time_rescales_only_time_coefficients() {
    let (mut spec, truth) = car_time_mixture_spec();
    spec.mixing.clear();
    spec.fixed.clear();
    spec.terms.retain(|t| t.coefficient != "DT_WALKING");
    let mut cfg = SyntheticConfig::new(spec.clone(), truth, 1000, 4);
    cfg.exact_car_count = true;
    let d = generate(&cfg).unwrap().dataset;
    let net = NetworkParams::default();
    let fit = |time_divisor: f64| {
        let s = ScalingConfig {
            detour_time_divisor: time_divisor,
            ..Default::default()
        };
        let x = build_design_matrix(&d, &net, &s, &spec).unwrap();
        estimate(&x, &spec, &OptimizerOptions::default()).unwrap()
    };
    let a = fit(10.0);
    let b = fit(20.0);
    assert_eq!(a.hessian_rank, a.n_parameters);
    assert!((a.ll_final - b.ll_final).abs() < 1e-6);
    for ((name, u), v) in a.parameters.iter().zip(b.parameters.values()) {
        let expected = if name.starts_with("DT_") { 2.0 * u } else { u };
        assert!(
            (v - expected).abs() < 1e-4 * expected.abs().max(1.0),
            "{name}: {v} vs {expected}"
        );
    }
}

#[test]
fn dataset_csv_round_trip_is_exact() {
    let (d, _, _) = synthetic("profit-time", 60, 8);
    let mut bytes = Vec::new();
    write_dataset(&d, &mut bytes).unwrap();
    let back = read_dataset(bytes.as_slice()).unwrap();
    assert_eq!(back.observations(), d.observations());
}

#[test]
fn mpe_rows_follow_preset_structure() {
    let (d, spec, truth) = synthetic("profit-time", 249, 2);
    let x = design(&d, &spec);
    let model = ChoiceModel::new(&spec, &truth, None, x.len()).unwrap();
    let t = mpe_table(
        &x,
        &model,
        &[Attribute::Profit, Attribute::DetourTime],
        &DEFAULT_LEVELS,
        Averaging::AvailableOnly,
    )
    .unwrap();
    assert_eq!(t.rows.len(), 12);
    let empty = mpe_table(&x, &model, &[], &DEFAULT_LEVELS, Averaging::AvailableOnly).unwrap();
    assert!(empty.rows.is_empty());
}

#[test]
fn car_mpe_depends_on_averaging_rule() {
    let (d, spec, truth) = synthetic("cost-time", 249, 3);
    let x = design(&d, &spec);
    let model = ChoiceModel::new(&spec, &truth, None, x.len()).unwrap();
    let only = mpe(
        &x,
        &model,
        Attribute::DetourCost,
        Mode::Car,
        10.0,
        Averaging::AvailableOnly,
    )
    .unwrap();
    let all = mpe(
        &x,
        &model,
        Attribute::DetourCost,
        Mode::Car,
        10.0,
        Averaging::AllObservations,
    )
    .unwrap();
    assert!(
        (all - only * 166.0 / 249.0).abs() < 1e-12,
        "{all} vs {only}"
    );
}
