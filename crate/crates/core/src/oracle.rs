//! Independent checks for the estimators: a synthetic data generator, an
//! exhaustive-grid maximum-likelihood search, and Gauss–Hermite evaluation
//! of mixed-logit probabilities.
//!
//! Choice probabilities here are computed by a separate straight-line
//! routine that shares no code with `mnl`, `mixed`, or `model`.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{
    AgeBand, Dataset, Frequency, Gender, NetworkParams, Observation, ScalingConfig, TripChain,
    WAGE_BANDS,
};
use crate::error::{Error, Result};
use crate::mode::{Mode, ModeMap, N_MODES};
use crate::spec::{ModelSpec, ParameterVector};
use crate::synthesis::{detour_distance, scale_block, ChoiceBlock, DesignMatrix, DetourAttributes};

/// Survey answer options for acceptable detour time, minutes.
pub const DETOUR_OPTIONS_MIN: [f64; 4] = [15.0, 30.0, 45.0, 60.0];
/// Survey answer options for minimum remuneration, UAH.
pub const REMUNERATION_OPTIONS_UAH: [f64; 6] = [50.0, 60.0, 75.0, 90.0, 100.0, 120.0];

const GENDER_COUNTS: [u32; 2] = [121, 128];
const AGE_COUNTS: [u32; 4] = [81, 58, 62, 48];
const WAGE_COUNTS: [u32; 7] = [28, 83, 80, 30, 6, 9, 13];
/// H-W, W-H, W-G, H-H counts by gender (female, male).
const TRIP_CHAIN_COUNTS: [[u32; 4]; 2] = [[20, 47, 30, 24], [12, 47, 20, 49]];
/// Frequency counts by gender (female, male).
const FREQUENCY_COUNTS: [[u32; 6]; 2] = [[6, 33, 25, 15, 22, 20], [5, 25, 40, 16, 21, 21]];

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Coefficient values; mixing standard deviations may be included.
    pub true_parameters: ParameterVector,
    pub spec: ModelSpec,
    pub n_obs: usize,
    pub car_ownership_rate: f64,
    /// Assign car availability to exactly `round(rate · n)` households
    /// instead of independent Bernoulli draws.
    pub exact_car_count: bool,
    pub network: NetworkParams,
    pub scaling: ScalingConfig,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(spec: ModelSpec, true_parameters: ParameterVector, n_obs: usize, seed: u64) -> Self {
        SyntheticConfig {
            true_parameters,
            spec,
            n_obs,
            car_ownership_rate: 166.0 / 249.0,
            exact_car_count: false,
            network: NetworkParams::default(),
            scaling: ScalingConfig::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub dataset: Dataset,
    pub chosen_counts: [usize; N_MODES],
    pub car_available: usize,
    /// Mean true choice probability per mode across generated rows.
    pub expected_shares: [f64; N_MODES],
}

/// Straight-line logit probabilities for one observation with explicit
/// coefficient values by name. Unavailable modes get probability zero.
pub fn reference_probabilities(
    block: &ChoiceBlock,
    spec: &ModelSpec,
    coefficients: &HashMap<String, f64>,
) -> Result<[f64; N_MODES]> {
    let mut v = [0.0; N_MODES];
    for t in &spec.terms {
        let beta = match spec.fixed.get(&t.coefficient) {
            Some(b) => *b,
            None => *coefficients
                .get(&t.coefficient)
                .ok_or_else(|| Error::Specification(format!("no value for `{}`", t.coefficient)))?,
        };
        for m in &t.modes {
            v[m.index()] += beta * block.values[m.index()][t.attribute.index()];
        }
    }
    let top = (0..N_MODES)
        .filter(|&i| block.available.0[i])
        .map(|i| v[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; N_MODES];
    let mut total = 0.0;
    for i in 0..N_MODES {
        if block.available.0[i] {
            p[i] = (v[i] - top).exp();
            total += p[i];
        }
    }
    for x in &mut p {
        *x /= total;
    }
    Ok(p)
}

fn coefficient_map(p: &ParameterVector) -> HashMap<String, f64> {
    p.iter().map(|(n, v)| (n.to_string(), v)).collect()
}

fn weighted(counts: &[u32]) -> WeightedIndex<u32> {
    WeightedIndex::new(counts).expect("positive weights")
}

/// Draws a synthetic survey from the true model.
///
/// Each row anchors a detour on a uniformly chosen available mode and
/// survey detour option, fans the implied distance out to all modes, and
/// draws the chosen mode from the true probabilities. The stored stated
/// detour is the chosen mode's reconstructed time, so reloading the row
/// reproduces the same attributes.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticSample> {
    cfg.spec.validate()?;
    cfg.network.validate()?;
    cfg.scaling.validate()?;
    if cfg.n_obs == 0 {
        return Err(Error::Argument("n_obs must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.car_ownership_rate) {
        return Err(Error::Argument(
            "car ownership rate must lie in [0, 1]".into(),
        ));
    }
    let mut coefficients = coefficient_map(&cfg.true_parameters);
    for name in cfg.spec.free_parameters() {
        let is_sigma = cfg.spec.mixing.iter().any(|m| m.sigma == name);
        if let std::collections::hash_map::Entry::Vacant(slot) = coefficients.entry(name) {
            if is_sigma {
                slot.insert(0.0);
            } else {
                let name = slot.key();
                return Err(Error::Specification(format!(
                    "true value missing for `{name}`"
                )));
            }
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let cars: Vec<bool> = if cfg.exact_car_count {
        let k = (cfg.car_ownership_rate * cfg.n_obs as f64).round() as usize;
        let mut v: Vec<bool> = (0..cfg.n_obs).map(|i| i < k).collect();
        v.shuffle(&mut rng);
        v
    } else {
        (0..cfg.n_obs)
            .map(|_| rng.random_bool(cfg.car_ownership_rate))
            .collect()
    };

    let genders = weighted(&GENDER_COUNTS);
    let ages = weighted(&AGE_COUNTS);
    let wages = weighted(&WAGE_COUNTS);
    let chains = [
        weighted(&TRIP_CHAIN_COUNTS[0]),
        weighted(&TRIP_CHAIN_COUNTS[1]),
    ];
    let freqs = [
        weighted(&FREQUENCY_COUNTS[0]),
        weighted(&FREQUENCY_COUNTS[1]),
    ];
    let width = cfg.n_obs.to_string().len();

    let mut observations = Vec::with_capacity(cfg.n_obs);
    let mut chosen_counts = [0usize; N_MODES];
    let mut expected = [0.0; N_MODES];
    for (q, &car_available) in cars.iter().enumerate() {
        let g = genders.sample(&mut rng);
        let gender = Gender::ALL[g];
        let age_band = AgeBand::ALL[ages.sample(&mut rng)];
        let income_uah = WAGE_BANDS[wages.sample(&mut rng)].1;
        let trip_chain = TripChain::ALL[chains[g].sample(&mut rng)];
        let frequency = Frequency::ALL[freqs[g].sample(&mut rng)];
        let remuneration_uah =
            REMUNERATION_OPTIONS_UAH[rng.random_range(0..REMUNERATION_OPTIONS_UAH.len())];

        let available = ModeMap::from_fn(|m| m != Mode::Car || car_available);
        let candidates: Vec<Mode> = Mode::ALL
            .iter()
            .copied()
            .filter(|m| available.get(*m))
            .collect();
        let anchor = candidates[rng.random_range(0..candidates.len())];
        let anchor_min = DETOUR_OPTIONS_MIN[rng.random_range(0..DETOUR_OPTIONS_MIN.len())];
        let distance = detour_distance(anchor, anchor_min, &cfg.network)?;
        let attrs = DetourAttributes::from_distance(
            distance,
            anchor,
            anchor_min,
            remuneration_uah,
            &cfg.network,
        );

        let mut obs = Observation {
            id: format!("s{:0width$}", q + 1),
            gender,
            age_band,
            income_uah,
            car_available,
            chosen_mode: anchor,
            stated_detour_min: anchor_min,
            remuneration_uah,
            trip_chain,
            frequency,
        };
        let block = scale_block(&obs, &attrs, available, &cfg.scaling);

        let mut individual = coefficients.clone();
        for mix in &cfg.spec.mixing {
            let z: f64 = StandardNormal.sample(&mut rng);
            let sigma = coefficients[&mix.sigma];
            *individual.get_mut(&mix.coefficient).unwrap() += sigma * z;
        }
        let p = reference_probabilities(&block, &cfg.spec, &individual)?;
        let pick = WeightedIndex::new(p).map_err(|e| Error::Argument(e.to_string()))?;
        let chosen = Mode::ALL[pick.sample(&mut rng)];

        obs.chosen_mode = chosen;
        obs.stated_detour_min = attrs.detour_time_min.get(chosen);
        chosen_counts[chosen.index()] += 1;
        for i in 0..N_MODES {
            expected[i] += p[i] / cfg.n_obs as f64;
        }
        observations.push(obs);
    }
    let dataset = Dataset::new(observations)?;
    let car_available = cars.iter().filter(|c| **c).count();
    Ok(SyntheticSample {
        dataset,
        chosen_counts,
        car_available,
        expected_shares: expected,
    })
}

/// Search range for one free parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub parameters: ParameterVector,
    pub log_likelihood: f64,
    /// The optimum of the coarsest pass sat on the range boundary.
    pub on_boundary: bool,
}

fn reference_log_likelihood(
    x: &DesignMatrix,
    spec: &ModelSpec,
    coefficients: &HashMap<String, f64>,
) -> Result<f64> {
    let mut ll = 0.0;
    for b in x.blocks() {
        let p = reference_probabilities(b, spec, coefficients)?;
        ll += p[b.chosen.index()].ln();
    }
    Ok(ll)
}

/// Exhaustive coarse-to-fine grid maximization for specs with at most two
/// free parameters. Each pass evaluates every point of a regular grid;
/// the next pass narrows to ±2 cells around the best point at 1/15 the
/// spacing, until the spacing drops below `resolution`.
pub fn grid_mle(
    x: &DesignMatrix,
    spec: &ModelSpec,
    axes: &[GridAxis],
    resolution: f64,
) -> Result<GridResult> {
    let names = spec.free_parameters();
    if names.is_empty() || names.len() > 2 || spec.is_mixed() {
        return Err(Error::Specification(format!(
            "grid search needs 1 or 2 free logit parameters, spec has {}",
            names.len()
        )));
    }
    if axes.len() != names.len() {
        return Err(Error::Argument(format!(
            "{} axes for {} parameters",
            axes.len(),
            names.len()
        )));
    }
    const POINTS: usize = 60;
    let mut lo: Vec<f64> = axes.iter().map(|a| a.lower).collect();
    let mut hi: Vec<f64> = axes.iter().map(|a| a.upper).collect();
    let mut on_boundary = false;
    let mut first = true;
    let mut coeffs: HashMap<String, f64> = HashMap::new();
    loop {
        let step: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) / POINTS as f64)
            .collect();
        let mut best = (
            f64::NEG_INFINITY,
            vec![0.0; names.len()],
            vec![0usize; names.len()],
        );
        let grid: Vec<Vec<usize>> = if names.len() == 1 {
            (0..=POINTS).map(|i| vec![i]).collect()
        } else {
            (0..=POINTS)
                .flat_map(|i| (0..=POINTS).map(move |j| vec![i, j]))
                .collect()
        };
        for idx in grid {
            let point: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(d, &i)| lo[d] + step[d] * i as f64)
                .collect();
            for (n, v) in names.iter().zip(&point) {
                coeffs.insert(n.clone(), *v);
            }
            let ll = reference_log_likelihood(x, spec, &coeffs)?;
            if ll > best.0 {
                best = (ll, point, idx);
            }
        }
        if first {
            on_boundary = best.2.iter().any(|&i| i == 0 || i == POINTS);
            if on_boundary {
                log::warn!("grid optimum on the search boundary; widen the ranges");
            }
            first = false;
        }
        if step.iter().all(|s| *s <= resolution) {
            return Ok(GridResult {
                parameters: ParameterVector::new(names, best.1)?,
                log_likelihood: best.0,
                on_boundary,
            });
        }
        for d in 0..names.len() {
            lo[d] = best.1[d] - 2.0 * step[d];
            hi[d] = best.1[d] + 2.0 * step[d];
        }
    }
}

/// Gauss–Hermite nodes and weights for `∫ exp(−x²) f(x) dx`, from the
/// eigen-decomposition of the Hermite Jacobi matrix (Golub–Welsch).
/// Nodes come back in ascending order.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::Argument("quadrature needs at least one node".into()));
    }
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], sqrt_pi * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Mixed-logit probabilities of one observation with exactly one normally
/// distributed coefficient, integrated by `nodes`-point Gauss–Hermite.
pub fn quadrature_mixed_probability(
    block: &ChoiceBlock,
    spec: &ModelSpec,
    parameters: &ParameterVector,
    nodes: usize,
) -> Result<[f64; N_MODES]> {
    if spec.mixing.len() != 1 {
        return Err(Error::Specification(format!(
            "quadrature oracle needs exactly one mixed coefficient, spec has {}",
            spec.mixing.len()
        )));
    }
    let (xs, ws) = gauss_hermite(nodes)?;
    let mix = &spec.mixing[0];
    let mut coeffs = coefficient_map(parameters);
    let mean = *coeffs
        .get(&mix.coefficient)
        .ok_or_else(|| Error::Specification(format!("no value for `{}`", mix.coefficient)))?;
    let sigma = coeffs.get(&mix.sigma).copied().unwrap_or(0.0);
    let mut out = [0.0; N_MODES];
    let norm = std::f64::consts::PI.sqrt();
    for (x, w) in xs.iter().zip(&ws) {
        coeffs.insert(
            mix.coefficient.clone(),
            mean + sigma * std::f64::consts::SQRT_2 * x,
        );
        let p = reference_probabilities(block, spec, &coeffs)?;
        for i in 0..N_MODES {
            out[i] += w / norm * p[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_weights_integrate_polynomials() {
        let (x, w) = gauss_hermite(64).unwrap();
        let pi_sqrt = std::f64::consts::PI.sqrt();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - pi_sqrt).abs() < 1e-12, "{m0}");
        assert!((m2 - pi_sqrt / 2.0).abs() < 1e-12, "{m2}");
        assert!((m4 - 0.75 * pi_sqrt).abs() < 1e-11, "{m4}");
        let (x1, w1) = gauss_hermite(1).unwrap();
        assert_eq!(x1, vec![0.0]);
        assert!((w1[0] - pi_sqrt).abs() < 1e-12);
        assert!(gauss_hermite(0).is_err());
    }

    #[test]
    fn hermite_nodes_are_symmetric_and_sorted() {
        let (x, _) = gauss_hermite(9).unwrap();
        for i in 0..9 {
            assert!((x[i] + x[8 - i]).abs() < 1e-13);
        }
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        assert!(x[4].abs() < 1e-13);
    }

    #[test]
    fn hermite_rule_stays_accurate_for_many_nodes() {
        let (x, w) = gauss_hermite(300).unwrap();
        let pi_sqrt = std::f64::consts::PI.sqrt();
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m0 - pi_sqrt).abs() < 1e-12, "{m0}");
        assert!((m2 - pi_sqrt / 2.0).abs() < 1e-12, "{m2}");
        assert!(x.windows(2).all(|p| p[1] - p[0] > 1e-3));
    }
}
