//! Mixed logit by maximum simulated likelihood with independent normal
//! coefficients.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mnl;
use crate::mode::{Mode, N_MODES};
use crate::model::{estimate_with, logit_into, CompiledSpec, EstimationResult, Likelihood};
use crate::optim::OptimizerOptions;
use crate::spec::{ModelSpec, ParameterVector};
use crate::synthesis::{ChoiceBlock, DesignMatrix};

pub const MAX_HALTON_DIMS: usize = 64;
/// Leading Halton points discarded in every dimension.
pub const HALTON_SKIP: u64 = 10;
const SIGMA_START: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawType {
    Halton,
    PseudoRandom,
}

impl fmt::Display for DrawType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DrawType::Halton => "halton",
            DrawType::PseudoRandom => "random",
        })
    }
}

impl FromStr for DrawType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halton" => Ok(DrawType::Halton),
            "random" | "pseudo_random" => Ok(DrawType::PseudoRandom),
            other => Err(Error::Argument(format!("unknown draw type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationOptions {
    pub draws: usize,
    pub draw_type: DrawType,
    pub seed: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            draws: 100,
            draw_type: DrawType::Halton,
            seed: 1,
        }
    }
}

/// First `n` primes.
pub fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out
            .iter()
            .take_while(|&&p| p * p <= c)
            .all(|&p| !c.is_multiple_of(p))
        {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Radical inverse of `index` in `base`: the `index`-th Halton point.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Standard normal draws laid out as `[observation][draw][dimension]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    n_obs: usize,
    n_draws: usize,
    n_dims: usize,
    values: Vec<f64>,
}

impl Draws {
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn get(&self, q: usize, r: usize, dim: usize) -> f64 {
        self.values[(q * self.n_draws + r) * self.n_dims + dim]
    }

    /// All draws of observation `q`, `n_draws × n_dims` row-major.
    /// Standard-normal vector of draw `r` for observation `q`.
    pub fn draw(&self, q: usize, r: usize) -> &[f64] {
        let start = (q * self.n_draws + r) * self.n_dims;
        &self.values[start..start + self.n_dims]
    }

    pub fn observation(&self, q: usize) -> &[f64] {
        let w = self.n_draws * self.n_dims;
        &self.values[q * w..(q + 1) * w]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Generates draws. Halton dimension `i` uses the `i`-th prime; observation
/// `q` takes consecutive points `q·R .. (q+1)·R` after the skipped prefix.
/// Halton draws do not depend on `seed`.
pub fn make_draws(
    n_obs: usize,
    n_draws: usize,
    n_dims: usize,
    draw_type: DrawType,
    seed: u64,
) -> Result<Draws> {
    if n_obs == 0 || n_draws == 0 {
        return Err(Error::Argument(format!(
            "draw tensor needs positive sizes, got {n_obs} observations × {n_draws} draws"
        )));
    }
    if n_dims > MAX_HALTON_DIMS {
        return Err(Error::DrawDimensions {
            requested: n_dims,
            available: MAX_HALTON_DIMS,
        });
    }
    let total = n_obs * n_draws;
    let mut values = vec![0.0; total * n_dims];
    match draw_type {
        DrawType::Halton => {
            let normal = Normal::standard();
            for (d, base) in primes(n_dims).into_iter().enumerate() {
                for i in 0..total {
                    let u = halton(HALTON_SKIP + 1 + i as u64, base);
                    values[i * n_dims + d] = normal.inverse_cdf(u);
                }
            }
        }
        DrawType::PseudoRandom => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for v in values.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        }
    }
    Ok(Draws {
        n_obs,
        n_draws,
        n_dims,
        values,
    })
}

pub(crate) struct MixedLikelihood<'a> {
    pub spec: CompiledSpec,
    pub x: &'a DesignMatrix,
    pub draws: &'a Draws,
}

impl<'a> MixedLikelihood<'a> {
    pub fn new(x: &'a DesignMatrix, spec: &ModelSpec, draws: &'a Draws) -> Result<Self> {
        let spec = CompiledSpec::new(spec)?;
        if draws.n_obs() != x.len() {
            return Err(Error::Argument(format!(
                "draws cover {} observations, data has {}",
                draws.n_obs(),
                x.len()
            )));
        }
        if draws.n_dims() < spec.mixing.len() {
            return Err(Error::Argument(format!(
                "draws have {} dimensions, spec mixes {} coefficients",
                draws.n_dims(),
                spec.mixing.len()
            )));
        }
        Ok(MixedLikelihood { spec, x, draws })
    }

    /// Utilities of draw `r`.
    fn draw_utilities(
        &self,
        block: &ChoiceBlock,
        base: &[f64; N_MODES],
        theta: &[f64],
        xi: &[f64],
    ) -> [f64; N_MODES] {
        let mut v = *base;
        for (d, dim) in self.spec.mixing.iter().enumerate() {
            let shock = theta[dim.sigma] * xi[d];
            for &(m, a) in &dim.cells {
                v[m.index()] += shock * block.value(m, a);
            }
        }
        v
    }

    pub fn probabilities(&self, q: usize, theta: &[f64]) -> [f64; N_MODES] {
        let block = &self.x.blocks()[q];
        let mut base = [0.0; N_MODES];
        self.spec.utilities(block, theta, &mut base);
        let mut acc = [0.0; N_MODES];
        let mut p = [0.0; N_MODES];
        for r in 0..self.draws.n_draws() {
            let xi = self.draws.draw(q, r);
            let v = self.draw_utilities(block, &base, theta, xi);
            logit_into(&v, &block.available.0, &mut p);
            for i in 0..N_MODES {
                acc[i] += p[i];
            }
        }
        let r = self.draws.n_draws() as f64;
        acc.map(|a| a / r)
    }
}

impl Likelihood for MixedLikelihood<'_> {
    fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    fn n_obs(&self) -> usize {
        self.x.len()
    }

    fn observation(&self, q: usize, theta: &[f64]) -> (f64, Vec<f64>) {
        let block = &self.x.blocks()[q];
        let avail = &block.available.0;
        let c = block.chosen.index();
        let mut base = [0.0; N_MODES];
        self.spec.utilities(block, theta, &mut base);
        let np = self.n_params();
        let mut p_sum = 0.0;
        let mut dp = vec![0.0; np];
        let mut p = [0.0; N_MODES];
        for r in 0..self.draws.n_draws() {
            let xi = self.draws.draw(q, r);
            let v = self.draw_utilities(block, &base, theta, xi);
            logit_into(&v, avail, &mut p);
            let pc = p[c];
            p_sum += pc;
            // d p_c / d theta = p_c (dV_c - sum_m p_m dV_m)
            for m in Mode::ALL {
                let i = m.index();
                if !avail[i] {
                    continue;
                }
                let w = pc * (if i == c { 1.0 } else { 0.0 } - p[i]);
                if w == 0.0 {
                    continue;
                }
                let row = &block.values[i];
                for &(k, a) in &self.spec.linear[i] {
                    dp[k] += w * row[a.index()];
                }
                for (d, dim) in self.spec.mixing.iter().enumerate() {
                    for &(cm, a) in &dim.cells {
                        if cm == m {
                            dp[dim.sigma] += w * xi[d] * row[a.index()];
                        }
                    }
                }
            }
        }
        let r = self.draws.n_draws() as f64;
        let prob = p_sum / r;
        let grad = dp.into_iter().map(|g| g / r / prob).collect();
        (prob.ln(), grad)
    }
}

/// Simulated choice probabilities of observation `q` over available modes.
pub fn simulated_probability(
    x: &DesignMatrix,
    q: usize,
    beta: &ParameterVector,
    spec: &ModelSpec,
    draws: &Draws,
) -> Result<Vec<(Mode, f64)>> {
    if draws.n_draws() == 0 {
        return Err(Error::Argument("zero draws".into()));
    }
    let model = MixedLikelihood::new(x, spec, draws)?;
    let theta = beta.aligned_to(spec)?;
    let p = model.probabilities(q, &theta);
    let block = &x.blocks()[q];
    Ok(Mode::ALL
        .iter()
        .filter(|m| block.available.get(**m))
        .map(|&m| (m, p[m.index()]))
        .collect())
}

/// Simulated log-likelihood and gradient.
pub fn simulated_log_likelihood(
    x: &DesignMatrix,
    beta: &ParameterVector,
    spec: &ModelSpec,
    draws: &Draws,
) -> Result<(f64, ParameterVector)> {
    let model = MixedLikelihood::new(x, spec, draws)?;
    let theta = beta.aligned_to(spec)?;
    let (ll, g) = model.value_grad(&theta);
    Ok((ll, ParameterVector::new(model.spec.names.clone(), g)?))
}

/// Maximum simulated likelihood. Starts from the logit solution of the
/// spec without mixing, with every standard deviation at 0.1. Draws are
/// generated once and held fixed across iterations.
pub fn estimate_mixed(
    x: &DesignMatrix,
    spec: &ModelSpec,
    opts: &OptimizerOptions,
    sim: &SimulationOptions,
) -> Result<EstimationResult> {
    x.check_finite()?;
    let draws = make_draws(
        x.len(),
        sim.draws,
        spec.mixing.len(),
        sim.draw_type,
        sim.seed,
    )?;
    let model = MixedLikelihood::new(x, spec, &draws)?;
    model.spec.check_coverage(x)?;

    let base_fit = mnl::estimate(x, &spec.clone().without_mixing(), opts)?;
    let mut start = base_fit.parameters.aligned_to(spec)?;
    for dim in &model.spec.mixing {
        start[dim.sigma] = SIGMA_START;
    }
    let ll_null = mnl::null_log_likelihood(x);
    let names = model.spec.names.clone();
    let mut result = estimate_with(
        &model,
        names,
        &spec.name,
        start,
        ll_null,
        opts,
        Some(sim.draws),
    )?;
    if !spec.is_mixed() {
        result.draws = None;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((halton(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_normal_of_half() {
        assert_eq!(Normal::standard().inverse_cdf(0.5), 0.0);
    }

    #[test]
    fn first_primes() {
        assert_eq!(primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
        assert_eq!(primes(64).last(), Some(&311));
    }

    #[test]
    fn halton_normal_mean_is_small() {
        let d = make_draws(100, 100, 3, DrawType::Halton, 0).unwrap();
        for dim in 0..3 {
            let mean: f64 = (0..100)
                .flat_map(|q| (0..100).map(move |r| (q, r)))
                .map(|(q, r)| d.get(q, r, dim))
                .sum::<f64>()
                / 10_000.0;
            assert!(mean.abs() < 0.01, "dim {dim}: {mean}");
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let a = make_draws(5, 7, 2, DrawType::PseudoRandom, 42).unwrap();
        let b = make_draws(5, 7, 2, DrawType::PseudoRandom, 42).unwrap();
        let c = make_draws(5, 7, 2, DrawType::PseudoRandom, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let h = make_draws(5, 7, 2, DrawType::Halton, 1).unwrap();
        assert_eq!(h, make_draws(5, 7, 2, DrawType::Halton, 99).unwrap());
    }

    #[test]
    fn draw_size_errors() {
        assert!(matches!(
            make_draws(2, 2, 65, DrawType::Halton, 0),
            Err(Error::DrawDimensions {
                requested: 65,
                available: 64
            })
        ));
        assert!(make_draws(2, 0, 1, DrawType::Halton, 0).is_err());
        assert!(make_draws(2, 2, 64, DrawType::Halton, 0).is_ok());
    }

    #[test]
    fn draw_type_parses() {
        assert_eq!("halton".parse::<DrawType>().unwrap(), DrawType::Halton);
        assert_eq!(
            "random".parse::<DrawType>().unwrap(),
            DrawType::PseudoRandom
        );
        assert!("sobol".parse::<DrawType>().is_err());
    }
}
