//! Multinomial logit: utilities, probabilities, log-likelihood with
//! analytic gradient, and maximum-likelihood estimation.

use crate::error::{Error, Result};
use crate::mode::{Mode, N_MODES};
use crate::model::{estimate_with, logit_into, CompiledSpec, EstimationResult, Likelihood};
use crate::optim::OptimizerOptions;
use crate::spec::{ModelSpec, ParameterVector};
use crate::synthesis::{ChoiceBlock, DesignMatrix};

/// Deterministic utility of every available mode.
pub fn utilities(
    block: &ChoiceBlock,
    beta: &ParameterVector,
    spec: &ModelSpec,
) -> Result<Vec<(Mode, f64)>> {
    let compiled = CompiledSpec::new(spec)?;
    let theta = beta.aligned_to(spec)?;
    let mut v = [0.0; N_MODES];
    compiled.utilities(block, &theta, &mut v);
    Ok(Mode::ALL
        .iter()
        .filter(|m| block.available.get(**m))
        .map(|&m| (m, v[m.index()]))
        .collect())
}

/// Logit probabilities over the given utilities.
pub fn choice_probabilities(v: &[(Mode, f64)]) -> Result<Vec<(Mode, f64)>> {
    if v.len() < 2 {
        return Err(Error::DegenerateChoiceSet(v.len()));
    }
    if let Some((m, x)) = v.iter().find(|(_, x)| !x.is_finite()) {
        return Err(Error::Argument(format!("utility of {m} is {x}")));
    }
    let max = v.iter().map(|(_, x)| *x).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|(_, x)| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(v.iter()
        .zip(exps)
        .map(|((m, _), e)| (*m, e / sum))
        .collect())
}

pub(crate) struct LogitLikelihood<'a> {
    pub spec: CompiledSpec,
    pub x: &'a DesignMatrix,
}

impl<'a> LogitLikelihood<'a> {
    pub fn new(x: &'a DesignMatrix, spec: &ModelSpec) -> Result<Self> {
        Ok(LogitLikelihood {
            spec: CompiledSpec::new(spec)?,
            x,
        })
    }

    pub fn probabilities(&self, q: usize, theta: &[f64]) -> [f64; N_MODES] {
        let block = &self.x.blocks()[q];
        let mut v = [0.0; N_MODES];
        let mut p = [0.0; N_MODES];
        self.spec.utilities(block, theta, &mut v);
        logit_into(&v, &block.available.0, &mut p);
        p
    }
}

impl Likelihood for LogitLikelihood<'_> {
    fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    fn n_obs(&self) -> usize {
        self.x.len()
    }

    fn observation(&self, q: usize, theta: &[f64]) -> (f64, Vec<f64>) {
        let block = &self.x.blocks()[q];
        let mut v = [0.0; N_MODES];
        self.spec.utilities(block, theta, &mut v);
        let avail = &block.available.0;
        let max = (0..N_MODES)
            .filter(|&i| avail[i])
            .map(|i| v[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut p = [0.0; N_MODES];
        let mut sum = 0.0;
        for i in 0..N_MODES {
            if avail[i] {
                p[i] = (v[i] - max).exp();
                sum += p[i];
            }
        }
        let c = block.chosen.index();
        let ll = v[c] - max - sum.ln();
        let mut grad = vec![0.0; self.n_params()];
        for m in Mode::ALL {
            let i = m.index();
            if !avail[i] {
                continue;
            }
            let w = if i == c { 1.0 } else { 0.0 } - p[i] / sum;
            for &(k, a) in &self.spec.linear[i] {
                grad[k] += w * block.values[i][a.index()];
            }
        }
        (ll, grad)
    }
}

/// Sample log-likelihood and its gradient in the spec's free-parameter order.
pub fn log_likelihood(
    x: &DesignMatrix,
    beta: &ParameterVector,
    spec: &ModelSpec,
) -> Result<(f64, ParameterVector)> {
    x.check_finite()?;
    let model = LogitLikelihood::new(x, spec)?;
    let theta = beta.aligned_to(spec)?;
    let (ll, g) = model.value_grad(&theta);
    Ok((ll, ParameterVector::new(model.spec.names.clone(), g)?))
}

/// Log-likelihood at zero coefficients: equal shares over each choice set.
pub fn null_log_likelihood(x: &DesignMatrix) -> f64 {
    x.blocks()
        .iter()
        .map(|b| -(b.n_available() as f64).ln())
        .sum()
}

/// Maximum-likelihood fit from zero coefficients with robust covariance.
pub fn estimate(
    x: &DesignMatrix,
    spec: &ModelSpec,
    opts: &OptimizerOptions,
) -> Result<EstimationResult> {
    if spec.is_mixed() {
        return Err(Error::Specification(
            "spec has mixing terms; use the mixed-logit estimator".into(),
        ));
    }
    x.check_finite()?;
    let model = LogitLikelihood::new(x, spec)?;
    model.spec.check_coverage(x)?;
    let start = vec![0.0; model.n_params()];
    // Equal shares even when the spec fixes some coefficients.
    let ll_null = null_log_likelihood(x);
    let names = model.spec.names.clone();
    estimate_with(&model, names, &spec.name, start, ll_null, opts, None)
}
