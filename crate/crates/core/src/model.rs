//! Spec compilation, the likelihood interface shared by the logit and
//! mixed-logit engines, and the estimation driver.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mode::{Mode, N_MODES};
use crate::optim::{max_norm, minimize, OptimizerOptions};
use crate::spec::{ModelSpec, ParameterVector};
use crate::synthesis::{Attribute, ChoiceBlock, DesignMatrix};

/// Coefficient magnitude (scaled space) treated as a sign of separation.
pub const SEPARATION_BOUND: f64 = 50.0;

/// One random coefficient: `mean + sigma * draw`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MixDim {
    pub mean: usize,
    pub sigma: usize,
    pub cells: Vec<(Mode, Attribute)>,
}

/// A spec resolved into parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CompiledSpec {
    pub names: Vec<String>,
    /// Per mode: `(parameter slot, attribute)` pairs.
    pub linear: [Vec<(usize, Attribute)>; N_MODES],
    /// Per mode: `(fixed value, attribute)` pairs.
    pub fixed: [Vec<(f64, Attribute)>; N_MODES],
    pub mixing: Vec<MixDim>,
}

impl CompiledSpec {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let names = spec.free_parameters();
        let slot = |n: &str| names.iter().position(|x| x == n);
        let mut linear: [Vec<(usize, Attribute)>; N_MODES] = Default::default();
        let mut fixed: [Vec<(f64, Attribute)>; N_MODES] = Default::default();
        for t in &spec.terms {
            for &m in &t.modes {
                match spec.fixed.get(&t.coefficient) {
                    Some(&v) => fixed[m.index()].push((v, t.attribute)),
                    None => linear[m.index()].push((slot(&t.coefficient).unwrap(), t.attribute)),
                }
            }
        }
        let mixing = spec
            .mixing
            .iter()
            .map(|mix| {
                let term = spec.term(&mix.coefficient).unwrap();
                MixDim {
                    mean: slot(&mix.coefficient).unwrap(),
                    sigma: slot(&mix.sigma).unwrap(),
                    cells: term.modes.iter().map(|&m| (m, term.attribute)).collect(),
                }
            })
            .collect();
        Ok(CompiledSpec {
            names,
            linear,
            fixed,
            mixing,
        })
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    /// Deterministic utilities with mixed coefficients at their means.
    pub fn utilities(&self, block: &ChoiceBlock, beta: &[f64], out: &mut [f64; N_MODES]) {
        for m in Mode::ALL {
            let row = &block.values[m.index()];
            let mut v = 0.0;
            for &(k, a) in &self.linear[m.index()] {
                v += beta[k] * row[a.index()];
            }
            for &(c, a) in &self.fixed[m.index()] {
                v += c * row[a.index()];
            }
            out[m.index()] = v;
        }
    }

    /// Fails when some free parameter multiplies only zero or unavailable
    /// cells, which would leave it unidentified.
    pub fn check_coverage(&self, x: &DesignMatrix) -> Result<()> {
        let mut touched = vec![false; self.n_params()];
        for b in x.blocks() {
            for m in Mode::ALL.iter().filter(|m| b.available.get(**m)) {
                for &(k, a) in &self.linear[m.index()] {
                    if b.value(*m, a) != 0.0 {
                        touched[k] = true;
                    }
                }
                for d in &self.mixing {
                    if d.cells
                        .iter()
                        .any(|&(cm, a)| cm == *m && b.value(cm, a) != 0.0)
                    {
                        touched[d.sigma] = true;
                    }
                }
            }
        }
        match touched.iter().position(|t| !t) {
            Some(k) => Err(Error::Specification(format!(
                "coefficient `{}` applies only to zero or unavailable cells",
                self.names[k]
            ))),
            None => Ok(()),
        }
    }
}

/// Log-sum-exp stabilized logit probabilities over available modes.
/// Unavailable entries are set to zero.
pub(crate) fn logit_into(v: &[f64; N_MODES], available: &[bool; N_MODES], p: &mut [f64; N_MODES]) {
    let max = (0..N_MODES)
        .filter(|&i| available[i])
        .map(|i| v[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for i in 0..N_MODES {
        p[i] = if available[i] {
            (v[i] - max).exp()
        } else {
            0.0
        };
        sum += p[i];
    }
    for x in p.iter_mut() {
        *x /= sum;
    }
}

/// Sample log-likelihood with analytic gradient and per-observation scores.
pub(crate) trait Likelihood: Sync {
    fn n_params(&self) -> usize;
    fn n_obs(&self) -> usize;
    /// Log-likelihood contribution and its gradient for observation `q`.
    fn observation(&self, q: usize, theta: &[f64]) -> (f64, Vec<f64>);

    /// Sum over observations with an ordered reduction, so the result does
    /// not depend on the thread count.
    fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let parts: Vec<(f64, Vec<f64>)> = (0..self.n_obs())
            .into_par_iter()
            .map(|q| self.observation(q, theta))
            .collect();
        let mut ll = 0.0;
        let mut grad = vec![0.0; self.n_params()];
        for (l, g) in parts {
            ll += l;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        (ll, grad)
    }

    fn scores(&self, theta: &[f64]) -> Vec<Vec<f64>> {
        (0..self.n_obs())
            .into_par_iter()
            .map(|q| self.observation(q, theta).1)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub model: String,
    pub parameters: ParameterVector,
    /// Row-major `n × n` sandwich covariance.
    pub robust_covariance: Vec<f64>,
    pub robust_se: Vec<f64>,
    pub robust_t: Vec<f64>,
    pub ll_null: f64,
    pub ll_final: f64,
    pub n_parameters: usize,
    pub sample_size: usize,
    pub adjusted_rho_sq: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm_at_solution: f64,
    /// Rank of the numerical information matrix; below `n_parameters` when
    /// some combination of coefficients is not identified by the data.
    pub hessian_rank: usize,
    /// Coefficients loading on the information matrix's null space.
    pub unidentified: Vec<String>,
    pub draws: Option<usize>,
    pub warnings: Vec<String>,
}

impl EstimationResult {
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.robust_covariance[i * self.n_parameters + j]
    }

    /// Two-sided normal p-value of the robust t statistic.
    pub fn p_value(&self, i: usize) -> f64 {
        two_sided_p(self.robust_t[i])
    }
}

pub fn two_sided_p(t: f64) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { f64::NAN } else { 0.0 };
    }
    let n = Normal::standard();
    2.0 * (1.0 - n.cdf(t.abs()))
}

/// Significance marker: `***` p < 0.005, `**` p < 0.01, `*` p < 0.05.
pub fn significance_stars(t: f64) -> &'static str {
    let p = two_sided_p(t);
    if p < 0.005 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Adjusted rho-square `1 − (ll_final − k) / ll_null`.
pub fn fit_statistics(ll_null: f64, ll_final: f64, k: usize) -> Result<f64> {
    if ll_null == 0.0 || !ll_null.is_finite() {
        return Err(Error::Argument(format!(
            "null log-likelihood must be finite and non-zero, got {ll_null}"
        )));
    }
    Ok(1.0 - (ll_final - k as f64) / ll_null)
}

/// Central finite-difference Hessian of the log-likelihood from the analytic
/// gradient, symmetrized.
pub(crate) fn numerical_hessian(model: &dyn Likelihood, theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let step = 1e-5 * theta[j].abs().max(1.0);
        let mut up = theta.to_vec();
        up[j] += step;
        let mut down = theta.to_vec();
        down[j] -= step;
        let (_, gu) = model.value_grad(&up);
        let (_, gd) = model.value_grad(&down);
        for i in 0..n {
            h[(i, j)] = (gu[i] - gd[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

pub(crate) struct Sandwich {
    pub covariance: DMatrix<f64>,
    pub rank: usize,
    pub null_loadings: Vec<usize>,
}

const RANK_TOLERANCE: f64 = 1e-9;

/// `H⁻¹ B H⁻¹` with `H` the information matrix (negative Hessian) and `B`
/// the outer product of scores. A rank-deficient `H` is pseudo-inverted.
pub(crate) fn sandwich(hessian: &DMatrix<f64>, scores: &[Vec<f64>]) -> Sandwich {
    let n = hessian.nrows();
    let info = -hessian;
    let eig = SymmetricEigen::new(info);
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let tol = RANK_TOLERANCE * lmax.max(f64::MIN_POSITIVE);
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    let mut null_loadings = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        if l.abs() > tol {
            rank += 1;
            inv += (v * v.transpose()) / l;
        } else {
            for (i, x) in v.iter().enumerate() {
                if x.abs() > 0.1 && !null_loadings.contains(&i) {
                    null_loadings.push(i);
                }
            }
        }
    }
    null_loadings.sort_unstable();
    let mut meat = DMatrix::zeros(n, n);
    for s in scores {
        let v = nalgebra::DVector::from_column_slice(s);
        meat += &v * v.transpose();
    }
    let covariance = &inv * meat * &inv;
    Sandwich {
        covariance: (&covariance + covariance.transpose()) * 0.5,
        rank,
        null_loadings,
    }
}

/// Maximizes the likelihood from `start` and assembles the result.
pub(crate) fn estimate_with(
    model: &dyn Likelihood,
    names: Vec<String>,
    model_name: &str,
    start: Vec<f64>,
    ll_null: f64,
    opts: &OptimizerOptions,
    draws: Option<usize>,
) -> Result<EstimationResult> {
    let objective = |theta: &[f64]| {
        let (ll, g) = model.value_grad(theta);
        (-ll, g.into_iter().map(|x| -x).collect::<Vec<_>>())
    };
    let min = minimize(objective, start, opts);
    let theta = min.x;
    let ll_final = -min.value;
    let n = theta.len();

    let hessian = numerical_hessian(model, &theta);
    let scores = model.scores(&theta);
    let sw = sandwich(&hessian, &scores);
    let robust_se: Vec<f64> = (0..n)
        .map(|i| sw.covariance[(i, i)].max(0.0).sqrt())
        .collect();
    let robust_t: Vec<f64> = theta
        .iter()
        .zip(&robust_se)
        .map(|(b, se)| if *se > 0.0 { b / se } else { f64::NAN })
        .collect();

    let mut warnings = Vec::new();
    if !min.converged {
        warnings.push(format!(
            "optimizer did not converge after {} iterations: {}",
            min.iterations, min.message
        ));
    }
    let large: Vec<&str> = names
        .iter()
        .zip(&theta)
        .filter(|(_, b)| b.abs() > SEPARATION_BOUND)
        .map(|(n, _)| n.as_str())
        .collect();
    if !large.is_empty() {
        warnings.push(format!(
            "possible separation: |coefficient| exceeds {SEPARATION_BOUND} for {}",
            large.join(", ")
        ));
    }
    let unidentified: Vec<String> = sw.null_loadings.iter().map(|&i| names[i].clone()).collect();
    if sw.rank < n {
        warnings.push(format!(
            "information matrix has rank {} of {n}; not identified: {}",
            sw.rank,
            unidentified.join(", ")
        ));
    }
    for w in &warnings {
        log::warn!("{model_name}: {w}");
    }

    let mut covariance = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            covariance.push(sw.covariance[(i, j)]);
        }
    }
    Ok(EstimationResult {
        model: model_name.to_string(),
        parameters: ParameterVector::new(names, theta)?,
        robust_covariance: covariance,
        robust_se,
        robust_t,
        ll_null,
        ll_final,
        n_parameters: n,
        sample_size: model.n_obs(),
        adjusted_rho_sq: fit_statistics(ll_null, ll_final, n)?,
        converged: min.converged,
        iterations: min.iterations,
        gradient_norm_at_solution: max_norm(&min.gradient),
        hessian_rank: sw.rank,
        unidentified,
        draws,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjusted_rho_square_examples() {
        let a = fit_statistics(-431.02, -182.19, 20).unwrap();
        assert!((a - 0.531).abs() < 1e-3, "{a}");
        let b = fit_statistics(-431.02, -165.202, 22).unwrap();
        assert!((b - 0.566).abs() < 1e-3, "{b}");
        assert_eq!(fit_statistics(-300.0, -300.0, 0).unwrap(), 0.0);
        assert!(fit_statistics(0.0, -1.0, 1).is_err());
    }

    #[test]
    fn stars_follow_thresholds() {
        assert_eq!(significance_stars(3.5), "***");
        assert_eq!(significance_stars(-3.5), "***");
        assert_eq!(significance_stars(2.0), "*");
        assert_eq!(significance_stars(2.7), "**");
        assert_eq!(significance_stars(1.0), "");
        assert!((two_sided_p(2.0) - 0.0455).abs() < 1e-4);
    }

    #[test]
    fn sandwich_pseudo_inverts_singular_information() {
        // information [[2,2],[2,2]] has one null direction (1,-1)
        let h = DMatrix::from_row_slice(2, 2, &[-2.0, -2.0, -2.0, -2.0]);
        let scores = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let sw = sandwich(&h, &scores);
        assert_eq!(sw.rank, 1);
        assert_eq!(sw.null_loadings, vec![0, 1]);
        assert!(sw.covariance.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn sandwich_equals_inverse_information_for_matching_scores() {
        // B = I, H = -I  =>  covariance = I
        let h = -DMatrix::<f64>::identity(2, 2);
        let scores = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let sw = sandwich(&h, &scores);
        assert_eq!(sw.rank, 2);
        assert!((sw.covariance[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(sw.covariance[(0, 1)].abs() < 1e-12);
    }
}
