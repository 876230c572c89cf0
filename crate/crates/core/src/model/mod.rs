//! The sampling-model interface and the built-in model zoo.
//!
//! Every model works with per-observation log-density derivatives up to
//! third order. Models with a fixed design (logistic and location
//! regression, stratified normal) index observations by design row; i.i.d.
//! models ignore the row index.

mod expfam;
mod gumbel;
mod location;
mod logistic;
mod normal;
mod poisson;

pub use expfam::{CanonicalForm, CanonicalBernoulli, CanonicalPoisson, ExponentialFamily, ExponentialRate};
pub use gumbel::Gumbel;
pub use location::{GaussianKernel, KernelMoments, LocationKernel, LocationModel, LocationRegression, LogisticKernel};
pub use logistic::{correlated_covariates, LogisticModel};
pub use normal::NormalStrata;
pub use poisson::Poisson;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use serde::Serialize;

use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::param::ParamPoint;
use crate::prior::{DensityForm, PriorKind};

/// Random-number generator used by every sampler in the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Log-density of one observation and its first three θ-derivatives.
#[derive(Clone, Debug)]
pub struct ObsDerivatives {
    pub logdensity: f64,
    pub score: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub third: Tensor3,
}

/// Structural facts a model declares about itself; they select the
/// closed-form bias-reduction prior.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Structure {
    /// One parameter, identically distributed observations.
    pub one_dim_iid: bool,
    /// `κ_{r,st} = 0` for all indices (observed Hessian carries no data).
    pub condition_c: bool,
    /// Fisher information does not depend on θ.
    pub constant_fisher: bool,
}

/// Models whose posterior under power-type priors is available in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjugateFamily {
    /// Exponential with rate θ.
    ExponentialRate,
    /// Poisson with mean λ.
    PoissonRate,
    /// Normal strata `(μ_1, …, μ_K, ξ)` with common variance ξ.
    NormalStrata { strata: usize },
}

pub trait Model: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn labels(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("theta{i}")).collect()
    }

    /// Number of fixed design rows, or `None` when observations are i.i.d.
    fn design_rows(&self) -> Option<usize> {
        None
    }

    fn response_dim(&self) -> usize {
        1
    }

    fn in_domain(&self, theta: &[f64]) -> bool;

    /// Derivatives of `log p_i(y | θ)` for design row `i`.
    fn derivatives(&self, i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives;

    fn logdensity(&self, i: usize, y: &[f64], theta: &[f64]) -> f64 {
        self.derivatives(i, y, theta).logdensity
    }

    fn score(&self, i: usize, y: &[f64], theta: &[f64]) -> DVector<f64> {
        self.derivatives(i, y, theta).score
    }

    fn hessian(&self, i: usize, y: &[f64], theta: &[f64]) -> DMatrix<f64> {
        self.derivatives(i, y, theta).hessian
    }

    fn third(&self, i: usize, y: &[f64], theta: &[f64]) -> Tensor3 {
        self.derivatives(i, y, theta).third
    }

    /// Exact per-observation cumulants at θ, when the model knows them.
    fn analytic_cumulants(&self, theta: &[f64]) -> Option<Result<CumulantSet>>;

    /// Per-observation Fisher information `−κ_{rs}`.
    fn fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        match self.analytic_cumulants(theta) {
            Some(c) => Ok(c?.fisher),
            None => Err(Error::NoAnalyticCumulants(self.name())),
        }
    }

    /// Analytic `∂_j I(θ)` for each `j` (per observation), if provided.
    fn fisher_derivative(&self, _theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    fn structure(&self) -> Structure;

    /// One draw for design row `i`.
    fn draw(&self, i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64>;

    /// Covariates and stratum labels attached to a sample of size `n`.
    fn design_annotations(&self, _n: usize) -> (Option<DMatrix<f64>>, Option<Vec<usize>>) {
        (None, None)
    }

    /// Deterministic sample of size `n` at θ.
    fn sample(&self, theta: &ParamPoint, n: usize, seed: u64) -> Result<Dataset> {
        check_theta(self, theta.values())?;
        if let Some(rows) = self.design_rows() {
            if rows != n {
                return Err(Error::InvalidData(format!(
                    "model `{}` has a fixed design of {rows} rows, asked for {n}",
                    self.name()
                )));
            }
        }
        let mut rng = rng_from_seed(seed);
        let mut responses = Vec::with_capacity(n * self.response_dim());
        for i in 0..n {
            responses.extend(self.draw(i, theta.values(), &mut rng));
        }
        let (x, strata) = self.design_annotations(n);
        Dataset::new(responses, self.response_dim(), x, strata)
    }

    /// Starting point for likelihood maximization.
    fn initial_guess(&self, data: &Dataset) -> Vec<f64>;

    fn conjugate_family(&self) -> Option<ConjugateFamily> {
        None
    }

    /// Known closed-form density for the named prior, if any.
    fn closed_form_prior(&self, _kind: PriorKind) -> Option<DensityForm> {
        None
    }

    /// How the full-sample Fisher information is written in reports.
    fn fisher_label(&self) -> String {
        "I(θ)".into()
    }

    /// Multiplier turning per-observation Fisher information into the
    /// full-design matrix (design size for fixed designs, 1 otherwise).
    fn fisher_scale(&self) -> f64 {
        self.design_rows().map_or(1.0, |n| n as f64)
    }

    /// A convenient interior parameter point (used as anchor and default θ).
    fn reference_point(&self) -> Vec<f64>;
}

/// Errors unless θ has the model's dimension and lies in its domain.
pub fn check_theta<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: theta.len(),
        });
    }
    if !model.in_domain(theta) {
        return Err(Error::OutOfDomain {
            model: model.name(),
            theta: theta.to_vec(),
        });
    }
    Ok(())
}

/// Errors unless the dataset is compatible with the model's design.
pub fn check_data<M: Model + ?Sized>(model: &M, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidData("dataset is empty".into()));
    }
    if data.response_dim() != model.response_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.response_dim(),
            got: data.response_dim(),
        });
    }
    if let Some(rows) = model.design_rows() {
        if rows != data.len() {
            return Err(Error::InvalidData(format!(
                "model `{}` has {rows} design rows, dataset has {}",
                model.name(),
                data.len()
            )));
        }
    }
    Ok(())
}

/// `ℓ(θ) = Σ_i log p_i(y_i | θ)`, or `-∞` outside the domain.
pub fn loglik<M: Model + ?Sized>(model: &M, data: &Dataset, theta: &[f64]) -> f64 {
    if !model.in_domain(theta) {
        return f64::NEG_INFINITY;
    }
    (0..data.len())
        .map(|i| model.logdensity(i, data.observation(i), theta))
        .sum()
}

/// Largest finite-difference discrepancy found by [`validate_derivatives`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub score: f64,
    pub hessian: f64,
    pub third: f64,
}

impl DerivativeCheck {
    pub fn worst(&self) -> f64 {
        self.score.max(self.hessian).max(self.third)
    }
}

/// Central-difference check of score, Hessian and third derivatives at one
/// observation. Discrepancies are reported in mixed form
/// `|a − b| / (1 + |b|)` with step `1e-5·max(1, |θ_j|)`.
pub fn validate_derivatives<M: Model + ?Sized>(
    model: &M,
    i: usize,
    y: &[f64],
    theta: &[f64],
) -> DerivativeCheck {
    let d = theta.len();
    let base = model.derivatives(i, y, theta);
    let step = |j: usize| 1e-5 * theta[j].abs().max(1.0);
    let shifted = |j: usize, s: f64| {
        let mut t = theta.to_vec();
        t[j] += s;
        model.derivatives(i, y, &t)
    };
    let mixed = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
    let mut out = DerivativeCheck::default();
    for j in 0..d {
        let h = step(j);
        let plus = shifted(j, h);
        let minus = shifted(j, -h);
        let fd = (plus.logdensity - minus.logdensity) / (2.0 * h);
        out.score = out.score.max(mixed(fd, base.score[j]));
        for r in 0..d {
            let fd = (plus.score[r] - minus.score[r]) / (2.0 * h);
            out.hessian = out.hessian.max(mixed(fd, base.hessian[(r, j)]));
            for s in 0..d {
                let fd = (plus.hessian[(r, s)] - minus.hessian[(r, s)]) / (2.0 * h);
                out.third = out.third.max(mixed(fd, base.third.get(r, s, j)));
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    /// Uniform random point in a box.
    pub fn random_point(rng: &mut SimRng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        lo.iter()
            .zip(hi)
            .map(|(a, b)| rng.random_range(*a..*b))
            .collect()
    }

    /// Runs the finite-difference validation at 20 random θ, one fresh draw each.
    pub fn assert_derivatives<M: Model>(model: &M, lo: &[f64], hi: &[f64]) {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let theta = random_point(&mut rng, lo, hi);
            let rows = model.design_rows().unwrap_or(1);
            let i = rng.random_range(0..rows);
            let y = model.draw(i, &theta, &mut rng);
            let check = validate_derivatives(model, i, &y, &theta);
            assert!(
                check.worst() < 1e-5,
                "{}: derivative check failed at {theta:?}: {check:?}",
                model.name()
            );
        }
    }
}
