use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Bernoulli, Distribution, Exp, Poisson as PoissonDist};

use super::{ConjugateFamily, Model, ObsDerivatives, SimRng, Structure};
use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::Tensor3;
use crate::prior::{DensityForm, PriorKind};

/// A density in canonical form `p(y|θ) = a(y) c(θ) exp{θ·T(y)}`.
///
/// Implementors supply `log c` with its first three derivatives, the
/// sufficient statistics and the base measure; [`ExponentialFamily`] turns
/// that into a [`Model`].
pub trait CanonicalForm: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn labels(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("theta{i}")).collect()
    }
    fn in_domain(&self, theta: &[f64]) -> bool;
    fn log_c(&self, theta: &[f64]) -> f64;
    fn log_c_grad(&self, theta: &[f64]) -> DVector<f64>;
    fn log_c_hess(&self, theta: &[f64]) -> DMatrix<f64>;
    fn log_c_third(&self, theta: &[f64]) -> Tensor3;
    fn stats(&self, y: &[f64]) -> DVector<f64>;
    fn log_base(&self, y: &[f64]) -> f64;
    fn draw(&self, theta: &[f64], rng: &mut SimRng) -> Vec<f64>;
    fn reference_point(&self) -> Vec<f64>;
    fn initial_guess(&self, data: &Dataset) -> Vec<f64>;
    fn conjugate_family(&self) -> Option<ConjugateFamily> {
        None
    }
}

/// Model built from a canonical-form density. The Hessian `n·∂²log c` is
/// data-free, so condition (C) holds.
#[derive(Debug, Clone)]
pub struct ExponentialFamily<F> {
    form: F,
}

impl<F: CanonicalForm> ExponentialFamily<F> {
    pub fn new(form: F) -> Self {
        Self { form }
    }

    pub fn form(&self) -> &F {
        &self.form
    }
}

impl<F: CanonicalForm> Model for ExponentialFamily<F> {
    fn name(&self) -> String {
        self.form.name()
    }

    fn dim(&self) -> usize {
        self.form.dim()
    }

    fn labels(&self) -> Vec<String> {
        self.form.labels()
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && theta.iter().all(|v| v.is_finite()) && self.form.in_domain(theta)
    }

    fn derivatives(&self, _i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives {
        let t = self.form.stats(y);
        let logdensity =
            self.form.log_c(theta) + t.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + self.form.log_base(y);
        ObsDerivatives {
            logdensity,
            score: self.form.log_c_grad(theta) + t,
            hessian: self.form.log_c_hess(theta),
            third: self.form.log_c_third(theta),
        }
    }

    fn logdensity(&self, _i: usize, y: &[f64], theta: &[f64]) -> f64 {
        let t = self.form.stats(y);
        self.form.log_c(theta) + t.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + self.form.log_base(y)
    }

    fn analytic_cumulants(&self, theta: &[f64]) -> Option<Result<CumulantSet>> {
        let hess = self.form.log_c_hess(theta);
        let third = self.form.log_c_third(theta);
        let d = self.dim();
        Some(CumulantSet::from_parts(
            -&hess,
            hess,
            third.clone(),
            Tensor3::zeros(d),
            third.scale(-1.0),
        ))
    }

    fn fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(-self.form.log_c_hess(theta))
    }

    fn fisher_derivative(&self, theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let third = self.form.log_c_third(theta);
        let d = self.dim();
        Some(
            (0..d)
                .map(|j| DMatrix::from_fn(d, d, |r, s| -third.get(r, s, j)))
                .collect(),
        )
    }

    fn structure(&self) -> Structure {
        Structure {
            one_dim_iid: self.dim() == 1,
            condition_c: true,
            constant_fisher: false,
        }
    }

    fn draw(&self, _i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        self.form.draw(theta, rng)
    }

    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        self.form.initial_guess(data)
    }

    fn conjugate_family(&self) -> Option<ConjugateFamily> {
        self.form.conjugate_family()
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        match kind {
            PriorKind::Br => Some(DensityForm::LogDetFisher { power: 1.0 }),
            PriorKind::Bm | PriorKind::Mm | PriorKind::Jeffreys => Some(DensityForm::LogDetFisher { power: 0.5 }),
            PriorKind::Uniform => Some(DensityForm::Uniform),
            PriorKind::Custom => None,
        }
    }

    fn fisher_label(&self) -> String {
        "-d²log c(θ)".into()
    }

    fn reference_point(&self) -> Vec<f64> {
        self.form.reference_point()
    }
}

fn mean(data: &Dataset) -> f64 {
    data.responses().iter().sum::<f64>() / data.len().max(1) as f64
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn ln_factorial(k: f64) -> f64 {
    (2..=(k as u64)).map(|i| (i as f64).ln()).sum()
}

/// Exponential distribution with rate θ: `log c = log θ`, `T(y) = −y`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialRate;

impl ExponentialRate {
    pub fn model() -> ExponentialFamily<Self> {
        ExponentialFamily::new(Self)
    }
}

impl CanonicalForm for ExponentialRate {
    fn name(&self) -> String {
        "exponential".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn labels(&self) -> Vec<String> {
        vec!["rate".into()]
    }
    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[0] > 0.0
    }
    fn log_c(&self, theta: &[f64]) -> f64 {
        theta[0].ln()
    }
    fn log_c_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, 1.0 / theta[0])
    }
    fn log_c_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -1.0 / (theta[0] * theta[0]))
    }
    fn log_c_third(&self, theta: &[f64]) -> Tensor3 {
        Tensor3::from_fn(1, |_, _, _| 2.0 / theta[0].powi(3))
    }
    fn stats(&self, y: &[f64]) -> DVector<f64> {
        DVector::from_element(1, -y[0])
    }
    fn log_base(&self, _y: &[f64]) -> f64 {
        0.0
    }
    fn draw(&self, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        vec![Exp::new(theta[0]).expect("positive rate").sample(rng)]
    }
    fn reference_point(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let m = mean(data);
        vec![if m > 0.0 { 1.0 / m } else { 1.0 }]
    }
    fn conjugate_family(&self) -> Option<ConjugateFamily> {
        Some(ConjugateFamily::ExponentialRate)
    }
}

/// Bernoulli with natural parameter θ = logit p: `log c = −log(1 + e^θ)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalBernoulli;

impl CanonicalBernoulli {
    pub fn model() -> ExponentialFamily<Self> {
        ExponentialFamily::new(Self)
    }
}

impl CanonicalForm for CanonicalBernoulli {
    fn name(&self) -> String {
        "bernoulli-canonical".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn labels(&self) -> Vec<String> {
        vec!["logit".into()]
    }
    fn in_domain(&self, _theta: &[f64]) -> bool {
        true
    }
    fn log_c(&self, theta: &[f64]) -> f64 {
        -softplus(theta[0])
    }
    fn log_c_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, -logistic(theta[0]))
    }
    fn log_c_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        let p = logistic(theta[0]);
        DMatrix::from_element(1, 1, -p * (1.0 - p))
    }
    fn log_c_third(&self, theta: &[f64]) -> Tensor3 {
        let p = logistic(theta[0]);
        Tensor3::from_fn(1, |_, _, _| -p * (1.0 - p) * (1.0 - 2.0 * p))
    }
    fn stats(&self, y: &[f64]) -> DVector<f64> {
        DVector::from_element(1, y[0])
    }
    fn log_base(&self, _y: &[f64]) -> f64 {
        0.0
    }
    fn draw(&self, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        let hit = Bernoulli::new(logistic(theta[0])).expect("probability").sample(rng);
        vec![if hit { 1.0 } else { 0.0 }]
    }
    fn reference_point(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let p = mean(data).clamp(0.05, 0.95);
        vec![(p / (1.0 - p)).ln()]
    }
}

/// Poisson with natural parameter θ = log λ: `log c = −e^θ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalPoisson;

impl CanonicalPoisson {
    pub fn model() -> ExponentialFamily<Self> {
        ExponentialFamily::new(Self)
    }
}

impl CanonicalForm for CanonicalPoisson {
    fn name(&self) -> String {
        "poisson-canonical".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn labels(&self) -> Vec<String> {
        vec!["log_mean".into()]
    }
    fn in_domain(&self, theta: &[f64]) -> bool {
        theta[0] < 700.0
    }
    fn log_c(&self, theta: &[f64]) -> f64 {
        -theta[0].exp()
    }
    fn log_c_grad(&self, theta: &[f64]) -> DVector<f64> {
        DVector::from_element(1, -theta[0].exp())
    }
    fn log_c_hess(&self, theta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, -theta[0].exp())
    }
    fn log_c_third(&self, theta: &[f64]) -> Tensor3 {
        Tensor3::from_fn(1, |_, _, _| -theta[0].exp())
    }
    fn stats(&self, y: &[f64]) -> DVector<f64> {
        DVector::from_element(1, y[0])
    }
    fn log_base(&self, y: &[f64]) -> f64 {
        -ln_factorial(y[0])
    }
    fn draw(&self, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        vec![PoissonDist::new(theta[0].exp()).expect("positive mean").sample(rng)]
    }
    fn reference_point(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        vec![mean(data).max(0.1).ln()]
    }
}
