use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Gumbel as GumbelDist};

use super::{Model, ObsDerivatives, SimRng, Structure};
use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::prior::{DensityForm, PriorKind};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Gumbel location model with known scale σ.
///
/// With `v = exp(−(y − μ)/σ)`, which is standard exponential under the
/// model, every cumulant reduces to moments of `v`.
#[derive(Debug, Clone, Copy)]
pub struct Gumbel {
    sigma: f64,
}

impl Gumbel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidModel(format!("Gumbel scale must be positive, got {sigma}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for Gumbel {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

impl Model for Gumbel {
    fn name(&self) -> String {
        "gumbel".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn labels(&self) -> Vec<String> {
        vec!["mu".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite()
    }

    fn derivatives(&self, _i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives {
        let s = self.sigma;
        let z = (y[0] - theta[0]) / s;
        let v = (-z).exp();
        ObsDerivatives {
            logdensity: -s.ln() - z - v,
            score: DVector::from_element(1, (1.0 - v) / s),
            hessian: DMatrix::from_element(1, 1, -v / (s * s)),
            third: Tensor3::from_fn(1, |_, _, _| -v / s.powi(3)),
        }
    }

    fn analytic_cumulants(&self, _theta: &[f64]) -> Option<Result<CumulantSet>> {
        let s = self.sigma;
        let s2 = s * s;
        let s3 = s2 * s;
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let cube = |v: f64| Tensor3::from_fn(1, |_, _, _| v);
        Some(CumulantSet::from_parts(
            one(1.0 / s2),
            one(-1.0 / s2),
            cube(-1.0 / s3),
            cube(1.0 / s3),
            cube(-2.0 / s3),
        ))
    }

    fn fisher_derivative(&self, _theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(1, 1)])
    }

    fn structure(&self) -> Structure {
        Structure {
            one_dim_iid: true,
            condition_c: false,
            constant_fisher: true,
        }
    }

    fn draw(&self, _i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        vec![GumbelDist::new(theta[0], self.sigma).expect("valid Gumbel").sample(rng)]
    }

    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let m = data.responses().iter().sum::<f64>() / data.len().max(1) as f64;
        vec![m - EULER_GAMMA * self.sigma]
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        let half = 0.5 / self.sigma;
        match kind {
            PriorKind::Br | PriorKind::Uniform | PriorKind::Jeffreys => Some(DensityForm::Uniform),
            PriorKind::Bm => Some(DensityForm::ExpLinear { slopes: vec![-half] }),
            PriorKind::Mm => Some(DensityForm::ExpLinear { slopes: vec![half] }),
            PriorKind::Custom => None,
        }
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![0.0]
    }
}
