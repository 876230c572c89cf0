use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Poisson as PoissonDist};

use super::expfam::ln_factorial;
use super::{ConjugateFamily, Model, ObsDerivatives, SimRng, Structure};
use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::Tensor3;
use crate::prior::{DensityForm, PriorKind};

/// Poisson parameterized by its mean λ. Not canonical, so κ_{1,11} ≠ 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Poisson;

impl Model for Poisson {
    fn name(&self) -> String {
        "poisson".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn labels(&self) -> Vec<String> {
        vec!["mean".into()]
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == 1 && theta[0].is_finite() && theta[0] > 0.0
    }

    fn derivatives(&self, _i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives {
        let (y, l) = (y[0], theta[0]);
        ObsDerivatives {
            logdensity: self.logdensity(0, &[y], theta),
            score: DVector::from_element(1, y / l - 1.0),
            hessian: DMatrix::from_element(1, 1, -y / (l * l)),
            third: Tensor3::from_fn(1, |_, _, _| 2.0 * y / l.powi(3)),
        }
    }

    fn logdensity(&self, _i: usize, y: &[f64], theta: &[f64]) -> f64 {
        y[0] * theta[0].ln() - theta[0] - ln_factorial(y[0])
    }

    fn analytic_cumulants(&self, theta: &[f64]) -> Option<Result<CumulantSet>> {
        let l = theta[0];
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let cube = |v: f64| Tensor3::from_fn(1, |_, _, _| v);
        Some(CumulantSet::from_parts(
            one(1.0 / l),
            one(-1.0 / l),
            cube(2.0 / (l * l)),
            cube(-1.0 / (l * l)),
            cube(1.0 / (l * l)),
        ))
    }

    fn fisher_derivative(&self, theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::from_element(1, 1, -1.0 / (theta[0] * theta[0]))])
    }

    fn structure(&self) -> Structure {
        Structure {
            one_dim_iid: true,
            ..Structure::default()
        }
    }

    fn draw(&self, _i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        vec![PoissonDist::new(theta[0]).expect("positive mean").sample(rng)]
    }

    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let m = data.responses().iter().sum::<f64>() / data.len().max(1) as f64;
        vec![m.max(1e-3)]
    }

    fn conjugate_family(&self) -> Option<ConjugateFamily> {
        Some(ConjugateFamily::PoissonRate)
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        let power = |exponent| DensityForm::Power { index: 0, exponent };
        match kind {
            PriorKind::Br | PriorKind::Mm => Some(power(-1.0)),
            PriorKind::Bm | PriorKind::Uniform => Some(DensityForm::Uniform),
            PriorKind::Jeffreys => Some(power(-0.5)),
            PriorKind::Custom => None,
        }
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![1.0]
    }
}
