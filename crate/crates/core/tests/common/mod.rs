//! Shared fixtures for the integration and acceptance targets.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use priorbench::model::{
    correlated_covariates, rng_from_seed, CanonicalBernoulli, CanonicalPoisson, ExponentialRate, GaussianKernel, Gumbel,
    LocationModel, LocationRegression, LogisticKernel, LogisticModel, NormalStrata, Poisson,
};
use priorbench::{Model, ParamPoint};
use rand::Rng;

/// A model with three fixed parameter points and a box for random points.
pub struct Member {
    pub model: Arc<dyn Model>,
    pub points: Vec<Vec<f64>>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Member {
    fn new(model: Arc<dyn Model>, points: Vec<Vec<f64>>, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { model, points, lo, hi }
    }

    pub fn name(&self) -> String {
        self.model.name()
    }

    pub fn random_point(&self, rng: &mut impl Rng) -> ParamPoint {
        let v = self.lo.iter().zip(&self.hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
        ParamPoint::new(v, self.model.labels()).unwrap()
    }

    pub fn point(&self, i: usize) -> ParamPoint {
        ParamPoint::new(self.points[i].clone(), self.model.labels()).unwrap()
    }
}

pub fn logistic_design(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    correlated_covariates(n, d, 0.1, &mut rng_from_seed(seed)).unwrap()
}

pub fn exponential() -> Member {
    Member::new(Arc::new(ExponentialRate::model()), vec![vec![0.5], vec![2.0], vec![5.0]], vec![0.2], vec![6.0])
}

pub fn gumbel() -> Member {
    Member::new(Arc::new(Gumbel::new(1.5).unwrap()), vec![vec![-1.0], vec![0.0], vec![2.0]], vec![-3.0], vec![3.0])
}

pub fn normal() -> Member {
    Member::new(
        Arc::new(NormalStrata::iid()),
        vec![vec![0.0, 1.0], vec![-1.0, 0.5], vec![2.0, 3.0]],
        vec![-2.0, 0.3],
        vec![2.0, 4.0],
    )
}

pub fn logistic() -> Member {
    Member::new(
        Arc::new(LogisticModel::new(logistic_design(12, 3, 11)).unwrap()),
        vec![vec![0.0, 0.0, 0.0], vec![-1.25, 0.75, 0.2], vec![0.5, -0.5, 1.0]],
        vec![-1.5; 3],
        vec![1.5; 3],
    )
}

/// Every model family, each at one representative configuration.
pub fn zoo() -> Vec<Member> {
    let z = logistic_design(10, 2, 5);
    vec![
        exponential(),
        Member::new(Arc::new(Poisson), vec![vec![0.7], vec![3.0], vec![10.0]], vec![0.3], vec![12.0]),
        Member::new(Arc::new(CanonicalPoisson::model()), vec![vec![-1.0], vec![0.0], vec![1.5]], vec![-2.0], vec![2.0]),
        Member::new(Arc::new(CanonicalBernoulli::model()), vec![vec![-2.0], vec![0.0], vec![1.0]], vec![-3.0], vec![3.0]),
        gumbel(),
        normal(),
        Member::new(
            Arc::new(NormalStrata::new(vec![2, 3, 5]).unwrap()),
            vec![vec![0.0, 1.0, -1.0, 1.0], vec![2.0, 0.0, 0.5, 0.4], vec![-1.0, 3.0, 0.0, 2.5]],
            vec![-2.0, -2.0, -2.0, 0.3],
            vec![2.0, 2.0, 2.0, 4.0],
        ),
        logistic(),
        Member::new(
            Arc::new(LocationModel::new(Arc::new(GaussianKernel::new(1.3).unwrap()), 2).unwrap()),
            vec![vec![0.0, 0.0], vec![1.0, -2.0], vec![-0.5, 3.0]],
            vec![-3.0; 2],
            vec![3.0; 2],
        ),
        Member::new(
            Arc::new(LocationModel::new(Arc::new(LogisticKernel::standard()), 1).unwrap()),
            vec![vec![0.0], vec![1.5], vec![-4.0]],
            vec![-5.0],
            vec![5.0],
        ),
        Member::new(
            Arc::new(LocationRegression::new(Arc::new(LogisticKernel::new(0.7).unwrap()), z).unwrap()),
            vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![-2.0, 0.5]],
            vec![-3.0; 2],
            vec![3.0; 2],
        ),
    ]
}
