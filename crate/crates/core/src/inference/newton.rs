use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cumulants::observed_loglik_bundle;
use crate::data::Dataset;
use crate::error::Result;
use crate::model::{check_data, check_theta, loglik, Model};
use crate::param::ParamPoint;

/// Why Newton iteration stopped without a stationary point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonConvergence {
    MaxIter,
    /// The iterate runs off to infinity while the information collapses,
    /// as under separation in logistic regression.
    DivergingNorm,
    SingularHessian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum MleStatus {
    Converged,
    NotConverged(NonConvergence),
}

#[derive(Clone, Debug, Serialize)]
pub struct MleReport {
    pub estimate: ParamPoint,
    pub status: MleStatus,
    pub iterations: usize,
    /// Max-norm of the log-likelihood gradient at `estimate`.
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted iterate, starting at `init`.
    pub loglik_trace: Vec<f64>,
}

impl MleReport {
    pub fn converged(&self) -> bool {
        self.status == MleStatus::Converged
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the gradient.
    pub tolerance: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tolerance: 1e-8,
        }
    }
}

pub fn newton_mle<M: Model + ?Sized>(model: &M, data: &Dataset, init: &ParamPoint) -> Result<MleReport> {
    newton_mle_with(model, data, init, NewtonOptions::default())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

/// Ascent direction from `−H d = g`, with Levenberg damping when `−H` is not
/// positive definite. `None` when no damping makes it so.
fn ascent_direction(hessian: &DMatrix<f64>, gradient: &DVector<f64>) -> Option<DVector<f64>> {
    let neg = -hessian;
    if let Some(ch) = neg.clone().cholesky() {
        return Some(ch.solve(gradient));
    }
    let scale = neg.diagonal().abs().max().max(1e-8);
    let mut lambda = 1e-3 * scale;
    for _ in 0..30 {
        let damped = &neg + DMatrix::identity(neg.nrows(), neg.nrows()) * lambda;
        if let Some(ch) = damped.cholesky() {
            return Some(ch.solve(gradient));
        }
        lambda *= 10.0;
    }
    None
}

/// Damped Newton ascent with backtracking on the log-likelihood.
///
/// Divergence is declared when `‖θ‖` exceeds `10·max(1, ‖θ₀‖)` while the
/// smallest eigenvalue of `−H` has fallen below `1e-6` times its largest
/// value at the start, or whenever `‖θ‖ > 1e8`.
pub fn newton_mle_with<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    init: &ParamPoint,
    opts: NewtonOptions,
) -> Result<MleReport> {
    check_theta(model, init.values())?;
    check_data(model, data)?;
    let mut theta = init.to_vector();
    let norm0 = theta.norm().max(1.0);
    let mut bundle = observed_loglik_bundle(model, data, init)?;
    let info_scale = (-&bundle.hessian).symmetric_eigenvalues().max().abs().max(1e-300);
    let mut trace = vec![bundle.loglik];
    let finish = |theta: &DVector<f64>, status, iterations, g: f64, trace: Vec<f64>| -> Result<MleReport> {
        Ok(MleReport {
            estimate: init.with_values(theta.iter().copied().collect())?,
            status,
            iterations,
            gradient_norm: g,
            loglik_trace: trace,
        })
    };

    for iter in 0..=opts.max_iter {
        let gnorm = bundle.gradient.amax();
        let tnorm = theta.norm();
        let collapsing = min_eigenvalue(&-&bundle.hessian) < 1e-6 * info_scale;
        if tnorm > 1e8 || (tnorm > 10.0 * norm0 && collapsing) {
            return finish(&theta, MleStatus::NotConverged(NonConvergence::DivergingNorm), iter, gnorm, trace);
        }
        if gnorm < opts.tolerance {
            return finish(&theta, MleStatus::Converged, iter, gnorm, trace);
        }
        if iter == opts.max_iter {
            break;
        }
        let Some(dir) = ascent_direction(&bundle.hessian, &bundle.gradient) else {
            return finish(&theta, MleStatus::NotConverged(NonConvergence::SingularHessian), iter, gnorm, trace);
        };
        let slope = bundle.gradient.dot(&dir);
        let slack = 1e-12 * (1.0 + bundle.loglik.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &theta + &dir * t;
            let vals: Vec<f64> = cand.iter().copied().collect();
            let ll = loglik(model, data, &vals);
            if ll.is_finite() && ll >= bundle.loglik + 1e-4 * t * slope - slack {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            return finish(&theta, MleStatus::NotConverged(NonConvergence::SingularHessian), iter, gnorm, trace);
        };
        theta = next;
        bundle = observed_loglik_bundle(model, data, &init.with_values(theta.iter().copied().collect())?)?;
        trace.push(bundle.loglik);
    }
    let gnorm = bundle.gradient.amax();
    finish(&theta, MleStatus::NotConverged(NonConvergence::MaxIter), opts.max_iter, gnorm, trace)
}

/// MLE from the model's own starting point.
pub fn fit<M: Model + ?Sized>(model: &M, data: &Dataset) -> Result<MleReport> {
    let start = model.initial_guess(data);
    let init = ParamPoint::new(start, model.labels())?;
    newton_mle(model, data, &init)
}
