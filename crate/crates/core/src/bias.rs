//! First-order bias formulas: the Cox–Snell MLE bias, the Laplace
//! approximation to the posterior mean, the posterior-mean bias predictor,
//! and an empirical probe of how posterior-mean bias decays with `n`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::{analytic_cumulants, observed_loglik_bundle, CumulantSet};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{conjugate_posterior_mean, fit, metropolis_within_gibbs, tune_step_sizes, McmcConfig};
use crate::model::{check_theta, Model};
use crate::param::ParamPoint;
use crate::prior::{cumulant_log_grad, PriorField, PriorKind};
use crate::runtime::{derive_seed, with_pool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasOrder {
    FirstOrder,
}

/// A first-order bias, `O(1/n)` by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    pub values: Vec<f64>,
    pub order: BiasOrder,
    pub n: usize,
    /// Evaluated at an estimate rather than the true parameter.
    pub plug_in: bool,
}

impl BiasVector {
    fn first_order(values: DVector<f64>, n: usize) -> Self {
        Self {
            values: values.iter().copied().collect(),
            order: BiasOrder::FirstOrder,
            n,
            plug_in: false,
        }
    }

    /// The same bias at sample size `n`.
    pub fn rescaled(&self, n: usize) -> Self {
        let f = self.n as f64 / n as f64;
        Self {
            values: self.values.iter().map(|v| v * f).collect(),
            n,
            ..self.clone()
        }
    }

    pub fn as_plug_in(mut self) -> Self {
        self.plug_in = true;
        self
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    Ok(n as f64)
}

/// `B_k = (1/2n) Σ κ^{k,s} κ^{t,u} (κ_{stu} + 2κ_{t,su})`.
pub fn cox_snell_bias(c: &CumulantSet, n: usize) -> Result<BiasVector> {
    let nf = check_n(n)?;
    let inner = c.contract_inverse(|t, u, s| c.kappa3_pure.get(s, t, u) + 2.0 * c.kappa3_cross.get(t, s, u));
    Ok(BiasVector::first_order(&c.fisher_inv * inner / (2.0 * nf), n))
}

/// The same bias written before the third Bartlett identity is applied:
/// `−(1/2n) Σ κ^{k,s} κ^{t,u} (κ_{s,t,u} + κ_{s,tu})`.
///
/// Contracting `κ_{stu} + κ_{s,tu} + κ_{t,su} + κ_{u,st} + κ_{s,t,u} = 0`
/// with the symmetric `κ^{t,u}` gives
/// `κ_{stu} + 2κ_{t,su} = −(κ_{s,t,u} + κ_{s,tu})`, hence the leading minus.
pub fn cox_snell_bias_unreduced(c: &CumulantSet, n: usize) -> Result<BiasVector> {
    let nf = check_n(n)?;
    let inner = c.contract_inverse(|t, u, s| c.kappa3_score.get(s, t, u) + c.kappa3_cross.get(s, t, u));
    Ok(BiasVector::first_order(-(&c.fisher_inv * inner) / (2.0 * nf), n))
}

/// Stationarity threshold on the max-norm of the log-likelihood gradient.
pub const STATIONARITY_TOLERANCE: f64 = 1e-6;

/// Laplace approximation to the posterior mean around the MLE:
/// `θ̂_k + (1/n) Σ_j ĥ^{kj} {π̂_j/π̂ − ½ Σ_{r,s} ĥ^{rs} ĥ_{rsj}}` with
/// `h = −ℓ/n`.
pub fn laplace_posterior_mean<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    prior: &PriorField,
    mle: &ParamPoint,
) -> Result<DVector<f64>> {
    let bundle = observed_loglik_bundle(model, data, mle)?;
    let gnorm = bundle.gradient.amax();
    if gnorm > STATIONARITY_TOLERANCE {
        return Err(Error::NotStationary(gnorm));
    }
    let hinv = bundle.h_hessian_inverse()?;
    let h3 = bundle.h_third();
    let d = model.dim();
    let prior_grad = prior.log_grad(mle.values())?;
    let bracket = DVector::from_fn(d, |j, _| {
        let mut acc = 0.0;
        for r in 0..d {
            for s in 0..d {
                acc += hinv[(r, s)] * h3.get(r, s, j);
            }
        }
        prior_grad[j] - 0.5 * acc
    });
    Ok(mle.to_vector() + &hinv * bracket / bundle.n as f64)
}

/// First-order bias of the posterior mean at θ:
/// `(1/n) Σ_j κ^{k,j} {∂_j log π(θ) + Σ_{r,s} κ^{r,s}(κ_{rsj} + κ_{r,js})}`.
pub fn posterior_bias_first_order<M: Model + ?Sized>(
    model: &M,
    theta: &ParamPoint,
    prior: &PriorField,
    n: usize,
) -> Result<BiasVector> {
    let nf = check_n(n)?;
    let c = analytic_cumulants(model, theta)?;
    let br = cumulant_log_grad(PriorKind::Br, &c).expect("br is cumulant-defined");
    let bracket = prior.log_grad(theta.values())? - br;
    Ok(BiasVector::first_order(&c.fisher_inv * bracket / nf, n))
}

/// How the probe obtains each posterior mean.
#[derive(Clone, Debug)]
pub enum PosteriorMethod {
    /// Closed-form conjugate mean.
    Exact,
    /// Tuned Metropolis-within-Gibbs; `pilot` configures tuning and the
    /// remaining fields of `run` the retained chain.
    Mcmc { pilot: McmcConfig, run: McmcConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub replicate: usize,
    pub component: usize,
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub n: usize,
    pub included: usize,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// First-order prediction at the true parameter.
    pub predicted: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeFit {
    pub component: usize,
    /// Least-squares slope of `log|mean bias|` against `log n`; absent when
    /// some mean bias is exactly zero or fewer than two sizes were run.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderProbe {
    pub model: String,
    pub prior: PriorKind,
    pub theta: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub excluded: Vec<(usize, String)>,
    #[serde(skip)]
    pub rows: Vec<ProbeRow>,
    pub levels: Vec<ProbeLevel>,
    pub fits: Vec<ProbeFit>,
}

impl OrderProbe {
    /// Columns `n,replicate,component,bias`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n,replicate,component,bias")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.n, r.replicate, r.component, r.bias)?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn posterior_mean(model: &dyn Model, data: &Dataset, prior: &PriorField, method: &PosteriorMethod, seed: u64) -> Result<Vec<f64>> {
    match method {
        PosteriorMethod::Exact => conjugate_posterior_mean(model, data, prior).ok_or_else(|| Error::NoClosedPosterior {
            model: model.name(),
            prior: prior.kind().to_string(),
        }),
        PosteriorMethod::Mcmc { pilot, run } => {
            let mle = fit(model, data)?;
            if !mle.converged() {
                return Err(Error::MleFailed(format!("{:?}", mle.status)));
            }
            let init = Some(mle.estimate.values().to_vec());
            let pilot = McmcConfig {
                seed: derive_seed(seed, 0),
                init: init.clone(),
                ..pilot.clone()
            };
            let steps = tune_step_sizes(model, data, prior, &pilot)?;
            let cfg = McmcConfig {
                step_sizes: steps,
                seed: derive_seed(seed, 1),
                init,
                ..run.clone()
            };
            Ok(metropolis_within_gibbs(model, data, prior, &cfg)?.mean().iter().copied().collect())
        }
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Empirical posterior-mean bias at each `n` in `n_grid`, for i.i.d. models.
///
/// Every replicate draws one sample of the largest size, and each smaller
/// size uses its prefix, so the levels share random numbers. Replicates
/// whose posterior mean fails at any size are excluded from every level.
pub fn bias_order_probe(
    prior: &PriorField,
    theta0: &ParamPoint,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
    method: &PosteriorMethod,
) -> Result<OrderProbe> {
    let model: Arc<dyn Model> = prior.model().clone();
    check_theta(model.as_ref(), theta0.values())?;
    if model.design_rows().is_some() {
        return Err(Error::Config(format!("order probe needs an i.i.d. model, `{}` has a fixed design", model.name())));
    }
    if n_grid.is_empty() || n_grid.contains(&0) || replicates == 0 {
        return Err(Error::Config("order probe needs a nonempty grid of positive sizes and replicates ≥ 1".into()));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let n_max = *grid.last().expect("nonempty");
    let d = model.dim();
    let truth = theta0.values();

    let outcomes: Vec<std::result::Result<Vec<Vec<f64>>, String>> = with_pool(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let rs = derive_seed(seed, r as u64);
                let full = model.sample(theta0, n_max, derive_seed(rs, 0)).map_err(|e| e.to_string())?;
                grid.iter()
                    .enumerate()
                    .map(|(g, &n)| {
                        let data = full.prefix(n).map_err(|e| e.to_string())?;
                        let est = posterior_mean(model.as_ref(), &data, prior, method, derive_seed(rs, 1 + g as u64));
                        match est {
                            Ok(v) => Ok(v.iter().zip(truth).map(|(e, t)| e - t).collect()),
                            Err(e @ Error::NoClosedPosterior { .. }) => Err(format!("fatal: {e}")),
                            Err(e) => Err(e.to_string()),
                        }
                    })
                    .collect()
            })
            .collect()
    });

    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(b) => kept.push((r, b)),
            Err(msg) if msg.starts_with("fatal: ") => {
                return Err(Error::NoClosedPosterior {
                    model: model.name(),
                    prior: prior.kind().to_string(),
                })
            }
            Err(msg) => excluded.push((r, msg)),
        }
    }
    if kept.is_empty() {
        return Err(Error::AllExcluded(replicates));
    }

    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for (g, &n) in grid.iter().enumerate() {
        let m = kept.len() as f64;
        let mut mean = vec![0.0; d];
        for (_, b) in &kept {
            for k in 0..d {
                mean[k] += b[g][k];
            }
        }
        mean.iter_mut().for_each(|v| *v /= m);
        let se = (0..d)
            .map(|k| {
                let ss: f64 = kept.iter().map(|(_, b)| (b[g][k] - mean[k]).powi(2)).sum();
                (ss / (m - 1.0).max(1.0) / m).sqrt()
            })
            .collect();
        let predicted = posterior_bias_first_order(model.as_ref(), theta0, prior, n).ok().map(|b| b.values);
        levels.push(ProbeLevel {
            n,
            included: kept.len(),
            mean,
            se,
            predicted,
        });
        for (r, b) in &kept {
            for (k, v) in b[g].iter().enumerate() {
                rows.push(ProbeRow {
                    n,
                    replicate: *r,
                    component: k,
                    bias: *v,
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.n, r.replicate, r.component));

    let fits = (0..d)
        .map(|k| {
            let usable = grid.len() >= 2 && levels.iter().all(|l| l.mean[k] != 0.0);
            let (slope, intercept) = if usable {
                let xs: Vec<f64> = grid.iter().map(|n| (*n as f64).ln()).collect();
                let ys: Vec<f64> = levels.iter().map(|l| l.mean[k].abs().ln()).collect();
                let (s, i) = least_squares(&xs, &ys);
                (Some(s), Some(i))
            } else {
                (None, None)
            };
            ProbeFit {
                component: k,
                slope,
                intercept,
            }
        })
        .collect();

    Ok(OrderProbe {
        model: model.name(),
        prior: prior.kind(),
        theta: truth.to_vec(),
        replicates,
        seed,
        excluded,
        rows,
        levels,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExponentialRate, GaussianKernel, Gumbel, LocationModel, NormalStrata};
    use crate::prior::prior_field;

    fn p(v: &[f64]) -> ParamPoint {
        ParamPoint::unlabeled(v.to_vec()).unwrap()
    }

    #[test]
    fn exponential_cox_snell_is_theta_over_n() {
        let c = analytic_cumulants(&ExponentialRate::model(), &p(&[2.0])).unwrap();
        let b = cox_snell_bias(&c, 20).unwrap();
        assert!((b.values[0] - 0.1).abs() < 1e-15);
        let alt = cox_snell_bias_unreduced(&c, 20).unwrap();
        assert!((alt.values[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gaussian_location_has_no_bias() {
        let m = LocationModel::new(Arc::new(GaussianKernel::standard()), 2).unwrap();
        let c = analytic_cumulants(&m, &p(&[0.3, -1.0])).unwrap();
        assert!(cox_snell_bias(&c, 10).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rescaling_halves_bias() {
        let c = analytic_cumulants(&NormalStrata::iid(), &p(&[0.0, 2.0])).unwrap();
        let b20 = cox_snell_bias(&c, 20).unwrap();
        let b40 = cox_snell_bias(&c, 40).unwrap();
        for (a, b) in b20.values.iter().zip(&b40.values) {
            assert_eq!(*a, 2.0 * b);
        }
        assert_eq!(b20.rescaled(40), b40);
    }

    #[test]
    fn predictor_examples() {
        let m = Arc::new(ExponentialRate::model());
        let u = prior_field(m.clone(), PriorKind::Uniform).unwrap();
        let b = posterior_bias_first_order(m.as_ref(), &p(&[2.0]), &u, 20).unwrap();
        assert!((b.values[0] - 0.2).abs() < 1e-14);
        let br = prior_field(m.clone(), PriorKind::Br).unwrap();
        let b = posterior_bias_first_order(m.as_ref(), &p(&[2.0]), &br, 20).unwrap();
        assert!(b.values[0].abs() < 1e-14);

        let g = Arc::new(Gumbel::new(1.0).unwrap());
        let mm = prior_field(g.clone(), PriorKind::Mm).unwrap();
        let b = posterior_bias_first_order(g.as_ref(), &p(&[0.7]), &mm, 10).unwrap();
        assert!((b.values[0] - 0.05).abs() < 1e-14);
    }

    #[test]
    fn laplace_is_exact_for_gaussian_mean() {
        let m = Arc::new(LocationModel::new(Arc::new(GaussianKernel::standard()), 1).unwrap());
        let data = Dataset::scalar(vec![0.2, 1.4, -0.3, 0.9]);
        let prior = prior_field(m.clone(), PriorKind::Uniform).unwrap();
        let mle = fit(m.as_ref(), &data).unwrap().estimate;
        let lap = laplace_posterior_mean(m.as_ref(), &data, &prior, &mle).unwrap();
        assert!((lap[0] - 0.55).abs() < 1e-12);
    }

    #[test]
    fn laplace_rejects_non_stationary_point() {
        let m = Arc::new(ExponentialRate::model());
        let data = Dataset::scalar(vec![0.5, 0.7]);
        let prior = prior_field(m.clone(), PriorKind::Uniform).unwrap();
        let err = laplace_posterior_mean(m.as_ref(), &data, &prior, &p(&[3.0])).unwrap_err();
        assert!(matches!(err, Error::NotStationary(_)));
    }

    #[test]
    fn probe_under_br_prior_is_unbiased() {
        let m = Arc::new(ExponentialRate::model());
        let br = prior_field(m, PriorKind::Br).unwrap();
        let probe = bias_order_probe(&br, &p(&[2.0]), &[10, 20, 40], 2000, 5, &PosteriorMethod::Exact).unwrap();
        for l in &probe.levels {
            assert!(l.mean[0].abs() < 3.0 * l.se[0], "{l:?}");
        }
        assert_eq!(probe.rows.len(), 3 * 2000);
        let mut csv = Vec::new();
        probe.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("n,replicate,component,bias\n"));
    }

    #[test]
    fn probe_slope_under_uniform_prior_is_near_minus_one() {
        let m = Arc::new(ExponentialRate::model());
        let u = prior_field(m, PriorKind::Uniform).unwrap();
        let probe = bias_order_probe(&u, &p(&[2.0]), &[20, 40, 80, 160], 4000, 8, &PosteriorMethod::Exact).unwrap();
        let slope = probe.fits[0].slope.unwrap();
        assert!((slope + 1.0).abs() < 0.25, "{slope}");
    }
}
