use std::sync::Arc;

use rayon::prelude::*;

use super::config::{ExperimentConfig, PosteriorSpec};
use super::report::{BiasRecord, BiasReport, ChainDiagnostics, Exclusion};
use crate::error::{Error, Result};
use crate::inference::{conjugate_posterior_mean, fit, metropolis_within_gibbs, tune_step_sizes, McmcConfig};
use crate::model::{check_theta, rng_from_seed, Model};
use crate::prior::prior_field;
use crate::runtime::{derive_seed, with_pool};

/// What one replicate produced: biases per prior, or the reason it was dropped.
enum Outcome {
    Kept {
        biases: Vec<Vec<f64>>,
        diagnostics: Vec<ChainDiagnostics>,
    },
    Excluded(String),
}

// Stream indices under a replicate seed.
const COVARIATES: u64 = 0;
const RESPONSES: u64 = 1;
const FIRST_PRIOR: u64 = 2;

fn replicate(cfg: &ExperimentConfig, fixed: Option<&Arc<dyn Model>>, r: usize) -> Result<Outcome> {
    let seed = derive_seed(cfg.master_seed, r as u64);
    let d = cfg.true_theta.len();
    let model = match fixed {
        Some(m) => m.clone(),
        None => cfg.model.build(cfg.n, d, &mut rng_from_seed(derive_seed(seed, COVARIATES)))?,
    };
    let truth = cfg.true_point()?;
    let data = model.sample(&truth, cfg.n, derive_seed(seed, RESPONSES))?;
    let mle = fit(model.as_ref(), &data)?;
    if !mle.converged() {
        return Ok(Outcome::Excluded(format!("mle: {:?}", mle.status)));
    }
    let mut biases = Vec::with_capacity(cfg.priors.len());
    let mut diagnostics = Vec::new();
    for (p, &kind) in cfg.priors.iter().enumerate() {
        let prior = prior_field(model.clone(), kind)?;
        let estimate: Vec<f64> = match &cfg.mcmc {
            PosteriorSpec::Exact => conjugate_posterior_mean(model.as_ref(), &data, &prior).ok_or_else(|| {
                Error::NoClosedPosterior {
                    model: model.name(),
                    prior: kind.to_string(),
                }
            })?,
            PosteriorSpec::Mcmc(s) => {
                let chain_seed = derive_seed(seed, FIRST_PRIOR + p as u64);
                let init = Some(mle.estimate.values().to_vec());
                let pilot = McmcConfig {
                    draws: s.pilot_draws,
                    burn_in: s.pilot_burn_in,
                    step_sizes: Vec::new(),
                    seed: derive_seed(chain_seed, 0),
                    init: init.clone(),
                    target_accept: s.target_accept,
                };
                let run = |pilot: &McmcConfig| -> Result<_> {
                    let steps = tune_step_sizes(model.as_ref(), &data, &prior, pilot)?;
                    let cfg = McmcConfig {
                        draws: s.draws,
                        burn_in: s.burn_in,
                        step_sizes: steps,
                        seed: derive_seed(chain_seed, 1),
                        init: init.clone(),
                        target_accept: s.target_accept,
                    };
                    metropolis_within_gibbs(model.as_ref(), &data, &prior, &cfg)
                };
                match run(&pilot) {
                    Ok(chain) => {
                        diagnostics.push(ChainDiagnostics {
                            prior: kind,
                            replicate: r,
                            step_sizes: chain.config.step_sizes.clone(),
                            accept_rates: chain.accept_rates.clone(),
                        });
                        chain.mean().iter().copied().collect()
                    }
                    Err(e @ (Error::TuningFailed { .. } | Error::ZeroAcceptance { .. })) => {
                        return Ok(Outcome::Excluded(format!("mcmc ({kind}): {e}")))
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        biases.push(estimate.iter().zip(&cfg.true_theta).map(|(e, t)| e - t).collect());
    }
    Ok(Outcome::Kept { biases, diagnostics })
}

/// Runs the replicated bias study described by `cfg`.
///
/// Replicate `r` uses seed `derive_seed(master_seed, r)` and sub-streams for
/// covariates, responses and each prior's chain, so the report does not
/// depend on thread count or completion order. Replicates whose MLE does not
/// converge (or whose chains cannot be tuned) are excluded for every prior
/// and listed with the reason.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BiasReport> {
    cfg.validate()?;
    let d = cfg.true_theta.len();
    let fixed = if cfg.model.has_design() && !cfg.regenerate_covariates {
        let mut rng = rng_from_seed(derive_seed(cfg.master_seed, u64::MAX));
        Some(cfg.model.build(cfg.n, d, &mut rng)?)
    } else {
        None
    };
    let probe = match &fixed {
        Some(m) => m.clone(),
        None => cfg.model.build(cfg.n, d, &mut rng_from_seed(cfg.master_seed))?,
    };
    check_theta(probe.as_ref(), &cfg.true_theta)?;
    let labels = probe.labels();
    for &kind in &cfg.priors {
        prior_field(probe.clone(), kind)?;
    }
    if cfg.mcmc == PosteriorSpec::Exact && probe.conjugate_family().is_none() {
        return Err(Error::NoClosedPosterior {
            model: probe.name(),
            prior: cfg.priors[0].to_string(),
        });
    }

    let outcomes: Vec<Result<Outcome>> =
        with_pool(|| (0..cfg.replicates).into_par_iter().map(|r| replicate(cfg, fixed.as_ref(), r)).collect());

    let mut per_prior: Vec<Vec<BiasRecord>> = vec![Vec::new(); cfg.priors.len()];
    let mut exclusions = Vec::new();
    let mut diagnostics = Vec::new();
    let mut included = 0;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Outcome::Kept { biases, diagnostics: diag } => {
                included += 1;
                for (p, b) in biases.into_iter().enumerate() {
                    for (component, bias) in b.into_iter().enumerate() {
                        per_prior[p].push(BiasRecord {
                            prior: cfg.priors[p],
                            replicate: r,
                            component,
                            bias,
                        });
                    }
                }
                diagnostics.extend(diag);
            }
            Outcome::Excluded(reason) => exclusions.push(Exclusion { replicate: r, reason }),
        }
    }
    if included == 0 {
        return Err(Error::AllExcluded(cfg.replicates));
    }
    let records: Vec<BiasRecord> = per_prior.into_iter().flatten().collect();
    let summary = BiasReport::summarize_records(&records, &cfg.priors, &labels);
    Ok(BiasReport {
        config: cfg.clone(),
        labels,
        included,
        exclusions,
        records,
        summary,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::PriorKind;
    use crate::sim::config::{McmcSettings, ModelSpec, SCHEMA_VERSION};

    fn exact(model: ModelSpec, theta: Vec<f64>, n: usize, replicates: usize) -> ExperimentConfig {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model,
            true_theta: theta,
            priors: vec![PriorKind::Br, PriorKind::Uniform],
            n,
            replicates,
            mcmc: PosteriorSpec::Exact,
            master_seed: 5,
            regenerate_covariates: true,
        }
    }

    #[test]
    fn records_are_ordered_and_counted() {
        let report = run_experiment(&exact(ModelSpec::Poisson, vec![3.0], 15, 40)).unwrap();
        assert_eq!(report.included + report.excluded(), 40);
        assert_eq!(report.records.len(), 2 * report.included);
        assert!(report.records[..report.included].iter().all(|r| r.prior == PriorKind::Br));
        let reps: Vec<usize> = report.records[..report.included].iter().map(|r| r.replicate).collect();
        assert!(reps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn poisson_br_bias_is_sample_mean_error() {
        // Under BR the Poisson posterior mean is the sample mean, so the
        // recorded bias is ȳ − λ for the replicate's own data.
        let cfg = exact(ModelSpec::Poisson, vec![3.0], 15, 5);
        let report = run_experiment(&cfg).unwrap();
        let truth = cfg.true_point().unwrap();
        for rec in report.records.iter().filter(|r| r.prior == PriorKind::Br) {
            let seed = derive_seed(cfg.master_seed, rec.replicate as u64);
            let data = crate::model::Poisson.sample(&truth, 15, derive_seed(seed, RESPONSES)).unwrap();
            let mean = data.responses().iter().sum::<f64>() / 15.0;
            assert!((rec.bias - (mean - 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_replicate_has_no_spread() {
        let report = run_experiment(&exact(ModelSpec::Exponential, vec![1.0], 10, 1)).unwrap();
        let s = report.component(PriorKind::Br, 0).unwrap();
        assert_eq!(s.count, 1);
        assert!(s.sd.is_none() && s.se.is_none());
    }

    #[test]
    fn exact_needs_a_conjugate_model() {
        let cfg = exact(ModelSpec::Gumbel { sigma: 1.0 }, vec![0.0], 10, 2);
        assert!(matches!(run_experiment(&cfg), Err(Error::NoClosedPosterior { .. })));
    }

    #[test]
    fn out_of_domain_truth_is_rejected() {
        let cfg = exact(ModelSpec::Exponential, vec![-1.0], 10, 2);
        assert!(matches!(run_experiment(&cfg), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn mcmc_study_records_diagnostics() {
        let cfg = ExperimentConfig {
            priors: vec![PriorKind::Br],
            mcmc: PosteriorSpec::Mcmc(McmcSettings {
                draws: 500,
                burn_in: 100,
                pilot_draws: 500,
                pilot_burn_in: 100,
                target_accept: (0.2, 0.5),
            }),
            ..exact(ModelSpec::Gumbel { sigma: 1.0 }, vec![0.0], 20, 3)
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.diagnostics.len(), report.included);
        for d in &report.diagnostics {
            assert!(d.step_sizes[0] > 0.0);
            assert!(d.accept_rates[0] > 0.0 && d.accept_rates[0] < 1.0);
        }
    }
}
