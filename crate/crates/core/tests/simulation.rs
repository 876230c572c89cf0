mod common;

use std::fs;

use nalgebra::DVector;
use priorbench::inference::{fit, newton_mle, MleStatus, NonConvergence};
use priorbench::model::{loglik, LogisticModel};
use priorbench::runtime::THREADS_ENV;
use priorbench::sim::{emit, quantile_sorted, run_experiment, Format, McmcSettings, ModelSpec, PosteriorSpec, SCHEMA_VERSION};
use priorbench::{Dataset, Error, ExperimentConfig, Model, ParamPoint, PriorKind};
use proptest::prelude::*;

fn config(model: ModelSpec, theta: Vec<f64>, n: usize, replicates: usize, mcmc: PosteriorSpec) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        model,
        true_theta: theta,
        priors: vec![PriorKind::Br, PriorKind::Bm],
        n,
        replicates,
        mcmc,
        master_seed: 31,
        regenerate_covariates: true,
    }
}

fn small_mcmc() -> PosteriorSpec {
    PosteriorSpec::Mcmc(McmcSettings {
        draws: 400,
        burn_in: 100,
        pilot_draws: 500,
        pilot_burn_in: 100,
        target_accept: (0.2, 0.5),
    })
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = config(ModelSpec::Logistic { rho: 0.1 }, vec![-1.25, 0.75, 0.2], 30, 6, small_mcmc());
    std::env::set_var(THREADS_ENV, "1");
    let one = run_experiment(&cfg).unwrap();
    std::env::set_var(THREADS_ENV, "3");
    let three = run_experiment(&cfg).unwrap();
    std::env::remove_var(THREADS_ENV);
    assert_eq!(one, three);
}

#[test]
fn exponential_br_study_is_unbiased() {
    let mut cfg = config(ModelSpec::Exponential, vec![2.0], 20, 10_000, PosteriorSpec::Exact);
    cfg.priors = vec![PriorKind::Br];
    let report = run_experiment(&cfg).unwrap();
    let s = report.component(PriorKind::Br, 0).unwrap();
    assert!(s.mean.abs() < 3.0 * s.se.unwrap(), "{} vs se {:?}", s.mean, s.se);
}

#[test]
fn fixed_design_is_shared_across_replicates() {
    let mut cfg = config(ModelSpec::Linreg { kernel: Default::default(), rho: 0.3 }, vec![1.0, -1.0], 25, 4, small_mcmc());
    cfg.regenerate_covariates = false;
    cfg.priors = vec![PriorKind::Br];
    let a = run_experiment(&cfg).unwrap();
    assert_eq!(a.included, 4);
    assert_eq!(a, run_experiment(&cfg).unwrap());
}

#[test]
fn boxplot_matches_independent_quantiles() {
    let cfg = config(ModelSpec::Poisson, vec![4.0], 10, 57, PosteriorSpec::Exact);
    let report = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit(&report, dir.path(), &Format::ALL).unwrap();

    let csv = fs::read_to_string(dir.path().join("biases.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 57);
    let boxes: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("boxplot.json")).unwrap()).unwrap();
    for (i, prior) in ["br", "bm"].iter().enumerate() {
        let mut v: Vec<f64> = csv
            .lines()
            .skip(1)
            .filter(|l| l.starts_with(&format!("{prior},")))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Type-7: position (m − 1)p, linear between neighbours.
        let q = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let (lo, frac) = (h.floor() as usize, h.fract());
            v[lo] + frac * (v[(lo + 1).min(v.len() - 1)] - v[lo])
        };
        let row = &boxes[i];
        assert_eq!(row["prior"], *prior);
        for (key, p) in [("min", 0.0), ("q1", 0.25), ("median", 0.5), ("q3", 0.75), ("max", 1.0)] {
            assert!((row[key].as_f64().unwrap() - q(p)).abs() < 1e-12, "{prior} {key}");
            assert!((quantile_sorted(&v, p) - q(p)).abs() < 1e-12);
        }
    }
}

#[test]
fn all_excluded_is_an_error() {
    // A tiny logistic sample with a large slope separates every time.
    let mut cfg = config(ModelSpec::Logistic { rho: 0.0 }, vec![40.0], 4, 3, small_mcmc());
    cfg.priors = vec![PriorKind::Uniform];
    match run_experiment(&cfg) {
        Err(Error::AllExcluded(3)) => {}
        Ok(r) => assert!(r.excluded() > 0),
        Err(e) => panic!("{e}"),
    }
}

/// Plain gradient ascent on the log-likelihood; slow but independent of Newton.
fn ascend(model: &dyn Model, data: &Dataset, start: Vec<f64>) -> Vec<f64> {
    let mut theta = DVector::from_vec(start);
    let mut step = 0.1;
    let mut current = loglik(model, data, theta.as_slice());
    for _ in 0..200_000 {
        let mut g = DVector::zeros(theta.len());
        for i in 0..data.len() {
            g += model.score(i, data.observation(i), theta.as_slice());
        }
        if g.amax() < 1e-10 {
            break;
        }
        let next = &theta + &g * step;
        let value = loglik(model, data, next.as_slice());
        if value > current {
            theta = next;
            current = value;
            step *= 1.2;
        } else {
            step *= 0.5;
        }
    }
    theta.as_slice().to_vec()
}

#[test]
fn newton_agrees_with_gradient_ascent() {
    for member in [common::logistic(), common::normal(), common::gumbel()] {
        let truth = member.point(1);
        let n = member.model.design_rows().unwrap_or(40);
        let data = member.model.sample(&truth, n, 3).unwrap();
        let mle = fit(member.model.as_ref(), &data).unwrap();
        if !mle.converged() {
            continue;
        }
        let oracle = ascend(member.model.as_ref(), &data, member.model.initial_guess(&data));
        for (a, b) in mle.estimate.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{}: {a} vs {b}", member.name());
        }
    }
}

#[test]
fn separated_data_are_reported_not_returned() {
    let x = nalgebra::DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
    let model = LogisticModel::new(x).unwrap();
    let data = Dataset::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], 1, model.design_annotations(6).0, None).unwrap();
    let init = ParamPoint::new(vec![0.0], model.labels()).unwrap();
    let report = newton_mle(&model, &data, &init).unwrap();
    assert_eq!(report.status, MleStatus::NotConverged(NonConvergence::DivergingNorm));
    assert!(report.loglik_trace.windows(2).all(|w| w[1] >= w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_replicate_is_accounted_for(seed in any::<u64>(), reps in 1usize..30, n in 4usize..12) {
        let mut cfg = config(ModelSpec::Logistic { rho: 0.2 }, vec![2.5, -2.0], n, reps, PosteriorSpec::Mcmc(McmcSettings {
            draws: 50,
            burn_in: 10,
            pilot_draws: 500,
            pilot_burn_in: 50,
            target_accept: (0.2, 0.5),
        }));
        cfg.master_seed = seed;
        cfg.priors = vec![PriorKind::Br];
        match run_experiment(&cfg) {
            Ok(r) => {
                prop_assert_eq!(r.included + r.excluded(), reps);
                prop_assert_eq!(r.records.len(), 2 * r.included);
                let s = r.component(PriorKind::Br, 0).unwrap();
                prop_assert_eq!(s.sd.is_none(), r.included == 1);
            }
            Err(Error::AllExcluded(k)) => prop_assert_eq!(k, reps),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
