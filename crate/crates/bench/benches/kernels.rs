use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use priorbench::cumulants::{analytic_cumulants, mc_cumulants};
use priorbench::inference::{fit, metropolis_within_gibbs, McmcConfig};
use priorbench::model::{correlated_covariates, rng_from_seed, LogisticModel, NormalStrata};
use priorbench::prior::{br_log_grad, prior_field};
use priorbench::{Model, ParamPoint, PriorKind};

fn logistic() -> (Arc<LogisticModel>, ParamPoint) {
    let x = correlated_covariates(30, 3, 0.1, &mut rng_from_seed(1)).unwrap();
    let model = Arc::new(LogisticModel::new(x).unwrap());
    let theta = ParamPoint::new(vec![-1.25, 0.75, 0.2], model.labels()).unwrap();
    (model, theta)
}

fn cumulants(c: &mut Criterion) {
    let (model, theta) = logistic();
    c.bench_function("analytic_cumulants/logistic30x3", |b| {
        b.iter(|| analytic_cumulants(model.as_ref(), black_box(&theta)).unwrap())
    });
    let normal = NormalStrata::iid();
    let p = ParamPoint::new(vec![0.0, 1.0], normal.labels()).unwrap();
    c.bench_function("mc_cumulants/normal/10k", |b| b.iter(|| mc_cumulants(&normal, black_box(&p), 10_000, 7).unwrap()));
}

fn priors(c: &mut Criterion) {
    let (model, theta) = logistic();
    c.bench_function("br_log_grad/logistic", |b| b.iter(|| br_log_grad(model.as_ref(), black_box(&theta)).unwrap()));
    let field = prior_field(model.clone(), PriorKind::Br).unwrap();
    c.bench_function("closed_form_br/log_density", |b| b.iter(|| field.log_density(black_box(theta.values()))));
}

fn inference(c: &mut Criterion) {
    let (model, theta) = logistic();
    let data = model.sample(&theta, 30, 3).unwrap();
    c.bench_function("newton/logistic", |b| b.iter(|| fit(model.as_ref(), black_box(&data)).unwrap()));
    let prior = prior_field(model.clone(), PriorKind::Br).unwrap();
    let cfg = McmcConfig {
        draws: 1000,
        burn_in: 0,
        step_sizes: vec![0.8, 0.6, 0.6],
        seed: 5,
        init: Some(vec![-1.0, 0.5, 0.2]),
        target_accept: (0.2, 0.5),
    };
    c.bench_function("mcmc/logistic_br/1000_sweeps", |b| {
        b.iter(|| metropolis_within_gibbs(model.as_ref(), &data, &prior, black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, cumulants, priors, inference);
criterion_main!(benches);
