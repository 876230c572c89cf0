//! Models addressable by name.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    correlated_covariates, rng_from_seed, ExponentialRate, GaussianKernel, Gumbel, LocationKernel, LocationModel,
    LocationRegression, LogisticKernel, LogisticModel, Model, NormalStrata, Poisson,
};

pub const MODEL_NAMES: [&str; 8] = [
    "exponential",
    "poisson",
    "normal",
    "normal-strata:K",
    "logistic",
    "gumbel",
    "location",
    "linreg",
];

pub fn valid_model_names() -> String {
    MODEL_NAMES.join(", ")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    #[default]
    Gaussian,
    Logistic,
}

impl KernelName {
    pub fn build(self) -> Arc<dyn LocationKernel> {
        match self {
            KernelName::Gaussian => Arc::new(GaussianKernel::standard()),
            KernelName::Logistic => Arc::new(LogisticKernel::standard()),
        }
    }
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelName::Gaussian),
            "logistic" => Ok(KernelName::Logistic),
            _ => Err(Error::UnknownName {
                what: "kernel",
                name: s.into(),
                valid: "gaussian, logistic".into(),
            }),
        }
    }
}

/// Construction knobs for named models; fields a model does not use are ignored.
#[derive(Clone, Debug)]
pub struct ModelOptions {
    /// Parameter dimension for `logistic`, `location` and `linreg`.
    pub dim: Option<usize>,
    /// Design size for `logistic`, `linreg` and per-stratum size for
    /// `normal-strata:K`.
    pub n: Option<usize>,
    /// Covariate correlation `ρ` in `Σ_ij = ρ^{|i−j|}`.
    pub rho: f64,
    /// Seed for generated designs.
    pub seed: u64,
    pub kernel: KernelName,
    /// Known Gumbel scale.
    pub sigma: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            dim: None,
            n: None,
            rho: 0.1,
            seed: 0,
            kernel: KernelName::Gaussian,
            sigma: 1.0,
        }
    }
}

fn unknown(name: &str) -> Error {
    Error::UnknownName {
        what: "model",
        name: name.into(),
        valid: valid_model_names(),
    }
}

/// Builds a model from its CLI name. Generated designs are standard normal
/// covariates with correlation `ρ^{|i−j|}`; logistic defaults to `n = 30`,
/// `d = 3`, linear regression to `n = 30`, `d = 2`.
pub fn build_model(name: &str, opts: &ModelOptions) -> Result<Arc<dyn Model>> {
    let mut rng = rng_from_seed(opts.seed);
    Ok(match name {
        "exponential" => Arc::new(ExponentialRate::model()),
        "poisson" => Arc::new(Poisson),
        "normal" => Arc::new(NormalStrata::iid()),
        "gumbel" => Arc::new(Gumbel::new(opts.sigma)?),
        "logistic" => {
            let x = correlated_covariates(opts.n.unwrap_or(30), opts.dim.unwrap_or(3), opts.rho, &mut rng)?;
            Arc::new(LogisticModel::new(x)?)
        }
        "location" => Arc::new(LocationModel::new(opts.kernel.build(), opts.dim.unwrap_or(1))?),
        "linreg" => {
            let z = correlated_covariates(opts.n.unwrap_or(30), opts.dim.unwrap_or(2), opts.rho, &mut rng)?;
            Arc::new(LocationRegression::new(opts.kernel.build(), z)?)
        }
        other => {
            let k = other
                .strip_prefix("normal-strata:")
                .ok_or_else(|| unknown(other))?
                .parse::<usize>()
                .map_err(|_| unknown(other))?;
            Arc::new(NormalStrata::balanced(k, opts.n.unwrap_or(10))?)
        }
    })
}
