use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{
    correlated_covariates, ExponentialRate, Gumbel, LocationModel, LocationRegression, LogisticModel, Model,
    NormalStrata, Poisson, SimRng,
};
use crate::param::ParamPoint;
use crate::prior::PriorKind;
use crate::registry::KernelName;

/// The only config layout this version reads.
pub const SCHEMA_VERSION: u32 = 1;

fn default_rho() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

/// A model family with its construction parameters. Designs (logistic and
/// linear-regression covariates) are drawn per replicate or once, see
/// [`ExperimentConfig::regenerate_covariates`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Exponential,
    Poisson,
    Normal,
    /// Stratum sizes; they must add up to `n`.
    NormalStrata {
        sizes: Vec<usize>,
    },
    /// Covariates `N_d(0, Σ)` with `Σ_ij = ρ^{|i−j|}`, no intercept.
    Logistic {
        #[serde(default = "default_rho")]
        rho: f64,
    },
    Gumbel {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Location {
        #[serde(default)]
        kernel: KernelName,
    },
    Linreg {
        #[serde(default)]
        kernel: KernelName,
        #[serde(default = "default_rho")]
        rho: f64,
    },
}

impl ModelSpec {
    pub fn has_design(&self) -> bool {
        matches!(self, ModelSpec::Logistic { .. } | ModelSpec::Linreg { .. })
    }

    /// Builds the model for sample size `n` and dimension `d`, drawing any
    /// covariates from `rng`.
    pub fn build(&self, n: usize, d: usize, rng: &mut SimRng) -> Result<Arc<dyn Model>> {
        Ok(match self {
            ModelSpec::Exponential => Arc::new(ExponentialRate::model()),
            ModelSpec::Poisson => Arc::new(Poisson),
            ModelSpec::Normal => Arc::new(NormalStrata::iid()),
            ModelSpec::NormalStrata { sizes } => {
                if sizes.iter().sum::<usize>() != n {
                    return Err(Error::Config(format!("stratum sizes {sizes:?} do not add up to n = {n}")));
                }
                Arc::new(NormalStrata::new(sizes.clone())?)
            }
            ModelSpec::Logistic { rho } => Arc::new(LogisticModel::new(correlated_covariates(n, d, *rho, rng)?)?),
            ModelSpec::Gumbel { sigma } => Arc::new(Gumbel::new(*sigma)?),
            ModelSpec::Location { kernel } => Arc::new(LocationModel::new(kernel.build(), d)?),
            ModelSpec::Linreg { kernel, rho } => {
                Arc::new(LocationRegression::new(kernel.build(), correlated_covariates(n, d, *rho, rng)?)?)
            }
        })
    }
}

/// MCMC settings for an experiment; step sizes are tuned per replicate and prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSettings {
    /// Retained draws after burn-in.
    pub draws: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_pilot_draws")]
    pub pilot_draws: usize,
    #[serde(default = "default_pilot_burn_in")]
    pub pilot_burn_in: usize,
    #[serde(default = "default_target")]
    pub target_accept: (f64, f64),
}

fn default_burn_in() -> usize {
    1000
}
fn default_pilot_draws() -> usize {
    1000
}
fn default_pilot_burn_in() -> usize {
    200
}
fn default_target() -> (f64, f64) {
    (0.2, 0.5)
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self {
            draws: 4000,
            burn_in: default_burn_in(),
            pilot_draws: default_pilot_draws(),
            pilot_burn_in: default_pilot_burn_in(),
            target_accept: default_target(),
        }
    }
}

/// `"exact"` for conjugate posterior means, or an MCMC settings object.
#[derive(Clone, Debug, PartialEq)]
pub enum PosteriorSpec {
    Exact,
    Mcmc(McmcSettings),
}

impl Serialize for PosteriorSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PosteriorSpec::Exact => s.serialize_str("exact"),
            PosteriorSpec::Mcmc(m) => m.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for PosteriorSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) if s == "exact" => Ok(PosteriorSpec::Exact),
            serde_json::Value::String(s) => Err(D::Error::custom(format!(
                "unknown posterior method `{s}`, expected \"exact\" or an mcmc object"
            ))),
            other => serde_json::from_value(other).map(PosteriorSpec::Mcmc).map_err(D::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub true_theta: Vec<f64>,
    pub priors: Vec<PriorKind>,
    pub n: usize,
    pub replicates: usize,
    pub mcmc: PosteriorSpec,
    pub master_seed: u64,
    /// Draw fresh covariates in every replicate; otherwise one design is
    /// drawn from the master seed and reused.
    #[serde(default = "default_true")]
    pub regenerate_covariates: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn true_point(&self) -> Result<ParamPoint> {
        ParamPoint::unlabeled(self.true_theta.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.priors.is_empty() {
            return Err(Error::Config("at least one prior is required".into()));
        }
        if self.priors.contains(&PriorKind::Custom) {
            return Err(Error::Config("custom priors cannot be named in a config".into()));
        }
        self.true_point()?;
        if let PosteriorSpec::Mcmc(m) = &self.mcmc {
            if m.draws == 0 || m.pilot_draws < 500 {
                return Err(Error::Config("mcmc needs draws ≥ 1 and pilot_draws ≥ 500".into()));
            }
            let (lo, hi) = m.target_accept;
            if !(0.0 < lo && lo < hi && hi < 1.0) {
                return Err(Error::Config("target_accept must be an interval inside (0, 1)".into()));
            }
        }
        Ok(())
    }

    /// The full-scale profile: 1000 replicates and 10000 retained draws.
    pub fn full_scale(mut self) -> Self {
        self.replicates = 1000;
        if let PosteriorSpec::Mcmc(m) = &mut self.mcmc {
            m.draws = 10_000;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOGISTIC: &str = r#"{
        "schema_version": 1,
        "model": {"name": "logistic", "rho": 0.1},
        "true_theta": [-1.25, 0.75, 0.2],
        "priors": ["br", "bm", "uniform"],
        "n": 30,
        "replicates": 200,
        "mcmc": {"draws": 4000},
        "master_seed": 20240611
    }"#;

    #[test]
    fn parses_logistic_study() {
        let cfg = ExperimentConfig::from_json(LOGISTIC).unwrap();
        assert!(cfg.regenerate_covariates);
        assert_eq!(cfg.priors, vec![PriorKind::Br, PriorKind::Bm, PriorKind::Uniform]);
        let PosteriorSpec::Mcmc(m) = &cfg.mcmc else { panic!() };
        assert_eq!((m.draws, m.burn_in), (4000, 1000));
        let full = cfg.full_scale();
        assert_eq!(full.replicates, 1000);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&full).unwrap()).unwrap();
        assert_eq!(back, full);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let extra = LOGISTIC.replace("\"n\": 30", "\"n\": 30, \"colour\": 1");
        assert!(ExperimentConfig::from_json(&extra).is_err());
        let nested = LOGISTIC.replace("\"rho\": 0.1", "\"rho\": 0.1, \"tau\": 2");
        assert!(ExperimentConfig::from_json(&nested).is_err());
        let old = LOGISTIC.replace("\"schema_version\": 1", "\"schema_version\": 0");
        assert!(ExperimentConfig::from_json(&old).is_err());
        let zero = LOGISTIC.replace("\"replicates\": 200", "\"replicates\": 0");
        assert!(ExperimentConfig::from_json(&zero).is_err());
    }

    #[test]
    fn exact_method_is_a_string() {
        let cfg = LOGISTIC.replace("{\"draws\": 4000}", "\"exact\"");
        assert_eq!(ExperimentConfig::from_json(&cfg).unwrap().mcmc, PosteriorSpec::Exact);
        let bad = LOGISTIC.replace("{\"draws\": 4000}", "\"gibbs\"");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }
}
