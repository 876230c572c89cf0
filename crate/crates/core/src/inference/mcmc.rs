use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::newton::fit;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{check_data, check_theta, loglik, rng_from_seed, Model};
use crate::prior::PriorField;
use crate::runtime::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    /// Retained draws after burn-in.
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// One random-walk scale per coordinate; empty means "tune first".
    #[serde(default)]
    pub step_sizes: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Starting point; the MLE when absent.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
    #[serde(default = "default_target")]
    pub target_accept: (f64, f64),
}

fn default_draws() -> usize {
    10_000
}
fn default_burn_in() -> usize {
    1_000
}
fn default_target() -> (f64, f64) {
    (0.2, 0.5)
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            draws: default_draws(),
            burn_in: default_burn_in(),
            step_sizes: Vec::new(),
            seed: 0,
            init: None,
            target_accept: default_target(),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 || self.draws <= self.burn_in {
            return Err(Error::Config(format!(
                "mcmc needs draws > burn_in ≥ 0 (draws {}, burn_in {})",
                self.draws, self.burn_in
            )));
        }
        if self.step_sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Config("step sizes must be positive and finite".into()));
        }
        let (lo, hi) = self.target_accept;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(format!("target acceptance interval ({lo}, {hi}) is not inside (0, 1)")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Chain {
    /// `draws × d`, burn-in excluded.
    #[serde(with = "crate::linalg::row_major")]
    pub samples: DMatrix<f64>,
    /// Accepted fraction of proposals per coordinate over the retained draws.
    pub accept_rates: Vec<f64>,
    pub seed: u64,
    pub config: McmcConfig,
    pub labels: Vec<String>,
}

impl Chain {
    pub fn mean(&self) -> DVector<f64> {
        self.samples.row_mean().transpose()
    }

    /// Effective sample size per coordinate (Geyer's initial positive sequence).
    pub fn ess(&self) -> Vec<f64> {
        (0..self.samples.ncols())
            .map(|j| effective_sample_size(self.samples.column(j).as_slice()))
            .collect()
    }

    /// Monte Carlo standard error of the mean per coordinate, `sd / √ESS`.
    pub fn mcse(&self) -> Vec<f64> {
        let n = self.samples.nrows() as f64;
        self.ess()
            .iter()
            .enumerate()
            .map(|(j, ess)| {
                let col = self.samples.column(j);
                let m = col.mean();
                let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                (var / ess).sqrt()
            })
            .collect()
    }

    /// One row per retained draw with a header of parameter labels.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "draw,{}", self.labels.join(","))?;
        for (i, row) in self.samples.row_iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{i},{}", vals.join(","))?;
        }
        Ok(())
    }
}

/// ESS with autocorrelations summed over Geyer's initial positive pairs.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let var = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * var);
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    (n as f64 / tau.max(1.0 / n as f64)).min(n as f64 * (n as f64).log10().max(1.0))
}

/// Coordinate-wise random-walk Metropolis sampler over the unnormalized
/// posterior `ℓ(θ) + log π(θ)`.
struct Sampler<'a, M: Model + ?Sized> {
    model: &'a M,
    data: &'a Dataset,
    prior: &'a PriorField,
}

impl<M: Model + ?Sized> Sampler<'_, M> {
    /// Runs `burn_in + draws` systematic sweeps from `init`.
    fn run(&self, init: &[f64], steps: &[f64], burn_in: usize, draws: usize, seed: u64) -> Result<(DMatrix<f64>, Vec<usize>)> {
        let d = init.len();
        let mut rng = rng_from_seed(seed);
        let mut theta = init.to_vec();
        let mut ll = loglik(self.model, self.data, &theta);
        if !ll.is_finite() {
            return Err(Error::OutOfDomain {
                model: self.model.name(),
                theta,
            });
        }
        let mut samples = DMatrix::zeros(draws, d);
        let mut accepted = vec![0usize; d];
        for it in 0..burn_in + draws {
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                let u: f64 = rand::Rng::random(&mut rng);
                let mut cand = theta.clone();
                cand[j] += steps[j] * z;
                if !self.model.in_domain(&cand) {
                    continue;
                }
                let ll_cand = loglik(self.model, self.data, &cand);
                if !ll_cand.is_finite() {
                    continue;
                }
                let log_ratio = ll_cand - ll + self.prior.log_density_difference(&theta, &cand)?;
                if u.ln() < log_ratio {
                    theta = cand;
                    ll = ll_cand;
                    if it >= burn_in {
                        accepted[j] += 1;
                    }
                }
            }
            if it >= burn_in {
                for (k, v) in theta.iter().enumerate() {
                    samples[(it - burn_in, k)] = *v;
                }
            }
        }
        Ok((samples, accepted))
    }
}

fn starting_point<M: Model + ?Sized>(model: &M, data: &Dataset, cfg: &McmcConfig) -> Result<Vec<f64>> {
    match &cfg.init {
        Some(v) => {
            check_theta(model, v)?;
            Ok(v.clone())
        }
        None => {
            let mle = fit(model, data)?;
            if !mle.converged() {
                return Err(Error::MleFailed(format!("{:?}", mle.status)));
            }
            Ok(mle.estimate.values().to_vec())
        }
    }
}

/// Metropolis-within-Gibbs with normal random-walk proposals, one systematic
/// sweep over the coordinates per iteration. `cfg.step_sizes` must be set.
pub fn metropolis_within_gibbs<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    prior: &PriorField,
    cfg: &McmcConfig,
) -> Result<Chain> {
    cfg.validate()?;
    check_data(model, data)?;
    let d = model.dim();
    if cfg.step_sizes.len() != d {
        return Err(Error::Config(format!(
            "need {d} step sizes, got {} (run tune_step_sizes first)",
            cfg.step_sizes.len()
        )));
    }
    let init = starting_point(model, data, cfg)?;
    let sampler = Sampler { model, data, prior };
    let (samples, accepted) = sampler.run(&init, &cfg.step_sizes, cfg.burn_in, cfg.draws, cfg.seed)?;
    if let Some(j) = accepted.iter().position(|a| *a == 0) {
        return Err(Error::ZeroAcceptance {
            coordinate: j,
            step: cfg.step_sizes[j],
            proposals: cfg.draws,
        });
    }
    Ok(Chain {
        samples,
        accept_rates: accepted.iter().map(|a| *a as f64 / cfg.draws as f64).collect(),
        seed: cfg.seed,
        config: cfg.clone(),
        labels: model.labels(),
    })
}

/// Per-coordinate step sizes whose pilot acceptance lands in the target
/// interval.
///
/// Each round runs a pilot chain from the same start and moves every
/// out-of-band coordinate by log-scale bisection (quadrupling or quartering
/// until a bracket exists). The band used is the target interval shrunk by a
/// fifth of its width on each side, so a fresh pilot stays inside the target.
/// Initial scales are `2.4 / √(−H_jj)` at the start unless given.
pub fn tune_step_sizes<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    prior: &PriorField,
    pilot: &McmcConfig,
) -> Result<Vec<f64>> {
    pilot.validate()?;
    check_data(model, data)?;
    if pilot.draws < 500 {
        return Err(Error::Config(format!("pilot needs at least 500 draws, got {}", pilot.draws)));
    }
    const ROUNDS: usize = 20;
    let d = model.dim();
    let init = starting_point(model, data, pilot)?;
    let mut steps = if pilot.step_sizes.len() == d {
        pilot.step_sizes.clone()
    } else {
        let mut h = DMatrix::zeros(d, d);
        for i in 0..data.len() {
            h += model.hessian(i, data.observation(i), &init);
        }
        (0..d)
            .map(|j| {
                let curv = -h[(j, j)];
                if curv.is_finite() && curv > 0.0 {
                    2.4 / curv.sqrt()
                } else {
                    1.0
                }
            })
            .collect()
    };
    let (lo, hi) = pilot.target_accept;
    let margin = 0.2 * (hi - lo);
    let (band_lo, band_hi) = (lo + margin, hi - margin);
    let mut below: Vec<Option<f64>> = vec![None; d];
    let mut above: Vec<Option<f64>> = vec![None; d];
    let sampler = Sampler { model, data, prior };
    let mut rates = vec![0.0; d];
    for round in 0..ROUNDS {
        let seed = derive_seed(pilot.seed, round as u64);
        let (_, accepted) = sampler.run(&init, &steps, pilot.burn_in, pilot.draws, seed)?;
        rates = accepted.iter().map(|a| *a as f64 / pilot.draws as f64).collect();
        if rates.iter().all(|r| (band_lo..=band_hi).contains(r)) {
            return Ok(steps);
        }
        for j in 0..d {
            let r = rates[j];
            if r > band_hi {
                below[j] = Some(steps[j]);
                steps[j] = match above[j] {
                    Some(a) => (steps[j] * a).sqrt(),
                    None => steps[j] * 4.0,
                };
            } else if r < band_lo {
                above[j] = Some(steps[j]);
                steps[j] = match below[j] {
                    Some(b) => (steps[j] * b).sqrt(),
                    None => steps[j] / 4.0,
                };
            }
        }
    }
    Err(Error::TuningFailed { rounds: ROUNDS, rates })
}
