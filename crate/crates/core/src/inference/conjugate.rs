use crate::data::Dataset;
use crate::model::{ConjugateFamily, Model};
use crate::prior::{DensityForm, PriorField};

/// Exponent `a` and rate `b` of a prior `θ^a e^{−bθ}` on a one-parameter
/// family, read off the prior's closed form. `info_power` is the power of θ
/// in the model's Fisher information.
fn gamma_kernel(form: &DensityForm, info_power: f64) -> Option<(f64, f64)> {
    match form {
        DensityForm::Uniform => Some((0.0, 0.0)),
        DensityForm::Power { index: 0, exponent } => Some((*exponent, 0.0)),
        DensityForm::GammaKernel { index: 0, exponent, rate } => Some((*exponent, *rate)),
        DensityForm::ExpLinear { slopes } if slopes.len() == 1 => Some((0.0, -slopes[0])),
        DensityForm::LogDetFisher { power } => Some((info_power * power, 0.0)),
        _ => None,
    }
}

/// Exponent of ξ in a power prior on the strata-normal variance.
fn xi_power(form: &DensityForm, strata: usize) -> Option<f64> {
    match form {
        DensityForm::Uniform => Some(0.0),
        DensityForm::Power { index, exponent } if *index == strata => Some(*exponent),
        DensityForm::LogDetFisher { power } => Some(-(strata as f64 + 2.0) * power),
        _ => None,
    }
}

/// Gamma posterior mean `shape / rate`, when the posterior is proper.
fn gamma_mean(shape: f64, rate: f64) -> Option<f64> {
    (shape > 0.0 && rate > 0.0).then(|| shape / rate)
}

/// Pooled within-stratum sum of squares and stratum means, from the
/// dataset's stratum labels (one stratum when unlabeled).
fn strata_summary(data: &Dataset, strata: usize) -> Option<(f64, Vec<f64>)> {
    let label = |i: usize| data.strata().map_or(0, |s| s[i]);
    let mut sums = vec![0.0; strata];
    let mut counts = vec![0usize; strata];
    for i in 0..data.len() {
        let k = label(i);
        if k >= strata {
            return None;
        }
        sums[k] += data.observation(i)[0];
        counts[k] += 1;
    }
    if counts.contains(&0) {
        return None;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
    let ss = (0..data.len()).map(|i| (data.observation(i)[0] - means[label(i)]).powi(2)).sum();
    Some((ss, means))
}

/// Exact posterior mean for the closed-form pairs:
///
/// * exponential rate with prior `θ^a e^{−bθ}`: `(n + a + 1) / (Σy + b)`;
/// * Poisson mean with prior `λ^a e^{−bλ}`: `(Σy + a + 1) / (n + b)`;
/// * normal strata with flat means and `ξ^a`: means `Ȳ_k` and
///   `ξ = SS_W / (N − K − 2a − 4)`.
///
/// `None` when the pair has no closed form or the posterior mean does not exist.
pub fn conjugate_posterior_mean(model: &dyn Model, data: &Dataset, prior: &PriorField) -> Option<Vec<f64>> {
    let form = prior.form()?;
    let n = data.len() as f64;
    let total: f64 = data.responses().iter().sum();
    match model.conjugate_family()? {
        ConjugateFamily::ExponentialRate => {
            let (a, b) = gamma_kernel(form, -2.0)?;
            gamma_mean(n + a + 1.0, total + b).map(|m| vec![m])
        }
        ConjugateFamily::PoissonRate => {
            let (a, b) = gamma_kernel(form, -1.0)?;
            gamma_mean(total + a + 1.0, n + b).map(|m| vec![m])
        }
        ConjugateFamily::NormalStrata { strata } => {
            let a = xi_power(form, strata)?;
            let (ss, means) = strata_summary(data, strata)?;
            let denom = n - strata as f64 - 2.0 * a - 4.0;
            if denom <= 0.0 {
                return None;
            }
            let mut out = means;
            out.push(ss / denom);
            Some(out)
        }
    }
}

/// Joint posterior mode of the strata-normal model under `ξ^a`:
/// means `Ȳ_k` and `ξ = SS_W / (N − 2a)`.
pub fn conjugate_posterior_mode(model: &dyn Model, data: &Dataset, prior: &PriorField) -> Option<Vec<f64>> {
    let ConjugateFamily::NormalStrata { strata } = model.conjugate_family()? else {
        return None;
    };
    let a = xi_power(prior.form()?, strata)?;
    let (ss, means) = strata_summary(data, strata)?;
    let denom = data.len() as f64 - 2.0 * a;
    if denom <= 0.0 {
        return None;
    }
    let mut out = means;
    out.push(ss / denom);
    Some(out)
}
