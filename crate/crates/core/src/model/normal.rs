use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{ConjugateFamily, Model, ObsDerivatives, SimRng, Structure};
use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::prior::{DensityForm, PriorKind};

/// Normal strata with separate means and a common variance:
/// `Y_{ki} ~ N(μ_k, ξ)`, parameters `(μ_1, …, μ_K, ξ)`.
///
/// `NormalStrata::iid()` is the plain `N(μ, ξ)` model with any sample size.
/// With explicit stratum sizes, observations are laid out stratum by stratum
/// and cumulants weight stratum `k` by `n_k / N`.
#[derive(Debug, Clone)]
pub struct NormalStrata {
    sizes: Option<Vec<usize>>,
    row_stratum: Vec<usize>,
}

impl NormalStrata {
    pub fn iid() -> Self {
        Self {
            sizes: None,
            row_stratum: Vec::new(),
        }
    }

    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidModel("need at least one stratum".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidModel("every stratum needs at least one observation".into()));
        }
        let row_stratum = sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| std::iter::repeat_n(k, n))
            .collect();
        Ok(Self {
            sizes: Some(sizes),
            row_stratum,
        })
    }

    /// `K` strata with `n_per` observations each.
    pub fn balanced(strata: usize, n_per: usize) -> Result<Self> {
        Self::new(vec![n_per; strata])
    }

    pub fn strata(&self) -> usize {
        self.sizes.as_ref().map_or(1, Vec::len)
    }

    pub fn sizes(&self) -> Option<&[usize]> {
        self.sizes.as_deref()
    }

    fn stratum_of(&self, i: usize) -> usize {
        if self.sizes.is_some() {
            self.row_stratum[i]
        } else {
            0
        }
    }

    fn weights(&self) -> Vec<f64> {
        match &self.sizes {
            None => vec![1.0],
            Some(s) => {
                let n: usize = s.iter().sum();
                s.iter().map(|&k| k as f64 / n as f64).collect()
            }
        }
    }

    /// Wraps responses (ordered stratum by stratum) with their labels.
    pub fn dataset(&self, responses: Vec<f64>) -> Result<Dataset> {
        let strata = self.sizes.is_some().then(|| self.row_stratum.clone());
        Dataset::new(responses, 1, None, strata)
    }

    /// Within-strata sum of squares and stratum means.
    pub fn within_ss(&self, data: &Dataset) -> (f64, Vec<f64>) {
        let k = self.strata();
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for i in 0..data.len() {
            let s = self.stratum_of(i);
            sums[s] += data.observation(i)[0];
            counts[s] += 1;
        }
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / (*c).max(1) as f64).collect();
        let ss = (0..data.len())
            .map(|i| (data.observation(i)[0] - means[self.stratum_of(i)]).powi(2))
            .sum();
        (ss, means)
    }
}

impl Model for NormalStrata {
    fn name(&self) -> String {
        match &self.sizes {
            None => "normal".into(),
            Some(s) => format!("normal-strata:{}", s.len()),
        }
    }

    fn dim(&self) -> usize {
        self.strata() + 1
    }

    fn labels(&self) -> Vec<String> {
        let k = self.strata();
        let mut l: Vec<String> = if k == 1 {
            vec!["mu".into()]
        } else {
            (1..=k).map(|i| format!("mu{i}")).collect()
        };
        l.push("xi".into());
        l
    }

    fn design_rows(&self) -> Option<usize> {
        self.sizes.as_ref().map(|s| s.iter().sum())
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && theta.iter().all(|v| v.is_finite()) && theta[self.strata()] > 0.0
    }

    fn derivatives(&self, i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives {
        let d = self.dim();
        let (k, x) = (self.stratum_of(i), self.strata());
        let xi = theta[x];
        let e = y[0] - theta[k];
        let (xi2, xi3) = (xi * xi, xi * xi * xi);
        let mut score = DVector::zeros(d);
        score[k] = e / xi;
        score[x] = -0.5 / xi + e * e / (2.0 * xi2);
        let mut hessian = DMatrix::zeros(d, d);
        hessian[(k, k)] = -1.0 / xi;
        hessian[(k, x)] = -e / xi2;
        hessian[(x, k)] = -e / xi2;
        hessian[(x, x)] = 0.5 / xi2 - e * e / xi3;
        let mut third = Tensor3::zeros(d);
        for (a, b, c) in [(k, k, x), (k, x, k), (x, k, k)] {
            third.set(a, b, c, 1.0 / xi2);
        }
        for (a, b, c) in [(k, x, x), (x, k, x), (x, x, k)] {
            third.set(a, b, c, 2.0 * e / xi3);
        }
        third.set(x, x, x, -1.0 / xi3 + 3.0 * e * e / (xi3 * xi));
        ObsDerivatives {
            logdensity: self.logdensity(i, y, theta),
            score,
            hessian,
            third,
        }
    }

    fn logdensity(&self, i: usize, y: &[f64], theta: &[f64]) -> f64 {
        let xi = theta[self.strata()];
        let e = y[0] - theta[self.stratum_of(i)];
        -0.5 * (2.0 * std::f64::consts::PI * xi).ln() - e * e / (2.0 * xi)
    }

    fn analytic_cumulants(&self, theta: &[f64]) -> Option<Result<CumulantSet>> {
        let d = self.dim();
        let x = self.strata();
        let xi = theta[x];
        let (xi2, xi3) = (xi * xi, xi * xi * xi);
        let w = self.weights();
        let mut cross2 = DMatrix::zeros(d, d);
        let mut pure3 = Tensor3::zeros(d);
        let mut cross3 = Tensor3::zeros(d);
        let mut score3 = Tensor3::zeros(d);
        for (k, wk) in w.iter().enumerate() {
            cross2[(k, k)] = wk / xi;
            for (a, b, c) in [(k, k, x), (k, x, k), (x, k, k)] {
                pure3.set(a, b, c, wk / xi2);
                score3.set(a, b, c, wk / xi2);
            }
            cross3.set(k, k, x, -wk / xi2);
            cross3.set(k, x, k, -wk / xi2);
        }
        cross2[(x, x)] = 0.5 / xi2;
        pure3.set(x, x, x, 2.0 / xi3);
        cross3.set(x, x, x, -1.0 / xi3);
        score3.set(x, x, x, 1.0 / xi3);
        Some(CumulantSet::from_parts(cross2.clone(), -cross2, pure3, cross3, score3))
    }

    fn fisher_derivative(&self, theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let d = self.dim();
        let x = self.strata();
        let xi = theta[x];
        let mut out = vec![DMatrix::zeros(d, d); d];
        for (k, wk) in self.weights().iter().enumerate() {
            out[x][(k, k)] = -wk / (xi * xi);
        }
        out[x][(x, x)] = -1.0 / (xi * xi * xi);
        Some(out)
    }

    fn structure(&self) -> Structure {
        Structure::default()
    }

    fn draw(&self, i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        let z: f64 = StandardNormal.sample(rng);
        vec![theta[self.stratum_of(i)] + theta[self.strata()].sqrt() * z]
    }

    fn design_annotations(&self, _n: usize) -> (Option<DMatrix<f64>>, Option<Vec<usize>>) {
        (None, self.sizes.is_some().then(|| self.row_stratum.clone()))
    }

    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let (ss, mut means) = self.within_ss(data);
        means.push((ss / data.len() as f64).max(1e-8));
        means
    }

    fn conjugate_family(&self) -> Option<ConjugateFamily> {
        Some(ConjugateFamily::NormalStrata {
            strata: self.strata(),
        })
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        let k = self.strata() as f64;
        let power = |exponent| DensityForm::Power {
            index: self.strata(),
            exponent,
        };
        match kind {
            PriorKind::Br => Some(power(-2.0)),
            PriorKind::Bm => Some(power(k / 2.0)),
            PriorKind::Mm => Some(power(-(k + 4.0) / 2.0)),
            PriorKind::Jeffreys => Some(power(-(k + 2.0) / 2.0)),
            PriorKind::Uniform => Some(DensityForm::Uniform),
            PriorKind::Custom => None,
        }
    }

    fn reference_point(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.strata()];
        p.push(1.0);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::assert_derivatives;

    #[test]
    fn derivatives_match_finite_differences() {
        assert_derivatives(&NormalStrata::iid(), &[-2.0, 0.3], &[2.0, 4.0]);
        assert_derivatives(
            &NormalStrata::new(vec![2, 3, 1]).unwrap(),
            &[-2.0, -1.0, 0.0, 0.3],
            &[2.0, 1.0, 3.0, 4.0],
        );
    }

    #[test]
    fn labels_and_layout() {
        let m = NormalStrata::new(vec![2, 1]).unwrap();
        assert_eq!(m.labels(), vec!["mu1", "mu2", "xi"]);
        assert_eq!(m.design_rows(), Some(3));
        assert_eq!(m.name(), "normal-strata:2");
        assert!(NormalStrata::new(vec![]).is_err());
        assert!(NormalStrata::new(vec![3, 0]).is_err());
        assert!(!m.in_domain(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn within_ss_pools_strata() {
        let m = NormalStrata::new(vec![2, 3]).unwrap();
        let d = m.dataset(vec![1.0, 3.0, 0.0, 3.0, 6.0]).unwrap();
        let (ss, means) = m.within_ss(&d);
        assert_eq!(means, vec![2.0, 3.0]);
        assert_eq!(ss, 2.0 + 18.0);
    }
}
