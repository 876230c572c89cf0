use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::expfam::softplus;
use super::{Model, ObsDerivatives, SimRng, Structure};
use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::prior::{DensityForm, PriorKind};

/// Logistic regression `P(Y_i = 1) = F(x_iᵀβ)` on a fixed design.
///
/// The observed Hessian `−XᵀW(β)X` involves no responses, so condition (C)
/// holds and every third-order cumulant is a weighted sum of `x⊗x⊗x`.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    design: DMatrix<f64>,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    /// Fails for rank-deficient designs.
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        if design.nrows() == 0 || design.ncols() == 0 {
            return Err(Error::InvalidModel("empty design".into()));
        }
        if !design.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("non-finite covariate".into()));
        }
        let gram = design.transpose() * &design;
        let eig = gram.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        if !(lo > 1e-10 * hi.max(1.0)) {
            return Err(Error::InvalidModel("design matrix is rank deficient (XᵀX singular)".into()));
        }
        Ok(Self { design })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        self.design.row(i).iter().zip(beta).map(|(x, b)| x * b).sum()
    }

    /// Per-row weights `F'(η_i)` and `F''(η_i)`.
    fn weights(&self, i: usize, beta: &[f64]) -> (f64, f64) {
        let p = sigmoid(self.eta(i, beta));
        let w = p * (1.0 - p);
        (w, w * (1.0 - 2.0 * p))
    }

    /// `(1/n) Σ_i c_i x_i x_iᵀ` and `(1/n) Σ_i e_i x_i⊗x_i⊗x_i` for weights from `f`.
    fn moments(&self, mut f: impl FnMut(usize) -> (f64, f64)) -> (DMatrix<f64>, Tensor3) {
        let (n, d) = self.design.shape();
        let mut m2 = DMatrix::zeros(d, d);
        let mut m3 = Tensor3::zeros(d);
        for i in 0..n {
            let (c, e) = f(i);
            let x = self.design.row(i);
            for r in 0..d {
                for s in 0..d {
                    let xx = x[r] * x[s];
                    m2[(r, s)] += c * xx;
                    for t in 0..d {
                        m3.add_at(r, s, t, e * xx * x[t]);
                    }
                }
            }
        }
        let nf = n as f64;
        (m2 / nf, m3.scale(1.0 / nf))
    }

    /// Full-design Fisher information `XᵀW(β)X`.
    pub fn design_fisher(&self, beta: &[f64]) -> DMatrix<f64> {
        let w = DVector::from_fn(self.design.nrows(), |i, _| self.weights(i, beta).0);
        let xw = DMatrix::from_fn(self.design.nrows(), self.design.ncols(), |i, j| self.design[(i, j)] * w[i]);
        self.design.transpose() * xw
    }
}

impl Model for LogisticModel {
    fn name(&self) -> String {
        "logistic".into()
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn labels(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("beta{i}")).collect()
    }

    fn design_rows(&self) -> Option<usize> {
        Some(self.design.nrows())
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && theta.iter().all(|v| v.is_finite())
    }

    fn derivatives(&self, i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives {
        let d = self.dim();
        let eta = self.eta(i, theta);
        let p = sigmoid(eta);
        let w = p * (1.0 - p);
        let w2 = w * (1.0 - 2.0 * p);
        let x = self.design.row(i);
        ObsDerivatives {
            logdensity: y[0] * eta - softplus(eta),
            score: DVector::from_fn(d, |r, _| (y[0] - p) * x[r]),
            hessian: DMatrix::from_fn(d, d, |r, s| -w * x[r] * x[s]),
            third: Tensor3::from_fn(d, |r, s, t| -w2 * x[r] * x[s] * x[t]),
        }
    }

    fn logdensity(&self, i: usize, y: &[f64], theta: &[f64]) -> f64 {
        let eta = self.eta(i, theta);
        y[0] * eta - softplus(eta)
    }

    fn analytic_cumulants(&self, theta: &[f64]) -> Option<Result<CumulantSet>> {
        let (info, skew) = self.moments(|i| self.weights(i, theta));
        let d = self.dim();
        Some(CumulantSet::from_parts(
            info.clone(),
            -info,
            skew.scale(-1.0),
            Tensor3::zeros(d),
            skew,
        ))
    }

    fn fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.design_fisher(theta) / self.design.nrows() as f64)
    }

    fn fisher_derivative(&self, theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let (n, d) = self.design.shape();
        let mut out = vec![DMatrix::zeros(d, d); d];
        for i in 0..n {
            let (_, w2) = self.weights(i, theta);
            let x = self.design.row(i);
            for (j, m) in out.iter_mut().enumerate() {
                for r in 0..d {
                    for s in 0..d {
                        m[(r, s)] += w2 * x[j] * x[r] * x[s];
                    }
                }
            }
        }
        Some(out.into_iter().map(|m| m / n as f64).collect())
    }

    fn structure(&self) -> Structure {
        Structure {
            one_dim_iid: false,
            condition_c: true,
            constant_fisher: false,
        }
    }

    fn draw(&self, i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        let p = sigmoid(self.eta(i, theta));
        vec![if rng.random::<f64>() < p { 1.0 } else { 0.0 }]
    }

    fn design_annotations(&self, _n: usize) -> (Option<DMatrix<f64>>, Option<Vec<usize>>) {
        (Some(self.design.clone()), None)
    }

    fn initial_guess(&self, _data: &Dataset) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        match kind {
            PriorKind::Br => Some(DensityForm::LogDetFisher { power: 1.0 }),
            PriorKind::Bm | PriorKind::Mm | PriorKind::Jeffreys => Some(DensityForm::LogDetFisher { power: 0.5 }),
            PriorKind::Uniform => Some(DensityForm::Uniform),
            PriorKind::Custom => None,
        }
    }

    fn fisher_label(&self) -> String {
        "XᵀW(β)X".into()
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

/// `n` rows drawn from `N_d(0, Σ)` with `Σ_{ij} = ρ^{|i−j|}`.
pub fn correlated_covariates(n: usize, d: usize, rho: f64, rng: &mut SimRng) -> Result<DMatrix<f64>> {
    let sigma = DMatrix::from_fn(d, d, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Config(format!("covariance with rho = {rho} is not positive definite")))?;
    let l = chol.l();
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let row = &l * z;
        for j in 0..d {
            x[(i, j)] = row[j];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng_from_seed;
    use crate::model::test_support::assert_derivatives;

    fn model() -> LogisticModel {
        let mut rng = rng_from_seed(3);
        LogisticModel::new(correlated_covariates(30, 3, 0.1, &mut rng).unwrap()).unwrap()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        assert_derivatives(&model(), &[-2.0, -2.0, -2.0], &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(LogisticModel::new(x).is_err());
    }

    #[test]
    fn fisher_at_zero_is_quarter_gram() {
        let m = model();
        let f = m.design_fisher(&[0.0; 3]);
        let g = m.design().transpose() * m.design() / 4.0;
        assert!((f - g).abs().max() < 1e-12);
    }

    #[test]
    fn fisher_derivative_matches_difference_quotient() {
        let m = model();
        let b = [0.4, -0.7, 1.1];
        let an = m.fisher_derivative(&b).unwrap();
        for j in 0..3 {
            let mut bp = b;
            let mut bm = b;
            bp[j] += 1e-6;
            bm[j] -= 1e-6;
            let fd = (m.fisher(&bp).unwrap() - m.fisher(&bm).unwrap()) / 2e-6;
            assert!((fd - &an[j]).abs().max() < 1e-8);
        }
    }

    #[test]
    fn covariates_have_requested_correlation() {
        let mut rng = rng_from_seed(99);
        let x = correlated_covariates(200_000, 3, 0.5, &mut rng).unwrap();
        let c = x.transpose() * &x / 200_000.0;
        assert!((c[(0, 1)] - 0.5).abs() < 0.01);
        assert!((c[(0, 2)] - 0.25).abs() < 0.01);
        assert!((c[(2, 2)] - 1.0).abs() < 0.01);
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = model();
        let b = crate::param::ParamPoint::unlabeled(vec![-1.25, 0.75, 0.2]).unwrap();
        assert_eq!(m.sample(&b, 30, 5).unwrap(), m.sample(&b, 30, 5).unwrap());
        assert!(m.sample(&b, 29, 5).is_err());
    }
}
