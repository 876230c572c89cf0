//! Location families `p(y|μ) = Π_j g(y_j − μ_j)` and location regression
//! `p(y_i|β) = exp{φ(y_i − z_iᵀβ)}` built on a one-dimensional kernel.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Model, ObsDerivatives, SimRng, Structure};
use crate::cumulants::CumulantSet;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::prior::{DensityForm, PriorKind};

/// Expectations of products of `φ = log g` derivatives under `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelMoments {
    /// `E[φ'²]`
    pub d1_sq: f64,
    /// `E[φ'']`
    pub d2: f64,
    /// `E[φ''']`
    pub d3: f64,
    /// `E[φ' φ'']`
    pub d1_d2: f64,
    /// `E[φ'³]`
    pub d1_cubed: f64,
}

/// A smooth one-dimensional log-density `φ(z) = log g(z)` with derivatives.
pub trait LocationKernel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn log_g(&self, z: f64) -> f64;
    fn d1(&self, z: f64) -> f64;
    fn d2(&self, z: f64) -> f64;
    fn d3(&self, z: f64) -> f64;
    fn draw(&self, rng: &mut SimRng) -> f64;

    /// Defaults to double-exponential quadrature over the real line.
    fn moments(&self) -> KernelMoments {
        let e = |f: &dyn Fn(f64) -> f64| integrate_real_line(|z| f(z) * self.log_g(z).exp());
        KernelMoments {
            d1_sq: e(&|z| self.d1(z).powi(2)),
            d2: e(&|z| self.d2(z)),
            d3: e(&|z| self.d3(z)),
            d1_d2: e(&|z| self.d1(z) * self.d2(z)),
            d1_cubed: e(&|z| self.d1(z).powi(3)),
        }
    }
}

/// `∫_{−∞}^{∞} f` by the tanh-sinh style substitution `z = sinh(π/2 · sinh t)`.
pub fn integrate_real_line(f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / 64.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut acc = 0.0;
    for k in -(4 * 64)..=(4 * 64) {
        let t = k as f64 * h;
        let u = half_pi * t.sinh();
        let z = u.sinh();
        let w = half_pi * t.cosh() * u.cosh();
        let v = f(z);
        if v.is_finite() {
            acc += v * w;
        }
    }
    acc * h
}

/// Normal kernel with standard deviation `scale`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianKernel {
    scale: f64,
}

impl GaussianKernel {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidModel(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn standard() -> Self {
        Self { scale: 1.0 }
    }
}

impl LocationKernel for GaussianKernel {
    fn name(&self) -> String {
        "gaussian".into()
    }
    fn log_g(&self, z: f64) -> f64 {
        let s = self.scale;
        -0.5 * (z / s).powi(2) - (s * (2.0 * std::f64::consts::PI).sqrt()).ln()
    }
    fn d1(&self, z: f64) -> f64 {
        -z / (self.scale * self.scale)
    }
    fn d2(&self, _z: f64) -> f64 {
        -1.0 / (self.scale * self.scale)
    }
    fn d3(&self, _z: f64) -> f64 {
        0.0
    }
    fn draw(&self, rng: &mut SimRng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.scale * z
    }
    fn moments(&self) -> KernelMoments {
        let s2 = self.scale * self.scale;
        KernelMoments {
            d1_sq: 1.0 / s2,
            d2: -1.0 / s2,
            d3: 0.0,
            d1_d2: 0.0,
            d1_cubed: 0.0,
        }
    }
}

/// Logistic-density kernel `g(z) = e^{−z/s} / (s (1 + e^{−z/s})²)`.
#[derive(Debug, Clone, Copy)]
pub struct LogisticKernel {
    scale: f64,
}

impl LogisticKernel {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidModel(format!("kernel scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn standard() -> Self {
        Self { scale: 1.0 }
    }

    fn cdf(&self, z: f64) -> f64 {
        let u = z / self.scale;
        if u >= 0.0 {
            1.0 / (1.0 + (-u).exp())
        } else {
            let e = u.exp();
            e / (1.0 + e)
        }
    }
}

impl LocationKernel for LogisticKernel {
    fn name(&self) -> String {
        "logistic".into()
    }
    fn log_g(&self, z: f64) -> f64 {
        let u = z / self.scale;
        // −u − 2 ln(1 + e^{−u}), written symmetrically in |u|.
        -u.abs() - 2.0 * (-u.abs()).exp().ln_1p() - self.scale.ln()
    }
    fn d1(&self, z: f64) -> f64 {
        (1.0 - 2.0 * self.cdf(z)) / self.scale
    }
    fn d2(&self, z: f64) -> f64 {
        let f = self.cdf(z);
        -2.0 * f * (1.0 - f) / (self.scale * self.scale)
    }
    fn d3(&self, z: f64) -> f64 {
        let f = self.cdf(z);
        -2.0 * f * (1.0 - f) * (1.0 - 2.0 * f) / self.scale.powi(3)
    }
    fn draw(&self, rng: &mut SimRng) -> f64 {
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        self.scale * (u / (1.0 - u)).ln()
    }
    fn moments(&self) -> KernelMoments {
        let s2 = self.scale * self.scale;
        KernelMoments {
            d1_sq: 1.0 / (3.0 * s2),
            d2: -1.0 / (3.0 * s2),
            d3: 0.0,
            d1_d2: 0.0,
            d1_cubed: 0.0,
        }
    }
}

fn uniform_or_tilted(kind: PriorKind, slopes: Vec<f64>) -> Option<DensityForm> {
    match kind {
        PriorKind::Br | PriorKind::Uniform | PriorKind::Jeffreys => Some(DensityForm::Uniform),
        PriorKind::Bm | PriorKind::Mm if slopes.iter().all(|s| *s == 0.0) => Some(DensityForm::Uniform),
        PriorKind::Bm | PriorKind::Mm => Some(DensityForm::ExpLinear { slopes }),
        PriorKind::Custom => None,
    }
}

/// `d`-dimensional location family with independent kernel components.
#[derive(Debug, Clone)]
pub struct LocationModel {
    kernel: Arc<dyn LocationKernel>,
    dim: usize,
    moments: KernelMoments,
}

impl LocationModel {
    pub fn new(kernel: Arc<dyn LocationKernel>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("location dimension must be at least 1".into()));
        }
        let moments = kernel.moments();
        if !(moments.d1_sq > 0.0 && moments.d1_sq.is_finite()) {
            return Err(Error::InvalidModel("kernel has no positive finite Fisher information".into()));
        }
        Ok(Self { kernel, dim, moments })
    }

    pub fn moments(&self) -> KernelMoments {
        self.moments
    }
}

impl Model for LocationModel {
    fn name(&self) -> String {
        "location".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn labels(&self) -> Vec<String> {
        (1..=self.dim).map(|i| format!("mu{i}")).collect()
    }

    fn response_dim(&self) -> usize {
        self.dim
    }

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim && theta.iter().all(|v| v.is_finite())
    }

    fn derivatives(&self, _i: usize, y: &[f64], theta: &[f64]) -> ObsDerivatives {
        let d = self.dim;
        let z: Vec<f64> = y.iter().zip(theta).map(|(a, b)| a - b).collect();
        let mut third = Tensor3::zeros(d);
        for (j, zj) in z.iter().enumerate() {
            third.set(j, j, j, -self.kernel.d3(*zj));
        }
        ObsDerivatives {
            logdensity: z.iter().map(|v| self.kernel.log_g(*v)).sum(),
            score: DVector::from_fn(d, |j, _| -self.kernel.d1(z[j])),
            hessian: DMatrix::from_diagonal(&DVector::from_fn(d, |j, _| self.kernel.d2(z[j]))),
            third,
        }
    }

    fn logdensity(&self, _i: usize, y: &[f64], theta: &[f64]) -> f64 {
        y.iter().zip(theta).map(|(a, b)| self.kernel.log_g(a - b)).sum()
    }

    fn analytic_cumulants(&self, _theta: &[f64]) -> Option<Result<CumulantSet>> {
        let d = self.dim;
        let m = self.moments;
        let diag = |v: f64| DMatrix::from_diagonal_element(d, d, v);
        let cube = |v: f64| Tensor3::from_fn(d, |a, b, c| if a == b && b == c { v } else { 0.0 });
        Some(CumulantSet::from_parts(
            diag(m.d1_sq),
            diag(m.d2),
            cube(-m.d3),
            cube(-m.d1_d2),
            cube(-m.d1_cubed),
        ))
    }

    fn fisher_derivative(&self, _theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.dim, self.dim); self.dim])
    }

    fn structure(&self) -> Structure {
        Structure {
            one_dim_iid: self.dim == 1,
            condition_c: false,
            constant_fisher: true,
        }
    }

    fn draw(&self, _i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        theta.iter().map(|mu| mu + self.kernel.draw(rng)).collect()
    }

    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let n = data.len().max(1) as f64;
        (0..self.dim)
            .map(|j| (0..data.len()).map(|i| data.observation(i)[j]).sum::<f64>() / n)
            .collect()
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        let m = self.moments;
        // −κ^{jj}(½κ_{jjj} + κ_{j,jj}) and −½κ^{jj}κ_{jjj}, constant in μ.
        let bm = -(0.5 * -m.d3 + -m.d1_d2) / m.d1_sq;
        let mm = -0.5 * -m.d3 / m.d1_sq;
        let slope = if kind == PriorKind::Bm { bm } else { mm };
        uniform_or_tilted(kind, vec![slope; self.dim])
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// Linear regression `Y_i = z_iᵀβ + ε_i` with `ε_i` drawn from the kernel.
#[derive(Debug, Clone)]
pub struct LocationRegression {
    kernel: Arc<dyn LocationKernel>,
    design: DMatrix<f64>,
    moments: KernelMoments,
}

impl LocationRegression {
    pub fn new(kernel: Arc<dyn LocationKernel>, design: DMatrix<f64>) -> Result<Self> {
        let gram = design.transpose() * &design;
        if design.nrows() == 0 || gram.clone().cholesky().is_none() {
            return Err(Error::InvalidModel("design matrix is rank deficient (ZᵀZ singular)".into()));
        }
        let moments = kernel.moments();
        if !(moments.d1_sq > 0.0 && moments.d1_sq.is_finite()) {
            return Err(Error::InvalidModel("kernel has no positive finite Fisher information".into()));
        }
        Ok(Self { kernel, design, moments })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// `c = ∫ φ'' e^φ`; the full Fisher information is `−c ZᵀZ`.
    pub fn information_constant(&self) -> f64 {
        self.moments.d2
    }

    fn residual(&self, i: usize, y: &[f64], beta: &[f64]) -> f64 {
        y[0] - self.design.row(i).iter().zip(beta).map(|(z, b)| z * b).sum::<f64>()
    }

    fn design_moments(&self) -> (DMatrix<f64>, Tensor3) {
        let (n, d) = self.design.shape();
        let m2 = self.design.transpose() * &self.design / n as f64;
        let mut m3 = Tensor3::zeros(d);
        for i in 0..n {
            let z = self.design.row(i);
            for r in 0..d {
                for s in 0..d {
                    for t in 0..d {
                        m3.add_at(r, s, t, z[r] * z[s] * z[t] / n as f64);
                    }
                }
            }
        }
        (m2, m3)
    }
}

impl Model for LocationRegression {
    fn name(&self) -> String {
        "linreg".into()
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
        let e = self.residual(i, y, theta);
        let z = self.design.row(i);
        let (g1, g2, g3) = (self.kernel.d1(e), self.kernel.d2(e), self.kernel.d3(e));
        ObsDerivatives {
            logdensity: self.kernel.log_g(e),
            score: DVector::from_fn(d, |r, _| -g1 * z[r]),
            hessian: DMatrix::from_fn(d, d, |r, s| g2 * z[r] * z[s]),
            third: Tensor3::from_fn(d, |r, s, t| -g3 * z[r] * z[s] * z[t]),
        }
    }

    fn logdensity(&self, i: usize, y: &[f64], theta: &[f64]) -> f64 {
        self.kernel.log_g(self.residual(i, y, theta))
    }

    fn analytic_cumulants(&self, _theta: &[f64]) -> Option<Result<CumulantSet>> {
        let m = self.moments;
        let (m2, m3) = self.design_moments();
        Some(CumulantSet::from_parts(
            &m2 * m.d1_sq,
            &m2 * m.d2,
            m3.scale(-m.d3),
            m3.scale(-m.d1_d2),
            m3.scale(-m.d1_cubed),
        ))
    }

    fn fisher_derivative(&self, _theta: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let d = self.dim();
        Some(vec![DMatrix::zeros(d, d); d])
    }

    fn structure(&self) -> Structure {
        Structure {
            one_dim_iid: false,
            condition_c: false,
            constant_fisher: true,
        }
    }

    fn draw(&self, i: usize, theta: &[f64], rng: &mut SimRng) -> Vec<f64> {
        let mean: f64 = self.design.row(i).iter().zip(theta).map(|(z, b)| z * b).sum();
        vec![mean + self.kernel.draw(rng)]
    }

    fn design_annotations(&self, _n: usize) -> (Option<DMatrix<f64>>, Option<Vec<usize>>) {
        (Some(self.design.clone()), None)
    }

    fn initial_guess(&self, data: &Dataset) -> Vec<f64> {
        let y = DVector::from_column_slice(data.responses());
        let gram = self.design.transpose() * &self.design;
        match gram.cholesky() {
            Some(ch) => ch.solve(&(self.design.transpose() * y)).iter().copied().collect(),
            None => vec![0.0; self.dim()],
        }
    }

    fn closed_form_prior(&self, kind: PriorKind) -> Option<DensityForm> {
        let (m2, m3) = self.design_moments();
        let inv = crate::linalg::invert(&(m2 * self.moments.d1_sq))?;
        let d = self.dim();
        let m = self.moments;
        let slopes = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            (0..d)
                .map(|j| {
                    let mut acc = 0.0;
                    for r in 0..d {
                        for s in 0..d {
                            acc += inv[(r, s)] * f(m3.get(r, s, j));
                        }
                    }
                    acc
                })
                .collect()
        };
        let bm = slopes(&|t| -(0.5 * -m.d3 * t + -m.d1_d2 * t));
        let mm = slopes(&|t| -0.5 * -m.d3 * t);
        uniform_or_tilted(kind, if kind == PriorKind::Bm { bm } else { mm })
    }

    fn fisher_label(&self) -> String {
        "-c ZᵀZ".into()
    }

    fn reference_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rng_from_seed;
    use crate::model::test_support::assert_derivatives;

    #[test]
    fn derivatives_match_finite_differences() {
        let g = LocationModel::new(Arc::new(GaussianKernel::standard()), 2).unwrap();
        assert_derivatives(&g, &[-2.0, -2.0], &[2.0, 2.0]);
        let l = LocationModel::new(Arc::new(LogisticKernel::new(1.5).unwrap()), 3).unwrap();
        assert_derivatives(&l, &[-2.0, -2.0, -2.0], &[2.0, 2.0, 2.0]);
        let mut rng = rng_from_seed(4);
        let z = crate::model::correlated_covariates(12, 2, 0.3, &mut rng).unwrap();
        let r = LocationRegression::new(Arc::new(LogisticKernel::standard()), z).unwrap();
        assert_derivatives(&r, &[-2.0, -2.0], &[2.0, 2.0]);
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        #[derive(Debug)]
        struct Quad<K>(K);
        impl<K: LocationKernel> LocationKernel for Quad<K> {
            fn name(&self) -> String {
                self.0.name()
            }
            fn log_g(&self, z: f64) -> f64 {
                self.0.log_g(z)
            }
            fn d1(&self, z: f64) -> f64 {
                self.0.d1(z)
            }
            fn d2(&self, z: f64) -> f64 {
                self.0.d2(z)
            }
            fn d3(&self, z: f64) -> f64 {
                self.0.d3(z)
            }
            fn draw(&self, rng: &mut SimRng) -> f64 {
                self.0.draw(rng)
            }
        }
        for (exact, quad) in [
            (GaussianKernel::new(0.7).unwrap().moments(), Quad(GaussianKernel::new(0.7).unwrap()).moments()),
            (LogisticKernel::new(1.3).unwrap().moments(), Quad(LogisticKernel::new(1.3).unwrap()).moments()),
        ] {
            for (a, b) in [
                (exact.d1_sq, quad.d1_sq),
                (exact.d2, quad.d2),
                (exact.d3, quad.d3),
                (exact.d1_d2, quad.d1_d2),
                (exact.d1_cubed, quad.d1_cubed),
            ] {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn gaussian_fisher_is_constant() {
        let m = LocationModel::new(Arc::new(GaussianKernel::standard()), 3).unwrap();
        let mut rng = rng_from_seed(1);
        let f0 = m.fisher(&[0.0; 3]).unwrap();
        for _ in 0..20 {
            let mu = crate::model::test_support::random_point(&mut rng, &[-5.0; 3], &[5.0; 3]);
            assert!((m.fisher(&mu).unwrap() - &f0).abs().max() < 1e-10);
        }
    }

    #[test]
    fn gaussian_regression_information_is_gram() {
        let mut rng = rng_from_seed(8);
        let z = crate::model::correlated_covariates(15, 3, 0.2, &mut rng).unwrap();
        let r = LocationRegression::new(Arc::new(GaussianKernel::standard()), z.clone()).unwrap();
        assert_eq!(r.information_constant(), -1.0);
        let full = r.fisher(&[0.3, 0.1, -2.0]).unwrap() * 15.0;
        assert!((full - z.transpose() * &z).abs().max() < 1e-10);
    }

    #[test]
    fn invalid_kernels_are_rejected() {
        assert!(GaussianKernel::new(0.0).is_err());
        assert!(LogisticKernel::new(-1.0).is_err());
        assert!(LocationModel::new(Arc::new(GaussianKernel::standard()), 0).is_err());
    }
}
