//! Prior fields: the bias-reduction (BR), Firth (BM), moment-matching (MM),
//! Jeffreys and uniform priors as log-density gradients, with closed-form
//! densities where one is known.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cumulants::{analytic_cumulants, CumulantSet};
use crate::error::{Error, Result};
use crate::linalg::{invert, log_det_spd, max_abs_matrix};
use crate::model::{check_theta, Model};
use crate::param::ParamPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Br,
    Bm,
    Mm,
    Jeffreys,
    Uniform,
    Custom,
}

impl PriorKind {
    /// Kinds addressable by name.
    pub const NAMED: [PriorKind; 5] = [
        PriorKind::Br,
        PriorKind::Bm,
        PriorKind::Mm,
        PriorKind::Jeffreys,
        PriorKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Br => "br",
            PriorKind::Bm => "bm",
            PriorKind::Mm => "mm",
            PriorKind::Jeffreys => "jeffreys",
            PriorKind::Uniform => "uniform",
            PriorKind::Custom => "custom",
        }
    }

    pub fn valid_names() -> String {
        Self::NAMED.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PriorKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::NAMED
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown prior `{s}` (valid: {})", Self::valid_names()))
    }
}

/// Unnormalized closed-form prior densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DensityForm {
    /// `π ∝ 1`.
    Uniform,
    /// `π ∝ θ_index^exponent`.
    Power { index: usize, exponent: f64 },
    /// `π ∝ θ_index^exponent · exp(−rate·θ_index)`.
    GammaKernel { index: usize, exponent: f64, rate: f64 },
    /// `π ∝ exp(Σ_j slopes_j θ_j)`.
    ExpLinear { slopes: Vec<f64> },
    /// `π ∝ |I_full(θ)|^power` with the full-design Fisher information.
    LogDetFisher { power: f64 },
}

fn fmt_num(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl DensityForm {
    /// Human-readable formula using the model's labels.
    pub fn render(&self, model: &dyn Model) -> String {
        let labels = model.labels();
        match self {
            DensityForm::Uniform => "π ∝ 1".into(),
            DensityForm::Power { index, exponent } => {
                format!("π ∝ {}^({})", labels[*index], fmt_num(*exponent))
            }
            DensityForm::GammaKernel { index, exponent, rate } => format!(
                "π ∝ {l}^({}) exp(-{} {l})",
                fmt_num(*exponent),
                fmt_num(*rate),
                l = labels[*index]
            ),
            DensityForm::ExpLinear { slopes } => {
                let terms: Vec<String> = slopes
                    .iter()
                    .zip(&labels)
                    .filter(|(s, _)| **s != 0.0)
                    .map(|(s, l)| format!("{} {l}", fmt_num(*s)))
                    .collect();
                format!("π ∝ exp({})", terms.join(" + "))
            }
            DensityForm::LogDetFisher { power } if *power == 1.0 => format!("π ∝ |{}|", model.fisher_label()),
            DensityForm::LogDetFisher { power } => {
                format!("π ∝ |{}|^({})", model.fisher_label(), fmt_num(*power))
            }
        }
    }

    pub fn log_density(&self, model: &dyn Model, theta: &[f64]) -> Result<f64> {
        Ok(match self {
            DensityForm::Uniform => 0.0,
            DensityForm::Power { index, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    exponent * theta[*index].ln()
                }
            }
            DensityForm::GammaKernel { index, exponent, rate } => {
                let t = theta[*index];
                let base = if *exponent == 0.0 { 0.0 } else { exponent * t.ln() };
                base - rate * t
            }
            DensityForm::ExpLinear { slopes } => slopes.iter().zip(theta).map(|(s, t)| s * t).sum(),
            DensityForm::LogDetFisher { power } => {
                let full = model.fisher(theta)? * model.fisher_scale();
                power * log_det_spd(&full)?
            }
        })
    }

    pub fn log_grad(&self, model: &dyn Model, theta: &[f64]) -> Result<DVector<f64>> {
        let d = theta.len();
        let mut g = DVector::zeros(d);
        match self {
            DensityForm::Uniform => {}
            DensityForm::Power { index, exponent } => g[*index] = exponent / theta[*index],
            DensityForm::GammaKernel { index, exponent, rate } => {
                g[*index] = exponent / theta[*index] - rate
            }
            DensityForm::ExpLinear { slopes } => g.copy_from_slice(slopes),
            DensityForm::LogDetFisher { power } => {
                g = log_det_fisher_grad(model, theta)? * *power;
            }
        }
        Ok(g)
    }
}

/// `∂_j log|I(θ)| = tr(I⁻¹ ∂_j I)`, analytic when the model supplies `∂_j I`
/// and by central differences of `log|I|` otherwise.
fn log_det_fisher_grad(model: &dyn Model, theta: &[f64]) -> Result<DVector<f64>> {
    let d = theta.len();
    let info = model.fisher(theta)?;
    if let Some(dinfo) = model.fisher_derivative(theta) {
        let inv = invert(&info).ok_or(Error::SingularInformation)?;
        return Ok(DVector::from_fn(d, |j, _| (&inv * &dinfo[j]).trace()));
    }
    let mut g = DVector::zeros(d);
    for j in 0..d {
        let h = 1e-5 * theta[j].abs().max(1.0);
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let lp = log_det_spd(&model.fisher(&plus)?)?;
        let lm = log_det_spd(&model.fisher(&minus)?)?;
        g[j] = (lp - lm) / (2.0 * h);
    }
    Ok(g)
}

fn br_from(c: &CumulantSet) -> DVector<f64> {
    -c.contract_inverse(|r, s, j| c.kappa3_pure.get(r, s, j) + c.kappa3_cross.get(r, j, s))
}

fn bm_from(c: &CumulantSet) -> DVector<f64> {
    -c.contract_inverse(|r, s, j| 0.5 * c.kappa3_pure.get(j, r, s) + c.kappa3_cross.get(r, j, s))
}

fn mm_from(c: &CumulantSet) -> DVector<f64> {
    c.contract_inverse(|r, s, j| c.kappa3_pure.get(j, r, s)) * -0.5
}

/// The gradient field of `kind` computed from cumulants, for the three
/// kinds defined through them.
pub fn cumulant_log_grad(kind: PriorKind, c: &CumulantSet) -> Option<DVector<f64>> {
    match kind {
        PriorKind::Br => Some(br_from(c)),
        PriorKind::Bm => Some(bm_from(c)),
        PriorKind::Mm => Some(mm_from(c)),
        _ => None,
    }
}

/// `g_j = −Σ κ^{r,s}(κ_{rsj} + κ_{r,js})`.
pub fn br_log_grad<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<DVector<f64>> {
    Ok(br_from(&analytic_cumulants(model, theta)?))
}

/// `g_j = −Σ κ^{r,s}(½κ_{jrs} + κ_{r,js})`.
pub fn bm_log_grad<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<DVector<f64>> {
    Ok(bm_from(&analytic_cumulants(model, theta)?))
}

/// `g_j = −½ Σ κ_{jrs} κ^{r,s}`.
pub fn mm_log_grad<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<DVector<f64>> {
    Ok(mm_from(&analytic_cumulants(model, theta)?))
}

/// `br − bm − mm`, computed from one cumulant evaluation.
pub fn factorization_residual<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<DVector<f64>> {
    let c = analytic_cumulants(model, theta)?;
    Ok(br_from(&c) - bm_from(&c) - mm_from(&c))
}

/// `½ log|I(θ)|` with the full-design information.
pub fn jeffreys_log_density<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<f64> {
    check_theta(model, theta.values())?;
    let full = model.fisher(theta.values())? * model.fisher_scale();
    Ok(0.5 * log_det_spd(&full)?)
}

/// Antisymmetric part `∂_k g_j − ∂_j g_k` of the finite-difference Jacobian
/// of the BR gradient field.
pub fn integrability_check<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<DMatrix<f64>> {
    let d = theta.dim();
    let mut jac = DMatrix::zeros(d, d);
    for k in 0..d {
        let h = 1e-5 * theta.values()[k].abs().max(1.0);
        let mut plus = theta.values().to_vec();
        let mut minus = plus.clone();
        plus[k] += h;
        minus[k] -= h;
        let gp = br_log_grad(model, &theta.with_values(plus)?)?;
        let gm = br_log_grad(model, &theta.with_values(minus)?)?;
        jac.set_column(k, &((gp - gm) / (2.0 * h)));
    }
    Ok(&jac - jac.transpose())
}

/// Tolerance for [`integrability_check`] before a density is reconstructed.
pub const INTEGRABILITY_TOLERANCE: f64 = 1e-3;

type GradFn = dyn Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync;
type DensityFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;

#[derive(Clone)]
enum Source {
    Closed(DensityForm),
    Cumulant,
    Reconstructed { anchor: Vec<f64> },
    Custom {
        grad: Arc<GradFn>,
        density: Option<Arc<DensityFn>>,
    },
}

/// A prior as a log-density gradient field with an optional log-density.
#[derive(Clone)]
pub struct PriorField {
    kind: PriorKind,
    model: Arc<dyn Model>,
    source: Source,
    closed_form: Option<String>,
}

impl fmt::Debug for PriorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PriorField")
            .field("kind", &self.kind)
            .field("model", &self.model.name())
            .field("closed_form", &self.closed_form)
            .finish()
    }
}

// Nodes and weights of 10-point Gauss–Legendre on [−1, 1].
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// `∫_0^1 g(a + t(b − a))·(b − a) dt` with composite Gauss–Legendre.
fn line_integral(grad: impl Fn(&[f64]) -> Result<DVector<f64>>, a: &[f64], b: &[f64], panels: usize) -> Result<f64> {
    let delta: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mut total = 0.0;
    let width = 1.0 / panels as f64;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for t in [mid - 0.5 * width * x, mid + 0.5 * width * x] {
                let pt: Vec<f64> = a.iter().zip(&delta).map(|(ai, di)| ai + t * di).collect();
                let g = grad(&pt)?;
                let dot: f64 = g.iter().zip(&delta).map(|(gi, di)| gi * di).sum();
                total += 0.5 * width * w * dot;
            }
        }
    }
    Ok(total)
}

impl PriorField {
    /// A prior with a known closed-form density.
    pub fn closed(model: Arc<dyn Model>, kind: PriorKind, form: DensityForm) -> Self {
        let closed_form = Some(form.render(model.as_ref()));
        Self {
            kind,
            model,
            source: Source::Closed(form),
            closed_form,
        }
    }

    /// A user-supplied field.
    pub fn custom(
        model: Arc<dyn Model>,
        grad: impl Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync + 'static,
        density: Option<Arc<DensityFn>>,
        formula: Option<String>,
    ) -> Self {
        Self {
            kind: PriorKind::Custom,
            model,
            source: Source::Custom {
                grad: Arc::new(grad),
                density,
            },
            closed_form: formula,
        }
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn model(&self) -> &Arc<dyn Model> {
        &self.model
    }

    pub fn closed_form(&self) -> Option<&str> {
        self.closed_form.as_deref()
    }

    pub fn form(&self) -> Option<&DensityForm> {
        match &self.source {
            Source::Closed(f) => Some(f),
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        match &self.source {
            Source::Closed(_) | Source::Reconstructed { .. } => true,
            Source::Cumulant => false,
            Source::Custom { density, .. } => density.is_some(),
        }
    }

    /// `∇ log π(θ)`.
    pub fn log_grad(&self, theta: &[f64]) -> Result<DVector<f64>> {
        check_theta(self.model.as_ref(), theta)?;
        match &self.source {
            Source::Closed(form) => form.log_grad(self.model.as_ref(), theta),
            Source::Cumulant | Source::Reconstructed { .. } => {
                let c = self
                    .model
                    .analytic_cumulants(theta)
                    .ok_or_else(|| Error::NoAnalyticCumulants(self.model.name()))??;
                Ok(cumulant_log_grad(self.kind, &c).expect("cumulant source is only built for br/bm/mm"))
            }
            Source::Custom { grad, .. } => grad(theta),
        }
    }

    /// Unnormalized `log π(θ)`, or `None` when only the gradient is known.
    pub fn log_density(&self, theta: &[f64]) -> Option<Result<f64>> {
        if let Err(e) = check_theta(self.model.as_ref(), theta) {
            return Some(Err(e));
        }
        match &self.source {
            Source::Closed(form) => Some(form.log_density(self.model.as_ref(), theta)),
            Source::Cumulant => None,
            Source::Reconstructed { anchor } => Some(self.axis_path_integral(anchor, theta)),
            Source::Custom { density, .. } => density.as_ref().map(|f| f(theta)),
        }
    }

    /// Integrates the gradient along axis-parallel segments from `anchor`
    /// to `theta`, one coordinate at a time in index order.
    fn axis_path_integral(&self, anchor: &[f64], theta: &[f64]) -> Result<f64> {
        let mut here = anchor.to_vec();
        let mut total = 0.0;
        for j in 0..theta.len() {
            let mut next = here.clone();
            next[j] = theta[j];
            if next[j] != here[j] {
                total += line_integral(|p| self.log_grad(p), &here, &next, 8)?;
            }
            here = next;
        }
        Ok(total)
    }

    /// `log π(to) − log π(from)`; uses the density when present and otherwise
    /// integrates the gradient along the straight segment.
    pub fn log_density_difference(&self, from: &[f64], to: &[f64]) -> Result<f64> {
        match &self.source {
            Source::Reconstructed { .. } | Source::Cumulant => line_integral(|p| self.log_grad(p), from, to, 1),
            _ => match (self.log_density(to), self.log_density(from)) {
                (Some(a), Some(b)) => Ok(a? - b?),
                _ => line_integral(|p| self.log_grad(p), from, to, 1),
            },
        }
    }
}

/// Closed-form BR prior selected from the model's declared structure:
/// constant Fisher gives the uniform prior, condition (C) or a single
/// i.i.d. parameter gives `|I(θ)|`.
pub fn closed_form_br(model: Arc<dyn Model>) -> Result<PriorField> {
    let s = model.structure();
    let form = if s.constant_fisher {
        DensityForm::Uniform
    } else if s.condition_c || s.one_dim_iid {
        DensityForm::LogDetFisher { power: 1.0 }
    } else {
        return Err(Error::UnsupportedClosedForm(model.name()));
    };
    Ok(PriorField::closed(model, PriorKind::Br, form))
}

/// The named prior for a model, preferring closed forms.
pub fn prior_field(model: Arc<dyn Model>, kind: PriorKind) -> Result<PriorField> {
    if let Some(form) = model.closed_form_prior(kind) {
        return Ok(PriorField::closed(model, kind, form));
    }
    match kind {
        PriorKind::Uniform => Ok(PriorField::closed(model, kind, DensityForm::Uniform)),
        PriorKind::Jeffreys => Ok(PriorField::closed(model, kind, DensityForm::LogDetFisher { power: 0.5 })),
        PriorKind::Br if closed_form_br(model.clone()).is_ok() => closed_form_br(model),
        PriorKind::Br | PriorKind::Bm | PriorKind::Mm => Ok(PriorField {
            kind,
            model,
            source: Source::Cumulant,
            closed_form: None,
        }),
        PriorKind::Custom => Err(Error::Config("custom priors must be built with PriorField::custom".into())),
    }
}

/// A gradient-defined prior whose log-density is reconstructed by path
/// integration from `anchor`, after the BR field passes the integrability
/// check there.
pub fn reconstructed_field(model: Arc<dyn Model>, kind: PriorKind, anchor: &ParamPoint) -> Result<PriorField> {
    if !matches!(kind, PriorKind::Br | PriorKind::Bm | PriorKind::Mm) {
        return Err(Error::Config(format!("prior `{kind}` is not defined through cumulants")));
    }
    let residual = max_abs_matrix(&integrability_check(model.as_ref(), anchor)?);
    if residual > INTEGRABILITY_TOLERANCE {
        return Err(Error::NonIntegrable {
            residual,
            tolerance: INTEGRABILITY_TOLERANCE,
        });
    }
    Ok(PriorField {
        kind,
        model,
        source: Source::Reconstructed {
            anchor: anchor.values().to_vec(),
        },
        closed_form: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::random_point;
    use crate::model::{
        rng_from_seed, CanonicalBernoulli, ExponentialRate, GaussianKernel, Gumbel, LocationModel, LogisticModel,
        NormalStrata, Poisson,
    };

    fn p(v: &[f64]) -> ParamPoint {
        ParamPoint::unlabeled(v.to_vec()).unwrap()
    }

    fn close(a: &DVector<f64>, b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn exponential_gradients() {
        let m = ExponentialRate::model();
        close(&br_log_grad(&m, &p(&[3.0])).unwrap(), &[-2.0 / 3.0], 1e-14);
        close(&bm_log_grad(&m, &p(&[3.0])).unwrap(), &[-1.0 / 3.0], 1e-14);
        close(&mm_log_grad(&m, &p(&[3.0])).unwrap(), &[-1.0 / 3.0], 1e-14);
        close(&factorization_residual(&m, &p(&[3.0])).unwrap(), &[0.0], 1e-12);
    }

    #[test]
    fn gumbel_triple() {
        let m = Gumbel::new(1.0).unwrap();
        close(&br_log_grad(&m, &p(&[5.0])).unwrap(), &[0.0], 1e-14);
        close(&bm_log_grad(&m, &p(&[5.0])).unwrap(), &[-0.5], 1e-14);
        close(&mm_log_grad(&m, &p(&[5.0])).unwrap(), &[0.5], 1e-14);
    }

    #[test]
    fn normal_br_field() {
        let m = NormalStrata::iid();
        close(&br_log_grad(&m, &p(&[0.4, 2.0])).unwrap(), &[0.0, -1.0], 1e-14);
        let anti = integrability_check(&m, &p(&[0.4, 2.0])).unwrap();
        assert!(max_abs_matrix(&anti) < 5e-5);
    }

    #[test]
    fn jeffreys_logistic_identity_design() {
        let m = LogisticModel::new(DMatrix::identity(3, 3)).unwrap();
        let v = jeffreys_log_density(&m, &p(&[0.0, 0.0, 0.0])).unwrap();
        assert!((v + 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn jeffreys_normal_is_minus_three_halves_log_xi() {
        let m = NormalStrata::iid();
        let a = jeffreys_log_density(&m, &p(&[0.0, 1.0])).unwrap();
        let b = jeffreys_log_density(&m, &p(&[3.0, 4.0])).unwrap();
        assert!((b - a + 1.5 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_dispatch() {
        let loc: Arc<dyn Model> = Arc::new(LocationModel::new(Arc::new(GaussianKernel::standard()), 2).unwrap());
        assert_eq!(closed_form_br(loc).unwrap().form(), Some(&DensityForm::Uniform));
        let exp: Arc<dyn Model> = Arc::new(ExponentialRate::model());
        assert_eq!(
            closed_form_br(exp).unwrap().form(),
            Some(&DensityForm::LogDetFisher { power: 1.0 })
        );
        let normal: Arc<dyn Model> = Arc::new(NormalStrata::iid());
        assert!(matches!(closed_form_br(normal), Err(Error::UnsupportedClosedForm(_))));
    }

    #[test]
    fn densities_match_gradients() {
        let mut rng = rng_from_seed(3);
        let models: Vec<(Arc<dyn Model>, Vec<f64>, Vec<f64>)> = vec![
            (Arc::new(ExponentialRate::model()), vec![0.2], vec![5.0]),
            (Arc::new(Poisson), vec![0.2], vec![5.0]),
            (Arc::new(Gumbel::new(2.0).unwrap()), vec![-3.0], vec![3.0]),
            (Arc::new(NormalStrata::new(vec![2, 3]).unwrap()), vec![-1.0, -1.0, 0.3], vec![1.0, 1.0, 3.0]),
            (Arc::new(CanonicalBernoulli::model()), vec![-2.0], vec![2.0]),
        ];
        for (m, lo, hi) in models {
            for kind in PriorKind::NAMED {
                let f = prior_field(m.clone(), kind).unwrap();
                assert!(f.has_density(), "{} {kind}", m.name());
                for _ in 0..10 {
                    let th = random_point(&mut rng, &lo, &hi);
                    let g = f.log_grad(&th).unwrap();
                    for j in 0..th.len() {
                        let h = 1e-5 * th[j].abs().max(1.0);
                        let mut a = th.clone();
                        let mut b = th.clone();
                        a[j] += h;
                        b[j] -= h;
                        let fd = (f.log_density(&a).unwrap().unwrap() - f.log_density(&b).unwrap().unwrap()) / (2.0 * h);
                        assert!((fd - g[j]).abs() / (1.0 + g[j].abs()) < 1e-6, "{} {kind}: {fd} vs {}", m.name(), g[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn reconstructed_density_recovers_normal_br() {
        let m: Arc<dyn Model> = Arc::new(NormalStrata::iid());
        let f = reconstructed_field(m, PriorKind::Br, &p(&[0.0, 1.0])).unwrap();
        let v = f.log_density(&[2.0, 3.0]).unwrap().unwrap();
        assert!((v + 2.0 * 3f64.ln()).abs() < 1e-10, "{v}");
        let diff = f.log_density_difference(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert!((diff + 2.0 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn names_round_trip() {
        for k in PriorKind::NAMED {
            assert_eq!(k.name().parse::<PriorKind>().unwrap(), k);
        }
        let err = "firth".parse::<PriorKind>().unwrap_err();
        assert!(err.contains("jeffreys"));
    }
}
