//! Per-observation cumulant arrays of the log-likelihood derivatives, their
//! Monte Carlo estimates, Bartlett residuals, information-geometry
//! coefficients, and observed-data derivative bundles.
//!
//! Index conventions: `kappa3_cross[(r, s, t)]` is `κ_{r,st}`, the first index
//! belonging to the score and the last two to the Hessian. Every array is the
//! expectation divided by the number of observations, so fixed-design models
//! average over their design rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{invert, invert_spd, max_abs_matrix, row_major, Tensor3};
use crate::model::{check_data, check_theta, rng_from_seed, Model};
use crate::param::ParamPoint;

/// The five cumulant arrays at one θ, together with the Fisher information
/// and the inverse of `κ_{r,s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantSet {
    /// `κ_{r,s}`.
    #[serde(with = "row_major")]
    pub kappa2_cross: DMatrix<f64>,
    /// `κ_{rs}`.
    #[serde(with = "row_major")]
    pub kappa2_hess: DMatrix<f64>,
    /// `κ_{rst}`.
    pub kappa3_pure: Tensor3,
    /// `κ_{r,st}`.
    pub kappa3_cross: Tensor3,
    /// `κ_{r,s,t}`.
    pub kappa3_score: Tensor3,
    /// `−κ_{rs}`.
    #[serde(with = "row_major")]
    pub fisher: DMatrix<f64>,
    /// `κ^{r,s}`.
    #[serde(with = "row_major")]
    pub fisher_inv: DMatrix<f64>,
}

impl CumulantSet {
    /// Assembles a set from raw arrays; fails when `κ_{r,s}` is not positive definite.
    pub fn from_parts(
        kappa2_cross: DMatrix<f64>,
        kappa2_hess: DMatrix<f64>,
        kappa3_pure: Tensor3,
        kappa3_cross: Tensor3,
        kappa3_score: Tensor3,
    ) -> Result<Self> {
        let d = kappa2_cross.nrows();
        for (got, what) in [
            (kappa2_cross.ncols(), "kappa2_cross"),
            (kappa2_hess.nrows(), "kappa2_hess"),
            (kappa3_pure.dim(), "kappa3_pure"),
            (kappa3_cross.dim(), "kappa3_cross"),
            (kappa3_score.dim(), "kappa3_score"),
        ] {
            if got != d {
                return Err(Error::InvalidModel(format!("{what} has dimension {got}, expected {d}")));
            }
        }
        let fisher_inv = invert_spd(&kappa2_cross)?;
        Ok(Self {
            fisher: -&kappa2_hess,
            kappa2_cross,
            kappa2_hess,
            kappa3_pure,
            kappa3_cross,
            kappa3_score,
            fisher_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.kappa2_cross.nrows()
    }

    /// Worst violation of the symmetry invariants.
    pub fn symmetry_defect(&self) -> f64 {
        let m2 = |m: &DMatrix<f64>| max_abs_matrix(&(m - m.transpose()));
        m2(&self.kappa2_cross)
            .max(m2(&self.kappa2_hess))
            .max(self.kappa3_pure.asymmetry())
            .max(self.kappa3_score.asymmetry())
            .max(self.kappa3_cross.tail_asymmetry())
    }

    /// `κ^{r,s}` summed against `T_{r s j}` over `(r, s)` for every `j`,
    /// with `T` supplied as a function of `(r, s, j)`.
    pub fn contract_inverse(&self, f: impl Fn(usize, usize, usize) -> f64) -> DVector<f64> {
        let d = self.dim();
        DVector::from_fn(d, |j, _| {
            let mut acc = 0.0;
            for r in 0..d {
                for s in 0..d {
                    acc += self.fisher_inv[(r, s)] * f(r, s, j);
                }
            }
            acc
        })
    }
}

/// Exact per-observation cumulants supplied by the model.
pub fn analytic_cumulants<M: Model + ?Sized>(model: &M, theta: &ParamPoint) -> Result<CumulantSet> {
    check_theta(model, theta.values())?;
    model
        .analytic_cumulants(theta.values())
        .ok_or_else(|| Error::NoAnalyticCumulants(model.name()))?
}

/// Monte Carlo cumulant estimates with per-entry standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McCumulants {
    pub draws: usize,
    pub seed: u64,
    pub estimate: CumulantSet,
    #[serde(with = "row_major")]
    pub se_kappa2_cross: DMatrix<f64>,
    #[serde(with = "row_major")]
    pub se_kappa2_hess: DMatrix<f64>,
    pub se_kappa3_pure: Tensor3,
    pub se_kappa3_cross: Tensor3,
    pub se_kappa3_score: Tensor3,
    /// Per-draw estimate of the second- and third-order Bartlett residuals.
    #[serde(with = "row_major")]
    pub bartlett2: DMatrix<f64>,
    pub bartlett3: Tensor3,
    /// Standard errors of the residual estimates, from per-draw residual values.
    #[serde(with = "row_major")]
    pub se_bartlett2: DMatrix<f64>,
    pub se_bartlett3: Tensor3,
}

/// Welford running mean and centred second moment for a block of entries.
/// Entries that are constant across draws come out exact.
struct Moments {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: f64,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            mean: vec![0.0; len],
            m2: vec![0.0; len],
            count: 0.0,
        }
    }

    /// Starts a new draw; every entry must then be pushed exactly once.
    #[inline]
    fn begin(&mut self) {
        self.count += 1.0;
    }

    #[inline]
    fn push(&mut self, idx: usize, v: f64) {
        let delta = v - self.mean[idx];
        self.mean[idx] += delta / self.count;
        self.m2[idx] += delta * (v - self.mean[idx]);
    }

    /// Means and standard errors of the means.
    fn finish(self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count;
        let se = self.m2.iter().map(|m2| (m2.max(0.0) / (n - 1.0) / n).sqrt()).collect();
        (self.mean, se)
    }
}

/// Monte Carlo estimates of every cumulant from single-observation draws.
///
/// Draw `t` uses design row `t mod rows` so fixed-design models are averaged
/// over their rows; i.i.d. models use row 0 throughout. Standard errors come
/// from the per-draw sample variance of each averaged product.
pub fn mc_cumulants<M: Model + ?Sized>(
    model: &M,
    theta: &ParamPoint,
    draws: usize,
    seed: u64,
) -> Result<McCumulants> {
    if draws < 1000 {
        return Err(Error::Config(format!("mc_cumulants needs at least 1000 draws, got {draws}")));
    }
    let th = theta.values();
    check_theta(model, th)?;
    let d = model.dim();
    let (d2, d3) = (d * d, d * d * d);
    let rows = model.design_rows().unwrap_or(1);
    let mut rng = rng_from_seed(seed);

    let mut cross2 = Moments::new(d2);
    let mut hess2 = Moments::new(d2);
    let mut pure3 = Moments::new(d3);
    let mut cross3 = Moments::new(d3);
    let mut score3 = Moments::new(d3);
    let mut bart2 = Moments::new(d2);
    let mut bart3 = Moments::new(d3);

    for t in 0..draws {
        let i = t % rows;
        let y = model.draw(i, th, &mut rng);
        let der = model.derivatives(i, &y, th);
        for m in [&mut cross2, &mut hess2, &mut pure3, &mut cross3, &mut score3, &mut bart2, &mut bart3] {
            m.begin();
        }
        let (g, h, k) = (&der.score, &der.hessian, &der.third);
        for r in 0..d {
            for s in 0..d {
                let rs = r * d + s;
                let gg = g[r] * g[s];
                cross2.push(rs, gg);
                hess2.push(rs, h[(r, s)]);
                bart2.push(rs, h[(r, s)] + gg);
                for u in 0..d {
                    let idx = rs * d + u;
                    pure3.push(idx, k.get(r, s, u));
                    cross3.push(idx, g[r] * h[(s, u)]);
                    let ggg = gg * g[u];
                    score3.push(idx, ggg);
                    let res = k.get(r, s, u)
                        + g[r] * h[(s, u)]
                        + g[s] * h[(r, u)]
                        + g[u] * h[(r, s)]
                        + ggg;
                    bart3.push(idx, res);
                }
            }
        }
    }

    let mat = |v: Vec<f64>| DMatrix::from_row_slice(d, d, &v);
    let ten = |v: Vec<f64>| Tensor3::from_row_major(d, v);
    let (c2, c2se) = cross2.finish();
    let (h2, h2se) = hess2.finish();
    let (p3, p3se) = pure3.finish();
    let (x3, x3se) = cross3.finish();
    let (s3, s3se) = score3.finish();
    let (b2, b2se) = bart2.finish();
    let (b3, b3se) = bart3.finish();
    let estimate = CumulantSet::from_parts(mat(c2), mat(h2), ten(p3)?, ten(x3)?, ten(s3)?)?;
    Ok(McCumulants {
        draws,
        seed,
        estimate,
        se_kappa2_cross: mat(c2se),
        se_kappa2_hess: mat(h2se),
        se_kappa3_pure: ten(p3se)?,
        se_kappa3_cross: ten(x3se)?,
        se_kappa3_score: ten(s3se)?,
        bartlett2: mat(b2),
        bartlett3: ten(b3)?,
        se_bartlett2: mat(b2se),
        se_bartlett3: ten(b3se)?,
    })
}

/// Second-order residual `κ_{rs} + κ_{r,s}` and third-order residual
/// `κ_{stu} + κ_{s,tu} + κ_{t,su} + κ_{u,st} + κ_{s,t,u}`.
pub fn bartlett_residuals(c: &CumulantSet) -> (DMatrix<f64>, Tensor3) {
    let second = &c.kappa2_hess + &c.kappa2_cross;
    let x = &c.kappa3_cross;
    let third = Tensor3::from_fn(c.dim(), |s, t, u| {
        c.kappa3_pure.get(s, t, u) + x.get(s, t, u) + x.get(t, s, u) + x.get(u, s, t) + c.kappa3_score.get(s, t, u)
    });
    (second, third)
}

/// Cube tensor, e-connection and α-connection coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryCoefficients {
    /// `T_{rsj}`.
    pub cube: Tensor3,
    /// `Γ^(e)_{rs,j}` stored at `(r, s, j)`.
    pub e_conn: Tensor3,
    pub alpha: f64,
    /// `Γ^(α)_{rs,j}` stored at `(r, s, j)`.
    pub alpha_conn: Tensor3,
}

/// Full-sample geometry coefficients from per-observation cumulants.
pub fn geometry_coefficients(c: &CumulantSet, n: usize, alpha: f64) -> GeometryCoefficients {
    let nf = n as f64;
    let cube = c.kappa3_score.scale(nf);
    let e_conn = Tensor3::from_fn(c.dim(), |r, s, j| nf * c.kappa3_cross.get(j, r, s));
    let alpha_conn = e_conn.axpy((1.0 - alpha) / 2.0, &cube);
    GeometryCoefficients {
        cube,
        e_conn,
        alpha,
        alpha_conn,
    }
}

/// Observed log-likelihood with its first three derivatives, summed over the data.
#[derive(Clone, Debug)]
pub struct LoglikBundle {
    pub n: usize,
    pub loglik: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub third: Tensor3,
}

impl LoglikBundle {
    /// `h = −ℓ / n`.
    pub fn h(&self) -> f64 {
        -self.loglik / self.n as f64
    }

    pub fn h_gradient(&self) -> DVector<f64> {
        -&self.gradient / self.n as f64
    }

    pub fn h_hessian(&self) -> DMatrix<f64> {
        -&self.hessian / self.n as f64
    }

    pub fn h_third(&self) -> Tensor3 {
        self.third.scale(-1.0 / self.n as f64)
    }

    /// `ĥ^{ij}`; `SingularHessian` when the observed Hessian cannot be inverted.
    pub fn h_hessian_inverse(&self) -> Result<DMatrix<f64>> {
        invert(&self.h_hessian()).ok_or(Error::SingularHessian)
    }
}

pub fn observed_loglik_bundle<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    theta: &ParamPoint,
) -> Result<LoglikBundle> {
    let th = theta.values();
    check_theta(model, th)?;
    check_data(model, data)?;
    let d = model.dim();
    let mut bundle = LoglikBundle {
        n: data.len(),
        loglik: 0.0,
        gradient: DVector::zeros(d),
        hessian: DMatrix::zeros(d, d),
        third: Tensor3::zeros(d),
    };
    for i in 0..data.len() {
        let der = model.derivatives(i, data.observation(i), th);
        bundle.loglik += der.logdensity;
        bundle.gradient += &der.score;
        bundle.hessian += &der.hessian;
        for (acc, v) in bundle.third.as_mut_slice().iter_mut().zip(der.third.as_slice()) {
            *acc += v;
        }
    }
    Ok(bundle)
}
