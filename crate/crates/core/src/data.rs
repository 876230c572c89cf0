use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed responses, with optional covariates and stratum labels.
///
/// Responses are stored row-major with `response_dim` entries per
/// observation, so multivariate location data fits the same container.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    responses: Vec<f64>,
    response_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_row_major")]
    covariates: Option<DMatrix<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    strata: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(
        responses: Vec<f64>,
        response_dim: usize,
        covariates: Option<DMatrix<f64>>,
        strata: Option<Vec<usize>>,
    ) -> Result<Self> {
        if response_dim == 0 || !responses.len().is_multiple_of(response_dim) {
            return Err(Error::InvalidData(format!(
                "{} response values do not split into rows of {response_dim}",
                responses.len()
            )));
        }
        let n = responses.len() / response_dim;
        if let Some(x) = &covariates {
            if x.nrows() != n {
                return Err(Error::InvalidData(format!(
                    "covariate rows {} != responses {n}",
                    x.nrows()
                )));
            }
        }
        if let Some(s) = &strata {
            if s.len() != n {
                return Err(Error::InvalidData(format!(
                    "stratum labels {} != responses {n}",
                    s.len()
                )));
            }
        }
        Ok(Self {
            responses,
            response_dim,
            covariates,
            strata,
        })
    }

    /// Scalar responses without covariates.
    pub fn scalar(responses: Vec<f64>) -> Self {
        Self {
            responses,
            response_dim: 1,
            covariates: None,
            strata: None,
        }
    }

    pub fn len(&self) -> usize {
        self.responses.len() / self.response_dim
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn response_dim(&self) -> usize {
        self.response_dim
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.responses[i * self.response_dim..(i + 1) * self.response_dim]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn covariates(&self) -> Option<&DMatrix<f64>> {
        self.covariates.as_ref()
    }

    pub fn strata(&self) -> Option<&[usize]> {
        self.strata.as_deref()
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::InvalidData(format!(
                "prefix {n} longer than dataset {}",
                self.len()
            )));
        }
        Self::new(
            self.responses[..n * self.response_dim].to_vec(),
            self.response_dim,
            self.covariates.as_ref().map(|x| x.rows(0, n).into_owned()),
            self.strata.as_ref().map(|s| s[..n].to_vec()),
        )
    }
}

mod opt_row_major {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => crate::linalg::row_major::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "crate::linalg::row_major")] DMatrix<f64>);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}
