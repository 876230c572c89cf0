use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled point in a `d`-dimensional parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    values: Vec<f64>,
    labels: Vec<String>,
}

impl ParamPoint {
    /// Creates a point, rejecting empty or non-finite vectors and mismatched labels.
    pub fn new(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("dimension must be at least 1".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("non-finite entry {v}")));
        }
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: labels.len(),
            });
        }
        Ok(Self { values, labels })
    }

    /// Point with default labels `theta1, theta2, ...`.
    pub fn unlabeled(values: Vec<f64>) -> Result<Self> {
        let labels = (1..=values.len()).map(|i| format!("theta{i}")).collect();
        Self::new(values, labels)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// Same labels, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.labels.clone())
    }
}

impl fmt::Display for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .zip(&self.values)
            .map(|(l, v)| format!("{l}={v}"))
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(ParamPoint::unlabeled(vec![]).is_err());
        assert!(ParamPoint::unlabeled(vec![1.0, f64::NAN]).is_err());
        assert!(ParamPoint::unlabeled(vec![f64::INFINITY]).is_err());
        assert!(ParamPoint::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn display_lists_labels() {
        let p = ParamPoint::new(vec![0.5, 2.0], vec!["mu".into(), "xi".into()]).unwrap();
        assert_eq!(p.to_string(), "(mu=0.5, xi=2)");
    }
}
