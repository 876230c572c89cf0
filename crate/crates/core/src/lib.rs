//! Bias-reduction priors for posterior means, asymptotic bias formulas from
//! log-likelihood cumulants, and replicated bias experiments.

pub mod bias;
pub mod cumulants;
pub mod data;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod param;
pub mod prior;
pub mod registry;
pub mod runtime;
pub mod sim;

pub use bias::BiasVector;
pub use cumulants::{CumulantSet, GeometryCoefficients, LoglikBundle, McCumulants};
pub use data::Dataset;
pub use error::{Error, Result};
pub use inference::{Chain, McmcConfig};
pub use linalg::Tensor3;
pub use model::{Model, SimRng, Structure};
pub use param::ParamPoint;
pub use prior::{DensityForm, PriorField, PriorKind};
pub use sim::{BiasReport, ExperimentConfig};
