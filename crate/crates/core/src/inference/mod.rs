//! Maximum likelihood, Metropolis-within-Gibbs posterior means, and exact
//! conjugate posterior means.

mod conjugate;
mod mcmc;
mod newton;

pub use conjugate::{conjugate_posterior_mean, conjugate_posterior_mode};
pub use mcmc::{effective_sample_size, metropolis_within_gibbs, tune_step_sizes, Chain, McmcConfig};
pub use newton::{fit, newton_mle, newton_mle_with, MleReport, MleStatus, NewtonOptions, NonConvergence};
