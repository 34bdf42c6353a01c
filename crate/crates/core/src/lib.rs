//! Monte Carlo inference for partially identified Bayesian models.
//!
//! The crate covers two incomplete-outcome models:
//!
//! * a saturated logistic model over `p` binary covariates with a binary
//!   outcome that may be missing not at random, and
//! * a Poisson count outcome with logistic, outcome-dependent missingness.
//!
//! For the saturated model a transparent reparameterization `h(θ) = (φ, λ)`
//! makes the observed-data likelihood depend on `φ` only, so conjugate
//! convenience posteriors yield i.i.d. draws that are importance-weighted
//! back to the user's prior ([`importance::istp_sat`]). For the count model
//! only an approximate (pseudo-transparent) map exists; [`pseudo_tp`] holds
//! that map and the importance sampler built on it, and [`gibbs`] provides
//! Metropolis-within-Gibbs baselines in both parameterizations.
//!
//! [`diagnostics`] estimates effective sample sizes and [`harness`] drives
//! scenario grids and persists run artifacts.

pub mod conjugate;
pub mod diagnostics;
pub mod error;
pub mod gibbs;
pub mod harness;
pub mod importance;
pub mod io;
pub mod model;
pub mod numeric;
pub mod pseudo_tp;
pub mod stochastics;
pub mod tp_sat;

pub use conjugate::{SatConveniencePosterior, draw_phi_lambda_sat, posterior_params_sat};
pub use diagnostics::{DiagnosticsReport, EssEstimate, MultiEss, ParamSummary};
pub use error::{Error, Result};
pub use gibbs::{ChainOutput, MwgConfig};
pub use importance::{IstpOutput, WeightedSample};
pub use model::{
    CellIndex, CountPhiLambda, CountTheta, DatasetKind, IncompleteDataset, PriorSpec,
    SatPhiLambda, SatSufficientStats, SatTheta,
};
pub use stochastics::{DistSpec, RngStream, Variate};
pub use tp_sat::FreeCoords;
