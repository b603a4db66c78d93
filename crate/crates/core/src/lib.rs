//! Entropy-regularized real option stopping.
//!
//! A firm's profit follows a geometric Brownian motion and exit costs `kappa`.
//! Randomized exit is rewarded through a cumulative residual entropy term with
//! temperature `lambda`. The optimal policy reflects the surviving weight `y`
//! below a boundary `g_lambda(x)`.
//!
//! * [`model`]: parameters, characteristic roots, resolvent, classical threshold.
//! * [`closed_form`]: the exact boundary and value.
//! * [`boundary`]: grid boundaries, initializations and admissibility checks.
//! * [`policy_eval`]: semi-analytic value of any grid boundary.
//! * [`policy_iter`]: model-based policy iteration.
//! * [`simulator`]: Monte Carlo environment.
//! * [`model_free`]: sample-based policy iteration and floor learning.
//! * [`cli`]: configuration and experiment commands behind the `exstop` binary.

// `!(a > b)` checks are written to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod cli;
pub mod closed_form;
pub mod error;
pub mod model;
pub mod model_free;
pub mod policy_eval;
pub mod policy_iter;
pub mod simulator;

pub use boundary::GridBoundary;
pub use closed_form::ClosedFormSolution;
pub use error::{Error, Result};
pub use model::{Model, ModelParams, ProfitModel};
