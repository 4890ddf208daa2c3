//! Data-driven safety verification of black-box discrete-time stochastic
//! systems.
//!
//! The verifier samples states uniformly from the state set, simulates each
//! one a number of times through the black box, and searches for a
//! polynomial barrier certificate by solving a linear scenario program over
//! the sampled constraints. When the optimal value clears the robustness
//! margin, the certificate yields a lower bound on the probability that the
//! system stays safe over a finite horizon, with an explicit confidence.
//!
//! Pipeline stages, in order:
//!
//! - [`bounds`]: sample counts (scenario count, empirical count) and the
//!   Lipschitz and variance constants feeding them.
//! - [`sampling`]: the scenario dataset and its on-disk format.
//! - [`scp`]: assembly of the affine constraint system.
//! - [`lp`]: cutting-plane LP solver for few variables and many rows.
//! - [`verify`]: orchestration, verdicts, reports and audits.

pub mod bounds;
pub mod cli;
pub mod domain;
pub mod error;
pub mod lp;
pub mod sampling;
pub mod scp;
pub mod systems;
pub mod verify;

pub use domain::{
    BarrierCertificate, MonomialBasis, Region, VerdictStatus, Verdict, VerificationProblem,
};
pub use error::{Error, Result};
pub use systems::BlackBoxSystem;
