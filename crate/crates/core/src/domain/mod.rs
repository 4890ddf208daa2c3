//! Shared domain types: boxes, monomial bases, certificates, problems and
//! verdicts.

mod basis;
mod certificate;
mod problem;
mod region;

pub use basis::MonomialBasis;
pub use certificate::{symmetric_lambda_max, BarrierCertificate};
pub(crate) use certificate::quadratic_position as certificate_position;
pub use problem::{Verdict, VerdictStatus, VerificationProblem};
pub use region::Region;
