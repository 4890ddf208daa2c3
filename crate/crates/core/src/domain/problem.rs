use serde::{Deserialize, Serialize};

use super::Region;
use crate::error::{Error, Result};

/// Everything needed to pose a finite-horizon safety question against a
/// black-box system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationProblem {
    pub state_region: Region,
    pub initial_region: Region,
    pub unsafe_region: Region,
    pub horizon: u32,
    /// Target risk; the claim is `P(safe) >= 1 - rho`.
    pub rho: f64,
    /// Confidence parameter of the scenario count.
    pub beta: f64,
    /// Confidence parameter of the empirical-mean count.
    pub beta_s: f64,
    /// Error budget for the empirical expectation.
    pub delta: f64,
    /// Strictly negative slack in the horizon row.
    pub mu: f64,
    pub epsilon: f64,
    pub lipschitz_bound: f64,
    /// Upper bound `M̂` on `Var(B(f(x, w)))`.
    pub variance_bound: f64,
}

impl VerificationProblem {
    pub fn dimension(&self) -> usize {
        self.state_region.dimension()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dimension();
        for (name, r) in [("initial_region", &self.initial_region), ("unsafe_region", &self.unsafe_region)] {
            if r.dimension() != n {
                return Err(Error::invalid(format!(
                    "{name} has dimension {}, state region has {n}",
                    r.dimension()
                )));
            }
            if !r.is_subset_of(&self.state_region) {
                return Err(Error::invalid(format!("{name} is not contained in the state region")));
            }
        }
        if self.initial_region.intersects(&self.unsafe_region) {
            return Err(Error::invalid("initial and unsafe regions intersect"));
        }
        check_range("rho", self.rho, |v| v > 0.0 && v <= 1.0, "(0, 1]")?;
        check_range("beta", self.beta, |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
        check_range("beta_s", self.beta_s, |v| v > 0.0 && v <= 1.0, "(0, 1]")?;
        check_range("delta", self.delta, |v| v > 0.0, "(0, inf)")?;
        check_range("mu", self.mu, |v| v < 0.0, "(-inf, 0)")?;
        check_range("epsilon", self.epsilon, |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
        check_range("lipschitz_bound", self.lipschitz_bound, |v| v > 0.0, "(0, inf)")?;
        check_range("variance_bound", self.variance_bound, |v| v > 0.0, "(0, inf)")?;
        if self.epsilon > self.lipschitz_bound {
            return Err(Error::invalid("epsilon exceeds lipschitz_bound"));
        }
        Ok(())
    }

    /// `ε̄ = (ε / L_x)^n`.
    pub fn epsilon_bar(&self) -> f64 {
        (self.epsilon / self.lipschitz_bound).powi(self.dimension() as i32)
    }
}

fn check_range(name: &str, v: f64, ok: impl Fn(f64) -> bool, range: &str) -> Result<()> {
    if v.is_finite() && ok(v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} is outside {range}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Certified,
    /// The method is one-sided: failure to certify never means unsafe.
    Inconclusive,
}

/// Outcome of the decision rule `K* + ε <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// `1 - rho` when certified, `0` otherwise.
    pub probability_lower_bound: f64,
    pub confidence: f64,
    /// Optimal value of the scenario program; absent when it had none.
    pub kappa_star: Option<f64>,
    /// Margin added to `K*` in the decision rule.
    pub epsilon: f64,
}

impl Verdict {
    /// Applies the decision rule. `counts_ok` carries the independently
    /// re-checked sample-count conditions.
    pub fn decide(kappa_star: Option<f64>, epsilon: f64, rho: f64, confidence: f64, counts_ok: bool) -> Self {
        let certified = counts_ok && kappa_star.is_some_and(|k| k.is_finite() && k + epsilon <= 0.0);
        Verdict {
            status: if certified {
                VerdictStatus::Certified
            } else {
                VerdictStatus::Inconclusive
            },
            probability_lower_bound: if certified { 1.0 - rho } else { 0.0 },
            confidence,
            kappa_star,
            epsilon,
        }
    }

    pub fn margin(&self) -> Option<f64> {
        self.kappa_star.map(|k| k + self.epsilon)
    }

    pub fn is_certified(&self) -> bool {
        self.status == VerdictStatus::Certified
    }
}
