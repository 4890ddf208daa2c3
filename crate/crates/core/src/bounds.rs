//! Closed-form counts and constants: the scenario count `N(ε̄, β)`, the
//! Chebyshev count `N̂`, the moment-based variance bound `M̂` and the
//! Lipschitz constants of quadratic barriers.

use serde::{Deserialize, Serialize};

use crate::domain::VerificationProblem;
use crate::error::{Error, Result};

/// Inputs of the scenario count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexityInputs {
    /// `ε̄ = (ε / L_x)^n`.
    pub epsilon_bar: f64,
    pub beta: f64,
    /// Upper limit of the binomial sum, `Q + 2` by default.
    pub summation_limit: u64,
}

impl SampleComplexityInputs {
    /// Builds the inputs from a problem and the number of barrier
    /// coefficients `Q`; `limit_override` replaces `Q + 2`.
    pub fn for_problem(problem: &VerificationProblem, q: usize, limit_override: Option<u64>) -> Self {
        SampleComplexityInputs {
            epsilon_bar: problem.epsilon_bar(),
            beta: problem.beta,
            summation_limit: limit_override.unwrap_or(q as u64 + 2),
        }
    }
}

/// `ln Σ_{i=0}^{min(limit, n)} C(n, i) ε̄^i (1 − ε̄)^{n−i}`, evaluated term by
/// term in log space and combined with log-sum-exp.
pub fn log_binomial_tail(n: u64, epsilon_bar: f64, limit: u64) -> f64 {
    let top = limit.min(n);
    let ln_e = epsilon_bar.ln();
    let ln_1me = (-epsilon_bar).ln_1p();
    let nf = n as f64;
    let mut ln_choose = 0.0;
    let mut terms = Vec::with_capacity(top as usize + 1);
    for i in 0..=top {
        if i > 0 {
            ln_choose += ((nf - (i - 1) as f64) / i as f64).ln();
        }
        let success = if i == 0 { 0.0 } else { i as f64 * ln_e };
        let failure = if n == i { 0.0 } else { (n - i) as f64 * ln_1me };
        terms.push(ln_choose + success + failure);
    }
    log_sum_exp(&terms)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Least `N >= 1` with binomial tail `<= β`.
///
/// Brackets by doubling, bisects, then walks down while `N − 1` also
/// qualifies so the result is minimal even where the tail is flat.
pub fn minimal_scenario_count(inp: &SampleComplexityInputs) -> Result<u64> {
    let SampleComplexityInputs {
        epsilon_bar: e,
        beta,
        summation_limit: limit,
    } = *inp;
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::invalid(format!("epsilon_bar = {e} is outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta = {beta} is outside [0, 1]")));
    }
    if beta == 0.0 && e < 1.0 {
        return Err(Error::Unbounded(
            "beta = 0 needs infinitely many samples unless epsilon_bar = 1".into(),
        ));
    }
    if beta == 1.0 {
        return Ok(1);
    }
    let ln_beta = beta.ln();
    let ok = |n: u64| log_binomial_tail(n, e, limit) <= ln_beta;

    let mut lo = 0u64; // tail(0) = 1 > β unless β = 1
    let mut hi = 1u64;
    while !ok(hi) {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .filter(|h| *h < (1u64 << 62))
            .ok_or_else(|| Error::Unbounded("scenario count exceeds 2^62".into()))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut n = hi;
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    Ok(n)
}

/// Chebyshev count `⌈M̂ / (δ² β_s)⌉`.
pub fn empirical_count(m_hat: f64, delta: f64, beta_s: f64) -> Result<u64> {
    if !(m_hat > 0.0 && m_hat.is_finite()) {
        return Err(Error::invalid(format!("variance bound must be positive, got {m_hat}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !(beta_s > 0.0 && beta_s <= 1.0) {
        return Err(Error::invalid(format!("beta_s = {beta_s} is outside (0, 1]")));
    }
    let ratio = m_hat / (delta * delta * beta_s);
    if ratio >= u64::MAX as f64 {
        return Err(Error::Unbounded(format!("empirical count {ratio} overflows")));
    }
    let mut n = (ratio.ceil() as u64).max(1);
    // guard the ceiling against rounding in the quotient
    while (n as f64) * delta * delta * beta_s < m_hat {
        n += 1;
    }
    Ok(n)
}

/// Upper bound on `Var(B(f_a(x) + w))` for a scalar system with additive
/// noise, valid for every barrier with `|b_ι| <= coeff_bounds` and every
/// state with `|f_a(x)| <= fa_bound`.
///
/// `coeff_bounds` follows the basis order (highest power first, length
/// `k + 1`); `raw_moments[m − 1] = E[w^m]` for `m = 1..=2k`.
pub fn variance_bound_additive_1d(coeff_bounds: &[f64], fa_bound: f64, raw_moments: &[f64]) -> Result<f64> {
    if coeff_bounds.is_empty() {
        return Err(Error::invalid("need at least one coefficient bound"));
    }
    if coeff_bounds.iter().chain([&fa_bound]).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("bounds must be finite and non-negative"));
    }
    let k = coeff_bounds.len() - 1;
    if raw_moments.len() < 2 * k {
        return Err(Error::invalid(format!(
            "need {} raw noise moments, got {}",
            2 * k,
            raw_moments.len()
        )));
    }
    // bound on the coefficient of w^j: Σ_{ι>=j} |b_ι| C(ι, j) |f_a|^{ι−j}
    let power_bound = |iota: usize| coeff_bounds[k - iota];
    let g: Vec<f64> = (1..=k)
        .map(|j| {
            (j..=k)
                .map(|iota| power_bound(iota) * binomial(iota, j) * fa_bound.powi((iota - j) as i32))
                .sum()
        })
        .collect();
    let moment = |m: usize| raw_moments[m - 1];
    let mut total = 0.0;
    for j in 1..=k {
        for z in 1..=k {
            let cov = moment(j + z) - moment(j) * moment(z);
            total += g[j - 1] * g[z - 1] * cov.abs();
        }
    }
    Ok(total)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw moments `E[w^m]`, `m = 1..=count`, of `N(0, σ²)`.
pub fn gaussian_raw_moments(sigma: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|m| {
            if m % 2 == 1 {
                0.0
            } else {
                // (m − 1)!! σ^m
                let double_factorial: f64 = (1..m).step_by(2).map(|v| v as f64).product();
                double_factorial * sigma.powi(m as i32)
            }
        })
        .collect()
}

/// `2 m λ_max(P) (L L̂ + 1)` for a quadratic barrier and additive-noise
/// dynamics with `‖f_a(x)‖ <= L‖x‖`, `‖∇f_a‖_F <= L̂`, `‖x‖ <= m`.
pub fn lipschitz_quadratic(m: f64, lambda_max_p: f64, l: f64, l_hat: f64) -> f64 {
    2.0 * m * lambda_max_p * (l * l_hat + 1.0)
}

/// `2 m λ_max(P) (𝓛² + 1)` for linear dynamics with `‖A‖_F <= 𝓛`.
pub fn lipschitz_linear(m: f64, lambda_max_p: f64, frobenius_bound: f64) -> f64 {
    2.0 * m * lambda_max_p * (frobenius_bound * frobenius_bound + 1.0)
}
