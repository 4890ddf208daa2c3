use serde::{Deserialize, Serialize};

use super::MonomialBasis;
use crate::error::{check_dimension, Error, Result};

/// Polynomial barrier `B(b, x) = Σ b_ι x^ι` together with the scalars
/// `λ` (unsafe level), `c` (per-step expected growth) and the scenario
/// program's optimal value `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCertificate", into = "RawCertificate")]
pub struct BarrierCertificate {
    basis: MonomialBasis,
    coefficients: Vec<f64>,
    lambda: f64,
    c: f64,
    kappa: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCertificate {
    basis: MonomialBasis,
    #[serde(default)]
    exponents: Option<Vec<Vec<u32>>>,
    coefficients: Vec<f64>,
    lambda: f64,
    c: f64,
    kappa: f64,
}

impl TryFrom<RawCertificate> for BarrierCertificate {
    type Error = Error;

    fn try_from(raw: RawCertificate) -> Result<Self> {
        if let Some(exps) = &raw.exponents {
            if exps.as_slice() != raw.basis.exponents() {
                return Err(Error::invalid(
                    "certificate exponents do not match the graded-lex basis order",
                ));
            }
        }
        BarrierCertificate::new(raw.basis, raw.coefficients, raw.lambda, raw.c, raw.kappa)
    }
}

impl From<BarrierCertificate> for RawCertificate {
    fn from(c: BarrierCertificate) -> Self {
        RawCertificate {
            exponents: Some(c.basis.exponents().to_vec()),
            basis: c.basis,
            coefficients: c.coefficients,
            lambda: c.lambda,
            c: c.c,
            kappa: c.kappa,
        }
    }
}

impl BarrierCertificate {
    pub fn new(
        basis: MonomialBasis,
        coefficients: Vec<f64>,
        lambda: f64,
        c: f64,
        kappa: f64,
    ) -> Result<Self> {
        check_dimension(basis.len(), coefficients.len())?;
        if coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("certificate coefficients must be finite"));
        }
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must exceed 1, got {lambda}")));
        }
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::invalid(format!("c must be non-negative, got {c}")));
        }
        Ok(BarrierCertificate {
            basis,
            coefficients,
            lambda,
            c,
            kappa,
        })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let features = self.basis.features(x)?;
        Ok(dot(&features, &self.coefficients))
    }

    /// Symmetric matrix `P` with `B(x) = [x;1]ᵀ P [x;1]`, defined for
    /// degree-2 bases only.
    pub fn quadratic_form(&self) -> Result<Vec<Vec<f64>>> {
        quadratic_form(&self.basis, &self.coefficients)
    }

    /// Exact largest eigenvalue of [`Self::quadratic_form`].
    pub fn lambda_max_quadratic(&self) -> Result<f64> {
        Ok(symmetric_lambda_max(&self.quadratic_form()?))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn quadratic_form(basis: &MonomialBasis, coefficients: &[f64]) -> Result<Vec<Vec<f64>>> {
    if basis.degree() != 2 {
        return Err(Error::invalid(format!(
            "quadratic form needs a degree-2 basis, got degree {}",
            basis.degree()
        )));
    }
    let n = basis.dimension();
    let mut p = vec![vec![0.0; n + 1]; n + 1];
    for (exps, &b) in basis.exponents().iter().zip(coefficients) {
        let (i, j) = quadratic_position(exps, n);
        if i == j {
            p[i][i] += b;
        } else {
            p[i][j] += b / 2.0;
            p[j][i] += b / 2.0;
        }
    }
    Ok(p)
}

/// Entry of the augmented `(n+1)×(n+1)` matrix that a degree-≤2 monomial
/// lands on; index `n` stands for the constant coordinate.
pub(crate) fn quadratic_position(exps: &[u32], n: usize) -> (usize, usize) {
    let mut idx = Vec::with_capacity(2);
    for (d, &e) in exps.iter().enumerate() {
        for _ in 0..e {
            idx.push(d);
        }
    }
    while idx.len() < 2 {
        idx.push(n);
    }
    (idx[0], idx[1])
}

/// Largest eigenvalue of a symmetric matrix. Closed form up to 2×2, cyclic
/// Jacobi rotations beyond.
pub fn symmetric_lambda_max(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => f64::NEG_INFINITY,
        1 => m[0][0],
        2 => {
            let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
            let mean = 0.5 * (a + d);
            let half_diff = 0.5 * (a - d);
            mean + half_diff.hypot(b)
        }
        n => {
            let mut a: Vec<Vec<f64>> = m.to_vec();
            for _sweep in 0..100 {
                let off: f64 = (0..n)
                    .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| a[i][j] * a[i][j])
                    .sum();
                if off < 1e-30 {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        if a[p][q].abs() < 1e-300 {
                            continue;
                        }
                        let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                        let t = if theta == 0.0 { 1.0 } else { t };
                        let cs = 1.0 / (t * t + 1.0).sqrt();
                        let sn = t * cs;
                        for k in 0..n {
                            let akp = a[k][p];
                            let akq = a[k][q];
                            a[k][p] = cs * akp - sn * akq;
                            a[k][q] = sn * akp + cs * akq;
                        }
                        for k in 0..n {
                            let apk = a[p][k];
                            let aqk = a[q][k];
                            a[p][k] = cs * apk - sn * aqk;
                            a[q][k] = sn * apk + cs * aqk;
                        }
                    }
                }
            }
            (0..n).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
        }
    }
}
