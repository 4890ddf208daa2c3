//! The scenario program as an explicit affine system `aᵀd <= u` over the
//! decision vector `d = [K; λ; c; b_1 … b_Q]`.
//!
//! Per sample `x̂_i` with features `φ = φ(x̂_i)` and empirical successor
//! features `φ̄_i`:
//!
//! ```text
//! g1           −φ·b − K            <= −t
//! g2 (x̂ ∈ X_in)  φ·b − K            <= 1 − t
//! g3 (x̂ ∈ X_u)  −φ·b + λ − K        <= −t
//! g5          (φ̄_i − φ)·b − c − K   <= −δ − t
//! ```
//!
//! plus one horizon row `(T_h/ρ)c − λ − K <= −1/ρ + μ`, optional Gershgorin
//! rows capping the spectrum of the quadratic form, and variable bounds.
//! `t` is the tightening offset (zero for the plain program).

mod lp_format;

pub use lp_format::{parse_lp, write_lp};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{MonomialBasis, VerificationProblem};
use crate::error::{check_dimension, Error, Result};
use crate::sampling::ScenarioDataset;

pub const COL_K: usize = 0;
pub const COL_LAMBDA: usize = 1;
pub const COL_C: usize = 2;
pub const COL_B: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowKind {
    /// g1, barrier non-negativity.
    Nonnegative,
    /// g2, barrier at most 1 on the initial set.
    Initial,
    /// g3, barrier at least λ on the unsafe set.
    Unsafe,
    /// g4, horizon/probability row.
    Horizon,
    /// Empirical expectation row.
    Expectation,
    Gershgorin,
    LowerBound,
    UpperBound,
    Custom,
}

/// Identifies a row: its kind plus the sample, disc row, variable or custom
/// index it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowTag {
    pub kind: RowKind,
    pub index: u64,
}

impl RowTag {
    pub fn new(kind: RowKind, index: u64) -> Self {
        RowTag { kind, index }
    }

    /// Rows not tied to a single sample.
    pub fn is_global(&self) -> bool {
        matches!(
            self.kind,
            RowKind::Horizon | RowKind::Gershgorin | RowKind::LowerBound | RowKind::UpperBound
        )
    }

    pub fn is_bound(&self) -> bool {
        matches!(self.kind, RowKind::LowerBound | RowKind::UpperBound)
    }

    pub fn parse(name: &str) -> Option<Self> {
        let (kind, rest) = if let Some(r) = name.strip_prefix("g1_s") {
            (RowKind::Nonnegative, r)
        } else if let Some(r) = name.strip_prefix("g2_s") {
            (RowKind::Initial, r)
        } else if let Some(r) = name.strip_prefix("g3_s") {
            (RowKind::Unsafe, r)
        } else if let Some(r) = name.strip_prefix("g5_s") {
            (RowKind::Expectation, r)
        } else if name == "g4" {
            return Some(RowTag::new(RowKind::Horizon, 0));
        } else if let Some(r) = name.strip_prefix("gersh_") {
            (RowKind::Gershgorin, r)
        } else if let Some(r) = name.strip_prefix("row_") {
            (RowKind::Custom, r)
        } else {
            return None;
        };
        rest.parse().ok().map(|i| RowTag::new(kind, i))
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.index;
        match self.kind {
            RowKind::Nonnegative => write!(f, "g1_s{i}"),
            RowKind::Initial => write!(f, "g2_s{i}"),
            RowKind::Unsafe => write!(f, "g3_s{i}"),
            RowKind::Horizon => write!(f, "g4"),
            RowKind::Expectation => write!(f, "g5_s{i}"),
            RowKind::Gershgorin => write!(f, "gersh_{i}"),
            RowKind::LowerBound => write!(f, "lb_{i}"),
            RowKind::UpperBound => write!(f, "ub_{i}"),
            RowKind::Custom => write!(f, "row_{i}"),
        }
    }
}

/// Rows `aᵀd <= u` followed by materialized variable-bound rows. The
/// objective is always `min d[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    columns: Vec<String>,
    coefficients: Vec<f64>,
    rhs: Vec<f64>,
    tags: Vec<RowTag>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound_coefficients: Vec<f64>,
    bound_rhs: Vec<f64>,
    bound_tags: Vec<RowTag>,
}

impl ConstraintSystem {
    pub fn new(columns: Vec<String>) -> Self {
        let m = columns.len();
        ConstraintSystem {
            columns,
            coefficients: Vec::new(),
            rhs: Vec::new(),
            tags: Vec::new(),
            lower: vec![f64::NEG_INFINITY; m],
            upper: vec![f64::INFINITY; m],
            bound_coefficients: Vec::new(),
            bound_rhs: Vec::new(),
            bound_tags: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Constraint rows plus bound rows.
    pub fn num_rows(&self) -> usize {
        self.rhs.len() + self.bound_rhs.len()
    }

    pub fn num_constraint_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn push_row(&mut self, coefficients: &[f64], rhs: f64, tag: RowTag) -> Result<()> {
        check_dimension(self.columns.len(), coefficients.len())?;
        if tag.is_bound() {
            return Err(Error::invalid("bound rows come from set_bounds"));
        }
        self.coefficients.extend_from_slice(coefficients);
        self.rhs.push(rhs);
        self.tags.push(tag);
        Ok(())
    }

    pub fn set_bounds(&mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<()> {
        let m = self.columns.len();
        check_dimension(m, lower.len())?;
        check_dimension(m, upper.len())?;
        self.bound_coefficients.clear();
        self.bound_rhs.clear();
        self.bound_tags.clear();
        for v in 0..m {
            if lower[v].is_nan() || upper[v].is_nan() || lower[v] > upper[v] {
                return Err(Error::invalid(format!("invalid bounds on `{}`", self.columns[v])));
            }
            if lower[v].is_finite() {
                let mut row = vec![0.0; m];
                row[v] = -1.0;
                self.bound_coefficients.extend_from_slice(&row);
                self.bound_rhs.push(-lower[v]);
                self.bound_tags.push(RowTag::new(RowKind::LowerBound, v as u64));
            }
            if upper[v].is_finite() {
                let mut row = vec![0.0; m];
                row[v] = 1.0;
                self.bound_coefficients.extend_from_slice(&row);
                self.bound_rhs.push(upper[v]);
                self.bound_tags.push(RowTag::new(RowKind::UpperBound, v as u64));
            }
        }
        self.lower = lower;
        self.upper = upper;
        Ok(())
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn row_coefficients(&self, i: usize) -> &[f64] {
        let m = self.columns.len();
        if i < self.rhs.len() {
            &self.coefficients[i * m..(i + 1) * m]
        } else {
            let j = i - self.rhs.len();
            &self.bound_coefficients[j * m..(j + 1) * m]
        }
    }

    pub fn rhs(&self, i: usize) -> f64 {
        if i < self.rhs.len() {
            self.rhs[i]
        } else {
            self.bound_rhs[i - self.rhs.len()]
        }
    }

    pub fn tag(&self, i: usize) -> RowTag {
        if i < self.tags.len() {
            self.tags[i]
        } else {
            self.bound_tags[i - self.tags.len()]
        }
    }

    /// `aᵢᵀd − uᵢ`.
    #[inline]
    pub fn row_slack(&self, i: usize, d: &[f64]) -> f64 {
        self.row_coefficients(i)
            .iter()
            .zip(d)
            .map(|(a, x)| a * x)
            .sum::<f64>()
            - self.rhs(i)
    }

    pub fn count_kind(&self, kind: RowKind) -> usize {
        (0..self.num_rows()).filter(|&i| self.tag(i).kind == kind).count()
    }
}

/// Knobs of the assembled program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScpOptions {
    /// Offset subtracted from every sample row's right-hand side.
    pub tighten: f64,
    /// `λ >= 1 + eta` stands in for `λ > 1`.
    pub eta: f64,
    /// Box `|b_ι| <= b_max`; ignored while `p_max` is active.
    pub b_max: Option<f64>,
    /// Gershgorin cap on the quadratic form's spectrum (degree 2 only).
    pub p_max: Option<f64>,
}

impl Default for ScpOptions {
    fn default() -> Self {
        ScpOptions {
            tighten: 0.0,
            eta: 1e-6,
            b_max: Some(1e3),
            p_max: None,
        }
    }
}

pub fn column_names(basis: &MonomialBasis) -> Vec<String> {
    let mut cols = vec!["K".to_string(), "lambda".to_string(), "c".to_string()];
    cols.extend((0..basis.len()).map(|j| basis.monomial_name(j)));
    cols
}

/// Builds the scenario program for `problem` over the samples of `ds`.
pub fn assemble(
    problem: &VerificationProblem,
    basis: &MonomialBasis,
    ds: &ScenarioDataset,
    options: &ScpOptions,
) -> Result<ConstraintSystem> {
    let n = problem.dimension();
    check_dimension(n, basis.dimension())?;
    check_dimension(n, ds.dimension())?;
    if !(options.tighten >= 0.0) || !options.tighten.is_finite() {
        return Err(Error::invalid("tighten must be a finite non-negative offset"));
    }
    if ds.is_empty() {
        return Err(Error::invalid("dataset has no samples"));
    }
    let q = basis.len();
    let width = COL_B + q;
    let t = options.tighten;
    let delta = problem.delta;

    const BLOCK: usize = 4096;
    let blocks: Vec<(Vec<f64>, Vec<f64>, Vec<RowTag>)> = (0..ds.len().div_ceil(BLOCK))
        .into_par_iter()
        .map(|blk| {
            let start = blk * BLOCK;
            let end = (start + BLOCK).min(ds.len());
            let mut coeffs = Vec::with_capacity((end - start) * 2 * width);
            let mut rhs = Vec::with_capacity((end - start) * 2);
            let mut tags = Vec::with_capacity((end - start) * 2);
            let mut phi = vec![0.0; q];
            let mut row = vec![0.0; width];
            for i in start..end {
                let x = ds.sample(i);
                basis.features_into(x, &mut phi);
                let mean = ds.empirical_successor_features(basis, i)?;
                let idx = i as u64;

                row.fill(0.0);
                row[COL_K] = -1.0;
                for j in 0..q {
                    row[COL_B + j] = -phi[j];
                }
                coeffs.extend_from_slice(&row);
                rhs.push(-t);
                tags.push(RowTag::new(RowKind::Nonnegative, idx));

                if problem.initial_region.contains_point(x) {
                    row.fill(0.0);
                    row[COL_K] = -1.0;
                    row[COL_B..].copy_from_slice(&phi);
                    coeffs.extend_from_slice(&row);
                    rhs.push(1.0 - t);
                    tags.push(RowTag::new(RowKind::Initial, idx));
                }
                if problem.unsafe_region.contains_point(x) {
                    row.fill(0.0);
                    row[COL_K] = -1.0;
                    row[COL_LAMBDA] = 1.0;
                    for j in 0..q {
                        row[COL_B + j] = -phi[j];
                    }
                    coeffs.extend_from_slice(&row);
                    rhs.push(-t);
                    tags.push(RowTag::new(RowKind::Unsafe, idx));
                }

                row.fill(0.0);
                row[COL_K] = -1.0;
                row[COL_C] = -1.0;
                for j in 0..q {
                    row[COL_B + j] = mean[j] - phi[j];
                }
                coeffs.extend_from_slice(&row);
                rhs.push(-delta - t);
                tags.push(RowTag::new(RowKind::Expectation, idx));
            }
            Ok((coeffs, rhs, tags))
        })
        .collect::<Result<_>>()?;

    let mut cs = ConstraintSystem::new(column_names(basis));
    let total: usize = blocks.iter().map(|b| b.1.len()).sum();
    cs.coefficients.reserve(total * width);
    cs.rhs.reserve(total);
    cs.tags.reserve(total);
    for (c, r, tg) in blocks {
        cs.coefficients.extend_from_slice(&c);
        cs.rhs.extend_from_slice(&r);
        cs.tags.extend_from_slice(&tg);
    }

    let mut horizon = vec![0.0; width];
    horizon[COL_K] = -1.0;
    horizon[COL_LAMBDA] = -1.0;
    horizon[COL_C] = problem.horizon as f64 / problem.rho;
    cs.push_row(&horizon, -1.0 / problem.rho + problem.mu, RowTag::new(RowKind::Horizon, 0))?;

    let mut lower = vec![f64::NEG_INFINITY; width];
    let mut upper = vec![f64::INFINITY; width];
    lower[COL_LAMBDA] = 1.0 + options.eta;
    lower[COL_C] = 0.0;
    if let Some(p_max) = options.p_max {
        for (k, (coeffs, rhs)) in gershgorin_rows(basis, p_max)?.into_iter().enumerate() {
            let mut row = vec![0.0; width];
            row[COL_B..].copy_from_slice(&coeffs);
            cs.push_row(&row, rhs, RowTag::new(RowKind::Gershgorin, k as u64))?;
        }
    } else if let Some(b_max) = options.b_max {
        if !(b_max > 0.0) {
            return Err(Error::invalid("b_max must be positive"));
        }
        for j in 0..q {
            lower[COL_B + j] = -b_max;
            upper[COL_B + j] = b_max;
        }
    }
    cs.set_bounds(lower, upper)?;
    Ok(cs)
}

/// Half-plane rows (over the barrier coefficients only) encoding
/// `|P_rr| + Σ_{s≠r} |P_rs| <= p_max` for every row `r` of the augmented
/// quadratic form. Each absolute-value sum over `m` entries becomes `2^m`
/// rows.
pub fn gershgorin_rows(basis: &MonomialBasis, p_max: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    if basis.degree() != 2 {
        return Err(Error::invalid("the spectral cap needs a degree-2 barrier"));
    }
    if !(p_max > 0.0) {
        return Err(Error::invalid("p_max must be positive"));
    }
    let n = basis.dimension();
    let q = basis.len();
    let mut rows = Vec::new();
    for r in 0..=n {
        // (coefficient index, weight) entries on row r of P
        let entries: Vec<(usize, f64)> = basis
            .exponents()
            .iter()
            .enumerate()
            .filter_map(|(j, exps)| {
                let (a, b) = crate::domain::certificate_position(exps, n);
                if a == r && b == r {
                    Some((j, 1.0))
                } else if a == r || b == r {
                    Some((j, 0.5))
                } else {
                    None
                }
            })
            .collect();
        for signs in 0u64..(1 << entries.len()) {
            let mut coeffs = vec![0.0; q];
            for (bit, (j, w)) in entries.iter().enumerate() {
                coeffs[*j] = if signs >> bit & 1 == 1 { -w } else { *w };
            }
            rows.push((coeffs, p_max));
        }
    }
    Ok(rows)
}

/// Worst row of a system at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintEvaluation {
    /// `max_i (aᵢᵀd − uᵢ)`; `−∞` for an empty system.
    pub max_violation: f64,
    pub worst: Option<RowTag>,
}

impl ConstraintEvaluation {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }

    pub fn is_vacuous(&self) -> bool {
        self.worst.is_none()
    }
}

pub fn evaluate_constraints(cs: &ConstraintSystem, d: &[f64]) -> Result<ConstraintEvaluation> {
    check_dimension(cs.num_columns(), d.len())?;
    let best = (0..cs.num_rows())
        .into_par_iter()
        .map(|i| (cs.row_slack(i, d), i))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(ConstraintEvaluation {
        max_violation: best.0,
        worst: (best.1 != usize::MAX).then(|| cs.tag(best.1)),
    })
}

#[cfg(test)]
mod tests;
