//! Grid audit of a certificate: barrier levels on the initial and unsafe
//! sets and a Monte-Carlo estimate of the one-step expectation condition.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BarrierCertificate, VerificationProblem};
use crate::error::{check_dimension, Error, Result};
use crate::systems::noise::audit_seed;
use crate::systems::BlackBoxSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    Initial,
    Unsafe,
    Other,
}

impl RegionTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionTag::Initial => "initial",
            RegionTag::Unsafe => "unsafe",
            RegionTag::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub x: Vec<f64>,
    pub b: f64,
    pub region: RegionTag,
    /// Monte-Carlo mean of `B(f(x, w))`.
    pub expected_next_b: f64,
    /// `expected_next_b − B(x) − c`.
    pub martingale_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub points: u64,
    pub max_b_initial: Option<f64>,
    pub min_b_unsafe: Option<f64>,
    pub min_b: f64,
    pub max_slack: f64,
    pub lambda: f64,
    pub c: f64,
}

impl AuditSummary {
    /// `B <= 1` on every initial-set mesh point.
    pub fn initial_ok(&self) -> bool {
        self.max_b_initial.is_none_or(|m| m <= 1.0)
    }

    /// `B >= λ` on every unsafe-set mesh point.
    pub fn unsafe_ok(&self) -> bool {
        self.min_b_unsafe.is_none_or(|m| m >= self.lambda)
    }

    pub fn slack_within(&self, tol: f64) -> bool {
        self.max_slack <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTable {
    pub dimension: usize,
    pub rows: Vec<AuditRow>,
    pub summary: AuditSummary,
}

impl AuditTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if self.dimension == 1 {
            write!(out, "x")?;
        } else {
            let names: Vec<String> = (1..=self.dimension).map(|i| format!("x_{i}")).collect();
            write!(out, "{}", names.join(","))?;
        }
        writeln!(out, ",B,region_tag,expected_next_B,martingale_slack")?;
        for r in &self.rows {
            for v in &r.x {
                write!(out, "{v},")?;
            }
            writeln!(
                out,
                "{},{},{},{}",
                r.b,
                r.region.as_str(),
                r.expected_next_b,
                r.martingale_slack
            )?;
        }
        Ok(())
    }
}

/// Evaluates `cert` on a `grid`-per-axis mesh over the state region
/// (`n <= 2`), estimating the expectation with `mc` draws per point.
pub fn audit_certificate<S: BlackBoxSystem + ?Sized>(
    cert: &BarrierCertificate,
    problem: &VerificationProblem,
    sys: &S,
    grid: usize,
    mc: usize,
    seed: u64,
) -> Result<AuditTable> {
    let n = problem.dimension();
    check_dimension(n, cert.basis().dimension())?;
    check_dimension(n, sys.state_dimension())?;
    if n > 2 {
        return Err(Error::invalid("grid audit supports state dimension 1 or 2"));
    }
    if grid < 2 || mc == 0 {
        return Err(Error::invalid("audit needs grid >= 2 and mc >= 1"));
    }
    let region = &problem.state_region;
    let axis = |d: usize, i: usize| {
        let (lo, hi) = (region.lower()[d], region.upper()[d]);
        if i == grid - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (grid - 1) as f64
        }
    };
    let total = grid.pow(n as u32);
    let rows: Vec<AuditRow> = (0..total)
        .into_par_iter()
        .map(|p| {
            let x: Vec<f64> = if n == 1 { vec![axis(0, p)] } else { vec![axis(0, p / grid), axis(1, p % grid)] };
            let b = cert.evaluate(&x)?;
            let seeds: Vec<u64> = (0..mc as u64).map(|j| audit_seed(seed, p as u64, j)).collect();
            let mut next = vec![0.0; mc * n];
            sys.step_many_into(&x, &seeds, &mut next)?;
            let mut acc = 0.0;
            for y in next.chunks_exact(n) {
                acc += cert.evaluate(y)?;
            }
            let expected = acc / mc as f64;
            let region = if problem.initial_region.contains_point(&x) {
                RegionTag::Initial
            } else if problem.unsafe_region.contains_point(&x) {
                RegionTag::Unsafe
            } else {
                RegionTag::Other
            };
            Ok(AuditRow {
                x,
                b,
                region,
                expected_next_b: expected,
                martingale_slack: expected - b - cert.c(),
            })
        })
        .collect::<Result<_>>()?;

    let pick = |tag: RegionTag| rows.iter().filter(move |r| r.region == tag).map(|r| r.b);
    let summary = AuditSummary {
        points: rows.len() as u64,
        max_b_initial: pick(RegionTag::Initial).reduce(f64::max),
        min_b_unsafe: pick(RegionTag::Unsafe).reduce(f64::min),
        min_b: rows.iter().map(|r| r.b).fold(f64::INFINITY, f64::min),
        max_slack: rows.iter().map(|r| r.martingale_slack).fold(f64::NEG_INFINITY, f64::max),
        lambda: cert.lambda(),
        c: cert.c(),
    };
    Ok(AuditTable { dimension: n, rows, summary })
}
