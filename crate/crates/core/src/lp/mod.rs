//! Linear programs `min d[0]  s.t.  A d <= u` with many more rows than
//! columns.
//!
//! The solver runs a revised primal simplex on the dual
//! `min uᵀy  s.t.  Aᵀy = -e₀, y >= 0`, whose simplex multipliers are the
//! primal point. Only a working subset of rows is priced; after each
//! restricted solve every row is scanned and the most violated ones join
//! the working set, warm-starting from the previous basis. Rows are scaled
//! to unit max-norm before they reach the simplex.

mod lu;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scp::ConstraintSystem;
use crate::systems::noise::splitmix64;
use lu::Lu;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    /// Allowed violation of a unit-scaled row.
    pub feasibility_tol: f64,
    /// Allowed negative reduced cost.
    pub optimality_tol: f64,
    /// Sample rows in the first working set; global rows are always in.
    pub initial_rows: usize,
    pub cuts_per_round: usize,
    pub max_outer: usize,
    pub max_pivots: usize,
    /// Seeds the choice of the first working set.
    pub seed: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            initial_rows: 10_000,
            cuts_per_round: 64,
            max_outer: 10_000,
            max_pivots: 1_000_000,
            seed: 0x5eed_1e55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    /// No finite minimum (or the rows admit a descent ray and no point).
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point, or the incumbent when a limit was hit in phase 2.
    pub d_star: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Rows in the final dual basis.
    pub active_rows: Vec<usize>,
    /// For infeasible programs, rows with a non-negative combination that
    /// yields `0 <= negative`.
    pub certificate_rows: Vec<usize>,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub working_rows: usize,
    /// `max_i (aᵢᵀd − uᵢ)` in raw units at `d_star`.
    pub max_residual: Option<f64>,
}

/// Up to `k` rows whose unit-scaled violation at `d` exceeds `tol`, worst
/// first, ties broken by the lower index.
pub fn most_violated(cs: &ConstraintSystem, d: &[f64], k: usize, tol: f64) -> Vec<(usize, f64)> {
    let scale: Vec<f64> = (0..cs.num_rows()).map(|i| row_scale(cs.row_coefficients(i))).collect();
    top_violations(cs, &scale, None, k, tol, |i| cs.row_slack(i, d))
}

fn row_scale(a: &[f64]) -> f64 {
    let m = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        1.0 / m
    } else {
        1.0
    }
}

fn worse(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn top_violations(
    cs: &ConstraintSystem,
    scale: &[f64],
    skip: Option<&[bool]>,
    k: usize,
    tol: f64,
    slack: impl Fn(usize) -> f64 + Sync,
) -> Vec<(usize, f64)> {
    let keep = |mut v: Vec<(usize, f64)>| {
        v.sort_by(worse);
        v.truncate(k);
        v
    };
    let mut out = (0..cs.num_rows())
        .into_par_iter()
        .with_min_len(4096)
        .fold(Vec::new, |mut acc, i| {
            if skip.is_some_and(|s| s[i]) {
                return acc;
            }
            let v = slack(i) * scale[i];
            if v > tol {
                acc.push((i, v));
                if acc.len() >= 8 * k.max(8) {
                    acc = keep(acc);
                }
            }
            acc
        })
        .reduce(Vec::new, |mut a, b| {
            a.extend(b);
            if a.len() >= 8 * k.max(8) {
                keep(a)
            } else {
                a
            }
        });
    out = keep(out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum PhaseEnd {
    Optimal,
    /// Entering working column and its basis representation.
    Unbounded(usize, Vec<f64>),
    Limit,
}

const PIVOT_TOL: f64 = 1e-11;
const SINGULAR_TOL: f64 = 1e-13;
const BLAND_AFTER: usize = 50;

struct DualSimplex<'a> {
    n: usize,
    cs: &'a ConstraintSystem,
    scale: Vec<f64>,
    rows: Vec<usize>,
    in_work: Vec<bool>,
    wa: Vec<f64>,
    wu: Vec<f64>,
    art_sign: Vec<f64>,
    rhs: Vec<f64>,
    /// Variable index per basis position: `< n` artificial, else `n + k`.
    basis: Vec<usize>,
    basic: Vec<bool>,
    pivots: usize,
    degenerate_run: usize,
}

impl<'a> DualSimplex<'a> {
    fn new(cs: &'a ConstraintSystem) -> Self {
        let n = cs.num_columns();
        let scale = (0..cs.num_rows()).map(|i| row_scale(cs.row_coefficients(i))).collect();
        let mut rhs = vec![0.0; n];
        rhs[0] = -1.0;
        DualSimplex {
            n,
            cs,
            scale,
            rows: Vec::new(),
            in_work: vec![false; cs.num_rows()],
            wa: Vec::new(),
            wu: Vec::new(),
            art_sign: rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect(),
            rhs,
            basis: (0..n).collect(),
            basic: Vec::new(),
            pivots: 0,
            degenerate_run: 0,
        }
    }

    fn add_row(&mut self, r: usize) {
        if self.in_work[r] {
            return;
        }
        self.in_work[r] = true;
        let s = self.scale[r];
        self.rows.push(r);
        self.wa.extend(self.cs.row_coefficients(r).iter().map(|a| a * s));
        self.wu.push(self.cs.rhs(r) * s);
        self.basic.push(false);
    }

    fn column(&self, k: usize) -> &[f64] {
        &self.wa[k * self.n..(k + 1) * self.n]
    }

    fn factor(&self) -> Result<Lu> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for (p, &v) in self.basis.iter().enumerate() {
            if v < n {
                m[v * n + p] = self.art_sign[v];
            } else {
                for (i, a) in self.column(v - n).iter().enumerate() {
                    m[i * n + p] = *a;
                }
            }
        }
        Lu::factor(m, n, SINGULAR_TOL).ok_or_else(|| Error::invalid("simplex basis became singular"))
    }

    fn cost(&self, v: usize, phase: Phase) -> f64 {
        match (v < self.n, phase) {
            (true, Phase::One) => 1.0,
            (true, Phase::Two) | (false, Phase::One) => 0.0,
            (false, Phase::Two) => self.wu[v - self.n],
        }
    }

    fn multipliers(&self, lu: &Lu, phase: Phase) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&v| self.cost(v, phase)).collect();
        lu.solve_transpose(&cb)
    }

    fn price(&self, pi: &[f64], phase: Phase, tol: f64) -> Option<usize> {
        let bland = self.degenerate_run >= BLAND_AFTER;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..self.rows.len() {
            if self.basic[k] {
                continue;
            }
            let a = self.column(k);
            let rc = self.cost(self.n + k, phase) - a.iter().zip(pi).map(|(x, y)| x * y).sum::<f64>();
            if rc < -tol {
                if bland {
                    return Some(k);
                }
                if best.is_none_or(|b| rc < b.1) {
                    best = Some((k, rc));
                }
            }
        }
        best.map(|b| b.0)
    }

    fn run(&mut self, phase: Phase, opts: &LpOptions) -> Result<PhaseEnd> {
        loop {
            if self.pivots >= opts.max_pivots {
                return Ok(PhaseEnd::Limit);
            }
            let lu = self.factor()?;
            let pi = self.multipliers(&lu, phase);
            let Some(k) = self.price(&pi, phase, opts.optimality_tol) else {
                return Ok(PhaseEnd::Optimal);
            };
            let xb = lu.solve(&self.rhs);
            let delta = lu.solve(self.column(k));
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..self.n {
                let v = self.basis[p];
                let ratio = if v < self.n && phase == Phase::Two {
                    if delta[p].abs() > PIVOT_TOL {
                        0.0
                    } else {
                        continue;
                    }
                } else if delta[p] > PIVOT_TOL {
                    xb[p].max(0.0) / delta[p]
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((q, r)) => ratio < r || (ratio == r && v < self.basis[q]),
                };
                if better {
                    leave = Some((p, ratio));
                }
            }
            let Some((p, ratio)) = leave else {
                return Ok(PhaseEnd::Unbounded(k, delta));
            };
            let out = self.basis[p];
            if out >= self.n {
                self.basic[out - self.n] = false;
            }
            self.basis[p] = self.n + k;
            self.basic[k] = true;
            self.pivots += 1;
            if ratio <= 1e-14 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
        }
    }

    /// Swaps zero-level artificials for working columns where possible.
    fn drive_out_artificials(&mut self) -> Result<()> {
        for p in 0..self.n {
            if self.basis[p] >= self.n {
                continue;
            }
            let lu = self.factor()?;
            let mut e = vec![0.0; self.n];
            e[p] = 1.0;
            let r = lu.solve_transpose(&e);
            let mut best: Option<(usize, f64)> = None;
            for k in 0..self.rows.len() {
                if self.basic[k] {
                    continue;
                }
                let v: f64 = self.column(k).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>().abs();
                if v > 1e-9 && best.is_none_or(|b| v > b.1) {
                    best = Some((k, v));
                }
            }
            if let Some((k, _)) = best {
                self.basis[p] = self.n + k;
                self.basic[k] = true;
                self.pivots += 1;
            }
        }
        Ok(())
    }

    fn phase_one_infeasibility(&self, lu: &Lu) -> f64 {
        let xb = lu.solve(&self.rhs);
        self.basis
            .iter()
            .zip(&xb)
            .filter(|(v, _)| **v < self.n)
            .map(|(_, x)| x.max(0.0))
            .sum()
    }

    fn basis_rows(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.basis.iter().filter(|&&v| v >= self.n).map(|&v| self.rows[v - self.n]).collect();
        r.sort_unstable();
        r
    }
}

fn initial_working_set(cs: &ConstraintSystem, opts: &LpOptions) -> Vec<usize> {
    let mut global = Vec::new();
    let mut local = Vec::new();
    for i in 0..cs.num_rows() {
        if cs.tag(i).is_global() {
            global.push(i);
        } else {
            local.push(i);
        }
    }
    if local.len() <= opts.initial_rows {
        global.extend(local);
    } else {
        // Floyd's sampling of `initial_rows` distinct positions
        let m = local.len() as u64;
        let k = opts.initial_rows as u64;
        let mut chosen = HashSet::with_capacity(opts.initial_rows);
        let mut state = opts.seed;
        for j in m - k..m {
            state = splitmix64(state);
            let t = state % (j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        let mut picked: Vec<u64> = chosen.into_iter().collect();
        picked.sort_unstable();
        global.extend(picked.into_iter().map(|t| local[t as usize]));
    }
    global.sort_unstable();
    global
}

fn check_system(cs: &ConstraintSystem) -> Result<()> {
    if cs.num_columns() == 0 {
        return Err(Error::invalid("program has no columns"));
    }
    for i in 0..cs.num_rows() {
        if !cs.rhs(i).is_finite() || cs.row_coefficients(i).iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid(format!("row `{}` has a non-finite entry", cs.tag(i))));
        }
    }
    Ok(())
}

fn max_residual(cs: &ConstraintSystem, d: &[f64]) -> f64 {
    (0..cs.num_rows())
        .into_par_iter()
        .map(|i| cs.row_slack(i, d))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Minimises `d[0]` over `cs`.
pub fn solve(cs: &ConstraintSystem, opts: &LpOptions) -> Result<LpSolution> {
    if opts.cuts_per_round == 0 || opts.max_outer == 0 {
        return Err(Error::invalid("cuts_per_round and max_outer must be positive"));
    }
    if !(opts.feasibility_tol >= 0.0 && opts.optimality_tol >= 0.0) {
        return Err(Error::invalid("tolerances must be non-negative"));
    }
    check_system(cs)?;
    let mut s = DualSimplex::new(cs);
    for r in initial_working_set(cs, opts) {
        s.add_row(r);
    }
    let mut phase = Phase::One;
    let mut outer = 0;
    let finish = |s: &DualSimplex, status, d: Option<Vec<f64>>, cert: Vec<usize>, outer| {
        let max_residual = d.as_ref().map(|d| max_residual(cs, d));
        LpSolution {
            status,
            objective: d.as_ref().map(|d| d[0]),
            d_star: d,
            active_rows: s.basis_rows(),
            certificate_rows: cert,
            iterations: s.pivots,
            outer_iterations: outer,
            working_rows: s.rows.len(),
            max_residual,
        }
    };
    loop {
        match s.run(phase, opts)? {
            PhaseEnd::Limit => {
                let d = (phase == Phase::Two).then(|| s.multipliers(&s.factor().expect("basis"), phase));
                return Ok(finish(&s, LpStatus::IterationLimit, d, Vec::new(), outer));
            }
            PhaseEnd::Unbounded(k, delta) => {
                // a dual ray: the restricted primal, hence the full one, is empty
                let mut cert = vec![s.rows[k]];
                for (p, &v) in s.basis.iter().enumerate() {
                    if v >= s.n && delta[p] < -PIVOT_TOL {
                        cert.push(s.rows[v - s.n]);
                    }
                }
                cert.sort_unstable();
                return Ok(finish(&s, LpStatus::Infeasible, None, cert, outer));
            }
            PhaseEnd::Optimal => {}
        }
        let lu = s.factor()?;
        let cuts = match phase {
            Phase::One => {
                if s.phase_one_infeasibility(&lu) <= opts.feasibility_tol {
                    s.drive_out_artificials()?;
                    phase = Phase::Two;
                    continue;
                }
                // multipliers form a descent ray of the restricted primal
                let z = s.multipliers(&lu, Phase::One);
                let cuts = top_violations(cs, &s.scale, Some(&s.in_work), opts.cuts_per_round, opts.feasibility_tol, |i| {
                    cs.row_coefficients(i).iter().zip(&z).map(|(a, b)| a * b).sum()
                });
                if cuts.is_empty() {
                    return Ok(finish(&s, LpStatus::Unbounded, None, Vec::new(), outer));
                }
                cuts
            }
            Phase::Two => {
                let d = s.multipliers(&lu, Phase::Two);
                let cuts = top_violations(cs, &s.scale, Some(&s.in_work), opts.cuts_per_round, opts.feasibility_tol, |i| {
                    cs.row_slack(i, &d)
                });
                if cuts.is_empty() {
                    return Ok(finish(&s, LpStatus::Optimal, Some(d), Vec::new(), outer));
                }
                cuts
            }
        };
        outer += 1;
        if outer >= opts.max_outer {
            let d = (phase == Phase::Two).then(|| s.multipliers(&lu, phase));
            return Ok(finish(&s, LpStatus::IterationLimit, d, Vec::new(), outer));
        }
        for (r, _) in cuts {
            s.add_row(r);
        }
    }
}

#[cfg(test)]
mod tests;
