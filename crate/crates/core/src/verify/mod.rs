//! End-to-end verification: counts, sampling, scenario program, solve and
//! the decision rule, bundled into a [`VerificationReport`].
//!
//! A verdict is one-sided. When the margin rule fails the outcome is
//! `Inconclusive`; the method never concludes that a system is unsafe.

mod audit;

pub use audit::{audit_certificate, AuditRow, AuditSummary, AuditTable, RegionTag};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{empirical_count, minimal_scenario_count, SampleComplexityInputs};
use crate::domain::{BarrierCertificate, MonomialBasis, Verdict, VerificationProblem};
use crate::error::{check_dimension, Error, Result};
use crate::lp::{self, LpOptions, LpStatus};
use crate::sampling::{build_dataset, ScenarioDataset};
use crate::scp::{self, ScpOptions, COL_B, COL_C, COL_K, COL_LAMBDA};
use crate::systems::BlackBoxSystem;

pub const REPORT_VERSION: u32 = 1;
pub const UNSOUND_WATERMARK: &str =
    "UNSOUND EXPERIMENT: sample counts overridden below the required values; not a certificate";

/// `1 − (1 + c·T_h)/λ`, clamped at 0.
pub fn theorem1_bound(cert: &BarrierCertificate, horizon: u32) -> Result<f64> {
    theorem1_bound_raw(cert.lambda(), cert.c(), horizon)
}

pub fn theorem1_bound_raw(lambda: f64, c: f64, horizon: u32) -> Result<f64> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda = {lambda} must exceed 1")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("c = {c} must be non-negative")));
    }
    Ok((1.0 - (1.0 + c * horizon as f64) / lambda).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plain program; certifies when `K* + ε <= 0` at confidence `1 − β − β_s`.
    Standard,
    /// Rows tightened by `L_x·ε^{1/n}`; certifies when `K* <= 0` at
    /// confidence `1 − β_s`.
    Tightened,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub mode: Mode,
    /// `tighten` is derived from the mode and ignored here.
    pub scp: ScpOptions,
    pub lp: LpOptions,
    pub summation_limit: Option<u64>,
    pub unsound_n: Option<u64>,
    pub unsound_n_hat: Option<u64>,
    /// Store mean successor features instead of raw successors.
    pub compact: bool,
    pub config_digest: Option<String>,
    pub system: Option<String>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            mode: Mode::Standard,
            scp: ScpOptions::default(),
            lp: LpOptions::default(),
            summation_limit: None,
            unsound_n: None,
            unsound_n_hat: None,
            compact: true,
            config_digest: None,
            system: None,
        }
    }
}

impl VerifyOptions {
    pub fn is_unsound(&self) -> bool {
        self.unsound_n.is_some() || self.unsound_n_hat.is_some()
    }

    pub fn tighten(&self, problem: &VerificationProblem) -> f64 {
        match self.mode {
            Mode::Standard => 0.0,
            Mode::Tightened => {
                problem.lipschitz_bound * problem.epsilon.powf(1.0 / problem.dimension() as f64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Counts,
    Sampling,
    Assembly,
    Solve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub epsilon_bar: f64,
    pub summation_limit: u64,
    pub n_required: u64,
    pub n_hat_required: u64,
    pub n_used: u64,
    pub n_hat_used: u64,
}

/// Conditions re-evaluated when the verdict is issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionChecks {
    pub margin_ok: bool,
    pub n_ok: bool,
    pub n_hat_ok: bool,
    /// Count checks ignored because the run is an unsound experiment.
    pub counts_waived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputsEcho {
    pub problem: VerificationProblem,
    pub epsilon_bar: f64,
    pub degree: u32,
    pub run_seed: u64,
    pub p_max: Option<f64>,
    pub b_max: Option<f64>,
    pub eta: f64,
    pub tighten: f64,
    pub system: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub state: u64,
    pub initial: u64,
    #[serde(rename = "unsafe")]
    pub unsafe_region: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub status: LpStatus,
    pub iterations: u64,
    pub outer_iterations: u64,
    pub working_rows: u64,
    pub total_rows: u64,
    pub max_residual: Option<f64>,
    pub active_rows: Vec<String>,
    pub certificate_rows: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Gershgorin cap imposed in the program, if any.
    pub gershgorin_cap: Option<f64>,
    /// Exact largest eigenvalue of the solution's quadratic form.
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sampling_seconds: f64,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub report_version: u32,
    pub mode: Mode,
    pub watermark: Option<String>,
    pub failure: Option<StageFailure>,
    pub verdict: Verdict,
    pub certificate: Option<BarrierCertificate>,
    pub theorem1_bound: Option<f64>,
    pub counts: SampleCounts,
    pub checks: DecisionChecks,
    pub inputs: InputsEcho,
    pub region_counts: RegionCounts,
    pub solver: Option<SolverDiagnostics>,
    pub spectrum: Option<Spectrum>,
    pub config_digest: Option<String>,
    pub timing: Timing,
}

impl VerificationReport {
    pub fn is_certified(&self) -> bool {
        self.verdict.is_certified()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: VerificationReport = serde_json::from_str(s)?;
        if r.report_version != REPORT_VERSION {
            return Err(Error::invalid(format!("unsupported report_version {}", r.report_version)));
        }
        Ok(r)
    }
}

/// Counts required by the problem for a basis with `q` coefficients.
pub fn required_counts(problem: &VerificationProblem, q: usize, summation_limit: Option<u64>) -> Result<(SampleComplexityInputs, u64, u64)> {
    let inputs = SampleComplexityInputs::for_problem(problem, q, summation_limit);
    let n = minimal_scenario_count(&inputs)?;
    let n_hat = empirical_count(problem.variance_bound, problem.delta, problem.beta_s)?;
    Ok((inputs, n, n_hat))
}

struct Draft {
    report: VerificationReport,
}

impl Draft {
    fn new(problem: &VerificationProblem, basis: &MonomialBasis, run_seed: u64, opts: &VerifyOptions) -> Self {
        let confidence = confidence(problem, opts.mode);
        let eps = rule_margin(problem, opts.mode);
        let limit = opts.summation_limit.unwrap_or(basis.len() as u64 + 2);
        Draft {
            report: VerificationReport {
                report_version: REPORT_VERSION,
                mode: opts.mode,
                watermark: opts.is_unsound().then(|| UNSOUND_WATERMARK.to_string()),
                failure: None,
                verdict: Verdict::decide(None, eps, problem.rho, confidence, false),
                certificate: None,
                theorem1_bound: None,
                counts: SampleCounts {
                    epsilon_bar: problem.epsilon_bar(),
                    summation_limit: limit,
                    n_required: 0,
                    n_hat_required: 0,
                    n_used: 0,
                    n_hat_used: 0,
                },
                checks: DecisionChecks {
                    margin_ok: false,
                    n_ok: false,
                    n_hat_ok: false,
                    counts_waived: opts.is_unsound(),
                },
                inputs: InputsEcho {
                    problem: problem.clone(),
                    epsilon_bar: problem.epsilon_bar(),
                    degree: basis.degree(),
                    run_seed,
                    p_max: opts.scp.p_max,
                    b_max: if opts.scp.p_max.is_some() { None } else { opts.scp.b_max },
                    eta: opts.scp.eta,
                    tighten: opts.tighten(problem),
                    system: opts.system.clone(),
                },
                region_counts: RegionCounts { state: 0, initial: 0, unsafe_region: 0 },
                solver: None,
                spectrum: None,
                config_digest: opts.config_digest.clone(),
                timing: Timing::default(),
            },
        }
    }

    fn fail(mut self, stage: Stage, err: Error) -> VerificationReport {
        self.report.failure = Some(StageFailure { stage, message: err.to_string() });
        self.report
    }
}

fn confidence(problem: &VerificationProblem, mode: Mode) -> f64 {
    match mode {
        Mode::Standard => 1.0 - problem.beta - problem.beta_s,
        Mode::Tightened => 1.0 - problem.beta_s,
    }
}

fn rule_margin(problem: &VerificationProblem, mode: Mode) -> f64 {
    match mode {
        Mode::Standard => problem.epsilon,
        Mode::Tightened => 0.0,
    }
}

/// Runs the whole pipeline against `sys`. Problems that fail validation
/// are errors; later stage failures come back as a report with
/// `failure` set.
pub fn run_verification<S: BlackBoxSystem + ?Sized>(
    problem: &VerificationProblem,
    sys: &S,
    basis: &MonomialBasis,
    run_seed: u64,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    preflight(problem, basis)?;
    check_dimension(problem.dimension(), sys.state_dimension())?;
    let mut draft = Draft::new(problem, basis, run_seed, opts);
    if draft.report.inputs.system.is_none() {
        draft.report.inputs.system = Some(sys.describe());
    }
    let (n, n_hat) = match required_counts(problem, basis.len(), opts.summation_limit) {
        Ok((_, n, n_hat)) => {
            draft.report.counts.n_required = n;
            draft.report.counts.n_hat_required = n_hat;
            (opts.unsound_n.unwrap_or(n), opts.unsound_n_hat.unwrap_or(n_hat))
        }
        Err(e) => return Ok(draft.fail(Stage::Counts, e)),
    };
    let t = Instant::now();
    let ds = usize::try_from(n)
        .and_then(|n| usize::try_from(n_hat).map(|h| (n, h)))
        .map_err(|_| Error::invalid("sample counts exceed the address space"))
        .and_then(|(n, h)| build_dataset(sys, &problem.state_region, n, h, run_seed, opts.compact.then_some(basis)));
    draft.report.timing.sampling_seconds = t.elapsed().as_secs_f64();
    match ds {
        Ok(ds) => Ok(finish(draft, problem, basis, &ds, opts)),
        Err(e) => Ok(draft.fail(Stage::Sampling, e)),
    }
}

/// Runs the pipeline on an existing dataset.
pub fn verify_dataset(
    problem: &VerificationProblem,
    basis: &MonomialBasis,
    ds: &ScenarioDataset,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    preflight(problem, basis)?;
    check_dimension(problem.dimension(), ds.dimension())?;
    let mut draft = Draft::new(problem, basis, ds.run_seed(), opts);
    match required_counts(problem, basis.len(), opts.summation_limit) {
        Ok((_, n, n_hat)) => {
            draft.report.counts.n_required = n;
            draft.report.counts.n_hat_required = n_hat;
        }
        Err(e) => return Ok(draft.fail(Stage::Counts, e)),
    }
    Ok(finish(draft, problem, basis, ds, opts))
}

fn preflight(problem: &VerificationProblem, basis: &MonomialBasis) -> Result<()> {
    problem.validate()?;
    check_dimension(problem.dimension(), basis.dimension())
}

fn finish(
    mut draft: Draft,
    problem: &VerificationProblem,
    basis: &MonomialBasis,
    ds: &ScenarioDataset,
    opts: &VerifyOptions,
) -> VerificationReport {
    let r = &mut draft.report;
    r.counts.n_used = ds.len() as u64;
    r.counts.n_hat_used = ds.n_hat() as u64;
    r.region_counts = RegionCounts {
        state: ds.count_in(&problem.state_region) as u64,
        initial: ds.count_in(&problem.initial_region) as u64,
        unsafe_region: ds.count_in(&problem.unsafe_region) as u64,
    };

    let t = Instant::now();
    let scp_opts = ScpOptions { tighten: opts.tighten(problem), ..opts.scp };
    let cs = scp::assemble(problem, basis, ds, &scp_opts);
    r.timing.assembly_seconds = t.elapsed().as_secs_f64();
    let cs = match cs {
        Ok(cs) => cs,
        Err(e) => return draft.fail(Stage::Assembly, e),
    };

    let t = Instant::now();
    let sol = lp::solve(&cs, &opts.lp);
    r.timing.solve_seconds = t.elapsed().as_secs_f64();
    let sol = match sol {
        Ok(s) => s,
        Err(e) => return draft.fail(Stage::Solve, e),
    };
    let names = |rows: &[usize]| rows.iter().map(|&i| cs.tag(i).to_string()).collect();
    r.solver = Some(SolverDiagnostics {
        status: sol.status,
        iterations: sol.iterations as u64,
        outer_iterations: sol.outer_iterations as u64,
        working_rows: sol.working_rows as u64,
        total_rows: cs.num_rows() as u64,
        max_residual: sol.max_residual,
        active_rows: names(&sol.active_rows),
        certificate_rows: names(&sol.certificate_rows),
    });

    let kappa = match (&sol.status, &sol.d_star) {
        (LpStatus::Optimal, Some(d)) => {
            let cert = BarrierCertificate::new(
                basis.clone(),
                d[COL_B..].to_vec(),
                d[COL_LAMBDA],
                d[COL_C].max(0.0),
                d[COL_K],
            );
            match cert {
                Ok(cert) => {
                    r.theorem1_bound = theorem1_bound(&cert, problem.horizon).ok();
                    if basis.degree() == 2 {
                        r.spectrum = cert.lambda_max_quadratic().ok().map(|lambda_max| Spectrum {
                            gershgorin_cap: opts.scp.p_max,
                            lambda_max,
                        });
                    }
                    r.certificate = Some(cert);
                    Some(d[COL_K])
                }
                Err(e) => return draft.fail(Stage::Solve, e),
            }
        }
        _ => None,
    };

    // re-derive every condition of the rule from the problem itself
    let n_ok = required_counts(problem, basis.len(), opts.summation_limit)
        .map(|(_, n, n_hat)| (ds.len() as u64 >= n, ds.n_hat() as u64 >= n_hat))
        .unwrap_or((false, false));
    let eps = rule_margin(problem, opts.mode);
    r.checks.n_ok = n_ok.0;
    r.checks.n_hat_ok = n_ok.1;
    r.checks.margin_ok = kappa.is_some_and(|k| k + eps <= 0.0);
    let counts_ok = r.checks.counts_waived || (n_ok.0 && n_ok.1);
    r.verdict = Verdict::decide(kappa, eps, problem.rho, confidence(problem, opts.mode), counts_ok);
    draft.report
}
