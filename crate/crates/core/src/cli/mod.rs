//! Command-line front end. [`run`] returns the process exit code:
//! 0 certified (or success), 2 inconclusive, 1 error.

mod config;

pub use config::{RunConfig, SystemSpec, KEYS};

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Parser, Subcommand};

use crate::bounds;
use crate::domain::BarrierCertificate;
use crate::error::{Error, Result};
use crate::sampling::{read_dataset, read_header, write_dataset, DatasetSpec};
use crate::scp::{self, ScpOptions};
use crate::systems::{serve_plugin, BlackBoxSystem, LinearSystem, RoomTemperatureSystem};
use crate::verify::{self, audit_certificate, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

const DATASET_FILE: &str = "dataset.bcds";

#[derive(Parser, Debug)]
#[command(name = "databc", version, about = "Data-driven safety verification of black-box stochastic systems")]
struct Cli {
    /// Run configuration (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Tightened program; certifies on K* <= 0 at confidence 1 - beta_s.
    #[arg(long, global = true)]
    tighten: bool,
    /// Unsound experiment: use this many state samples.
    #[arg(long = "unsound-N", global = true)]
    unsound_n: Option<u64>,
    /// Unsound experiment: use this many successors per sample.
    #[arg(long = "unsound-Nhat", global = true)]
    unsound_n_hat: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the required sample counts.
    Counts,
    /// Write the scenario dataset to <out>/dataset.bcds (resumable).
    Sample,
    /// Solve the scenario program and write report.json, certificate.json
    /// and audit.csv.
    Verify {
        /// Dataset file (default <out>/dataset.bcds).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Skip the grid audit.
        #[arg(long)]
        no_audit: bool,
    },
    /// Grid audit of a certificate into <out>/audit.csv.
    Audit {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Write the scenario program in LP text format.
    LpDump {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Output file (default <out>/program.lp).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Closed-form bounds.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Serve a built-in system over the plugin protocol on stdin/stdout.
    #[command(hide = true)]
    PluginServe {
        #[arg(long, default_value = "room")]
        system: String,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
    },
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Least N whose binomial tail is at most beta.
    ScenarioCount {
        #[arg(long)]
        epsilon_bar: f64,
        #[arg(long)]
        beta: f64,
        /// Summation limit (Q + 2).
        #[arg(long)]
        limit: u64,
    },
    /// ceil(M / (delta^2 beta_s)).
    EmpiricalCount {
        #[arg(long)]
        m_hat: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        beta_s: f64,
    },
    /// 2 m lambda_max (L L_hat + 1).
    LipschitzQuadratic {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        l: f64,
        #[arg(long)]
        l_hat: f64,
    },
    /// 2 m lambda_max (F^2 + 1).
    LipschitzLinear {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        lambda_max: f64,
        #[arg(long)]
        frobenius: f64,
    },
    /// 1 - (1 + c T) / lambda.
    Theorem1 {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        horizon: u32,
    },
    /// Variance bound for a 1-D barrier under additive N(0, sigma^2) noise.
    Variance1d {
        /// Coefficient magnitude bounds, highest power first.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeff_bounds: Vec<f64>,
        #[arg(long)]
        fa_bound: f64,
        #[arg(long)]
        sigma: f64,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::invalid("--workers must be positive"));
        }
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match &cli.command {
        Command::Bounds(b) => return bounds_command(b),
        Command::PluginServe { system, sigma, a } => return plugin_serve(system, *sigma, *a),
        _ => {}
    }
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Counts => counts(&cfg),
        Command::Sample => sample(&cfg, &cli.out),
        Command::Verify { dataset, no_audit } => verify_cmd(&cfg, &cli.out, dataset.as_deref(), *no_audit),
        Command::Audit { certificate } => audit_cmd(&cfg, &cli.out, certificate),
        Command::LpDump { dataset, output } => lp_dump(&cfg, &cli.out, dataset.as_deref(), output.as_deref()),
        Command::Bounds(_) | Command::PluginServe { .. } => unreachable!(),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::invalid("--config <path> is required"))?;
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.tighten {
        cfg.tighten = true;
    }
    if let Some(n) = cli.unsound_n {
        if n == 0 {
            return Err(Error::invalid("--unsound-N must be positive"));
        }
        cfg.unsound_n = Some(n);
    }
    if let Some(n) = cli.unsound_n_hat {
        if n == 0 {
            return Err(Error::invalid("--unsound-Nhat must be positive"));
        }
        cfg.unsound_n_hat = Some(n);
    }
    Ok(cfg)
}

struct Counts {
    epsilon_bar: f64,
    limit: u64,
    n_required: u64,
    n_hat_required: u64,
    n: u64,
    n_hat: u64,
}

fn compute_counts(cfg: &RunConfig) -> Result<Counts> {
    let basis = cfg.basis()?;
    let (inputs, n, n_hat) = verify::required_counts(&cfg.problem, basis.len(), cfg.summation_limit)?;
    Ok(Counts {
        epsilon_bar: inputs.epsilon_bar,
        limit: inputs.summation_limit,
        n_required: n,
        n_hat_required: n_hat,
        n: cfg.unsound_n.unwrap_or(n),
        n_hat: cfg.unsound_n_hat.unwrap_or(n_hat),
    })
}

fn counts(cfg: &RunConfig) -> Result<i32> {
    let c = compute_counts(cfg)?;
    let p = &cfg.problem;
    let q = cfg.basis()?.len();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let rows: Vec<(&str, String)> = vec![
        ("epsilon", format!("{}", p.epsilon)),
        ("lipschitz_bound", format!("{}", p.lipschitz_bound)),
        ("epsilon_bar", format!("{:e}", c.epsilon_bar)),
        ("coefficients", q.to_string()),
        ("summation_limit", c.limit.to_string()),
        ("beta", format!("{}", p.beta)),
        ("N", c.n_required.to_string()),
        ("variance_bound", format!("{}", p.variance_bound)),
        ("delta", format!("{}", p.delta)),
        ("beta_s", format!("{}", p.beta_s)),
        ("N_hat", c.n_hat_required.to_string()),
        ("rho", format!("{}", p.rho)),
        ("horizon", p.horizon.to_string()),
        ("confidence", format!("{}", 1.0 - p.beta - p.beta_s)),
    ];
    for (k, v) in rows {
        writeln!(out, "{k:<16} {v}")?;
    }
    if cfg.unsound_n.is_some() || cfg.unsound_n_hat.is_some() {
        writeln!(out, "{:<16} {}", "N_used", c.n)?;
        writeln!(out, "{:<16} {}", "N_hat_used", c.n_hat)?;
        writeln!(out, "{}", verify::UNSOUND_WATERMARK)?;
    }
    Ok(EXIT_OK)
}

fn sample(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let c = compute_counts(cfg)?;
    fs::create_dir_all(out)?;
    let path = out.join(DATASET_FILE);
    let sys = cfg.system.build()?;
    let spec = DatasetSpec {
        region: cfg.problem.state_region.clone(),
        degree: cfg.degree,
        n_samples: c.n,
        n_hat: c.n_hat,
        run_seed: cfg.seed,
        compact: cfg.compact,
        digest: cfg.digest(),
        chunk_size: cfg.chunk_size,
    };
    let mut progress = |done: u64, total: u64| eprintln!("sampled {done}/{total}");
    let header = write_dataset(&*sys, &spec, &path, &mut progress)?;
    println!(
        "wrote {} (N={}, N_hat={}, compact={}, digest={})",
        path.display(),
        header.n_samples,
        header.n_hat,
        header.compact,
        header.digest_hex()
    );
    Ok(EXIT_OK)
}

fn load_matching_dataset(cfg: &RunConfig, out: &Path, dataset: Option<&Path>) -> Result<crate::sampling::ScenarioDataset> {
    let path = dataset.map(Path::to_path_buf).unwrap_or_else(|| out.join(DATASET_FILE));
    if !path.exists() {
        return Err(Error::Dataset(format!("{} does not exist", path.display())));
    }
    let header = read_header(&path)?;
    if header.digest != cfg.digest() {
        return Err(Error::Dataset(format!(
            "dataset/config mismatch: dataset digest {}, config digest {}",
            header.digest_hex(),
            cfg.digest_hex()
        )));
    }
    Ok(read_dataset(&path)?.1)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn verify_cmd(cfg: &RunConfig, out: &Path, dataset: Option<&Path>, no_audit: bool) -> Result<i32> {
    let ds = load_matching_dataset(cfg, out, dataset)?;
    let basis = cfg.basis()?;
    let report = verify::verify_dataset(&cfg.problem, &basis, &ds, &cfg.verify_options())?;
    fs::create_dir_all(out)?;
    write_json(&out.join("report.json"), &report)?;
    if let Some(cert) = &report.certificate {
        write_json(&out.join("certificate.json"), cert)?;
        if !no_audit && cfg.problem.dimension() <= 2 {
            let sys = cfg.system.build()?;
            write_audit(cert, cfg, &*sys, out)?;
        }
    }
    print_report(&report);
    Ok(exit_code(&report))
}

pub fn exit_code(report: &VerificationReport) -> i32 {
    if report.failure.is_some() {
        EXIT_ERROR
    } else if report.is_certified() {
        EXIT_OK
    } else {
        EXIT_INCONCLUSIVE
    }
}

fn print_report(r: &VerificationReport) {
    if let Some(w) = &r.watermark {
        println!("{w}");
    }
    if let Some(f) = &r.failure {
        println!("failed at {:?}: {}", f.stage, f.message);
    }
    println!("status           {:?}", r.verdict.status);
    match r.verdict.kappa_star {
        Some(k) => println!("kappa_star       {k}"),
        None => println!("kappa_star       none"),
    }
    if let Some(m) = r.verdict.margin() {
        println!("margin           {m}");
    }
    println!("probability      >= {}", r.verdict.probability_lower_bound);
    println!("confidence       {}", r.verdict.confidence);
    if let Some(c) = &r.certificate {
        println!("lambda           {}", c.lambda());
        println!("c                {}", c.c());
        println!("coefficients     {:?}", c.coefficients());
    }
    if let Some(b) = r.theorem1_bound {
        println!("theorem1_bound   {b}");
    }
    if let Some(s) = &r.solver {
        println!("solver           {:?} after {} pivots, {} rounds", s.status, s.iterations, s.outer_iterations);
    }
}

fn write_audit(cert: &BarrierCertificate, cfg: &RunConfig, sys: &dyn BlackBoxSystem, out: &Path) -> Result<()> {
    let table = audit_certificate(cert, &cfg.problem, sys, cfg.audit_grid, cfg.audit_mc, cfg.seed)?;
    let file = fs::File::create(out.join("audit.csv"))?;
    table.write_csv(BufWriter::new(file))?;
    let s = &table.summary;
    println!(
        "audit            max B on initial {:?}, min B on unsafe {:?}, max slack {}",
        s.max_b_initial, s.min_b_unsafe, s.max_slack
    );
    Ok(())
}

fn audit_cmd(cfg: &RunConfig, out: &Path, certificate: &Path) -> Result<i32> {
    let cert: BarrierCertificate = serde_json::from_str(&fs::read_to_string(certificate)?)?;
    let sys = cfg.system.build()?;
    fs::create_dir_all(out)?;
    write_audit(&cert, cfg, &*sys, out)?;
    Ok(EXIT_OK)
}

fn lp_dump(cfg: &RunConfig, out: &Path, dataset: Option<&Path>, output: Option<&Path>) -> Result<i32> {
    let ds = load_matching_dataset(cfg, out, dataset)?;
    let basis = cfg.basis()?;
    let opts = cfg.verify_options();
    let scp_opts = ScpOptions { tighten: opts.tighten(&cfg.problem), ..opts.scp };
    let cs = scp::assemble(&cfg.problem, &basis, &ds, &scp_opts)?;
    let path = output.map(Path::to_path_buf).unwrap_or_else(|| out.join("program.lp"));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(&path)?;
    let mut w = BufWriter::new(file);
    scp::write_lp(&cs, &mut w)?;
    w.flush()?;
    println!("wrote {} ({} rows)", path.display(), cs.num_rows());
    Ok(EXIT_OK)
}

fn bounds_command(cmd: &BoundsCommand) -> Result<i32> {
    let value = match *cmd {
        BoundsCommand::ScenarioCount { epsilon_bar, beta, limit } => {
            let inp = bounds::SampleComplexityInputs { epsilon_bar, beta, summation_limit: limit };
            bounds::minimal_scenario_count(&inp)?.to_string()
        }
        BoundsCommand::EmpiricalCount { m_hat, delta, beta_s } => bounds::empirical_count(m_hat, delta, beta_s)?.to_string(),
        BoundsCommand::LipschitzQuadratic { m, lambda_max, l, l_hat } => {
            bounds::lipschitz_quadratic(m, lambda_max, l, l_hat).to_string()
        }
        BoundsCommand::LipschitzLinear { m, lambda_max, frobenius } => {
            bounds::lipschitz_linear(m, lambda_max, frobenius).to_string()
        }
        BoundsCommand::Theorem1 { lambda, c, horizon } => verify::theorem1_bound_raw(lambda, c, horizon)?.to_string(),
        BoundsCommand::Variance1d { ref coeff_bounds, fa_bound, sigma } => {
            if coeff_bounds.is_empty() {
                return Err(Error::invalid("--coeff-bounds needs at least one value"));
            }
            let k = coeff_bounds.len() - 1;
            let moments = bounds::gaussian_raw_moments(sigma, 2 * k);
            bounds::variance_bound_additive_1d(coeff_bounds, fa_bound, &moments)?.to_string()
        }
    };
    println!("{value}");
    Ok(EXIT_OK)
}

fn plugin_serve(system: &str, sigma: Option<f64>, a: f64) -> Result<i32> {
    let sys: Box<dyn BlackBoxSystem> = match system {
        "room" => Box::new(RoomTemperatureSystem::with_sigma(sigma.unwrap_or(RoomTemperatureSystem::default().sigma_w))),
        "linear" => Box::new(LinearSystem::new(a, sigma.unwrap_or(0.0))),
        other => return Err(Error::invalid(format!("unknown built-in system `{other}`"))),
    };
    let stdin = io::stdin();
    serve_plugin(&*sys, stdin.lock(), io::stdout().lock())?;
    Ok(EXIT_OK)
}
