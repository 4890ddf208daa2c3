//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may
//! appear at most once and unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::domain::{MonomialBasis, Region, VerificationProblem};
use crate::error::{Error, Result};
use crate::lp::LpOptions;
use crate::scp::ScpOptions;
use crate::systems::{BlackBoxSystem, LinearSystem, PluginSystem, RoomTemperatureSystem};
use crate::verify::{Mode, VerifyOptions};

pub const KEYS: &[&str] = &[
    "system",
    "state_lower",
    "state_upper",
    "initial_lower",
    "initial_upper",
    "unsafe_lower",
    "unsafe_upper",
    "horizon",
    "rho",
    "beta",
    "beta_s",
    "delta",
    "mu",
    "epsilon",
    "lipschitz_bound",
    "variance_bound",
    "degree",
    "seed",
    "p_max",
    "b_max",
    "eta",
    "summation_limit",
    "tighten",
    "compact",
    "unsound_n",
    "unsound_n_hat",
    "chunk_size",
    "room_sigma_w",
    "linear_a",
    "linear_sigma",
    "plugin_dimension",
    "audit_grid",
    "audit_mc",
];

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Room { sigma_w: f64 },
    Linear { a: f64, sigma: f64 },
    Plugin { command: String, dimension: usize },
}

impl SystemSpec {
    pub fn build(&self) -> Result<Box<dyn BlackBoxSystem>> {
        Ok(match self {
            SystemSpec::Room { sigma_w } => Box::new(RoomTemperatureSystem::with_sigma(*sigma_w)),
            SystemSpec::Linear { a, sigma } => Box::new(LinearSystem::new(*a, *sigma)),
            SystemSpec::Plugin { command, dimension } => Box::new(PluginSystem::spawn(command, *dimension)?),
        })
    }

    fn canonical(&self) -> String {
        match self {
            SystemSpec::Room { sigma_w } => format!("room(sigma_w={sigma_w:?})"),
            SystemSpec::Linear { a, sigma } => format!("linear(a={a:?},sigma={sigma:?})"),
            SystemSpec::Plugin { command, dimension } => format!("plugin({command},n={dimension})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub problem: VerificationProblem,
    pub degree: u32,
    pub seed: u64,
    pub p_max: Option<f64>,
    pub b_max: Option<f64>,
    pub eta: f64,
    pub summation_limit: Option<u64>,
    pub tighten: bool,
    pub compact: bool,
    pub unsound_n: Option<u64>,
    pub unsound_n_hat: Option<u64>,
    pub chunk_size: usize,
    pub audit_grid: usize,
    pub audit_mc: usize,
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T> {
        match self.take(key) {
            Some(v) => parse_value(key, &v),
            None => Err(Error::config(key, "missing")),
        }
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        self.take(key).map_or(Ok(default), |v| parse_value(key, &v))
    }

    /// Absent or `none` → `None`.
    fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) if v.eq_ignore_ascii_case("none") => Ok(None),
            Some(v) => parse_value(key, &v).map(Some),
        }
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        let raw = self.take(key).ok_or_else(|| Error::config(key, "missing"))?;
        raw.split(',').map(|p| parse_value(key, p.trim())).collect()
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn region(e: &mut Entries, name: &str) -> Result<Region> {
    let lo_key = format!("{name}_lower");
    let lower = e.list(&lo_key)?;
    let upper = e.list(&format!("{name}_upper"))?;
    Region::new(lower, upper).map_err(|err| Error::config(lo_key, err.to_string()))
}

/// Maps a problem validation message onto the config key it names.
fn attribute(err: Error) -> Error {
    let msg = err.to_string();
    let key = [
        "epsilon exceeds lipschitz_bound",
        "lipschitz_bound",
        "variance_bound",
        "beta_s",
        "beta",
        "rho",
        "delta",
        "mu",
        "epsilon",
        "initial_region",
        "unsafe_region",
        "initial and unsafe",
    ]
    .iter()
    .find(|k| msg.contains(*k))
    .map(|k| match *k {
        "epsilon exceeds lipschitz_bound" => "epsilon",
        "initial_region" | "initial and unsafe" => "initial_lower",
        "unsafe_region" => "unsafe_lower",
        other => other,
    });
    match key {
        Some(k) => Error::config(k, msg.trim_start_matches("invalid input: ")),
        None => err,
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("line {} is not `key = value`", ln + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::config(k, "unknown key"));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::config(k, "given more than once"));
            }
        }
        let mut e = Entries { map };

        let system_raw = e.take("system").unwrap_or_else(|| "room".into());
        let sigma_w = e.or("room_sigma_w", RoomTemperatureSystem::default().sigma_w)?;
        let linear_a = e.or("linear_a", 0.5)?;
        let linear_sigma = e.or("linear_sigma", 0.0)?;
        let plugin_dimension = e.optional::<usize>("plugin_dimension")?;
        let system = match system_raw.as_str() {
            "room" => SystemSpec::Room { sigma_w },
            "linear" => SystemSpec::Linear { a: linear_a, sigma: linear_sigma },
            s => match s.strip_prefix("plugin:") {
                Some(cmd) if !cmd.trim().is_empty() => SystemSpec::Plugin {
                    command: cmd.trim().to_string(),
                    dimension: plugin_dimension.ok_or_else(|| Error::config("plugin_dimension", "required for plugin systems"))?,
                },
                _ => return Err(Error::config("system", format!("expected room, linear or plugin:<command>, got `{s}`"))),
            },
        };

        let problem = VerificationProblem {
            state_region: region(&mut e, "state")?,
            initial_region: region(&mut e, "initial")?,
            unsafe_region: region(&mut e, "unsafe")?,
            horizon: e.required("horizon")?,
            rho: e.required("rho")?,
            beta: e.required("beta")?,
            beta_s: e.required("beta_s")?,
            delta: e.required("delta")?,
            mu: e.or("mu", -1e-3)?,
            epsilon: e.required("epsilon")?,
            lipschitz_bound: e.required("lipschitz_bound")?,
            variance_bound: e.required("variance_bound")?,
        };
        problem.validate().map_err(attribute)?;

        let cfg = RunConfig {
            system,
            problem,
            degree: e.or("degree", 2)?,
            seed: e.or("seed", 0)?,
            p_max: e.optional("p_max")?,
            b_max: match e.take("b_max") {
                None => Some(1e3),
                Some(v) if v.eq_ignore_ascii_case("none") => None,
                Some(v) => Some(parse_value("b_max", &v)?),
            },
            eta: e.or("eta", 1e-6)?,
            summation_limit: e.optional("summation_limit")?,
            tighten: e.or("tighten", false)?,
            compact: e.or("compact", true)?,
            unsound_n: e.optional("unsound_n")?,
            unsound_n_hat: e.optional("unsound_n_hat")?,
            chunk_size: e.or("chunk_size", crate::sampling::DEFAULT_CHUNK_SIZE)?,
            audit_grid: e.or("audit_grid", 1301)?,
            audit_mc: e.or("audit_mc", 1000)?,
        };
        debug_assert!(e.map.is_empty());
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.system_dimension() != self.problem.dimension() {
            return Err(Error::config("system", "system dimension differs from the state region"));
        }
        if self.degree == 0 {
            return Err(Error::config("degree", "must be at least 1"));
        }
        if self.p_max.is_some_and(|p| !(p > 0.0)) {
            return Err(Error::config("p_max", "must be positive"));
        }
        if self.p_max.is_some() && self.degree != 2 {
            return Err(Error::config("p_max", "the spectral cap needs degree 2"));
        }
        if self.b_max.is_some_and(|b| !(b > 0.0)) {
            return Err(Error::config("b_max", "must be positive"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::config("eta", "must be positive"));
        }
        if self.unsound_n == Some(0) {
            return Err(Error::config("unsound_n", "must be positive"));
        }
        if self.unsound_n_hat == Some(0) {
            return Err(Error::config("unsound_n_hat", "must be positive"));
        }
        if self.chunk_size == 0 {
            return Err(Error::config("chunk_size", "must be positive"));
        }
        if self.audit_grid < 2 || self.audit_mc == 0 {
            return Err(Error::config("audit_grid", "audit needs audit_grid >= 2 and audit_mc >= 1"));
        }
        Ok(())
    }

    fn system_dimension(&self) -> usize {
        match &self.system {
            SystemSpec::Room { .. } | SystemSpec::Linear { .. } => 1,
            SystemSpec::Plugin { dimension, .. } => *dimension,
        }
    }

    pub fn mode(&self) -> Mode {
        if self.tighten {
            Mode::Tightened
        } else {
            Mode::Standard
        }
    }

    pub fn basis(&self) -> Result<MonomialBasis> {
        MonomialBasis::new(self.problem.dimension(), self.degree)
    }

    /// Everything that determines the dataset and the verdict, one
    /// `key=value` per line in sorted order. Audit and chunking settings
    /// are excluded.
    pub fn canonical(&self) -> String {
        let p = &self.problem;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:?}"));
        let opt_u = |v: Option<u64>| v.map_or("none".to_string(), |x| x.to_string());
        let mut kv = [
            ("b_max", if self.p_max.is_some() { "none".into() } else { opt(self.b_max) }),
            ("beta", format!("{:?}", p.beta)),
            ("beta_s", format!("{:?}", p.beta_s)),
            ("compact", self.compact.to_string()),
            ("degree", self.degree.to_string()),
            ("delta", format!("{:?}", p.delta)),
            ("epsilon", format!("{:?}", p.epsilon)),
            ("eta", format!("{:?}", self.eta)),
            ("horizon", p.horizon.to_string()),
            ("initial_lower", list(p.initial_region.lower())),
            ("initial_upper", list(p.initial_region.upper())),
            ("lipschitz_bound", format!("{:?}", p.lipschitz_bound)),
            ("mu", format!("{:?}", p.mu)),
            ("p_max", opt(self.p_max)),
            ("rho", format!("{:?}", p.rho)),
            ("seed", self.seed.to_string()),
            ("state_lower", list(p.state_region.lower())),
            ("state_upper", list(p.state_region.upper())),
            ("summation_limit", opt_u(self.summation_limit)),
            ("system", self.system.canonical()),
            ("tighten", self.tighten.to_string()),
            ("unsafe_lower", list(p.unsafe_region.lower())),
            ("unsafe_upper", list(p.unsafe_region.upper())),
            ("unsound_n", opt_u(self.unsound_n)),
            ("unsound_n_hat", opt_u(self.unsound_n_hat)),
            ("variance_bound", format!("{:?}", p.variance_bound)),
        ];
        kv.sort_by(|a, b| a.0.cmp(b.0));
        kv.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest())
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            mode: self.mode(),
            scp: ScpOptions {
                tighten: 0.0,
                eta: self.eta,
                b_max: self.b_max,
                p_max: self.p_max,
            },
            lp: LpOptions::default(),
            summation_limit: self.summation_limit,
            unsound_n: self.unsound_n,
            unsound_n_hat: self.unsound_n_hat,
            compact: self.compact,
            config_digest: Some(self.digest_hex()),
            system: Some(self.system.canonical()),
        }
    }
}
