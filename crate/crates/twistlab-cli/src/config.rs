//! Run configuration: strict `key = value` config files with `[section]`
//! headers, merged with command-line overrides.
//!
//! Unknown sections, unknown keys, and malformed values are hard errors;
//! nothing is silently ignored.

use std::path::PathBuf;
use twistlab::families::Profile;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration: exit code 2.
    Config(String),
    /// Iteration budget exhausted: exit code 3.
    Budget(String),
    /// No locking parameter in range: exit code 4.
    TongueMissed(String),
    /// Any other runtime failure: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::TongueMissed(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Budget(m)
            | CliError::TongueMissed(m)
            | CliError::Runtime(m) => m,
        }
    }
}

pub fn classify_circle(e: &twistlab::circle::CircleError) -> CliError {
    use twistlab::circle::CircleError::*;
    match e {
        BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        TongueMissed { .. } => CliError::TongueMissed(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

pub fn classify_annulus(e: &twistlab::annulus::AnnulusError) -> CliError {
    match e {
        twistlab::annulus::AnnulusError::Circle(c) => classify_circle(c),
        other => CliError::Runtime(other.to_string()),
    }
}

/// All recognized settings; every field optional so that a config file and
/// command-line flags can be merged before defaults apply.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    // [family]
    pub kind: Option<String>,
    pub phi: Option<Profile>,
    pub psi: Option<Profile>,
    pub omega: Option<f64>,
    pub eps: Option<f64>,
    pub p: Option<i64>,
    pub q: Option<u64>,
    pub eps0: Option<f64>,
    pub dip: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub boundary: Option<u8>,
    // [run]
    pub tol: Option<f64>,
    pub n: Option<u64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub bins: Option<usize>,
    pub window: Option<usize>,
    pub steps: Option<usize>,
    pub orbits: Option<usize>,
    pub eps_ball: Option<f64>,
    pub n_max: Option<u64>,
    pub q_max: Option<u64>,
    pub t_lo: Option<f64>,
    pub t_hi: Option<f64>,
    pub y_seeds: Option<Vec<f64>>,
    pub lipschitz: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub negative_control: Option<bool>,
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| {
        CliError::Config(format!("bad value `{v}` for {section}.{key}"))
    })
}

impl Settings {
    /// Parses a config file: `[section]` headers, `key = value` lines,
    /// `#` comments. Unknown sections or keys are errors.
    pub fn from_config_str(text: &str) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Config(format!("line {}: unterminated section header", lineno + 1)))?;
                match name {
                    "family" | "run" => section = name.to_string(),
                    other => {
                        return Err(CliError::Config(format!(
                            "line {}: unknown section [{other}]",
                            lineno + 1
                        )))
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(CliError::Config(format!(
                    "line {}: key `{key}` appears before any [section]",
                    lineno + 1
                )));
            }
            s.set(&section, key, value)?;
        }
        Ok(s)
    }

    pub fn from_config_file(path: &std::path::Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_config_str(&text)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), CliError> {
        match (section, key) {
            ("family", "kind") => self.kind = Some(v.to_string()),
            ("family", "phi") => {
                self.phi = Some(v.parse().map_err(CliError::Config)?);
            }
            ("family", "psi") => {
                self.psi = Some(v.parse().map_err(CliError::Config)?);
            }
            ("family", "omega") => self.omega = Some(parse_num(section, key, v)?),
            ("family", "eps") => self.eps = Some(parse_num(section, key, v)?),
            ("family", "p") => self.p = Some(parse_num(section, key, v)?),
            ("family", "q") => self.q = Some(parse_num(section, key, v)?),
            ("family", "eps0") => self.eps0 = Some(parse_num(section, key, v)?),
            ("family", "dip") => self.dip = Some(parse_num(section, key, v)?),
            ("family", "a") => self.a = Some(parse_num(section, key, v)?),
            ("family", "b") => self.b = Some(parse_num(section, key, v)?),
            ("family", "alpha") => self.alpha = Some(parse_num(section, key, v)?),
            ("family", "boundary") => self.boundary = Some(parse_num(section, key, v)?),
            ("run", "tol") => self.tol = Some(parse_num(section, key, v)?),
            ("run", "n") => self.n = Some(parse_num(section, key, v)?),
            ("run", "nx") => self.nx = Some(parse_num(section, key, v)?),
            ("run", "ny") => self.ny = Some(parse_num(section, key, v)?),
            ("run", "bins") => self.bins = Some(parse_num(section, key, v)?),
            ("run", "window") => self.window = Some(parse_num(section, key, v)?),
            ("run", "steps") => self.steps = Some(parse_num(section, key, v)?),
            ("run", "orbits") => self.orbits = Some(parse_num(section, key, v)?),
            ("run", "eps_ball") => self.eps_ball = Some(parse_num(section, key, v)?),
            ("run", "n_max") => self.n_max = Some(parse_num(section, key, v)?),
            ("run", "q_max") => self.q_max = Some(parse_num(section, key, v)?),
            ("run", "t_lo") => self.t_lo = Some(parse_num(section, key, v)?),
            ("run", "t_hi") => self.t_hi = Some(parse_num(section, key, v)?),
            ("run", "y_seeds") => {
                let seeds: Result<Vec<f64>, _> =
                    v.split(',').map(|part| part.trim().parse()).collect();
                self.y_seeds = Some(seeds.map_err(|_| {
                    CliError::Config(format!("bad value `{v}` for run.y_seeds"))
                })?);
            }
            ("run", "lipschitz") => self.lipschitz = Some(parse_num(section, key, v)?),
            ("run", "out") => self.out = Some(PathBuf::from(v)),
            ("run", "seed") => self.seed = Some(parse_num(section, key, v)?),
            ("run", "threads") => self.threads = Some(parse_num(section, key, v)?),
            ("run", "negative_control") => {
                self.negative_control = Some(parse_num(section, key, v)?)
            }
            (sec, k) => {
                return Err(CliError::Config(format!("unknown key `{k}` in section [{sec}]")))
            }
        }
        Ok(())
    }

    /// Overlays `other` on top of `self`: any field set in `other` wins.
    pub fn merge(mut self, other: Settings) -> Settings {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            kind, phi, psi, omega, eps, p, q, eps0, dip, a, b, alpha, boundary, tol, n, nx, ny,
            bins, window, steps, orbits, eps_ball, n_max, q_max, t_lo, t_hi, y_seeds, lipschitz,
            out, seed, threads, negative_control
        );
        self
    }

    pub fn tol_or(&self, default: f64) -> Result<f64, CliError> {
        let tol = self.tol.unwrap_or(default);
        if tol <= 0.0 {
            return Err(CliError::Config(format!("tol = {tol} must be positive")));
        }
        Ok(tol)
    }

    pub fn require_kind(&self) -> Result<&str, CliError> {
        self.kind
            .as_deref()
            .ok_or_else(|| CliError::Config("no family selected: pass --family or set [family] kind".into()))
    }

    pub fn seed_or_zero(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
