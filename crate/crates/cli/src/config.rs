//! Parameter resolution: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

/// A problem with the command line or config file; exits with code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub const SEED_ENV: &str = "ICPMAC_SEED";

/// Numeric parameters shared by every subcommand. Each one may also be set
/// as `key = value` in the `--config` file, using the long flag name.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub power: Option<f64>,
    /// Second-environment power surplus.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Interpolation weight of the uniform codebook.
    #[arg(long, global = true)]
    pub a: Option<f64>,
    /// Second-environment variance surplus σ_d².
    #[arg(long = "sigma-d", global = true)]
    pub sigma_d: Option<f64>,
    /// Second-environment mean shift.
    #[arg(long = "mu-d", global = true, allow_negative_numbers = true)]
    pub mu_d: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Master seed; falls back to the ICPMAC_SEED environment variable.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long = "emit-svg", global = true)]
    pub emit_svg: bool,
    /// File of `key = value` lines supplying defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 15] = [
    "n", "m", "k", "power", "d", "a", "sigma-d", "mu-d", "epsilon", "alpha", "trials", "seed",
    "jobs", "out-dir", "emit-svg",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, origin: &Path) -> Result<BTreeMap<String, String>, Usage> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Usage(format!("{}:{}: expected key = value", origin.display(), i + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Usage(format!(
                "{}:{}: unknown key `{key}`",
                origin.display(),
                i + 1
            )));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

impl Params {
    /// Fills unset flags from the config file and the seed from the environment.
    pub fn resolve(mut self) -> Result<Params, Usage> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Usage(format!("cannot read config {}: {e}", path.display())))?;
            let file = parse_config(&text, path)?;
            self.merge(&file)?;
        }
        if self.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                self.seed = Some(parse_value(SEED_ENV, &v)?);
            }
        }
        Ok(self)
    }

    fn merge(&mut self, file: &BTreeMap<String, String>) -> Result<(), Usage> {
        fn fill<T: FromStr>(slot: &mut Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<(), Usage> {
            if slot.is_none() {
                if let Some(v) = file.get(key) {
                    *slot = Some(parse_value(key, v)?);
                }
            }
            Ok(())
        }
        fill(&mut self.n, file, "n")?;
        fill(&mut self.m, file, "m")?;
        fill(&mut self.k, file, "k")?;
        fill(&mut self.power, file, "power")?;
        fill(&mut self.d, file, "d")?;
        fill(&mut self.a, file, "a")?;
        fill(&mut self.sigma_d, file, "sigma-d")?;
        fill(&mut self.mu_d, file, "mu-d")?;
        fill(&mut self.epsilon, file, "epsilon")?;
        fill(&mut self.alpha, file, "alpha")?;
        fill(&mut self.trials, file, "trials")?;
        fill(&mut self.seed, file, "seed")?;
        fill(&mut self.jobs, file, "jobs")?;
        fill(&mut self.out_dir, file, "out-dir")?;
        if !self.emit_svg {
            if let Some(v) = file.get("emit-svg") {
                self.emit_svg = parse_value("emit-svg", v)?;
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, Usage> {
    value
        .parse()
        .map_err(|_| Usage(format!("invalid value `{value}` for {key}")))
}
