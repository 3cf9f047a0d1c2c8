//! Seeded Monte Carlo harness.
//!
//! Every trial owns a ChaCha8 stream keyed by `(master seed, grid point,
//! trial index)`, so a trial draws the same support, codebook and noise no
//! matter which worker runs it or in what order. Decoders evaluated at the
//! same grid point therefore see identical data, and error counts are plain
//! integer sums, which keeps results bit-identical across worker counts.

mod presets;

pub use presets::{figure_preset, DEFAULT_SEED, FIGURE_IDS, N_GRID};

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{prop1_bound, shannon_bound, FormulaId};
use crate::channel::{draw_support, transmit, ChannelConfig};
use crate::codebook::{
    make_inter, make_simplex, make_uniform, sample_random_uniform_env, Codebook,
};
use crate::decoders::{jin_decode, mdd, ols_mdd, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::icp::{icp_method1, icp_method2, IcpTestConfig};
use crate::stats::{wilson_interval, WILSON_Z_95};

pub const DEFAULT_TRIALS: u64 = 1000;

/// Column header of the results CSV.
pub const CSV_HEADER: &str = "figure,decoder,codebook,m,k,P,d,a,n,trials,errors,p_err,ci_lo,ci_hi,bound_shannon,bound_prop1,seed";

/// Trailer appended to a results file whose run stopped early.
pub const INCOMPLETE_MARKER: &str = "# INCOMPLETE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderId {
    Mdd,
    OlsMdd,
    Jin,
    IcpMethod1,
    IcpMethod2,
}

impl DecoderId {
    pub const ALL: [DecoderId; 5] = [
        DecoderId::Mdd,
        DecoderId::OlsMdd,
        DecoderId::Jin,
        DecoderId::IcpMethod1,
        DecoderId::IcpMethod2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderId::Mdd => "mdd",
            DecoderId::OlsMdd => "ols_mdd",
            DecoderId::Jin => "jin",
            DecoderId::IcpMethod1 => "icp_method1_simplified",
            DecoderId::IcpMethod2 => "icp_method2_simplified",
        }
    }
}

impl fmt::Display for DecoderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.strip_suffix("_simplified").unwrap_or(s);
        DecoderId::ALL
            .into_iter()
            .find(|d| d.name().strip_suffix("_simplified").unwrap_or(d.name()) == key)
            .ok_or_else(|| Error::invalid("decoder", format!("unknown decoder `{s}`")))
    }
}

/// Codebook family; the blend `a` and surplus `d` come from the grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookFamily {
    Simplex,
    Uniform,
    Inter,
    RandomUniformEnv,
}

impl CodebookFamily {
    pub fn name(self) -> &'static str {
        match self {
            CodebookFamily::Simplex => "simplex",
            CodebookFamily::Uniform => "uniform",
            CodebookFamily::Inter => "inter",
            CodebookFamily::RandomUniformEnv => "random_uniform_env",
        }
    }

    /// Random families draw a fresh codebook in every trial.
    pub fn is_random(self) -> bool {
        matches!(self, CodebookFamily::RandomUniformEnv)
    }
}

impl FromStr for CodebookFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex" => Ok(CodebookFamily::Simplex),
            "uniform" => Ok(CodebookFamily::Uniform),
            "inter" => Ok(CodebookFamily::Inter),
            "random_uniform_env" | "random" => Ok(CodebookFamily::RandomUniformEnv),
            _ => Err(Error::invalid("kind", format!("unknown codebook kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub a: f64,
    pub d: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub figure: Option<u8>,
    pub family: CodebookFamily,
    pub m: usize,
    pub power: f64,
    pub noise_var: f64,
    pub decoders: Vec<DecoderId>,
    pub grid: Vec<GridPoint>,
    pub trials: u64,
    pub master_seed: u64,
    /// Bounds reported next to single-sender rows.
    pub overlays: Vec<FormulaId>,
    pub epsilon: f64,
    pub alpha: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.trials > u32::MAX as u64 {
            return Err(Error::invalid("trials", "at most 2³² trials per grid point"));
        }
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "must hold at least one point"));
        }
        if self.decoders.is_empty() {
            return Err(Error::invalid("decoders", "must name at least one decoder"));
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::invalid("noise_var", format!("must be positive, got {}", self.noise_var)));
        }
        Ok(())
    }

    fn icp_config(&self) -> IcpTestConfig {
        IcpTestConfig {
            alpha: self.alpha,
            noise_var: self.noise_var,
            ..IcpTestConfig::default()
        }
    }

    /// Codebook shared by all trials of `point`, or `None` for random families.
    pub fn fixed_codebook(&self, point: &GridPoint) -> Result<Option<Codebook>> {
        let (n, m, p) = (point.n, self.m, self.power);
        Ok(match self.family {
            CodebookFamily::Simplex => Some(make_simplex(n, m, p)?),
            CodebookFamily::Uniform => Some(make_uniform(n, m, p)?),
            CodebookFamily::Inter => Some(make_inter(n, m, p, point.a)?),
            CodebookFamily::RandomUniformEnv => None,
        })
    }
}

/// One simulated channel use handed to a decoder.
pub struct Trial<'a> {
    pub y: &'a [f64],
    pub codebook: &'a Codebook,
    pub truth: &'a ChannelConfig,
}

/// Anything that maps a trial to an estimated support.
pub trait SupportDecoder: Sync {
    fn label(&self) -> String;

    fn decode(&self, trial: &Trial<'_>, rng: &mut ChaCha8Rng) -> Result<Vec<usize>>;
}

/// A built-in decoder together with the spec parameters it reads.
#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub id: DecoderId,
    pub epsilon: f64,
    pub icp: IcpTestConfig,
}

impl Builtin {
    pub fn from_spec(id: DecoderId, spec: &ExperimentSpec) -> Self {
        Builtin {
            id,
            epsilon: spec.epsilon,
            icp: spec.icp_config(),
        }
    }
}

impl SupportDecoder for Builtin {
    fn label(&self) -> String {
        self.id.name().to_string()
    }

    fn decode(&self, t: &Trial<'_>, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        let k = t.truth.k();
        Ok(match self.id {
            DecoderId::Mdd => mdd(t.y, t.codebook, t.truth.gains(), k)?.support,
            DecoderId::OlsMdd => ols_mdd(t.y, t.codebook, k)?.support,
            DecoderId::Jin => {
                if k != 1 {
                    return Err(Error::invalid("k", "the Jin heuristic handles k = 1 only"));
                }
                jin_decode(t.y, t.codebook, t.truth.noise_var(), self.epsilon, rng)?.support
            }
            DecoderId::IcpMethod1 => icp_method1(t.y, t.codebook, k, &self.icp)?.decode.support,
            DecoderId::IcpMethod2 => icp_method2(t.y, t.codebook, k, &self.icp)?.decode.support,
        })
    }
}

/// Stream of trial `trial` at grid point `point` under `master_seed`.
pub fn trial_rng(master_seed: u64, point: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point as u64) << 32) | trial);
    rng
}

/// Aggregate of one `(grid point, decoder)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub trials: u64,
    pub errors: u64,
    pub p_err: f64,
    pub ci: (f64, f64),
    pub seed: u64,
    pub wall_time: Duration,
}

impl PointResult {
    fn new(trials: u64, errors: u64, seed: u64, wall_time: Duration) -> Self {
        PointResult {
            trials,
            errors,
            p_err: errors as f64 / trials as f64,
            ci: wilson_interval(errors, trials, WILSON_Z_95),
            seed,
            wall_time,
        }
    }

    /// Normal-approximation standard error `√(p̂(1 − p̂)/trials)`.
    pub fn std_err(&self) -> f64 {
        (self.p_err * (1.0 - self.p_err) / self.trials as f64).sqrt()
    }
}

/// Runs every trial of grid point `point_index` through `decoder`.
///
/// Each trial draws a uniform support with unit gains, draws a codebook when
/// the family is random, transmits, decodes and counts a miss whenever the
/// estimate differs from the true support. Runs on the current rayon pool.
pub fn run_point(
    spec: &ExperimentSpec,
    point_index: usize,
    decoder: &dyn SupportDecoder,
) -> Result<PointResult> {
    spec.validate()?;
    let point = spec
        .grid
        .get(point_index)
        .ok_or_else(|| Error::invalid("point", format!("no grid point {point_index}")))?;
    let start = Instant::now();
    let wrap = |trial: u64, e: Error| Error::Trial {
        point: point_index,
        trial,
        source: Box::new(e),
    };
    let fixed = spec.fixed_codebook(point).map_err(|e| wrap(0, e))?;

    let one = |trial: u64| -> Result<u64, (u64, Error)> {
        let mut rng = trial_rng(spec.master_seed, point_index, trial);
        let run = |rng: &mut ChaCha8Rng| -> Result<bool> {
            let support = draw_support(spec.m, point.k, rng)?;
            let truth = ChannelConfig::unit_gains(support, spec.noise_var)?;
            let drawn;
            let codebook = match &fixed {
                Some(cb) => cb,
                None => {
                    drawn = sample_random_uniform_env(point.n, spec.m, spec.power, point.d, rng)?;
                    &drawn
                }
            };
            let rx = transmit(codebook, &truth, rng)?;
            let trial = Trial {
                y: &rx.y,
                codebook,
                truth: &truth,
            };
            let estimate = decoder.decode(&trial, rng)?;
            Ok(estimate != truth.support())
        };
        run(&mut rng).map(u64::from).map_err(|e| (trial, e))
    };

    let errors = (0..spec.trials)
        .into_par_iter()
        .map(one)
        .reduce(
            || Ok(0),
            |a, b| match (a, b) {
                (Ok(x), Ok(y)) => Ok(x + y),
                // Report the lowest failing trial so failures are reproducible.
                (Err(e1), Err(e2)) => Err(if e1.0 <= e2.0 { e1 } else { e2 }),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
        )
        .map_err(|(trial, e)| wrap(trial, e))?;

    Ok(PointResult::new(
        spec.trials,
        errors,
        spec.master_seed,
        start.elapsed(),
    ))
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub figure: Option<u8>,
    pub decoder: String,
    pub codebook: &'static str,
    pub m: usize,
    pub k: usize,
    pub power: f64,
    pub d: Option<f64>,
    pub a: Option<f64>,
    pub n: usize,
    pub result: PointResult,
    pub bound_shannon: Option<f64>,
    pub bound_prop1: Option<f64>,
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let r = &self.result;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.figure.map(|f| f.to_string()).unwrap_or_default(),
            self.decoder,
            self.codebook,
            self.m,
            self.k,
            self.power,
            opt(self.d),
            opt(self.a),
            self.n,
            r.trials,
            r.errors,
            r.p_err,
            r.ci.0,
            r.ci.1,
            opt(self.bound_shannon),
            opt(self.bound_prop1),
            r.seed,
        )
    }
}

/// Rows completed so far and, if the run stopped early, why.
#[derive(Debug, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub failure: Option<Error>,
}

impl ExperimentResult {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn find(&self, decoder: &str, point: impl Fn(&ResultRow) -> bool) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.decoder == decoder && point(r))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(out, "{}", row.to_csv_line())?;
        }
        if !self.is_complete() {
            writeln!(out, "{INCOMPLETE_MARKER}")?;
        }
        Ok(())
    }
}

fn overlay(spec: &ExperimentSpec, point: &GridPoint, formula: FormulaId) -> Option<f64> {
    if point.k != 1 || !spec.overlays.contains(&formula) {
        return None;
    }
    let value = match formula {
        FormulaId::Shannon => shannon_bound(spec.m, point.n, spec.power),
        FormulaId::Prop1 => prop1_bound(spec.m, point.n, spec.power, point.d),
        _ => return None,
    };
    value.ok().map(|v| v.value)
}

/// Runs `decoders` over every grid point, in grid order then decoder order.
pub fn run_with(spec: &ExperimentSpec, decoders: &[&dyn SupportDecoder]) -> ExperimentResult {
    let mut out = ExperimentResult::default();
    if let Err(e) = spec.validate() {
        out.failure = Some(e);
        return out;
    }
    for (index, point) in spec.grid.iter().enumerate() {
        for decoder in decoders {
            match run_point(spec, index, *decoder) {
                Ok(result) => out.rows.push(ResultRow {
                    figure: spec.figure,
                    decoder: decoder.label(),
                    codebook: spec.family.name(),
                    m: spec.m,
                    k: point.k,
                    power: spec.power,
                    d: spec.family.is_random().then_some(point.d),
                    a: (spec.family == CodebookFamily::Inter).then_some(point.a),
                    n: point.n,
                    result,
                    bound_shannon: overlay(spec, point, FormulaId::Shannon),
                    bound_prop1: overlay(spec, point, FormulaId::Prop1),
                }),
                Err(e) => {
                    out.failure = Some(e);
                    return out;
                }
            }
        }
    }
    out
}

/// Runs the spec's own decoder list.
pub fn run_spec(spec: &ExperimentSpec) -> ExperimentResult {
    let builtins: Vec<Builtin> = spec
        .decoders
        .iter()
        .map(|&id| Builtin::from_spec(id, spec))
        .collect();
    let refs: Vec<&dyn SupportDecoder> = builtins.iter().map(|b| b as &dyn SupportDecoder).collect();
    run_with(spec, &refs)
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            figure: None,
            family: CodebookFamily::Simplex,
            m: 3,
            power: 0.1,
            noise_var: 1.0,
            decoders: vec![DecoderId::Mdd],
            grid: vec![GridPoint {
                n: 100,
                a: 0.0,
                d: 0.0,
                k: 1,
            }],
            trials: DEFAULT_TRIALS,
            master_seed: DEFAULT_SEED,
            overlays: Vec::new(),
            epsilon: DEFAULT_EPSILON,
            alpha: 0.05,
        }
    }
}
