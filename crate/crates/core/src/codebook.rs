//! Codeword families for the two-environment channel.
//!
//! A [`Codebook`] is an `n × m` matrix whose columns are codewords (equivalently,
//! predictors) and whose rows are transmission times (samples). Rows `0..n/2`
//! belong to the first environment and rows `n/2..n` to the second.
//!
//! Four families are provided:
//!
//! * [`make_simplex`]: the regular simplex on the sphere of radius `√(nP)`, with
//!   all of its energy in the first environment. Best case.
//! * [`make_uniform`]: every entry `√P`, so all codewords coincide. Worst case.
//! * [`make_inter`]: the entrywise blend `a·uniform + (1−a)·simplex`.
//! * [`sample_random_uniform_env`]: i.i.d. uniform entries with a larger
//!   amplitude range in the second environment.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use nalgebra::{DMatrix, DVectorView};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

/// Relative tolerance used when checking the per-column power budget.
const BUDGET_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodebookKind {
    Simplex,
    Uniform,
    /// Blend weight `a` of the uniform code.
    Interpolated { a: f64 },
    /// Second-environment power surplus `d`.
    RandomUniformEnv { d: f64 },
}

impl CodebookKind {
    pub fn name(&self) -> &'static str {
        match self {
            CodebookKind::Simplex => "simplex",
            CodebookKind::Uniform => "uniform",
            CodebookKind::Interpolated { .. } => "inter",
            CodebookKind::RandomUniformEnv { .. } => "random_uniform_env",
        }
    }

    pub fn blend(&self) -> Option<f64> {
        match *self {
            CodebookKind::Interpolated { a } => Some(a),
            _ => None,
        }
    }

    pub fn surplus(&self) -> Option<f64> {
        match *self {
            CodebookKind::RandomUniformEnv { d } => Some(d),
            _ => None,
        }
    }
}

impl fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Orientation of the simplex inside the first `m − 1` rows.
///
/// Both layouts describe the same point set up to a rotation, so distance-based
/// decoders behave identically on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimplexLayout {
    /// Lower-triangular coordinates: codeword 0 lies along row 0.
    #[default]
    Canonical,
    /// Canonical layout rotated by a quarter turn in rows 0 and 1, which puts
    /// codeword 0 along row 1. For `m = 3` the codewords are
    /// `√(nP)·[0, 1]`, `√(nP)·[−√3/2, −1/2]` and `√(nP)·[√3/2, −1/2]`.
    Display,
}

/// Which half of the samples a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    First,
    Second,
}

/// Half/half split of the `n` rows and the per-environment energy budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentSplit {
    /// First row of the second environment; always `n / 2`.
    pub boundary: usize,
    pub n: usize,
    /// Per-symbol budget of the first environment, `P/2`.
    pub env1_power: f64,
    /// Per-symbol budget of the second environment, `(P + d)/2`.
    pub env2_power: f64,
    pub d: f64,
}

impl EnvironmentSplit {
    pub fn new(n: usize, power: f64, d: f64) -> Result<Self> {
        check_even(n)?;
        check_power(power)?;
        check_surplus(d)?;
        Ok(EnvironmentSplit {
            boundary: n / 2,
            n,
            env1_power: power / 2.0,
            env2_power: (power + d) / 2.0,
            d,
        })
    }

    pub fn rows(&self, env: Environment) -> Range<usize> {
        match env {
            Environment::First => 0..self.boundary,
            Environment::Second => self.boundary..self.n,
        }
    }

    /// Energy cap `Σ x²` for one codeword restricted to `env`.
    pub fn energy_cap(&self, env: Environment) -> f64 {
        match env {
            Environment::First => self.n as f64 * self.env1_power,
            Environment::Second => self.n as f64 * self.env2_power,
        }
    }
}

/// An `n × m` matrix of codewords with its power metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    entries: DMatrix<f64>,
    power: f64,
    kind: CodebookKind,
}

impl Codebook {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn m(&self) -> usize {
        self.entries.ncols()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column(&self, j: usize) -> DVectorView<'_, f64> {
        self.entries.column(j)
    }

    pub fn split(&self) -> EnvironmentSplit {
        let d = self.kind.surplus().unwrap_or(0.0);
        EnvironmentSplit {
            boundary: self.n() / 2,
            n: self.n(),
            env1_power: self.power / 2.0,
            env2_power: (self.power + d) / 2.0,
            d,
        }
    }

    /// `Σᵢ x²ᵢⱼ` over the whole codeword.
    pub fn column_energy(&self, j: usize) -> f64 {
        self.entries.column(j).norm_squared()
    }

    /// `Σᵢ x²ᵢⱼ` over the rows of one environment.
    pub fn env_energy(&self, j: usize, env: Environment) -> f64 {
        let rows = self.split().rows(env);
        self.entries
            .column(j)
            .rows_range(rows)
            .iter()
            .map(|x| x * x)
            .sum()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.entries.transpose() * &self.entries
    }

    /// Same kind and power with replaced entries of identical shape.
    pub fn with_entries(&self, entries: DMatrix<f64>) -> Result<Codebook> {
        if entries.shape() != self.entries.shape() {
            return Err(Error::invalid(
                "entries",
                format!("shape {:?} differs from {:?}", entries.shape(), self.entries.shape()),
            ));
        }
        Ok(Codebook {
            entries,
            power: self.power,
            kind: self.kind,
        })
    }

    /// `Σᵢ Σⱼ xᵢⱼ`, the codebook sum used by the deterministic Fano bound.
    pub fn entry_sum(&self) -> f64 {
        self.entries.sum()
    }

    /// Checks every column against the budget of its kind.
    ///
    /// Deterministic kinds must satisfy `Σ x² ≤ nP`; the random kind must
    /// satisfy the per-environment caps `nP/2` and `n(P + d)/2`.
    pub fn check_power_budget(&self) -> Result<()> {
        let n = self.n() as f64;
        let split = self.split();
        for j in 0..self.m() {
            match self.kind {
                CodebookKind::RandomUniformEnv { .. } => {
                    for env in [Environment::First, Environment::Second] {
                        let cap = split.energy_cap(env);
                        let used = self.env_energy(j, env);
                        if used > cap * (1.0 + BUDGET_RTOL) {
                            return Err(Error::invalid(
                                "codebook",
                                format!("column {j} uses {used} in {env:?}, cap {cap}"),
                            ));
                        }
                    }
                }
                _ => {
                    let cap = n * self.power;
                    let used = self.column_energy(j);
                    if used > cap * (1.0 + BUDGET_RTOL) {
                        return Err(Error::invalid(
                            "codebook",
                            format!("column {j} uses energy {used}, cap {cap}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes the codebook as a `# n=.. m=.. P=.. kind=.. a=.. d=..` header
    /// followed by `n` rows of `m` values with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let a = self.kind.blend().map(|a| a.to_string()).unwrap_or_default();
        let d = self.kind.surplus().map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "# n={} m={} P={} kind={} a={} d={}",
            self.n(),
            self.m(),
            self.power,
            self.kind,
            a,
            d
        )?;
        for row in self.entries.row_iter() {
            let line = row
                .iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Codebook> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty input".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing `#` header".into()))?;

        let (mut n, mut m, mut power, mut kind, mut a, mut d) = (None, None, None, None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field `{field}`")))?;
            match key {
                "n" => n = Some(parse_num::<usize>(key, value)?),
                "m" => m = Some(parse_num::<usize>(key, value)?),
                "P" => power = Some(parse_num::<f64>(key, value)?),
                "kind" => kind = Some(value.to_string()),
                "a" if !value.is_empty() => a = Some(parse_num::<f64>(key, value)?),
                "d" if !value.is_empty() => d = Some(parse_num::<f64>(key, value)?),
                "a" | "d" => {}
                _ => return Err(Error::Parse(format!("unknown header key `{key}`"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("header lacks `{k}`"));
        let n = n.ok_or_else(|| missing("n"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let power = power.ok_or_else(|| missing("P"))?;
        let kind = match kind.ok_or_else(|| missing("kind"))?.as_str() {
            "simplex" => CodebookKind::Simplex,
            "uniform" => CodebookKind::Uniform,
            "inter" => CodebookKind::Interpolated {
                a: a.ok_or_else(|| missing("a"))?,
            },
            "random_uniform_env" => CodebookKind::RandomUniformEnv {
                d: d.ok_or_else(|| missing("d"))?,
            },
            other => return Err(Error::Parse(format!("unknown kind `{other}`"))),
        };

        let mut values = Vec::with_capacity(n * m);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|v| parse_num::<f64>("entry", v.trim()))
                .collect::<Result<_>>()?;
            if row.len() != m {
                return Err(Error::Parse(format!(
                    "row {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        if values.len() != n * m {
            return Err(Error::Parse(format!(
                "expected {n} rows, found {}",
                values.len() / m.max(1)
            )));
        }
        Ok(Codebook {
            entries: DMatrix::from_row_slice(n, m, &values),
            power,
            kind,
        })
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse `{key}` from `{value}`")))
}

fn check_even(n: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::invalid(
            "n",
            format!("must be a positive even sample count, got {n}"),
        ));
    }
    Ok(())
}

fn check_power(power: f64) -> Result<()> {
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::invalid("P", format!("must be positive, got {power}")));
    }
    Ok(())
}

fn check_surplus(d: f64) -> Result<()> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::invalid("d", format!("must be non-negative, got {d}")));
    }
    Ok(())
}

/// Unit vectors `u₀..u_{m−1}` in `R^{m−1}` with `⟨uᵢ, uⱼ⟩ = −1/(m−1)`.
///
/// Row `j` of the result holds `uⱼ`. The first `m − 1` vectors come from a
/// Cholesky factorisation of their Gram matrix; the last one is minus their
/// sum, which places the centroid at the origin.
fn unit_simplex(m: usize) -> DMatrix<f64> {
    let dim = m - 1;
    let off = -1.0 / dim as f64;
    let mut u = DMatrix::<f64>::zeros(m, dim);
    for i in 0..dim {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { off };
            let partial: f64 = (0..j).map(|c| u[(i, c)] * u[(j, c)]).sum();
            u[(i, j)] = if i == j {
                (target - partial).sqrt()
            } else {
                (target - partial) / u[(j, j)]
            };
        }
    }
    for c in 0..dim {
        u[(dim, c)] = -(0..dim).map(|r| u[(r, c)]).sum::<f64>();
    }
    u
}

/// Regular simplex code with all energy in the first environment.
///
/// Columns have squared norm exactly `nP` and pairwise inner products
/// `−nP/(m−1)`. Only the first `m − 1` rows are nonzero.
pub fn make_simplex(n: usize, m: usize, power: f64) -> Result<Codebook> {
    make_simplex_with_layout(n, m, power, SimplexLayout::Canonical)
}

pub fn make_simplex_with_layout(
    n: usize,
    m: usize,
    power: f64,
    layout: SimplexLayout,
) -> Result<Codebook> {
    check_even(n)?;
    check_power(power)?;
    if m < 2 {
        return Err(Error::invalid("m", format!("a simplex needs m ≥ 2, got {m}")));
    }
    if n / 2 < m - 1 {
        return Err(Error::invalid(
            "n",
            format!(
                "n/2 = {} cannot hold an {m}-point simplex (needs n/2 ≥ m−1 = {})",
                n / 2,
                m - 1
            ),
        ));
    }

    let mut u = unit_simplex(m);
    if layout == SimplexLayout::Display && m >= 3 {
        for j in 0..m {
            let (x0, x1) = (u[(j, 0)], u[(j, 1)]);
            u[(j, 0)] = -x1;
            u[(j, 1)] = x0;
        }
    }

    let radius = (n as f64 * power).sqrt();
    let mut entries = DMatrix::<f64>::zeros(n, m);
    for j in 0..m {
        for r in 0..m - 1 {
            // `+ 0.0` folds negative zeros so serialised payloads are stable.
            entries[(r, j)] = radius * u[(j, r)] + 0.0;
        }
    }
    Ok(Codebook {
        entries,
        power,
        kind: CodebookKind::Simplex,
    })
}

/// Worst-case code: every entry is `√P`, so all codewords are identical.
pub fn make_uniform(n: usize, m: usize, power: f64) -> Result<Codebook> {
    check_even(n)?;
    check_power(power)?;
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    Ok(Codebook {
        entries: DMatrix::from_element(n, m, power.sqrt()),
        power,
        kind: CodebookKind::Uniform,
    })
}

/// Entrywise `a·uniform + (1 − a)·simplex`.
pub fn make_inter(n: usize, m: usize, power: f64, a: f64) -> Result<Codebook> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid("a", format!("must lie in [0, 1], got {a}")));
    }
    let simplex = make_simplex(n, m, power)?;
    let uniform = make_uniform(n, m, power)?;
    let entries = uniform.entries.zip_map(&simplex.entries, |u, s| a * u + (1.0 - a) * s);
    Ok(Codebook {
        entries,
        power,
        kind: CodebookKind::Interpolated { a },
    })
}

/// Random predictors obeying the per-environment power split.
///
/// Rows of the first environment are i.i.d. `Uniform[0, √P]`; rows of the
/// second are i.i.d. `Uniform[0, √(P + d)]`. Entries are drawn column by
/// column, top to bottom.
pub fn sample_random_uniform_env<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    power: f64,
    d: f64,
    rng: &mut R,
) -> Result<Codebook> {
    let split = EnvironmentSplit::new(n, power, d)?;
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    let env1 = Uniform::new_inclusive(0.0, power.sqrt())
        .map_err(|e| Error::invalid("P", e.to_string()))?;
    let env2 = Uniform::new_inclusive(0.0, (power + d).sqrt())
        .map_err(|e| Error::invalid("d", e.to_string()))?;
    let mut entries = DMatrix::<f64>::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            entries[(i, j)] = if i < split.boundary {
                env1.sample(rng)
            } else {
                env2.sample(rng)
            };
        }
    }
    Ok(Codebook {
        entries,
        power,
        kind: CodebookKind::RandomUniformEnv { d },
    })
}
