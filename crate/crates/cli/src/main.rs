mod config;
mod svg;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{Params, Usage};
use icpmac::bounds::{BoundQuery, FormulaId};
use icpmac::codebook::{
    make_inter, make_simplex_with_layout, make_uniform, sample_random_uniform_env, Codebook,
    SimplexLayout,
};
use icpmac::experiments::{
    figure_preset, run_spec, CodebookFamily, DecoderId, ExperimentResult, ExperimentSpec,
    GridPoint, DEFAULT_SEED,
};

#[derive(Debug, Parser)]
#[command(name = "icpmac", version, about = "Support recovery over a zero-rate Gaussian multiple access channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Layout {
    Canonical,
    Display,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a codebook CSV and report its Gram matrix on stderr.
    Codebook {
        /// simplex, uniform, inter or random_uniform_env.
        #[arg(long, default_value = "simplex")]
        kind: String,
        #[arg(long, value_enum, default_value = "canonical")]
        layout: Layout,
        /// Output file; defaults to `<out-dir>/codebook_<kind>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a lower bound and print `formula_id,value,clamped`.
    Bound {
        /// shannon, prop1, exponent, fano1 or fano2.
        formula: String,
        /// One-based gain indices forming T (default: all k).
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
        /// Gains γ₁..γ_k (default: all ones).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        gains: Option<Vec<f64>>,
        /// Σ of all codebook entries, needed by fano2 when μ_d ≠ 0.
        #[arg(long = "codebook-sum", allow_negative_numbers = true)]
        codebook_sum: Option<f64>,
    },
    /// Monte Carlo error rate at a single (n, a, d, k) point, as CSV on stdout.
    Simulate {
        #[arg(long, default_value = "simplex")]
        kind: String,
        /// Comma-separated decoders: mdd, ols_mdd, jin, icp_method1, icp_method2.
        #[arg(long, value_delimiter = ',', default_value = "mdd")]
        decoder: Vec<String>,
    },
    /// Reproduce figure 1-5 into `<out-dir>/fig<id>.csv`.
    Figure { id: u8 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for invalid input, 3 for failures while running.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<icpmac::Error>() {
        Some(icpmac::Error::Trial { .. }) | None => 3,
        Some(_) => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    let params = cli.params.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = params.jobs {
        if jobs == 0 {
            return Err(Usage("--jobs must be at least 1".into()).into());
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().context("cannot start worker pool")?;
    pool.install(|| match cli.command {
        Command::Codebook { kind, layout, out } => cmd_codebook(&params, &kind, layout, out),
        Command::Bound {
            formula,
            subset,
            gains,
            codebook_sum,
        } => cmd_bound(&params, &formula, subset, gains, codebook_sum),
        Command::Simulate { kind, decoder } => cmd_simulate(&params, &kind, &decoder),
        Command::Figure { id } => cmd_figure(&params, id),
    })
}

fn cmd_codebook(p: &Params, kind: &str, layout: Layout, out: Option<PathBuf>) -> Result<()> {
    let family: CodebookFamily = kind.parse()?;
    let (n, m, power) = (p.n.unwrap_or(100), p.m.unwrap_or(3), p.power.unwrap_or(0.1));
    let cb = match family {
        CodebookFamily::Simplex => {
            let layout = match layout {
                Layout::Canonical => SimplexLayout::Canonical,
                Layout::Display => SimplexLayout::Display,
            };
            make_simplex_with_layout(n, m, power, layout)?
        }
        CodebookFamily::Uniform => make_uniform(n, m, power)?,
        CodebookFamily::Inter => {
            let a = p.a.ok_or_else(|| Usage("--kind inter needs --a".into()))?;
            make_inter(n, m, power, a)?
        }
        CodebookFamily::RandomUniformEnv => {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(DEFAULT_SEED));
            sample_random_uniform_env(n, m, power, p.d.unwrap_or(0.0), &mut rng)?
        }
    };
    let path = match out {
        Some(path) => path,
        None => p.out_dir().join(format!("codebook_{}.csv", family.name())),
    };
    create_parent(&path)?;
    let file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    cb.write_csv(&mut w)?;
    w.flush()?;
    eprint!("{}", gram_summary(&cb));
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn gram_summary(cb: &Codebook) -> String {
    let g = cb.gram();
    let m = cb.m();
    let mut diag = (f64::MAX, f64::MIN);
    let mut off = (f64::MAX, f64::MIN);
    for i in 0..m {
        for j in 0..m {
            let v = g[(i, j)];
            let slot = if i == j { &mut diag } else { &mut off };
            slot.0 = slot.0.min(v);
            slot.1 = slot.1.max(v);
        }
    }
    let energy = cb.n() as f64 * cb.power();
    let mut s = format!(
        "gram {m}x{m}: diagonal [{:.6e}, {:.6e}] (nP = {energy:.6e})",
        diag.0, diag.1
    );
    if m > 1 {
        s.push_str(&format!(
            ", off-diagonal [{:.6e}, {:.6e}] (simplex -nP/(m-1) = {:.6e})",
            off.0,
            off.1,
            -energy / (m as f64 - 1.0)
        ));
    }
    let budget = match cb.check_power_budget() {
        Ok(()) => "power budget ok".to_string(),
        Err(e) => format!("power budget violated: {e}"),
    };
    format!("{s}\n{budget}\n")
}

fn cmd_bound(
    p: &Params,
    formula: &str,
    subset: Option<Vec<usize>>,
    gains: Option<Vec<f64>>,
    codebook_sum: Option<f64>,
) -> Result<()> {
    let formula: FormulaId = formula.parse()?;
    let k = p.k.unwrap_or(1);
    let mut q = BoundQuery::new(p.m.unwrap_or(3), p.n.unwrap_or(100), k);
    q.power = p.power.unwrap_or(0.1);
    q.d = p.d.unwrap_or(0.0);
    q.sigma_d2 = p.sigma_d.unwrap_or(0.0);
    q.mu_d = p.mu_d.unwrap_or(0.0);
    q.codebook_sum = codebook_sum;
    if let Some(t) = subset {
        q.subset = t
            .into_iter()
            .map(|j| {
                j.checked_sub(1)
                    .ok_or_else(|| Usage("--subset indices are one-based".into()))
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(g) = gains {
        q.gains = g;
    }
    let v = q.evaluate(formula)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "formula_id,value,clamped")?;
    writeln!(out, "{},{},{}", v.formula, v.value, v.clamped)?;
    Ok(())
}

fn apply_overrides(spec: &mut ExperimentSpec, p: &Params) {
    if let Some(m) = p.m {
        spec.m = m;
    }
    if let Some(power) = p.power {
        spec.power = power;
    }
    if let Some(t) = p.trials {
        spec.trials = t;
    }
    if let Some(s) = p.seed {
        spec.master_seed = s;
    }
    if let Some(a) = p.alpha {
        spec.alpha = a;
    }
    if let Some(e) = p.epsilon {
        spec.epsilon = e;
    }
}

fn cmd_simulate(p: &Params, kind: &str, decoders: &[String]) -> Result<()> {
    let mut spec = ExperimentSpec {
        family: kind.parse()?,
        decoders: decoders
            .iter()
            .map(|d| d.parse::<DecoderId>())
            .collect::<Result<_, _>>()?,
        grid: vec![GridPoint {
            n: p.n.unwrap_or(100),
            a: p.a.unwrap_or(0.0),
            d: p.d.unwrap_or(0.0),
            k: p.k.unwrap_or(1),
        }],
        ..ExperimentSpec::default()
    };
    apply_overrides(&mut spec, p);
    let result = run_spec(&spec);
    let stdout = io::stdout();
    result.write_csv(stdout.lock())?;
    finish(result)
}

fn cmd_figure(p: &Params, id: u8) -> Result<()> {
    let mut spec = figure_preset(id)?;
    apply_overrides(&mut spec, p);
    let result = run_spec(&spec);
    if result.rows.is_empty() {
        if let Some(e @ icpmac::Error::InvalidParameter { .. }) = &result.failure {
            return Err(e.clone().into());
        }
    }
    let dir = p.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let csv_path = dir.join(format!("fig{id}.csv"));
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    fs::write(&csv_path, &buf).with_context(|| format!("cannot write {}", csv_path.display()))?;
    eprintln!("wrote {}", csv_path.display());
    if p.emit_svg && !result.rows.is_empty() {
        let text = fs::read_to_string(&csv_path)?;
        let svg = svg::render(&text, &format!("Figure {id}")).map_err(anyhow::Error::msg)?;
        let svg_path = dir.join(format!("fig{id}.svg"));
        fs::write(&svg_path, svg).with_context(|| format!("cannot write {}", svg_path.display()))?;
        eprintln!("wrote {}", svg_path.display());
    }
    finish(result)
}

fn finish(result: ExperimentResult) -> Result<()> {
    match result.failure {
        None => Ok(()),
        Some(e) => Err(e.into()),
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}
