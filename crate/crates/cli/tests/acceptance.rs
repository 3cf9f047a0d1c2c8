//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use icpmac::bounds::{prop1_bound, shannon_bound, BoundQuery, FormulaId};
use icpmac::channel::{draw_support, transmit, ChannelConfig};
use icpmac::codebook::{make_inter, make_simplex, sample_random_uniform_env, Codebook};
use icpmac::decoders::{mdd, ols_mdd_with, GainMode};
use icpmac::experiments::{
    figure_preset, run_point, run_spec, trial_rng, Builtin, CodebookFamily, DecoderId,
    ExperimentResult, ExperimentSpec, GridPoint, N_GRID,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn row<'a>(res: &'a ExperimentResult, decoder: &str, n: usize, a: Option<f64>) -> &'a icpmac::experiments::ResultRow {
    res.find(decoder, |r| r.n == n && r.a == a)
        .unwrap_or_else(|| panic!("missing row {decoder} n={n} a={a:?}"))
}

fn simplex_geometry() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for n in [4, 20, 100] {
        for m in [2, 3, 5, 10] {
            for power in [0.1, 1.0] {
                if n / 2 < m - 1 {
                    continue;
                }
                let cb = make_simplex(n, m, power).map_err(|e| e.to_string())?;
                let g = cb.gram();
                let e = n as f64 * power;
                for i in 0..m {
                    for j in 0..m {
                        let want = if i == j { e } else { -e / (m as f64 - 1.0) };
                        ensure(
                            (g[(i, j)] - want).abs() <= 1e-9 * e,
                            format!("n={n} m={m} P={power}: G[{i},{j}] = {} vs {want}", g[(i, j)]),
                        )?;
                    }
                }
                checked += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("{checked} codebooks, {took:?}"))
}

fn worst_case_limit() -> Outcome {
    let spec = ExperimentSpec {
        family: CodebookFamily::Uniform,
        trials: 2000,
        grid: vec![GridPoint { n: 100, a: 1.0, d: 0.0, k: 1 }],
        ..ExperimentSpec::default()
    };
    let unif = run_point(&spec, 0, &Builtin::from_spec(DecoderId::Mdd, &spec)).map_err(|e| e.to_string())?;
    let inter_spec = ExperimentSpec {
        family: CodebookFamily::Inter,
        ..spec.clone()
    };
    let inter = run_point(&inter_spec, 0, &Builtin::from_spec(DecoderId::Mdd, &inter_spec))
        .map_err(|e| e.to_string())?;
    for (name, r) in [("uniform", &unif), ("inter a=1", &inter)] {
        ensure(
            (r.p_err - 2.0 / 3.0).abs() <= 0.04,
            format!("{name}: p̂ = {}", r.p_err),
        )?;
    }
    Ok(format!("p̂ uniform = {}, inter(a=1) = {}", unif.p_err, inter.p_err))
}

fn bound_consistency() -> Outcome {
    let start = Instant::now();
    let mut spec = figure_preset(3).unwrap();
    spec.trials = 2000;
    spec.decoders = vec![DecoderId::Mdd];
    let res = run_spec(&spec);
    if let Some(e) = &res.failure {
        return Err(e.to_string());
    }
    let mut violations = Vec::new();
    for r in &res.rows {
        let bound = shannon_bound(3, r.n, 0.1).unwrap().value;
        let upper = r.result.p_err + 1.96 * r.result.std_err();
        if upper < bound {
            violations.push(format!("n={}: p̂+1.96SE = {upper:.3e} < bound {bound:.3e}", r.n));
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    ensure(violations.is_empty(), violations.join("; "))?;
    Ok(format!("{} grid points, {took:?}", res.rows.len()))
}

fn prop1_reduction() -> Outcome {
    let mut rng = trial_rng(4, 0, 0);
    for _ in 0..100 {
        let m = rng.random_range(3..50usize);
        let n = rng.random_range(0..1000usize);
        let p = rng.random_range(0.001..5.0f64);
        let d = rng.random_range(0.0..5.0f64);
        let s0 = shannon_bound(m, n, p).unwrap();
        let z = prop1_bound(m, n, p, 0.0).unwrap();
        ensure(s0.value.to_bits() == z.value.to_bits(), format!("d=0 at m={m} n={n} P={p}"))?;
        let s = shannon_bound(m, n, p + d / 2.0).unwrap();
        let v = prop1_bound(m, n, p, d).unwrap();
        ensure(s.value.to_bits() == v.value.to_bits(), format!("d={d} at m={m} n={n} P={p}"))?;
    }
    Ok("100 random points, bitwise equal".into())
}

/// Maximum-likelihood index under unit gain: argmax of 2⟨y, x⟩ − ‖x‖².
fn ml_scan(y: &[f64], cb: &Codebook) -> usize {
    let x = cb.entries();
    let mut best = (f64::NEG_INFINITY, 0);
    for j in 0..cb.m() {
        let mut score = 0.0;
        for i in 0..cb.n() {
            score += 2.0 * y[i] * x[(i, j)] - x[(i, j)] * x[(i, j)];
        }
        if score > best.0 {
            best = (score, j);
        }
    }
    best.1
}

fn mdd_matches_ml() -> Outcome {
    let cb = make_simplex(20, 3, 0.1).unwrap();
    let mut mismatches = 0;
    let mut errors = 0;
    for t in 0..10_000u64 {
        let mut rng = trial_rng(5, 0, t);
        let support = draw_support(3, 1, &mut rng).unwrap();
        let cfg = ChannelConfig::unit_gains(support.clone(), 1.0).unwrap();
        let rx = transmit(&cb, &cfg, &mut rng).unwrap();
        let got = mdd(&rx.y, &cb, &[1.0], 1).unwrap().support;
        let want = ml_scan(&rx.y, &cb);
        mismatches += usize::from(got != [want]);
        errors += usize::from(got != support);
    }
    ensure(mismatches == 0, format!("{mismatches} mismatches"))?;
    Ok(format!("0 mismatches in 10000 trials ({errors} decoding errors)"))
}

fn pinned_ols_is_mdd() -> Outcome {
    let mut mismatches = 0;
    for t in 0..1000u64 {
        let mut rng: ChaCha8Rng = trial_rng(6, 0, t);
        let k = 1 + (t % 2) as usize;
        let cb = match t % 3 {
            0 => make_simplex(40, 4, 0.2).unwrap(),
            1 => make_inter(40, 4, 0.2, 0.5).unwrap(),
            _ => sample_random_uniform_env(40, 4, 0.2, 1.0, &mut rng).unwrap(),
        };
        let support = draw_support(4, k, &mut rng).unwrap();
        let gains: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let cfg = ChannelConfig::new(support, gains.clone(), 1.0).unwrap();
        let rx = transmit(&cb, &cfg, &mut rng).unwrap();
        let a = mdd(&rx.y, &cb, &gains, k).unwrap().support;
        let b = ols_mdd_with(&rx.y, &cb, k, &GainMode::Pinned(gains)).unwrap().support;
        mismatches += usize::from(a != b);
    }
    ensure(mismatches == 0, format!("{mismatches} mismatches"))?;
    Ok("0 mismatches in 1000 trials".into())
}

fn figure5_ordering() -> Outcome {
    let mut spec = figure_preset(5).unwrap();
    spec.trials = 2000;
    spec.grid.retain(|p| p.a < 1.0);
    let res = run_spec(&spec);
    if let Some(e) = &res.failure {
        return Err(e.to_string());
    }
    let mut notes = Vec::new();
    for a in [0.0, 0.25, 0.5, 0.75] {
        let jin = &row(&res, "jin", 100, Some(a)).result;
        let ols = &row(&res, "ols_mdd", 100, Some(a)).result;
        ensure(jin.p_err >= ols.p_err, format!("a={a}: jin {} < ols_mdd {}", jin.p_err, ols.p_err))?;
        if a <= 0.25 {
            ensure(
                jin.ci.0 > ols.ci.1,
                format!("a={a}: CIs overlap, jin {:?} ols_mdd {:?}", jin.ci, ols.ci),
            )?;
        }
        notes.push(format!("a={a}: {:.3}>{:.3}", jin.p_err, ols.p_err));
    }
    Ok(notes.join(", "))
}

fn figure2_monotone() -> Outcome {
    let spec = figure_preset(2).unwrap();
    let res = run_spec(&spec);
    if let Some(e) = &res.failure {
        return Err(e.to_string());
    }
    let (lo_n, hi_n) = (N_GRID[0], N_GRID[N_GRID.len() - 1]);
    let mut notes = Vec::new();
    for a in [0.0, 0.5] {
        let small = &row(&res, "mdd", lo_n, Some(a)).result;
        let large = &row(&res, "mdd", hi_n, Some(a)).result;
        ensure(
            large.ci.1 < small.ci.0,
            format!("a={a}: n={hi_n} {:?} vs n={lo_n} {:?}", large.ci, small.ci),
        )?;
        notes.push(format!("a={a}: {:.3} -> {:.3}", small.p_err, large.p_err));
    }
    Ok(notes.join(", "))
}

const FIXTURE: &str = include_str!("../../core/tests/fixtures/bound_oracle.csv");

fn fano_oracle() -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for line in FIXTURE.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let formula: FormulaId = f[0].parse().unwrap();
        if formula == FormulaId::Shannon {
            continue;
        }
        let mut q = BoundQuery::new(f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
        q.subset = f[4].split_whitespace().map(|v| v.parse().unwrap()).collect();
        q.gains = f[5].split_whitespace().map(|v| v.parse().unwrap()).collect();
        if formula == FormulaId::Fano1 {
            q.sigma_d2 = f[7].parse().unwrap();
        } else {
            q.mu_d = f[8].parse().unwrap();
            q.codebook_sum = Some(f[9].parse().unwrap());
        }
        let want: f64 = f[10].parse().unwrap();
        let got = q.evaluate(formula).map_err(|e| e.to_string())?.raw;
        let rel = (got - want).abs() / want.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-12, format!("{formula} {q:?}: {got} vs {want}"))?;
        if formula == FormulaId::Fano2 && q.mu_d == 0.0 {
            let mut other = q.clone();
            other.codebook_sum = Some(-1e12);
            let alt = other.evaluate(formula).unwrap().raw;
            ensure(alt.to_bits() == got.to_bits(), "μ_d = 0 but the codebook sum changed the bound")?;
        }
        checked += 1;
    }
    ensure(checked >= 100, format!("only {checked} reference cases"))?;
    Ok(format!("{checked} cases, worst relative error {worst:.1e}"))
}

fn run_figure(id: u8, extra: &[&str], dir: &std::path::Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_icpmac"))
        .arg("figure")
        .arg(id.to_string())
        .args(extra)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("ICPMAC_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("figure {id} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)),
    )?;
    std::fs::read(dir.join(format!("fig{id}.csv"))).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let one = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    let a = run_figure(2, &["--seed", "7", "--jobs", "1"], one.path())?;
    let b = run_figure(2, &["--seed", "7", "--jobs", "8"], eight.path())?;
    ensure(a == b, "CSV bytes differ between --jobs 1 and --jobs 8")?;
    Ok(format!("{} identical bytes", a.len()))
}

fn figure1_qualitative() -> Outcome {
    let spec = figure_preset(1).unwrap();
    let res = run_spec(&spec);
    if let Some(e) = &res.failure {
        return Err(e.to_string());
    }
    let mut min_gap = f64::INFINITY;
    for &n in &N_GRID {
        let base = row(&res, "mdd", n, None);
        let bound = base.bound_prop1.ok_or("missing prop1 bound")?;
        for icp in [DecoderId::IcpMethod1, DecoderId::IcpMethod2] {
            let r = row(&res, icp.name(), n, None);
            ensure(r.result.p_err > bound, format!("{icp} n={n}: {} ≤ prop1 {bound}", r.result.p_err))?;
            ensure(
                r.result.p_err > base.result.p_err,
                format!("{icp} n={n}: {} ≤ mdd {}", r.result.p_err, base.result.p_err),
            )?;
            min_gap = min_gap.min(r.result.p_err - base.result.p_err);
        }
    }
    Ok(format!("smallest ICP − MDD gap {min_gap:.3}"))
}

fn full_suite_runtime() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    for id in 1..=5 {
        run_figure(id, &[], dir.path())?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(600), format!("took {took:?}"))?;
    Ok(format!("figures 1-5 in {took:.1?}"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("simplex geometry", simplex_geometry),
        ("worst-case limit", worst_case_limit),
        ("bound consistency", bound_consistency),
        ("prop1 reduction", prop1_reduction),
        ("mdd equals ML scan", mdd_matches_ml),
        ("pinned-gain OLS equals MDD", pinned_ols_is_mdd),
        ("figure 5 ordering", figure5_ordering),
        ("figure 2 monotonicity", figure2_monotone),
        ("fano evaluators", fano_oracle),
        ("determinism across workers", determinism),
        ("figure 1 qualitative", figure1_qualitative),
        ("full figure suite runtime", full_suite_runtime),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
