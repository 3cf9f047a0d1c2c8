//! Simplified invariant causal prediction baselines.
//!
//! Both methods scan every `k`-subset, test it for invariance across the two
//! environments and report the intersection of the accepted subsets. The tests
//! are textbook z/t/χ² tests with known noise variance, not the statistics of
//! the original ICP package; they reproduce the qualitative behaviour only.
//!
//! * Method I fits least squares separately per environment and tests whether
//!   each coefficient differs between them.
//! * Method II fits one pooled model and tests, per environment, that the
//!   residuals have mean zero and variance `σ_z²`.

use nalgebra::DVector;

use crate::codebook::{Codebook, Environment};
use crate::decoders::{subsets, DecodeOutcome, SubsetResidual};
use crate::error::{Error, Result};
use crate::linalg::{design, lstsq};
use crate::stats::{chi2_two_sided_p, normal_two_sided_p, t_two_sided_p};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpTestConfig {
    pub alpha: f64,
    /// Split `alpha` evenly over the individual tests of a subset.
    pub bonferroni: bool,
    /// Known noise variance `σ_z²`.
    pub noise_var: f64,
}

impl Default for IcpTestConfig {
    fn default() -> Self {
        IcpTestConfig {
            alpha: 0.05,
            bonferroni: true,
            noise_var: 1.0,
        }
    }
}

impl IcpTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::invalid(
                "noise_var",
                format!("must be positive, got {}", self.noise_var),
            ));
        }
        Ok(())
    }

    fn level(&self, tests: usize) -> f64 {
        if self.bonferroni {
            self.alpha / tests as f64
        } else {
            self.alpha
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpOutcome {
    /// `support` holds the intersection of all accepted subsets; it may be
    /// empty or smaller than `k`.
    pub decode: DecodeOutcome,
    pub accepted: Vec<Vec<usize>>,
    /// Smallest p-value among the tests of each subset, in enumeration order.
    pub min_p_values: Vec<f64>,
}

fn check_inputs(y: &[f64], codebook: &Codebook, k: usize, cfg: &IcpTestConfig) -> Result<()> {
    cfg.validate()?;
    if k == 0 || k > codebook.m() {
        return Err(Error::invalid(
            "k",
            format!("need 1 ≤ k ≤ m, got k = {k}, m = {}", codebook.m()),
        ));
    }
    if y.len() != codebook.n() {
        return Err(Error::invalid(
            "y",
            format!("length {} does not match n = {}", y.len(), codebook.n()),
        ));
    }
    if codebook.n() / 2 < k + 2 {
        return Err(Error::invalid(
            "n",
            format!("each environment needs at least k + 2 = {} samples", k + 2),
        ));
    }
    Ok(())
}

fn finish(
    residuals: Vec<SubsetResidual>,
    accepted: Vec<Vec<usize>>,
    min_p_values: Vec<f64>,
) -> IcpOutcome {
    let support = match accepted.split_first() {
        None => Vec::new(),
        Some((first, rest)) => first
            .iter()
            .copied()
            .filter(|j| rest.iter().all(|s| s.contains(j)))
            .collect(),
    };
    IcpOutcome {
        decode: DecodeOutcome {
            support,
            residuals,
            ..Default::default()
        },
        accepted,
        min_p_values,
    }
}

/// Method I: per-environment coefficients compared with two-sample z-tests.
///
/// When either environment's design is rank deficient the coefficients are
/// not identified there and the subset is accepted (the test has no power).
pub fn icp_method1(
    y: &[f64],
    codebook: &Codebook,
    k: usize,
    cfg: &IcpTestConfig,
) -> Result<IcpOutcome> {
    check_inputs(y, codebook, k, cfg)?;
    let split = codebook.split();
    let level = cfg.level(k);
    let (mut residuals, mut accepted, mut min_ps) = (Vec::new(), Vec::new(), Vec::new());

    for subset in subsets(codebook.m(), k) {
        let fits: Vec<_> = [Environment::First, Environment::Second]
            .into_iter()
            .map(|env| {
                let rows = split.rows(env);
                let ye = DVector::from_column_slice(&y[rows.clone()]);
                let xe = design(codebook, &subset, rows);
                let fit = lstsq(&xe, &ye);
                let res = fit.residual_norm(&ye);
                (fit, res)
            })
            .collect();
        let residual = fits.iter().map(|(_, r)| r * r).sum::<f64>().sqrt();

        let min_p = if fits.iter().all(|(f, _)| f.full_rank()) {
            let (f1, f2) = (&fits[0].0, &fits[1].0);
            let (c1, c2) = (f1.gram_pinv(), f2.gram_pinv());
            (0..k)
                .map(|l| {
                    let diff = f1.coef[l] - f2.coef[l];
                    let se = (cfg.noise_var * (c1[(l, l)] + c2[(l, l)])).sqrt();
                    normal_two_sided_p(diff / se)
                })
                .fold(1.0, f64::min)
        } else {
            1.0
        };
        if min_p > level {
            accepted.push(subset.clone());
        }
        min_ps.push(min_p);
        residuals.push(SubsetResidual { subset, residual });
    }
    Ok(finish(residuals, accepted, min_ps))
}

/// Method II: pooled fit, then per-environment residual mean and variance tests.
pub fn icp_method2(
    y: &[f64],
    codebook: &Codebook,
    k: usize,
    cfg: &IcpTestConfig,
) -> Result<IcpOutcome> {
    check_inputs(y, codebook, k, cfg)?;
    let split = codebook.split();
    let level = cfg.level(4);
    let yv = DVector::from_column_slice(y);
    let (mut residuals, mut accepted, mut min_ps) = (Vec::new(), Vec::new(), Vec::new());

    for subset in subsets(codebook.m(), k) {
        let xs = design(codebook, &subset, 0..codebook.n());
        let fit = lstsq(&xs, &yv);
        let resid = &yv - &fit.fitted;

        let mut min_p: f64 = 1.0;
        for env in [Environment::First, Environment::Second] {
            let r = resid.rows_range(split.rows(env));
            let ne = r.len() as f64;
            let mean = r.mean();
            let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ne - 1.0);
            let t = mean / (var / ne).sqrt();
            min_p = min_p.min(t_two_sided_p(t, ne - 1.0));
            let chi = (ne - 1.0) * var / cfg.noise_var;
            min_p = min_p.min(chi2_two_sided_p(chi, ne - 1.0));
        }
        if min_p > level {
            accepted.push(subset.clone());
        }
        min_ps.push(min_p);
        residuals.push(SubsetResidual {
            subset,
            residual: resid.norm(),
        });
    }
    Ok(finish(residuals, accepted, min_ps))
}
