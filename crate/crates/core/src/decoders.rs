//! Support estimators that treat the regression as a channel decoding problem.
//!
//! * [`mdd`]: minimum distance decoding with known gains.
//! * [`ols_mdd`]: least-squares gains per candidate subset, then minimum
//!   residual.
//! * [`jin_decode`]: single-sender energy/variance heuristic.
//!
//! Candidate subsets are enumerated in lexicographic order and ties within
//! [`TIE_TOL`] of the smallest residual resolve to the earliest subset.

use itertools::Itertools;
use nalgebra::DVector;
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::linalg::{design, lstsq};

/// Absolute tolerance on `R_S` below which two candidates count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Default acceptance slack `ε` of [`jin_decode`].
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetResidual {
    pub subset: Vec<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodeOutcome {
    /// Estimated support, sorted.
    pub support: Vec<usize>,
    /// Estimated gains aligned with `support`; `None` when gains were given.
    pub gains: Option<Vec<f64>>,
    /// `‖y − ŷ_S‖₂` for every evaluated candidate, in enumeration order.
    pub residuals: Vec<SubsetResidual>,
    pub tie_broken: bool,
    /// Codewords the decoder could not score (constant columns in the Jin rule).
    pub skipped: Vec<usize>,
    /// The decision came from a random pick rather than a unique winner.
    pub fallback: bool,
}

impl DecodeOutcome {
    pub fn residual_of(&self, subset: &[usize]) -> Option<f64> {
        self.residuals
            .iter()
            .find(|r| r.subset == subset)
            .map(|r| r.residual)
    }
}

/// All `k`-subsets of `0..m` in lexicographic order.
pub fn subsets(m: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..m).combinations(k)
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ m, got k = {k}, m = {m}")));
    }
    Ok(())
}

fn check_len(y: &[f64], codebook: &Codebook) -> Result<()> {
    if y.len() != codebook.n() {
        return Err(Error::invalid(
            "y",
            format!("length {} does not match n = {}", y.len(), codebook.n()),
        ));
    }
    Ok(())
}

/// Index of the lexicographically first residual within `TIE_TOL` of the
/// minimum, plus whether another candidate was also that close.
fn pick_min(residuals: &[SubsetResidual]) -> (usize, bool) {
    let best = residuals
        .iter()
        .map(|r| r.residual)
        .fold(f64::INFINITY, f64::min);
    let mut near = residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| r.residual <= best + TIE_TOL)
        .map(|(i, _)| i);
    let first = near.next().expect("at least one candidate");
    (first, near.next().is_some())
}

/// Minimum distance decoding with known gains.
///
/// For a candidate `S = {s₀ < s₁ < …}` the synthesised signal is
/// `Σᵢ gains[i] · x_{sᵢ}`, so gains are matched to codewords by rank within
/// the subset. The noise level is never consulted.
pub fn mdd(y: &[f64], codebook: &Codebook, gains: &[f64], k: usize) -> Result<DecodeOutcome> {
    check_k(k, codebook.m())?;
    check_len(y, codebook)?;
    if gains.len() != k {
        return Err(Error::invalid(
            "gains",
            format!("{} gains supplied for k = {k}", gains.len()),
        ));
    }
    let x = codebook.entries();
    let residuals: Vec<SubsetResidual> = subsets(codebook.m(), k)
        .map(|subset| {
            let residual = y
                .iter()
                .enumerate()
                .map(|(i, &yi)| {
                    let synth: f64 = subset.iter().zip(gains).map(|(&j, g)| g * x[(i, j)]).sum();
                    (yi - synth).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            SubsetResidual { subset, residual }
        })
        .collect();
    let (best, tie_broken) = pick_min(&residuals);
    Ok(DecodeOutcome {
        support: residuals[best].subset.clone(),
        gains: None,
        residuals,
        tie_broken,
        ..Default::default()
    })
}

/// How [`ols_mdd_with`] obtains the gains of each candidate subset.
#[derive(Debug, Clone, PartialEq)]
pub enum GainMode {
    /// Pooled least squares over all `n` samples (minimum-norm when singular).
    LeastSquares,
    /// Skip estimation and use these gains for every subset.
    Pinned(Vec<f64>),
}

/// OLS+MDD with least-squares gains.
pub fn ols_mdd(y: &[f64], codebook: &Codebook, k: usize) -> Result<DecodeOutcome> {
    ols_mdd_with(y, codebook, k, &GainMode::LeastSquares)
}

pub fn ols_mdd_with(
    y: &[f64],
    codebook: &Codebook,
    k: usize,
    mode: &GainMode,
) -> Result<DecodeOutcome> {
    check_k(k, codebook.m())?;
    check_len(y, codebook)?;
    if codebook.n() <= k {
        return Err(Error::invalid(
            "n",
            format!("least squares needs n > k, got n = {}, k = {k}", codebook.n()),
        ));
    }
    if let GainMode::Pinned(g) = mode {
        if g.len() != k {
            return Err(Error::invalid("gains", format!("{} pinned gains for k = {k}", g.len())));
        }
    }

    let yv = DVector::from_column_slice(y);
    let mut residuals = Vec::new();
    let mut all_gains = Vec::new();
    for subset in subsets(codebook.m(), k) {
        let xs = design(codebook, &subset, 0..codebook.n());
        let coef = match mode {
            GainMode::LeastSquares => lstsq(&xs, &yv).coef,
            GainMode::Pinned(g) => DVector::from_column_slice(g),
        };
        let residual = (&yv - &xs * &coef).norm();
        residuals.push(SubsetResidual { subset, residual });
        all_gains.push(coef.iter().copied().collect::<Vec<_>>());
    }
    let (best, tie_broken) = pick_min(&residuals);
    Ok(DecodeOutcome {
        support: residuals[best].subset.clone(),
        gains: Some(all_gains.swap_remove(best)),
        residuals,
        tie_broken,
        ..Default::default()
    })
}

/// Single-sender heuristic based on energy matching.
///
/// For each codeword `j` with sample variance `σ̂ⱼ² > 0` the gain magnitude is
/// estimated as `γ̂ = √(|‖y‖²/n − σ_z²| / σ̂ⱼ²)`, and `j` is accepted when
/// `‖y ∓ γ̂ xⱼ‖²/n ≤ σ_z² + ε² σ̂ⱼ²` for either sign. A unique acceptance is
/// returned directly. With several acceptances one of them is drawn at random;
/// with none, any codeword is drawn at random. Constant codewords are skipped.
pub fn jin_decode<R: Rng + ?Sized>(
    y: &[f64],
    codebook: &Codebook,
    noise_var: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<DecodeOutcome> {
    check_len(y, codebook)?;
    let n = codebook.n();
    if n < 2 {
        return Err(Error::invalid("n", "sample variance needs n ≥ 2"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid("noise_var", format!("must be non-negative, got {noise_var}")));
    }

    let nf = n as f64;
    let energy = y.iter().map(|v| v * v).sum::<f64>() / nf;
    let mut outcome = DecodeOutcome::default();
    let mut accepted = Vec::new();
    let mut gain_of = vec![None; codebook.m()];

    for (j, slot) in gain_of.iter_mut().enumerate() {
        let col = codebook.column(j);
        let mean = col.mean();
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let scale = col.amax();
        if var <= (1e-12 * scale).powi(2) {
            outcome.skipped.push(j);
            continue;
        }
        let gain = ((energy - noise_var).abs() / var).sqrt();
        let fit = |sign: f64| {
            y.iter()
                .zip(col.iter())
                .map(|(yi, xi)| (yi - sign * gain * xi).powi(2))
                .sum::<f64>()
                / nf
        };
        let stat = fit(-1.0).min(fit(1.0));
        outcome.residuals.push(SubsetResidual {
            subset: vec![j],
            residual: (stat * nf).sqrt(),
        });
        *slot = Some(gain);
        if stat <= noise_var + epsilon * epsilon * var {
            accepted.push(j);
        }
    }

    let choice = match accepted.as_slice() {
        [only] => *only,
        [] => {
            outcome.fallback = true;
            rng.random_range(0..codebook.m())
        }
        many => {
            outcome.fallback = true;
            *many.choose(rng).expect("non-empty")
        }
    };
    outcome.support = vec![choice];
    outcome.gains = gain_of[choice].map(|g| vec![g]);
    Ok(outcome)
}
