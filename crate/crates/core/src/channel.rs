//! Shared-codebook Gaussian multiple access channel.
//!
//! The `k` active senders (the causal predictors) pick distinct codewords from
//! one codebook; the receiver sees `y = Σ_{l∈S*} γ_l · x_l + z` with i.i.d.
//! `N(0, σ_z²)` noise. Codeword indices are zero-based throughout.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codebook::Codebook;
use crate::error::{Error, Result};

/// True support, gains and noise level of one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    support: Vec<usize>,
    gains: Vec<f64>,
    noise_var: f64,
}

impl ChannelConfig {
    /// `support` is sorted on construction; `gains[i]` stays attached to the
    /// codeword `support[i]` named by the caller.
    pub fn new(support: Vec<usize>, gains: Vec<f64>, noise_var: f64) -> Result<Self> {
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(Error::invalid(
                "noise_var",
                format!("must be positive, got {noise_var}"),
            ));
        }
        Self::build(support, gains, noise_var)
    }

    /// Same as [`ChannelConfig::new`] but with σ_z² = 0. Intended for tests
    /// that need the exact noiseless superposition.
    pub fn noiseless(support: Vec<usize>, gains: Vec<f64>) -> Result<Self> {
        Self::build(support, gains, 0.0)
    }

    /// Unit gains on every active codeword.
    pub fn unit_gains(support: Vec<usize>, noise_var: f64) -> Result<Self> {
        let k = support.len();
        Self::new(support, vec![1.0; k], noise_var)
    }

    fn build(support: Vec<usize>, gains: Vec<f64>, noise_var: f64) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("k", "support must hold at least one index"));
        }
        if support.len() != gains.len() {
            return Err(Error::invalid(
                "gains",
                format!("{} gains for {} support indices", gains.len(), support.len()),
            ));
        }
        if let Some(g) = gains.iter().find(|g| !g.is_finite() || **g == 0.0) {
            return Err(Error::invalid("gains", format!("gains must be finite and nonzero, got {g}")));
        }
        let mut pairs: Vec<(usize, f64)> = support.into_iter().zip(gains).collect();
        pairs.sort_by_key(|&(i, _)| i);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("support", "indices must be distinct"));
        }
        let (support, gains) = pairs.into_iter().unzip();
        Ok(ChannelConfig {
            support,
            gains,
            noise_var,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    /// Rejects configs that do not fit a codebook with `m` codewords.
    pub fn check_against(&self, m: usize) -> Result<()> {
        if self.k() > m {
            return Err(Error::invalid("k", format!("k = {} exceeds m = {m}", self.k())));
        }
        if let Some(&i) = self.support.iter().find(|&&i| i >= m) {
            return Err(Error::invalid(
                "support",
                format!("index {i} out of range for m = {m}"),
            ));
        }
        Ok(())
    }
}

/// Output of one channel use.
#[derive(Debug, Clone)]
pub struct ReceivedSignal<'a> {
    pub y: Vec<f64>,
    pub config: ChannelConfig,
    pub codebook: &'a Codebook,
}

impl ReceivedSignal<'_> {
    pub fn noiseless(&self) -> Vec<f64> {
        superpose(self.codebook, self.config.support(), self.config.gains())
    }
}

/// `Σ gains[i] · column(support[i])`.
pub fn superpose(codebook: &Codebook, support: &[usize], gains: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; codebook.n()];
    for (&j, &g) in support.iter().zip(gains) {
        for (o, x) in out.iter_mut().zip(codebook.column(j).iter()) {
            *o += g * x;
        }
    }
    out
}

pub fn transmit<'a, R: Rng + ?Sized>(
    codebook: &'a Codebook,
    config: &ChannelConfig,
    rng: &mut R,
) -> Result<ReceivedSignal<'a>> {
    config.check_against(codebook.m())?;
    let sigma = config.noise_var().sqrt();
    let mut y = superpose(codebook, config.support(), config.gains());
    for yi in y.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *yi += sigma * z;
    }
    Ok(ReceivedSignal {
        y,
        config: config.clone(),
        codebook,
    })
}

/// Uniformly random `k`-subset of `0..m`, returned sorted.
pub fn draw_support<R: Rng + ?Sized>(m: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k == 0 || k > m {
        return Err(Error::invalid("k", format!("need 1 ≤ k ≤ m, got k = {k}, m = {m}")));
    }
    let mut s = index::sample(rng, m, k).into_vec();
    s.sort_unstable();
    Ok(s)
}
