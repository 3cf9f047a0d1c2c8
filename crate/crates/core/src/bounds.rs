//! Closed-form error-probability lower bounds and the zero-rate exponent.
//!
//! All logarithms are natural. Probability bounds are clamped to `[0, 1]`;
//! the unclamped expression is kept in [`BoundValue::raw`] and clamping is
//! reported through [`BoundValue::clamped`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormulaId {
    Shannon,
    Prop1,
    Exponent,
    Fano1,
    Fano2,
}

impl FormulaId {
    pub const ALL: [FormulaId; 5] = [
        FormulaId::Shannon,
        FormulaId::Prop1,
        FormulaId::Exponent,
        FormulaId::Fano1,
        FormulaId::Fano2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulaId::Shannon => "shannon",
            FormulaId::Prop1 => "prop1",
            FormulaId::Exponent => "exponent",
            FormulaId::Fano1 => "fano1",
            FormulaId::Fano2 => "fano2",
        }
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormulaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FormulaId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid("formula", format!("unknown bound `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub raw: f64,
    pub formula: FormulaId,
    pub clamped: bool,
}

impl BoundValue {
    fn probability(formula: FormulaId, raw: f64) -> Self {
        let value = raw.clamp(0.0, 1.0);
        BoundValue {
            value,
            raw,
            formula,
            clamped: value != raw,
        }
    }

    fn unclamped(formula: FormulaId, raw: f64) -> Self {
        BoundValue {
            value: raw,
            raw,
            formula,
            clamped: false,
        }
    }
}

/// Parameters shared by every bound. Fields a formula does not read are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub power: f64,
    /// Second-environment power surplus.
    pub d: f64,
    /// Second-environment variance surplus `σ_d²` (random predictors).
    pub sigma_d2: f64,
    /// Second-environment predictor mean. Carried for reporting; the bound
    /// itself does not depend on it.
    pub mu_x: f64,
    /// Second-environment mean shift (deterministic predictors).
    pub mu_d: f64,
    /// Zero-based subset `T` of the `k` gain indices.
    pub subset: Vec<usize>,
    /// Gains `γ₀..γ_{k−1}`.
    pub gains: Vec<f64>,
    /// `Σᵢ Σ_ℓ x_{iℓ}` of the deterministic codebook.
    pub codebook_sum: Option<f64>,
}

impl BoundQuery {
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        BoundQuery {
            m,
            n,
            k,
            power: 1.0,
            d: 0.0,
            sigma_d2: 0.0,
            mu_x: 0.0,
            mu_d: 0.0,
            subset: (0..k).collect(),
            gains: vec![1.0; k],
            codebook_sum: None,
        }
    }

    pub fn evaluate(&self, formula: FormulaId) -> Result<BoundValue> {
        match formula {
            FormulaId::Shannon => shannon_bound(self.m, self.n, self.power),
            FormulaId::Prop1 => prop1_bound(self.m, self.n, self.power, self.d),
            FormulaId::Exponent => error_exponent(self.m, self.power),
            FormulaId::Fano1 => fano1_bound(self),
            FormulaId::Fano2 => fano2_bound(self),
        }
    }
}

fn check_positive_power(formula: &'static str, power: f64) -> Result<()> {
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::domain(formula, format!("power must be positive, got {power}")));
    }
    Ok(())
}

/// `½ Φ(−√(m/(4(m−2)) · nP/2))`, the best error probability of any `m`-word
/// code of length `n` under unit-variance noise.
pub fn shannon_bound(m: usize, n: usize, power: f64) -> Result<BoundValue> {
    if m < 3 {
        return Err(Error::domain(
            "shannon",
            format!("requires m ≥ 3 because of the m−2 denominator, got m = {m}"),
        ));
    }
    check_positive_power("shannon", power)?;
    let mf = m as f64;
    let arg = (mf / (4.0 * (mf - 2.0)) * n as f64 * power / 2.0).sqrt();
    Ok(BoundValue::probability(
        FormulaId::Shannon,
        0.5 * normal_cdf(-arg),
    ))
}

/// Two-environment version of [`shannon_bound`]: environment budgets `nP/2`
/// and `n(P + d)/2` act like a single budget `n(P + d/2)`.
pub fn prop1_bound(m: usize, n: usize, power: f64, d: f64) -> Result<BoundValue> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::domain("prop1", format!("d must be non-negative, got {d}")));
    }
    check_positive_power("prop1", power)?;
    let bound = shannon_bound(m, n, power + d / 2.0).map_err(|e| match e {
        Error::Domain { reason, .. } => Error::domain("prop1", reason),
        other => other,
    })?;
    Ok(BoundValue {
        formula: FormulaId::Prop1,
        ..bound
    })
}

/// Zero-rate error exponent `m/(4(m−1)) · P` achieved by the simplex code.
pub fn error_exponent(m: usize, power: f64) -> Result<BoundValue> {
    if m < 2 {
        return Err(Error::domain("exponent", format!("requires m ≥ 2, got m = {m}")));
    }
    check_positive_power("exponent", power)?;
    let mf = m as f64;
    Ok(BoundValue::unclamped(
        FormulaId::Exponent,
        mf * power / (4.0 * (mf - 1.0)),
    ))
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Terms shared by both Fano bounds.
struct FanoTerms {
    /// `|T|`
    t: usize,
    /// `Σ_{j∈T} γⱼ²`
    a: f64,
    /// `Σ_{j∈T} γⱼ`
    gain_sum: f64,
    /// `log C(m, k)`
    b: f64,
    /// `log k! + 1 + n·log(m^|T| / Π_q (m − (k − |T|) − q))`
    c_n: f64,
}

fn fano_terms(formula: &'static str, q: &BoundQuery) -> Result<FanoTerms> {
    let (m, k) = (q.m, q.k);
    if k == 0 {
        return Err(Error::domain(formula, "k must be at least 1"));
    }
    if m <= k {
        return Err(Error::domain(
            formula,
            format!("needs m > k so that log C(m,k) > 0, got m = {m}, k = {k}"),
        ));
    }
    if q.gains.len() != k {
        return Err(Error::domain(
            formula,
            format!("{} gains for k = {k}", q.gains.len()),
        ));
    }
    if q.subset.is_empty() {
        return Err(Error::domain(formula, "subset T must be nonempty"));
    }
    let mut seen = vec![false; k];
    for &j in &q.subset {
        if j >= k || seen[j] {
            return Err(Error::domain(
                formula,
                format!("T must hold distinct indices below k = {k}, got {:?}", q.subset),
            ));
        }
        seen[j] = true;
    }

    let t = q.subset.len();
    let a = q.subset.iter().map(|&j| q.gains[j].powi(2)).sum();
    let gain_sum = q.subset.iter().map(|&j| q.gains[j]).sum();
    let mf = m as f64;
    let b = (0..k).map(|i| (mf - i as f64).ln()).sum::<f64>() - ln_factorial(k);
    // log(m / (m − j)) = −log1p(−j/m), summed over j = k − |T| + q.
    let ratio_ln = -(0..t)
        .map(|qq| (-((k - t + qq) as f64) / mf).ln_1p())
        .sum::<f64>();
    let c_n = ln_factorial(k) + 1.0 + q.n as f64 * ratio_ln;
    Ok(FanoTerms {
        t,
        a,
        gain_sum,
        b,
        c_n,
    })
}

/// Fano bound for independent random predictors whose second-environment
/// variance is inflated by `σ_d²`.
pub fn fano1_bound(q: &BoundQuery) -> Result<BoundValue> {
    let terms = fano_terms("fano1", q)?;
    if !(q.sigma_d2.is_finite() && q.sigma_d2 >= 0.0) {
        return Err(Error::domain(
            "fano1",
            format!("σ_d² must be non-negative, got {}", q.sigma_d2),
        ));
    }
    let FanoTerms { t, a, b, c_n, .. } = terms;
    let n = q.n as f64;
    let info = (n / 4.0) * (a.ln_1p() + ((1.0 + q.sigma_d2) * a).ln_1p());
    let raw = (t as f64 * (q.m as f64).ln() - info - c_n) / b;
    Ok(BoundValue::probability(FormulaId::Fano1, raw))
}

/// Fano bound for a deterministic codebook whose second half is shifted by `μ_d`.
pub fn fano2_bound(q: &BoundQuery) -> Result<BoundValue> {
    let terms = fano_terms("fano2", q)?;
    let FanoTerms {
        t,
        a,
        gain_sum,
        b,
        c_n,
    } = terms;
    let mf = q.m as f64;
    let n = q.n as f64;
    let tau = gain_sum * gain_sum / (mf - 1.0);
    let eta = if q.mu_d == 0.0 {
        1.0
    } else {
        let sum = q.codebook_sum.ok_or_else(|| {
            Error::domain("fano2", "a nonzero μ_d needs the codebook entry sum")
        })?;
        if q.n == 0 {
            return Err(Error::domain("fano2", "η divides by n, got n = 0"));
        }
        1.0 + q.mu_d * q.mu_d + 2.0 * q.mu_d / (n * mf) * sum
    };
    let first = a + tau + 1.0;
    if first <= 0.0 {
        return Err(Error::domain(
            "fano2",
            format!("log argument (a + τ) + 1 = {first} is not positive"),
        ));
    }
    let second = eta * (a + tau) + 1.0;
    if second <= 0.0 {
        return Err(Error::domain(
            "fano2",
            format!("log argument η(a + τ) + 1 = {second} is not positive"),
        ));
    }
    let raw = (t as f64 * mf.ln() - (n / 4.0) * ((a + tau).ln_1p() + (eta * (a + tau)).ln_1p()) - c_n) / b;
    Ok(BoundValue::probability(FormulaId::Fano2, raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shannon_at_zero_length() {
        let v = shannon_bound(3, 0, 0.1).unwrap();
        assert_eq!(v.value, 0.25);
        assert!(!v.clamped);
    }

    #[test]
    fn shannon_decreases_in_n() {
        let mut prev = f64::INFINITY;
        for n in 0..300 {
            let v = shannon_bound(4, n, 0.1).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn shannon_rejects_small_m() {
        let err = shannon_bound(2, 10, 0.1).unwrap_err();
        assert!(err.to_string().contains("m−2"), "{err}");
        assert!(prop1_bound(2, 10, 0.1, 1.0).is_err());
        assert!(shannon_bound(3, 10, 0.0).is_err());
    }

    #[test]
    fn prop1_reductions() {
        let s = shannon_bound(5, 40, 0.3).unwrap();
        let p = prop1_bound(5, 40, 0.3, 0.0).unwrap();
        assert_eq!(s.value, p.value);
        assert_eq!(p.formula, FormulaId::Prop1);
        assert_eq!(
            prop1_bound(3, 100, 0.1, 1.0).unwrap().value,
            shannon_bound(3, 100, 0.6).unwrap().value
        );
        assert!(prop1_bound(3, 100, 0.1, 2.0).unwrap().value < prop1_bound(3, 100, 0.1, 1.0).unwrap().value);
        assert!(prop1_bound(3, 100, 0.1, -1.0).is_err());
    }

    #[test]
    fn exponent_values() {
        assert_relative_eq!(error_exponent(2, 0.7).unwrap().value, 0.35, max_relative = 1e-15);
        assert_relative_eq!(error_exponent(3, 0.1).unwrap().value, 0.0375, max_relative = 1e-15);
        assert_relative_eq!(error_exponent(1_000_000, 1.0).unwrap().value, 0.25, max_relative = 1e-5);
        assert!(error_exponent(1, 1.0).is_err());
    }

    fn base_query() -> BoundQuery {
        let mut q = BoundQuery::new(64, 100, 2);
        q.subset = vec![0];
        q.gains = vec![1.0, 0.5];
        q.sigma_d2 = 1.0;
        q
    }

    #[test]
    fn fano1_zero_gain_reduction() {
        let mut q = base_query();
        q.gains = vec![0.0, 0.5];
        q.sigma_d2 = 0.0;
        let v = fano1_bound(&q).unwrap();
        let b = (64f64 * 63.0 / 2.0).ln();
        let c_n = 2f64.ln() + 1.0 + 100.0 * (64f64 / 63.0).ln();
        assert_relative_eq!(v.raw, (64f64.ln() - c_n) / b, max_relative = 1e-12);
    }

    #[test]
    fn fano1_monotone_in_variance_surplus() {
        let mut q = base_query();
        q.n = 1;
        let mut prev = f64::INFINITY;
        for s in [0.0, 0.5, 1.0, 4.0, 16.0] {
            q.sigma_d2 = s;
            let v = fano1_bound(&q).unwrap().raw;
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn fano_domain_errors() {
        let mut q = base_query();
        q.m = 2;
        assert!(fano1_bound(&q).is_err());
        let mut q = base_query();
        q.subset = vec![];
        assert!(fano1_bound(&q).is_err());
        q.subset = vec![2];
        assert!(fano2_bound(&q).is_err());
        let mut q = base_query();
        q.sigma_d2 = -0.1;
        assert!(fano1_bound(&q).is_err());
        let mut q = base_query();
        q.mu_d = 0.3;
        assert!(fano2_bound(&q).is_err(), "sum required");
        q.codebook_sum = Some(-1e6);
        let err = fano2_bound(&q).unwrap_err();
        assert!(err.to_string().contains("η(a + τ) + 1"), "{err}");
    }

    #[test]
    fn fano2_single_gain_reduction() {
        let mut q = BoundQuery::new(10, 30, 1);
        q.gains = vec![0.8];
        q.codebook_sum = Some(12345.0);
        let v = fano2_bound(&q).unwrap();
        let g2 = 0.64 * 10.0 / 9.0;
        let b = 10f64.ln();
        let c_n = 1.0 + 30.0 * (10f64 / 10.0).ln();
        let want = (10f64.ln() - 2.0 * 7.5 * (g2 + 1.0f64).ln() - c_n) / b;
        assert_relative_eq!(v.raw, want, max_relative = 1e-12);
        assert!(v.clamped);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn clamping_flags() {
        let mut q = BoundQuery::new(1000, 0, 1);
        q.gains = vec![1.0];
        let v = fano1_bound(&q).unwrap();
        // (log m − 1)/log m is inside [0, 1].
        assert!(!v.clamped);
        q.n = 1000;
        let v = fano1_bound(&q).unwrap();
        assert!(v.clamped && v.value == 0.0 && v.raw < 0.0);
    }

    #[test]
    fn formula_names_round_trip() {
        for f in FormulaId::ALL {
            assert_eq!(f.name().parse::<FormulaId>().unwrap(), f);
        }
        assert!("bogus".parse::<FormulaId>().is_err());
    }
}
