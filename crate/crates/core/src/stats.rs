//! Small statistical helpers: the Gaussian CDF, Wilson intervals and the
//! two-sided p-values used by the invariance tests.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

pub const WILSON_Z_95: f64 = 1.96;

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes.min(trials) as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * n)) / n).sqrt() / denom;
    // Clamp to the point estimate so lo ≤ p̂ ≤ hi survives rounding at p̂ ∈ {0, 1}.
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Two-sided (equal-tail) p-value of a χ² statistic with `df` degrees of freedom.
pub fn chi2_two_sided_p(x: f64, df: f64) -> f64 {
    let dist = ChiSquared::new(df).expect("df > 0");
    let lower = dist.cdf(x);
    (2.0 * lower.min(1.0 - lower)).clamp(0.0, 1.0)
}
