//! Limit behavior of the per-item test count: law-of-large-numbers and
//! central-limit constants, the limiting scaled cumulant generating
//! function, and the large-deviation rate function obtained from it by a
//! Legendre transform.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exactdist::LogPmfTable;
use crate::model::ContaminationModel;
use crate::simulator::MonteCarloSummary;

/// Limits of `T_n / n`: almost-sure mean `mu` and the variance `sigma2`
/// of the Gaussian fluctuation around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConstants {
    pub mu: f64,
    pub sigma2: f64,
}

/// `mu = (2 - q^2)/(1 + q)` and
/// `sigma2 = q (1 - q)(q^3 + 3 q^2 + 5 q + 4)/(q + 1)^3`.
///
/// `mu` spans (1/2, 2): one test per clean pair as p tends to 0, the
/// individual-retest worst case of two tests per item as p tends to 1.
pub fn constants(m: &ContaminationModel) -> AsymptoticConstants {
    let q = m.q();
    let mu = (2.0 - q * q) / (1.0 + q);
    let sigma2 = q * (1.0 - q) * (q * q * q + 3.0 * q * q + 5.0 * q + 4.0)
        / ((q + 1.0) * (q + 1.0) * (q + 1.0));
    AsymptoticConstants { mu, sigma2 }
}

/// `ln alpha0(lambda)`, the log of the dominant characteristic root, which
/// is the limiting scaled cumulant generating function of the test count.
///
/// Evaluated via log-sum-exp over the all-positive pieces of the
/// discriminant, so it stays finite and accurate for any finite `lambda`
/// even where `e^(4 lambda)` itself overflows.
pub fn log_alpha0(m: &ContaminationModel, lambda: f64) -> f64 {
    assert!(lambda.is_finite(), "lambda must be finite, got {lambda}");
    let (u, dhalf) = split_log_terms(m, lambda).1;
    crate::logsum::lse2(u, dhalf) - std::f64::consts::LN_2
}

/// First derivative of [`log_alpha0`] in `lambda`, computed analytically
/// through the same softmax weights. Strictly increasing from 1/2 to 2.
pub fn log_alpha0_prime(m: &ContaminationModel, lambda: f64) -> f64 {
    assert!(lambda.is_finite(), "lambda must be finite, got {lambda}");
    let ((t1, t2, t3), (u, dhalf)) = split_log_terms(m, lambda);
    // weight of each discriminant piece; their lambda-slopes are 4, 1, 2
    let mx = t1.max(t2).max(t3);
    let (w1, w2, w3) = ((t1 - mx).exp(), (t2 - mx).exp(), (t3 - mx).exp());
    let disc_slope = (4.0 * w1 + w2 + 2.0 * w3) / (w1 + w2 + w3);
    // alpha0 mixes the p e^(2 lambda) piece (slope 2) with sqrt(disc)
    let mu = u.max(dhalf);
    let (a, b) = ((u - mu).exp(), (dhalf - mu).exp());
    (2.0 * a + b * disc_slope / 2.0) / (a + b)
}

/// Log terms of the discriminant `(t1, t2, t3)` plus the pair
/// `(ln(p e^(2 lambda)), ln sqrt(disc))` entering the dominant root.
fn split_log_terms(m: &ContaminationModel, lambda: f64) -> ((f64, f64, f64), (f64, f64)) {
    let lp = m.p().ln();
    let lq = m.q().ln();
    let ln4 = 2.0 * std::f64::consts::LN_2;
    let t1 = 2.0 * lp + 4.0 * lambda;
    let t2 = ln4 + 2.0 * lq + lambda;
    let t3 = ln4 + lp + lq + 2.0 * lambda;
    let d = crate::logsum::lse_slice(&[t1, t2, t3]);
    ((t1, t2, t3), (lp + 2.0 * lambda, 0.5 * d))
}

/// One point of the rate function `I(x) = sup (x lambda - ln alpha0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    /// Requested tests-per-item level.
    pub x: f64,
    /// `I(x)`; `+inf` outside `[1/2, 2]`.
    pub rate: f64,
    /// Argmax of the transform; `+-inf` where the supremum is not attained.
    pub lambda_star: f64,
    /// Whether the solver met its residual tolerance.
    pub converged: bool,
    /// Set when `x` hit an endpoint exactly and the value reported is the
    /// limit taken 1e-6 inside the interval.
    pub boundary: bool,
}

/// Rate-function level at `x`, solving `d/d lambda ln alpha0 = x`.
///
/// The derivative is strictly increasing (the limiting cumulant function
/// is convex), so a geometrically grown bracket plus Newton steps that are
/// clipped to the bracket cannot escape. Finite rates exist for `x` in
/// (1/2, 2); endpoints report the limit from 1e-6 inside, anything outside
/// `[1/2, 2]` reports `+inf`.
pub fn rate(m: &ContaminationModel, x: f64) -> RatePoint {
    assert!(x.is_finite(), "x must be finite, got {x}");
    const EDGE: f64 = 1e-6;
    const TOL: f64 = 1e-10;
    if !(0.5..=2.0).contains(&x) {
        return RatePoint {
            x,
            rate: f64::INFINITY,
            lambda_star: if x > 2.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            converged: true,
            boundary: false,
        };
    }
    let (target, boundary) = if x == 0.5 {
        (0.5 + EDGE, true)
    } else if x == 2.0 {
        (2.0 - EDGE, true)
    } else {
        (x, false)
    };
    let mut lo = -1.0;
    while log_alpha0_prime(m, lo) >= target && lo > -1e9 {
        lo *= 2.0;
    }
    let mut hi = 1.0;
    while log_alpha0_prime(m, hi) <= target && hi < 1e9 {
        hi *= 2.0;
    }
    let mut lambda = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..120 {
        let f = log_alpha0_prime(m, lambda) - target;
        if f.abs() <= TOL {
            converged = true;
            break;
        }
        if f > 0.0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
        let h = 1e-6;
        let curvature =
            (log_alpha0_prime(m, lambda + h) - log_alpha0_prime(m, lambda - h)) / (2.0 * h);
        let newton = lambda - f / curvature;
        lambda = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let rate = (target * lambda - log_alpha0(m, lambda)).max(0.0);
    RatePoint {
        x,
        rate,
        lambda_star: lambda,
        converged,
        boundary,
    }
}

/// Empirical rate `-(1/n) ln P(T_n >= x n)` read off an exact log-domain
/// distribution; converges to [`rate`] from below as `n` grows.
pub fn empirical_tail_rate(table: &LogPmfTable, x: f64) -> f64 {
    let n = table.n() as f64;
    // nudge before the ceiling so 1.1 * 500 = 550.00000000000006 still
    // rounds to the intended threshold of 550
    let k0 = (x * n - 1e-9).ceil().max(0.0) as u64;
    -table.tail_log_prob(k0) / n
}

/// Standardized draws `sqrt(n) (T/n - mu)/sqrt(sigma2)`, ready for a
/// goodness-of-fit comparison against the standard normal.
pub fn clt_standardize(
    samples: &MonteCarloSummary,
    c: &AsymptoticConstants,
) -> Result<Vec<f64>> {
    if c.sigma2 < 1e-12 {
        return Err(Error::DegenerateVariance(c.sigma2));
    }
    let n = samples.n as f64;
    let scale = n.sqrt() / c.sigma2.sqrt();
    Ok(samples
        .samples
        .iter()
        .map(|&t| scale * (t as f64 / n - c.mu))
        .collect())
}

/// Kolmogorov-Smirnov distance between a sample and the standard normal.
pub fn ks_distance_std_normal(samples: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = normal.cdf(v);
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max)
}
