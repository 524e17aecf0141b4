//! Closed-form expressions for the test count: the characteristic roots of
//! its generating-function recurrence, the moment generating function in
//! plain and log arithmetic, an independent block-matrix evaluation of the
//! same MGF, and the exact mean/variance formulas.

use crate::asymptotics::log_alpha0;
use crate::error::{Error, Result};
use crate::exactdist;
use crate::logsum::{lse2, lse_slice};
use crate::model::ContaminationModel;

/// Roots of the characteristic quadratic
/// `t^2 - p e^(2 lambda) t - q e^lambda (q + p e^lambda) = 0`.
///
/// `alpha0` is the larger root and dominates in absolute value for every
/// real `lambda`; `alpha1` is negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPair {
    pub alpha0: f64,
    pub alpha1: f64,
    pub lambda: f64,
}

/// Both characteristic roots at a given tilt `lambda`.
///
/// The discriminant is assembled from its three all-positive pieces
/// `p^2 e^(4 lambda) + 4 q^2 e^lambda + 4 p q e^(2 lambda)`, so no
/// cancellation occurs; at `lambda = 0` it collapses to `(1 + q)^2` and
/// the roots are exactly 1 and `-q` up to rounding.
pub fn alpha(m: &ContaminationModel, lambda: f64) -> Result<AlphaPair> {
    if !lambda.is_finite() {
        return Err(Error::NonFiniteLambda(lambda));
    }
    let p = m.p();
    let q = m.q();
    let e1 = lambda.exp();
    let e2 = (2.0 * lambda).exp();
    let e4 = (4.0 * lambda).exp();
    let disc = p * p * e4 + 4.0 * q * e1 * q + 4.0 * q * e2 * p;
    assert!(disc > 0.0, "discriminant must be positive, got {disc}");
    if lambda == 0.0 {
        let collapsed = (1.0 + q) * (1.0 + q);
        assert!(
            (disc - collapsed).abs() <= 4.0 * f64::EPSILON * collapsed,
            "discriminant at lambda = 0 must collapse to (1+q)^2"
        );
    }
    let root = disc.sqrt();
    Ok(AlphaPair {
        alpha0: 0.5 * (p * e2 + root),
        alpha1: 0.5 * (p * e2 - root),
        lambda,
    })
}

/// `kappa_n = (alpha0^n - alpha1^n)/(alpha0 - alpha1)` evaluated at a
/// scalar tilt. Overflow of the powers raises a capacity error;
/// [`log_kappa_scalar`] covers that range.
pub fn kappa_scalar(m: &ContaminationModel, n: usize, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFiniteLambda(lambda));
    }
    match n {
        0 => Ok(0.0),
        1 => Ok(1.0),
        _ => {
            let a = alpha(m, lambda)?;
            let value =
                (a.alpha0.powi(n as i32) - a.alpha1.powi(n as i32)) / (a.alpha0 - a.alpha1);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::Capacity { n })
            }
        }
    }
}

/// `ln kappa_n`, reorganized as
/// `n ln alpha0 + ln(1 - (alpha1/alpha0)^n) - ln(alpha0 - alpha1)` so it
/// never overflows. Agrees with the plain form to 1e-10 relative wherever
/// both are representable. Returns `-inf` for `n = 0`.
pub fn log_kappa_scalar(m: &ContaminationModel, n: usize, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFiniteLambda(lambda));
    }
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let lp = m.p().ln();
    let lq = m.q().ln();
    let l0 = log_alpha0(m, lambda);
    // ln(alpha0 - alpha1) = ln sqrt(disc)
    let ln4 = 2.0 * std::f64::consts::LN_2;
    let log_disc = lse_slice(&[
        2.0 * lp + 4.0 * lambda,
        ln4 + 2.0 * lq + lambda,
        ln4 + lp + lq + 2.0 * lambda,
    ]);
    // |alpha1/alpha0| via the product of the roots: -alpha0 alpha1 =
    // q e^lambda (q + p e^lambda)
    let log_ratio = lq + lambda + lse2(lq, lp + lambda) - 2.0 * l0;
    let z = (-(n as f64) * log_ratio).max(0.0);
    // alpha1 < 0, so 1 - ratio^n is 1 + |ratio|^n at odd n, 1 - |ratio|^n
    // at even n
    let balance = if n % 2 == 1 {
        (-z).exp().ln_1p()
    } else {
        (-(-z).exp_m1()).ln()
    };
    Ok((n as f64) * l0 + balance - 0.5 * log_disc)
}

/// Moment generating function `E e^(lambda T_n)` from the closed form
/// `e^(2 lambda) [c1(lambda) kappa_{n-2} + c2(lambda) kappa_{n-3}]`.
///
/// The two-item law is the direct three-point expectation
/// `q^2 e^lambda + p q e^(2 lambda) + p e^(3 lambda)`.
pub fn mgf(m: &ContaminationModel, n: usize, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFiniteLambda(lambda));
    }
    if n < 2 {
        return Err(Error::TooSmall {
            what: "moment generating function population",
            got: n as u64,
            min: 2,
        });
    }
    let p = m.p();
    let q = m.q();
    let e1 = lambda.exp();
    if n == 2 {
        let value = q * q * e1 + p * q * e1 * e1 + p * e1 * e1 * e1;
        return if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Capacity { n })
        };
    }
    let c1 = p * p * e1 * e1 * e1 + q * p * p * e1 * e1 + q * p * (1.0 + q) * e1 + q * q;
    let c2 = q
        * (p * p * e1 * e1 * e1
            + q * p * (2.0 - q) * e1 * e1
            + 2.0 * q * q * p * e1
            + q * q * q);
    let value = e1 * e1
        * (c1 * kappa_scalar(m, n - 2, lambda)? + c2 * kappa_scalar(m, n - 3, lambda)?);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Capacity { n })
    }
}

/// `ln E e^(lambda T_n)`: the same closed form with every positive term
/// kept in log space, finite for any `n` and finite `lambda`.
pub fn log_mgf(m: &ContaminationModel, n: usize, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFiniteLambda(lambda));
    }
    if n < 2 {
        return Err(Error::TooSmall {
            what: "moment generating function population",
            got: n as u64,
            min: 2,
        });
    }
    let lp = m.p().ln();
    let lq = m.q().ln();
    if n == 2 {
        return Ok(lse_slice(&[
            2.0 * lq + lambda,
            lp + lq + 2.0 * lambda,
            lp + 3.0 * lambda,
        ]));
    }
    let lc1 = lse_slice(&[
        2.0 * lp + 3.0 * lambda,
        lq + 2.0 * lp + 2.0 * lambda,
        lq + lp + m.q().ln_1p() + lambda,
        2.0 * lq,
    ]);
    let lc2 = lq
        + lse_slice(&[
            2.0 * lp + 3.0 * lambda,
            lq + lp + m.p().ln_1p() + 2.0 * lambda,
            std::f64::consts::LN_2 + 2.0 * lq + lp + lambda,
            3.0 * lq,
        ]);
    Ok(2.0 * lambda
        + lse2(
            lc1 + log_kappa_scalar(m, n - 2, lambda)?,
            lc2 + log_kappa_scalar(m, n - 3, lambda)?,
        ))
}

/// The same MGF by iterating the 4x4 block operator of the two-component
/// recursion from its explicit start vector `(e^lambda, e^lambda, 1, 1)`.
///
/// Deliberately shares no code with [`mgf`] (in particular no
/// `kappa` evaluation), so agreement between the two is a real check. The
/// iteration overflows to `inf` for large `n * lambda`; keep arguments
/// moderate.
pub fn mgf_blockmatrix(m: &ContaminationModel, n: usize, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::NonFiniteLambda(lambda));
    }
    if n < 2 {
        return Err(Error::TooSmall {
            what: "moment generating function population",
            got: n as u64,
            min: 2,
        });
    }
    let p = m.p();
    let q = m.q();
    let e1 = lambda.exp();
    let e2 = e1 * e1;
    let (mut m1, mut m2, mut m3, mut m4) = (e1, e1, 1.0, 1.0);
    for _ in 1..n {
        let top = e2 * (p * m1 + q * m2);
        let mid = e2 * p * m3 + e1 * q * m4;
        let bottom = p * m1 + q * m2;
        m1 = top;
        m2 = mid;
        m3 = bottom;
        m4 = bottom;
    }
    Ok(p * m1 + q * m2)
}

/// How a moment figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentSource {
    /// Printed closed-form formulas.
    ClosedForm,
    /// Small-population enumeration backstop.
    Enumeration,
    /// Summation over an exact PMF table.
    ExactPmf,
}

impl MomentSource {
    /// Stable machine-readable name, used by the command-line output.
    pub fn name(self) -> &'static str {
        match self {
            MomentSource::ClosedForm => "closed_form",
            MomentSource::Enumeration => "enumeration",
            MomentSource::ExactPmf => "exact_pmf",
        }
    }
}

/// Mean and variance of the test count for one population size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub source: MomentSource,
}

/// Exact mean and variance from the printed formulas.
///
/// The mean formula holds from `n = 1`; the variance formula is stated for
/// `n >= 3`, so smaller populations get their variance from enumeration
/// and say so in `source`.
pub fn closed_form_moments(m: &ContaminationModel, n: usize) -> Result<MomentSummary> {
    if n == 0 {
        return Err(Error::TooSmall {
            what: "moment population",
            got: 0,
            min: 1,
        });
    }
    let q = m.q();
    let mean = closed_form_mean(q, n);
    match n {
        1 => Ok(MomentSummary {
            n,
            mean,
            variance: 0.0,
            source: MomentSource::Enumeration,
        }),
        2 => {
            let table = exactdist::exact_pmf(m, 2)?;
            Ok(MomentSummary {
                n,
                mean,
                variance: exactdist::moments_from_pmf(&table).variance,
                source: MomentSource::Enumeration,
            })
        }
        _ => {
            let nq = neg_q_pow(q, n);
            let c1 = q + 1.0;
            let variance = n as f64 * (1.0 - q) / (c1 * c1 * c1)
                * (q * (q * q * q + 3.0 * q * q + 5.0 * q + 4.0)
                    + nq * (2.0 * q + 4.0) * (q * q + q - 1.0))
                + (1.0 - nq) / (c1 * c1 * c1 * c1)
                    * (q * (5.0 * q * q + 3.0 * q - 7.0)
                        + nq * (q * q + q - 1.0) * (q * q + q - 1.0));
            Ok(MomentSummary {
                n,
                mean,
                variance,
                source: MomentSource::ClosedForm,
            })
        }
    }
}

fn closed_form_mean(q: f64, n: usize) -> f64 {
    let nq = neg_q_pow(q, n);
    n as f64 * (2.0 - q * q) / (1.0 + q)
        + (q * q + q - 1.0) / ((1.0 + q) * (1.0 + q)) * (1.0 - nq)
}

fn neg_q_pow(q: f64, n: usize) -> f64 {
    let magnitude = q.powi(n as i32);
    if n.is_multiple_of(2) {
        magnitude
    } else {
        -magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactdist::{exact_pmf, moments_from_pmf};

    fn model(p: f64) -> ContaminationModel {
        ContaminationModel::new(p).unwrap()
    }

    #[test]
    fn alpha_at_zero_and_vieta() {
        let m = model(0.3);
        let a = alpha(&m, 0.0).unwrap();
        assert!((a.alpha0 - 1.0).abs() < 4.0 * f64::EPSILON);
        assert!((a.alpha1 + 0.7).abs() < 4.0 * f64::EPSILON);

        for i in -30..=30 {
            let lambda = i as f64 * 0.2;
            let a = alpha(&m, lambda).unwrap();
            let e1 = lambda.exp();
            let sum = 0.3 * e1 * e1;
            let product = -(0.7 * e1 * (0.7 + 0.3 * e1));
            let scale = a.alpha0.abs().max(1.0);
            assert!(
                ((a.alpha0 + a.alpha1) - sum).abs() <= 8.0 * f64::EPSILON * scale,
                "sum at {lambda}"
            );
            assert!(
                ((a.alpha0 * a.alpha1) - product).abs()
                    <= 8.0 * f64::EPSILON * scale * scale,
                "product at {lambda}"
            );
            assert!(a.alpha0 > a.alpha1.abs(), "dominance at {lambda}");
            assert!(a.alpha1 < 0.0);
        }
    }

    #[test]
    fn alpha_characteristic_equation() {
        let m = model(0.35);
        for i in -15..=15 {
            let lambda = i as f64 * 0.2;
            let a = alpha(&m, lambda).unwrap();
            let e1 = lambda.exp();
            let b = 0.35 * (2.0 * lambda).exp();
            let c = 0.65 * e1 * (0.65 + 0.35 * e1);
            // every intermediate (the three discriminant pieces included)
            // may carry an ulp, so measure the residual against all of them
            let disc_scale = (b * b + 4.0 * c) / 4.0;
            for root in [a.alpha0, a.alpha1] {
                let residual = root * root - b * root - c;
                let scale = root * root + (b * root).abs() + c + disc_scale;
                assert!(
                    residual.abs() <= 8.0 * f64::EPSILON * scale,
                    "lambda={lambda} root={root}: residual {residual:e}"
                );
            }
        }
    }

    #[test]
    fn alpha_rejects_nonfinite_tilt() {
        assert!(alpha(&model(0.3), f64::NAN).is_err());
        assert!(alpha(&model(0.3), f64::INFINITY).is_err());
    }

    #[test]
    fn alpha_dominant_term_asymptotics() {
        let m = model(0.3);
        let a = alpha(&m, 40.0).unwrap();
        assert!((a.alpha0 / (0.3 * (80.0_f64).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_anchors_and_recurrence_step() {
        let m = model(0.3);
        assert_eq!(kappa_scalar(&m, 0, 0.35).unwrap(), 0.0);
        assert_eq!(kappa_scalar(&m, 1, -2.0).unwrap(), 1.0);
        // value at lambda = 0: (1 - (-q)^n)/(1 + q)
        let k5 = kappa_scalar(&m, 5, 0.0).unwrap();
        assert!((k5 - 1.16807 / 1.7).abs() < 1e-12);

        let lambda = 0.05_f64;
        let e1 = lambda.exp();
        let k3 = kappa_scalar(&m, 3, lambda).unwrap();
        let step = 0.3 * e1 * e1 * kappa_scalar(&m, 2, lambda).unwrap()
            + 0.7 * e1 * (0.7 + 0.3 * e1) * kappa_scalar(&m, 1, lambda).unwrap();
        assert!((k3 - step).abs() < 1e-14);
    }

    #[test]
    fn log_kappa_agrees_with_plain() {
        let m = model(0.3);
        for n in [1, 2, 3, 5, 10, 25, 40] {
            for i in -10..=10 {
                let lambda = i as f64 * 0.2;
                let plain = kappa_scalar(&m, n, lambda).unwrap();
                let logged = log_kappa_scalar(&m, n, lambda).unwrap();
                assert!(
                    (logged.exp() - plain).abs() <= 1e-10 * plain,
                    "n={n} lambda={lambda}: {} vs {plain}",
                    logged.exp()
                );
            }
        }
        assert_eq!(
            log_kappa_scalar(&m, 0, 0.3).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log_kappa_survives_where_plain_overflows() {
        let m = model(0.3);
        assert!(matches!(
            kappa_scalar(&m, 500, 2.0),
            Err(Error::Capacity { n: 500 })
        ));
        let logged = log_kappa_scalar(&m, 500, 2.0).unwrap();
        // kappa_n ~ alpha0^(n-1) for large n, so compare growth rates
        let expected = 499.0 * log_alpha0(&m, 2.0);
        assert!((logged - expected).abs() / expected.abs() < 1e-2);
    }

    #[test]
    fn mgf_normalizes_at_zero() {
        for p in [0.05, 0.3, 0.7] {
            let m = model(p);
            for n in [2, 3, 4, 10, 25] {
                assert!((mgf(&m, n, 0.0).unwrap() - 1.0).abs() < 1e-12, "p={p} n={n}");
                assert!(
                    log_mgf(&m, n, 0.0).unwrap().abs() < 1e-12,
                    "log, p={p} n={n}"
                );
                assert!(
                    (mgf_blockmatrix(&m, n, 0.0).unwrap() - 1.0).abs() < 1e-12,
                    "block, p={p} n={n}"
                );
            }
        }
    }

    #[test]
    fn mgf_matches_pattern_expectation_n4() {
        use crate::simulator::{recurrence_count, DefectPattern};
        let m = model(0.3);
        let lambda = 0.1;
        let mut expectation = 0.0;
        for bits in 0..16u64 {
            let pattern = DefectPattern::from_bits(4, bits).unwrap();
            expectation +=
                pattern.probability(&m) * (lambda * recurrence_count(&pattern) as f64).exp();
        }
        let closed = mgf(&m, 4, lambda).unwrap();
        assert!((closed - expectation).abs() <= 1e-12 * expectation);
    }

    #[test]
    fn mgf_matches_pmf_sum() {
        let m = model(0.3);
        for n in [3, 10, 25, 50] {
            let table = exact_pmf(&m, n).unwrap();
            for i in -10..=10 {
                let lambda = i as f64 * 0.1;
                let from_pmf: f64 =
                    table.iter().map(|(k, p)| p * (lambda * k as f64).exp()).sum();
                let closed = mgf(&m, n, lambda).unwrap();
                assert!(
                    (closed - from_pmf).abs() <= 1e-10 * from_pmf,
                    "n={n} lambda={lambda}"
                );
            }
        }
    }

    #[test]
    fn blockmatrix_agrees_with_closed_form() {
        for p in [0.3, 0.35] {
            let m = model(p);
            for n in 2..=30 {
                for i in -5..=5 {
                    let lambda = i as f64 * 0.1;
                    let a = mgf(&m, n, lambda).unwrap();
                    let b = mgf_blockmatrix(&m, n, lambda).unwrap();
                    assert!((a - b).abs() <= 1e-10 * a, "p={p} n={n} lambda={lambda}");
                }
            }
        }
    }

    #[test]
    fn log_mgf_agrees_and_extends() {
        let m = model(0.3);
        for n in [2, 3, 7, 30] {
            for i in -8..=8 {
                let lambda = i as f64 * 0.25;
                let plain = mgf(&m, n, lambda).unwrap();
                let logged = log_mgf(&m, n, lambda).unwrap();
                assert!(
                    (logged.exp() - plain).abs() <= 1e-10 * plain,
                    "n={n} lambda={lambda}"
                );
            }
        }
        // far past the plain form's overflow point
        assert!(matches!(mgf(&m, 2000, 1.0), Err(Error::Capacity { .. })));
        let big = log_mgf(&m, 2000, 1.0).unwrap();
        assert!(big.is_finite() && big > 2000.0);
    }

    #[test]
    fn moment_formulas_match_pmf() {
        for p in [0.05, 0.3, 0.35, 0.7] {
            let m = model(p);
            for n in 3..=50 {
                let formula = closed_form_moments(&m, n).unwrap();
                assert_eq!(formula.source, MomentSource::ClosedForm);
                let from_pmf = moments_from_pmf(&exact_pmf(&m, n).unwrap());
                assert!(
                    (formula.mean - from_pmf.mean).abs() <= 1e-9 * from_pmf.mean,
                    "mean p={p} n={n}"
                );
                assert!(
                    (formula.variance - from_pmf.variance).abs() <= 1e-9 * from_pmf.variance,
                    "variance p={p} n={n}: {} vs {}",
                    formula.variance,
                    from_pmf.variance
                );
            }
        }
    }

    #[test]
    fn moment_spot_values() {
        let m = model(0.3);
        let t2 = closed_form_moments(&m, 2).unwrap();
        assert_eq!(t2.source, MomentSource::Enumeration);
        assert!((t2.mean - 1.81).abs() < 1e-12);
        let t3 = closed_form_moments(&m, 3).unwrap();
        assert!((t3.mean - 2.753).abs() < 1e-12);
        let t1 = closed_form_moments(&m, 1).unwrap();
        assert_eq!((t1.mean, t1.variance), (1.0, 0.0));
    }

    #[test]
    fn variance_vanishes_as_p_tends_to_one() {
        let m = model(1.0 - 1e-9);
        for n in [3, 10, 40] {
            // leading term of the variance is about 4 n q, so stay near it
            let s = closed_form_moments(&m, n).unwrap();
            assert!(
                s.variance.abs() < 5.0 * n as f64 * 1e-9,
                "n={n} variance {}",
                s.variance
            );
            assert!((s.mean - (2.0 * n as f64 - 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn mean_stays_within_support() {
        for p in [0.05, 0.3, 0.7, 0.95] {
            let m = model(p);
            for n in 1..=60 {
                let s = closed_form_moments(&m, n).unwrap();
                assert!(s.mean >= (n as f64 / 2.0).ceil() - 1e-12);
                assert!(s.mean <= 2.0 * n as f64 - 1.0 + 1e-12);
                assert!(s.variance >= 0.0);
            }
        }
    }

    #[test]
    fn finite_differences_of_mgf_recover_moments() {
        let m = model(0.3);
        let h = 1e-5;
        for n in [3, 10, 30] {
            let s = closed_form_moments(&m, n).unwrap();
            let up = mgf(&m, n, h).unwrap();
            let down = mgf(&m, n, -h).unwrap();
            let mid = mgf(&m, n, 0.0).unwrap();
            let d1 = (up - down) / (2.0 * h);
            let d2 = (up - 2.0 * mid + down) / (h * h);
            assert!((d1 - s.mean).abs() < 1e-5, "n={n} mean fd {d1}");
            let second_moment = s.variance + s.mean * s.mean;
            assert!((d2 - second_moment).abs() < 1e-3, "n={n} second fd {d2}");
        }
    }
}
