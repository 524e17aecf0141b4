//! Exact law of the test count, computed by propagating its probability
//! generating function in polynomial coefficient space.
//!
//! The generating function of the count for `n` items splits as
//! `G(x) = g1(x) * kappa_{n-2}(x) + g2(x) * kappa_{n-3}(x)` where the
//! `kappa` family obeys the two-term recurrence
//! `kappa_{m+1}(x) = p x^2 kappa_m(x) + q x (q + p x) kappa_{m-1}(x)`
//! with `kappa_0 = 0`, `kappa_1 = 1`. All coefficients are nonnegative, so
//! the same recurrence runs unchanged in log space for populations whose
//! tail probabilities underflow f64, and in exact rational arithmetic for
//! small populations.

use num::{BigRational, One, Zero};

use crate::analytic::{MomentSource, MomentSummary};
use crate::error::{Error, Result};
use crate::logsum::{lse2, lse_slice};
use crate::model::ContaminationModel;
use crate::simulator::{explicit_count, recurrence_count, DefectPattern};

/// Largest population for which brute-force pattern enumeration (2^n
/// evaluations) is allowed.
pub const MAX_ENUMERATION_N: usize = 20;

/// Polynomial with nonnegative coefficients in the generating-function
/// variable, stored densely from its lowest nonzero power.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbPolynomial {
    offset: usize,
    coeffs: Vec<f64>,
}

impl ProbPolynomial {
    pub fn zero() -> Self {
        Self {
            offset: 0,
            coeffs: Vec::new(),
        }
    }

    fn from_dense(mut dense: Vec<f64>) -> Self {
        let first = dense.iter().position(|&c| c != 0.0);
        match first {
            None => Self::zero(),
            Some(offset) => {
                let last = dense.iter().rposition(|&c| c != 0.0).expect("nonzero");
                dense.truncate(last + 1);
                dense.drain(..offset);
                Self {
                    offset,
                    coeffs: dense,
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest power carrying a nonzero coefficient (0 for the zero polynomial).
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Coefficients from `offset()` upward.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.offset + self.coeffs.len() - 1)
        }
    }

    pub fn coefficient(&self, power: usize) -> f64 {
        if power < self.offset {
            return 0.0;
        }
        self.coeffs.get(power - self.offset).copied().unwrap_or(0.0)
    }
}

/// The `kappa_n` polynomial of the generating-function split.
///
/// `kappa_0` is the zero polynomial, `kappa_1` the constant 1, and
/// `deg(kappa_n) = 2(n-1)` from there on.
pub fn kappa_poly(m: &ContaminationModel, n: usize) -> ProbPolynomial {
    if n == 0 {
        return ProbPolynomial::zero();
    }
    let (_, cur) = kappa_dense_pair(m, n);
    ProbPolynomial::from_dense(cur)
}

/// Dense coefficient vectors of `(kappa_{upto-1}, kappa_{upto})`, indexed
/// by power from 0. Requires `upto >= 1`.
fn kappa_dense_pair(m: &ContaminationModel, upto: usize) -> (Vec<f64>, Vec<f64>) {
    let p = m.p();
    let q = m.q();
    let mut prev: Vec<f64> = Vec::new();
    let mut cur: Vec<f64> = vec![1.0];
    for step in 1..upto {
        let mut next = vec![0.0; 2 * step + 1];
        for (k, &c) in cur.iter().enumerate() {
            if c != 0.0 {
                next[k + 2] += p * c;
            }
        }
        for (k, &c) in prev.iter().enumerate() {
            if c != 0.0 {
                next[k + 1] += q * q * c;
                next[k + 2] += p * q * c;
            }
        }
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// Exact distribution of the test count for `n` items.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfTable {
    n: usize,
    p: f64,
    support_min: u64,
    support_max: u64,
    probs: Vec<f64>,
}

impl PmfTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_max
    }

    /// Probabilities over `support_min()..=support_max()`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P(T_n = k)`; zero outside the support.
    pub fn prob(&self, k: u64) -> f64 {
        if k < self.support_min || k > self.support_max {
            return 0.0;
        }
        self.probs[(k - self.support_min) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.support_min + i as u64, p))
    }
}

/// Exact probability mass function of the test count.
///
/// The population must have at least two items. `n = 2` is the direct
/// four-pattern law and `n = 3` is enumerated from the closed-form count
/// over its eight patterns; larger populations run the polynomial
/// recurrence. A capacity error means some tail probability fell outside
/// the f64 range; [`exact_pmf_log`] still handles those inputs.
pub fn exact_pmf(m: &ContaminationModel, n: usize) -> Result<PmfTable> {
    let p = m.p();
    let q = m.q();
    match n {
        0 | 1 => Err(Error::TooSmall {
            what: "exact pmf population",
            got: n as u64,
            min: 2,
        }),
        2 => table_from_dense(m, 2, vec![0.0, q * q, p * q, p]),
        3 => {
            let mut dense = vec![0.0; 6];
            for bits in 0..8u64 {
                let pattern = DefectPattern::from_bits(3, bits).expect("n > 0");
                dense[explicit_count(&pattern) as usize] += pattern.probability(m);
            }
            table_from_dense(m, 3, dense)
        }
        _ => {
            let (k_sub, k_main) = kappa_dense_pair(m, n - 2);
            let g1 = [
                (2, q * q),
                (3, q * p * (1.0 + q)),
                (4, q * p * p),
                (5, p * p),
            ];
            let g2 = [
                (2, q * q * q * q),
                (3, 2.0 * q * q * q * p),
                (4, q * q * p * (2.0 - q)),
                (5, q * p * p),
            ];
            let mut dense = vec![0.0; 2 * n];
            for (shift, c) in g1 {
                for (k, &v) in k_main.iter().enumerate() {
                    if v != 0.0 {
                        dense[k + shift] += c * v;
                    }
                }
            }
            for (shift, c) in g2 {
                for (k, &v) in k_sub.iter().enumerate() {
                    if v != 0.0 {
                        dense[k + shift] += c * v;
                    }
                }
            }
            table_from_dense(m, n, dense)
        }
    }
}

/// Validates a dense probability vector against the known support window
/// `[ceil(n/2), 2n-1]` and wraps it up. Any zeroed or non-normalized entry
/// inside the window means f64 ran out of range.
fn table_from_dense(m: &ContaminationModel, n: usize, dense: Vec<f64>) -> Result<PmfTable> {
    let lo = n.div_ceil(2);
    let hi = 2 * n - 1;
    let mut sum = 0.0;
    for (k, &v) in dense.iter().enumerate() {
        let inside = (lo..=hi).contains(&k);
        if inside && !(v > 0.0 && v.is_finite()) {
            return Err(Error::Capacity { n });
        }
        if !inside && v != 0.0 {
            return Err(Error::Capacity { n });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Capacity { n });
    }
    Ok(PmfTable {
        n,
        p: m.p(),
        support_min: lo as u64,
        support_max: hi as u64,
        probs: dense[lo..=hi].to_vec(),
    })
}

/// Same distribution as [`PmfTable`] but holding log-probabilities, so the
/// deepest tails stay finite at any population size.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPmfTable {
    n: usize,
    p: f64,
    support_min: u64,
    support_max: u64,
    logp: Vec<f64>,
}

impl LogPmfTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_max
    }

    /// Log-probabilities over `support_min()..=support_max()`.
    pub fn log_probs(&self) -> &[f64] {
        &self.logp
    }

    /// `ln P(T_n = k)`; `-inf` outside the support.
    pub fn log_prob(&self, k: u64) -> f64 {
        if k < self.support_min || k > self.support_max {
            return f64::NEG_INFINITY;
        }
        self.logp[(k - self.support_min) as usize]
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.log_prob(k).exp()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.logp
            .iter()
            .enumerate()
            .map(|(i, &lp)| (self.support_min + i as u64, lp))
    }

    /// `ln P(T_n >= k0)` by log-sum-exp over the upper tail.
    pub fn tail_log_prob(&self, k0: u64) -> f64 {
        if k0 <= self.support_min {
            return self.log_total();
        }
        if k0 > self.support_max {
            return f64::NEG_INFINITY;
        }
        lse_slice(&self.logp[(k0 - self.support_min) as usize..])
    }

    /// Log of the total mass; zero up to accumulated rounding.
    pub fn log_total(&self) -> f64 {
        lse_slice(&self.logp)
    }
}

/// Log-domain twin of [`exact_pmf`].
///
/// Because every polynomial coefficient is nonnegative, the recurrence
/// carries over term by term with log-sum-exp in place of addition; no
/// cancellation ever occurs, so the only loss against exact arithmetic is
/// rounding. Cost is O(n^2); n = 2000 takes well under a minute.
pub fn exact_pmf_log(m: &ContaminationModel, n: usize) -> Result<LogPmfTable> {
    let lp = m.p().ln();
    let lq = m.q().ln();
    if n < 2 {
        return Err(Error::TooSmall {
            what: "exact pmf population",
            got: n as u64,
            min: 2,
        });
    }
    if n == 2 {
        return Ok(log_table_from_dense(
            m,
            2,
            vec![f64::NEG_INFINITY, 2.0 * lq, lp + lq, lp],
        ));
    }
    let (k_sub, k_main) = log_kappa_dense_pair(m, n - 2);
    let g1 = [
        (2, 2.0 * lq),
        (3, lq + lp + m.q().ln_1p()),
        (4, lq + 2.0 * lp),
        (5, 2.0 * lp),
    ];
    let g2 = [
        (2, 4.0 * lq),
        (3, std::f64::consts::LN_2 + 3.0 * lq + lp),
        (4, 2.0 * lq + lp + m.p().ln_1p()),
        (5, lq + 2.0 * lp),
    ];
    let mut dense = vec![f64::NEG_INFINITY; 2 * n];
    for (shift, c) in g1 {
        for (k, &v) in k_main.iter().enumerate() {
            if v != f64::NEG_INFINITY {
                dense[k + shift] = lse2(dense[k + shift], c + v);
            }
        }
    }
    for (shift, c) in g2 {
        for (k, &v) in k_sub.iter().enumerate() {
            if v != f64::NEG_INFINITY {
                dense[k + shift] = lse2(dense[k + shift], c + v);
            }
        }
    }
    Ok(log_table_from_dense(m, n, dense))
}

/// Log-space version of [`kappa_dense_pair`]. Requires `upto >= 1`.
fn log_kappa_dense_pair(m: &ContaminationModel, upto: usize) -> (Vec<f64>, Vec<f64>) {
    let lp = m.p().ln();
    let lq = m.q().ln();
    let neg = f64::NEG_INFINITY;
    let mut prev: Vec<f64> = Vec::new();
    let mut cur: Vec<f64> = vec![0.0];
    for step in 1..upto {
        let mut next = vec![neg; 2 * step + 1];
        for (k, &c) in cur.iter().enumerate() {
            if c != neg {
                next[k + 2] = lse2(next[k + 2], lp + c);
            }
        }
        for (k, &c) in prev.iter().enumerate() {
            if c != neg {
                next[k + 1] = lse2(next[k + 1], 2.0 * lq + c);
                next[k + 2] = lse2(next[k + 2], lp + lq + c);
            }
        }
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

fn log_table_from_dense(m: &ContaminationModel, n: usize, dense: Vec<f64>) -> LogPmfTable {
    let lo = n.div_ceil(2);
    let hi = 2 * n - 1;
    debug_assert!(dense[..lo].iter().all(|&v| v == f64::NEG_INFINITY));
    debug_assert!(dense[lo..=hi].iter().all(|&v| v.is_finite()));
    LogPmfTable {
        n,
        p: m.p(),
        support_min: lo as u64,
        support_max: hi as u64,
        logp: dense[lo..=hi].to_vec(),
    }
}

/// Mean and variance read off a PMF table.
pub fn moments_from_pmf(t: &PmfTable) -> MomentSummary {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (k, p) in t.iter() {
        mean += k as f64 * p;
        second += (k * k) as f64 * p;
    }
    MomentSummary {
        n: t.n(),
        mean,
        variance: (second - mean * mean).max(0.0),
        source: MomentSource::ExactPmf,
    }
}

/// Brute-force law of the test count: every one of the 2^n patterns,
/// weighted by its probability. Exponential in `n`; the independent oracle
/// the fast paths are tested against.
pub fn enumerate_pmf(m: &ContaminationModel, n: usize) -> Result<PmfTable> {
    if n < 2 {
        return Err(Error::TooSmall {
            what: "enumeration population",
            got: n as u64,
            min: 2,
        });
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            what: "enumeration population",
            got: n as u64,
            max: MAX_ENUMERATION_N as u64,
        });
    }
    let mut dense = vec![0.0; 2 * n];
    for bits in 0..1u64 << n {
        let pattern = DefectPattern::from_bits(n, bits).expect("n > 0");
        dense[recurrence_count(&pattern) as usize] += pattern.probability(m);
    }
    table_from_dense(m, n, dense)
}

/// Exact distribution of the test count in rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPmfTable {
    n: usize,
    p: BigRational,
    support_min: u64,
    probs: Vec<BigRational>,
}

impl RationalPmfTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> &BigRational {
        &self.p
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.probs.len() as u64 - 1
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn prob(&self, k: u64) -> BigRational {
        if k < self.support_min || k > self.support_max() {
            return BigRational::zero();
        }
        self.probs[(k - self.support_min) as usize].clone()
    }

    /// Exact check that the mass sums to one.
    pub fn is_normalized(&self) -> bool {
        self.probs.iter().sum::<BigRational>() == BigRational::one()
    }
}

fn rational_p(num: u32, den: u32) -> Result<BigRational> {
    if num == 0 || num >= den {
        return Err(Error::InvalidRational { num, den });
    }
    Ok(BigRational::new(num.into(), den.into()))
}

/// Rational-arithmetic twin of [`exact_pmf`] for `p = num/den`: identical
/// structure, zero rounding. Intended for small `n` where it can be pitted
/// against [`enumerate_pmf_rational`] for exact equality.
pub fn exact_pmf_rational(num: u32, den: u32, n: usize) -> Result<RationalPmfTable> {
    let p = rational_p(num, den)?;
    let q = BigRational::one() - &p;
    match n {
        0 | 1 => Err(Error::TooSmall {
            what: "exact pmf population",
            got: n as u64,
            min: 2,
        }),
        2 => rational_table(
            num,
            den,
            n,
            vec![BigRational::zero(), &q * &q, &p * &q, p.clone()],
        ),
        3 => {
            let mut dense = vec![BigRational::zero(); 6];
            for bits in 0..8u64 {
                let pattern = DefectPattern::from_bits(3, bits).expect("n > 0");
                dense[explicit_count(&pattern) as usize] += rational_weight(&pattern, &p, &q);
            }
            rational_table(num, den, n, dense)
        }
        _ => {
            let two = BigRational::from_integer(2.into());
            let mut prev: Vec<BigRational> = Vec::new();
            let mut cur: Vec<BigRational> = vec![BigRational::one()];
            for step in 1..n - 2 {
                let mut next = vec![BigRational::zero(); 2 * step + 1];
                for (k, c) in cur.iter().enumerate() {
                    next[k + 2] += &p * c;
                }
                for (k, c) in prev.iter().enumerate() {
                    next[k + 1] += &q * &q * c;
                    next[k + 2] += &p * &q * c;
                }
                prev = cur;
                cur = next;
            }
            let g1 = [
                (2, &q * &q),
                (3, &q * &p * (BigRational::one() + &q)),
                (4, &q * &p * &p),
                (5, &p * &p),
            ];
            let g2 = [
                (2, &q * &q * &q * &q),
                (3, &two * &q * &q * &q * &p),
                (4, &q * &q * &p * (&two - &q)),
                (5, &q * &p * &p),
            ];
            let mut dense = vec![BigRational::zero(); 2 * n];
            for (shift, c) in g1 {
                for (k, v) in cur.iter().enumerate() {
                    dense[k + shift] += &c * v;
                }
            }
            for (shift, c) in g2 {
                for (k, v) in prev.iter().enumerate() {
                    dense[k + shift] += &c * v;
                }
            }
            rational_table(num, den, n, dense)
        }
    }
}

/// Brute-force rational law over all 2^n patterns, by the recurrence
/// count; the exact-equality oracle for [`exact_pmf_rational`].
pub fn enumerate_pmf_rational(num: u32, den: u32, n: usize) -> Result<RationalPmfTable> {
    let p = rational_p(num, den)?;
    let q = BigRational::one() - &p;
    if n < 2 {
        return Err(Error::TooSmall {
            what: "enumeration population",
            got: n as u64,
            min: 2,
        });
    }
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            what: "enumeration population",
            got: n as u64,
            max: MAX_ENUMERATION_N as u64,
        });
    }
    let mut dense = vec![BigRational::zero(); 2 * n];
    for bits in 0..1u64 << n {
        let pattern = DefectPattern::from_bits(n, bits).expect("n > 0");
        dense[recurrence_count(&pattern) as usize] += rational_weight(&pattern, &p, &q);
    }
    rational_table(num, den, n, dense)
}

fn rational_weight(pattern: &DefectPattern, p: &BigRational, q: &BigRational) -> BigRational {
    pattern
        .statuses()
        .iter()
        .map(|&d| if d { p.clone() } else { q.clone() })
        .product()
}

fn rational_table(
    num: u32,
    den: u32,
    n: usize,
    dense: Vec<BigRational>,
) -> Result<RationalPmfTable> {
    let lo = n.div_ceil(2);
    let hi = 2 * n - 1;
    debug_assert!(dense
        .iter()
        .enumerate()
        .all(|(k, v)| (lo..=hi).contains(&k) != v.is_zero()));
    Ok(RationalPmfTable {
        n,
        p: rational_p(num, den)?,
        support_min: lo as u64,
        probs: dense[lo..=hi].to_vec(),
    })
}
