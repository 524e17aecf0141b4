//! Faithful simulation of the pairwise testing procedure, two closed-form
//! pathwise evaluators of its test count, and a seedable Monte Carlo harness.
//!
//! The procedure classifies a pool of items by always testing a pair of
//! still-unclassified items together. A clean pair test clears both items.
//! A contaminated pair triggers one follow-up test on a single item of the
//! pair: if that item is clean its partner must be defective, otherwise the
//! partner's status is still open and it rejoins the pool. A lone leftover
//! item is tested by itself.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ContaminationModel;

/// A realization of item statuses; `true` marks a defective item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectPattern {
    statuses: Vec<bool>,
}

impl DefectPattern {
    pub fn new(statuses: Vec<bool>) -> Result<Self> {
        if statuses.is_empty() {
            return Err(Error::EmptyPattern);
        }
        Ok(Self { statuses })
    }

    /// Pattern of length `n` read off the low bits of `bits`: item `i` is
    /// defective iff bit `i` is set. Handy for exhaustive sweeps.
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPattern);
        }
        Ok(Self {
            statuses: (0..n).map(|i| bits >> i & 1 == 1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        // a constructed pattern always holds at least one item
        false
    }

    pub fn statuses(&self) -> &[bool] {
        &self.statuses
    }

    pub fn defectives(&self) -> usize {
        self.statuses.iter().filter(|&&d| d).count()
    }

    /// Probability of observing exactly this pattern under the model.
    pub fn probability(&self, m: &ContaminationModel) -> f64 {
        self.statuses
            .iter()
            .map(|&d| if d { m.p() } else { m.q() })
            .product()
    }
}

/// Items that went into one test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestedSet {
    Single(usize),
    Pair(usize, usize),
}

/// One conducted test and its outcome (`true` = contaminated).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestEvent {
    pub tested: TestedSet,
    pub positive: bool,
}

/// Full record of one run of the procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtaTrace {
    pub events: Vec<TestEvent>,
    /// Number of conducted tests; always `events.len()`.
    pub total: u64,
    /// Status of every item as established by the procedure.
    pub deduced: Vec<bool>,
}

/// Runs the pairwise procedure on a known pattern and records every test.
///
/// Pairs are always formed from the two highest-indexed unclassified items,
/// and inside a contaminated pair the higher-indexed item is the one
/// retested, so the trace total agrees with [`recurrence_count`] pattern by
/// pattern and not merely in distribution.
pub fn run_pta(pattern: &DefectPattern) -> PtaTrace {
    let s = pattern.statuses();
    let mut unclassified: Vec<usize> = (0..s.len()).collect();
    let mut deduced = vec![false; s.len()];
    let mut events = Vec::new();
    while let Some(&top) = unclassified.last() {
        if unclassified.len() == 1 {
            unclassified.pop();
            events.push(TestEvent {
                tested: TestedSet::Single(top),
                positive: s[top],
            });
            deduced[top] = s[top];
            continue;
        }
        let i = unclassified.pop().expect("len >= 2");
        let j = unclassified.pop().expect("len >= 2");
        let pair_positive = s[i] || s[j];
        events.push(TestEvent {
            tested: TestedSet::Pair(i, j),
            positive: pair_positive,
        });
        if !pair_positive {
            deduced[i] = false;
            deduced[j] = false;
            continue;
        }
        events.push(TestEvent {
            tested: TestedSet::Single(i),
            positive: s[i],
        });
        if s[i] {
            deduced[i] = true;
            unclassified.push(j);
        } else {
            deduced[i] = false;
            deduced[j] = true;
        }
    }
    let total = events.len() as u64;
    PtaTrace {
        events,
        total,
        deduced,
    }
}

/// Test count via the second-order recurrence over item statuses.
///
/// Scanning items upward with `T_0 = 0`, `T_1 = 1`: a defective top item
/// costs two tests and leaves its partner in the pool (`2 + T_{k-1}`),
/// while a clean top item resolves the whole pair for one test, plus one
/// more if the partner was defective (`1 + X_{k-1} + T_{k-2}`).
pub fn recurrence_count(pattern: &DefectPattern) -> u64 {
    let s = pattern.statuses();
    let mut t_prev2 = 0u64;
    let mut t_prev = 1u64;
    for k in 2..=s.len() {
        let t = if s[k - 1] {
            2 + t_prev
        } else {
            1 + u64::from(s[k - 2]) + t_prev2
        };
        t_prev2 = t_prev;
        t_prev = t;
    }
    t_prev
}

/// The four 2x2 zero-one matrices closed under multiplication that encode
/// how per-item branches compose in the closed-form count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemigroupElement {
    M0,
    M1,
    M2,
    M3,
}

use SemigroupElement::{M0, M1, M2, M3};

impl SemigroupElement {
    pub const ALL: [SemigroupElement; 4] = [M0, M1, M2, M3];

    /// Concrete matrix behind the tag.
    pub fn matrix(self) -> [[u8; 2]; 2] {
        match self {
            M0 => [[1, 0], [1, 0]],
            M1 => [[0, 1], [1, 0]],
            M2 => [[1, 0], [0, 1]],
            M3 => [[0, 1], [0, 1]],
        }
    }

    fn for_item(defective: bool) -> Self {
        if defective {
            M0
        } else {
            M1
        }
    }
}

/// Product in the four-element semigroup. Agrees with literal matrix
/// multiplication of [`matrix`](SemigroupElement::matrix) on all 16
/// pairs; `M2` is the identity.
impl std::ops::Mul for SemigroupElement {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        match (self, rhs) {
            (M2, r) => r,
            (l, M2) => l,
            (M0, M0) | (M1, M0) | (M3, M0) | (M3, M1) => M0,
            (M1, M1) => M2,
            (M0, M1) | (M0, M3) | (M1, M3) | (M3, M3) => M3,
        }
    }
}

/// Test count via the closed formula: a sum of per-item contributions
/// gated by semigroup products over the higher-indexed items.
///
/// Equals [`recurrence_count`] on every pattern; the two are exercised
/// against each other exhaustively in the test suite.
pub fn explicit_count(pattern: &DefectPattern) -> u64 {
    let s = pattern.statuses();
    let n = s.len();
    let x = |k: usize| u64::from(s[k - 1]);
    match n {
        1 => 1,
        2 => 3 * x(2) + (1 - x(2)) * (1 + x(1)),
        3 => {
            let t2 = 3 * x(2) + (1 - x(2)) * (1 + x(1));
            2 + (1 - x(3)) * x(2) + x(3) * t2
        }
        _ => {
            let b = |k: usize| SemigroupElement::for_item(s[k - 1]);
            // suffix[j] is the product of b(n), b(n-1), ..., b(j+1)
            let mut suffix = vec![M2; n];
            suffix[n - 1] = b(n);
            for j in (2..n - 1).rev() {
                suffix[j] = suffix[j + 1] * b(j + 1);
            }
            let gate = |j: usize| u64::from(matches!(suffix[j], M1 | M3));
            let mut total = 1 + x(n) * ((1 - x(n - 1)) * x(n - 2) + 2) + x(n - 1);
            for j in 3..n {
                total += ((1 - x(j - 1)) * x(j - 2) + x(j - 1) + 1)
                    * (x(j) + (1 - x(j)) * gate(j));
            }
            total + x(2) + (1 - x(2)) * gate(2)
        }
    }
}

fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Deterministic stream of i.i.d. Bernoulli(p) patterns.
///
/// Replicate `r` always draws from RNG stream `r` of the seed, so any
/// prefix of the stream is stable no matter how many replicates are taken
/// or how the work is split across threads.
pub fn sample_patterns(
    m: &ContaminationModel,
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<impl Iterator<Item = DefectPattern>> {
    if n == 0 {
        return Err(Error::EmptyPattern);
    }
    let bern = Bernoulli::new(m.p()).expect("model probability is valid");
    Ok((0..reps).map(move |rep| {
        let mut rng = replicate_rng(seed, rep);
        DefectPattern {
            statuses: (0..n).map(|_| bern.sample(&mut rng)).collect(),
        }
    }))
}

/// Draws plus summary statistics from repeated runs of the procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub n: usize,
    pub reps: u64,
    pub seed: u64,
    pub mean: f64,
    /// Unbiased sample variance (divisor `reps - 1`).
    pub variance: f64,
    /// Raw test counts, one per replicate, in replicate order.
    pub samples: Vec<u64>,
}

/// Samples `reps` independent test counts and summarizes them.
///
/// Each replicate consumes its own RNG stream (see [`sample_patterns`]),
/// and the summary statistics are accumulated in integer arithmetic, so
/// the result is bit-identical across runs and across thread counts.
pub fn monte_carlo(
    m: &ContaminationModel,
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if n == 0 {
        return Err(Error::EmptyPattern);
    }
    if reps < 2 {
        return Err(Error::TooSmall {
            what: "monte_carlo replicate count",
            got: reps,
            min: 2,
        });
    }
    let bern = Bernoulli::new(m.p()).expect("model probability is valid");
    let samples: Vec<u64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(seed, rep);
            streamed_count(&bern, n, &mut rng)
        })
        .collect();
    let sum: u128 = samples.iter().map(|&t| u128::from(t)).sum();
    let sumsq: u128 = samples.iter().map(|&t| u128::from(t) * u128::from(t)).sum();
    let r = u128::from(reps);
    let mean = sum as f64 / reps as f64;
    let variance = (r * sumsq - sum * sum) as f64 / (r * (r - 1)) as f64;
    Ok(MonteCarloSummary {
        n,
        reps,
        seed,
        mean,
        variance,
        samples,
    })
}

/// One replicate, streaming the recurrence so memory stays O(1) in `n`.
/// Draws statuses in the same order as [`sample_patterns`].
fn streamed_count(bern: &Bernoulli, n: usize, rng: &mut ChaCha8Rng) -> u64 {
    let mut prev = bern.sample(rng);
    let mut t_prev2 = 0u64;
    let mut t_prev = 1u64;
    for _ in 2..=n {
        let x = bern.sample(rng);
        let t = if x {
            2 + t_prev
        } else {
            1 + u64::from(prev) + t_prev2
        };
        t_prev2 = t_prev;
        t_prev = t;
        prev = x;
    }
    t_prev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(bits: &[u8]) -> DefectPattern {
        DefectPattern::new(bits.iter().map(|&b| b == 1).collect()).unwrap()
    }

    #[test]
    fn rejects_empty_patterns() {
        assert!(DefectPattern::new(vec![]).is_err());
        assert!(DefectPattern::from_bits(0, 0).is_err());
    }

    #[test]
    fn trace_examples() {
        assert_eq!(run_pta(&pat(&[0, 0, 0, 0])).total, 2);
        assert_eq!(run_pta(&pat(&[1, 1, 1])).total, 5);
        assert_eq!(run_pta(&pat(&[1, 0])).total, 2);
    }

    #[test]
    fn trace_structure_is_sound() {
        for n in 1..=9 {
            for bits in 0..1u64 << n {
                let pattern = DefectPattern::from_bits(n, bits).unwrap();
                let trace = run_pta(&pattern);
                assert_eq!(trace.total, trace.events.len() as u64);
                assert_eq!(trace.deduced, pattern.statuses(), "n={n} bits={bits:b}");
                for ev in &trace.events {
                    let truth = match ev.tested {
                        TestedSet::Single(i) => pattern.statuses()[i],
                        TestedSet::Pair(i, j) => {
                            pattern.statuses()[i] || pattern.statuses()[j]
                        }
                    };
                    assert_eq!(ev.positive, truth);
                }
            }
        }
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(recurrence_count(&pat(&[1, 0, 0, 1])), 4);
        assert_eq!(recurrence_count(&pat(&[0])), 1);
        assert_eq!(recurrence_count(&pat(&[1])), 1);
        assert_eq!(recurrence_count(&pat(&[0, 0])), 1);
    }

    #[test]
    fn explicit_examples() {
        assert_eq!(explicit_count(&pat(&[1, 1])), 3);
        assert_eq!(explicit_count(&pat(&[0, 1, 0])), 3);
    }

    #[test]
    fn three_evaluators_agree_exhaustively() {
        for n in 1..=10 {
            for bits in 0..1u64 << n {
                let pattern = DefectPattern::from_bits(n, bits).unwrap();
                let r = recurrence_count(&pattern);
                assert_eq!(run_pta(&pattern).total, r, "trace, n={n} bits={bits:b}");
                assert_eq!(explicit_count(&pattern), r, "explicit, n={n} bits={bits:b}");
            }
        }
    }

    #[test]
    fn count_stays_within_support_bounds() {
        for n in 2..=10u64 {
            let mut seen_min = u64::MAX;
            let mut seen_max = 0;
            for bits in 0..1u64 << n {
                let t = recurrence_count(&DefectPattern::from_bits(n as usize, bits).unwrap());
                seen_min = seen_min.min(t);
                seen_max = seen_max.max(t);
            }
            assert_eq!(seen_min, n.div_ceil(2), "all-good floor at n={n}");
            assert_eq!(seen_max, 2 * n - 1, "all-defective ceiling at n={n}");
        }
    }

    #[test]
    fn semigroup_table_matches_matrix_multiplication() {
        let mat_mul = |a: [[u8; 2]; 2], b: [[u8; 2]; 2]| {
            let mut out = [[0u8; 2]; 2];
            for (i, row) in out.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            out
        };
        for l in SemigroupElement::ALL {
            for r in SemigroupElement::ALL {
                assert_eq!(
                    (l * r).matrix(),
                    mat_mul(l.matrix(), r.matrix()),
                    "{l:?} * {r:?}"
                );
            }
            assert_eq!(M2 * l, l);
            assert_eq!(l * M2, l);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = ContaminationModel::new(0.3).unwrap();
        let a: Vec<_> = sample_patterns(&m, 6, 5, 42).unwrap().collect();
        let b: Vec<_> = sample_patterns(&m, 6, 5, 42).unwrap().collect();
        let c: Vec<_> = sample_patterns(&m, 6, 5, 43).unwrap().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_defect_fraction_concentrates() {
        let m = ContaminationModel::new(0.3).unwrap();
        let pattern = sample_patterns(&m, 10_000, 1, 7).unwrap().next().unwrap();
        let frac = pattern.defectives() as f64 / 10_000.0;
        let five_sigma = 5.0 * (0.3 * 0.7 / 10_000.0_f64).sqrt();
        assert!((frac - 0.3).abs() < five_sigma, "fraction {frac}");
    }

    #[test]
    fn monte_carlo_matches_pattern_stream() {
        let m = ContaminationModel::new(0.35).unwrap();
        let mc = monte_carlo(&m, 12, 64, 9).unwrap();
        let from_patterns: Vec<u64> = sample_patterns(&m, 12, 64, 9)
            .unwrap()
            .map(|pattern| recurrence_count(&pattern))
            .collect();
        assert_eq!(mc.samples, from_patterns);
    }

    #[test]
    fn monte_carlo_near_certain_defects_is_degenerate() {
        let m = ContaminationModel::new(1.0 - 1e-12).unwrap();
        let mc = monte_carlo(&m, 7, 500, 3).unwrap();
        assert_eq!(mc.mean, 13.0);
        assert_eq!(mc.variance, 0.0);
    }

    #[test]
    fn monte_carlo_small_n_matches_enumeration() {
        let m = ContaminationModel::new(0.3).unwrap();
        let mc = monte_carlo(&m, 2, 20_000, 11).unwrap();
        let mut freq = [0.0; 4];
        for &t in &mc.samples {
            freq[t as usize] += 1.0 / mc.reps as f64;
        }
        for (k, expect) in [(1, 0.49), (2, 0.21), (3, 0.30)] {
            assert!((freq[k] - expect).abs() < 0.02, "k={k} freq={}", freq[k]);
        }
    }
}
