//! Cross-validation matrix behind `pta verify`. Every check compares two
//! independently implemented routes to the same quantity and reports the
//! worst discrepancy against a pinned tolerance; the command exits
//! nonzero if any row fails.

use pta::analytic::{alpha, closed_form_moments, mgf, mgf_blockmatrix};
use pta::asymptotics::{constants, log_alpha0, log_alpha0_prime, rate};
use pta::exactdist::{
    enumerate_pmf, enumerate_pmf_rational, exact_pmf, exact_pmf_log, exact_pmf_rational,
    moments_from_pmf,
};
use pta::simulator::{explicit_count, recurrence_count, run_pta, DefectPattern, SemigroupElement};
use pta::ContaminationModel;

pub struct Check {
    pub name: &'static str,
    pub n: Option<u64>,
    pub p: Option<f64>,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &'static str, n: Option<u64>, p: Option<f64>, max_error: f64, tolerance: f64) -> Check {
    Check {
        name,
        n,
        p,
        max_error,
        tolerance,
        pass: max_error <= tolerance,
    }
}

const LAMBDA_GRID: usize = 21;

fn grid(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..LAMBDA_GRID).map(move |i| lo + (hi - lo) * i as f64 / (LAMBDA_GRID - 1) as f64)
}

/// Runs the whole matrix for each requested `p`; pattern-exhaustive
/// checks sweep `n` up to `n_max` (capped at 20 so enumeration stays
/// tractable).
pub fn run_verify(n_max: usize, ps: &[f64]) -> Vec<Check> {
    let mut checks = Vec::new();

    checks.push(semigroup_closure());
    checks.push(pathwise_agreement(n_max));
    checks.push(support_bounds(n_max));

    for &p in ps {
        let m = ContaminationModel::new(p).expect("validated by caller");
        checks.push(pmf_vs_enumeration(&m, n_max));
        checks.push(pmf_rational_exact(p, n_max));
        checks.push(log_pmf_consistency(&m, n_max));
        checks.push(mgf_vs_pmf_sum(&m, n_max));
        checks.push(mgf_vs_matrix_iteration(&m, n_max));
        checks.push(moments_vs_pmf(&m));
        checks.push(characteristic_roots(&m));
        checks.push(cumulant_slope(&m));
        checks.push(cumulant_curvature(&m));
        checks.push(lln_deviation(&m));
        checks.push(rate_at_mean(&m));
        checks.push(rate_solver_residual(&m));
    }

    checks.push(small_n_means());
    checks
}

fn semigroup_closure() -> Check {
    let mut mismatches = 0u64;
    for a in SemigroupElement::ALL {
        for b in SemigroupElement::ALL {
            let left = a.matrix();
            let right = b.matrix();
            let mut product = [[0u8; 2]; 2];
            for (i, row) in product.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry = left[i][0] * right[0][j] + left[i][1] * right[1][j];
                }
            }
            if product != (a * b).matrix() {
                mismatches += 1;
            }
        }
    }
    check("semigroup_closure", None, None, mismatches as f64, 0.0)
}

fn pathwise_agreement(n_max: usize) -> Check {
    let mut mismatches = 0u64;
    for n in 2..=n_max {
        for bits in 0..(1u64 << n) {
            let pattern = DefectPattern::from_bits(n, bits).unwrap();
            let trace = run_pta(&pattern);
            let by_recurrence = recurrence_count(&pattern);
            if trace.total != by_recurrence
                || explicit_count(&pattern) != by_recurrence
                || trace.deduced != *pattern.statuses()
            {
                mismatches += 1;
            }
        }
    }
    check("pathwise_agreement", Some(n_max as u64), None, mismatches as f64, 0.0)
}

fn support_bounds(n_max: usize) -> Check {
    let mut mismatches = 0u64;
    for n in 2..=n_max {
        let clean = DefectPattern::new(vec![false; n]).unwrap();
        let dirty = DefectPattern::new(vec![true; n]).unwrap();
        if recurrence_count(&clean) != n.div_ceil(2) as u64
            || recurrence_count(&dirty) != 2 * n as u64 - 1
        {
            mismatches += 1;
        }
    }
    check("support_bounds", Some(n_max as u64), None, mismatches as f64, 0.0)
}

fn pmf_vs_enumeration(m: &ContaminationModel, n_max: usize) -> Check {
    let cap = n_max.min(16);
    let mut worst = 0.0f64;
    for n in 2..=cap {
        let fast = exact_pmf(m, n).unwrap();
        let brute = enumerate_pmf(m, n).unwrap();
        for (k, v) in fast.iter() {
            worst = worst.max((v - brute.prob(k)).abs());
        }
    }
    check("pmf_vs_enumeration", Some(cap as u64), Some(m.p()), worst, 1e-12)
}

/// The float `p` is rounded to the nearest multiple of 1e-6 and the whole
/// pipeline is re-run in exact rational arithmetic at that probability.
fn pmf_rational_exact(p: f64, n_max: usize) -> Check {
    let cap = n_max.min(12);
    let num = (p * 1e6).round() as u32;
    let mut mismatches = 0u64;
    for n in 2..=cap {
        let fast = exact_pmf_rational(num, 1_000_000, n).unwrap();
        let brute = enumerate_pmf_rational(num, 1_000_000, n).unwrap();
        if !fast.is_normalized() || fast.probs() != brute.probs() {
            mismatches += 1;
        }
    }
    check("pmf_rational_exact", Some(cap as u64), Some(p), mismatches as f64, 0.0)
}

fn log_pmf_consistency(m: &ContaminationModel, n_max: usize) -> Check {
    let mut worst = 0.0f64;
    let mut top = 2;
    for n in (2..=n_max).chain([50]) {
        top = top.max(n);
        let log = exact_pmf_log(m, n).unwrap();
        worst = worst.max(log.log_total().abs());
        // the linear table can underflow at extreme p; the log table is
        // the designed fallback there, and normalization above is the
        // only check that still applies
        if let Ok(lin) = exact_pmf(m, n) {
            for (k, v) in lin.iter() {
                if v > 1e-300 {
                    worst = worst.max((log.prob(k) - v).abs() / v);
                }
            }
        }
    }
    check("log_pmf_consistency", Some(top as u64), Some(m.p()), worst, 1e-10)
}

fn mgf_vs_pmf_sum(m: &ContaminationModel, n_max: usize) -> Check {
    let cap = n_max.min(50);
    let mut worst = 0.0f64;
    for n in (2..=cap).chain([25, 50]) {
        let table = exact_pmf(m, n).unwrap();
        for lambda in grid(-1.0, 1.0) {
            let summed: f64 = table.iter().map(|(k, v)| v * (lambda * k as f64).exp()).sum();
            let closed = mgf(m, n, lambda).unwrap();
            worst = worst.max((closed - summed).abs() / summed);
        }
    }
    check("mgf_vs_pmf_sum", Some(50), Some(m.p()), worst, 1e-10)
}

fn mgf_vs_matrix_iteration(m: &ContaminationModel, n_max: usize) -> Check {
    let cap = n_max.min(30);
    let mut worst = 0.0f64;
    for n in (2..=cap).chain([30]) {
        for lambda in grid(-0.5, 0.5) {
            let closed = mgf(m, n, lambda).unwrap();
            let blocked = mgf_blockmatrix(m, n, lambda).unwrap();
            worst = worst.max((closed - blocked).abs() / closed);
        }
    }
    check("mgf_vs_matrix_iteration", Some(30), Some(m.p()), worst, 1e-10)
}

fn moments_vs_pmf(m: &ContaminationModel) -> Check {
    let mut worst = 0.0f64;
    for n in 3..=50 {
        let closed = closed_form_moments(m, n).unwrap();
        let tabulated = moments_from_pmf(&exact_pmf(m, n).unwrap());
        worst = worst.max((closed.mean - tabulated.mean).abs() / tabulated.mean);
        worst = worst.max((closed.variance - tabulated.variance).abs() / tabulated.variance);
    }
    check("moments_vs_pmf", Some(50), Some(m.p()), worst, 1e-9)
}

fn small_n_means() -> Check {
    let m = ContaminationModel::new(0.3).unwrap();
    let two = moments_from_pmf(&enumerate_pmf(&m, 2).unwrap()).mean;
    let three = moments_from_pmf(&enumerate_pmf(&m, 3).unwrap()).mean;
    let worst = (two - 1.81).abs().max((three - 2.753).abs());
    check("small_n_means", Some(3), Some(0.3), worst, 1e-12)
}

fn characteristic_roots(m: &ContaminationModel) -> Check {
    let p = m.p();
    let q = m.q();
    let mut worst = 0.0f64;
    for lambda in grid(-2.0, 2.0) {
        let pair = alpha(m, lambda).unwrap();
        let e1 = lambda.exp();
        let b = p * (2.0 * lambda).exp();
        let c = q * e1 * (q + p * e1);
        let scale = pair.alpha0 * pair.alpha0 + c + (b * b + 4.0 * c) / 4.0;
        for root in [pair.alpha0, pair.alpha1] {
            worst = worst.max((root * root - b * root - c).abs() / scale);
        }
    }
    check("characteristic_roots", None, Some(p), worst, 1e-12)
}

fn cumulant_slope(m: &ContaminationModel) -> Check {
    let h = 1e-4;
    let fd = (log_alpha0(m, h) - log_alpha0(m, -h)) / (2.0 * h);
    let error = (fd - constants(m).mu).abs();
    check("cumulant_slope", None, Some(m.p()), error, 1e-5)
}

fn cumulant_curvature(m: &ContaminationModel) -> Check {
    let h = 1e-4;
    let fd = (log_alpha0(m, h) - 2.0 * log_alpha0(m, 0.0) + log_alpha0(m, -h)) / (h * h);
    let error = (fd - constants(m).sigma2).abs();
    check("cumulant_curvature", None, Some(m.p()), error, 1e-3)
}

fn lln_deviation(m: &ContaminationModel) -> Check {
    let mu = constants(m).mu;
    let mut worst = 0.0f64;
    for n in 10..=2000usize {
        let mean = closed_form_moments(m, n).unwrap().mean;
        worst = worst.max((mean / n as f64 - mu).abs() * n as f64);
    }
    check("lln_deviation", Some(2000), Some(m.p()), worst, 2.0)
}

fn rate_at_mean(m: &ContaminationModel) -> Check {
    let mu = constants(m).mu;
    let point = rate(m, mu);
    let worst = point.rate.abs().max(point.lambda_star.abs());
    check("rate_at_mean", None, Some(m.p()), worst, 1e-6)
}

fn rate_solver_residual(m: &ContaminationModel) -> Check {
    let mut worst = 0.0f64;
    for x in [0.6, 0.8, 1.0, 1.2, 1.5, 1.8] {
        let point = rate(m, x);
        if !point.converged {
            worst = f64::INFINITY;
        }
        worst = worst.max((log_alpha0_prime(m, point.lambda_star) - x).abs());
    }
    check("rate_solver_residual", None, Some(m.p()), worst, 1e-9)
}
