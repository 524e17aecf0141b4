//! Log-sum-exp helpers shared by the log-domain code paths.

/// `ln(e^a + e^b)` without overflow; tolerates `-inf` operands.
pub(crate) fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum e^v)` over a slice; returns `-inf` for an empty or all `-inf` slice.
pub(crate) fn lse_slice(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    let sum: f64 = v.iter().map(|&t| (t - mx).exp()).sum();
    mx + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_evaluation_in_range() {
        let a = 0.3_f64.ln();
        let b = 0.4_f64.ln();
        assert!((lse2(a, b) - 0.7_f64.ln()).abs() < 1e-15);
        assert!((lse_slice(&[a, b, 0.3_f64.ln()]) - 1.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn survives_extreme_magnitudes() {
        assert!((lse2(-1000.0, -1000.0) - (-1000.0 + 2.0_f64.ln())).abs() < 1e-12);
        assert_eq!(lse2(f64::NEG_INFINITY, -3.0), -3.0);
        assert_eq!(lse_slice(&[]), f64::NEG_INFINITY);
        assert_eq!(lse_slice(&[f64::NEG_INFINITY; 4]), f64::NEG_INFINITY);
    }
}
