//! Contamination model and the parameter window where pairwise testing is
//! the best nested strategy.

use crate::error::{Error, Result};

/// An i.i.d. population: each item is defective with probability `p`,
/// independently of the others.
///
/// The complement `q = 1 - p` is stored at construction so that all
/// downstream formulas use one consistent value instead of recomputing
/// `1.0 - p` in many places.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationModel {
    p: f64,
    q: f64,
}

impl ContaminationModel {
    /// Validates `0 < p < 1` (finite) and fixes `q = 1 - p`.
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidProbability(p));
        }
        Ok(Self { p, q: 1.0 - p })
    }

    /// Probability that a single item is defective.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Probability that a single item is good.
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Smallest defect probability for which the pairwise algorithm is the
/// optimal nested strategy: `(2 - sqrt 2) / 2`, about 0.2929.
///
/// It is the root of `2 p^2 - 4 p + 1` in (0, 1).
pub fn pta_window_lower() -> f64 {
    (2.0 - 2.0_f64.sqrt()) / 2.0
}

/// Largest defect probability for which any pooling helps: `(3 - sqrt 5) / 2`,
/// about 0.3820. Above it, testing items one by one is optimal.
///
/// It is the root of `p^2 - 3 p + 1` in (0, 1).
pub fn pta_window_upper() -> f64 {
    (3.0 - 5.0_f64.sqrt()) / 2.0
}

/// Which testing strategy is optimal at a given defect probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeKind {
    /// Below the window: pooling helps, but larger groups beat pairs.
    BelowPtaWindow,
    /// Inside the closed window: the pairwise algorithm is the optimal
    /// nested strategy.
    PtaOptimalNested,
    /// Above the window: no pooling scheme beats individual testing.
    IndividualTestingOptimal,
}

impl RegimeKind {
    /// Stable machine-readable name, used by the command-line output.
    pub fn name(self) -> &'static str {
        match self {
            RegimeKind::BelowPtaWindow => "below_pta_window",
            RegimeKind::PtaOptimalNested => "pta_optimal_nested",
            RegimeKind::IndividualTestingOptimal => "individual_testing_optimal",
        }
    }
}

/// Classification of a model together with the window endpoints it was
/// compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub lower: f64,
    pub upper: f64,
}

/// Places `p` relative to the optimality window. Both endpoints count as
/// inside: the window is the closed interval `[lower, upper]`.
pub fn classify_regime(model: &ContaminationModel) -> Regime {
    let lower = pta_window_lower();
    let upper = pta_window_upper();
    let kind = if model.p() < lower {
        RegimeKind::BelowPtaWindow
    } else if model.p() <= upper {
        RegimeKind::PtaOptimalNested
    } else {
        RegimeKind::IndividualTestingOptimal
    };
    Regime { kind, lower, upper }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_probabilities() {
        for bad in [0.0, 1.0, -0.2, 1.7, f64::NAN, f64::INFINITY] {
            assert!(ContaminationModel::new(bad).is_err(), "accepted p = {bad}");
        }
    }

    #[test]
    fn accepts_interior_probabilities() {
        let m = ContaminationModel::new(0.3).unwrap();
        assert_eq!(m.p(), 0.3);
        assert_eq!(m.q(), 0.7);
    }

    #[test]
    fn window_endpoints_satisfy_their_polynomials() {
        let l = pta_window_lower();
        let u = pta_window_upper();
        assert!((2.0 * l * l - 4.0 * l + 1.0).abs() <= 4.0 * f64::EPSILON);
        assert!((u * u - 3.0 * u + 1.0).abs() <= 4.0 * f64::EPSILON);
        assert!((l - 0.292_893_218_813_452_5).abs() < 1e-15);
        assert!((u - 0.381_966_011_250_105_1).abs() < 1e-15);
    }

    #[test]
    fn classification_matches_window() {
        let cases = [
            (0.05, RegimeKind::BelowPtaWindow),
            (0.29, RegimeKind::BelowPtaWindow),
            (pta_window_lower(), RegimeKind::PtaOptimalNested),
            (0.3, RegimeKind::PtaOptimalNested),
            (0.35, RegimeKind::PtaOptimalNested),
            (pta_window_upper(), RegimeKind::PtaOptimalNested),
            (0.39, RegimeKind::IndividualTestingOptimal),
            (0.9, RegimeKind::IndividualTestingOptimal),
        ];
        for (p, expected) in cases {
            let m = ContaminationModel::new(p).unwrap();
            assert_eq!(classify_regime(&m).kind, expected, "p = {p}");
        }
    }

    #[test]
    fn classification_is_monotone_in_p() {
        // Walking p across (0, 1) must never move the regime backwards.
        let order = |k: RegimeKind| match k {
            RegimeKind::BelowPtaWindow => 0,
            RegimeKind::PtaOptimalNested => 1,
            RegimeKind::IndividualTestingOptimal => 2,
        };
        let mut last = 0;
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let m = ContaminationModel::new(p).unwrap();
            let now = order(classify_regime(&m).kind);
            assert!(now >= last, "regime regressed at p = {p}");
            last = now;
        }
        assert_eq!(last, 2);
    }
}
