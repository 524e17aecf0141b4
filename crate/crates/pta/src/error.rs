use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Contamination probabilities must lie strictly inside (0, 1).
    #[error("contamination probability must satisfy 0 < p < 1, got {0}")]
    InvalidProbability(f64),

    /// Rational probabilities are given as a fraction num/den.
    #[error("rational probability must satisfy 0 < num < den, got {num}/{den}")]
    InvalidRational { num: u32, den: u32 },

    /// A defect pattern with no items has no test count.
    #[error("defect pattern must contain at least one item")]
    EmptyPattern,

    /// The named operation needs a larger input than it was given.
    #[error("{what}: need at least {min}, got {got}")]
    TooSmall {
        what: &'static str,
        got: u64,
        min: u64,
    },

    /// The named operation refuses inputs past its practical ceiling.
    #[error("{what}: {got} exceeds the supported maximum {max}")]
    TooLarge {
        what: &'static str,
        got: u64,
        max: u64,
    },

    /// Tilting parameters have to be finite reals.
    #[error("lambda must be finite, got {0}")]
    NonFiniteLambda(f64),

    /// Linear-domain arithmetic left the representable f64 range; the
    /// log-domain variant of the same operation still works.
    #[error("value under- or overflowed f64 at n = {n}; use the log-domain variant")]
    Capacity { n: usize },

    /// Standardizing draws needs a strictly positive limiting variance.
    #[error("limiting variance {0:e} is too close to zero to standardize by")]
    DegenerateVariance(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
