use core::fmt;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Bessel argument outside the range where accuracy has been validated.
    BesselDomain { x: f64 },
    /// A parameter violated its documented invariant.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// No super-Gaussian exponent up to the supported maximum reaches the
    /// requested isolation.
    FilterIsolationUnreachable { isolation_db: f64 },
    /// The normalization run of the estimator has no signal above background.
    DegenerateReference { numerator: f64 },
    /// Two histograms that must share a binning do not.
    HistogramMismatch,
    /// Significance is undefined for a zero standard error.
    UndefinedSignificance,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BesselDomain { x } => {
                write!(f, "bessel argument {x} outside validated domain |x| <= 50")
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::FilterIsolationUnreachable { isolation_db } => write!(
                f,
                "no super-Gaussian order <= 8 reaches {isolation_db} dB isolation"
            ),
            Error::DegenerateReference { numerator } => write!(
                f,
                "reference run has no net coincidences (N_c - N_ac = {numerator})"
            ),
            Error::HistogramMismatch => f.write_str("histograms use different binning"),
            Error::UndefinedSignificance => {
                f.write_str("significance undefined for zero standard error")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

/// Non-fatal conditions worth surfacing to a user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostic {
    /// Drive amplitude outside the experimentally accessible range `[0, 2.74]`.
    AmplitudeOutsideExperimentalRange { amplitude: f64 },
    /// A bin table misses more probability mass than `1e-6`.
    DistributionTruncated { missing_mass: f64 },
    /// `a + b` never reaches the first zero of `J_0`, so the fringe minimum is
    /// not zero and the visibility stays below one.
    VisibilityBelowUnity { max_effective_amplitude: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::AmplitudeOutsideExperimentalRange { amplitude } => write!(
                f,
                "amplitude {amplitude} is outside the experimentally accessible range [0, 2.74]"
            ),
            Diagnostic::DistributionTruncated { missing_mass } => write!(
                f,
                "bin table truncated: missing probability mass {missing_mass:e}"
            ),
            Diagnostic::VisibilityBelowUnity {
                max_effective_amplitude,
            } => write!(
                f,
                "a + b = {max_effective_amplitude} < 2.405: fringe minimum is nonzero"
            ),
        }
    }
}
