use thiserror::Error;

use crate::operator::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while building spaces, bases and operators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("complex eigenvalue {re} + {im}i has no conjugate partner with equal multiplicity")]
    ConjugationViolation { re: f64, im: f64 },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("function is not an element of the space: {0}")]
    NotInSpace(String),

    #[error("division by zero: |denominator| = {value:e} at x = {x}")]
    DivisionByZero { x: f64, value: f64 },

    #[error("space is not an extended Chebyshev system for the endpoints (basis index {k}): {reason}")]
    NotChebyshevAtEndpoints { k: usize, reason: String },

    #[error("degree {degree} exceeds the hard cap of {cap} for double precision")]
    DegreeTooLarge { degree: usize, cap: usize },

    #[error("expansion in the Bernstein basis failed: best relative residual {residual:e}")]
    SingularExpansion { residual: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("ratio {ratio} for node {k} lies outside [{lower}, {upper}]")]
    RatioOutOfRange { k: usize, ratio: f64, lower: f64, upper: f64 },

    #[error("no Bernstein operator fixes f0 and f1: {} sandwich violation(s), beta positive = {}", .0.violations.len(), .0.beta_positive)]
    Infeasible(Box<FeasibilityReport>),

    #[error("{lambda} is not a real eigenvalue of the spectrum")]
    NotInSpectrum { lambda: f64 },

    #[error("quotient family has numerical rank below {expected} (pivot ratio {pivot:e})")]
    RankDeficiency { expected: usize, pivot: f64 },

    #[error("degenerate denominator {value:e} in endpoint constant {which}")]
    DegenerateDenominator { which: String, value: f64 },

    #[error("closed-form and quotient representations of the derivative space disagree by {deviation:e}")]
    RepresentationMismatch { deviation: f64 },

    #[error("parameter {value} outside the admissible range: {reason}")]
    OutOfRange { value: f64, reason: String },
}

impl Error {
    /// True for failures caused by the inputs not admitting an operator,
    /// as opposed to malformed inputs or numerical breakdown.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::RatioOutOfRange { .. })
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ConjugationViolation { .. } => "conjugation_violation",
            Error::InvalidSpectrum(_) => "invalid_spectrum",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NotInSpace(_) => "not_in_space",
            Error::DivisionByZero { .. } => "division_by_zero",
            Error::NotChebyshevAtEndpoints { .. } => "not_chebyshev_at_endpoints",
            Error::DegreeTooLarge { .. } => "degree_too_large",
            Error::SingularExpansion { .. } => "singular_expansion",
            Error::PreconditionFailed(_) => "precondition_failed",
            Error::RatioOutOfRange { .. } => "ratio_out_of_range",
            Error::Infeasible(_) => "infeasible",
            Error::NotInSpectrum { .. } => "not_in_spectrum",
            Error::RankDeficiency { .. } => "rank_deficiency",
            Error::DegenerateDenominator { .. } => "degenerate_denominator",
            Error::RepresentationMismatch { .. } => "representation_mismatch",
            Error::OutOfRange { .. } => "out_of_range",
        }
    }
}
