use thiserror::Error;

/// Everything that can go wrong while building or running a scheme.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point at signed distance {distance} lies outside the tubular neighbourhood (radius {radius})")]
    OutsideTubularNeighborhood { distance: f64, radius: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("negative argument: {0}")]
    NegativeArgument(String),

    #[error("Robin coefficient is negative (min sampled value {min})")]
    NegativeRobinCoefficient { min: f64 },

    #[error("grid too coarse: the extension collar spans {layers:.2} grid layers, at least 4 are needed")]
    GridTooCoarse { layers: f64 },

    #[error("collar width {width} is not below the tubular radius {radius}")]
    CollarTooWide { width: f64, radius: f64 },

    #[error("time step {step} is under-resolved: kernel radius {radius} needs grid spacing h <= {max_h}")]
    StepTooSmall { step: f64, radius: f64, max_h: f64 },

    #[error("field support reaches within the kernel radius of the grid edge")]
    EdgeClipping,

    #[error("field and kernel plan use different grids")]
    MismatchedGrid,

    #[error("no sign change found for root bracket [{lo}, {hi}]")]
    RootBracketFailure { lo: f64, hi: f64 },

    #[error("series truncation tail {tail:e} exceeds tolerance {tol:e}")]
    TruncationInsufficient { tail: f64, tol: f64 },

    #[error("Richardson estimate {estimate:e} exceeds tolerance {tol:e}")]
    StepRejected { estimate: f64, tol: f64 },

    #[error("no reference solution available for {0}")]
    ReferenceUnavailable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable variant name, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::OutsideTubularNeighborhood { .. } => "OutsideTubularNeighborhood",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::InvalidDomain(_) => "InvalidDomain",
            Error::NegativeArgument(_) => "NegativeArgument",
            Error::NegativeRobinCoefficient { .. } => "NegativeRobinCoefficient",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::CollarTooWide { .. } => "CollarTooWide",
            Error::StepTooSmall { .. } => "StepTooSmall",
            Error::EdgeClipping => "EdgeClipping",
            Error::MismatchedGrid => "MismatchedGrid",
            Error::RootBracketFailure { .. } => "RootBracketFailure",
            Error::TruncationInsufficient { .. } => "TruncationInsufficient",
            Error::StepRejected { .. } => "StepRejected",
            Error::ReferenceUnavailable(_) => "ReferenceUnavailable",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
