use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("rho = {rho} violates the smoothing bound rho < 1/n = {bound}")]
    InvalidRho { rho: f64, bound: f64 },
    #[error("perturbed covariance {component} is not PSD (min eigenvalue {min_eig:.3e}); raise diag_margin")]
    PerturbationInfeasible { component: usize, min_eig: f64 },
    #[error("covariance {component} is not PSD within tolerance (min eigenvalue {min_eig:.3e})")]
    DegenerateCovariance { component: usize, min_eig: f64 },
    #[error("moment order {0} is not supported (max 6)")]
    UnsupportedOrder(usize),
    #[error("dimension {n} too small: need at least {needed}")]
    DimensionTooSmall { n: usize, needed: usize },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("moment of order {0} is not available in this moment set")]
    MissingMoment(usize),
    #[error("rank deficient at {step}: sigma_{rank} = {sigma:.3e} below threshold {threshold:.3e}")]
    RankDeficient { step: String, rank: usize, sigma: f64, threshold: f64 },
    #[error("merge ill-conditioned at {stage}: sigma = {sigma:.3e}, threshold {threshold:.3e}")]
    MergeIllConditioned { stage: String, sigma: f64, threshold: f64 },
    #[error("unfolding system {system} ill-conditioned: sigma_min = {sigma:.3e}, threshold {threshold:.3e}")]
    UnfoldIllConditioned { system: String, sigma: f64, threshold: f64 },
    #[error("whitening failed: sigma_k(Y4) = {sigma:.3e} below {threshold:.3e}")]
    WhitenRankDeficient { sigma: f64, threshold: f64 },
    #[error("power method did not converge in round {round} (last step {step:.3e})")]
    PowerMethodNoConvergence { round: usize, step: f64 },
    #[error("mean recovery ill-conditioned: sigma_min = {sigma:.3e}")]
    MeansIllConditioned { sigma: f64 },
    #[error("covariance anchoring ill-conditioned: sigma_min = {sigma:.3e}")]
    AnchorIllConditioned { sigma: f64 },
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy { kind: String, name: String, available: String },
    #[error("this moment source cannot {0}")]
    Unsupported(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that strict mode raises from a numerical diagnostic.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::MergeIllConditioned { .. }
                | Error::UnfoldIllConditioned { .. }
                | Error::WhitenRankDeficient { .. }
                | Error::PowerMethodNoConvergence { .. }
                | Error::MeansIllConditioned { .. }
                | Error::AnchorIllConditioned { .. }
                | Error::PerturbationInfeasible { .. }
                | Error::DegenerateCovariance { .. }
        )
    }

    /// Variant name, for logs and CSV status columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidRho { .. } => "InvalidRho",
            Error::PerturbationInfeasible { .. } => "PerturbationInfeasible",
            Error::DegenerateCovariance { .. } => "DegenerateCovariance",
            Error::UnsupportedOrder(_) => "UnsupportedOrder",
            Error::DimensionTooSmall { .. } => "DimensionTooSmall",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::MissingMoment(_) => "MissingMoment",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::MergeIllConditioned { .. } => "MergeIllConditioned",
            Error::UnfoldIllConditioned { .. } => "UnfoldIllConditioned",
            Error::WhitenRankDeficient { .. } => "WhitenRankDeficient",
            Error::PowerMethodNoConvergence { .. } => "PowerMethodNoConvergence",
            Error::MeansIllConditioned { .. } => "MeansIllConditioned",
            Error::AnchorIllConditioned { .. } => "AnchorIllConditioned",
            Error::Infeasible(_) => "Infeasible",
            Error::UnknownStrategy { .. } => "UnknownStrategy",
            Error::Unsupported(_) => "Unsupported",
            Error::Format(_) => "Format",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
