use thiserror::Error;

use crate::lattice::{DirectedEdge, EisensteinPoint};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("network radius must be at least 1, got {0}")]
    InvalidRadius(u32),

    #[error("decoding order leaves edge ({0}, {1}) unordered")]
    UnorderedEdge(EisensteinPoint, EisensteinPoint),

    #[error("unsupported antenna configuration {m}x{n} for {scheme}")]
    AntennaConfig { scheme: &'static str, m: usize, n: usize },

    #[error("near-singular channel inversion ({context}): condition number {cond:.3e}")]
    NearSingular { context: String, cond: f64 },

    #[error("degenerate nullspace ({context})")]
    DegenerateNullspace { context: String },

    #[error("effective link of cell {cell} is rank deficient (sigma_min = {sigma_min:.3e})")]
    RankDeficient { cell: EisensteinPoint, sigma_min: f64 },

    #[error("missing channel matrix for edge {0}")]
    MissingChannel(DirectedEdge),

    #[error("solution and channel set disagree: {0}")]
    Inconsistent(String),

    #[error("LP infeasible: gamma = {gamma} is below min g = {min_g}")]
    Infeasible { gamma: String, min_g: String },

    #[error("dual bound is unbounded below in lambda (every g_i > 0)")]
    UnboundedLambda,

    #[error("invalid LP input: {0}")]
    InvalidLp(String),

    #[error("degenerate slope request: need at least two distinct positive powers")]
    DegenerateSlope,

    #[error("integer oracle search space {size} exceeds the limit {limit}")]
    OracleTooLarge { size: f64, limit: f64 },

    #[error("malformed dump: {0}")]
    Dump(String),
}

impl Error {
    /// True for failures caused by ill-conditioned or degenerate channel draws.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingular { .. } | Error::DegenerateNullspace { .. } | Error::RankDeficient { .. }
        )
    }
}
