use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("monomial matrix has more than one cycle mean")]
    MultipleEigenvalues,
    #[error("no idempotent power reached after {0} squarings")]
    NoIdempotentPower(usize),
    #[error("matrix has no finite entry")]
    ZeroMatrix,
    #[error("{0} has no finite entry")]
    DegenerateRowOrColumn(String),
    #[error("vertex set is not a connected component")]
    NotAComponent,
    #[error("search budget of {0} nodes exceeded")]
    SearchBudgetExceeded(u64),
    #[error("matrix does not have full rank")]
    NotFullRank,
    #[error("bipartite graph is not connected")]
    NotConnected,
    #[error("matrix is not idempotent")]
    NotIdempotent,
    #[error("group order exceeds cap {0}")]
    OrderCapExceeded(u64),
    #[error("paired action is not faithful")]
    NotFaithful,
    #[error("group is not 2-closed")]
    NotTwoClosed,
    #[error("coloured bipartite graph is reducible")]
    ReducibleInput,
    #[error("construction hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("values are not integrally independent")]
    DependentEntries,
    #[error("block fill must be -inf or 0")]
    InvalidFill,
    #[error("construction failed verification: {0}")]
    ConstructionFailed(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
