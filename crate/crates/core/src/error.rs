use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("reflexive independence pair ({0},{0})")]
    ReflexivePair(String),
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("duplicate letter `{0}`")]
    DuplicateLetter(String),
    #[error("alphabets hold at most {max} letters, got {got}")]
    TooManyLetters { max: usize, got: usize },
    #[error("operands live over different alphabets")]
    AlphabetMismatch,
    #[error("trace is not a prefix")]
    NotAPrefix,
    #[error("images of independent letters {0} and {1} do not commute")]
    NotWellDefined(String, String),
    #[error("orbit element exceeded length budget {0} without cycling")]
    OrbitGrowth(usize),
    #[error("image of `{0}` leaves the requested letter set")]
    NotClosed(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("generator set contains the identity")]
    TrivialGenerator,
    #[error("alphabet is not a single commutative component")]
    NotCommutativeComponent,
    #[error("not a clique union")]
    NotCliqueUnion,
    #[error("endomorphism is not uniformly continuous (witness {0} {1} {2})")]
    NotUniformlyContinuous(String, String, String),
    #[error("FNF prefix did not stabilize within {0} letters")]
    BudgetExceeded(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("letter `{0}` has more than one map line")]
    DuplicateMap(String),
    #[error("letter `{0}` has no map line")]
    MissingMap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
