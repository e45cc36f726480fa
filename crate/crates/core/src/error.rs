use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("non-prime modulus {0}")]
    NonPrime(u64),

    #[error("invalid model shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },

    #[error("scalar {scalar} out of range for p = {p}")]
    ScalarOutOfRange { scalar: u64, p: u32 },

    #[error("basis vector {name} out of range for ambient dimension {dim}")]
    BasisOutOfRange { name: String, dim: usize },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("duplicate variable `{0}` in variable list")]
    DuplicateVariable(String),

    #[error("missing assignment for variable `{0}`")]
    MissingAssignment(String),

    #[error("budget exceeded: needs {needed} steps, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },

    #[error("formula is not solvable by H-first counting")]
    NotSolvable,

    #[error("base is not H-independent")]
    NotHIndependent,

    #[error("invalid dimension-measure triple: {0}")]
    InvalidDimMeasure(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-integral fitted dimension {0:.4}")]
    NonIntegralDimension(f64),

    #[error("invalid measuring candidate: {0}")]
    InvalidCandidate(String),

    #[error("inputs are not disjoint at p = {p}, m = {m} ({overlap} common tuples)")]
    NotDisjoint { p: u32, m: usize, overlap: String },

    #[error("graph is not a function at p = {p}, m = {m}")]
    NotAFunction { p: u32, m: usize },

    #[error("map is not a surjection onto the base at p = {p}, m = {m}")]
    NotSurjective { p: u32, m: usize },

    #[error("{found} fiber classes exceed the bound {bound}")]
    TooManyFiberClasses { found: usize, bound: usize },

    #[error("fiber classes are not stable across the family: {0}")]
    UnstableFiberClasses(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }

    /// Errors caused by the input rather than by the mathematics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::NonPrime(_)
                | Error::InvalidShape(_)
                | Error::ScalarOutOfRange { .. }
                | Error::BasisOutOfRange { .. }
                | Error::Syntax { .. }
                | Error::UnboundVariable(_)
                | Error::DuplicateVariable(_)
                | Error::MissingAssignment(_)
                | Error::InvalidFamily(_)
                | Error::InvalidCandidate(_)
        )
    }
}
