use thiserror::Error;

use crate::numerics::NumericsError;

/// Domain errors. Each variant has a stable machine-readable [`code`](Error::code).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside catalogue: {0}")]
    OutsideCatalogue(String),
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("dependent periods: {0}")]
    DependentPeriods(String),
    #[error("grain must be nonzero")]
    ZeroGrain,
    #[error("not a grain: {0}")]
    NotAGrain(String),
    #[error("forbidden parameter: {0}")]
    ForbiddenParameter(String),
    #[error("lattice does not match model: {0}")]
    LatticeModelMismatch(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("base mismatch: {0}")]
    BaseMismatch(String),
    #[error("representation invariant violated: {0}")]
    InvariantViolation(String),
    #[error("vanishing derivative at {0}")]
    VanishingDerivative(String),
    #[error("search too large: {0}")]
    SearchTooLarge(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown kind: {0}")]
    UnknownKind(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Singular(_) => "singular_matrix",
            Error::InvalidInput(_) => "invalid_input",
            Error::OutsideCatalogue(_) => "outside_catalogue",
            Error::UnknownModel(_) => "unknown_model",
            Error::DependentPeriods(_) => "dependent_periods",
            Error::ZeroGrain => "zero_grain",
            Error::NotAGrain(_) => "not_a_grain",
            Error::ForbiddenParameter(_) => "forbidden_parameter",
            Error::LatticeModelMismatch(_) => "lattice_model_mismatch",
            Error::ModelMismatch(_) => "model_mismatch",
            Error::BaseMismatch(_) => "base_mismatch",
            Error::InvariantViolation(_) => "invariant_violation",
            Error::VanishingDerivative(_) => "vanishing_derivative",
            Error::SearchTooLarge(_) => "search_too_large",
            Error::Unsupported(_) => "unsupported",
            Error::UnknownKind(_) => "unknown_kind",
            Error::Numerics(_) => "numerics",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
