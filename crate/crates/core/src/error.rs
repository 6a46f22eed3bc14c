use core::fmt;

/// Errors reported by the solver library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Vector or matrix sizes do not agree.
    DimensionMismatch { expected: usize, found: usize },
    /// A scalar argument is outside its admissible range.
    InvalidArgument(&'static str),
    /// A point is outside the feasible set of the problem.
    Infeasible(&'static str),
    /// The requested step-size rule is violated by the given parameters.
    ConditionViolated { product: f64, bound: f64 },
    /// Power iteration produced a zero vector twice in a row.
    DegenerateStart,
    /// Dense materialization or certificate size cap exceeded.
    TooLarge { size: usize, cap: usize },
    /// Matrix expected to be symmetric is not.
    Asymmetric { deviation: f64 },
    /// A certificate matrix disagrees with its closed form.
    ClosedFormMismatch { deviation: f64 },
    /// A history or trajectory was missing an entry the check requires.
    MissingData(&'static str),
    /// Input that was expected to be nonempty was empty.
    Empty,
    /// The iterates left every bounded region (non-finite or `|u|_inf > 1e12`).
    Diverged { iterations: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::Infeasible(what) => write!(f, "infeasible point: {what}"),
            Error::ConditionViolated { product, bound } => {
                write!(f, "step-size condition violated: r*s = {product} but the rule requires > {bound}")
            }
            Error::DegenerateStart => write!(f, "power iteration collapsed to the zero vector"),
            Error::TooLarge { size, cap } => write!(f, "size {size} exceeds cap {cap}"),
            Error::Asymmetric { deviation } => write!(f, "matrix is not symmetric (deviation {deviation:e})"),
            Error::ClosedFormMismatch { deviation } => {
                write!(f, "certificate matrix disagrees with its closed form (deviation {deviation:e})")
            }
            Error::MissingData(what) => write!(f, "missing data: {what}"),
            Error::Empty => write!(f, "empty input"),
            Error::Diverged { iterations } => write!(f, "iterates diverged after {iterations} steps"),
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl core::error::Error for Error {}
