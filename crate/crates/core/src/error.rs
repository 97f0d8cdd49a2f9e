use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum CssError {
    #[error("N must be even, got {0}")]
    OddN(usize),
    #[error("N must be at least 8, got {0}")]
    TinyN(usize),
    #[error("domain half-width must be positive, got {0}")]
    NonpositiveL(f64),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("exponential argument {arg} exceeds overflow cap {cap}")]
    Overflow { arg: f64, cap: f64 },
    #[error("truncation requires a supercritical nonlinearity")]
    NotSupercritical,
    #[error("truncation level must be positive, got {0}")]
    NonpositiveR(f64),
    #[error("no sign change of the fiber constraint in t in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("fiber projection at t={0} is not a maximum of the fiber energy")]
    NotUnique(f64),
    #[error("field has zero mass")]
    ZeroMass,
    #[error("no admissible root: a^2={a_sq} is below the minimum {min} at the smallest admissible R_n")]
    NoRoot { a_sq: f64, min: f64 },
    #[error("Moser profile support R_n={rn} does not fit in the domain of half-width {l}")]
    SupportExceedsDomain { rn: f64, l: f64 },
    #[error("supports of the two fields overlap at t={0}")]
    SupportsOverlap(f64),
    #[error("field is not radially symmetric: relative angular deviation {0:.3e}")]
    NotRadial(f64),
    #[error("converged field does not decay at the boundary: ring max {ring_max:.3e} exceeds {tol:.1e}")]
    DomainTooSmall { ring_max: f64, tol: f64 },
    #[error("no fixed point of the truncation loop after {0} outer iterations")]
    NoFixedPoint(usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("field is not finite after operation: {0}")]
    NonFinite(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CssError>;
