use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel not integrable at requested tolerance (moment {moment})")]
    NotIntegrable { moment: usize },
    #[error("kernel undefined on domain at x = {x}")]
    KernelUndefined { x: f64 },
    #[error("degenerate kernel: zero spectral gap")]
    DegenerateKernel,
    #[error("kernel family constraint violated: {0}")]
    FamilyConstraint(String),
    #[error("unknown kernel '{0}'")]
    UnknownKernel(String),
    #[error("expression error: {0}")]
    Expression(String),
    #[error("incomplete substitution: variable '{0}' has no image")]
    IncompleteSubstitution(String),
    #[error("non-integrable radial power {0}")]
    NonIntegrableRadialPower(i32),
    #[error("angular table too small: need degree {needed}, table covers {available}")]
    AngularTableTooSmall { needed: usize, available: usize },
    #[error("basis too large for exact assembly budget: N = {degree} exceeds cap {cap}")]
    BasisTooLarge { degree: usize, cap: usize },
    #[error("basis degree must be at least 2, got {0}")]
    BasisTooSmall(usize),
    #[error("chi-square divergence infinite: sigma^2 = {0} >= 2")]
    ChiSquareDivergent(f64),
    #[error("violates energy normalization: sum of sigma^2 = {0}")]
    EnergyNormalization(f64),
    #[error("invalid variance sigma^2 = {0}")]
    InvalidVariance(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative time {0} for semigroup")]
    NegativeTime(f64),
    #[error("initial state not in H0: invariant residual {0:e}")]
    NotInH0(f64),
    #[error("integrator failed tolerance after {halvings} step halvings (last change {change:e})")]
    IntegratorTolerance { halvings: usize, change: f64 },
    #[error("left perturbative regime: theta = {0:e}")]
    LeftPerturbativeRegime(f64),
    #[error("Picard stability violated: iterate norm {norm} exceeds radius {radius}")]
    PicardStability { norm: f64, radius: f64 },
    #[error("outside basin covered by the comparison argument: 2 sqrt(theta0) = {0} >= |gap|")]
    OutsideBasin(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
