use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("sector {sector} is not valid for {kind}")]
    IncompatibleSector { sector: String, kind: String },
    #[error("a Fock cutoff is required for sector {0}")]
    CutoffRequired(String),
    #[error("operator {op} is not defined for {kind}")]
    OperatorUndefined { op: String, kind: String },
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("family {family} cannot be used with {kind}")]
    FamilyMismatch { family: String, kind: String },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Fock cutoff {n_max} exceeds the cap; best ground energy so far {best_energy}")]
    CutoffCap { n_max: usize, best_energy: f64 },
    #[error("truncated basis keeps only {kept:.3e} of the state norm")]
    Truncation { kept: f64 },
    #[error("minimisation failed: {0}")]
    Minimisation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
