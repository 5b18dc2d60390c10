use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("NoLearningRegion: c >= c_bar = {c_bar}")]
    NoLearningRegion { c_bar: f64 },
    #[error("{what} is undefined: {reason}")]
    Undefined { what: &'static str, reason: String },
    #[error("prior {p0} outside [{lo}, {hi}] required by {what}")]
    OutOfRange {
        what: &'static str,
        p0: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no crossing for {what} within horizon {horizon}")]
    NoCrossing { what: &'static str, horizon: f64 },
    #[error("{what} is infeasible: {reason}")]
    Infeasible { what: &'static str, reason: String },
    #[error("NoRandomization: stopping rate {slope} at the randomization start is not positive")]
    NoRandomization { slope: f64 },
    #[error("MonotonicityBreak: stopping rate {slope} at t = {t} with rho = {rho}")]
    MonotonicityBreak { t: f64, rho: f64, slope: f64 },
    #[error("NotFound: {what}; residual {lo_value} at {lo}, {hi_value} at {hi}")]
    NotFound {
        what: &'static str,
        lo: f64,
        hi: f64,
        lo_value: f64,
        hi_value: f64,
    },
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("{regime} is not applicable at p0 = {p0}: {reason}")]
    NotApplicable {
        regime: &'static str,
        p0: f64,
        reason: String,
    },
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::NoLearningRegion { .. } => "NoLearningRegion",
            Error::Undefined { .. } => "Undefined",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NoCrossing { .. } => "NoCrossing",
            Error::Infeasible { .. } => "Infeasible",
            Error::NoRandomization { .. } => "NoRandomization",
            Error::MonotonicityBreak { .. } => "MonotonicityBreak",
            Error::NotFound { .. } => "NotFound",
            Error::RegimeMismatch(_) => "RegimeMismatch",
            Error::NotApplicable { .. } => "NotApplicable",
        }
    }
}
