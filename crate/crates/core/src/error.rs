use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("psi power {power} exceeds the configured cap {cap}")]
    PsiPowerCap { power: i64, cap: u32 },

    #[error("matrix is not parabolic (trace {trace})")]
    NotParabolic { trace: String },

    #[error("depth {depth} exceeds the configured depth cap {cap}")]
    DegreeOverflow { depth: u32, cap: u32 },

    #[error("distance exceeds cap {cap}")]
    Exceeded { cap: u32 },

    #[error("fill recursion exceeded {cap} levels; kappa is too small for this triangle")]
    FillDepthExceeded { cap: u32 },

    #[error("bigon ladder rung of length {length} exceeds kappa {kappa}")]
    LadderTooWide { length: u32, kappa: u32 },

    #[error("no filling exists inside the window; grow the window radius")]
    Infeasible,

    #[error("window holds {count} simplices, above the cap {cap}")]
    WindowTooLarge { count: usize, cap: usize },

    #[error("cochain failed the invariance/alternation sample check: {0}")]
    NotInvariant(String),

    #[error("Lipschitz bound violated: |f({x}) - f({y})| > {lip} * |{x} - {y}|")]
    LipViolation { x: i64, y: i64, lip: String },

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("startup self-check failed: {0}")]
    SelfCheck(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PsiPowerCap { .. } => "psi_power_cap",
            Error::NotParabolic { .. } => "not_parabolic",
            Error::DegreeOverflow { .. } => "degree_overflow",
            Error::Exceeded { .. } => "exceeded",
            Error::FillDepthExceeded { .. } => "fill_depth_exceeded",
            Error::LadderTooWide { .. } => "ladder_too_wide",
            Error::Infeasible => "infeasible",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::NotInvariant(_) => "not_invariant",
            Error::LipViolation { .. } => "lip_violation",
            Error::Parse { .. } => "parse",
            Error::Invalid(_) => "invalid",
            Error::SelfCheck(_) => "self_check",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            pos: e.column(),
            msg: e.to_string(),
        }
    }
}
