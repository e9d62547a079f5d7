use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid potential of order {order}: {details}")]
    InvalidPotential { order: usize, details: String },

    #[error("invalid Hamiltonian spec: {0}")]
    InvalidSpec(String),

    #[error("interaction order exceeds particle number ({order} > {n_particles})")]
    OrderExceedsParticles { order: usize, n_particles: usize },

    #[error("basis size overflow for d={d}, N={n_particles}")]
    BasisOverflow { d: usize, n_particles: usize },

    #[error("vector is not normalized (norm {norm:.3e})")]
    NotNormalized { norm: f64 },

    #[error("requested {k}-particle reduced density matrix of a {n_particles}-particle state")]
    RdmOrderTooLarge { k: usize, n_particles: usize },

    #[error("full-space dimension {dim} exceeds the dense limit {limit}; largest admissible N is {max_n}")]
    FullSpaceTooLarge { dim: u128, limit: usize, max_n: usize },

    #[error("supports must be disjoint")]
    OverlappingSupports,

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("missing reduced density matrix of order {0}")]
    MissingRdm(usize),

    #[error("negative evolution time {0}")]
    NegativeTime(f64),

    #[error("Hermitian eigendecomposition did not converge (dimension {0})")]
    EigenFailure(usize),

    #[error("step size underflow at t={t:.6e}: h={h:.3e}, error estimate {err:.3e}")]
    StepSizeUnderflow { t: f64, h: f64, err: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
