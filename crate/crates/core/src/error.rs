use thiserror::Error;

/// Errors raised by the hard-stop analysis library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A surface or hard-stop pair failed its construction invariants.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The hard-stop surfaces touch (or nearly touch) for vanishing motion.
    #[error(
        "zero clearance along ray sep={sep_deg:.3}° alpha={alpha_deg:.3}° (slice {sep_index}, direction {alpha_index})"
    )]
    ZeroClearance {
        sep_index: usize,
        alpha_index: usize,
        sep_deg: f64,
        alpha_deg: f64,
    },

    /// Stress at zero motion already reaches the threshold.
    #[error("base stress {sigma0:.3} MPa at zero motion is not below threshold {sigma_cr:.3} MPa")]
    BaseStress { sigma0: f64, sigma_cr: f64 },

    /// Query outside the tabulated stress grid.
    #[error(
        "query (sep={sep_deg:.4}°, delta={delta_mm:.6} mm, theta={theta_deg:.6}°) lies outside the tabulated grid"
    )]
    OutOfHull {
        sep_deg: f64,
        delta_mm: f64,
        theta_deg: f64,
    },

    /// Malformed input file.
    #[error("format error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<u64>, message: String },

    /// A field has an unbounded ray where a finite radius is required.
    #[error("unbounded ray at sep={sep_deg:.3}° alpha={alpha_deg:.3}°: {context}")]
    Unbounded {
        sep_deg: f64,
        alpha_deg: f64,
        context: String,
    },

    /// Two fields were compared on different direction grids.
    #[error("direction grid mismatch: {0}")]
    GridMismatch(String),

    /// Engagement simulation failure.
    #[error("simulation error at sample {sample}: {message}")]
    Simulation { sample: usize, message: String },

    /// Optimization problem could not be set up.
    #[error("optimization setup error: {0}")]
    OptimizationSetup(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
