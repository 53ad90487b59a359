use thiserror::Error;

/// Failures raised by the iteration, chart, Toda and Cantor-set routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `T - sI` is numerically singular: `s` is (close to) an eigenvalue.
    #[error("shift is numerically an eigenvalue (pivot {pivot} of R vanished)")]
    SingularShift { pivot: usize },

    /// Both trailing-block eigenvalues are equidistant from `T[n,n]` while
    /// the bottom off-diagonal entry is nonzero.
    #[error("Wilkinson shift tie: both branches equidistant from the corner entry")]
    TieBreakUndefined,

    #[error("spectrum is degenerate: eigenvalues {0} and {1} coincide within tolerance")]
    DegenerateSpectrum(usize, usize),

    #[error("matrix is not in the chart: leading minor {minor} vanishes")]
    NotInChart { minor: usize },

    #[error("matrix eigenvalues do not match the chart spectrum")]
    SpectrumMismatch,

    #[error("shift collides with non-terminal chart eigenvalue index {0}")]
    ShiftCollision(usize),

    #[error("scalar function vanishes on eigenvalue {0}")]
    SingularFunctionValue(usize),

    #[error("Toda integration drifted off the isospectral manifold (drift {drift:e})")]
    StepSizeTooLarge { drift: f64 },

    /// The point lies on the `omega_+ / omega_-` switching curve.
    #[error("point lies on the branch boundary{}", step_suffix(.step))]
    OnBoundary { step: Option<usize> },

    #[error("cone point: omega is not differentiable at (+-2, 0)")]
    ConePoint,

    #[error("sign sequence too short to resolve the requested precision (needed symbol {needed})")]
    DepthInsufficient { needed: usize },

    #[error("working precision exhausted{}", step_suffix(.step))]
    PrecisionExhausted { step: Option<usize> },

    #[error("arc flatness violated: slope {slope:e} exceeds Lipschitz bound")]
    FlatnessViolated { slope: f64 },

    #[error("orbit tail too short for a rate fit ({usable} usable pairs)")]
    InsufficientTail { usable: usize },

    #[error("itinerary classification is not monotone along the slice")]
    NonMonotoneItinerary,
}

fn step_suffix(step: &Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches an iteration index to errors that carry one.
    pub fn at_step(self, k: usize) -> Self {
        match self {
            Error::OnBoundary { .. } => Error::OnBoundary { step: Some(k) },
            Error::PrecisionExhausted { .. } => Error::PrecisionExhausted { step: Some(k) },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
