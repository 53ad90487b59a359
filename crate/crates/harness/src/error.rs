use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure{}: {source}", step_suffix(.step))]
    Numerical {
        step: Option<usize>,
        #[source]
        source: wilkinson_core::Error,
    },

    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

fn step_suffix(step: &Option<usize>) -> String {
    match step {
        Some(k) => format!(" at step {k}"),
        None => String::new(),
    }
}

impl HarnessError {
    /// Process exit status: 2 for anything the user can fix in the
    /// configuration, 3 when the numerics gave out.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 2,
            HarnessError::Numerical { .. } => 3,
        }
    }

    pub fn step(&self) -> Option<usize> {
        match self {
            HarnessError::Numerical { step, .. } => *step,
            _ => None,
        }
    }

    /// Wraps a core error, keeping the step index it already carries.
    pub fn numerical(source: wilkinson_core::Error) -> Self {
        let step = match &source {
            wilkinson_core::Error::OnBoundary { step } | wilkinson_core::Error::PrecisionExhausted { step } => *step,
            _ => None,
        };
        HarnessError::Numerical { step, source }
    }

    pub fn at_step(source: wilkinson_core::Error, k: usize) -> Self {
        HarnessError::Numerical { step: Some(k), source: source.at_step(k) }
    }
}

impl From<wilkinson_core::Error> for HarnessError {
    fn from(e: wilkinson_core::Error) -> Self {
        HarnessError::numerical(e)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
