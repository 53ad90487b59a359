//! Wilkinson-shift QR iteration on symmetric tridiagonal matrices, the
//! bidiagonal coordinate charts that linearize it, Toda-flow monotonicity
//! checks, and the slow-convergence Cantor set of the 3x3
//! arithmetic-progression spectrum.

pub mod ap3;
pub mod batch;
pub mod cantor;
pub mod charts;
pub mod dense;
pub mod error;
pub mod jacobi;
pub mod orbit;
pub mod scalar;
pub mod toda;

pub use error::{Error, Result};
pub use jacobi::{
    classify_sets, matrix_function, shifted_qr_factor, wilkinson_shift, wilkinson_step, Branch, GivensChain,
    ShiftChoice, Spectrum, StepTolerances, TridiagonalMatrix,
};
pub use scalar::{Big, PrecisionLevel, Real};
