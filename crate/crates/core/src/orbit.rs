//! Driving Wilkinson's iteration from a starting matrix and keeping the
//! whole trace.

use crate::error::Error;
use crate::jacobi::{wilkinson_step_with_shift, StepTolerances, TridiagonalMatrix};
use crate::scalar::Real;

/// Why an orbit stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum OrbitStop {
    MaxIter,
    /// The bottom entry is exactly zero.
    Deflated,
    /// The bottom entry fell to the requested floor.
    PrecisionFloor,
    /// A step failed; the trace holds everything before it.
    Failed { step: usize, error: Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOrbit<R> {
    /// `T_0, ..., T_m`.
    pub matrices: Vec<TridiagonalMatrix<R>>,
    /// Shift used to go from `T_k` to `T_{k+1}`.
    pub shifts: Vec<R>,
    pub stop: OrbitStop,
}

impl<R: Real> MatrixOrbit<R> {
    pub fn steps(&self) -> usize {
        self.shifts.len()
    }

    pub fn last(&self) -> &TridiagonalMatrix<R> {
        &self.matrices[self.matrices.len() - 1]
    }

    /// `|T_k[n, n-1]|` along the orbit.
    pub fn bottom_magnitudes(&self) -> Vec<R> {
        self.matrices.iter().map(|t| t.bottom_entry().abs()).collect()
    }
}

/// Default floor: once the bottom entry is below `eps` times the matrix
/// scale the corner is an eigenvalue to working precision, and the next
/// shift would make `T - wI` singular.
pub fn default_floor<R: Real>(t: &TridiagonalMatrix<R>) -> R {
    R::epsilon() * R::max_of(t.max_abs(), R::one())
}

/// Iterates `W` from `t0` until `max_iter` steps, deflation, the floor, or
/// a failed step. Never errors: failures end the trace.
pub fn wilkinson_orbit<R: Real>(t0: &TridiagonalMatrix<R>, max_iter: usize, floor: &R) -> MatrixOrbit<R> {
    let mut matrices = vec![t0.clone()];
    let mut shifts = Vec::new();
    let stop = loop {
        let t = &matrices[matrices.len() - 1];
        let bottom = t.bottom_entry().abs();
        if bottom.is_zero() {
            break OrbitStop::Deflated;
        }
        if bottom <= *floor {
            break OrbitStop::PrecisionFloor;
        }
        if shifts.len() == max_iter {
            break OrbitStop::MaxIter;
        }
        let tols = StepTolerances::for_matrix(t);
        match wilkinson_step_with_shift(t, &tols) {
            Ok((next, choice)) => {
                shifts.push(choice.omega);
                matrices.push(next);
            }
            Err(error) => break OrbitStop::Failed { step: shifts.len(), error },
        }
    };
    MatrixOrbit { matrices, shifts, stop }
}
