//! The set of initial conditions near the cone point whose Wilkinson
//! orbits converge only quadratically: itineraries, slices, flat arcs and
//! convergence-rate fits.

mod arcs;
mod orbit;
mod rates;
mod sign;
mod slice;

pub use arcs::{arc_image, arc_iterate, check_wedge_lemmas, horizontal_arc, ArcImage, FlatArc};
pub use orbit::{plane_orbit, realized_sign_sequence, wedge_escape_check, ExitInfo, PlaneOrbit};
pub use rates::{rate_classify, ratio_band, OrbitSample, RateClass, RateReport, RateWindow};
pub use sign::{SignSequence, Tail};
pub use slice::{cantor_slice, child_interval, f_s_bracket, f_s_solve, SliceInterval};

use crate::ap3::{default_boundary_tol, Wedge};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bits of working precision held back from what is requested, so that
/// decisions made at the target resolution are not rounding noise.
pub const GUARD_BITS: u32 = 32;

/// Parameters of the Cantor-set constructions.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorConfig<R> {
    /// Height of the trapping wedge `V_a`.
    pub a_star: R,
    /// Lipschitz bound for flat arcs; must stay below 1/6.
    pub l_star: R,
    /// Requested accuracy of slice coordinates, in bits.
    pub precision_bits: u32,
    /// Longest orbit followed when reading an itinerary.
    pub max_depth: usize,
}

impl<R: Real> Default for CantorConfig<R> {
    fn default() -> Self {
        CantorConfig {
            a_star: R::ratio(1, 10),
            l_star: R::ratio(1, 10),
            precision_bits: R::BITS.saturating_sub(GUARD_BITS).max(16),
            max_depth: 64,
        }
    }
}

impl<R: Real> CantorConfig<R> {
    pub fn with_precision_bits(mut self, bits: u32) -> Self {
        self.precision_bits = bits;
        self
    }

    pub fn with_a_star(mut self, a: R) -> Self {
        self.a_star = a;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_star.is_sign_negative() || self.a_star.is_zero() || self.a_star > R::ratio(1, 10) {
            return Err(Error::InvalidInput(format!("a_star must lie in (0, 1/10], got {}", self.a_star)));
        }
        if self.l_star.is_sign_negative() || self.l_star.is_zero() || self.l_star >= R::ratio(1, 6) {
            return Err(Error::InvalidInput(format!("l_star must lie in (0, 1/6), got {}", self.l_star)));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidInput("max_depth must be positive".into()));
        }
        if self.precision_bits + GUARD_BITS > R::BITS {
            return Err(Error::PrecisionExhausted { step: None });
        }
        Ok(())
    }

    pub fn wedge(&self) -> Result<Wedge<R>> {
        Wedge::new(self.a_star.clone())
    }

    /// Below this distance from the line `x = 2` the branch taken at a
    /// point is not trusted.
    pub fn floor(&self) -> R {
        R::epsilon() * R::from_i64(1 << 20)
    }

    pub fn boundary_tol(&self) -> R {
        default_boundary_tol()
    }

    /// Same parameters at another precision, asking for as many bits as
    /// the target type supports.
    pub fn convert<S: Real>(&self) -> CantorConfig<S> {
        CantorConfig {
            a_star: S::convert_from(&self.a_star),
            l_star: S::convert_from(&self.l_star),
            precision_bits: self.precision_bits.min(S::BITS.saturating_sub(GUARD_BITS)),
            max_depth: self.max_depth,
        }
    }
}
