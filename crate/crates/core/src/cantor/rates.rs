use crate::ap3::PlanePoint;
use crate::error::{Error, Result};
use crate::jacobi::TridiagonalMatrix;
use crate::scalar::Real;

/// Convergence regime read off a fitted exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RateClass {
    Quadratic,
    Cubic,
    Indeterminate,
}

impl RateClass {
    pub fn from_exponent(p: f64) -> Self {
        if (1.7..=2.3).contains(&p) {
            RateClass::Quadratic
        } else if (2.7..=3.3).contains(&p) {
            RateClass::Cubic
        } else {
            RateClass::Indeterminate
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateClass::Quadratic => "quadratic",
            RateClass::Cubic => "cubic",
            RateClass::Indeterminate => "indeterminate",
        }
    }
}

/// Fit of `|y_{k+1}| ~ C |y_k|^p` over an orbit tail.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub exponent: f64,
    /// Extremes of `|y_{k+1}| / |y_k|^p` over the tail. These can leave the
    /// `f64` range; the `log10` fields cannot.
    pub c_low: f64,
    pub c_high: f64,
    pub log10_c_low: f64,
    pub log10_c_high: f64,
    pub classification: RateClass,
    /// Number of `(y_k, y_{k+1})` pairs in the fit.
    pub iterations_used: usize,
}

/// Which magnitudes count as the tail: `log10 |y_k|` strictly between
/// `floor_log10` and `upper_log10`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateWindow {
    pub upper_log10: f64,
    pub floor_log10: f64,
    pub min_pairs: usize,
}

impl RateWindow {
    /// Plane orbits keep the small coordinate to full relative accuracy, so
    /// only the upper cut applies.
    pub fn plane() -> Self {
        RateWindow { upper_log10: -2.0, floor_log10: f64::NEG_INFINITY, min_pairs: 3 }
    }

    /// Matrix orbits: the next bottom entry is accurate only while it stays
    /// well above `eps` times the current one, i.e. for `|b|^2 >> eps`.
    /// From `|b| < 10^-1.5` on, AP-free orbits are already in their
    /// asymptotic regime, and starting there keeps three pairs at 512 bits.
    pub fn matrix<R: Real>() -> Self {
        RateWindow { upper_log10: -1.5, floor_log10: 0.5 * R::epsilon().log10_abs() + 3.0, min_pairs: 3 }
    }
}

/// A point of an orbit whose size measures the distance to the limit.
pub trait OrbitSample {
    fn magnitude_log10(&self) -> f64;
}

impl OrbitSample for f64 {
    fn magnitude_log10(&self) -> f64 {
        self.log10_abs()
    }
}

impl<const BITS: u32> OrbitSample for crate::scalar::Big<BITS> {
    fn magnitude_log10(&self) -> f64 {
        self.log10_abs()
    }
}

impl<R: Real> OrbitSample for PlanePoint<R> {
    fn magnitude_log10(&self) -> f64 {
        self.y.log10_abs()
    }
}

impl<R: Real> OrbitSample for TridiagonalMatrix<R> {
    fn magnitude_log10(&self) -> f64 {
        self.bottom_entry().log10_abs()
    }
}

fn tail_pairs<S: OrbitSample>(orbit: &[S], window: &RateWindow) -> Vec<(f64, f64)> {
    let logs: Vec<f64> = orbit.iter().map(|s| s.magnitude_log10()).collect();
    logs.windows(2)
        .filter(|w| w[0] < window.upper_log10 && w[0] > window.floor_log10 && w[1].is_finite())
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Least-squares slope of `log|y_{k+1}|` against `log|y_k|` over the tail.
pub fn rate_classify<S: OrbitSample>(orbit: &[S], window: &RateWindow) -> Result<RateReport> {
    let pairs = tail_pairs(orbit, window);
    if pairs.len() < window.min_pairs {
        return Err(Error::InsufficientTail { usable: pairs.len() });
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientTail { usable: 1 });
    }
    let exponent = sxy / sxx;
    let (lo, hi) = band(&pairs, exponent);
    Ok(RateReport {
        exponent,
        c_low: 10f64.powf(lo),
        c_high: 10f64.powf(hi),
        log10_c_low: lo,
        log10_c_high: hi,
        classification: RateClass::from_exponent(exponent),
        iterations_used: pairs.len(),
    })
}

fn band(pairs: &[(f64, f64)], p: f64) -> (f64, f64) {
    pairs.iter().map(|(a, b)| b - p * a).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// `(log10 min, log10 max)` of `|y_{k+1}| / |y_k|^p` over the tail, with
/// the number of pairs.
pub fn ratio_band<S: OrbitSample>(orbit: &[S], window: &RateWindow, p: f64) -> (f64, f64, usize) {
    let pairs = tail_pairs(orbit, window);
    let (lo, hi) = band(&pairs, p);
    (lo, hi, pairs.len())
}
