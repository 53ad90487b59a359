use super::{CantorConfig, SignSequence};
use crate::ap3::{branch_select, w_branch, PlanePoint, Wedge};
use crate::batch;
use crate::error::{Error, Result};
use crate::jacobi::Branch;
use crate::scalar::{Big, Real};

/// Slice endpoints are resolved to this fraction of the interval width.
const SLICE_REL_TOL: f64 = 1e-9;

/// One interval of a horizontal slice through the Cantor set: the points
/// whose first `prefix.len()` steps take the listed branches and stay in
/// the wedge.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceInterval<R> {
    pub prefix: Vec<Branch>,
    pub lo: R,
    pub hi: R,
}

impl<R: Real> SliceInterval<R> {
    pub fn width(&self) -> R {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: &R) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    pub fn label(&self) -> String {
        self.prefix.iter().map(|b| b.symbol()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Left,
    Right,
    Inside,
    /// Orbit reached the precision floor at this step.
    Floor(usize),
    /// The itinerary ran out of symbols at this step.
    Exhausted(usize),
}

struct Classifier<'a, R> {
    y0: &'a R,
    wedge: Wedge<R>,
    floor: R,
    tol: R,
}

impl<'a, R: Real> Classifier<'a, R> {
    fn new(y0: &'a R, cfg: &CantorConfig<R>) -> Result<Self> {
        Ok(Classifier { y0, wedge: cfg.wedge()?, floor: cfg.floor(), tol: cfg.boundary_tol() })
    }

    /// Where `x` sits relative to the points realizing `symbol(0..steps)`.
    /// Each branch map moves points monotonically in `x`, so the first
    /// deviation from the itinerary tells the side.
    fn verdict(&self, x: &R, steps: usize, symbol: impl Fn(usize) -> Option<Branch>) -> Verdict {
        let mut z = PlanePoint::new(x.clone(), self.y0.clone());
        for k in 0..=steps {
            if !self.wedge.contains(&z) {
                return if z.x < R::from_i64(2) { Verdict::Left } else { Verdict::Right };
            }
            if k == steps {
                return Verdict::Inside;
            }
            let Some(want) = symbol(k) else { return Verdict::Exhausted(k) };
            if z.offset().abs() <= self.floor {
                return Verdict::Floor(k);
            }
            let Ok(b) = branch_select(&z, &self.tol) else { return Verdict::Floor(k) };
            if b != want {
                return if want == Branch::Plus { Verdict::Right } else { Verdict::Left };
            }
            z = w_branch(&z, b);
        }
        Verdict::Inside
    }
}

fn mid<R: Real>(a: &R, b: &R) -> R {
    (a.clone() + b.clone()) / R::from_i64(2)
}

fn wedge_slice<R: Real>(y0: &R) -> (R, R) {
    let reach = y0.abs() * R::from_i64(10);
    (R::from_i64(2) - reach.clone(), R::from_i64(2) + reach)
}

fn check_height<R: Real>(y0: &R, cfg: &CantorConfig<R>) -> Result<()> {
    cfg.validate()?;
    if y0.abs() > cfg.a_star {
        return Err(Error::InvalidInput(format!("slice height {y0} exceeds the wedge height")));
    }
    Ok(())
}

/// A bracket `[lo, hi]` of width at most `2^-precision_bits` around the
/// slice point with itinerary `s`, by bisection on realized itineraries.
/// `start` narrows the initial bracket; it is checked and discarded if it
/// does not straddle the point.
pub fn f_s_bracket<R: Real>(
    s: &SignSequence,
    y0: &R,
    cfg: &CantorConfig<R>,
    start: Option<(R, R)>,
) -> Result<(R, R)> {
    check_height(y0, cfg)?;
    if y0.is_zero() {
        return Ok((R::from_i64(2), R::from_i64(2)));
    }
    let classifier = Classifier::new(y0, cfg)?;
    let steps = cfg.max_depth;
    let verdict = |x: &R| classifier.verdict(x, steps, |k| s.get(k));
    let (mut lo, mut hi) = wedge_slice(y0);
    if let Some((a, b)) = start {
        if verdict(&a) == Verdict::Left && verdict(&b) == Verdict::Right {
            lo = a;
            hi = b;
        }
    }
    let target = R::from_i64(4) / R::from_i64(2).powi(cfg.precision_bits);
    let undecided = |v: Verdict| match v {
        Verdict::Floor(k) => Error::PrecisionExhausted { step: Some(k) },
        Verdict::Exhausted(k) => Error::DepthInsufficient { needed: k },
        _ => Error::NonMonotoneItinerary,
    };
    while hi.clone() - lo.clone() > target {
        let m = mid(&lo, &hi);
        if m <= lo || m >= hi {
            return Err(Error::PrecisionExhausted { step: None });
        }
        match verdict(&m) {
            Verdict::Left => lo = m,
            Verdict::Right => hi = m,
            Verdict::Inside => return Err(Error::DepthInsufficient { needed: steps }),
            v => {
                // The midpoint follows the itinerary as far as it can be
                // read; probe the quarter points instead.
                let q1 = mid(&lo, &m);
                let q3 = mid(&m, &hi);
                let (v1, v3) = (verdict(&q1), verdict(&q3));
                let mut progressed = false;
                match v1 {
                    Verdict::Left => {
                        lo = q1;
                        progressed = true;
                    }
                    Verdict::Right => {
                        hi = q1;
                        progressed = true;
                    }
                    _ => {}
                }
                match v3 {
                    Verdict::Right if q3 < hi => {
                        hi = q3;
                        progressed = true;
                    }
                    Verdict::Left if q3 > lo => {
                        lo = q3;
                        progressed = true;
                    }
                    _ => {}
                }
                if !progressed {
                    return Err(undecided(v));
                }
            }
        }
    }
    Ok((lo, hi))
}

fn lower_bracket<R: Real, S: Real>(s: &SignSequence, y0: &R, cfg: &CantorConfig<R>) -> Result<Option<(R, R)>> {
    let cs = cfg.convert::<S>();
    let (lo, hi) = f_s_bracket_warm::<S>(s, &S::convert_from(y0), &cs)?;
    let width = hi.clone() - lo.clone();
    let pad = S::max_of(width, S::epsilon() * S::from_i64(1 << 10));
    Ok(Some((R::convert_from(&(lo - pad.clone())), R::convert_from(&(hi + pad)))))
}

/// Seeds the bisection with a bracket found at half the precision.
fn warm_start<R: Real>(s: &SignSequence, y0: &R, cfg: &CantorConfig<R>) -> Result<Option<(R, R)>> {
    let seed = match R::BITS {
        b if b >= 16384 => lower_bracket::<R, Big<8192>>(s, y0, cfg),
        b if b >= 8192 => lower_bracket::<R, Big<4096>>(s, y0, cfg),
        b if b >= 4096 => lower_bracket::<R, Big<2048>>(s, y0, cfg),
        b if b >= 2048 => lower_bracket::<R, Big<1024>>(s, y0, cfg),
        b if b >= 1024 => lower_bracket::<R, Big<512>>(s, y0, cfg),
        _ => Ok(None),
    };
    // A failed seed only costs time.
    Ok(seed.unwrap_or(None))
}

fn f_s_bracket_warm<R: Real>(s: &SignSequence, y0: &R, cfg: &CantorConfig<R>) -> Result<(R, R)> {
    check_height(y0, cfg)?;
    let start = if cfg.precision_bits > R::BITS / 2 { warm_start(s, y0, cfg)? } else { None };
    f_s_bracket(s, y0, cfg, start)
}

/// `f_s(y0)`: the `x` with `(x, y0)` in the Cantor set and itinerary `s`,
/// to `cfg.precision_bits` bits.
pub fn f_s_solve<R: Real>(s: &SignSequence, y0: &R, cfg: &CantorConfig<R>) -> Result<R> {
    let (lo, hi) = f_s_bracket_warm(s, y0, cfg)?;
    Ok(mid(&lo, &hi))
}

/// The sub-interval of `parent` realizing `prefix` (whose last symbol is
/// the new one).
pub fn child_interval<R: Real>(prefix: &[Branch], parent: (&R, &R), y0: &R, cfg: &CantorConfig<R>) -> Result<(R, R)> {
    let classifier = Classifier::new(y0, cfg)?;
    let steps = prefix.len();
    let verdict = |x: &R| classifier.verdict(x, steps, |k| prefix.get(k).copied());
    let floor = cfg.floor();
    let fail = |v: Verdict| match v {
        Verdict::Floor(k) => Error::PrecisionExhausted { step: Some(k) },
        Verdict::Exhausted(k) => Error::DepthInsufficient { needed: k },
        _ => Error::NonMonotoneItinerary,
    };
    let (mut lo, mut hi) = (parent.0.clone(), parent.1.clone());
    let inside = loop {
        if hi.clone() - lo.clone() <= floor {
            return Err(Error::PrecisionExhausted { step: Some(steps) });
        }
        let m = mid(&lo, &hi);
        // A midpoint whose orbit lands on x = 2 says nothing; nudge it.
        let candidates = [m.clone(), mid(&lo, &m), mid(&m, &hi)];
        let mut last = None;
        let found = candidates.into_iter().find_map(|c| match verdict(&c) {
            v @ (Verdict::Floor(_) | Verdict::Exhausted(_)) => {
                last = Some(v);
                None
            }
            v => Some((c, v)),
        });
        match found {
            Some((c, Verdict::Inside)) => break c,
            Some((c, Verdict::Left)) => lo = c,
            Some((c, _)) => hi = c,
            None => return Err(fail(last.expect("a verdict was recorded"))),
        }
    };
    let (mut l_out, mut l_in) = (lo, inside.clone());
    let (mut r_in, mut r_out) = (inside, hi);
    let rel = R::from_f64(SLICE_REL_TOL);
    loop {
        let span = r_in.clone() - l_in.clone();
        let scale = if span.is_zero() { r_out.clone() - l_out.clone() } else { span };
        let tol = R::max_of(scale * rel.clone(), floor.clone());
        let mut done = true;
        if l_in.clone() - l_out.clone() > tol {
            done = false;
            let m = mid(&l_out, &l_in);
            match verdict(&m) {
                Verdict::Inside => l_in = m,
                Verdict::Left => l_out = m,
                v => return Err(fail(v)),
            }
        }
        if r_out.clone() - r_in.clone() > tol {
            done = false;
            let m = mid(&r_in, &r_out);
            match verdict(&m) {
                Verdict::Inside => r_in = m,
                Verdict::Right => r_out = m,
                v => return Err(fail(v)),
            }
        }
        if done {
            break;
        }
    }
    Ok((mid(&l_out, &l_in), mid(&r_in, &r_out)))
}

/// The `2^depth` intervals of the slice at height `y0`, in left-to-right
/// order; that order is lexicographic in the prefixes with `+` first.
pub fn cantor_slice<R: Real>(y0: &R, depth: usize, cfg: &CantorConfig<R>) -> Result<Vec<SliceInterval<R>>> {
    check_height(y0, cfg)?;
    if depth > cfg.max_depth {
        return Err(Error::DepthInsufficient { needed: depth });
    }
    let (lo, hi) = wedge_slice(y0);
    let mut level = vec![SliceInterval { prefix: Vec::new(), lo, hi }];
    for _ in 0..depth {
        let jobs: Vec<(usize, Branch)> =
            (0..level.len()).flat_map(|i| [(i, Branch::Plus), (i, Branch::Minus)]).collect();
        let children = batch::map(&jobs, |&(i, b)| {
            let parent = &level[i];
            let mut prefix = parent.prefix.clone();
            prefix.push(b);
            let (lo, hi) = child_interval(&prefix, (&parent.lo, &parent.hi), y0, cfg)?;
            Ok(SliceInterval { prefix, lo, hi })
        });
        level = children.into_iter().collect::<Result<Vec<_>>>()?;
    }
    Ok(level)
}
