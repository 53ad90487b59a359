use super::CantorConfig;
use crate::ap3::{w_branch, PlanePoint, Wedge, WedgeSide};
use crate::error::{Error, Result};
use crate::jacobi::Branch;
use crate::scalar::Real;

/// Fewest samples an iterated arc is resampled to.
const MIN_SAMPLES: usize = 64;

/// A piecewise-linear graph `y = g(x)` with slopes bounded by
/// `lipschitz_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatArc<R> {
    samples: Vec<PlanePoint<R>>,
    lipschitz_bound: R,
}

impl<R: Real> FlatArc<R> {
    pub fn new(samples: Vec<PlanePoint<R>>, lipschitz_bound: R) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("an arc needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| w[1].x <= w[0].x) {
            return Err(Error::InvalidInput("arc samples must be strictly increasing in x".into()));
        }
        let arc = FlatArc { samples, lipschitz_bound };
        let slope = arc.max_slope();
        if slope > arc.lipschitz_bound {
            return Err(Error::FlatnessViolated { slope: slope.to_f64() });
        }
        Ok(arc)
    }

    pub fn samples(&self) -> &[PlanePoint<R>] {
        &self.samples
    }

    pub fn lipschitz_bound(&self) -> &R {
        &self.lipschitz_bound
    }

    pub fn max_slope(&self) -> R {
        self.samples
            .windows(2)
            .map(|w| ((w[1].y.clone() - w[0].y.clone()) / (w[1].x.clone() - w[0].x.clone())).abs())
            .fold(R::zero(), R::max_of)
    }

    pub fn min_abs_y(&self) -> R {
        let first = self.samples[0].y.abs();
        self.samples.iter().map(|p| p.y.abs()).fold(first, R::min_of)
    }

    pub fn max_abs_y(&self) -> R {
        self.samples.iter().map(|p| p.y.abs()).fold(R::zero(), R::max_of)
    }

    pub fn x_range(&self) -> (R, R) {
        (self.samples[0].x.clone(), self.samples[self.samples.len() - 1].x.clone())
    }

    pub fn in_wedge(&self, w: &Wedge<R>) -> bool {
        self.samples.iter().all(|p| w.contains(p))
    }

    /// The point of the arc above `x`, which must lie in the arc's range.
    pub fn point_at(&self, x: &R) -> PlanePoint<R> {
        let i = self.samples.partition_point(|p| p.x <= *x).clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let t = (x.clone() - a.x.clone()) / (b.x.clone() - a.x.clone());
        PlanePoint::new(x.clone(), a.y.clone() + t * (b.y.clone() - a.y.clone()))
    }
}

/// Horizontal segment at height `y` across the wedge.
pub fn horizontal_arc<R: Real>(y: &R, lipschitz_bound: R, n: usize) -> Result<FlatArc<R>> {
    let reach = y.abs() * R::from_i64(10);
    let lo = R::from_i64(2) - reach.clone();
    let step = reach * R::from_i64(2) / R::from_i64((n.max(2) - 1) as i64);
    let samples = (0..n.max(2)).map(|i| PlanePoint::new(lo.clone() + step.clone() * R::from_i64(i as i64), y.clone())).collect();
    FlatArc::new(samples, lipschitz_bound)
}

/// The part of an arc taken into the wedge by one branch, and its image.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcImage<R> {
    pub preimage: FlatArc<R>,
    pub image: FlatArc<R>,
}

fn bisect_edge<R: Real>(mut outside: R, mut inside: R, tol: &R, is_inside: &impl Fn(&R) -> bool) -> R {
    while (inside.clone() - outside.clone()).abs() > *tol {
        let m = (inside.clone() + outside.clone()) / R::from_i64(2);
        if is_inside(&m) {
            inside = m;
        } else {
            outside = m;
        }
    }
    inside
}

/// Maps the `b` side of `arc` by `W_b` and keeps the part that lands in the
/// wedge, resampled to at least 64 points.
pub fn arc_image<R: Real>(arc: &FlatArc<R>, b: Branch, cfg: &CantorConfig<R>) -> Result<ArcImage<R>> {
    if arc.samples.iter().all(|p| p.y.is_zero()) {
        return Ok(ArcImage { preimage: arc.clone(), image: arc.clone() });
    }
    let wedge = cfg.wedge()?;
    let two = R::from_i64(2);
    let (first, last) = arc.x_range();
    let (lo, hi) = match b {
        Branch::Plus => (first, R::min_of(last, two)),
        Branch::Minus => (R::max_of(first, two), last),
    };
    if lo >= hi {
        return Err(Error::InvalidInput(format!("arc has no part on the {b} side")));
    }
    let image_of = |x: &R| w_branch(&arc.point_at(x), b);
    let is_inside = |x: &R| wedge.contains(&image_of(x));
    let width = hi.clone() - lo.clone();
    // The image moves monotonically across the wedge, so its side says
    // which way to go.
    let (mut left, mut right) = (lo.clone(), hi.clone());
    let seed = loop {
        let m = (left.clone() + right.clone()) / R::from_i64(2);
        match wedge.side(&image_of(&m)) {
            WedgeSide::Inside => break m,
            WedgeSide::Left => left = m,
            WedgeSide::Right => right = m,
            WedgeSide::Beyond => return Err(Error::InvalidInput("arc image lies above the wedge".into())),
        }
        if right.clone() - left.clone() <= cfg.floor() {
            return Err(Error::InvalidInput("arc image misses the wedge".into()));
        }
    };
    let tol = R::max_of(width.clone() * R::from_f64(1e-14), cfg.floor());
    let a = if is_inside(&lo) { lo.clone() } else { bisect_edge(lo.clone(), seed.clone(), &tol, &is_inside) };
    let z = if is_inside(&hi) { hi.clone() } else { bisect_edge(hi.clone(), seed, &tol, &is_inside) };
    if a >= z {
        return Err(Error::InvalidInput("arc image meets the wedge in a single point".into()));
    }
    let mut count = arc.samples.len().max(MIN_SAMPLES);
    let mut last_err = None;
    for _ in 0..4 {
        let step = (z.clone() - a.clone()) / R::from_i64((count - 1) as i64);
        let xs: Vec<R> = (0..count).map(|i| a.clone() + step.clone() * R::from_i64(i as i64)).collect();
        let pre: Vec<PlanePoint<R>> = xs.iter().map(|x| arc.point_at(x)).collect();
        let img: Vec<PlanePoint<R>> = pre.iter().map(|p| w_branch(p, b)).collect();
        match FlatArc::new(img, cfg.l_star.clone()) {
            Ok(image) => {
                let preimage = FlatArc { samples: pre, lipschitz_bound: arc.lipschitz_bound.clone() };
                return Ok(ArcImage { preimage, image });
            }
            Err(e @ Error::FlatnessViolated { .. }) => {
                last_err = Some(e);
                count *= 2;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::FlatnessViolated { slope: f64::NAN }))
}

pub fn arc_iterate<R: Real>(arc: &FlatArc<R>, b: Branch, cfg: &CantorConfig<R>) -> Result<FlatArc<R>> {
    Ok(arc_image(arc, b, cfg)?.image)
}

/// Samples the trapping properties the constructions rely on: horizontal
/// arcs across the wedge at several heights map, under either branch, to
/// flat arcs at least four times lower.
pub fn check_wedge_lemmas<R: Real>(cfg: &CantorConfig<R>) -> Result<()> {
    cfg.validate()?;
    for div in [1i64, 4, 32, 1024] {
        let h = cfg.a_star.clone() / R::from_i64(div);
        let arc = horizontal_arc(&h, cfg.l_star.clone(), MIN_SAMPLES)?;
        for b in [Branch::Plus, Branch::Minus] {
            let image = arc_iterate(&arc, b, cfg)?;
            if image.max_abs_y() * R::from_i64(4) >= arc.min_abs_y() {
                return Err(Error::InvalidInput(format!(
                    "wedge height {} too large: branch {b} pushes height {h} only to {}",
                    cfg.a_star,
                    image.max_abs_y()
                )));
            }
        }
    }
    Ok(())
}
