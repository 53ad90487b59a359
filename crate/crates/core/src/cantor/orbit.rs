use super::{CantorConfig, SignSequence};
use crate::ap3::{branch_select, w_branch, w_map, PlanePoint, Wedge};
use crate::error::{Error, Result};
use crate::jacobi::Branch;
use crate::scalar::Real;

/// How a plane orbit ended.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExitInfo {
    /// First index whose point lies outside the wedge.
    pub wedge_exit: Option<usize>,
    /// Index at which the branch could no longer be resolved.
    pub floor_step: Option<usize>,
    /// Number of steps taken.
    pub steps: usize,
}

/// `z_0, ..., z_m` under Wilkinson's step, with the branch used at each step.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneOrbit<R> {
    pub points: Vec<PlanePoint<R>>,
    pub branches: Vec<Branch>,
    pub exit: ExitInfo,
}

impl<R: Real> PlaneOrbit<R> {
    /// Points up to (not including) the first one outside the wedge.
    pub fn wedge_prefix(&self) -> &[PlanePoint<R>] {
        let end = self.exit.wedge_exit.unwrap_or(self.points.len());
        &self.points[..end]
    }
}

pub fn plane_orbit<R: Real>(z0: &PlanePoint<R>, max_k: usize, cfg: &CantorConfig<R>) -> Result<PlaneOrbit<R>> {
    let wedge = cfg.wedge()?;
    let floor = cfg.floor();
    let tol = cfg.boundary_tol();
    let mut points = vec![z0.clone()];
    let mut branches = Vec::new();
    let mut exit = ExitInfo::default();
    for k in 0..max_k {
        let z = &points[k];
        if !z.is_finite() {
            return Err(Error::PrecisionExhausted { step: Some(k) });
        }
        if exit.wedge_exit.is_none() && !wedge.contains(z) {
            exit.wedge_exit = Some(k);
        }
        let b = if z.y.is_zero() {
            if z.x < R::from_i64(2) {
                Branch::Plus
            } else {
                Branch::Minus
            }
        } else {
            if z.offset().abs() <= floor {
                if z.y.abs() > floor {
                    return Err(Error::OnBoundary { step: Some(k) });
                }
                exit.floor_step = Some(k);
                break;
            }
            branch_select(z, &tol).map_err(|e| e.at_step(k))?
        };
        let next = if z.y.is_zero() { z.clone() } else { w_branch(z, b) };
        branches.push(b);
        points.push(next);
        exit.steps = k + 1;
    }
    if exit.wedge_exit.is_none() && exit.floor_step.is_none() {
        if let Some(last) = points.last() {
            if !wedge.contains(last) {
                exit.wedge_exit = Some(points.len() - 1);
            }
        }
    }
    Ok(PlaneOrbit { points, branches, exit })
}

/// The itinerary `s_k = +1` iff `z_k` lies on the `omega_+` side.
pub fn realized_sign_sequence<R: Real>(
    z0: &PlanePoint<R>,
    max_k: usize,
    cfg: &CantorConfig<R>,
) -> Result<(SignSequence, ExitInfo)> {
    let orbit = plane_orbit(z0, max_k, cfg)?;
    if orbit.branches.is_empty() {
        return Err(match orbit.exit.floor_step {
            Some(k) => Error::PrecisionExhausted { step: Some(k) },
            None => Error::InvalidInput("no steps requested".into()),
        });
    }
    Ok((SignSequence::finite(orbit.branches)?, orbit.exit))
}

/// True iff a point outside the wedge (and no higher than it) is mapped
/// outside the wedge again.
pub fn wedge_escape_check<R: Real>(p: &PlanePoint<R>, w: &Wedge<R>) -> Result<bool> {
    if w.contains(p) {
        return Err(Error::InvalidInput("point lies inside the wedge".into()));
    }
    if p.y.abs() > *w.height() {
        return Err(Error::InvalidInput("point lies above the wedge".into()));
    }
    if !crate::ap3::in_region_r(p) {
        return Err(Error::InvalidInput("point lies outside the region R".into()));
    }
    let image = w_map(p, &crate::ap3::default_boundary_tol())?;
    Ok(!w.contains(&image))
}
