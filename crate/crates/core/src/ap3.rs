//! Closed forms for the 3x3 arithmetic-progression spectrum `(-1, 0, 1)`
//! in the chart `pi = (3, 1, 2)`, where a Jacobi matrix is a plane point
//! `(x, y) = (beta_1, beta_2)`.
//!
//! The cone point `p0 = (2, 0)` is the matrix `P0` with a double trailing
//! block eigenvalue. Everything that touches it is evaluated in factored
//! form so nothing cancels catastrophically as orbits approach it.

use crate::charts::ChartIndex;
use crate::error::{Error, Result};
use crate::jacobi::{Branch, Spectrum, TridiagonalMatrix};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct PlanePoint<R> {
    pub x: R,
    pub y: R,
}

impl<R: Real> PlanePoint<R> {
    pub fn new(x: R, y: R) -> Self {
        PlanePoint { x, y }
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        PlanePoint { x: R::from_f64(x), y: R::from_f64(y) }
    }

    pub fn cone() -> Self {
        PlanePoint { x: R::from_i64(2), y: R::zero() }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn mirrored(&self) -> Self {
        PlanePoint { x: self.x.clone(), y: -self.y.clone() }
    }

    /// `x - 2`, the horizontal offset from the cone point.
    pub fn offset(&self) -> R {
        self.x.clone() - R::from_i64(2)
    }

    pub fn convert<S: Real>(&self) -> PlanePoint<S> {
        PlanePoint { x: S::convert_from(&self.x), y: S::convert_from(&self.y) }
    }
}

/// The chart these closed forms live in.
pub fn ap3_chart<R: Real>() -> ChartIndex<R> {
    let spectrum = Spectrum::new(vec![R::from_i64(-1), R::zero(), R::one()]).expect("simple spectrum");
    ChartIndex::from_one_based(&[3, 1, 2], spectrum).expect("valid permutation")
}

/// Default half-width of the band treated as the branch boundary.
pub fn default_boundary_tol<R: Real>() -> R {
    R::epsilon() * R::from_i64(64)
}

/// `(r1^2, r2^2)` as polynomials.
pub fn radii_squared<R: Real>(p: &PlanePoint<R>) -> (R, R) {
    let x2 = p.x.square();
    let y2 = p.y.square();
    let four = R::from_i64(4);
    let r1 = four.clone() + x2.clone() + four.clone() * x2.clone() * y2.clone();
    let r2 = four.clone() + four * y2.clone() + x2 * y2;
    (r1, r2)
}

/// `r1 = sqrt(4 + x^2 + 4x^2y^2)`, `r2 = sqrt(4 + 4y^2 + x^2y^2)`.
pub fn radii<R: Real>(p: &PlanePoint<R>) -> (R, R) {
    let (a, b) = radii_squared(p);
    (a.sqrt(), b.sqrt())
}

/// The Jacobi matrix with chart coordinates `(x, y)`, from its explicit
/// entries.
pub fn t_from_xy<R: Real>(p: &PlanePoint<R>) -> TridiagonalMatrix<R> {
    let (r1s, r2s) = radii_squared(p);
    let r1 = r1s.sqrt();
    let r2 = r2s.sqrt();
    let x2 = p.x.square();
    let four = R::from_i64(4);
    let two = R::from_i64(2);
    let denom = r1s.clone() * r2s.clone();
    let t11 = (four.clone() - x2.clone()) * r2s.clone() / denom.clone();
    let t12 = two * p.x.clone() * r2s.clone() * r2 / denom;
    let (t22, t23, t33) = bottom_block_parts(p, &r1s, &r1, &r2s);
    TridiagonalMatrix::new(vec![t11, t22, t33], vec![t12, t23]).expect("finite entries")
}

fn bottom_block_parts<R: Real>(p: &PlanePoint<R>, r1s: &R, r1: &R, r2s: &R) -> (R, R, R) {
    let x2 = p.x.square();
    let y2 = p.y.square();
    let four = R::from_i64(4);
    let two = R::from_i64(2);
    let denom = r1s.clone() * r2s.clone();
    // -4 (4 - x^2)(1 - x^2 y^4), factored.
    let t22 = -four.clone() * (two.clone() - p.x.clone()) * (two.clone() + p.x.clone())
        * (R::one() - x2.clone() * y2.square())
        / denom.clone();
    let t23 = two.clone() * p.y.clone() * r1s.clone() * r1.clone() / denom.clone();
    let t33 = y2 * (p.x.clone() - two.clone()) * (p.x.clone() + two) * r1s.clone() / denom;
    (t22, t23, t33)
}

/// Entries `(a, b, c)` of the trailing block `[[a, b], [b, c]]`.
pub fn bottom_block<R: Real>(p: &PlanePoint<R>) -> (R, R, R) {
    let (r1s, r2s) = radii_squared(p);
    let r1 = r1s.sqrt();
    bottom_block_parts(p, &r1s, &r1, &r2s)
}

/// The two nonnegative factors of the discriminant,
/// `((x+2)^2 + 8x^2y^2, (x-2)^2 + 8x^2y^2)`.
fn discriminant_factors<R: Real>(p: &PlanePoint<R>) -> (R, R) {
    let two = R::from_i64(2);
    let cross = R::from_i64(8) * p.x.square() * p.y.square();
    let plus = (p.x.clone() + two.clone()).square() + cross.clone();
    let minus = (p.x.clone() - two).square() + cross;
    (plus, minus)
}

/// Discriminant of the trailing block's characteristic polynomial, scaled
/// by `r1^4`.
pub fn discriminant<R: Real>(p: &PlanePoint<R>) -> R {
    let (a, b) = discriminant_factors(p);
    a * b
}

fn sqrt_discriminant<R: Real>(p: &PlanePoint<R>) -> R {
    let (a, b) = discriminant_factors(p);
    a.sqrt() * b.sqrt()
}

/// `(w+, w-)`, the trailing block eigenvalues, each computed without
/// cancellation: the larger-magnitude root from the quadratic formula and
/// the other from the product `w+ w- = -4x^2y^2 / r1^2`.
pub fn omegas<R: Real>(p: &PlanePoint<R>) -> (R, R) {
    let (r1s, _) = radii_squared(p);
    let two = R::from_i64(2);
    let u = (p.x.clone() - two.clone()) * (p.x.clone() + two.clone());
    let root = sqrt_discriminant(p);
    let product = -R::from_i64(4) * p.x.square() * p.y.square() / r1s.clone();
    let denom = two * r1s;
    if !u.is_sign_negative() {
        let plus = (u + root) / denom;
        if plus.is_zero() {
            return (R::zero(), R::zero());
        }
        let minus = product / plus.clone();
        (plus, minus)
    } else {
        let minus = (u - root) / denom;
        let plus = product / minus.clone();
        (plus, minus)
    }
}

pub fn omega<R: Real>(p: &PlanePoint<R>, b: Branch) -> R {
    let (plus, minus) = omegas(p);
    match b {
        Branch::Plus => plus,
        Branch::Minus => minus,
    }
}

/// `T_33 - (w+ + w-)/2`; positive where `w+` is the nearer eigenvalue.
pub fn branch_quantity<R: Real>(p: &PlanePoint<R>) -> R {
    let (r1s, r2s) = radii_squared(p);
    let two = R::from_i64(2);
    (two.clone() - p.x.clone()) * (two.clone() + p.x.clone()) * region_polynomial(p) / (two * r1s * r2s)
}

/// `4 - 4y^2 - x^2y^2 - 8x^2y^4`.
pub fn region_polynomial<R: Real>(p: &PlanePoint<R>) -> R {
    let x2 = p.x.square();
    let y2 = p.y.square();
    let four = R::from_i64(4);
    four.clone() - four * y2.clone() - x2.clone() * y2.clone() - R::from_i64(8) * x2 * y2.square()
}

/// Positive `y` on the curve `region_polynomial = 0` above `x`:
/// `Y = y^2` solves `8x^2 Y^2 + (4 + x^2) Y - 4 = 0`.
pub fn region_boundary_y<R: Real>(x: &R) -> R {
    let b = R::from_i64(4) + x.square();
    let disc = b.square() + R::from_i64(128) * x.square();
    (R::from_i64(8) / (b + disc.sqrt())).sqrt()
}

/// Which trailing eigenvalue Wilkinson's shift takes at `p`.
pub fn branch_select<R: Real>(p: &PlanePoint<R>, tol: &R) -> Result<Branch> {
    let q = branch_quantity(p);
    if q.abs() <= *tol {
        return Err(Error::OnBoundary { step: None });
    }
    Ok(if q.is_sign_negative() { Branch::Minus } else { Branch::Plus })
}

fn w_with_omega<R: Real>(p: &PlanePoint<R>, w: &R) -> PlanePoint<R> {
    let one = R::one();
    let x = (one.clone() + w.clone()) / (one.clone() - w.clone()) * p.x.clone();
    let y = w.abs() / (one + w.clone()) * p.y.clone();
    PlanePoint { x, y }
}

/// `W_b`, the step with the branch of the shift forced.
pub fn w_branch<R: Real>(p: &PlanePoint<R>, b: Branch) -> PlanePoint<R> {
    w_with_omega(p, &omega(p, b))
}

/// Wilkinson's step in the plane.
pub fn w_map<R: Real>(p: &PlanePoint<R>, tol: &R) -> Result<PlanePoint<R>> {
    if p.y.is_zero() {
        // The horizontal axis is fixed; the branch there is irrelevant.
        return Ok(p.clone());
    }
    let b = branch_select(p, tol)?;
    Ok(w_branch(p, b))
}

/// As [`w_map`], also reporting the branch used.
pub fn w_map_with_branch<R: Real>(p: &PlanePoint<R>, tol: &R) -> Result<(PlanePoint<R>, Branch)> {
    let b = branch_select(p, tol)?;
    Ok((w_branch(p, b), b))
}

/// `A + sigma P` where `A >= |P|` and `A^2 - P^2 = gap`, without cancellation.
fn signed_sum<R: Real>(a: &R, p: &R, sigma: i32, gap: &R) -> R {
    let sp = if sigma > 0 { p.clone() } else { -p.clone() };
    if sp.is_sign_negative() {
        gap.clone() / (a.clone() - sp)
    } else {
        a.clone() + sp
    }
}

/// `(dw/dx, dw/dy)` for the given branch, from the closed forms with the
/// cancelling combinations rewritten through their squared differences.
pub fn omega_partials<R: Real>(p: &PlanePoint<R>, b: Branch) -> Result<(R, R)> {
    let root = sqrt_discriminant(p);
    if root.is_zero() {
        return Err(Error::ConePoint);
    }
    let (r1s, _) = radii_squared(p);
    let r1_4 = r1s.square();
    let x2 = p.x.square();
    let y2 = p.y.square();
    let sigma = b.sign();

    let a_x = (R::one() + R::from_i64(2) * y2.clone()) * root.clone();
    let p_x = R::from_i64(-4) + x2.clone() + R::from_i64(8) * y2.clone() + R::from_i64(6) * x2.clone() * y2.clone()
        + R::from_i64(16) * x2.clone() * y2.square();
    let gap_x = R::from_i64(8) * y2.clone() * r1_4.clone();
    let sum_x = signed_sum(&a_x, &p_x, sigma, &gap_x);
    let wx = R::from_i64(8) * p.x.clone() / (r1_4.clone() * root.clone()) * sum_x;

    let two = R::from_i64(2);
    let b_y = (two.clone() - p.x.clone()) * (two + p.x.clone()) * root.clone();
    let q_y = R::from_i64(16) + R::from_i64(24) * x2.clone() + x2.square() + R::from_i64(32) * x2.clone() * y2.clone()
        + R::from_i64(8) * x2.square() * y2;
    // b_y + sigma Q has the sign of sigma since |b_y| <= Q; rewrite when
    // b_y points the other way: (b_y^2 - Q^2) / (b_y - sigma Q).
    let sq = if sigma > 0 { q_y.clone() } else { -q_y.clone() };
    let opposite = if sigma > 0 { b_y.is_sign_negative() } else { !b_y.is_sign_negative() && !b_y.is_zero() };
    let sum_y = if opposite {
        -R::from_i64(64) * x2.clone() * r1_4.clone() / (b_y - sq)
    } else {
        b_y + sq
    };
    let wy = R::from_i64(4) * x2 * p.y.clone() / (r1_4 * root) * sum_y;
    Ok((wx, wy))
}

/// Jacobian of `W_b` and its determinant (the latter from its own closed
/// form, not from the matrix entries).
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian<R> {
    pub matrix: [[R; 2]; 2],
    pub det: R,
}

impl<R: Real> Jacobian<R> {
    pub fn det_from_entries(&self) -> R {
        let m = &self.matrix;
        m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone()
    }
}

pub fn jacobian_w<R: Real>(p: &PlanePoint<R>, b: Branch) -> Result<Jacobian<R>> {
    let (wx, wy) = omega_partials(p, b)?;
    let w = omega(p, b);
    let one = R::one();
    let two = R::from_i64(2);
    let minus = one.clone() - w.clone();
    let plus = one.clone() + w.clone();
    let s = if b == Branch::Plus { one.clone() } else { -one.clone() };
    let m00 = two.clone() * wx.clone() / minus.square() * p.x.clone() + plus.clone() / minus.clone();
    let m01 = two.clone() * wy.clone() / minus.square() * p.x.clone();
    let m10 = s.clone() * wx.clone() / plus.square() * p.y.clone();
    let m11 = s.clone() * (wy.clone() / plus.square() * p.y.clone() + w.clone() / plus.clone());
    let det = s / (one - w.square())
        * (two * wx * w.clone() * p.x.clone() / minus + wy * p.y.clone() + w.clone() * plus);
    Ok(Jacobian { matrix: [[m00, m01], [m10, m11]], det })
}

/// `y` on the arc that `W` maps onto the vertical line `x = 2`.
/// `sign` picks the upper (`+1`) or lower (`-1`) arc; `x > 0`.
pub fn preimage_arc<R: Real>(x: &R, sign: i32) -> R {
    debug_assert!(!x.is_sign_negative() && !x.is_zero(), "preimage arc needs x > 0");
    let two = R::from_i64(2);
    let inner = x.clone() * (x.square() + two.clone() * x.clone() + R::from_i64(4));
    let y = (x.clone() - two) * inner.sqrt() / (R::from_i64(4) * x.square());
    if sign < 0 {
        -y
    } else {
        y
    }
}

pub fn in_region_r<R: Real>(p: &PlanePoint<R>) -> bool {
    !p.x.is_sign_negative() && !p.x.is_zero() && !region_polynomial(p).is_sign_negative()
}

/// `V_a = {|y| <= a, |y| >= |x - 2| / 10}`, `0 < a <= 1/10`.
#[derive(Clone, Debug, PartialEq)]
pub struct Wedge<R> {
    a: R,
}

/// Where a point sits relative to a wedge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WedgeSide {
    Inside,
    /// Left of the NW/SW faces (`x < 2 - 10|y|`), height within the wedge.
    Left,
    /// Right of the NE/SE faces.
    Right,
    /// Above the top (or below the bottom) of the wedge.
    Beyond,
}

/// A face of the upper half of a wedge, mirrored for `y < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WedgeFace {
    NorthWest,
    NorthEast,
    Top,
}

impl<R: Real> Wedge<R> {
    pub fn new(a: R) -> Result<Self> {
        if a.is_sign_negative() || a.is_zero() || a > R::ratio(1, 10) {
            return Err(Error::InvalidInput(format!("wedge height must lie in (0, 1/10], got {a}")));
        }
        Ok(Wedge { a })
    }

    pub fn height(&self) -> &R {
        &self.a
    }

    pub fn side(&self, p: &PlanePoint<R>) -> WedgeSide {
        let ay = p.y.abs();
        if ay > self.a {
            return WedgeSide::Beyond;
        }
        let reach = ay * R::from_i64(10);
        let off = p.offset();
        if off.abs() <= reach {
            WedgeSide::Inside
        } else if off.is_sign_negative() {
            WedgeSide::Left
        } else {
            WedgeSide::Right
        }
    }

    pub fn contains(&self, p: &PlanePoint<R>) -> bool {
        self.side(p) == WedgeSide::Inside
    }

    /// The `x` range `[2 - 10|y|, 2 + 10|y|]` of the wedge at height `y`.
    pub fn slice(&self, y: &R) -> (R, R) {
        let reach = y.abs() * R::from_i64(10);
        let two = R::from_i64(2);
        (two.clone() - reach.clone(), two + reach)
    }

    /// True when `p` lies within `tol` of the given face.
    pub fn on_face(&self, p: &PlanePoint<R>, face: WedgeFace, tol: &R) -> bool {
        let ay = p.y.abs();
        let (lo, hi) = self.slice(&p.y);
        match face {
            WedgeFace::NorthWest => (p.x.clone() - lo).abs() <= *tol && ay <= self.a.clone() + tol.clone(),
            WedgeFace::NorthEast => (p.x.clone() - hi).abs() <= *tol && ay <= self.a.clone() + tol.clone(),
            WedgeFace::Top => {
                let (tlo, thi) = self.slice(&self.a);
                (ay - self.a.clone()).abs() <= *tol && p.x >= tlo && p.x <= thi
            }
        }
    }
}

pub fn in_wedge<R: Real>(p: &PlanePoint<R>, w: &Wedge<R>) -> bool {
    w.contains(p)
}
