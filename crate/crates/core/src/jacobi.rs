//! Symmetric tridiagonal (Jacobi) matrices and the Wilkinson-shift QR step.
//!
//! The step is the explicit one: factor `T - wI = QR` with a chain of
//! Givens rotations, `R` having a positive diagonal, and return
//! `RQ + wI = Q^T T Q`. No bulge chasing.

use std::fmt;

use crate::dense::{symmetric_eigen, Mat};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric tridiagonal matrix, off-diagonal stored once.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalMatrix<R> {
    diag: Vec<R>,
    offdiag: Vec<R>,
}

impl<R: Real> TridiagonalMatrix<R> {
    pub fn new(diag: Vec<R>, offdiag: Vec<R>) -> Result<Self> {
        if diag.len() < 2 {
            return Err(Error::InvalidInput(format!("order must be at least 2, got {}", diag.len())));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidInput(format!(
                "order {} needs {} off-diagonal entries, got {}",
                diag.len(),
                diag.len() - 1,
                offdiag.len()
            )));
        }
        if !diag.iter().chain(&offdiag).all(Real::is_finite) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(TridiagonalMatrix { diag, offdiag })
    }

    pub fn from_f64(diag: &[f64], offdiag: &[f64]) -> Result<Self> {
        Self::new(
            diag.iter().map(|&v| R::from_f64(v)).collect(),
            offdiag.iter().map(|&v| R::from_f64(v)).collect(),
        )
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(values: &[R]) -> Result<Self> {
        Self::new(values.to_vec(), vec![R::zero(); values.len().saturating_sub(1)])
    }

    /// Reads the diagonal and the first subdiagonal of a square matrix.
    /// Entries outside the band are ignored.
    pub fn from_dense(m: &Mat<R>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        let n = m.rows();
        let diag = (0..n).map(|i| m[(i, i)].clone()).collect();
        let offdiag = (0..n.saturating_sub(1)).map(|i| m[(i + 1, i)].clone()).collect();
        Self::new(diag, offdiag)
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[R] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[R] {
        &self.offdiag
    }

    /// `T[n, n-1]`, the entry Wilkinson's iteration drives to zero.
    pub fn bottom_entry(&self) -> &R {
        self.offdiag.last().expect("order >= 2")
    }

    pub fn corner(&self) -> &R {
        self.diag.last().expect("order >= 2")
    }

    pub fn to_dense(&self) -> Mat<R> {
        let n = self.order();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i].clone();
        }
        for (i, b) in self.offdiag.iter().enumerate() {
            m[(i + 1, i)] = b.clone();
            m[(i, i + 1)] = b.clone();
        }
        m
    }

    pub fn is_diagonal(&self) -> bool {
        self.offdiag.iter().all(Real::is_zero)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> R {
        self.diag.iter().chain(&self.offdiag).fold(R::zero(), |m, v| R::max_of(m, v.abs()))
    }

    pub fn frobenius_norm(&self) -> R {
        let mut acc = R::zero();
        for v in &self.diag {
            acc += v.square();
        }
        for v in &self.offdiag {
            acc += v.square() * R::from_i64(2);
        }
        acc.sqrt()
    }

    /// Width of the Gershgorin enclosure of the spectrum. An upper bound on
    /// the spectral diameter that costs no eigen-solve.
    pub fn gershgorin_width(&self) -> R {
        let n = self.order();
        let mut lo: Option<R> = None;
        let mut hi: Option<R> = None;
        for i in 0..n {
            let mut radius = R::zero();
            if i > 0 {
                radius += self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                radius += self.offdiag[i].abs();
            }
            let l = self.diag[i].clone() - radius.clone();
            let h = self.diag[i].clone() + radius;
            lo = Some(match lo {
                Some(v) => R::min_of(v, l),
                None => l,
            });
            hi = Some(match hi {
                Some(v) => R::max_of(v, h),
                None => h,
            });
        }
        hi.expect("nonempty") - lo.expect("nonempty")
    }

    /// Ascending eigenvalues by a dense symmetric solve.
    pub fn eigenvalues(&self) -> Vec<R> {
        symmetric_eigen(&self.to_dense()).0
    }

    /// Number of eigenvalues strictly below `x` (Sturm count of the
    /// `LDL^T` pivots of `T - xI`).
    pub fn count_below(&self, x: &R) -> usize {
        let tiny = R::epsilon() * R::max_of(self.max_abs(), R::from_f64(f64::MIN_POSITIVE));
        let mut count = 0;
        let mut d = self.diag[0].clone() - x.clone();
        for i in 0..self.order() {
            if i > 0 {
                if d.is_zero() {
                    d = tiny.clone();
                }
                d = self.diag[i].clone() - x.clone() - self.offdiag[i - 1].square() / d;
            }
            if d.is_sign_negative() {
                count += 1;
            }
        }
        count
    }

    /// Leading principal block of order `m` (`1 <= m <= n`), as raw parts.
    fn leading_parts(&self, m: usize) -> (Vec<R>, Vec<R>) {
        (self.diag[..m].to_vec(), self.offdiag[..m.saturating_sub(1)].to_vec())
    }

    /// Leading principal block of order `m >= 2`.
    pub fn leading_block(&self, m: usize) -> Result<Self> {
        let (d, o) = self.leading_parts(m);
        Self::new(d, o)
    }

    pub fn convert<S: Real>(&self) -> TridiagonalMatrix<S> {
        TridiagonalMatrix {
            diag: self.diag.iter().map(S::convert_from).collect(),
            offdiag: self.offdiag.iter().map(S::convert_from).collect(),
        }
    }

    /// `max |a_ij - b_ij|` over the stored band.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!(self.order(), other.order());
        self.diag
            .iter()
            .zip(&other.diag)
            .chain(self.offdiag.iter().zip(&other.offdiag))
            .fold(R::zero(), |m, (a, b)| R::max_of(m, (a.clone() - b.clone()).abs()))
    }
}

impl<R: Real> fmt::Display for TridiagonalMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dense = self.to_dense();
        for i in 0..self.order() {
            let row: Vec<String> = dense.row(i).iter().map(|v| format!("{:.6e}", v.to_f64())).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Exact test of `a + b == 2c` in the working arithmetic: the rounded sum
/// must equal `2c` and the rounding error (by two-sum) must vanish.
fn sums_exactly_to_twice<R: Real>(a: &R, b: &R, c: &R) -> bool {
    let s = a.clone() + b.clone();
    let bb = s.clone() - a.clone();
    let err = (a.clone() - (s.clone() - bb.clone())) + (b.clone() - bb);
    err.is_zero() && s == c.clone() * R::from_i64(2)
}

/// A simple spectrum `l_1 < ... < l_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<R> {
    values: Vec<R>,
    ap_free: bool,
}

impl<R: Real> Spectrum<R> {
    pub fn new(values: Vec<R>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("spectrum needs at least two values".into()));
        }
        if !values.iter().all(Real::is_finite) {
            return Err(Error::InvalidInput("spectrum values must be finite".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::DegenerateSpectrum(i, i + 1));
        }
        let n = values.len();
        let mut ap_free = true;
        'outer: for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    if i != k && j != k && sums_exactly_to_twice(&values[i], &values[j], &values[k]) {
                        ap_free = false;
                        break 'outer;
                    }
                }
            }
        }
        Ok(Spectrum { values, ap_free })
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| R::from_f64(v)).collect())
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// No three distinct eigenvalues form an arithmetic progression.
    pub fn ap_free(&self) -> bool {
        self.ap_free
    }

    pub fn diameter(&self) -> R {
        self.values[self.len() - 1].clone() - self.values[0].clone()
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> R {
        self.values
            .windows(2)
            .map(|w| w[1].clone() - w[0].clone())
            .reduce(R::min_of)
            .expect("at least two values")
    }

    /// Index of the eigenvalue within `tol` of `x`, if any.
    pub fn index_near(&self, x: &R, tol: &R) -> Option<usize> {
        self.values.iter().position(|v| (v.clone() - x.clone()).abs() <= *tol)
    }

    /// True when the sorted eigenvalues of `t` match within `tol`.
    pub fn matches(&self, t: &TridiagonalMatrix<R>, tol: &R) -> bool {
        t.order() == self.len()
            && t.eigenvalues().iter().zip(&self.values).all(|(a, b)| (a.clone() - b.clone()).abs() <= *tol)
    }

    pub fn convert<S: Real>(&self) -> Spectrum<S> {
        Spectrum { values: self.values.iter().map(S::convert_from).collect(), ap_free: self.ap_free }
    }
}

/// Which eigenvalue of the trailing 2x2 block was taken as the shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> i32 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Branch::Plus),
            -1 => Some(Branch::Minus),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Shift selected from the trailing 2x2 block.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftChoice<R> {
    pub omega: R,
    pub omega_plus: R,
    pub omega_minus: R,
    pub branch: Branch,
    /// `| |T_nn - w+| - |T_nn - w-| |`, which equals `|T_{n-1,n-1} - T_nn|`.
    pub tie_gap: R,
    /// Some eigenvalue of the whole matrix lies within `tol` of `omega`.
    pub hits_eigenvalue: bool,
}

impl<R: Real> ShiftChoice<R> {
    pub fn is_tie(&self, tol: &R) -> bool {
        self.tie_gap <= *tol
    }
}

/// Eigenvalues of `[[a, b], [b, c]]` and the one nearest `c`.
///
/// Returns `(nearest, other, branch)`. On an exact tie (`a == c`) the plus
/// branch is reported; callers that care check `tie_gap`.
pub fn trailing_block_eigenvalues<R: Real>(a: &R, b: &R, c: &R) -> (R, R, Branch) {
    let half = R::ratio(1, 2);
    let d = (a.clone() - c.clone()) * half;
    let r = d.hypot(b);
    let trace = a.clone() + c.clone();
    if b.is_zero() {
        // Decoupled block: the corner entry is itself an eigenvalue.
        let branch = if c >= a { Branch::Plus } else { Branch::Minus };
        return (c.clone(), a.clone(), branch);
    }
    let (nearest, branch) = if d.is_sign_negative() {
        (c.clone() + b.square() / (r.clone() - d.clone()), Branch::Plus)
    } else if d.is_zero() {
        (c.clone() + r.clone(), Branch::Plus)
    } else {
        (c.clone() - b.square() / (d.clone() + r.clone()), Branch::Minus)
    };
    let other = trace - nearest.clone();
    (nearest, other, branch)
}

/// Wilkinson's shift: the eigenvalue of the trailing 2x2 block nearest
/// `T_nn`. Ties are reported through `tie_gap`, never raised.
pub fn wilkinson_shift<R: Real>(t: &TridiagonalMatrix<R>, tol: &R) -> ShiftChoice<R> {
    let n = t.order();
    let a = &t.diag[n - 2];
    let c = &t.diag[n - 1];
    let b = &t.offdiag[n - 2];
    let (omega, other, branch) = trailing_block_eigenvalues(a, b, c);
    let (omega_plus, omega_minus) = match branch {
        Branch::Plus => (omega.clone(), other),
        Branch::Minus => (other, omega.clone()),
    };
    let (omega_plus, omega_minus) =
        if omega_plus >= omega_minus { (omega_plus, omega_minus) } else { (omega_minus, omega_plus) };
    let tie_gap = (a.clone() - c.clone()).abs();
    let lo = omega.clone() - tol.clone();
    let hi = omega.clone() + tol.clone();
    let hits_eigenvalue = if b.is_zero() { true } else { t.count_below(&hi) > t.count_below(&lo) };
    ShiftChoice { omega, omega_plus, omega_minus, branch, tie_gap, hits_eigenvalue }
}

/// One plane rotation (or, for the last one, possibly a reflection) acting
/// on rows `index` and `index + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Givens<R> {
    pub index: usize,
    pub c: R,
    pub s: R,
    /// `[[c, s], [s, -c]]` instead of `[[c, s], [-s, c]]`.
    pub reflection: bool,
}

impl<R: Real> Givens<R> {
    pub fn norm_defect(&self) -> R {
        (self.c.square() + self.s.square() - R::one()).abs()
    }
}

/// `Q^T = G_{n-2} ... G_0`, so `Q = G_0^T ... G_{n-2}^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct GivensChain<R> {
    pub rotations: Vec<Givens<R>>,
}

impl<R: Real> GivensChain<R> {
    /// Dense orthogonal factor `Q` of order `n`.
    pub fn to_dense(&self, n: usize) -> Mat<R> {
        let mut q = Mat::identity(n);
        for g in &self.rotations {
            apply_right_transpose(&mut q, g);
        }
        q
    }
}

/// `M <- M G^T` for a rotation on columns `(i, i+1)`.
fn apply_right_transpose<R: Real>(m: &mut Mat<R>, g: &Givens<R>) {
    let (i, j) = (g.index, g.index + 1);
    for row in 0..m.rows() {
        let mi = m[(row, i)].clone();
        let mj = m[(row, j)].clone();
        m[(row, i)] = g.c.clone() * mi.clone() + g.s.clone() * mj.clone();
        m[(row, j)] = if g.reflection {
            g.s.clone() * mi - g.c.clone() * mj
        } else {
            g.c.clone() * mj - g.s.clone() * mi
        };
    }
}

/// Upper triangular `R` of `T - sI`, bandwidth three.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBand<R> {
    pub diag: Vec<R>,
    pub super1: Vec<R>,
    pub super2: Vec<R>,
}

impl<R: Real> UpperBand<R> {
    pub fn to_dense(&self) -> Mat<R> {
        let n = self.diag.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i].clone();
        }
        for (i, v) in self.super1.iter().enumerate() {
            m[(i, i + 1)] = v.clone();
        }
        for (i, v) in self.super2.iter().enumerate() {
            m[(i, i + 2)] = v.clone();
        }
        m
    }
}

/// Tolerances governing one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTolerances<R> {
    /// `tie_gap <= tie` puts the matrix in the tie set and the step errors.
    pub tie: R,
    /// A pivot of `R` at or below this means the shift is an eigenvalue.
    pub singular: R,
    /// `|T[n, n-1]| <= deflation` is treated as an exact zero.
    pub deflation: R,
}

impl<R: Real> StepTolerances<R> {
    /// Defaults scaled to `t`: tie at the relative tolerance times the
    /// Gershgorin width, singular pivots at `eps^2` times the entry scale,
    /// deflation at `1e-300`.
    pub fn for_matrix(t: &TridiagonalMatrix<R>) -> Self {
        let scale = R::max_of(t.max_abs(), R::from_f64(f64::MIN_POSITIVE));
        StepTolerances {
            tie: R::default_rel_tol() * t.gershgorin_width(),
            singular: R::epsilon() * R::epsilon() * scale,
            deflation: R::from_f64(1e-300),
        }
    }

    pub fn with_tie(mut self, tie: R) -> Self {
        self.tie = tie;
        self
    }
}

fn factor_parts<R: Real>(
    diag: &[R],
    offdiag: &[R],
    shift: &R,
    singular_tol: &R,
) -> Result<(GivensChain<R>, UpperBand<R>)> {
    let n = diag.len();
    debug_assert!(n >= 2);
    let mut rdiag = Vec::with_capacity(n);
    let mut super1 = Vec::with_capacity(n - 1);
    let mut super2 = Vec::with_capacity(n.saturating_sub(2));
    let mut rotations = Vec::with_capacity(n - 1);

    // Pending row i of the partially reduced matrix, columns i and i+1.
    let mut x = diag[0].clone() - shift.clone();
    let mut y = offdiag[0].clone();
    for i in 0..n - 1 {
        let sub = offdiag[i].clone();
        let next_diag = diag[i + 1].clone() - shift.clone();
        let next_super = offdiag.get(i + 1).cloned().unwrap_or_else(R::zero);
        let r = x.hypot(&sub);
        if r <= *singular_tol {
            return Err(Error::SingularShift { pivot: i });
        }
        let c = x / r.clone();
        let s = sub / r.clone();
        rdiag.push(r);
        super1.push(c.clone() * y.clone() + s.clone() * next_diag.clone());
        if i + 2 < n {
            super2.push(s.clone() * next_super.clone());
        }
        let mut nx = c.clone() * next_diag - s.clone() * y;
        let mut ny = c.clone() * next_super;
        // The last pivot has no rotation left to fix its sign; a reflection does.
        let reflection = i + 2 == n && nx.is_sign_negative();
        if reflection {
            nx = -nx;
            ny = -ny;
        }
        rotations.push(Givens { index: i, c, s, reflection });
        x = nx;
        y = ny;
    }
    if x <= *singular_tol {
        return Err(Error::SingularShift { pivot: n - 1 });
    }
    rdiag.push(x);
    Ok((GivensChain { rotations }, UpperBand { diag: rdiag, super1, super2 }))
}

/// Factors `T - sI = QR` with `R` upper triangular, positive diagonal.
pub fn shifted_qr_factor<R: Real>(
    t: &TridiagonalMatrix<R>,
    shift: &R,
    singular_tol: &R,
) -> Result<(GivensChain<R>, UpperBand<R>)> {
    factor_parts(&t.diag, &t.offdiag, shift, singular_tol)
}

/// `RQ + sI` from the factors, returned as raw tridiagonal parts.
fn recombine<R: Real>(chain: &GivensChain<R>, r: &UpperBand<R>, shift: &R) -> (Vec<R>, Vec<R>) {
    let n = r.diag.len();
    let mut m = r.to_dense();
    for g in &chain.rotations {
        apply_right_transpose(&mut m, g);
    }
    let diag = (0..n).map(|i| m[(i, i)].clone() + shift.clone()).collect();
    // Lower entries are s_i * R_{i+1,i+1}; they carry the original signs.
    let offdiag = (0..n.saturating_sub(1)).map(|i| m[(i + 1, i)].clone()).collect();
    (diag, offdiag)
}

fn qr_step_parts<R: Real>(diag: &[R], offdiag: &[R], shift: &R, singular_tol: &R) -> Result<(Vec<R>, Vec<R>)> {
    if diag.len() == 1 {
        // A 1x1 step is the identity as long as the shift is not the entry.
        if (diag[0].clone() - shift.clone()).abs() <= *singular_tol {
            return Err(Error::SingularShift { pivot: 0 });
        }
        return Ok((diag.to_vec(), Vec::new()));
    }
    let (chain, r) = factor_parts(diag, offdiag, shift, singular_tol)?;
    Ok(recombine(&chain, &r, shift))
}

/// One explicit shifted QR step `RQ + sI` with an arbitrary shift.
pub fn shifted_qr_step<R: Real>(t: &TridiagonalMatrix<R>, shift: &R, singular_tol: &R) -> Result<TridiagonalMatrix<R>> {
    let (d, o) = qr_step_parts(&t.diag, &t.offdiag, shift, singular_tol)?;
    TridiagonalMatrix::new(d, o)
}

/// The Wilkinson step `W(T)`.
///
/// When `|T[n, n-1]|` is at or below the deflation tolerance the corner
/// entry is already an eigenvalue; the step then acts on the leading block
/// with that eigenvalue as shift and the bottom entry is set to zero.
pub fn wilkinson_step<R: Real>(t: &TridiagonalMatrix<R>, tols: &StepTolerances<R>) -> Result<TridiagonalMatrix<R>> {
    wilkinson_step_with_shift(t, tols).map(|(w, _)| w)
}

/// As [`wilkinson_step`] but also returns the shift that was used.
pub fn wilkinson_step_with_shift<R: Real>(
    t: &TridiagonalMatrix<R>,
    tols: &StepTolerances<R>,
) -> Result<(TridiagonalMatrix<R>, ShiftChoice<R>)> {
    let n = t.order();
    let bottom = t.bottom_entry().clone();
    if bottom.abs() <= tols.deflation {
        let shift = t.corner().clone();
        let (lead_d, lead_o) = t.leading_parts(n - 1);
        let (mut d, mut o) = qr_step_parts(&lead_d, &lead_o, &shift, &tols.singular)?;
        d.push(shift.clone());
        o.push(R::zero());
        let choice = wilkinson_shift(t, &tols.tie);
        return Ok((TridiagonalMatrix::new(d, o)?, choice));
    }
    let choice = wilkinson_shift(t, &tols.tie);
    if choice.is_tie(&tols.tie) {
        return Err(Error::TieBreakUndefined);
    }
    let w = shifted_qr_step(t, &choice.omega, &tols.singular)?;
    Ok((w, choice))
}

/// Forces the given branch of the trailing-block eigenvalue as the shift.
/// Used to trace both one-sided limits of `W` across the tie set.
pub fn wilkinson_step_branch<R: Real>(
    t: &TridiagonalMatrix<R>,
    branch: Branch,
    singular_tol: &R,
) -> Result<TridiagonalMatrix<R>> {
    let choice = wilkinson_shift(t, &R::zero());
    let shift = match branch {
        Branch::Plus => choice.omega_plus,
        Branch::Minus => choice.omega_minus,
    };
    shifted_qr_step(t, &shift, singular_tol)
}

/// Membership in the tie, coincidence, shift-collision and deflated sets.
/// Indices are 0-based positions in the ascending spectrum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetMembership {
    pub in_y: bool,
    pub in_y0: bool,
    pub in_z: Option<usize>,
    pub in_d0: Option<usize>,
}

pub fn classify_sets<R: Real>(t: &TridiagonalMatrix<R>, spectrum: &Spectrum<R>, tol: &R) -> SetMembership {
    let n = t.order();
    let choice = wilkinson_shift(t, tol);
    let corner_gap = (t.diag[n - 2].clone() - t.diag[n - 1].clone()).abs();
    let bottom_small = t.bottom_entry().abs() <= *tol;
    SetMembership {
        in_y: choice.is_tie(tol),
        in_y0: corner_gap <= *tol && bottom_small,
        in_z: spectrum.index_near(&choice.omega, tol),
        in_d0: if bottom_small { spectrum.index_near(t.corner(), tol) } else { None },
    }
}

/// `f(A)` for a symmetric matrix by full diagonalization, `V f(D) V^T`.
/// Fails when two eigenvalues are within `tol` of each other.
pub fn symmetric_function<R: Real>(a: &Mat<R>, f: &dyn Fn(&R) -> R, tol: &R) -> Result<Mat<R>> {
    let (values, vectors) = symmetric_eigen(a);
    if let Some(i) = values.windows(2).position(|w| (w[1].clone() - w[0].clone()).abs() <= *tol) {
        return Err(Error::DegenerateSpectrum(i, i + 1));
    }
    let fvals: Vec<R> = values.iter().map(f).collect();
    let n = a.rows();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = R::zero();
            for k in 0..n {
                acc += vectors[(i, k)].clone() * fvals[k].clone() * vectors[(j, k)].clone();
            }
            out[(i, j)] = acc.clone();
            out[(j, i)] = acc;
        }
    }
    Ok(out)
}

/// Dense `f(T)`.
pub fn matrix_function<R: Real>(t: &TridiagonalMatrix<R>, f: &dyn Fn(&R) -> R, tol: &R) -> Result<Mat<R>> {
    symmetric_function(&t.to_dense(), f, tol)
}
