//! Bidiagonal coordinate charts on the isospectral manifold.
//!
//! For a permutation `pi` of the spectrum, a Jacobi matrix `T = Q^T L Q`
//! (rows of `Q` are unit eigenvectors, `L` ascending) is in the chart when
//! the row-permuted eigenvector matrix `P^-1 Q` has an LU factorization.
//! Normalizing signs so `U` has a positive diagonal, `B = L_pi^-1 L^pi L_pi`
//! is lower bidiagonal and its subdiagonal is the coordinate vector `beta`.
//!
//! In these coordinates the Wilkinson step is a diagonal rescaling, which
//! is what makes them useful.

use crate::dense::{invert_unit_lower, lu_nopivot, qr_positive, symmetric_eigen, Mat};
use crate::error::{Error, Result};
use crate::jacobi::{wilkinson_shift, Branch, ShiftChoice, Spectrum, TridiagonalMatrix};
use crate::scalar::Real;

/// A permutation of a fixed spectrum. `pi[i]` is the 0-based index of the
/// eigenvalue placed in position `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartIndex<R> {
    pi: Vec<usize>,
    spectrum: Spectrum<R>,
}

impl<R: Real> ChartIndex<R> {
    pub fn new(pi: Vec<usize>, spectrum: Spectrum<R>) -> Result<Self> {
        let n = spectrum.len();
        if pi.len() != n {
            return Err(Error::InvalidInput(format!("permutation has length {}, spectrum {}", pi.len(), n)));
        }
        let mut seen = vec![false; n];
        for &p in &pi {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!("{pi:?} is not a permutation of 0..{n}")));
            }
            seen[p] = true;
        }
        Ok(ChartIndex { pi, spectrum })
    }

    /// Permutation written with 1-based images, e.g. `[3, 1, 2]`.
    pub fn from_one_based(pi: &[usize], spectrum: Spectrum<R>) -> Result<Self> {
        if pi.contains(&0) {
            return Err(Error::InvalidInput("1-based permutation contains 0".into()));
        }
        Self::new(pi.iter().map(|p| p - 1).collect(), spectrum)
    }

    pub fn identity(spectrum: Spectrum<R>) -> Self {
        let n = spectrum.len();
        ChartIndex { pi: (0..n).collect(), spectrum }
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.pi.iter().map(|p| p + 1).collect()
    }

    pub fn spectrum(&self) -> &Spectrum<R> {
        &self.spectrum
    }

    pub fn order(&self) -> usize {
        self.pi.len()
    }

    /// `(l_pi(1), ..., l_pi(n))`.
    pub fn lambda_pi(&self) -> Vec<R> {
        self.pi.iter().map(|&p| self.spectrum.values()[p].clone()).collect()
    }

    /// Coordinates in this chart with the given subdiagonal.
    pub fn coords(&self, beta: Vec<R>) -> Result<BidiagonalCoords<R>> {
        BidiagonalCoords::new(self.lambda_pi(), beta)
    }

    pub fn origin(&self) -> BidiagonalCoords<R> {
        BidiagonalCoords { lambda_pi: self.lambda_pi(), beta: vec![R::zero(); self.order() - 1] }
    }

    pub fn convert<S: Real>(&self) -> ChartIndex<S> {
        ChartIndex { pi: self.pi.clone(), spectrum: self.spectrum.convert() }
    }

    fn check_coords(&self, coords: &BidiagonalCoords<R>) -> Result<()> {
        if coords.lambda_pi != self.lambda_pi() {
            return Err(Error::SpectrumMismatch);
        }
        Ok(())
    }
}

/// `(l^pi; beta)`. The diagonal of `B` travels with the coordinates so a
/// coordinate vector is self-describing.
#[derive(Clone, Debug, PartialEq)]
pub struct BidiagonalCoords<R> {
    pub lambda_pi: Vec<R>,
    pub beta: Vec<R>,
}

impl<R: Real> BidiagonalCoords<R> {
    pub fn new(lambda_pi: Vec<R>, beta: Vec<R>) -> Result<Self> {
        if lambda_pi.len() < 2 || beta.len() + 1 != lambda_pi.len() {
            return Err(Error::InvalidInput(format!(
                "need n >= 2 eigenvalues and n - 1 coordinates, got {} and {}",
                lambda_pi.len(),
                beta.len()
            )));
        }
        if !beta.iter().chain(&lambda_pi).all(Real::is_finite) {
            return Err(Error::InvalidInput("coordinates must be finite".into()));
        }
        Ok(BidiagonalCoords { lambda_pi, beta })
    }

    pub fn last(&self) -> &R {
        self.beta.last().expect("n >= 2")
    }

    /// The lower bidiagonal matrix `B`.
    pub fn bidiagonal(&self) -> Mat<R> {
        let n = self.lambda_pi.len();
        let mut b = Mat::diagonal(&self.lambda_pi);
        for i in 0..n - 1 {
            b[(i + 1, i)] = self.beta[i].clone();
        }
        b
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.beta
            .iter()
            .zip(&other.beta)
            .fold(R::zero(), |m, (a, b)| R::max_of(m, (a.clone() - b.clone()).abs()))
    }
}

/// Diagonal sign matrix `E = diag(sigma_1, ..., sigma_n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignFlip {
    sigma: Vec<i8>,
}

impl SignFlip {
    pub fn new(sigma: Vec<i8>) -> Result<Self> {
        if sigma.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidInput(format!("sign flip entries must be +-1, got {sigma:?}")));
        }
        Ok(SignFlip { sigma })
    }

    pub fn identity(n: usize) -> Self {
        SignFlip { sigma: vec![1; n] }
    }

    pub fn sigma(&self) -> &[i8] {
        &self.sigma
    }

    /// Conjugation `E T E`: the off-diagonal entry `i` picks up
    /// `sigma_i sigma_{i+1}`.
    pub fn conjugate<R: Real>(&self, t: &TridiagonalMatrix<R>) -> TridiagonalMatrix<R> {
        assert_eq!(self.sigma.len(), t.order());
        let offdiag = t
            .offdiag()
            .iter()
            .enumerate()
            .map(|(i, b)| if self.sigma[i] * self.sigma[i + 1] < 0 { -b.clone() } else { b.clone() })
            .collect();
        TridiagonalMatrix::new(t.diag().to_vec(), offdiag).expect("same shape")
    }
}

/// The coordinate version of [`SignFlip::conjugate`].
pub fn sign_flip<R: Real>(coords: &BidiagonalCoords<R>, flip: &SignFlip) -> BidiagonalCoords<R> {
    assert_eq!(flip.sigma.len(), coords.lambda_pi.len());
    let beta = coords
        .beta
        .iter()
        .enumerate()
        .map(|(i, b)| if flip.sigma[i] * flip.sigma[i + 1] < 0 { -b.clone() } else { b.clone() })
        .collect();
    BidiagonalCoords { lambda_pi: coords.lambda_pi.clone(), beta }
}

/// Relative tolerance for comparing a matrix's numerical spectrum against
/// the chart's declared spectrum.
fn spectrum_tol<R: Real>(spectrum: &Spectrum<R>) -> R {
    let scale = R::max_of(R::one(), R::max_of(spectrum.values()[0].abs(), spectrum.values()[spectrum.len() - 1].abs()));
    R::default_rel_tol() * R::from_i64(10_000) * scale
}

/// Row-permuted eigenvector matrix `P^-1 Q` whose row `i` is the unit
/// eigenvector for `l_pi(i)`. Row signs are whatever the solver produced.
fn permuted_eigenvectors<R: Real>(t: &TridiagonalMatrix<R>, chart: &ChartIndex<R>) -> Result<Mat<R>> {
    let (values, vectors) = symmetric_eigen(&t.to_dense());
    let tol = spectrum_tol(&chart.spectrum);
    if values.iter().zip(chart.spectrum.values()).any(|(a, b)| (a.clone() - b.clone()).abs() > tol) {
        return Err(Error::SpectrumMismatch);
    }
    let n = t.order();
    Ok(Mat::from_fn(n, n, |i, j| vectors[(j, chart.pi[i])].clone()))
}

/// `(L, sigma)` with `E P^-1 Q = (E L E)(E U)`, `E U` positive diagonal.
fn chart_lu<R: Real>(t: &TridiagonalMatrix<R>, chart: &ChartIndex<R>) -> Result<(Mat<R>, Mat<R>, Vec<bool>)> {
    let pq = permuted_eigenvectors(t, chart)?;
    let (l, u) = lu_nopivot(&pq, &R::zero())?;
    // Rows of P^-1 Q are unit vectors, so the leading minors themselves
    // are compared against the relative tolerance.
    let tol = R::default_rel_tol();
    let mut minor = R::one();
    for i in 0..pq.rows() {
        minor *= u[(i, i)].clone();
        if minor.abs() < tol {
            return Err(Error::NotInChart { minor: i + 1 });
        }
    }
    let negative = (0..pq.rows()).map(|i| u[(i, i)].is_sign_negative()).collect();
    Ok((l, u, negative))
}

/// `psi`: chart coordinates of `t`.
pub fn psi<R: Real>(t: &TridiagonalMatrix<R>, chart: &ChartIndex<R>) -> Result<BidiagonalCoords<R>> {
    if t.order() != chart.order() {
        return Err(Error::InvalidInput("matrix and chart orders differ".into()));
    }
    let (l, _u, negative) = chart_lu(t, chart)?;
    let lambda = chart.lambda_pi();
    let n = t.order();
    let beta = (0..n - 1)
        .map(|i| {
            // (L_pi)_{i+1,i} = sigma_i sigma_{i+1} L_{i+1,i}; the bidiagonal
            // entry of L_pi^-1 L^pi L_pi is (l_{i+1} - l_i) times that.
            let entry = if negative[i] != negative[i + 1] { -l[(i + 1, i)].clone() } else { l[(i + 1, i)].clone() };
            (lambda[i + 1].clone() - lambda[i].clone()) * entry
        })
        .collect();
    BidiagonalCoords::new(lambda, beta)
}

/// Columns of `L_pi^-1`: unit-lower eigenvectors of `B`, by forward
/// substitution down the bidiagonal.
fn inverse_l<R: Real>(coords: &BidiagonalCoords<R>) -> Mat<R> {
    let lambda = &coords.lambda_pi;
    let n = lambda.len();
    let mut m: Mat<R> = Mat::identity(n);
    for j in 0..n {
        for k in (j + 1)..n {
            let prev = m[(k - 1, j)].clone();
            m[(k, j)] = coords.beta[k - 1].clone() * prev / (lambda[j].clone() - lambda[k].clone());
        }
    }
    m
}

/// `phi`: the Jacobi matrix with the given chart coordinates. Defined for
/// every real coordinate vector.
pub fn phi<R: Real>(coords: &BidiagonalCoords<R>, chart: &ChartIndex<R>) -> Result<TridiagonalMatrix<R>> {
    chart.check_coords(coords)?;
    let l = invert_unit_lower(&inverse_l(coords));
    let (q, _r) = qr_positive(&l, &R::zero())?;
    let t = q.transpose().matmul(&Mat::diagonal(&coords.lambda_pi)).matmul(&q);
    TridiagonalMatrix::from_dense(&t.symmetrized())
}

/// Unreduced blocks of `t` (off-diagonal entries at or below `tol` split).
fn block_sizes<R: Real>(t: &TridiagonalMatrix<R>, tol: &R) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut current = 1;
    for b in t.offdiag() {
        if b.abs() <= *tol {
            sizes.push(current);
            current = 1;
        } else {
            current += 1;
        }
    }
    sizes.push(current);
    sizes
}

/// Membership by the block criterion: each unreduced diagonal block must
/// carry the next run of `l^pi` as its eigenvalues.
pub fn chart_membership<R: Real>(t: &TridiagonalMatrix<R>, chart: &ChartIndex<R>, tol: &R) -> bool {
    if t.order() != chart.order() {
        return false;
    }
    let lambda = chart.lambda_pi();
    let mut start = 0;
    for size in block_sizes(t, tol) {
        let block_vals: Vec<R> = if size == 1 {
            vec![t.diag()[start].clone()]
        } else {
            let d = t.diag()[start..start + size].to_vec();
            let o = t.offdiag()[start..start + size - 1].to_vec();
            TridiagonalMatrix::new(d, o).expect("block shape").eigenvalues()
        };
        let mut expected = lambda[start..start + size].to_vec();
        expected.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if block_vals.iter().zip(&expected).any(|(a, b)| (a.clone() - b.clone()).abs() > *tol) {
            return false;
        }
        start += size;
    }
    true
}

/// Rescales coordinates by `|(l_pi(i+1) - w) / (l_pi(i) - w)|`.
fn rescale<R: Real>(coords: &BidiagonalCoords<R>, omega: &R, tol: &R) -> Result<BidiagonalCoords<R>> {
    let lambda = &coords.lambda_pi;
    let n = lambda.len();
    for (i, l) in lambda.iter().enumerate().take(n - 1) {
        if (l.clone() - omega.clone()).abs() <= *tol {
            return Err(Error::ShiftCollision(i));
        }
    }
    let beta = (0..n - 1)
        .map(|i| {
            let num = lambda[i + 1].clone() - omega.clone();
            let den = lambda[i].clone() - omega.clone();
            (num / den).abs() * coords.beta[i].clone()
        })
        .collect();
    BidiagonalCoords::new(lambda.clone(), beta)
}

/// Wilkinson step in coordinates, plus the shift that was selected.
pub fn wilkinson_step_coords_with_shift<R: Real>(
    coords: &BidiagonalCoords<R>,
    chart: &ChartIndex<R>,
    tol: &R,
) -> Result<(BidiagonalCoords<R>, ShiftChoice<R>)> {
    let t = phi(coords, chart)?;
    let mut choice = wilkinson_shift(&t, tol);
    if coords.last().is_zero() {
        // Removable case: the corner entry is l_pi(n) exactly.
        choice.omega = coords.lambda_pi[coords.lambda_pi.len() - 1].clone();
    } else if choice.is_tie(tol) {
        return Err(Error::TieBreakUndefined);
    }
    let next = rescale(coords, &choice.omega, tol)?;
    Ok((next, choice))
}

/// The coordinate-space Wilkinson map `W_pi`.
pub fn wilkinson_step_coords<R: Real>(
    coords: &BidiagonalCoords<R>,
    chart: &ChartIndex<R>,
    tol: &R,
) -> Result<BidiagonalCoords<R>> {
    wilkinson_step_coords_with_shift(coords, chart, tol).map(|(c, _)| c)
}

/// `W_pi` with the branch of the shift forced, ignoring which eigenvalue of
/// the trailing block is nearer the corner.
pub fn wilkinson_step_coords_branch<R: Real>(
    coords: &BidiagonalCoords<R>,
    chart: &ChartIndex<R>,
    branch: Branch,
    tol: &R,
) -> Result<BidiagonalCoords<R>> {
    let t = phi(coords, chart)?;
    let choice = wilkinson_shift(&t, tol);
    let omega = match branch {
        Branch::Plus => choice.omega_plus,
        Branch::Minus => choice.omega_minus,
    };
    rescale(coords, &omega, tol)
}

/// Coordinate version of the general QR step `F`: each coordinate scales by
/// `|f(l_pi(i+1)) / f(l_pi(i))|`.
pub fn qr_step_coords<R: Real>(
    coords: &BidiagonalCoords<R>,
    f: &dyn Fn(&R) -> R,
) -> Result<BidiagonalCoords<R>> {
    let fv: Vec<R> = coords.lambda_pi.iter().map(f).collect();
    if let Some(i) = fv.iter().position(Real::is_zero) {
        return Err(Error::SingularFunctionValue(i));
    }
    let beta = (0..fv.len() - 1).map(|i| (fv[i + 1].clone() / fv[i].clone()).abs() * coords.beta[i].clone()).collect();
    BidiagonalCoords::new(coords.lambda_pi.clone(), beta)
}
