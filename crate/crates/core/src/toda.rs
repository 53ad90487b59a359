//! Toda flows, the general QR step `F(T) = Q(f(T))^T T Q(f(T))`, and the
//! Lyapunov functional `h(T) = tr(M g(T))` that increases along them.

use std::fmt;
use std::sync::Arc;

use crate::dense::{qr_positive, symmetric_eigen, Mat};
use crate::error::{Error, Result};
use crate::jacobi::{symmetric_function, Spectrum, TridiagonalMatrix};
use crate::scalar::Real;

/// Scalar function shared across threads.
pub type ScalarFn<R> = Arc<dyn Fn(&R) -> R + Send + Sync>;

/// `M = diag(mu_1 > mu_2 > ... > mu_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix<R> {
    mu: Vec<R>,
}

impl<R: Real> WeightMatrix<R> {
    pub fn new(mu: Vec<R>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidInput("weight matrix needs at least one entry".into()));
        }
        if mu.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInput("weights must be strictly decreasing".into()));
        }
        Ok(WeightMatrix { mu })
    }

    /// `diag(m, m-1, ..., 1)`.
    pub fn descending(m: usize) -> Self {
        WeightMatrix { mu: (1..=m).rev().map(|k| R::from_i64(k as i64)).collect() }
    }

    pub fn mu(&self) -> &[R] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// A function `g` separating the eigenvalues of a spectrum.
#[derive(Clone)]
pub struct TodaField<R> {
    g: ScalarFn<R>,
    spectrum: Spectrum<R>,
}

impl<R: Real> fmt::Debug for TodaField<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TodaField").field("spectrum", &self.spectrum).finish_non_exhaustive()
    }
}

impl<R: Real> TodaField<R> {
    /// Fails unless `g` takes distinct finite values on the spectrum.
    pub fn new(g: ScalarFn<R>, spectrum: Spectrum<R>) -> Result<Self> {
        let values: Vec<R> = spectrum.values().iter().map(|v| g(v)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularFunctionValue(i));
        }
        let tol = R::default_rel_tol();
        for i in 0..values.len() {
            for j in (i + 1)..values.len() {
                let scale = R::max_of(R::one(), R::max_of(values[i].abs(), values[j].abs()));
                if (values[i].clone() - values[j].clone()).abs() <= tol.clone() * scale {
                    return Err(Error::DegenerateSpectrum(i, j));
                }
            }
        }
        Ok(TodaField { g, spectrum })
    }

    pub fn g(&self) -> &ScalarFn<R> {
        &self.g
    }

    pub fn spectrum(&self) -> &Spectrum<R> {
        &self.spectrum
    }

    pub fn eval(&self, x: &R) -> R {
        (self.g)(x)
    }

    fn degenerate_tol(&self) -> R {
        self.spectrum.min_gap() * R::ratio(1, 1000)
    }

    fn apply(&self, a: &Mat<R>) -> Result<Mat<R>> {
        let g = self.g.clone();
        symmetric_function(a, &move |x: &R| g(x), &self.degenerate_tol())
    }
}

/// Skew matrix with the strict lower part of `m`.
pub fn pi_a<R: Real>(m: &Mat<R>) -> Mat<R> {
    assert!(m.is_square(), "pi_a needs a square matrix");
    let n = m.rows();
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            s[(i, j)] = m[(i, j)].clone();
            s[(j, i)] = -m[(i, j)].clone();
        }
    }
    s
}

fn check_orders<R: Real>(t: &TridiagonalMatrix<R>, m: &WeightMatrix<R>, field: &TodaField<R>) -> Result<()> {
    if t.order() != m.len() || t.order() != field.spectrum.len() {
        return Err(Error::InvalidInput(format!(
            "order mismatch: matrix {}, weights {}, spectrum {}",
            t.order(),
            m.len(),
            field.spectrum.len()
        )));
    }
    Ok(())
}

/// `h(T) = tr(M g(T))`.
pub fn h<R: Real>(t: &TridiagonalMatrix<R>, m: &WeightMatrix<R>, field: &TodaField<R>) -> Result<R> {
    check_orders(t, m, field)?;
    let gt = field.apply(&t.to_dense())?;
    let mut acc = R::zero();
    for (i, mu) in m.mu.iter().enumerate() {
        acc += mu.clone() * gt[(i, i)].clone();
    }
    Ok(acc)
}

/// `d/dt h` along the Toda flow of `g`, in closed form:
/// `sum_{i<j} 2 (mu_i - mu_j) g(T)_ij^2`.
pub fn toda_derivative<R: Real>(t: &TridiagonalMatrix<R>, m: &WeightMatrix<R>, field: &TodaField<R>) -> Result<R> {
    check_orders(t, m, field)?;
    let gt = field.apply(&t.to_dense())?;
    let n = t.order();
    let mut acc = R::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            acc += R::from_i64(2) * (m.mu[i].clone() - m.mu[j].clone()) * gt[(i, j)].square();
        }
    }
    Ok(acc)
}

/// The QR step induced by `f`. `f` must stay above `tol` in magnitude on
/// the spectrum of `t`.
pub fn qr_step_general<R: Real>(
    t: &TridiagonalMatrix<R>,
    f: &dyn Fn(&R) -> R,
    tol: &R,
) -> Result<TridiagonalMatrix<R>> {
    let dense = t.to_dense();
    let (values, _) = symmetric_eigen(&dense);
    if let Some(i) = values.iter().position(|v| f(v).abs() < *tol) {
        return Err(Error::SingularFunctionValue(i));
    }
    let gap = values
        .windows(2)
        .map(|w| w[1].clone() - w[0].clone())
        .reduce(R::min_of)
        .unwrap_or_else(R::one);
    let ft = symmetric_function(&dense, f, &(gap * R::ratio(1, 1000)))?;
    let (q, _) = qr_positive(&ft, &R::zero())?;
    let stepped = q.transpose().matmul(&dense).matmul(&q);
    TridiagonalMatrix::from_dense(&stepped.symmetrized())
}

/// Number of `k` in `0..=max_iter` with `F^k(T0)` satisfying `inside`.
pub fn visit_count<R: Real>(
    t0: &TridiagonalMatrix<R>,
    f: &dyn Fn(&R) -> R,
    inside: &dyn Fn(&TridiagonalMatrix<R>) -> bool,
    max_iter: usize,
    tol: &R,
) -> Result<usize> {
    let mut t = t0.clone();
    let mut count = usize::from(inside(&t));
    for _ in 0..max_iter {
        t = qr_step_general(&t, f, tol)?;
        count += usize::from(inside(&t));
    }
    Ok(count)
}

fn toda_vector_field<R: Real>(x: &Mat<R>, field: &TodaField<R>) -> Result<Mat<R>> {
    let s = pi_a(&field.apply(x)?);
    Ok(x.matmul(&s).sub(&s.matmul(x)))
}

/// Classical RK4 for `dT/dt = [T, Pi_a g(T)]` over `[0, t]`.
/// Default use is `steps = 10_000` per unit time.
pub fn toda_flow_rk<R: Real>(t0: &TridiagonalMatrix<R>, field: &TodaField<R>, t: &R, steps: usize) -> Result<TridiagonalMatrix<R>> {
    if steps == 0 || t.is_zero() {
        return Ok(t0.clone());
    }
    let dt = t.clone() / R::from_i64(steps as i64);
    let half = dt.clone() * R::ratio(1, 2);
    let sixth = dt.clone() / R::from_i64(6);
    let two = R::from_i64(2);
    let mut x = t0.to_dense();
    for _ in 0..steps {
        let k1 = toda_vector_field(&x, field)?;
        let k2 = toda_vector_field(&x.add(&k1.scale(&half)), field)?;
        let k3 = toda_vector_field(&x.add(&k2.scale(&half)), field)?;
        let k4 = toda_vector_field(&x.add(&k3.scale(&dt)), field)?;
        let incr = k1.add(&k2.scale(&two)).add(&k3.scale(&two)).add(&k4);
        x = x.add(&incr.scale(&sixth)).symmetrized();
    }
    let before = t0.eigenvalues();
    let (after, _) = symmetric_eigen(&x);
    let drift = before
        .iter()
        .zip(&after)
        .fold(0.0f64, |m, (a, b)| m.max((a.clone() - b.clone()).abs().to_f64()));
    if drift > 1e-6 {
        return Err(Error::StepSizeTooLarge { drift });
    }
    TridiagonalMatrix::from_dense(&x)
}

/// Central difference of `h` through the time-`dt` QR steps
/// `f = exp(+-dt g)`.
pub fn toda_derivative_fd<R: Real>(
    t: &TridiagonalMatrix<R>,
    m: &WeightMatrix<R>,
    field: &TodaField<R>,
    dt: &R,
) -> Result<R> {
    let g = field.g.clone();
    let fwd_dt = dt.clone();
    let fwd = qr_step_general(t, &move |x: &R| (fwd_dt.clone() * g(x)).exp(), &R::zero())?;
    let g = field.g.clone();
    let back_dt = -dt.clone();
    let back = qr_step_general(t, &move |x: &R| (back_dt.clone() * g(x)).exp(), &R::zero())?;
    Ok((h(&fwd, m, field)? - h(&back, m, field)?) / (R::from_i64(2) * dt.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::{shifted_qr_step, wilkinson_step, StepTolerances};
    use crate::scalar::Big;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_field(spec: &Spectrum<f64>) -> TodaField<f64> {
        TodaField::new(Arc::new(|x: &f64| *x), spec.clone()).unwrap()
    }

    fn random_t(rng: &mut ChaCha8Rng, n: usize) -> TridiagonalMatrix<f64> {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let o: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.2..0.8)).collect();
        TridiagonalMatrix::from_f64(&d, &o).unwrap()
    }

    #[test]
    fn pi_a_examples() {
        let m = Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(pi_a(&m), Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = Mat::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let s = pi_a(&r);
        assert_eq!(s.add(&s.transpose()).max_abs(), 0.0);
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(s[(i, j)], r[(i, j)]);
            }
        }
    }

    #[test]
    fn h_examples() {
        let spec = Spectrum::from_f64(&[1.0, 3.0]).unwrap();
        let t = TridiagonalMatrix::from_f64(&[1.0, 3.0], &[0.0]).unwrap();
        let m = WeightMatrix::new(vec![2.0, 1.0]).unwrap();
        assert!((h(&t, &m, &identity_field(&spec)).unwrap() - 5.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_t(&mut rng, 4);
        let spec = Spectrum::new(t.eigenvalues()).unwrap();
        let m = WeightMatrix::descending(4);
        let expected: f64 = t.diag().iter().zip(m.mu()).map(|(d, mu)| d * mu).sum();
        assert!((h(&t, &m, &identity_field(&spec)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn derivative_vanishes_on_diagonals_and_is_positive_elsewhere() {
        let spec = Spectrum::from_f64(&[-1.0, 0.5, 2.0]).unwrap();
        let d = TridiagonalMatrix::from_f64(&[2.0, -1.0, 0.5], &[0.0, 0.0]).unwrap();
        let m = WeightMatrix::descending(3);
        assert!(toda_derivative(&d, &m, &identity_field(&spec)).unwrap().abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let t = random_t(&mut rng, 3);
            let spec = Spectrum::new(t.eigenvalues()).unwrap();
            assert!(toda_derivative(&t, &m, &identity_field(&spec)).unwrap() > 0.0);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 3..6 {
            let t = random_t(&mut rng, n);
            let spec = Spectrum::new(t.eigenvalues()).unwrap();
            let field = TodaField::new(Arc::new(|x: &f64| x.sin() + 0.5 * x), spec).unwrap();
            let m = WeightMatrix::descending(n);
            let exact = toda_derivative(&t, &m, &field).unwrap();
            let fd = toda_derivative_fd(&t, &m, &field, &1e-6).unwrap();
            assert!((exact - fd).abs() <= 1e-5 * exact.abs(), "{exact} vs {fd}");
        }
    }

    #[test]
    fn general_step_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = random_t(&mut rng, 4);
        let same = qr_step_general(&t, &|_: &f64| 1.0, &1e-12).unwrap();
        assert!(same.max_abs_diff(&t) < 1e-13);
        let s = 0.37;
        let a = qr_step_general(&t, &|x: &f64| x - s, &1e-12).unwrap();
        let b = shifted_qr_step(&t, &s, &0.0).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        let ev = t.eigenvalues();
        let lam = ev[1];
        assert_eq!(qr_step_general(&t, &move |x: &f64| x - lam, &1e-9), Err(Error::SingularFunctionValue(1)));
    }

    #[test]
    fn visit_count_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_t(&mut rng, 3);
        let f = |x: &f64| x + 3.0;
        assert_eq!(visit_count(&t, &f, &|_: &TridiagonalMatrix<f64>| false, 7, &1e-12).unwrap(), 0);
        assert_eq!(visit_count(&t, &f, &|_: &TridiagonalMatrix<f64>| true, 7, &1e-12).unwrap(), 8);
    }

    #[test]
    fn flow_edge_cases() {
        let spec = Spectrum::from_f64(&[0.0, 1.0, 2.0]).unwrap();
        let field = identity_field(&spec);
        let d = TridiagonalMatrix::from_f64(&[2.0, 0.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(toda_flow_rk(&d, &field, &0.0, 100).unwrap(), d);
        assert!(toda_flow_rk(&d, &field, &1.0, 100).unwrap().max_abs_diff(&d) < 1e-15);
    }

    #[test]
    fn flow_time_one_equals_exponential_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_t(&mut rng, 3);
        let spec = Spectrum::new(t.eigenvalues()).unwrap();
        let flowed = toda_flow_rk(&t, &identity_field(&spec), &1.0, 2_000).unwrap();
        let stepped = qr_step_general(&t, &|x: &f64| x.exp(), &1e-12).unwrap();
        assert!(flowed.max_abs_diff(&stepped) < 1e-8, "{}", flowed.max_abs_diff(&stepped));
    }

    #[test]
    fn lyapunov_increases_along_deflated_wilkinson_orbit() {
        type B = Big<1024>;
        let t: TridiagonalMatrix<B> =
            TridiagonalMatrix::from_f64(&[1.3, 2.1, 3.4, 2.0], &[0.4, 0.3, 0.2]).unwrap();
        let mut t = t;
        let mut history = Vec::new();
        for _ in 0..12 {
            if t.bottom_entry().log10_abs() < -280.0 {
                break;
            }
            if t.bottom_entry().abs().to_f64() < 1e-8 {
                let full = Spectrum::new(t.eigenvalues()).unwrap();
                let idx = full.index_near(t.corner(), &B::from_f64(1e-6)).unwrap();
                let lam = full.values()[idx].clone();
                let rest: Vec<B> = full.values().iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, v)| v.clone()).collect();
                let lead = t.leading_block(3).unwrap();
                let lam_g = lam.clone();
                let field = TodaField::new(Arc::new(move |x: &B| (x.clone() - lam_g.clone()).abs().ln()), Spectrum::new(rest).unwrap()).unwrap();
                history.push(h(&lead, &WeightMatrix::descending(3), &field).unwrap());
            }
            t = wilkinson_step(&t, &StepTolerances::for_matrix(&t)).unwrap();
        }
        assert!(history.len() >= 2);
        assert!(history.windows(2).all(|w| w[1] > w[0]));
    }
}
