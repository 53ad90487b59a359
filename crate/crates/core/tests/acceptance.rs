//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p wilkinson-core --test acceptance`; any failed
//! criterion makes the run fail.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wilkinson_core::ap3::{
    ap3_chart, branch_select, default_boundary_tol, discriminant, in_region_r, jacobian_w, omega, omega_partials,
    preimage_arc, t_from_xy, w_map, PlanePoint, Wedge,
};
use wilkinson_core::batch;
use wilkinson_core::cantor::{
    arc_image, child_interval, f_s_solve, plane_orbit, rate_classify, ratio_band, wedge_escape_check, CantorConfig,
    FlatArc, RateClass, RateWindow, SignSequence,
};
use wilkinson_core::charts::{phi, psi, wilkinson_step_coords, ChartIndex};
use wilkinson_core::orbit::{default_floor, wilkinson_orbit};
use wilkinson_core::toda::{h, qr_step_general, toda_derivative, toda_derivative_fd, toda_flow_rk, TodaField, WeightMatrix};
use wilkinson_core::{wilkinson_shift, wilkinson_step, Big, Branch, Error, Real, Spectrum, StepTolerances, TridiagonalMatrix};

const REFERENCE_X: &str = "1.70831765759310579903646760761255776476753484977976";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut pi: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        pi.swap(i, rng.gen_range(0..=i));
    }
    pi
}

fn random_jacobi(rng: &mut ChaCha8Rng, n: usize) -> TridiagonalMatrix<f64> {
    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let o: Vec<f64> = (0..n - 1)
        .map(|_| {
            let m = rng.gen_range(0.1..1.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    TridiagonalMatrix::from_f64(&d, &o).unwrap()
}

fn random_chart_for(rng: &mut ChaCha8Rng, t: &TridiagonalMatrix<f64>) -> ChartIndex<f64> {
    let spectrum = Spectrum::new(t.eigenvalues()).unwrap();
    ChartIndex::new(random_permutation(rng, t.order()), spectrum).unwrap()
}

fn chart_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let n = 3 + done % 4;
        let t = random_jacobi(&mut rng, n);
        let chart = random_chart_for(&mut rng, &t);
        let coords = match psi(&t, &chart) {
            Ok(c) => c,
            Err(Error::NotInChart { .. }) => continue,
            Err(e) => return outcome(false, format!("psi failed: {e}")),
        };
        let back = match phi(&coords, &chart) {
            Ok(b) => b,
            Err(e) => return outcome(false, format!("phi failed: {e}")),
        };
        worst = worst.max(back.max_abs_diff(&t) / t.frobenius_norm());
        done += 1;
    }
    outcome(worst <= 1e-10, format!("worst relative error {worst:.2e} over 200 matrices"))
}

fn coordinate_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let n = 3 + done % 4;
        let t = random_jacobi(&mut rng, n);
        if wilkinson_shift(&t, &0.0).tie_gap <= 1e-6 {
            continue;
        }
        let chart = random_chart_for(&mut rng, &t);
        let Ok(coords) = psi(&t, &chart) else { continue };
        let direct = match wilkinson_step(&t, &StepTolerances::for_matrix(&t)) {
            Ok(w) => w,
            Err(e) => return outcome(false, format!("matrix step failed: {e}")),
        };
        let via = match wilkinson_step_coords(&coords, &chart, &1e-12).and_then(|c| phi(&c, &chart)) {
            Ok(w) => w,
            Err(e) => return outcome(false, format!("coordinate step failed: {e}")),
        };
        worst = worst.max(via.max_abs_diff(&direct) / direct.max_abs());
        done += 1;
    }
    outcome(worst <= 1e-9, format!("worst relative disagreement {worst:.2e} over 200 starts"))
}

fn explicit_three_by_three() -> Outcome {
    let chart = ap3_chart::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = PlanePoint::from_f64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let via = phi(&chart.coords(vec![p.x, p.y]).unwrap(), &chart).unwrap();
        worst = worst.max(t_from_xy(&p).max_abs_diff(&via));
    }
    let close = |p: PlanePoint<f64>, m: [[f64; 3]; 3]| {
        let d = t_from_xy(&p).to_dense();
        (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (d[(i, j)] - m[i][j]).abs()).fold(0.0, f64::max)
    };
    let p0 = close(PlanePoint::from_f64(2.0, 0.0), [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    let q = close(PlanePoint::from_f64(0.0, 1.0), [[1.0, 0.0, 0.0], [0.0, -0.5, 0.5], [0.0, 0.5, -0.5]]);
    outcome(
        worst <= 1e-12 && p0 <= 1e-14 && q <= 1e-14,
        format!("random points {worst:.1e}, cone matrix {p0:.1e}, (0,1) matrix {q:.1e}"),
    )
}

type B512 = Big<512>;

/// Bottom-entry magnitudes are strictly decreasing from the first one
/// below `1e-2` on.
fn monotone_after_entry(mags: &[f64]) -> bool {
    let Some(start) = mags.iter().position(|m| *m < -2.0) else { return true };
    mags[start..].windows(2).all(|w| w[1] < w[0])
}

struct Rates {
    cubic_matrix: Outcome,
    quadratic_plane: Outcome,
    cubic_plane: Outcome,
    reference: Outcome,
    monotone: Outcome,
}

fn matrix_rates() -> (Outcome, bool) {
    let spectrum = Spectrum::<B512>::from_f64(&[1.0, 2.0, 4.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let starts: Vec<TridiagonalMatrix<B512>> = (0..50)
        .map(|_| {
            let chart = ChartIndex::new(random_permutation(&mut rng, 3), spectrum.clone()).unwrap();
            let beta = (0..2)
                .map(|_| {
                    let m = rng.gen_range(0.2..2.0);
                    B512::from_f64(if rng.gen_bool(0.5) { m } else { -m })
                })
                .collect();
            phi(&chart.coords(beta).unwrap(), &chart).unwrap()
        })
        .collect();
    let window = RateWindow::matrix::<B512>();
    let results = batch::map(&starts, |t| {
        let orbit = wilkinson_orbit(t, 40, &default_floor(t));
        let mags: Vec<f64> = orbit.matrices.iter().map(|m| m.bottom_entry().log10_abs()).collect();
        (rate_classify(&orbit.matrices, &window), monotone_after_entry(&mags))
    });
    let cubic = results.iter().filter(|(r, _)| matches!(r, Ok(rep) if rep.classification == RateClass::Cubic)).count();
    let exps: Vec<f64> = results.iter().filter_map(|(r, _)| r.as_ref().ok().map(|rep| rep.exponent)).collect();
    let lo = exps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone = results.iter().all(|(_, m)| *m);
    (outcome(cubic >= 48, format!("{cubic}/50 cubic, exponents in [{lo:.3}, {hi:.3}]")), monotone)
}

fn plane_bottom_monotone<R: Real>(points: &[PlanePoint<R>]) -> bool {
    let mags: Vec<f64> = points.iter().map(|p| t_from_xy(p).bottom_entry().log10_abs()).collect();
    monotone_after_entry(&mags)
}

fn rates() -> Rates {
    type B = Big<8192>;
    let (cubic_matrix, mut monotone) = matrix_rates();
    let mut monotone_detail = vec![format!("matrix orbits {}", if monotone { "ok" } else { "violated" })];

    let cfg = CantorConfig::<B>::default();
    let y0 = B::ratio(1, 10);
    let (quadratic_plane, x_star) = match f_s_solve(&SignSequence::constant(Branch::Plus), &y0, &cfg) {
        Ok(x) => {
            let z0 = PlanePoint::new(x.clone(), y0.clone());
            match plane_orbit(&z0, 64, &cfg) {
                Ok(orbit) => {
                    let tail = orbit.wedge_prefix();
                    let ok = plane_bottom_monotone(tail);
                    monotone &= ok;
                    monotone_detail.push(format!("on-set orbit {}", if ok { "ok" } else { "violated" }));
                    let fit = rate_classify(tail, &RateWindow::plane());
                    let (lo, hi, pairs) = ratio_band(tail, &RateWindow::plane(), 2.0);
                    match fit {
                        Ok(rep) => {
                            let pass = (1.8..=2.2).contains(&rep.exponent) && hi - lo <= 1.0 && pairs >= 10;
                            (
                                outcome(
                                    pass,
                                    format!(
                                        "exponent {:.4}, ratio band [{:.4}, {:.4}] over {pairs} steps",
                                        rep.exponent,
                                        10f64.powf(lo),
                                        10f64.powf(hi)
                                    ),
                                ),
                                Some(x),
                            )
                        }
                        Err(e) => (outcome(false, format!("rate fit failed: {e}")), Some(x)),
                    }
                }
                Err(e) => (outcome(false, format!("orbit failed: {e}")), Some(x)),
            }
        }
        Err(e) => (outcome(false, format!("solve failed: {e}")), None),
    };

    let cubic_plane = match &x_star {
        Some(x) => {
            let cfg = CantorConfig::<B512>::default();
            let x = B512::convert_from(x);
            let mut details = Vec::new();
            let mut pass = true;
            for d in [-1e-3, 1e-3] {
                let z0 = PlanePoint::new(x.clone() + B512::from_f64(d), B512::ratio(1, 10));
                let res = plane_orbit(&z0, 7, &cfg).and_then(|o| {
                    let ok = plane_bottom_monotone(&o.points);
                    rate_classify(&o.points, &RateWindow::plane()).map(|r| (r, ok))
                });
                match res {
                    Ok((rep, ok)) => {
                        monotone &= ok;
                        pass &= (2.7..=3.3).contains(&rep.exponent);
                        details.push(format!("{d:+e}: {:.4}", rep.exponent));
                    }
                    Err(e) => {
                        pass = false;
                        details.push(format!("{d:+e}: {e}"));
                    }
                }
            }
            monotone_detail.push("displaced orbits checked".into());
            outcome(pass, format!("exponents {}", details.join(", ")))
        }
        None => outcome(false, "no base point".into()),
    };

    let reference = {
        let cfg = CantorConfig::<B512>::default();
        match f_s_solve(&SignSequence::constant(Branch::Plus), &B512::ratio(1, 10), &cfg) {
            Ok(x) => {
                let digits = x.to_decimal_digits(60);
                let agree = digits
                    .chars()
                    .zip(REFERENCE_X.chars())
                    .take_while(|(a, b)| a == b)
                    .filter(|(c, _)| c.is_ascii_digit())
                    .count();
                outcome(agree >= 40, format!("{agree} significant digits agree; computed {}", &digits[..52]))
            }
            Err(e) => outcome(false, format!("solve failed: {e}")),
        }
    };

    let monotone = outcome(monotone, monotone_detail.join(", "));
    Rates { cubic_matrix, quadratic_plane, cubic_plane, reference, monotone }
}

fn random_field(rng: &mut ChaCha8Rng, spectrum: Spectrum<f64>) -> TodaField<f64> {
    let (a, b) = (rng.gen_range(0.3..1.0), rng.gen_range(-0.5..0.5));
    TodaField::new(Arc::new(move |x: &f64| a * x + b * x.sin()), spectrum).unwrap()
}

fn toda_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst_fd = 0.0f64;
    let mut min_value = f64::INFINITY;
    for i in 0..50 {
        let n = 3 + i % 3;
        let t = random_jacobi(&mut rng, n);
        let spectrum = Spectrum::new(t.eigenvalues()).unwrap();
        let field = random_field(&mut rng, spectrum);
        let m = WeightMatrix::descending(n);
        let exact = toda_derivative(&t, &m, &field).unwrap();
        let fd = toda_derivative_fd(&t, &m, &field, &1e-5).unwrap();
        worst_fd = worst_fd.max((exact - fd).abs() / exact.abs());
        min_value = min_value.min(exact);
        // h itself must be finite for the difference to mean anything.
        assert!(h(&t, &m, &field).unwrap().is_finite());
    }
    let mut worst_flow = 0.0f64;
    for i in 0..20 {
        let n = 3 + i % 3;
        let t = random_jacobi(&mut rng, n);
        let spectrum = Spectrum::new(t.eigenvalues()).unwrap();
        let field = random_field(&mut rng, spectrum);
        let flowed = toda_flow_rk(&t, &field, &1.0, 4000).unwrap();
        let g = field.g().clone();
        let stepped = qr_step_general(&t, &move |x: &f64| g(x).exp(), &1e-12).unwrap();
        worst_flow = worst_flow.max(flowed.max_abs_diff(&stepped));
    }
    outcome(
        worst_fd <= 1e-5 && min_value > 0.0 && worst_flow <= 1e-8,
        format!("derivative vs difference {worst_fd:.1e}, smallest value {min_value:.2e}, time-1 flow vs step {worst_flow:.1e}"),
    )
}

fn geometry() -> Outcome {
    type B = Big<256>;
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let tol = default_boundary_tol::<f64>();

    let mut det_bad = 0;
    let mut sampled = 0;
    while sampled < 10_000 {
        let p = PlanePoint::from_f64(rng.gen_range(0.05..4.0), rng.gen_range(-1.5..1.5));
        if p.y == 0.0 || !in_region_r(&p) {
            continue;
        }
        let Ok(b) = branch_select(&p, &tol) else { continue };
        match jacobian_w(&p, b) {
            Ok(j) if j.det > 0.0 => {}
            _ => det_bad += 1,
        }
        sampled += 1;
    }

    let mut worst_partial = 0.0f64;
    let hstep = B::from_f64(1e-30);
    for _ in 0..200 {
        let p = PlanePoint::<B>::from_f64(rng.gen_range(0.5..3.5), rng.gen_range(-0.5..0.5));
        for b in [Branch::Plus, Branch::Minus] {
            let (wx, wy) = omega_partials(&p, b).unwrap();
            let shift = |dx: f64, dy: f64| {
                let q = PlanePoint::new(p.x.clone() + hstep.clone() * B::from_f64(dx), p.y.clone() + hstep.clone() * B::from_f64(dy));
                omega(&q, b)
            };
            let fx = (shift(1.0, 0.0) - shift(-1.0, 0.0)) / (hstep.clone() * B::from_i64(2));
            let fy = (shift(0.0, 1.0) - shift(0.0, -1.0)) / (hstep.clone() * B::from_i64(2));
            let scale = B::max_of(wx.abs(), wy.abs());
            let err = B::max_of((fx - wx).abs(), (fy - wy).abs()) / scale;
            worst_partial = worst_partial.max(err.to_f64());
        }
    }

    let mut worst_arc = 0.0f64;
    let mut arcs = 0;
    while arcs < 200 {
        let x = B::from_f64(rng.gen_range(1.5..2.6));
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let p = PlanePoint::new(x.clone(), preimage_arc(&x, sign));
        if p.y.is_zero() || !in_region_r(&p) {
            continue;
        }
        match w_map(&p, &default_boundary_tol()) {
            Ok(img) => worst_arc = worst_arc.max(img.offset().abs().to_f64()),
            Err(_) => worst_arc = f64::INFINITY,
        }
        arcs += 1;
    }

    let mut worst_cone = 0.0f64;
    for _ in 0..200 {
        let r = 10f64.powf(rng.gen_range(-8.0..-4.0));
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = PlanePoint::<B>::from_f64(2.0 + r * th.cos(), r * th.sin());
        let model = B::from_i64(16) * (p.offset().square() + B::from_i64(32) * p.y.square());
        worst_cone = worst_cone.max((discriminant(&p) / model - B::one()).abs().to_f64());
    }

    let wedge = Wedge::new(0.1f64).unwrap();
    let mut min_wx = f64::INFINITY;
    let mut wedge_samples = 0;
    while wedge_samples < 1000 {
        let y = rng.gen_range(-0.1..0.1);
        if y == 0.0 {
            continue;
        }
        let (lo, hi) = wedge.slice(&y);
        let p = PlanePoint::new(rng.gen_range(lo..=hi), y);
        for b in [Branch::Plus, Branch::Minus] {
            match omega_partials(&p, b) {
                Ok((wx, _)) => min_wx = min_wx.min(wx),
                Err(_) => min_wx = f64::NEG_INFINITY,
            }
        }
        wedge_samples += 1;
    }

    let pass = det_bad == 0 && worst_partial <= 1e-8 && worst_arc <= 1e-10 && worst_cone <= 1e-3 && min_wx > 1.0 / 120.0;
    outcome(
        pass,
        format!(
            "{det_bad} non-positive determinants, partials {worst_partial:.1e}, arc offset {worst_arc:.1e}, cone ratio {worst_cone:.1e}, min omega_x {min_wx:.4}"
        ),
    )
}

fn random_flat_arc(rng: &mut ChaCha8Rng, a: f64) -> FlatArc<Big<256>> {
    let h = a * 10f64.powf(rng.gen_range(-3.0..-0.3));
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let slope = rng.gen_range(-0.03..0.03);
    let wiggle = rng.gen_range(0.0..0.01);
    let freq = rng.gen_range(1.0..5.0) / h;
    let reach = 12.0 * h;
    let samples = (0..96)
        .map(|i| {
            let u = -reach + 2.0 * reach * i as f64 / 95.0;
            let y = h + slope * u + wiggle * h * (freq * u).sin();
            PlanePoint::from_f64(2.0 + u, sign * y)
        })
        .collect();
    FlatArc::new(samples, Big::ratio(1, 10)).unwrap()
}

fn slice_chain<R: Real>(chain: &[Branch], y0: &R) -> Result<Vec<f64>, Error> {
    let cfg = CantorConfig::<R>::default();
    let (mut lo, mut hi) = Wedge::new(cfg.a_star.clone())?.slice(y0);
    let mut ratios = Vec::new();
    for d in 1..=chain.len() {
        let (l, r) = child_interval(&chain[..d], (&lo, &hi), y0, &cfg)?;
        ratios.push(((r.clone() - l.clone()) / (hi.clone() - lo.clone())).to_f64());
        (lo, hi) = (l, r);
    }
    Ok(ratios)
}

fn wedge_dynamics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let w = Wedge::new(1e-3f64).unwrap();
    let mut escapes_bad = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let p = PlanePoint::from_f64(rng.gen_range(0.05..4.0), rng.gen_range(-1e-3..1e-3));
        if w.contains(&p) || !in_region_r(&p) {
            continue;
        }
        if !matches!(wedge_escape_check(&p, &w), Ok(true)) {
            escapes_bad += 1;
        }
        checked += 1;
    }

    let cfg = CantorConfig::<Big<256>>::default();
    let mut worst_push = 0.0f64;
    let mut arc_failures = 0;
    for _ in 0..100 {
        let arc = random_flat_arc(&mut rng, 0.1);
        for b in [Branch::Plus, Branch::Minus] {
            match arc_image(&arc, b, &cfg) {
                Ok(img) => {
                    let push = (img.image.max_abs_y() / img.preimage.min_abs_y()).to_f64();
                    worst_push = worst_push.max(push);
                }
                Err(_) => arc_failures += 1,
            }
        }
    }

    let chains: Vec<Vec<Branch>> = (0..8)
        .map(|_| (0..10).map(|_| if rng.gen_bool(0.5) { Branch::Plus } else { Branch::Minus }).collect())
        .collect();
    let slice = batch::map(&chains, |chain| {
        slice_chain::<Big<4096>>(chain, &Big::ratio(1, 10))
            .or_else(|_| slice_chain::<Big<8192>>(chain, &Big::ratio(1, 10)))
    });
    let mut worst_ratio = 0.0f64;
    let mut slice_err = None;
    for r in slice {
        match r {
            Ok(ratios) => worst_ratio = ratios.into_iter().fold(worst_ratio, f64::max),
            Err(e) => slice_err = Some(e),
        }
    }
    let pass = escapes_bad == 0 && arc_failures == 0 && worst_push <= 0.26 && slice_err.is_none() && worst_ratio <= 0.26;
    let slice_note = match slice_err {
        Some(e) => format!("slice chain failed: {e}"),
        None => format!("slice contraction {worst_ratio:.3e} over 8 chains to depth 10"),
    };
    outcome(
        pass,
        format!("{escapes_bad} escape violations, {arc_failures} arc failures, push {worst_push:.4}, {slice_note}"),
    )
}

fn run(n: usize, f: impl FnOnce() -> Outcome, results: &mut Vec<(usize, Outcome, f64)>) {
    let start = Instant::now();
    let o = f();
    let secs = start.elapsed().as_secs_f64();
    eprintln!("criterion {n} done in {secs:.1}s");
    results.push((n, o, secs));
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    run(1, chart_round_trip, &mut results);
    run(2, coordinate_oracle, &mut results);
    run(3, explicit_three_by_three, &mut results);
    let start = Instant::now();
    let r = rates();
    let secs = start.elapsed().as_secs_f64();
    eprintln!("criteria 4-7 done in {secs:.1}s");
    results.push((4, r.cubic_matrix, secs));
    results.push((5, r.quadratic_plane, secs));
    results.push((6, r.cubic_plane, secs));
    results.push((7, r.reference, secs));
    run(8, toda_identity, &mut results);
    run(9, geometry, &mut results);
    run(10, wedge_dynamics, &mut results);
    results.push((11, r.monotone, secs));
    results.sort_by_key(|(n, _, _)| *n);

    let mut failed = false;
    for (n, o, secs) in &results {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n}: {status} [{secs:.1}s] {}", o.detail);
        failed |= !o.pass;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
