//! The subcommands, each generic over the working scalar type.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wilkinson_core::ap3::{
    ap3_chart, in_region_r, preimage_arc, region_boundary_y, t_from_xy, w_branch, PlanePoint, Wedge,
};
use wilkinson_core::batch;
use wilkinson_core::cantor::{
    cantor_slice, check_wedge_lemmas, f_s_solve, plane_orbit, rate_classify, realized_sign_sequence,
    wedge_escape_check, CantorConfig, RateClass, RateReport, RateWindow, SignSequence,
};
use wilkinson_core::charts::{phi, psi, wilkinson_step_coords, wilkinson_step_coords_branch, BidiagonalCoords, ChartIndex};
use wilkinson_core::orbit::{default_floor, wilkinson_orbit, OrbitStop};
use wilkinson_core::toda::{qr_step_general, toda_derivative, toda_derivative_fd, toda_flow_rk, h, TodaField, WeightMatrix};
use wilkinson_core::{classify_sets, wilkinson_shift, wilkinson_step, Branch, Real, Spectrum, StepTolerances, TridiagonalMatrix};

use crate::config::{ExperimentConfig, Start, TOLERANCE_NAMES};
use crate::error::{HarnessError, Result};
use crate::output::{Report, Table};

/// Which figure's data to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl std::str::FromStr for Figure {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            "fig7" => Ok(Figure::Fig7),
            other => Err(HarnessError::Config(format!("unknown figure {other:?} (expected fig2, fig4, fig5, fig6 or fig7)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Orbit,
    Rates,
    Chart,
    Cantor,
    Toda,
    Figures(Figure),
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Rates => "rates",
            Command::Chart => "chart",
            Command::Cantor => "cantor",
            Command::Toda => "toda",
            Command::Figures(_) => "figures",
            Command::Audit => "audit",
        }
    }
}

/// A report, plus the failure that cut it short if there was one. The
/// partial report is still worth writing.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<HarnessError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, failure: None }
    }
}

pub fn run<R: Real>(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let setup = Setup::<R>::new(cfg)?;
    match cmd {
        Command::Orbit => run_orbit(&setup),
        Command::Rates => run_rate_table(&setup).map(Into::into),
        Command::Chart => run_chart(&setup).map(Into::into),
        Command::Cantor => run_cantor(&setup).map(Into::into),
        Command::Toda => run_toda(&setup).map(Into::into),
        Command::Figures(which) => export_figure_data(&setup, which).map(Into::into),
        Command::Audit => run_audit(&setup),
    }
}

fn fmt<R: Real>(x: &R) -> String {
    x.to_decimal()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn parse<R: Real>(s: &str) -> Result<R> {
    R::parse_decimal(s).ok_or_else(|| HarnessError::Config(format!("cannot parse {s:?} as a number")))
}

/// `±U(0.2, 2)`, kept away from zero so the start is well inside the chart.
fn random_beta(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.gen_range(0.2..2.0);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Parsed, precision-specific view of a config.
struct Setup<'a, R> {
    cfg: &'a ExperimentConfig,
    spectrum: Spectrum<R>,
    chart: ChartIndex<R>,
}

impl<'a, R: Real> Setup<'a, R> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        let values = cfg.spectrum.iter().map(|s| parse(s)).collect::<Result<Vec<R>>>()?;
        let spectrum = Spectrum::new(values).map_err(|e| HarnessError::Config(format!("spectrum: {e}")))?;
        let chart = ChartIndex::from_one_based(&cfg.chart_or_identity(), spectrum.clone())
            .map_err(|e| HarnessError::Config(format!("chart: {e}")))?;
        Ok(Setup { cfg, spectrum, chart })
    }

    fn tol(&self, name: &str) -> Option<R> {
        self.cfg.tolerances.get(name).map(|v| R::parse_decimal(v).expect("validated"))
    }

    fn tie(&self, t: &TridiagonalMatrix<R>) -> R {
        self.tol("tie").unwrap_or_else(|| StepTolerances::for_matrix(t).tie)
    }

    fn step_tolerances(&self, t: &TridiagonalMatrix<R>) -> StepTolerances<R> {
        let mut tols = StepTolerances::for_matrix(t);
        if let Some(v) = self.tol("tie") {
            tols.tie = v;
        }
        if let Some(v) = self.tol("singular") {
            tols.singular = v;
        }
        if let Some(v) = self.tol("deflation") {
            tols.deflation = v;
        }
        tols
    }

    fn deflation(&self, t: &TridiagonalMatrix<R>) -> R {
        self.tol("deflation").unwrap_or_else(|| default_floor(t))
    }

    fn set_tol(&self) -> R {
        self.tol("set").unwrap_or_else(|| R::epsilon().sqrt())
    }

    fn dt(&self) -> R {
        self.tol("dt").unwrap_or_else(|| R::from_f64(1e-5))
    }

    fn cantor_config(&self) -> Result<CantorConfig<R>> {
        let mut c = CantorConfig::<R>::default();
        if let Some(a) = self.tol("a_star") {
            c.a_star = a;
        }
        c.validate().map_err(|e| HarnessError::Config(format!("cantor parameters: {e}")))?;
        Ok(c)
    }

    fn report(&self, cmd: &str) -> Report {
        let tolerances: BTreeMap<String, String> = TOLERANCE_NAMES
            .iter()
            .map(|(name, _)| (name.to_string(), self.cfg.tolerances.get(*name).cloned().unwrap_or_else(|| "auto".into())))
            .collect();
        Report::new(cmd, self.cfg, R::BITS, tolerances)
    }

    fn random_coords(&self, rng: &mut ChaCha8Rng) -> BidiagonalCoords<R> {
        let beta = (0..self.chart.order() - 1).map(|_| R::from_f64(random_beta(rng))).collect();
        self.chart.coords(beta).expect("shape matches chart")
    }

    /// `(c, d)` with the spectrum equal to `(c - d, c, c + d)`, when it is
    /// a three-term progression.
    fn progression(&self) -> Option<(R, R)> {
        let v = self.spectrum.values();
        if v.len() != 3 {
            return None;
        }
        let d = v[1].clone() - v[0].clone();
        let d2 = v[2].clone() - v[1].clone();
        let scale = R::max_of(d.abs(), R::one());
        ((d.clone() - d2).abs() <= R::epsilon() * scale * R::from_i64(16)).then(|| (v[1].clone(), d))
    }

    fn itinerary(&self, signs: &str, y0: &str) -> Result<(SignSequence, R)> {
        let s: SignSequence = signs.parse().map_err(|e| HarnessError::Config(format!("sign sequence: {e}")))?;
        Ok((s, parse(y0)?))
    }

    /// Start coordinates, or the config error that rules the start out.
    fn start_coords(&self) -> Result<BidiagonalCoords<R>> {
        match &self.cfg.start {
            Start::Random => Ok(self.random_coords(&mut ChaCha8Rng::seed_from_u64(self.cfg.seed))),
            Start::Coords { beta } => {
                let beta = beta.iter().map(|s| parse(s)).collect::<Result<Vec<R>>>()?;
                Ok(self.chart.coords(beta)?)
            }
            Start::Matrix { .. } => {
                let t = self.start_matrix()?;
                psi(&t, &self.chart).map_err(|e| HarnessError::Config(format!("start matrix is not in the chart: {e}")))
            }
            Start::Itinerary { signs, y0 } => {
                let (s, y0) = self.itinerary(signs, y0)?;
                let x = self.solve_on_set(&s, &y0)?;
                let (_, d) = self.progression().expect("checked by solve_on_set");
                Ok(self.chart.coords(vec![d.clone() * x, d * y0])?)
            }
        }
    }

    fn start_matrix(&self) -> Result<TridiagonalMatrix<R>> {
        let Start::Matrix { diag, offdiag } = &self.cfg.start else {
            return Ok(phi(&self.start_coords()?, &self.chart)?);
        };
        let d = diag.iter().map(|s| parse(s)).collect::<Result<Vec<R>>>()?;
        let o = offdiag.iter().map(|s| parse(s)).collect::<Result<Vec<R>>>()?;
        let t = TridiagonalMatrix::new(d, o).map_err(|e| HarnessError::Config(format!("start matrix: {e}")))?;
        let scale = R::max_of(t.max_abs(), R::one());
        if !self.spectrum.matches(&t, &(scale * R::from_f64(1e-6))) {
            return Err(HarnessError::Config("start matrix eigenvalues do not match the spectrum".into()));
        }
        Ok(t)
    }

    /// `f_s(y0)` in the normalized plane; needs the chart `(3, 1, 2)` on a
    /// three-term progression.
    fn solve_on_set(&self, s: &SignSequence, y0: &R) -> Result<R> {
        if self.progression().is_none() || self.chart.one_based() != [3, 1, 2] {
            return Err(HarnessError::Config(
                "itinerary starts need a three-term arithmetic-progression spectrum and chart 3,1,2".into(),
            ));
        }
        Ok(f_s_solve(s, y0, &self.cantor_config()?)?)
    }
}

fn set_flags<R: Real>(t: &TridiagonalMatrix<R>, spectrum: &Spectrum<R>, tol: &R) -> String {
    let m = classify_sets(t, spectrum, tol);
    let mut flags = Vec::new();
    if m.in_y {
        flags.push("Y".to_string());
    }
    if m.in_y0 {
        flags.push("Y0".to_string());
    }
    if let Some(i) = m.in_z {
        flags.push(format!("Z{}", i + 1));
    }
    if let Some(i) = m.in_d0 {
        flags.push(format!("D{}", i + 1));
    }
    if flags.is_empty() {
        "-".into()
    } else {
        flags.join("|")
    }
}

fn identity_field<R: Real>(spectrum: &Spectrum<R>) -> Result<TodaField<R>> {
    Ok(TodaField::new(Arc::new(|x: &R| x.clone()), spectrum.clone())?)
}

/// The orbit trace, iterated in chart coordinates (where each step only
/// rescales) and viewed in matrix space at every step.
fn run_orbit<R: Real>(s: &Setup<R>) -> Result<Outcome> {
    let mut coords = s.start_coords()?;
    let mut table = Table::new(&[
        "k", "bottom_entry", "beta_last", "ratio", "omega", "branch", "tie_gap", "h_value", "set_flags",
    ]);
    let weights = WeightMatrix::descending(s.spectrum.len());
    let field = identity_field(&s.spectrum)?;
    let set_tol = s.set_tol();
    let mut failure = None;
    let mut stop = "max_iter";
    for k in 0..=s.cfg.max_iter {
        let t = match phi(&coords, &s.chart) {
            Ok(t) => t,
            Err(e) => {
                failure = Some(HarnessError::at_step(e, k));
                stop = "error";
                break;
            }
        };
        let choice = wilkinson_shift(&t, &s.tie(&t));
        let bottom = t.bottom_entry().clone();
        let ratio = if coords.last().is_zero() { "undefined".to_string() } else { fmt(&(bottom.clone() / coords.last().clone())) };
        let h_value = h(&t, &weights, &field).map(|v| fmt(&v)).unwrap_or_else(|_| "undefined".into());
        table.push(vec![
            k.to_string(),
            fmt(&bottom),
            fmt(coords.last()),
            ratio,
            fmt(&choice.omega),
            choice.branch.to_string(),
            fmt(&choice.tie_gap),
            h_value,
            set_flags(&t, &s.spectrum, &set_tol),
        ]);
        if coords.last().is_zero() || bottom.abs() <= s.deflation(&t) {
            stop = "deflated";
            break;
        }
        if k == s.cfg.max_iter {
            break;
        }
        match wilkinson_step_coords(&coords, &s.chart, &s.tie(&t)) {
            Ok(next) => coords = next,
            Err(e) => {
                failure = Some(HarnessError::at_step(e, k));
                stop = "error";
                break;
            }
        }
    }
    let steps = table.rows.len() - 1;
    let mut report = s.report("orbit").table("trace", table).note("stop", stop).note("steps", steps.to_string());
    if let Some(f) = &failure {
        report = report.note("error", f.to_string());
    }
    Ok(Outcome { report, failure })
}

fn rate_row(label: String, fit: std::result::Result<RateReport, wilkinson_core::Error>, steps: usize, stop: &str) -> Vec<String> {
    match fit {
        Ok(r) => vec![
            label,
            fmt_f64(r.exponent),
            fmt_f64(r.log10_c_low),
            fmt_f64(r.log10_c_high),
            r.classification.name().into(),
            r.iterations_used.to_string(),
            steps.to_string(),
            stop.into(),
        ],
        Err(e) => vec![label, String::new(), String::new(), String::new(), format!("failed: {e}"), String::new(), steps.to_string(), stop.into()],
    }
}

fn stop_name(stop: &OrbitStop) -> String {
    match stop {
        OrbitStop::MaxIter => "max_iter".into(),
        OrbitStop::Deflated => "deflated".into(),
        OrbitStop::PrecisionFloor => "precision_floor".into(),
        OrbitStop::Failed { step, error } => format!("failed at step {step}: {error}"),
    }
}

const RATE_COLUMNS: [&str; 8] = ["start", "exponent", "log10_c_low", "log10_c_high", "class", "pairs", "steps", "stop"];

/// Per-start convergence-rate fits and their aggregate.
fn run_rate_table<R: Real>(s: &Setup<R>) -> Result<Report> {
    let mut table = Table::new(&RATE_COLUMNS);
    let mut exponents = Vec::new();
    if let Start::Itinerary { signs, y0 } = &s.cfg.start {
        // Plane orbits on the set and displaced off it.
        let (seq, y0) = s.itinerary(signs, y0)?;
        let x = s.solve_on_set(&seq, &y0)?;
        let cc = s.cantor_config()?;
        let offset = s.tol("offset").unwrap_or_else(|| R::from_f64(1e-3));
        let cases = [("on_set".to_string(), R::zero()), (format!("offset_-{offset}"), -offset.clone()), (format!("offset_+{offset}"), offset)];
        for (label, dx) in cases {
            let z0 = PlanePoint::new(x.clone() + dx.clone(), y0.clone());
            let orbit = plane_orbit(&z0, s.cfg.max_iter, &cc)?;
            let points = if dx.is_zero() { orbit.wedge_prefix().to_vec() } else { orbit.points.clone() };
            let fit = rate_classify(&points, &RateWindow::plane());
            if let Ok(r) = &fit {
                exponents.push((r.exponent, r.classification));
            }
            let stop = if orbit.exit.floor_step.is_some() { "precision_floor" } else { "max_iter" };
            table.push(rate_row(label, fit, orbit.exit.steps, stop));
        }
    } else {
        let starts: Vec<TridiagonalMatrix<R>> = match &s.cfg.start {
            Start::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.cfg.seed);
                (0..s.cfg.starts).map(|_| phi(&s.random_coords(&mut rng), &s.chart)).collect::<std::result::Result<_, _>>()?
            }
            _ => vec![s.start_matrix()?],
        };
        let window = RateWindow::matrix::<R>();
        let results = batch::map(&starts, |t| {
            let orbit = wilkinson_orbit(t, s.cfg.max_iter, &s.deflation(t));
            (rate_classify(&orbit.matrices, &window), orbit.steps(), stop_name(&orbit.stop))
        });
        for (i, (fit, steps, stop)) in results.into_iter().enumerate() {
            if let Ok(r) = &fit {
                exponents.push((r.exponent, r.classification));
            }
            table.push(rate_row(i.to_string(), fit, steps, &stop));
        }
    }
    let count = |c: RateClass| exponents.iter().filter(|(_, k)| *k == c).count().to_string();
    let failed = table.rows.len() - exponents.len();
    let mut hist: BTreeMap<i64, usize> = BTreeMap::new();
    for (p, _) in &exponents {
        *hist.entry((p * 10.0).floor() as i64).or_default() += 1;
    }
    let mut histogram = Table::new(&["bin_lo", "bin_hi", "count"]);
    for (bin, n) in hist {
        histogram.push(vec![fmt_f64(bin as f64 / 10.0), fmt_f64((bin + 1) as f64 / 10.0), n.to_string()]);
    }
    Ok(s.report("rates")
        .table("rates", table)
        .table("histogram", histogram)
        .note("cubic", count(RateClass::Cubic))
        .note("quadratic", count(RateClass::Quadratic))
        .note("indeterminate", count(RateClass::Indeterminate))
        .note("failed", failed.to_string()))
}

/// `psi`/`phi` round trips.
fn run_chart<R: Real>(s: &Setup<R>) -> Result<Report> {
    let matrices: Vec<TridiagonalMatrix<R>> = match &s.cfg.start {
        Start::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.cfg.seed);
            (0..s.cfg.starts).map(|_| phi(&s.random_coords(&mut rng), &s.chart)).collect::<std::result::Result<_, _>>()?
        }
        _ => vec![s.start_matrix()?],
    };
    let mut table = Table::new(&["start", "in_chart", "coords_error", "matrix_error", "relative_error"]);
    let mut worst = 0.0f64;
    for (i, t) in matrices.iter().enumerate() {
        match psi(t, &s.chart) {
            Ok(c) => {
                let back = phi(&c, &s.chart)?;
                let again = psi(&back, &s.chart)?;
                let err = back.max_abs_diff(t);
                let rel = err.clone() / t.frobenius_norm();
                worst = worst.max(rel.to_f64());
                table.push(vec![i.to_string(), "true".into(), fmt(&again.max_abs_diff(&c)), fmt(&err), fmt(&rel)]);
            }
            Err(e) => table.push(vec![i.to_string(), format!("false: {e}"), String::new(), String::new(), String::new()]),
        }
    }
    Ok(s.report("chart").table("round_trips", table).note("worst_relative_error", fmt_f64(worst)))
}

/// `f_s(y0)` and, with `depth > 0`, the slice intervals at height `y0`.
fn run_cantor<R: Real>(s: &Setup<R>) -> Result<Report> {
    let Start::Itinerary { signs, y0 } = &s.cfg.start else {
        return Err(HarnessError::Config("cantor needs an itinerary start, e.g. --start 'itinerary:(+)@0.1'".into()));
    };
    let (seq, y0r) = s.itinerary(signs, y0)?;
    let cc = s.cantor_config()?;
    let x = f_s_solve(&seq, &y0r, &cc)?;
    let horizon = s.cfg.max_iter.min(cc.max_depth);
    let realized = match realized_sign_sequence(&PlanePoint::new(x.clone(), y0r.clone()), horizon, &cc) {
        Ok((r, _)) => r.to_string(),
        Err(e) => format!("unresolved: {e}"),
    };
    let mut solution = Table::new(&["signs", "y0", "x", "realized"]);
    solution.push(vec![seq.to_string(), fmt(&y0r), fmt(&x), realized]);
    let mut report = s.report("cantor").table("solution", solution);
    if s.cfg.depth > 0 {
        let intervals = cantor_slice(&y0r, s.cfg.depth, &cc)?;
        let mut slice = Table::new(&["prefix", "lo", "hi", "width"]);
        for iv in &intervals {
            slice.push(vec![iv.label(), fmt(&iv.lo), fmt(&iv.hi), fmt(&iv.width())]);
        }
        report = report.table("slice", slice);
    }
    Ok(report)
}

/// Toda derivative against its finite difference, and the time-1 flow
/// against the exponential QR step.
fn run_toda<R: Real>(s: &Setup<R>) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.cfg.seed);
    let n = s.spectrum.len();
    let weights = WeightMatrix::descending(n);
    let field = identity_field(&s.spectrum)?;
    let dt = s.dt();
    let mut table = Table::new(&["instance", "derivative", "finite_difference", "relative_error", "positive", "flow_error"]);
    let mut worst_fd = 0.0f64;
    let mut all_positive = true;
    let mut worst_flow = 0.0f64;
    // The flow check integrates thousands of steps; a few instances suffice.
    let flow_checks = 3;
    for i in 0..s.cfg.starts {
        let t = phi(&s.random_coords(&mut rng), &s.chart)?;
        let exact = toda_derivative(&t, &weights, &field)?;
        let fd = toda_derivative_fd(&t, &weights, &field, &dt)?;
        let rel = ((exact.clone() - fd.clone()) / exact.clone()).abs();
        worst_fd = worst_fd.max(rel.to_f64());
        let positive = !exact.is_sign_negative() && !exact.is_zero();
        all_positive &= positive || t.is_diagonal();
        let flow_err = if i < flow_checks {
            let flowed = toda_flow_rk(&t, &field, &R::one(), 2000)?;
            let stepped = qr_step_general(&t, &|x: &R| x.exp(), &R::zero())?;
            let e = flowed.max_abs_diff(&stepped);
            worst_flow = worst_flow.max(e.to_f64());
            fmt(&e)
        } else {
            String::new()
        };
        table.push(vec![i.to_string(), fmt(&exact), fmt(&fd), fmt(&rel), positive.to_string(), flow_err]);
    }
    Ok(s.report("toda")
        .table("instances", table)
        .note("worst_relative_error", fmt_f64(worst_fd))
        .note("all_positive", all_positive.to_string())
        .note("worst_flow_error", fmt_f64(worst_flow)))
}

fn push_point<R: Real>(t: &mut Table, x: &R, y: &R, series: &str) {
    t.push(vec![fmt(x), fmt(y), series.to_string()]);
}

fn grid<R: Real>(lo: f64, hi: f64, n: usize) -> Vec<R> {
    (0..n).map(|i| R::from_f64(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect()
}

/// Bisection for a sign change of `f` on `[a, b]`.
fn bisect<R: Real>(mut a: R, mut b: R, f: &dyn Fn(&R) -> R) -> R {
    let fa_neg = f(&a).is_sign_negative();
    for _ in 0..200 {
        let m = (a.clone() + b.clone()) / R::from_i64(2);
        if f(&m).is_sign_negative() == fa_neg {
            a = m;
        } else {
            b = m;
        }
    }
    (a + b) / R::from_i64(2)
}

fn figure_tie_images<R: Real>(s: &Setup<R>, t: &mut Table) -> Result<()> {
    if s.spectrum.len() != 3 {
        return Err(HarnessError::Config("fig2 needs a 3x3 spectrum".into()));
    }
    let gap_at = |b1: &R, b2: &R| -> Option<R> {
        let c = s.chart.coords(vec![b1.clone(), b2.clone()]).ok()?;
        let m = phi(&c, &s.chart).ok()?;
        Some(m.diag()[1].clone() - m.diag()[2].clone())
    };
    let b2s: Vec<R> = grid(-4.0, 4.0, 161);
    for b1 in grid::<R>(-4.0, 4.0, 161) {
        for w in b2s.windows(2) {
            let (Some(g0), Some(g1)) = (gap_at(&b1, &w[0]), gap_at(&b1, &w[1])) else { continue };
            if g0.is_sign_negative() == g1.is_sign_negative() {
                continue;
            }
            let b2 = bisect(w[0].clone(), w[1].clone(), &|y: &R| gap_at(&b1, y).unwrap_or_else(R::zero));
            push_point(t, &b1, &b2, "Y");
            let c = s.chart.coords(vec![b1.clone(), b2])?;
            for (b, label) in [(Branch::Plus, "W+(Y)"), (Branch::Minus, "W-(Y)")] {
                if let Ok(img) = wilkinson_step_coords_branch(&c, &s.chart, b, &R::zero()) {
                    push_point(t, &img.beta[0], &img.beta[1], label);
                }
            }
        }
    }
    Ok(())
}

fn figure_branch_boundary<R: Real>(t: &mut Table) {
    let two = R::from_i64(2);
    let top = region_boundary_y(&two);
    for y in grid::<R>(-top.to_f64(), top.to_f64(), 101) {
        push_point(t, &two, &y, "x=2");
    }
    for x in grid::<R>(0.01, 6.0, 300) {
        let y = region_boundary_y(&x);
        push_point(t, &x, &y, "upper");
        push_point(t, &x, &-y, "lower");
    }
}

/// `n` offsets in `[-half, half]`, spaced as `s^power` so that a power
/// above 1 crowds them towards zero.
fn graded(half: f64, n: usize, power: i32) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            half * s.signum() * s.abs().powi(power)
        })
        .collect()
}

/// Boundaries of `R_+` / `R_-` pushed forward by their own branch, and the
/// arcs mapped onto `x = 2`, restricted to `|x - 2|, |y| <= half`. Images
/// near `p0 = (2, 0)` shrink quadratically, hence the grading.
fn figure_images<R: Real>(t: &mut Table, half: f64, n: usize, power: i32) {
    let two = R::from_i64(2);
    let keep = |p: &PlanePoint<R>| (p.x.to_f64() - 2.0).abs() <= half && p.y.to_f64().abs() <= half;
    let top = region_boundary_y(&two).to_f64().min(half);
    for y in graded(top, n, power) {
        let p = PlanePoint::new(two.clone(), R::from_f64(y));
        for (b, label) in [(Branch::Plus, "W+(x=2)"), (Branch::Minus, "W-(x=2)")] {
            let q = w_branch(&p, b);
            if q.is_finite() && keep(&q) {
                push_point(t, &q.x, &q.y, label);
            }
        }
    }
    for dx in graded(half, n, power) {
        let x = R::from_f64((2.0 + dx).max(0.01));
        let side = if x < two { (Branch::Plus, "W+(boundary)") } else { (Branch::Minus, "W-(boundary)") };
        let y = region_boundary_y(&x);
        for p in [PlanePoint::new(x.clone(), y.clone()), PlanePoint::new(x.clone(), -y)] {
            let q = w_branch(&p, side.0);
            if q.is_finite() && keep(&q) {
                push_point(t, &q.x, &q.y, side.1);
            }
        }
        if x != two {
            for sign in [1, -1] {
                let p = PlanePoint::new(x.clone(), preimage_arc(&x, sign));
                if in_region_r(&p) && keep(&p) {
                    push_point(t, &p.x, &p.y, if sign > 0 { "preimage+" } else { "preimage-" });
                }
            }
        }
    }
}

fn figure_slices<R: Real>(s: &Setup<R>, t: &mut Table) -> Result<()> {
    let cc = s.cantor_config()?;
    let heights = 8;
    for j in 1..=heights {
        let y = cc.a_star.clone() * R::from_i64(j) / R::from_i64(heights);
        for iv in cantor_slice(&y, s.cfg.depth, &cc)? {
            push_point(t, &iv.lo, &y, &format!("{}:lo", iv.label()));
            push_point(t, &iv.hi, &y, &format!("{}:hi", iv.label()));
        }
        // The line x = 2 splits the first level; the arcs mapped onto it
        // split the second.
        let two = R::from_i64(2);
        push_point(t, &two, &y, "r");
        let reach = y.clone() * R::from_i64(10);
        let left = bisect(two.clone() - reach.clone(), two.clone() - R::epsilon(), &|x: &R| preimage_arc(x, -1) - y.clone());
        let right = bisect(two.clone() + R::epsilon(), two + reach, &|x: &R| preimage_arc(x, 1) - y.clone());
        push_point(t, &left, &y, "preimage");
        push_point(t, &right, &y, "preimage");
    }
    Ok(())
}

/// Sampled curves as `(x, y, series)` rows.
fn export_figure_data<R: Real>(s: &Setup<R>, which: Figure) -> Result<Report> {
    let mut t = Table::new(&["x", "y", "series"]);
    let name = match which {
        Figure::Fig2 => {
            figure_tie_images(s, &mut t)?;
            "fig2"
        }
        Figure::Fig4 => {
            figure_branch_boundary::<R>(&mut t);
            "fig4"
        }
        Figure::Fig5 => {
            figure_images::<R>(&mut t, 2.0, 400, 1);
            "fig5"
        }
        Figure::Fig6 => {
            figure_images::<R>(&mut t, 0.25, 801, 4);
            "fig6"
        }
        Figure::Fig7 => {
            figure_slices(s, &mut t)?;
            "fig7"
        }
    };
    Ok(s.report("figures").note("figure", name).table(name, t))
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn audit_charts<R: Real>(s: &Setup<R>, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let bound = R::from_f64(1e-10);
    let mut worst_trip = R::zero();
    let mut worst_oracle = R::zero();
    let mut compared = 0;
    for _ in 0..s.cfg.starts {
        let c = s.random_coords(rng);
        let t = phi(&c, &s.chart)?;
        let back = phi(&psi(&t, &s.chart)?, &s.chart)?;
        worst_trip = R::max_of(worst_trip, back.max_abs_diff(&t) / t.frobenius_norm());
        if wilkinson_shift(&t, &R::zero()).tie_gap <= R::from_f64(1e-6) {
            continue;
        }
        let direct = wilkinson_step(&t, &s.step_tolerances(&t))?;
        let via = phi(&wilkinson_step_coords(&c, &s.chart, &s.tie(&t))?, &s.chart)?;
        worst_oracle = R::max_of(worst_oracle, via.max_abs_diff(&direct) / direct.max_abs());
        compared += 1;
    }
    Ok(vec![
        Check { name: "chart_round_trip", pass: worst_trip <= bound, detail: format!("worst relative error {worst_trip}") },
        Check {
            name: "oracle_equivalence",
            pass: worst_oracle <= R::from_f64(1e-9),
            detail: format!("worst relative disagreement {worst_oracle} over {compared} starts"),
        },
    ])
}

fn audit_toda<R: Real>(s: &Setup<R>, rng: &mut ChaCha8Rng) -> Result<Check> {
    let weights = WeightMatrix::descending(s.spectrum.len());
    let field = identity_field(&s.spectrum)?;
    let mut worst = 0.0f64;
    let mut positive = true;
    for _ in 0..s.cfg.starts.min(10) {
        let t = phi(&s.random_coords(rng), &s.chart)?;
        let exact = toda_derivative(&t, &weights, &field)?;
        let fd = toda_derivative_fd(&t, &weights, &field, &s.dt())?;
        worst = worst.max(((exact.clone() - fd) / exact.clone()).abs().to_f64());
        positive &= !exact.is_sign_negative() && !exact.is_zero();
    }
    Ok(Check {
        name: "toda_monotonicity",
        pass: positive && worst <= 1e-5,
        detail: format!("derivative positive: {positive}, worst difference {worst:e}"),
    })
}

fn audit_plane<R: Real>(s: &Setup<R>, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let chart = ap3_chart::<R>();
    let mut worst = R::zero();
    for _ in 0..50 {
        let p = PlanePoint::<R>::from_f64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let via = phi(&chart.coords(vec![p.x.clone(), p.y.clone()])?, &chart)?;
        worst = R::max_of(worst, t_from_xy(&p).max_abs_diff(&via));
    }
    let lemmas = check_wedge_lemmas(&s.cantor_config()?);
    let w = Wedge::new(R::from_f64(1e-3))?;
    let mut bad = 0;
    let mut checked = 0;
    while checked < 2000 {
        let p = PlanePoint::<R>::from_f64(rng.gen_range(0.05..4.0), rng.gen_range(-1e-3..1e-3));
        if w.contains(&p) || !in_region_r(&p) {
            continue;
        }
        if !matches!(wedge_escape_check(&p, &w), Ok(true)) {
            bad += 1;
        }
        checked += 1;
    }
    Ok(vec![
        Check {
            name: "explicit_3x3",
            pass: worst <= R::from_f64(1e-12),
            detail: format!("closed form vs chart map {worst}"),
        },
        Check {
            name: "wedge_lemmas",
            pass: lemmas.is_ok(),
            detail: match lemmas {
                Ok(()) => "flat arcs pushed down by at least 4x".into(),
                Err(e) => e.to_string(),
            },
        },
        Check { name: "wedge_escape", pass: bad == 0, detail: format!("{bad} violations in {checked} samples") },
    ])
}

/// The invariant suite at desk scale.
fn run_audit<R: Real>(s: &Setup<R>) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.cfg.seed);
    let mut checks = audit_charts(s, &mut rng)?;
    checks.push(audit_toda(s, &mut rng)?);
    checks.extend(audit_plane(s, &mut rng)?);
    let all_pass = checks.iter().all(|c| c.pass);
    let mut table = Table::new(&["check", "pass", "detail"]);
    for c in &checks {
        table.push(vec![c.name.into(), c.pass.to_string(), c.detail.clone()]);
    }
    let report = s.report("audit").table("checks", table).note("all_pass", all_pass.to_string());
    let failure = (!all_pass).then(|| {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        HarnessError::Numerical {
            step: None,
            source: wilkinson_core::Error::InvalidInput(format!("audit checks failed: {}", failed.join(", "))),
        }
    });
    Ok(Outcome { report, failure })
}
