//! Experiment configuration: defaults, a flat `key = value [unit]` file
//! format, and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use wilkinson_core::cantor::SignSequence;
use wilkinson_core::scalar::PrecisionLevel;
use wilkinson_core::Spectrum;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(config(format!("unknown format {other:?} (expected csv or json)"))),
        }
    }
}

/// Where an orbit starts. Numbers are kept as the decimal strings given so
/// they can be parsed at whatever precision the run uses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Start {
    /// Random chart coordinates drawn from the seed.
    Random,
    Matrix { diag: Vec<String>, offdiag: Vec<String> },
    Coords { beta: Vec<String> },
    /// The point `(f_s(y0), y0)` of the 3x3 arithmetic-progression plane.
    Itinerary { signs: String, y0: String },
}

impl FromStr for Start {
    type Err = HarnessError;

    /// `random`, `matrix:d1,..,dn;o1,..,o(n-1)`, `coords:b1,..` or
    /// `itinerary:<signs>@<y0>` with signs like `+-(+)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "random" {
            return Ok(Start::Random);
        }
        let (kind, body) = s.split_once(':').ok_or_else(|| config(format!("cannot parse start {s:?}")))?;
        match kind {
            "matrix" => {
                let (d, o) = body.split_once(';').ok_or_else(|| config("matrix start needs `diag;offdiag`".into()))?;
                Ok(Start::Matrix { diag: number_list(d)?, offdiag: number_list(o)? })
            }
            "coords" => Ok(Start::Coords { beta: number_list(body)? }),
            "itinerary" => {
                let (signs, y0) = body.split_once('@').ok_or_else(|| config("itinerary start needs `signs@y0`".into()))?;
                signs.parse::<SignSequence>().map_err(|e| config(format!("bad sign sequence {signs:?}: {e}")))?;
                number(y0)?;
                Ok(Start::Itinerary { signs: signs.trim().to_string(), y0: y0.trim().to_string() })
            }
            other => Err(config(format!("unknown start kind {other:?}"))),
        }
    }
}

/// Tolerance names the experiments understand.
pub const TOLERANCE_NAMES: &[(&str, &str)] = &[
    ("tie", "tie_gap at or below this is a tie (default: relative tolerance times Gershgorin width)"),
    ("singular", "pivot of R treated as zero (default: eps^2 times the entry scale)"),
    ("deflation", "bottom entry treated as zero (default: eps times the matrix scale)"),
    ("set", "set-membership tolerance for the flags column (default: sqrt(eps))"),
    ("boundary", "half-width of the branch boundary band (default: 64 eps)"),
    ("dt", "finite-difference time step for toda (default: 1e-5)"),
    ("offset", "x displacement of the off-set rate starts (default: 1e-3)"),
    ("a_star", "wedge height for cantor and audit (default: 1/10)"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub spectrum: Vec<String>,
    /// 1-based permutation; empty means the identity.
    pub chart: Vec<usize>,
    pub start: Start,
    pub max_iter: usize,
    pub precision_bits: u32,
    pub tolerances: BTreeMap<String, String>,
    pub format: Format,
    pub seed: u64,
    /// Number of starts or instances in batch commands.
    pub starts: usize,
    /// Slice depth for `cantor` and `figures fig7`.
    pub depth: usize,
    /// Claimed AP-freeness of the spectrum, checked against the values.
    pub ap_free: Option<bool>,
    /// Not part of the experiment, so not hashed.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            spectrum: vec!["1".into(), "2".into(), "4".into()],
            chart: Vec::new(),
            start: Start::Random,
            max_iter: 40,
            precision_bits: 53,
            tolerances: BTreeMap::new(),
            format: Format::Csv,
            seed: 0,
            starts: 20,
            depth: 3,
            ap_free: None,
            out: None,
        }
    }
}

/// Values that may come from a file or the command line; unset fields
/// leave the current value alone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub spectrum: Option<String>,
    pub chart: Option<String>,
    pub start: Option<String>,
    pub max_iter: Option<usize>,
    pub precision_bits: Option<u32>,
    pub tolerances: Vec<(String, String)>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub starts: Option<usize>,
    pub depth: Option<usize>,
    pub ap_free: Option<bool>,
    pub out: Option<PathBuf>,
}

fn config(msg: String) -> HarnessError {
    HarnessError::Config(msg)
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| config(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(config(format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

fn number_list(s: &str) -> Result<Vec<String>> {
    s.split(',')
        .map(|item| {
            number(item)?;
            Ok(item.trim().to_string())
        })
        .collect()
}

fn chart_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|item| item.trim().parse().map_err(|_| config(format!("chart entry {item:?} is not a positive integer"))))
        .collect()
}

/// `name=value`.
pub fn parse_tolerance(s: &str) -> Result<(String, String)> {
    let (name, value) = s.split_once('=').ok_or_else(|| config(format!("tolerance {s:?} is not name=value")))?;
    Ok((name.trim().to_string(), value.trim().to_string()))
}

/// Splits `value [unit]`, insisting the unit (if any) is the expected one.
fn with_unit<'a>(key: &str, raw: &'a str, unit: &str) -> Result<&'a str> {
    let mut parts = raw.split_whitespace();
    let value = parts.next().ok_or_else(|| config(format!("{key} has no value")))?;
    match (parts.next(), parts.next()) {
        (None, _) => Ok(value),
        (Some(u), None) if u == unit => Ok(value),
        (Some(u), _) => Err(config(format!("{key} is measured in {unit}, not {u:?}"))),
    }
}

fn parse_int<T: FromStr>(key: &str, raw: &str, unit: &str) -> Result<T> {
    with_unit(key, raw, unit)?.parse().map_err(|_| config(format!("{key} must be a non-negative integer, got {raw:?}")))
}

impl Overrides {
    /// Reads the flat config file format:
    ///
    /// ```text
    /// # comment
    /// spectrum = -1, 0, 1
    /// precision_bits = 512 bits
    /// max_iter = 30 steps
    /// tol.deflation = 1e-300
    /// ```
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "spectrum" => o.spectrum = Some(value.to_string()),
                "chart" => o.chart = Some(value.to_string()),
                "start" => o.start = Some(value.to_string()),
                "max_iter" => o.max_iter = Some(parse_int(key, value, "steps")?),
                "precision_bits" => o.precision_bits = Some(parse_int(key, value, "bits")?),
                "format" => o.format = Some(value.parse()?),
                "seed" => o.seed = Some(parse_int(key, value, "")?),
                "starts" => o.starts = Some(parse_int(key, value, "")?),
                "depth" => o.depth = Some(parse_int(key, value, "")?),
                "ap_free" => {
                    o.ap_free = Some(value.parse().map_err(|_| config(format!("ap_free must be true or false, got {value:?}")))?)
                }
                "out" => o.out = Some(PathBuf::from(value)),
                k if k.starts_with("tol.") => o.tolerances.push((k[4..].to_string(), value.to_string())),
                other => return Err(config(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        Ok(o)
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(s) = &self.spectrum {
            cfg.spectrum = number_list(s)?;
        }
        if let Some(c) = &self.chart {
            cfg.chart = chart_list(c)?;
        }
        if let Some(s) = &self.start {
            cfg.start = s.parse()?;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.precision_bits {
            cfg.precision_bits = v;
        }
        for (name, value) in &self.tolerances {
            cfg.tolerances.insert(name.clone(), value.clone());
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.starts {
            cfg.starts = v;
        }
        if let Some(v) = self.depth {
            cfg.depth = v;
        }
        if let Some(v) = self.ap_free {
            cfg.ap_free = Some(v);
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Defaults, then the file, then command-line values.
    pub fn resolve(file: Option<&Path>, cli: &Overrides) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = file {
            Overrides::from_file(path)?.apply(&mut cfg)?;
        }
        cli.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn order(&self) -> usize {
        self.spectrum.len()
    }

    pub fn precision(&self) -> Result<PrecisionLevel> {
        PrecisionLevel::at_least(self.precision_bits)
            .ok_or_else(|| config(format!("precision_bits {} exceeds the largest supported (16384)", self.precision_bits)))
    }

    /// `chart` as a 1-based permutation, the identity when unset.
    pub fn chart_or_identity(&self) -> Vec<usize> {
        if self.chart.is_empty() {
            (1..=self.order()).collect()
        } else {
            self.chart.clone()
        }
    }

    pub fn tolerance(&self, name: &str) -> Option<f64> {
        self.tolerances.get(name).map(|v| v.parse().expect("validated"))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.order();
        if n < 2 {
            return Err(config("spectrum needs at least two eigenvalues".into()));
        }
        let values: Vec<f64> = self.spectrum.iter().map(|s| number(s)).collect::<Result<_>>()?;
        let spectrum = Spectrum::new(values).map_err(|e| config(format!("spectrum: {e}")))?;
        if let Some(claim) = self.ap_free {
            if claim != spectrum.ap_free() {
                return Err(config(format!(
                    "spectrum marked ap_free={claim} but {} a three-term arithmetic progression",
                    if spectrum.ap_free() { "contains no" } else { "contains" }
                )));
            }
        }
        let chart = self.chart_or_identity();
        let mut sorted = chart.clone();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(config(format!("chart {chart:?} is not a permutation of 1..{n}")));
        }
        if self.max_iter == 0 {
            return Err(config("max_iter must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(config("starts must be at least 1".into()));
        }
        self.precision()?;
        for (name, value) in &self.tolerances {
            if !TOLERANCE_NAMES.iter().any(|(k, _)| k == name) {
                return Err(config(format!("unknown tolerance {name:?}")));
            }
            let v = number(value)?;
            if v < 0.0 {
                return Err(config(format!("tolerance {name} must be non-negative, got {value}")));
            }
        }
        match &self.start {
            Start::Matrix { diag, offdiag } if diag.len() != n || offdiag.len() + 1 != n => Err(config(format!(
                "matrix start has {} diagonal and {} off-diagonal entries for order {n}",
                diag.len(),
                offdiag.len()
            ))),
            Start::Coords { beta } if beta.len() + 1 != n => {
                Err(config(format!("coordinate start has {} entries, need {}", beta.len(), n - 1)))
            }
            _ => Ok(()),
        }
    }
}
