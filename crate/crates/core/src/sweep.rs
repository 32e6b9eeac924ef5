//! Parameter sweeps over the estimation pipeline, figure recipes, and CSV/SVG
//! output.
//!
//! Configuration files use ordinary frequencies in Hz (the `/2π` values) and
//! temperatures in kelvin; everything is converted to angular rates on load.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::estimation::{self, EstimateOptions, PointEstimate};
use crate::linalg::CMatrix;
use crate::magnomech::{CouplingMode, DisplacementPolicy, SystemParams};

const TWO_PI: f64 = 2.0 * PI;
pub const RECIPE_POINTS: usize = 401;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid spec: {0}")]
    SpecInvalid(String),
    #[error("all {} grid points failed", .record.rows.len())]
    AllPointsFailed { record: Box<RunRecord> },
    #[error("unknown figure `{0}`")]
    UnknownFigure(String),
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SweepError {
    fn io(path: &Path, source: impl Into<std::io::Error>) -> Self {
        SweepError::Io {
            path: path.to_path_buf(),
            source: source.into(),
        }
    }
}

impl From<Error> for SweepError {
    fn from(e: Error) -> Self {
        SweepError::SpecInvalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Effective,
    Microscopic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frequencies {
    pub omega_c_hz: f64,
    pub omega_m_hz: f64,
    pub omega_s_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_m_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub kappa_c_hz: f64,
    pub kappa_m_hz: f64,
    pub gamma_s_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    pub g_mc_hz: f64,
    pub mode: CouplingKind,
    /// Effective magnon-phonon coupling (effective mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_ms_hz: Option<f64>,
    /// Single-magnon magnon-phonon coupling (microscopic mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_ms_single_hz: Option<f64>,
    #[serde(default)]
    pub rabi_hz: f64,
    /// Shifted magnon detuning in effective mode; defaults to `Δ_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_m_eff_hz: Option<f64>,
}

/// System configuration as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub frequencies: Frequencies,
    pub rates: Rates,
    pub couplings: Couplings,
    pub temperature_k: f64,
}

impl Config {
    pub fn reference() -> Self {
        Self {
            frequencies: Frequencies {
                omega_c_hz: 10e9,
                omega_m_hz: 10e9,
                omega_s_hz: 10e6,
                omega_d_hz: None,
                delta_c_hz: Some(10e6),
                delta_m_hz: Some(10e6),
            },
            rates: Rates {
                kappa_c_hz: 6e6,
                kappa_m_hz: 1e6,
                gamma_s_hz: 100.0,
            },
            couplings: Couplings {
                g_mc_hz: 6e6,
                mode: CouplingKind::Effective,
                g_ms_hz: Some(6e6),
                g_ms_single_hz: None,
                rabi_hz: 1e14,
                delta_m_eff_hz: None,
            },
            temperature_k: 0.05,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        serde_json::from_str(text).map_err(|e| SweepError::SpecInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_params(&self) -> Result<SystemParams, SweepError> {
        let f = &self.frequencies;
        let (delta_c, delta_m) = match (f.omega_d_hz, f.delta_c_hz, f.delta_m_hz) {
            (Some(d), None, None) => (f.omega_c_hz - d, f.omega_m_hz - d),
            (None, Some(c), Some(m)) => (c, m),
            _ => {
                return Err(SweepError::SpecInvalid(
                    "give either omega_d_hz or both delta_c_hz and delta_m_hz".into(),
                ))
            }
        };
        let c = &self.couplings;
        let coupling = match c.mode {
            CouplingKind::Effective => {
                if c.g_ms_single_hz.is_some() {
                    return Err(SweepError::SpecInvalid(
                        "g_ms_single_hz is only valid in microscopic mode".into(),
                    ));
                }
                let g = c.g_ms_hz.ok_or_else(|| {
                    SweepError::SpecInvalid("effective mode needs g_ms_hz".into())
                })?;
                CouplingMode::Effective {
                    g_ms_eff: TWO_PI * g,
                    detuning_m_eff: TWO_PI * c.delta_m_eff_hz.unwrap_or(delta_m),
                    rabi: TWO_PI * c.rabi_hz,
                }
            }
            CouplingKind::Microscopic => {
                if c.g_ms_hz.is_some() || c.delta_m_eff_hz.is_some() {
                    return Err(SweepError::SpecInvalid(
                        "microscopic mode takes g_ms_single_hz and derives the rest".into(),
                    ));
                }
                let g = c.g_ms_single_hz.ok_or_else(|| {
                    SweepError::SpecInvalid("microscopic mode needs g_ms_single_hz".into())
                })?;
                CouplingMode::Microscopic {
                    g_ms: TWO_PI * g,
                    rabi: TWO_PI * c.rabi_hz,
                }
            }
        };
        let params = SystemParams {
            omega_c: TWO_PI * f.omega_c_hz,
            omega_m: TWO_PI * f.omega_m_hz,
            omega_s: TWO_PI * f.omega_s_hz,
            delta_c: TWO_PI * delta_c,
            delta_m: TWO_PI * delta_m,
            kappa_c: TWO_PI * self.rates.kappa_c_hz,
            kappa_m: TWO_PI * self.rates.kappa_m_hz,
            gamma_s: TWO_PI * self.rates.gamma_s_hz,
            g_mc: TWO_PI * c.g_mc_hz,
            coupling,
            temperature: self.temperature_k,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Parameters that can be swept, with their units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    DeltaCOverOmegaS,
    DeltaCHz,
    DeltaMHz,
    DeltaMEffHz,
    RabiHz,
    KappaCHz,
    KappaMHz,
    GammaSHz,
    GMcHz,
    GMsHz,
    TemperatureK,
}

impl SweepParameter {
    pub fn label(self) -> &'static str {
        match self {
            SweepParameter::DeltaCOverOmegaS => "Δc/ωs",
            SweepParameter::DeltaCHz => "Δc/2π (Hz)",
            SweepParameter::DeltaMHz => "Δm/2π (Hz)",
            SweepParameter::DeltaMEffHz => "Δ'm/2π (Hz)",
            SweepParameter::RabiHz => "Ω/2π (Hz)",
            SweepParameter::KappaCHz => "κc/2π (Hz)",
            SweepParameter::KappaMHz => "κm/2π (Hz)",
            SweepParameter::GammaSHz => "γs/2π (Hz)",
            SweepParameter::GMcHz => "Gmc/2π (Hz)",
            SweepParameter::GMsHz => "Gms/2π (Hz)",
            SweepParameter::TemperatureK => "T (K)",
        }
    }

    fn apply(self, p: &mut SystemParams, v: f64) -> Result<(), SweepError> {
        match self {
            SweepParameter::DeltaCOverOmegaS => p.delta_c = v * p.omega_s,
            SweepParameter::DeltaCHz => p.delta_c = TWO_PI * v,
            SweepParameter::DeltaMHz => p.delta_m = TWO_PI * v,
            SweepParameter::DeltaMEffHz => match &mut p.coupling {
                CouplingMode::Effective { detuning_m_eff, .. } => *detuning_m_eff = TWO_PI * v,
                CouplingMode::Microscopic { .. } => {
                    return Err(SweepError::SpecInvalid(
                        "delta_m_eff_hz is derived in microscopic mode".into(),
                    ))
                }
            },
            SweepParameter::RabiHz => match &mut p.coupling {
                CouplingMode::Effective { rabi, .. } | CouplingMode::Microscopic { rabi, .. } => {
                    *rabi = TWO_PI * v
                }
            },
            SweepParameter::KappaCHz => p.kappa_c = TWO_PI * v,
            SweepParameter::KappaMHz => p.kappa_m = TWO_PI * v,
            SweepParameter::GammaSHz => p.gamma_s = TWO_PI * v,
            SweepParameter::GMcHz => p.g_mc = TWO_PI * v,
            SweepParameter::GMsHz => match &mut p.coupling {
                CouplingMode::Effective { g_ms_eff, .. } => *g_ms_eff = TWO_PI * v,
                CouplingMode::Microscopic { g_ms, .. } => *g_ms = TWO_PI * v,
            },
            SweepParameter::TemperatureK => p.temperature = v,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * (i as f64 / last)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Families {
    pub name: SweepParameter,
    pub values: Vec<f64>,
}

/// Quantities a sweep can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Output {
    #[serde(rename = "B_R")]
    BR,
    #[serde(rename = "B_S")]
    BS,
    #[serde(rename = "B_MI")]
    BMI,
    R,
    Gamma,
    #[serde(rename = "H_mc")]
    HMc,
    #[serde(rename = "H_ms")]
    HMs,
    #[serde(rename = "H_cross")]
    HCross,
    #[serde(rename = "F_mc")]
    FMc,
    #[serde(rename = "F_ms")]
    FMs,
    #[serde(rename = "F_cross_re")]
    FCrossRe,
    #[serde(rename = "F_cross_im")]
    FCrossIm,
    #[serde(rename = "CFI_mc")]
    CfiMc,
    #[serde(rename = "CFI_ms")]
    CfiMs,
    #[serde(rename = "n_photon")]
    NPhoton,
    #[serde(rename = "n_phonon")]
    NPhonon,
    #[serde(rename = "compat")]
    Compat,
}

impl Output {
    pub const ALL: [Output; 17] = [
        Output::BR,
        Output::BS,
        Output::BMI,
        Output::R,
        Output::Gamma,
        Output::HMc,
        Output::HMs,
        Output::HCross,
        Output::FMc,
        Output::FMs,
        Output::FCrossRe,
        Output::FCrossIm,
        Output::CfiMc,
        Output::CfiMs,
        Output::NPhoton,
        Output::NPhonon,
        Output::Compat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::BR => "B_R",
            Output::BS => "B_S",
            Output::BMI => "B_MI",
            Output::R => "R",
            Output::Gamma => "Gamma",
            Output::HMc => "H_mc",
            Output::HMs => "H_ms",
            Output::HCross => "H_cross",
            Output::FMc => "F_mc",
            Output::FMs => "F_ms",
            Output::FCrossRe => "F_cross_re",
            Output::FCrossIm => "F_cross_im",
            Output::CfiMc => "CFI_mc",
            Output::CfiMs => "CFI_ms",
            Output::NPhoton => "n_photon",
            Output::NPhonon => "n_phonon",
            Output::Compat => "compat",
        }
    }

    pub fn from_name(name: &str) -> Option<Output> {
        Output::ALL.into_iter().find(|o| o.name() == name)
    }

    fn extract(self, e: &PointEstimate) -> Option<f64> {
        let f: &CMatrix = &e.qfim.rld.matrix;
        let rld_ok = !e.qfim.rld.support_limited;
        let h = &e.qfim.sld;
        match self {
            Output::BR => e.bounds.b_rld,
            Output::BS => Some(e.bounds.b_sld),
            Output::BMI => Some(e.bounds.b_mi),
            Output::R => e.bounds.ratio_r,
            Output::Gamma => e.bounds.gamma,
            Output::HMc => Some(h[(0, 0)]),
            Output::HMs => Some(h[(1, 1)]),
            Output::HCross => Some(h[(0, 1)]),
            Output::FMc => rld_ok.then(|| f[(0, 0)].re),
            Output::FMs => rld_ok.then(|| f[(1, 1)].re),
            Output::FCrossRe => rld_ok.then(|| f[(0, 1)].re),
            Output::FCrossIm => rld_ok.then(|| f[(0, 1)].im),
            Output::CfiMc => Some(e.qfim.cfi_het[0]),
            Output::CfiMs => Some(e.qfim.cfi_het[1]),
            Output::NPhoton => Some(e.n_photon),
            Output::NPhonon => Some(e.n_phonon),
            Output::Compat => Some(e.bounds.compat),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: Config,
    pub axis: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Families>,
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub options: EstimateOptions,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| SweepError::SpecInvalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axis.points < 2 {
            return Err(SweepError::SpecInvalid(format!(
                "axis needs at least 2 points, got {}",
                self.axis.points
            )));
        }
        if !(self.axis.start.is_finite() && self.axis.stop.is_finite()) {
            return Err(SweepError::SpecInvalid("axis bounds must be finite".into()));
        }
        if let Some(f) = &self.families {
            if f.values.is_empty() {
                return Err(SweepError::SpecInvalid("family list is empty".into()));
            }
            if f.name == self.axis.name {
                return Err(SweepError::SpecInvalid(
                    "family and axis parameters must differ".into(),
                ));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(SweepError::SpecInvalid("family values must be finite".into()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.outputs.iter().find(|o| !seen.insert(**o)) {
            return Err(SweepError::SpecInvalid(format!(
                "output {} listed twice",
                dup.name()
            )));
        }
        let mut p = self.base.to_params()?;
        // Checks that every swept parameter exists in the chosen coupling mode.
        self.axis.name.apply(&mut p, self.axis.start)?;
        if let Some(f) = &self.families {
            f.name.apply(&mut p, f.values[0])?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn family_values(&self) -> Vec<Option<f64>> {
        match &self.families {
            Some(f) => f.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    Unstable,
    NoConvergence,
    Ambiguous,
    Failed,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Unstable => "unstable",
            PointStatus::NoConvergence => "no-convergence",
            PointStatus::Ambiguous => "ambiguous",
            PointStatus::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            PointStatus::Ok,
            PointStatus::Unstable,
            PointStatus::NoConvergence,
            PointStatus::Ambiguous,
            PointStatus::Failed,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
    }

    fn from_error(e: &Error) -> Self {
        match e.root() {
            Error::UnstableDrift { .. } => PointStatus::Unstable,
            Error::NoConvergence { .. } => PointStatus::NoConvergence,
            Error::AmbiguousRoot { .. } => PointStatus::Ambiguous,
            _ => PointStatus::Failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub family_value: Option<f64>,
    pub axis_value: f64,
    pub values: Vec<Option<f64>>,
    pub status: PointStatus,
    /// Error message for failed points.
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: SweepSpec,
    pub spec_hash: String,
    pub version: &'static str,
    pub rows: Vec<Row>,
    pub wall_clock: Duration,
}

impl RunRecord {
    pub fn ok_count(&self) -> usize {
        self.rows.iter().filter(|r| r.status == PointStatus::Ok).count()
    }

    pub fn column(&self, output: Output) -> Option<usize> {
        self.spec.outputs.iter().position(|&o| o == output)
    }
}

/// How grid points are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over grid points; sequential when the `parallel`
    /// feature is off.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

fn evaluate(
    spec: &SweepSpec,
    base: &SystemParams,
    family: Option<f64>,
    axis_value: f64,
) -> Row {
    let mut p = *base;
    let applied = spec
        .families
        .as_ref()
        .zip(family)
        .map_or(Ok(()), |(f, v)| f.name.apply(&mut p, v))
        .and_then(|_| spec.axis.name.apply(&mut p, axis_value));
    let result = match applied {
        Ok(()) => estimation::estimate_point(&p, &spec.options),
        Err(e) => Err(Error::InvalidParams(e.to_string())),
    };
    match result {
        Ok(e) => Row {
            family_value: family,
            axis_value,
            values: spec.outputs.iter().map(|o| o.extract(&e)).collect(),
            status: PointStatus::Ok,
            message: None,
        },
        Err(err) => Row {
            family_value: family,
            axis_value,
            values: vec![None; spec.outputs.len()],
            status: PointStatus::from_error(&err),
            message: Some(err.to_string()),
        },
    }
}

/// Evaluate the grid, ordered by (family index, grid index).
pub fn run_sweep(spec: &SweepSpec, execution: Execution) -> Result<RunRecord, SweepError> {
    spec.validate()?;
    let started = Instant::now();
    let base = spec.base.to_params()?;
    let grid = spec.axis.grid();
    let jobs: Vec<(Option<f64>, f64)> = spec
        .family_values()
        .into_iter()
        .flat_map(|f| grid.iter().map(move |&x| (f, x)))
        .collect();
    let rows: Vec<Row> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => jobs
            .par_iter()
            .map(|&(f, x)| evaluate(spec, &base, f, x))
            .collect(),
        _ => jobs
            .iter()
            .map(|&(f, x)| evaluate(spec, &base, f, x))
            .collect(),
    };
    let record = RunRecord {
        spec: spec.clone(),
        spec_hash: spec.hash(),
        version: VERSION,
        rows,
        wall_clock: started.elapsed(),
    };
    if record.ok_count() == 0 {
        return Err(SweepError::AllPointsFailed {
            record: Box::new(record),
        });
    }
    Ok(record)
}

fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(spec: &SweepSpec) -> Vec<String> {
    let mut h = vec!["family_value".to_string(), "axis_value".to_string()];
    h.extend(spec.outputs.iter().map(|o| o.name().to_string()));
    h.push("status".into());
    h
}

/// Write the record as CSV to any sink.
pub fn write_csv<W: Write>(record: &RunRecord, sink: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(csv_header(&record.spec))?;
    for row in &record.rows {
        let mut cells = Vec::with_capacity(row.values.len() + 3);
        cells.push(row.family_value.map(format_number).unwrap_or_default());
        cells.push(format_number(row.axis_value));
        cells.extend(row.values.iter().map(|v| v.map(format_number).unwrap_or_default()));
        cells.push(row.status.as_str().to_string());
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(record: &RunRecord, path: &Path) -> Result<(), SweepError> {
    let file = std::fs::File::create(path).map_err(|e| SweepError::io(path, e))?;
    write_csv(record, std::io::BufWriter::new(file)).map_err(|e| SweepError::io(path, e))
}

/// A parsed sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<CsvRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub family_value: Option<f64>,
    pub axis_value: f64,
    pub values: Vec<Option<f64>>,
    pub status: PointStatus,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header[2..self.header.len() - 1]
            .iter()
            .position(|h| h == name)
    }
}

fn parse_cell(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad number `{s}`"))
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || header[0] != "family_value" || header[1] != "axis_value" {
        return Err("unexpected header".into());
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let n = rec.len();
        let status = PointStatus::parse(&rec[n - 1])
            .ok_or_else(|| format!("bad status `{}`", &rec[n - 1]))?;
        rows.push(CsvRow {
            family_value: parse_cell(&rec[0])?,
            axis_value: parse_cell(&rec[1])?.ok_or("missing axis value")?,
            values: (2..n - 1)
                .map(|i| parse_cell(&rec[i]))
                .collect::<Result<_, _>>()?,
            status,
        });
    }
    Ok(CsvTable { header, rows })
}

/// Run metadata written next to the CSV; kept out of the CSV so that the
/// latter stays byte-identical across runs.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    spec: &'a SweepSpec,
    spec_hash: &'a str,
    version: &'a str,
    wall_clock_s: f64,
    rows: usize,
    ok: usize,
    failures: Vec<Failure<'a>>,
}

#[derive(Debug, Serialize)]
struct Failure<'a> {
    family_value: Option<f64>,
    axis_value: f64,
    status: &'static str,
    message: &'a str,
}

pub fn emit_manifest(record: &RunRecord, path: &Path) -> Result<(), SweepError> {
    let m = Manifest {
        spec: &record.spec,
        spec_hash: &record.spec_hash,
        version: record.version,
        wall_clock_s: record.wall_clock.as_secs_f64(),
        rows: record.rows.len(),
        ok: record.ok_count(),
        failures: record
            .rows
            .iter()
            .filter(|r| r.status != PointStatus::Ok)
            .map(|r| Failure {
                family_value: r.family_value,
                axis_value: r.axis_value,
                status: r.status.as_str(),
                message: r.message.as_deref().unwrap_or(""),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(|e| SweepError::io(path, e))
}

pub use crate::plot::emit_plot;

/// A named figure made of one or more sweep panels.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub name: &'static str,
    pub panels: Vec<(String, SweepSpec)>,
}

pub const FIGURES: [&str; 11] = [
    "fig2", "fig3a", "fig3b", "fig4a", "fig4b", "fig4c", "fig5a", "fig5b", "fig6", "fig7a",
    "fig7b",
];

fn recipe_options() -> EstimateOptions {
    EstimateOptions {
        displacement: DisplacementPolicy::Means,
        ..Default::default()
    }
}

fn detuning_axis() -> Axis {
    Axis {
        name: SweepParameter::DeltaCOverOmegaS,
        start: -5.0,
        stop: 5.0,
        points: RECIPE_POINTS,
    }
}

fn rabi_axis() -> Axis {
    Axis {
        name: SweepParameter::RabiHz,
        start: 1e13,
        stop: 1e15,
        points: RECIPE_POINTS,
    }
}

fn spec(
    base: Config,
    axis: Axis,
    families: Option<(SweepParameter, &[f64])>,
    outputs: &[Output],
) -> SweepSpec {
    SweepSpec {
        base,
        axis,
        families: families.map(|(name, values)| Families {
            name,
            values: values.to_vec(),
        }),
        outputs: outputs.to_vec(),
        options: recipe_options(),
    }
}

const KAPPA_M_HZ: [f64; 4] = [0.5e6, 1e6, 2e6, 4e6];
const TEMPERATURES_K: [f64; 4] = [0.05, 0.1, 0.15, 0.2];
const FISHER: [Output; 6] = [
    Output::FMc,
    Output::FMs,
    Output::HMc,
    Output::HMs,
    Output::CfiMc,
    Output::CfiMs,
];
const BOUNDS: [Output; 9] = [
    Output::BR,
    Output::BS,
    Output::BMI,
    Output::R,
    Output::HMc,
    Output::HMs,
    Output::HCross,
    Output::FMc,
    Output::FMs,
];

/// Built-in figure recipes on the reference configuration.
pub fn recipe(name: &str) -> Result<Recipe, SweepError> {
    use SweepParameter as P;
    let base = Config::reference();
    let one = |s: SweepSpec| vec![(name.to_string(), s)];
    let mut bounds_cols = BOUNDS.to_vec();
    bounds_cols.extend([Output::FCrossRe, Output::FCrossIm, Output::Gamma]);
    let panels = match name {
        "fig2" => one(spec(
            base,
            detuning_axis(),
            Some((P::KappaMHz, &KAPPA_M_HZ)),
            &bounds_cols,
        )),
        "fig3a" => {
            let mut b = base;
            b.temperature_k = 0.06;
            one(spec(
                b,
                detuning_axis(),
                Some((P::KappaMHz, &KAPPA_M_HZ)),
                &[Output::Gamma, Output::R],
            ))
        }
        "fig3b" => one(spec(
            base,
            detuning_axis(),
            Some((P::TemperatureK, &TEMPERATURES_K)),
            &[Output::Gamma, Output::R],
        )),
        "fig4a" => one(spec(
            base,
            detuning_axis(),
            Some((P::RabiHz, &[0.5e14, 1e14, 2e14, 4e14])),
            &[Output::BMI],
        )),
        "fig4b" => one(spec(
            base,
            detuning_axis(),
            Some((P::KappaCHz, &[2e6, 4e6, 6e6, 8e6])),
            &[Output::BMI],
        )),
        "fig4c" => one(spec(
            base,
            detuning_axis(),
            Some((P::TemperatureK, &TEMPERATURES_K)),
            &[Output::BMI],
        )),
        "fig5a" => one(spec(
            base,
            rabi_axis(),
            Some((P::TemperatureK, &TEMPERATURES_K)),
            &[Output::BMI],
        )),
        "fig5b" => one(spec(
            base,
            rabi_axis(),
            Some((P::GammaSHz, &[100.0, 200.0, 500.0, 1000.0])),
            &[Output::BMI],
        )),
        "fig6" => vec![
            (
                "fig6_rabi".to_string(),
                spec(
                    base.clone(),
                    rabi_axis(),
                    None,
                    &[Output::NPhoton, Output::NPhonon],
                ),
            ),
            (
                "fig6_detuning".to_string(),
                spec(
                    base,
                    detuning_axis(),
                    None,
                    &[Output::NPhoton, Output::NPhonon],
                ),
            ),
        ],
        "fig7a" => one(spec(base, rabi_axis(), None, &FISHER)),
        "fig7b" => one(spec(base, detuning_axis(), None, &FISHER)),
        other => return Err(SweepError::UnknownFigure(other.to_string())),
    };
    let name = FIGURES
        .into_iter()
        .find(|f| *f == name)
        .expect("matched above");
    Ok(Recipe { name, panels })
}

/// One finished panel of a reproduced figure.
#[derive(Debug)]
pub struct PanelOutput {
    pub name: String,
    pub record: RunRecord,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Run a recipe, optionally overriding its estimation options, and write
/// `<panel>.csv`, `<panel>.json` and (if requested) `<panel>.svg` into `out`.
pub fn reproduce_figure(
    name: &str,
    options: Option<EstimateOptions>,
    out: &Path,
    svg: bool,
    execution: Execution,
) -> Result<Vec<PanelOutput>, SweepError> {
    let recipe = recipe(name)?;
    std::fs::create_dir_all(out).map_err(|e| SweepError::io(out, e))?;
    let mut done = Vec::new();
    for (panel, mut spec) in recipe.panels {
        if let Some(o) = options {
            spec.options = o;
        }
        let record = run_sweep(&spec, execution)?;
        let written = write_outputs(&record, out, &panel, svg)?;
        done.push(PanelOutput {
            name: panel,
            record,
            csv: written.0,
            svg: written.1,
        });
    }
    Ok(done)
}

/// Write CSV, manifest and optional SVG for a record under `out/<stem>.*`.
pub fn write_outputs(
    record: &RunRecord,
    out: &Path,
    stem: &str,
    svg: bool,
) -> Result<(PathBuf, Option<PathBuf>), SweepError> {
    std::fs::create_dir_all(out).map_err(|e| SweepError::io(out, e))?;
    let csv = out.join(format!("{stem}.csv"));
    emit_csv(record, &csv)?;
    emit_manifest(record, &out.join(format!("{stem}.json")))?;
    let plot = if svg {
        let p = out.join(format!("{stem}.svg"));
        emit_plot(record, &p, stem)?;
        Some(p)
    } else {
        None
    };
    Ok((csv, plot))
}
