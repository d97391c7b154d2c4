//! JSON scenario schema shared by the command-line frontend and the tests.
//!
//! A scenario names a source, a scatterer, a counting window and one task.
//! Unknown fields are rejected everywhere.
//!
//! ```json
//! {
//!   "source": { "scalar": { "f": 8.0, "modes": 200 } },
//!   "scatterer": { "ensemble": { "ensemble": "double-barrier", "modes": 200, "gamma": 0.1 } },
//!   "window": { "cells": 50.0 },
//!   "task": { "kind": "mc", "trials": 20000 },
//!   "seed": 7
//! }
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_eigenvalues, EigenvalueDensity};
use crate::genfn::{lorentzian_profile, LORENTZIAN_SPACING, LORENTZIAN_SPAN};
use crate::model::{CountingWindow, Ensemble, ModeCovariance, ProfileBin, TransmissionSpec};
use crate::{CMatrix, Error, Result, C64};

/// Schema version written into every JSON output.
pub const SPEC_VERSION: u32 = 1;

/// Random stream used to draw ensemble eigenvalues, kept apart from the
/// Monte Carlo trial streams.
const EIGENVALUE_STREAM: u64 = 1 << 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_version")]
    pub spec_version: u32,
    pub source: SourceSpec,
    pub scatterer: ScattererSpec,
    pub window: WindowSpec,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
}

fn default_version() -> u32 {
    SPEC_VERSION
}

/// Dense complex matrix as row-major real and imaginary parts. A missing
/// imaginary part means a real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub im: Vec<Vec<f64>>,
}

impl MatrixSpec {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |part: fn(&C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        if !self.im.is_empty()
            && (self.im.len() != rows || self.im.iter().any(|r| r.len() != cols))
        {
            return Err(Error::DimensionMismatch {
                what: "imaginary part",
                expected: rows,
                found: self.im.len(),
            });
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            let im = self.im.get(i).map_or(0.0, |r| r[j]);
            C64::new(self.re[i][j], im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Scalar { f: f64, modes: usize },
    Diagonal(Vec<f64>),
    Matrix(MatrixSpec),
}

impl SourceSpec {
    pub fn to_covariance(&self) -> Result<ModeCovariance> {
        Ok(match self {
            Self::Scalar { f, modes } => ModeCovariance::scalar(*f, *modes),
            Self::Diagonal(v) => ModeCovariance::diagonal(v),
            Self::Matrix(m) => ModeCovariance::Matrix(m.to_matrix()?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScattererSpec {
    Eigenvalues(Vec<f64>),
    Matrix(MatrixSpec),
    Ensemble {
        ensemble: Ensemble,
        modes: usize,
        gamma: f64,
    },
}

impl ScattererSpec {
    pub fn to_transmission(&self) -> Result<TransmissionSpec> {
        Ok(match self {
            Self::Eigenvalues(v) => TransmissionSpec::Eigenvalues(v.clone()),
            Self::Matrix(m) => TransmissionSpec::Matrix(m.to_matrix()?),
            Self::Ensemble {
                ensemble,
                modes,
                gamma,
            } => TransmissionSpec::Ensemble {
                ensemble: *ensemble,
                modes: *modes,
                gamma: *gamma,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub cells: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// Explicit frequency bins.
    Bins(Vec<ProfileBin>),
    /// `f(ω) = f_max / (1 + x²)` on a midpoint grid over `±span` half-widths.
    Lorentzian {
        f_max: f64,
        #[serde(default = "default_span")]
        span: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
    },
}

fn default_span() -> f64 {
    LORENTZIAN_SPAN
}

impl WindowSpec {
    pub fn to_window(&self) -> CountingWindow {
        match &self.profile {
            None => CountingWindow::new(self.cells),
            Some(ProfileSpec::Bins(bins)) => CountingWindow::with_profile(self.cells, bins.clone()),
            Some(ProfileSpec::Lorentzian {
                f_max,
                span,
                points,
            }) => {
                let points =
                    points.unwrap_or_else(|| (2.0 * span / LORENTZIAN_SPACING).round() as usize);
                CountingWindow::with_profile(
                    self.cells,
                    lorentzian_profile(*f_max, *span, points.max(1), self.cells),
                )
            }
        }
    }
}

/// Uniform grid `from, …, to` with `points` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.from],
            p => (0..p)
                .map(|i| self.from + (self.to - self.from) * i as f64 / (p - 1) as f64)
                .collect(),
        }
    }
}

/// Count distributions a `pmf` task can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmfMethod {
    Exact,
    Saddle,
    KClosed,
    Poisson,
    Gaussian,
}

impl PmfMethod {
    pub const ALL: [PmfMethod; 5] = [
        Self::Exact,
        Self::Saddle,
        Self::KClosed,
        Self::Poisson,
        Self::Gaussian,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Saddle => "saddle",
            Self::KClosed => "k_closed",
            Self::Poisson => "poisson",
            Self::Gaussian => "gaussian",
        }
    }
}

fn all_methods() -> Vec<PmfMethod> {
    PmfMethod::ALL.to_vec()
}

fn default_single_gamma() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Large-`N` Fano factor against occupation number for a single barrier
    /// of transparency `single_gamma` and for the scenario's ensemble.
    FanoSweep {
        occupations: Vec<f64>,
        #[serde(default = "default_single_gamma")]
        single_gamma: f64,
    },
    Pmf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
        #[serde(default = "all_methods")]
        methods: Vec<PmfMethod>,
    },
    GfTrace {
        xi: Grid,
    },
    Mc {
        trials: usize,
        /// Integer cell count; defaults to the window's `cells`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cells: Option<u32>,
    },
    Tail {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FanoSweep { .. } => "fano-sweep",
            Self::Pmf { .. } => "pmf",
            Self::GfTrace { .. } => "gf-trace",
            Self::Mc { .. } => "mc",
            Self::Tail { .. } => "tail",
        }
    }
}

impl Scenario {
    pub fn covariance(&self) -> Result<ModeCovariance> {
        self.source.to_covariance()
    }

    pub fn transmission(&self) -> Result<TransmissionSpec> {
        self.scatterer.to_transmission()
    }

    pub fn window(&self) -> CountingWindow {
        self.window.to_window()
    }
}

/// Replaces a named ensemble by `N` eigenvalues drawn from its density with
/// the given seed; other scatterers pass through unchanged.
pub fn resolve_ensemble(t: &TransmissionSpec, seed: u64) -> Result<TransmissionSpec> {
    match t {
        TransmissionSpec::Ensemble {
            ensemble,
            modes,
            gamma,
        } => {
            let d = EigenvalueDensity::new(*ensemble, *modes, *gamma)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(EIGENVALUE_STREAM);
            Ok(TransmissionSpec::Eigenvalues(sample_eigenvalues(&d, &mut rng)))
        }
        other => Ok(other.clone()),
    }
}
