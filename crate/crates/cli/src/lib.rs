//! Scenario runner behind the `photocount` binary.
//!
//! Every run parses a JSON scenario, validates the source, scatterer and
//! counting window, reports regime warnings, and writes data-only outputs:
//! one CSV table named after the task plus `summary.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use photocount::ensembles::EigenvalueDensity;
use photocount::genfn::fano_broadband;
use photocount::montecarlo::{empirical_summary, sample_counts, McConfig};
use photocount::pmf::{
    auto_n_max, fitted_tail_rate, gaussian_reference, invert_fourier, poisson_distribution,
    saddle_distribution, KDistribution, TAIL_MASS_TARGET,
};
use photocount::scenario::{resolve_ensemble, PmfMethod, Scenario, Task, SPEC_VERSION};
use photocount::{
    reduce_to_spectrum, validate, CountDistribution, CountingCgf, CountingWindow,
    DoubleBarrierCgf, Ensemble, GeneratingFunction, ModeCovariance, RegimeWarning, Statistics,
    TransmissionSpec, ValidationReport,
};
use serde_json::{json, Value};

/// Why a run did not complete.
#[derive(Debug)]
pub enum Failure {
    /// Malformed scenario or parameters the task cannot use.
    Config(String),
    Validation(ValidationReport),
    /// Regime warnings escalated by `--strict`.
    Strict(Vec<RegimeWarning>),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Validation(_) => 2,
            Self::Strict(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "configuration error: {msg}"),
            Self::Validation(r) => write!(f, "invalid scenario: {r}"),
            Self::Strict(ws) => {
                write!(f, "regime warnings escalated by --strict:")?;
                for w in ws {
                    write!(f, "\n  {w}")?;
                }
                Ok(())
            }
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<photocount::Error> for Failure {
    fn from(e: photocount::Error) -> Self {
        match e {
            photocount::Error::Invalid(r) => Self::Validation(r),
            other => Self::Config(other.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Options shared by every invocation.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Overrides the scenario's seed.
    pub seed: Option<u64>,
    pub strict: bool,
    /// Stop after validation.
    pub validate_only: bool,
}

/// Files written by a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<RegimeWarning>,
}

pub fn parse_scenario(text: &str) -> Outcome<Scenario> {
    serde_json::from_str(text).map_err(|e| Failure::Config(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Outcome<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// Full-precision scientific notation (17 significant digits).
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }
}

/// Counting model of a scenario: the double-barrier closed form when the
/// source is scalar and the scatterer is the double-barrier ensemble,
/// otherwise the spectrum of `t μ t†` (with ensembles sampled by seed).
enum Model {
    Closed(DoubleBarrierCgf),
    Spectral(GeneratingFunction),
}

impl Model {
    fn cgf(&self) -> &dyn CountingCgf {
        match self {
            Self::Closed(g) => g,
            Self::Spectral(g) => g,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Closed(_) => "double-barrier closed form",
            Self::Spectral(_) => "spectral",
        }
    }
}

fn build_model(
    mu: &ModeCovariance,
    t: &TransmissionSpec,
    cells: f64,
    seed: u64,
) -> Outcome<Model> {
    if let (
        ModeCovariance::Scalar { f, .. },
        TransmissionSpec::Ensemble {
            ensemble: Ensemble::DoubleBarrier,
            modes,
            gamma,
        },
    ) = (mu, t)
    {
        let weight = cells * *modes as f64 * gamma;
        return Ok(Model::Closed(DoubleBarrierCgf::new(*f, weight)?));
    }
    let resolved = resolve_ensemble(t, seed)?;
    let spectrum = reduce_to_spectrum(mu, &resolved)?;
    Ok(Model::Spectral(GeneratingFunction::bose(spectrum, cells)?))
}

fn scalar_occupation(mu: &ModeCovariance) -> Option<f64> {
    match mu {
        ModeCovariance::Scalar { f, .. } => Some(*f),
        ModeCovariance::Matrix(_) => None,
    }
}

/// Weight of `Σ ν_j f_j² / Σ ν_j f_j` in the broadband Fano factor.
fn geometry_coefficient(t: &TransmissionSpec, seed: u64) -> Outcome<f64> {
    if let TransmissionSpec::Ensemble {
        ensemble,
        modes,
        gamma,
    } = t
    {
        let d = EigenvalueDensity::new(*ensemble, *modes, *gamma)?;
        return Ok(d.moment(2)? / d.moment(1)?);
    }
    let ts = match resolve_ensemble(t, seed)? {
        TransmissionSpec::Eigenvalues(v) => v,
        TransmissionSpec::Matrix(m) => {
            let h = m.adjoint() * &m;
            h.symmetric_eigenvalues().iter().copied().collect()
        }
        TransmissionSpec::Ensemble { .. } => unreachable!("resolved above"),
    };
    let (s1, s2) = ts.iter().fold((0.0, 0.0), |(a, b), t| (a + t, b + t * t));
    if s1 <= 0.0 {
        return Err(Failure::Config("scatterer transmits nothing".into()));
    }
    Ok(s2 / s1)
}

fn regime_warnings(scenario: &Scenario, t: &TransmissionSpec) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    if let TransmissionSpec::Ensemble {
        ensemble,
        modes,
        gamma,
    } = t
    {
        if let Ok(d) = EigenvalueDensity::new(*ensemble, *modes, *gamma) {
            out.extend(d.regime_warnings());
        }
    }
    if let (Task::Pmf { methods, .. }, Ok(mu)) = (&scenario.task, scenario.covariance()) {
        if let (true, Some(f)) = (methods.contains(&PmfMethod::KClosed), scalar_occupation(&mu)) {
            if let Ok(model) = build_model(&mu, t, scenario.window.cells, scenario.seed) {
                if let Ok(k) = KDistribution::new(f, model.cgf().cumulants().mean) {
                    out.extend(k.warnings());
                }
            }
        }
    }
    out
}

/// Runs one scenario end to end.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Outcome<Report> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if scenario.spec_version != SPEC_VERSION {
        return Err(Failure::Config(format!(
            "unsupported spec_version {} (expected {SPEC_VERSION})",
            scenario.spec_version
        )));
    }
    let mu = scenario.covariance()?;
    let t = scenario.transmission()?;
    let window = scenario.window();
    validate(&mu, &t, &window).into_result()?;

    let warnings = regime_warnings(&scenario, &t);
    if opts.strict && !warnings.is_empty() {
        return Err(Failure::Strict(warnings));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    if opts.validate_only {
        return Ok(Report {
            files: Vec::new(),
            warnings,
        });
    }
    if window.profile.is_some() && !matches!(scenario.task, Task::GfTrace { .. }) {
        return Err(Failure::Config(
            "frequency profiles are supported by the gf-trace task only".into(),
        ));
    }

    let ctx = Context {
        scenario: &scenario,
        mu: &mu,
        t: &t,
        window: &window,
    };
    let (table, csv, mut summary) = match &scenario.task {
        Task::FanoSweep {
            occupations,
            single_gamma,
        } => ctx.fano_sweep(occupations, *single_gamma)?,
        Task::Pmf { n_max, methods } => ctx.pmf(*n_max, methods)?,
        Task::GfTrace { xi } => ctx.gf_trace(&xi.values())?,
        Task::Mc { trials, cells } => ctx.mc(*trials, *cells)?,
        Task::Tail { n_max } => ctx.tail(*n_max)?,
    };
    summary["spec_version"] = json!(SPEC_VERSION);
    summary["task"] = json!(scenario.task.name());
    summary["seed"] = json!(scenario.seed);
    summary["warnings"] = json!(warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>());

    fs::create_dir_all(&opts.out)?;
    let table_path = opts.out.join(table);
    fs::write(&table_path, csv.text)?;
    let summary_path = opts.out.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    fs::write(&summary_path, text)?;
    Ok(Report {
        files: vec![table_path, summary_path],
        warnings,
    })
}

struct Context<'a> {
    scenario: &'a Scenario,
    mu: &'a ModeCovariance,
    t: &'a TransmissionSpec,
    window: &'a CountingWindow,
}

type TaskOutput = (&'static str, Csv, Value);

fn cumulant_json(c: &photocount::CumulantSummary) -> Value {
    json!({
        "mean": c.mean,
        "variance": c.variance,
        "fano": c.fano,
        "third": c.third,
    })
}

impl Context<'_> {
    fn model(&self) -> Outcome<Model> {
        build_model(self.mu, self.t, self.window.cells, self.scenario.seed)
    }

    fn fano_sweep(&self, occupations: &[f64], single_gamma: f64) -> Outcome<TaskOutput> {
        if occupations.is_empty() {
            return Err(Failure::Config("fano-sweep needs a nonempty occupation grid".into()));
        }
        let TransmissionSpec::Ensemble {
            ensemble,
            modes,
            gamma,
        } = self.t
        else {
            return Err(Failure::Config(
                "fano-sweep needs a double-barrier or diffusive ensemble scatterer".into(),
            ));
        };
        let column = match ensemble {
            Ensemble::DoubleBarrier => "fano_double",
            Ensemble::Diffusive => "fano_diffusive",
            Ensemble::SingleBarrier => {
                return Err(Failure::Config(
                    "fano-sweep compares the single barrier against a bimodal ensemble".into(),
                ))
            }
        };
        let single = EigenvalueDensity::new(Ensemble::SingleBarrier, *modes, single_gamma)?;
        let bimodal = EigenvalueDensity::new(*ensemble, *modes, *gamma)?;
        let mut csv = Csv::new(&["f", "fano_single", column]);
        for &f in occupations {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Failure::Config(format!("occupation {f} must be finite and ≥ 0")));
            }
            let a = single.cumulants(f, 1.0, Statistics::Bose).fano;
            let b = bimodal.cumulants(f, 1.0, Statistics::Bose).fano;
            csv.row(&[sci(f), sci(a), sci(b)]);
        }
        let summary = json!({
            "rows": occupations.len(),
            "single_gamma": single_gamma,
            "ensemble": ensemble.to_string(),
        });
        Ok(("fano_sweep.csv", csv, summary))
    }

    fn pmf(&self, n_max: Option<usize>, methods: &[PmfMethod]) -> Outcome<TaskOutput> {
        if methods.is_empty() {
            return Err(Failure::Config("pmf needs at least one method".into()));
        }
        let model = self.model()?;
        let g = model.cgf();
        let c = g.cumulants();
        let n_max = n_max.unwrap_or_else(|| auto_n_max(g, TAIL_MASS_TARGET));
        let exact = invert_fourier(g, n_max)?;
        let n_max = exact.n_max();

        let mut columns: Vec<(PmfMethod, CountDistribution)> = Vec::new();
        for &m in methods {
            let dist = match m {
                PmfMethod::Exact => exact.clone(),
                PmfMethod::Saddle => saddle_distribution(g, n_max)?,
                PmfMethod::KClosed => {
                    let f = scalar_occupation(self.mu).ok_or_else(|| {
                        Failure::Config("k_closed needs a scalar source".into())
                    })?;
                    KDistribution::new(f, c.mean)?.distribution(n_max)
                }
                PmfMethod::Poisson => poisson_distribution(c.mean, n_max),
                PmfMethod::Gaussian => {
                    if c.variance <= 0.0 {
                        return Err(Failure::Config(
                            "gaussian reference needs a positive variance".into(),
                        ));
                    }
                    gaussian_reference(c.mean, c.variance, n_max)
                }
            };
            columns.push((m, dist));
        }

        let mut header = vec!["n".to_string()];
        for (m, _) in &columns {
            header.push(format!("p_{}", m.name()));
            header.push(format!("log_p_{}", m.name()));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut csv = Csv::new(&header);
        for n in 0..=n_max {
            let mut row = vec![n.to_string()];
            for (_, d) in &columns {
                row.push(sci(d.p()[n]));
                row.push(sci(d.log_p()[n]));
            }
            csv.row(&row);
        }
        let d = exact.diagnostics();
        let summary = json!({
            "model": model.name(),
            "cumulants": cumulant_json(&c),
            "n_max": n_max,
            "methods": columns.iter().map(|(m, _)| m.name()).collect::<Vec<_>>(),
            "exact": {
                "normalization_defect": d.normalization_defect,
                "truncated_tail_mass_bound": d.truncated_tail_mass_bound,
                "max_relative_error": d.max_relative_error,
                "unresolved": d.unresolved,
                "mean": exact.mean(),
                "variance": exact.variance(),
            },
            "tail_rate": g.xi_max(),
        });
        Ok(("pmf.csv", csv, summary))
    }

    fn gf_trace(&self, xs: &[f64]) -> Outcome<TaskOutput> {
        let parts: Vec<Model> = match &self.window.profile {
            None => vec![self.model()?],
            Some(bins) => {
                let bins_mu = |f: f64| -> Outcome<ModeCovariance> {
                    match self.mu {
                        ModeCovariance::Scalar { modes, .. } => Ok(ModeCovariance::scalar(f, *modes)),
                        ModeCovariance::Matrix(_) => Err(Failure::Config(
                            "frequency profiles need a scalar source".into(),
                        )),
                    }
                };
                bins.iter()
                    .map(|b| build_model(&bins_mu(b.occupation)?, self.t, b.weight, self.scenario.seed))
                    .collect::<Outcome<_>>()?
            }
        };
        let xi_max = parts
            .iter()
            .map(|m| m.cgf().xi_max())
            .fold(f64::INFINITY, f64::min);
        let eval = |xi: f64| -> [f64; 4] {
            let mut acc = [0.0; 4];
            for m in &parts {
                for (a, d) in acc.iter_mut().zip(m.cgf().derivatives(xi)) {
                    *a += d;
                }
            }
            acc
        };

        let mut csv = Csv::new(&["xi", "F", "dF", "d2F", "d3F"]);
        for &xi in xs {
            if xi.is_nan() || xi >= xi_max {
                return Err(Failure::Config(format!(
                    "ξ = {xi} lies outside the convergence domain ξ < {xi_max}"
                )));
            }
            let d = if xi == 0.0 {
                let mut d = eval(0.0);
                d[0] = 0.0;
                d
            } else {
                eval(xi)
            };
            let mut row = vec![sci(xi)];
            row.extend(d.iter().map(|v| sci(*v)));
            csv.row(&row);
        }

        let [_, c1, c2, c3] = eval(0.0);
        let c = photocount::CumulantSummary::from_cumulants(c1, c2, c3);
        let mut summary = json!({
            "model": parts[0].name(),
            "cumulants": cumulant_json(&c),
            "xi_max": xi_max,
        });
        if let Some(bins) = &self.window.profile {
            let coefficient = geometry_coefficient(self.t, self.scenario.seed)?;
            summary["broadband_fano"] = json!(fano_broadband(bins, coefficient)?);
            summary["geometry_coefficient"] = json!(coefficient);
        }
        Ok(("gf_trace.csv", csv, summary))
    }

    fn mc(&self, trials: usize, cells: Option<u32>) -> Outcome<TaskOutput> {
        let cells = match cells {
            Some(c) => c,
            None => {
                let c = self.window.cells;
                if c.fract() != 0.0 || c < 1.0 || c > u32::MAX as f64 {
                    return Err(Failure::Config(format!(
                        "Monte Carlo needs an integer cell count (window has {c})"
                    )));
                }
                c as u32
            }
        };
        let resolved = resolve_ensemble(self.t, self.scenario.seed)?;
        let cfg = McConfig::new(cells, trials, self.scenario.seed)?;
        let counts = sample_counts(self.mu, &resolved, &cfg)?;
        let s = empirical_summary(&counts)?;
        let g = GeneratingFunction::bose(reduce_to_spectrum(self.mu, &resolved)?, cells as f64)?;
        let c = g.cumulants();

        let mut csv = Csv::new(&["trial", "count"]);
        for (i, n) in counts.iter().enumerate() {
            csv.row(&[i.to_string(), n.to_string()]);
        }
        let z = |emp: f64, exact: f64, err: f64| {
            if err > 0.0 {
                (emp - exact) / err
            } else if emp == exact {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let summary = json!({
            "cells": cells,
            "trials": trials,
            "empirical": {
                "mean": s.mean,
                "variance": s.variance,
                "fano": s.fano,
                "mean_error": s.mean_error,
                "variance_error": s.variance_error,
                "fano_error": s.fano_error,
            },
            "analytic": cumulant_json(&c),
            "z_scores": {
                "mean": z(s.mean, c.mean, s.mean_error),
                "variance": z(s.variance, c.variance, s.variance_error),
                "fano": z(s.fano, c.fano, s.fano_error),
            },
        });
        Ok(("counts.csv", csv, summary))
    }

    fn tail(&self, n_max: Option<usize>) -> Outcome<TaskOutput> {
        let model = self.model()?;
        let g = model.cgf();
        if g.is_degenerate() {
            return Err(Failure::Config("the vacuum has no tail".into()));
        }
        let exact = invert_fourier(g, n_max.unwrap_or(0))?;
        let fitted = fitted_tail_rate(&exact)
            .ok_or_else(|| Failure::Config("too few resolved points for a tail fit".into()))?;
        let rate = g.xi_max();
        let mut csv = Csv::new(&["n", "log_p"]);
        for (n, lp) in exact.log_p().iter().enumerate() {
            csv.row(&[n.to_string(), sci(*lp)]);
        }
        let summary = json!({
            "model": model.name(),
            "n_max": exact.n_max(),
            "tail_rate": rate,
            "fitted_rate": fitted,
            "relative_deviation": fitted / rate - 1.0,
        });
        Ok(("tail.csv", csv, summary))
    }
}
