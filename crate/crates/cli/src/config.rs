//! Run configuration: JSON file schema, built-in defaults, and
//! command-line overrides.
//!
//! Configuration is layered, later layers winning: built-in defaults,
//! then the optional JSON config file, then command-line flags (which
//! also read `SPARSEMV_*` environment variables). Unknown JSON keys are
//! rejected so typos fail loudly rather than silently falling back to
//! defaults, and every config file must carry a `spec_version` field so
//! files and binaries can evolve without misreads.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sparsemv_core::backtest::{self, Criterion};
use sparsemv_core::calibration::CalibrationConfig;
use sparsemv_core::estimation::EstimationConfig;
use sparsemv_core::solvers::{SolverConfig, SolverKind};

use crate::error::CliError;

/// The config-file schema revision this build reads.
pub const SPEC_VERSION: &str = "1";

/// How the input CSV is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Dated price levels; excess returns are computed from consecutive
    /// rows and the optional `RISK_FREE` column.
    #[default]
    Prices,
    /// Pre-computed excess returns, used as-is.
    Returns,
}

/// On-disk JSON config. Every field except `spec_version` is optional;
/// omitted fields keep their built-in defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Schema revision; must equal [`SPEC_VERSION`].
    pub spec_version: String,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub input_kind: Option<InputKind>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: Option<SolverKind>,
    #[serde(default)]
    pub solver_options: Option<SolverSection>,
    #[serde(default)]
    pub estimation: Option<EstimationSection>,
    #[serde(default)]
    pub calibration: Option<CalibrationSection>,
    #[serde(default)]
    pub backtest: Option<BacktestSection>,
    #[serde(default)]
    pub bench: Option<BenchSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub max_outer: Option<usize>,
    #[serde(default)]
    pub max_inner: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    #[serde(default)]
    pub eigen_floor_scale: Option<f64>,
    #[serde(default)]
    pub eta_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub p1: Option<f64>,
    #[serde(default)]
    pub p2: Option<f64>,
    #[serde(default)]
    pub alpha_floor_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    #[serde(default)]
    pub train_periods: Option<usize>,
    #[serde(default)]
    pub eval_periods: Option<usize>,
    #[serde(default)]
    pub criteria: Option<Vec<Criterion>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default)]
    pub cells: Option<Vec<BenchCell>>,
    #[serde(default)]
    pub solvers: Option<Vec<SolverKind>>,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// One benchmark problem size: a planted sparse instance of the given
/// dimension whose optimum has `support` nonzero weights.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCell {
    pub dimension: usize,
    pub support: usize,
}

/// Command-line overrides, applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Input CSV; commands that read data fail without one.
    pub input: Option<PathBuf>,
    pub input_kind: InputKind,
    /// Directory artifacts are written into (created if absent).
    pub output_dir: PathBuf,
    pub seed: u64,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    pub estimation: EstimationConfig,
    pub calibration: CalibrationConfig,
    pub train_periods: usize,
    pub eval_periods: usize,
    pub criteria: Vec<Criterion>,
    pub bench: BenchConfig,
}

/// Resolved benchmark plan.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cells: Vec<BenchCell>,
    pub solvers: Vec<SolverKind>,
    /// Certified gap tolerance for benchmark solves; defaults to the
    /// resolved solver tolerance.
    pub tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver_config = SolverConfig::default();
        let bench_tol = solver_config.tol;
        RunConfig {
            input: None,
            input_kind: InputKind::Prices,
            output_dir: PathBuf::from("."),
            seed: 0,
            solver: SolverKind::AdaptiveSupport,
            solver_config,
            estimation: EstimationConfig::default(),
            calibration: CalibrationConfig::default(),
            train_periods: backtest::DEFAULT_TRAIN_PERIODS,
            eval_periods: backtest::DEFAULT_EVAL_PERIODS,
            criteria: Criterion::ALL.to_vec(),
            bench: BenchConfig {
                cells: vec![
                    BenchCell {
                        dimension: 200,
                        support: 20,
                    },
                    BenchCell {
                        dimension: 500,
                        support: 50,
                    },
                ],
                solvers: SolverKind::ALL.to_vec(),
                tol: bench_tol,
            },
        }
    }
}

impl RunConfig {
    /// Checks every section, naming the offending field in the error.
    pub fn validate(&self) -> Result<(), CliError> {
        self.solver_config.validate().map_err(CliError::from)?;
        self.estimation.validate().map_err(CliError::from)?;
        self.calibration.validate().map_err(CliError::from)?;
        if self.train_periods == 0 {
            return Err(CliError::Config(
                "backtest.train_periods must be at least 1".into(),
            ));
        }
        if self.eval_periods == 0 {
            return Err(CliError::Config(
                "backtest.eval_periods must be at least 1".into(),
            ));
        }
        if self.criteria.is_empty() {
            return Err(CliError::Config(
                "backtest.criteria must name at least one strategy".into(),
            ));
        }
        if self.bench.cells.is_empty() {
            return Err(CliError::Config(
                "bench.cells must contain at least one cell".into(),
            ));
        }
        for (k, cell) in self.bench.cells.iter().enumerate() {
            if cell.dimension == 0 {
                return Err(CliError::Config(format!(
                    "bench.cells[{k}].dimension must be at least 1"
                )));
            }
            if cell.support > cell.dimension {
                return Err(CliError::Config(format!(
                    "bench.cells[{k}].support ({}) exceeds its dimension ({})",
                    cell.support, cell.dimension
                )));
            }
        }
        if self.bench.solvers.is_empty() {
            return Err(CliError::Config(
                "bench.solvers must name at least one solver".into(),
            ));
        }
        if !(self.bench.tol.is_finite() && self.bench.tol > 0.0) {
            return Err(CliError::Config(format!(
                "bench.tol must be a positive real, got {}",
                self.bench.tol
            )));
        }
        Ok(())
    }

    /// The backtest configuration implied by this run configuration.
    pub fn backtest_config(&self) -> backtest::BacktestConfig {
        backtest::BacktestConfig {
            train_periods: self.train_periods,
            eval_periods: self.eval_periods,
            criteria: self.criteria.clone(),
            solver: self.solver,
            solver_config: self.solver_config.clone(),
            estimation: self.estimation.clone(),
            calibration: self.calibration.clone(),
            seed: self.seed,
        }
    }
}

/// Loads and validates the run configuration: defaults, then the config
/// file at `path` (if given), then `overrides`.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let file = path.map(parse_file).transpose()?;
    resolve(file, overrides)
}

fn parse_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config '{}': {e}", path.display())))?;
    let parsed: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config '{}': {e}", path.display())))?;
    if parsed.spec_version != SPEC_VERSION {
        return Err(CliError::Config(format!(
            "config '{}': unsupported spec_version '{}' (this build reads '{SPEC_VERSION}')",
            path.display(),
            parsed.spec_version
        )));
    }
    Ok(parsed)
}

/// Applies `file` and then `overrides` on top of the defaults and
/// validates the result.
pub fn resolve(file: Option<ConfigFile>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut bench_tol_pinned = false;

    if let Some(file) = file {
        if let Some(v) = file.input {
            cfg.input = Some(v);
        }
        if let Some(v) = file.input_kind {
            cfg.input_kind = v;
        }
        if let Some(v) = file.output_dir {
            cfg.output_dir = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.solver {
            cfg.solver = v;
        }
        if let Some(s) = file.solver_options {
            if s.lambda.is_some() {
                cfg.solver_config.lambda = s.lambda;
            }
            if let Some(v) = s.tol {
                cfg.solver_config.tol = v;
            }
            if let Some(v) = s.batch_size {
                cfg.solver_config.batch_size = v;
            }
            if s.max_outer.is_some() {
                cfg.solver_config.max_outer = s.max_outer;
            }
            if let Some(v) = s.max_inner {
                cfg.solver_config.max_inner = v;
            }
        }
        if let Some(s) = file.estimation {
            if let Some(v) = s.eigen_floor_scale {
                cfg.estimation.eigen_floor_scale = v;
            }
            if let Some(v) = s.eta_floor {
                cfg.estimation.eta_floor = v;
            }
        }
        if let Some(s) = file.calibration {
            if let Some(v) = s.replicates {
                cfg.calibration.replicates = v;
            }
            if let Some(v) = s.p1 {
                cfg.calibration.p1 = v;
            }
            if let Some(v) = s.p2 {
                cfg.calibration.p2 = v;
            }
            if let Some(v) = s.alpha_floor_scale {
                cfg.calibration.alpha_floor_scale = v;
            }
        }
        if let Some(s) = file.backtest {
            if let Some(v) = s.train_periods {
                cfg.train_periods = v;
            }
            if let Some(v) = s.eval_periods {
                cfg.eval_periods = v;
            }
            if let Some(v) = s.criteria {
                cfg.criteria = v;
            }
        }
        if let Some(s) = file.bench {
            if let Some(v) = s.cells {
                cfg.bench.cells = v;
            }
            if let Some(v) = s.solvers {
                cfg.bench.solvers = v;
            }
            if let Some(v) = s.tol {
                cfg.bench.tol = v;
                bench_tol_pinned = true;
            }
        }
    }

    if let Some(v) = &overrides.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &overrides.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = overrides.seed {
        cfg.seed = v;
    }
    if let Some(v) = overrides.tol {
        cfg.solver_config.tol = v;
    }
    // Bench solves follow the solver tolerance unless the file pinned
    // an explicit bench.tol.
    if !bench_tol_pinned {
        cfg.bench.tol = cfg.solver_config.tol;
    }

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_config(json: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(json.as_bytes()).unwrap();
        file.flush().unwrap();
        file
    }

    #[test]
    fn defaults_validate() {
        let cfg = load(None, &Overrides::default()).unwrap();
        assert_eq!(cfg.solver, SolverKind::AdaptiveSupport);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.train_periods, 252);
        assert_eq!(cfg.criteria.len(), 4);
    }

    #[test]
    fn file_and_flags_layer_in_order() {
        let file = write_config(
            r#"{
                "spec_version": "1",
                "seed": 7,
                "solver": "split_bregman",
                "solver_options": {"tol": 1e-6, "max_inner": 500},
                "calibration": {"p1": 0.8},
                "backtest": {"train_periods": 100, "criteria": ["unpenalized"]}
            }"#,
        );
        let overrides = Overrides {
            seed: Some(9),
            tol: Some(1e-7),
            ..Overrides::default()
        };
        let cfg = load(Some(file.path()), &overrides).unwrap();
        assert_eq!(cfg.seed, 9, "flag beats file");
        assert_eq!(cfg.solver, SolverKind::SplitBregman);
        assert_eq!(cfg.solver_config.tol, 1e-7, "flag beats file");
        assert_eq!(cfg.solver_config.max_inner, 500);
        assert_eq!(cfg.calibration.p1, 0.8);
        assert_eq!(cfg.train_periods, 100);
        assert_eq!(cfg.criteria, vec![Criterion::Unpenalized]);
        assert_eq!(cfg.bench.tol, 1e-7, "bench follows solver tol by default");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let file = write_config(r#"{"spec_version": "1", "slover": "fista"}"#);
        let err = load(Some(file.path()), &Overrides::default()).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("slover"), "got: {err}");
    }

    #[test]
    fn missing_spec_version_is_rejected() {
        let file = write_config(r#"{"seed": 1}"#);
        let err = load(Some(file.path()), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("spec_version"), "got: {err}");
    }

    #[test]
    fn wrong_spec_version_is_rejected() {
        let file = write_config(r#"{"spec_version": "99"}"#);
        let err = load(Some(file.path()), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("99"), "got: {err}");
    }

    #[test]
    fn out_of_range_quantile_names_the_field() {
        let file = write_config(r#"{"spec_version": "1", "calibration": {"p1": 1.3}}"#);
        let err = load(Some(file.path()), &Overrides::default()).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("p1"), "got: {err}");
    }

    #[test]
    fn bench_cell_support_bounded_by_dimension() {
        let file = write_config(
            r#"{"spec_version": "1",
                "bench": {"cells": [{"dimension": 10, "support": 30}]}}"#,
        );
        let err = load(Some(file.path()), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("support"), "got: {msg}");
        assert!(msg.contains("30"), "got: {msg}");
    }

    #[test]
    fn explicit_bench_tol_survives_tol_flag() {
        let file = write_config(r#"{"spec_version": "1", "bench": {"tol": 1e-5}}"#);
        let overrides = Overrides {
            tol: Some(1e-9),
            ..Overrides::default()
        };
        let cfg = load(Some(file.path()), &overrides).unwrap();
        assert_eq!(cfg.bench.tol, 1e-5);
        assert_eq!(cfg.solver_config.tol, 1e-9);
    }

    #[test]
    fn unknown_solver_name_lists_choices() {
        let file = write_config(r#"{"spec_version": "1", "solver": "newton"}"#);
        let err = load(Some(file.path()), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("newton"), "got: {msg}");
        assert!(msg.contains("split_bregman"), "got: {msg}");
    }
}
