//! Versioned JSON experiment configs. Unknown keys are rejected and every
//! parameter is checked against the library preconditions before any work.

use std::path::{Path, PathBuf};

use chaos_bounds::breuer_major::FbmModel;
use chaos_bounds::sheet::{Discretization, SheetModel};
use chaos_bounds::stein_hermite::MAX_PAIRING_ORDER;
use chaos_bounds::toeplitz::{SpectralFunction, SpectralPair, Tabulated, MAX_GRID};
use serde::Deserialize;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;
pub const MAX_SAMPLES: usize = 100_000_000;
const MAX_Z_POINTS: usize = 10_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Monte Carlo draws per parameter point; 0 skips sampling.
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub z_grid: Option<ZGrid>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for ZGrid {
    fn default() -> Self {
        Self {
            min: -3.0,
            max: 3.0,
            count: 61,
        }
    }
}

impl ZGrid {
    pub fn points(&self) -> Vec<f64> {
        chaos_bounds::mc_verify::z_grid(self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    SteinCheck {
        #[serde(default = "default_q_max")]
        q_max: usize,
        #[serde(default = "default_stein_tol")]
        tol: f64,
    },
    Chaos2Report {
        spectrum: SpectrumSource,
        #[serde(default = "default_moment_orders")]
        moment_orders: Vec<u32>,
    },
    Toeplitz {
        pair: PairSource,
        horizons: Vec<f64>,
        mesh: f64,
        #[serde(default = "default_jmax")]
        jmax: usize,
        #[serde(default)]
        embedding: bool,
    },
    Sheet {
        #[serde(default = "default_dimension")]
        d: u32,
        #[serde(default)]
        eps: Option<Vec<f64>>,
        /// ε = e^{−k} for each k.
        #[serde(default)]
        eps_exponents: Option<Vec<u32>>,
        #[serde(default = "default_sheet_m")]
        m: usize,
        #[serde(default = "default_jmax")]
        jmax: usize,
        #[serde(default)]
        discretization: DiscretizationName,
    },
    BreuerMajor {
        hurst: f64,
        q: u32,
        delta: f64,
        horizons: Vec<f64>,
        #[serde(default = "default_bm_tol")]
        tol: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SteinCheck { .. } => "stein-check",
            Self::Chaos2Report { .. } => "chaos2-report",
            Self::Toeplitz { .. } => "toeplitz",
            Self::Sheet { .. } => "sheet",
            Self::BreuerMajor { .. } => "breuer-major",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectrumSource {
    Eigenvalues(Vec<f64>),
    SheetKernel {
        eps: f64,
        #[serde(default = "default_sheet_m")]
        m: usize,
        #[serde(default = "default_dimension")]
        d: u32,
    },
    Toeplitz {
        pair: PairSource,
        horizon: f64,
        mesh: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairSource {
    Builtin(String),
    Tabulated(TabulatedPair),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedPair {
    pub f: PathBuf,
    pub g: PathBuf,
    #[serde(default)]
    pub f_tail_exponent: Option<f64>,
    #[serde(default)]
    pub g_tail_exponent: Option<f64>,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscretizationName {
    #[default]
    Graded,
    Uniform,
}

impl From<DiscretizationName> for Discretization {
    fn from(d: DiscretizationName) -> Self {
        match d {
            DiscretizationName::Graded => Discretization::Graded,
            DiscretizationName::Uniform => Discretization::Uniform,
        }
    }
}

fn default_q_max() -> usize {
    6
}
fn default_stein_tol() -> f64 {
    1e-12
}
fn default_moment_orders() -> Vec<u32> {
    vec![0, 1, 2]
}
fn default_jmax() -> usize {
    4
}
fn default_dimension() -> u32 {
    1
}
fn default_sheet_m() -> usize {
    400
}
fn default_bm_tol() -> f64 {
    1e-10
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A config whose parameters passed every precondition, with the library
/// objects it resolves to.
#[derive(Debug, Clone)]
pub struct Validated {
    pub seed: u64,
    pub samples: usize,
    pub output_dir: PathBuf,
    pub z_grid: ZGrid,
    pub plan: Plan,
    /// The config as parsed, echoed into the report.
    pub raw: serde_json::Value,
}

#[derive(Debug, Clone)]
pub enum Plan {
    SteinCheck {
        q_max: usize,
        tol: f64,
    },
    Chaos2Report {
        spectrum: SpectrumPlan,
        moment_orders: Vec<u32>,
    },
    Toeplitz {
        pair: SpectralPair,
        horizons: Vec<(f64, usize)>,
        jmax: usize,
        embedding: bool,
    },
    Sheet {
        models: Vec<SheetModel>,
        jmax: usize,
    },
    BreuerMajor {
        models: Vec<FbmModel>,
        tol: f64,
    },
}

impl Plan {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SteinCheck { .. } => "stein-check",
            Self::Chaos2Report { .. } => "chaos2-report",
            Self::Toeplitz { .. } => "toeplitz",
            Self::Sheet { .. } => "sheet",
            Self::BreuerMajor { .. } => "breuer-major",
        }
    }
}

#[derive(Debug, Clone)]
pub enum SpectrumPlan {
    Eigenvalues(Vec<f64>),
    Sheet(SheetModel),
    Toeplitz {
        pair: SpectralPair,
        horizon: f64,
        m: usize,
    },
}

fn fail(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn lib(e: chaos_bounds::Error) -> CliError {
    CliError::Validation(e.to_string())
}

/// Parses and validates the file at `path`.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Validated, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&text, base, overrides)
}

/// Parses and validates config text; relative table paths resolve against `base`.
pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Validated, CliError> {
    let raw: serde_json::Value =
        serde_json::from_str(text).map_err(|e| fail(format!("malformed JSON: {e}")))?;
    let cfg: ExperimentConfig =
        serde_json::from_value(raw.clone()).map_err(|e| fail(format!("invalid config: {e}")))?;
    validate(cfg, raw, base, overrides)
}

fn validate(
    cfg: ExperimentConfig,
    raw: serde_json::Value,
    base: &Path,
    ov: &Overrides,
) -> Result<Validated, CliError> {
    if cfg.version != CONFIG_VERSION {
        return Err(fail(format!(
            "unsupported config version {} (expected {CONFIG_VERSION})",
            cfg.version
        )));
    }
    if cfg.samples > MAX_SAMPLES {
        return Err(fail(format!(
            "samples {} exceeds {MAX_SAMPLES}",
            cfg.samples
        )));
    }
    let z_grid = cfg.z_grid.unwrap_or_default();
    if !(z_grid.min.is_finite() && z_grid.max.is_finite() && z_grid.min <= z_grid.max) {
        return Err(fail("z_grid needs finite min <= max"));
    }
    if z_grid.count == 0 || z_grid.count > MAX_Z_POINTS {
        return Err(fail(format!("z_grid count must be in 1..={MAX_Z_POINTS}")));
    }
    let plan = match cfg.experiment {
        Experiment::SteinCheck { q_max, tol } => {
            if !(1..=MAX_PAIRING_ORDER).contains(&q_max) {
                return Err(fail(format!("q_max must be in 1..={MAX_PAIRING_ORDER}")));
            }
            if !(tol > 0.0 && tol < 1.0) {
                return Err(fail("tol must be in (0, 1)"));
            }
            Plan::SteinCheck { q_max, tol }
        }
        Experiment::Chaos2Report {
            spectrum,
            moment_orders,
        } => {
            if let Some(s) = moment_orders.iter().find(|&&s| s > 3) {
                return Err(fail(format!("moment order {s} outside 0..=3")));
            }
            let spectrum = match spectrum {
                SpectrumSource::Eigenvalues(v) => {
                    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                        return Err(fail(
                            "eigenvalues must be a non-empty list of finite numbers",
                        ));
                    }
                    SpectrumPlan::Eigenvalues(v)
                }
                SpectrumSource::SheetKernel { eps, m, d } => {
                    if m > MAX_GRID {
                        return Err(fail(format!("sheet grid {m} exceeds {MAX_GRID}")));
                    }
                    SpectrumPlan::Sheet(SheetModel::new(d, eps, m).map_err(lib)?)
                }
                SpectrumSource::Toeplitz {
                    pair,
                    horizon,
                    mesh,
                } => {
                    let pair = resolve_pair(pair, base)?;
                    let m = grid_size(horizon, mesh)?;
                    SpectrumPlan::Toeplitz { pair, horizon, m }
                }
            };
            Plan::Chaos2Report {
                spectrum,
                moment_orders,
            }
        }
        Experiment::Toeplitz {
            pair,
            horizons,
            mesh,
            jmax,
            embedding,
        } => {
            if !(2..=8).contains(&jmax) {
                return Err(fail("jmax must be in 2..=8"));
            }
            if horizons.is_empty() {
                return Err(fail("horizons must be non-empty"));
            }
            let pair = resolve_pair(pair, base)?;
            let horizons = horizons
                .iter()
                .map(|&t| Ok((t, grid_size(t, mesh)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            Plan::Toeplitz {
                pair,
                horizons,
                jmax,
                embedding,
            }
        }
        Experiment::Sheet {
            d,
            eps,
            eps_exponents,
            m,
            jmax,
            discretization,
        } => {
            let eps = match (eps, eps_exponents) {
                (Some(e), None) => e,
                (None, Some(k)) => k.iter().map(|&k| (-(k as f64)).exp()).collect(),
                _ => return Err(fail("give exactly one of eps or eps_exponents")),
            };
            if eps.is_empty() {
                return Err(fail("the eps ladder must be non-empty"));
            }
            if !(2..=8).contains(&jmax) {
                return Err(fail("jmax must be in 2..=8"));
            }
            if m > MAX_GRID {
                return Err(fail(format!("sheet grid {m} exceeds {MAX_GRID}")));
            }
            let models = eps
                .iter()
                .map(|&e| {
                    Ok(SheetModel::new(d, e, m)
                        .map_err(lib)?
                        .with_discretization(discretization.into()))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Plan::Sheet { models, jmax }
        }
        Experiment::BreuerMajor {
            hurst,
            q,
            delta,
            horizons,
            tol,
        } => {
            if horizons.is_empty() {
                return Err(fail("horizons must be non-empty"));
            }
            if !(1e-12..1e-2).contains(&tol) {
                return Err(fail("tol must be in [1e-12, 1e-2)"));
            }
            let models = horizons
                .iter()
                .map(|&t| FbmModel::new(hurst, q, t, delta).map_err(lib))
                .collect::<Result<Vec<_>, CliError>>()?;
            Plan::BreuerMajor { models, tol }
        }
    };
    Ok(Validated {
        seed: ov.seed.unwrap_or(cfg.seed),
        samples: cfg.samples,
        output_dir: ov
            .out
            .clone()
            .or(cfg.output_dir)
            .unwrap_or_else(|| PathBuf::from("out")),
        z_grid,
        plan,
        raw,
    })
}

/// m = T/h, which must be a positive integer no larger than the grid cap.
fn grid_size(horizon: f64, mesh: f64) -> Result<usize, CliError> {
    if !(horizon > 0.0 && horizon.is_finite() && mesh > 0.0 && mesh.is_finite()) {
        return Err(fail("horizon and mesh must be positive and finite"));
    }
    let m = horizon / mesh;
    let r = m.round();
    if (m - r).abs() > 1e-9 * m.max(1.0) || r < 1.0 {
        return Err(fail(format!(
            "horizon {horizon} is not a multiple of mesh {mesh}"
        )));
    }
    if r > MAX_GRID as f64 {
        return Err(fail(format!("grid size {r} exceeds {MAX_GRID}")));
    }
    Ok(r as usize)
}

fn resolve_pair(src: PairSource, base: &Path) -> Result<SpectralPair, CliError> {
    match src {
        PairSource::Builtin(name) => SpectralPair::builtin(&name).map_err(lib),
        PairSource::Tabulated(t) => {
            let load = |p: &Path, tail| {
                let p = if p.is_relative() {
                    base.join(p)
                } else {
                    p.to_path_buf()
                };
                Tabulated::from_path(&p, tail).map_err(lib)
            };
            let f = load(&t.f, t.f_tail_exponent)?;
            let g = load(&t.g, t.g_tail_exponent)?;
            SpectralPair::new(
                "tabulated",
                SpectralFunction::Tabulated(f),
                SpectralFunction::Tabulated(g),
                t.p,
                t.q,
            )
            .map_err(lib)
        }
    }
}
