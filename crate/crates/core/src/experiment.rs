//! Configuration-driven runs: a TOML file describes the domain, source,
//! boundary data, solver and the analyses to perform; [`run`] executes it and
//! writes CSV tables plus a JSON manifest with one verdict per check.
//!
//! The output directory is, in order of precedence, the `output_dir` override
//! passed to [`run`], the `FREEBOUND_OUTPUT_DIR` environment variable, the
//! config's `output_dir`, and `out/<config file stem>`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    barrier_field, blowup_sequence, extract_free_boundary, growth_upper_check, nondegeneracy_check,
    unit_grid, weiss_profile, BlowupReport, GrowthReport, WeissProfile,
};
use crate::error::{config_err, Error, Result};
use crate::geometry::{point, BoundaryData, DomainSpec, Grid, Point};
use crate::solver::{self, Method, SolveOptions, SolveReport};
use crate::source::{
    default_cap, growth_exponent, predicted_holder_exponent, Region, SourceKind, SourceTerm,
};

pub const OUTPUT_DIR_ENV: &str = "FREEBOUND_OUTPUT_DIR";

/// Descriptive header shown by [`list_fixtures`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureMeta {
    #[serde(default)]
    pub name: String,
    /// The statement the fixture puts to the test.
    #[serde(default)]
    pub exercises: String,
    /// Expected verdicts.
    #[serde(default)]
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceShape {
    Constant {
        value: f64,
    },
    Piecewise {
        background: f64,
        regions: Vec<Region>,
    },
    /// `cap` defaults to `|amplitude| h^{-gamma}` at each resolution.
    RadialSingular {
        amplitude: f64,
        center: Vec<f64>,
        gamma: f64,
        cap: Option<f64>,
    },
    MollifiedPointMass {
        mass: f64,
        center: Vec<f64>,
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    #[serde(flatten)]
    pub shape: SourceShape,
    /// Integrability exponent; `inf` for bounded sources.
    #[serde(default = "infinity")]
    pub q: f64,
    /// Lower bound on `|f|`, required by the nondegeneracy analysis.
    #[serde(default)]
    pub c0: Option<f64>,
}

fn infinity() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant { value: f64 },
    /// `g(x) = value + gradient · x`.
    Affine { value: f64, gradient: Vec<f64> },
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig::Constant { value: 0.0 }
    }
}

impl BoundaryConfig {
    fn to_data(&self) -> BoundaryData {
        match self {
            BoundaryConfig::Constant { value } => BoundaryData::Constant(*value),
            BoundaryConfig::Affine { value, gradient } => {
                let (v, d) = (*value, point(gradient));
                BoundaryData::function(move |x| v + d[0] * x[0] + d[1] * x[1])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    GaussSeidel,
    #[default]
    Sor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub tol_residual: Option<f64>,
}

fn default_omega() -> f64 {
    1.5
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: MethodName::Sor,
            omega: default_omega(),
            max_iters: None,
            tol_residual: None,
        }
    }
}

impl SolverConfig {
    fn options(&self, seed: u64, tol_uniqueness: f64) -> SolveOptions {
        SolveOptions {
            method: match self.method {
                MethodName::GaussSeidel => Method::ProjectedGaussSeidel,
                MethodName::Sor => Method::ProjectedSor { omega: self.omega },
            },
            max_iters: self.max_iters,
            tol_residual: self.tol_residual,
            tol_uniqueness,
            seed,
        }
    }
}

/// Radii are given in units of the mesh width so that ladders track refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub radii_h: Vec<f64>,
    /// Accepted slope window; defaults to the predicted exponent ± 0.15.
    #[serde(default)]
    pub min_slope: Option<f64>,
    #[serde(default)]
    pub max_slope: Option<f64>,
    /// Set to drop the upper end of the window (one-sided check).
    #[serde(default)]
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondegeneracyConfig {
    pub radii_h: Vec<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeissConfig {
    pub radii_h: Vec<f64>,
    /// `tol_mono = tol_mono_factor · h`.
    #[serde(default = "default_tol_mono_factor")]
    pub tol_mono_factor: f64,
    #[serde(default = "default_unit_resolution")]
    pub unit_resolution: usize,
}

fn default_tol_mono_factor() -> f64 {
    10.0
}

fn default_unit_resolution() -> usize {
    257
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    /// Schedule `r_n = r0 · ratio^n`, `n = 0..steps`.
    pub r0: f64,
    pub steps: usize,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_unit_resolution")]
    pub unit_resolution: usize,
    /// Bound on the final degree-2 homogeneity residual.
    #[serde(default = "default_max_residual")]
    pub max_residual: f64,
    /// Successive `C⁰` distances must decrease from this index on.
    #[serde(default = "default_decrease_from")]
    pub decrease_from: usize,
    /// Relative window around `1/2` for the residual ratio between
    /// consecutive resolutions.
    #[serde(default = "default_halving_tolerance")]
    pub halving_tolerance: f64,
}

fn default_ratio() -> f64 {
    0.5
}

fn default_max_residual() -> f64 {
    1e-2
}

fn default_decrease_from() -> usize {
    1
}

fn default_halving_tolerance() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_uniqueness_tol")]
    pub tol: f64,
}

fn default_trials() -> usize {
    5
}

fn default_uniqueness_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_oracle_tol")]
    pub tol: f64,
}

fn default_oracle_tol() -> f64 {
    1e-9
}

/// Requested analyses; a table's presence is the request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Point near the free boundary; analyses centre at the nearest node of
    /// the zero set adjacent to the detected free boundary.
    #[serde(default)]
    pub anchor_hint: Option<Vec<f64>>,
    #[serde(default)]
    pub growth: Option<GrowthConfig>,
    #[serde(default)]
    pub nondegeneracy: Option<NondegeneracyConfig>,
    #[serde(default)]
    pub weiss: Option<WeissConfig>,
    #[serde(default)]
    pub blowup: Option<BlowupConfig>,
    #[serde(default)]
    pub uniqueness: Option<UniquenessConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

impl AnalysisConfig {
    fn needs_anchor(&self) -> bool {
        self.growth.is_some()
            || self.nondegeneracy.is_some()
            || self.weiss.is_some()
            || self.blowup.is_some()
    }

    pub fn requested(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (on, name) in [
            (self.growth.is_some(), "growth"),
            (self.nondegeneracy.is_some(), "nondegeneracy"),
            (self.weiss.is_some(), "weiss"),
            (self.blowup.is_some(), "blowup"),
            (self.uniqueness.is_some(), "uniqueness"),
            (self.oracle.is_some(), "oracle"),
        ] {
            if on {
                out.push(name);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub meta: FixtureMeta,
    pub domain: DomainSpec,
    pub resolutions: Vec<usize>,
    pub source: SourceConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn check_ladder(field: &str, radii: &[f64], min_len: usize) -> Result<()> {
    if radii.len() < min_len {
        return Err(config_err(field, format!("need at least {min_len} radii, got {}", radii.len())));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(config_err(field, "radii must be positive"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(field, "radii must be strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| config_err("<file>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn grid(&self, resolution: usize) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.domain.clone(), resolution)?))
    }

    /// The source model on the mesh of `grid` (singular caps depend on `h`).
    pub fn source_on(&self, grid: &Grid) -> Result<SourceTerm> {
        let dim = self.dim();
        let center = |c: &[f64], field: &str| -> Result<Point> {
            if c.len() != dim {
                return Err(config_err(field, format!("expected {dim} coordinates")));
            }
            Ok(point(c))
        };
        let kind = match &self.source.shape {
            SourceShape::Constant { value } => SourceKind::Constant { value: *value },
            SourceShape::Piecewise {
                background,
                regions,
            } => SourceKind::Piecewise {
                background: *background,
                regions: regions.clone(),
            },
            SourceShape::RadialSingular {
                amplitude,
                center: c,
                gamma,
                cap,
            } => SourceKind::RadialSingular {
                amplitude: *amplitude,
                center: center(c, "source.center")?,
                gamma: *gamma,
                cap: cap.unwrap_or_else(|| default_cap(*amplitude, *gamma, grid.h())),
            },
            SourceShape::MollifiedPointMass {
                mass,
                center: c,
                width,
            } => SourceKind::MollifiedPointMass {
                mass: *mass,
                center: center(c, "source.center")?,
                width: *width,
            },
        };
        let f = SourceTerm::new(kind, dim, self.source.q)?;
        match self.source.c0 {
            Some(c0) => f.with_c0(c0),
            None => Ok(f),
        }
    }

    /// Static checks: every request's preconditions are decided here, before
    /// any solve.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.resolutions.is_empty() {
            return Err(config_err("resolutions", "at least one resolution is required"));
        }
        if let Some(r) = self.resolutions.iter().find(|r| **r < 3) {
            return Err(config_err("resolutions", format!("resolution {r} is below 3")));
        }
        if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("resolutions", "resolutions must be strictly increasing"));
        }
        growth_exponent(self.source.q, dim)?;
        for &res in &self.resolutions {
            let grid = self.grid(res)?;
            self.source_on(&grid)?;
            if self.analysis.oracle.is_some() && grid.num_interior() > solver::ORACLE_MAX_INTERIOR {
                return Err(config_err(
                    "analysis.oracle",
                    format!(
                        "resolution {res} has {} interior nodes, the oracle handles at most {}",
                        grid.num_interior(),
                        solver::ORACLE_MAX_INTERIOR
                    ),
                ));
            }
        }
        if let BoundaryConfig::Affine { gradient, .. } = &self.boundary {
            if gradient.len() != dim {
                return Err(config_err("boundary.gradient", format!("expected {dim} components")));
            }
        }
        self.solver.options(self.seed, 1e-8).validate()?;

        let a = &self.analysis;
        if a.needs_anchor() {
            match &a.anchor_hint {
                None => {
                    return Err(config_err(
                        "analysis.anchor_hint",
                        "growth, nondegeneracy, weiss and blowup need a point near the free boundary",
                    ))
                }
                Some(p) if p.len() != dim => {
                    return Err(config_err("analysis.anchor_hint", format!("expected {dim} coordinates")))
                }
                _ => {}
            }
        }
        if let Some(g) = &a.growth {
            check_ladder("analysis.growth.radii_h", &g.radii_h, 4)?;
        }
        if let Some(n) = &a.nondegeneracy {
            check_ladder("analysis.nondegeneracy.radii_h", &n.radii_h, 4)?;
            if self.source.c0.is_none() {
                return Err(config_err(
                    "source.c0",
                    "the nondegeneracy analysis requires c0 to be set",
                ));
            }
            if !(n.slack >= 0.0 && n.slack < 1.0) {
                return Err(config_err("analysis.nondegeneracy.slack", "must lie in [0, 1)"));
            }
        }
        if let Some(w) = &a.weiss {
            check_ladder("analysis.weiss.radii_h", &w.radii_h, 5)?;
            if w.unit_resolution < 5 {
                return Err(config_err("analysis.weiss.unit_resolution", "must be at least 5"));
            }
            if !(w.tol_mono_factor >= 0.0) {
                return Err(config_err("analysis.weiss.tol_mono_factor", "must be nonnegative"));
            }
        }
        if let Some(b) = &a.blowup {
            if b.steps < 3 {
                return Err(config_err("analysis.blowup.steps", "need at least 3 iterates"));
            }
            if !(b.r0 > 0.0 && b.r0 <= 1.0) {
                return Err(config_err("analysis.blowup.r0", "must lie in (0, 1]"));
            }
            if !(b.ratio > 0.0 && b.ratio < 1.0) {
                return Err(config_err("analysis.blowup.ratio", "must lie in (0, 1)"));
            }
            if b.unit_resolution < 5 {
                return Err(config_err("analysis.blowup.unit_resolution", "must be at least 5"));
            }
        }
        if let Some(u) = &a.uniqueness {
            if u.trials < 2 {
                return Err(config_err("analysis.uniqueness.trials", "need at least 2 trials"));
            }
            if !(u.tol > 0.0) {
                return Err(config_err("analysis.uniqueness.tol", "must be positive"));
            }
        }
        Ok(())
    }
}

/// One verdict. `margin` is positive when the check passes, in the units of
/// `value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub resolution: Option<usize>,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
}

impl CheckResult {
    fn at_most(name: &str, resolution: Option<usize>, value: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            resolution,
            passed: value <= threshold,
            value,
            threshold,
            margin: threshold - value,
        }
    }

    fn at_least(name: &str, resolution: Option<usize>, value: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            resolution,
            passed: value >= threshold,
            value,
            threshold,
            margin: value - threshold,
        }
    }
}

/// Numbers reported alongside the checks without a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub resolution: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config_sha256: String,
    pub name: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub analyses: Vec<String>,
    pub predicted_growth_exponent: f64,
    /// Regularity label, absent when `q` lies outside the predicted range.
    pub predicted_regularity: Option<String>,
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckResult>,
    pub diagnostics: Vec<Diagnostic>,
    pub all_passed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn resolve_output_dir(path: &Path, cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(dir) = &opts.output_dir {
        return dir.clone();
    }
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let stem = path.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("out").join(stem)
}

struct Outputs {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn csv<R: Serialize>(&mut self, rel: &str, rows: &[R]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    /// Header-only files still name their columns.
    fn csv_with_header<R: Serialize>(&mut self, rel: &str, header: &[&str], rows: &[R]) -> Result<()> {
        if !rows.is_empty() {
            return self.csv(rel, rows);
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct SolveRow {
    iteration: usize,
    energy: f64,
    kkt_residual: f64,
}

#[derive(Serialize)]
struct SolutionRow {
    x: f64,
    y: Option<f64>,
    u: f64,
}

#[derive(Serialize)]
struct GrowthRow {
    r: f64,
    sup_u: f64,
    log_r: f64,
    log_sup: f64,
    predicted_exponent: f64,
    fitted_slope: f64,
}

#[derive(Serialize)]
struct NondegeneracyRow {
    r: f64,
    shell_sup: f64,
    lower_bound: f64,
    ratio: f64,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct WeissRow {
    r: f64,
    W_rescaled: f64,
    W_raw: f64,
    dirichlet: f64,
    source: f64,
    boundary: f64,
    delta_W: Option<f64>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct BlowupRow {
    r_n: f64,
    c0_dist_to_prev: Option<f64>,
    c1_dist_to_prev: Option<f64>,
    residual_deg2: f64,
    residual_deg_2mNq: f64,
}

const GROWTH_HEADER: [&str; 6] = ["r", "sup_u", "log_r", "log_sup", "predicted_exponent", "fitted_slope"];

fn growth_rows(rep: &GrowthReport) -> Vec<GrowthRow> {
    rep.radii
        .iter()
        .zip(&rep.sup_values)
        .map(|(r, s)| GrowthRow {
            r: *r,
            sup_u: *s,
            log_r: r.ln(),
            log_sup: s.ln(),
            predicted_exponent: rep.predicted,
            fitted_slope: rep.fitted_slope,
        })
        .collect()
}

fn weiss_rows(p: &WeissProfile) -> Vec<WeissRow> {
    (0..p.radii.len())
        .map(|i| WeissRow {
            r: p.radii[i],
            W_rescaled: p.rescaled[i].total,
            W_raw: p.raw[i].total,
            dirichlet: p.rescaled[i].dirichlet,
            source: p.rescaled[i].source,
            boundary: p.rescaled[i].boundary,
            delta_W: i.checked_sub(1).map(|j| p.delta[j]),
        })
        .collect()
}

fn blowup_rows(b: &BlowupReport) -> Vec<BlowupRow> {
    b.iterates
        .iter()
        .map(|it| BlowupRow {
            r_n: it.r,
            c0_dist_to_prev: it.c0_dist_to_prev,
            c1_dist_to_prev: it.c1_dist_to_prev,
            residual_deg2: it.residual_deg2,
            residual_deg_2mNq: it.residual_deg_growth,
        })
        .collect()
}

/// Everything computed at one resolution.
pub struct ResolutionOutcome {
    pub resolution: usize,
    pub solve: SolveReport,
    pub anchor: Option<Point>,
    pub growth: Option<GrowthReport>,
    pub nondegeneracy: Option<GrowthReport>,
    pub weiss: Option<WeissProfile>,
    pub blowup: Option<BlowupReport>,
    pub uniqueness: Option<f64>,
    pub oracle_distance: Option<f64>,
}

struct Recorder {
    checks: Vec<CheckResult>,
    diagnostics: Vec<Diagnostic>,
}

impl Recorder {
    fn diag(&mut self, name: &str, resolution: usize, value: f64) {
        self.diagnostics.push(Diagnostic {
            name: name.to_string(),
            resolution: Some(resolution),
            value,
        });
    }
}

fn ladder(radii_h: &[f64], h: f64) -> Vec<f64> {
    radii_h.iter().map(|k| k * h).collect()
}

fn run_resolution(
    cfg: &ExperimentConfig,
    res: usize,
    seed: u64,
    out: &mut Outputs,
    rec: &mut Recorder,
) -> Result<ResolutionOutcome> {
    let grid = cfg.grid(res)?;
    let f = cfg.source_on(&grid)?;
    let q = f.q();
    let boundary = cfg.boundary.to_data();
    let a = &cfg.analysis;
    let tol_uniq = a.uniqueness.as_ref().map_or(1e-8, |u| u.tol);
    let opts = cfg.solver.options(seed, tol_uniq);
    let dir = format!("res{res}");

    let report = solver::solve(&grid, &f, &boundary, &opts)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.final_kkt_residual,
        });
    }
    let rows: Vec<SolveRow> = report
        .energy_trace
        .iter()
        .zip(&report.kkt_trace)
        .enumerate()
        .map(|(i, (e, r))| SolveRow {
            iteration: i,
            energy: *e,
            kkt_residual: *r,
        })
        .collect();
    out.csv(&format!("{dir}/solve.csv"), &rows)?;
    let u = &report.u;
    let sol: Vec<SolutionRow> = (0..grid.len())
        .filter(|&k| grid.is_inside(k))
        .map(|k| {
            let p = grid.coords(k);
            SolutionRow {
                x: p[0],
                y: (grid.dim() == 2).then_some(p[1]),
                u: u.value(k),
            }
        })
        .collect();
    out.csv(&format!("{dir}/solution.csv"), &sol)?;
    rec.diag("solve.iterations", res, report.iterations as f64);
    rec.diag("solve.kkt_residual", res, report.final_kkt_residual);

    let mut outcome = ResolutionOutcome {
        resolution: res,
        anchor: None,
        growth: None,
        nondegeneracy: None,
        weiss: None,
        blowup: None,
        uniqueness: None,
        oracle_distance: None,
        solve: report.clone(),
    };

    if a.needs_anchor() {
        let hint = point(a.anchor_hint.as_deref().unwrap_or(&[]));
        let fb = extract_free_boundary(u);
        let node = fb.anchor_near(u, hint).ok_or_else(|| {
            Error::Degenerate(format!("no free boundary detected at resolution {res}"))
        })?;
        outcome.anchor = Some(grid.coords(node));
    }
    let anchor = outcome.anchor.unwrap_or([0.0, 0.0]);
    let h = grid.h();

    if let Some(gc) = &a.growth {
        let rep = growth_upper_check(u, anchor, &ladder(&gc.radii_h, h), q)?;
        out.csv_with_header(&format!("{dir}/growth.csv"), &GROWTH_HEADER, &growth_rows(&rep))?;
        let lo = gc.min_slope.unwrap_or(rep.predicted - 0.15);
        rec.checks.push(CheckResult::at_least("growth.slope_min", Some(res), rep.fitted_slope, lo));
        if !gc.one_sided {
            let hi = gc.max_slope.unwrap_or(rep.predicted + 0.15);
            rec.checks.push(CheckResult::at_most("growth.slope_max", Some(res), rep.fitted_slope, hi));
        }
        outcome.growth = Some(rep);
    }

    if let Some(nc) = &a.nondegeneracy {
        let c0 = f.c0().expect("validated: c0 is set");
        let rep = nondegeneracy_check(u, anchor, &ladder(&nc.radii_h, h), c0, q)?;
        let rows: Vec<NondegeneracyRow> = rep
            .radii
            .iter()
            .zip(&rep.sup_values)
            .zip(&rep.lower_bounds)
            .map(|((r, s), b)| NondegeneracyRow {
                r: *r,
                shell_sup: *s,
                lower_bound: *b,
                ratio: s / b,
            })
            .collect();
        out.csv(&format!("{dir}/nondegeneracy.csv"), &rows)?;
        let ratio = rep.min_ratio().unwrap_or(f64::NAN);
        rec.checks.push(CheckResult::at_least(
            "nondegeneracy.min_ratio",
            Some(res),
            ratio,
            1.0 - nc.slack,
        ));
        let barrier = barrier_field(u, anchor, c0, q)?;
        rec.diag("nondegeneracy.barrier_superharmonic_fraction", res, barrier.superharmonic_fraction);
        rec.diag("nondegeneracy.barrier_subharmonic_fraction", res, barrier.subharmonic_fraction);
        outcome.nondegeneracy = Some(rep);
    }

    if let Some(wc) = &a.weiss {
        let unit = unit_grid(grid.dim(), wc.unit_resolution)?;
        let p = weiss_profile(u, &f, anchor, &ladder(&wc.radii_h, h), &unit, wc.tol_mono_factor)?;
        out.csv(&format!("{dir}/weiss.csv"), &weiss_rows(&p))?;
        rec.checks.push(CheckResult::at_least("weiss.min_delta", Some(res), p.min_delta(), -p.tol_mono));
        rec.diag("weiss.spread", res, p.spread());
        outcome.weiss = Some(p);
    }

    if let Some(bc) = &a.blowup {
        let unit = unit_grid(grid.dim(), bc.unit_resolution)?;
        let schedule: Vec<f64> = (0..bc.steps).map(|n| bc.r0 * bc.ratio.powi(n as i32)).collect();
        let b = blowup_sequence(u, q, anchor, &schedule, &unit)?;
        out.csv(&format!("{dir}/blowup.csv"), &blowup_rows(&b))?;
        rec.checks.push(CheckResult::at_most(
            "blowup.final_residual_deg2",
            Some(res),
            b.homogeneity_residual(),
            bc.max_residual,
        ));
        // value: the largest increase among the distances that must decrease
        let d = b.c0_distances();
        let worst = d
            .windows(2)
            .skip(bc.decrease_from.saturating_sub(1))
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        rec.checks.push(CheckResult {
            name: "blowup.c0_strictly_decreasing".into(),
            resolution: Some(res),
            passed: worst < 0.0,
            value: worst,
            threshold: 0.0,
            margin: -worst,
        });
        let sr = b.source_residuals(&f);
        rec.diag("blowup.source_residual_rescaled", res, sr.against_rescaled_source);
        rec.diag("blowup.source_residual_one", res, sr.against_one);
        outcome.blowup = Some(b);
    }

    if let Some(uc) = &a.uniqueness {
        let d = solver::verify_uniqueness(&grid, &f, &boundary, &opts, uc.trials)?;
        rec.checks.push(CheckResult::at_most("uniqueness.max_pairwise", Some(res), d, uc.tol));
        outcome.uniqueness = Some(d);
    }

    if let Some(oc) = &a.oracle {
        let exact = solver::exact_small_oracle(&grid, &f, &boundary)?;
        let d = exact.sup_distance(u);
        rec.checks.push(CheckResult::at_most("oracle.sup_distance", Some(res), d, oc.tol));
        outcome.oracle_distance = Some(d);
    }
    Ok(outcome)
}

/// Runs a loaded configuration; artifacts go under `output_dir`.
pub fn run_config(
    cfg: &ExperimentConfig,
    config_path: &Path,
    config_text: &str,
    opts: &RunOptions,
) -> Result<(RunManifest, Vec<ResolutionOutcome>)> {
    cfg.validate()?;
    let started = unix_now();
    let root = resolve_output_dir(config_path, cfg, opts);
    fs::create_dir_all(&root)?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut out = Outputs {
        root: root.clone(),
        files: Vec::new(),
    };
    let mut rec = Recorder {
        checks: Vec::new(),
        diagnostics: Vec::new(),
    };
    let mut outcomes = Vec::new();
    for &res in &cfg.resolutions {
        if !opts.quiet {
            eprintln!("resolution {res}: solving");
        }
        outcomes.push(run_resolution(cfg, res, seed, &mut out, &mut rec)?);
    }
    if let Some(bc) = &cfg.analysis.blowup {
        for pair in outcomes.windows(2) {
            let (coarse, fine) = (&pair[0], &pair[1]);
            let (Some(a), Some(b)) = (&coarse.blowup, &fine.blowup) else {
                continue;
            };
            let ratio = b.homogeneity_residual() / a.homogeneity_residual();
            let dev = (ratio / 0.5 - 1.0).abs();
            rec.checks.push(CheckResult {
                name: format!("blowup.residual_halving_{}_{}", coarse.resolution, fine.resolution),
                resolution: Some(fine.resolution),
                passed: dev <= bc.halving_tolerance,
                value: ratio,
                threshold: bc.halving_tolerance,
                margin: bc.halving_tolerance - dev,
            });
        }
    }

    let dim = cfg.dim();
    let all_passed = rec.checks.iter().all(|c| c.passed);
    let mut manifest = RunManifest {
        config_path: config_path.to_path_buf(),
        config_sha256: format!("{:x}", Sha256::digest(config_text.as_bytes())),
        name: cfg.meta.name.clone(),
        seed,
        output_dir: root.clone(),
        started_unix: started,
        finished_unix: 0.0,
        analyses: cfg.analysis.requested().iter().map(|s| s.to_string()).collect(),
        predicted_growth_exponent: growth_exponent(cfg.source.q, dim)?,
        predicted_regularity: predicted_holder_exponent(cfg.source.q, dim).ok().map(|e| e.tag()),
        files: out.files,
        checks: rec.checks,
        diagnostics: rec.diagnostics,
        all_passed,
    };
    let manifest_path = root.join("manifest.json");
    manifest.files.push(manifest_path.clone());
    manifest.finished_unix = unix_now();
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok((manifest, outcomes))
}

/// Loads, validates and runs the config at `path`.
pub fn run(path: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let text = fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    Ok(run_config(&cfg, path, &text, opts)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureRow {
    pub file: String,
    pub name: String,
    pub exercises: String,
    pub expected: String,
}

/// One row per `.toml` file in `dir`, sorted by file name. Files that fail to
/// parse still get a row describing the problem.
pub fn list_fixtures(dir: &Path) -> Result<Vec<FixtureRow>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files
        .iter()
        .map(|p| {
            let file = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let parsed = fs::read_to_string(p)
                .map_err(Error::from)
                .and_then(|t| ExperimentConfig::from_toml(&t));
            match parsed {
                Ok(cfg) => FixtureRow {
                    file,
                    name: cfg.meta.name,
                    exercises: cfg.meta.exercises,
                    expected: cfg.meta.expected,
                },
                Err(e) => FixtureRow {
                    name: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                    file,
                    exercises: String::new(),
                    expected: format!("invalid config: {e}"),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
resolutions = [9]
[domain]
kind = "rectangle"
min = [-1.0]
max = [1.0]
[source]
kind = "constant"
value = 0.0
[analysis.uniqueness]
trials = 3
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.source.q, f64::INFINITY);
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.boundary, BoundaryConfig::Constant { value: 0.0 });
        assert_eq!(cfg.analysis.requested(), vec!["uniqueness"]);
    }

    fn field_of(err: Error) -> String {
        match err {
            Error::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let bad = MINIMAL.replace("[9]", "[2]");
        assert_eq!(field_of(ExperimentConfig::from_toml(&bad).unwrap_err()), "resolutions");

        let nondeg = format!("{MINIMAL}\n[analysis.nondegeneracy]\nradii_h = [2.0, 4.0, 6.0, 8.0]\n");
        let nondeg = nondeg.replace("[analysis.uniqueness]", "[analysis]\nanchor_hint = [0.0]\n[analysis.uniqueness]");
        assert_eq!(field_of(ExperimentConfig::from_toml(&nondeg).unwrap_err()), "source.c0");

        let no_anchor = format!("{MINIMAL}\n[analysis.growth]\nradii_h = [2.0, 4.0, 6.0, 8.0]\n");
        assert_eq!(
            field_of(ExperimentConfig::from_toml(&no_anchor).unwrap_err()),
            "analysis.anchor_hint"
        );

        let omega = format!("{MINIMAL}\n[solver]\nomega = 2.5\n");
        assert_eq!(field_of(ExperimentConfig::from_toml(&omega).unwrap_err()), "solver.omega");
    }

    #[test]
    fn regime_rejections_are_distinct() {
        let with_q = |q: &str| MINIMAL.replace("value = 0.0", &format!("value = 0.0\nq = {q}"));
        let inconclusive = ExperimentConfig::from_toml(&with_q("0.5")).unwrap_err();
        let rapid = ExperimentConfig::from_toml(&with_q("0.25")).unwrap_err();
        assert!(inconclusive.to_string().contains("inconclusive"), "{inconclusive}");
        assert!(rapid.to_string().contains("grows rapidly"), "{rapid}");
        assert_ne!(inconclusive.to_string(), rapid.to_string());
        assert!(ExperimentConfig::from_toml(&with_q("inf")).is_ok());
    }

    #[test]
    fn oracle_request_is_size_checked() {
        let big = format!("{MINIMAL}\n[analysis.oracle]\n").replace("[9]", "[33]");
        assert_eq!(field_of(ExperimentConfig::from_toml(&big).unwrap_err()), "analysis.oracle");
    }
}
