//! Run configuration, task orchestration and report writers behind the
//! `dscatter` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dispersion::Dispersion;
use crate::error::{Error, Result};
use crate::levinson::{levinson_check_with, sample, winding_phase, BranchWinding, Spacing, SweepGrid, Verdict};
use crate::models::{validate_model, validate_separable, EmitterModel, EmitterSpec, Scatterer, SeparableModel, ValidationReport, DEFAULT_RANK_TOL};
use crate::numerics::QuadratureSpec;
use crate::propagators::ScatteringSystem;
use crate::smatrix::{distance_to_limit, parity_eigenvalue, s_matrix, universal_limit, Route};
use crate::spectral::{bound_state_count, bound_states_with, count_bound_states_real_axis, real_bracket_with, SearchOptions};

pub const TOOL: &str = "dscatter";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Points per decade of the default log grid.
pub const DEFAULT_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[derive(clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Sweep,
    Universal,
    #[serde(alias = "bound-states")]
    BoundStates,
    Levinson,
    Validate,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Sweep => "sweep",
            Task::Universal => "universal",
            Task::BoundStates => "bound_states",
            Task::Levinson => "levinson",
            Task::Validate => "validate",
        }
    }
}

/// The model block of a configuration, before physical validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelBlock {
    Emitter(EmitterSpec),
    Separable(SeparableModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    #[serde(rename = "E_min", skip_serializing_if = "Option::is_none")]
    pub e_min: Option<f64>,
    #[serde(rename = "E_max", skip_serializing_if = "Option::is_none")]
    pub e_max: Option<f64>,
    /// Per decade for log spacing, per segment for linear spacing.
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock { e_min: None, e_max: None, points: DEFAULT_POINTS, spacing: Spacing::Log }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_lev: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Tolerances { tol_lev: 0.05, rel_tol: q.rel_tol, abs_tol: q.abs_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchBlock {
    pub depth_factor: f64,
    pub margin: f64,
    pub max_depth: u32,
}

impl Default for SearchBlock {
    fn default() -> Self {
        let s = SearchOptions::default();
        SearchBlock { depth_factor: s.depth_factor, margin: s.margin, max_depth: s.max_depth }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dispersion: Dispersion,
    pub model: ModelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub search: SearchBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol_lev: Option<f64>,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub points: Option<usize>,
}

fn parse_unchecked(text: &str) -> Result<RunConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("at `{path}`: {}", e.into_inner()))
    })?;
    de.end().map_err(|e| Error::Parse(format!("trailing content: {e}")))?;
    Ok(cfg)
}

/// Strict parse: unknown keys are a parse error; every structural and
/// physical violation is collected into one validation error.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg = parse_unchecked(text)?;
    let mut bad = cfg.structural_problems();
    if bad.is_empty() {
        let report = cfg.validation_report()?;
        bad.extend(report.failures().into_iter().map(|f| format!("model: {f}")));
    }
    if bad.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(bad))
    }
}

/// Structural checks only; physical checks are left to the report.
pub fn parse_config_lenient(text: &str) -> Result<RunConfig> {
    let cfg = parse_unchecked(text)?;
    let bad = cfg.structural_problems();
    if bad.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Validation(bad))
    }
}

pub fn load_config(path: &Path, strict: bool) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if strict {
        parse_config(&text)
    } else {
        parse_config_lenient(&text)
    }
}

fn push_validation(bad: &mut Vec<String>, r: Result<()>) {
    match r {
        Ok(()) => {}
        Err(Error::Validation(v)) => bad.extend(v),
        Err(e) => bad.push(e.to_string()),
    }
}

impl RunConfig {
    pub fn structural_problems(&self) -> Vec<String> {
        let mut bad = Vec::new();
        push_validation(&mut bad, self.dispersion.validate());
        match &self.model {
            ModelBlock::Emitter(spec) => {
                push_validation(&mut bad, EmitterModel::try_from(spec.clone()).map(|_| ()));
            }
            ModelBlock::Separable(s) => push_validation(&mut bad, s.validate().map_err(|e| match e {
                Error::ZeroCoupling => Error::Validation(vec!["model.g must be nonzero".into()]),
                e => e,
            })),
        }
        push_validation(&mut bad, self.sweep_grid().validate());
        if self.sweep.spacing == Spacing::Linear && self.sweep.e_max.is_none() {
            bad.push("sweep.E_max is required for linear spacing".into());
        }
        let t = &self.tolerances;
        if !(t.tol_lev > 0.0) {
            bad.push(format!("tolerances.tol_lev must be positive, got {}", t.tol_lev));
        }
        if !(t.rel_tol > 0.0) || !(t.abs_tol > 0.0) {
            bad.push("tolerances.rel_tol and tolerances.abs_tol must be positive".into());
        }
        let s = &self.search;
        if !(s.depth_factor > 0.0) || !(s.margin > 0.0) || s.max_depth == 0 {
            bad.push("search.depth_factor, search.margin and search.max_depth must be positive".into());
        }
        bad
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(t) = o.tol_lev {
            self.tolerances.tol_lev = t;
        }
        if let Some(e) = o.e_min {
            self.sweep.e_min = Some(e);
        }
        if let Some(e) = o.e_max {
            self.sweep.e_max = Some(e);
        }
        if let Some(p) = o.points {
            self.sweep.points = p;
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { rel_tol: self.tolerances.rel_tol, abs_tol: self.tolerances.abs_tol, ..QuadratureSpec::default() }
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            depth_factor: self.search.depth_factor,
            margin: self.search.margin,
            max_depth: self.search.max_depth,
            ..SearchOptions::default()
        }
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            e_min: self.sweep.e_min,
            e_max: self.sweep.e_max,
            points: self.sweep.points,
            spacing: self.sweep.spacing,
            ..SweepGrid::default()
        }
    }

    pub fn scatterer(&self) -> Result<Scatterer> {
        Ok(match &self.model {
            ModelBlock::Emitter(spec) => Scatterer::Emitter(EmitterModel::try_from(spec.clone())?),
            ModelBlock::Separable(s) => Scatterer::Separable(SeparableModel::new(s.g, s.form_factor.clone())?),
        })
    }

    pub fn system(&self) -> Result<ScatteringSystem> {
        Ok(ScatteringSystem { quadrature: self.quadrature(), ..ScatteringSystem::new(self.dispersion, self.scatterer()?) })
    }

    pub fn validation_report(&self) -> Result<ValidationReport> {
        Ok(match self.scatterer()? {
            Scatterer::Emitter(m) => validate_model(&m, &self.dispersion, DEFAULT_RANK_TOL),
            Scatterer::Separable(s) => validate_separable(&s, &self.dispersion),
        })
    }

    /// sha256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }
}

/// `DSCATTER_THREADS` caps the rayon pool; returns the count in effect.
pub fn init_threads() -> usize {
    if let Some(n) = std::env::var("DSCATTER_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    rayon::current_num_threads()
}

// ---------------------------------------------------------------------------
// writers

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub const SWEEP_COLUMNS: [&str; 7] = ["branch", "E", "re_det_s", "im_det_s", "phase", "abs_det_s", "route_defect"];

pub fn write_sweep_csv(path: &Path, branches: &[BranchWinding]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(io)?;
    w.write_record(SWEEP_COLUMNS).map_err(io)?;
    for b in branches {
        for s in &b.samples {
            w.write_record([
                b.label.clone(),
                fmt_f64(s.energy),
                fmt_f64(s.det_s.re),
                fmt_f64(s.det_s.im),
                fmt_f64(s.phase),
                fmt_f64(s.det_s.norm()),
                fmt_f64(s.route_defect),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Outcome of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub status: &'static str,
    pub exit_code: i32,
    pub result: Value,
    pub files: Vec<PathBuf>,
}

fn envelope(task: Task, hash: Option<&str>, status: &str, result: Value, error: Option<&Error>) -> Value {
    let mut v = json!({
        "tool": TOOL,
        "version": VERSION,
        "task": task.name(),
        "config_hash": hash,
        "status": status,
        "result": result,
    });
    if let Some(e) = error {
        v["error"] = json!({ "code": e.code(), "message": e.to_string() });
    }
    v
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn branch_summary(b: &BranchWinding) -> Value {
    let (first, last) = (b.samples.first().copied(), b.samples.last().copied());
    json!({
        "label": b.label,
        "E_lo": b.e_lo,
        "E_hi": b.e_hi,
        "rows": b.samples.len(),
        "first_det_s": first.map(|s| s.det_s),
        "last_det_s": last.map(|s| s.det_s),
        "delta_sampled": b.delta_sampled,
        "tail_closure": b.tail_closure,
        "threshold_gap": b.threshold_gap,
    })
}

fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<TaskOutcome> {
    let system = cfg.system()?;
    let (branches, diagnostics) = winding_phase(&system, &cfg.sweep_grid())?;
    let csv = out.join("sweep.csv");
    write_sweep_csv(&csv, &branches)?;
    let result = json!({
        "columns": SWEEP_COLUMNS,
        "csv": "sweep.csv",
        "branches": branches.iter().map(branch_summary).collect::<Vec<_>>(),
        "diagnostics": diagnostics,
    });
    Ok(TaskOutcome { status: "ok", exit_code: 0, result, files: vec![csv] })
}

/// Energies 1e-2 … 1e-8 on each side of the threshold that is continuum.
fn ladder(d: &Dispersion) -> Vec<f64> {
    let mags: Vec<f64> = (2..=8).map(|j| 10f64.powi(-j)).collect();
    let mut out = Vec::new();
    for sgn in [1.0, -1.0] {
        if d.in_continuum(sgn * 1e-8) {
            out.extend(mags.iter().map(|m| sgn * m));
        }
    }
    out
}

fn run_universal(cfg: &RunConfig) -> Result<TaskOutcome> {
    let system = cfg.system()?;
    let limit = universal_limit(&cfg.dispersion);
    let mut rows = Vec::new();
    for e in ladder(&cfg.dispersion) {
        let s = s_matrix(e, &system, Route::TMatrix)?;
        let dist = limit.as_ref().ok().and_then(|l| distance_to_limit(&s, l));
        let mut row = json!({
            "E": e,
            "S": to_value(&s)["entries"],
            "det_s": s.det(),
            "unitarity_defect": s.unitarity_defect,
            "distance_to_limit": dist,
        });
        if s.n() == 2 {
            row["symmetric_eigenvalue"] = to_value(&parity_eigenvalue(&s, false));
            row["antisymmetric_eigenvalue"] = to_value(&parity_eigenvalue(&s, true));
        }
        rows.push(row);
    }
    let result = match &limit {
        Ok(l) => json!({ "non_universal": false, "limit": to_value(l), "ladder": rows }),
        Err(e) => json!({
            "non_universal": true,
            "notice": e.to_string(),
            "code": e.code(),
            "ladder": rows,
        }),
    };
    let status = if limit.is_ok() { "ok" } else { "non_universal" };
    Ok(TaskOutcome { status, exit_code: 0, result, files: Vec::new() })
}

fn run_bound_states(cfg: &RunConfig) -> Result<TaskOutcome> {
    let system = cfg.system()?;
    let opts = cfg.search_options();
    let states = bound_states_with(&system, &opts)?;
    let real = if system.scatterer.is_hermitian() {
        match real_bracket_with(&system, &opts) {
            Some(br) => Some(count_bound_states_real_axis(&system, br)?),
            None => Some(0),
        }
    } else {
        None
    };
    let n = bound_state_count(&states);
    let result = json!({
        "count": n,
        "count_real_axis": real,
        "counters_agree": real.is_none_or(|r| r == n),
        "bound_states": to_value(&states),
    });
    Ok(TaskOutcome { status: "ok", exit_code: 0, result, files: Vec::new() })
}

fn run_levinson(cfg: &RunConfig, out: &Path) -> Result<TaskOutcome> {
    let system = cfg.system()?;
    let report = levinson_check_with(&system, &cfg.sweep_grid(), cfg.tolerances.tol_lev, &cfg.search_options())?;
    let mut files = Vec::new();
    if !report.branch_contributions.is_empty() {
        let csv = out.join("levinson_trajectory.csv");
        write_sweep_csv(&csv, &report.branch_contributions)?;
        files.push(csv);
    }
    let (status, code) = match report.verdict {
        Verdict::Pass => ("pass", 0),
        Verdict::Fail => ("fail", 2),
        Verdict::NotApplicable { .. } => ("not_applicable", 0),
    };
    Ok(TaskOutcome { status, exit_code: code, result: to_value(&report), files })
}

fn run_validate(cfg: &RunConfig) -> Result<TaskOutcome> {
    let report = cfg.validation_report()?;
    let mut result = to_value(&report);
    if let (Some(cert), Scatterer::Emitter(m)) = (&report.bright_state, cfg.scatterer()?) {
        result["certificate_residuals"] = to_value(&cert.residuals(&m, &cfg.dispersion));
        result["certificate_valid"] = json!(cert.verify(&m, &cfg.dispersion));
    }
    let ok = report.passed();
    Ok(TaskOutcome { status: if ok { "pass" } else { "fail" }, exit_code: if ok { 0 } else { 2 }, result, files: Vec::new() })
}

/// Runs a task on a parsed configuration and writes `<task>.json` plus
/// `metadata.json` (which alone carries timings).
pub fn run(task: Task, cfg: &RunConfig, out: &Path) -> Result<TaskOutcome> {
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let mut cfg = cfg.clone();
    cfg.task = Some(task);
    let hash = cfg.hash();
    let t0 = Instant::now();
    let outcome = match task {
        Task::Sweep => run_sweep(&cfg, out),
        Task::Universal => run_universal(&cfg),
        Task::BoundStates => run_bound_states(&cfg),
        Task::Levinson => run_levinson(&cfg, out),
        Task::Validate => run_validate(&cfg),
    };
    let elapsed = t0.elapsed().as_secs_f64();
    let report_path = out.join(format!("{}.json", task.name()));
    let outcome = match outcome {
        Ok(mut o) => {
            write_json(&report_path, &envelope(task, Some(&hash), o.status, o.result.clone(), None))?;
            o.files.insert(0, report_path);
            o
        }
        Err(e) => {
            write_json(&report_path, &envelope(task, Some(&hash), "error", Value::Null, Some(&e)))?;
            TaskOutcome { status: "error", exit_code: 1, result: json!({ "code": e.code(), "message": e.to_string() }), files: vec![report_path] }
        }
    };
    let meta = json!({
        "tool": TOOL,
        "version": VERSION,
        "task": task.name(),
        "config_hash": hash,
        "status": outcome.status,
        "threads": rayon::current_num_threads(),
        "timings": { "task_seconds": elapsed },
        "files": outcome.files.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    write_json(&out.join("metadata.json"), &meta)?;
    Ok(outcome)
}

/// Error report for failures before a configuration exists.
pub fn write_error_report(task: Task, out: &Path, err: &Error) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    write_json(&out.join(format!("{}.json", task.name())), &envelope(task, None, "error", Value::Null, Some(err)))
}

/// Parses (strictly, except for `validate`), applies overrides and runs.
/// Returns the process exit code.
pub fn main_with(task: Task, config: &Path, out: Option<&Path>, overrides: &Overrides) -> i32 {
    let loaded = load_config(config, task != Task::Validate);
    let out_dir = out.map(Path::to_path_buf).or_else(|| loaded.as_ref().ok().and_then(|c| c.output.dir.clone()));
    let Some(out_dir) = out_dir else {
        eprintln!("{TOOL}: no output directory (--out or output.dir)");
        return 1;
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            let _ = write_error_report(task, &out_dir, &e);
            return 1;
        }
    };
    cfg.apply(overrides);
    let bad = cfg.structural_problems();
    if !bad.is_empty() {
        let e = Error::Validation(bad);
        eprintln!("{TOOL}: {e}");
        let _ = write_error_report(task, &out_dir, &e);
        return 1;
    }
    match run(task, &cfg, &out_dir) {
        Ok(o) => {
            if o.exit_code == 1 {
                eprintln!("{TOOL}: {}: {}", task.name(), o.result["message"].as_str().unwrap_or("error"));
            } else {
                println!("{}: {}", task.name(), o.status);
            }
            o.exit_code
        }
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            1
        }
    }
}

/// Single det S sample, for quick probes.
pub fn probe(cfg: &RunConfig, e: f64) -> Result<Complex64> {
    Ok(sample(&cfg.system()?, e)?.det_s)
}
