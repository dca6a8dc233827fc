//! Run orchestration behind the CLI subcommands.
use std::io::Write;
use std::path::{Path, PathBuf};

use admlab_core::convergence::{run_family, ConvergenceReport, FamilyPlan, RuleRegistry};
use admlab_core::diagnostics::{norm_table, EnergyRecord, NormAccumulator};
use admlab_core::filter::{deconv_symbol, relaxation_symbol};
use admlab_core::integrator::{integrate, Observer};
use admlab_core::{
    AdmError, DeconvolutionSpec, ModelParams, SolverState, SpectralField, StepControl, TorusGrid,
};
use thiserror::Error;

use crate::config::{parse_config, ConfigError, Format, Members, RunConfig};
use crate::output::{
    resolve_output_dir, snapshot_name, write_convergence, write_ledger, write_norms, Manifest,
    CONVERGENCE_FILE, LEDGER_FILE, NORMS_FILE, SNAPSHOT_DIR,
};
use crate::presets::{make_initial, PresetParams};
use crate::snapshot::{self, SnapshotError};

pub const FINAL_SNAPSHOT: &str = "final.admb";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl RunError {
    pub fn category(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl From<AdmError> for RunError {
    fn from(e: AdmError) -> Self {
        match e {
            AdmError::InvalidGrid(_)
            | AdmError::InvalidParameter { .. }
            | AdmError::InvalidPlan(_)
            | AdmError::UnknownName { .. }
            | AdmError::GridMismatch
            | AdmError::ShapeMismatch { .. } => {
                RunError::Config(ConfigError::Conflict(e.to_string()))
            }
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<SnapshotError> for RunError {
    fn from(e: SnapshotError) -> Self {
        match e {
            SnapshotError::Model(m) => m.into(),
            other => RunError::Io(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub strict_invariants: bool,
}

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub steps: usize,
    pub final_time: f64,
    pub records: Vec<EnergyRecord>,
    pub report: Option<ConvergenceReport>,
}

/// A parsed configuration together with its source text (hashed into the
/// manifest) and the directory relative paths are resolved against.
pub struct LoadedConfig {
    pub text: String,
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let config = parse_config(&text)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig {
        text,
        config,
        base_dir,
    })
}

pub fn build_grid(config: &RunConfig) -> Result<TorusGrid, RunError> {
    let g = &config.grid;
    let cutoff = g.cutoff.unwrap_or(g.modes_per_axis / 2 - 1);
    Ok(TorusGrid::with_cutoff(g.box_length, g.modes_per_axis, cutoff)?)
}

pub fn step_control(config: &RunConfig, opts: Options) -> StepControl {
    let t = &config.time;
    StepControl {
        dt: t.dt,
        t_end: t.t_end,
        cfl_safety: t.cfl_safety,
        observer_cadence: t.observer_cadence,
        strict_invariants: opts.strict_invariants,
    }
}

fn preset_params(config: &RunConfig) -> PresetParams {
    let ic = &config.initial_condition;
    PresetParams {
        amplitude: ic.amplitude,
        theta_amplitude: ic.theta_amplitude,
        seed: ic.seed,
        k_min: ic.k_min,
        k_max: ic.k_max,
    }
}

fn model_params(grid: &TorusGrid, config: &RunConfig, order: usize, epsilon: f64) -> Result<ModelParams, RunError> {
    let spec = DeconvolutionSpec::new(grid, config.physics.alpha, order)?;
    Ok(ModelParams::new(config.physics.nu, epsilon, spec)?)
}

/// State to continue from a snapshot, with the physics of `config`.
fn resumed_state(
    snapshot_path: &Path,
    config: &RunConfig,
    order: usize,
    epsilon: f64,
) -> Result<SolverState, RunError> {
    let mut state = snapshot::load(snapshot_path)
        .map_err(|e| RunError::from(e).with_context(snapshot_path))?;
    let grid = build_grid(config)?;
    if state.w.grid() != &grid {
        return Err(RunError::Config(ConfigError::Conflict(format!(
            "snapshot {} was written on a different grid than the config describes",
            snapshot_path.display()
        ))));
    }
    state.params = model_params(&grid, config, order, epsilon)?;
    Ok(state)
}

impl RunError {
    fn with_context(self, path: &Path) -> Self {
        match self {
            RunError::Io(m) => RunError::Io(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

/// `run <config>`: a single run, or a family when `orders` is given.
pub fn run(loaded: &LoadedConfig, opts: Options) -> Result<RunSummary, RunError> {
    match loaded.config.members()? {
        Members::Single { order, epsilon } => {
            let config = &loaded.config;
            let state = match (&config.initial_condition.preset, &config.initial_condition.snapshot) {
                (_, Some(path)) => resumed_state(&loaded.base_dir.join(path), config, order, epsilon)?,
                (Some(name), None) => {
                    let grid = build_grid(config)?;
                    let (u0, theta0) = make_initial(name, &preset_params(config), &grid)?;
                    let params = model_params(&grid, config, order, epsilon)?;
                    SolverState::init(&u0, &theta0, params)?
                }
                (None, None) => unreachable!("validated"),
            };
            execute_single(loaded, "run", state, opts)
        }
        Members::Family { .. } => family(loaded, opts),
    }
}

/// `resume <snapshot> <config>`
pub fn resume(snapshot_path: &Path, loaded: &LoadedConfig, opts: Options) -> Result<RunSummary, RunError> {
    match loaded.config.members()? {
        Members::Single { order, epsilon } => {
            let state = resumed_state(snapshot_path, &loaded.config, order, epsilon)?;
            execute_single(loaded, "resume", state, opts)
        }
        Members::Family { .. } => Err(RunError::Config(ConfigError::Conflict(
            "resume needs a single-run config (`order` and `epsilon`)".into(),
        ))),
    }
}

fn prepare_dir(config: &RunConfig) -> Result<PathBuf, RunError> {
    let dir = resolve_output_dir(&config.output.directory);
    std::fs::create_dir_all(&dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn execute_single(
    loaded: &LoadedConfig,
    command: &str,
    state: SolverState,
    opts: Options,
) -> Result<RunSummary, RunError> {
    let config = &loaded.config;
    let dir = prepare_dir(config)?;
    let mut manifest = Manifest::new(command, &loaded.text);
    let control = step_control(config, opts);
    let csv_out = config.output.wants(Format::Csv);
    let snap_out = config.output.wants(Format::Snapshot);
    let snap_dir = dir.join(SNAPSHOT_DIR);
    if snap_out {
        std::fs::create_dir_all(&snap_dir)?;
    }
    if opts.strict_invariants {
        if let Err(e) = state.check_invariants() {
            return fail(&dir, manifest, e.into());
        }
    }

    let interval = config.output.snapshot_interval;
    let mut norms = NormAccumulator::new();
    let mut io_error: Option<RunError> = None;
    let mut observer = |step: usize, s: &SolverState, _: &EnergyRecord| -> admlab_core::Result<()> {
        if csv_out {
            norms.push(s)?;
        }
        if snap_out && interval > 0 && step.is_multiple_of(interval) && io_error.is_none() {
            if let Err(e) = snapshot::save(&snap_dir.join(snapshot_name(step)), s) {
                io_error = Some(e.into());
            }
        }
        Ok(())
    };
    let observers: &mut [&mut dyn Observer] = &mut [&mut observer];
    let (integration, failure) = match integrate(state, &control, observers) {
        Ok(i) => (i, None),
        Err(aborted) => (aborted.partial, Some(RunError::from(aborted.error))),
    };
    let failure = failure.or(io_error);

    manifest.steps = integration.steps;
    manifest.final_time = integration.state.time;
    let written = (|| -> Result<(), RunError> {
        if csv_out {
            write_ledger(&dir.join(LEDGER_FILE), &integration.records)?;
            if !norms.is_empty() {
                write_norms(&dir.join(NORMS_FILE), &norms.table()?)?;
            }
        }
        if snap_out {
            snapshot::save(&snap_dir.join(FINAL_SNAPSHOT), &integration.state)?;
        }
        Ok(())
    })();
    if let Some(err) = failure {
        return fail(&dir, manifest, err);
    }
    if let Err(err) = written {
        return fail(&dir, manifest, err);
    }
    manifest.write(&dir)?;
    Ok(RunSummary {
        output_dir: dir,
        steps: integration.steps,
        final_time: integration.state.time,
        records: integration.records,
        report: None,
    })
}

fn fail<T>(dir: &Path, mut manifest: Manifest, err: RunError) -> Result<T, RunError> {
    manifest.status = "failed".into();
    manifest.partial = true;
    manifest.error_category = Some(err.category().into());
    manifest.error_message = Some(err.to_string());
    // the original error matters more than a failure to record it
    let _ = manifest.write(dir);
    Err(err)
}

pub fn member_dir_name(order: usize) -> String {
    format!("member_N{order:03}")
}

/// `family <config>`: one run per order, compared against the largest.
pub fn family(loaded: &LoadedConfig, opts: Options) -> Result<RunSummary, RunError> {
    let config = &loaded.config;
    let (orders, rule_cfg) = match config.members()? {
        Members::Family { orders, rule } => (orders, rule),
        Members::Single { .. } => {
            return Err(RunError::Config(ConfigError::Missing(
                "physics.orders and physics.epsilon_rule for a family run".into(),
            )))
        }
    };
    let Some(preset) = &config.initial_condition.preset else {
        return Err(RunError::Config(ConfigError::Conflict(
            "family runs start from a preset, not a snapshot".into(),
        )));
    };
    let grid = build_grid(config)?;
    let (u0, theta0) = make_initial(preset, &preset_params(config), &grid)?;
    let rule = RuleRegistry::default().build(&rule_cfg.name, &rule_cfg.params())?;
    let mut plan = FamilyPlan::new(
        config.physics.alpha,
        config.physics.nu,
        orders,
        rule,
        u0,
        theta0,
        step_control(config, opts),
    );
    plan.workers = config.physics.workers;
    plan.validate()?;

    let dir = prepare_dir(config)?;
    let mut manifest = Manifest::new("family", &loaded.text);
    let (report, failure) = match run_family(&plan) {
        Ok(r) => (r, None),
        Err(incomplete) => {
            let msg = incomplete.to_string();
            (incomplete.report, Some(RunError::Numerical(msg)))
        }
    };
    let written = write_family(&dir, config, &report);
    if let Some(member) = report.members.last().and_then(|m| m.as_ref()) {
        manifest.steps = member.steps;
        manifest.final_time = member.samples.last().map(|s| s.time).unwrap_or(0.0);
    }
    if let Some(err) = failure.or(written.err()) {
        return fail(&dir, manifest, err);
    }
    manifest.write(&dir)?;
    let records = report
        .members
        .last()
        .and_then(|m| m.as_ref())
        .map(|m| m.records.clone())
        .unwrap_or_default();
    Ok(RunSummary {
        output_dir: dir,
        steps: manifest.steps,
        final_time: manifest.final_time,
        records,
        report: Some(report),
    })
}

fn write_family(dir: &Path, config: &RunConfig, report: &ConvergenceReport) -> Result<(), RunError> {
    if config.output.wants(Format::Csv) {
        write_convergence(&dir.join(CONVERGENCE_FILE), report)?;
    }
    for member in report.members.iter().flatten() {
        let sub = dir.join(member_dir_name(member.order));
        std::fs::create_dir_all(&sub)?;
        if config.output.wants(Format::Csv) {
            write_ledger(&sub.join(LEDGER_FILE), &member.records)?;
            write_norms(&sub.join(NORMS_FILE), &norm_table(&member.samples)?)?;
        }
        if config.output.wants(Format::Snapshot) {
            if let Some(last) = member.samples.last() {
                std::fs::create_dir_all(sub.join(SNAPSHOT_DIR))?;
                snapshot::save(&sub.join(SNAPSHOT_DIR).join(FINAL_SNAPSHOT), last)?;
            }
        }
    }
    Ok(())
}

/// One row of the symbol table printed by `check-symbols`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolRow {
    pub n_sq: i64,
    pub filter: f64,
    pub a: f64,
    pub relaxation: f64,
    pub deconv: f64,
    pub upper: f64,
    pub holds: bool,
}

pub const SYMBOL_TOLERANCE: f64 = 1e-12;

/// Checks `1 ≤ D̂_N ≤ min(N + 1, Â)` on every mode of an `M³` grid; the
/// rows cover the distinct shells `|n|²` up to the truncation radius.
pub fn symbol_rows(alpha: f64, order: usize, modes: usize) -> Result<(Vec<SymbolRow>, bool), RunError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(RunError::Config(ConfigError::Domain {
            name: "alpha",
            value: alpha,
            range: "α > 0",
        }));
    }
    let grid = TorusGrid::new(2.0 * std::f64::consts::PI, modes)?;
    let spec = DeconvolutionSpec::new(&grid, alpha, order)?;
    let mut all_hold = true;
    let mut shells = std::collections::BTreeMap::new();
    for slot in 0..grid.len() {
        let n = grid.integer_index(slot);
        let n_sq = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
        let d = spec.deconv_symbol(slot);
        let upper = ((order + 1) as f64).min(spec.a_symbol(slot));
        let holds = d >= 1.0 - SYMBOL_TOLERANCE && d <= upper + SYMBOL_TOLERANCE;
        all_hold &= holds;
        if grid.is_retained(slot) || slot == 0 {
            shells.entry(n_sq).or_insert_with(|| {
                let k_sq = grid.k_sq(slot);
                SymbolRow {
                    n_sq,
                    filter: spec.filter_symbol(slot),
                    a: spec.a_symbol(slot),
                    relaxation: relaxation_symbol(alpha, order, k_sq),
                    deconv: deconv_symbol(alpha, order, k_sq),
                    upper,
                    holds,
                }
            });
        }
    }
    Ok((shells.into_values().collect(), all_hold))
}

/// `check-symbols <alpha> <N> <modes>`; returns whether every bound holds.
pub fn check_symbols(alpha: f64, order: usize, modes: usize, out: &mut impl Write) -> Result<bool, RunError> {
    let (rows, all_hold) = symbol_rows(alpha, order, modes)?;
    writeln!(out, "alpha = {alpha}, N = {order}, grid = {modes}^3")?;
    writeln!(
        out,
        "{:>6} {:>14} {:>14} {:>14} {:>14} {:>14} {:>4}",
        "|n|^2", "G", "A", "rho_N", "D_N", "min(N+1,A)", "ok"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>6} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>4}",
            r.n_sq,
            r.filter,
            r.a,
            r.relaxation,
            r.deconv,
            r.upper,
            if r.holds { "yes" } else { "NO" }
        )?;
    }
    writeln!(
        out,
        "1 <= D_N <= min(N+1, A) on all {} modes: {}",
        modes * modes * modes,
        if all_hold { "yes" } else { "NO" }
    )?;
    Ok(all_hold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_table_shells() {
        let (rows, ok) = symbol_rows(1.0, 2, 8).unwrap();
        assert!(ok);
        assert_eq!(rows[0].n_sq, 0);
        assert_eq!(rows[0].deconv, 1.0);
        let one = rows.iter().find(|r| r.n_sq == 1).unwrap();
        assert!((one.deconv - 1.75).abs() < 1e-15);
        assert_eq!(one.upper, 2.0);
        assert!(rows.iter().all(|r| r.n_sq <= 9));
    }

    #[test]
    fn check_symbols_prints_verdict() {
        let mut buf = Vec::new();
        assert!(check_symbols(0.5, 3, 8, &mut buf).unwrap());
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().ends_with("yes"));
        assert!(symbol_rows(0.0, 3, 8).is_err());
        assert!(symbol_rows(1.0, 3, 7).is_err());
    }

    #[test]
    fn error_categories() {
        let cfg: RunError = AdmError::InvalidPlan("x".into()).into();
        assert_eq!((cfg.category(), cfg.exit_code()), ("config", 2));
        let num: RunError = AdmError::CflViolation { dt: 1.0, limit: 0.1 }.into();
        assert_eq!((num.category(), num.exit_code()), ("numerical", 3));
        let io: RunError = std::io::Error::other("disk").into();
        assert_eq!((io.category(), io.exit_code()), ("io", 4));
    }
}
