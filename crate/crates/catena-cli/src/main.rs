//! `catena` — config-driven simulations of a suspension bridge whose
//! cables can go slack, plus threshold searches, sweeps, and the
//! library's self-check suites.
//!
//! Exit codes: 0 success, 1 failed validation, 2 configuration error,
//! 3 numerical or protocol abort. Identical configuration produces
//! bit-identical output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use catena::bridge_model::{make_geometry, BridgeParams, CableGeometry};
use catena::dynamics::{
    simulate, Integrator, ModalState, ModelVariant, RunRecord, SimOptions,
};
use catena::envelope::{convex_envelope, GridFunction, ToleranceConfig};
use catena::experiments::{
    build_ic, detect_instability, ExperimentSpec, SearchParams, ThresholdResult,
};
use catena::validation::run_all_suites;
use catena::variation::{
    directional_quotient, example_2_3_phi, example_2_3_zeta,
};

// ---------------------------------------------------------------------------
// Configuration schema
// ---------------------------------------------------------------------------

/// Time-discretization block. `N` and `T` keep their conventional
/// uppercase names in the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Numerics {
    /// Grid cells across the span.
    #[serde(rename = "N")]
    n_cells: usize,
    /// Time step (s).
    dt: f64,
    /// Horizon (s).
    #[serde(rename = "T")]
    t_final: f64,
    /// Stepping scheme.
    integrator: Integrator,
    /// Seconds between stored samples.
    store_stride: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_cells: 2048,
            dt: 1e-3,
            t_final: 120.0,
            integrator: Integrator::Rk4,
            store_stride: 0.01,
        }
    }
}

impl Numerics {
    fn validate(&self) -> Result<(), String> {
        if self.n_cells < 2 {
            return Err(format!("numerics.N must be at least 2, got {}", self.n_cells));
        }
        for (name, v) in [
            ("numerics.dt", self.dt),
            ("numerics.T", self.t_final),
            ("numerics.store_stride", self.store_stride),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Which constitutive variants a threshold table covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum VariantChoice {
    #[default]
    Convexified,
    Rigid,
    Both,
}

impl VariantChoice {
    fn variants(self) -> Vec<ModelVariant> {
        match self {
            Self::Convexified => vec![ModelVariant::Convexified],
            Self::Rigid => vec![ModelVariant::Rigid],
            Self::Both => vec![ModelVariant::Convexified, ModelVariant::Rigid],
        }
    }
}

/// Multi-mode threshold search request.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SweepConfig {
    /// Excited modes, searched in the given order.
    modes: Vec<usize>,
    /// Variant(s) to tabulate.
    variant: VariantChoice,
    /// Seed ratio for the non-excited coordinates.
    perturbation_ratio: f64,
    /// Detection level relative to the excited amplitude.
    detection_ratio: f64,
    /// Longitudinal modes carried.
    n_w: usize,
    /// Torsional modes carried.
    n_theta: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let proto = ExperimentSpec::default();
        Self {
            modes: (1..=10).collect(),
            variant: VariantChoice::default(),
            perturbation_ratio: proto.perturbation_ratio,
            detection_ratio: proto.detection_ratio,
            n_w: proto.n_w,
            n_theta: proto.n_theta,
        }
    }
}

/// Output destination and formats.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutputConfig {
    /// Directory all files are written into (created if missing).
    dir: PathBuf,
    /// Any subset of {"csv", "json"}.
    formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl OutputConfig {
    fn validate(&self) -> Result<(), String> {
        for f in &self.formats {
            if f != "csv" && f != "json" {
                return Err(format!("output.formats entry {f:?} is not \"csv\" or \"json\""));
            }
        }
        Ok(())
    }
    fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

/// Complete run configuration. Unknown keys are rejected at every level;
/// every block is optional and defaults to the reference setup.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    bridge: BridgeParams,
    numerics: Numerics,
    /// Single-run protocol block (`simulate`, single-mode `threshold`).
    experiment: Option<ExperimentSpec>,
    /// Multi-mode search block (`sweep`, multi-mode `threshold`).
    sweep: Option<SweepConfig>,
    /// Bracketing strategy shared by `threshold` and `sweep`.
    search: SearchParams,
    tolerances: ToleranceConfig,
    output: OutputConfig,
}

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        self.bridge.validate().map_err(|e| e.to_string())?;
        self.numerics.validate()?;
        self.output.validate()?;
        if let Some(spec) = &self.experiment {
            spec.validate().map_err(|e| e.to_string())?;
        }
        if self.experiment.is_some() && self.sweep.is_some() {
            return Err("config declares both [experiment] and [sweep]; pick one".into());
        }
        Ok(())
    }

    fn sim_options(&self, variant: ModelVariant) -> SimOptions {
        SimOptions {
            integrator: self.numerics.integrator,
            variant,
            store_stride: self.numerics.store_stride,
            tolerances: self.tolerances,
            ..SimOptions::default()
        }
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "catena",
    about = "Suspension bridge dynamics with slackening cables",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Path to the TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Dot-path overrides applied on top of the file, e.g.
    /// `--set numerics.dt=5e-4 --set sweep.modes=[9,10]`.
    /// Values are parsed as TOML; unparsable values are taken as strings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one run and write its time series and summary.
    Simulate(ConfigArgs),
    /// Locate the critical amplitude for one mode (or sweep, if the
    /// config has a [sweep] block) and write the threshold table.
    Threshold(ConfigArgs),
    /// Locate critical amplitudes for several modes and write the table.
    Sweep(ConfigArgs),
    /// Run the deterministic self-check suites and print a ledger.
    Validate {
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random cases per suite.
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Demonstrate one-sided differentiability of the convexified
    /// functional on the classical bump example.
    #[command(name = "example-2-3")]
    Example23 {
        /// Grid cells for the envelope route.
        #[arg(long, default_value_t = 4000)]
        n_cells: usize,
    },
}

/// Error carrying the process exit code.
enum CliError {
    /// Unreadable, unparsable, or invalid configuration (exit 2).
    Config(String),
    /// Numerical or protocol abort (exit 3).
    Run(String),
    /// One or more validation suites failed (exit 1).
    ValidationFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::ValidationFailed => 1,
            Self::Config(_) => 2,
            Self::Run(_) => 3,
        }
    }
}

fn run_error(e: catena::Error) -> CliError {
    match e {
        catena::Error::InvalidConfig(_)
        | catena::Error::InvalidParameter(_)
        | catena::Error::InvalidGrid(_) => CliError::Config(e.to_string()),
        _ => CliError::Run(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_worker_pool().and_then(|()| match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Threshold(args) => cmd_threshold(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Validate { seed, cases } => cmd_validate(seed, cases),
        Command::Example23 { n_cells } => cmd_example(n_cells),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("configuration error: {msg}"),
                CliError::Run(msg) => eprintln!("run aborted: {msg}"),
                CliError::ValidationFailed => eprintln!("validation failed"),
            }
            ExitCode::from(e.code())
        }
    }
}

/// Honors the `CATENA_WORKERS` environment variable.
fn configure_worker_pool() -> Result<(), CliError> {
    match std::env::var("CATENA_WORKERS") {
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .map_err(|_| CliError::Config(format!("CATENA_WORKERS={raw} is not a count")))?;
            catena::configure_workers(n).map_err(run_error)
        }
        Err(_) => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Config loading and overrides
// ---------------------------------------------------------------------------

fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", args.config.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", args.config.display())))?;
    for pair in &args.overrides {
        apply_override(&mut table, pair)?;
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))?;
    config.validate().map_err(CliError::Config)?;
    Ok(config)
}

/// Applies one `dot.path=value` override onto the parsed TOML tree.
fn apply_override(root: &mut toml::Table, pair: &str) -> Result<(), CliError> {
    let (path, raw_value) = pair
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {pair:?} is not KEY=VALUE")))?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("override key {path:?} is malformed")));
    }
    // Parse the value as TOML; fall back to a plain string (lets users
    // write `integrator=verlet` without quotes).
    let value = format!("v = {raw_value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw_value.to_string()));
    let mut node = root;
    for seg in &segments[..segments.len() - 1] {
        node = node
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Config(format!("override {path:?} descends into a non-table key"))
            })?;
    }
    node.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

fn build_setting(config: &RunConfig) -> Result<CableGeometry, CliError> {
    make_geometry(&config.bridge, config.numerics.n_cells).map_err(run_error)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("creating {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Run(format!("writing {}: {e}", path.display())))
}

/// Full-precision float formatting (17 significant digits round-trips
/// every IEEE double exactly).
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateSummary<'a> {
    /// The protocol block the run used, if any.
    experiment: Option<&'a ExperimentSpec>,
    /// Stability classification under the protocol's detection rule.
    unstable: Option<bool>,
    #[serde(flatten)]
    run: &'a catena::dynamics::RunSummary,
}

fn cmd_simulate(args: &ConfigArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    if config.sweep.is_some() {
        return Err(CliError::Config(
            "simulate needs an [experiment] block (or none for a rest start), not [sweep]".into(),
        ));
    }
    if let Some(w) = config.bridge.sag_ratio_warning() {
        eprintln!("warning: {w}");
    }
    let geom = build_setting(&config)?;
    // numerics.T governs the horizon; the protocol block follows it.
    let experiment = config.experiment.as_ref().map(|spec| ExperimentSpec {
        horizon: config.numerics.t_final,
        ..spec.clone()
    });
    let ic = match &experiment {
        Some(spec) => build_ic(spec, &config.bridge).map_err(run_error)?,
        None => ModalState::rest(
            ExperimentSpec::default().n_w,
            ExperimentSpec::default().n_theta,
        ),
    };
    let variant = experiment
        .as_ref()
        .map(|s| s.model_variant)
        .unwrap_or_default();
    let opts = config.sim_options(variant);
    let record = simulate(
        &ic,
        config.numerics.t_final,
        config.numerics.dt,
        &geom,
        &config.bridge,
        &opts,
    )
    .map_err(run_error)?;

    ensure_dir(&config.output.dir)?;
    if config.output.wants("csv") {
        let path = config.output.dir.join("series.csv");
        write_file(&path, &series_csv(&record))?;
        println!("wrote {}", path.display());
    }
    if config.output.wants("json") {
        let unstable = experiment
            .as_ref()
            .map(|spec| detect_instability(&record, spec));
        let summary = SimulateSummary {
            experiment: experiment.as_ref(),
            unstable,
            run: &record.summary,
        };
        let path = config.output.dir.join("summary.json");
        let body = serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::Run(format!("serializing summary: {e}")))?;
        write_file(&path, &body)?;
        println!("wrote {}", path.display());
    }
    println!(
        "final time {:.3} s, energy drift {:.3e}, mean slackening {:.4}%",
        record.summary.final_time,
        record.summary.energy_drift,
        100.0 * record.summary.mean_slackening
    );
    Ok(())
}

/// Time series as CSV: t, longitudinal amplitudes, torsional amplitudes,
/// energy, and both slack fractions, at full double precision.
fn series_csv(record: &RunRecord) -> String {
    let n_w = record.w_bar_history.first().map_or(0, Vec::len);
    let n_t = record.theta_bar_history.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for k in 1..=n_w {
        let _ = write!(out, ",w_bar_{k}");
    }
    for k in 1..=n_t {
        let _ = write!(out, ",theta_bar_{k}");
    }
    out.push_str(",energy,slack_alpha,slack_beta\n");
    for (i, &t) in record.times.iter().enumerate() {
        out.push_str(&full(t));
        for v in &record.w_bar_history[i] {
            out.push(',');
            out.push_str(&full(*v));
        }
        for v in &record.theta_bar_history[i] {
            out.push(',');
            out.push_str(&full(*v));
        }
        for v in [record.energy[i], record.slack_alpha[i], record.slack_beta[i]] {
            out.push(',');
            out.push_str(&full(v));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// threshold / sweep
// ---------------------------------------------------------------------------

/// One row of the threshold table: a mode with its per-variant outcomes.
#[derive(Serialize)]
struct ThresholdRow {
    mode: usize,
    convexified: Option<ThresholdResult>,
    convexified_error: Option<String>,
    rigid: Option<ThresholdResult>,
    rigid_error: Option<String>,
}

fn cmd_threshold(args: &ConfigArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    match (&config.experiment, &config.sweep) {
        (Some(spec), None) => {
            let template = ExperimentSpec {
                horizon: config.numerics.t_final,
                ..spec.clone()
            };
            let rows = run_sweep(
                &config,
                &[spec.excited_mode],
                template,
                VariantChoice::from_variant(spec.model_variant),
            )?;
            write_threshold_outputs(&config, &rows)
        }
        (None, Some(_)) => {
            let (modes, template, choice) = sweep_request(&config)?;
            let rows = run_sweep(&config, &modes, template, choice)?;
            write_threshold_outputs(&config, &rows)
        }
        (None, None) => Err(CliError::Config(
            "threshold needs an [experiment] or [sweep] block".into(),
        )),
        (Some(_), Some(_)) => unreachable!("rejected by RunConfig::validate"),
    }
}

fn cmd_sweep(args: &ConfigArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let (modes, template, choice) = sweep_request(&config)?;
    let rows = run_sweep(&config, &modes, template, choice)?;
    write_threshold_outputs(&config, &rows)
}

impl VariantChoice {
    fn from_variant(v: ModelVariant) -> Self {
        match v {
            ModelVariant::Convexified => Self::Convexified,
            ModelVariant::Rigid => Self::Rigid,
        }
    }
}

fn sweep_request(config: &RunConfig) -> Result<(Vec<usize>, ExperimentSpec, VariantChoice), CliError> {
    let sw = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] block".into()))?;
    if sw.modes.is_empty() {
        return Err(CliError::Config("sweep.modes is empty".into()));
    }
    let template = ExperimentSpec {
        excited_mode: 1,
        amplitude: 1.0,
        perturbation_ratio: sw.perturbation_ratio,
        horizon: config.numerics.t_final,
        detection_ratio: sw.detection_ratio,
        model_variant: ModelVariant::Convexified,
        n_w: sw.n_w,
        n_theta: sw.n_theta,
    };
    template.validate().map_err(run_error)?;
    Ok((sw.modes.clone(), template, sw.variant))
}

fn run_sweep(
    config: &RunConfig,
    modes: &[usize],
    template: ExperimentSpec,
    choice: VariantChoice,
) -> Result<Vec<ThresholdRow>, CliError> {
    let geom = build_setting(config)?;
    let mut rows: Vec<ThresholdRow> = modes
        .iter()
        .map(|&mode| ThresholdRow {
            mode,
            convexified: None,
            convexified_error: None,
            rigid: None,
            rigid_error: None,
        })
        .collect();
    for variant in choice.variants() {
        let template = ExperimentSpec {
            model_variant: variant,
            ..template.clone()
        };
        let opts = config.sim_options(variant);
        let out = catena::experiments::sweep(
            modes,
            &template,
            &config.search,
            config.numerics.dt,
            &geom,
            &config.bridge,
            &opts,
        );
        for ((_, result), row) in out.into_iter().zip(rows.iter_mut()) {
            let (slot, err_slot) = match variant {
                ModelVariant::Convexified => (&mut row.convexified, &mut row.convexified_error),
                ModelVariant::Rigid => (&mut row.rigid, &mut row.rigid_error),
            };
            match result {
                Ok(t) => {
                    println!(
                        "mode {:2} [{:?}]: threshold {:.3} m, energy {:.4e} J, slackening {:.2}%",
                        row.mode,
                        variant,
                        t.threshold,
                        t.energy_at_threshold,
                        100.0 * t.mean_slackening
                    );
                    *slot = Some(t);
                }
                Err(e) => {
                    eprintln!("mode {:2} [{:?}]: {e}", row.mode, variant);
                    *err_slot = Some(e.to_string());
                }
            }
        }
    }
    Ok(rows)
}

fn write_threshold_outputs(config: &RunConfig, rows: &[ThresholdRow]) -> Result<(), CliError> {
    ensure_dir(&config.output.dir)?;
    if config.output.wants("csv") {
        let path = config.output.dir.join("thresholds.csv");
        write_file(&path, &threshold_csv(rows))?;
        println!("wrote {}", path.display());
    }
    if config.output.wants("json") {
        let path = config.output.dir.join("thresholds.json");
        let body = serde_json::to_string_pretty(rows)
            .map_err(|e| CliError::Run(format!("serializing table: {e}")))?;
        write_file(&path, &body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Threshold comparison table: one row per mode, per-variant column
/// groups, failures annotated in the trailing note column.
fn threshold_csv(rows: &[ThresholdRow]) -> String {
    let mut out = String::from(
        "mode,\
         conv_threshold,conv_energy,conv_slackening,conv_bracket_lo,conv_bracket_hi,\
         rigid_threshold,rigid_energy,rigid_slackening,rigid_bracket_lo,rigid_bracket_hi,\
         note\n",
    );
    for row in rows {
        let _ = write!(out, "{}", row.mode);
        for res in [&row.convexified, &row.rigid] {
            match res {
                Some(t) => {
                    let _ = write!(
                        out,
                        ",{},{},{},{},{}",
                        full(t.threshold),
                        full(t.energy_at_threshold),
                        full(t.mean_slackening),
                        full(t.bracket.0),
                        full(t.bracket.1)
                    );
                }
                None => out.push_str(",,,,,"),
            }
        }
        let mut notes: Vec<String> = Vec::new();
        if let Some(e) = &row.convexified_error {
            notes.push(format!("convexified: {e}"));
        }
        if let Some(e) = &row.rigid_error {
            notes.push(format!("rigid: {e}"));
        }
        let note = notes.join("; ").replace('"', "'");
        if note.is_empty() {
            out.push(',');
        } else {
            let _ = write!(out, ",\"{note}\"");
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(seed: u64, cases: usize) -> Result<(), CliError> {
    if cases == 0 {
        return Err(CliError::Config("--cases must be positive".into()));
    }
    let mut all_pass = true;
    for o in run_all_suites(seed, cases) {
        println!(
            "{}: {} ({} cases, worst {:.3e})",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.cases,
            o.worst
        );
        if !o.passed {
            println!("  {}", o.detail);
            all_pass = false;
        }
    }
    // The classical one-sided example doubles as a fixed-value check.
    let demo = example_check(4000).map_err(run_error)?;
    println!(
        "one-sided-example-tangency-and-quotients: {} (root {:.4}, boundary {:.4}, quotient ratio {:.1e})",
        if demo.passed { "PASS" } else { "FAIL" },
        demo.zeta_root,
        demo.zeta_boundary,
        demo.quotient_ratio
    );
    all_pass &= demo.passed;
    if all_pass {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

// ---------------------------------------------------------------------------
// example-2-3
// ---------------------------------------------------------------------------

struct ExampleCheck {
    zeta_root: f64,
    zeta_boundary: f64,
    left_quotient: f64,
    right_quotient: f64,
    straightened_area: f64,
    quotient_ratio: f64,
    passed: bool,
}

/// Evaluates the bump example three ways: the tangency root, the
/// envelope's affine boundary on a grid, and the one-sided difference
/// quotients of the perturbed flat profile.
fn example_check(n_cells: usize) -> catena::Result<ExampleCheck> {
    let zeta_root = example_2_3_zeta();
    let dip = GridFunction::sample(-2.0, 2.0, n_cells, |x| -example_2_3_phi(x))?;
    let env = convex_envelope(&dip, &ToleranceConfig::default())?;
    let n = dip.n_cells();
    let zeta_boundary = env
        .affine_intervals
        .iter()
        .find(|&&(_, q)| q == n)
        .map(|&(p, _)| dip.x(p))
        .unwrap_or(f64::NAN);
    let base = GridFunction::sample(-2.0, 2.0, n_cells, |_| 0.0)?;
    let phi = GridFunction::sample(-2.0, 2.0, n_cells, example_2_3_phi)?;
    let q = directional_quotient(&base, &phi, &[1e-6, -1e-6])?;
    let (right_quotient, left_quotient) = (q[0], q[1]);
    let straightened_area = -env.env.trapezoid();
    let quotient_ratio = right_quotient.abs() / left_quotient.abs().max(f64::MIN_POSITIVE);
    let passed = (zeta_root - 0.25).abs() <= 0.01
        && (zeta_boundary - 0.25).abs() <= 0.01
        && quotient_ratio < 1e-3
        && (left_quotient - straightened_area).abs() <= 0.01 * straightened_area.abs();
    Ok(ExampleCheck {
        zeta_root,
        zeta_boundary,
        left_quotient,
        right_quotient,
        straightened_area,
        quotient_ratio,
        passed,
    })
}

fn cmd_example(n_cells: usize) -> Result<(), CliError> {
    if n_cells < 16 {
        return Err(CliError::Config(format!(
            "--n-cells must be at least 16, got {n_cells}"
        )));
    }
    let demo = example_check(n_cells).map_err(run_error)?;
    println!("A flat profile perturbed by a smooth bump responds one-sidedly:");
    println!("  raising the bump leaves the envelope flat (right derivative 0);");
    println!("  lowering it carves a straightened dip (left derivative ≠ 0).");
    println!();
    println!("tangency root            ζ = {:.6}", demo.zeta_root);
    println!("grid affine boundary     ζ = {:.6}  ({n_cells} cells)", demo.zeta_boundary);
    println!("right difference quotient  {:+.6e}", demo.right_quotient);
    println!("left difference quotient   {:+.6e}", demo.left_quotient);
    println!("straightened-dip area      {:+.6e}", demo.straightened_area);
    println!(
        "right/left magnitude ratio  {:.2e}  (one-sidedness)",
        demo.quotient_ratio
    );
    if !demo.passed {
        return Err(CliError::Run(
            "example values departed from their expected figures".into(),
        ));
    }
    Ok(())
}
