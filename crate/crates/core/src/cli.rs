//! Command-line front end.
//!
//! Every command produces a [`ResultTable`]: named numeric columns plus an
//! ordered metadata block. The metadata carries the canonical argument vector,
//! so a table can be regenerated with [`RunConfig::from_metadata`].
//!
//! Exit statuses: 0 success, 2 usage, 3 configuration, 4 numerical contract,
//! 5 I/O.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bell::violation_scan;
use crate::duality::duality_report;
use crate::dynamics::{jc_apply, jc_oracle};
use crate::error::Error;
use crate::fockspace::{format_sig17, FieldPreparation, FockCutoff, Mode, PureState, DEFAULT_N_MAX};
use crate::interferometer::{detection_probabilities, QoriConfig, FRINGE_GAUGE_OFFSET};
use crate::self_eraser::{
    entanglement_entropy, erason_probabilities_closed_form, erasure_visibility, fringe_scan, nonlocal_phase,
    run_protocol, ErasonPath, EraserConfig, ERASURE_PHASE_OFFSET, NONLOCAL_PHASE_OFFSET,
};

pub const TOOL_NAME: &str = "ramsey-eraser";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Directory for output files when `--output` is absent.
pub const OUT_DIR_ENV: &str = "RAMSEY_ERASER_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 2,
    Config = 3,
    Contract = 4,
    Io = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Argument syntax; help and version requests land here too.
    Clap(clap::Error),
    Failure { status: ExitStatus, message: String },
}

impl CliError {
    fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        CliError::Failure { status, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Usage, message)
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Config, message)
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Clap(e) if !e.use_stderr() => ExitStatus::Success,
            CliError::Clap(_) => ExitStatus::Usage,
            CliError::Failure { status, .. } => *status,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{}", e.render()),
            CliError::Failure { message, .. } => write!(f, "error: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidCutoff(_)
            | Error::PhotonNumberOutOfRange { .. }
            | Error::InadequateCutoff { .. }
            | Error::ThermalNotPure
            | Error::MixedPreparation(_)
            | Error::InvalidSubsystem { .. }
            | Error::NonHermitianObservable(_)
            | Error::UnknownObservable(_)
            | Error::ObservableSubsystem { .. }
            | Error::InvalidParameter(_) => ExitStatus::Config,
            Error::CutoffMismatch { .. }
            | Error::CutoffOverflow { .. }
            | Error::NotNormalized(_)
            | Error::InvalidDensity(_)
            | Error::ProbabilityOutOfRange(_)
            | Error::Contract(_) => ExitStatus::Contract,
        };
        CliError::new(status, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    /// Closed-form cavity crossing against dense diagonalization.
    Jc,
    /// Self-eraser states at the given cutoff against the default cutoff.
    ProtocolStates,
}

#[derive(Parser, Debug)]
#[command(name = TOOL_NAME, version, about = "Cavity-QED Ramsey interferometer and self-eraser simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Output file; defaults to $RAMSEY_ERASER_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Read angle arguments in degrees.
    #[arg(long, global = true)]
    degrees: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Erasure fringes P_ge, P_gg over the phase shift.
    Fringes {
        /// s1^2 value or START:END:STEPS range.
        #[arg(long, allow_hyphen_values = true)]
        s1_sq: Option<String>,
        /// Phase value or START:END:STEPS range.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
    },
    /// Way probabilities, predictability, visibility, quality, distinguishability.
    Duality {
        /// vacuum | fock:N | coherent:RE[,IM] | thermal:NBAR
        #[arg(long)]
        field: Option<String>,
        /// Rabi phase value or START:END:STEPS range.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Temporal Bell quantities over the Rabi phase.
    Bell {
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<String>,
    },
    /// One self-eraser run, optionally dumping the t_A and t_E states.
    Protocol {
        #[arg(long, allow_hyphen_values = true)]
        s1_sq: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
        /// both | m2-only
        #[arg(long)]
        path: Option<String>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Randomized agreement check between independent evaluation routes.
    OracleCheck {
        #[arg(long, value_enum, default_value_t = OracleMode::Jc)]
        mode: OracleMode,
        #[arg(long, default_value_t = 20)]
        cutoff: usize,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 1e-8, allow_hyphen_values = true)]
        tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

/// Inclusive grid of `steps` points from `start` to `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Grid {
    pub fn single(x: f64) -> Self {
        Grid { start: x, end: x, steps: 1 }
    }

    pub fn points(&self) -> Vec<f64> {
        crate::fringe::linspace(self.start, self.end, self.steps)
    }

    fn is_single(&self) -> bool {
        self.steps == 1 && self.start == self.end
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single() {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.end, self.steps)
        }
    }
}

fn parse_number(flag: &str, text: &str) -> CliResult<f64> {
    let x: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("--{flag}: `{text}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::usage(format!("--{flag}: `{text}` is not finite")));
    }
    Ok(x)
}

fn angle(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}

/// `START:END:STEPS` or a single value.
pub fn parse_grid(flag: &str, text: &str, degrees: bool) -> CliResult<Grid> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(Grid::single(angle(parse_number(flag, single)?, degrees))),
        [start, end, steps] => {
            let start = angle(parse_number(flag, start)?, degrees);
            let end = angle(parse_number(flag, end)?, degrees);
            let steps: usize = steps
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("--{flag}: step count `{steps}` is not a positive integer")))?;
            if steps == 0 {
                return Err(CliError::usage(format!("--{flag}: range needs at least one step")));
            }
            if start > end {
                return Err(CliError::usage(format!("--{flag}: range start {start} exceeds end {end}")));
            }
            Ok(Grid { start, end, steps })
        }
        _ => Err(CliError::usage(format!("--{flag}: malformed range `{text}`, expected START:END:STEPS"))),
    }
}

fn parse_scalar(flag: &str, text: &str, degrees: bool) -> CliResult<f64> {
    if text.contains(':') {
        return Err(CliError::usage(format!("--{flag} takes a single value, got `{text}`")));
    }
    Ok(angle(parse_number(flag, text)?, degrees))
}

#[derive(Clone, Debug, PartialEq)]
pub enum CommandConfig {
    Fringes { s1_sq: Grid, phi: Grid },
    Duality { field: FieldPreparation, theta: Grid, phi: f64, cutoff: FockCutoff },
    Bell { theta: Grid },
    Protocol { s1_sq: f64, phi: f64, path: ErasonPath, cutoff: FockCutoff, dump_dir: Option<PathBuf> },
    OracleCheck { mode: OracleMode, cutoff: FockCutoff, cases: usize, tol: f64, seed: u64 },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Fringes { .. } => "fringes",
            CommandConfig::Duality { .. } => "duality",
            CommandConfig::Bell { .. } => "bell",
            CommandConfig::Protocol { .. } => "protocol",
            CommandConfig::OracleCheck { .. } => "oracle-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
}

fn cutoff_from(n_max: usize) -> CliResult<FockCutoff> {
    Ok(FockCutoff::new(n_max)?)
}

fn check_s1_sq(x: f64) -> CliResult<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CliError::config(format!("--s1-sq: {x} must lie in [0, 1]")));
    }
    Ok(())
}

/// Parses and validates `argv` (program name first).
pub fn parse_args<I, T>(argv: I) -> CliResult<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let deg = cli.degrees;
    let command = match cli.command {
        Command::Fringes { s1_sq, phi } => {
            let s1_sq = match s1_sq {
                Some(t) => parse_grid("s1-sq", &t, false)?,
                None => Grid::single(0.5),
            };
            check_s1_sq(s1_sq.start)?;
            check_s1_sq(s1_sq.end)?;
            let phi = match phi {
                Some(t) => parse_grid("phi", &t, deg)?,
                None => Grid { start: 0.0, end: TAU, steps: 256 },
            };
            CommandConfig::Fringes { s1_sq, phi }
        }
        Command::Duality { field, theta, phi, cutoff } => {
            let field: FieldPreparation = match field {
                Some(t) => t.parse().map_err(|e: Error| CliError::config(format!("--field: {e}")))?,
                None => FieldPreparation::Vacuum,
            };
            let cutoff = cutoff_from(cutoff.unwrap_or(DEFAULT_N_MAX))?;
            field.validate(cutoff)?;
            if !field.is_pure() {
                return Err(Error::MixedPreparation("the duality report").into());
            }
            let theta = match theta {
                Some(t) => parse_grid("theta", &t, deg)?,
                None => Grid::single(FRAC_PI_4),
            };
            let phi = match phi {
                Some(t) => parse_scalar("phi", &t, deg)?,
                None => 0.0,
            };
            CommandConfig::Duality { field, theta, phi, cutoff }
        }
        Command::Bell { theta } => {
            let theta = match theta {
                Some(t) => parse_grid("theta", &t, deg)?,
                None => Grid { start: 0.0, end: PI, steps: crate::bell::DEFAULT_GRID_POINTS },
            };
            CommandConfig::Bell { theta }
        }
        Command::Protocol { s1_sq, phi, path, cutoff, dump_dir } => {
            let s1_sq = match s1_sq {
                Some(t) => parse_scalar("s1-sq", &t, false)?,
                None => 0.5,
            };
            check_s1_sq(s1_sq)?;
            let phi = match phi {
                Some(t) => parse_scalar("phi", &t, deg)?,
                None => 0.0,
            };
            let path: ErasonPath = match path {
                Some(t) => t.parse().map_err(|e: Error| CliError::config(format!("--path: {e}")))?,
                None => ErasonPath::BothCavities,
            };
            let cutoff = cutoff_from(cutoff.unwrap_or(DEFAULT_N_MAX))?;
            CommandConfig::Protocol { s1_sq, phi, path, cutoff, dump_dir }
        }
        Command::OracleCheck { mode, cutoff, cases, tol, seed } => {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::usage(format!("--tol must be positive, got {tol}")));
            }
            if cases == 0 {
                return Err(CliError::usage("--cases must be at least 1"));
            }
            CommandConfig::OracleCheck { mode, cutoff: cutoff_from(cutoff)?, cases, tol, seed }
        }
    };
    Ok(RunConfig { command, format: cli.format, output: cli.output })
}

fn format_name(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

fn oracle_mode_name(mode: OracleMode) -> &'static str {
    match mode {
        OracleMode::Jc => "jc",
        OracleMode::ProtocolStates => "protocol-states",
    }
}

impl RunConfig {
    /// Arguments (without program name) that reproduce this configuration's
    /// table; angles in radians, output locations omitted.
    pub fn canonical_argv(&self) -> Vec<String> {
        let mut argv = vec![self.command.name().to_string()];
        let mut push = |flag: &str, value: String| {
            argv.push(format!("--{flag}"));
            argv.push(value);
        };
        match &self.command {
            CommandConfig::Fringes { s1_sq, phi } => {
                push("s1-sq", s1_sq.to_string());
                push("phi", phi.to_string());
            }
            CommandConfig::Duality { field, theta, phi, cutoff } => {
                push("field", field.to_string());
                push("theta", theta.to_string());
                push("phi", phi.to_string());
                push("cutoff", cutoff.n_max().to_string());
            }
            CommandConfig::Bell { theta } => push("theta", theta.to_string()),
            CommandConfig::Protocol { s1_sq, phi, path, cutoff, .. } => {
                push("s1-sq", s1_sq.to_string());
                push("phi", phi.to_string());
                push("path", path.label().to_string());
                push("cutoff", cutoff.n_max().to_string());
            }
            CommandConfig::OracleCheck { mode, cutoff, cases, tol, seed } => {
                push("mode", oracle_mode_name(*mode).to_string());
                push("cutoff", cutoff.n_max().to_string());
                push("cases", cases.to_string());
                push("tol", tol.to_string());
                push("seed", seed.to_string());
            }
        }
        argv.push("--format".into());
        argv.push(format_name(self.format).into());
        argv
    }

    /// Rebuilds the configuration from a table's metadata block.
    pub fn from_metadata(metadata: &[(String, String)]) -> CliResult<RunConfig> {
        let argv = metadata
            .iter()
            .find(|(k, _)| k == "argv")
            .map(|(_, v)| v)
            .ok_or_else(|| CliError::config("metadata has no argv entry"))?;
        parse_args(std::iter::once(TOOL_NAME).chain(argv.split_whitespace()))
    }
}

/// Rectangular numeric table with an ordered metadata block.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&str], metadata: Vec<(String, String)>) -> Self {
        ResultTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new(), metadata }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> CliResult<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::new(
                ExitStatus::Contract,
                format!("row of width {} in a table of {} columns", row.len(), self.columns.len()),
            ));
        }
        if let Some(x) = row.iter().find(|x| !x.is_finite()) {
            return Err(CliError::new(ExitStatus::Contract, format!("non-finite cell {x}")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_sig17(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let quote = |s: &str| serde_json::Value::String(s.to_string()).to_string();
        let mut out = String::from("{\n  \"metadata\": {\n");
        let meta: Vec<String> = self.metadata.iter().map(|(k, v)| format!("    {}: {}", quote(k), quote(v))).collect();
        out.push_str(&meta.join(",\n"));
        out.push_str("\n  },\n  \"columns\": [");
        let cols: Vec<String> = self.columns.iter().map(|c| quote(c)).collect();
        out.push_str(&cols.join(", "));
        out.push_str("],\n  \"rows\": [\n");
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.iter().map(|&x| format_sig17(x)).collect();
                format!("    [{}]", cells.join(", "))
            })
            .collect();
        out.push_str(&rows.join(",\n"));
        out.push_str("\n  ]\n}\n");
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Metadata block of a rendered CSV or JSON table.
pub fn read_metadata(text: &str) -> CliResult<Vec<(String, String)>> {
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("unreadable JSON table: {e}")))?;
        let meta = value
            .get("metadata")
            .and_then(|m| m.as_object())
            .ok_or_else(|| CliError::config("JSON table has no metadata object"))?;
        return Ok(meta
            .iter()
            .map(|(k, v)| (k.clone(), v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())))
            .collect());
    }
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

/// A table plus an optional numerical-contract failure to report after it is
/// written.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub table: ResultTable,
    pub failure: Option<String>,
}

fn base_metadata(config: &RunConfig, gauge_delta: Option<f64>) -> Vec<(String, String)> {
    let mut meta = vec![
        ("tool".to_string(), TOOL_NAME.to_string()),
        ("version".to_string(), TOOL_VERSION.to_string()),
        ("command".to_string(), config.command.name().to_string()),
        ("argv".to_string(), config.canonical_argv().join(" ")),
    ];
    if let Some(delta) = gauge_delta {
        meta.push(("gauge_delta".to_string(), delta.to_string()));
    }
    meta
}

fn bool_cell(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn path_cell(path: ErasonPath) -> f64 {
    match path {
        ErasonPath::BothCavities => 0.0,
        ErasonPath::M2Only => 1.0,
    }
}

fn max_deviation(a: &PureState, b: &PureState) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Executes a configuration without touching the filesystem, except for
/// the protocol command's state dumps.
pub fn run(config: &RunConfig) -> CliResult<RunOutput> {
    let mut failure = None;
    let table = match &config.command {
        CommandConfig::Fringes { s1_sq, phi } => {
            let mut table = ResultTable::new(
                &["s1_sq", "phi", "p_ge", "p_gg", "sum", "nu_ge"],
                base_metadata(config, Some(ERASURE_PHASE_OFFSET)),
            );
            table.push_meta("s1_sq", s1_sq);
            table.push_meta("phi", phi);
            let phis = phi.points();
            for s in s1_sq.points() {
                let template = EraserConfig::from_s1_sq(s, 0.0, ErasonPath::BothCavities, FockCutoff::default())?;
                let nu = erasure_visibility(template.s1())?;
                for row in fringe_scan(&template, &phis)?.rows {
                    table.push_row(vec![s, row.phi, row.p_ge, row.p_gg, row.sum(), nu])?;
                }
            }
            table
        }
        CommandConfig::Duality { field, theta, phi, cutoff } => {
            let mut table = ResultTable::new(
                &[
                    "theta",
                    "p_aa",
                    "p_ab",
                    "w_plus",
                    "w_minus",
                    "predictability",
                    "visibility",
                    "quality",
                    "distinguishability",
                    "residual",
                    "degenerate",
                ],
                base_metadata(config, Some(FRINGE_GAUGE_OFFSET)),
            );
            table.push_meta("field", field);
            table.push_meta("theta", theta);
            table.push_meta("phi", phi);
            table.push_meta("n_max", cutoff.n_max());
            for t in theta.points() {
                let qori = QoriConfig::new(*field, t, *phi, *cutoff);
                let (p_aa, p_ab) = detection_probabilities(&qori)?;
                let r = duality_report(&qori)?;
                table.push_row(vec![
                    t,
                    p_aa,
                    p_ab,
                    r.w_plus,
                    r.w_minus,
                    r.predictability,
                    r.visibility,
                    r.quality,
                    r.distinguishability,
                    r.identity_residual,
                    bool_cell(r.degenerate),
                ])?;
            }
            table
        }
        CommandConfig::Bell { theta } => {
            let scan = violation_scan(&theta.points())?;
            let mut table = ResultTable::new(
                &["theta1", "delta_plus", "delta_minus", "lowest", "violates_plus", "violates_minus"],
                base_metadata(config, Some(ERASURE_PHASE_OFFSET)),
            );
            table.push_meta("theta1", theta);
            table.push_meta("result.minimum", scan.minimum);
            table.push_meta("result.argmin", scan.argmin);
            for r in &scan.rows {
                table.push_row(vec![
                    r.theta1,
                    r.delta_plus,
                    r.delta_minus,
                    r.delta_plus.min(r.delta_minus),
                    bool_cell(r.violates_plus),
                    bool_cell(r.violates_minus),
                ])?;
            }
            table
        }
        CommandConfig::Protocol { s1_sq, phi, path, cutoff, dump_dir } => {
            let eraser = EraserConfig::from_s1_sq(*s1_sq, *phi, *path, *cutoff)?;
            let trace = run_protocol(&eraser)?;
            if let Some(dir) = dump_dir {
                write_dumps(dir, &trace.state_after_quanton, &trace.state_after_erason)?;
            }
            let expected_e = match path {
                ErasonPath::BothCavities => erason_probabilities_closed_form(eraser.s1(), *phi).0,
                ErasonPath::M2Only => eraser.c1() * eraser.c1(),
            };
            let mut table = ResultTable::new(
                &[
                    "s1_sq",
                    "phi",
                    "path",
                    "p_e",
                    "p_g",
                    "p_e_closed_form",
                    "quanton_upper_population",
                    "entanglement_entropy",
                    "nonlocal_phase",
                ],
                base_metadata(config, Some(ERASURE_PHASE_OFFSET)),
            );
            table.push_meta("s1_sq", s1_sq);
            table.push_meta("phi", phi);
            table.push_meta("path", path.label());
            table.push_meta("n_max", cutoff.n_max());
            table.push_meta("nonlocal_phase_offset", NONLOCAL_PHASE_OFFSET);
            table.push_row(vec![
                *s1_sq,
                *phi,
                path_cell(*path),
                trace.probabilities.0,
                trace.probabilities.1,
                expected_e,
                trace.state_after_quanton.level_population(crate::fockspace::AtomLevel::Upper),
                entanglement_entropy(&trace.state_after_quanton)?,
                nonlocal_phase(&trace.state_after_quanton),
            ])?;
            table
        }
        CommandConfig::OracleCheck { mode, cutoff, cases, tol, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut table = match mode {
                OracleMode::Jc => ResultTable::new(&["case", "mode", "theta", "deviation"], base_metadata(config, None)),
                OracleMode::ProtocolStates => ResultTable::new(
                    &["case", "s1", "phi", "path", "deviation"],
                    base_metadata(config, Some(ERASURE_PHASE_OFFSET)),
                ),
            };
            let mut worst = 0.0f64;
            for case in 0..*cases {
                let row = match mode {
                    OracleMode::Jc => {
                        let state = PureState::random(&mut rng, *cutoff);
                        let theta = rng.gen_range(0.0..2.0 * TAU);
                        let mode = if rng.gen::<bool>() { Mode::One } else { Mode::Two };
                        let dev = max_deviation(&jc_apply(&state, mode, theta)?, &jc_oracle(&state, mode, theta)?);
                        vec![case as f64, f64::from(mode.number()), theta, dev]
                    }
                    OracleMode::ProtocolStates => {
                        let s1 = rng.gen_range(-1.0..=1.0);
                        let phi = rng.gen_range(0.0..TAU);
                        let path = if rng.gen::<bool>() { ErasonPath::BothCavities } else { ErasonPath::M2Only };
                        let reference = FockCutoff::default();
                        let small = run_protocol(&EraserConfig::new(s1, phi, path, *cutoff)?)?;
                        let large = run_protocol(&EraserConfig::new(s1, phi, path, reference)?)?;
                        let widen = |s: &PureState| -> CliResult<PureState> {
                            if cutoff.n_max() <= reference.n_max() {
                                Ok(s.recut(reference)?)
                            } else {
                                Ok(s.clone())
                            }
                        };
                        let narrow = |s: &PureState| -> CliResult<PureState> {
                            if cutoff.n_max() > reference.n_max() {
                                Ok(s.recut(reference)?)
                            } else {
                                Ok(s.clone())
                            }
                        };
                        let dev = max_deviation(&widen(&small.state_after_quanton)?, &narrow(&large.state_after_quanton)?)
                            .max(max_deviation(&widen(&small.state_after_erason)?, &narrow(&large.state_after_erason)?))
                            .max((small.probabilities.0 - large.probabilities.0).abs())
                            .max((small.probabilities.1 - large.probabilities.1).abs());
                        vec![case as f64, s1, phi, path_cell(path), dev]
                    }
                };
                worst = worst.max(*row.last().expect("deviation column"));
                table.push_row(row)?;
            }
            let pass = worst < *tol;
            table.push_meta("result.max_deviation", worst);
            table.push_meta("result.pass", pass);
            if !pass {
                failure = Some(format!("oracle check failed: max deviation {worst:e} >= tolerance {tol:e}"));
            }
            table
        }
    };
    Ok(RunOutput { table, failure })
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(ExitStatus::Io, format!("{}: {e}", path.display()))
}

fn write_dumps(dir: &Path, at_a: &PureState, at_e: &PureState) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    for (name, state) in [("state_tA.txt", at_a), ("state_tE.txt", at_e)] {
        let path = dir.join(name);
        std::fs::write(&path, state.to_dump()).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

/// File the table goes to, or `None` for stdout.
pub fn destination(config: &RunConfig, out_dir: Option<&Path>) -> Option<PathBuf> {
    config
        .output
        .clone()
        .or_else(|| out_dir.map(|d| d.join(format!("{}.{}", config.command.name(), config.format.extension()))))
}

/// Full command-line run; returns the process exit status.
pub fn execute<I, T>(argv: I, out_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match execute_inner(argv, out_dir, stdout) {
        Ok(()) => ExitStatus::Success.code(),
        Err(e) => {
            let status = e.status();
            let sink: &mut dyn Write = if status == ExitStatus::Success { stdout } else { stderr };
            let _ = writeln!(sink, "{}", e.to_string().trim_end());
            status.code()
        }
    }
}

fn execute_inner<I, T>(argv: I, out_dir: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = parse_args(argv)?;
    let output = run(&config)?;
    let text = output.table.render(config.format);
    match destination(&config, out_dir) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
            }
            std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new(ExitStatus::Io, format!("stdout: {e}")))?,
    }
    match output.failure {
        Some(message) => Err(CliError::new(ExitStatus::Contract, message)),
        None => Ok(()),
    }
}
