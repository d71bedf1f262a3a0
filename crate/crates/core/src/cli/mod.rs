//! The `belltet` command line.
//!
//! Every subcommand prints one JSON document to stdout (or CSV for `evolve`
//! without `--out`) and reports failures through the exit codes in [`exit`].

pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::channels::{trajectory, ChannelError, ChannelFamily, DepolarizingWeights, NoiseSchedule};
use crate::export::{self, ExportError};
use crate::geometry::{
    contour_slice, isosurface, sample_field, sample_slice, Bounds, GeometryError, Ray, DEFAULT_SLICE_DIMS,
    DEFAULT_VOLUME_DIMS,
};
use crate::measures::{self, Measure, MeasureError};
use crate::ordering::{find_counterexample, ray_ordering_check, sequence_scan, OrderingError};
use crate::state::{random_states, BellDiagonalState, StateError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INVALID_STATE: i32 = 2;
    pub const ORACLE_GAP: i32 = 3;
    pub const ORDERING_VIOLATION: i32 = 4;
    pub const EMPTY_LEVEL_SET: i32 = 5;
    pub const SELFTEST_FAILED: i32 = 6;
}

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "BELLTET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "belltet", version, about = "Coherence and discord of Bell-diagonal states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All four measures at one state.
    Measure(StateArgs),
    /// Closed form against the definition-based oracle.
    Oracle(OracleArgs),
    /// Trajectory of a state under a noisy channel.
    Evolve(EvolveArgs),
    /// Whether two measures order states the same way.
    Ordering(OrderingArgs),
    /// Contour polylines of a measure on a constant-c3 slice.
    Contour(ContourArgs),
    /// Level surface of a measure as an OBJ mesh with a JSON sidecar.
    Isosurface(IsosurfaceArgs),
    /// Runs the invariant checks at reduced sample counts.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub c1: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub c3: f64,
}

impl StateArgs {
    fn state(&self) -> Result<BellDiagonalState, StateError> {
        BellDiagonalState::new(self.c1, self.c2, self.c3)
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long)]
    pub measure: Measure,
    /// Angular grid per axis for the measurement search.
    #[arg(long, default_value_t = 96)]
    pub grid_n: usize,
    /// Gradient steps per basis for the geometric-discord fit.
    #[arg(long, default_value_t = 4000)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChannelArg {
    Depolarizing,
    Phaseflip,
}

impl From<ChannelArg> for ChannelFamily {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Depolarizing => ChannelFamily::DepolarizingA,
            ChannelArg::Phaseflip => ChannelFamily::PhaseFlipBoth,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, value_enum)]
    pub channel: ChannelArg,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 51, value_parser = clap::value_parser!(u64).range(2..))]
    pub steps: u64,
    /// CSV destination; the trajectory goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderingMode {
    Pairs,
    Sequence,
    Ray,
}

#[derive(Debug, Args)]
pub struct OrderingArgs {
    #[arg(long)]
    pub measure_a: Measure,
    #[arg(long)]
    pub measure_b: Measure,
    #[arg(long, value_enum, default_value = "pairs")]
    pub mode: OrderingMode,
    /// Pairs (10000), random states (500) or ray samples (64).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ray direction `x,y,z` for `--mode ray`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_vec3)]
    pub direction: Option<[f64; 3]>,
    /// Sorted sequence as `index,value_a,value_b` (sequence mode).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContourArgs {
    #[arg(long)]
    pub measure: Measure,
    #[arg(long, default_value_t = 0.03, allow_hyphen_values = true)]
    pub level: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c3: f64,
    #[arg(long, default_value_t = DEFAULT_SLICE_DIMS)]
    pub dims: usize,
    #[arg(long, default_value = "contour.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IsosurfaceArgs {
    #[arg(long)]
    pub measure: Measure,
    #[arg(long, default_value_t = 0.03, allow_hyphen_values = true)]
    pub level: f64,
    #[arg(long, default_value_t = DEFAULT_VOLUME_DIMS)]
    pub dims: usize,
    #[arg(long, default_value = "isosurface.obj")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Build the depolarizing channel from the unnormalized weights.
    #[arg(long)]
    pub literal_depolarizing: bool,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated numbers, got {}", v.len()))
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

impl From<StateError> for Failure {
    fn from(e: StateError) -> Self {
        Failure::new(exit::INVALID_STATE, e)
    }
}

impl From<ExportError> for Failure {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::State(s) => s.into(),
            other => Failure::new(exit::USAGE, other),
        }
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        let code = match e {
            GeometryError::EmptyLevelSet { .. } => exit::EMPTY_LEVEL_SET,
            _ => exit::USAGE,
        };
        Failure::new(code, e)
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::State(s) => s.into(),
            other => Failure::new(exit::USAGE, other),
        }
    }
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        Failure::new(exit::USAGE, e)
    }
}

impl From<OrderingError> for Failure {
    fn from(e: OrderingError) -> Self {
        match e {
            OrderingError::Geometry(g) => g.into(),
            other => Failure::new(exit::USAGE, other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(exit::USAGE, e)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if code == exit::OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Runs a parsed command; `Ok` carries the exit code of a completed run.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Measure(args) => cmd_measure(&args, out),
        Command::Oracle(args) => cmd_oracle(&args, out),
        Command::Evolve(args) => cmd_evolve(&args, out),
        Command::Ordering(args) => cmd_ordering(&args, out),
        Command::Contour(args) => cmd_contour(&args, out),
        Command::Isosurface(args) => cmd_isosurface(&args, out),
        Command::Selftest(args) => cmd_selftest(&args, out),
    }
}

fn emit<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    Ok(export::write_json(out, value)?)
}

fn cmd_measure(args: &StateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = args.state()?;
    emit(out, &measures::measure_all(&s))?;
    Ok(exit::OK)
}

/// Largest closed-form/oracle gap accepted for each measure.
pub fn oracle_tolerance(measure: Measure) -> f64 {
    match measure {
        Measure::CoherenceL1 => 1e-12,
        Measure::CoherenceRelEntropy => 1e-10,
        Measure::Discord => 2e-3,
        Measure::GeometricDiscord => 1e-3,
    }
}

fn cmd_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = args.state.state()?;
    let rho = s.density_matrix();
    let closed_form = args.measure.evaluate(&s);
    let oracle = match args.measure {
        Measure::CoherenceL1 => measures::coherence_l1_oracle(&rho),
        Measure::CoherenceRelEntropy => measures::coherence_rel_entropy_oracle(&rho),
        Measure::Discord => measures::discord_oracle(&rho, args.grid_n)?,
        Measure::GeometricDiscord => {
            measures::geometric_discord_oracle_with_grid(&rho, args.iterations, args.grid_n)?
        }
    };
    let gap = (closed_form - oracle).abs();
    let tolerance = oracle_tolerance(args.measure);
    emit(
        out,
        &json!({
            "measure": args.measure,
            "state": s,
            "closed_form": closed_form,
            "oracle": oracle,
            "gap": gap,
            "tolerance": tolerance,
        }),
    )?;
    Ok(if gap <= tolerance { exit::OK } else { exit::ORACLE_GAP })
}

fn cmd_evolve(args: &EvolveArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = args.state.state()?;
    let schedule = NoiseSchedule::linspace(args.gamma, args.t_max, args.steps as usize)?;
    let family = ChannelFamily::from(args.channel);
    let tr = trajectory(&s, family, &schedule)?;
    match &args.out {
        None => export::write_trajectory_csv(out, &tr)?,
        Some(path) => {
            export::write_atomic(path, |w| export::write_trajectory_csv(w, &tr))?;
            let last = tr.samples.last().expect("schedule has at least two times");
            emit(
                out,
                &json!({
                    "channel": family,
                    "initial": s,
                    "final": last.state,
                    "steps": tr.samples.len(),
                    "out": path,
                }),
            )?;
        }
    }
    Ok(exit::OK)
}

fn cmd_ordering(args: &OrderingArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (a, b) = (args.measure_a, args.measure_b);
    let verdict = match args.mode {
        OrderingMode::Pairs => {
            let v = find_counterexample(a, b, args.n.unwrap_or(10_000), args.seed)?;
            emit(out, &v)?;
            v
        }
        OrderingMode::Sequence => {
            let states = random_states(args.seed, args.n.unwrap_or(500));
            let report = sequence_scan(a, b, &states)?;
            if let Some(path) = &args.csv {
                export::write_atomic(path, |w| export::write_sequence_csv(w, &report))?;
            }
            let v = report.verdict();
            emit(out, &json!({ "verdict": v, "descents": report.violations }))?;
            v
        }
        OrderingMode::Ray => {
            let Some(d) = args.direction else {
                return Err(Failure::new(exit::USAGE, "--mode ray needs --direction x,y,z"));
            };
            let ray = Ray::new(d)?;
            let v = ray_ordering_check(&ray, a, b, args.n.unwrap_or(64))?;
            emit(out, &json!({ "verdict": v, "direction": ray.direction(), "t_max": ray.t_max() }))?;
            v
        }
    };
    Ok(if verdict.same_ordering { exit::OK } else { exit::ORDERING_VIOLATION })
}

fn cmd_contour(args: &ContourArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let field = sample_slice(args.measure, args.c3, [args.dims, args.dims], Bounds::unit_cube())?;
    let lines = contour_slice(&field, args.level)?;
    export::write_atomic(&args.out, |w| export::write_polylines_csv(w, &lines))?;
    emit(
        out,
        &json!({
            "measure": args.measure,
            "level": args.level,
            "c3": args.c3,
            "dims": [args.dims, args.dims],
            "n_polylines": lines.len(),
            "n_closed": lines.iter().filter(|l| l.closed).count(),
            "n_points": lines.iter().map(|l| l.points.len()).sum::<usize>(),
            "out": args.out,
        }),
    )?;
    Ok(exit::OK)
}

fn cmd_isosurface(args: &IsosurfaceArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let field = sample_field(args.measure, [args.dims; 3], Bounds::unit_cube())?;
    let mesh = isosurface(&field, args.level)?;
    let sidecar = export::save_mesh(&args.out, &mesh)?;
    emit(
        out,
        &json!({
            "measure": args.measure,
            "level": args.level,
            "dims": mesh.dims,
            "n_vertices": mesh.vertices.len(),
            "n_triangles": mesh.triangles.len(),
            "out": args.out,
            "sidecar": sidecar,
        }),
    )?;
    Ok(exit::OK)
}

fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let weights = if args.literal_depolarizing {
        DepolarizingWeights::Literal
    } else {
        DepolarizingWeights::Standard
    };
    let report = selftest::run_selftest(args.seed, weights);
    if let Some(path) = &args.out {
        export::save_json(path, &report)?;
    }
    emit(out, &report)?;
    Ok(if report.passed { exit::OK } else { exit::SELFTEST_FAILED })
}

/// Applies `BELLTET_THREADS` to the global rayon pool. Unset, empty or
/// invalid values keep rayon's default.
pub fn configure_threads() {
    let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) else {
        return;
    };
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
