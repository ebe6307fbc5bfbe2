mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use corrbound::bounds::{BoundId, BoundReport, CmaxMode};
use corrbound::linear_response::{response_sweep, ResponseKind, RESPONSE_CSV_HEADER};
use corrbound::markov::steady_state;
use corrbound::sweep::{
    self, report_table, Cell, Model, StressConfig, Table, TimeGrid, CORRELATION_BOUNDS,
};

use output::{render_table, render_tally, write_with_meta, Format, Meta, Real, SeedJson};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl From<corrbound::Error> for CliError {
    fn from(e: corrbound::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Verify correlation bounds for continuous-time Markov jump processes.
///
/// Exit status: 0 all bounds hold, 1 some bound is violated, 2 bad input or
/// I/O failure. CORRBOUND_THREADS caps the number of worker threads.
#[derive(Debug, Parser)]
#[command(name = "corrbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate bounds for a model file on a time grid.
    Check(CheckArgs),
    /// Write the figure 2 tables (fig2a..fig2d).
    Figure2(Figure2Args),
    /// Write the figure 3 tables (fig3a, fig3b).
    Figure3(Figure3Args),
    /// Run every bound on many random models and print a JSON tally.
    Stress(StressArgs),
    /// Pulse or step response sweep with its bound.
    Response(ResponseArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory; results go to standard output when omitted
    /// (figure commands default to the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// standard | tight
    #[arg(long, default_value = "standard")]
    cmax: CmaxMode,
    /// Time grid as start:stop:points:log|lin.
    #[arg(long)]
    tgrid: Option<TimeGrid>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated bound ids (default: all correlation bounds).
    #[arg(long, value_delimiter = ',')]
    bounds: Vec<BoundId>,
    #[command(flatten)]
    common: Common,
    /// Multiply every right-hand side by this factor before checking.
    #[arg(long, hide = true, default_value_t = 1.0)]
    rhs_scale: f64,
}

#[derive(Debug, Args)]
struct Figure2Args {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random models in panels (c) and (d).
    #[arg(long, default_value_t = sweep::FIG2_RANDOM_MODELS)]
    models: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Figure3Args {
    #[arg(long, default_value_t = 0.01)]
    chi: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct StressArgs {
    #[arg(long, default_value_t = sweep::STRESS_DEFAULT_MODELS)]
    models: usize,
    /// Comma-separated state counts, cycled over the models.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    states: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated bound ids (default: all).
    #[arg(long, value_delimiter = ',')]
    bounds: Vec<BoundId>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Kind {
    Pulse,
    Step,
}

#[derive(Debug, Args)]
struct ResponseArgs {
    /// Model file; its p0 is ignored and the steady state of W is used.
    /// Defaults to the symmetric two-state model.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "step")]
    kind: Kind,
    #[arg(long, default_value_t = 0.01)]
    chi: f64,
    #[command(flatten)]
    common: Common,
}

const CHECK_DEFAULT_GRID: &str = "1e-2:10:20:log";

fn grid_or(common: &Common, default: &str) -> (TimeGrid, String) {
    match &common.tgrid {
        Some(g) => (g.clone(), format!("{}:{}:{}:{}", g.start, g.stop, g.points, if g.log { "log" } else { "lin" })),
        None => (default.parse().expect("valid default grid"), default.to_string()),
    }
}

/// Writes a table to `--out` (with sidecar) or standard output.
fn emit(common: &Common, stem: &str, table: &Table, meta: &Meta<'_>) -> Result<(), CliError> {
    let text = render_table(table, common.format)?;
    match &common.out {
        Some(dir) => {
            let path = write_with_meta(dir, stem, common.format.extension(), &text, meta)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn report_violations(reports: &[BoundReport]) -> bool {
    let bad: Vec<&BoundReport> = reports.iter().filter(|r| !r.passes()).collect();
    for r in &bad {
        eprintln!(
            "violation: {} t1={} t2={} lhs={} rhs={} ratio={}",
            r.bound_id, r.t1, r.t2, r.lhs, r.rhs, r.ratio
        );
    }
    bad.is_empty()
}

fn cmd_check(args: CheckArgs) -> Result<bool, CliError> {
    let model = model::load_model(&args.model)?;
    let (grid, grid_spec) = grid_or(&args.common, CHECK_DEFAULT_GRID);
    let ids = if args.bounds.is_empty() { CORRELATION_BOUNDS.to_vec() } else { args.bounds };
    let reports: Vec<BoundReport> = sweep::evaluate(&model, &ids, &grid.values(), args.common.cmax)?
        .iter()
        .map(|r| r.with_scaled_rhs(args.rhs_scale))
        .collect();
    let mode = args.common.cmax.to_string();
    let model_path = args.model.display().to_string();
    let mut meta = Meta::new("check", &mode);
    meta.t_grid = Some(&grid_spec);
    meta.model = Some(&model_path);
    emit(&args.common, "check", &report_table("check", &reports), &meta)?;
    Ok(report_violations(&reports))
}

fn table_ratios_pass(table: &Table) -> bool {
    table.reals("ratio").iter().all(|&r| r <= 1.0 + corrbound::bounds::RATIO_SLACK)
}

fn cmd_figure2(args: Figure2Args) -> Result<bool, CliError> {
    let (grid, grid_spec) = grid_or(&args.common, sweep::FIG2_DEFAULT_GRID);
    let fig = sweep::figure2(&grid.values(), args.models, args.seed, args.common.cmax)?;
    let mode = args.common.cmax.to_string();
    let mut meta = Meta::new("figure2", &mode);
    meta.seed = Some(args.seed);
    meta.t_grid = Some(&grid_spec);
    meta.random_models = fig.seeds.iter().map(SeedJson::from).collect();
    let common = Common { out: Some(args.common.out.clone().unwrap_or_else(|| ".".into())), ..args.common };
    for table in [&fig.a, &fig.b, &fig.c, &fig.d] {
        emit(&common, &table.name, table, &meta)?;
    }
    let lhs_le_rhs = |t: &Table, rhs: &str| {
        t.reals("lhs").iter().zip(t.reals(rhs)).all(|(l, r)| *l <= r * (1.0 + corrbound::bounds::RATIO_SLACK))
    };
    Ok(lhs_le_rhs(&fig.a, "rhs_eq6")
        && lhs_le_rhs(&fig.a, "rhs_eq8")
        && lhs_le_rhs(&fig.b, "rhs_eq7")
        && table_ratios_pass(&fig.c)
        && table_ratios_pass(&fig.d))
}

fn cmd_figure3(args: Figure3Args) -> Result<bool, CliError> {
    let (grid, grid_spec) = grid_or(&args.common, sweep::FIG3_DEFAULT_GRID);
    let (a, b) = sweep::figure3(&grid.values(), args.chi, args.common.cmax)?;
    let mode = args.common.cmax.to_string();
    let mut meta = Meta::new("figure3", &mode);
    meta.t_grid = Some(&grid_spec);
    meta.chi = Some(Real(args.chi));
    let common = Common { out: Some(args.common.out.clone().unwrap_or_else(|| ".".into())), ..args.common };
    emit(&common, "fig3a", &a, &meta)?;
    emit(&common, "fig3b", &b, &meta)?;
    Ok(table_ratios_pass(&a) && table_ratios_pass(&b))
}

fn cmd_stress(args: StressArgs) -> Result<bool, CliError> {
    let (grid, grid_spec) = grid_or(&args.common, sweep::STRESS_DEFAULT_GRID);
    let config = StressConfig {
        n_models: args.models,
        states: args.states,
        seed: args.seed,
        times: grid.values(),
        bounds: if args.bounds.is_empty() { BoundId::ALL.to_vec() } else { args.bounds },
        mode: args.common.cmax,
    };
    let tally = sweep::stress(&config)?;
    let text = render_tally(&tally);
    match &args.common.out {
        Some(dir) => {
            let mode = args.common.cmax.to_string();
            let mut meta = Meta::new("stress", &mode);
            meta.seed = Some(args.seed);
            meta.t_grid = Some(&grid_spec);
            meta.random_models = sweep::model_seeds(config.n_models, &config.states, config.seed)
                .iter()
                .map(SeedJson::from)
                .collect();
            let path = write_with_meta(dir, "stress", "json", &text, &meta)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    for (id, e) in &tally {
        if e.violations > 0 {
            eprintln!("violation: {id}: {} of {} evaluations, max ratio {}", e.violations, e.evaluations, e.max_ratio);
        }
    }
    Ok(tally.values().all(|e| e.violations == 0))
}

fn cmd_response(args: ResponseArgs) -> Result<bool, CliError> {
    let (grid, grid_spec) = grid_or(&args.common, sweep::FIG3_DEFAULT_GRID);
    let model = match &args.model {
        Some(p) => model::load_model(p)?,
        None => Model::symmetric(),
    };
    let pst = steady_state(&model.w)?;
    let kind = match args.kind {
        Kind::Pulse => ResponseKind::Pulse,
        Kind::Step => ResponseKind::Step,
    };
    let rows = response_sweep(&model.w, &pst, &model.s, &model.t, args.chi, kind, &grid.values(), args.common.cmax)?;
    let columns: Vec<&'static str> = RESPONSE_CSV_HEADER.split(',').collect();
    let table = Table {
        name: "response".into(),
        columns,
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Real(r.t),
                    Cell::Real(r.shift),
                    Cell::Real(r.bound_rhs),
                    Cell::Real(r.ratio),
                    Cell::Bool(r.in_domain),
                ]
            })
            .collect(),
    };
    let mode = args.common.cmax.to_string();
    let model_path = args.model.as_ref().map(|p| p.display().to_string());
    let mut meta = Meta::new("response", &mode);
    meta.t_grid = Some(&grid_spec);
    meta.model = model_path.as_deref();
    meta.chi = Some(Real(args.chi));
    emit(&args.common, "response", &table, &meta)?;
    Ok(table_ratios_pass(&table))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CORRBOUND_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("CORRBOUND_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Figure2(a) => cmd_figure2(a),
        Command::Figure3(a) => cmd_figure3(a),
        Command::Stress(a) => cmd_stress(a),
        Command::Response(a) => cmd_response(a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
