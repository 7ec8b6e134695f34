use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::parser::ValueSource;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use rwcalc::embedding::skorohod_embed;
use rwcalc::function::GridFunction;
use rwcalc::harness::{emit, format_value, run_experiment, Experiment, ExperimentConfig, Format};
use rwcalc::integrals::{ito_sums, ito_tanaka_series, stratonovich_sums, ConvexDiffSpec};
use rwcalc::local_time::{discrete_local_time, Direction};
use rwcalc::martingale::{martingale_stopping, realize_martingale, MartingaleSpec, Schedule};
use rwcalc::walks::{space_step, steps_in, time_step, LatticePath};
use rwcalc::{build_nested, Error, PiecewisePath, Seed};

/// Random-walk construction of Brownian motion and its stochastic calculus.
#[derive(Debug, Parser)]
#[command(name = "rwcalc", version)]
struct Cli {
    /// Experiment seed, decimal or 0x-hex.
    #[arg(long, global = true, default_value = "0", value_parser = parse_seed)]
    seed: Seed,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Worker threads for replication-parallel commands.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the level-m nested walk as `t,value`.
    Construct {
        #[arg(long, default_value_t = 8)]
        level: u32,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        horizon: f64,
    },
    /// Embed the level-m walk into the level-n path: `k,s_m,value`.
    Embed {
        #[arg(long, default_value_t = 6)]
        level: u32,
        #[arg(long, default_value_t = 12)]
        fine_level: u32,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        horizon: f64,
    },
    /// Up and down local times on a `(t, x)` grid: `t,x,up,down`.
    Localtime {
        #[arg(long, default_value_t = 6)]
        level: u32,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        horizon: f64,
        #[arg(long, default_value_t = 64)]
        grid_t: usize,
    },
    /// Worst residual of each discrete identity over random cases.
    Identities {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 4096)]
        max_n: usize,
    },
    /// Running Itô and Stratonovich sums of `f` along the level-m walk, plus
    /// the Itô–Tanaka right-hand side when `f` names a convex-difference `g`.
    Integrate {
        #[arg(long)]
        function: String,
        #[arg(long, default_value_t = 8)]
        level: u32,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        horizon: f64,
    },
    /// Monte Carlo check of the isometry for a truncated predictable kernel.
    Isometry {
        #[arg(long, default_value = "w")]
        kernel: String,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, default_value_t = 6)]
        level: u32,
        #[arg(long, default_value_t = 2000)]
        replications: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        horizon: f64,
    },
    /// Stopping times of a test martingale with discrete and exact quadratic
    /// variation: `k,tau,value,qv_discrete,qv_exact`.
    Martingale {
        #[arg(long, value_enum, default_value_t = Kind::Scaled)]
        kind: Kind,
        /// Clock speed of the scaled Brownian motion.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        c: f64,
        /// Volatility schedule `t0:h0,t1:h1,...`.
        #[arg(long)]
        h: Option<String>,
        #[arg(long, default_value_t = 6)]
        level: u32,
        #[arg(long, default_value_t = 10)]
        fine_level: u32,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        horizon: f64,
    },
    /// Run a convergence experiment and emit its table.
    Converge(ConvergeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Scaled,
    Vol,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    /// One of brownian, embedding, localtime, identities, ito, ito-tanaka,
    /// tanaka, isometry, qv, time-change, mlocaltime, truncation.
    experiment: String,
    /// Start from a JSON experiment config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    min_level: Option<u32>,
    #[arg(long)]
    max_level: Option<u32>,
    #[arg(long)]
    fine_level: Option<u32>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long)]
    grid_t: Option<usize>,
    /// Print the log2 slope of this metric's medians to stderr.
    #[arg(long)]
    rate: Option<String>,
}

fn parse_seed(s: &str) -> Result<Seed, Error> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, Error> {
    s.parse()
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidConfig(msg.into()).into()
}

/// Column-oriented output for the path-level commands.
struct Sheet {
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    fn text(self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(v) => format_value(v),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Int(i) => Value::from(i),
            Cell::Real(v) => Value::from(v),
        }
    }
}

impl Sheet {
    fn new(header: &'static [&'static str]) -> Self {
        Sheet { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut s = self.header.join(",");
                s.push('\n');
                for row in &self.rows {
                    let line: Vec<String> = row.iter().map(|c| c.text()).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.header.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                serde_json::to_string_pretty(&rows).expect("numbers serialize") + "\n"
            }
        }
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn check_horizon(horizon: f64) -> anyhow::Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("horizon must be positive, got {horizon}")))
    }
}

fn construct(seed: Seed, level: u32, horizon: f64) -> anyhow::Result<Sheet> {
    check_horizon(horizon)?;
    let nested = build_nested(seed, level, horizon)?;
    let walk = nested.level(level);
    let mut sheet = Sheet::new(&["t", "value"]);
    for j in 0..=steps_in(level, horizon) as usize {
        sheet.push(vec![Cell::Real(j as f64 * time_step(level)), Cell::Real(walk.value(j))]);
    }
    Ok(sheet)
}

fn embed(seed: Seed, level: u32, fine_level: u32, horizon: f64) -> anyhow::Result<Sheet> {
    check_horizon(horizon)?;
    if fine_level <= level {
        return Err(invalid(format!("fine level {fine_level} must exceed level {level}")));
    }
    let nested = build_nested(seed, fine_level, 2.0 * horizon)?;
    let path = PiecewisePath::from_walk(nested.level(fine_level));
    let walk = skorohod_embed(&path, level, horizon);
    let mut sheet = Sheet::new(&["k", "s_m", "value"]);
    for k in 0..=walk.count_until(horizon) {
        sheet.push(vec![Cell::Int(k as i64), Cell::Real(walk.stop_time(k)), Cell::Real(walk.value(k))]);
    }
    Ok(sheet)
}

fn localtime(seed: Seed, level: u32, horizon: f64, grid_t: usize) -> anyhow::Result<Sheet> {
    check_horizon(horizon)?;
    if grid_t == 0 {
        return Err(invalid("time grid needs at least one interval"));
    }
    let nested = build_nested(seed, level, horizon)?;
    let field = discrete_local_time(nested.level(level), Direction::Both, horizon)?;
    let (lo, hi) = field.offset_range();
    let dx = space_step(level);
    let mut sheet = Sheet::new(&["t", "x", "up", "down"]);
    for i in 0..=grid_t {
        let t = horizon * i as f64 / grid_t as f64;
        for j in lo..=hi {
            let x = field.origin() + f64::from(j) * dx;
            sheet.push(vec![
                Cell::Real(t),
                Cell::Real(x),
                Cell::Real(field.eval_dir(Direction::Up, t, x)),
                Cell::Real(field.eval_dir(Direction::Down, t, x)),
            ]);
        }
    }
    Ok(sheet)
}

fn integrate(seed: Seed, function: &str, level: u32, horizon: f64) -> anyhow::Result<Sheet> {
    check_horizon(horizon)?;
    let f: GridFunction = function.parse()?;
    let g = function.parse::<ConvexDiffSpec>().ok();
    let nested = build_nested(seed, level, horizon)?;
    let walk = nested.level(level);
    let n = steps_in(level, horizon) as usize;
    let ito = ito_sums(&f, walk, n);
    let strat = stratonovich_sums(&f, walk, n);
    let tanaka = g.as_ref().map(|g| ito_tanaka_series(g, walk, n));
    let mut sheet = Sheet::new(if tanaka.is_some() {
        &["k", "t", "walk", "ito", "stratonovich", "ito_tanaka"]
    } else {
        &["k", "t", "walk", "ito", "stratonovich"]
    });
    for k in 0..=n {
        let mut row = vec![
            Cell::Int(k as i64),
            Cell::Real(k as f64 * time_step(level)),
            Cell::Real(walk.value(k)),
            Cell::Real(ito[k]),
            Cell::Real(strat[k]),
        ];
        if let Some(series) = &tanaka {
            row.push(Cell::Real(series[k]));
        }
        sheet.push(row);
    }
    Ok(sheet)
}

#[allow(clippy::too_many_arguments)]
fn martingale(
    seed: Seed,
    kind: Kind,
    c: f64,
    h: Option<&str>,
    level: u32,
    fine_level: u32,
    horizon: f64,
) -> anyhow::Result<Sheet> {
    check_horizon(horizon)?;
    if fine_level < level + 3 || fine_level > 15 {
        return Err(invalid(format!(
            "fine level must lie in {}..=15, got {fine_level}",
            level + 3
        )));
    }
    let spec = match (kind, h) {
        (Kind::Scaled, None) => MartingaleSpec::scaled(c, fine_level, horizon),
        (Kind::Vol, Some(h)) => MartingaleSpec::volatility(h.parse::<Schedule>()?, fine_level, horizon),
        (Kind::Scaled, Some(_)) => return Err(invalid("--h applies to --kind vol only")),
        (Kind::Vol, None) => return Err(invalid("--kind vol needs a schedule --h")),
    };
    let mart = realize_martingale(&spec, seed)?;
    let walk = martingale_stopping(&mart.path, level, horizon);
    let mut sheet = Sheet::new(&["k", "tau", "value", "qv_discrete", "qv_exact"]);
    for k in 0..=walk.count_until(horizon) {
        let tau = walk.stop_time(k);
        sheet.push(vec![
            Cell::Int(k as i64),
            Cell::Real(tau),
            Cell::Real(walk.value(k)),
            Cell::Real(k as f64 * time_step(level)),
            Cell::Real(mart.qv.eval(tau)),
        ]);
    }
    Ok(sheet)
}

/// Flags shared by every subcommand.
struct Globals {
    seed: Seed,
    out: Option<PathBuf>,
    format: Format,
    threads: Option<usize>,
}

fn converge_config(args: &ConvergeArgs, globals: &Globals, seed_given: bool) -> anyhow::Result<ExperimentConfig> {
    let experiment: Experiment = args.experiment.parse()?;
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let config: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
            if config.experiment != experiment {
                return Err(invalid(format!(
                    "config is for `{}`, not `{experiment}`",
                    config.experiment
                )));
            }
            config
        }
        None => ExperimentConfig::new(experiment, globals.seed),
    };
    if seed_given {
        config.seed = globals.seed;
    }
    macro_rules! overlay {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { config.$field = v; })*
        };
    }
    overlay!(min_level, max_level, fine_level, replications, horizon, b, c, max_n, grid_t);
    macro_rules! overlay_id {
        ($($field:ident),*) => {
            $(if args.$field.is_some() { config.$field = args.$field.clone(); })*
        };
    }
    overlay_id!(function, kernel, schedule);
    config.threads = globals.threads.or(config.threads);
    config.format = globals.format;
    config.output = globals.out.clone();
    Ok(config)
}

fn run(command: &Command, globals: &Globals, seed_given: bool) -> anyhow::Result<()> {
    let seed = globals.seed;
    let sheet = match command {
        Command::Construct { level, horizon } => construct(seed, *level, *horizon)?,
        Command::Embed {
            level,
            fine_level,
            horizon,
        } => embed(seed, *level, *fine_level, *horizon)?,
        Command::Localtime { level, horizon, grid_t } => localtime(seed, *level, *horizon, *grid_t)?,
        Command::Integrate {
            function,
            level,
            horizon,
        } => integrate(seed, function, *level, *horizon)?,
        Command::Martingale {
            kind,
            c,
            h,
            level,
            fine_level,
            horizon,
        } => martingale(seed, *kind, *c, h.as_deref(), *level, *fine_level, *horizon)?,
        Command::Identities { cases, max_n } => {
            let mut config = ExperimentConfig::new(Experiment::Identities, seed);
            config.replications = *cases;
            config.max_n = *max_n;
            return emit_table(&config, globals);
        }
        Command::Isometry {
            kernel,
            b,
            level,
            replications,
            horizon,
        } => {
            let mut config = ExperimentConfig::new(Experiment::Isometry, seed);
            config.kernel = Some(kernel.clone());
            config.b = *b;
            config.min_level = *level;
            config.max_level = *level;
            config.fine_level = level + 3;
            config.replications = *replications;
            config.horizon = *horizon;
            return emit_table(&config, globals);
        }
        Command::Converge(args) => {
            let config = converge_config(args, globals, seed_given)?;
            let table = run_experiment(&config)?;
            if let Some(metric) = &args.rate {
                eprintln!("rate {metric}: {:.4}", table.estimate_rate(metric)?);
            }
            if let Some(text) = emit(&config, &table)? {
                write_output(None, &text)?;
            }
            return Ok(());
        }
    };
    write_output(globals.out.as_ref(), &sheet.render(globals.format))
}

fn emit_table(config: &ExperimentConfig, globals: &Globals) -> anyhow::Result<()> {
    let mut config = config.clone();
    config.threads = globals.threads;
    config.format = globals.format;
    config.output = globals.out.clone();
    let table = run_experiment(&config)?;
    if let Some(text) = emit(&config, &table)? {
        write_output(None, &text)?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_)) => 2,
        Some(Error::StepBudgetExceeded { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let seed_given = matches.value_source("seed") == Some(ValueSource::CommandLine);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    let globals = Globals {
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
        threads: cli.threads,
    };
    match run(&cli.command, &globals, seed_given) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (`| head`) is not a failure
        Err(err)
            if err
                .downcast_ref::<std::io::Error>()
                .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
