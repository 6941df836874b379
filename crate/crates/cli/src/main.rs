use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thymodyn_cli::{cmd_bench, cmd_plotdata, cmd_run, parse_config, CliError, ScenarioSpec};
use thymodyn_core::{ActivesTable, Engine, Scenario};

#[derive(Parser)]
#[command(
    name = "thymodyn",
    version,
    about = "Naive T-cell dynamics: stock-flow and agent-based engines"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "THYMODYN_OUT", default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one engine on one scenario.
    Run(RunArgs),
    /// Time both engines on each scenario and tabulate cost and fit.
    Bench(BenchArgs),
    /// Write model-versus-dataset overlay files for every run in the output directory.
    Plotdata,
}

#[derive(Args)]
struct RunArgs {
    /// `sd` or `abs`; same as `--engine`.
    #[arg(value_name = "ENGINE")]
    engine_arg: Option<Engine>,

    #[arg(long, conflicts_with = "engine_arg")]
    engine: Option<Engine>,

    #[command(flatten)]
    source: Source,

    #[command(flatten)]
    flags: Overrides,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Preset scenario: 1, 2 or 3.
    #[arg(long)]
    scenario: Option<Scenario>,

    /// JSON scenario config.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario to include; repeatable. Defaults to all three presets.
    #[arg(long)]
    scenario: Vec<Scenario>,

    /// JSON scenario config to include; repeatable.
    #[arg(long)]
    config: Vec<PathBuf>,

    /// Time only this engine.
    #[arg(long)]
    engine: Option<Engine>,

    #[command(flatten)]
    flags: Overrides,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Cells per mm³ represented by one agent.
    #[arg(long)]
    scale: Option<f64>,
    /// CSV of active-cell density by age.
    #[arg(long)]
    actives: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, spec: &mut ScenarioSpec) {
        if let Some(dt) = self.dt {
            spec.sd.dt = Some(dt);
            spec.abs.dt = Some(dt);
        }
        if let Some(h) = self.horizon {
            spec.sd.horizon = Some(h);
            spec.abs.horizon = Some(h);
        }
        if let Some(seed) = self.seed {
            spec.abs.seed = Some(seed);
        }
        if let Some(r) = self.replicates {
            spec.abs.replicates = Some(r);
        }
        if let Some(s) = self.scale {
            spec.abs.scale = Some(s);
        }
    }

    fn actives(&self) -> Result<ActivesTable, CliError> {
        match &self.actives {
            Some(path) => ActivesTable::from_path(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            None => Ok(ActivesTable::zeros()),
        }
    }
}

fn run(args: &RunArgs, out: &Path) -> Result<(), CliError> {
    let engine = args
        .engine_arg
        .or(args.engine)
        .ok_or_else(|| CliError::Config("choose an engine: `run sd` or `run abs`".into()))?;
    let mut spec = match (&args.source.config, args.source.scenario) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(s)) => ScenarioSpec::preset(s),
        (None, None) => unreachable!("clap requires a scenario source"),
    };
    args.flags.apply(&mut spec);
    let output = cmd_run(engine, &spec, &args.flags.actives()?, out)?;
    for f in &output.files {
        println!("wrote {}", f.display());
    }
    let r = &output.report;
    println!(
        "scenario {} {}: sse {:.2}, wall time {:.3} s",
        r.scenario, r.engine, r.sse, r.wall_time_s
    );
    Ok(())
}

fn bench(args: &BenchArgs, out: &Path) -> Result<(), CliError> {
    let mut specs: Vec<ScenarioSpec> = args
        .scenario
        .iter()
        .map(|&s| ScenarioSpec::preset(s))
        .collect();
    for path in &args.config {
        specs.push(parse_config(path)?);
    }
    if specs.is_empty() {
        specs = Scenario::ALL
            .into_iter()
            .map(ScenarioSpec::preset)
            .collect();
    }
    for spec in &mut specs {
        args.flags.apply(spec);
    }
    let engines = match args.engine {
        Some(e) => vec![e],
        None => vec![Engine::Sd, Engine::Abs],
    };
    let table = cmd_bench(&specs, &engines, &args.flags.actives()?)?;
    print!("{}", table.render());
    table.write(out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args, &cli.out),
        Command::Bench(args) => bench(args, &cli.out),
        Command::Plotdata => cmd_plotdata(&cli.out).map(|files| {
            for f in files {
                println!("wrote {}", f.display());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
