use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gp_planner::bench::{
    format_oracle, load_instance, read_plan, run_bench, run_solve, LogFormat, RunConfig, Suite,
};
use gp_planner::{bfs_optimal, render_plan, GpParams, RenderMode};

#[derive(Parser)]
#[command(name = "gp-planner", version, about = "Linear planning by genetic programming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogArg {
    Jsonl,
    Tsv,
}

#[derive(clap::Args)]
struct GpArgs {
    /// Population size.
    #[arg(long, default_value_t = 200)]
    pop: usize,
    /// Generations bred after the initial population.
    #[arg(long, default_value_t = 1000)]
    gens: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threads for fitness evaluation.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 7)]
    tournament: usize,
    #[arg(long, default_value_t = 1)]
    elitism: usize,
    #[arg(long, default_value_t = 17)]
    max_depth: usize,
}

impl GpArgs {
    fn params(&self) -> GpParams {
        GpParams {
            population_size: self.pop,
            max_generations: self.gens,
            seed: self.seed,
            workers: self.workers,
            tournament_size: self.tournament,
            elitism: self.elitism,
            max_depth: self.max_depth,
            ..GpParams::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a plan for one instance.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        gp: GpArgs,
        /// Stop after the generation that first reaches the goals.
        #[arg(long)]
        stop_on_first: bool,
        /// Directory for plan.txt, plan.json, run.log and program.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "jsonl")]
        log_format: LogArg,
    },
    /// Median generation of first solution over a seed sweep.
    Bench {
        /// bp, rnp or 2rnp.
        suite: String,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[command(flatten)]
        gp: GpArgs,
        /// Print the JSON summary instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Breadth-first optimal plan for a small instance.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: usize,
    },
    /// Print the plan saved by `solve --out`.
    ShowPlan {
        logdir: PathBuf,
        #[arg(long)]
        executed_only: bool,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve {
            instance,
            gp,
            stop_on_first,
            out,
            log_format,
        } => {
            let inst = load_instance(&instance)?;
            let config = RunConfig {
                params: GpParams {
                    stop_on_first_solution: stop_on_first,
                    ..gp.params()
                },
                runs: 1,
                out,
                log_format: match log_format {
                    LogArg::Jsonl => LogFormat::Jsonl,
                    LogArg::Tsv => LogFormat::Tsv,
                },
            };
            let result = run_solve(&config, &inst)?;
            let fit = result.fitness();
            println!("{}", render_plan(&result.plan, RenderMode::ExecutedOnly));
            match result.log.first_solution {
                Some(g) => {
                    println!("solved at generation {g}; {} executed actions", fit.executed_length);
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!(
                        "unsolved; best goal fitness {} with {} executed actions",
                        fit.goal_fitness, fit.executed_length
                    );
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Bench {
            suite,
            runs,
            corpus,
            gp,
            json,
        } => {
            let config = RunConfig {
                params: gp.params(),
                runs,
                ..RunConfig::default()
            };
            let summary = run_bench(Suite::parse(&suite)?, &corpus, &config)?;
            if json {
                println!("{}", summary.to_json());
            } else {
                print!("{}", summary.to_table());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            instance,
            max_depth,
            max_states,
        } => {
            let inst = load_instance(&instance)?;
            let result = bfs_optimal(&inst, max_depth, max_states)
                .map_err(|e| anyhow!("searching {}: {e}", instance.display()))?;
            print!("{}", format_oracle(&result, max_depth));
            Ok(ExitCode::SUCCESS)
        }
        Command::ShowPlan {
            logdir,
            executed_only,
        } => {
            let plan = read_plan(&logdir)?;
            let mode = if executed_only {
                RenderMode::ExecutedOnly
            } else {
                RenderMode::All
            };
            println!("{}", render_plan(&plan, mode));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
