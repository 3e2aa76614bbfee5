//! Run orchestration: single solves with on-disk artifacts, seed sweeps over
//! the benchmark corpus, and oracle reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domain::ProblemInstance;
use crate::domains::grid::{Bounds, BLOCK, ROBOT};
use crate::gp::{evolve, GpError, GpParams, RunLog, RunResult};
use crate::instance_file::{parse_instance, InstanceError};
use crate::oracle::{OracleResult, OracleStatus};
use crate::sim::{render_plan, Action, Plan, RenderMode};

pub const PLAN_TXT: &str = "plan.txt";
pub const PLAN_JSON: &str = "plan.json";
pub const RUN_LOG: &str = "run.log";
pub const PROGRAM_TXT: &str = "program.txt";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Instance {
        path: PathBuf,
        source: InstanceError,
    },
    #[error("instance {id} missing from corpus (expected {path})")]
    MissingInstance { id: String, path: PathBuf },
    #[error("unknown suite `{0}` (expected bp, rnp or 2rnp)")]
    UnknownSuite(String),
    #[error("{path}: malformed plan file: {source}")]
    PlanFile {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("workers and runs must be at least 1")]
    Config,
    #[error(transparent)]
    Gp(#[from] GpError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogFormat {
    /// One JSON object per generation.
    #[default]
    Jsonl,
    /// Tab-separated with a header row; `-` for no solution yet.
    Tsv,
}

pub fn render_log(log: &RunLog, format: LogFormat) -> String {
    match format {
        LogFormat::Jsonl => log.to_jsonl(),
        LogFormat::Tsv => {
            let mut out = String::from("gen\tbest_goal_fitness\tbest_exec_len\tmean_goal_fitness\tfirst_solution_gen\n");
            for r in &log.records {
                let first = r.first_solution_gen.map_or("-".to_string(), |g| g.to_string());
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{first}",
                    r.gen, r.best_goal_fitness, r.best_exec_len, r.mean_goal_fitness
                );
            }
            out
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: GpParams,
    /// Seeds `params.seed .. params.seed + runs` in a sweep.
    pub runs: usize,
    pub out: Option<PathBuf>,
    pub log_format: LogFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: GpParams::default(),
            runs: 10,
            out: None,
            log_format: LogFormat::Jsonl,
        }
    }
}

impl RunConfig {
    fn check(&self) -> Result<(), BenchError> {
        if self.runs < 1 || self.params.workers < 1 {
            return Err(BenchError::Config);
        }
        Ok(())
    }
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance, BenchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_instance(&text).map_err(|source| BenchError::Instance {
        path: path.to_path_buf(),
        source,
    })
}

/// Evolves a plan and, when `config.out` is set, writes the plan, the run
/// log and the best program there.
pub fn run_solve(config: &RunConfig, instance: &ProblemInstance) -> Result<RunResult, BenchError> {
    config.check()?;
    let result = evolve(instance, &config.params)?;
    if let Some(dir) = &config.out {
        write_artifacts(dir, instance, &result, config.log_format)?;
    }
    Ok(result)
}

pub fn write_artifacts(
    dir: &Path,
    instance: &ProblemInstance,
    result: &RunResult,
    format: LogFormat,
) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))
    };
    let mut plan = render_plan(&result.plan, RenderMode::All);
    if !plan.is_empty() {
        plan.push('\n');
    }
    write(PLAN_TXT, plan)?;
    write(
        PLAN_JSON,
        serde_json::to_string_pretty(&result.plan.actions).expect("actions serialize"),
    )?;
    write(RUN_LOG, render_log(&result.log, format))?;
    write(PROGRAM_TXT, format!("{}\n", result.best.program().display(instance.domain())))?;
    Ok(())
}

/// Reads the plan written by [`write_artifacts`].
pub fn read_plan(dir: &Path) -> Result<Plan, BenchError> {
    let path = dir.join(PLAN_JSON);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let actions: Vec<Action> =
        serde_json::from_str(&text).map_err(|source| BenchError::PlanFile { path, source })?;
    Ok(Plan { actions })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Bp,
    Rnp,
    TwoRnp,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Suite, BenchError> {
        match name.to_ascii_lowercase().as_str() {
            "bp" => Ok(Suite::Bp),
            "rnp" => Ok(Suite::Rnp),
            "2rnp" => Ok(Suite::TwoRnp),
            _ => Err(BenchError::UnknownSuite(name.into())),
        }
    }

    pub fn dir_name(self) -> &'static str {
        match self {
            Suite::Bp => "bp",
            Suite::Rnp => "rnp",
            Suite::TwoRnp => "2rnp",
        }
    }

    pub fn ids(self) -> Vec<String> {
        let (prefix, n) = match self {
            Suite::Bp => ("BP", 7),
            Suite::Rnp => ("RNP", 8),
            Suite::TwoRnp => ("2RNP", 5),
        };
        (1..=n).map(|i| format!("{prefix}-{i}")).collect()
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// Short description in the style of the benchmark tables, e.g.
/// `4 objects, 5 locations, 1 briefcase` or `4x4 table, 6 obstacles`.
pub fn describe(instance: &ProblemInstance) -> String {
    let count = |c: &str| instance.instances_of(c).map_or(0, |v| v.len());
    if instance.domain().name().as_str() == "briefcase" {
        return format!(
            "{}, {}, {}",
            plural(count("object"), "object"),
            plural(count("location"), "location"),
            plural(count("briefcase"), "briefcase")
        );
    }
    let table = match Bounds::of(instance) {
        Ok(b) => format!("{}x{} table", b.width, b.height),
        Err(_) => "table".to_string(),
    };
    let blocks = instance.init_state().facts_of(BLOCK).count();
    let obstacles = if blocks == 0 {
        "no obstacles".to_string()
    } else {
        plural(blocks, "obstacle")
    };
    if count(ROBOT) > 1 {
        format!("{table}, {obstacles}, {} robots", count(ROBOT))
    } else {
        format!("{table}, {obstacles}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub id: String,
    pub description: String,
    pub seeds: Vec<u64>,
    /// Generation of first solution per seed; `None` when unsolved.
    pub first_solution: Vec<Option<usize>>,
    /// Median over seeds counting unsolved runs as infinitely late.
    pub median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub suite: String,
    pub rows: Vec<BenchRow>,
}

/// Median with `None` ordered after every number; `None` if the median
/// itself is unsolved.
pub fn median_generation(values: &[Option<usize>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values
        .iter()
        .map(|g| g.map_or(f64::INFINITY, |g| g as f64))
        .collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    m.is_finite().then_some(m)
}

pub fn format_median(m: Option<f64>) -> String {
    match m {
        None => "-".to_string(),
        Some(m) if m.fract() == 0.0 => format!("{m:.0}"),
        Some(m) => format!("{m:.1}"),
    }
}

impl BenchSummary {
    /// Rows as `BP-1 | 4 objects, 5 locations, 1 briefcase | 12`; the id
    /// column is padded to line up.
    pub fn to_table(&self) -> String {
        let id_w = self.rows.iter().map(|r| r.id.len()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(out, "{:id_w$} | {} | {}", r.id, r.description, format_median(r.median));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Runs every instance of `suite` found under `corpus/<suite>/<ID>.inst`
/// for `config.runs` consecutive seeds. Runs execute concurrently.
pub fn run_bench(suite: Suite, corpus: &Path, config: &RunConfig) -> Result<BenchSummary, BenchError> {
    config.check()?;
    let dir = corpus.join(suite.dir_name());
    let mut instances = Vec::new();
    for id in suite.ids() {
        let path = dir.join(format!("{id}.inst"));
        if !path.exists() {
            return Err(BenchError::MissingInstance { id, path });
        }
        instances.push((id, load_instance(&path)?));
    }
    let seeds: Vec<u64> = (0..config.runs as u64).map(|i| config.params.seed + i).collect();
    let jobs: Vec<(usize, u64)> = (0..instances.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let params = GpParams {
                seed,
                stop_on_first_solution: true,
                ..config.params.clone()
            };
            evolve(&instances[i].1, &params).map(|r| r.log.first_solution)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows = instances
        .iter()
        .zip(outcomes.chunks(seeds.len()))
        .map(|((id, inst), gens)| BenchRow {
            id: id.clone(),
            description: describe(inst),
            seeds: seeds.clone(),
            first_solution: gens.to_vec(),
            median: median_generation(gens),
        })
        .collect();
    Ok(BenchSummary {
        suite: suite.dir_name().to_string(),
        rows,
    })
}

/// `optimal N` followed by the plan, or a line explaining why none was found.
pub fn format_oracle(result: &OracleResult, max_depth: usize) -> String {
    match result.status {
        OracleStatus::Solved => {
            let n = result.optimal_length.unwrap_or(result.plan.len());
            let plan = Plan {
                actions: result.plan.clone(),
            };
            let body = render_plan(&plan, RenderMode::All);
            if body.is_empty() {
                format!("optimal {n}\n")
            } else {
                format!("optimal {n}\n{body}\n")
            }
        }
        OracleStatus::UnsolvableWithinDepth if result.exhausted => format!(
            "unsolvable: all {} reachable states explored\n",
            result.states_explored
        ),
        OracleStatus::UnsolvableWithinDepth => {
            format!("no plan within depth {max_depth} ({} states explored)\n", result.states_explored)
        }
        OracleStatus::BudgetExceeded => format!(
            "budget exceeded after {} states; no plan found\n",
            result.states_explored
        ),
    }
}
