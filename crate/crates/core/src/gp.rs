//! Evolutionary search over plan programs: ramped half-and-half
//! initialization, tournament selection, subtree crossover, reproduction and
//! elitism. No mutation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, DomainError, ProblemInstance};
use crate::program::{Node, Program, SEQ_MAX_ARITY, SEQ_MIN_ARITY};
use crate::sim::{evaluate, evaluate_fitness, FitnessValue, Plan};
use crate::terminal::TerminalMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpParams {
    pub population_size: usize,
    /// Generations bred after the initial one.
    pub max_generations: usize,
    /// Fraction of non-elite offspring produced by crossover; the rest are
    /// reproduced unchanged.
    pub crossover_fraction: f64,
    pub tournament_size: usize,
    pub max_depth: usize,
    /// Depth ceiling for the initial ramp (depths 2..=init_max_depth).
    pub init_max_depth: usize,
    pub max_size: usize,
    pub seed: u64,
    pub stop_on_first_solution: bool,
    pub elitism: usize,
    /// Threads used for fitness evaluation. Does not affect results.
    pub workers: usize,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            population_size: 200,
            max_generations: 1000,
            crossover_fraction: 0.9,
            tournament_size: 7,
            max_depth: 17,
            init_max_depth: 6,
            max_size: 1000,
            seed: 0,
            stop_on_first_solution: false,
            elitism: 1,
            workers: 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("population_size must be at least 2")]
    Population,
    #[error("tournament_size must be at least 1")]
    Tournament,
    #[error("crossover_fraction must lie in [0, 1]")]
    CrossoverFraction,
    #[error("max_depth and max_size must be at least 1")]
    Bounds,
    #[error("elitism cannot exceed the population size")]
    Elitism,
    #[error("workers must be at least 1")]
    Workers,
}

impl GpParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.population_size < 2 {
            return Err(ParamError::Population);
        }
        if self.tournament_size < 1 {
            return Err(ParamError::Tournament);
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return Err(ParamError::CrossoverFraction);
        }
        if self.max_depth < 1 || self.max_size < 1 || self.init_max_depth < 1 {
            return Err(ParamError::Bounds);
        }
        if self.elitism > self.population_size {
            return Err(ParamError::Elitism);
        }
        if self.workers < 1 {
            return Err(ParamError::Workers);
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GpError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    program: Program,
    fitness: Option<FitnessValue>,
}

impl Individual {
    pub fn new(program: Program) -> Self {
        Individual {
            program,
            fitness: None,
        }
    }

    /// An individual whose fitness is already known.
    pub fn scored(program: Program, fitness: FitnessValue) -> Self {
        Individual {
            program,
            fitness: Some(fitness),
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn fitness(&self) -> Option<FitnessValue> {
        self.fitness
    }

    pub fn set_program(&mut self, program: Program) {
        self.program = program;
        self.fitness = None;
    }

    pub fn evaluate(&mut self, instance: &ProblemInstance, tmap: &TerminalMap) -> Result<FitnessValue, DomainError> {
        if let Some(f) = self.fitness {
            return Ok(f);
        }
        let f = evaluate_fitness(&self.program, instance, tmap)?;
        self.fitness = Some(f);
        Ok(f)
    }

    fn score(&self) -> FitnessValue {
        self.fitness.expect("individual evaluated before selection")
    }
}

#[derive(Clone, Copy, Debug)]
enum FunctionKind {
    Op { index: u16, arity: u8 },
    Seq,
}

/// Leaves and functions available to tree generation.
#[derive(Clone, Debug)]
pub struct PrimitiveSet {
    leaves: Vec<Node>,
    functions: Vec<FunctionKind>,
}

impl PrimitiveSet {
    /// Leaves are arity-0 operators plus, when some operator takes
    /// arguments, the synthesized terminals. Functions are the operators
    /// with arguments, or the `seq` combinator when every operator is nullary.
    pub fn new(domain: &Domain, tmap: &TerminalMap) -> Result<Self, DomainError> {
        let mut leaves = Vec::new();
        let mut functions = Vec::new();
        for (i, op) in domain.operators().iter().enumerate() {
            if op.arity == 0 {
                leaves.push(Node::Op { index: i as u16, arity: 0 });
            } else {
                functions.push(FunctionKind::Op {
                    index: i as u16,
                    arity: op.arity as u8,
                });
            }
        }
        if functions.is_empty() {
            if !leaves.is_empty() {
                functions.push(FunctionKind::Seq);
            }
        } else {
            leaves.extend(tmap.terminals().map(Node::Terminal));
        }
        if leaves.is_empty() {
            return Err(DomainError::NoLeaves);
        }
        Ok(PrimitiveSet { leaves, functions })
    }

    pub fn leaves(&self) -> &[Node] {
        &self.leaves
    }

    fn function_node<R: Rng>(&self, f: FunctionKind, budget_children: usize, rng: &mut R) -> Option<Node> {
        match f {
            FunctionKind::Op { index, arity } => {
                (arity as usize <= budget_children).then_some(Node::Op { index, arity })
            }
            FunctionKind::Seq => {
                if budget_children < SEQ_MIN_ARITY {
                    return None;
                }
                let hi = SEQ_MAX_ARITY.min(budget_children);
                Some(Node::Seq(rng.gen_range(SEQ_MIN_ARITY..=hi) as u8))
            }
        }
    }

    // `pending` counts open slots after this one; each needs at least a leaf.
    #[allow(clippy::too_many_arguments)]
    fn build<R: Rng>(
        &self,
        out: &mut Vec<Node>,
        depth: usize,
        max_depth: usize,
        full: bool,
        max_size: usize,
        pending: usize,
        rng: &mut R,
    ) {
        let room = max_size.saturating_sub(out.len() + 1 + pending);
        let want_function = depth < max_depth
            && !self.functions.is_empty()
            && (full
                || depth == 1
                || rng.gen_range(0..self.functions.len() + self.leaves.len()) < self.functions.len());
        let node = want_function
            .then(|| {
                let f = *self.functions.choose(rng).expect("nonempty");
                self.function_node(f, room, rng)
            })
            .flatten();
        match node {
            Some(n) => {
                out.push(n);
                let arity = n.arity();
                for i in 0..arity {
                    self.build(out, depth + 1, max_depth, full, max_size, pending + arity - 1 - i, rng);
                }
            }
            None => out.push(*self.leaves.choose(rng).expect("nonempty")),
        }
    }

    /// A random tree of depth at most `max_depth`, by the full or grow method.
    pub fn generate<R: Rng>(&self, max_depth: usize, full: bool, max_size: usize, rng: &mut R) -> Program {
        let mut nodes = Vec::new();
        self.build(&mut nodes, 1, max_depth.max(1), full, max_size.max(1), 0, rng);
        Program::from_nodes(nodes).expect("generator emits complete trees")
    }
}

/// One random program: depth drawn from 2..=init_max_depth (capped by
/// max_depth), method full or grow with equal probability.
pub fn random_program<R: Rng>(
    domain: &Domain,
    tmap: &TerminalMap,
    params: &GpParams,
    rng: &mut R,
) -> Result<Program, DomainError> {
    let prims = PrimitiveSet::new(domain, tmap)?;
    let cap = params.init_max_depth.min(params.max_depth);
    let depth = if cap < 2 { cap } else { rng.gen_range(2..=cap) };
    let full = rng.gen_bool(0.5);
    Ok(prims.generate(depth, full, params.max_size, rng))
}

/// Ramped half-and-half: depths cycle over 2..=cap, alternating full and grow.
pub fn ramped_population<R: Rng>(
    prims: &PrimitiveSet,
    params: &GpParams,
    rng: &mut R,
) -> Vec<Program> {
    let cap = params.init_max_depth.min(params.max_depth);
    let depths: Vec<usize> = if cap < 2 { vec![cap] } else { (2..=cap).collect() };
    (0..params.population_size)
        .map(|i| {
            let depth = depths[(i / 2) % depths.len()];
            prims.generate(depth, i % 2 == 0, params.max_size, rng)
        })
        .collect()
}

/// Best of `k` uniform draws (with replacement); ties go to the earlier draw.
/// With `k` at least the population size every individual competes and no
/// randomness is drawn.
pub fn tournament_select<R: Rng>(pop: &[Individual], k: usize, rng: &mut R) -> usize {
    if k >= pop.len() {
        return (0..pop.len())
            .min_by(|&a, &b| pop[a].score().cmp(&pop[b].score()))
            .expect("population is nonempty");
    }
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k.max(1) {
        let c = rng.gen_range(0..pop.len());
        if pop[c].score() < pop[best].score() {
            best = c;
        }
    }
    best
}

/// Swaps the subtree at `i` in `p1` with the subtree at `j` in `p2`. A child
/// that breaks the depth or size bound is replaced by its own parent.
pub fn crossover_at(
    p1: &Program,
    i: usize,
    p2: &Program,
    j: usize,
    params: &GpParams,
) -> (Program, Program) {
    let c1 = p1.replace_subtree(i, p2.subtree(j));
    let c2 = p2.replace_subtree(j, p1.subtree(i));
    let keep = |c: Program, parent: &Program| {
        if c.within(params.max_depth, params.max_size) {
            c
        } else {
            parent.clone()
        }
    };
    (keep(c1, p1), keep(c2, p2))
}

/// Subtree crossover with uniformly chosen crossover points.
pub fn subtree_crossover<R: Rng>(
    p1: &Program,
    p2: &Program,
    rng: &mut R,
    params: &GpParams,
) -> (Program, Program) {
    let i = rng.gen_range(0..p1.len());
    let j = rng.gen_range(0..p2.len());
    crossover_at(p1, i, p2, j, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub gen: usize,
    pub best_goal_fitness: f64,
    pub best_exec_len: usize,
    pub mean_goal_fitness: f64,
    pub first_solution_gen: Option<usize>,
    /// Attempted actions (executed or not) in the best plan.
    #[serde(skip)]
    pub best_plan_len: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub records: Vec<GenerationRecord>,
    pub first_solution: Option<usize>,
}

impl RunLog {
    /// One JSON object per line, fields in fixed order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub best: Individual,
    pub plan: Plan,
    pub log: RunLog,
}

impl RunResult {
    pub fn solved(&self) -> bool {
        self.log.first_solution.is_some()
    }

    pub fn fitness(&self) -> FitnessValue {
        self.best.score()
    }
}

fn generation_rng(seed: u64, gen: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(gen as u64);
    rng
}

struct Evaluator<'a> {
    instance: &'a ProblemInstance,
    tmap: &'a TerminalMap,
    pool: Option<rayon::ThreadPool>,
}

impl Evaluator<'_> {
    fn run(&self, pop: &mut [Individual]) -> Result<(), DomainError> {
        let (instance, tmap) = (self.instance, self.tmap);
        match &self.pool {
            None => pop
                .iter_mut()
                .try_for_each(|ind| ind.evaluate(instance, tmap).map(drop)),
            Some(pool) => pool.install(|| {
                pop.par_iter_mut()
                    .try_for_each(|ind| ind.evaluate(instance, tmap).map(drop))
            }),
        }
    }
}

fn breed(pop: &[Individual], params: &GpParams, rng: &mut ChaCha8Rng) -> Vec<Individual> {
    let n = pop.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pop[a].score().cmp(&pop[b].score()).then(a.cmp(&b)));
    let mut next: Vec<Individual> = order[..params.elitism].iter().map(|&i| pop[i].clone()).collect();
    while next.len() < n {
        if rng.gen_bool(params.crossover_fraction) {
            let a = &pop[tournament_select(pop, params.tournament_size, rng)];
            let b = &pop[tournament_select(pop, params.tournament_size, rng)];
            let (c1, c2) = subtree_crossover(&a.program, &b.program, rng, params);
            for (child, parent) in [(c1, a), (c2, b)] {
                if next.len() == n {
                    break;
                }
                if child == parent.program {
                    next.push(parent.clone());
                } else {
                    next.push(Individual::new(child));
                }
            }
        } else {
            next.push(pop[tournament_select(pop, params.tournament_size, rng)].clone());
        }
    }
    next
}

/// Runs the generational loop and returns the best program found, its plan,
/// and the per-generation log.
pub fn evolve(instance: &ProblemInstance, params: &GpParams) -> Result<RunResult, GpError> {
    params.validate()?;
    let domain = instance.domain();
    let tmap = TerminalMap::build(instance)?;
    let prims = PrimitiveSet::new(domain, &tmap)?;
    let pool = (params.workers > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(params.workers)
            .build()
            .expect("thread pool")
    });
    let evaluator = Evaluator {
        instance,
        tmap: &tmap,
        pool,
    };

    let mut rng = generation_rng(params.seed, 0);
    let mut pop: Vec<Individual> = ramped_population(&prims, params, &mut rng)
        .into_iter()
        .map(Individual::new)
        .collect();
    let mut log = RunLog::default();
    let mut best: Option<Individual> = None;

    for gen in 0..=params.max_generations {
        if gen > 0 {
            if params.stop_on_first_solution && log.first_solution.is_some() {
                break;
            }
            let mut rng = generation_rng(params.seed, gen);
            pop = breed(&pop, params, &mut rng);
        }
        evaluator.run(&mut pop)?;

        let gen_best = pop
            .iter()
            .min_by(|a, b| a.score().cmp(&b.score()))
            .expect("population is nonempty");
        if best.as_ref().is_none_or(|b| gen_best.score() < b.score()) {
            best = Some(gen_best.clone());
        }
        let score = gen_best.score();
        if score.is_solution() && log.first_solution.is_none() {
            log.first_solution = Some(gen);
        }
        let mean = pop.iter().map(|i| i.score().goal_fitness).sum::<f64>() / pop.len() as f64;
        let best_plan_len = crate::sim::execute_program(&gen_best.program, instance, &tmap)?
            .1
            .actions
            .len();
        log.records.push(GenerationRecord {
            gen,
            best_goal_fitness: score.goal_fitness,
            best_exec_len: score.executed_length,
            mean_goal_fitness: mean,
            first_solution_gen: log.first_solution,
            best_plan_len,
        });
    }

    let best = best.expect("at least one generation");
    let plan = evaluate(&best.program, instance, &tmap)?.plan;
    Ok(RunResult { best, plan, log })
}
