//! Plan simulation: runs a program against a private copy of S0, records the
//! linear trace of attempted actions and scores the final state.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Application, DomainError, OpContext, ProblemInstance};
use crate::fact::{Atom, Symbol, WorldState};
use crate::program::{Node, Program};
use crate::terminal::{Terminal, TerminalMap};

/// A fully instantiated operator application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub operator: Symbol,
    pub args: Vec<Atom>,
    pub executed: bool,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.operator)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<Action>,
}

impl Plan {
    pub fn executed_length(&self) -> usize {
        self.actions.iter().filter(|a| a.executed).count()
    }

    pub fn executed(&self) -> impl Iterator<Item = &Action> {
        self.actions.iter().filter(|a| a.executed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    All,
    ExecutedOnly,
}

/// One action per line, `"<n>: (<operator> <args...>)"`, numbered from 1.
pub fn render_plan(plan: &Plan, mode: RenderMode) -> String {
    plan.actions
        .iter()
        .filter(|a| mode == RenderMode::All || a.executed)
        .enumerate()
        .map(|(i, a)| format!("{}: {a}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Lexicographic score: goal fitness first, then executed plan length.
/// Lower is better.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub goal_fitness: f64,
    pub executed_length: usize,
}

impl FitnessValue {
    pub fn is_solution(&self) -> bool {
        self.goal_fitness == 0.0
    }
}

impl Eq for FitnessValue {}

impl Ord for FitnessValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.goal_fitness
            .total_cmp(&other.goal_fitness)
            .then(self.executed_length.cmp(&other.executed_length))
    }
}

impl PartialOrd for FitnessValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FitnessValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.goal_fitness, self.executed_length)
    }
}

/// Runs operator `index` once with terminal arguments.
pub fn apply_operator(
    index: usize,
    args: &[Terminal],
    state: &mut WorldState,
    instance: &ProblemInstance,
    tmap: &TerminalMap,
    position: usize,
    executed_before: usize,
) -> Result<Application, DomainError> {
    let op = &instance.domain().operators()[index];
    if op.arity != args.len() {
        return Err(DomainError::OperatorArity {
            name: op.name.clone(),
            expected: op.arity,
            got: args.len(),
        });
    }
    let mut ctx = OpContext {
        state,
        instance,
        tmap,
        position,
        executed_before,
    };
    (op.body)(&mut ctx, args)
}

struct Run<'a> {
    instance: &'a ProblemInstance,
    tmap: &'a TerminalMap,
    state: WorldState,
    plan: Plan,
    executed: usize,
}

impl Run<'_> {
    // Evaluates the subtree at `*pos`, children before parents, and returns
    // the value it yields.
    fn eval(&mut self, nodes: &[Node], pos: &mut usize) -> Result<Terminal, DomainError> {
        let node = nodes[*pos];
        *pos += 1;
        match node {
            Node::Terminal(t) => Ok(t),
            Node::Seq(arity) => {
                let mut last = Terminal(1);
                for _ in 0..arity {
                    last = self.eval(nodes, pos)?;
                }
                Ok(last)
            }
            Node::Op { index, arity } => {
                let mut args = Vec::with_capacity(arity as usize);
                for _ in 0..arity {
                    args.push(self.eval(nodes, pos)?);
                }
                let app = apply_operator(
                    index as usize,
                    &args,
                    &mut self.state,
                    self.instance,
                    self.tmap,
                    self.plan.actions.len() + 1,
                    self.executed,
                )?;
                if app.executed {
                    self.executed += 1;
                }
                self.plan.actions.push(Action {
                    operator: self.instance.domain().operators()[index as usize].name.clone(),
                    args: app.args,
                    executed: app.executed,
                });
                // arity-0 operators yield the first terminal
                Ok(args.first().copied().unwrap_or(Terminal(1)))
            }
        }
    }
}

/// Simulates `program` from a copy of the instance's S0.
pub fn execute_program(
    program: &Program,
    instance: &ProblemInstance,
    tmap: &TerminalMap,
) -> Result<(WorldState, Plan), DomainError> {
    let mut run = Run {
        instance,
        tmap,
        state: instance.init_state().clone(),
        plan: Plan::default(),
        executed: 0,
    };
    let mut pos = 0;
    run.eval(program.nodes(), &mut pos)?;
    Ok((run.state, run.plan))
}

/// Weighted sum of per-predicate evaluators over the final state.
pub fn goal_fitness(state: &WorldState, instance: &ProblemInstance) -> Result<f64, DomainError> {
    let goals = instance.expanded_goals();
    let mut total = 0.0;
    for p in instance.domain().predicates() {
        let v = (p.evaluator)(state, goals.relevant(p.name.as_str()), instance)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(DomainError::BadFitness {
                predicate: p.name.clone(),
                value: v,
            });
        }
        total += p.weight * v;
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub fitness: FitnessValue,
    pub plan: Plan,
    pub final_state: WorldState,
}

pub fn evaluate(
    program: &Program,
    instance: &ProblemInstance,
    tmap: &TerminalMap,
) -> Result<Evaluation, DomainError> {
    let (final_state, plan) = execute_program(program, instance, tmap)?;
    let fitness = FitnessValue {
        goal_fitness: goal_fitness(&final_state, instance)?,
        executed_length: plan.executed_length(),
    };
    Ok(Evaluation {
        fitness,
        plan,
        final_state,
    })
}

pub fn evaluate_fitness(
    program: &Program,
    instance: &ProblemInstance,
    tmap: &TerminalMap,
) -> Result<FitnessValue, DomainError> {
    evaluate(program, instance, tmap).map(|e| e.fitness)
}

/// Sums fitness over several fitness cases.
pub fn evaluate_fitness_cases(
    program: &Program,
    cases: &[(&ProblemInstance, &TerminalMap)],
) -> Result<FitnessValue, DomainError> {
    let mut total = FitnessValue {
        goal_fitness: 0.0,
        executed_length: 0,
    };
    for (instance, tmap) in cases {
        let f = evaluate_fitness(program, instance, tmap)?;
        total.goal_fitness += f.goal_fitness;
        total.executed_length += f.executed_length;
    }
    Ok(total)
}
