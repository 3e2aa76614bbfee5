//! Breadth-first optimal planner for small instances, and a strict plan
//! validator.
//!
//! Ground actions are enumerated by running each operator over every
//! terminal tuple and keeping one tuple per distinct `(operator, args)`.
//! This relies on operators converting their arguments with `convert_to`
//! only, so the ground arguments do not depend on the state.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::domain::{DomainError, ProblemInstance};
use crate::fact::{Atom, Fact, Symbol, WorldState};
use crate::sim::{apply_operator, Action};
use crate::terminal::{Terminal, TerminalMap};

/// Refuse to enumerate more terminal tuples than this per operator.
const MAX_TUPLES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleStatus {
    Solved,
    /// No goal state within `max_depth`. `exhausted` on the result tells
    /// whether the whole reachable space was covered.
    UnsolvableWithinDepth,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub status: OracleStatus,
    pub optimal_length: Option<usize>,
    pub plan: Vec<Action>,
    pub states_explored: usize,
    pub exhausted: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct Grounding {
    op: usize,
    args: Vec<Terminal>,
    action: (Symbol, Vec<Atom>),
}

/// Distinct ground actions per plan-position residue.
struct GroundActions {
    by_residue: Vec<Vec<Grounding>>,
}

impl GroundActions {
    fn new(instance: &ProblemInstance, tmap: &TerminalMap) -> Result<Self, DomainError> {
        let domain = instance.domain();
        let period = domain.step_period();
        let mut by_residue = Vec::with_capacity(period);
        for r in 0..period {
            let mut seen = HashSet::new();
            let mut list = Vec::new();
            for (op_index, op) in domain.operators().iter().enumerate() {
                let n = (tmap.size() as usize)
                    .checked_pow(op.arity as u32)
                    .filter(|&n| n <= MAX_TUPLES)
                    .ok_or_else(|| {
                        DomainError::InvalidInstance(format!(
                            "too many ground instances of `{}` to enumerate",
                            op.name
                        ))
                    })?;
                for code in 0..n {
                    let args = decode_tuple(code, op.arity, tmap.size());
                    let mut scratch = instance.init_state().clone();
                    let app = apply_operator(op_index, &args, &mut scratch, instance, tmap, r + 1, r)?;
                    let key = (op.name.clone(), app.args);
                    if seen.insert(key.clone()) {
                        list.push(Grounding {
                            op: op_index,
                            args,
                            action: key,
                        });
                    }
                }
            }
            by_residue.push(list);
        }
        Ok(GroundActions { by_residue })
    }

    fn at(&self, step: usize) -> &[Grounding] {
        &self.by_residue[step % self.by_residue.len()]
    }

    fn find(&self, step: usize, operator: &Symbol, args: &[Atom]) -> Option<&Grounding> {
        self.at(step)
            .iter()
            .find(|g| &g.action.0 == operator && g.action.1 == args)
    }
}

fn decode_tuple(mut code: usize, arity: usize, size: u32) -> Vec<Terminal> {
    let size = size as usize;
    let mut out = vec![Terminal(1); arity];
    for slot in out.iter_mut().rev() {
        *slot = Terminal((code % size) as u32 + 1);
        code /= size;
    }
    out
}

struct SearchNode {
    state: WorldState,
    depth: usize,
    parent: Option<usize>,
    action: Option<Action>,
}

/// Shortest action sequence (every action executing) reaching the goals.
pub fn bfs_optimal(
    instance: &ProblemInstance,
    max_depth: usize,
    max_states: usize,
) -> Result<OracleResult, DomainError> {
    let tmap = TerminalMap::build(instance)?;
    let ground = GroundActions::new(instance, &tmap)?;
    let period = instance.domain().step_period();
    let goals = instance.expanded_goals();

    let start = instance.init_state().clone();
    if goals.all_satisfied(&start) {
        return Ok(OracleResult {
            status: OracleStatus::Solved,
            optimal_length: Some(0),
            plan: Vec::new(),
            states_explored: 1,
            exhausted: false,
        });
    }

    let mut visited: HashSet<(Vec<Fact>, usize)> = HashSet::new();
    visited.insert((start.canonical(), 0));
    let mut nodes = vec![SearchNode {
        state: start,
        depth: 0,
        parent: None,
        action: None,
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;

    while let Some(idx) = queue.pop_front() {
        let depth = nodes[idx].depth;
        if depth >= max_depth {
            truncated = true;
            continue;
        }
        for g in ground.at(depth) {
            let mut next = nodes[idx].state.clone();
            let app = apply_operator(g.op, &g.args, &mut next, instance, &tmap, depth + 1, depth)?;
            if !app.executed {
                continue;
            }
            if !visited.insert((next.canonical(), (depth + 1) % period)) {
                continue;
            }
            let solved = goals.all_satisfied(&next);
            nodes.push(SearchNode {
                state: next,
                depth: depth + 1,
                parent: Some(idx),
                action: Some(Action {
                    operator: g.action.0.clone(),
                    args: app.args,
                    executed: true,
                }),
            });
            let child = nodes.len() - 1;
            if solved {
                let plan = trace(&nodes, child);
                return Ok(OracleResult {
                    status: OracleStatus::Solved,
                    optimal_length: Some(plan.len()),
                    plan,
                    states_explored: visited.len(),
                    exhausted: false,
                });
            }
            if visited.len() >= max_states {
                return Ok(OracleResult {
                    status: OracleStatus::BudgetExceeded,
                    optimal_length: None,
                    plan: Vec::new(),
                    states_explored: visited.len(),
                    exhausted: false,
                });
            }
            queue.push_back(child);
        }
    }
    Ok(OracleResult {
        status: OracleStatus::UnsolvableWithinDepth,
        optimal_length: None,
        plan: Vec::new(),
        states_explored: visited.len(),
        exhausted: !truncated,
    })
}

fn trace(nodes: &[SearchNode], mut idx: usize) -> Vec<Action> {
    let mut plan = Vec::new();
    while let Some(a) = &nodes[idx].action {
        plan.push(a.clone());
        idx = nodes[idx].parent.expect("non-root node has a parent");
    }
    plan.reverse();
    plan
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Validation {
    ValidAndSolves,
    ValidNotSolving,
    /// 1-based index of the first action that is unknown or whose
    /// preconditions fail.
    InvalidAtStep(usize),
}

/// Replays ground actions from S0, requiring every precondition to hold.
/// The `executed` flags on the input are ignored.
pub fn validate_plan(instance: &ProblemInstance, actions: &[Action]) -> Result<Validation, DomainError> {
    replay_strict(instance, actions).map(|(v, _)| v)
}

/// Like [`validate_plan`], also returning the state reached (the state
/// before the failing step when invalid).
pub fn replay_strict(
    instance: &ProblemInstance,
    actions: &[Action],
) -> Result<(Validation, WorldState), DomainError> {
    let tmap = TerminalMap::build(instance)?;
    let ground = GroundActions::new(instance, &tmap)?;
    let mut state = instance.init_state().clone();
    for (k, a) in actions.iter().enumerate() {
        let Some(g) = ground.find(k, &a.operator, &a.args) else {
            return Ok((Validation::InvalidAtStep(k + 1), state));
        };
        let mut next = state.clone();
        let app = apply_operator(g.op, &g.args, &mut next, instance, &tmap, k + 1, k)?;
        if !app.executed {
            return Ok((Validation::InvalidAtStep(k + 1), state));
        }
        state = next;
    }
    let v = if instance.expanded_goals().all_satisfied(&state) {
        Validation::ValidAndSolves
    } else {
        Validation::ValidNotSolving
    };
    Ok((v, state))
}
