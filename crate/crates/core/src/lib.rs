//! Linear planning with genetic programming.
//!
//! Plans are evolved as program trees whose nodes are domain operators and
//! whose leaves are abstract terminals. Simulating a tree from the initial
//! state yields a linear action sequence; fitness is the goal distance of
//! the final state, then the number of actions that actually executed.

#[macro_use]
pub mod fact;
pub mod bench;
pub mod domain;
pub mod domains;
pub mod gp;
pub mod instance_file;
pub mod oracle;
pub mod program;
pub mod sexpr;
pub mod sim;
pub mod terminal;

pub use domain::{Domain, DomainError, Goal, GoalItem, ProblemInstance, Quantifier};
pub use fact::{Atom, Fact, Pattern, Symbol, Term, WorldState};
pub use gp::{evolve, GpError, GpParams, RunLog, RunResult};
pub use instance_file::{parse_instance, print_instance, InstanceError};
pub use oracle::{bfs_optimal, validate_plan, OracleResult, OracleStatus, Validation};
pub use program::Program;
pub use sim::{evaluate, render_plan, Action, FitnessValue, Plan, RenderMode};
pub use terminal::{Terminal, TerminalMap};
