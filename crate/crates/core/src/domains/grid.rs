//! Grid navigation with pushable blocks, for one robot or two robots that
//! alternate actions.
//!
//! State facts are `(robot-at r x y)` and `(block x y)` with integer
//! coordinates. Grid size and destinations live in the instance extras
//! (`grid-w`, `grid-h`, `dest-x`, `dest-y`, and `dest2-x`, `dest2-y` for the
//! second robot).

use std::collections::HashSet;
use std::sync::Arc;

use crate::domain::{
    unsatisfied_goals_evaluator, Application, Domain, DomainError, Goal, OpContext,
    ProblemInstance,
};
use crate::fact::{Atom, Fact, WorldState};
use crate::terminal::Terminal;

pub const ROBOT: &str = "robot";
pub const ROBOT_AT: &str = "robot-at";
pub const BLOCK: &str = "block";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (0, 1),
            Direction::South => (0, -1),
            Direction::East => (1, 0),
            Direction::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }
}

/// Which count decides the acting robot in the two-robot domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DispatchCount {
    /// Every attempted action, executed or not.
    #[default]
    Attempted,
    /// Only actions that actually executed.
    Executed,
}

impl DispatchCount {
    pub fn from_extra(instance: &ProblemInstance) -> Result<Self, DomainError> {
        match instance.extra().get("dispatch") {
            None => Ok(DispatchCount::Attempted),
            Some(Atom::Sym(s)) if s.as_str() == "attempted" => Ok(DispatchCount::Attempted),
            Some(Atom::Sym(s)) if s.as_str() == "executed" => Ok(DispatchCount::Executed),
            Some(other) => Err(DomainError::InvalidInstance(format!(
                "dispatch must be `attempted` or `executed`, got `{other}`"
            ))),
        }
    }
}

/// Robot index (0 = robot1, 1 = robot2) acting at 1-based plan `position`:
/// even positions go to robot1, odd ones to robot2.
pub fn two_rnp_dispatch(position: usize) -> usize {
    if position.is_multiple_of(2) {
        0
    } else {
        1
    }
}

pub type Pos = (i64, i64);

pub fn robot_position(state: &WorldState, robot: &Atom) -> Result<Pos, DomainError> {
    state
        .lookup(ROBOT_AT, std::slice::from_ref(robot))
        .and_then(|f| Some((f.args[1].as_int()?, f.args[2].as_int()?)))
        .ok_or_else(|| DomainError::InvalidInstance(format!("no position fact for robot {robot}")))
}

fn block_fact((x, y): Pos) -> Fact {
    Fact::new(BLOCK, [Atom::Int(x), Atom::Int(y)])
}

fn robot_fact(robot: &Atom, (x, y): Pos) -> Fact {
    Fact::new(ROBOT_AT, [robot.clone(), Atom::Int(x), Atom::Int(y)])
}

pub fn has_block(state: &WorldState, p: Pos) -> bool {
    state.is_fact(&block_fact(p))
}

fn has_robot(state: &WorldState, p: Pos) -> bool {
    state
        .facts_of(ROBOT_AT)
        .any(|f| f.args[1] == Atom::Int(p.0) && f.args[2] == Atom::Int(p.1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub width: i64,
    pub height: i64,
}

impl Bounds {
    pub fn of(instance: &ProblemInstance) -> Result<Self, DomainError> {
        Ok(Bounds {
            width: instance.extra_int("grid-w")?,
            height: instance.extra_int("grid-h")?,
        })
    }

    pub fn contains(&self, (x, y): Pos) -> bool {
        (0..self.width).contains(&x) && (0..self.height).contains(&y)
    }
}

fn acting_robot(ctx: &OpContext<'_>) -> Result<Atom, DomainError> {
    let robots = ctx.instance.instances_of(ROBOT)?;
    if robots.len() == 1 {
        return Ok(robots[0].clone());
    }
    let count = match DispatchCount::from_extra(ctx.instance)? {
        DispatchCount::Attempted => ctx.position,
        DispatchCount::Executed => ctx.executed_before + 1,
    };
    Ok(robots[two_rnp_dispatch(count)].clone())
}

fn step(p: Pos, d: Direction, n: i64) -> Pos {
    let (dx, dy) = d.delta();
    (p.0 + n * dx, p.1 + n * dy)
}

/// Moves the acting robot one cell in `dir` when that cell is inside the
/// grid and holds neither a block nor another robot.
pub fn rnp_move(ctx: &mut OpContext<'_>, dir: Direction) -> Result<Application, DomainError> {
    let robot = acting_robot(ctx)?;
    let bounds = Bounds::of(ctx.instance)?;
    let at = robot_position(ctx.state, &robot)?;
    let to = step(at, dir, 1);
    let ok = bounds.contains(to) && !has_block(ctx.state, to) && !has_robot(ctx.state, to);
    if ok {
        ctx.state.delete_fact(&robot_fact(&robot, at));
        ctx.state.add_fact(robot_fact(&robot, to))?;
    }
    Ok(Application::new(vec![robot], ok))
}

/// Pushes the block in the adjacent cell one further cell in `dir`; the
/// robot follows into the vacated cell.
pub fn rnp_push(ctx: &mut OpContext<'_>, dir: Direction) -> Result<Application, DomainError> {
    let robot = acting_robot(ctx)?;
    let bounds = Bounds::of(ctx.instance)?;
    let at = robot_position(ctx.state, &robot)?;
    let x = step(at, dir, 1);
    let y = step(at, dir, 2);
    let ok = has_block(ctx.state, x)
        && bounds.contains(y)
        && !has_block(ctx.state, y)
        && !has_robot(ctx.state, y);
    if ok {
        ctx.state.delete_fact(&block_fact(x));
        ctx.state.add_fact(block_fact(y))?;
        ctx.state.delete_fact(&robot_fact(&robot, at));
        ctx.state.add_fact(robot_fact(&robot, x))?;
    }
    Ok(Application::new(vec![robot], ok))
}

/// Destination of the robot at `index` (0-based) from the instance extras.
pub fn destination(instance: &ProblemInstance, index: usize) -> Result<Pos, DomainError> {
    let prefix = if index == 0 {
        "dest".to_string()
    } else {
        format!("dest{}", index + 1)
    };
    Ok((
        instance.extra_int(&format!("{prefix}-x"))?,
        instance.extra_int(&format!("{prefix}-y"))?,
    ))
}

/// Sum over robots of the Manhattan distance to their destinations.
pub fn rnp_fitness(state: &WorldState, instance: &ProblemInstance) -> Result<f64, DomainError> {
    let mut total = 0;
    for (i, robot) in instance.instances_of(ROBOT)?.iter().enumerate() {
        let (x, y) = robot_position(state, robot)?;
        let (dx, dy) = destination(instance, i)?;
        total += (x - dx).abs() + (y - dy).abs();
    }
    Ok(total as f64)
}

fn validate(instance: &ProblemInstance, robots_expected: usize) -> Result<(), DomainError> {
    let bad = |msg: String| Err(DomainError::InvalidInstance(msg));
    let bounds = Bounds::of(instance)?;
    if bounds.width < 1 || bounds.height < 1 {
        return bad(format!("grid {}x{} is empty", bounds.width, bounds.height));
    }
    let robots = instance.instances_of(ROBOT)?;
    if robots.len() != robots_expected {
        return bad(format!(
            "expected {robots_expected} robot(s), found {}",
            robots.len()
        ));
    }
    DispatchCount::from_extra(instance)?;
    let state = instance.init_state();
    let mut occupied = HashSet::new();
    for f in state.iter() {
        let coords = match f.predicate.as_str() {
            BLOCK => &f.args[..],
            _ => &f.args[1..],
        };
        let (Some(x), Some(y)) = (coords[0].as_int(), coords[1].as_int()) else {
            return bad(format!("non-integer coordinate in {f}"));
        };
        if !bounds.contains((x, y)) {
            return bad(format!("{f} is outside the grid"));
        }
        if !occupied.insert((x, y)) {
            return bad(format!("cell ({x}, {y}) is occupied twice"));
        }
    }
    for (i, robot) in robots.iter().enumerate() {
        if state.facts_of(ROBOT_AT).filter(|f| &f.args[0] == robot).count() != 1 {
            return bad(format!("robot {robot} needs exactly one position fact"));
        }
        let dest = destination(instance, i)?;
        if !bounds.contains(dest) {
            return bad(format!("destination of {robot} is outside the grid"));
        }
        let goal = Goal::Ground(robot_fact(robot, dest));
        if !instance.goals().contains(&goal) {
            return bad(format!("goal {goal} missing for robot {robot}"));
        }
    }
    Ok(())
}

fn build(name: &str, robots: usize) -> Domain {
    let mut b = Domain::builder(name)
        .concept(ROBOT)
        .predicate(
            ROBOT_AT,
            3,
            Arc::new(|state, _goals, instance| rnp_fitness(state, instance)),
        )
        .predicate(BLOCK, 2, unsatisfied_goals_evaluator())
        .validator(move |inst| validate(inst, robots));
    for d in Direction::ALL {
        b = b.operator(&format!("move-{}", d.name()), 0, move |ctx, _: &[Terminal]| {
            rnp_move(ctx, d)
        });
    }
    for d in Direction::ALL {
        b = b.operator(&format!("push-{}", d.name()), 0, move |ctx, _: &[Terminal]| {
            rnp_push(ctx, d)
        });
    }
    if robots > 1 {
        b = b.step_period(2);
    }
    b.build().expect("grid domain is well-formed")
}

/// Single-robot navigation.
pub fn rnp() -> Domain {
    build("rnp", 1)
}

/// Two robots; plan positions alternate between them.
pub fn two_rnp() -> Domain {
    build("2rnp", 2)
}
