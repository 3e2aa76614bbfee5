use gp_planner::domains::grid::{rnp_fitness, robot_position, two_rnp_dispatch, DispatchCount};
use gp_planner::program::Program;
use gp_planner::sim::{apply_operator, evaluate};
use gp_planner::{fact, parse_instance, Atom, ProblemInstance, TerminalMap, WorldState};

type Cell = (i64, i64);

fn grid(domain: &str, w: i64, h: i64, robots: &[(Cell, Cell)], blocks: &[(i64, i64)], extra: &str) -> ProblemInstance {
    let names: Vec<String> = (1..=robots.len()).map(|i| format!("r{i}")).collect();
    let mut init = String::new();
    let mut goals = String::new();
    let mut extras = format!("grid-w {w} grid-h {h} {extra}");
    for (i, ((x, y), (dx, dy))) in robots.iter().enumerate() {
        init += &format!("(robot-at r{} {x} {y}) ", i + 1);
        goals += &format!("(robot-at r{} {dx} {dy}) ", i + 1);
        let p = if i == 0 { "dest".to_string() } else { format!("dest{}", i + 1) };
        extras += &format!(" {p}-x {dx} {p}-y {dy}");
    }
    for (x, y) in blocks {
        init += &format!("(block {x} {y}) ");
    }
    let text = format!(
        "(instance (domain {domain}) (concept-instances (robot ({}))) (init {init}) (goal {goals}) (extra {extras}))",
        names.join(" ")
    );
    parse_instance(&text).unwrap()
}

fn step(inst: &ProblemInstance, state: &mut WorldState, name: &str, position: usize) -> bool {
    let tmap = TerminalMap::build(inst).unwrap();
    let (i, _) = inst.domain().operator(name).unwrap();
    apply_operator(i, &[], state, inst, &tmap, position, position - 1).unwrap().executed
}

fn pos(s: &WorldState, r: &str) -> (i64, i64) {
    robot_position(s, &Atom::sym(r)).unwrap()
}

#[test]
fn moves() {
    let inst = grid("rnp", 4, 4, &[((0, 0), (3, 3))], &[], "");
    let mut s = inst.init_state().clone();
    assert!(step(&inst, &mut s, "move-east", 1));
    assert_eq!(pos(&s, "r1"), (1, 0));

    let mut s = inst.init_state().clone();
    assert!(!step(&inst, &mut s, "move-west", 1));
    assert!(!step(&inst, &mut s, "move-south", 1));
    assert!(step(&inst, &mut s, "move-north", 1));
    assert_eq!(pos(&s, "r1"), (0, 1));

    let blocked = grid("rnp", 5, 5, &[((2, 2), (0, 0))], &[(3, 2)], "");
    let mut s = blocked.init_state().clone();
    assert!(!step(&blocked, &mut s, "move-east", 1));
    assert_eq!(&s, blocked.init_state());
}

#[test]
fn pushes() {
    let inst = grid("rnp", 5, 5, &[((2, 2), (0, 0))], &[(3, 2)], "");
    let mut s = inst.init_state().clone();
    assert!(step(&inst, &mut s, "push-east", 1));
    assert_eq!(pos(&s, "r1"), (3, 2));
    assert!(s.is_fact(&fact!("block", 4, 2)));
    assert!(!s.is_fact(&fact!("block", 3, 2)));

    let two = grid("rnp", 5, 5, &[((2, 2), (0, 0))], &[(3, 2), (4, 2)], "");
    let mut s = two.init_state().clone();
    assert!(!step(&two, &mut s, "push-east", 1));

    let edge = grid("rnp", 4, 4, &[((2, 2), (0, 0))], &[(3, 2)], "");
    let mut s = edge.init_state().clone();
    assert!(!step(&edge, &mut s, "push-east", 1));
    assert!(!step(&edge, &mut s, "push-west", 1), "nothing to push");
}

#[test]
fn manhattan_fitness() {
    let far = grid("rnp", 100, 100, &[((0, 0), (99, 99))], &[], "");
    assert_eq!(rnp_fitness(far.init_state(), &far).unwrap(), 198.0);
    let there = grid("rnp", 4, 4, &[((2, 1), (2, 1))], &[], "");
    assert_eq!(rnp_fitness(there.init_state(), &there).unwrap(), 0.0);
    let both = grid("2rnp", 8, 8, &[((0, 0), (1, 2)), ((7, 7), (4, 5))], &[], "");
    assert_eq!(rnp_fitness(both.init_state(), &both).unwrap(), 8.0);
}

#[test]
fn dispatch_alternates() {
    for p in [1, 3, 5] {
        assert_eq!(two_rnp_dispatch(p), 1);
    }
    for p in [2, 4] {
        assert_eq!(two_rnp_dispatch(p), 0);
    }
    let inst = grid("2rnp", 6, 6, &[((0, 0), (5, 5)), ((5, 0), (0, 5))], &[], "");
    assert_eq!(DispatchCount::from_extra(&inst).unwrap(), DispatchCount::Attempted);
    let tmap = TerminalMap::build(&inst).unwrap();
    let one = evaluate(&Program::parse("(move-north)", inst.domain()).unwrap(), &inst, &tmap).unwrap();
    assert_eq!(pos(&one.final_state, "r1"), (0, 0));
    assert_eq!(pos(&one.final_state, "r2"), (5, 1));
    assert_eq!(one.plan.actions[0].to_string(), "(move-north r2)");
}

#[test]
fn skipped_actions_count_for_attempted_dispatch_only() {
    // position 1 (robot2) fails: south of (5,0) is off the grid
    let attempted = grid("2rnp", 6, 6, &[((0, 0), (5, 5)), ((5, 0), (0, 5))], &[], "");
    let executed = grid("2rnp", 6, 6, &[((0, 0), (5, 5)), ((5, 0), (0, 5))], &[], "dispatch executed");
    let tmap = TerminalMap::build(&attempted).unwrap();
    let p = Program::parse("(seq (move-south) (move-north))", attempted.domain()).unwrap();
    let a = evaluate(&p, &attempted, &tmap).unwrap();
    assert_eq!(pos(&a.final_state, "r1"), (0, 1));
    assert_eq!(pos(&a.final_state, "r2"), (5, 0));
    let e = evaluate(&p, &executed, &tmap).unwrap();
    assert_eq!(pos(&e.final_state, "r1"), (0, 0));
    assert_eq!(pos(&e.final_state, "r2"), (5, 1));
}

#[test]
fn robots_block_each_other() {
    let inst = grid("2rnp", 3, 1, &[((0, 0), (2, 0)), ((1, 0), (0, 0))], &[], "");
    let mut s = inst.init_state().clone();
    assert!(!step(&inst, &mut s, "move-east", 2), "robot1 cannot enter robot2's cell");
    assert!(!step(&inst, &mut s, "push-east", 2), "robots are not pushable");
}

#[test]
fn invalid_grids_rejected() {
    let base = "(instance (domain rnp) (concept-instances (robot (r1))) (init (robot-at r1 0 0) BLOCKS) (goal (robot-at r1 2 2)) (extra grid-w 3 grid-h 3 dest-x 2 dest-y 2))";
    assert!(parse_instance(&base.replace("BLOCKS", "")).is_ok());
    assert!(parse_instance(&base.replace("BLOCKS", "(block 3 0)")).is_err(), "out of bounds");
    assert!(parse_instance(&base.replace("BLOCKS", "(block 0 0)")).is_err(), "shared cell");
    assert!(parse_instance(&base.replace("BLOCKS", "").replace("dest-x 2", "dest-x 1")).is_err(), "goal and extras disagree");
    assert!(parse_instance(&base.replace("BLOCKS", "").replace("(domain rnp)", "(domain 2rnp)")).is_err(), "needs two robots");
}
