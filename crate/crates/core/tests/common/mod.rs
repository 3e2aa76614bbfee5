#![allow(dead_code)]

use std::path::PathBuf;

use gp_planner::domains::builtin;
use gp_planner::instance_file::{parse_instance, FIG3};
use gp_planner::{Atom, Fact, Goal, Pattern, ProblemInstance, Quantifier, Symbol, Term};
use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel)
}

pub fn load(rel: &str) -> ProblemInstance {
    let text = std::fs::read_to_string(corpus(rel)).unwrap();
    parse_instance(&text).unwrap()
}

pub fn fig3() -> ProblemInstance {
    parse_instance(FIG3).unwrap()
}

fn names(prefix: &str, n: usize) -> Vec<Atom> {
    (1..=n).map(|i| Atom::sym(&format!("{prefix}{i}"))).collect()
}

fn at(x: &Atom, l: &Atom) -> Fact {
    Fact::new("at", [x.clone(), l.clone()])
}

fn inside(o: &Atom, b: &Atom) -> Fact {
    Fact::new("in", [o.clone(), b.clone()])
}

/// A random valid briefcase instance with ground and quantified goals.
pub fn random_bp<R: Rng>(rng: &mut R, max_objects: usize, max_locations: usize, max_briefcases: usize, quantified: bool) -> ProblemInstance {
    let objects = names("o", rng.gen_range(1..=max_objects));
    let locations = names("l", rng.gen_range(2..=max_locations));
    let briefcases = names("b", rng.gen_range(1..=max_briefcases));
    let mut init = Vec::new();
    let mut bc_loc = Vec::new();
    for b in &briefcases {
        let l = locations.choose(rng).unwrap().clone();
        init.push(at(b, &l));
        bc_loc.push(l);
    }
    for o in &objects {
        if rng.gen_bool(0.3) {
            let i = rng.gen_range(0..briefcases.len());
            init.push(at(o, &bc_loc[i]));
            init.push(inside(o, &briefcases[i]));
        } else {
            init.push(at(o, locations.choose(rng).unwrap()));
        }
    }
    let mut goals = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let o = objects.choose(rng).unwrap();
        let g = match rng.gen_range(0..4) {
            0 if quantified => Goal::Quantified {
                quantifier: Quantifier::ForAll,
                concept: Symbol::new("object"),
                template: Pattern::new("at", [Term::var("?x"), Term::Atom(locations.choose(rng).unwrap().clone())]),
            },
            1 if quantified => Goal::Quantified {
                quantifier: Quantifier::Exists,
                concept: Symbol::new("object"),
                template: Pattern::new("in", [Term::var("?x"), Term::Atom(briefcases.choose(rng).unwrap().clone())]),
            },
            2 => Goal::Ground(inside(o, briefcases.choose(rng).unwrap())),
            _ => Goal::Ground(at(o, locations.choose(rng).unwrap())),
        };
        goals.push(g);
    }
    let concepts: IndexMap<Symbol, Vec<Atom>> = [
        (Symbol::new("object"), objects),
        (Symbol::new("briefcase"), briefcases),
        (Symbol::new("location"), locations),
    ]
    .into_iter()
    .collect();
    ProblemInstance::new(builtin("briefcase").unwrap(), concepts, init, goals, IndexMap::new()).unwrap()
}

/// A random single- or two-robot grid with `blocks` obstacles.
pub fn random_grid<R: Rng>(rng: &mut R, w: i64, h: i64, robots: usize, blocks: usize, dispatch: Option<&str>) -> ProblemInstance {
    let mut cells: Vec<(i64, i64)> = (0..w).flat_map(|x| (0..h).map(move |y| (x, y))).collect();
    cells.shuffle(rng);
    let robot_names = names("r", robots);
    let mut init = Vec::new();
    let mut goals = Vec::new();
    let mut extra: IndexMap<Symbol, Atom> = IndexMap::new();
    extra.insert(Symbol::new("grid-w"), Atom::Int(w));
    extra.insert(Symbol::new("grid-h"), Atom::Int(h));
    for (i, r) in robot_names.iter().enumerate() {
        let (x, y) = cells.pop().unwrap();
        init.push(Fact::new("robot-at", [r.clone(), Atom::Int(x), Atom::Int(y)]));
        let (dx, dy) = (rng.gen_range(0..w), rng.gen_range(0..h));
        goals.push(Goal::Ground(Fact::new("robot-at", [r.clone(), Atom::Int(dx), Atom::Int(dy)])));
        let p = if i == 0 { "dest".to_string() } else { format!("dest{}", i + 1) };
        extra.insert(Symbol::new(&format!("{p}-x")), Atom::Int(dx));
        extra.insert(Symbol::new(&format!("{p}-y")), Atom::Int(dy));
    }
    for _ in 0..blocks.min(cells.len()) {
        let (x, y) = cells.pop().unwrap();
        init.push(Fact::new("block", [Atom::Int(x), Atom::Int(y)]));
    }
    if let Some(d) = dispatch {
        extra.insert(Symbol::new("dispatch"), Atom::sym(d));
    }
    let domain = builtin(if robots == 1 { "rnp" } else { "2rnp" }).unwrap();
    let concepts = [(Symbol::new("robot"), robot_names)].into_iter().collect();
    ProblemInstance::new(domain, concepts, init, goals, extra).unwrap()
}
