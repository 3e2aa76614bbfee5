//! The briefcase domain: move objects between locations by carrying them
//! in briefcases.

use crate::domain::{
    unsatisfied_goals_evaluator, Application, Domain, DomainError, OpContext, ProblemInstance,
    Value,
};
use crate::fact::{Atom, Fact, Pattern, Symbol, Term, WorldState};
use crate::terminal::Terminal;

fn attribute(state: &WorldState, predicate: &str, subject: &Atom, var: &str) -> Result<Value, DomainError> {
    let var = Symbol::new(var);
    let pat = Pattern::new(predicate, [Term::Atom(subject.clone()), Term::Var(var.clone())]);
    Ok(state.find_attribute_value(&var, &pat)?.into())
}

fn get_location(ctx: &OpContext<'_>, x: &Atom) -> Result<Option<Atom>, DomainError> {
    Ok(ctx.query("get-location", std::slice::from_ref(x))?.into_atom())
}

fn get_briefcase(ctx: &OpContext<'_>, x: &Atom) -> Result<Option<Atom>, DomainError> {
    Ok(ctx.query("get-briefcase", std::slice::from_ref(x))?.into_atom())
}

/// `(put-in object briefcase)`: when both are at the same location and the
/// object is not already in a different briefcase, adds `(in object briefcase)`.
pub fn put_in(ctx: &mut OpContext<'_>, args: &[Terminal]) -> Result<Application, DomainError> {
    let object = ctx.convert_to(args[0], "object")?;
    let briefcase = ctx.convert_to(args[1], "briefcase")?;
    let here = get_location(ctx, &object)?;
    let ok = here.is_some()
        && here == get_location(ctx, &briefcase)?
        && get_briefcase(ctx, &object)?.is_none_or(|b| b == briefcase);
    if ok {
        ctx.state.add_fact(fact_in(&object, &briefcase))?;
    }
    Ok(Application::new(vec![object, briefcase], ok))
}

/// `(take-out object)`: removes the object from the briefcase holding it.
pub fn take_out(ctx: &mut OpContext<'_>, args: &[Terminal]) -> Result<Application, DomainError> {
    let object = ctx.convert_to(args[0], "object")?;
    let holder = get_briefcase(ctx, &object)?;
    let ok = match &holder {
        Some(b) => ctx.state.delete_fact(&fact_in(&object, b)),
        None => false,
    };
    Ok(Application::new(vec![object], ok))
}

/// `(move-briefcase briefcase location)`: moves the briefcase together with
/// everything in it, unless it is already there.
pub fn move_briefcase(
    ctx: &mut OpContext<'_>,
    args: &[Terminal],
) -> Result<Application, DomainError> {
    let briefcase = ctx.convert_to(args[0], "briefcase")?;
    let to = ctx.convert_to(args[1], "location")?;
    let ok = !ctx.state.is_fact(&fact_at(&briefcase, &to));
    if ok {
        ctx.for_all("object", "do-move", &[briefcase.clone(), to.clone()])?;
        if let Some(from) = get_location(ctx, &briefcase)? {
            ctx.state.delete_fact(&fact_at(&briefcase, &from));
        }
        ctx.state.add_fact(fact_at(&briefcase, &to))?;
    }
    Ok(Application::new(vec![briefcase, to], ok))
}

fn fact_at(x: &Atom, loc: &Atom) -> Fact {
    Fact::new("at", [x.clone(), loc.clone()])
}

fn fact_in(x: &Atom, b: &Atom) -> Fact {
    Fact::new("in", [x.clone(), b.clone()])
}

/// `(do-move obj briefcase to)`: relocates `obj` if it is inside `briefcase`.
fn do_move(state: &mut WorldState, args: &[Atom]) -> Result<(), DomainError> {
    let [obj, br, to] = args else {
        return Err(DomainError::InvalidInstance("do-move takes 3 arguments".into()));
    };
    if state.is_fact(&fact_in(obj, br)) {
        if let Some(from) = attribute(state, "at", obj, "?location")?.into_atom() {
            state.delete_fact(&fact_at(obj, &from));
        }
        state.add_fact(fact_at(obj, to))?;
    }
    Ok(())
}

/// Every object and briefcase sits at exactly one location, and every object
/// is in at most one briefcase, co-located with it.
fn validate(instance: &ProblemInstance) -> Result<(), DomainError> {
    let state = instance.init_state();
    let bad = |msg: String| Err(DomainError::InvalidInstance(msg));
    let locations = instance.instances_of("location")?;
    let briefcases = instance.instances_of("briefcase")?;
    let objects = instance.instances_of("object")?;
    for f in state.facts_of("at") {
        if !locations.contains(&f.args[1]) || locations.contains(&f.args[0]) {
            return bad(format!("{f} must place an object or briefcase at a location"));
        }
    }
    for f in state.facts_of("in") {
        if !objects.contains(&f.args[0]) || !briefcases.contains(&f.args[1]) {
            return bad(format!("{f} must put an object in a briefcase"));
        }
    }
    for x in objects.iter().chain(briefcases) {
        let n = state.facts_of("at").filter(|f| &f.args[0] == x).count();
        if n != 1 {
            return bad(format!("{x} has {n} locations"));
        }
    }
    for o in objects {
        let holders: Vec<_> = state.facts_of("in").filter(|f| &f.args[0] == o).collect();
        if holders.len() > 1 {
            return bad(format!("{o} is in {} briefcases", holders.len()));
        }
        if let Some(f) = holders.first() {
            let loc = |x: &Atom| attribute(state, "at", x, "?location");
            if loc(o)? != loc(&f.args[1])? {
                return bad(format!("{o} is in {} but not at its location", f.args[1]));
            }
        }
    }
    Ok(())
}

pub fn domain() -> Domain {
    Domain::builder("briefcase")
        .concept("object")
        .concept("briefcase")
        .concept("location")
        .predicate("in", 2, unsatisfied_goals_evaluator())
        .predicate("at", 2, unsatisfied_goals_evaluator())
        .operator("move-briefcase", 2, move_briefcase)
        .operator("take-out", 1, take_out)
        .operator("put-in", 2, put_in)
        .effect("do-move", do_move)
        .query("get-location", |s, args| attribute(s, "at", &args[0], "?location"))
        .query("get-briefcase", |s, args| attribute(s, "in", &args[0], "?briefcase"))
        .validator(validate)
        .build()
        .expect("briefcase domain is well-formed")
}
