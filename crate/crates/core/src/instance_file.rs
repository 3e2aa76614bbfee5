//! Instance files: one parenthesized `(instance ...)` form.
//!
//! ```text
//! (instance
//!   (domain briefcase)
//!   (concept-instances (object (o1 o2)) (briefcase (b1)) (location (l1 l2 l3)))
//!   (init (at o1 l1) (at o2 l3) (at b1 l1))
//!   (goal (at o1 l2))
//!   (extra))
//! ```
//!
//! Goals may also be quantified: `(for-all object (at ?x l2))` or
//! `(exists object (in ?x b1))`. `extra` holds key/value pairs such as
//! `grid-w 8`.

use std::fmt::Write as _;

use indexmap::IndexMap;
use thiserror::Error;

use crate::domain::{DomainError, Goal, ProblemInstance, Quantifier};
use crate::domains::{builtin, DOMAIN_NAMES};
use crate::fact::{Atom, Fact, Pattern, Symbol, Term};
use crate::sexpr::{self, Pos, Sexp, SyntaxError};

/// The three-location briefcase instance used throughout the docs and tests.
pub const FIG3: &str = "\
(instance
  (domain briefcase)
  (concept-instances (object (o1 o2)) (briefcase (b1)) (location (l1 l2 l3)))
  (init (at o1 l1) (at o2 l3) (at b1 l1))
  (goal (at o1 l2)))
";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: {message} in `{form}`")]
    Form {
        pos: Pos,
        form: String,
        message: String,
    },
    #[error("unknown domain `{0}` (known: {known})", known = DOMAIN_NAMES.join(", "))]
    UnknownDomain(String),
    #[error("invalid instance: {0}")]
    Invalid(#[from] DomainError),
}

fn form_err(e: &Sexp, message: impl Into<String>) -> InstanceError {
    InstanceError::Form {
        pos: e.pos(),
        form: e.to_string(),
        message: message.into(),
    }
}

fn atom(e: &Sexp) -> Result<Atom, InstanceError> {
    match e {
        Sexp::Int(v, _) => Ok(Atom::Int(*v)),
        Sexp::Symbol(s, _) if s.starts_with('?') => Err(form_err(e, "variable where a value is required")),
        Sexp::Symbol(s, _) => Ok(Atom::sym(s)),
        Sexp::List(..) => Err(form_err(e, "expected a symbol or integer")),
    }
}

fn fact(e: &Sexp) -> Result<Fact, InstanceError> {
    let (pred, args) = e.as_form().ok_or_else(|| form_err(e, "expected (predicate args...)"))?;
    Ok(Fact::new(pred, args.iter().map(atom).collect::<Result<Vec<_>, _>>()?))
}

fn pattern(e: &Sexp) -> Result<Pattern, InstanceError> {
    let (pred, args) = e.as_form().ok_or_else(|| form_err(e, "expected (predicate terms...)"))?;
    let terms = args
        .iter()
        .map(|a| match a {
            Sexp::Symbol(s, _) if s.starts_with('?') => Ok(Term::var(s)),
            _ => atom(a).map(Term::Atom),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Pattern::new(pred, terms))
}

fn goal(e: &Sexp) -> Result<Goal, InstanceError> {
    let quantifier = match e.as_form() {
        Some(("for-all", _)) => Quantifier::ForAll,
        Some(("exists", _)) => Quantifier::Exists,
        _ => return fact(e).map(Goal::Ground),
    };
    match e.as_form() {
        Some((_, [concept, template])) => {
            let concept = concept
                .as_symbol()
                .ok_or_else(|| form_err(e, "quantifier needs a concept name"))?;
            let template = pattern(template)?;
            if template.variables().count() != 1 {
                return Err(form_err(e, "template must contain exactly one variable"));
            }
            Ok(Goal::Quantified {
                quantifier,
                concept: Symbol::new(concept),
                template,
            })
        }
        _ => Err(form_err(e, "expected (quantifier concept template)")),
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, InstanceError> {
    let doc = sexpr::parse(text)?;
    let sections = match doc.as_form() {
        Some(("instance", rest)) => rest,
        _ => return Err(form_err(&doc, "expected (instance ...)")),
    };

    let mut seen = Vec::new();
    let mut domain = None;
    let mut concepts = IndexMap::new();
    let mut init = Vec::new();
    let mut goals = Vec::new();
    let mut extra = IndexMap::new();

    for section in sections {
        let (head, body) = section
            .as_form()
            .ok_or_else(|| form_err(section, "expected a (section ...) form"))?;
        if seen.contains(&head) {
            return Err(form_err(section, format!("duplicate `{head}` section")));
        }
        seen.push(head);
        match head {
            "domain" => {
                let [name] = body else {
                    return Err(form_err(section, "expected (domain NAME)"));
                };
                let name = name.as_symbol().ok_or_else(|| form_err(section, "domain name must be a symbol"))?;
                domain = Some(builtin(name).ok_or_else(|| InstanceError::UnknownDomain(name.into()))?);
            }
            "concept-instances" => {
                for entry in body {
                    let (Some(name), Some(objs)) = (
                        entry.as_list().and_then(|l| l.first()).and_then(Sexp::as_symbol),
                        entry.as_list().and_then(|l| l.get(1)).and_then(Sexp::as_list),
                    ) else {
                        return Err(form_err(entry, "expected (concept (instance...))"));
                    };
                    if entry.as_list().map(<[Sexp]>::len) != Some(2) {
                        return Err(form_err(entry, "expected (concept (instance...))"));
                    }
                    let objs = objs.iter().map(atom).collect::<Result<Vec<_>, _>>()?;
                    if concepts.insert(Symbol::new(name), objs).is_some() {
                        return Err(form_err(entry, format!("concept `{name}` listed twice")));
                    }
                }
            }
            "init" => init = body.iter().map(fact).collect::<Result<_, _>>()?,
            "goal" => goals = body.iter().map(goal).collect::<Result<_, _>>()?,
            "extra" => {
                if body.len() % 2 != 0 {
                    return Err(form_err(section, "extra needs KEY VALUE pairs"));
                }
                for pair in body.chunks(2) {
                    let key = pair[0]
                        .as_symbol()
                        .ok_or_else(|| form_err(&pair[0], "extra key must be a symbol"))?;
                    if extra.insert(Symbol::new(key), atom(&pair[1])?).is_some() {
                        return Err(form_err(&pair[0], format!("extra key `{key}` repeated")));
                    }
                }
            }
            other => return Err(form_err(section, format!("unknown section `{other}`"))),
        }
    }
    let domain = domain.ok_or_else(|| form_err(&doc, "missing (domain NAME)"))?;
    Ok(ProblemInstance::new(domain, concepts, init, goals, extra)?)
}

fn list<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// Prints an instance in the form [`parse_instance`] reads back.
pub fn print_instance(instance: &ProblemInstance) -> String {
    let mut out = String::from("(instance\n");
    let _ = writeln!(out, "  (domain {})", instance.domain().name());
    let concepts = instance
        .concept_instances()
        .iter()
        .map(|(c, objs)| format!("({c} ({}))", list(objs)));
    let _ = writeln!(out, "  (concept-instances {})", list(concepts));
    let _ = writeln!(out, "  (init {})", list(instance.init_state().iter()));
    let _ = writeln!(out, "  (goal {})", list(instance.goals()));
    let extra = instance.extra().iter().map(|(k, v)| format!("{k} {v}"));
    let _ = write!(out, "  (extra {}))", list(extra));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terminal::TerminalMap;

    #[test]
    fn reads_the_briefcase_example() {
        let inst = parse_instance(FIG3).unwrap();
        assert_eq!(inst.domain().name().as_str(), "briefcase");
        assert_eq!(inst.init_state().len(), 3);
        assert_eq!(inst.goals().len(), 1);
        assert_eq!(TerminalMap::build(&inst).unwrap().size(), 6);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_instance("(instance\n  (domain briefcase)").unwrap_err();
        assert_eq!(err, InstanceError::Syntax(SyntaxError::Unclosed(Pos { line: 1, col: 1 })));
        assert!(err.to_string().contains("1:1"));
    }

    #[test]
    fn semantic_errors() {
        let undeclared = FIG3.replace("(goal (at o1 l2))", "(goal (at o1 l9))");
        let err = parse_instance(&undeclared).unwrap_err();
        assert!(matches!(
            err,
            InstanceError::Invalid(DomainError::UndeclaredObject { ref object, .. }) if object == &Atom::sym("l9")
        ));
        assert!(err.to_string().contains("(at o1 l9)"));

        let arity = FIG3.replace("(at o2 l3)", "(at o2)");
        assert!(matches!(parse_instance(&arity), Err(InstanceError::Invalid(_))));

        let unknown = FIG3.replace("(domain briefcase)", "(domain chess)");
        assert_eq!(parse_instance(&unknown).unwrap_err(), InstanceError::UnknownDomain("chess".into()));

        let dup = FIG3.replace("(goal (at o1 l2))", "(goal (at o1 l2)) (goal)");
        assert!(matches!(parse_instance(&dup), Err(InstanceError::Form { .. })));

        let var_in_init = FIG3.replace("(at o2 l3)", "(at o2 ?l)");
        assert!(matches!(parse_instance(&var_in_init), Err(InstanceError::Form { .. })));
    }

    #[test]
    fn quantified_goals_round_trip() {
        let text = FIG3.replace(
            "(goal (at o1 l2))",
            "(goal (for-all object (at ?x l2)) (exists object (in ?x b1)))",
        );
        let inst = parse_instance(&text).unwrap();
        let printed = print_instance(&inst);
        assert!(printed.contains("(for-all object (at ?x l2))"));
        assert_eq!(parse_instance(&printed).unwrap(), inst);
    }

    #[test]
    fn grid_round_trip() {
        let text = "(instance (domain rnp) (concept-instances (robot (r1)))
            (init (robot-at r1 0 0) (block 1 1))
            (goal (robot-at r1 2 2))
            (extra grid-w 3 grid-h 3 dest-x 2 dest-y 2))";
        let inst = parse_instance(text).unwrap();
        assert_eq!(parse_instance(&print_instance(&inst)).unwrap(), inst);
        let missing = text.replace("dest-y 2", "");
        assert!(parse_instance(&missing).is_err());
    }
}
