//! Ground facts and the world-state database that plans are simulated against.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An interned-by-refcount name. Cheap to clone, compared by content.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl std::borrow::Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A ground value inside a fact: an object name or an integer coordinate.
///
/// Symbols and integers never compare equal, even when `"3"` and `3` print alike.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Atom {
    Int(i64),
    Sym(Symbol),
}

impl Atom {
    pub fn sym(name: &str) -> Self {
        Atom::Sym(Symbol::new(name))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Atom::Int(v) => Some(*v),
            Atom::Sym(_) => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self {
            Atom::Sym(s) => Some(s),
            Atom::Int(_) => None,
        }
    }
}

impl From<i64> for Atom {
    fn from(v: i64) -> Self {
        Atom::Int(v)
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Self {
        Atom::sym(s)
    }
}

impl From<Symbol> for Atom {
    fn from(s: Symbol) -> Self {
        Atom::Sym(s)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Int(v) => write!(f, "{v}"),
            Atom::Sym(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A fully ground predicate application, e.g. `(at o1 l1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: Symbol,
    pub args: Vec<Atom>,
}

impl Fact {
    pub fn new(predicate: impl Into<Symbol>, args: impl IntoIterator<Item = Atom>) -> Self {
        Fact {
            predicate: predicate.into(),
            args: args.into_iter().collect(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Builds a fact from a predicate name and atom-convertible arguments.
#[macro_export]
macro_rules! fact {
    ($pred:expr $(, $arg:expr)* $(,)?) => {
        $crate::fact::Fact::new($pred, vec![$($crate::fact::Atom::from($arg)),*])
    };
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Atom(Atom),
    Var(Symbol),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Symbol::new(name))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(a) => write!(f, "{a}"),
            Term::Var(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<Atom> for Term {
    fn from(a: Atom) -> Self {
        Term::Atom(a)
    }
}

/// A predicate template whose terms may contain variables (`?location`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub predicate: Symbol,
    pub terms: Vec<Term>,
}

impl Pattern {
    pub fn new(predicate: impl Into<Symbol>, terms: impl IntoIterator<Item = Term>) -> Self {
        Pattern {
            predicate: predicate.into(),
            terms: terms.into_iter().collect(),
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Atom(_) => None,
        })
    }

    /// Replaces every occurrence of `var` with `value`. Returns `None` if
    /// other variables remain afterwards.
    pub fn ground(&self, var: &Symbol, value: &Atom) -> Option<Fact> {
        let args = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Atom(a) => Some(a.clone()),
                Term::Var(v) if v == var => Some(value.clone()),
                Term::Var(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Fact {
            predicate: self.predicate.clone(),
            args,
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for t in &self.terms {
            write!(f, " {t}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactError {
    #[error("predicate `{predicate}` expects {expected} argument(s), got {got} in {fact}")]
    Arity {
        predicate: Symbol,
        expected: usize,
        got: usize,
        fact: Fact,
    },
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(Symbol),
    #[error("variable {var} does not occur in pattern {pattern}")]
    VariableNotInPattern { var: Symbol, pattern: Pattern },
    #[error("pattern {pattern} has more than one variable occurrence")]
    AmbiguousPattern { pattern: Pattern },
}

/// Declared predicate arities. A state built with a schema rejects facts
/// whose predicate is unknown or whose argument count is wrong.
pub type Schema = HashMap<Symbol, usize>;

/// The fact database a simulation runs against.
///
/// Facts form a set; iteration follows insertion order of the facts that are
/// still present. Cloning is how each simulation gets a private copy of S0.
#[derive(Clone, Default)]
pub struct WorldState {
    facts: IndexSet<Fact>,
    schema: Option<Arc<Schema>>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_schema(schema: Arc<Schema>) -> Self {
        WorldState {
            facts: IndexSet::new(),
            schema: Some(schema),
        }
    }

    pub fn schema(&self) -> Option<&Arc<Schema>> {
        self.schema.as_ref()
    }

    pub fn check(&self, fact: &Fact) -> Result<(), FactError> {
        let Some(schema) = &self.schema else {
            return Ok(());
        };
        match schema.get(&fact.predicate) {
            None => Err(FactError::UndeclaredPredicate(fact.predicate.clone())),
            Some(&arity) if arity != fact.args.len() => Err(FactError::Arity {
                predicate: fact.predicate.clone(),
                expected: arity,
                got: fact.args.len(),
                fact: fact.clone(),
            }),
            Some(_) => Ok(()),
        }
    }

    /// Inserts `fact`. Returns whether the state changed.
    pub fn add_fact(&mut self, fact: Fact) -> Result<bool, FactError> {
        self.check(&fact)?;
        Ok(self.facts.insert(fact))
    }

    /// Removes `fact` if present; deleting an absent fact is a no-op.
    pub fn delete_fact(&mut self, fact: &Fact) -> bool {
        self.facts.shift_remove(fact)
    }

    pub fn is_fact(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    /// Binds `var` from the first fact (in insertion order) matching `pattern`.
    ///
    /// `pattern` must contain `var` exactly once and no other variable.
    pub fn find_attribute_value(
        &self,
        var: &Symbol,
        pattern: &Pattern,
    ) -> Result<Option<Atom>, FactError> {
        let slot = match pattern.terms.iter().position(|t| matches!(t, Term::Var(v) if v == var)) {
            Some(i) => i,
            None => {
                return Err(FactError::VariableNotInPattern {
                    var: var.clone(),
                    pattern: pattern.clone(),
                })
            }
        };
        if pattern.variables().count() > 1 {
            return Err(FactError::AmbiguousPattern {
                pattern: pattern.clone(),
            });
        }
        let found = self.facts.iter().find(|f| {
            f.predicate == pattern.predicate
                && f.args.len() == pattern.terms.len()
                && f.args.iter().zip(&pattern.terms).enumerate().all(|(i, (a, t))| {
                    i == slot || matches!(t, Term::Atom(b) if a == b)
                })
        });
        Ok(found.map(|f| f.args[slot].clone()))
    }

    /// First fact of `predicate` whose leading arguments equal `prefix`.
    pub fn lookup(&self, predicate: &str, prefix: &[Atom]) -> Option<&Fact> {
        self.facts.iter().find(|f| {
            f.predicate.as_str() == predicate
                && f.args.len() >= prefix.len()
                && f.args[..prefix.len()] == *prefix
        })
    }

    pub fn facts_of<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Fact> + 'a {
        self.facts.iter().filter(move |f| f.predicate.as_str() == predicate)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Facts in sorted order, independent of insertion history.
    pub fn canonical(&self) -> Vec<Fact> {
        let mut v: Vec<Fact> = self.facts.iter().cloned().collect();
        v.sort_unstable();
        v
    }

    /// Set equality, ignoring order.
    pub fn same_facts(&self, other: &WorldState) -> bool {
        self.len() == other.len() && self.facts.iter().all(|f| other.is_fact(f))
    }
}

/// Equality is set equality plus identical iteration order.
impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.facts.len() == other.facts.len() && self.facts.iter().eq(other.facts.iter())
    }
}

impl Eq for WorldState {}

impl fmt::Debug for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.facts.iter()).finish()
    }
}

impl FromIterator<Fact> for WorldState {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        WorldState {
            facts: iter.into_iter().collect(),
            schema: None,
        }
    }
}
