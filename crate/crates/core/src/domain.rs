//! Planning domains and problem instances.
//!
//! A [`Domain`] is a set of host-code plugins: concepts, predicates with
//! weighted fitness evaluators, procedural operators, and auxiliary
//! procedures. Operators read and write a [`WorldState`] through an
//! [`OpContext`] and report the ground action they attempted.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::fact::{Atom, Fact, FactError, Pattern, Schema, Symbol, Term, WorldState};
use crate::terminal::{Terminal, TerminalMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error(transparent)]
    Fact(#[from] FactError),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: Symbol },
    #[error("unknown concept `{0}`")]
    UnknownConcept(Symbol),
    #[error("concept `{0}` has no instances")]
    EmptyConcept(Symbol),
    #[error("object `{0}` is declared more than once")]
    DuplicateObject(Atom),
    #[error("undeclared object `{object}` in {context}")]
    UndeclaredObject { object: Atom, context: String },
    #[error("unknown auxiliary `{0}`")]
    UnknownAuxiliary(Symbol),
    #[error("auxiliary `{0}` mutates state and cannot be used with exists")]
    ImpureExists(Symbol),
    #[error("auxiliary `{0}` is a query and cannot be called for effect")]
    NotAnEffect(Symbol),
    #[error("unknown operator `{0}`")]
    UnknownOperator(Symbol),
    #[error("domain declares no predicates")]
    NoPredicates,
    #[error("quantified goal template {0} must contain exactly one variable")]
    BadTemplate(Pattern),
    #[error("fitness evaluator for `{predicate}` returned {value}")]
    BadFitness { predicate: Symbol, value: f64 },
    #[error("terminal {terminal} out of range 1..={size}")]
    TerminalOutOfRange { terminal: Terminal, size: u32 },
    #[error("terminal set of size {0} is too large")]
    TerminalSetTooLarge(u64),
    #[error("operator `{name}` expects {expected} argument(s), got {got}")]
    OperatorArity {
        name: Symbol,
        expected: usize,
        got: usize,
    },
    #[error("domain has neither terminals nor arity-0 operators to use as leaves")]
    NoLeaves,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Result of an auxiliary query.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Nil,
    Bool(bool),
    Atom(Atom),
}

impl Value {
    pub fn truthy(&self) -> bool {
        !matches!(self, Value::Nil | Value::Bool(false))
    }

    pub fn into_atom(self) -> Option<Atom> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }
}

impl From<Option<Atom>> for Value {
    fn from(a: Option<Atom>) -> Self {
        a.map_or(Value::Nil, Value::Atom)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

pub type EffectFn = dyn Fn(&mut WorldState, &[Atom]) -> Result<(), DomainError> + Send + Sync;
pub type QueryFn = dyn Fn(&WorldState, &[Atom]) -> Result<Value, DomainError> + Send + Sync;

/// A named helper procedure callable from operator bodies and quantifiers.
///
/// Queries cannot mutate state, which is what `exists` requires.
#[derive(Clone)]
pub enum Auxiliary {
    Effect(Arc<EffectFn>),
    Query(Arc<QueryFn>),
}

impl fmt::Debug for Auxiliary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auxiliary::Effect(_) => f.write_str("Auxiliary::Effect"),
            Auxiliary::Query(_) => f.write_str("Auxiliary::Query"),
        }
    }
}

pub type EvaluatorFn = dyn Fn(&WorldState, &[GoalItem], &ProblemInstance) -> Result<f64, DomainError>
    + Send
    + Sync;

#[derive(Clone)]
pub struct PredicateDef {
    pub name: Symbol,
    pub arity: usize,
    pub weight: f64,
    pub evaluator: Arc<EvaluatorFn>,
}

impl fmt::Debug for PredicateDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateDef")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("weight", &self.weight)
            .finish_non_exhaustive()
    }
}

/// Evaluator that counts unsatisfied goals.
pub fn unsatisfied_goals_evaluator() -> Arc<EvaluatorFn> {
    Arc::new(|state, goals, _| Ok(number_of_unsatisfied_goals(state, goals) as f64))
}

/// What an operator attempted: its fully instantiated arguments and whether
/// the preconditions held.
#[derive(Clone, Debug, PartialEq)]
pub struct Application {
    pub args: Vec<Atom>,
    pub executed: bool,
}

impl Application {
    pub fn new(args: Vec<Atom>, executed: bool) -> Self {
        Application { args, executed }
    }
}

pub type OpBody =
    dyn Fn(&mut OpContext<'_>, &[Terminal]) -> Result<Application, DomainError> + Send + Sync;

/// A planning operator. Arity 0 operators are GP terminals; the rest are GP
/// functions. The body must leave the state untouched when it reports
/// `executed: false`.
#[derive(Clone)]
pub struct OperatorDef {
    pub name: Symbol,
    pub arity: usize,
    pub body: Arc<OpBody>,
}

impl fmt::Debug for OperatorDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorDef({}/{})", self.name, self.arity)
    }
}

pub type InstanceValidator = dyn Fn(&ProblemInstance) -> Result<(), DomainError> + Send + Sync;

pub struct Domain {
    name: Symbol,
    concepts: Vec<Symbol>,
    predicates: Vec<PredicateDef>,
    operators: Vec<OperatorDef>,
    auxiliaries: IndexMap<Symbol, Auxiliary>,
    schema: Arc<Schema>,
    validator: Option<Arc<InstanceValidator>>,
    step_period: usize,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("name", &self.name)
            .field("concepts", &self.concepts)
            .field("predicates", &self.predicates)
            .field("operators", &self.operators)
            .finish_non_exhaustive()
    }
}

impl Domain {
    pub fn builder(name: &str) -> DomainBuilder {
        DomainBuilder {
            name: Symbol::new(name),
            concepts: Vec::new(),
            predicates: Vec::new(),
            operators: Vec::new(),
            auxiliaries: IndexMap::new(),
            validator: None,
            step_period: 1,
        }
    }

    pub fn name(&self) -> &Symbol {
        &self.name
    }

    pub fn concepts(&self) -> &[Symbol] {
        &self.concepts
    }

    pub fn predicates(&self) -> &[PredicateDef] {
        &self.predicates
    }

    pub fn operators(&self) -> &[OperatorDef] {
        &self.operators
    }

    pub fn operator(&self, name: &str) -> Option<(usize, &OperatorDef)> {
        self.operators
            .iter()
            .enumerate()
            .find(|(_, op)| op.name.as_str() == name)
    }

    pub fn auxiliary(&self, name: &str) -> Result<&Auxiliary, DomainError> {
        self.auxiliaries
            .get(name)
            .ok_or_else(|| DomainError::UnknownAuxiliary(Symbol::new(name)))
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    /// Operators whose ground arguments depend on the plan position repeat
    /// with this period (2 for even/odd robot alternation, otherwise 1).
    pub fn step_period(&self) -> usize {
        self.step_period
    }

    /// True when no operator takes arguments, so trees need an explicit
    /// sequencing node to express more than one action.
    pub fn all_operators_nullary(&self) -> bool {
        self.operators.iter().all(|op| op.arity == 0)
    }
}

pub struct DomainBuilder {
    name: Symbol,
    concepts: Vec<Symbol>,
    predicates: Vec<PredicateDef>,
    operators: Vec<OperatorDef>,
    auxiliaries: IndexMap<Symbol, Auxiliary>,
    validator: Option<Arc<InstanceValidator>>,
    step_period: usize,
}

impl DomainBuilder {
    pub fn concept(mut self, name: &str) -> Self {
        self.concepts.push(Symbol::new(name));
        self
    }

    pub fn predicate(self, name: &str, arity: usize, evaluator: Arc<EvaluatorFn>) -> Self {
        self.weighted_predicate(name, arity, 1.0, evaluator)
    }

    pub fn weighted_predicate(
        mut self,
        name: &str,
        arity: usize,
        weight: f64,
        evaluator: Arc<EvaluatorFn>,
    ) -> Self {
        self.predicates.push(PredicateDef {
            name: Symbol::new(name),
            arity,
            weight,
            evaluator,
        });
        self
    }

    pub fn operator<F>(mut self, name: &str, arity: usize, body: F) -> Self
    where
        F: Fn(&mut OpContext<'_>, &[Terminal]) -> Result<Application, DomainError>
            + Send
            + Sync
            + 'static,
    {
        self.operators.push(OperatorDef {
            name: Symbol::new(name),
            arity,
            body: Arc::new(body),
        });
        self
    }

    pub fn effect<F>(mut self, name: &str, f: F) -> Self
    where
        F: Fn(&mut WorldState, &[Atom]) -> Result<(), DomainError> + Send + Sync + 'static,
    {
        self.auxiliaries
            .insert(Symbol::new(name), Auxiliary::Effect(Arc::new(f)));
        self
    }

    pub fn query<F>(mut self, name: &str, f: F) -> Self
    where
        F: Fn(&WorldState, &[Atom]) -> Result<Value, DomainError> + Send + Sync + 'static,
    {
        self.auxiliaries
            .insert(Symbol::new(name), Auxiliary::Query(Arc::new(f)));
        self
    }

    pub fn validator<F>(mut self, f: F) -> Self
    where
        F: Fn(&ProblemInstance) -> Result<(), DomainError> + Send + Sync + 'static,
    {
        self.validator = Some(Arc::new(f));
        self
    }

    pub fn step_period(mut self, period: usize) -> Self {
        self.step_period = period.max(1);
        self
    }

    pub fn build(self) -> Result<Domain, DomainError> {
        if self.predicates.is_empty() {
            return Err(DomainError::NoPredicates);
        }
        check_unique("concept", self.concepts.iter())?;
        check_unique("predicate", self.predicates.iter().map(|p| &p.name))?;
        check_unique("operator", self.operators.iter().map(|o| &o.name))?;
        for p in &self.predicates {
            if !(p.weight >= 0.0 && p.weight.is_finite()) {
                return Err(DomainError::BadFitness {
                    predicate: p.name.clone(),
                    value: p.weight,
                });
            }
        }
        let schema = self
            .predicates
            .iter()
            .map(|p| (p.name.clone(), p.arity))
            .collect();
        Ok(Domain {
            name: self.name,
            concepts: self.concepts,
            predicates: self.predicates,
            operators: self.operators,
            auxiliaries: self.auxiliaries,
            schema: Arc::new(schema),
            validator: self.validator,
            step_period: self.step_period,
        })
    }
}

fn check_unique<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a Symbol>,
) -> Result<(), DomainError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(DomainError::Duplicate {
                kind,
                name: n.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    ForAll,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::ForAll => "for-all",
            Quantifier::Exists => "exists",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Goal {
    Ground(Fact),
    Quantified {
        quantifier: Quantifier,
        concept: Symbol,
        template: Pattern,
    },
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Ground(fact) => write!(f, "{fact}"),
            Goal::Quantified {
                quantifier,
                concept,
                template,
            } => write!(f, "({} {concept} {template})", quantifier.keyword()),
        }
    }
}

/// One unit of goal: a ground fact, or a group satisfied by any member.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GoalItem {
    Fact(Fact),
    AnyOf(Vec<Fact>),
}

impl GoalItem {
    pub fn is_satisfied(&self, state: &WorldState) -> bool {
        match self {
            GoalItem::Fact(f) => state.is_fact(f),
            GoalItem::AnyOf(fs) => fs.iter().any(|f| state.is_fact(f)),
        }
    }
}

/// Expanded goals grouped by predicate, one entry per domain predicate in
/// declaration order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GoalSet {
    groups: IndexMap<Symbol, Vec<GoalItem>>,
}

impl GoalSet {
    pub fn relevant(&self, predicate: &str) -> &[GoalItem] {
        self.groups.get(predicate).map_or(&[], Vec::as_slice)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&Symbol, &[GoalItem])> {
        self.groups.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn items(&self) -> impl Iterator<Item = &GoalItem> {
        self.groups.values().flatten()
    }

    pub fn all_satisfied(&self, state: &WorldState) -> bool {
        self.items().all(|g| g.is_satisfied(state))
    }
}

/// Number of goal items not holding in `state`; an exists-group counts once.
pub fn number_of_unsatisfied_goals(state: &WorldState, goals: &[GoalItem]) -> usize {
    goals.iter().filter(|g| !g.is_satisfied(state)).count()
}

fn expand_goals_in(
    domain: &Domain,
    concepts: &IndexMap<Symbol, Vec<Atom>>,
    goals: &[Goal],
) -> Result<GoalSet, DomainError> {
    let mut groups: IndexMap<Symbol, Vec<GoalItem>> = domain
        .predicates
        .iter()
        .map(|p| (p.name.clone(), Vec::new()))
        .collect();
    for goal in goals {
        let (predicate, item) = match goal {
            Goal::Ground(fact) => (fact.predicate.clone(), GoalItem::Fact(fact.clone())),
            Goal::Quantified {
                quantifier,
                concept,
                template,
            } => {
                let objs = concepts
                    .get(concept)
                    .ok_or_else(|| DomainError::UnknownConcept(concept.clone()))?;
                let mut vars = template.variables();
                let (Some(var), None) = (vars.next(), vars.next()) else {
                    return Err(DomainError::BadTemplate(template.clone()));
                };
                let facts: Vec<Fact> = objs
                    .iter()
                    .map(|o| template.ground(var, o).expect("single-variable template"))
                    .collect();
                match quantifier {
                    Quantifier::ForAll => {
                        let g = groups.entry(template.predicate.clone()).or_default();
                        g.extend(facts.into_iter().map(GoalItem::Fact));
                        continue;
                    }
                    Quantifier::Exists => (template.predicate.clone(), GoalItem::AnyOf(facts)),
                }
            }
        };
        groups.entry(predicate).or_default().push(item);
    }
    Ok(GoalSet { groups })
}

/// Expands quantified goals over the instance's concept instances.
pub fn expand_goals(goals: &[Goal], instance: &ProblemInstance) -> Result<GoalSet, DomainError> {
    expand_goals_in(&instance.domain, &instance.concept_instances, goals)
}

/// A concrete problem: concept instances, initial state S0, and goals.
#[derive(Clone)]
pub struct ProblemInstance {
    domain: Arc<Domain>,
    concept_instances: IndexMap<Symbol, Vec<Atom>>,
    init_state: WorldState,
    goals: Vec<Goal>,
    extra: IndexMap<Symbol, Atom>,
    expanded: GoalSet,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("domain", &self.domain.name)
            .field("concept_instances", &self.concept_instances)
            .field("init_state", &self.init_state)
            .field("goals", &self.goals)
            .field("extra", &self.extra)
            .finish()
    }
}

/// Structural equality; domains compare by name.
impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.domain.name == other.domain.name
            && self.concept_instances == other.concept_instances
            && self.init_state == other.init_state
            && self.goals == other.goals
            && self.extra == other.extra
    }
}

impl ProblemInstance {
    pub fn new(
        domain: Arc<Domain>,
        concept_instances: IndexMap<Symbol, Vec<Atom>>,
        init: Vec<Fact>,
        goals: Vec<Goal>,
        extra: IndexMap<Symbol, Atom>,
    ) -> Result<Self, DomainError> {
        let mut objects = HashMap::new();
        for concept in domain.concepts() {
            let objs = concept_instances
                .get(concept)
                .ok_or_else(|| DomainError::EmptyConcept(concept.clone()))?;
            if objs.is_empty() {
                return Err(DomainError::EmptyConcept(concept.clone()));
            }
        }
        for (concept, objs) in &concept_instances {
            if !domain.concepts.contains(concept) {
                return Err(DomainError::UnknownConcept(concept.clone()));
            }
            for o in objs {
                if objects.insert(o.clone(), concept.clone()).is_some() {
                    return Err(DomainError::DuplicateObject(o.clone()));
                }
            }
        }
        let declared = |atom: &Atom, context: &dyn fmt::Display| match atom {
            Atom::Sym(_) if !objects.contains_key(atom) => Err(DomainError::UndeclaredObject {
                object: atom.clone(),
                context: context.to_string(),
            }),
            _ => Ok(()),
        };

        let mut init_state = WorldState::with_schema(domain.schema.clone());
        for fact in init {
            for a in &fact.args {
                declared(a, &fact)?;
            }
            init_state.add_fact(fact)?;
        }
        for goal in &goals {
            match goal {
                Goal::Ground(fact) => {
                    init_state.check(fact)?;
                    for a in &fact.args {
                        declared(a, goal)?;
                    }
                }
                Goal::Quantified { template, .. } => {
                    if domain.schema.get(&template.predicate) != Some(&template.terms.len()) {
                        return Err(DomainError::BadTemplate(template.clone()));
                    }
                    for t in &template.terms {
                        if let Term::Atom(a) = t {
                            declared(a, goal)?;
                        }
                    }
                }
            }
        }
        let expanded = expand_goals_in(&domain, &concept_instances, &goals)?;
        let instance = ProblemInstance {
            domain,
            concept_instances,
            init_state,
            goals,
            extra,
            expanded,
        };
        if let Some(validate) = &instance.domain.validator {
            validate(&instance)?;
        }
        Ok(instance)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn concept_instances(&self) -> &IndexMap<Symbol, Vec<Atom>> {
        &self.concept_instances
    }

    pub fn instances_of(&self, concept: &str) -> Result<&[Atom], DomainError> {
        self.concept_instances
            .get(concept)
            .map(Vec::as_slice)
            .ok_or_else(|| DomainError::UnknownConcept(Symbol::new(concept)))
    }

    pub fn init_state(&self) -> &WorldState {
        &self.init_state
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn expanded_goals(&self) -> &GoalSet {
        &self.expanded
    }

    pub fn extra(&self) -> &IndexMap<Symbol, Atom> {
        &self.extra
    }

    pub fn extra_int(&self, key: &str) -> Result<i64, DomainError> {
        self.extra
            .get(key)
            .and_then(Atom::as_int)
            .ok_or_else(|| DomainError::InvalidInstance(format!("missing integer extra `{key}`")))
    }
}

/// Invokes `aux` once per instance of `concept`, in declaration order, with
/// arguments `(instance, extra_args...)`.
pub fn for_all(
    concept: &str,
    aux: &str,
    extra_args: &[Atom],
    state: &mut WorldState,
    instance: &ProblemInstance,
) -> Result<(), DomainError> {
    let f = instance.domain.auxiliary(aux)?.clone();
    let mut args = Vec::with_capacity(extra_args.len() + 1);
    for obj in instance.instances_of(concept)? {
        args.clear();
        args.push(obj.clone());
        args.extend_from_slice(extra_args);
        match &f {
            Auxiliary::Effect(e) => e(state, &args)?,
            Auxiliary::Query(q) => {
                q(state, &args)?;
            }
        }
    }
    Ok(())
}

/// True iff the (pure) query `aux` holds for some instance of `concept`.
/// Stops at the first instance that satisfies it.
pub fn exists(
    concept: &str,
    aux: &str,
    extra_args: &[Atom],
    state: &WorldState,
    instance: &ProblemInstance,
) -> Result<bool, DomainError> {
    let Auxiliary::Query(q) = instance.domain.auxiliary(aux)? else {
        return Err(DomainError::ImpureExists(Symbol::new(aux)));
    };
    let mut args = Vec::with_capacity(extra_args.len() + 1);
    for obj in instance.instances_of(concept)? {
        args.clear();
        args.push(obj.clone());
        args.extend_from_slice(extra_args);
        if q(state, &args)?.truthy() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// What an operator body sees while it runs.
pub struct OpContext<'a> {
    pub state: &'a mut WorldState,
    pub instance: &'a ProblemInstance,
    pub tmap: &'a TerminalMap,
    /// 1-based position of this action in the trace, counting every attempt.
    pub position: usize,
    /// Number of actions executed before this one.
    pub executed_before: usize,
}

impl OpContext<'_> {
    pub fn convert_to(&self, t: Terminal, concept: &str) -> Result<Atom, DomainError> {
        self.tmap.convert_to(t, concept)
    }

    pub fn query(&self, aux: &str, args: &[Atom]) -> Result<Value, DomainError> {
        match self.instance.domain.auxiliary(aux)? {
            Auxiliary::Query(q) => q(self.state, args),
            Auxiliary::Effect(_) => Err(DomainError::ImpureExists(Symbol::new(aux))),
        }
    }

    pub fn perform(&mut self, aux: &str, args: &[Atom]) -> Result<(), DomainError> {
        match self.instance.domain.auxiliary(aux)? {
            Auxiliary::Effect(e) => e(self.state, args),
            Auxiliary::Query(_) => Err(DomainError::NotAnEffect(Symbol::new(aux))),
        }
    }

    pub fn for_all(&mut self, concept: &str, aux: &str, extra: &[Atom]) -> Result<(), DomainError> {
        for_all(concept, aux, extra, self.state, self.instance)
    }

    pub fn exists(&self, concept: &str, aux: &str, extra: &[Atom]) -> Result<bool, DomainError> {
        exists(concept, aux, extra, self.state, self.instance)
    }
}
