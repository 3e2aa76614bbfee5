//! Synthesized terminal set and the `convert_to` mapping.
//!
//! GP trees are typeless: every node yields a terminal index. Operators turn
//! those indices into typed objects with [`TerminalMap::convert_to`]. The set
//! has LCM(instance counts) terminals and terminal `t` maps to instance
//! `((t - 1) mod k) + 1` of a concept with `k` instances, so every instance of
//! a concept is the image of the same number of terminals.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainError, ProblemInstance};
use crate::fact::{Atom, Symbol};

/// A 1-based terminal index `t_i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Terminal(pub u32);

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

impl fmt::Debug for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Largest terminal set we are willing to synthesize.
pub const MAX_TERMINALS: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct TerminalMap {
    size: u32,
    instances: IndexMap<Symbol, Vec<Atom>>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl TerminalMap {
    pub fn build(instance: &ProblemInstance) -> Result<Self, DomainError> {
        Self::from_instances(instance.concept_instances().clone())
    }

    pub fn from_instances(instances: IndexMap<Symbol, Vec<Atom>>) -> Result<Self, DomainError> {
        let mut size: u64 = 1;
        for (concept, objs) in &instances {
            let k = objs.len() as u64;
            if k == 0 {
                return Err(DomainError::EmptyConcept(concept.clone()));
            }
            size = size / gcd(size, k) * k;
            if size > MAX_TERMINALS {
                return Err(DomainError::TerminalSetTooLarge(size));
            }
        }
        Ok(TerminalMap {
            size: size as u32,
            instances,
        })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn terminals(&self) -> impl Iterator<Item = Terminal> {
        (1..=self.size).map(Terminal)
    }

    pub fn count(&self, concept: &str) -> Option<usize> {
        self.instances.get(concept).map(Vec::len)
    }

    pub fn contains(&self, t: Terminal) -> bool {
        (1..=self.size).contains(&t.0)
    }

    pub fn convert_to(&self, t: Terminal, concept: &str) -> Result<Atom, DomainError> {
        if !self.contains(t) {
            return Err(DomainError::TerminalOutOfRange {
                terminal: t,
                size: self.size,
            });
        }
        let objs = self
            .instances
            .get(concept)
            .ok_or_else(|| DomainError::UnknownConcept(Symbol::new(concept)))?;
        Ok(objs[(t.0 as usize - 1) % objs.len()].clone())
    }
}
