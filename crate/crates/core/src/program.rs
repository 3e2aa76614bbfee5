//! GP trees stored as prefix-ordered node vectors.

use std::fmt;

use thiserror::Error;

use crate::domain::Domain;
use crate::sexpr::{self, Sexp, SyntaxError};
use crate::terminal::{Terminal, TerminalMap};

/// Name of the sequencing combinator injected for all-nullary domains.
pub const SEQ: &str = "seq";
pub const SEQ_MIN_ARITY: usize = 2;
pub const SEQ_MAX_ARITY: usize = 4;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    /// A synthesized terminal from the terminal map.
    Terminal(Terminal),
    /// A domain operator, by index into [`Domain::operators`].
    Op { index: u16, arity: u8 },
    /// Runs its children left to right and yields the last child's value.
    Seq(u8),
}

impl Node {
    pub fn arity(&self) -> usize {
        match *self {
            Node::Terminal(_) => 0,
            Node::Op { arity, .. } | Node::Seq(arity) => arity as usize,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Program {
    nodes: Vec<Node>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: String,
        got: usize,
    },
    #[error("terminal {0} is outside the terminal map")]
    BadTerminal(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

impl Program {
    /// Wraps a prefix-ordered node list, checking that arities line up.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, ProgramError> {
        let mut open: usize = 1;
        for (i, n) in nodes.iter().enumerate() {
            if open == 0 {
                return Err(ProgramError::Malformed(format!("trailing node at {i}")));
            }
            open = open - 1 + n.arity();
        }
        if open != 0 || nodes.is_empty() {
            return Err(ProgramError::Malformed("incomplete tree".into()));
        }
        Ok(Program { nodes })
    }

    pub fn leaf(node: Node) -> Self {
        debug_assert_eq!(node.arity(), 0);
        Program { nodes: vec![node] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    pub fn subtree(&self, start: usize) -> &[Node] {
        &self.nodes[start..self.subtree_end(start)]
    }

    /// A copy of this program with the subtree at `at` replaced by `with`.
    pub fn replace_subtree(&self, at: usize, with: &[Node]) -> Program {
        let end = self.subtree_end(at);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - at) + with.len());
        nodes.extend_from_slice(&self.nodes[..at]);
        nodes.extend_from_slice(with);
        nodes.extend_from_slice(&self.nodes[end..]);
        Program { nodes }
    }

    /// Depth of every node (root = 1), in prefix order.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        // remaining child slots for each open ancestor
        let mut stack: Vec<usize> = Vec::new();
        for n in &self.nodes {
            depths.push(stack.len() + 1);
            if let Some(top) = stack.last_mut() {
                *top -= 1;
            }
            if n.arity() > 0 {
                stack.push(n.arity());
            }
            while stack.last() == Some(&0) {
                stack.pop();
            }
        }
        depths
    }

    /// Depth of the tree; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    pub fn within(&self, max_depth: usize, max_size: usize) -> bool {
        self.len() <= max_size && self.depth() <= max_depth
    }

    /// Checks operator indices, arities and terminal ranges against a domain.
    pub fn validate(&self, domain: &Domain, tmap: &TerminalMap) -> Result<(), ProgramError> {
        for n in &self.nodes {
            match *n {
                Node::Terminal(t) if !tmap.contains(t) => {
                    return Err(ProgramError::BadTerminal(t.to_string()))
                }
                Node::Op { index, arity } => {
                    let op = domain
                        .operators()
                        .get(index as usize)
                        .ok_or_else(|| ProgramError::UnknownOperator(format!("#{index}")))?;
                    if op.arity != arity as usize {
                        return Err(ProgramError::Arity {
                            name: op.name.to_string(),
                            expected: op.arity.to_string(),
                            got: arity as usize,
                        });
                    }
                }
                Node::Seq(a) if !(SEQ_MIN_ARITY..=SEQ_MAX_ARITY).contains(&(a as usize)) => {
                    return Err(ProgramError::Arity {
                        name: SEQ.into(),
                        expected: format!("{SEQ_MIN_ARITY}..={SEQ_MAX_ARITY}"),
                        got: a as usize,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Reads the listing notation, e.g. `(take-out (put-in (t1) (t2)))`.
    /// Terminals may be written `t1` or `(t1)`.
    pub fn parse(text: &str, domain: &Domain) -> Result<Program, ProgramError> {
        let sexp = sexpr::parse(text)?;
        let mut nodes = Vec::new();
        push_nodes(&sexp, domain, &mut nodes)?;
        Program::from_nodes(nodes)
    }

    pub fn display<'a>(&'a self, domain: &'a Domain) -> ProgramDisplay<'a> {
        ProgramDisplay {
            program: self,
            domain,
        }
    }
}

fn parse_terminal(s: &str) -> Option<Terminal> {
    let n: u32 = s.strip_prefix('t')?.parse().ok()?;
    (n >= 1).then_some(Terminal(n))
}

fn push_nodes(e: &Sexp, domain: &Domain, out: &mut Vec<Node>) -> Result<(), ProgramError> {
    let (head, args) = match e {
        Sexp::Symbol(s, _) => (s.as_str(), &[][..]),
        Sexp::List(items, _) => match items.split_first() {
            Some((Sexp::Symbol(s, _), rest)) => (s.as_str(), rest),
            _ => return Err(ProgramError::Malformed(e.to_string())),
        },
        Sexp::Int(..) => return Err(ProgramError::Malformed(e.to_string())),
    };
    if let Some(t) = parse_terminal(head) {
        if !args.is_empty() {
            return Err(ProgramError::Arity {
                name: head.into(),
                expected: "0".into(),
                got: args.len(),
            });
        }
        out.push(Node::Terminal(t));
        return Ok(());
    }
    if head == SEQ {
        if !(SEQ_MIN_ARITY..=SEQ_MAX_ARITY).contains(&args.len()) {
            return Err(ProgramError::Arity {
                name: SEQ.into(),
                expected: format!("{SEQ_MIN_ARITY}..={SEQ_MAX_ARITY}"),
                got: args.len(),
            });
        }
        out.push(Node::Seq(args.len() as u8));
    } else {
        let (index, op) = domain
            .operator(head)
            .ok_or_else(|| ProgramError::UnknownOperator(head.into()))?;
        if op.arity != args.len() {
            return Err(ProgramError::Arity {
                name: head.into(),
                expected: op.arity.to_string(),
                got: args.len(),
            });
        }
        out.push(Node::Op {
            index: index as u16,
            arity: op.arity as u8,
        });
    }
    for a in args {
        push_nodes(a, domain, out)?;
    }
    Ok(())
}

pub struct ProgramDisplay<'a> {
    program: &'a Program,
    domain: &'a Domain,
}

impl ProgramDisplay<'_> {
    fn write_at(&self, f: &mut fmt::Formatter<'_>, i: usize) -> Result<usize, fmt::Error> {
        let node = self.program.nodes[i];
        match node {
            Node::Terminal(t) => write!(f, "({t})")?,
            Node::Op { index, .. } => {
                write!(f, "({}", self.domain.operators()[index as usize].name)?
            }
            Node::Seq(_) => write!(f, "({SEQ}")?,
        }
        let mut next = i + 1;
        for _ in 0..node.arity() {
            f.write_str(" ")?;
            next = self.write_at(f, next)?;
        }
        if node.arity() > 0 || !matches!(node, Node::Terminal(_)) {
            f.write_str(")")?;
        }
        Ok(next)
    }
}

impl fmt::Display for ProgramDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0).map(|_| ())
    }
}
