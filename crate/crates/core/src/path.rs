//! Dependency paths and typed features.
//!
//! A path is a sequence of relation steps. A forward step `amod` moves from
//! a head to its dependent, an inverse step `_amod` moves from a dependent
//! up to its head. Steps are joined with `»` in the textual form, and the
//! empty path denotes the anchor itself.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub const STEP_SEPARATOR: char = '»';
pub const INVERSE_MARKER: char = '_';
/// Separates the path from the lexeme in a typed feature's text.
pub const LEXEME_SEPARATOR: char = ':';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub label: String,
    pub direction: Direction,
}

impl Step {
    pub fn forward(label: impl Into<String>) -> Self {
        Step {
            label: label.into(),
            direction: Direction::Forward,
        }
    }

    pub fn inverse(label: impl Into<String>) -> Self {
        Step {
            label: label.into(),
            direction: Direction::Inverse,
        }
    }

    pub fn flipped(&self) -> Self {
        Step {
            label: self.label.clone(),
            direction: self.direction.flip(),
        }
    }

    /// True when `self` followed by `other` walks an edge and straight back.
    pub fn cancels(&self, other: &Step) -> bool {
        self.label == other.label && self.direction != other.direction
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::Forward => write!(f, "{}", self.label),
            Direction::Inverse => write!(f, "{}{}", INVERSE_MARKER, self.label),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepPath {
    steps: Vec<Step>,
}

impl DepPath {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<Step>) -> Self {
        DepPath { steps }
    }

    pub fn forward(label: impl Into<String>) -> Self {
        DepPath {
            steps: vec![Step::forward(label)],
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of dependency edges, i.e. the order of the relation.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: Step) {
        self.steps.push(step);
    }

    pub fn pop(&mut self) -> Option<Step> {
        self.steps.pop()
    }

    /// Path walked backwards: step order reversed and every direction flipped.
    pub fn inverse(&self) -> DepPath {
        DepPath {
            steps: self.steps.iter().rev().map(Step::flipped).collect(),
        }
    }

    pub fn concat(&self, rest: &DepPath) -> DepPath {
        let mut steps = Vec::with_capacity(self.len() + rest.len());
        steps.extend_from_slice(&self.steps);
        steps.extend_from_slice(&rest.steps);
        DepPath { steps }
    }

    /// Cancels adjacent `r»_r` and `_r»r` pairs until none remain.
    ///
    /// A single stack pass reaches the fixpoint: a pair exposed by an
    /// earlier cancellation meets on the stack top.
    pub fn reduce(&self) -> DepPath {
        let mut out: Vec<Step> = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            if out.last().is_some_and(|top| top.cancels(step)) {
                out.pop();
            } else {
                out.push(step.clone());
            }
        }
        DepPath { steps: out }
    }

    pub fn is_reduced(&self) -> bool {
        self.steps.windows(2).all(|w| !w[0].cancels(&w[1]))
    }
}

impl fmt::Display for DepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                write!(f, "{STEP_SEPARATOR}")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

impl FromStr for DepPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(DepPath::empty());
        }
        let mut steps = Vec::new();
        for token in s.split(STEP_SEPARATOR) {
            let step = match token.strip_prefix(INVERSE_MARKER) {
                Some(label) => Step::inverse(label),
                None => Step::forward(token),
            };
            if step.label.is_empty() {
                return Err(Error::MalformedFeature(s.to_string()));
            }
            steps.push(step);
        }
        Ok(DepPath { steps })
    }
}

/// A dependency path paired with the lexeme found at its end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedFeature {
    pub path: DepPath,
    pub lexeme: String,
}

impl TypedFeature {
    pub fn new(path: DepPath, lexeme: impl Into<String>) -> Self {
        TypedFeature {
            path,
            lexeme: lexeme.into(),
        }
    }
}

impl fmt::Display for TypedFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.path, LEXEME_SEPARATOR, self.lexeme)
    }
}

impl FromStr for TypedFeature {
    type Err = Error;

    /// Splits at the last `:`; relation labels such as `nmod:poss` may
    /// contain the separator but lexemes never do (ingestion rewrites it).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, lexeme) = s
            .rsplit_once(LEXEME_SEPARATOR)
            .ok_or_else(|| Error::MalformedFeature(s.to_string()))?;
        if lexeme.is_empty() {
            return Err(Error::MalformedFeature(s.to_string()));
        }
        Ok(TypedFeature {
            path: path.parse()?,
            lexeme: lexeme.to_string(),
        })
    }
}
