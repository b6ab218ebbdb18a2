use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;

/// Stable identifier of an edge inside one [`Metagraph`](super::Metagraph).
///
/// Ids are handed out in insertion order and never recycled, so the total
/// order doubles as a deterministic tie-breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub(crate) u64);

impl EdgeId {
    pub fn index(self) -> u64 {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Label carried by every edge.
///
/// `List` marks the edge of a compound expression: its children are the
/// edge targets, in order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Symbol(String),
    Variable(String),
    Grounded(String),
    List,
}

impl Label {
    pub fn symbol(name: impl Into<String>) -> Self {
        Label::Symbol(name.into())
    }

    pub fn variable(name: impl Into<String>) -> Self {
        Label::Variable(name.into())
    }

    pub fn grounded(name: impl Into<String>) -> Self {
        Label::Grounded(name.into())
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Label::Variable(_))
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        matches!(self, Label::Symbol(s) if s == name)
    }

    /// Name of an atom label, `None` for list edges.
    pub fn name(&self) -> Option<&str> {
        match self {
            Label::Symbol(n) | Label::Variable(n) | Label::Grounded(n) => Some(n),
            Label::List => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Symbol(n) | Label::Grounded(n) => f.write_str(n),
            Label::Variable(n) => write!(f, "${n}"),
            Label::List => f.write_str("()"),
        }
    }
}

/// Non-type payload attached to an edge, e.g. an embedding vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Enrichment {
    pub kind: String,
    pub payload: Vec<u8>,
}

impl Enrichment {
    pub fn new(kind: impl Into<String>, payload: impl Into<Vec<u8>>) -> Self {
        Enrichment {
            kind: kind.into(),
            payload: payload.into(),
        }
    }

    /// Packs a vector as little-endian `f64`s, the layout of the built-in
    /// vector kind.
    pub fn from_f64s(kind: impl Into<String>, values: &[f64]) -> Self {
        let payload = values.iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<_>>();
        Enrichment::new(kind, payload)
    }

    pub fn payload_base64(&self) -> String {
        BASE64.encode(&self.payload)
    }
}

/// An edge of the metagraph. Vertices are edges with no targets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: EdgeId,
    pub label: Label,
    pub targets: Vec<EdgeId>,
    pub enrichment: Option<Enrichment>,
}

impl Edge {
    pub fn is_vertex(&self) -> bool {
        self.targets.is_empty()
    }

    pub(crate) fn key(&self) -> EdgeKey {
        EdgeKey {
            label: self.label.clone(),
            targets: self.targets.clone(),
            enrichment: self.enrichment.clone(),
        }
    }
}

/// Structural identity of an edge: everything but its id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct EdgeKey {
    pub label: Label,
    pub targets: Vec<EdgeId>,
    pub enrichment: Option<Enrichment>,
}
