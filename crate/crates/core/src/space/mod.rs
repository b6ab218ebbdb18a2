//! Hash-consed directed labeled metagraph.
//!
//! Every edge has a label, an ordered (possibly empty) target list and an
//! optional enrichment. Structurally identical edges never coexist: adding
//! one returns the id of the existing edge. The store keeps a label index,
//! an incidence index (the inverse of the targets relation) and a root set
//! marking top-level expressions.

mod expr;
mod label;
mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub use expr::Expression;
pub(crate) use label::EdgeKey;
pub use label::{Edge, EdgeId, Enrichment, Label};

use crate::syntax::ParseError;
use crate::types::TypeIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("edge {id} is still referenced by {referrers:?}")]
    Referenced { id: EdgeId, referrers: Vec<EdgeId> },
    #[error("edge {0} lies on a cycle and has no finite expression")]
    Cyclic(EdgeId),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
}

/// What `remove_edge` does with edges that list the removed one as a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalPolicy {
    /// Remove every referrer, transitively.
    Cascade,
    /// Refuse unless nothing references the edge.
    ForbidIfReferenced,
}

#[derive(Debug, Clone, Default)]
pub struct Metagraph {
    edges: BTreeMap<EdgeId, Edge>,
    structural: HashMap<EdgeKey, EdgeId>,
    labels: HashMap<Label, BTreeSet<EdgeId>>,
    incidence: HashMap<EdgeId, BTreeSet<EdgeId>>,
    roots: BTreeSet<EdgeId>,
    next_id: u64,
    pub(crate) type_cache: OnceLock<Arc<TypeIndex>>,
}

impl Metagraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh space holding `expr` as its only root.
    pub fn from_expression(expr: &Expression) -> Self {
        let mut g = Self::new();
        g.add_expression(expr);
        g
    }

    pub fn from_expressions<'a>(exprs: impl IntoIterator<Item = &'a Expression>) -> Self {
        let mut g = Self::new();
        for e in exprs {
            g.add_expression(e);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.edges.contains_key(&id)
    }

    /// Id the next inserted edge will receive.
    pub fn next_id(&self) -> EdgeId {
        EdgeId(self.next_id)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.values()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn get_edge(&self, id: EdgeId) -> Result<&Edge, SpaceError> {
        self.edges.get(&id).ok_or(SpaceError::UnknownEdge(id))
    }

    pub fn roots(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.roots.iter().copied()
    }

    pub fn root_count(&self) -> usize {
        self.roots.len()
    }

    pub fn is_root(&self, id: EdgeId) -> bool {
        self.roots.contains(&id)
    }

    /// Edges carrying `label`, ascending by id.
    pub fn with_label<'a>(&'a self, label: &Label) -> impl Iterator<Item = EdgeId> + 'a {
        self.labels.get(label).into_iter().flat_map(|s| s.iter().copied())
    }

    pub fn label_count(&self, label: &Label) -> usize {
        self.labels.get(label).map_or(0, BTreeSet::len)
    }

    /// Edges listing `id` among their targets.
    pub fn incident(&self, id: EdgeId) -> Result<&BTreeSet<EdgeId>, SpaceError> {
        self.incidence.get(&id).ok_or(SpaceError::UnknownEdge(id))
    }

    /// Inserts an edge, or returns the id of the structurally identical edge
    /// already present. Every target must exist.
    pub fn insert_edge(
        &mut self,
        label: Label,
        targets: Vec<EdgeId>,
        enrichment: Option<Enrichment>,
    ) -> Result<EdgeId, SpaceError> {
        if let Some(missing) = targets.iter().find(|t| !self.edges.contains_key(t)) {
            return Err(SpaceError::UnknownEdge(*missing));
        }
        Ok(self.insert_unchecked(label, targets, enrichment))
    }

    fn insert_unchecked(&mut self, label: Label, targets: Vec<EdgeId>, enrichment: Option<Enrichment>) -> EdgeId {
        let key = EdgeKey {
            label,
            targets,
            enrichment,
        };
        if let Some(&id) = self.structural.get(&key) {
            return id;
        }
        let id = EdgeId(self.next_id);
        self.next_id += 1;
        self.index_edge(Edge {
            id,
            label: key.label.clone(),
            targets: key.targets.clone(),
            enrichment: key.enrichment.clone(),
        });
        self.structural.insert(key, id);
        id
    }

    fn index_edge(&mut self, edge: Edge) {
        let id = edge.id;
        self.labels.entry(edge.label.clone()).or_default().insert(id);
        self.incidence.entry(id).or_default();
        for t in &edge.targets {
            self.incidence.entry(*t).or_default().insert(id);
        }
        self.edges.insert(id, edge);
    }

    /// Hash-conses `expr` bottom-up without touching the root set.
    pub fn intern(&mut self, expr: &Expression) -> EdgeId {
        self.intern_with(expr, None)
    }

    fn intern_with(&mut self, expr: &Expression, enrichment: Option<Enrichment>) -> EdgeId {
        match expr {
            Expression::Atom(label) => self.insert_unchecked(label.clone(), Vec::new(), enrichment),
            Expression::List(items) => {
                let targets = items.iter().map(|i| self.intern_with(i, None)).collect();
                self.insert_unchecked(Label::List, targets, enrichment)
            }
            Expression::Enriched(inner, e) => {
                let en = enrichment.or_else(|| Some(e.clone()));
                self.intern_with(inner, en)
            }
        }
    }

    /// Adds `expr` as a top-level expression and returns its root id.
    pub fn add_expression(&mut self, expr: &Expression) -> EdgeId {
        let id = self.intern(expr);
        self.set_root(id);
        id
    }

    pub fn mark_root(&mut self, id: EdgeId) -> Result<(), SpaceError> {
        self.get_edge(id)?;
        self.set_root(id);
        Ok(())
    }

    fn set_root(&mut self, id: EdgeId) {
        if self.roots.insert(id) && self.is_type_fact(id) {
            self.invalidate_types();
        }
    }

    pub fn unmark_root(&mut self, id: EdgeId) -> Result<bool, SpaceError> {
        self.get_edge(id)?;
        let was = self.roots.remove(&id);
        if was && self.is_type_fact(id) {
            self.invalidate_types();
        }
        Ok(was)
    }

    /// Id of `expr` if it is already stored, without inserting anything.
    pub fn find_expression(&self, expr: &Expression) -> Option<EdgeId> {
        self.find_with(expr, None)
    }

    fn find_with(&self, expr: &Expression, enrichment: Option<&Enrichment>) -> Option<EdgeId> {
        let key = match expr {
            Expression::Atom(label) => EdgeKey {
                label: label.clone(),
                targets: Vec::new(),
                enrichment: enrichment.cloned(),
            },
            Expression::List(items) => EdgeKey {
                label: Label::List,
                targets: items.iter().map(|i| self.find_with(i, None)).collect::<Option<_>>()?,
                enrichment: enrichment.cloned(),
            },
            Expression::Enriched(inner, e) => return self.find_with(inner, enrichment.or(Some(e))),
        };
        self.structural.get(&key).copied()
    }

    /// Rebuilds the expression tree rooted at `id`.
    pub fn lift(&self, id: EdgeId) -> Result<Expression, SpaceError> {
        let mut path = BTreeSet::new();
        self.lift_inner(id, &mut path)
    }

    fn lift_inner(&self, id: EdgeId, path: &mut BTreeSet<EdgeId>) -> Result<Expression, SpaceError> {
        let edge = self.get_edge(id)?;
        if !path.insert(id) {
            return Err(SpaceError::Cyclic(id));
        }
        let base = match &edge.label {
            Label::List => Expression::List(
                edge.targets
                    .iter()
                    .map(|t| self.lift_inner(*t, path))
                    .collect::<Result<_, _>>()?,
            ),
            atom if edge.targets.is_empty() => Expression::Atom(atom.clone()),
            // An atom label with targets only arises from raw graph
            // construction; it lifts as a list headed by the label.
            atom => {
                let mut items = vec![Expression::Atom(atom.clone())];
                for t in &edge.targets {
                    items.push(self.lift_inner(*t, path)?);
                }
                Expression::List(items)
            }
        };
        path.remove(&id);
        Ok(match &edge.enrichment {
            Some(e) => Expression::Enriched(Box::new(base), e.clone()),
            None => base,
        })
    }

    /// Removes `id` under `policy` and returns every removed id.
    pub fn remove_edge(&mut self, id: EdgeId, policy: RemovalPolicy) -> Result<BTreeSet<EdgeId>, SpaceError> {
        let referrers = self.incident(id)?;
        let doomed = match policy {
            RemovalPolicy::ForbidIfReferenced => {
                if !referrers.is_empty() {
                    return Err(SpaceError::Referenced {
                        id,
                        referrers: referrers.iter().copied().collect(),
                    });
                }
                BTreeSet::from([id])
            }
            RemovalPolicy::Cascade => self.referrer_closure([id]),
        };
        for d in &doomed {
            self.detach(*d);
        }
        Ok(doomed)
    }

    /// `seeds` plus every edge that transitively targets one of them.
    pub fn referrer_closure(&self, seeds: impl IntoIterator<Item = EdgeId>) -> BTreeSet<EdgeId> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<EdgeId> = seeds.into_iter().collect();
        while let Some(e) = stack.pop() {
            if !seen.insert(e) {
                continue;
            }
            if let Some(refs) = self.incidence.get(&e) {
                stack.extend(refs.iter().filter(|r| !seen.contains(r)));
            }
        }
        seen
    }

    fn detach(&mut self, id: EdgeId) {
        let Some(edge) = self.edges.remove(&id) else {
            return;
        };
        if self.roots.remove(&id) {
            self.invalidate_types();
        }
        self.structural.remove(&edge.key());
        if let Some(set) = self.labels.get_mut(&edge.label) {
            set.remove(&id);
            if set.is_empty() {
                self.labels.remove(&edge.label);
            }
        }
        for t in &edge.targets {
            if let Some(refs) = self.incidence.get_mut(t) {
                refs.remove(&id);
            }
        }
        self.incidence.remove(&id);
    }

    /// A root `(: subject type)`.
    pub(crate) fn is_type_fact(&self, id: EdgeId) -> bool {
        let Some(edge) = self.edges.get(&id) else {
            return false;
        };
        edge.label == Label::List
            && edge.targets.len() == 3
            && self
                .edges
                .get(&edge.targets[0])
                .is_some_and(|h| h.label.is_symbol(":") && h.targets.is_empty())
    }

    fn invalidate_types(&mut self) {
        self.type_cache = OnceLock::new();
    }

    /// Recomputes every index from the edge set and compares it with the
    /// maintained one.
    pub fn check_indices(&self) -> Result<(), String> {
        let mut structural = HashMap::new();
        let mut labels: HashMap<Label, BTreeSet<EdgeId>> = HashMap::new();
        let mut incidence: HashMap<EdgeId, BTreeSet<EdgeId>> = HashMap::new();
        for (id, e) in &self.edges {
            if *id != e.id {
                return Err(format!("edge stored under {id} claims id {}", e.id));
            }
            if e.id.0 >= self.next_id {
                return Err(format!("edge {id} is beyond the id counter"));
            }
            if structural.insert(e.key(), *id).is_some() {
                return Err(format!("structural duplicate at {id}"));
            }
            labels.entry(e.label.clone()).or_default().insert(*id);
            incidence.entry(*id).or_default();
            for t in &e.targets {
                if !self.edges.contains_key(t) {
                    return Err(format!("edge {id} has dangling target {t}"));
                }
                incidence.entry(*t).or_default().insert(*id);
            }
        }
        if structural != self.structural {
            return Err("structural index out of sync".into());
        }
        if labels != self.labels {
            return Err("label index out of sync".into());
        }
        if incidence != self.incidence {
            return Err("incidence index out of sync".into());
        }
        if let Some(r) = self.roots.iter().find(|r| !self.edges.contains_key(r)) {
            return Err(format!("root {r} is not an edge"));
        }
        Ok(())
    }

    pub(crate) fn to_raw(&self) -> RawGraph {
        RawGraph {
            edges: self
                .edges
                .values()
                .map(|e| {
                    (
                        e.id,
                        RawEdge {
                            label: e.label.clone(),
                            targets: e.targets.clone(),
                            enrichment: e.enrichment.clone(),
                        },
                    )
                })
                .collect(),
            roots: self.roots.clone(),
            next_id: self.next_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RawEdge {
    pub label: Label,
    pub targets: Vec<EdgeId>,
    pub enrichment: Option<Enrichment>,
}

/// Edge set without the hash-consing invariant, used while a rewrite is
/// being assembled. [`RawGraph::canonicalize`] turns it back into a
/// [`Metagraph`].
#[derive(Debug, Clone)]
pub(crate) struct RawGraph {
    pub edges: BTreeMap<EdgeId, RawEdge>,
    pub roots: BTreeSet<EdgeId>,
    pub next_id: u64,
}

impl RawGraph {
    pub fn fresh_id(&mut self) -> EdgeId {
        let id = EdgeId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Removes `seeds` and, repeatedly, every edge left with a missing target.
    pub fn remove_with_cascade(&mut self, seeds: &BTreeSet<EdgeId>) -> BTreeSet<EdgeId> {
        let mut removed = BTreeSet::new();
        for s in seeds {
            if self.edges.remove(s).is_some() {
                removed.insert(*s);
            }
        }
        loop {
            let dangling: Vec<EdgeId> = self
                .edges
                .iter()
                .filter(|(_, e)| e.targets.iter().any(|t| !self.edges.contains_key(t)))
                .map(|(id, _)| *id)
                .collect();
            if dangling.is_empty() {
                break;
            }
            for d in dangling {
                self.edges.remove(&d);
                removed.insert(d);
            }
        }
        self.roots.retain(|r| self.edges.contains_key(r));
        removed
    }

    pub fn has_dangling(&self) -> bool {
        self.edges
            .values()
            .any(|e| e.targets.iter().any(|t| !self.edges.contains_key(t)))
    }

    /// Merges structurally identical edges (to a fixpoint, so duplicates
    /// created by merging their targets are merged too) and builds the
    /// indexed store. Returns the map from every raw id to its surviving
    /// representative. Cyclic edge sets are tolerated.
    pub fn canonicalize(self) -> (Metagraph, BTreeMap<EdgeId, EdgeId>) {
        debug_assert!(!self.has_dangling());
        let mut parent: BTreeMap<EdgeId, EdgeId> = self.edges.keys().map(|k| (*k, *k)).collect();
        fn find(parent: &BTreeMap<EdgeId, EdgeId>, mut id: EdgeId) -> EdgeId {
            while parent[&id] != id {
                id = parent[&id];
            }
            id
        }
        loop {
            let mut table: HashMap<EdgeKey, EdgeId> = HashMap::new();
            let mut changed = false;
            for (id, e) in &self.edges {
                if find(&parent, *id) != *id {
                    continue;
                }
                let key = EdgeKey {
                    label: e.label.clone(),
                    targets: e.targets.iter().map(|t| find(&parent, *t)).collect(),
                    enrichment: e.enrichment.clone(),
                };
                match table.get(&key) {
                    Some(&existing) => {
                        parent.insert(*id, existing);
                        changed = true;
                    }
                    None => {
                        table.insert(key, *id);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let merge: BTreeMap<EdgeId, EdgeId> = parent.keys().map(|k| (*k, find(&parent, *k))).collect();
        let mut g = Metagraph {
            next_id: self.next_id,
            ..Metagraph::default()
        };
        for (id, e) in &self.edges {
            if merge[id] != *id {
                continue;
            }
            let edge = Edge {
                id: *id,
                label: e.label.clone(),
                targets: e.targets.iter().map(|t| merge[t]).collect(),
                enrichment: e.enrichment.clone(),
            };
            g.structural.insert(edge.key(), *id);
            g.index_edge(edge);
        }
        g.roots = self.roots.iter().map(|r| merge[r]).collect();
        (g, merge)
    }
}
