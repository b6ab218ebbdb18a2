//! Pattern matching over a space: unification, space queries, template
//! instantiation, enrichment-aware retrieval and graph homomorphisms.

mod heuristic;
mod hom;
mod unify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use heuristic::{LabelSelectivity, OrderingHeuristic, SearchView, SmallestCandidateSet};
pub use hom::{edge_types, find_homomorphisms, EdgeTypes, HomSearch, HomomorphismMap};
pub use unify::{substitute, unify, unify_typed};

use crate::enrich::{EnrichmentError, EnrichmentRegistry};
use crate::space::{EdgeId, Expression, Label, Metagraph};

/// Required types for pattern variables, keyed by variable name.
pub type VarTypes = BTreeMap<String, Expression>;

/// Which side of a unification problem a variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Pattern,
    Target,
}

/// Variable name to referent expression. Referents are expressions rather
/// than edge ids because a target-side variable may be bound to a piece of
/// the pattern that lives in no store.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bindings {
    entries: BTreeMap<String, (Expression, Side)>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Expression> {
        self.entries.get(var).map(|(e, _)| e)
    }

    pub fn side(&self, var: &str) -> Option<Side> {
        self.entries.get(var).map(|(_, s)| *s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Expression, Side)> + '_ {
        self.entries.iter().map(|(k, (e, s))| (k.as_str(), e, *s))
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    /// Binds without any consistency check.
    pub fn insert_unchecked(&mut self, var: String, value: Expression, side: Side) {
        self.entries.insert(var, (value, side));
    }

    /// Binds `var`, failing if it is already bound to something else.
    pub fn bind(&mut self, var: &str, value: Expression, side: Side) -> bool {
        match self.entries.get(var) {
            Some((old, _)) => *old == value,
            None => {
                self.entries.insert(var.to_string(), (value, side));
                true
            }
        }
    }

    /// Consistent union: `None` when a shared variable is bound differently.
    pub fn merge(&self, other: &Bindings) -> Option<Bindings> {
        let mut out = self.clone();
        for (var, value, side) in other.iter() {
            if !out.bind(var, value.clone(), side) {
                return None;
            }
        }
        Some(out)
    }

    /// Keeps only the given variables.
    pub fn restrict(&self, vars: &BTreeSet<String>) -> Bindings {
        Bindings {
            entries: self
                .entries
                .iter()
                .filter(|(k, _)| vars.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (var, value, _)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "${var} = {value}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub bindings: Bindings,
    pub matched_root: EdgeId,
    /// Pattern edge (as numbered by `Metagraph::from_expression(pattern)`)
    /// to host edge. Positions where the host holds a variable facing a
    /// non-variable pattern piece are left unmapped.
    pub hom: HomomorphismMap,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("template variables {0:?} do not occur in the pattern")]
    TemplateVariable(Vec<String>),
    #[error("pattern carries no {0} enrichment to compare against")]
    MissingQueryEnrichment(String),
    #[error(transparent)]
    Enrichment(#[from] EnrichmentError),
}

/// Every root unifying with `pattern`, ascending by root id.
pub fn match_pattern(space: &Metagraph, pattern: &Expression) -> Vec<MatchResult> {
    match_typed(space, pattern, &VarTypes::new())
}

/// [`match_pattern`] with type constraints on pattern variables.
pub fn match_typed(space: &Metagraph, pattern: &Expression, var_types: &VarTypes) -> Vec<MatchResult> {
    let scratch = Metagraph::from_expression(pattern);
    let proot = scratch.roots().next().expect("one root");
    let mut out = Vec::new();
    for root in space.roots() {
        // roots on a cycle have no finite expression and match nothing
        let Ok(expr) = space.lift(root) else { continue };
        if let Some(bindings) = unify_typed(pattern, &expr, space, var_types) {
            out.push(MatchResult {
                bindings,
                matched_root: root,
                hom: expression_hom(&scratch, proot, space, root),
            });
        }
    }
    out
}

/// Parallel walk of a pattern and a matched host expression.
fn expression_hom(pattern: &Metagraph, proot: EdgeId, host: &Metagraph, hroot: EdgeId) -> HomomorphismMap {
    fn walk(p: &Metagraph, pid: EdgeId, h: &Metagraph, hid: EdgeId, out: &mut BTreeMap<EdgeId, EdgeId>) {
        let (Some(pe), Some(he)) = (p.edge(pid), h.edge(hid)) else {
            return;
        };
        let compatible = pe.label.is_variable() || (pe.label == he.label && pe.targets.len() == he.targets.len());
        if !compatible || out.get(&pid).is_some_and(|m| *m != hid) {
            return;
        }
        out.insert(pid, hid);
        if pe.label == Label::List {
            for (pt, ht) in pe.targets.iter().zip(&he.targets) {
                walk(p, *pt, h, *ht, out);
            }
        }
    }
    let mut edges = BTreeMap::new();
    walk(pattern, proot, host, hroot, &mut edges);
    HomomorphismMap {
        edges,
        enrichment_witness: BTreeMap::new(),
    }
}

/// Instantiates `template` once per match of `pattern`, in match order.
pub fn transform(
    space: &Metagraph,
    pattern: &Expression,
    template: &Expression,
) -> Result<Vec<Expression>, MatchError> {
    transform_typed(space, pattern, template, &VarTypes::new())
}

pub fn transform_typed(
    space: &Metagraph,
    pattern: &Expression,
    template: &Expression,
    var_types: &VarTypes,
) -> Result<Vec<Expression>, MatchError> {
    let pvars = pattern.variables();
    let stray: Vec<String> = template
        .variables()
        .into_iter()
        .filter(|v| !pvars.contains(v))
        .collect();
    if !stray.is_empty() {
        return Err(MatchError::TemplateVariable(stray));
    }
    Ok(match_typed(space, pattern, var_types)
        .iter()
        .map(|m| substitute(template, &m.bindings))
        .collect())
}

/// Matches of `pattern` (with its outermost enrichment stripped) whose root
/// enrichment of `kind` is strictly closer than `threshold` to the
/// pattern's own enrichment.
pub fn match_enriched(
    space: &Metagraph,
    registry: &EnrichmentRegistry,
    pattern: &Expression,
    kind: &str,
    threshold: f64,
) -> Result<Vec<MatchResult>, MatchError> {
    let k = registry.get(kind)?;
    if !k.has_metric() {
        return Err(EnrichmentError::NoMetric(kind.to_string()).into());
    }
    let query = pattern
        .enrichment()
        .filter(|e| e.kind == kind)
        .ok_or_else(|| MatchError::MissingQueryEnrichment(kind.to_string()))?;
    let bare = pattern.strip_enrichment();
    let scratch = Metagraph::from_expression(bare);
    let proot = scratch.roots().next().expect("one root");
    let mut out = Vec::new();
    for root in space.roots() {
        let Ok(expr) = space.lift(root) else { continue };
        let Some(en) = expr.enrichment().filter(|e| e.kind == kind) else {
            continue;
        };
        let Some(bindings) = unify(bare, expr.strip_enrichment()) else {
            continue;
        };
        if registry.proximity(kind, &query.payload, &en.payload)? > threshold {
            out.push(MatchResult {
                bindings,
                matched_root: root,
                hom: expression_hom(&scratch, proot, space, root),
            });
        }
    }
    Ok(out)
}

/// Conjunctive query: bindings satisfying every pattern at once, each
/// pattern matched against some root.
pub fn match_all(space: &Metagraph, patterns: &[Expression]) -> Vec<Bindings> {
    let mut states = vec![Bindings::new()];
    for p in patterns {
        let mut next = Vec::new();
        for s in &states {
            for m in match_pattern(space, &substitute(p, s)) {
                if let Some(merged) = s.merge(&m.bindings) {
                    if !next.contains(&merged) {
                        next.push(merged);
                    }
                }
            }
        }
        states = next;
    }
    states
}

/// Disjunctive query: the union of each pattern's matches without
/// repeats, in pattern order.
pub fn match_any(space: &Metagraph, patterns: &[Expression]) -> Vec<MatchResult> {
    let mut out: Vec<MatchResult> = Vec::new();
    for p in patterns {
        for m in match_pattern(space, p) {
            if !out
                .iter()
                .any(|o| o.matched_root == m.matched_root && o.bindings == m.bindings)
            {
                out.push(m);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::VECTOR_F64;
    use crate::space::Enrichment;
    use crate::syntax::parse;

    fn p(s: &str) -> Expression {
        parse(s).unwrap()
    }

    fn sam() -> Metagraph {
        Metagraph::load("(has Sam balloon)\n(has Sam ball)\n(has Tom kite)\n").unwrap()
    }

    #[test]
    fn transform_in_root_order() {
        let out = transform(&sam(), &p("(has Sam $o)"), &p("$o")).unwrap();
        assert_eq!(out, vec![p("balloon"), p("ball")]);
    }

    #[test]
    fn template_variables_must_come_from_pattern() {
        assert_eq!(
            transform(&sam(), &p("(has Sam $o)"), &p("($o $z)")),
            Err(MatchError::TemplateVariable(vec!["z".into()]))
        );
    }

    #[test]
    fn match_records_root_and_hom() {
        let g = sam();
        let ms = match_pattern(&g, &p("(has Sam $o)"));
        assert_eq!(ms.len(), 2);
        let first = &ms[0];
        assert_eq!(g.lift(first.matched_root).unwrap(), p("(has Sam balloon)"));
        let scratch = Metagraph::from_expression(&p("(has Sam $o)"));
        let pr = scratch.roots().next().unwrap();
        assert_eq!(first.hom.get(pr), Some(first.matched_root));
        assert_eq!(first.hom.edges.len(), scratch.len());
    }

    #[test]
    fn no_match_is_empty() {
        assert!(match_pattern(&sam(), &p("(owns $x)")).is_empty());
        assert!(match_pattern(&Metagraph::new(), &p("$x")).is_empty());
    }

    #[test]
    fn typed_match() {
        let g = Metagraph::load("(: Toy Type) (: ball Toy) (: rock Thing) (has Sam ball) (has Sam rock)").unwrap();
        let types: VarTypes = [("o".to_string(), p("Toy"))].into();
        let out: Vec<_> = match_typed(&g, &p("(has Sam $o)"), &types)
            .iter()
            .map(|m| m.bindings.get("o").cloned())
            .collect();
        assert_eq!(out, vec![Some(p("ball"))]);
    }

    #[test]
    fn conjunction_and_disjunction() {
        let g = Metagraph::load("(parent a b) (parent b c) (parent b d)").unwrap();
        let grand = match_all(&g, &[p("(parent $x $y)"), p("(parent $y $z)")]);
        let pairs: Vec<_> = grand
            .iter()
            .map(|b| (b.get("x").unwrap().to_string(), b.get("z").unwrap().to_string()))
            .collect();
        assert_eq!(pairs, vec![("a".into(), "c".into()), ("a".into(), "d".into())]);
        assert_eq!(
            match_any(&g, &[p("(parent a $y)"), p("(parent $x c)"), p("(parent a b)")]).len(),
            3
        );
    }

    fn vecs() -> (Metagraph, EnrichmentRegistry) {
        let mut g = Metagraph::new();
        let close = Enrichment::from_f64s(VECTOR_F64, &[1.0, 0.1]);
        let far = Enrichment::from_f64s(VECTOR_F64, &[-1.0, 0.0]);
        g.add_expression(&p("(word cat)").enriched(close));
        g.add_expression(&p("(word car)").enriched(far));
        g.add_expression(&p("(word cow)"));
        (g, EnrichmentRegistry::with_builtins())
    }

    #[test]
    fn enriched_match_filters_by_proximity() {
        let (g, reg) = vecs();
        let q = p("(word $w)").enriched(Enrichment::from_f64s(VECTOR_F64, &[1.0, 0.0]));
        let hits = match_enriched(&g, &reg, &q, VECTOR_F64, 0.9).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].bindings.get("w"), Some(&p("cat")));
        assert_eq!(match_enriched(&g, &reg, &q, VECTOR_F64, -1.0).unwrap().len(), 2);
    }

    #[test]
    fn enriched_match_errors() {
        let (g, reg) = vecs();
        let q = p("(word $w)").enriched(Enrichment::from_f64s(VECTOR_F64, &[1.0, 0.0]));
        assert!(matches!(
            match_enriched(&g, &reg, &q, "nope", 0.5),
            Err(MatchError::Enrichment(EnrichmentError::UnknownKind(_)))
        ));
        assert!(matches!(
            match_enriched(&g, &reg, &p("(word $w)"), VECTOR_F64, 0.5),
            Err(MatchError::MissingQueryEnrichment(_))
        ));
    }
}
