use std::collections::BTreeMap;

use super::heuristic::{OrderingHeuristic, SearchView};
use crate::enrich::EnrichmentRegistry;
use crate::space::{Edge, EdgeId, Expression, Metagraph};
use crate::types::{types_of, Inheritance, NoInheritance};

type PayloadPair<'a> = (&'a [u8], &'a [u8]);

/// Types attached to edges, used to constrain homomorphisms.
pub type EdgeTypes = BTreeMap<EdgeId, Vec<Expression>>;

/// Declared types of every typed edge of `space`.
pub fn edge_types(space: &Metagraph) -> EdgeTypes {
    space
        .edge_ids()
        .filter_map(|id| {
            let ts = types_of(space, id).unwrap_or_default();
            (!ts.is_empty()).then_some((id, ts))
        })
        .collect()
}

/// Edge map from a pattern metagraph into a host metagraph, with the
/// enrichment witness chosen for each enrichment kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HomomorphismMap {
    pub edges: BTreeMap<EdgeId, EdgeId>,
    pub enrichment_witness: BTreeMap<String, usize>,
}

impl HomomorphismMap {
    pub fn get(&self, pattern_edge: EdgeId) -> Option<EdgeId> {
        self.edges.get(&pattern_edge).copied()
    }

    /// `next ∘ self`. Witnesses are only carried over when both maps use
    /// identity for a kind; otherwise the composed witness is unknown and
    /// left for validation to rediscover.
    pub fn then(&self, next: &HomomorphismMap) -> HomomorphismMap {
        let edges = self
            .edges
            .iter()
            .filter_map(|(a, b)| next.get(*b).map(|c| (*a, c)))
            .collect();
        let enrichment_witness = self
            .enrichment_witness
            .iter()
            .filter(|(k, w)| **w == 0 && next.enrichment_witness.get(*k).is_none_or(|w2| *w2 == 0))
            .map(|(k, w)| (k.clone(), *w))
            .collect();
        HomomorphismMap {
            edges,
            enrichment_witness,
        }
    }
}

/// All homomorphisms from `pattern` into `host` with no type or enrichment
/// registry beyond byte identity.
pub fn find_homomorphisms(pattern: &Metagraph, host: &Metagraph, limit: Option<usize>) -> Vec<HomomorphismMap> {
    let mut s = HomSearch::new(pattern, host);
    if let Some(n) = limit {
        s = s.limit(n);
    }
    s.run()
}

/// Configurable backtracking search for homomorphisms.
pub struct HomSearch<'a> {
    pattern: &'a Metagraph,
    host: &'a Metagraph,
    pattern_types: Option<&'a EdgeTypes>,
    host_types: Option<&'a EdgeTypes>,
    inheritance: &'a dyn Inheritance,
    registry: Option<&'a EnrichmentRegistry>,
    limit: Option<usize>,
    heuristic: Option<&'a dyn OrderingHeuristic>,
    exact_arity: bool,
    pinned: BTreeMap<EdgeId, EdgeId>,
}

impl<'a> HomSearch<'a> {
    pub fn new(pattern: &'a Metagraph, host: &'a Metagraph) -> Self {
        HomSearch {
            pattern,
            host,
            pattern_types: None,
            host_types: None,
            inheritance: &NoInheritance,
            registry: None,
            limit: None,
            heuristic: None,
            exact_arity: false,
            pinned: BTreeMap::new(),
        }
    }

    /// Type constraints: every type of a pattern edge needs some type of
    /// the image edge inheriting from it.
    pub fn types(mut self, pattern: &'a EdgeTypes, host: &'a EdgeTypes, inheritance: &'a dyn Inheritance) -> Self {
        self.pattern_types = Some(pattern);
        self.host_types = Some(host);
        self.inheritance = inheritance;
        self
    }

    /// Kinds missing from the registry only admit byte identity.
    pub fn enrichments(mut self, registry: &'a EnrichmentRegistry) -> Self {
        self.registry = Some(registry);
        self
    }

    pub fn limit(mut self, n: usize) -> Self {
        self.limit = Some(n);
        self
    }

    pub fn heuristic(mut self, h: &'a dyn OrderingHeuristic) -> Self {
        self.heuristic = Some(h);
        self
    }

    /// Requires images of non-variable edges to have exactly as many
    /// targets as the pattern edge, which turns the search into plain
    /// tree matching on expressions.
    pub fn exact_arity(mut self) -> Self {
        self.exact_arity = true;
        self
    }

    /// Forces `pattern_edge` to map to `host_edge`.
    pub fn pin(mut self, pattern_edge: EdgeId, host_edge: EdgeId) -> Self {
        self.pinned.insert(pattern_edge, host_edge);
        self
    }

    pub fn run(&self) -> Vec<HomomorphismMap> {
        let mut out = Vec::new();
        if self.pattern.is_empty() || self.limit == Some(0) {
            return out;
        }
        let mut assigned = BTreeMap::new();
        self.search(&mut assigned, &mut out);
        out
    }

    /// Checks every invariant of `map` from scratch and returns the map
    /// with its enrichment witnesses filled in.
    pub fn validate(&self, map: &HomomorphismMap) -> Option<HomomorphismMap> {
        if self.pattern.edge_ids().any(|p| !map.edges.contains_key(&p)) || map.edges.len() != self.pattern.len() {
            return None;
        }
        for (p, h) in &map.edges {
            let pe = self.pattern.edge(*p)?;
            let he = self.host.edge(*h)?;
            if !self.locally_feasible(pe, he) || !self.structure_ok(pe, &map.edges) {
                return None;
            }
        }
        let witnesses = self.witnesses(&map.edges)?;
        Some(HomomorphismMap {
            edges: map.edges.clone(),
            enrichment_witness: witnesses,
        })
    }

    pub fn is_valid(&self, map: &HomomorphismMap) -> bool {
        self.validate(map).is_some()
    }

    fn label_ok(&self, pe: &Edge, he: &Edge) -> bool {
        if self.pinned.get(&pe.id).is_some_and(|h| *h != he.id) {
            return false;
        }
        if pe.label.is_variable() {
            return he.targets.len() >= pe.targets.len();
        }
        pe.label == he.label
            && if self.exact_arity {
                he.targets.len() == pe.targets.len()
            } else {
                he.targets.len() >= pe.targets.len()
            }
    }

    fn types_ok(&self, pe: &Edge, he: &Edge) -> bool {
        let Some(required) = self.pattern_types.and_then(|t| t.get(&pe.id)) else {
            return true;
        };
        let available = self
            .host_types
            .and_then(|t| t.get(&he.id))
            .map_or(&[][..], Vec::as_slice);
        required
            .iter()
            .all(|t| available.iter().any(|t2| self.inheritance.inherits(t2, t)))
    }

    fn witness_count(&self, kind: &str) -> usize {
        self.registry
            .and_then(|r| r.get(kind).ok())
            .map_or(1, |k| k.witness_count())
    }

    fn maps_via(&self, kind: &str, w: usize, from: &[u8], to: &[u8]) -> bool {
        match self.registry.and_then(|r| r.get(kind).ok()) {
            Some(k) => k.maps_via(w, from, to),
            None => w == 0 && from == to,
        }
    }

    fn enrichment_ok(&self, pe: &Edge, he: &Edge) -> bool {
        let Some(pen) = &pe.enrichment else { return true };
        let Some(hen) = he.enrichment.as_ref().filter(|h| h.kind == pen.kind) else {
            return false;
        };
        (0..self.witness_count(&pen.kind)).any(|w| self.maps_via(&pen.kind, w, &pen.payload, &hen.payload))
    }

    fn locally_feasible(&self, pe: &Edge, he: &Edge) -> bool {
        self.label_ok(pe, he) && self.types_ok(pe, he) && self.enrichment_ok(pe, he)
    }

    /// Full structure check; `pe` and all its targets must be assigned.
    fn structure_ok(&self, pe: &Edge, assigned: &BTreeMap<EdgeId, EdgeId>) -> bool {
        let he = &self.host.edge(assigned[&pe.id]).expect("image exists").targets;
        let wanted: Vec<EdgeId> = pe.targets.iter().map(|t| assigned[t]).collect();
        is_subsequence(&wanted, he)
    }

    /// Necessary condition on partial assignments: the images of the
    /// assigned targets of each assigned edge already appear in order.
    fn partial_structure_ok(&self, pe: &Edge, assigned: &BTreeMap<EdgeId, EdgeId>) -> bool {
        let Some(h) = assigned.get(&pe.id) else { return true };
        let he = &self.host.edge(*h).expect("image exists").targets;
        let wanted: Vec<EdgeId> = pe.targets.iter().filter_map(|t| assigned.get(t).copied()).collect();
        is_subsequence(&wanted, he)
    }

    /// One witness per enrichment kind, the smallest index that works for
    /// every enriched pattern edge of that kind.
    fn witnesses(&self, assigned: &BTreeMap<EdgeId, EdgeId>) -> Option<BTreeMap<String, usize>> {
        let mut by_kind: BTreeMap<&str, Vec<PayloadPair>> = BTreeMap::new();
        for pe in self.pattern.edges() {
            if let Some(pen) = &pe.enrichment {
                let hen = self.host.edge(assigned[&pe.id])?.enrichment.as_ref()?;
                by_kind.entry(&pen.kind).or_default().push((&pen.payload, &hen.payload));
            }
        }
        let mut out = BTreeMap::new();
        for (kind, pairs) in by_kind {
            let w = (0..self.witness_count(kind)).find(|w| pairs.iter().all(|(a, b)| self.maps_via(kind, *w, a, b)))?;
            out.insert(kind.to_string(), w);
        }
        Some(out)
    }

    fn candidates(&self, pe: &Edge, assigned: &mut BTreeMap<EdgeId, EdgeId>) -> Vec<EdgeId> {
        let pool: Vec<EdgeId> = if let Some(h) = self.pinned.get(&pe.id) {
            self.host.contains(*h).then_some(*h).into_iter().collect()
        } else if pe.label.is_variable() {
            self.host.edge_ids().collect()
        } else {
            self.host.with_label(&pe.label).collect()
        };
        let mut out = Vec::new();
        for h in pool {
            let he = self.host.edge(h).expect("indexed edge exists");
            if !self.locally_feasible(pe, he) {
                continue;
            }
            assigned.insert(pe.id, h);
            if self.consistent_after(pe.id, assigned) {
                out.push(h);
            }
            assigned.remove(&pe.id);
        }
        out
    }

    /// Checks the edges whose structure constraint involves `p`.
    fn consistent_after(&self, p: EdgeId, assigned: &BTreeMap<EdgeId, EdgeId>) -> bool {
        let pe = self.pattern.edge(p).expect("pattern edge");
        if !self.partial_structure_ok(pe, assigned) {
            return false;
        }
        let referrers = self.pattern.incident(p).expect("pattern edge");
        referrers
            .iter()
            .all(|r| self.partial_structure_ok(self.pattern.edge(*r).expect("referrer"), assigned))
    }

    fn search(&self, assigned: &mut BTreeMap<EdgeId, EdgeId>, out: &mut Vec<HomomorphismMap>) -> bool {
        if self.limit.is_some_and(|n| out.len() >= n) {
            return true;
        }
        if assigned.len() == self.pattern.len() {
            if let Some(w) = self.witnesses(assigned) {
                out.push(HomomorphismMap {
                    edges: assigned.clone(),
                    enrichment_witness: w,
                });
            }
            return self.limit.is_some_and(|n| out.len() >= n);
        }
        let (p, branches) = match self.heuristic {
            None => {
                let p = self
                    .pattern
                    .edge_ids()
                    .find(|p| !assigned.contains_key(p))
                    .expect("unassigned edge");
                let pe = self.pattern.edge(p).expect("pattern edge");
                (p, self.candidates(pe, assigned))
            }
            Some(h) => match self.heuristic_choice(h, assigned) {
                Some(choice) => choice,
                None => return false,
            },
        };
        for c in branches {
            assigned.insert(p, c);
            let stop = self.search(assigned, out);
            assigned.remove(&p);
            if stop {
                return true;
            }
        }
        false
    }

    /// Picks the pattern edge owning the lowest-priority extension and
    /// orders its candidates by priority. `None` when some unassigned edge
    /// has no candidate at all.
    fn heuristic_choice(
        &self,
        h: &dyn OrderingHeuristic,
        assigned: &mut BTreeMap<EdgeId, EdgeId>,
    ) -> Option<(EdgeId, Vec<EdgeId>)> {
        let unassigned: Vec<EdgeId> = self.pattern.edge_ids().filter(|p| !assigned.contains_key(p)).collect();
        let mut cands = BTreeMap::new();
        for p in &unassigned {
            let c = self.candidates(self.pattern.edge(*p).expect("pattern edge"), assigned);
            if c.is_empty() {
                return None;
            }
            cands.insert(*p, c);
        }
        let counts: BTreeMap<EdgeId, usize> = cands.iter().map(|(p, c)| (*p, c.len())).collect();
        let view = SearchView {
            pattern: self.pattern,
            host: self.host,
            assigned,
            candidate_counts: &counts,
        };
        let mut best: Option<(u64, EdgeId)> = None;
        for (p, cs) in &cands {
            for c in cs {
                let key = (h.priority(&view, *p, *c), *p);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let (_, p) = best?;
        let mut chosen = cands.remove(&p).expect("chosen edge has candidates");
        chosen.sort_by_key(|c| (h.priority(&view, p, *c), *c));
        Some((p, chosen))
    }
}

/// Greedy order-preserving subsequence test.
fn is_subsequence(wanted: &[EdgeId], hay: &[EdgeId]) -> bool {
    let mut it = hay.iter();
    wanted.iter().all(|w| it.any(|h| h == w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enrich::{EnrichmentKind, LinearMap};
    use crate::matcher::{LabelSelectivity, SmallestCandidateSet};
    use crate::space::{Enrichment, Label};
    use crate::syntax::parse;

    fn p(s: &str) -> Expression {
        parse(s).unwrap()
    }

    #[test]
    fn lone_variable_vertex_matches_every_edge() {
        let pat = Metagraph::from_expression(&p("$x"));
        let host = Metagraph::load("a b c").unwrap();
        assert_eq!(find_homomorphisms(&pat, &host, None).len(), 3);
    }

    #[test]
    fn symbol_vertex_needs_equal_label() {
        let pat = Metagraph::from_expression(&p("b"));
        let host = Metagraph::load("a b c").unwrap();
        let hs = find_homomorphisms(&pat, &host, None);
        assert_eq!(hs.len(), 1);
        assert_eq!(
            host.edge(hs[0].edges.values().next().copied().unwrap()).unwrap().label,
            Label::symbol("b")
        );
    }

    #[test]
    fn order_preserving_subsequence() {
        let pat = Metagraph::from_expression(&p("(a c)"));
        let host = Metagraph::load("(a b c) (c b a)").unwrap();
        let hs = find_homomorphisms(&pat, &host, None);
        assert_eq!(hs.len(), 1);
        let root = pat.roots().next().unwrap();
        assert_eq!(host.lift(hs[0].get(root).unwrap()).unwrap(), p("(a b c)"));
    }

    #[test]
    fn output_is_lexicographic_and_limit_truncates() {
        let pat = Metagraph::from_expression(&p("($x $y)"));
        let host = Metagraph::load("(a b) (b a) (a a)").unwrap();
        let all = find_homomorphisms(&pat, &host, None);
        let keys: Vec<Vec<EdgeId>> = all.iter().map(|h| h.edges.values().copied().collect()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(find_homomorphisms(&pat, &host, Some(2)), all[..2].to_vec());
    }

    #[test]
    fn typed_edges_follow_inheritance() {
        let host =
            Metagraph::load("(: Animal Type) (: Cat Type) (: Cat Animal) (: tom Cat) (: rex Dog) tom rex").unwrap();
        let host_types = edge_types(&host);
        let pat = Metagraph::from_expression(&p("$a"));
        let pid = pat.roots().next().unwrap();
        let want = |t: &str| -> EdgeTypes { [(pid, vec![p(t)])].into() };
        let images = |pt: &EdgeTypes| -> Vec<Expression> {
            HomSearch::new(&pat, &host)
                .types(pt, &host_types, &host)
                .run()
                .iter()
                .map(|h| host.lift(h.get(pid).unwrap()).unwrap())
                .collect()
        };
        // Cat is in the closure of Cat and of Animal
        assert!(images(&want("Animal")).contains(&p("tom")));
        assert!(images(&want("Cat")).contains(&p("tom")));
        assert!(!images(&want("Animal")).contains(&p("rex")));
        assert!(!images(&want("Cat")).contains(&p("Animal")));
    }

    #[test]
    fn enrichment_witness_is_shared() {
        let mut reg = EnrichmentRegistry::new();
        reg.register(EnrichmentKind::vector_f64(
            "v",
            vec![LinearMap::scaled_identity(1, 2.0)],
        ))
        .unwrap();
        let en = |x: f64| Enrichment::from_f64s("v", &[x]);
        let pat = Metagraph::from_expressions(&[p("a").enriched(en(1.0)), p("b").enriched(en(3.0))]);
        let host = Metagraph::from_expressions(&[
            p("a").enriched(en(2.0)),
            p("b").enriched(en(6.0)),
            p("b").enriched(en(3.0)),
        ]);
        let hs = HomSearch::new(&pat, &host).enrichments(&reg).run();
        let ws: Vec<_> = hs.iter().map(|h| h.enrichment_witness["v"]).collect();
        // a needs the doubling map, so b must be doubled too
        assert_eq!(ws, vec![1]);
        // without a registry only identity is available
        assert!(HomSearch::new(&pat, &host).run().is_empty());
    }

    #[test]
    fn heuristics_do_not_change_the_result_set() {
        let pat = Metagraph::load("(f $x) (g $x $y)").unwrap();
        let host = Metagraph::load("(f a) (f b) (g a b) (g b b) (g a c d)").unwrap();
        let mut base = find_homomorphisms(&pat, &host, None);
        for h in [&LabelSelectivity as &dyn OrderingHeuristic, &SmallestCandidateSet] {
            let mut got = HomSearch::new(&pat, &host).heuristic(h).run();
            got.sort();
            base.sort();
            assert_eq!(got, base);
        }
    }

    #[test]
    fn validate_rejects_broken_maps() {
        let pat = Metagraph::from_expression(&p("(a $x)"));
        let host = Metagraph::load("(a b)").unwrap();
        let s = HomSearch::new(&pat, &host);
        let good = s.run().pop().unwrap();
        assert!(s.is_valid(&good));
        let mut bad = good.clone();
        let root = pat.roots().next().unwrap();
        let other = *bad.edges.values().find(|v| **v != good.get(root).unwrap()).unwrap();
        bad.edges.insert(root, other);
        assert!(!s.is_valid(&bad));
    }

    #[test]
    fn composition_of_homomorphisms_is_a_homomorphism() {
        let a = Metagraph::from_expression(&p("($x $y)"));
        let b = Metagraph::load("(f $z)").unwrap();
        let c = Metagraph::load("(f g) (f h k)").unwrap();
        for ab in find_homomorphisms(&a, &b, None) {
            for bc in find_homomorphisms(&b, &c, None) {
                assert!(HomSearch::new(&a, &c).is_valid(&ab.then(&bc)));
            }
        }
    }
}
