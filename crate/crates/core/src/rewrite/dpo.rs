use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{validate_match, Derivation, RewriteError, Rule, SPORule};
use crate::enrich::EnrichmentRegistry;
use crate::matcher::{EdgeTypes, HomomorphismMap};
use crate::space::{EdgeId, Metagraph, RawEdge};

/// Double-pushout production `lhs <-l- interface -k-> rhs`. Both maps
/// must be exact embeddings: total, injective, label- and
/// enrichment-preserving, with targets mapped position by position.
#[derive(Debug, Clone)]
pub struct DPORule {
    pub name: String,
    pub lhs: Metagraph,
    pub interface: Metagraph,
    pub rhs: Metagraph,
    pub l: BTreeMap<EdgeId, EdgeId>,
    pub k: BTreeMap<EdgeId, EdgeId>,
    pub lhs_types: EdgeTypes,
}

fn check_embedding(
    from: &Metagraph,
    to: &Metagraph,
    map: &BTreeMap<EdgeId, EdgeId>,
    side: &str,
) -> Result<(), RewriteError> {
    let bad = |msg: String| Err(RewriteError::InvalidRule(format!("{side}: {msg}")));
    if map.len() != from.len() || from.edge_ids().any(|e| !map.contains_key(&e)) {
        return bad("map is not total on the interface".into());
    }
    if map.values().collect::<BTreeSet<_>>().len() != map.len() {
        return bad("map is not injective".into());
    }
    for (a, b) in map {
        let (Some(ea), Some(eb)) = (from.edge(*a), to.edge(*b)) else {
            return bad(format!("{a} -> {b} names a missing edge"));
        };
        let targets: Vec<EdgeId> = ea.targets.iter().map(|t| map[t]).collect();
        if ea.label != eb.label || ea.enrichment != eb.enrichment || targets != eb.targets {
            return bad(format!("{a} -> {b} does not preserve structure"));
        }
    }
    Ok(())
}

impl DPORule {
    pub fn new(
        lhs: Metagraph,
        interface: Metagraph,
        rhs: Metagraph,
        l: BTreeMap<EdgeId, EdgeId>,
        k: BTreeMap<EdgeId, EdgeId>,
    ) -> Result<Self, RewriteError> {
        check_embedding(&interface, &lhs, &l, "l")?;
        check_embedding(&interface, &rhs, &k, "k")?;
        Ok(DPORule {
            name: "dpo".into(),
            lhs,
            interface,
            rhs,
            l,
            k,
            lhs_types: EdgeTypes::new(),
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_lhs_types(mut self, types: EdgeTypes) -> Self {
        self.lhs_types = types;
        self
    }

    /// The SPO rule with map `k ∘ l⁻¹`.
    pub fn to_spo(&self) -> SPORule {
        let map = self.l.iter().map(|(i, lhs)| (*lhs, self.k[i])).collect();
        SPORule::new(self.lhs.clone(), self.rhs.clone(), map)
            .expect("embeddings give an injective map")
            .named(self.name.clone())
            .with_lhs_types(self.lhs_types.clone())
    }

    fn preserved(&self) -> BTreeSet<EdgeId> {
        self.l.values().copied().collect()
    }
}

impl Rule for DPORule {
    fn name(&self) -> &str {
        &self.name
    }

    fn lhs(&self) -> &Metagraph {
        &self.lhs
    }

    fn lhs_types(&self) -> &EdgeTypes {
        &self.lhs_types
    }
}

/// Why a DPO step cannot be applied at a match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GluingViolation {
    /// `edge` survives but targets `target`, which would be deleted.
    Dangling { edge: EdgeId, target: EdgeId },
    /// The match sends a deleted and a preserved left-hand-side edge to the
    /// same host edge.
    Identification {
        deleted: EdgeId,
        preserved: EdgeId,
        image: EdgeId,
    },
}

impl fmt::Display for GluingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GluingViolation::Dangling { edge, target } => write!(f, "edge {edge} would dangle after deleting {target}"),
            GluingViolation::Identification {
                deleted,
                preserved,
                image,
            } => write!(f, "{deleted} (deleted) and {preserved} (preserved) both map to {image}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum DpoOutcome {
    Derived(Box<Derivation>),
    Violation(GluingViolation),
}

impl DpoOutcome {
    pub fn derivation(self) -> Option<Derivation> {
        match self {
            DpoOutcome::Derived(d) => Some(*d),
            DpoOutcome::Violation(_) => None,
        }
    }
}

pub fn apply_dpo(host: &Metagraph, rule: &DPORule, m: &HomomorphismMap) -> Result<DpoOutcome, RewriteError> {
    apply_dpo_with(host, rule, m, None)
}

pub fn apply_dpo_with(
    host: &Metagraph,
    rule: &DPORule,
    m: &HomomorphismMap,
    registry: Option<&EnrichmentRegistry>,
) -> Result<DpoOutcome, RewriteError> {
    let m = validate_match(host, rule, m, registry)?;
    let preserved = rule.preserved();
    let deleted_lhs: Vec<EdgeId> = rule.lhs.edge_ids().filter(|e| !preserved.contains(e)).collect();

    for d in &deleted_lhs {
        if let Some(p) = preserved.iter().find(|p| m.edges[*p] == m.edges[d]) {
            return Ok(DpoOutcome::Violation(GluingViolation::Identification {
                deleted: *d,
                preserved: *p,
                image: m.edges[d],
            }));
        }
    }
    let doomed: BTreeSet<EdgeId> = deleted_lhs.iter().map(|d| m.edges[d]).collect();
    for target in &doomed {
        let referrers = host.incident(*target).expect("matched edge exists");
        if let Some(edge) = referrers.iter().find(|r| !doomed.contains(r)) {
            return Ok(DpoOutcome::Violation(GluingViolation::Dangling {
                edge: *edge,
                target: *target,
            }));
        }
    }

    let mut raw = host.to_raw();
    for d in &doomed {
        raw.edges.remove(d);
        raw.roots.remove(d);
    }
    debug_assert!(!raw.has_dangling());
    let (intermediate, _) = raw.clone().canonicalize();

    let mut mu: BTreeMap<EdgeId, EdgeId> = rule.k.iter().map(|(i, r)| (*r, m.edges[&rule.l[i]])).collect();
    let created: Vec<EdgeId> = rule.rhs.edge_ids().filter(|x| !mu.contains_key(x)).collect();
    for x in &created {
        mu.insert(*x, raw.fresh_id());
    }
    for x in &created {
        let re = rule.rhs.edge(*x).expect("rhs edge");
        raw.edges.insert(
            mu[x],
            RawEdge {
                label: re.label.clone(),
                targets: re.targets.iter().map(|t| mu[t]).collect(),
                enrichment: re.enrichment.clone(),
            },
        );
        if rule.rhs.is_root(*x) {
            raw.roots.insert(mu[x]);
        }
    }
    let (result, merge) = raw.canonicalize();
    let rho = host
        .edge_ids()
        .filter(|g| !doomed.contains(g))
        .map(|g| (g, merge[&g]))
        .collect();
    let mu = mu.into_iter().map(|(x, h)| (x, merge[&h])).collect();
    Ok(DpoOutcome::Derived(Box::new(Derivation {
        rule: rule.name.clone(),
        matching: m,
        result,
        rho,
        mu,
        intermediate: Some(intermediate),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{apply_spo, derive_all_dpo, find_rule_matches, is_isomorphic};
    use crate::space::Expression;
    use crate::syntax::parse;

    fn p(s: &str) -> Expression {
        parse(s).unwrap()
    }

    fn id_of(g: &Metagraph, s: &str) -> EdgeId {
        g.find_expression(&p(s)).unwrap()
    }

    /// Deletes `v`, keeps nothing.
    fn delete_v() -> DPORule {
        let l = Metagraph::from_expression(&p("v"));
        DPORule::new(l, Metagraph::new(), Metagraph::new(), BTreeMap::new(), BTreeMap::new()).unwrap()
    }

    #[test]
    fn dangling_edge_is_a_violation() {
        let host = Metagraph::load("v (x v)").unwrap();
        let rule = delete_v();
        let m = find_rule_matches(&host, &rule).pop().unwrap();
        match apply_dpo(&host, &rule, &m).unwrap() {
            DpoOutcome::Violation(GluingViolation::Dangling { edge, target }) => {
                assert_eq!(edge, id_of(&host, "(x v)"));
                assert_eq!(target, id_of(&host, "v"));
            }
            other => panic!("expected a dangling violation, got {other:?}"),
        }
        assert_eq!(host.dump().unwrap(), "v\n(x v)\n");
    }

    #[test]
    fn clean_deletion_succeeds() {
        let host = Metagraph::load("v w").unwrap();
        let d = derive_all_dpo(&host, &delete_v()).pop().unwrap();
        assert_eq!(d.result.dump().unwrap(), "w\n");
        assert!(d.intermediate.as_ref().unwrap().check_indices().is_ok());
    }

    #[test]
    fn pure_interface_rule_is_identity() {
        let g = Metagraph::from_expression(&p("(f $x)"));
        let id: BTreeMap<_, _> = g.edge_ids().map(|e| (e, e)).collect();
        let rule = DPORule::new(g.clone(), g.clone(), g, id.clone(), id).unwrap();
        let host = Metagraph::load("(f a) (f b) c").unwrap();
        let ds = derive_all_dpo(&host, &rule);
        assert_eq!(ds.len(), 2);
        for d in ds {
            assert!(is_isomorphic(&d.result, &host));
        }
    }

    #[test]
    fn identification_is_a_violation() {
        // deleting $x and keeping $y, with the match sending both to `a`
        let l = Metagraph::from_expression(&p("(p $x $y)"));
        let k = Metagraph::from_expression(&p("$y"));
        let y = id_of(&k, "$y");
        let rule = DPORule::new(l.clone(), k.clone(), k, [(y, id_of(&l, "$y"))].into(), [(y, y)].into()).unwrap();
        let host = Metagraph::load("(p a a)").unwrap();
        let m = find_rule_matches(&host, &rule).pop().unwrap();
        assert!(matches!(
            apply_dpo(&host, &rule, &m).unwrap(),
            DpoOutcome::Violation(GluingViolation::Identification { .. })
        ));
        // the SPO reading deletes instead
        assert!(apply_spo(&host, &rule.to_spo(), &m).is_ok());
    }

    #[test]
    fn matches_spo_when_gluing_holds() {
        // (edge $a $b) becomes (edge $b $a)
        let l = Metagraph::from_expression(&p("(edge $a $b)"));
        let k = Metagraph::load("edge $a $b").unwrap();
        let mut r = Metagraph::load("edge $a $b").unwrap();
        r.add_expression(&p("(edge $b $a)"));
        let lm = ["edge", "$a", "$b"]
            .iter()
            .map(|s| (id_of(&k, s), id_of(&l, s)))
            .collect();
        let km = ["edge", "$a", "$b"]
            .iter()
            .map(|s| (id_of(&k, s), id_of(&r, s)))
            .collect();
        let rule = DPORule::new(l, k, r, lm, km).unwrap();
        let host = Metagraph::load("(edge x y) (other z)").unwrap();
        let m = find_rule_matches(&host, &rule).pop().unwrap();
        let dpo = apply_dpo(&host, &rule, &m).unwrap().derivation().unwrap();
        let spo = apply_spo(&host, &rule.to_spo(), &m).unwrap();
        assert!(is_isomorphic(&dpo.result, &spo.result));
        assert!(dpo.result.find_expression(&p("(edge y x)")).is_some());
        assert!(dpo.result.find_expression(&p("(edge x y)")).is_none());
    }

    #[test]
    fn embeddings_are_checked() {
        let l = Metagraph::from_expression(&p("(f a)"));
        let k = Metagraph::from_expression(&p("b"));
        let b = id_of(&k, "b");
        assert!(DPORule::new(
            l.clone(),
            k.clone(),
            k.clone(),
            [(b, id_of(&l, "a"))].into(),
            [(b, b)].into()
        )
        .is_err());
        assert!(DPORule::new(l, k.clone(), k, BTreeMap::new(), [(b, b)].into()).is_err());
    }
}
