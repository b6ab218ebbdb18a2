use std::collections::{BTreeMap, BTreeSet};

use super::{validate_match, Derivation, RewriteError, Rule};
use crate::enrich::EnrichmentRegistry;
use crate::matcher::{EdgeTypes, HomSearch, HomomorphismMap};
use crate::space::{EdgeId, Expression, Metagraph, RawEdge};

/// Single-pushout rule: a partial injective map from `lhs` to `rhs`.
/// Left-hand-side edges outside the map's domain are deleted; right-hand
/// side edges outside its range are created.
#[derive(Debug, Clone)]
pub struct SPORule {
    pub name: String,
    pub lhs: Metagraph,
    pub rhs: Metagraph,
    pub map: BTreeMap<EdgeId, EdgeId>,
    pub lhs_types: EdgeTypes,
}

impl SPORule {
    pub fn new(lhs: Metagraph, rhs: Metagraph, map: BTreeMap<EdgeId, EdgeId>) -> Result<Self, RewriteError> {
        if let Some(l) = map.keys().find(|l| !lhs.contains(**l)) {
            return Err(RewriteError::InvalidRule(format!("{l} is not a left-hand-side edge")));
        }
        if let Some(r) = map.values().find(|r| !rhs.contains(**r)) {
            return Err(RewriteError::InvalidRule(format!("{r} is not a right-hand-side edge")));
        }
        let range: BTreeSet<_> = map.values().collect();
        if range.len() != map.len() {
            return Err(RewriteError::InvalidRule("rule map is not injective".into()));
        }
        Ok(SPORule {
            name: "spo".into(),
            lhs,
            rhs,
            map,
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
}

impl Rule for SPORule {
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

pub fn apply_spo(host: &Metagraph, rule: &SPORule, m: &HomomorphismMap) -> Result<Derivation, RewriteError> {
    apply_spo_with(host, rule, m, None)
}

/// Deletes `m(lhs ∖ dom map)`, updates preserved edges to their
/// right-hand-side shape, creates the rest of `rhs`, then drops every edge
/// left with a missing target. When `m` identifies a deleted item with a
/// preserved one, deletion wins.
///
/// A preserved edge takes the right-hand-side label unless that label is a
/// variable. Its host targets are kept when the rule leaves its target
/// structure alone, which keeps any extra targets the match skipped;
/// otherwise they are replaced by the images of the right-hand-side
/// targets.
pub fn apply_spo_with(
    host: &Metagraph,
    rule: &SPORule,
    m: &HomomorphismMap,
    registry: Option<&EnrichmentRegistry>,
) -> Result<Derivation, RewriteError> {
    let m = validate_match(host, rule, m, registry)?;
    let mut raw = host.to_raw();
    let doomed: BTreeSet<EdgeId> = rule
        .lhs
        .edge_ids()
        .filter(|l| !rule.map.contains_key(l))
        .map(|l| m.edges[&l])
        .collect();

    let mut mu: BTreeMap<EdgeId, EdgeId> = rule.map.iter().map(|(l, r)| (*r, m.edges[l])).collect();
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

    for (l, x) in &rule.map {
        let h = m.edges[l];
        if doomed.contains(&h) {
            continue;
        }
        let le = rule.lhs.edge(*l).expect("lhs edge");
        let re = rule.rhs.edge(*x).expect("rhs edge");
        let target = raw.edges.get_mut(&h).expect("matched host edge");
        if !re.label.is_variable() && re.label != le.label {
            target.label = re.label.clone();
        }
        if re.enrichment != le.enrichment {
            target.enrichment = re.enrichment.clone();
        }
        let same_shape = re.targets.len() == le.targets.len()
            && le
                .targets
                .iter()
                .zip(&re.targets)
                .all(|(lt, rt)| rule.map.get(lt) == Some(rt));
        if !same_shape {
            target.targets = re.targets.iter().map(|t| mu[t]).collect();
        }
    }

    raw.remove_with_cascade(&doomed);
    let survivors: BTreeSet<EdgeId> = raw.edges.keys().copied().collect();
    let (result, merge) = raw.canonicalize();
    let rho = host
        .edge_ids()
        .filter(|g| survivors.contains(g))
        .map(|g| (g, merge[&g]))
        .collect();
    let mu = mu
        .into_iter()
        .filter_map(|(x, h)| merge.get(&h).map(|h| (x, *h)))
        .collect();
    Ok(Derivation {
        rule: rule.name.clone(),
        matching: m,
        result,
        rho,
        mu,
        intermediate: None,
    })
}

/// Rewrites a whole expression with the equation `lhs = rhs` by graph
/// rewriting: the host is `expr` as a metagraph, the rule keeps all of
/// `lhs` and adds `rhs`, sharing its variables. `None` when `lhs` does
/// not match `expr` at the top.
pub fn rewrite_root(expr: &Expression, lhs: &Expression, rhs: &Expression) -> Option<Expression> {
    let host = Metagraph::from_expression(expr);
    let hroot = host.roots().next()?;
    let l = Metagraph::from_expression(lhs);
    let lroot = l.roots().next()?;
    let mut r = l.clone();
    let rroot = r.add_expression(rhs);
    let map = l.edge_ids().map(|e| (e, e)).collect();
    let rule = SPORule::new(l, r, map).expect("identity map is a valid rule");
    let m = HomSearch::new(&rule.lhs, &host)
        .exact_arity()
        .pin(lroot, hroot)
        .run()
        .into_iter()
        .next()?;
    let d = apply_spo(&host, &rule, &m).ok()?;
    d.result.lift(*d.mu.get(&rroot)?).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::find_homomorphisms;
    use crate::rewrite::{derive_all_spo, find_rule_matches, is_isomorphic};
    use crate::syntax::parse;

    fn p(s: &str) -> Expression {
        parse(s).unwrap()
    }

    fn id_of(g: &Metagraph, s: &str) -> EdgeId {
        g.find_expression(&p(s)).unwrap()
    }

    fn commutes(rule: &SPORule, d: &Derivation) -> bool {
        rule.map
            .iter()
            .all(|(l, x)| match (d.rho.get(&d.matching.edges[l]), d.mu.get(x)) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            })
    }

    #[test]
    fn identity_rule_changes_nothing() {
        let host = Metagraph::load("(f a) (g a b)").unwrap();
        let l = Metagraph::from_expression(&p("(f $x)"));
        let map = l.edge_ids().map(|e| (e, e)).collect();
        let rule = SPORule::new(l.clone(), l, map).unwrap();
        for d in derive_all_spo(&host, &rule) {
            assert!(is_isomorphic(&d.result, &host));
            assert!(d.deleted(&host).is_empty());
            assert!(commutes(&rule, &d));
        }
    }

    #[test]
    fn deleting_a_vertex_cascades() {
        let host = Metagraph::load("v (x v) w").unwrap();
        let rule = SPORule::new(Metagraph::from_expression(&p("v")), Metagraph::new(), BTreeMap::new()).unwrap();
        let ms = find_rule_matches(&host, &rule);
        assert_eq!(ms.len(), 1);
        let d = apply_spo(&host, &rule, &ms[0]).unwrap();
        assert_eq!(d.result.dump().unwrap(), "w\n");
        assert_eq!(
            d.deleted(&host),
            BTreeSet::from([id_of(&host, "v"), id_of(&host, "(x v)")])
        );
        assert!(d.result.check_indices().is_ok());
    }

    #[test]
    fn relabel_and_create() {
        // (likes $a $b) becomes (loves $a $b) plus a new root (happy $a)
        let host = Metagraph::load("(likes ann bob)").unwrap();
        let l = Metagraph::from_expression(&p("(likes $a $b)"));
        let mut r = Metagraph::new();
        let r_root = r.add_expression(&p("(loves $a $b)"));
        r.add_expression(&p("(happy $a)"));
        let mut map = BTreeMap::new();
        for (ls, rs) in [("(likes $a $b)", "(loves $a $b)"), ("$a", "$a"), ("$b", "$b")] {
            map.insert(id_of(&l, ls), id_of(&r, rs));
        }
        let rule = SPORule::new(l, r, map).unwrap();
        let d = derive_all_spo(&host, &rule).pop().unwrap();
        assert_eq!(d.result.dump().unwrap(), "(loves ann bob)\n(happy ann)\n");
        assert_eq!(d.result.lift(d.mu[&r_root]).unwrap(), p("(loves ann bob)"));
        assert!(commutes(&rule, &d));
        // the host is untouched
        assert_eq!(host.dump().unwrap(), "(likes ann bob)\n");
    }

    #[test]
    fn non_injective_match_is_honoured() {
        // $x and $y both land on `a`; deleting (p $x $y) only
        let host = Metagraph::load("(p a a) a").unwrap();
        let l = Metagraph::from_expression(&p("(p $x $y)"));
        let r = Metagraph::load("$x $y").unwrap();
        let map = [("$x", "$x"), ("$y", "$y")]
            .iter()
            .map(|(a, b)| (id_of(&l, a), id_of(&r, b)))
            .collect();
        let rule = SPORule::new(l.clone(), r, map).unwrap();
        let ms = find_rule_matches(&host, &rule);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].edges[&id_of(&l, "$x")], ms[0].edges[&id_of(&l, "$y")]);
        let d = apply_spo(&host, &rule, &ms[0]).unwrap();
        assert_eq!(d.result.dump().unwrap(), "a\n");
    }

    #[test]
    fn deletion_wins_over_preservation() {
        // deleting $x while preserving $y, with both mapped to `a`
        let host = Metagraph::load("(p a a)").unwrap();
        let l = Metagraph::from_expression(&p("(p $x $y)"));
        let r = Metagraph::load("$y").unwrap();
        let map = [(id_of(&l, "$y"), id_of(&r, "$y"))].into();
        let rule = SPORule::new(l, r, map).unwrap();
        let d = derive_all_spo(&host, &rule).pop().unwrap();
        assert!(d.result.find_expression(&p("a")).is_none());
        assert!(d.mu.is_empty());
    }

    #[test]
    fn invalid_match_is_rejected() {
        let host = Metagraph::load("(f a)").unwrap();
        let l = Metagraph::from_expression(&p("(g $x)"));
        let rule = SPORule::new(l.clone(), Metagraph::new(), BTreeMap::new()).unwrap();
        let bogus = find_homomorphisms(&Metagraph::from_expression(&p("(f $x)")), &host, None)
            .pop()
            .unwrap();
        assert_eq!(apply_spo(&host, &rule, &bogus).unwrap_err(), RewriteError::InvalidMatch);
    }

    #[test]
    fn rule_map_must_be_injective() {
        let l = Metagraph::load("a b").unwrap();
        let r = Metagraph::load("c").unwrap();
        let map = [(id_of(&l, "a"), id_of(&r, "c")), (id_of(&l, "b"), id_of(&r, "c"))].into();
        assert!(SPORule::new(l, r, map).is_err());
    }

    #[test]
    fn rewrite_root_examples() {
        assert_eq!(
            rewrite_root(&p("(double 7)"), &p("(double $x)"), &p("($x $x)")),
            Some(p("(7 7)"))
        );
        assert_eq!(rewrite_root(&p("bin"), &p("bin"), &p("0")), Some(p("0")));
        assert_eq!(
            rewrite_root(&p("(id (f a))"), &p("(id $x)"), &p("$x")),
            Some(p("(f a)"))
        );
        assert_eq!(rewrite_root(&p("(g a b)"), &p("(g $x $x)"), &p("$x")), None);
        assert_eq!(rewrite_root(&p("(g a b c)"), &p("(g $x $y)"), &p("$x")), None);
        assert_eq!(rewrite_root(&p("(k (double a))"), &p("(double $x)"), &p("x")), None);
    }

    #[test]
    fn non_overlapping_applications_commute() {
        // deletes the list edge only, keeping `f` and the argument
        let host = Metagraph::load("(f a) (f b) c").unwrap();
        let l = Metagraph::from_expression(&p("(f $x)"));
        let r = Metagraph::load("f $x").unwrap();
        let map = ["f", "$x"].iter().map(|s| (id_of(&l, s), id_of(&r, s))).collect();
        let rule = SPORule::new(l, r, map).unwrap();
        let ms = find_rule_matches(&host, &rule);
        assert_eq!(ms.len(), 2);
        let first = apply_spo(&host, &rule, &ms[0]).unwrap().result;
        let second = apply_spo(&host, &rule, &ms[1]).unwrap().result;
        let ab = derive_all_spo(&first, &rule).pop().unwrap().result;
        let ba = derive_all_spo(&second, &rule).pop().unwrap().result;
        assert!(is_isomorphic(&ab, &ba));
    }
}
