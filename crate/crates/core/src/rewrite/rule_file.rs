//! Text format for rewrite rules.
//!
//! ```text
//! (!rule spo <L> <R> ((<L-path> <R-path>) ...))
//! (!rule dpo <L> <K> <R> ((<K-path> <L-path>) ...) ((<K-path> <R-path>) ...))
//! ```
//!
//! Each graph is a single expression, or `(!graph e1 .. en)` for a graph
//! with several (or no) roots. A path is a list of target indices walked
//! from the root; for `!graph` the first index picks the root.

use std::collections::BTreeMap;

use super::{DPORule, RewriteError, SPORule};
use crate::space::{EdgeId, Expression, Metagraph};
use crate::syntax::Reader;

pub const RULE_HEAD: &str = "!rule";
pub const GRAPH_HEAD: &str = "!graph";

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum RuleDef {
    Spo(SPORule),
    Dpo(DPORule),
}

struct PathGraph {
    graph: Metagraph,
    roots: Vec<EdgeId>,
    multi: bool,
}

fn bad(msg: impl Into<String>) -> RewriteError {
    RewriteError::InvalidRule(msg.into())
}

fn build_graph(e: &Expression) -> PathGraph {
    match e.as_list() {
        Some(items) if items.first().is_some_and(|h| h.is_symbol(GRAPH_HEAD)) => {
            let mut graph = Metagraph::new();
            let roots = items[1..].iter().map(|i| graph.add_expression(i)).collect();
            PathGraph {
                graph,
                roots,
                multi: true,
            }
        }
        _ => {
            let graph = Metagraph::from_expression(e);
            let roots = graph.roots().collect();
            PathGraph {
                graph,
                roots,
                multi: false,
            }
        }
    }
}

fn indices(path: &Expression) -> Result<Vec<usize>, RewriteError> {
    let items = path
        .as_list()
        .ok_or_else(|| bad(format!("path {path} is not a list")))?;
    items
        .iter()
        .map(|i| {
            i.as_atom()
                .and_then(|l| l.name())
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| bad(format!("path step {i} is not an index")))
        })
        .collect()
}

/// Edge reached by walking `path` through `graph` from `roots`.
pub fn resolve_path(graph: &Metagraph, roots: &[EdgeId], multi: bool, path: &[usize]) -> Option<EdgeId> {
    let (mut at, rest) = if multi {
        let (first, rest) = path.split_first()?;
        (*roots.get(*first)?, rest)
    } else {
        (*roots.first()?, path)
    };
    for i in rest {
        at = *graph.edge(at)?.targets.get(*i)?;
    }
    Some(at)
}

fn pairs(mapping: &Expression, from: &PathGraph, to: &PathGraph) -> Result<BTreeMap<EdgeId, EdgeId>, RewriteError> {
    let items = mapping.as_list().ok_or_else(|| bad("mapping is not a list of pairs"))?;
    let mut out = BTreeMap::new();
    for pair in items {
        let [a, b] = pair.as_list().ok_or_else(|| bad(format!("{pair} is not a pair")))? else {
            return Err(bad(format!("{pair} is not a pair")));
        };
        let resolve = |g: &PathGraph, p: &Expression| {
            resolve_path(&g.graph, &g.roots, g.multi, &indices(p)?)
                .ok_or_else(|| bad(format!("path {p} leads nowhere")))
        };
        let (x, y) = (resolve(from, a)?, resolve(to, b)?);
        if out.insert(x, y).is_some_and(|old| old != y) {
            return Err(bad(format!("{a} is mapped twice")));
        }
    }
    Ok(out)
}

/// Parses every `(!rule ...)` form in `text`; other forms are rejected.
pub fn parse_rules(text: &str, reader: &Reader) -> Result<Vec<RuleDef>, RewriteError> {
    let exprs = reader.parse_all(text).map_err(|e| bad(e.to_string()))?;
    exprs
        .iter()
        .enumerate()
        .map(|(n, e)| parse_rule(e).map(|r| name_rule(r, format!("rule-{n}"))))
        .collect()
}

fn name_rule(r: RuleDef, name: String) -> RuleDef {
    match r {
        RuleDef::Spo(s) => RuleDef::Spo(s.named(name)),
        RuleDef::Dpo(d) => RuleDef::Dpo(d.named(name)),
    }
}

fn parse_rule(e: &Expression) -> Result<RuleDef, RewriteError> {
    let items = e.as_list().unwrap_or_default();
    if items.len() < 2 || !items[0].is_symbol(RULE_HEAD) {
        return Err(bad(format!("{e} is not a rule")));
    }
    let kind = items[1].as_atom().and_then(|l| l.name()).unwrap_or("");
    match (kind, items.len()) {
        ("spo", 5) => {
            let (l, r) = (build_graph(&items[2]), build_graph(&items[3]));
            let map = pairs(&items[4], &l, &r)?;
            Ok(RuleDef::Spo(SPORule::new(l.graph, r.graph, map)?))
        }
        ("dpo", 7) => {
            let (l, k, r) = (build_graph(&items[2]), build_graph(&items[3]), build_graph(&items[4]));
            let lm = pairs(&items[5], &k, &l)?;
            let km = pairs(&items[6], &k, &r)?;
            Ok(RuleDef::Dpo(DPORule::new(l.graph, k.graph, r.graph, lm, km)?))
        }
        _ => Err(bad(format!(
            "{e}: expected (!rule spo L R pairs) or (!rule dpo L K R l-pairs k-pairs)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{apply_dpo, apply_spo, find_rule_matches, DpoOutcome};
    use crate::syntax::parse;

    #[test]
    fn spo_rule_from_text() {
        let text = "(!rule spo (likes $a $b) (loves $a $b) ((() ()) ((1) (1)) ((2) (2))))";
        let rules = parse_rules(text, &Reader::default()).unwrap();
        let RuleDef::Spo(rule) = &rules[0] else {
            panic!("expected spo")
        };
        assert_eq!(rule.name, "rule-0");
        let host = Metagraph::load("(likes ann bob)").unwrap();
        let m = find_rule_matches(&host, rule).pop().unwrap();
        let d = apply_spo(&host, rule, &m).unwrap();
        assert_eq!(d.result.dump().unwrap(), "(loves ann bob)\n");
    }

    #[test]
    fn dpo_rule_with_empty_graphs() {
        let text = "(!rule dpo v (!graph) (!graph) () ())";
        let RuleDef::Dpo(rule) = parse_rules(text, &Reader::default()).unwrap().remove(0) else {
            panic!("expected dpo")
        };
        let host = Metagraph::load("v (x v)").unwrap();
        let m = find_rule_matches(&host, &rule).pop().unwrap();
        assert!(matches!(apply_dpo(&host, &rule, &m).unwrap(), DpoOutcome::Violation(_)));
    }

    #[test]
    fn multi_root_paths() {
        let g = build_graph(&parse("(!graph a (f b c))").unwrap());
        let at = |p: &[usize]| resolve_path(&g.graph, &g.roots, g.multi, p).map(|id| g.graph.lift(id).unwrap());
        assert_eq!(at(&[0]), Some(parse("a").unwrap()));
        assert_eq!(at(&[1, 2]), Some(parse("c").unwrap()));
        assert_eq!(at(&[1, 3]), None);
        assert_eq!(at(&[]), None);
    }

    #[test]
    fn malformed_rules() {
        let r = Reader::default();
        assert!(parse_rules("(foo)", &r).is_err());
        assert!(parse_rules("(!rule spo a b ((() (9))))", &r).is_err());
        assert!(parse_rules("(!rule spo (a b) (c d) (((1) (1)) ((2) (1))))", &r).is_err());
        assert!(parse_rules("(!rule dpo a b", &r).is_err());
    }
}
