use std::collections::{BTreeMap, BTreeSet};

use crate::space::{Edge, EdgeId, Metagraph};

/// Brute-force isomorphism search. Edges must agree on label, enrichment,
/// target lists (position by position), in-degree and root status.
pub fn isomorphism(a: &Metagraph, b: &Metagraph) -> Option<BTreeMap<EdgeId, EdgeId>> {
    if a.len() != b.len() || a.root_count() != b.root_count() {
        return None;
    }
    let order: Vec<EdgeId> = a.edge_ids().collect();
    let mut map = BTreeMap::new();
    let mut used = BTreeSet::new();
    extend(a, b, &order, &mut map, &mut used).then_some(map)
}

pub fn is_isomorphic(a: &Metagraph, b: &Metagraph) -> bool {
    isomorphism(a, b).is_some()
}

fn indegree(g: &Metagraph, id: EdgeId) -> usize {
    g.incident(id).map_or(0, BTreeSet::len)
}

fn same_shape(a: &Metagraph, ea: &Edge, b: &Metagraph, eb: &Edge) -> bool {
    ea.label == eb.label
        && ea.enrichment == eb.enrichment
        && ea.targets.len() == eb.targets.len()
        && a.is_root(ea.id) == b.is_root(eb.id)
        && indegree(a, ea.id) == indegree(b, eb.id)
}

fn consistent(a: &Metagraph, b: &Metagraph, ea: &Edge, eb: &Edge, map: &BTreeMap<EdgeId, EdgeId>) -> bool {
    let forward = ea.targets.iter().zip(&eb.targets).all(|(ta, tb)| match map.get(ta) {
        Some(m) => m == tb,
        None => *ta != ea.id || *tb == eb.id,
    });
    forward
        && a.incident(ea.id)
            .expect("edge exists")
            .iter()
            .all(|r| match map.get(r) {
                None => true,
                Some(rb) => {
                    let ra = a.edge(*r).expect("referrer");
                    let rb = b.edge(*rb).expect("image");
                    ra.targets
                        .iter()
                        .zip(&rb.targets)
                        .all(|(x, y)| (*x == ea.id) == (*y == eb.id))
                }
            })
}

fn extend(
    a: &Metagraph,
    b: &Metagraph,
    order: &[EdgeId],
    map: &mut BTreeMap<EdgeId, EdgeId>,
    used: &mut BTreeSet<EdgeId>,
) -> bool {
    let Some((next, rest)) = order.split_first() else {
        return true;
    };
    let ea = a.edge(*next).expect("edge exists");
    let candidates: Vec<EdgeId> = b.with_label(&ea.label).filter(|c| !used.contains(c)).collect();
    for c in candidates {
        let eb = b.edge(c).expect("indexed edge");
        if !same_shape(a, ea, b, eb) || !consistent(a, b, ea, eb, map) {
            continue;
        }
        map.insert(*next, c);
        used.insert(c);
        if extend(a, b, rest, map, used) {
            return true;
        }
        map.remove(next);
        used.remove(&c);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renumbered_copies_are_isomorphic() {
        let a = Metagraph::load("(f a) (g (f a) b)").unwrap();
        let b = Metagraph::load("b (g (f a) b) (f a)").unwrap();
        let mut c = b.clone();
        c.unmark_root(c.find_expression(&crate::syntax::parse("b").unwrap()).unwrap())
            .unwrap();
        assert!(!is_isomorphic(&a, &b));
        assert!(is_isomorphic(&a, &c));
        let m = isomorphism(&a, &c).unwrap();
        for (x, y) in &m {
            assert_eq!(a.lift(*x).unwrap(), c.lift(*y).unwrap());
        }
    }

    #[test]
    fn argument_order_matters() {
        let a = Metagraph::load("(f a b)").unwrap();
        let b = Metagraph::load("(f b a)").unwrap();
        assert!(!is_isomorphic(&a, &b));
        assert!(is_isomorphic(&Metagraph::new(), &Metagraph::new()));
    }
}
