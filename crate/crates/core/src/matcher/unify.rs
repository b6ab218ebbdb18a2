use std::collections::BTreeMap;

use super::{Bindings, Side, VarTypes};
use crate::space::{Expression, Metagraph};
use crate::types::{infer_types, inherits};

/// Triangular substitution built during unification.
#[derive(Default)]
struct Unifier {
    subst: BTreeMap<String, (Expression, Side)>,
}

impl Unifier {
    fn walk<'a>(&'a self, mut e: &'a Expression) -> &'a Expression {
        while let Some(v) = e.as_var() {
            match self.subst.get(v) {
                Some((next, _)) => e = next,
                None => break,
            }
        }
        e
    }

    fn occurs(&self, var: &str, e: &Expression) -> bool {
        let e = self.walk(e);
        match e {
            Expression::Atom(_) => e.as_var() == Some(var),
            Expression::List(items) => items.iter().any(|i| self.occurs(var, i)),
            Expression::Enriched(inner, _) => self.occurs(var, inner),
        }
    }

    fn bind(&mut self, var: &str, value: &Expression, side: Side) -> bool {
        if self.occurs(var, value) {
            return false;
        }
        self.subst.insert(var.to_string(), (value.clone(), side));
        true
    }

    fn unify(&mut self, p: &Expression, t: &Expression) -> bool {
        let p = self.walk(p).clone();
        let t = self.walk(t).clone();
        match (&p, &t) {
            (Expression::Atom(a), Expression::Atom(b)) if a == b => true,
            // pattern-side variables take precedence
            (Expression::Atom(_), _) if p.as_var().is_some() => self.bind(p.as_var().unwrap(), &t, Side::Pattern),
            (_, Expression::Atom(_)) if t.as_var().is_some() => self.bind(t.as_var().unwrap(), &p, Side::Target),
            (Expression::Atom(_), Expression::Atom(_)) => false,
            (Expression::List(xs), Expression::List(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
            }
            (Expression::Enriched(x, ex), Expression::Enriched(y, ey)) => ex == ey && self.unify(x, y),
            _ => false,
        }
    }

    fn resolve(&self, e: &Expression) -> Expression {
        match self.walk(e) {
            Expression::Atom(l) => Expression::Atom(l.clone()),
            Expression::List(items) => Expression::List(items.iter().map(|i| self.resolve(i)).collect()),
            Expression::Enriched(inner, en) => Expression::Enriched(Box::new(self.resolve(inner)), en.clone()),
        }
    }

    fn finish(self) -> Bindings {
        let mut out = Bindings::new();
        for (var, (_, side)) in &self.subst {
            let value = self.resolve(&Expression::var(var.clone()));
            out.insert_unchecked(var.clone(), value, *side);
        }
        out
    }
}

/// Most general unifier of `pattern` and `target`. Variables are identified
/// by name on both sides. When a pattern variable faces a target variable
/// the pattern variable is the one bound.
pub fn unify(pattern: &Expression, target: &Expression) -> Option<Bindings> {
    let mut u = Unifier::default();
    u.unify(pattern, target).then(|| u.finish())
}

/// [`unify`] plus type constraints: every constrained variable must be
/// bound to an expression whose type (declared in `space`, or inferred for
/// well-typed applications) inherits from the constraint.
pub fn unify_typed(
    pattern: &Expression,
    target: &Expression,
    space: &Metagraph,
    var_types: &VarTypes,
) -> Option<Bindings> {
    let b = unify(pattern, target)?;
    satisfies_types(&b, space, var_types).then_some(b)
}

pub(crate) fn satisfies_types(b: &Bindings, space: &Metagraph, var_types: &VarTypes) -> bool {
    var_types.iter().all(|(var, required)| match b.get(var) {
        None => true,
        Some(value) => infer_types(space, value).iter().any(|t| inherits(space, t, required)),
    })
}

/// Replaces every bound variable by its value. Unbound variables stay.
pub fn substitute(expr: &Expression, b: &Bindings) -> Expression {
    match expr {
        Expression::Atom(_) => match expr.as_var().and_then(|v| b.get(v)) {
            Some(value) => value.clone(),
            None => expr.clone(),
        },
        Expression::List(items) => Expression::List(items.iter().map(|i| substitute(i, b)).collect()),
        Expression::Enriched(inner, en) => Expression::Enriched(Box::new(substitute(inner, b)), en.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn p(s: &str) -> Expression {
        parse(s).unwrap()
    }

    #[test]
    fn binds_pattern_variable() {
        let b = unify(&p("(has Sam $o)"), &p("(has Sam balloon)")).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.get("o"), Some(&p("balloon")));
        assert_eq!(b.side("o"), Some(Side::Pattern));
    }

    #[test]
    fn same_variable_unifies_trivially() {
        assert!(unify(&p("$x"), &p("$x")).unwrap().is_empty());
    }

    #[test]
    fn repeated_variable_needs_equal_slots() {
        assert!(unify(&p("($x $x)"), &p("(a b)")).is_none());
        assert_eq!(unify(&p("($x $x)"), &p("(a a)")).unwrap().get("x"), Some(&p("a")));
    }

    #[test]
    fn precedence_and_target_bindings() {
        let b = unify(&p("(f $p)"), &p("(f $t)")).unwrap();
        assert_eq!(b.get("p"), Some(&p("$t")));
        assert_eq!(b.side("p"), Some(Side::Pattern));
        assert_eq!(b.get("t"), None);

        let b = unify(&p("(f (g a))"), &p("(f $t)")).unwrap();
        assert_eq!(b.get("t"), Some(&p("(g a)")));
        assert_eq!(b.side("t"), Some(Side::Target));
    }

    #[test]
    fn occurs_check() {
        assert!(unify(&p("$x"), &p("(f $x)")).is_none());
        assert!(unify(&p("($x $y)"), &p("((g $y) (h $x))")).is_none());
    }

    #[test]
    fn bindings_are_fully_resolved() {
        let b = unify(&p("($x $y)"), &p("((f $y) a)")).unwrap();
        assert_eq!(b.get("x"), Some(&p("(f a)")));
        assert_eq!(substitute(&p("($x $y)"), &b), substitute(&p("((f $y) a)"), &b));
    }

    #[test]
    fn arity_and_enrichment_mismatch() {
        assert!(unify(&p("(a b)"), &p("(a b c)")).is_none());
        assert!(unify(&p("(!enrich \"k\" AQ== a)"), &p("a")).is_none());
        assert!(unify(&p("(!enrich \"k\" AQ== $x)"), &p("(!enrich \"k\" AQ== a)")).is_some());
    }

    #[test]
    fn substitute_examples() {
        let mut b = Bindings::new();
        b.insert_unchecked("x".into(), p("7"), Side::Pattern);
        assert_eq!(substitute(&p("($x $x)"), &b), p("(7 7)"));
        assert_eq!(substitute(&p("(has Sam $o)"), &Bindings::new()), p("(has Sam $o)"));
        assert_eq!(substitute(&p("(has $y $x)"), &b), p("(has $y 7)"));
    }

    #[test]
    fn typed_variables() {
        let g = Metagraph::load("(: Toy Type) (: Ball Type) (: Ball Toy) (: ball Ball) (: balloon Toy) (: rock Thing)")
            .unwrap();
        let types: VarTypes = [("o".to_string(), p("Toy"))].into();
        assert!(unify_typed(&p("$o"), &p("ball"), &g, &types).is_some());
        assert!(unify_typed(&p("$o"), &p("balloon"), &g, &types).is_some());
        assert!(unify_typed(&p("$o"), &p("rock"), &g, &types).is_none());
        assert!(unify_typed(&p("$o"), &p("unknown"), &g, &types).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expression> {
            let leaf = prop_oneof![
                prop::sample::select(vec!["a", "b", "f"]).prop_map(Expression::sym),
                prop::sample::select(vec!["x", "y", "z"]).prop_map(Expression::var),
            ];
            leaf.prop_recursive(3, 16, 3, |inner| {
                prop::collection::vec(inner, 1..4).prop_map(Expression::List)
            })
        }

        /// Naive recursive substitution over a tree.
        fn naive(e: &Expression, b: &Bindings) -> Expression {
            if let Some(v) = e.as_var() {
                return b.get(v).cloned().unwrap_or_else(|| e.clone());
            }
            match e {
                Expression::List(items) => Expression::List(items.iter().map(|i| naive(i, b)).collect()),
                other => other.clone(),
            }
        }

        proptest! {
            #[test]
            fn unifier_makes_both_sides_equal(a in arb_expr(), b in arb_expr()) {
                if let Some(s) = unify(&a, &b) {
                    prop_assert_eq!(substitute(&a, &s), substitute(&b, &s));
                    for (v, value, _) in s.iter() {
                        prop_assert!(!value.contains_var(v));
                    }
                }
            }

            #[test]
            fn substitution_matches_naive_oracle(e in arb_expr(), vals in prop::collection::vec(arb_expr(), 3)) {
                let mut b = Bindings::new();
                for (name, v) in ["x", "y"].iter().zip(&vals) {
                    b.insert_unchecked(name.to_string(), v.clone(), Side::Pattern);
                }
                // shared sub-expressions survive a store round trip
                let g = Metagraph::from_expression(&e);
                let lifted = g.lift(g.roots().next().unwrap()).unwrap();
                prop_assert_eq!(substitute(&lifted, &b), naive(&e, &b));
            }
        }
    }
}
