//! Type assignments and the inheritance preorder derived from `(: A B)` roots.
//!
//! A fact `(: A B)` always assigns type `B` to `A`. It also makes `A`
//! inherit from `B` when `B` is a declared type: one of the kinds `Type`
//! and `Enrichment`, or anything declared `(: B Type)` / `(: B Enrichment)`.
//! The inheritance relation is the reflexive-transitive closure of those
//! pairs; cycles collapse into mutual inheritance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::space::{EdgeId, Expression, Metagraph, SpaceError};

pub const TYPE: &str = "Type";
pub const ENRICHMENT: &str = "Enrichment";
pub const ARROW: &str = "->";
pub const HAS_TYPE: &str = ":";

/// Closure cache for one space state.
#[derive(Debug, Default)]
pub struct TypeIndex {
    assigned: BTreeMap<EdgeId, BTreeSet<EdgeId>>,
    declared: BTreeSet<EdgeId>,
    supers: BTreeMap<EdgeId, BTreeSet<EdgeId>>,
}

impl TypeIndex {
    pub fn build(space: &Metagraph) -> Self {
        let mut assigned: BTreeMap<EdgeId, BTreeSet<EdgeId>> = BTreeMap::new();
        let mut facts = Vec::new();
        for root in space.roots() {
            if space.is_type_fact(root) {
                let t = &space.get_edge(root).expect("root exists").targets;
                assigned.entry(t[1]).or_default().insert(t[2]);
                facts.push((t[1], t[2]));
            }
        }
        let kinds: BTreeSet<EdgeId> = [TYPE, ENRICHMENT]
            .iter()
            .filter_map(|k| space.find_expression(&Expression::sym(*k)))
            .collect();
        let mut declared = kinds.clone();
        declared.extend(facts.iter().filter(|(_, t)| kinds.contains(t)).map(|(s, _)| *s));

        let mut direct: BTreeMap<EdgeId, BTreeSet<EdgeId>> = BTreeMap::new();
        for (s, t) in &facts {
            if declared.contains(t) {
                direct.entry(*s).or_default().insert(*t);
            }
        }
        let mut supers = BTreeMap::new();
        for start in direct.keys() {
            let mut seen = BTreeSet::from([*start]);
            let mut queue = VecDeque::from([*start]);
            while let Some(n) = queue.pop_front() {
                for next in direct.get(&n).into_iter().flatten() {
                    if seen.insert(*next) {
                        queue.push_back(*next);
                    }
                }
            }
            supers.insert(*start, seen);
        }
        TypeIndex {
            assigned,
            declared,
            supers,
        }
    }

    pub fn types_of(&self, id: EdgeId) -> impl Iterator<Item = EdgeId> + '_ {
        self.assigned.get(&id).into_iter().flatten().copied()
    }

    pub fn is_declared(&self, id: EdgeId) -> bool {
        self.declared.contains(&id)
    }

    pub fn declared(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.declared.iter().copied()
    }

    pub fn inherits(&self, sub: EdgeId, sup: EdgeId) -> bool {
        sub == sup || self.supers.get(&sub).is_some_and(|s| s.contains(&sup))
    }
}

impl Metagraph {
    /// Lazily built type index; invalidated whenever a `(: ...)` root
    /// changes.
    pub fn type_index(&self) -> Arc<TypeIndex> {
        self.type_cache.get_or_init(|| Arc::new(TypeIndex::build(self))).clone()
    }
}

/// Decides `sub < sup` for type expressions.
pub trait Inheritance {
    fn inherits(&self, sub: &Expression, sup: &Expression) -> bool;
}

impl Inheritance for Metagraph {
    fn inherits(&self, sub: &Expression, sup: &Expression) -> bool {
        inherits(self, sub, sup)
    }
}

/// Structural equality only; the relation with no declarations.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoInheritance;

impl Inheritance for NoInheritance {
    fn inherits(&self, sub: &Expression, sup: &Expression) -> bool {
        sub == sup
    }
}

/// All declared types of `id`, ascending by type id.
pub fn types_of(space: &Metagraph, id: EdgeId) -> Result<Vec<Expression>, SpaceError> {
    space.get_edge(id)?;
    space.type_index().types_of(id).map(|t| space.lift(t)).collect()
}

/// Declared types of an expression, empty when it is not stored.
pub fn declared_types(space: &Metagraph, expr: &Expression) -> Vec<Expression> {
    match space.find_expression(expr) {
        Some(id) => types_of(space, id).unwrap_or_default(),
        None => Vec::new(),
    }
}

/// `t1 < t2`. Types unknown to the space only inherit from themselves.
pub fn inherits(space: &Metagraph, t1: &Expression, t2: &Expression) -> bool {
    if t1 == t2 {
        return true;
    }
    match (space.find_expression(t1), space.find_expression(t2)) {
        (Some(a), Some(b)) => space.type_index().inherits(a, b),
        _ => false,
    }
}

/// Outcome of applying a function to an argument at the type level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppType {
    Typed(Expression),
    Undefined,
    Mismatch {
        expected: Vec<Expression>,
        found: Vec<Expression>,
    },
}

fn arrow_parts(ty: &Expression) -> Option<(&Expression, Expression)> {
    let items = ty.as_list()?;
    if items.len() < 3 || !items[0].is_symbol(ARROW) {
        return None;
    }
    let result = if items.len() == 3 {
        items[2].clone()
    } else {
        let mut rest = vec![items[0].clone()];
        rest.extend_from_slice(&items[2..]);
        Expression::List(rest)
    };
    Some((&items[1], result))
}

pub fn is_arrow(ty: &Expression) -> bool {
    arrow_parts(ty).is_some()
}

/// Type-level application given the candidate function types and the
/// argument's types. Multi-argument arrows are curried.
pub fn apply_types(inh: &dyn Inheritance, fn_types: &[Expression], arg_types: &[Expression]) -> AppType {
    let arrows: Vec<_> = fn_types.iter().filter_map(arrow_parts).collect();
    if arrows.is_empty() || arg_types.is_empty() {
        return AppType::Undefined;
    }
    for (param, result) in &arrows {
        if arg_types.iter().any(|t| inh.inherits(t, param)) {
            return AppType::Typed(result.clone());
        }
    }
    AppType::Mismatch {
        expected: arrows.iter().map(|(p, _)| (*p).clone()).collect(),
        found: arg_types.to_vec(),
    }
}

/// Checks `(fn arg)` using the declared types of both edges.
pub fn check_application(space: &Metagraph, fn_id: EdgeId, arg_id: EdgeId) -> Result<AppType, SpaceError> {
    let fn_types = types_of(space, fn_id)?;
    let arg_types = types_of(space, arg_id)?;
    Ok(apply_types(space, &fn_types, &arg_types))
}

/// Checks an application expression `(f a1 .. an)`, inferring argument
/// types from declarations and nested applications.
pub fn check_expression(space: &Metagraph, expr: &Expression) -> AppType {
    let Some((head, args)) = expr.as_list().and_then(|items| items.split_first()) else {
        return AppType::Undefined;
    };
    if args.is_empty() {
        return AppType::Undefined;
    }
    let mut current = infer_types(space, head);
    let mut last = AppType::Undefined;
    for arg in args {
        let arg_types = infer_types(space, arg);
        last = apply_types(space, &current, &arg_types);
        match &last {
            AppType::Typed(t) => current = vec![t.clone()],
            _ => return last,
        }
    }
    last
}

/// Declared types, or the result type of a well-typed application.
pub fn infer_types(space: &Metagraph, expr: &Expression) -> Vec<Expression> {
    let declared = declared_types(space, expr);
    if !declared.is_empty() {
        return declared;
    }
    match check_expression(space, expr) {
        AppType::Typed(t) => vec![t],
        _ => Vec::new(),
    }
}
