use std::collections::BTreeSet;
use std::fmt;

use super::label::{Enrichment, Label};

/// Tree view of an edge and everything reachable from it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expression {
    Atom(Label),
    List(Vec<Expression>),
    /// An expression whose edge carries an enrichment payload. Nested
    /// wrappers collapse to the outermost one when stored.
    Enriched(Box<Expression>, Enrichment),
}

impl Expression {
    pub fn sym(name: impl Into<String>) -> Self {
        Expression::Atom(Label::Symbol(name.into()))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expression::Atom(Label::Variable(name.into()))
    }

    pub fn grounded(name: impl Into<String>) -> Self {
        Expression::Atom(Label::Grounded(name.into()))
    }

    pub fn list(items: impl IntoIterator<Item = Expression>) -> Self {
        Expression::List(items.into_iter().collect())
    }

    pub fn enriched(self, enrichment: Enrichment) -> Self {
        Expression::Enriched(Box::new(self.strip_enrichment().clone()), enrichment)
    }

    /// The expression without its top-level enrichment wrapper(s).
    pub fn strip_enrichment(&self) -> &Expression {
        match self {
            Expression::Enriched(inner, _) => inner.strip_enrichment(),
            other => other,
        }
    }

    pub fn enrichment(&self) -> Option<&Enrichment> {
        match self {
            Expression::Enriched(_, e) => Some(e),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&Label> {
        match self.strip_enrichment() {
            Expression::Atom(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Expression]> {
        match self.strip_enrichment() {
            Expression::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Expression::Atom(Label::Variable(v)) => Some(v),
            _ => None,
        }
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        matches!(self, Expression::Atom(Label::Symbol(s)) if s == name)
    }

    /// Head element of a non-empty list.
    pub fn head(&self) -> Option<&Expression> {
        self.as_list().and_then(|items| items.first())
    }

    /// True when the expression is a list of `arity` items whose head is the
    /// symbol `name`.
    pub fn is_form(&self, name: &str, arity: usize) -> bool {
        matches!(self.as_list(), Some(items) if items.len() == arity && items[0].is_symbol(name))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Atom(Label::Variable(v)) => {
                out.insert(v.clone());
            }
            Expression::Atom(_) => {}
            Expression::List(items) => items.iter().for_each(|i| i.collect_variables(out)),
            Expression::Enriched(inner, _) => inner.collect_variables(out),
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expression::Atom(Label::Variable(v)) => v == name,
            Expression::Atom(_) => false,
            Expression::List(items) => items.iter().any(|i| i.contains_var(name)),
            Expression::Enriched(inner, _) => inner.contains_var(name),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Expression::Atom(l) => !l.is_variable(),
            Expression::List(items) => items.iter().all(Expression::is_ground),
            Expression::Enriched(inner, _) => inner.is_ground(),
        }
    }

    /// All sub-expressions, including `self`, in pre-order.
    pub fn subexpressions(&self) -> Vec<&Expression> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            match e {
                Expression::List(items) => stack.extend(items.iter().rev()),
                Expression::Enriched(inner, _) => stack.push(inner),
                Expression::Atom(_) => {}
            }
        }
        out
    }

    /// Renames every variable with `f`.
    pub fn rename_vars(&self, f: &impl Fn(&str) -> String) -> Expression {
        match self {
            Expression::Atom(Label::Variable(v)) => Expression::var(f(v)),
            Expression::Atom(_) => self.clone(),
            Expression::List(items) => Expression::List(items.iter().map(|i| i.rename_vars(f)).collect()),
            Expression::Enriched(inner, e) => Expression::Enriched(Box::new(inner.rename_vars(f)), e.clone()),
        }
    }
}

impl From<Label> for Expression {
    fn from(label: Label) -> Self {
        Expression::Atom(label)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Atom(l) => write!(f, "{l}"),
            Expression::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
            Expression::Enriched(inner, e) => {
                write!(
                    f,
                    "(!enrich {} {} {})",
                    crate::syntax::quote_string(&e.kind),
                    e.payload_base64(),
                    inner.strip_enrichment()
                )
            }
        }
    }
}
