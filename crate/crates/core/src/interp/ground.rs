//! Grounded functions: names backed by native code.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::enrich::EnrichmentRegistry;
use crate::matcher::{match_enriched, match_pattern, transform};
use crate::space::{Expression, Label, Metagraph};
use crate::syntax::{is_number, quote_string, unquote_string};

pub const TRUE: &str = "True";
pub const FALSE: &str = "False";

/// Read-only view handed to grounded functions.
pub struct GroundCtx<'a> {
    pub space: &'a Metagraph,
    pub enrichments: &'a EnrichmentRegistry,
}

pub type GroundFn = dyn Fn(&GroundCtx<'_>, &[Expression]) -> Result<Vec<Expression>, String> + Send + Sync;

#[derive(Clone)]
pub struct Grounding {
    /// Quoting entries receive their arguments unevaluated.
    pub quoting: bool,
    pub func: Arc<GroundFn>,
}

impl fmt::Debug for Grounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grounding")
            .field("quoting", &self.quoting)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroundingRegistry {
    entries: BTreeMap<String, Grounding>,
}

impl GroundingRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Arithmetic, comparison, string operations, `quote`, `match`,
    /// `transform` and `matchEV`.
    pub fn core() -> Self {
        let mut r = Self::empty();
        for (name, op) in [
            ("+", Arith::Add),
            ("-", Arith::Sub),
            ("*", Arith::Mul),
            ("/", Arith::Div),
            ("%", Arith::Rem),
        ] {
            r.insert(name, false, move |_, args| arith(op, args));
        }
        for (name, op) in [("<", Cmp::Lt), (">", Cmp::Gt), ("<=", Cmp::Le), (">=", Cmp::Ge)] {
            r.insert(name, false, move |_, args| compare(op, args));
        }
        r.insert("==", false, |_, args| {
            let [a, b] = args else { return Err(arity("==", 2, args)) };
            Ok(vec![boolean(a == b)])
        });
        r.insert("concat", false, |_, args| {
            let parts = args.iter().map(string_arg).collect::<Result<Vec<_>, _>>()?;
            Ok(vec![Expression::grounded(quote_string(&parts.concat()))])
        });
        r.insert("str-len", false, |_, args| {
            let [s] = args else {
                return Err(arity("str-len", 1, args));
            };
            Ok(vec![Expression::grounded(string_arg(s)?.chars().count().to_string())])
        });
        r.insert("quote", true, |_, args| {
            let [e] = args else { return Err(arity("quote", 1, args)) };
            Ok(vec![e.clone()])
        });
        r.insert("match", true, |ctx, args| {
            let [p] = args else { return Err(arity("match", 1, args)) };
            match_pattern(ctx.space, p)
                .iter()
                .map(|m| ctx.space.lift(m.matched_root).map_err(|e| e.to_string()))
                .collect()
        });
        r.insert("transform", true, |ctx, args| {
            let [p, t] = args else {
                return Err(arity("transform", 2, args));
            };
            transform(ctx.space, p, t).map_err(|e| e.to_string())
        });
        r.insert("matchEV", true, |ctx, args| {
            let [p, e] = args else {
                return Err(arity("matchEV", 2, args));
            };
            let kind = p
                .enrichment()
                .map(|en| en.kind.clone())
                .ok_or("matchEV pattern carries no enrichment")?;
            let threshold = number(e)?.as_f64();
            let hits = match_enriched(ctx.space, ctx.enrichments, p, &kind, threshold).map_err(|e| e.to_string())?;
            hits.iter()
                .map(|m| ctx.space.lift(m.matched_root).map_err(|e| e.to_string()))
                .collect()
        });
        r
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        quoting: bool,
        f: impl Fn(&GroundCtx<'_>, &[Expression]) -> Result<Vec<Expression>, String> + Send + Sync + 'static,
    ) {
        self.entries.insert(
            name.into(),
            Grounding {
                quoting,
                func: Arc::new(f),
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&Grounding> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }
}

fn arity(name: &str, n: usize, args: &[Expression]) -> String {
    format!("{name} takes {n} argument(s), got {}", args.len())
}

pub fn boolean(b: bool) -> Expression {
    Expression::sym(if b { TRUE } else { FALSE })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }

    pub fn to_expression(self) -> Result<Expression, String> {
        match self {
            Number::Int(i) => Ok(Expression::grounded(i.to_string())),
            Number::Float(f) if f.is_finite() => Ok(Expression::grounded(format!("{f:?}"))),
            Number::Float(f) => Err(format!("non-finite result {f}")),
        }
    }
}

pub fn number(e: &Expression) -> Result<Number, String> {
    match e.as_atom() {
        Some(Label::Grounded(s)) if is_number(s) => Ok(match s.parse::<i64>() {
            Ok(i) => Number::Int(i),
            Err(_) => Number::Float(s.parse().map_err(|_| format!("{s} is not a number"))?),
        }),
        _ => Err(format!("{e} is not a number")),
    }
}

fn string_arg(e: &Expression) -> Result<String, String> {
    match e.as_atom() {
        Some(Label::Grounded(s)) => unquote_string(s).ok_or_else(|| format!("{e} is not a string")),
        _ => Err(format!("{e} is not a string")),
    }
}

#[derive(Debug, Clone, Copy)]
enum Arith {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

fn arith(op: Arith, args: &[Expression]) -> Result<Vec<Expression>, String> {
    let [a, b] = args else {
        return Err(arity("arithmetic", 2, args));
    };
    let (a, b) = (number(a)?, number(b)?);
    let out = match (a, b) {
        (Number::Int(x), Number::Int(y)) => {
            let r = match op {
                Arith::Add => x.checked_add(y),
                Arith::Sub => x.checked_sub(y),
                Arith::Mul => x.checked_mul(y),
                Arith::Div if y == 0 => return Err("division by zero".into()),
                Arith::Div => x.checked_div(y),
                Arith::Rem if y == 0 => return Err("division by zero".into()),
                Arith::Rem => x.checked_rem(y),
            };
            Number::Int(r.ok_or("integer overflow")?)
        }
        _ => {
            let (x, y) = (a.as_f64(), b.as_f64());
            Number::Float(match op {
                Arith::Add => x + y,
                Arith::Sub => x - y,
                Arith::Mul => x * y,
                Arith::Div => x / y,
                Arith::Rem => x % y,
            })
        }
    };
    Ok(vec![out.to_expression()?])
}

#[derive(Debug, Clone, Copy)]
enum Cmp {
    Lt,
    Gt,
    Le,
    Ge,
}

fn compare(op: Cmp, args: &[Expression]) -> Result<Vec<Expression>, String> {
    let [a, b] = args else {
        return Err(arity("comparison", 2, args));
    };
    let (x, y) = (number(a)?, number(b)?);
    let ord = match (x, y) {
        (Number::Int(x), Number::Int(y)) => x.cmp(&y),
        _ => x.as_f64().partial_cmp(&y.as_f64()).ok_or("comparison with NaN")?,
    };
    Ok(vec![boolean(match op {
        Cmp::Lt => ord.is_lt(),
        Cmp::Gt => ord.is_gt(),
        Cmp::Le => ord.is_le(),
        Cmp::Ge => ord.is_ge(),
    })])
}
