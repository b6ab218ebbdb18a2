//! Equality-driven evaluation.
//!
//! Evaluating `e` first tries grounded application, then the equality
//! query `(= e $t)` against the space's `=` roots, outermost first. When no
//! equality applies the children are evaluated and recombined, and any
//! changed combination is evaluated again. Results are sets kept in a
//! deterministic order. Every evaluation call spends one unit of fuel.

mod ground;
mod trace;

use std::collections::BTreeSet;

use thiserror::Error;

pub use ground::{boolean, number, GroundCtx, GroundFn, Grounding, GroundingRegistry, Number, FALSE, TRUE};
pub use trace::{Trace, TraceEvent, TraceKind};

use crate::enrich::EnrichmentRegistry;
use crate::matcher::{substitute, unify, Bindings};
use crate::space::{EdgeId, Expression, Label, Metagraph, SpaceError};
use crate::syntax::{Reader, CORE_GROUNDED};
use crate::types::{check_expression, infer_types, AppType};

pub const DEFAULT_FUEL: usize = 10_000;
pub const ACTIVATE: &str = "@";
pub const EQUALS: &str = "=";
pub const ERROR: &str = "Error";
pub const BAD_TYPE: &str = "BadType";

/// Default equality realizing type inhabitation.
pub const INHABITED_RULE: &str = "(= (: $t Type) (transform (: $w $t) True))";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("fuel exhausted while evaluating {expr}")]
    FuelExhausted { expr: Expression },
    #[error("grounded function failed on {expr}: {message}")]
    Grounded { expr: Expression, message: String },
    #[error("grounded symbol {0} has no implementation")]
    UnresolvedGrounded(Expression),
    #[error("edge {0} is not an activation (@ ...)")]
    NotActivated(EdgeId),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// One applicable equality: the `=` root, the unifier and the instantiated
/// right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityMatch {
    pub rule: EdgeId,
    pub bindings: Bindings,
    pub result: Expression,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskStatus {
    Pending,
    InProgress,
    Done,
    Failed(EvalError),
}

/// Evaluation of one activated root.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTask {
    pub target: EdgeId,
    pub status: TaskStatus,
    pub results: Vec<Expression>,
    pub fuel_remaining: usize,
}

/// Results of [`Interpreter::run_with_trace`].
#[derive(Debug, Clone)]
pub struct TracedRun {
    pub results: Vec<Expression>,
    pub trace: Trace,
}

struct State<'t> {
    fuel: usize,
    renames: usize,
    trace: Option<&'t mut Trace>,
}

impl State<'_> {
    fn record(
        &mut self,
        kind: TraceKind,
        input: &Expression,
        rule: Option<(EdgeId, Expression)>,
        bindings: Bindings,
        outputs: &[Expression],
        args: Vec<Vec<Expression>>,
    ) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.record(kind, input, rule, bindings, outputs.to_vec(), args);
        }
    }
}

fn push_unique(out: &mut Vec<Expression>, e: Expression) {
    if !out.contains(&e) {
        out.push(e);
    }
}

fn cartesian(sets: &[Vec<Expression>]) -> Vec<Vec<Expression>> {
    let mut acc: Vec<Vec<Expression>> = vec![Vec::new()];
    for set in sets {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                set.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x.clone());
                    v
                })
            })
            .collect();
    }
    acc
}

#[derive(Debug, Clone)]
pub struct Interpreter {
    space: Metagraph,
    groundings: GroundingRegistry,
    enrichments: EnrichmentRegistry,
}

impl Default for Interpreter {
    fn default() -> Self {
        Self::new()
    }
}

impl Interpreter {
    /// Fresh interpreter with the core groundings, the built-in enrichment
    /// kinds and the inhabitation equality installed.
    pub fn new() -> Self {
        Self::with_space(Metagraph::new())
    }

    pub fn with_space(mut space: Metagraph) -> Self {
        let rule = Reader::default().parse(INHABITED_RULE).expect("built-in rule parses");
        space.add_expression(&rule);
        Interpreter {
            space,
            groundings: GroundingRegistry::core(),
            enrichments: EnrichmentRegistry::with_builtins(),
        }
    }

    pub fn space(&self) -> &Metagraph {
        &self.space
    }

    pub fn space_mut(&mut self) -> &mut Metagraph {
        &mut self.space
    }

    pub fn groundings(&self) -> &GroundingRegistry {
        &self.groundings
    }

    pub fn groundings_mut(&mut self) -> &mut GroundingRegistry {
        &mut self.groundings
    }

    pub fn enrichments(&self) -> &EnrichmentRegistry {
        &self.enrichments
    }

    pub fn enrichments_mut(&mut self) -> &mut EnrichmentRegistry {
        &mut self.enrichments
    }

    /// Reader that recognizes the registered grounded names.
    pub fn reader(&self) -> Reader {
        Reader::with_grounded(self.groundings.names().chain(CORE_GROUNDED.iter().copied()))
    }

    pub fn parse(&self, text: &str) -> Result<Expression, SpaceError> {
        Ok(self.reader().parse(text)?)
    }

    /// Adds every expression in `text` to the space.
    pub fn load(&mut self, text: &str) -> Result<(), SpaceError> {
        let reader = self.reader();
        self.space.load_into(text, &reader)
    }

    pub fn eval(&self, expr: &Expression, fuel: usize) -> Result<Vec<Expression>, EvalError> {
        let mut st = State {
            fuel,
            renames: 0,
            trace: None,
        };
        self.eval_in(expr, &mut st)
    }

    pub fn run_with_trace(&self, expr: &Expression, fuel: usize) -> Result<TracedRun, EvalError> {
        let mut trace = Trace::default();
        let results = {
            let mut st = State {
                fuel,
                renames: 0,
                trace: Some(&mut trace),
            };
            self.eval_in(expr, &mut st)?
        };
        Ok(TracedRun { results, trace })
    }

    /// Every `(= lhs rhs)` root whose `lhs` unifies with `expr`, ascending by
    /// root id. Rule variables are renamed apart from those of `expr`.
    pub fn equality_query(&self, expr: &Expression) -> Vec<EqualityMatch> {
        let mut counter = 0;
        self.equalities(expr, &mut counter)
            .into_iter()
            .map(|(m, _)| m)
            .collect()
    }

    fn equality_roots(&self) -> Vec<EdgeId> {
        let Some(eq) = self.space.find_expression(&Expression::sym(EQUALS)) else {
            return Vec::new();
        };
        let Ok(referrers) = self.space.incident(eq) else {
            return Vec::new();
        };
        referrers
            .iter()
            .copied()
            .filter(|r| {
                let e = self.space.edge(*r).expect("referrer exists");
                self.space.is_root(*r) && e.label == Label::List && e.targets.len() == 3 && e.targets[0] == eq
            })
            .collect()
    }

    fn equalities(&self, expr: &Expression, counter: &mut usize) -> Vec<(EqualityMatch, Expression)> {
        let mut out = Vec::new();
        for root in self.equality_roots() {
            let Ok(rule) = self.space.lift(root) else { continue };
            let items = rule.as_list().expect("equality root is a list");
            *counter += 1;
            let n = *counter;
            let rename = |v: &str| format!("{v}#{n}");
            let (lhs, rhs) = (items[1].rename_vars(&rename), items[2].rename_vars(&rename));
            if let Some(bindings) = unify(expr, &lhs) {
                let result = substitute(&rhs, &bindings);
                out.push((
                    EqualityMatch {
                        rule: root,
                        bindings,
                        result,
                    },
                    rule.clone(),
                ));
            }
        }
        out
    }

    /// True when some root `(: w ty)` exists, by evaluating `(: ty Type)`
    /// through the inhabitation equality.
    pub fn check_inhabited(&self, ty: &Expression) -> Result<bool, EvalError> {
        let query = Expression::list([Expression::sym(":"), ty.clone(), Expression::sym("Type")]);
        Ok(self.eval(&query, DEFAULT_FUEL)?.contains(&Expression::sym(TRUE)))
    }

    /// Evaluates the root `id`, which must be `(@ e)`.
    pub fn activate(&self, id: EdgeId, fuel: usize) -> Result<Vec<Expression>, EvalError> {
        let expr = self.space.lift(id)?;
        if !expr.is_form(ACTIVATE, 2) {
            return Err(EvalError::NotActivated(id));
        }
        self.eval(&expr, fuel)
    }

    /// Roots of the form `(@ e)`, ascending by id.
    pub fn activated_roots(&self) -> Vec<EdgeId> {
        self.space
            .roots()
            .filter(|r| self.space.lift(*r).is_ok_and(|e| e.is_form(ACTIVATE, 2)))
            .collect()
    }

    /// One task per activated root, each with its own fuel budget.
    pub fn run_activated(&self, fuel: usize) -> Vec<EvalTask> {
        let mut tasks: Vec<EvalTask> = self
            .activated_roots()
            .into_iter()
            .map(|target| EvalTask {
                target,
                status: TaskStatus::Pending,
                results: Vec::new(),
                fuel_remaining: fuel,
            })
            .collect();
        for task in &mut tasks {
            task.status = TaskStatus::InProgress;
            let expr = match self.space.lift(task.target) {
                Ok(e) => e,
                Err(e) => {
                    task.status = TaskStatus::Failed(e.into());
                    continue;
                }
            };
            let mut st = State {
                fuel,
                renames: 0,
                trace: None,
            };
            match self.eval_in(&expr, &mut st) {
                Ok(results) => {
                    task.results = results;
                    task.status = TaskStatus::Done;
                }
                Err(e) => task.status = TaskStatus::Failed(e),
            }
            task.fuel_remaining = st.fuel;
        }
        tasks
    }

    fn eval_in(&self, expr: &Expression, st: &mut State<'_>) -> Result<Vec<Expression>, EvalError> {
        if st.fuel == 0 {
            return Err(EvalError::FuelExhausted { expr: expr.clone() });
        }
        st.fuel -= 1;

        if expr.is_form(ACTIVATE, 2) {
            return self.eval_in(&expr.as_list().expect("form is a list")[1], st);
        }
        if expr.as_var().is_some() {
            st.record(
                TraceKind::NormalForm,
                expr,
                None,
                Bindings::new(),
                std::slice::from_ref(expr),
                Vec::new(),
            );
            return Ok(vec![expr.clone()]);
        }
        if let Some(err) = self.type_check(expr, st) {
            return Ok(vec![err]);
        }
        if let Some(Expression::Atom(Label::Grounded(name))) = expr.head() {
            if let Some(g) = self.groundings.get(name) {
                return self.apply_grounded(expr, name, &g.clone(), st);
            }
            if !crate::syntax::is_number(name) && !name.starts_with('"') {
                return Err(EvalError::UnresolvedGrounded(expr.clone()));
            }
        }

        let mut counter = st.renames;
        let eqs = self.equalities(expr, &mut counter);
        st.renames = counter;
        if !eqs.is_empty() {
            let mut out = Vec::new();
            for (m, rule) in eqs {
                st.record(
                    TraceKind::EqualityStep,
                    expr,
                    Some((m.rule, rule)),
                    m.bindings.clone(),
                    std::slice::from_ref(&m.result),
                    Vec::new(),
                );
                for r in self.eval_in(&m.result, st)? {
                    push_unique(&mut out, r);
                }
            }
            return Ok(out);
        }

        let Some(items) = expr.as_list().filter(|i| !i.is_empty()) else {
            st.record(
                TraceKind::NormalForm,
                expr,
                None,
                Bindings::new(),
                std::slice::from_ref(expr),
                Vec::new(),
            );
            return Ok(vec![expr.clone()]);
        };
        let mut child_results = Vec::with_capacity(items.len());
        for c in items {
            child_results.push(self.eval_in(c, st)?);
        }
        let variants: Vec<Expression> = cartesian(&child_results).into_iter().map(Expression::List).collect();
        let variants = match expr {
            Expression::Enriched(_, en) => variants.into_iter().map(|v| v.enriched(en.clone())).collect(),
            _ => variants,
        };
        st.record(
            TraceKind::SubtermStep,
            expr,
            None,
            Bindings::new(),
            &variants,
            child_results,
        );
        let mut out = Vec::new();
        for v in variants {
            if &v == expr {
                st.record(
                    TraceKind::NormalForm,
                    expr,
                    None,
                    Bindings::new(),
                    std::slice::from_ref(expr),
                    Vec::new(),
                );
                push_unique(&mut out, v);
            } else {
                for r in self.eval_in(&v, st)? {
                    push_unique(&mut out, r);
                }
            }
        }
        Ok(out)
    }

    /// `Some((Error expr BadType))` when the head has a declared function
    /// type that the arguments do not fit.
    fn type_check(&self, expr: &Expression, st: &mut State<'_>) -> Option<Expression> {
        let head = expr.as_list().filter(|i| i.len() > 1)?.first()?;
        if infer_types(&self.space, head).is_empty() {
            return None;
        }
        let outcome = check_expression(&self.space, expr);
        let (outputs, err) = match outcome {
            AppType::Typed(t) => (vec![t], None),
            AppType::Undefined => return None,
            AppType::Mismatch { .. } => {
                let e = Expression::list([Expression::sym(ERROR), expr.clone(), Expression::sym(BAD_TYPE)]);
                (vec![e.clone()], Some(e))
            }
        };
        st.record(TraceKind::TypeCheck, expr, None, Bindings::new(), &outputs, Vec::new());
        err
    }

    fn apply_grounded(
        &self,
        expr: &Expression,
        name: &str,
        g: &Grounding,
        st: &mut State<'_>,
    ) -> Result<Vec<Expression>, EvalError> {
        let items = expr.as_list().expect("application is a list");
        let head = items[0].clone();
        let arg_sets: Vec<Vec<Expression>> = if g.quoting {
            items[1..].iter().map(|a| vec![a.clone()]).collect()
        } else {
            items[1..]
                .iter()
                .map(|a| self.eval_in(a, st))
                .collect::<Result<_, _>>()?
        };
        let kind = match name {
            "match" | "matchEV" => TraceKind::Match,
            "transform" => TraceKind::Transform,
            _ => TraceKind::GroundedApply,
        };
        let ctx = GroundCtx {
            space: &self.space,
            enrichments: &self.enrichments,
        };
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for args in cartesian(&arg_sets) {
            let call = Expression::List(std::iter::once(head.clone()).chain(args.iter().cloned()).collect());
            if !seen.insert(call.clone()) {
                continue;
            }
            let results = (g.func)(&ctx, &args).map_err(|message| EvalError::Grounded {
                expr: call.clone(),
                message,
            })?;
            st.record(kind, &call, None, Bindings::new(), &results, Vec::new());
            for r in results {
                push_unique(&mut out, r);
            }
        }
        Ok(out)
    }
}
