//! Execution traces, kept both as events and as expressions in a space.

use std::fmt;

use serde_json::json;

use crate::matcher::Bindings;
use crate::space::{EdgeId, Expression, Metagraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceKind {
    GroundedApply,
    Match,
    Transform,
    EqualityStep,
    TypeCheck,
    /// No equality applies and nothing below changes: the input is final.
    NormalForm,
    /// No equality applies at the top; the children were evaluated and
    /// recombined.
    SubtermStep,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::GroundedApply => "grounded-apply",
            TraceKind::Match => "match",
            TraceKind::Transform => "transform",
            TraceKind::EqualityStep => "equality-step",
            TraceKind::TypeCheck => "type-check",
            TraceKind::NormalForm => "normal-form",
            TraceKind::SubtermStep => "subterm-step",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub step: usize,
    pub kind: TraceKind,
    pub input: Expression,
    /// The `=` root used by an equality step, with its id in the space.
    pub rule: Option<(EdgeId, Expression)>,
    pub bindings: Bindings,
    pub outputs: Vec<Expression>,
    /// Result sets of the children, for subterm steps.
    pub args: Vec<Vec<Expression>>,
    /// Ids of `input` and `outputs` in the trace space.
    pub input_id: EdgeId,
    pub output_ids: Vec<EdgeId>,
}

impl TraceEvent {
    /// `(step <n> <kind> <input> (<outputs>...))`
    pub fn to_expression(&self) -> Expression {
        Expression::list([
            Expression::sym("step"),
            Expression::grounded(self.step.to_string()),
            Expression::sym(self.kind.as_str()),
            self.input.clone(),
            Expression::List(self.outputs.clone()),
        ])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let bindings: serde_json::Map<String, serde_json::Value> = self
            .bindings
            .iter()
            .map(|(v, e, _)| (format!("${v}"), json!(e.to_string())))
            .collect();
        json!({
            "step": self.step,
            "kind": self.kind.as_str(),
            "input": self.input.to_string(),
            "rule": self.rule.as_ref().map(|(_, r)| r.to_string()),
            "bindings": bindings,
            "outputs": self.outputs.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })
    }
}

/// Trace being recorded: events plus the space that mirrors them.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub space: Metagraph,
}

impl Trace {
    pub(crate) fn record(
        &mut self,
        kind: TraceKind,
        input: &Expression,
        rule: Option<(EdgeId, Expression)>,
        bindings: Bindings,
        outputs: Vec<Expression>,
        args: Vec<Vec<Expression>>,
    ) {
        let input_id = self.space.intern(input);
        let output_ids = outputs.iter().map(|o| self.space.intern(o)).collect();
        let event = TraceEvent {
            step: self.events.len() + 1,
            kind,
            input: input.clone(),
            rule,
            bindings,
            outputs,
            args,
            input_id,
            output_ids,
        };
        self.space.add_expression(&event.to_expression());
        self.events.push(event);
    }

    /// One JSON object per event, newline separated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_json().to_string());
            out.push('\n');
        }
        out
    }

    pub fn count(&self, kind: TraceKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}
