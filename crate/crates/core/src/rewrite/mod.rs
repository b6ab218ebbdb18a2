//! Single- and double-pushout rewriting of metagraphs.
//!
//! Rules and hosts are ordinary [`Metagraph`]s. Applying a rule never
//! touches the host; every derivation carries its own result graph.

mod dpo;
mod iso;
mod rule_file;
mod spo;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use dpo::{apply_dpo, apply_dpo_with, DPORule, DpoOutcome, GluingViolation};
pub use iso::{is_isomorphic, isomorphism};
pub use rule_file::{parse_rules, resolve_path, RuleDef};
pub use spo::{apply_spo, apply_spo_with, rewrite_root, SPORule};

use crate::enrich::EnrichmentRegistry;
use crate::matcher::{edge_types, EdgeTypes, HomSearch, HomomorphismMap};
use crate::space::{EdgeId, Metagraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("match is not a homomorphism from the rule's left-hand side into the host")]
    InvalidMatch,
    #[error("malformed rule: {0}")]
    InvalidRule(String),
}

/// Result of one direct derivation `G => H`.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub rule: String,
    pub matching: HomomorphismMap,
    pub result: Metagraph,
    /// Host edge to result edge; undefined exactly on deleted host edges.
    pub rho: BTreeMap<EdgeId, EdgeId>,
    /// Right-hand-side edge to result edge.
    pub mu: BTreeMap<EdgeId, EdgeId>,
    /// The context graph `D` (DPO only).
    pub intermediate: Option<Metagraph>,
}

impl Derivation {
    /// Host edges with no counterpart in the result.
    pub fn deleted(&self, host: &Metagraph) -> BTreeSet<EdgeId> {
        host.edge_ids().filter(|g| !self.rho.contains_key(g)).collect()
    }
}

/// Common view of SPO and DPO rules for match search.
pub trait Rule {
    fn name(&self) -> &str;
    fn lhs(&self) -> &Metagraph;
    fn lhs_types(&self) -> &EdgeTypes;
}

/// Every match of the rule's left-hand side, in the matcher's order.
/// Typed left-hand-side edges are checked against the host's declared
/// types and inheritance.
pub fn find_rule_matches(host: &Metagraph, rule: &dyn Rule) -> Vec<HomomorphismMap> {
    find_rule_matches_with(host, rule, None)
}

pub fn find_rule_matches_with(
    host: &Metagraph,
    rule: &dyn Rule,
    registry: Option<&EnrichmentRegistry>,
) -> Vec<HomomorphismMap> {
    let host_types = edge_types(host);
    let mut s = HomSearch::new(rule.lhs(), host).types(rule.lhs_types(), &host_types, host);
    if let Some(r) = registry {
        s = s.enrichments(r);
    }
    s.run()
}

pub(crate) fn validate_match(
    host: &Metagraph,
    rule: &dyn Rule,
    m: &HomomorphismMap,
    registry: Option<&EnrichmentRegistry>,
) -> Result<HomomorphismMap, RewriteError> {
    let host_types = edge_types(host);
    let mut s = HomSearch::new(rule.lhs(), host).types(rule.lhs_types(), &host_types, host);
    if let Some(r) = registry {
        s = s.enrichments(r);
    }
    s.validate(m).ok_or(RewriteError::InvalidMatch)
}

/// One SPO derivation per match.
pub fn derive_all_spo(host: &Metagraph, rule: &SPORule) -> Vec<Derivation> {
    find_rule_matches(host, rule)
        .iter()
        .map(|m| apply_spo(host, rule, m).expect("search only yields valid matches"))
        .collect()
}

/// One DPO derivation per match satisfying the gluing condition.
pub fn derive_all_dpo(host: &Metagraph, rule: &DPORule) -> Vec<Derivation> {
    find_rule_matches(host, rule)
        .iter()
        .filter_map(|m| match apply_dpo(host, rule, m) {
            Ok(DpoOutcome::Derived(d)) => Some(*d),
            _ => None,
        })
        .collect()
}
