use std::collections::BTreeMap;

use crate::space::{EdgeId, Metagraph};

/// State of a homomorphism search as seen by an ordering heuristic.
pub struct SearchView<'a> {
    pub pattern: &'a Metagraph,
    pub host: &'a Metagraph,
    pub assigned: &'a BTreeMap<EdgeId, EdgeId>,
    pub(crate) candidate_counts: &'a BTreeMap<EdgeId, usize>,
}

impl SearchView<'_> {
    /// Number of feasible images left for an unassigned pattern edge.
    pub fn candidate_count(&self, pattern_edge: EdgeId) -> usize {
        self.candidate_counts.get(&pattern_edge).copied().unwrap_or(0)
    }
}

/// Chooses which extension of a partial homomorphism to try next. Lower
/// priorities go first; ties fall back to ascending ids. A heuristic only
/// changes the exploration order, never the set of results.
pub trait OrderingHeuristic {
    fn priority(&self, view: &SearchView<'_>, pattern_edge: EdgeId, host_edge: EdgeId) -> u64;
}

/// Prefers host edges whose label is rare in the host.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelSelectivity;

impl OrderingHeuristic for LabelSelectivity {
    fn priority(&self, view: &SearchView<'_>, _pattern_edge: EdgeId, host_edge: EdgeId) -> u64 {
        view.host
            .edge(host_edge)
            .map_or(u64::MAX, |e| view.host.label_count(&e.label) as u64)
    }
}

/// Fail-first: branch on the pattern edge with the fewest candidates.
#[derive(Debug, Clone, Copy, Default)]
pub struct SmallestCandidateSet;

impl OrderingHeuristic for SmallestCandidateSet {
    fn priority(&self, view: &SearchView<'_>, pattern_edge: EdgeId, _host_edge: EdgeId) -> u64 {
        view.candidate_count(pattern_edge) as u64
    }
}
