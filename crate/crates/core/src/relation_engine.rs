//! Typed relation graphs over semantic slots.
//!
//! An edge `from → to` reads "from influences to". Graphs are immutable
//! snapshots of one state version; any later edit makes them stale.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::provider_gateway::{Gateway, StructuredRequest, Task, RELATIONS_SCHEMA};
use crate::semantic_model::{AttributePath, Provenance, SemanticState, SlotRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Match,
    Conflict,
    NeedsValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub from: AttributePath,
    pub to: AttributePath,
    pub kind: RelationKind,
    pub explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationGraph {
    pub subject_version: u64,
    pub edges: Vec<RelationEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    From,
    To,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ViolationKind {
    /// Endpoint does not exist in the subject state.
    DanglingPath { endpoint: Endpoint },
    SelfEdge,
    /// A needs-value edge points at a slot that already has a value.
    NeedsValueTargetFilled,
    /// A match or conflict edge touches an empty slot.
    EmptyEndpoint { endpoint: Endpoint },
    MissingSuggestion,
    /// Match edges carry no suggestion.
    UnexpectedSuggestion,
    EmptyExplanation,
    /// Same (from, to, kind) as an earlier edge.
    DuplicateTriple,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub edge_index: usize,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

/// An edge the model proposed that did not make it into the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedEdge {
    pub edge: Value,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAnalysis {
    pub graph: RelationGraph,
    pub dropped: Vec<DroppedEdge>,
}

/// Filled state of an endpoint: `None` when the path is dangling.
fn filled(state: &SemanticState, path: &AttributePath) -> Option<bool> {
    state.get_attribute(path).ok().map(|v| v.is_some())
}

/// Every rule breach in `graph` relative to `state`, ordered by edge.
pub fn validate_graph(graph: &RelationGraph, state: &SemanticState) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (edge_index, edge) in graph.edges.iter().enumerate() {
        let mut push = |kind| out.push(Violation { edge_index, kind });
        let from = filled(state, &edge.from);
        let to = filled(state, &edge.to);
        if from.is_none() {
            push(ViolationKind::DanglingPath { endpoint: Endpoint::From });
        }
        if to.is_none() {
            push(ViolationKind::DanglingPath { endpoint: Endpoint::To });
        }
        if edge.from == edge.to {
            push(ViolationKind::SelfEdge);
        }
        if edge.explanation.trim().is_empty() {
            push(ViolationKind::EmptyExplanation);
        }
        let has_suggestion = edge.suggestion.as_deref().is_some_and(|s| !s.is_empty());
        match edge.kind {
            RelationKind::NeedsValue => {
                if to == Some(true) {
                    push(ViolationKind::NeedsValueTargetFilled);
                }
                if !has_suggestion {
                    push(ViolationKind::MissingSuggestion);
                }
            }
            RelationKind::Match | RelationKind::Conflict => {
                if from == Some(false) {
                    push(ViolationKind::EmptyEndpoint { endpoint: Endpoint::From });
                }
                if to == Some(false) {
                    push(ViolationKind::EmptyEndpoint { endpoint: Endpoint::To });
                }
                if edge.kind == RelationKind::Match && edge.suggestion.is_some() {
                    push(ViolationKind::UnexpectedSuggestion);
                }
            }
        }
        if !seen.insert((edge.from, edge.to, edge.kind)) {
            push(ViolationKind::DuplicateTriple);
        }
    }
    out
}

const RELATIONS_INSTRUCTIONS: &str = "\
You analyze how the design semantics of one UI screen relate to each other. Slots are named \
`level.attribute` or `component.<name>.attribute`.
Report directed edges where `from` influences `to`:
- match: both slots are filled and their values fit together
- conflict: both slots are filled and their values contradict; suggest a replacement value for `to`
- needs_value: `to` is empty and `from` implies what it should hold; always give the suggested value
Only use slots listed in the input. Give every edge a one-sentence explanation.";

fn relations_payload(state: &SemanticState) -> Result<String> {
    let mut filled = serde_json::Map::new();
    let mut empty = Vec::new();
    for path in state.all_paths() {
        let slot = state.slot_ref(&path)?.to_string();
        match state.get_attribute(&path)? {
            Some(v) => {
                filled.insert(slot, Value::String(v.text().to_string()));
            }
            None => empty.push(slot),
        }
    }
    Ok(serde_json::to_string_pretty(&json!({ "filled": filled, "empty": empty }))
        .expect("payload serializes"))
}

fn read_edge(state: &SemanticState, raw: &Value) -> std::result::Result<RelationEdge, String> {
    let endpoint = |key: &str| -> std::result::Result<AttributePath, String> {
        let text = raw.get(key).and_then(Value::as_str).unwrap_or_default();
        let slot: SlotRef = text.parse().map_err(|e: Error| e.to_string())?;
        state.resolve(&slot).map_err(|_| format!("{key} `{text}` is not in the state"))
    };
    let kind: RelationKind = serde_json::from_value(raw.get("kind").cloned().unwrap_or_default())
        .map_err(|e| format!("kind: {e}"))?;
    Ok(RelationEdge {
        from: endpoint("from")?,
        to: endpoint("to")?,
        kind,
        explanation: raw
            .get("explanation")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string(),
        suggestion: raw
            .get("suggestion")
            .and_then(Value::as_str)
            .map(str::to_string),
    })
}

/// Asks the provider for the relation graph of `state`. Proposed edges that
/// break a graph rule are dropped and reported; the returned graph always
/// validates cleanly.
pub fn analyze_relations(state: &SemanticState, version: u64, gateway: &Gateway) -> Result<RelationAnalysis> {
    let filled = state.filled().len();
    let empty = state.list_empty_attributes().len();
    if !(filled >= 2 || (filled >= 1 && empty >= 1)) {
        return Err(Error::NothingToAnalyze);
    }
    let request = StructuredRequest::new(
        Task::AnalyzeRelations,
        RELATIONS_SCHEMA,
        RELATIONS_INSTRUCTIONS,
        relations_payload(state)?,
    );
    let payload = gateway.complete_structured(&request)?;
    let raw_edges = payload
        .get("edges")
        .and_then(Value::as_array)
        .cloned()
        .unwrap_or_default();

    let mut dropped = Vec::new();
    let mut candidates = Vec::new();
    for raw in raw_edges {
        match read_edge(state, &raw) {
            Ok(edge) => candidates.push((raw, edge)),
            Err(reason) => dropped.push(DroppedEdge { edge: raw, reason }),
        }
    }
    let candidate_graph = RelationGraph {
        subject_version: version,
        edges: candidates.iter().map(|(_, e)| e.clone()).collect(),
    };
    let violations = validate_graph(&candidate_graph, state);
    let mut edges = Vec::new();
    for (index, (raw, edge)) in candidates.into_iter().enumerate() {
        let reasons: Vec<String> = violations
            .iter()
            .filter(|v| v.edge_index == index)
            .map(|v| format!("{:?}", v.kind))
            .collect();
        if reasons.is_empty() {
            edges.push(edge);
        } else {
            dropped.push(DroppedEdge {
                edge: raw,
                reason: reasons.join(", "),
            });
        }
    }
    Ok(RelationAnalysis {
        graph: RelationGraph {
            subject_version: version,
            edges,
        },
        dropped,
    })
}

/// Edges pointing at `path`: what influenced it.
pub fn affected_by<'g>(graph: &'g RelationGraph, path: &AttributePath) -> Vec<&'g RelationEdge> {
    graph.edges.iter().filter(|e| e.to == *path).collect()
}

/// Edges leaving `path`: what it influences.
pub fn affects<'g>(graph: &'g RelationGraph, path: &AttributePath) -> Vec<&'g RelationEdge> {
    graph.edges.iter().filter(|e| e.from == *path).collect()
}

pub fn list_by_kind(graph: &RelationGraph, kind: RelationKind) -> Vec<&RelationEdge> {
    graph.edges.iter().filter(|e| e.kind == kind).collect()
}

/// Writes the edge's suggestion into its target slot as an accepted
/// suggestion. Only the target slot changes.
pub fn accept_suggestion(state: &SemanticState, edge: &RelationEdge, version: u64) -> Result<SemanticState> {
    let suggestion = edge
        .suggestion
        .as_deref()
        .filter(|s| !s.is_empty())
        .ok_or(Error::SuggestionMissing)?;
    let current = state.get_attribute(&edge.to)?;
    if edge.kind == RelationKind::NeedsValue && current.is_some() {
        return Err(Error::SlotOccupied(edge.to.to_string()));
    }
    state.set_attribute(&edge.to, suggestion, Provenance::SuggestionAccepted, version)
}
