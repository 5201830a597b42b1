//! Session workflows shared by the HTTP API and the CLI. Each mutating
//! workflow ends in exactly one commit through the store's per-session queue.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use suif_core::augmentation_analyzer::{extract_semantics, newly_inferred};
use suif_core::diff_engine::{compute_diff, render_changelog};
use suif_core::generation_engine::{
    compile_prompt, generate_initial, regenerate_scoped, GenerationOptions, PromptDoc,
};
use suif_core::prompt_parser::{apply_parsed, parse_prompt};
use suif_core::provider_gateway::{Attachment, Gateway};
use suif_core::relation_engine::{accept_suggestion, analyze_relations, DroppedEdge, RelationEdge, RelationGraph};
use suif_core::semantic_model::ShadowProposal;
use suif_core::session_store::{Attachments, HistoryRow, Session, SessionStore, VersionRecord};
use suif_core::{AttributePath, Error, Provenance, Result, SemanticState, SlotRef};

/// Version number and changelog of the commit a mutation produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Commit {
    pub version: u64,
    pub changelog: Vec<String>,
}

impl From<&VersionRecord> for Commit {
    fn from(r: &VersionRecord) -> Self {
        Self {
            version: r.version,
            changelog: r.diff_from_parent.as_ref().map(render_changelog).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParseOutcome {
    #[serde(flatten)]
    pub commit: Commit,
    pub skipped_components: Vec<String>,
    pub preserved: Vec<ShadowProposal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residue: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateOutcome {
    #[serde(flatten)]
    pub commit: Commit,
    pub artifact_id: String,
    pub produced_from_version: u64,
    pub scoped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeOutcome {
    #[serde(flatten)]
    pub commit: Commit,
    pub newly_inferred: Vec<AttributePath>,
    pub shadowed: Vec<ShadowProposal>,
    pub evidence: BTreeMap<SlotRef, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationsOutcome {
    #[serde(flatten)]
    pub commit: Commit,
    pub graph: RelationGraph,
    pub dropped: Vec<DroppedEdge>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: String,
    pub name: String,
    pub version: u64,
    pub state: SemanticState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_version: Option<u64>,
}

pub struct Engine {
    pub store: SessionStore,
    pub gateway: Gateway,
    pub generation: GenerationOptions,
}

impl Engine {
    pub fn new(store: SessionStore, gateway: Gateway, generation: GenerationOptions) -> Self {
        Self {
            store,
            gateway,
            generation,
        }
    }

    pub fn view(&self, id: &str) -> Result<SessionView> {
        let session = self.store.load(id)?;
        Ok(SessionView {
            id: session.id().to_string(),
            name: session.name().to_string(),
            version: session.current_version(),
            state: session.current_state().clone(),
            artifact_id: session.current_artifact().map(|a| a.artifact_id.clone()),
            graph_version: session.current_graph().map(|g| g.subject_version),
        })
    }

    fn commit_state<F>(&self, id: &str, label: &str, edit: F) -> Result<Commit>
    where
        F: FnOnce(&SemanticState, u64) -> Result<SemanticState>,
    {
        let record = self.store.update(id, |s| {
            let next = edit(s.current_state(), s.current_version() + 1)?;
            s.next_record(next, Attachments::default(), label)
        })?;
        Ok(Commit::from(record.as_ref()))
    }

    /// Writes (`Some`) or clears (`None`) one slot as a user edit. Paths may
    /// be index-based (`component[0].type`) or name-based (`component.Card.type`).
    pub fn set_slot(&self, id: &str, path: &str, text: Option<&str>) -> Result<Commit> {
        let label = match text {
            Some(_) => format!("set {path}"),
            None => format!("clear {path}"),
        };
        self.commit_state(id, &label, |state, version| {
            let p = state.parse_path(path)?;
            match text {
                Some(t) => state.set_attribute(&p, t, Provenance::User, version),
                None => state.clear_attribute(&p),
            }
        })
    }

    pub fn add_component(&self, id: &str, name: &str) -> Result<Commit> {
        self.commit_state(id, &format!("add component {name}"), |state, _| {
            state.add_component(name).map(|(s, _)| s)
        })
    }

    pub fn remove_component(&self, id: &str, name: &str) -> Result<Commit> {
        self.commit_state(id, &format!("remove component {name}"), |state, _| {
            state.remove_component(name)
        })
    }

    pub fn parse(&self, id: &str, text: &str) -> Result<ParseOutcome> {
        self.store.load(id)?;
        let parsed = parse_prompt(text, &self.gateway)?;
        let mut extra = None;
        let record = self.store.update(id, |s| {
            let applied = apply_parsed(s.current_state(), &parsed, s.current_version() + 1)?;
            let record = s.next_record(applied.state.clone(), Attachments::default(), "parse")?;
            extra = Some((applied.skipped_components, applied.preserved));
            Ok(record)
        });
        let record = match record {
            Ok(r) => r,
            Err(Error::NoChange) => return Ok(self.unchanged_parse(id, parsed.unparsed_residue)?),
            Err(e) => return Err(e),
        };
        let (skipped_components, preserved) = extra.unwrap_or_default();
        Ok(ParseOutcome {
            commit: Commit::from(record.as_ref()),
            skipped_components,
            preserved,
            residue: parsed.unparsed_residue,
        })
    }

    fn unchanged_parse(&self, id: &str, residue: Option<String>) -> Result<ParseOutcome> {
        Ok(ParseOutcome {
            commit: self.unchanged(id)?,
            skipped_components: Vec::new(),
            preserved: Vec::new(),
            residue,
        })
    }

    fn unchanged(&self, id: &str) -> Result<Commit> {
        Ok(Commit {
            version: self.store.load(id)?.current_version(),
            changelog: Vec::new(),
        })
    }

    /// Compiled prompt for `version`, or for the current version.
    pub fn compile(&self, id: &str, version: Option<u64>) -> Result<PromptDoc> {
        let session = self.store.load(id)?;
        let v = version.unwrap_or(session.current_version());
        compile_prompt(&session.record(v)?.state, v)
    }

    /// Generates code for the current state. With a previous artifact whose
    /// source state differs, regeneration is scoped to that difference.
    pub fn generate(&self, id: &str) -> Result<GenerateOutcome> {
        let session = self.store.load(id)?;
        let version = session.current_version();
        let state = session.current_state();
        let previous = session.current_artifact();
        let scoped_from = previous.and_then(|prev| {
            let base = session.record(prev.produced_from_version).ok()?;
            let diff = compute_diff(&base.state, state);
            (!diff.is_empty()).then_some((prev, diff))
        });
        let (artifact, scoped) = match scoped_from {
            Some((prev, diff)) => (
                regenerate_scoped(state, version, &diff, prev, &self.gateway, &self.generation)?,
                true,
            ),
            None => (generate_initial(state, version, &self.gateway, &self.generation)?, false),
        };
        let artifact_id = artifact.artifact_id.clone();
        let record = self.store.update(id, |s| {
            let attach = Attachments {
                artifact: Some(artifact),
                graph: None,
            };
            s.next_record(s.current_state().clone(), attach, "generate")
        })?;
        Ok(GenerateOutcome {
            commit: Commit::from(record.as_ref()),
            artifact_id,
            produced_from_version: version,
            scoped,
        })
    }

    /// Reads semantics out of the current artifact and merges them into the
    /// current state. User-owned slots are never overwritten.
    pub fn analyze(&self, id: &str, screenshot: Option<Attachment>) -> Result<AnalyzeOutcome> {
        let session = self.store.load(id)?;
        let artifact = session.current_artifact().ok_or(Error::EmptyArtifact)?;
        let augmented = extract_semantics(artifact, screenshot, &self.gateway)?;
        let mut extra = None;
        let record = self.store.update(id, |s| {
            let state = s.current_state();
            let inferred = newly_inferred(&augmented, state);
            let (merged, shadowed) = state.merge_augmented(&augmented, s.current_version() + 1)?;
            let record = s.next_record(merged, Attachments::default(), "analyze")?;
            extra = Some((inferred, shadowed));
            Ok(record)
        });
        let commit = match record {
            Ok(r) => Commit::from(r.as_ref()),
            Err(Error::NoChange) => self.unchanged(id)?,
            Err(e) => return Err(e),
        };
        let (newly_inferred, shadowed) = extra.unwrap_or_default();
        Ok(AnalyzeOutcome {
            commit,
            newly_inferred,
            shadowed,
            evidence: augmented.evidence,
        })
    }

    /// Builds a relation graph over the current state and attaches it.
    pub fn relations(&self, id: &str) -> Result<RelationsOutcome> {
        let session = self.store.load(id)?;
        let analysis = analyze_relations(session.current_state(), session.current_version(), &self.gateway)?;
        let graph = analysis.graph.clone();
        let record = self.store.update(id, |s| {
            let attach = Attachments {
                artifact: None,
                graph: Some(graph),
            };
            s.next_record(s.current_state().clone(), attach, "relations")
        })?;
        Ok(RelationsOutcome {
            commit: Commit::from(record.as_ref()),
            graph: analysis.graph,
            dropped: analysis.dropped,
        })
    }

    /// Applies the suggestion on `edge`, which must belong to the current graph.
    pub fn accept(&self, id: &str, edge: &RelationEdge) -> Result<Commit> {
        let record = self.store.update(id, |s| {
            let graph = s
                .current_graph()
                .ok_or_else(|| Error::InvalidRequest("session has no relation graph".into()))?;
            if !graph.edges.contains(edge) {
                return Err(Error::InvalidRequest("edge is not in the current graph".into()));
            }
            let next = accept_suggestion(s.current_state(), edge, s.current_version() + 1)?;
            s.next_record(next, Attachments::default(), &format!("accept suggestion for {}", edge.to))
        })?;
        Ok(Commit::from(record.as_ref()))
    }

    pub fn rollback(&self, id: &str, version: u64) -> Result<Commit> {
        Ok(Commit::from(self.store.rollback(id, version)?.as_ref()))
    }

    pub fn history(&self, id: &str) -> Result<Vec<HistoryRow>> {
        self.store.history(id)
    }

    /// Changelog lines between two recorded versions.
    pub fn diff(&self, id: &str, from: u64, to: u64) -> Result<Vec<String>> {
        let session = self.store.load(id)?;
        Ok(render_changelog(&compute_diff(
            &session.record(from)?.state,
            &session.record(to)?.state,
        )))
    }

    pub fn session(&self, id: &str) -> Result<Session> {
        self.store.load(id)
    }
}

/// Shared handle used by the HTTP layer and jobs.
pub type SharedEngine = Arc<Engine>;
