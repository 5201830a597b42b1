//! Reading implemented semantics back out of a generated artifact.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::generation_engine::GeneratedArtifact;
use crate::provider_gateway::{Attachment, Gateway, StructuredRequest, Task, ANALYZE_SCHEMA};
use crate::semantic_model::{AttributePath, AugmentedSemantics, SemanticState, SlotRef};
use crate::wire::read_semantics;

const ANALYZE_INSTRUCTIONS: &str = "\
You inspect generated React component code, and a screenshot of it when one is attached, and \
report the design semantics the implementation actually realizes.
Fill every slot the implementation gives evidence for, including choices the specification did \
not ask for:
- product: description, target_user, goal
- design_system: design_style, color, typography, visual_properties, visual_mood, tone_of_voice
- feature: function, content, information_architecture
- components: one entry per distinct UI component, with a name and any of type, interactivity, \
state, content, properties
Describe concrete values (colors, type scale, radii, layout). For each slot you fill, add a \
short justification to `evidence`, keyed by the dotted slot path.";

pub fn extract_semantics(
    artifact: &GeneratedArtifact,
    screenshot: Option<Attachment>,
    gateway: &Gateway,
) -> Result<AugmentedSemantics> {
    if artifact.code.trim().is_empty() {
        return Err(Error::EmptyArtifact);
    }
    let mut request = StructuredRequest::new(
        Task::AnalyzeArtifact,
        ANALYZE_SCHEMA,
        ANALYZE_INSTRUCTIONS,
        artifact.code.clone(),
    );
    if let Some(image) = screenshot {
        request = request.with_attachment(image);
    }
    let payload = gateway.complete_structured(&request)?;
    let wire = read_semantics(&payload);
    let evidence = payload
        .get("evidence")
        .and_then(Value::as_object)
        .into_iter()
        .flatten()
        .filter_map(|(k, v)| {
            let slot = k.parse::<SlotRef>().ok()?;
            let text = v.as_str().filter(|t| !t.is_empty())?;
            wire.entries
                .contains_key(&slot)
                .then(|| (slot, text.to_string()))
        })
        .collect();
    Ok(AugmentedSemantics {
        entries: wire.entries,
        new_components: wire.components,
        evidence,
    })
}

/// Paths the analysis filled that are empty in `state`, in canonical order.
/// Components the analysis introduced count as empty and are indexed after
/// the existing ones.
pub fn newly_inferred(augmented: &AugmentedSemantics, state: &SemanticState) -> Vec<AttributePath> {
    let mut extended = state.clone();
    for name in &augmented.new_components {
        if let Ok((next, _)) = extended.add_component(name) {
            extended = next;
        }
    }
    let mut paths: Vec<AttributePath> = augmented
        .entries
        .keys()
        .filter_map(|slot| extended.resolve(slot).ok())
        .filter(|p| matches!(extended.get_attribute(p), Ok(None)))
        .collect();
    paths.sort();
    paths.dedup();
    paths
}
