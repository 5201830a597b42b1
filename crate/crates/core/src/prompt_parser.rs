//! Free-form briefs in, structured semantics out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::provider_gateway::{Gateway, StructuredRequest, Task, PARSE_SCHEMA};
use crate::semantic_model::{validate_proposals, SemanticState, ShadowProposal, SlotRef};
use crate::wire::read_semantics;

const PARSE_INSTRUCTIONS: &str = "\
You turn a free-form description of a user interface into structured design semantics.
Place each piece of intent into exactly one slot:
- product: description (what is being built), target_user, goal
- design_system: design_style, color, typography, visual_properties, visual_mood, tone_of_voice
- feature: function (what this screen does), content (what it shows), information_architecture (how the content is organized)
- components: one entry per concrete UI component, with a name and any of type, interactivity, state, content, properties
Only fill slots the brief supports. Use the brief's own words where possible.
Put any text you cannot place into `residue`.";

/// Semantics read out of a brief. Component slots are keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSemantics {
    pub entries: BTreeMap<SlotRef, String>,
    pub new_components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unparsed_residue: Option<String>,
}

impl ParsedSemantics {
    pub(crate) fn from_payload(payload: &Value) -> Self {
        let wire = read_semantics(payload);
        let unparsed_residue = payload
            .get("residue")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(str::to_string);
        Self {
            entries: wire.entries,
            new_components: wire.components,
            unparsed_residue,
        }
    }
}

/// Result of applying a parse to a state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedParse {
    pub state: SemanticState,
    /// Parsed components that already existed; their entries landed on the
    /// existing component.
    pub skipped_components: Vec<String>,
    /// Entries that hit a user-owned slot and were not applied.
    pub preserved: Vec<ShadowProposal>,
}

pub fn parse_prompt(text: &str, gateway: &Gateway) -> Result<ParsedSemantics> {
    if text.trim().is_empty() {
        return Err(Error::EmptyPrompt);
    }
    let request = StructuredRequest::new(Task::Parse, PARSE_SCHEMA, PARSE_INSTRUCTIONS, text);
    let payload = gateway.complete_structured(&request)?;
    Ok(ParsedSemantics::from_payload(&payload))
}

/// Writes parsed entries with `Provenance::Parsed`. User-owned and accepted
/// slots are left alone. Parsing never clears a slot.
pub fn apply_parsed(state: &SemanticState, parsed: &ParsedSemantics, version: u64) -> Result<AppliedParse> {
    validate_proposals(&parsed.entries, &parsed.new_components)?;
    let skipped_components = parsed
        .new_components
        .iter()
        .filter(|n| state.component_index(n).is_some())
        .cloned()
        .collect();
    let (state, preserved) =
        state.apply_parsed_entries(&parsed.entries, &parsed.new_components, version)?;
    Ok(AppliedParse {
        state,
        skipped_components,
        preserved,
    })
}
