//! Compiling a state into the generation prompt, and driving initial and
//! diff-scoped generation.

use serde::{Deserialize, Serialize};

use crate::diff_engine::{render_changelog, SemanticDiff};
use crate::error::{Error, Result};
use crate::provider_gateway::{Gateway, GenerationRequest};
use crate::semantic_model::{AttributePath, Level, SemanticState};

/// Runtime constraints appended to every generation request unless
/// configured otherwise.
pub const DEFAULT_CONSTRAINTS: &str = "\
- Style exclusively with Tailwind CSS utility classes.
- Load typefaces from Google Fonts.
- Export a single default React component with no external state.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDoc {
    pub markdown: String,
    pub state_version: u64,
    pub included_paths: Vec<AttributePath>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedArtifact {
    pub artifact_id: String,
    pub code: String,
    pub prompt: PromptDoc,
    pub produced_from_version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationOptions {
    /// Plain-text constraints block; `None` sends the prompt alone.
    pub constraints_text: Option<String>,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self {
            constraints_text: Some(DEFAULT_CONSTRAINTS.to_string()),
        }
    }
}

impl GenerationOptions {
    /// The document actually sent: the compiled prompt plus constraints.
    pub fn request_document(&self, prompt: &PromptDoc) -> String {
        match self.constraints_text.as_deref().map(str::trim_end) {
            Some(c) if !c.is_empty() => {
                format!("{}\n## Technical Constraints\n\n{c}\n", prompt.markdown)
            }
            _ => prompt.markdown.clone(),
        }
    }
}

/// Renders `state` as markdown: one `##` heading per non-empty level, one
/// `- Attribute: value` bullet per filled slot, components as `###`
/// subsections. Pure in `(state, version)`.
pub fn compile_prompt(state: &SemanticState, version: u64) -> Result<PromptDoc> {
    if state.is_empty() {
        return Err(Error::EmptyState);
    }
    let filled = state.filled();
    let mut blocks = Vec::new();
    for level in Level::FIXED {
        let bullets: String = filled
            .iter()
            .filter(|(p, _)| p.level() == level)
            .map(|(p, v)| format!("- {}: {}\n", p.attribute_label(), v.text()))
            .collect();
        if !bullets.is_empty() {
            blocks.push(format!("## {}\n{bullets}", level.label()));
        }
    }
    if !state.components().is_empty() {
        let mut block = format!("## {}\n", Level::Component.label());
        for (index, component) in state.components().iter().enumerate() {
            block.push_str(&format!("### {}\n", component.name()));
            for (p, v) in filled.iter().filter(|(p, _)| p.component_index() == Some(index)) {
                block.push_str(&format!("- {}: {}\n", p.attribute_label(), v.text()));
            }
        }
        blocks.push(block);
    }
    Ok(PromptDoc {
        markdown: blocks.join("\n"),
        state_version: version,
        included_paths: filled.into_iter().map(|(p, _)| p).collect(),
    })
}

fn artifact(code: String, prompt: PromptDoc) -> GeneratedArtifact {
    GeneratedArtifact {
        artifact_id: uuid::Uuid::new_v4().to_string(),
        code,
        produced_from_version: prompt.state_version,
        prompt,
    }
}

pub fn generate_initial(
    state: &SemanticState,
    version: u64,
    gateway: &Gateway,
    options: &GenerationOptions,
) -> Result<GeneratedArtifact> {
    let prompt = compile_prompt(state, version)?;
    let request = GenerationRequest::initial(options.request_document(&prompt))?;
    let code = gateway.generate_code(&request)?;
    Ok(artifact(code, prompt))
}

/// Regenerates with the previous code as the structural reference and the
/// rendered diff as the change directive. The full prompt of the new state
/// is always sent as well.
pub fn regenerate_scoped(
    state: &SemanticState,
    version: u64,
    diff: &SemanticDiff,
    previous: &GeneratedArtifact,
    gateway: &Gateway,
    options: &GenerationOptions,
) -> Result<GeneratedArtifact> {
    if diff.is_empty() {
        return Err(Error::EmptyDiff);
    }
    if previous.code.is_empty() {
        return Err(Error::EmptyArtifact);
    }
    let prompt = compile_prompt(state, version)?;
    let request = GenerationRequest::scoped(
        options.request_document(&prompt),
        previous.code.clone(),
        render_changelog(diff).join("\n"),
    )?;
    let code = gateway.generate_code(&request)?;
    Ok(artifact(code, prompt))
}
