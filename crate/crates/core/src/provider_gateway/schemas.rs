//! Response schemas for the structured tasks, and the registry that
//! validates payloads against them.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result, SchemaIssue};
use crate::semantic_model::Level;

pub const PARSE_SCHEMA: &str = "parse-v1";
pub const ANALYZE_SCHEMA: &str = "analyze-v1";
pub const RELATIONS_SCHEMA: &str = "relations-v1";

fn text() -> Value {
    json!({ "type": "string", "minLength": 1 })
}

fn level_object(level: Level) -> Value {
    let properties: Map<String, Value> = level
        .attributes()
        .iter()
        .map(|a| (a.to_string(), text()))
        .collect();
    json!({ "type": "object", "additionalProperties": false, "properties": properties })
}

fn component_object() -> Value {
    let mut properties: Map<String, Value> = Level::Component
        .attributes()
        .iter()
        .map(|a| (a.to_string(), text()))
        .collect();
    properties.insert("name".into(), text());
    json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["name"],
        "properties": properties,
    })
}

/// Regex matching the dotted slot form used on the wire.
pub fn slot_pattern() -> String {
    let alt = |level: Level| level.attributes().join("|");
    format!(
        "^(product\\.({})|design_system\\.({})|feature\\.({})|component\\..+\\.({}))$",
        alt(Level::Product),
        alt(Level::DesignSystem),
        alt(Level::Feature),
        alt(Level::Component),
    )
}

fn semantics_properties() -> Map<String, Value> {
    let mut properties = Map::new();
    for level in Level::FIXED {
        properties.insert(level.key().into(), level_object(level));
    }
    properties.insert(
        "components".into(),
        json!({ "type": "array", "items": component_object() }),
    );
    properties
}

pub fn parse_schema() -> Value {
    let mut properties = semantics_properties();
    properties.insert("residue".into(), json!({ "type": "string" }));
    json!({ "type": "object", "additionalProperties": false, "properties": properties })
}

pub fn analyze_schema() -> Value {
    let mut properties = semantics_properties();
    properties.insert(
        "evidence".into(),
        json!({
            "type": "object",
            "propertyNames": { "pattern": slot_pattern() },
            "additionalProperties": text(),
        }),
    );
    json!({ "type": "object", "additionalProperties": false, "properties": properties })
}

pub fn relations_schema() -> Value {
    let path = json!({ "type": "string", "pattern": slot_pattern() });
    json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["edges"],
        "properties": {
            "edges": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["from", "to", "kind", "explanation"],
                    "properties": {
                        "from": path,
                        "to": path,
                        "kind": { "enum": ["match", "conflict", "needs_value"] },
                        "explanation": text(),
                        "suggestion": text(),
                    }
                }
            }
        }
    })
}

struct Registered {
    schema: Value,
    validator: jsonschema::Validator,
}

/// Registered response schemas, keyed by id.
#[derive(Clone, Default)]
pub struct SchemaRegistry {
    schemas: BTreeMap<String, Arc<Registered>>,
}

impl std::fmt::Debug for SchemaRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.schemas.keys()).finish()
    }
}

impl SchemaRegistry {
    /// A registry holding the parse, analyze, and relations schemas.
    pub fn with_builtin() -> Self {
        let mut registry = Self::default();
        registry
            .register(PARSE_SCHEMA, parse_schema())
            .and_then(|r| r.register(ANALYZE_SCHEMA, analyze_schema()))
            .and_then(|r| r.register(RELATIONS_SCHEMA, relations_schema()))
            .expect("built-in schemas compile");
        registry
    }

    pub fn register(&mut self, id: &str, schema: Value) -> Result<&mut Self> {
        let validator = jsonschema::validator_for(&schema)
            .map_err(|e| Error::ConfigInvalid(format!("schema `{id}` does not compile: {e}")))?;
        self.schemas
            .insert(id.to_string(), Arc::new(Registered { schema, validator }));
        Ok(self)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.schemas.contains_key(id)
    }

    pub fn schema(&self, id: &str) -> Result<&Value> {
        self.schemas
            .get(id)
            .map(|r| &r.schema)
            .ok_or_else(|| Error::UnknownSchema(id.to_string()))
    }

    pub fn validate(&self, id: &str, payload: &Value) -> Result<()> {
        let registered = self
            .schemas
            .get(id)
            .ok_or_else(|| Error::UnknownSchema(id.to_string()))?;
        let issues: Vec<SchemaIssue> = registered
            .validator
            .iter_errors(payload)
            .map(|e| SchemaIssue {
                instance_path: e.instance_path.to_string(),
                message: e.to_string(),
            })
            .collect();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::SchemaViolation {
                schema_id: id.to_string(),
                issues,
            })
        }
    }
}
