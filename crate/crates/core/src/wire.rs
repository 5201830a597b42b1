//! Reading schema-validated semantic payloads into name-keyed entries.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::semantic_model::{Level, SlotRef};

#[derive(Debug, Default)]
pub(crate) struct WireSemantics {
    pub entries: BTreeMap<SlotRef, String>,
    pub components: Vec<String>,
}

/// Model text with surrounding whitespace removed; blank counts as absent.
fn non_empty(v: &Value) -> Option<&str> {
    v.as_str().map(str::trim).filter(|s| !s.is_empty())
}

/// Reads the level objects and the component list of a parse or analyze
/// payload. Repeated component names fold into the first occurrence.
pub(crate) fn read_semantics(payload: &Value) -> WireSemantics {
    let mut out = WireSemantics::default();
    for level in Level::FIXED {
        let Some(obj) = payload.get(level.key()).and_then(Value::as_object) else {
            continue;
        };
        for attribute in level.attributes() {
            if let Some(text) = obj.get(*attribute).and_then(non_empty) {
                let slot = SlotRef::fixed(level, attribute).expect("inventory attribute");
                out.entries.insert(slot, text.to_string());
            }
        }
    }
    let components = payload
        .get("components")
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or_default();
    for component in components {
        let Some(name) = component.get("name").and_then(non_empty) else {
            continue;
        };
        if !out.components.iter().any(|n| n == name) {
            out.components.push(name.to_string());
        }
        for attribute in Level::Component.attributes() {
            if let Some(text) = component.get(*attribute).and_then(non_empty) {
                let slot = SlotRef::component(name, attribute).expect("inventory attribute");
                out.entries.insert(slot, text.to_string());
            }
        }
    }
    out
}
