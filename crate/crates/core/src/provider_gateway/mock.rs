//! Deterministic stand-in provider.
//!
//! Generation turns the compiled prompt into a line-oriented template with
//! one `<!-- sem:... -->` section per filled fixed slot and one per
//! component. Artifact analysis reads those sections back, so mock analysis
//! is the exact inverse of mock generation.

use serde_json::{json, Map, Value};

use crate::semantic_model::Level;

const SECTION_END: &str = "<!-- /sem -->";

#[derive(Debug, Default, PartialEq, Eq)]
pub(crate) struct MockSemantics {
    pub fixed: Vec<(Level, &'static str, String)>,
    pub components: Vec<(String, Vec<(&'static str, String)>)>,
}

enum Cursor {
    Outside,
    Level(Level),
}

fn attribute_for_label(level: Level, label: &str) -> Option<&'static str> {
    level
        .attribute_labels()
        .iter()
        .position(|l| *l == label)
        .map(|i| level.attributes()[i])
}

fn trim_trailing_newlines(s: &mut String) {
    while s.ends_with('\n') {
        s.pop();
    }
}

/// Slot currently accumulating continuation lines.
#[derive(Clone, Copy)]
enum Open {
    Fixed(usize),
    Component(usize, usize),
}

impl MockSemantics {
    fn value_mut(&mut self, open: Open) -> &mut String {
        match open {
            Open::Fixed(i) => &mut self.fixed[i].2,
            Open::Component(c, a) => &mut self.components[c].1[a].1,
        }
    }

    fn close(&mut self, open: &mut Option<Open>) {
        if let Some(o) = open.take() {
            trim_trailing_newlines(self.value_mut(o));
        }
    }
}

/// Reads the slot bullets back out of a compiled prompt. Headings that do not
/// name a level (such as an appended constraints block) are skipped.
pub(crate) fn read_prompt(markdown: &str) -> MockSemantics {
    let mut out = MockSemantics::default();
    let mut cursor = Cursor::Outside;
    let mut open: Option<Open> = None;

    for line in markdown.lines() {
        if let Some(label) = line.strip_prefix("## ") {
            out.close(&mut open);
            cursor = Level::ALL
                .into_iter()
                .find(|l| l.label() == label)
                .map_or(Cursor::Outside, Cursor::Level);
            continue;
        }
        if let (Cursor::Level(Level::Component), Some(name)) = (&cursor, line.strip_prefix("### ")) {
            out.close(&mut open);
            out.components.push((name.to_string(), Vec::new()));
            continue;
        }
        let Cursor::Level(level) = cursor else { continue };
        let bullet = line
            .strip_prefix("- ")
            .and_then(|rest| rest.split_once(": "))
            .and_then(|(label, value)| attribute_for_label(level, label).map(|a| (a, value)));
        if let Some((attribute, value)) = bullet {
            if level == Level::Component && out.components.is_empty() {
                continue;
            }
            out.close(&mut open);
            open = Some(if level == Level::Component {
                let c = out.components.len() - 1;
                let attrs = &mut out.components[c].1;
                attrs.push((attribute, value.to_string()));
                Open::Component(c, attrs.len() - 1)
            } else {
                out.fixed.push((level, attribute, value.to_string()));
                Open::Fixed(out.fixed.len() - 1)
            });
            continue;
        }
        if let Some(o) = open {
            let value = out.value_mut(o);
            value.push('\n');
            value.push_str(line);
        }
    }
    out.close(&mut open);
    out
}

pub(crate) fn render_template(semantics: &MockSemantics) -> String {
    let mut out = String::from(
        "export default function GeneratedComponent() {\n  return (\n    <div data-generator=\"mock\">\n",
    );
    for (level, attribute, text) in &semantics.fixed {
        out.push_str(&format!("<!-- sem:{}.{attribute} -->\n{text}\n{SECTION_END}\n", level.key()));
    }
    for (name, attrs) in &semantics.components {
        out.push_str(&format!("<!-- sem:component.{name} -->\n"));
        for (attribute, text) in attrs {
            out.push_str(&format!("{attribute}: {text}\n"));
        }
        out.push_str(SECTION_END);
        out.push('\n');
    }
    out.push_str("    </div>\n  );\n}\n");
    out
}

pub(crate) fn generate(prompt_document: &str) -> String {
    render_template(&read_prompt(prompt_document))
}

/// Splits mock-generated code into `(marker, body)` sections, in order.
pub fn sections(code: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    for line in code.lines() {
        if line == SECTION_END {
            if let Some((marker, body)) = current.take() {
                out.push((marker, body.join("\n")));
            }
            continue;
        }
        if let Some(marker) = line
            .strip_prefix("<!-- sem:")
            .and_then(|rest| rest.strip_suffix(" -->"))
        {
            current = Some((marker.to_string(), Vec::new()));
            continue;
        }
        if let Some((_, body)) = current.as_mut() {
            body.push(line);
        }
    }
    out
}

fn read_component_body(body: &str) -> Vec<(&'static str, String)> {
    let mut attrs: Vec<(&'static str, String)> = Vec::new();
    for line in body.lines() {
        let known = line.split_once(": ").and_then(|(key, value)| {
            Level::Component
                .attributes()
                .iter()
                .find(|a| **a == key)
                .map(|a| (*a, value))
        });
        match (known, attrs.last_mut()) {
            (Some((attribute, value)), _) => attrs.push((attribute, value.to_string())),
            (None, Some((_, value))) => {
                value.push('\n');
                value.push_str(line);
            }
            (None, None) => {}
        }
    }
    attrs
}

/// The analyze-schema payload reconstructing every section of `code`.
pub(crate) fn analyze(code: &str) -> Value {
    let mut levels: Map<String, Value> = Map::new();
    let mut components = Vec::new();
    for (marker, body) in sections(code) {
        if let Some(name) = marker.strip_prefix("component.") {
            let mut obj = Map::new();
            obj.insert("name".into(), Value::String(name.to_string()));
            for (attribute, value) in read_component_body(&body) {
                if !value.is_empty() {
                    obj.insert(attribute.into(), Value::String(value));
                }
            }
            components.push(Value::Object(obj));
        } else if let Some((level, attribute)) = marker.split_once('.') {
            let known = Level::from_key(level)
                .filter(|l| *l != Level::Component && l.slot_of(attribute).is_some());
            if known.is_some() && !body.is_empty() {
                levels
                    .entry(level.to_string())
                    .or_insert_with(|| json!({}))
                    .as_object_mut()
                    .unwrap()
                    .insert(attribute.to_string(), Value::String(body));
            }
        }
    }
    if !components.is_empty() {
        levels.insert("components".into(), Value::Array(components));
    }
    Value::Object(levels)
}
