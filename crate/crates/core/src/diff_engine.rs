//! Path-level diffs between semantic states.
//!
//! Diffs compare slot text only. Components are matched by name, so a
//! rename shows up as one removal plus one addition. Component order is not
//! part of a diff: applying one keeps the surviving components in their
//! existing order and appends additions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantic_model::{AttributePath, Level, Provenance, SemanticState, SlotRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    Added,
    Removed,
    Changed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub path: SlotRef,
    pub kind: ChangeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new: Option<String>,
}

impl DiffEntry {
    fn between(path: SlotRef, old: Option<&str>, new: Option<&str>) -> Option<DiffEntry> {
        let kind = match (old, new) {
            (None, None) => return None,
            (Some(o), Some(n)) if o == n => return None,
            (None, Some(_)) => ChangeKind::Added,
            (Some(_), None) => ChangeKind::Removed,
            (Some(_), Some(_)) => ChangeKind::Changed,
        };
        Some(DiffEntry {
            path,
            kind,
            old: old.map(str::to_string),
            new: new.map(str::to_string),
        })
    }

    fn is_consistent(&self) -> bool {
        match self.kind {
            ChangeKind::Added => self.old.is_none() && self.new.as_deref().is_some_and(|n| !n.is_empty()),
            ChangeKind::Removed => self.new.is_none() && self.old.as_deref().is_some_and(|o| !o.is_empty()),
            ChangeKind::Changed => match (&self.old, &self.new) {
                (Some(o), Some(n)) => o != n && !o.is_empty() && !n.is_empty(),
                _ => false,
            },
        }
    }

    fn inverted(&self) -> DiffEntry {
        let kind = match self.kind {
            ChangeKind::Added => ChangeKind::Removed,
            ChangeKind::Removed => ChangeKind::Added,
            ChangeKind::Changed => ChangeKind::Changed,
        };
        DiffEntry {
            path: self.path.clone(),
            kind,
            old: self.new.clone(),
            new: self.old.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentOpKind {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentOp {
    pub name: String,
    pub op: ComponentOpKind,
}

/// Differences between two states. Serialized as one flat JSON array holding
/// slot entries and component operations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<DiffItem>", try_from = "Vec<DiffItem>")]
pub struct SemanticDiff {
    pub entries: Vec<DiffEntry>,
    pub component_ops: Vec<ComponentOp>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DiffItem {
    Entry(DiffEntry),
    Component { component: String, op: ComponentOpKind },
}

impl From<SemanticDiff> for Vec<DiffItem> {
    fn from(diff: SemanticDiff) -> Self {
        diff.component_ops
            .into_iter()
            .map(|c| DiffItem::Component {
                component: c.name,
                op: c.op,
            })
            .chain(diff.entries.into_iter().map(DiffItem::Entry))
            .collect()
    }
}

impl TryFrom<Vec<DiffItem>> for SemanticDiff {
    type Error = Error;

    fn try_from(items: Vec<DiffItem>) -> Result<Self> {
        let mut diff = SemanticDiff::default();
        for item in items {
            match item {
                DiffItem::Entry(e) => diff.entries.push(e),
                DiffItem::Component { component, op } => diff.component_ops.push(ComponentOp {
                    name: component,
                    op,
                }),
            }
        }
        diff.validate()?;
        Ok(diff)
    }
}

impl SemanticDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.component_ops.is_empty()
    }

    /// Checks the structural invariants: kinds agree with old/new presence,
    /// one entry per path, component names unique.
    pub fn validate(&self) -> Result<()> {
        let mut paths = BTreeSet::new();
        for e in &self.entries {
            if !e.is_consistent() {
                return Err(Error::InvalidRequest(format!(
                    "diff entry for {} is inconsistent with kind {:?}",
                    e.path, e.kind
                )));
            }
            if !paths.insert(&e.path) {
                return Err(Error::InvalidRequest(format!("duplicate diff entry for {}", e.path)));
            }
        }
        let mut names = BTreeSet::new();
        for op in &self.component_ops {
            if !names.insert(op.name.as_str()) {
                return Err(Error::InvalidRequest(format!(
                    "duplicate component operation for {}",
                    op.name
                )));
            }
        }
        Ok(())
    }

    /// Every slot reference the diff touches.
    pub fn touched(&self) -> impl Iterator<Item = &SlotRef> {
        self.entries.iter().map(|e| &e.path)
    }
}

fn text_at<'a>(state: &'a SemanticState, slot: &SlotRef) -> Option<&'a str> {
    let path = state.resolve(slot).ok()?;
    state
        .get_attribute(&path)
        .ok()
        .flatten()
        .map(|v| v.text())
}

/// Minimal diff turning `a`'s slot texts into `b`'s.
///
/// Entry order: fixed levels in inventory order, then components in `b`'s
/// order followed by components only present in `a`.
pub fn compute_diff(a: &SemanticState, b: &SemanticState) -> SemanticDiff {
    let mut diff = SemanticDiff::default();
    for path in AttributePath::all_fixed() {
        let slot = a.slot_ref(&path).expect("fixed paths are always valid");
        let old = text_at(a, &slot);
        let new = text_at(b, &slot);
        diff.entries.extend(DiffEntry::between(slot, old, new));
    }

    let names: Vec<(&str, Option<ComponentOpKind>)> = b
        .components()
        .iter()
        .map(|c| {
            let op = a
                .component_index(c.name())
                .is_none()
                .then_some(ComponentOpKind::Added);
            (c.name(), op)
        })
        .chain(
            a.components()
                .iter()
                .filter(|c| b.component_index(c.name()).is_none())
                .map(|c| (c.name(), Some(ComponentOpKind::Removed))),
        )
        .collect();

    for (name, op) in names {
        if let Some(op) = op {
            diff.component_ops.push(ComponentOp {
                name: name.to_string(),
                op,
            });
        }
        for attribute in Level::Component.attributes() {
            let slot = SlotRef::component(name, attribute).expect("inventory attribute");
            let old = text_at(a, &slot);
            let new = text_at(b, &slot);
            diff.entries.extend(DiffEntry::between(slot, old, new));
        }
    }
    diff
}

/// Applies `diff` to `state`. Written values carry `Provenance::User` and
/// `version`.
pub fn apply_diff(state: &SemanticState, diff: &SemanticDiff, version: u64) -> Result<SemanticState> {
    diff.validate()?;
    let mut next = state.clone();

    for op in diff.component_ops.iter().filter(|o| o.op == ComponentOpKind::Added) {
        if next.component_index(&op.name).is_some() {
            return Err(Error::DiffConflict {
                path: format!("component.{}", op.name),
                expected: None,
                found: Some(op.name.clone()),
            });
        }
        next = next.add_component(&op.name)?.0;
    }

    for entry in &diff.entries {
        let found = text_at(&next, &entry.path);
        if found != entry.old.as_deref() {
            return Err(Error::DiffConflict {
                path: entry.path.to_string(),
                expected: entry.old.clone(),
                found: found.map(str::to_string),
            });
        }
        let path = next.resolve(&entry.path).map_err(|_| Error::DiffConflict {
            path: entry.path.to_string(),
            expected: entry.old.clone(),
            found: None,
        })?;
        next = match &entry.new {
            Some(text) => next.set_attribute(&path, text.clone(), Provenance::User, version)?,
            None => next.clear_attribute(&path)?,
        };
    }

    for op in diff.component_ops.iter().filter(|o| o.op == ComponentOpKind::Removed) {
        let index = next.component_index(&op.name).ok_or_else(|| Error::DiffConflict {
            path: format!("component.{}", op.name),
            expected: Some(op.name.clone()),
            found: None,
        })?;
        // A removal must have cleared every slot through explicit entries.
        if let Some(leftover) = AttributePath::all_component(index)
            .find(|p| next.get_attribute(p).ok().flatten().is_some())
        {
            let slot = next.slot_ref(&leftover)?;
            return Err(Error::DiffConflict {
                path: slot.to_string(),
                expected: None,
                found: text_at(&next, &slot).map(str::to_string),
            });
        }
        next = next.remove_component(&op.name)?;
    }
    Ok(next)
}

pub fn invert_diff(diff: &SemanticDiff) -> SemanticDiff {
    SemanticDiff {
        entries: diff.entries.iter().map(DiffEntry::inverted).collect(),
        component_ops: diff
            .component_ops
            .iter()
            .map(|c| ComponentOp {
                name: c.name.clone(),
                op: match c.op {
                    ComponentOpKind::Added => ComponentOpKind::Removed,
                    ComponentOpKind::Removed => ComponentOpKind::Added,
                },
            })
            .collect(),
    }
}

fn render_entry(entry: &DiffEntry) -> String {
    let mut head = format!("{} · {}", entry.path.level().label(), entry.path.attribute_label());
    if let Some(name) = entry.path.component_name() {
        head.push_str(" · ");
        head.push_str(name);
    }
    match (&entry.old, &entry.new) {
        (Some(o), Some(n)) => format!("{head}: \"{o}\" → \"{n}\""),
        (None, Some(n)) => format!("{head}: → \"{n}\""),
        (Some(o), None) => format!("{head}: \"{o}\" →"),
        (None, None) => format!("{head}:"),
    }
}

fn render_op(op: &ComponentOp) -> String {
    let verb = match op.op {
        ComponentOpKind::Added => "added",
        ComponentOpKind::Removed => "removed",
    };
    format!("Component · {}: {verb}", op.name)
}

/// One line per entry and per component operation. Fixed-level entries come
/// first in inventory order; each component's operation line precedes its
/// slot lines.
pub fn render_changelog(diff: &SemanticDiff) -> Vec<String> {
    let mut fixed: Vec<&DiffEntry> = diff
        .entries
        .iter()
        .filter(|e| e.path.component_name().is_none())
        .collect();
    fixed.sort_by_key(|e| (e.path.level(), e.path.slot()));
    let mut lines: Vec<String> = fixed.into_iter().map(render_entry).collect();

    let mut components: Vec<&str> = Vec::new();
    let names = diff
        .component_ops
        .iter()
        .map(|o| o.name.as_str())
        .chain(diff.entries.iter().filter_map(|e| e.path.component_name()));
    for name in names {
        if !components.contains(&name) {
            components.push(name);
        }
    }
    for name in components {
        if let Some(op) = diff.component_ops.iter().find(|o| o.name == name) {
            lines.push(render_op(op));
        }
        let mut entries: Vec<&DiffEntry> = diff
            .entries
            .iter()
            .filter(|e| e.path.component_name() == Some(name))
            .collect();
        entries.sort_by_key(|e| e.path.slot());
        lines.extend(entries.into_iter().map(render_entry));
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &SemanticState, path: &str, text: &str) -> SemanticState {
        let p = s.parse_path(path).unwrap();
        s.set_attribute(&p, text, Provenance::User, 1).unwrap()
    }

    #[test]
    fn reflexive_diff_is_empty() {
        let s = set(&SemanticState::new(), "design_system.color", "Dark Mode");
        assert!(compute_diff(&s, &s).is_empty());
    }

    #[test]
    fn color_change_renders_one_line() {
        let a = set(&SemanticState::new(), "design_system.color", "muted pastels");
        let b = set(&SemanticState::new(), "design_system.color", "Neon Green");
        let d = compute_diff(&a, &b);
        assert_eq!(d.entries.len(), 1);
        assert_eq!(d.entries[0].kind, ChangeKind::Changed);
        assert_eq!(
            render_changelog(&d),
            vec!["Design System · Color: \"muted pastels\" → \"Neon Green\"".to_string()]
        );
    }

    #[test]
    fn provenance_alone_is_not_a_change() {
        let p: AttributePath = "product.goal".parse().unwrap();
        let a = SemanticState::new().set_attribute(&p, "x", Provenance::Parsed, 1).unwrap();
        let b = SemanticState::new().set_attribute(&p, "x", Provenance::User, 7).unwrap();
        assert!(compute_diff(&a, &b).is_empty());
    }

    #[test]
    fn rename_is_remove_plus_add() {
        let (a, _) = SemanticState::new().add_component("Card").unwrap();
        let a = set(&a, "component.Card.type", "article");
        let (b, _) = SemanticState::new().add_component("Tile").unwrap();
        let b = set(&b, "component.Tile.type", "article");
        let d = compute_diff(&a, &b);
        assert_eq!(
            d.component_ops,
            vec![
                ComponentOp { name: "Tile".into(), op: ComponentOpKind::Added },
                ComponentOp { name: "Card".into(), op: ComponentOpKind::Removed },
            ]
        );
        assert_eq!(
            render_changelog(&d),
            vec![
                "Component · Tile: added",
                "Component · Type · Tile: → \"article\"",
                "Component · Card: removed",
                "Component · Type · Card: \"article\" →",
            ]
        );
        let applied = apply_diff(&a, &d, 2).unwrap();
        assert!(compute_diff(&applied, &b).is_empty());
        let back = apply_diff(&b, &invert_diff(&d), 3).unwrap();
        assert!(compute_diff(&back, &a).is_empty());
    }

    #[test]
    fn apply_empty_diff_is_identity() {
        let s = set(&SemanticState::new(), "feature.function", "track habits");
        assert_eq!(apply_diff(&s, &SemanticDiff::default(), 9).unwrap(), s);
    }

    #[test]
    fn stale_old_value_conflicts() {
        let a = set(&SemanticState::new(), "design_system.color", "muted pastels");
        let b = set(&SemanticState::new(), "design_system.color", "Neon Green");
        let d = compute_diff(&a, &b);
        let other = set(&SemanticState::new(), "design_system.color", "Dark Mode");
        match apply_diff(&other, &d, 2).unwrap_err() {
            Error::DiffConflict { path, expected, found } => {
                assert_eq!(path, "design_system.color");
                assert_eq!(expected.as_deref(), Some("muted pastels"));
                assert_eq!(found.as_deref(), Some("Dark Mode"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn applied_values_are_user_owned() {
        let b = set(&SemanticState::new(), "product.goal", "focus");
        let applied = apply_diff(&SemanticState::new(), &compute_diff(&SemanticState::new(), &b), 4).unwrap();
        let v = applied
            .get_attribute(&"product.goal".parse().unwrap())
            .unwrap()
            .unwrap();
        assert_eq!((v.provenance(), v.version()), (Provenance::User, 4));
    }

    #[test]
    fn invert_is_an_involution() {
        let a = set(&SemanticState::new(), "product.goal", "a");
        let b = set(&set(&SemanticState::new(), "product.goal", "b"), "feature.content", "c");
        let d = compute_diff(&a, &b);
        assert_eq!(invert_diff(&invert_diff(&d)), d);
        assert!(invert_diff(&SemanticDiff::default()).is_empty());
    }

    #[test]
    fn serialized_as_flat_array() {
        let (b, _) = SemanticState::new().add_component("Card").unwrap();
        let b = set(&b, "component.Card.state", "loading");
        let d = compute_diff(&SemanticState::new(), &b);
        let json = serde_json::to_value(&d).unwrap();
        assert_eq!(
            json,
            serde_json::json!([
                {"component": "Card", "op": "added"},
                {"path": "component.Card.state", "kind": "added", "new": "loading"}
            ])
        );
        let back: SemanticDiff = serde_json::from_value(json).unwrap();
        assert_eq!(back, d);
        let bad = serde_json::json!([{"path": "product.goal", "kind": "changed", "old": "x", "new": "x"}]);
        assert!(serde_json::from_value::<SemanticDiff>(bad).is_err());
    }
}
