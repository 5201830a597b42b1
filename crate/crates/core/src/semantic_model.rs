//! The four-level semantic state and everything that reads or writes it.
//!
//! A [`SemanticState`] is the single record of design intent for a session.
//! Every operation here is a pure function over it: inputs are never mutated,
//! a new state is returned instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four levels of the semantic hierarchy, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Product,
    DesignSystem,
    Feature,
    Component,
}

const PRODUCT_ATTRS: &[&str] = &["description", "target_user", "goal"];
const DESIGN_SYSTEM_ATTRS: &[&str] = &[
    "design_style",
    "color",
    "typography",
    "visual_properties",
    "visual_mood",
    "tone_of_voice",
];
const FEATURE_ATTRS: &[&str] = &["function", "content", "information_architecture"];
const COMPONENT_ATTRS: &[&str] = &["type", "interactivity", "state", "content", "properties"];

const PRODUCT_LABELS: &[&str] = &["Description", "Target User", "Goal"];
const DESIGN_SYSTEM_LABELS: &[&str] = &[
    "Design Style",
    "Color",
    "Typography",
    "Visual Properties",
    "Visual Mood",
    "Tone of Voice",
];
const FEATURE_LABELS: &[&str] = &["Function", "Content", "Information Architecture"];
const COMPONENT_LABELS: &[&str] = &["Type", "Interactivity", "State", "Content", "Properties"];

impl Level {
    pub const ALL: [Level; 4] = [
        Level::Product,
        Level::DesignSystem,
        Level::Feature,
        Level::Component,
    ];

    /// The three levels with a fixed set of slots.
    pub const FIXED: [Level; 3] = [Level::Product, Level::DesignSystem, Level::Feature];

    /// Attribute identifiers of this level, in inventory order.
    pub const fn attributes(self) -> &'static [&'static str] {
        match self {
            Level::Product => PRODUCT_ATTRS,
            Level::DesignSystem => DESIGN_SYSTEM_ATTRS,
            Level::Feature => FEATURE_ATTRS,
            Level::Component => COMPONENT_ATTRS,
        }
    }

    /// Human-readable attribute names, parallel to [`Level::attributes`].
    pub const fn attribute_labels(self) -> &'static [&'static str] {
        match self {
            Level::Product => PRODUCT_LABELS,
            Level::DesignSystem => DESIGN_SYSTEM_LABELS,
            Level::Feature => FEATURE_LABELS,
            Level::Component => COMPONENT_LABELS,
        }
    }

    pub const fn key(self) -> &'static str {
        match self {
            Level::Product => "product",
            Level::DesignSystem => "design_system",
            Level::Feature => "feature",
            Level::Component => "component",
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            Level::Product => "Product",
            Level::DesignSystem => "Design System",
            Level::Feature => "Feature",
            Level::Component => "Component",
        }
    }

    /// Position of `attribute` in this level's inventory.
    pub fn slot_of(self, attribute: &str) -> Option<usize> {
        self.attributes().iter().position(|a| *a == attribute)
    }

    pub fn from_key(key: &str) -> Option<Level> {
        Level::ALL.into_iter().find(|l| l.key() == key)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Addresses one slot of a state.
///
/// Component slots are addressed by position in the component list. The
/// derived ordering is the canonical slot order: level first, then
/// component index, then inventory position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributePath {
    level: Level,
    component_index: Option<usize>,
    slot: usize,
}

impl AttributePath {
    /// A slot on one of the fixed levels.
    pub fn fixed(level: Level, attribute: &str) -> Result<Self> {
        if level == Level::Component {
            return Err(Error::InvalidPath(format!(
                "component.{attribute} needs a component index"
            )));
        }
        let slot = level
            .slot_of(attribute)
            .ok_or_else(|| Error::InvalidPath(format!("{}.{attribute}", level.key())))?;
        Ok(Self {
            level,
            component_index: None,
            slot,
        })
    }

    /// A slot on the component at `index`.
    pub fn component(index: usize, attribute: &str) -> Result<Self> {
        let slot = Level::Component
            .slot_of(attribute)
            .ok_or_else(|| Error::InvalidPath(format!("component[{index}].{attribute}")))?;
        Ok(Self {
            level: Level::Component,
            component_index: Some(index),
            slot,
        })
    }

    pub(crate) fn from_parts(level: Level, component_index: Option<usize>, slot: usize) -> Self {
        debug_assert_eq!(component_index.is_some(), level == Level::Component);
        debug_assert!(slot < level.attributes().len());
        Self {
            level,
            component_index,
            slot,
        }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn attribute(&self) -> &'static str {
        self.level.attributes()[self.slot]
    }

    pub fn attribute_label(&self) -> &'static str {
        self.level.attribute_labels()[self.slot]
    }

    pub fn component_index(&self) -> Option<usize> {
        self.component_index
    }

    /// Every fixed-level path, in canonical order.
    pub fn all_fixed() -> impl Iterator<Item = AttributePath> {
        Level::FIXED.into_iter().flat_map(|level| {
            (0..level.attributes().len()).map(move |slot| AttributePath::from_parts(level, None, slot))
        })
    }

    /// The five paths of the component at `index`.
    pub fn all_component(index: usize) -> impl Iterator<Item = AttributePath> {
        (0..COMPONENT_ATTRS.len())
            .map(move |slot| AttributePath::from_parts(Level::Component, Some(index), slot))
    }
}

impl fmt::Display for AttributePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.component_index {
            Some(i) => write!(f, "component[{i}].{}", self.attribute()),
            None => write!(f, "{}.{}", self.level.key(), self.attribute()),
        }
    }
}

impl FromStr for AttributePath {
    type Err = Error;

    /// Parses `level.attribute` or `component[<index>].attribute`.
    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidPath(s.to_string());
        let (head, attribute) = s.rsplit_once('.').ok_or_else(invalid)?;
        if let Some(rest) = head.strip_prefix("component[") {
            let index = rest
                .strip_suffix(']')
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(invalid)?;
            return AttributePath::component(index, attribute);
        }
        let level = Level::from_key(head).ok_or_else(invalid)?;
        AttributePath::fixed(level, attribute)
    }
}

impl Serialize for AttributePath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttributePath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Addresses a slot with components named rather than indexed.
///
/// Model responses, diffs, and section markers identify components by name;
/// [`SemanticState::resolve`] turns a reference into an [`AttributePath`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotRef {
    level: Level,
    component: Option<String>,
    slot: usize,
}

impl SlotRef {
    pub fn fixed(level: Level, attribute: &str) -> Result<Self> {
        let path = AttributePath::fixed(level, attribute)?;
        Ok(Self {
            level,
            component: None,
            slot: path.slot,
        })
    }

    pub fn component(name: &str, attribute: &str) -> Result<Self> {
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        let slot = Level::Component
            .slot_of(attribute)
            .ok_or_else(|| Error::InvalidPath(format!("component.{name}.{attribute}")))?;
        Ok(Self {
            level: Level::Component,
            component: Some(name.to_string()),
            slot,
        })
    }

    pub(crate) fn from_parts(level: Level, component: Option<String>, slot: usize) -> Self {
        Self {
            level,
            component,
            slot,
        }
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn attribute(&self) -> &'static str {
        self.level.attributes()[self.slot]
    }

    pub fn attribute_label(&self) -> &'static str {
        self.level.attribute_labels()[self.slot]
    }

    pub fn component_name(&self) -> Option<&str> {
        self.component.as_deref()
    }

    pub(crate) fn slot(&self) -> usize {
        self.slot
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.component {
            Some(name) => write!(f, "component.{name}.{}", self.attribute()),
            None => write!(f, "{}.{}", self.level.key(), self.attribute()),
        }
    }
}

impl FromStr for SlotRef {
    type Err = Error;

    /// Parses the dotted wire form: `level.attribute` or
    /// `component.<name>.attribute`. Names may contain dots.
    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidPath(s.to_string());
        let (head, attribute) = s.rsplit_once('.').ok_or_else(invalid)?;
        if let Some(name) = head.strip_prefix("component.") {
            return SlotRef::component(name, attribute);
        }
        let level = Level::from_key(head).ok_or_else(invalid)?;
        SlotRef::fixed(level, attribute)
    }
}

impl Serialize for SlotRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SlotRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where a slot value came from. Declared in ascending precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    User,
    Parsed,
    Augmented,
    SuggestionAccepted,
}

impl Provenance {
    /// Whether a slot holding this provenance is protected from
    /// model-originated writes (parsing and augmentation).
    pub fn is_protected(self) -> bool {
        matches!(self, Provenance::User | Provenance::SuggestionAccepted)
    }
}

/// The content of one filled slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAttributeValue")]
pub struct AttributeValue {
    text: String,
    provenance: Provenance,
    version: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttributeValue {
    text: String,
    provenance: Provenance,
    version: u64,
}

impl TryFrom<RawAttributeValue> for AttributeValue {
    type Error = Error;

    fn try_from(raw: RawAttributeValue) -> Result<Self> {
        AttributeValue::new(raw.text, raw.provenance, raw.version)
    }
}

impl AttributeValue {
    pub fn new(text: impl Into<String>, provenance: Provenance, version: u64) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(Self {
            text,
            provenance,
            version,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn version(&self) -> u64 {
        self.version
    }
}

type Slot = Option<AttributeValue>;

/// Generates a level struct with one optional slot per inventory attribute.
/// Field order is the inventory order, which fixes serialization key order.
macro_rules! level_slots {
    ($(#[$meta:meta])* $name:ident { $($field:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                $field: Slot,
            )+
        }

        impl $name {
            fn slot(&self, index: usize) -> &Slot {
                [$(&self.$field),+][index]
            }

            fn slot_mut(&mut self, index: usize) -> &mut Slot {
                [$(&mut self.$field),+]
                    .into_iter()
                    .nth(index)
                    .expect("slot index within inventory")
            }
        }
    };
}

level_slots!(
    /// Product-level slots: what is being built, for whom, and why.
    ProductSemantics { description, target_user, goal }
);
level_slots!(
    /// Cross-cutting visual and experiential language.
    DesignSystemSemantics {
        design_style,
        color,
        typography,
        visual_properties,
        visual_mood,
        tone_of_voice,
    }
);
level_slots!(
    /// Screen-specific requirements for the single generated screen.
    FeatureSemantics { function, content, information_architecture }
);

/// One named component and its five slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawComponentSpec")]
pub struct ComponentSpec {
    name: String,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    kind: Slot,
    #[serde(skip_serializing_if = "Option::is_none")]
    interactivity: Slot,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Slot,
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Slot,
    #[serde(skip_serializing_if = "Option::is_none")]
    properties: Slot,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponentSpec {
    name: String,
    #[serde(rename = "type", default)]
    kind: Slot,
    #[serde(default)]
    interactivity: Slot,
    #[serde(default)]
    state: Slot,
    #[serde(default)]
    content: Slot,
    #[serde(default)]
    properties: Slot,
}

impl TryFrom<RawComponentSpec> for ComponentSpec {
    type Error = Error;

    fn try_from(raw: RawComponentSpec) -> Result<Self> {
        if raw.name.is_empty() {
            return Err(Error::EmptyName);
        }
        Ok(Self {
            name: raw.name,
            kind: raw.kind,
            interactivity: raw.interactivity,
            state: raw.state,
            content: raw.content,
            properties: raw.properties,
        })
    }
}

impl ComponentSpec {
    fn empty(name: String) -> Self {
        Self {
            name,
            kind: None,
            interactivity: None,
            state: None,
            content: None,
            properties: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, attribute: &str) -> Option<&AttributeValue> {
        Level::Component
            .slot_of(attribute)
            .and_then(|slot| self.slot(slot).as_ref())
    }

    fn slot(&self, index: usize) -> &Slot {
        [
            &self.kind,
            &self.interactivity,
            &self.state,
            &self.content,
            &self.properties,
        ][index]
    }

    fn slot_mut(&mut self, index: usize) -> &mut Slot {
        match index {
            0 => &mut self.kind,
            1 => &mut self.interactivity,
            2 => &mut self.state,
            3 => &mut self.content,
            _ => &mut self.properties,
        }
    }
}

/// The canonical design-intent record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawSemanticState")]
pub struct SemanticState {
    product: ProductSemantics,
    design_system: DesignSystemSemantics,
    feature: FeatureSemantics,
    components: Vec<ComponentSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSemanticState {
    product: ProductSemantics,
    design_system: DesignSystemSemantics,
    feature: FeatureSemantics,
    components: Vec<ComponentSpec>,
}

impl TryFrom<RawSemanticState> for SemanticState {
    type Error = Error;

    fn try_from(raw: RawSemanticState) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &raw.components {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateName(c.name.clone()));
            }
        }
        Ok(Self {
            product: raw.product,
            design_system: raw.design_system,
            feature: raw.feature,
            components: raw.components,
        })
    }
}

/// A model proposal that collided with a protected slot during a merge.
/// The slot kept its value; the proposal is reported here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowProposal {
    pub path: AttributePath,
    pub kept: String,
    pub proposed: String,
}

/// Semantics extracted from a generated artifact.
///
/// Component slots are keyed by component name; components named here but
/// absent from the target state are listed in `new_components` and appended
/// on merge.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedSemantics {
    pub entries: BTreeMap<SlotRef, String>,
    pub new_components: Vec<String>,
    /// Free-text justification per entry, keyed by the entry's slot.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub evidence: BTreeMap<SlotRef, String>,
}

impl AugmentedSemantics {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.new_components.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        validate_proposals(&self.entries, &self.new_components)
    }
}

pub(crate) fn validate_proposals(
    entries: &BTreeMap<SlotRef, String>,
    new_components: &[String],
) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in new_components {
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateName(name.clone()));
        }
    }
    if entries.values().any(String::is_empty) {
        return Err(Error::EmptyText);
    }
    Ok(())
}

impl SemanticState {
    /// A state with every slot empty and no components.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    fn check_path(&self, path: &AttributePath) -> Result<()> {
        match path.component_index {
            Some(i) if i >= self.components.len() => Err(Error::InvalidPath(format!(
                "{path} (state has {} components)",
                self.components.len()
            ))),
            _ => Ok(()),
        }
    }

    fn slot(&self, path: &AttributePath) -> &Slot {
        match path.level {
            Level::Product => self.product.slot(path.slot),
            Level::DesignSystem => self.design_system.slot(path.slot),
            Level::Feature => self.feature.slot(path.slot),
            Level::Component => self.components[path.component_index.unwrap()].slot(path.slot),
        }
    }

    fn slot_mut(&mut self, path: &AttributePath) -> &mut Slot {
        match path.level {
            Level::Product => self.product.slot_mut(path.slot),
            Level::DesignSystem => self.design_system.slot_mut(path.slot),
            Level::Feature => self.feature.slot_mut(path.slot),
            Level::Component => self.components[path.component_index.unwrap()].slot_mut(path.slot),
        }
    }

    pub fn get_attribute(&self, path: &AttributePath) -> Result<Option<&AttributeValue>> {
        self.check_path(path)?;
        Ok(self.slot(path).as_ref())
    }

    pub fn set_attribute(
        &self,
        path: &AttributePath,
        text: impl Into<String>,
        provenance: Provenance,
        version: u64,
    ) -> Result<SemanticState> {
        self.check_path(path)?;
        let value = AttributeValue::new(text, provenance, version)?;
        let mut next = self.clone();
        *next.slot_mut(path) = Some(value);
        Ok(next)
    }

    pub fn clear_attribute(&self, path: &AttributePath) -> Result<SemanticState> {
        self.check_path(path)?;
        let mut next = self.clone();
        *next.slot_mut(path) = None;
        Ok(next)
    }

    /// Appends an empty component. Returns the new state and the index the
    /// component occupies.
    pub fn add_component(&self, name: &str) -> Result<(SemanticState, usize)> {
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        if self.component_index(name).is_some() {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let mut next = self.clone();
        next.components.push(ComponentSpec::empty(name.to_string()));
        Ok((next, self.components.len()))
    }

    /// Removes the named component with all of its slots.
    pub fn remove_component(&self, name: &str) -> Result<SemanticState> {
        let index = self
            .component_index(name)
            .ok_or_else(|| Error::InvalidPath(format!("component.{name}")))?;
        let mut next = self.clone();
        next.components.remove(index);
        Ok(next)
    }

    /// Every structurally valid path of this state, in canonical order.
    pub fn all_paths(&self) -> Vec<AttributePath> {
        AttributePath::all_fixed()
            .chain((0..self.components.len()).flat_map(AttributePath::all_component))
            .collect()
    }

    pub fn list_empty_attributes(&self) -> Vec<AttributePath> {
        self.all_paths()
            .into_iter()
            .filter(|p| self.slot(p).is_none())
            .collect()
    }

    /// Paths of all filled slots with their values, in canonical order.
    pub fn filled(&self) -> Vec<(AttributePath, &AttributeValue)> {
        self.all_paths()
            .into_iter()
            .filter_map(|p| self.slot(&p).as_ref().map(|v| (p, v)))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty() && self.filled().is_empty()
    }

    /// The name-keyed reference for an index-keyed path.
    pub fn slot_ref(&self, path: &AttributePath) -> Result<SlotRef> {
        self.check_path(path)?;
        let component = path
            .component_index
            .map(|i| self.components[i].name.clone());
        Ok(SlotRef::from_parts(path.level, component, path.slot))
    }

    /// Resolves a name-keyed reference against this state's components.
    pub fn resolve(&self, slot: &SlotRef) -> Result<AttributePath> {
        let component_index = match &slot.component {
            Some(name) => Some(
                self.component_index(name)
                    .ok_or_else(|| Error::InvalidPath(slot.to_string()))?,
            ),
            None => None,
        };
        Ok(AttributePath::from_parts(slot.level, component_index, slot.slot))
    }

    /// Parses either path form: `component[<index>].attr` or
    /// `component.<name>.attr`, plus the fixed-level `level.attr`.
    pub fn parse_path(&self, s: &str) -> Result<AttributePath> {
        let path = match s.parse::<AttributePath>() {
            Ok(path) => path,
            Err(_) => self.resolve(&s.parse::<SlotRef>()?)?,
        };
        self.check_path(&path)?;
        Ok(path)
    }

    /// Applies model-originated proposals under the precedence rule:
    /// empty and model-filled slots take the proposal, protected slots keep
    /// their value and the proposal is shadowed.
    fn apply_proposals(
        &self,
        entries: &BTreeMap<SlotRef, String>,
        new_components: &[String],
        provenance: Provenance,
        version: u64,
    ) -> Result<(SemanticState, Vec<ShadowProposal>)> {
        validate_proposals(entries, new_components)?;
        let mut next = self.clone();
        for name in new_components {
            if next.component_index(name).is_none() {
                next.components.push(ComponentSpec::empty(name.clone()));
            }
        }
        let mut resolved = Vec::with_capacity(entries.len());
        for (slot, text) in entries {
            resolved.push((next.resolve(slot)?, text));
        }
        // Canonical order so shadow lists are deterministic.
        resolved.sort_by_key(|(p, _)| *p);
        let mut shadowed = Vec::new();
        for (path, text) in resolved {
            let slot = next.slot_mut(&path);
            match slot {
                Some(existing) if existing.provenance.is_protected() => {
                    if existing.text != *text {
                        shadowed.push(ShadowProposal {
                            path,
                            kept: existing.text.clone(),
                            proposed: text.clone(),
                        });
                    }
                }
                Some(existing) if existing.text == *text => {}
                _ => *slot = Some(AttributeValue::new(text.clone(), provenance, version)?),
            }
        }
        Ok((next, shadowed))
    }

    pub fn merge_augmented(
        &self,
        augmented: &AugmentedSemantics,
        version: u64,
    ) -> Result<(SemanticState, Vec<ShadowProposal>)> {
        self.apply_proposals(
            &augmented.entries,
            &augmented.new_components,
            Provenance::Augmented,
            version,
        )
    }

    pub(crate) fn apply_parsed_entries(
        &self,
        entries: &BTreeMap<SlotRef, String>,
        new_components: &[String],
        version: u64,
    ) -> Result<(SemanticState, Vec<ShadowProposal>)> {
        self.apply_proposals(entries, new_components, Provenance::Parsed, version)
    }

    /// Canonical JSON bytes: fixed key order, empty slots omitted, two-space
    /// indentation, trailing newline.
    pub fn canonical_serialize(&self) -> Vec<u8> {
        to_canonical_json(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<SemanticState> {
        from_canonical_json(bytes)
    }
}

/// Serializes any value in the canonical document style.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    out
}

pub fn from_canonical_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::MalformedDocument {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(s: &str) -> AttributePath {
        s.parse().unwrap()
    }

    #[test]
    fn fresh_state_has_twelve_empty_fixed_slots() {
        let s = SemanticState::new();
        assert!(s.components().is_empty());
        let empty = s.list_empty_attributes();
        assert_eq!(empty.len(), 12);
        assert_eq!(empty, AttributePath::all_fixed().collect::<Vec<_>>());
    }

    #[test]
    fn one_component_adds_five_empty_slots() {
        let (s, idx) = SemanticState::new().add_component("Album Card").unwrap();
        assert_eq!(idx, 0);
        assert_eq!(s.list_empty_attributes().len(), 17);
    }

    #[test]
    fn set_then_get_returns_identical_value() {
        let p = path("design_system.color");
        let s = SemanticState::new()
            .set_attribute(&p, "Dark Mode", Provenance::User, 3)
            .unwrap();
        let v = s.get_attribute(&p).unwrap().unwrap();
        assert_eq!(v, &AttributeValue::new("Dark Mode", Provenance::User, 3).unwrap());
    }

    #[test]
    fn set_does_not_touch_input() {
        let base = SemanticState::new();
        let before = base.canonical_serialize();
        let _ = base
            .set_attribute(&path("product.goal"), "x", Provenance::User, 1)
            .unwrap();
        assert_eq!(base.canonical_serialize(), before);
    }

    #[test]
    fn get_on_fresh_state_is_absent() {
        assert!(SemanticState::new()
            .get_attribute(&path("product.goal"))
            .unwrap()
            .is_none());
    }

    #[test]
    fn unknown_attribute_is_rejected() {
        assert!(matches!(
            "design_system.unknown_attr".parse::<AttributePath>(),
            Err(Error::InvalidPath(_))
        ));
        assert!(matches!(
            "component[0].color".parse::<AttributePath>(),
            Err(Error::InvalidPath(_))
        ));
        assert!(matches!(
            AttributePath::fixed(Level::Component, "type"),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn component_index_out_of_range() {
        let (s, _) = SemanticState::new().add_component("Card").unwrap();
        let err = s
            .set_attribute(&path("component[2].type"), "button", Provenance::User, 1)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidPath(_)));
        let err = SemanticState::new()
            .clear_attribute(&path("component[0].content"))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidPath(_)));
    }

    #[test]
    fn empty_text_is_not_a_value() {
        let err = SemanticState::new()
            .set_attribute(&path("product.goal"), "", Provenance::User, 1)
            .unwrap_err();
        assert!(matches!(err, Error::EmptyText));
    }

    #[test]
    fn clear_is_inverse_and_idempotent() {
        let p = path("feature.content");
        let s = SemanticState::new();
        let set = s.set_attribute(&p, "album artwork", Provenance::User, 1).unwrap();
        let cleared = set.clear_attribute(&p).unwrap();
        assert_eq!(cleared, s);
        assert_eq!(cleared.clear_attribute(&p).unwrap(), s);
    }

    #[test]
    fn components_keep_insertion_order_and_unique_names() {
        let (s, a) = SemanticState::new().add_component("Search Bar").unwrap();
        let (s, b) = s.add_component("Card").unwrap();
        assert_eq!((a, b), (0, 1));
        assert_eq!(s.components()[1].name(), "Card");
        assert!(matches!(s.add_component("Card"), Err(Error::DuplicateName(_))));
        assert!(matches!(s.add_component(""), Err(Error::EmptyName)));
    }

    #[test]
    fn only_description_set_leaves_eleven() {
        let s = SemanticState::new()
            .set_attribute(&path("product.description"), "habit tracker app", Provenance::User, 1)
            .unwrap();
        let empty = s.list_empty_attributes();
        let expected: Vec<_> = AttributePath::all_fixed()
            .filter(|p| p.to_string() != "product.description")
            .collect();
        assert_eq!(empty, expected);
    }

    #[test]
    fn slot_refs_resolve_by_name() {
        let (s, _) = SemanticState::new().add_component("A").unwrap();
        let (s, _) = s.add_component("Album.Card").unwrap();
        let r: SlotRef = "component.Album.Card.interactivity".parse().unwrap();
        assert_eq!(r.component_name(), Some("Album.Card"));
        let p = s.resolve(&r).unwrap();
        assert_eq!(p.to_string(), "component[1].interactivity");
        assert_eq!(s.slot_ref(&p).unwrap(), r);
        assert_eq!(s.parse_path("component.A.type").unwrap().to_string(), "component[0].type");
        assert!(s.parse_path("component.Missing.type").is_err());
    }

    #[test]
    fn merge_respects_user_precedence() {
        let color = path("design_system.color");
        let s = SemanticState::new()
            .set_attribute(&color, "warm pastel tones", Provenance::User, 1)
            .unwrap();
        let mut aug = AugmentedSemantics::default();
        aug.entries.insert(
            SlotRef::fixed(Level::DesignSystem, "color").unwrap(),
            "gradient backgrounds".into(),
        );
        aug.entries.insert(
            SlotRef::fixed(Level::DesignSystem, "typography").unwrap(),
            "bold typography".into(),
        );
        let (merged, shadow) = s.merge_augmented(&aug, 2).unwrap();
        assert_eq!(merged.get_attribute(&color).unwrap().unwrap().text(), "warm pastel tones");
        assert_eq!(
            shadow,
            vec![ShadowProposal {
                path: color,
                kept: "warm pastel tones".into(),
                proposed: "gradient backgrounds".into(),
            }]
        );
        let typo = merged
            .get_attribute(&path("design_system.typography"))
            .unwrap()
            .unwrap();
        assert_eq!(typo.text(), "bold typography");
        assert_eq!(typo.provenance(), Provenance::Augmented);
    }

    #[test]
    fn merge_overwrites_model_values_and_empty_merge_is_identity() {
        let p = path("feature.function");
        let s = SemanticState::new()
            .set_attribute(&p, "old", Provenance::Parsed, 1)
            .unwrap();
        let (same, shadow) = s.merge_augmented(&AugmentedSemantics::default(), 2).unwrap();
        assert_eq!(same, s);
        assert!(shadow.is_empty());

        let mut aug = AugmentedSemantics::default();
        aug.entries
            .insert(SlotRef::fixed(Level::Feature, "function").unwrap(), "new".into());
        let (merged, _) = s.merge_augmented(&aug, 2).unwrap();
        let v = merged.get_attribute(&p).unwrap().unwrap();
        assert_eq!((v.text(), v.provenance()), ("new", Provenance::Augmented));
    }

    #[test]
    fn merge_appends_new_components() {
        let mut aug = AugmentedSemantics::default();
        aug.new_components.push("Card".into());
        aug.entries
            .insert(SlotRef::component("Card", "type").unwrap(), "article".into());
        let (merged, _) = SemanticState::new().merge_augmented(&aug, 1).unwrap();
        assert_eq!(merged.components().len(), 1);
        assert_eq!(merged.components()[0].get("type").unwrap().text(), "article");

        let mut dangling = AugmentedSemantics::default();
        dangling
            .entries
            .insert(SlotRef::component("Ghost", "type").unwrap(), "x".into());
        assert!(matches!(
            SemanticState::new().merge_augmented(&dangling, 1),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn truncated_document_is_malformed() {
        let bytes = SemanticState::new().canonical_serialize();
        let err = SemanticState::deserialize(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::MalformedDocument { .. }));
    }

    #[test]
    fn deserialize_rejects_unknown_attributes_and_empty_text() {
        let doc = br#"{"product":{"mood":{"text":"x","provenance":"user","version":0}},"design_system":{},"feature":{},"components":[]}"#;
        assert!(SemanticState::deserialize(doc).is_err());
        let doc = br#"{"product":{"goal":{"text":"","provenance":"user","version":0}},"design_system":{},"feature":{},"components":[]}"#;
        assert!(SemanticState::deserialize(doc).is_err());
        let doc = br#"{"product":{},"design_system":{},"feature":{},"components":[{"name":"A"},{"name":"A"}]}"#;
        assert!(SemanticState::deserialize(doc).is_err());
    }

    #[test]
    fn empty_state_serialization_form() {
        let bytes = SemanticState::new().canonical_serialize();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\n  \"product\": {},\n  \"design_system\": {},\n  \"feature\": {},\n  \"components\": []\n}\n"
        );
    }
}
