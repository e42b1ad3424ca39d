//! Hierarchical tag taxonomy.
//!
//! Tags live in rooted trees; a tag implies every ancestor on its path, so
//! the layers of a tree act as abstraction levels. Leaf labels may repeat
//! across branches (both `Changing lane` and `Turning` have a `Left`), so a
//! tag's identity is its full path from the tree root, e.g.
//! `Vehicle lateral activity/Turning/Left`. Files may use any unambiguous
//! path suffix (`Turning/Left`, or just `Decelerating`).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TagError {
    #[error("unknown tag `{0}`")]
    UnknownTag(String),
    #[error("ambiguous tag `{name}`: matches {}", candidates.join(", "))]
    AmbiguousTag { name: String, candidates: Vec<String> },
    #[error("duplicate tag path `{0}`")]
    DuplicateTag(String),
    #[error("invalid tag name `{0}`: must be non-empty and must not contain `/`")]
    InvalidName(String),
}

/// A resolved, path-qualified tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tag(String);

impl Tag {
    /// Full path from the tree root, `/`-separated.
    pub fn path(&self) -> &str {
        &self.0
    }

    /// Last path segment: the tag's display name.
    pub fn leaf(&self) -> &str {
        self.0.rsplit('/').next().unwrap_or(&self.0)
    }

    /// True if `self` equals `general` or sits below it in the same tree.
    /// Implication runs upward only.
    pub fn implies(&self, general: &Tag) -> bool {
        self == general
            || (self.0.len() > general.0.len()
                && self.0.starts_with(&general.0)
                && self.0.as_bytes()[general.0.len()] == b'/')
    }

    /// The tag itself plus all ancestors, outermost last.
    pub fn with_ancestors(&self) -> Vec<Tag> {
        let mut out = Vec::new();
        let mut end = self.0.len();
        loop {
            out.push(Tag(self.0[..end].to_owned()));
            match self.0[..end].rfind('/') {
                Some(idx) => end = idx,
                None => break,
            }
        }
        out
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One node of a tag tree; a tree is its root node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagTree {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TagTree>,
}

impl TagTree {
    pub fn leaf(name: impl Into<String>) -> Self {
        Self { name: name.into(), children: Vec::new() }
    }

    pub fn node(name: impl Into<String>, children: Vec<TagTree>) -> Self {
        Self { name: name.into(), children }
    }
}

/// Registered forest of tag trees with suffix-based name resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TagRegistry {
    trees: Vec<TagTree>,
    paths: BTreeSet<String>,
}

impl TagRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the two default activity trees — lateral
    /// (`Going straight`, `Changing lane`, `Turning`, `Swerving`) and
    /// longitudinal (`Reversing`, `Standing still`, `Driving forward`) — plus
    /// the standalone `Ego vehicle` tag.
    pub fn default_trees() -> Self {
        let lateral = TagTree::node(
            "Vehicle lateral activity",
            vec![
                TagTree::leaf("Going straight"),
                TagTree::node(
                    "Changing lane",
                    vec![TagTree::leaf("Left"), TagTree::leaf("Right")],
                ),
                TagTree::node("Turning", vec![TagTree::leaf("Left"), TagTree::leaf("Right")]),
                TagTree::node("Swerving", vec![TagTree::leaf("Left"), TagTree::leaf("Right")]),
            ],
        );
        let longitudinal = TagTree::node(
            "Vehicle longitudinal activity",
            vec![
                TagTree::leaf("Reversing"),
                TagTree::leaf("Standing still"),
                TagTree::node(
                    "Driving forward",
                    vec![
                        TagTree::leaf("Decelerating"),
                        TagTree::leaf("Cruising"),
                        TagTree::leaf("Accelerating"),
                    ],
                ),
            ],
        );
        let ego = TagTree::leaf("Ego vehicle");

        let mut reg = Self::empty();
        for tree in [lateral, longitudinal, ego] {
            reg.register(tree).expect("default trees are well-formed");
        }
        reg
    }

    /// Like [`TagRegistry::register`], but a tree structurally identical to
    /// an already-registered one is accepted as a no-op. Lets a library ship
    /// the default trees as a data file without colliding with them.
    pub fn register_idempotent(&mut self, tree: TagTree) -> Result<(), TagError> {
        if self.trees.contains(&tree) {
            return Ok(());
        }
        self.register(tree)
    }

    /// Adds a tree; every node path must be new to the registry.
    pub fn register(&mut self, tree: TagTree) -> Result<(), TagError> {
        let mut new_paths = Vec::new();
        collect_paths(&tree, None, &mut new_paths)?;
        for path in &new_paths {
            if self.paths.contains(path) {
                return Err(TagError::DuplicateTag(path.clone()));
            }
        }
        self.paths.extend(new_paths);
        self.trees.push(tree);
        Ok(())
    }

    pub fn trees(&self) -> &[TagTree] {
        &self.trees
    }

    pub fn contains(&self, tag: &Tag) -> bool {
        self.paths.contains(tag.path())
    }

    /// Resolves a name — a full path or any path suffix — to a registered
    /// tag. Suffixes shared by several tags are rejected as ambiguous.
    pub fn resolve(&self, name: &str) -> Result<Tag, TagError> {
        if name.is_empty() {
            return Err(TagError::InvalidName(name.to_owned()));
        }
        if self.paths.contains(name) {
            return Ok(Tag(name.to_owned()));
        }
        let suffix = format!("/{name}");
        let candidates: Vec<&String> =
            self.paths.iter().filter(|p| p.ends_with(&suffix)).collect();
        match candidates.len() {
            0 => Err(TagError::UnknownTag(name.to_owned())),
            1 => Ok(Tag(candidates[0].clone())),
            _ => Err(TagError::AmbiguousTag {
                name: name.to_owned(),
                candidates: candidates.into_iter().cloned().collect(),
            }),
        }
    }

    /// True iff `general` is `specific` or one of its ancestors. Both tags
    /// must be registered.
    pub fn implies(&self, specific: &Tag, general: &Tag) -> Result<bool, TagError> {
        for tag in [specific, general] {
            if !self.contains(tag) {
                return Err(TagError::UnknownTag(tag.path().to_owned()));
            }
        }
        Ok(specific.implies(general))
    }

    /// Ancestor closure of a set of tags.
    pub fn closure<'a>(&self, tags: impl IntoIterator<Item = &'a Tag>) -> BTreeSet<Tag> {
        let mut out = BTreeSet::new();
        for tag in tags {
            out.extend(tag.with_ancestors());
        }
        out
    }
}

fn collect_paths(node: &TagTree, prefix: Option<&str>, out: &mut Vec<String>) -> Result<(), TagError> {
    if node.name.is_empty() || node.name.contains('/') {
        return Err(TagError::InvalidName(node.name.clone()));
    }
    let path = match prefix {
        Some(prefix) => format!("{prefix}/{}", node.name),
        None => node.name.clone(),
    };
    if out.contains(&path) {
        return Err(TagError::DuplicateTag(path));
    }
    for child in &node.children {
        collect_paths(child, Some(&path), out)?;
    }
    out.push(path);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_trees_contain_the_expected_paths() {
        let reg = TagRegistry::default_trees();
        assert!(reg.contains(&Tag("Vehicle lateral activity/Changing lane/Left".into())));
        assert!(reg.contains(&Tag("Vehicle longitudinal activity/Driving forward/Cruising".into())));
        // `Ego vehicle` is standalone: a single-node tree.
        let ego = reg.resolve("Ego vehicle").unwrap();
        assert_eq!(ego.path(), "Ego vehicle");
        assert_eq!(ego.with_ancestors().len(), 1);
    }

    #[test]
    fn implication_runs_upward_only() {
        let reg = TagRegistry::default_trees();
        let decel = reg.resolve("Decelerating").unwrap();
        let forward = reg.resolve("Driving forward").unwrap();
        assert!(reg.implies(&decel, &forward).unwrap());
        assert!(!reg.implies(&forward, &decel).unwrap());
    }

    #[test]
    fn duplicate_leaf_names_resolve_by_parent_qualification() {
        let reg = TagRegistry::default_trees();
        assert!(matches!(reg.resolve("Left"), Err(TagError::AmbiguousTag { .. })));
        let turning_left = reg.resolve("Turning/Left").unwrap();
        assert_eq!(turning_left.path(), "Vehicle lateral activity/Turning/Left");

        let turning = reg.resolve("Turning").unwrap();
        let changing = reg.resolve("Changing lane").unwrap();
        assert!(reg.implies(&turning_left, &turning).unwrap());
        assert!(!reg.implies(&turning_left, &changing).unwrap());
    }

    #[test]
    fn unknown_tags_error() {
        let reg = TagRegistry::default_trees();
        assert!(matches!(reg.resolve("Hovering"), Err(TagError::UnknownTag(_))));
        let foreign = Tag("Weather/Rain".into());
        let ego = reg.resolve("Ego vehicle").unwrap();
        assert!(matches!(reg.implies(&foreign, &ego), Err(TagError::UnknownTag(_))));
    }

    #[test]
    fn registering_a_colliding_tree_fails() {
        let mut reg = TagRegistry::default_trees();
        assert!(matches!(
            reg.register(TagTree::leaf("Ego vehicle")),
            Err(TagError::DuplicateTag(_))
        ));
        // Same leaf name under a new root is fine.
        reg.register(TagTree::node("Weather", vec![TagTree::leaf("Rain")]))
            .unwrap();
        assert!(reg.resolve("Rain").is_ok());
    }

    #[test]
    fn prefix_implication_is_segment_aligned() {
        let mut reg = TagRegistry::empty();
        reg.register(TagTree::node("Road", vec![TagTree::leaf("side")])).unwrap();
        reg.register(TagTree::leaf("Roadside")).unwrap();
        let roadside = reg.resolve("Roadside").unwrap();
        let road = reg.resolve("Road").unwrap();
        assert!(!reg.implies(&roadside, &road).unwrap());
    }

    #[test]
    fn closure_adds_all_ancestors() {
        let reg = TagRegistry::default_trees();
        let decel = reg.resolve("Decelerating").unwrap();
        let closed = reg.closure([&decel]);
        let leaves: Vec<&str> = closed.iter().map(Tag::leaf).collect();
        assert_eq!(
            leaves,
            ["Vehicle longitudinal activity", "Driving forward", "Decelerating"]
        );
    }
}
