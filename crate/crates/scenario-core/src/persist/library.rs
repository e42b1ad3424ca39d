//! Scenario libraries: a directory (or in-memory store) of `.scn.json`
//! files plus the flat `index` file mapping every defined uid to the file
//! that defines it. Cross-file `$ref`s resolve through the index; loaded
//! objects are cached so one uid yields one shared instance.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::model::{
    Activity, ActivityCategory, Actor, ActorCategory, Event, PhysicalElement,
    PhysicalElementCategory, Scenario, ScenarioCategory, ValidationContext,
};
use crate::dynamics::ModelRegistry;
use crate::tags::{TagRegistry, TagTree};

use super::wire::{self, FileResolver, LocalDefs, WireWriter};
use super::{parse_envelope, to_canonical_json, Payload, PersistError, INDEX_FILE};

/// Result of loading one file.
#[derive(Debug, Clone)]
pub enum LoadedElement {
    Scenario(Arc<Scenario>),
    ScenarioCategory(Arc<ScenarioCategory>),
    TagTrees(Vec<TagTree>),
}

impl LoadedElement {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedElement::Scenario(_) => "scenario",
            LoadedElement::ScenarioCategory(_) => "scenario_category",
            LoadedElement::TagTrees(_) => "tag_trees",
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Disk(PathBuf),
    Memory(BTreeMap<String, String>),
}

impl Storage {
    fn read(&self, rel: &str) -> Result<String, PersistError> {
        match self {
            Storage::Disk(root) => {
                let path = root.join(rel);
                std::fs::read_to_string(&path).map_err(|e| PersistError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            }
            Storage::Memory(files) => files.get(rel).cloned().ok_or(PersistError::Io {
                path: rel.to_owned(),
                message: "not in memory store".into(),
            }),
        }
    }

    fn write(&mut self, rel: &str, text: String) -> Result<(), PersistError> {
        match self {
            Storage::Disk(root) => {
                let path = root.join(rel);
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| PersistError::Io {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                }
                std::fs::write(&path, text).map_err(|e| PersistError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
            }
            Storage::Memory(files) => {
                files.insert(rel.to_owned(), text);
                Ok(())
            }
        }
    }
}

/// A loaded (or under-construction) scenario library.
pub struct Library {
    storage: Storage,
    index: BTreeMap<String, String>,
    tags: TagRegistry,
    models: ModelRegistry,
    loaded_paths: BTreeSet<String>,
    loading: BTreeSet<String>,
    scenarios: BTreeMap<String, Arc<Scenario>>,
    scenario_categories: BTreeMap<String, Arc<ScenarioCategory>>,
    events: BTreeMap<String, Arc<Event>>,
    actors: BTreeMap<String, Arc<Actor>>,
    activities: BTreeMap<String, Arc<Activity>>,
    actor_categories: BTreeMap<String, Arc<ActorCategory>>,
    activity_categories: BTreeMap<String, Arc<ActivityCategory>>,
    physical_elements: BTreeMap<String, Arc<PhysicalElement>>,
    physical_element_categories: BTreeMap<String, Arc<PhysicalElementCategory>>,
}

impl Library {
    fn with_storage(storage: Storage) -> Self {
        Self {
            storage,
            index: BTreeMap::new(),
            tags: TagRegistry::default_trees(),
            models: ModelRegistry::builtin(),
            loaded_paths: BTreeSet::new(),
            loading: BTreeSet::new(),
            scenarios: BTreeMap::new(),
            scenario_categories: BTreeMap::new(),
            events: BTreeMap::new(),
            actors: BTreeMap::new(),
            activities: BTreeMap::new(),
            actor_categories: BTreeMap::new(),
            activity_categories: BTreeMap::new(),
            physical_elements: BTreeMap::new(),
            physical_element_categories: BTreeMap::new(),
        }
    }

    /// Empty in-memory library with the default tag trees and built-in
    /// models. Useful for standalone file loads and as a fixture target.
    pub fn in_memory() -> Self {
        Self::with_storage(Storage::Memory(BTreeMap::new()))
    }

    /// New library rooted at a directory, without reading anything.
    pub fn create(root: impl Into<PathBuf>) -> Self {
        Self::with_storage(Storage::Disk(root.into()))
    }

    /// Opens a library directory: reads the index and eagerly loads every
    /// indexed file (tag trees first, so validation can resolve tags).
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, PersistError> {
        let root = root.into();
        let index_path = root.join(INDEX_FILE);
        if !index_path.is_file() {
            return Err(PersistError::MissingIndex { path: index_path.display().to_string() });
        }
        let mut lib = Self::create(&root);
        let text = lib.storage.read(INDEX_FILE)?;
        let envelope = parse_envelope(&text, &index_path.display().to_string())?;
        let Payload::LibraryIndex(index) = envelope.payload else {
            return Err(PersistError::WrongKind {
                path: index_path.display().to_string(),
                expected: "library_index",
                found: envelope.payload.kind().to_owned(),
            });
        };
        lib.index = index.entries;

        // Tag trees first: a library that ships its own trees replaces the
        // defaults (identical trees are accepted idempotently).
        let paths: BTreeSet<String> = lib.index.values().cloned().collect();
        let mut deferred = Vec::new();
        let mut tag_files = Vec::new();
        for rel in &paths {
            let text = lib.storage.read(rel)?;
            let envelope = parse_envelope(&text, rel)?;
            match envelope.payload {
                Payload::TagTrees(trees) => tag_files.push((rel.clone(), trees)),
                _ => deferred.push(rel.clone()),
            }
        }
        if !tag_files.is_empty() {
            lib.tags = TagRegistry::empty();
            for (rel, wire) in tag_files {
                for tree in wire.trees {
                    lib.tags.register_idempotent(tree)?;
                }
                lib.loaded_paths.insert(rel);
            }
        }
        for rel in deferred {
            lib.load_indexed(&rel)?;
        }
        Ok(lib)
    }

    /// Scans a directory for `.scn.json` files, rewrites the `index` file
    /// from their definitions, and opens the result.
    pub fn rebuild_index(root: impl Into<PathBuf>) -> Result<Self, PersistError> {
        let root = root.into();
        let mut files = Vec::new();
        let mut stack = vec![root.clone()];
        while let Some(dir) = stack.pop() {
            let entries = std::fs::read_dir(&dir).map_err(|e| PersistError::Io {
                path: dir.display().to_string(),
                message: e.to_string(),
            })?;
            for entry in entries {
                let entry = entry.map_err(|e| PersistError::Io {
                    path: dir.display().to_string(),
                    message: e.to_string(),
                })?;
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(super::FILE_EXTENSION))
                {
                    files.push(path);
                }
            }
        }
        files.sort();

        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| PersistError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let envelope = parse_envelope(&text, &path.display().to_string())?;
            if matches!(envelope.payload, Payload::LibraryIndex(_)) {
                continue;
            }
            let rel = path
                .strip_prefix(&root)
                .expect("scanned file is under the root")
                .to_string_lossy()
                .replace('\\', "/");
            let (defs, _) = wire::collect_uids(&envelope.payload);
            for uid in defs {
                if entries.insert(uid.clone(), rel.clone()).is_some() {
                    return Err(PersistError::DuplicateUid { uid });
                }
            }
        }
        let payload = Payload::LibraryIndex(wire::WireIndex { entries });
        let mut storage = Storage::Disk(root.clone());
        storage.write(INDEX_FILE, to_canonical_json(&payload))?;
        Self::open(root)
    }

    pub fn tags(&self) -> &TagRegistry {
        &self.tags
    }

    pub fn models(&self) -> &ModelRegistry {
        &self.models
    }

    pub fn ctx(&self) -> ValidationContext<'_> {
        ValidationContext { tags: &self.tags, models: &self.models }
    }

    pub fn index(&self) -> &BTreeMap<String, String> {
        &self.index
    }

    /// Scenarios in uid order.
    pub fn scenarios(&self) -> impl Iterator<Item = &Arc<Scenario>> {
        self.scenarios.values()
    }

    pub fn scenario(&self, uid: &str) -> Option<Arc<Scenario>> {
        self.scenarios.get(uid).cloned()
    }

    pub fn scenario_category(&self, uid: &str) -> Option<Arc<ScenarioCategory>> {
        self.scenario_categories.get(uid).cloned()
    }

    pub fn actor_category(&self, uid: &str) -> Option<Arc<ActorCategory>> {
        self.actor_categories.get(uid).cloned()
    }

    pub fn activity_category(&self, uid: &str) -> Option<Arc<ActivityCategory>> {
        self.activity_categories.get(uid).cloned()
    }

    pub fn physical_element_category(&self, uid: &str) -> Option<Arc<PhysicalElementCategory>> {
        self.physical_element_categories.get(uid).cloned()
    }

    pub fn actor(&self, uid: &str) -> Option<Arc<Actor>> {
        self.actors.get(uid).cloned()
    }

    pub fn event(&self, uid: &str) -> Option<Arc<Event>> {
        self.events.get(uid).cloned()
    }

    pub(crate) fn cached_event(&self, uid: &str) -> Option<Arc<Event>> {
        self.events.get(uid).cloned()
    }

    pub(crate) fn cached_actor(&self, uid: &str) -> Option<Arc<Actor>> {
        self.actors.get(uid).cloned()
    }

    pub(crate) fn cached_activity(&self, uid: &str) -> Option<Arc<Activity>> {
        self.activities.get(uid).cloned()
    }

    pub(crate) fn cached_actor_category(&self, uid: &str) -> Option<Arc<ActorCategory>> {
        self.actor_categories.get(uid).cloned()
    }

    pub(crate) fn cached_activity_category(&self, uid: &str) -> Option<Arc<ActivityCategory>> {
        self.activity_categories.get(uid).cloned()
    }

    pub(crate) fn cached_physical_element(&self, uid: &str) -> Option<Arc<PhysicalElement>> {
        self.physical_elements.get(uid).cloned()
    }

    pub(crate) fn cached_physical_element_category(
        &self,
        uid: &str,
    ) -> Option<Arc<PhysicalElementCategory>> {
        self.physical_element_categories.get(uid).cloned()
    }

    fn has_uid(&self, uid: &str) -> bool {
        self.scenarios.contains_key(uid)
            || self.scenario_categories.contains_key(uid)
            || self.events.contains_key(uid)
            || self.actors.contains_key(uid)
            || self.activities.contains_key(uid)
            || self.actor_categories.contains_key(uid)
            || self.activity_categories.contains_key(uid)
            || self.physical_elements.contains_key(uid)
            || self.physical_element_categories.contains_key(uid)
    }

    /// Makes a uid resolvable: already cached, or loadable via the index.
    fn ensure_uid(&mut self, uid: &str) -> Result<(), PersistError> {
        if self.has_uid(uid) {
            return Ok(());
        }
        let Some(rel) = self.index.get(uid).cloned() else {
            return Err(PersistError::UnresolvedReference { uid: uid.to_owned() });
        };
        self.load_indexed(&rel)?;
        if self.has_uid(uid) {
            Ok(())
        } else {
            Err(PersistError::UnresolvedReference { uid: uid.to_owned() })
        }
    }

    fn load_indexed(&mut self, rel: &str) -> Result<(), PersistError> {
        if self.loaded_paths.contains(rel) {
            return Ok(());
        }
        if !self.loading.insert(rel.to_owned()) {
            return Err(PersistError::CircularReference { path: rel.to_owned() });
        }
        let result = (|| {
            let text = self.storage.read(rel)?;
            let envelope = parse_envelope(&text, rel)?;
            self.load_payload(&envelope.payload)?;
            Ok(())
        })();
        self.loading.remove(rel);
        if result.is_ok() {
            self.loaded_paths.insert(rel.to_owned());
        }
        result
    }

    fn load_payload(&mut self, payload: &Payload) -> Result<LoadedElement, PersistError> {
        // Resolve everything external before borrowing the library immutably.
        let (_, externals) = wire::collect_uids(payload);
        for uid in &externals {
            self.ensure_uid(uid)?;
        }
        match payload {
            Payload::TagTrees(wire) => {
                for tree in &wire.trees {
                    self.tags.register_idempotent(tree.clone())?;
                }
                Ok(LoadedElement::TagTrees(wire.trees.clone()))
            }
            Payload::Scenario(wire) => {
                let mut resolver = FileResolver { library: self, local: LocalDefs::default() };
                let scenario = resolver.scenario(wire)?;
                let local = resolver.local;
                let report = scenario.validate(&self.ctx());
                if !report.is_empty() {
                    return Err(PersistError::Validation { uid: wire.uid.clone(), report });
                }
                self.absorb(local)?;
                let arc = register_cached(&mut self.scenarios, &wire.uid, scenario)?;
                Ok(LoadedElement::Scenario(arc))
            }
            Payload::ScenarioCategory(wire) => {
                let mut resolver = FileResolver { library: self, local: LocalDefs::default() };
                let category = resolver.scenario_category(wire)?;
                let local = resolver.local;
                let report = category.validate(&self.ctx());
                if !report.is_empty() {
                    return Err(PersistError::Validation { uid: wire.uid.clone(), report });
                }
                self.absorb(local)?;
                let arc = register_cached(&mut self.scenario_categories, &wire.uid, category)?;
                Ok(LoadedElement::ScenarioCategory(arc))
            }
            Payload::LibraryIndex(_) => Err(PersistError::WrongKind {
                path: "<payload>".into(),
                expected: "scenario, scenario_category, or tag_trees",
                found: "library_index".into(),
            }),
        }
    }

    fn absorb(&mut self, local: LocalDefs) -> Result<(), PersistError> {
        for (uid, obj) in local.events {
            register_cached_arc(&mut self.events, &uid, obj)?;
        }
        for (uid, obj) in local.physical_element_categories {
            register_cached_arc(&mut self.physical_element_categories, &uid, obj)?;
        }
        for (uid, obj) in local.actor_categories {
            register_cached_arc(&mut self.actor_categories, &uid, obj)?;
        }
        for (uid, obj) in local.activity_categories {
            register_cached_arc(&mut self.activity_categories, &uid, obj)?;
        }
        for (uid, obj) in local.physical_elements {
            register_cached_arc(&mut self.physical_elements, &uid, obj)?;
        }
        for (uid, obj) in local.actors {
            register_cached_arc(&mut self.actors, &uid, obj)?;
        }
        for (uid, obj) in local.activities {
            register_cached_arc(&mut self.activities, &uid, obj)?;
        }
        Ok(())
    }

    /// Loads a file by filesystem path (not necessarily under the library
    /// root), resolving its external references through this library.
    pub fn load_external_file(&mut self, path: &Path) -> Result<LoadedElement, PersistError> {
        let text = std::fs::read_to_string(path).map_err(|e| PersistError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let envelope = parse_envelope(&text, &path.display().to_string())?;
        self.load_payload(&envelope.payload)
    }

    /// Serializes a scenario into the library: everything already indexed
    /// becomes a `$ref`, new definitions are checked for uid collisions, and
    /// both the file and the index are written.
    pub fn add_scenario_file(&mut self, scenario: &Scenario, rel: &str) -> Result<(), PersistError> {
        let report = scenario.validate(&self.ctx());
        if !report.is_empty() {
            return Err(PersistError::Validation {
                uid: scenario.header.uid.as_str().to_owned(),
                report,
            });
        }
        let mut writer = WireWriter::new(self.index.keys().cloned().collect());
        let payload = Payload::Scenario(writer.scenario(scenario));
        self.commit_file(payload, rel)?;
        self.absorb_scenario(scenario)
    }

    /// See [`Library::add_scenario_file`].
    pub fn add_scenario_category_file(
        &mut self,
        category: &ScenarioCategory,
        rel: &str,
    ) -> Result<(), PersistError> {
        let report = category.validate(&self.ctx());
        if !report.is_empty() {
            return Err(PersistError::Validation {
                uid: category.header.uid.as_str().to_owned(),
                report,
            });
        }
        let mut writer = WireWriter::new(self.index.keys().cloned().collect());
        let payload = Payload::ScenarioCategory(writer.scenario_category(category));
        self.commit_file(payload, rel)?;
        self.absorb_scenario_category(category)
    }

    /// Writes a tag-trees file and registers the trees.
    pub fn add_tag_trees_file(
        &mut self,
        uid: &str,
        name: &str,
        trees: &[TagTree],
        rel: &str,
    ) -> Result<(), PersistError> {
        for tree in trees {
            self.tags.register_idempotent(tree.clone())?;
        }
        let payload = Payload::TagTrees(wire::WireTagTrees {
            uid: uid.to_owned(),
            name: name.to_owned(),
            trees: trees.to_vec(),
        });
        self.commit_file(payload, rel)
    }

    fn commit_file(&mut self, payload: Payload, rel: &str) -> Result<(), PersistError> {
        let (defs, _) = wire::collect_uids(&payload);
        for uid in &defs {
            if self.index.contains_key(uid) {
                return Err(PersistError::DuplicateUid { uid: uid.clone() });
            }
        }
        self.storage.write(rel, to_canonical_json(&payload))?;
        for uid in defs {
            self.index.insert(uid, rel.to_owned());
        }
        self.loaded_paths.insert(rel.to_owned());
        self.write_index()
    }

    fn absorb_scenario(&mut self, scenario: &Scenario) -> Result<(), PersistError> {
        for event in scenario.all_events() {
            register_shared(&mut self.events, event)?;
        }
        for elem in &scenario.physical_elements {
            register_shared(&mut self.physical_elements, elem)?;
            register_shared(&mut self.physical_element_categories, &elem.category)?;
        }
        for actor in &scenario.actors {
            register_shared(&mut self.actors, actor)?;
            register_shared(&mut self.actor_categories, &actor.category)?;
        }
        for activity in &scenario.activities {
            register_shared(&mut self.activities, activity)?;
            register_shared(&mut self.activity_categories, &activity.category)?;
        }
        register_cached(&mut self.scenarios, scenario.header.uid.as_str(), scenario.clone())?;
        Ok(())
    }

    fn absorb_scenario_category(&mut self, category: &ScenarioCategory) -> Result<(), PersistError> {
        for cat in &category.physical_element_categories {
            register_shared(&mut self.physical_element_categories, cat)?;
        }
        for cat in &category.actor_categories {
            register_shared(&mut self.actor_categories, cat)?;
        }
        for cat in &category.activity_categories {
            register_shared(&mut self.activity_categories, cat)?;
        }
        register_cached(
            &mut self.scenario_categories,
            category.header.uid.as_str(),
            category.clone(),
        )?;
        Ok(())
    }

    fn write_index(&mut self) -> Result<(), PersistError> {
        let payload = Payload::LibraryIndex(wire::WireIndex { entries: self.index.clone() });
        self.storage.write(INDEX_FILE, to_canonical_json(&payload))
    }

    /// Materializes every stored file plus the index into a directory.
    pub fn write_to(&self, dir: &Path) -> Result<(), PersistError> {
        std::fs::create_dir_all(dir).map_err(|e| PersistError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        let mut rels: BTreeSet<String> = self.index.values().cloned().collect();
        rels.insert(INDEX_FILE.to_owned());
        for rel in rels {
            let text = self.storage.read(&rel)?;
            let path = dir.join(&rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| PersistError::Io {
                    path: parent.display().to_string(),
                    message: e.to_string(),
                })?;
            }
            std::fs::write(&path, text).map_err(|e| PersistError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

fn register_cached<T: PartialEq>(
    map: &mut BTreeMap<String, Arc<T>>,
    uid: &str,
    value: T,
) -> Result<Arc<T>, PersistError> {
    if let Some(existing) = map.get(uid) {
        if **existing == value {
            return Ok(Arc::clone(existing));
        }
        return Err(PersistError::DuplicateUid { uid: uid.to_owned() });
    }
    let arc = Arc::new(value);
    map.insert(uid.to_owned(), Arc::clone(&arc));
    Ok(arc)
}

fn register_cached_arc<T: PartialEq>(
    map: &mut BTreeMap<String, Arc<T>>,
    uid: &str,
    value: Arc<T>,
) -> Result<(), PersistError> {
    if let Some(existing) = map.get(uid) {
        if existing == &value {
            return Ok(());
        }
        return Err(PersistError::DuplicateUid { uid: uid.to_owned() });
    }
    map.insert(uid.to_owned(), value);
    Ok(())
}

fn register_shared<T: PartialEq + HasUid>(
    map: &mut BTreeMap<String, Arc<T>>,
    value: &Arc<T>,
) -> Result<(), PersistError> {
    let uid = value.uid().to_owned();
    if let Some(existing) = map.get(&uid) {
        if existing == value {
            return Ok(());
        }
        return Err(PersistError::DuplicateUid { uid });
    }
    map.insert(uid, Arc::clone(value));
    Ok(())
}

trait HasUid {
    fn uid(&self) -> &str;
}

macro_rules! impl_has_uid {
    ($($ty:ty),+) => {
        $(impl HasUid for $ty {
            fn uid(&self) -> &str {
                self.header.uid.as_str()
            }
        })+
    };
}

impl_has_uid!(
    Event,
    Actor,
    Activity,
    ActorCategory,
    ActivityCategory,
    PhysicalElement,
    PhysicalElementCategory
);
