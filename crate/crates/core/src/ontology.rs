//! The WorldKG ontology, induced from the OSM map-features list.
//!
//! Feature keys become top-level classes under `wkgs:WKGObject`, their
//! categorical values become subclasses, and documented keys from the
//! attribute categories become properties typed `wkgs:WKGProperty`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Read};
use std::str::FromStr;

use thiserror::Error;

use crate::rdf_read::{read_turtle, ReadError};
use crate::turtle::{
    write_prefix_block, write_subject_block, Iri, Literal, PrefixTable, Term, TurtleError,
};

pub const ROOT_CLASS: &str = "WKGObject";
pub const PROPERTY_CLASS: &str = "WKGProperty";

/// Annotation predicates recording which OSM tag a class or property came
/// from, so an ontology document can be loaded back for KG construction.
pub const OSM_KEY: &str = "osmKey";
pub const OSM_VALUE: &str = "osmValue";

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("`{0}` does not yield a valid identifier")]
    InvalidIdentifier(String),
    #[error("map-features line {line}: {message}")]
    Tsv { line: usize, message: String },
    #[error("duplicate map-features entry {key}={value}")]
    DuplicateEntry { key: String, value: String },
    #[error("map-features entry has an empty key")]
    EmptyKey,
    #[error("name `{name}` is produced by more than one source: {}", sources.join(", "))]
    NameCollision { name: String, sources: Vec<String> },
    #[error("key `{0}` is listed both as a feature and as a property")]
    KeyIsClassAndProperty(String),
    #[error("ontology document: {subject}: {message}")]
    Malformed { subject: String, message: String },
    #[error(transparent)]
    Turtle(#[from] TurtleError),
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Splits a token into words on non-alphanumeric characters and on
/// lower/digit-to-upper case transitions.
fn words(token: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for piece in token.split(|c: char| !c.is_ascii_alphanumeric()) {
        let bytes = piece.as_bytes();
        let mut start = 0;
        for i in 1..bytes.len() {
            if bytes[i].is_ascii_uppercase() {
                out.push(&piece[start..i]);
                start = i;
            }
        }
        if start < piece.len() {
            out.push(&piece[start..]);
        }
    }
    out
}

fn capitalize(word: &str, out: &mut String) {
    let mut chars = word.chars();
    if let Some(first) = chars.next() {
        out.push(first.to_ascii_uppercase());
        out.extend(chars.map(|c| c.to_ascii_lowercase()));
    }
}

/// `cave_entrance` → `CaveEntrance`.
pub fn to_upper_camel(token: &str) -> Result<String, OntologyError> {
    let mut out = String::with_capacity(token.len());
    for w in words(token) {
        capitalize(w, &mut out);
    }
    match out.as_bytes().first() {
        Some(b) if b.is_ascii_uppercase() => Ok(out),
        _ => Err(OntologyError::InvalidIdentifier(token.to_owned())),
    }
}

/// `addr:country` → `addrCountry`.
pub fn to_lower_camel(token: &str) -> Result<String, OntologyError> {
    let mut out = String::with_capacity(token.len());
    for (i, w) in words(token).into_iter().enumerate() {
        if i == 0 {
            out.push_str(&w.to_ascii_lowercase());
        } else {
            capitalize(w, &mut out);
        }
    }
    match out.as_bytes().first() {
        Some(b) if b.is_ascii_lowercase() => Ok(out),
        _ => Err(OntologyError::InvalidIdentifier(token.to_owned())),
    }
}

fn is_number(s: &str) -> bool {
    let s = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let (int, frac) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) {
        return false;
    }
    match exponent {
        None => true,
        Some(e) => {
            let e = e.strip_prefix(['+', '-']).unwrap_or(e);
            !e.is_empty() && digits(e)
        }
    }
}

/// Values that name a kind of thing. Booleans, numbers and the
/// `user defined` sentinel do not.
pub fn is_categorical(value: &str) -> bool {
    let v = value.trim();
    if v.is_empty() || is_number(v) {
        return false;
    }
    let lower = v.to_ascii_lowercase();
    !matches!(
        lower.as_str(),
        "yes" | "no" | "true" | "false" | "user defined"
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureCategory {
    Feature,
    AdditionalAttribute,
    Attribute,
    AdditionalProperty,
}

impl FeatureCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureCategory::Feature => "feature",
            FeatureCategory::AdditionalAttribute => "additional-attribute",
            FeatureCategory::Attribute => "attribute",
            FeatureCategory::AdditionalProperty => "additional-property",
        }
    }
}

impl FromStr for FeatureCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "feature" => Ok(FeatureCategory::Feature),
            "additional-attribute" => Ok(FeatureCategory::AdditionalAttribute),
            "attribute" => Ok(FeatureCategory::Attribute),
            "additional-property" => Ok(FeatureCategory::AdditionalProperty),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

/// One row of the map-features list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MapFeatureEntry {
    pub key: String,
    pub value: String,
    pub category: FeatureCategory,
    pub wiki_url: Option<String>,
}

impl MapFeatureEntry {
    pub fn new(key: &str, value: &str, category: FeatureCategory, wiki_url: Option<&str>) -> Self {
        MapFeatureEntry {
            key: key.to_owned(),
            value: value.to_owned(),
            category,
            wiki_url: wiki_url.map(str::to_owned),
        }
    }
}

const FEATURES_HEADER: [&str; 4] = ["key", "value", "category", "wiki_url"];

/// Reads the map-features TSV. Blank lines and `#` comments are skipped.
pub fn load_map_features<R: BufRead>(input: R) -> Result<Vec<MapFeatureEntry>, OntologyError> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    let mut header_seen = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !header_seen {
            if cells.len() < 3 || cells[..cells.len().min(4)] != FEATURES_HEADER[..cells.len().min(4)]
            {
                return Err(OntologyError::Tsv {
                    line: line_no,
                    message: format!("expected header `{}`", FEATURES_HEADER.join("\t")),
                });
            }
            header_seen = true;
            continue;
        }
        if !(3..=4).contains(&cells.len()) {
            return Err(OntologyError::Tsv {
                line: line_no,
                message: format!("expected 3 or 4 columns, found {}", cells.len()),
            });
        }
        let (key, value) = (cells[0], cells[1]);
        if key.is_empty() || value.is_empty() {
            return Err(OntologyError::Tsv {
                line: line_no,
                message: "key and value must be non-empty".into(),
            });
        }
        let category = cells[2]
            .parse()
            .map_err(|message| OntologyError::Tsv { line: line_no, message })?;
        let wiki_url = cells.get(3).filter(|u| !u.is_empty()).copied();
        if !seen.insert((key.to_owned(), value.to_owned())) {
            return Err(OntologyError::Tsv {
                line: line_no,
                message: format!("duplicate entry {key}={value}"),
            });
        }
        entries.push(MapFeatureEntry::new(key, value, category, wiki_url));
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetGraph {
    Wikidata,
    Dbpedia,
}

impl TargetGraph {
    pub fn token(self) -> &'static str {
        match self {
            TargetGraph::Wikidata => "wikidata",
            TargetGraph::Dbpedia => "dbpedia",
        }
    }

    /// Turtle prefix under which class ids of this graph are written.
    pub fn prefix(self) -> &'static str {
        match self {
            TargetGraph::Wikidata => "wd",
            TargetGraph::Dbpedia => "dbo",
        }
    }

    pub fn from_prefix(prefix: &str) -> Option<TargetGraph> {
        match prefix {
            "wd" => Some(TargetGraph::Wikidata),
            "dbo" => Some(TargetGraph::Dbpedia),
            _ => None,
        }
    }
}

impl fmt::Display for TargetGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for TargetGraph {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wikidata" => Ok(TargetGraph::Wikidata),
            "dbpedia" => Ok(TargetGraph::Dbpedia),
            other => Err(format!("unknown target graph `{other}`")),
        }
    }
}

/// An external class declared equivalent to a WorldKG class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Equivalence {
    pub graph: TargetGraph,
    pub class_id: String,
}

impl Equivalence {
    pub fn iri(&self) -> Iri {
        Iri::prefixed(self.graph.prefix(), self.class_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyClass {
    pub local_name: String,
    pub source_key: String,
    pub source_value: Option<String>,
    /// Local name of the top-level parent; `None` for top-level classes.
    pub parent: Option<String>,
    pub equivalents: BTreeSet<Equivalence>,
    pub wiki_url: Option<String>,
}

impl OntologyClass {
    pub fn is_top_level(&self) -> bool {
        self.parent.is_none()
    }

    pub fn iri(&self) -> Iri {
        Iri::prefixed("wkgs", self.local_name.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyProperty {
    pub local_name: String,
    pub source_key: String,
    pub wiki_url: Option<String>,
}

impl OntologyProperty {
    pub fn iri(&self) -> Iri {
        Iri::prefixed("wkgs", self.local_name.clone())
    }
}

/// How a single tag maps onto the ontology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagRole<'a> {
    Subclass(&'a OntologyClass),
    TopLevel(&'a OntologyClass),
    Property(&'a OntologyProperty),
    Unmapped,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ontology {
    classes: BTreeMap<String, OntologyClass>,
    properties: BTreeMap<String, OntologyProperty>,
    class_by_key: BTreeMap<String, String>,
    class_by_tag: BTreeMap<(String, String), String>,
    property_by_key: BTreeMap<String, String>,
}

impl Ontology {
    pub fn empty() -> Ontology {
        Ontology::default()
    }

    /// All classes ordered by local name (the root is implicit).
    pub fn classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes.values()
    }

    pub fn top_level_classes(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes().filter(|c| c.is_top_level())
    }

    pub fn subclasses(&self) -> impl Iterator<Item = &OntologyClass> {
        self.classes().filter(|c| !c.is_top_level())
    }

    pub fn properties(&self) -> impl Iterator<Item = &OntologyProperty> {
        self.properties.values()
    }

    pub fn class(&self, local_name: &str) -> Option<&OntologyClass> {
        self.classes.get(local_name)
    }

    pub fn property(&self, local_name: &str) -> Option<&OntologyProperty> {
        self.properties.get(local_name)
    }

    pub fn class_for_key(&self, key: &str) -> Option<&OntologyClass> {
        self.class_by_key.get(key).and_then(|n| self.classes.get(n))
    }

    pub fn class_for_tag(&self, key: &str, value: &str) -> Option<&OntologyClass> {
        self.class_by_tag
            .get(&(key.to_owned(), value.to_owned()))
            .and_then(|n| self.classes.get(n))
    }

    pub fn property_for_key(&self, key: &str) -> Option<&OntologyProperty> {
        self.property_by_key
            .get(key)
            .and_then(|n| self.properties.get(n))
    }

    pub fn classify_tag(&self, key: &str, value: &str) -> TagRole<'_> {
        if let Some(c) = self.class_for_tag(key, value) {
            return TagRole::Subclass(c);
        }
        if let Some(c) = self.class_for_key(key) {
            if !is_categorical(value) {
                return TagRole::TopLevel(c);
            }
        }
        if let Some(p) = self.property_for_key(key) {
            return TagRole::Property(p);
        }
        TagRole::Unmapped
    }

    /// Class a tag types its node with, if any.
    pub fn resolve_tag_class(&self, key: &str, value: &str) -> Option<&OntologyClass> {
        match self.classify_tag(key, value) {
            TagRole::Subclass(c) | TagRole::TopLevel(c) => Some(c),
            _ => None,
        }
    }

    pub(crate) fn class_mut(&mut self, local_name: &str) -> Option<&mut OntologyClass> {
        self.classes.get_mut(local_name)
    }

    /// Every `(graph, id)` equivalence with the classes declaring it.
    pub fn equivalence_index(&self) -> BTreeMap<Equivalence, Vec<&OntologyClass>> {
        let mut index: BTreeMap<Equivalence, Vec<&OntologyClass>> = BTreeMap::new();
        for c in self.classes() {
            for eq in &c.equivalents {
                index.entry(eq.clone()).or_default().push(c);
            }
        }
        index
    }

    fn insert_class(&mut self, class: OntologyClass) -> Result<(), OntologyError> {
        let name = class.local_name.clone();
        if name == ROOT_CLASS || name == PROPERTY_CLASS {
            return Err(OntologyError::NameCollision {
                name,
                sources: vec![class.source_key.clone(), "reserved".into()],
            });
        }
        match &class.source_value {
            Some(v) => {
                self.class_by_tag
                    .insert((class.source_key.clone(), v.clone()), name.clone());
            }
            None => {
                self.class_by_key.insert(class.source_key.clone(), name.clone());
            }
        }
        if let Some(prev) = self.classes.insert(name.clone(), class) {
            let now = &self.classes[&name];
            return Err(OntologyError::NameCollision {
                name,
                sources: vec![describe(&prev), describe(now)],
            });
        }
        Ok(())
    }

    fn insert_property(&mut self, prop: OntologyProperty) -> Result<(), OntologyError> {
        let name = prop.local_name.clone();
        self.property_by_key
            .insert(prop.source_key.clone(), name.clone());
        if let Some(prev) = self.properties.insert(name.clone(), prop) {
            let now = &self.properties[&name];
            return Err(OntologyError::NameCollision {
                name,
                sources: vec![prev.source_key, now.source_key.clone()],
            });
        }
        Ok(())
    }
}

fn describe(c: &OntologyClass) -> String {
    match &c.source_value {
        Some(v) => format!("{}={}", c.source_key, v),
        None => c.source_key.clone(),
    }
}

fn smallest_url<'a>(urls: impl Iterator<Item = Option<&'a String>>) -> Option<String> {
    urls.flatten().min().cloned()
}

/// Induces the ontology from map-features entries. The result does not
/// depend on entry order.
pub fn build_ontology(entries: &[MapFeatureEntry]) -> Result<Ontology, OntologyError> {
    let mut pairs = BTreeSet::new();
    for e in entries {
        if e.key.trim().is_empty() {
            return Err(OntologyError::EmptyKey);
        }
        if !pairs.insert((e.key.as_str(), e.value.as_str())) {
            return Err(OntologyError::DuplicateEntry {
                key: e.key.clone(),
                value: e.value.clone(),
            });
        }
    }

    let mut sorted: Vec<&MapFeatureEntry> = entries.iter().collect();
    sorted.sort();
    let (features, others): (Vec<&MapFeatureEntry>, Vec<&MapFeatureEntry>) = sorted
        .into_iter()
        .partition(|e| e.category == FeatureCategory::Feature);

    let feature_keys: BTreeSet<&str> = features.iter().map(|e| e.key.as_str()).collect();
    if let Some(e) = others.iter().find(|e| feature_keys.contains(e.key.as_str())) {
        return Err(OntologyError::KeyIsClassAndProperty(e.key.clone()));
    }

    let mut onto = Ontology::empty();

    let mut top_names = BTreeSet::new();
    for key in &feature_keys {
        let local_name = to_upper_camel(key)?;
        top_names.insert(local_name.clone());
        let wiki_url = smallest_url(
            features
                .iter()
                .filter(|e| e.key == *key && !is_categorical(&e.value))
                .map(|e| e.wiki_url.as_ref()),
        );
        onto.insert_class(OntologyClass {
            local_name,
            source_key: (*key).to_owned(),
            source_value: None,
            parent: None,
            equivalents: BTreeSet::new(),
            wiki_url,
        })?;
    }

    // A value name claimed by several keys (or shadowing a top-level class)
    // is qualified with its key everywhere it occurs.
    let categorical: Vec<(&MapFeatureEntry, String)> = features
        .iter()
        .filter(|e| is_categorical(&e.value))
        .map(|e| to_upper_camel(&e.value).map(|n| (*e, n)))
        .collect::<Result<_, _>>()?;
    let mut keys_per_name: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (e, name) in &categorical {
        keys_per_name
            .entry(name.as_str())
            .or_default()
            .insert(e.key.as_str());
    }
    for (e, name) in &categorical {
        let clashes = keys_per_name[name.as_str()].len() > 1
            || top_names.contains(name)
            || name == ROOT_CLASS
            || name == PROPERTY_CLASS;
        let local_name = if clashes {
            format!("{}{}", to_upper_camel(&e.key)?, name)
        } else {
            name.clone()
        };
        let parent = onto.class_by_key[&e.key].clone();
        onto.insert_class(OntologyClass {
            local_name,
            source_key: e.key.clone(),
            source_value: Some(e.value.clone()),
            parent: Some(parent),
            equivalents: BTreeSet::new(),
            wiki_url: e.wiki_url.clone(),
        })?;
    }

    let property_keys: BTreeSet<&str> = others
        .iter()
        .filter(|e| e.wiki_url.is_some())
        .map(|e| e.key.as_str())
        .collect();
    for key in property_keys {
        let wiki_url = smallest_url(
            others
                .iter()
                .filter(|e| e.key == key)
                .map(|e| e.wiki_url.as_ref()),
        );
        onto.insert_property(OntologyProperty {
            local_name: to_lower_camel(key)?,
            source_key: key.to_owned(),
            wiki_url,
        })?;
    }

    Ok(onto)
}

fn wkgs(local: &str) -> Iri {
    Iri::prefixed("wkgs", local)
}

/// Ontology as Turtle: root class, then classes and properties ordered by
/// local name.
pub fn serialize_ontology(onto: &Ontology, prefixes: &PrefixTable) -> Result<String, OntologyError> {
    let mut out = String::new();
    write_prefix_block(&mut out, prefixes);

    let a = Iri::rdf_type();
    let owl_class = Term::Iri(Iri::prefixed("owl", "Class"));
    let sub_class_of = Iri::prefixed("rdfs", "subClassOf");
    let source = Iri::prefixed("dcterms", "source");
    let equivalent = Iri::prefixed("owl", "equivalentClass");
    let osm_key = wkgs(OSM_KEY);
    let osm_value = wkgs(OSM_VALUE);

    write_subject_block(&mut out, &wkgs(ROOT_CLASS), [(&a, &owl_class)], prefixes)?;

    for class in onto.classes() {
        let mut pairs: Vec<(&Iri, Term)> = vec![(&a, owl_class.clone())];
        let parent = class.parent.as_deref().unwrap_or(ROOT_CLASS);
        pairs.push((&sub_class_of, Term::Iri(wkgs(parent))));
        if let Some(url) = &class.wiki_url {
            pairs.push((&source, Term::Iri(Iri::full(url.clone()))));
        }
        for eq in &class.equivalents {
            pairs.push((&equivalent, Term::Iri(eq.iri())));
        }
        pairs.push((&osm_key, Term::Literal(Literal::plain(class.source_key.clone()))));
        if let Some(v) = &class.source_value {
            pairs.push((&osm_value, Term::Literal(Literal::plain(v.clone()))));
        }
        write_subject_block(
            &mut out,
            &class.iri(),
            pairs.iter().map(|(p, o)| (*p, o)),
            prefixes,
        )?;
    }

    if onto.properties.is_empty() {
        return Ok(out);
    }
    write_subject_block(&mut out, &wkgs(PROPERTY_CLASS), [(&a, &owl_class)], prefixes)?;
    let property_class = Term::Iri(wkgs(PROPERTY_CLASS));
    for prop in onto.properties() {
        let mut pairs: Vec<(&Iri, Term)> = vec![(&a, property_class.clone())];
        if let Some(url) = &prop.wiki_url {
            pairs.push((&source, Term::Iri(Iri::full(url.clone()))));
        }
        pairs.push((&osm_key, Term::Literal(Literal::plain(prop.source_key.clone()))));
        write_subject_block(
            &mut out,
            &prop.iri(),
            pairs.iter().map(|(p, o)| (*p, o)),
            prefixes,
        )?;
    }
    Ok(out)
}

#[derive(Default)]
struct SubjectFacts {
    types: Vec<Iri>,
    parent: Option<String>,
    source: Option<String>,
    equivalents: BTreeSet<Equivalence>,
    osm_key: Option<String>,
    osm_value: Option<String>,
}

/// Loads an ontology document written by [`serialize_ontology`].
pub fn load_ontology<R: Read>(input: R) -> Result<Ontology, OntologyError> {
    let prefixes = PrefixTable::worldkg();
    let mut facts: BTreeMap<String, SubjectFacts> = BTreeMap::new();
    for triple in read_turtle(input) {
        let triple = triple?;
        let Some(local) = triple.subject.local_in("wkgs") else {
            continue;
        };
        let f = facts.entry(local.to_owned()).or_default();
        let p = &triple.predicate;
        match &triple.object {
            Term::Iri(o) if p.is("rdf", "type") => f.types.push(o.clone()),
            Term::Iri(o) if p.is("rdfs", "subClassOf") => {
                f.parent = o.local_in("wkgs").map(str::to_owned);
            }
            Term::Iri(o) if p.is("dcterms", "source") => f.source = Some(prefixes.expand(o)?),
            Term::Iri(o) if p.is("owl", "equivalentClass") => {
                let eq = match o {
                    Iri::Prefixed { prefix, local } => TargetGraph::from_prefix(prefix)
                        .map(|graph| Equivalence {
                            graph,
                            class_id: local.clone(),
                        }),
                    Iri::Full(_) => None,
                };
                let eq = eq.ok_or_else(|| OntologyError::Malformed {
                    subject: local.to_owned(),
                    message: format!("equivalent class {o:?} is neither Wikidata nor DBpedia"),
                })?;
                f.equivalents.insert(eq);
            }
            Term::Literal(l) if p.is("wkgs", OSM_KEY) => f.osm_key = Some(l.value.clone()),
            Term::Literal(l) if p.is("wkgs", OSM_VALUE) => f.osm_value = Some(l.value.clone()),
            _ => {}
        }
    }

    let mut onto = Ontology::empty();
    let mut subclasses = Vec::new();
    for (local, f) in facts {
        if local == ROOT_CLASS || local == PROPERTY_CLASS {
            continue;
        }
        let missing_key = || OntologyError::Malformed {
            subject: local.clone(),
            message: format!("missing wkgs:{OSM_KEY}"),
        };
        if f.types.iter().any(|t| t.is("wkgs", PROPERTY_CLASS)) {
            let source_key = f.osm_key.ok_or_else(missing_key)?;
            onto.insert_property(OntologyProperty {
                local_name: local,
                source_key,
                wiki_url: f.source,
            })?;
            continue;
        }
        let Some(parent) = f.parent else { continue };
        let source_key = f.osm_key.clone().ok_or_else(missing_key)?;
        let class = OntologyClass {
            local_name: local.clone(),
            source_key,
            source_value: f.osm_value,
            parent: (parent != ROOT_CLASS).then_some(parent),
            equivalents: f.equivalents,
            wiki_url: f.source,
        };
        if class.parent.is_some() {
            subclasses.push(class);
        } else {
            onto.insert_class(class)?;
        }
    }
    for class in subclasses {
        let parent = class.parent.as_deref().unwrap_or_default();
        if !onto.class(parent).is_some_and(OntologyClass::is_top_level) {
            return Err(OntologyError::Malformed {
                subject: class.local_name,
                message: format!("parent `{parent}` is not a top-level class"),
            });
        }
        if class.source_value.is_none() {
            return Err(OntologyError::Malformed {
                subject: class.local_name,
                message: format!("subclass without wkgs:{OSM_VALUE}"),
            });
        }
        onto.insert_class(class)?;
    }
    Ok(onto)
}
