//! OSM nodes to WorldKG entities, and entities to Turtle.
//!
//! Output is ordered by numeric node id with each entity block followed by
//! its geometry block. The streaming pipeline renders blocks in parallel
//! batches and restores id order with an external merge sort, so memory use
//! stays flat for any input size and input order.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::alignment::{attach_equivalences, load_alignments, AlignmentError};
use crate::ontology::{
    build_ontology, load_map_features, serialize_ontology, Ontology, OntologyError, TagRole,
};
use crate::osm_corpus::{parse_osm_xml, OsmError, OsmNode};
use crate::turtle::{
    write_prefix_block, write_subject_block, Iri, Literal, PrefixTable, Term, Triple,
    TurtleError,
};

pub const ONTOLOGY_FILE: &str = "ontology.ttl";
pub const KG_FILE: &str = "kg.ttl";

const NAME_KEY: &str = "name";
const BATCH_SIZE: usize = 4096;
const SORT_BUDGET_BYTES: usize = 8 << 20;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Osm(#[from] OsmError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Turtle(#[from] TurtleError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A typed WorldKG entity derived from one OSM node.
#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: u64,
    /// Class local names; never empty.
    pub types: BTreeSet<String>,
    /// Property local name to literal value.
    pub properties: BTreeMap<String, String>,
    pub label: Option<String>,
    pub lon: f64,
    pub lat: f64,
}

impl Entity {
    /// Triples this entity expands to: types, properties, label, plus
    /// spatialObject, osmLink and the two geometry triples.
    pub fn triple_count(&self) -> usize {
        self.types.len() + self.properties.len() + usize::from(self.label.is_some()) + 4
    }
}

struct Mapped {
    entity: Option<Entity>,
    dropped: usize,
}

fn map_node(node: &OsmNode, onto: &Ontology) -> Mapped {
    let mut types = BTreeSet::new();
    let mut properties = BTreeMap::new();
    let mut label = None;
    for tag in node.tags() {
        if tag.key() == NAME_KEY {
            label = Some(tag.value().to_owned());
            continue;
        }
        match onto.classify_tag(tag.key(), tag.value()) {
            TagRole::Subclass(c) | TagRole::TopLevel(c) => {
                types.insert(c.local_name.clone());
            }
            TagRole::Property(p) => {
                properties.insert(p.local_name.clone(), tag.value().to_owned());
            }
            TagRole::Unmapped => {}
        }
    }
    if types.is_empty() {
        return Mapped {
            entity: None,
            dropped: node.tags().len(),
        };
    }
    let used = types.len() + properties.len() + usize::from(label.is_some());
    Mapped {
        dropped: node.tags().len() - used,
        entity: Some(Entity {
            id: node.id,
            types,
            properties,
            label,
            lon: node.lon,
            lat: node.lat,
        }),
    }
}

/// Maps a node onto the ontology. Tags that name no class or property are
/// dropped; `None` when no tag types the node.
pub fn node_to_entity(node: &OsmNode, onto: &Ontology) -> Option<Entity> {
    map_node(node, onto).entity
}

pub fn entity_iri(id: u64) -> Iri {
    Iri::prefixed("wkg", id.to_string())
}

pub fn geometry_iri(id: u64) -> Iri {
    Iri::prefixed("wkg", format!("geo{id}"))
}

pub fn wkt_point(lon: f64, lat: f64) -> String {
    format!("Point({lon} {lat})")
}

/// Triples in emission order: entity block first, then its geometry.
pub fn entity_to_triples(e: &Entity) -> Vec<Triple> {
    let subject = entity_iri(e.id);
    let geometry = geometry_iri(e.id);
    let mut out = Vec::with_capacity(e.triple_count());
    for t in &e.types {
        out.push(Triple::new(
            subject.clone(),
            Iri::rdf_type(),
            Iri::prefixed("wkgs", t.clone()),
        ));
    }
    if let Some(label) = &e.label {
        out.push(Triple::new(
            subject.clone(),
            Iri::prefixed("rdfs", "label"),
            Literal::plain(label.clone()),
        ));
    }
    for (p, v) in &e.properties {
        out.push(Triple::new(
            subject.clone(),
            Iri::prefixed("wkgs", p.clone()),
            Literal::plain(v.clone()),
        ));
    }
    out.push(Triple::new(
        subject.clone(),
        Iri::prefixed("wkgs", "spatialObject"),
        geometry.clone(),
    ));
    out.push(Triple::new(
        subject,
        Iri::prefixed("wkgs", "osmLink"),
        Iri::prefixed("osmn", e.id.to_string()),
    ));
    out.push(Triple::new(
        geometry.clone(),
        Iri::rdf_type(),
        Iri::prefixed("sf", "Point"),
    ));
    out.push(Triple::new(
        geometry,
        Iri::prefixed("geo", "asWKT"),
        Literal::typed(wkt_point(e.lon, e.lat), Iri::prefixed("geo", "wktLiteral")),
    ));
    out
}

/// Sort key placing `wkg:{n}` before `wkg:geo{n}`, both by numeric id, and
/// any other subject after all entities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SubjectKey {
    Entity(u64, u8),
    Other(Iri),
}

fn subject_key(s: &Iri) -> SubjectKey {
    if let Some(local) = s.local_in("wkg") {
        let (rest, slot) = match local.strip_prefix("geo") {
            Some(r) => (r, 1),
            None => (local, 0),
        };
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(n) = rest.parse() {
                return SubjectKey::Entity(n, slot);
            }
        }
    }
    SubjectKey::Other(s.clone())
}

fn predicate_rank(p: &Iri) -> u8 {
    if p.is("rdf", "type") {
        0
    } else if p.is("rdfs", "label") {
        1
    } else if p.is("wkgs", "osmLink") {
        3
    } else {
        2
    }
}

fn write_grouped<'a, I>(out: &mut String, triples: I, prefixes: &PrefixTable) -> Result<(), TurtleError>
where
    I: IntoIterator<Item = &'a Triple>,
{
    let mut groups: BTreeMap<SubjectKey, (&Iri, Vec<(&Iri, &Term)>)> = BTreeMap::new();
    for t in triples {
        groups
            .entry(subject_key(&t.subject))
            .or_insert_with(|| (&t.subject, Vec::new()))
            .1
            .push((&t.predicate, &t.object));
    }
    for (_, (subject, mut pairs)) in groups {
        pairs.sort_by(|a, b| {
            (predicate_rank(a.0), a.0, a.1).cmp(&(predicate_rank(b.0), b.0, b.1))
        });
        write_subject_block(out, subject, pairs, prefixes)?;
    }
    Ok(())
}

/// Serializes a triple multiset. Output bytes depend only on the multiset,
/// not on the order of `triples`.
pub fn serialize_kg(triples: &[Triple], prefixes: &PrefixTable) -> Result<String, TurtleError> {
    let mut out = String::new();
    write_prefix_block(&mut out, prefixes);
    write_grouped(&mut out, triples, prefixes)?;
    Ok(out)
}

/// The entity and geometry blocks of one entity, as they appear in a full
/// document.
pub fn render_entity(e: &Entity, prefixes: &PrefixTable) -> Result<String, TurtleError> {
    let mut out = String::new();
    write_grouped(&mut out, &entity_to_triples(e), prefixes)?;
    Ok(out)
}

/// Counts reported by a KG build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub nodes_read: u64,
    pub nodes_tagged: u64,
    pub entities: u64,
    pub triples: u64,
    pub tags_dropped: u64,
}

impl BuildReport {
    /// `key<TAB>value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "nodes_read\t{}\nnodes_tagged\t{}\nentities\t{}\ntriples\t{}\ntags_dropped\t{}\n",
            self.nodes_read, self.nodes_tagged, self.entities, self.triples, self.tags_dropped
        )
    }
}

/// External merge sort of rendered blocks keyed by node id.
struct BlockSorter {
    buffer: Vec<(u64, String)>,
    buffered_bytes: usize,
    budget: usize,
    runs: Vec<File>,
}

impl BlockSorter {
    fn new(budget: usize) -> Self {
        BlockSorter {
            buffer: Vec::new(),
            buffered_bytes: 0,
            budget,
            runs: Vec::new(),
        }
    }

    fn push(&mut self, id: u64, block: String) -> io::Result<()> {
        self.buffered_bytes += block.len() + 16;
        self.buffer.push((id, block));
        if self.buffered_bytes >= self.budget {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> io::Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        self.buffer.sort_unstable_by_key(|(id, _)| *id);
        let mut file = tempfile::tempfile()?;
        {
            let mut w = BufWriter::new(&mut file);
            for (id, block) in self.buffer.drain(..) {
                w.write_all(&id.to_le_bytes())?;
                w.write_all(&(block.len() as u64).to_le_bytes())?;
                w.write_all(block.as_bytes())?;
            }
            w.flush()?;
        }
        file.seek(SeekFrom::Start(0))?;
        self.runs.push(file);
        self.buffered_bytes = 0;
        Ok(())
    }

    fn finish<W: Write>(mut self, out: &mut W) -> io::Result<()> {
        if self.runs.is_empty() {
            self.buffer.sort_unstable_by_key(|(id, _)| *id);
            for (_, block) in &self.buffer {
                out.write_all(block.as_bytes())?;
            }
            return Ok(());
        }
        self.spill()?;
        let mut readers: Vec<RunReader> = self.runs.into_iter().map(RunReader::new).collect();
        let mut heap = BinaryHeap::new();
        for (i, r) in readers.iter_mut().enumerate() {
            if let Some(id) = r.advance()? {
                heap.push(Reverse((id, i)));
            }
        }
        while let Some(Reverse((_, i))) = heap.pop() {
            out.write_all(&readers[i].block)?;
            if let Some(id) = readers[i].advance()? {
                heap.push(Reverse((id, i)));
            }
        }
        Ok(())
    }
}

struct RunReader {
    input: BufReader<File>,
    block: Vec<u8>,
}

impl RunReader {
    fn new(file: File) -> Self {
        RunReader {
            input: BufReader::with_capacity(64 << 10, file),
            block: Vec::new(),
        }
    }

    fn advance(&mut self) -> io::Result<Option<u64>> {
        let mut word = [0u8; 8];
        match self.input.read_exact(&mut word) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let id = u64::from_le_bytes(word);
        self.input.read_exact(&mut word)?;
        let len = u64::from_le_bytes(word) as usize;
        self.block.resize(len, 0);
        self.input.read_exact(&mut self.block)?;
        Ok(Some(id))
    }
}

struct Rendered {
    id: u64,
    block: Option<String>,
    triples: usize,
    dropped: usize,
}

/// Streams OSM XML into a KG Turtle document written to `out`.
pub fn build_kg<R: BufRead, W: Write>(
    osm: R,
    onto: &Ontology,
    prefixes: &PrefixTable,
    out: &mut W,
) -> Result<BuildReport, BuildError> {
    build_kg_with_budget(osm, onto, prefixes, out, SORT_BUDGET_BYTES)
}

fn build_kg_with_budget<R: BufRead, W: Write>(
    osm: R,
    onto: &Ontology,
    prefixes: &PrefixTable,
    out: &mut W,
    budget: usize,
) -> Result<BuildReport, BuildError> {
    let mut report = BuildReport::default();
    let mut sorter = BlockSorter::new(budget);
    let mut nodes = parse_osm_xml(osm);
    let mut batch = Vec::with_capacity(BATCH_SIZE);
    loop {
        batch.clear();
        for node in nodes.by_ref() {
            let node = node?;
            report.nodes_read += 1;
            if node.is_tagged() {
                batch.push(node);
                if batch.len() == BATCH_SIZE {
                    break;
                }
            }
        }
        if batch.is_empty() {
            break;
        }
        report.nodes_tagged += batch.len() as u64;
        let rendered: Vec<Rendered> = batch
            .par_iter()
            .map(|node| {
                let mapped = map_node(node, onto);
                let (block, triples) = match &mapped.entity {
                    Some(e) => (Some(render_entity(e, prefixes)?), e.triple_count()),
                    None => (None, 0),
                };
                Ok(Rendered {
                    id: node.id,
                    block,
                    triples,
                    dropped: mapped.dropped,
                })
            })
            .collect::<Result<_, TurtleError>>()?;
        for r in rendered {
            report.tags_dropped += r.dropped as u64;
            if let Some(block) = r.block {
                report.entities += 1;
                report.triples += r.triples as u64;
                sorter.push(r.id, block)?;
            }
        }
    }

    let mut header = String::new();
    write_prefix_block(&mut header, prefixes);
    out.write_all(header.as_bytes())?;
    sorter.finish(out)?;
    out.flush()?;
    Ok(report)
}

fn open(path: &Path) -> Result<BufReader<File>, BuildError> {
    File::open(path)
        .map(|f| BufReader::with_capacity(256 << 10, f))
        .map_err(|source| BuildError::File {
            path: path.to_owned(),
            source,
        })
}

fn temp_in(dir: &Path) -> Result<tempfile::NamedTempFile, BuildError> {
    tempfile::NamedTempFile::new_in(dir).map_err(|source| BuildError::File {
        path: dir.to_owned(),
        source,
    })
}

fn persist(tmp: tempfile::NamedTempFile, path: &Path) -> Result<(), BuildError> {
    tmp.persist(path).map(|_| ()).map_err(|e| BuildError::File {
        path: path.to_owned(),
        source: e.error,
    })
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Builds the ontology from a map-features TSV and an alignment TSV.
pub fn build_aligned_ontology(features: &Path, alignments: &Path) -> Result<Ontology, BuildError> {
    let entries = load_map_features(open(features)?)?;
    let onto = build_ontology(&entries)?;
    let mappings = load_alignments(open(alignments)?)?;
    Ok(attach_equivalences(&onto, &mappings)?)
}

/// Writes `ontology.ttl` atomically.
pub fn write_ontology_file(onto: &Ontology, path: &Path) -> Result<(), BuildError> {
    let text = serialize_ontology(onto, &PrefixTable::worldkg())?;
    let mut tmp = temp_in(parent_dir(path))?;
    tmp.write_all(text.as_bytes())?;
    persist(tmp, path)
}

/// Streams an OSM file into `kg_path`. Nothing is left at `kg_path` on
/// failure.
pub fn build_kg_file(osm: &Path, onto: &Ontology, kg_path: &Path) -> Result<BuildReport, BuildError> {
    let input = open(osm)?;
    let tmp = temp_in(parent_dir(kg_path))?;
    let mut w = BufWriter::with_capacity(256 << 10, tmp);
    let report = build_kg(input, onto, &PrefixTable::worldkg(), &mut w)?;
    let tmp = w.into_inner().map_err(|e| e.into_error())?;
    persist(tmp, kg_path)?;
    Ok(report)
}

/// The full pipeline: map features and alignments to an ontology, then OSM
/// nodes to entities. Writes `ontology.ttl` and `kg.ttl` into `out_dir`;
/// either both files appear or neither does.
pub fn run_pipeline(
    osm: &Path,
    features: &Path,
    alignments: &Path,
    out_dir: &Path,
) -> Result<BuildReport, BuildError> {
    let onto = build_aligned_ontology(features, alignments)?;
    std::fs::create_dir_all(out_dir).map_err(|source| BuildError::File {
        path: out_dir.to_owned(),
        source,
    })?;
    let prefixes = PrefixTable::worldkg();

    let mut onto_tmp = temp_in(out_dir)?;
    onto_tmp.write_all(serialize_ontology(&onto, &prefixes)?.as_bytes())?;

    let input = open(osm)?;
    let mut w = BufWriter::with_capacity(256 << 10, temp_in(out_dir)?);
    let report = build_kg(input, &onto, &prefixes, &mut w)?;
    let kg_tmp = w.into_inner().map_err(|e| e.into_error())?;

    persist(onto_tmp, &out_dir.join(ONTOLOGY_FILE))?;
    persist(kg_tmp, &out_dir.join(KG_FILE))?;
    Ok(report)
}
