//! Graph-level statistics over an emitted KG and its ontology.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::Serialize;

use crate::ontology::ROOT_CLASS;
use crate::rdf_read::{read_turtle, ReadError};
use crate::turtle::{Iri, Term};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KgStats {
    pub total_triples: u64,
    pub total_entities: u64,
    pub top_level_classes: u64,
    pub subclasses: u64,
    pub unique_properties: u64,
    pub links_wikidata: u64,
    pub links_dbpedia: u64,
}

impl KgStats {
    pub fn to_text(&self) -> String {
        format!(
            "total_triples\t{}\ntotal_entities\t{}\ntop_level_classes\t{}\nsubclasses\t{}\n\
             unique_properties\t{}\nlinks_wikidata\t{}\nlinks_dbpedia\t{}\n",
            self.total_triples,
            self.total_entities,
            self.top_level_classes,
            self.subclasses,
            self.unique_properties,
            self.links_wikidata,
            self.links_dbpedia,
        )
    }
}

/// Predicates that link an entity to its geometry or source node rather
/// than describing it.
const STRUCTURAL: [&str; 2] = ["spatialObject", "osmLink"];

pub fn compute_stats<K: Read, O: Read>(kg: K, ontology: O) -> Result<KgStats, ReadError> {
    let mut stats = KgStats::default();
    let mut entities: HashSet<Iri> = HashSet::new();
    let mut properties: HashSet<String> = HashSet::new();
    for triple in read_turtle(kg) {
        let t = triple?;
        stats.total_triples += 1;
        if t.predicate.is("rdf", "type") {
            if matches!(&t.object, Term::Iri(o) if o.local_in("wkgs").is_some()) {
                entities.insert(t.subject);
            }
        } else if let Some(p) = t.predicate.local_in("wkgs") {
            if !STRUCTURAL.contains(&p) && !properties.contains(p) {
                properties.insert(p.to_owned());
            }
        }
    }
    stats.total_entities = entities.len() as u64;
    stats.unique_properties = properties.len() as u64;

    let mut top_level: HashSet<Iri> = HashSet::new();
    let mut sub: HashSet<Iri> = HashSet::new();
    let mut links: HashSet<(Iri, Iri)> = HashSet::new();
    for triple in read_turtle(ontology) {
        let t = triple?;
        let Term::Iri(object) = &t.object else { continue };
        if t.predicate.is("rdfs", "subClassOf") {
            if object.is("wkgs", ROOT_CLASS) {
                top_level.insert(t.subject);
            } else {
                sub.insert(t.subject);
            }
        } else if t.predicate.is("owl", "equivalentClass") {
            links.insert((t.subject, object.clone()));
        }
    }
    stats.top_level_classes = top_level.len() as u64;
    stats.subclasses = sub.len() as u64;
    for (_, target) in &links {
        if target.local_in("wd").is_some() {
            stats.links_wikidata += 1;
        } else if target.local_in("dbo").is_some() {
            stats.links_dbpedia += 1;
        }
    }
    Ok(stats)
}

/// Number of entities typed with each WKG class.
pub fn class_counts<K: Read>(kg: K) -> Result<BTreeMap<String, u64>, ReadError> {
    let mut seen: HashSet<(Iri, String)> = HashSet::new();
    let mut counts = BTreeMap::new();
    for triple in read_turtle(kg) {
        let t = triple?;
        if !t.predicate.is("rdf", "type") {
            continue;
        }
        if let Term::Iri(o) = &t.object {
            if let Some(class) = o.local_in("wkgs") {
                if seen.insert((t.subject, class.to_owned())) {
                    *counts.entry(class.to_owned()).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(counts)
}
