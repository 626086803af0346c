//! Structural checks on emitted Turtle: reparse, then verify the entity
//! shape and, when an ontology is supplied, that every class and property
//! used is declared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::Serialize;

use crate::geo_query::SpatialPoint;
use crate::ontology::Ontology;
use crate::rdf_read::{read_turtle, ReadError};
use crate::turtle::{Iri, Term};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub triples: u64,
    pub entities: u64,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

#[derive(Default)]
struct Shape {
    types: u32,
    geometries: Vec<Iri>,
    osm_links: u32,
    labels: u32,
    wkt: Vec<String>,
}

fn show(iri: &Iri) -> String {
    match iri {
        Iri::Prefixed { prefix, local } => format!("{prefix}:{local}"),
        Iri::Full(s) => format!("<{s}>"),
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples\t{}", self.triples)?;
        writeln!(f, "entities\t{}", self.entities)?;
        writeln!(f, "issues\t{}", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Validates a KG document. Parse failures are errors; shape problems are
/// collected into the report.
pub fn validate_kg<R: Read>(kg: R, ontology: Option<&Ontology>) -> Result<ValidationReport, ReadError> {
    let mut shapes: BTreeMap<Iri, Shape> = BTreeMap::new();
    let mut undeclared_classes = BTreeSet::new();
    let mut undeclared_props = BTreeSet::new();
    let mut report = ValidationReport::default();
    for triple in read_turtle(kg) {
        let t = triple?;
        report.triples += 1;
        let p = &t.predicate;
        if p.is("rdf", "type") {
            if let Term::Iri(o) = &t.object {
                if let Some(class) = o.local_in("wkgs") {
                    shapes.entry(t.subject.clone()).or_default().types += 1;
                    if ontology.is_some_and(|onto| onto.class(class).is_none()) {
                        undeclared_classes.insert(class.to_owned());
                    }
                }
            }
            continue;
        }
        match p.local_in("wkgs") {
            Some("spatialObject") => {
                if let Term::Iri(o) = &t.object {
                    shapes.entry(t.subject.clone()).or_default().geometries.push(o.clone());
                }
            }
            Some("osmLink") => shapes.entry(t.subject.clone()).or_default().osm_links += 1,
            Some(prop) => {
                if ontology.is_some_and(|onto| onto.property(prop).is_none()) {
                    undeclared_props.insert(prop.to_owned());
                }
            }
            None => {}
        }
        if p.is("rdfs", "label") {
            shapes.entry(t.subject.clone()).or_default().labels += 1;
        } else if p.is("geo", "asWKT") {
            if let Term::Literal(l) = &t.object {
                shapes.entry(t.subject.clone()).or_default().wkt.push(l.value.clone());
            }
        }
    }

    let issues = &mut report.issues;
    for (subject, shape) in &shapes {
        if shape.types == 0 {
            continue;
        }
        report.entities += 1;
        let name = show(subject);
        if shape.geometries.len() != 1 {
            issues.push(format!("{name}: expected 1 spatialObject, found {}", shape.geometries.len()));
        }
        if shape.osm_links != 1 {
            issues.push(format!("{name}: expected 1 osmLink, found {}", shape.osm_links));
        }
        if shape.labels > 1 {
            issues.push(format!("{name}: {} labels", shape.labels));
        }
        for geometry in &shape.geometries {
            let wkt = shapes.get(geometry).map(|g| g.wkt.as_slice()).unwrap_or(&[]);
            match wkt {
                [one] if SpatialPoint::from_wkt(one).is_some() => {}
                [one] => issues.push(format!("{}: invalid WKT point {one:?}", show(geometry))),
                other => issues.push(format!(
                    "{}: expected 1 geo:asWKT, found {}",
                    show(geometry),
                    other.len()
                )),
            }
        }
    }
    for class in undeclared_classes {
        issues.push(format!("class wkgs:{class} is not declared in the ontology"));
    }
    for prop in undeclared_props {
        issues.push(format!("property wkgs:{prop} is not declared in the ontology"));
    }
    Ok(report)
}
