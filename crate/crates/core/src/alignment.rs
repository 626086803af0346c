//! Tag-to-class alignment table and `owl:equivalentClass` attachment.
//!
//! The table is the curated output of an upstream class-alignment model;
//! it is consumed as data, never recomputed here.

use std::collections::BTreeSet;
use std::io::BufRead;

use thiserror::Error;

use crate::ontology::{Equivalence, Ontology, TargetGraph};

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("alignment line {line}: {message}")]
    Tsv { line: usize, message: String },
    #[error("{} alignment row(s) do not resolve to an ontology class: {}", .0.len(), .0.join(", "))]
    Unresolved(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlignmentMapping {
    pub osm_key: String,
    pub osm_value: String,
    pub target: TargetGraph,
    pub class_id: String,
    pub label: Option<String>,
}

impl AlignmentMapping {
    pub fn new(key: &str, value: &str, target: TargetGraph, class_id: &str) -> Self {
        AlignmentMapping {
            osm_key: key.to_owned(),
            osm_value: value.to_owned(),
            target,
            class_id: class_id.to_owned(),
            label: None,
        }
    }
}

const HEADER: [&str; 5] = ["key", "value", "target", "class_id", "label"];

/// Reads the alignment TSV. `#` lines carry provenance comments and are
/// skipped; the label column is optional.
pub fn load_alignments<R: BufRead>(input: R) -> Result<Vec<AlignmentMapping>, AlignmentError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut header_seen = false;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        let tsv_err = |message: String| AlignmentError::Tsv {
            line: line_no,
            message,
        };
        if !header_seen {
            let n = cells.len().min(5);
            if n < 4 || cells[..n] != HEADER[..n] {
                return Err(tsv_err(format!("expected header `{}`", HEADER.join("\t"))));
            }
            header_seen = true;
            continue;
        }
        if !(4..=5).contains(&cells.len()) {
            return Err(tsv_err(format!(
                "expected 4 or 5 columns, found {}",
                cells.len()
            )));
        }
        if cells[..4].iter().any(|c| c.is_empty()) {
            return Err(tsv_err("key, value, target and class_id are required".into()));
        }
        let target: TargetGraph = cells[2].parse().map_err(tsv_err)?;
        let mapping = AlignmentMapping {
            osm_key: cells[0].to_owned(),
            osm_value: cells[1].to_owned(),
            target,
            class_id: cells[3].to_owned(),
            label: cells.get(4).filter(|l| !l.is_empty()).map(|l| l.to_string()),
        };
        if !seen.insert((mapping.osm_key.clone(), mapping.osm_value.clone(), target)) {
            return Err(tsv_err(format!(
                "duplicate mapping {}={} -> {target}",
                mapping.osm_key, mapping.osm_value
            )));
        }
        out.push(mapping);
    }
    Ok(out)
}

/// Adds each mapping's external class to the equivalents of the class its
/// tag resolves to. Every unresolvable row is reported at once.
pub fn attach_equivalences(
    onto: &Ontology,
    mappings: &[AlignmentMapping],
) -> Result<Ontology, AlignmentError> {
    let mut resolved = Vec::with_capacity(mappings.len());
    let mut unresolved = Vec::new();
    for m in mappings {
        match onto.resolve_tag_class(&m.osm_key, &m.osm_value) {
            Some(class) => resolved.push((class.local_name.clone(), m)),
            None => unresolved.push(format!(
                "{}={} -> {}:{}",
                m.osm_key, m.osm_value, m.target, m.class_id
            )),
        }
    }
    if !unresolved.is_empty() {
        return Err(AlignmentError::Unresolved(unresolved));
    }
    let mut out = onto.clone();
    for (name, m) in resolved {
        if let Some(class) = out.class_mut(&name) {
            class.equivalents.insert(Equivalence {
                graph: m.target,
                class_id: m.class_id.clone(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{build_ontology, FeatureCategory, MapFeatureEntry};

    fn onto() -> Ontology {
        let f = |k: &str, v: &str| MapFeatureEntry::new(k, v, FeatureCategory::Feature, None);
        build_ontology(&[
            f("natural", "peak"),
            f("building", "church"),
            f("building", "yes"),
        ])
        .unwrap()
    }

    const HEADER_LINE: &str = "key\tvalue\ttarget\tclass_id\tlabel\n";

    #[test]
    fn loads_table_rows() {
        let tsv = format!(
            "# nca threshold wikidata=0.25 dbpedia=0.4\n{HEADER_LINE}\
             natural\tpeak\twikidata\tQ8502\tmountain\n\
             building\tchurch\twikidata\tQ16970\tchurch building\n\
             natural\tpeak\tdbpedia\tMountain\n"
        );
        let rows = load_alignments(tsv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].class_id, "Q8502");
        assert_eq!(rows[0].label.as_deref(), Some("mountain"));
        assert_eq!(rows[1].label.as_deref(), Some("church building"));
        assert_eq!(rows[2].target, TargetGraph::Dbpedia);
        assert_eq!(rows[2].label, None);
    }

    #[test]
    fn header_only_file_is_empty() {
        assert!(load_alignments(HEADER_LINE.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_row_reports_line() {
        let tsv = format!("{HEADER_LINE}a\tb\twikidata\tQ1\t\na\tb\twikidata\tQ2\t\n");
        assert!(matches!(
            load_alignments(tsv.as_bytes()),
            Err(AlignmentError::Tsv { line: 3, .. })
        ));
    }

    #[test]
    fn unknown_target_graph() {
        let tsv = format!("{HEADER_LINE}a\tb\tyago\tQ1\t\n");
        let err = load_alignments(tsv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("yago"));
    }

    #[test]
    fn attaches_to_subclass() {
        let out = attach_equivalences(
            &onto(),
            &[AlignmentMapping::new("natural", "peak", TargetGraph::Wikidata, "Q8502")],
        )
        .unwrap();
        let eqs: Vec<_> = out.class("Peak").unwrap().equivalents.iter().cloned().collect();
        assert_eq!(
            eqs,
            [Equivalence {
                graph: TargetGraph::Wikidata,
                class_id: "Q8502".into()
            }]
        );
    }

    #[test]
    fn non_categorical_value_resolves_to_top_level() {
        let out = attach_equivalences(
            &onto(),
            &[AlignmentMapping::new("building", "yes", TargetGraph::Dbpedia, "Building")],
        )
        .unwrap();
        assert_eq!(out.class("Building").unwrap().equivalents.len(), 1);
    }

    #[test]
    fn empty_mapping_set_is_identity() {
        assert_eq!(attach_equivalences(&onto(), &[]).unwrap(), onto());
    }

    #[test]
    fn unresolved_rows_are_all_listed() {
        let err = attach_equivalences(
            &onto(),
            &[
                AlignmentMapping::new("natural", "saddle", TargetGraph::Wikidata, "Q133056"),
                AlignmentMapping::new("natural", "peak", TargetGraph::Wikidata, "Q8502"),
                AlignmentMapping::new("railway", "halt", TargetGraph::Wikidata, "Q55678"),
            ],
        )
        .unwrap_err();
        match err {
            AlignmentError::Unresolved(rows) => {
                assert_eq!(rows.len(), 2);
                assert!(rows[0].contains("natural=saddle"));
                assert!(rows[1].contains("railway=halt"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn attach_is_idempotent() {
        let maps = [
            AlignmentMapping::new("natural", "peak", TargetGraph::Wikidata, "Q8502"),
            AlignmentMapping::new("building", "church", TargetGraph::Wikidata, "Q16970"),
        ];
        let once = attach_equivalences(&onto(), &maps).unwrap();
        let twice = attach_equivalences(&once, &maps).unwrap();
        assert_eq!(once, twice);
    }
}
