use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use oxrdf::{NamedOrBlankNode, Term};
use worldkg::kg_builder::{build_aligned_ontology, run_pipeline, KG_FILE, ONTOLOGY_FILE};
use worldkg::ontology::{build_ontology, load_map_features, to_upper_camel};
use worldkg::stats::{class_counts, compute_stats, KgStats};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const WKGS: &str = "http://www.worldkg.org/schema/";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn parse(path: &Path) -> Vec<oxrdf::Triple> {
    let file = fs::File::open(path).unwrap();
    oxttl::TurtleParser::new()
        .for_reader(file)
        .collect::<Result<_, _>>()
        .unwrap()
}

fn multiset(triples: &[oxrdf::Triple]) -> Vec<String> {
    let mut v: Vec<String> = triples.iter().map(|t| t.to_string()).collect();
    v.sort();
    v
}

fn build(osm: &str, alignments: &str) -> (tempfile::TempDir, worldkg::kg_builder::BuildReport) {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(
        &fixture(osm),
        &fixture("map_features.tsv"),
        &fixture(alignments),
        dir.path(),
    )
    .unwrap();
    (dir, report)
}

#[test]
fn krishna_restaurant_round_trips_through_the_pipeline() {
    let (dir, report) = build("krishna.osm", "alignments.tsv");
    let got = parse(&dir.path().join(KG_FILE));
    let want = parse(&fixture("krishna.ttl"));
    assert_eq!(want.len(), 15);
    assert_eq!(multiset(&got), multiset(&want));
    assert_eq!(report.entities, 1);
    assert_eq!(report.triples, 15);
}

#[test]
fn two_node_fixture_has_two_entities() {
    let (dir, report) = build("two_nodes.osm", "alignments.tsv");
    assert_eq!((report.nodes_read, report.nodes_tagged, report.entities), (3, 2, 2));
    let counts = class_counts(fs::File::open(dir.path().join(KG_FILE)).unwrap()).unwrap();
    assert_eq!(counts.get("Peak"), Some(&1));
    assert_eq!(counts.get("Restaurant"), Some(&1));
}

#[test]
fn untagged_input_gives_prefix_only_graph() {
    let (dir, report) = build("untagged.osm", "alignments.tsv");
    assert_eq!(report.entities, 0);
    assert_eq!(report.nodes_read, 3);
    assert!(parse(&dir.path().join(KG_FILE)).is_empty());
}

fn manifest() -> BTreeMap<String, BTreeSet<String>> {
    let text = fs::read_to_string(fixture("map_features.manifest")).unwrap();
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let (kind, name) = line.split_once('\t').unwrap();
        out.entry(kind.to_owned()).or_default().insert(name.to_owned());
    }
    out
}

#[test]
fn ontology_matches_hand_counted_manifest() {
    let file = fs::File::open(fixture("map_features.tsv")).unwrap();
    let entries = load_map_features(std::io::BufReader::new(file)).unwrap();
    let onto = build_ontology(&entries).unwrap();
    let m = manifest();
    let top: BTreeSet<String> = onto.top_level_classes().map(|c| c.local_name.clone()).collect();
    let sub: BTreeSet<String> = onto.subclasses().map(|c| c.local_name.clone()).collect();
    let props: BTreeSet<String> = onto.properties().map(|p| p.local_name.clone()).collect();
    assert_eq!(top, m["top_level"]);
    assert_eq!(sub, m["subclass"]);
    assert_eq!(props, m["property"]);
    let prefixed: Vec<&str> = onto
        .subclasses()
        .filter(|c| c.local_name != to_upper_camel(c.source_value.as_deref().unwrap()).unwrap())
        .map(|c| c.local_name.as_str())
        .collect();
    assert_eq!(prefixed.len(), 6, "{prefixed:?}");
}

fn equivalences(path: &Path) -> Vec<(String, String)> {
    let triples = parse(path);
    let declared: BTreeSet<String> = triples
        .iter()
        .filter(|t| t.predicate.as_str() == RDF_TYPE && t.object.to_string() == "<http://www.w3.org/2002/07/owl#Class>")
        .map(|t| t.subject.to_string())
        .collect();
    let eqs: Vec<(String, String)> = triples
        .iter()
        .filter(|t| t.predicate.as_str() == "http://www.w3.org/2002/07/owl#equivalentClass")
        .map(|t| (t.subject.to_string(), t.object.to_string()))
        .collect();
    for (s, _) in &eqs {
        assert!(declared.contains(s), "{s} is not a declared class");
    }
    eqs
}

#[test]
fn core_alignment_yields_six_links() {
    let (dir, _) = build("untagged.osm", "alignments_core.tsv");
    let eqs = equivalences(&dir.path().join(ONTOLOGY_FILE));
    assert_eq!(eqs.len(), 6);
    assert!(eqs.contains(&(
        format!("<{WKGS}Peak>"),
        "<http://www.wikidata.org/wiki/Q8502>".to_owned()
    )));
}

#[test]
fn full_alignment_yields_sixteen_links() {
    let (dir, _) = build("untagged.osm", "alignments.tsv");
    let eqs = equivalences(&dir.path().join(ONTOLOGY_FILE));
    assert_eq!(eqs.len(), 16);
    assert_eq!(eqs.iter().filter(|(_, o)| o.contains("wikidata")).count(), 11);
    assert_eq!(eqs.iter().filter(|(_, o)| o.contains("dbpedia")).count(), 5);
    assert!(eqs.contains(&(
        format!("<{WKGS}TourismHotel>"),
        "<http://www.wikidata.org/wiki/Q27686>".to_owned()
    )));
}

#[test]
fn unresolved_alignment_row_fails_the_build() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "key\tvalue\ttarget\tclass_id\nnatural\tvolcano\twikidata\tQ8072\n").unwrap();
    let err = build_aligned_ontology(&fixture("map_features.tsv"), &bad).unwrap_err();
    assert!(err.to_string().contains("natural=volcano"), "{err}");
}

/// Counting done directly on parsed triples.
fn oracle_stats(kg: &Path, onto: &Path) -> KgStats {
    let kg = parse(kg);
    let onto = parse(onto);
    let wkgs = |s: &str| s.strip_prefix(WKGS).map(str::to_owned);
    let mut entities = BTreeSet::new();
    let mut props = BTreeSet::new();
    for t in &kg {
        let pred = t.predicate.as_str();
        if pred == RDF_TYPE {
            if let Term::NamedNode(n) = &t.object {
                if n.as_str().starts_with(WKGS) {
                    entities.insert(t.subject.to_string());
                }
            }
        } else if let Some(p) = wkgs(pred) {
            if p != "spatialObject" && p != "osmLink" {
                props.insert(p);
            }
        }
    }
    let root = format!("{WKGS}WKGObject");
    let mut top = BTreeSet::new();
    let mut sub = BTreeSet::new();
    let mut wd = BTreeSet::new();
    let mut dbo = BTreeSet::new();
    for t in &onto {
        let NamedOrBlankNode::NamedNode(s) = &t.subject else { continue };
        let Term::NamedNode(o) = &t.object else { continue };
        match t.predicate.as_str() {
            "http://www.w3.org/2000/01/rdf-schema#subClassOf" if o.as_str() == root => {
                top.insert(s.clone());
            }
            "http://www.w3.org/2000/01/rdf-schema#subClassOf" => {
                sub.insert(s.clone());
            }
            "http://www.w3.org/2002/07/owl#equivalentClass" => {
                if o.as_str().starts_with("http://www.wikidata.org/") {
                    wd.insert((s.clone(), o.clone()));
                } else if o.as_str().starts_with("http://dbpedia.org/ontology/") {
                    dbo.insert((s.clone(), o.clone()));
                }
            }
            _ => {}
        }
    }
    KgStats {
        total_triples: kg.len() as u64,
        total_entities: entities.len() as u64,
        top_level_classes: top.len() as u64,
        subclasses: sub.len() as u64,
        unique_properties: props.len() as u64,
        links_wikidata: wd.len() as u64,
        links_dbpedia: dbo.len() as u64,
    }
}

#[test]
fn stats_agree_with_counting_oracle_on_every_fixture() {
    for osm in ["krishna.osm", "two_nodes.osm", "untagged.osm", "berlin.osm"] {
        let (dir, _) = build(osm, "alignments.tsv");
        let kg = dir.path().join(KG_FILE);
        let onto = dir.path().join(ONTOLOGY_FILE);
        let got = compute_stats(fs::File::open(&kg).unwrap(), fs::File::open(&onto).unwrap()).unwrap();
        assert_eq!(got, oracle_stats(&kg, &onto), "{osm}");
        assert_eq!((got.top_level_classes, got.subclasses), (11, 27));
        assert_eq!((got.links_wikidata, got.links_dbpedia), (11, 5));
    }
}

#[test]
fn krishna_stats() {
    let (dir, _) = build("krishna.osm", "alignments.tsv");
    let kg = dir.path().join(KG_FILE);
    let s = compute_stats(fs::File::open(&kg).unwrap(), &b""[..]).unwrap();
    assert_eq!((s.total_triples, s.total_entities, s.unique_properties), (15, 1, 9));
    let counts = class_counts(fs::File::open(&kg).unwrap()).unwrap();
    assert_eq!(counts, BTreeMap::from([("Restaurant".to_owned(), 1)]));
}
