//! RDF terms, the WorldKG prefix table and a deterministic Turtle writer.
//!
//! The writer emits one predicate-object pair per line, `;`-continued within
//! a subject block, so every non-blank line after the prefix block carries
//! exactly one triple.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

pub const DCTERMS: &str = "http://purl.org/dc/terms/";
pub const GEO: &str = "http://www.opengis.net/ont/geosparql#";
pub const OSMN: &str = "https://www.openstreetmap.org/node/";
pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const SF: &str = "http://www.opengis.net/ont/sf#";
pub const UOM: &str = "http://www.opengis.net/def/uom/OGC/1.0/";
pub const WD: &str = "http://www.wikidata.org/wiki/";
pub const WKG: &str = "http://www.worldkg.org/resource/";
pub const WKGS: &str = "http://www.worldkg.org/schema/";
pub const DBO: &str = "http://dbpedia.org/ontology/";

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurtleError {
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
}

/// An IRI either in compact `prefix:local` form or spelled out in full.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Iri {
    Prefixed { prefix: String, local: String },
    Full(String),
}

impl Iri {
    pub fn prefixed(prefix: &str, local: impl Into<String>) -> Iri {
        Iri::Prefixed {
            prefix: prefix.to_owned(),
            local: local.into(),
        }
    }

    pub fn full(iri: impl Into<String>) -> Iri {
        Iri::Full(iri.into())
    }

    pub fn rdf_type() -> Iri {
        Iri::prefixed("rdf", "type")
    }

    pub fn is(&self, prefix: &str, local: &str) -> bool {
        matches!(self, Iri::Prefixed { prefix: p, local: l } if p == prefix && l == local)
    }

    /// Local part when the IRI is in compact form under `prefix`.
    pub fn local_in(&self, prefix: &str) -> Option<&str> {
        match self {
            Iri::Prefixed { prefix: p, local } if p == prefix => Some(local),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub value: String,
    pub datatype: Option<Iri>,
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Literal {
        Literal {
            value: value.into(),
            datatype: None,
        }
    }

    pub fn typed(value: impl Into<String>, datatype: Iri) -> Literal {
        Literal {
            value: value.into(),
            datatype: Some(datatype),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Term {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Term {
        Term::Literal(lit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Triple {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

/// Prefix name to namespace IRI bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixTable {
    bindings: BTreeMap<String, String>,
}

impl PrefixTable {
    pub fn empty() -> PrefixTable {
        PrefixTable {
            bindings: BTreeMap::new(),
        }
    }

    /// The eleven WorldKG namespaces plus `dbo` for DBpedia classes.
    pub fn worldkg() -> PrefixTable {
        let mut table = PrefixTable::empty();
        for (prefix, ns) in [
            ("dcterms", DCTERMS),
            ("geo", GEO),
            ("osmn", OSMN),
            ("owl", OWL),
            ("rdf", RDF),
            ("rdfs", RDFS),
            ("sf", SF),
            ("uom", UOM),
            ("wd", WD),
            ("wkg", WKG),
            ("wkgs", WKGS),
            ("dbo", DBO),
        ] {
            table.insert(prefix, ns);
        }
        table
    }

    pub fn insert(&mut self, prefix: &str, namespace: &str) {
        self.bindings.insert(prefix.to_owned(), namespace.to_owned());
    }

    pub fn remove(&mut self, prefix: &str) -> Option<String> {
        self.bindings.remove(prefix)
    }

    pub fn namespace(&self, prefix: &str) -> Option<&str> {
        self.bindings.get(prefix).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bindings.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn expand(&self, iri: &Iri) -> Result<String, TurtleError> {
        match iri {
            Iri::Full(s) => Ok(s.clone()),
            Iri::Prefixed { prefix, local } => self
                .namespace(prefix)
                .map(|ns| format!("{ns}{local}"))
                .ok_or_else(|| TurtleError::UnknownPrefix(prefix.clone())),
        }
    }

    /// Finds the longest namespace that is a prefix of `iri`.
    pub fn compact(&self, iri: &str) -> Iri {
        self.bindings
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()))
            .max_by_key(|(_, ns)| ns.len())
            .map(|(p, ns)| Iri::prefixed(p, &iri[ns.len()..]))
            .unwrap_or_else(|| Iri::full(iri))
    }
}

/// Local names that can be written as `prefix:local` without escaping.
fn is_simple_local(local: &str) -> bool {
    !local.is_empty()
        && local
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Writes an IRI, compact when the prefix is known and the local part is
/// simple, as `<...>` otherwise.
pub fn write_iri(out: &mut String, iri: &Iri, prefixes: &PrefixTable) -> Result<(), TurtleError> {
    match iri {
        Iri::Prefixed { prefix, local } => {
            let ns = prefixes
                .namespace(prefix)
                .ok_or_else(|| TurtleError::UnknownPrefix(prefix.clone()))?;
            if is_simple_local(local) {
                out.push_str(prefix);
                out.push(':');
                out.push_str(local);
            } else {
                write_full_iri(out, &format!("{ns}{local}"));
            }
        }
        Iri::Full(s) => write_full_iri(out, s),
    }
    Ok(())
}

fn write_full_iri(out: &mut String, iri: &str) {
    out.push('<');
    for c in iri.chars() {
        match c {
            '\u{0}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            _ => out.push(c),
        }
    }
    out.push('>');
}

/// Appends `value` as a double-quoted Turtle string.
pub fn write_string_literal(out: &mut String, value: &str) {
    out.push('"');
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{0}'..='\u{1f}' | '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            _ => out.push(c),
        }
    }
    out.push('"');
}

pub fn write_term(out: &mut String, term: &Term, prefixes: &PrefixTable) -> Result<(), TurtleError> {
    match term {
        Term::Iri(iri) => write_iri(out, iri, prefixes),
        Term::Literal(lit) => {
            write_string_literal(out, &lit.value);
            if let Some(dt) = &lit.datatype {
                out.push_str("^^");
                write_iri(out, dt, prefixes)?;
            }
            Ok(())
        }
    }
}

/// `@prefix` lines in prefix-name order, followed by a blank line.
pub fn write_prefix_block(out: &mut String, prefixes: &PrefixTable) {
    for (prefix, ns) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }
    out.push('\n');
}

/// Writes one subject block. `pairs` must be non-empty and already in the
/// desired order. `rdf:type` is abbreviated to `a`.
pub fn write_subject_block<'a, I>(
    out: &mut String,
    subject: &Iri,
    pairs: I,
    prefixes: &PrefixTable,
) -> Result<(), TurtleError>
where
    I: IntoIterator<Item = (&'a Iri, &'a Term)>,
{
    write_iri(out, subject, prefixes)?;
    let mut first = true;
    for (predicate, object) in pairs {
        if first {
            out.push(' ');
            first = false;
        } else {
            out.push_str(" ;\n    ");
        }
        if predicate.is("rdf", "type") {
            out.push('a');
        } else {
            write_iri(out, predicate, prefixes)?;
        }
        out.push(' ');
        write_term(out, object, prefixes)?;
    }
    out.push_str(" .\n\n");
    Ok(())
}
