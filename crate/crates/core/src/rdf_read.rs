//! Turtle input, backed by `oxttl`, yielding triples in this crate's term
//! model with IRIs compacted against the WorldKG prefix table.

use std::io::Read;

use oxrdf::{NamedOrBlankNode, Term as OxTerm};
use thiserror::Error;

use crate::turtle::{Iri, Literal, PrefixTable, Term, Triple};

const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("Turtle syntax error: {0}")]
    Syntax(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Streams the triples of a Turtle document.
pub fn read_turtle<R: Read>(input: R) -> impl Iterator<Item = Result<Triple, ReadError>> {
    let prefixes = PrefixTable::worldkg();
    oxttl::TurtleParser::new()
        .for_reader(input)
        .map(move |res| match res {
            Ok(t) => Ok(convert(&t, &prefixes)),
            Err(oxttl::TurtleParseError::Io(e)) => Err(ReadError::Io(e)),
            Err(e) => Err(ReadError::Syntax(e.to_string())),
        })
}

/// Reads a whole Turtle document into memory.
pub fn read_turtle_all<R: Read>(input: R) -> Result<Vec<Triple>, ReadError> {
    read_turtle(input).collect()
}

fn convert(t: &oxrdf::Triple, prefixes: &PrefixTable) -> Triple {
    let subject = match &t.subject {
        NamedOrBlankNode::NamedNode(n) => prefixes.compact(n.as_str()),
        NamedOrBlankNode::BlankNode(b) => Iri::full(format!("_:{}", b.as_str())),
    };
    let predicate = prefixes.compact(t.predicate.as_str());
    let object = match &t.object {
        OxTerm::NamedNode(n) => Term::Iri(prefixes.compact(n.as_str())),
        OxTerm::BlankNode(b) => Term::Iri(Iri::full(format!("_:{}", b.as_str()))),
        OxTerm::Literal(l) => {
            let dt = l.datatype();
            if l.language().is_some() || dt.as_str() == XSD_STRING {
                Term::Literal(Literal::plain(l.value()))
            } else {
                Term::Literal(Literal::typed(l.value(), prefixes.compact(dt.as_str())))
            }
        }
        #[allow(unreachable_patterns)]
        other => Term::Iri(Iri::full(other.to_string())),
    };
    Triple::new(subject, predicate, object)
}
