//! Building and querying a geographic knowledge graph from OpenStreetMap
//! nodes.

pub mod alignment;
pub mod geo_query;
pub mod kg_builder;
pub mod ontology;
pub mod osm_corpus;
pub mod rdf_read;
pub mod stats;
pub mod synth;
pub mod turtle;
pub mod validate;
