//! OSM node model and a streaming reader for `.osm` XML dumps.
//!
//! Only `<node>` elements are materialized. Ways, relations, bounds and any
//! other element are skipped while the reader walks the document, so memory
//! use is bounded by the largest single node rather than the file size.

use std::fmt;
use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use roaring::RoaringTreemap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("node element at byte {offset} is missing the `{attribute}` attribute")]
    MissingAttribute { offset: u64, attribute: &'static str },
    #[error("node element at byte {offset} has an invalid `{attribute}` value {value:?}")]
    InvalidAttribute {
        offset: u64,
        attribute: &'static str,
        value: String,
    },
    #[error("node {id}: latitude {lat} is outside [-90, 90]")]
    LatitudeOutOfRange { id: u64, lat: f64 },
    #[error("node {id}: longitude {lon} is outside [-180, 180]")]
    LongitudeOutOfRange { id: u64, lon: f64 },
    #[error("node {id}: tag has an empty or missing key or value")]
    EmptyTag { id: u64 },
    #[error("node {id}: duplicate tag key {key:?}")]
    DuplicateTagKey { id: u64, key: String },
    #[error("duplicate node id {id}")]
    DuplicateNodeId { id: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A single `key=value` annotation. Both sides are trimmed and non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag {
    key: String,
    value: String,
}

impl Tag {
    /// Returns `None` when either side is empty after trimming.
    pub fn new(key: &str, value: &str) -> Option<Tag> {
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return None;
        }
        Some(Tag {
            key: key.to_owned(),
            value: value.to_owned(),
        })
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.key, self.value)
    }
}

/// A point-located OSM element with its tags in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct OsmNode {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
    tags: Vec<Tag>,
}

impl OsmNode {
    /// Validates coordinates and tag-key uniqueness.
    pub fn new(id: u64, lat: f64, lon: f64, tags: Vec<Tag>) -> Result<OsmNode, OsmError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(OsmError::LatitudeOutOfRange { id, lat });
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(OsmError::LongitudeOutOfRange { id, lon });
        }
        let mut node = OsmNode {
            id,
            lat,
            lon,
            tags: Vec::with_capacity(tags.len()),
        };
        for tag in tags {
            node.push_tag(tag)?;
        }
        Ok(node)
    }

    fn push_tag(&mut self, tag: Tag) -> Result<(), OsmError> {
        if self.tag(tag.key()).is_some() {
            return Err(OsmError::DuplicateTagKey {
                id: self.id,
                key: tag.key,
            });
        }
        self.tags.push(tag);
        Ok(())
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags
            .iter()
            .find(|t| t.key == key)
            .map(|t| t.value.as_str())
    }

    pub fn is_tagged(&self) -> bool {
        !self.tags.is_empty()
    }
}

/// Keeps only nodes carrying at least one tag. Untagged nodes in dumps are
/// geometry placeholders for ways and relations.
pub fn filter_tagged<I>(nodes: I) -> impl Iterator<Item = I::Item>
where
    I: IntoIterator<Item = OsmNode>,
{
    nodes.into_iter().filter(OsmNode::is_tagged)
}

/// Streaming iterator over the `<node>` elements of an OSM XML document.
///
/// Node ids are tracked in a compressed bitmap so a repeated id fails on its
/// second occurrence.
pub struct OsmXmlReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    pending: Option<OsmNode>,
    seen: RoaringTreemap,
    done: bool,
}

/// Parses an OSM XML byte stream lazily.
pub fn parse_osm_xml<R: BufRead>(input: R) -> OsmXmlReader<R> {
    OsmXmlReader::new(input)
}

impl<R: BufRead> OsmXmlReader<R> {
    pub fn new(input: R) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        OsmXmlReader {
            reader,
            buf: Vec::with_capacity(4096),
            pending: None,
            seen: RoaringTreemap::new(),
            done: false,
        }
    }

    /// Byte offset of the reader within the input.
    pub fn position(&self) -> u64 {
        self.reader.buffer_position()
    }

    fn xml_error(&self, err: impl fmt::Display) -> OsmError {
        OsmError::Xml {
            offset: self.reader.error_position(),
            message: err.to_string(),
        }
    }

    fn next_node(&mut self) -> Result<Option<OsmNode>, OsmError> {
        loop {
            self.buf.clear();
            let start_offset = self.reader.buffer_position();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    return Err(OsmError::Xml {
                        offset: self.reader.error_position(),
                        message: e.to_string(),
                    })
                }
            };
            match event {
                Event::Start(ref e) | Event::Empty(ref e) if e.name().as_ref() == "node" => {
                    let is_empty = matches!(event, Event::Empty(_));
                    if self.pending.is_some() {
                        return Err(OsmError::Xml {
                            offset: start_offset,
                            message: "nested <node> element".into(),
                        });
                    }
                    let node = node_from_start(e, start_offset)?;
                    if !self.seen.insert(node.id) {
                        return Err(OsmError::DuplicateNodeId { id: node.id });
                    }
                    if is_empty {
                        return Ok(Some(node));
                    }
                    self.pending = Some(node);
                }
                Event::Start(ref e) | Event::Empty(ref e) if e.name().as_ref() == "tag" => {
                    if let Some(pending) = self.pending.as_mut() {
                        let tag = tag_from_start(e, pending.id)?;
                        pending.push_tag(tag)?;
                    }
                }
                Event::End(ref e) if e.name().as_ref() == "node" => {
                    if let Some(node) = self.pending.take() {
                        return Ok(Some(node));
                    }
                }
                Event::Eof => {
                    if self.pending.is_some() {
                        return Err(self.xml_error("unexpected end of input inside <node>"));
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for OsmXmlReader<R> {
    type Item = Result<OsmNode, OsmError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_node() {
            Ok(Some(node)) => Some(Ok(node)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn attr_text(
    value: Result<std::borrow::Cow<'_, str>, quick_xml::Error>,
    offset: u64,
) -> Result<String, OsmError> {
    value.map(|v| v.into_owned()).map_err(|e| OsmError::Xml {
        offset,
        message: e.to_string(),
    })
}

fn node_from_start(e: &BytesStart<'_>, offset: u64) -> Result<OsmNode, OsmError> {
    let mut id = None;
    let mut lat = None;
    let mut lon = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| OsmError::Xml {
            offset,
            message: err.to_string(),
        })?;
        let slot = match attr.key.as_ref() {
            "id" => &mut id,
            "lat" => &mut lat,
            "lon" => &mut lon,
            _ => continue,
        };
        *slot = Some(attr_text(attr.normalized_value(XmlVersion::Implicit1_0), offset)?);
    }

    let id_text = id.ok_or(OsmError::MissingAttribute {
        offset,
        attribute: "id",
    })?;
    let id: u64 = id_text
        .trim()
        .parse()
        .ok()
        .filter(|&v| v > 0)
        .ok_or_else(|| OsmError::InvalidAttribute {
            offset,
            attribute: "id",
            value: id_text.clone(),
        })?;
    let lat = parse_degrees(lat, "lat", offset)?;
    let lon = parse_degrees(lon, "lon", offset)?;
    OsmNode::new(id, lat, lon, Vec::new())
}

fn parse_degrees(
    text: Option<String>,
    attribute: &'static str,
    offset: u64,
) -> Result<f64, OsmError> {
    let text = text.ok_or(OsmError::MissingAttribute { offset, attribute })?;
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or(OsmError::InvalidAttribute {
            offset,
            attribute,
            value: text,
        })
}

fn tag_from_start(e: &BytesStart<'_>, node_id: u64) -> Result<Tag, OsmError> {
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| OsmError::Xml {
            offset: 0,
            message: err.to_string(),
        })?;
        let slot = match attr.key.as_ref() {
            "k" => &mut key,
            "v" => &mut value,
            _ => continue,
        };
        *slot = Some(attr_text(attr.normalized_value(XmlVersion::Implicit1_0), 0)?);
    }
    match (key, value) {
        (Some(k), Some(v)) => Tag::new(&k, &v).ok_or(OsmError::EmptyTag { id: node_id }),
        _ => Err(OsmError::EmptyTag { id: node_id }),
    }
}
