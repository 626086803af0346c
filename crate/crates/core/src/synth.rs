//! Deterministic synthetic OSM XML, for fixtures and load tests.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What to generate. Node ids are `first_id..first_id + total`; each id is
/// assigned a role (untagged or one of the classes) at random.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub first_id: u64,
    pub untagged: u64,
    /// `(key, value, count)`: nodes whose class-bearing tag is `key=value`.
    pub classes: Vec<(String, String, u64)>,
    /// `(lon_min, lat_min, lon_max, lat_max)`.
    pub bbox: (f64, f64, f64, f64),
    /// Emit nodes in shuffled id order instead of ascending.
    pub shuffle_ids: bool,
    /// Add names, properties and an unmapped tag to some tagged nodes.
    pub extra_tags: bool,
}

impl SynthConfig {
    pub fn new(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            first_id: 1,
            untagged: 0,
            classes: Vec::new(),
            bbox: (-180.0, -90.0, 180.0, 90.0),
            shuffle_ids: false,
            extra_tags: true,
        }
    }

    pub fn class(mut self, key: &str, value: &str, count: u64) -> SynthConfig {
        self.classes.push((key.to_owned(), value.to_owned(), count));
        self
    }

    pub fn total(&self) -> u64 {
        self.untagged + self.classes.iter().map(|c| c.2).sum::<u64>()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthSummary {
    pub nodes: u64,
    pub tagged: u64,
}

const PROPERTIES: [(&str, &[&str]); 4] = [
    ("cuisine", &["indian", "italian", "regional"]),
    ("wheelchair", &["yes", "no", "limited"]),
    ("ele", &["12", "845.5", "2962"]),
    ("phone", &["+49 30 123456", "+33 1 234567"]),
];

/// Writes the document node by node; memory use is independent of size
/// apart from the role table.
pub fn write_synthetic_osm<W: Write>(cfg: &SynthConfig, out: W) -> io::Result<SynthSummary> {
    let mut out = io::BufWriter::new(out);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Role 0 is untagged; role i is class i-1.
    let mut roles: Vec<u16> = Vec::with_capacity(cfg.total() as usize);
    roles.extend(std::iter::repeat_n(0, cfg.untagged as usize));
    for (i, (_, _, count)) in cfg.classes.iter().enumerate() {
        roles.extend(std::iter::repeat_n(i as u16 + 1, *count as usize));
    }
    roles.shuffle(&mut rng);
    let mut order: Vec<u64> = (0..roles.len() as u64).collect();
    if cfg.shuffle_ids {
        order.shuffle(&mut rng);
    }

    writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>")?;
    writeln!(out, "<osm version=\"0.6\" generator=\"worldkg-synth\">")?;
    let (lon0, lat0, lon1, lat1) = cfg.bbox;
    let mut summary = SynthSummary::default();
    for offset in order {
        let id = cfg.first_id + offset;
        let lon: f64 = rng.random_range(lon0..=lon1);
        let lat: f64 = rng.random_range(lat0..=lat1);
        summary.nodes += 1;
        let role = roles[offset as usize];
        if role == 0 {
            writeln!(out, "  <node id=\"{id}\" lat=\"{lat:.7}\" lon=\"{lon:.7}\"/>")?;
            continue;
        }
        summary.tagged += 1;
        let (key, value, _) = &cfg.classes[role as usize - 1];
        writeln!(out, "  <node id=\"{id}\" lat=\"{lat:.7}\" lon=\"{lon:.7}\">")?;
        writeln!(out, "    <tag k=\"{key}\" v=\"{value}\"/>")?;
        if cfg.extra_tags {
            if rng.random_bool(0.6) {
                writeln!(out, "    <tag k=\"name\" v=\"Place {id} &amp; Co\"/>")?;
            }
            let (pk, values) = PROPERTIES[rng.random_range(0..PROPERTIES.len())];
            if rng.random_bool(0.5) {
                let pv = values[rng.random_range(0..values.len())];
                writeln!(out, "    <tag k=\"{pk}\" v=\"{pv}\"/>")?;
            }
            if rng.random_bool(0.1) {
                writeln!(out, "    <tag k=\"note\" v=\"checked\"/>")?;
            }
        }
        writeln!(out, "  </node>")?;
    }
    writeln!(out, "</osm>")?;
    out.flush()?;
    Ok(summary)
}
