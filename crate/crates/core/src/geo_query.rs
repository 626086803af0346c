//! In-memory query store over an emitted KG.
//!
//! Entities are indexed by class, by label, by equivalent external class and
//! by a fixed-resolution lon/lat grid. The grid only prunes: every query has
//! an exact answer identical to a full scan of the class members.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ontology::{load_ontology, Equivalence, Ontology, OntologyError, TargetGraph};
use crate::rdf_read::{read_turtle, ReadError};
use crate::turtle::{Iri, PrefixTable, Term, WKGS};

/// Mean earth radius used for all distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const DEFAULT_CELL_DEG: f64 = 0.05;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("entity {0} has no wkgs:spatialObject")]
    MissingGeometry(String),
    #[error("entity {entity} points to geometry {geometry}, which has no geo:asWKT")]
    DanglingGeometry { entity: String, geometry: String },
    #[error("{subject}: cannot read WKT point {text:?}")]
    InvalidWkt { subject: String, text: String },
    #[error("typed subject {0} is not a wkg: entity id")]
    BadEntityIri(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("no entity is labelled {0:?}")]
    UnknownLabel(String),
    #[error("label {label:?} is ambiguous; candidates: {}", ids.iter().map(u64::to_string).collect::<Vec<_>>().join(", "))]
    AmbiguousLabel { label: String, ids: Vec<u64> },
    #[error("unknown external class `{0}`")]
    UnknownExternalClass(String),
    #[error("external class `{0}` exists in both Wikidata and DBpedia; use wd: or dbo:")]
    AmbiguousExternalClass(String),
    #[error("point ({lon}, {lat}) is outside the valid coordinate range")]
    InvalidPoint { lon: f64, lat: f64 },
    #[error("radius must be a non-negative number of metres, got {0}")]
    InvalidRadius(f64),
    #[error("grid cell size {0}° must divide 360 evenly")]
    InvalidCellSize(f64),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Read(#[from] ReadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialPoint {
    pub lon: f64,
    pub lat: f64,
}

impl SpatialPoint {
    pub fn new(lon: f64, lat: f64) -> Result<SpatialPoint, QueryError> {
        if (-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat) {
            Ok(SpatialPoint { lon, lat })
        } else {
            Err(QueryError::InvalidPoint { lon, lat })
        }
    }

    /// Reads `Point(lon lat)`; the keyword is case-insensitive.
    pub fn from_wkt(text: &str) -> Option<SpatialPoint> {
        let t = text.trim();
        let head = t.get(..5)?;
        if !head.eq_ignore_ascii_case("point") {
            return None;
        }
        let inner = t[5..].trim_start().strip_prefix('(')?.strip_suffix(')')?;
        let mut parts = inner.split_whitespace();
        let lon = parts.next()?.parse().ok()?;
        let lat = parts.next()?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        SpatialPoint::new(lon, lat).ok()
    }
}

impl fmt::Display for SpatialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({} {})", self.lon, self.lat)
    }
}

/// Great-circle distance in metres (haversine, spherical earth).
pub fn haversine_m(a: SpatialPoint, b: SpatialPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let s_phi = (dphi / 2.0).sin();
    let s_lambda = (dlambda / 2.0).sin();
    let h = s_phi * s_phi + phi1.cos() * phi2.cos() * s_lambda * s_lambda;
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredEntity {
    pub id: u64,
    /// Class local names, sorted.
    pub types: Vec<String>,
    pub label: Option<String>,
    /// Full IRI of the OSM node.
    pub osm_link: Option<String>,
    pub point: SpatialPoint,
}

/// Query anchor: an entity found by exact label, or a raw point.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    Label(String),
    Point(SpatialPoint),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: u64,
    pub label: Option<String>,
    pub point: SpatialPoint,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleRow {
    pub id: u64,
    /// Class local name through which the entity matched.
    pub class: String,
    pub osm_link: String,
    pub label: Option<String>,
}

/// `(distance, id)` with a total order, largest first in a `BinaryHeap`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist: f64,
    id: u64,
    idx: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.id.cmp(&other.id))
    }
}

#[derive(Debug, Clone)]
struct Grid {
    cell: f64,
    cols: i64,
    rows: i64,
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl Grid {
    fn new(cell_deg: f64) -> Result<Grid, QueryError> {
        let cols = (360.0 / cell_deg).round();
        if !(cell_deg > 0.0) || cols < 2.0 || (cols * cell_deg - 360.0).abs() > 1e-9 || cols as i64 % 2 != 0
        {
            return Err(QueryError::InvalidCellSize(cell_deg));
        }
        let cols = cols as i64;
        Ok(Grid {
            cell: 360.0 / cols as f64,
            cols,
            rows: cols / 2,
            cells: HashMap::new(),
        })
    }

    fn cell_of(&self, p: SpatialPoint) -> (i64, i64) {
        let row = (((p.lat + 90.0) / self.cell).floor() as i64).clamp(0, self.rows - 1);
        let col = (((p.lon + 180.0) / self.cell).floor() as i64).clamp(0, self.cols - 1);
        (row, col)
    }

    fn insert(&mut self, p: SpatialPoint, idx: u32) {
        let key = self.cell_of(p);
        self.cells.entry(key).or_default().push(idx);
    }

    fn cell(&self, row: i64, col: i64) -> &[u32] {
        self.cells
            .get(&(row, col.rem_euclid(self.cols)))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Lower bound on the distance from `p` (in cell `(r0, c0)`) to any
    /// point outside the square of cells within Chebyshev radius `ring`.
    fn unvisited_bound(&self, p: SpatialPoint, r0: i64, c0: i64, ring: i64) -> f64 {
        let south = if r0 - ring <= 0 {
            f64::INFINITY
        } else {
            let lat_lo = (r0 - ring) as f64 * self.cell - 90.0;
            (p.lat - lat_lo).to_radians() * EARTH_RADIUS_M
        };
        let north = if r0 + ring >= self.rows - 1 {
            f64::INFINITY
        } else {
            let lat_hi = (r0 + ring + 1) as f64 * self.cell - 90.0;
            (lat_hi - p.lat).to_radians() * EARTH_RADIUS_M
        };
        let across = if 2 * ring + 1 >= self.cols {
            f64::INFINITY
        } else {
            let lon_lo = (c0 - ring) as f64 * self.cell - 180.0;
            let lon_hi = (c0 + ring + 1) as f64 * self.cell - 180.0;
            let delta = (p.lon - lon_lo).min(lon_hi - p.lon).clamp(0.0, 90.0);
            // Distance to the great circle through the nearest unvisited meridian.
            (p.lat.to_radians().cos() * delta.to_radians().sin())
                .clamp(0.0, 1.0)
                .asin()
                * EARTH_RADIUS_M
        };
        south.min(north).min(across)
    }
}

/// Immutable store answering class, label, spatial and sampling queries.
#[derive(Debug, Clone)]
pub struct QueryStore {
    entities: Vec<StoredEntity>,
    type_ids: Vec<Vec<u32>>,
    class_names: Vec<String>,
    class_ids: HashMap<String, u32>,
    class_members: Vec<Vec<u32>>,
    labels: HashMap<String, Vec<u32>>,
    equivalents: BTreeMap<Equivalence, Vec<String>>,
    grid: Grid,
    ontology: Ontology,
}

#[derive(Default)]
struct Facts {
    types: BTreeSet<String>,
    label: Option<String>,
    geometry: Option<Iri>,
    osm_link: Option<String>,
    wkt: Option<String>,
}

/// Loads a KG document and its ontology with the default 0.05° grid.
pub fn load_store<K: Read, O: Read>(kg: K, ontology: O) -> Result<QueryStore, QueryError> {
    QueryStore::load(kg, ontology, DEFAULT_CELL_DEG)
}

impl QueryStore {
    pub fn load<K: Read, O: Read>(kg: K, ontology: O, cell_deg: f64) -> Result<QueryStore, QueryError> {
        let ontology = load_ontology(ontology)?;
        let prefixes = PrefixTable::worldkg();
        let mut facts: HashMap<Iri, Facts> = HashMap::new();
        for triple in read_turtle(kg) {
            let t = triple?;
            let p = &t.predicate;
            match &t.object {
                Term::Iri(o) if p.is("rdf", "type") => {
                    if let Some(class) = o.local_in("wkgs") {
                        facts.entry(t.subject).or_default().types.insert(class.to_owned());
                    }
                }
                Term::Literal(l) if p.is("rdfs", "label") => {
                    facts.entry(t.subject).or_default().label = Some(l.value.clone());
                }
                Term::Iri(o) if p.is("wkgs", "spatialObject") => {
                    facts.entry(t.subject).or_default().geometry = Some(o.clone());
                }
                Term::Iri(o) if p.is("wkgs", "osmLink") => {
                    let link = prefixes.expand(o).unwrap_or_default();
                    facts.entry(t.subject).or_default().osm_link = Some(link);
                }
                Term::Literal(l) if p.is("geo", "asWKT") => {
                    facts.entry(t.subject).or_default().wkt = Some(l.value.clone());
                }
                _ => {}
            }
        }

        let mut entities = Vec::new();
        for (subject, f) in &facts {
            if f.types.is_empty() {
                continue;
            }
            let name = describe(subject);
            let id = subject
                .local_in("wkg")
                .and_then(|l| l.parse::<u64>().ok())
                .ok_or_else(|| QueryError::BadEntityIri(name.clone()))?;
            let geometry = f
                .geometry
                .as_ref()
                .ok_or_else(|| QueryError::MissingGeometry(name.clone()))?;
            let wkt = facts
                .get(geometry)
                .and_then(|g| g.wkt.as_ref())
                .ok_or_else(|| QueryError::DanglingGeometry {
                    entity: name.clone(),
                    geometry: describe(geometry),
                })?;
            let point = SpatialPoint::from_wkt(wkt).ok_or_else(|| QueryError::InvalidWkt {
                subject: describe(geometry),
                text: wkt.clone(),
            })?;
            entities.push(StoredEntity {
                id,
                types: f.types.iter().cloned().collect(),
                label: f.label.clone(),
                osm_link: f.osm_link.clone(),
                point,
            });
        }
        QueryStore::from_entities(entities, ontology, cell_deg)
    }

    /// Builds the indexes over already-materialized entities.
    pub fn from_entities(
        mut entities: Vec<StoredEntity>,
        ontology: Ontology,
        cell_deg: f64,
    ) -> Result<QueryStore, QueryError> {
        entities.sort_by_key(|e| e.id);
        let mut grid = Grid::new(cell_deg)?;
        let mut class_names: Vec<String> = ontology.classes().map(|c| c.local_name.clone()).collect();
        for e in &entities {
            class_names.extend(e.types.iter().cloned());
        }
        class_names.sort();
        class_names.dedup();
        let class_ids: HashMap<String, u32> = class_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let mut class_members = vec![Vec::new(); class_names.len()];
        let mut type_ids = Vec::with_capacity(entities.len());
        let mut labels: HashMap<String, Vec<u32>> = HashMap::new();
        for (idx, e) in entities.iter().enumerate() {
            let idx = idx as u32;
            let ids: Vec<u32> = e.types.iter().map(|t| class_ids[t]).collect();
            for &c in &ids {
                class_members[c as usize].push(idx);
            }
            type_ids.push(ids);
            if let Some(l) = &e.label {
                labels.entry(l.clone()).or_default().push(idx);
            }
            grid.insert(e.point, idx);
        }
        let equivalents = ontology
            .equivalence_index()
            .into_iter()
            .map(|(eq, classes)| (eq, classes.into_iter().map(|c| c.local_name.clone()).collect()))
            .collect();
        Ok(QueryStore {
            entities,
            type_ids,
            class_names,
            class_ids,
            class_members,
            labels,
            equivalents,
            grid,
            ontology,
        })
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entities(&self) -> &[StoredEntity] {
        &self.entities
    }

    pub fn entity(&self, id: u64) -> Option<&StoredEntity> {
        self.entities
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entities[i])
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    /// Accepts `Restaurant`, `wkgs:Restaurant` or the full schema IRI.
    pub fn resolve_class(&self, name: &str) -> Result<&str, QueryError> {
        let local = name
            .strip_prefix(WKGS)
            .or_else(|| name.strip_prefix("wkgs:"))
            .unwrap_or(name);
        self.class_ids
            .get_key_value(local)
            .map(|(k, _)| k.as_str())
            .ok_or_else(|| QueryError::UnknownClass(name.to_owned()))
    }

    fn class_id(&self, name: &str) -> Result<u32, QueryError> {
        let local = self.resolve_class(name)?;
        Ok(self.class_ids[local])
    }

    /// Entity ids typed with `class`, ascending.
    pub fn class_members(&self, class: &str) -> Result<Vec<u64>, QueryError> {
        let c = self.class_id(class)?;
        Ok(self.class_members[c as usize]
            .iter()
            .map(|&i| self.entities[i as usize].id)
            .collect())
    }

    /// Per-class member counts, including classes with no members.
    pub fn class_sizes(&self) -> BTreeMap<&str, usize> {
        self.class_names
            .iter()
            .zip(&self.class_members)
            .map(|(n, m)| (n.as_str(), m.len()))
            .collect()
    }

    pub fn find_by_label(&self, label: &str) -> Vec<&StoredEntity> {
        self.labels
            .get(label)
            .map(|ix| ix.iter().map(|&i| &self.entities[i as usize]).collect())
            .unwrap_or_default()
    }

    fn resolve_anchor(&self, anchor: &Anchor) -> Result<(SpatialPoint, Option<u32>), QueryError> {
        match anchor {
            Anchor::Point(p) => Ok((*p, None)),
            Anchor::Label(label) => match self.labels.get(label).map(Vec::as_slice) {
                None | Some([]) => Err(QueryError::UnknownLabel(label.clone())),
                Some([idx]) => Ok((self.entities[*idx as usize].point, Some(*idx))),
                Some(many) => Err(QueryError::AmbiguousLabel {
                    label: label.clone(),
                    ids: many.iter().map(|&i| self.entities[i as usize].id).collect(),
                }),
            },
        }
    }

    fn neighbor(&self, c: Candidate) -> Neighbor {
        let e = &self.entities[c.idx as usize];
        Neighbor {
            id: e.id,
            label: e.label.clone(),
            point: e.point,
            distance_m: c.dist,
        }
    }

    fn candidate(&self, idx: u32, from: SpatialPoint) -> Candidate {
        let e = &self.entities[idx as usize];
        Candidate {
            dist: haversine_m(from, e.point),
            id: e.id,
            idx,
        }
    }

    /// The `k` members of `class` closest to the anchor, nearest first, ties
    /// by ascending id. A label anchor is excluded from its own result.
    pub fn nearest_k(&self, anchor: &Anchor, class: &str, k: usize) -> Result<Vec<Neighbor>, QueryError> {
        let class = self.class_id(class)?;
        let (center, exclude) = self.resolve_anchor(anchor)?;
        Ok(self.nearest_grid(center, class, k, exclude))
    }

    /// Same contract as [`nearest_k`](Self::nearest_k), by full scan.
    pub fn nearest_k_scan(&self, anchor: &Anchor, class: &str, k: usize) -> Result<Vec<Neighbor>, QueryError> {
        let class = self.class_id(class)?;
        let (center, exclude) = self.resolve_anchor(anchor)?;
        Ok(self.nearest_scan(center, class, k, exclude))
    }

    fn nearest_scan(&self, center: SpatialPoint, class: u32, k: usize, exclude: Option<u32>) -> Vec<Neighbor> {
        let mut all: Vec<Candidate> = self.class_members[class as usize]
            .iter()
            .filter(|&&i| Some(i) != exclude)
            .map(|&i| self.candidate(i, center))
            .collect();
        all.sort_unstable();
        all.truncate(k);
        all.into_iter().map(|c| self.neighbor(c)).collect()
    }

    fn nearest_grid(&self, center: SpatialPoint, class: u32, k: usize, exclude: Option<u32>) -> Vec<Neighbor> {
        let population = self.class_members[class as usize].len();
        if k == 0 || population == 0 {
            return Vec::new();
        }
        let grid = &self.grid;
        let (r0, c0) = grid.cell_of(center);
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut cells_visited = 0usize;
        let mut ring = 0i64;
        loop {
            if 2 * ring + 1 >= grid.cols || cells_visited > population + 64 {
                return self.nearest_scan(center, class, k, exclude);
            }
            for dr in -ring..=ring {
                let row = r0 + dr;
                if row < 0 || row >= grid.rows {
                    continue;
                }
                let edge = dr.abs() == ring;
                let step = if edge || ring == 0 { 1 } else { 2 * ring as usize };
                for dc in (-ring..=ring).step_by(step.max(1)) {
                    cells_visited += 1;
                    for &idx in grid.cell(row, c0 + dc) {
                        if Some(idx) == exclude || !self.type_ids[idx as usize].contains(&class) {
                            continue;
                        }
                        heap.push(self.candidate(idx, center));
                        if heap.len() > k {
                            heap.pop();
                        }
                    }
                }
            }
            let bound = grid.unvisited_bound(center, r0, c0, ring);
            if bound.is_infinite() {
                break;
            }
            let safe = bound * (1.0 - 1e-9) - 1e-6;
            if heap.len() == k && heap.peek().is_some_and(|worst| worst.dist < safe) {
                break;
            }
            ring += 1;
        }
        let mut out = heap.into_vec();
        out.sort_unstable();
        out.into_iter().map(|c| self.neighbor(c)).collect()
    }

    /// Members of `class` within `radius_m` of `center`, nearest first.
    pub fn within_radius(
        &self,
        center: SpatialPoint,
        radius_m: f64,
        class: &str,
    ) -> Result<Vec<Neighbor>, QueryError> {
        if !(radius_m >= 0.0) || radius_m.is_infinite() {
            return Err(QueryError::InvalidRadius(radius_m));
        }
        let class = self.class_id(class)?;
        let members = &self.class_members[class as usize];
        let mut hits: Vec<Candidate> = match self.radius_cells(center, radius_m) {
            Some(cells) if cells.len() <= members.len() => cells
                .into_iter()
                .flat_map(|(r, c)| self.grid.cell(r, c).iter().copied())
                .filter(|&i| self.type_ids[i as usize].contains(&class))
                .map(|i| self.candidate(i, center))
                .filter(|c| c.dist <= radius_m)
                .collect(),
            _ => members
                .iter()
                .map(|&i| self.candidate(i, center))
                .filter(|c| c.dist <= radius_m)
                .collect(),
        };
        hits.sort_unstable();
        Ok(hits.into_iter().map(|c| self.neighbor(c)).collect())
    }

    /// Same contract as [`within_radius`](Self::within_radius), by full scan.
    pub fn within_radius_scan(
        &self,
        center: SpatialPoint,
        radius_m: f64,
        class: &str,
    ) -> Result<Vec<Neighbor>, QueryError> {
        if !(radius_m >= 0.0) || radius_m.is_infinite() {
            return Err(QueryError::InvalidRadius(radius_m));
        }
        let class = self.class_id(class)?;
        let mut hits: Vec<Candidate> = self.class_members[class as usize]
            .iter()
            .map(|&i| self.candidate(i, center))
            .filter(|c| c.dist <= radius_m)
            .collect();
        hits.sort_unstable();
        Ok(hits.into_iter().map(|c| self.neighbor(c)).collect())
    }

    /// Cells whose area may intersect the spherical cap, or `None` when the
    /// cap covers every column.
    fn radius_cells(&self, center: SpatialPoint, radius_m: f64) -> Option<Vec<(i64, i64)>> {
        let g = &self.grid;
        let angle = (radius_m / EARTH_RADIUS_M).to_degrees();
        let (lat_min, lat_max) = (center.lat - angle, center.lat + angle);
        if angle >= 90.0 || lat_max >= 90.0 || lat_min <= -90.0 {
            return None;
        }
        let ratio = angle.to_radians().sin() / center.lat.to_radians().cos();
        if ratio >= 1.0 {
            return None;
        }
        let dlon = ratio.asin().to_degrees();
        let col_lo = ((center.lon - dlon + 180.0) / g.cell).floor() as i64 - 1;
        let col_hi = ((center.lon + dlon + 180.0) / g.cell).floor() as i64 + 1;
        if col_hi - col_lo + 1 >= g.cols {
            return None;
        }
        let row_lo = (((lat_min + 90.0) / g.cell).floor() as i64 - 1).max(0);
        let row_hi = (((lat_max + 90.0) / g.cell).floor() as i64 + 1).min(g.rows - 1);
        let cells = (row_hi - row_lo + 1) * (col_hi - col_lo + 1);
        if cells > self.entities.len() as i64 + 64 {
            return None;
        }
        Some(
            (row_lo..=row_hi)
                .flat_map(|r| (col_lo..=col_hi).map(move |c| (r, c)))
                .collect(),
        )
    }

    /// External classes matching a token such as `Q556186`, `wd:Q556186`,
    /// `dbo:Tower` or a full IRI.
    fn resolve_external(&self, token: &str) -> Result<&Equivalence, QueryError> {
        let unknown = || QueryError::UnknownExternalClass(token.to_owned());
        let wanted: Option<(TargetGraph, String)> = match PrefixTable::worldkg().compact(token) {
            Iri::Prefixed { prefix, local } => {
                TargetGraph::from_prefix(&prefix).map(|g| (g, local))
            }
            Iri::Full(_) => None,
        };
        let wanted = wanted.or_else(|| {
            token
                .split_once(':')
                .and_then(|(p, l)| TargetGraph::from_prefix(p).map(|g| (g, l.to_owned())))
        });
        if let Some((graph, id)) = wanted {
            return self
                .equivalents
                .keys()
                .find(|e| e.graph == graph && e.class_id == id)
                .ok_or_else(unknown);
        }
        let matches: Vec<&Equivalence> = self
            .equivalents
            .keys()
            .filter(|e| e.class_id == token)
            .collect();
        match matches.as_slice() {
            [] => Err(unknown()),
            [one] => Ok(one),
            _ => Err(QueryError::AmbiguousExternalClass(token.to_owned())),
        }
    }

    /// Uniform sample without replacement of the entities typed with any
    /// class equivalent to `external_class`. Deterministic for a seed.
    pub fn sample_entities(&self, external_class: &str, n: usize, seed: u64) -> Result<Vec<SampleRow>, QueryError> {
        let eq = self.resolve_external(external_class)?;
        let classes: Vec<u32> = self.equivalents[eq]
            .iter()
            .filter_map(|c| self.class_ids.get(c).copied())
            .collect();
        let mut population: Vec<u32> = classes
            .iter()
            .flat_map(|&c| self.class_members[c as usize].iter().copied())
            .collect();
        population.sort_unstable();
        population.dedup();

        let amount = n.min(population.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = rand::seq::index::sample(&mut rng, population.len(), amount);
        Ok(picked
            .into_iter()
            .map(|i| {
                let idx = population[i];
                let e = &self.entities[idx as usize];
                let class = self.type_ids[idx as usize]
                    .iter()
                    .find(|t| classes.contains(t))
                    .map(|&t| self.class_names[t as usize].clone())
                    .unwrap_or_default();
                SampleRow {
                    id: e.id,
                    class,
                    osm_link: e.osm_link.clone().unwrap_or_default(),
                    label: e.label.clone(),
                }
            })
            .collect())
    }
}

fn describe(iri: &Iri) -> String {
    match iri {
        Iri::Prefixed { prefix, local } => format!("{prefix}:{local}"),
        Iri::Full(s) => format!("<{s}>"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lon: f64, lat: f64) -> SpatialPoint {
        SpatialPoint::new(lon, lat).unwrap()
    }

    #[test]
    fn haversine_identity_and_quarter_circle() {
        assert_eq!(haversine_m(p(13.4, 52.5), p(13.4, 52.5)), 0.0);
        let quarter = std::f64::consts::PI * EARTH_RADIUS_M / 2.0;
        let d = haversine_m(p(0.0, 0.0), p(90.0, 0.0));
        assert!((d - 10_007_543.4).abs() <= 0.1, "{d}");
        assert!((d - quarter).abs() < 1e-6);
    }

    #[test]
    fn haversine_antipodes() {
        let d = haversine_m(p(0.0, 0.0), p(180.0, 0.0));
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 1e-6);
    }

    #[test]
    fn wkt_points() {
        assert_eq!(SpatialPoint::from_wkt("Point(8.7938916 53.073794)"), Some(p(8.7938916, 53.073794)));
        assert_eq!(SpatialPoint::from_wkt("POINT (1 2)"), Some(p(1.0, 2.0)));
        assert_eq!(SpatialPoint::from_wkt("Point(1)"), None);
        assert_eq!(SpatialPoint::from_wkt("Point(200 0)"), None);
        assert_eq!(SpatialPoint::from_wkt("LineString(1 2, 3 4)"), None);
    }

    #[test]
    fn invalid_cell_sizes() {
        assert!(Grid::new(0.07).is_err());
        assert!(Grid::new(0.0).is_err());
        assert!(Grid::new(-1.0).is_err());
        assert!(Grid::new(0.05).is_ok());
        assert!(Grid::new(1.0).is_ok());
    }

    #[test]
    fn bound_never_exceeds_true_distance_to_outside_points() {
        let g = Grid::new(1.0).unwrap();
        let center = p(10.3, 60.7);
        let (r0, c0) = g.cell_of(center);
        for ring in 0..5 {
            let bound = g.unvisited_bound(center, r0, c0, ring);
            for lat in (-89..=89).step_by(2) {
                for lon in (-179..=179).step_by(3) {
                    let q = p(lon as f64 + 0.5, lat as f64 + 0.25);
                    let (r, c) = g.cell_of(q);
                    let dc = (c - c0).rem_euclid(g.cols);
                    let dc = dc.min(g.cols - dc);
                    if (r - r0).abs() > ring || dc > ring {
                        assert!(haversine_m(center, q) >= bound - 1e-6, "ring {ring} q {q:?}");
                    }
                }
            }
        }
    }
}
