use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use worldkg::geo_query::{load_store, Anchor, Neighbor, QueryStore, SampleRow, SpatialPoint};
use worldkg::kg_builder::{
    build_aligned_ontology, build_kg_file, run_pipeline, write_ontology_file, KG_FILE,
    ONTOLOGY_FILE,
};
use worldkg::ontology::load_ontology;
use worldkg::stats::compute_stats;
use worldkg::validate::validate_kg;

#[derive(Parser)]
#[command(name = "worldkg", version, about = "Build and query a geographic knowledge graph from OpenStreetMap nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Induce the ontology from map features and attach alignments.
    BuildOntology {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        alignments: PathBuf,
        /// Output file, or a directory to write ontology.ttl into.
        #[arg(long)]
        out: PathBuf,
    },
    /// Map OSM nodes to KG entities.
    BuildKg(BuildKgArgs),
    /// Graph statistics.
    Stats {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Spatial queries.
    Query {
        #[command(subcommand)]
        mode: QueryMode,
    },
    /// Seeded uniform sample of entities equivalent to an external class.
    Sample {
        #[command(flatten)]
        input: GraphInput,
        /// External class: Q556186, wd:Q556186, dbo:Tower or a full IRI.
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Reparse a Turtle file and check its structure.
    Validate {
        #[arg(long)]
        kg: Option<PathBuf>,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct BuildKgArgs {
    #[arg(long)]
    osm: PathBuf,
    /// A previously built ontology.ttl.
    #[arg(long, conflicts_with_all = ["features", "alignments"])]
    ontology: Option<PathBuf>,
    /// Build the ontology on the fly (needs --alignments too).
    #[arg(long, requires = "alignments")]
    features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    alignments: Option<PathBuf>,
    /// Output kg.ttl path or directory. With --features both ontology.ttl
    /// and kg.ttl go into this directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct GraphInput {
    #[arg(long)]
    kg: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
}

#[derive(Subcommand)]
enum QueryMode {
    /// The k nearest entities of a class.
    Nearest {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        class: String,
        /// Anchor entity, matched exactly on its label.
        #[arg(long, conflicts_with = "point", required_unless_present = "point")]
        label: Option<String>,
        /// Anchor point as LON,LAT.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Option<SpatialPoint>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Every entity of a class within a radius of a point.
    Radius {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        class: String,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: SpatialPoint,
        #[arg(long)]
        radius_m: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Geojson,
}

fn parse_point(s: &str) -> Result<SpatialPoint, String> {
    let (lon, lat) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LON,LAT, got `{s}`"))?;
    let lon: f64 = lon.trim().parse().map_err(|_| format!("bad longitude `{lon}`"))?;
    let lat: f64 = lat.trim().parse().map_err(|_| format!("bad latitude `{lat}`"))?;
    SpatialPoint::new(lon, lat).map_err(|e| e.to_string())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn into_file(out: &Path, default_name: &str) -> PathBuf {
    if out.is_dir() {
        out.join(default_name)
    } else {
        out.to_owned()
    }
}

fn no_geojson(format: Format, command: &str) -> Result<()> {
    if format == Format::Geojson {
        bail!("--format geojson is only supported by `query`, not `{command}`");
    }
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Left-aligned columns separated by two spaces.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let mut l = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i + 1 == cells.len() {
                l.push_str(cell);
            } else {
                l.push_str(cell);
                l.extend(std::iter::repeat_n(' ', w - cell.chars().count() + 2));
            }
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn load(input: &GraphInput) -> Result<QueryStore> {
    let kg = open(&input.kg)?;
    let onto = open(&input.ontology)?;
    load_store(kg, onto).with_context(|| format!("cannot load {}", input.kg.display()))
}

fn render_neighbors(results: &[Neighbor], class: &str, format: Format) -> Result<()> {
    match format {
        Format::Text => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|n| {
                    vec![
                        n.label.clone().unwrap_or_default(),
                        n.id.to_string(),
                        format!("{:.3}", n.distance_m),
                    ]
                })
                .collect();
            print!("{}", table(&["name", "id", "distance_m"], &rows));
            Ok(())
        }
        Format::Json => print_json(&json!({ "class": class, "results": results })),
        Format::Geojson => {
            let features: Vec<_> = results
                .iter()
                .map(|n| {
                    json!({
                        "type": "Feature",
                        "id": n.id,
                        "geometry": { "type": "Point", "coordinates": [n.point.lon, n.point.lat] },
                        "properties": { "name": n.label, "class": class, "distance_m": n.distance_m },
                    })
                })
                .collect();
            print_json(&json!({ "type": "FeatureCollection", "features": features }))
        }
    }
}

fn render_sample(rows: &[SampleRow], format: Format) -> Result<()> {
    match format {
        Format::Json => print_json(&rows),
        _ => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.id.to_string(),
                        r.class.clone(),
                        r.osm_link.clone(),
                        r.label.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            print!("{}", table(&["id", "type", "osmid", "name"], &cells));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildOntology { features, alignments, out } => {
            let onto = build_aligned_ontology(&features, &alignments)?;
            let path = into_file(&out, ONTOLOGY_FILE);
            write_ontology_file(&onto, &path)?;
            println!("classes\t{}", onto.classes().count());
            println!("properties\t{}", onto.properties().count());
            println!("wrote\t{}", path.display());
        }
        Command::BuildKg(args) => {
            no_geojson(args.format, "build-kg")?;
            let report = match (&args.ontology, &args.features, &args.alignments) {
                (Some(onto_path), _, _) => {
                    let onto = load_ontology(open(onto_path)?)
                        .with_context(|| format!("cannot load {}", onto_path.display()))?;
                    build_kg_file(&args.osm, &onto, &into_file(&args.out, KG_FILE))?
                }
                (None, Some(features), Some(alignments)) => {
                    run_pipeline(&args.osm, features, alignments, &args.out)?
                }
                _ => bail!("build-kg needs --ontology, or --features with --alignments"),
            };
            match args.format {
                Format::Json => print_json(&report)?,
                _ => print!("{}", report.to_text()),
            }
        }
        Command::Stats { input, format } => {
            no_geojson(format, "stats")?;
            let stats = compute_stats(open(&input.kg)?, open(&input.ontology)?)?;
            match format {
                Format::Json => print_json(&stats)?,
                _ => print!("{}", stats.to_text()),
            }
        }
        Command::Query { mode } => match mode {
            QueryMode::Nearest { input, class, label, point, k, format } => {
                let store = load(&input)?;
                let anchor = match (label, point) {
                    (Some(l), _) => Anchor::Label(l),
                    (None, Some(p)) => Anchor::Point(p),
                    (None, None) => bail!("--label or --point is required"),
                };
                let results = store.nearest_k(&anchor, &class, k)?;
                render_neighbors(&results, store.resolve_class(&class)?, format)?;
            }
            QueryMode::Radius { input, class, point, radius_m, format } => {
                let store = load(&input)?;
                let results = store.within_radius(point, radius_m, &class)?;
                render_neighbors(&results, store.resolve_class(&class)?, format)?;
            }
        },
        Command::Sample { input, class, n, seed, format } => {
            no_geojson(format, "sample")?;
            let store = load(&input)?;
            let rows = store.sample_entities(&class, n, seed)?;
            render_sample(&rows, format)?;
        }
        Command::Validate { kg, ontology, format } => {
            no_geojson(format, "validate")?;
            let onto = match &ontology {
                Some(p) => Some(
                    load_ontology(open(p)?).with_context(|| format!("invalid ontology {}", p.display()))?,
                ),
                None => None,
            };
            let Some(kg) = kg else {
                let onto = onto.context("validate needs --kg or --ontology")?;
                let summary = json!({
                    "classes": onto.classes().count(),
                    "properties": onto.properties().count(),
                    "issues": Vec::<String>::new(),
                });
                match format {
                    Format::Json => print_json(&summary)?,
                    _ => println!(
                        "classes\t{}\nproperties\t{}\nissues\t0",
                        summary["classes"], summary["properties"]
                    ),
                }
                return Ok(());
            };
            let report = validate_kg(open(&kg)?, onto.as_ref())
                .with_context(|| format!("cannot parse {}", kg.display()))?;
            if !report.is_valid() {
                for issue in &report.issues {
                    eprintln!("{}: {issue}", kg.display());
                }
                bail!("{} issue(s) in {}", report.issues.len(), kg.display());
            }
            match format {
                Format::Json => print_json(&report)?,
                _ => print!("{report}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors often embed their source already.
            let mut msg = String::new();
            for cause in e.chain() {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&text);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
