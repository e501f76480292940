//! Config-driven stages: generate, render, tile and evaluate.
//!
//! Output layout below the configured directory:
//! `scene/` (scene file, lots, stage summary), `views/` (rendered views),
//! `dataset/` (patches and manifest), `evaluate.json` and `report.json`.

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{build_dataset, find_views};
use crate::geodata::{parse_document, parse_terrain, BuildingAttributeRecord, GeodataDocument};
use crate::layout::{extract_plots, layout_lots, Lot};
use crate::materials::MaterialLibrary;
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::render::{write_view, Renderer};
use crate::scenegen::{generate_scene, read_scene, write_scene, SceneInputs};
use crate::seed::Seed;

pub use config::{EvaluateConfig, FeatureOverride, InputsConfig, LandUseOverride, OutputConfig, PipelineConfig, RenderConfig, DEFAULT_LATITUDE};

pub const REPORT_NAME: &str = "report.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Generate,
    Render,
    Tile,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Generate => "generate",
            Stage::Render => "render",
            Stage::Tile => "tile",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Generate,
    Render,
    Tile,
    Evaluate,
    All,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

fn fail(stage: Stage) -> impl Fn(&dyn fmt::Display) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub seconds: f64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    /// SHA-256 of every output file, keyed by path relative to the output
    /// directory.
    pub artifacts: BTreeMap<String, String>,
}

/// Summary written by the generate stage and read back by later stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    /// Latitude of the network's geographic origin, when it had one.
    pub latitude: Option<f64>,
    pub counts: BTreeMap<String, u64>,
}

pub fn scene_dir(out: &Path) -> PathBuf {
    out.join("scene")
}

pub fn scene_file(out: &Path) -> PathBuf {
    scene_dir(out).join("scene.gtx")
}

pub fn views_dir(out: &Path) -> PathBuf {
    out.join("views")
}

pub fn dataset_dir(out: &Path) -> PathBuf {
    out.join("dataset")
}

fn fresh_dir(dir: &Path, stage: Stage) -> Result<(), PipelineError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| fail(stage)(&format!("{}: {e}", dir.display())))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| fail(stage)(&format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T, stage: Stage) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| fail(stage)(&e))? + "\n";
    std::fs::write(path, text).map_err(|e| fail(stage)(&format!("{}: {e}", path.display())))
}

fn read_doc(path: &Path, stage: Stage) -> Result<GeodataDocument, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| fail(stage)(&format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| fail(stage)(&format!("{}: {e}", path.display())))
}

/// Ingest, layout, scene generation and material randomization.
pub fn generate(cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let st = Stage::Generate;
    let f = fail(st);
    let start = Instant::now();
    let seed = Seed(cfg.seed);
    let Some(network_path) = &cfg.inputs.network else {
        return Err(PipelineError::Config(vec!["inputs.network is required to generate a scene".into()]));
    };
    let doc = read_doc(network_path, st)?;
    let (network, parse) = doc.street_network().map_err(|e| f(&format!("{}: {e}", network_path.display())))?;
    log::info!(
        "network: {} nodes, {} edges ({} merged nodes, {} dropped edges, {} unknown road classes)",
        network.nodes.len(),
        network.edges.len(),
        parse.merged_nodes,
        parse.dropped_edges,
        parse.unknown_road_classes
    );
    let mut priors: Vec<BuildingAttributeRecord> = doc.buildings.clone();
    if let Some(p) = &cfg.inputs.attributes {
        priors.extend(read_doc(p, st)?.buildings);
    }
    let terrain = match &cfg.inputs.terrain {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| f(&format!("{}: {e}", p.display())))?;
            Some(parse_terrain(&text).map_err(|e| f(&format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let library = match &cfg.inputs.materials {
        Some(p) => MaterialLibrary::load(p).map_err(|errs| {
            PipelineError::Config(errs.iter().map(|e| format!("{}: {e}", p.display())).collect())
        })?,
        None => MaterialLibrary::builtin(),
    };
    let coverage = library.validate_coverage();
    if !coverage.is_empty() {
        return Err(PipelineError::Config(coverage.iter().map(ToString::to_string).collect()));
    }

    let table = cfg.land_use_table();
    let features = cfg.feature_table();
    let extraction = extract_plots(&network).map_err(|e| f(&e))?;
    log::info!(
        "plots: {} ({} irregular faces, {} collapsed, {} unclassified)",
        extraction.plots.len(),
        extraction.faces.irregular_faces,
        extraction.collapsed_plots,
        extraction.unclassified_plots
    );
    let layout = layout_lots(extraction.plots.clone(), &table, seed.child("layout")).map_err(|e| f(&e))?;
    let inputs = SceneInputs {
        layout: &layout,
        network: &extraction.network,
        terrain: terrain.as_ref(),
        priors: &priors,
        land_use: &table,
        features: &features,
        library: &library,
    };
    let mut scene = generate_scene(&inputs, seed.child("scene")).map_err(|e| f(&e))?;
    let [lo, hi] = cfg.render.hue_range;
    scene.randomize_materials((lo, hi), &mut seed.child("materials").rng());

    let dir = scene_dir(&cfg.output.dir);
    fresh_dir(&dir, st)?;
    let file = std::fs::File::create(scene_file(&cfg.output.dir)).map_err(|e| f(&e))?;
    write_scene(&scene, std::io::BufWriter::new(file)).map_err(|e| f(&e))?;
    let lots: Vec<&Lot> = layout.lots.iter().collect();
    write_json(&dir.join("lots.json"), &lots, st)?;

    let s = &scene.stats;
    let counts: BTreeMap<String, u64> = [
        ("plots", layout.stats.plots),
        ("lots", layout.stats.lots),
        ("green_lots", layout.stats.green_lots),
        ("undersized_plots", layout.stats.undersized_plots),
        ("oversized_lots", layout.stats.oversized_lots),
        ("buildings", s.buildings),
        ("skipped_buildings", s.skipped_buildings),
        ("trees", s.trees),
        ("road_segments", s.road_segments),
        ("triangles", s.triangles),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v as u64))
    .collect();
    let summary = GenerateSummary { latitude: doc.origin.map(|o| o.lat), counts: counts.clone() };
    write_json(&dir.join("generate.json"), &summary, st)?;
    Ok(StageReport { stage: st, seconds: start.elapsed().as_secs_f64(), counts })
}

/// Renders the configured number of views of the generated scene.
pub fn render(cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let st = Stage::Render;
    let f = fail(st);
    let start = Instant::now();
    let out = &cfg.output.dir;
    let path = scene_file(out);
    let file = std::fs::File::open(&path).map_err(|e| f(&format!("{}: {e}; run generate first", path.display())))?;
    let scene = read_scene(std::io::BufReader::new(file)).map_err(|e| f(&e))?;
    let summary: Option<GenerateSummary> = std::fs::read_to_string(scene_dir(out).join("generate.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let settings = cfg.render.settings(summary.and_then(|s| s.latitude));
    let errs = settings.validate();
    if !errs.is_empty() {
        return Err(PipelineError::Config(errs));
    }
    let dir = views_dir(out);
    fresh_dir(&dir, st)?;
    let renderer = Renderer::new(&scene);
    let parent = Seed(cfg.seed).child("render");
    let mut building_pixels = 0u64;
    for i in 0..cfg.render.n_views {
        let view = renderer.render_view(parent, i, &settings).map_err(|e| f(&e))?;
        building_pixels += view.labels.as_raw().iter().filter(|&&c| c == crate::SemanticClass::Building.id()).count() as u64;
        write_view(&view, &dir, &cfg.output.scene_name).map_err(|e| f(&e))?;
        log::info!("view {i}: sun elevation {:.1}, off-nadir {:.1}", view.meta.sun.elevation, view.meta.camera.off_nadir);
    }
    let counts = BTreeMap::from([("views".to_string(), cfg.render.n_views), ("building_pixels".to_string(), building_pixels)]);
    Ok(StageReport { stage: st, seconds: start.elapsed().as_secs_f64(), counts })
}

/// Tiles rendered views into patches with a view-level split.
pub fn tile(cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let st = Stage::Tile;
    let f = fail(st);
    let start = Instant::now();
    let out = &cfg.output.dir;
    let views = find_views(&views_dir(out)).map_err(|e| f(&format!("{e}; run render first")))?;
    let dir = dataset_dir(out);
    fresh_dir(&dir, st)?;
    let (_, summary) = build_dataset(&views, &dir, &cfg.output.scene_name, &cfg.dataset, Seed(cfg.seed).child("split")).map_err(|e| f(&e))?;
    let counts = BTreeMap::from([
        ("views".to_string(), summary.views as u64),
        ("patches".to_string(), summary.patches as u64),
        ("train_patches".to_string(), summary.train_patches as u64),
        ("val_patches".to_string(), summary.val_patches as u64),
    ]);
    Ok(StageReport { stage: st, seconds: start.elapsed().as_secs_f64(), counts })
}

fn label_files(dir: &Path) -> std::io::Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        let Some(name) = p.file_name().and_then(|n| n.to_str()) else { continue };
        if name.ends_with(".rgb.png") || !name.ends_with(".png") {
            continue;
        }
        let key = name.strip_suffix(".label.png").unwrap_or(name.strip_suffix(".png").unwrap_or(name)).to_string();
        out.insert(key, p);
    }
    Ok(out)
}

/// Compares predicted masks against reference masks. Files pair up by name,
/// ignoring a `.label` suffix.
pub fn evaluate_masks(pred: &Path, gt: &Path, positive: u8) -> Result<(MetricsReport, usize), String> {
    let load = |p: &Path| image::open(p).map(|i| i.to_luma8()).map_err(|e| format!("{}: {e}", p.display()));
    let pairs: Vec<(PathBuf, PathBuf)> = if pred.is_file() && gt.is_file() {
        vec![(pred.to_path_buf(), gt.to_path_buf())]
    } else if pred.is_dir() && gt.is_dir() {
        let p = label_files(pred).map_err(|e| format!("{}: {e}", pred.display()))?;
        let g = label_files(gt).map_err(|e| format!("{}: {e}", gt.display()))?;
        let mut pairs = Vec::new();
        for (k, pp) in p {
            let gp = g.get(&k).ok_or_else(|| format!("no reference mask for {}", pp.display()))?;
            pairs.push((pp, gp.clone()));
        }
        pairs
    } else {
        return Err(format!("{} and {} must both be files or both directories", pred.display(), gt.display()));
    };
    if pairs.is_empty() {
        return Err(format!("no masks found in {}", pred.display()));
    }
    let mut cm = ConfusionMatrix::default();
    for (p, g) in &pairs {
        cm.accumulate_images(&load(p)?, &load(g)?, positive).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok((cm.report(), pairs.len()))
}

pub fn evaluate(cfg: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let st = Stage::Evaluate;
    let start = Instant::now();
    let Some(pred) = &cfg.evaluate.pred else {
        return Err(PipelineError::Config(vec!["evaluate.pred is required to evaluate".into()]));
    };
    let gt = cfg.evaluate.gt.clone().unwrap_or_else(|| views_dir(&cfg.output.dir));
    let (report, files) = evaluate_masks(pred, &gt, cfg.evaluate.positive_class).map_err(|e| fail(st)(&e))?;
    log::info!("iou {:.4} oa {:.4} f1 {:.4} over {} pixels", report.iou, report.oa, report.f1, report.pixels);
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| fail(st)(&e))?;
    write_json(&cfg.output.dir.join("evaluate.json"), &report, st)?;
    let counts = BTreeMap::from([("masks".to_string(), files as u64), ("pixels".to_string(), report.pixels)]);
    Ok(StageReport { stage: st, seconds: start.elapsed().as_secs_f64(), counts })
}

fn hash_tree(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            hash_tree(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
            if rel == REPORT_NAME {
                continue;
            }
            out.insert(rel, hex::encode(Sha256::digest(std::fs::read(&p)?)));
        }
    }
    Ok(())
}

/// SHA-256 of every file below `root` except the run report.
pub fn artifact_hashes(root: &Path) -> std::io::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if root.is_dir() {
        hash_tree(root, root, &mut out)?;
    }
    Ok(out)
}

/// Validates the config, runs the requested stages in order and writes the
/// run report. `all` evaluates only when predictions are configured.
pub fn run(cfg: &PipelineConfig, command: Command) -> Result<RunReport, PipelineError> {
    let mut errs = cfg.validate();
    if matches!(command, Command::Generate | Command::All) && cfg.inputs.network.is_none() {
        errs.push("inputs.network is required to generate a scene".into());
    }
    if command == Command::Evaluate && cfg.evaluate.pred.is_none() {
        errs.push("evaluate.pred is required to evaluate".into());
    }
    if !errs.is_empty() {
        return Err(PipelineError::Config(errs));
    }
    let stages: &[Stage] = match command {
        Command::Generate => &[Stage::Generate],
        Command::Render => &[Stage::Render],
        Command::Tile => &[Stage::Tile],
        Command::Evaluate => &[Stage::Evaluate],
        Command::All => &[Stage::Generate, Stage::Render, Stage::Tile, Stage::Evaluate],
    };
    let mut reports = Vec::new();
    for &stage in stages {
        let r = match stage {
            Stage::Generate => generate(cfg)?,
            Stage::Render => render(cfg)?,
            Stage::Tile => tile(cfg)?,
            Stage::Evaluate if cfg.evaluate.pred.is_none() => {
                log::info!("evaluate: skipped, no predictions configured");
                continue;
            }
            Stage::Evaluate => evaluate(cfg)?,
        };
        log::info!("{stage}: {:.2} s {:?}", r.seconds, r.counts);
        reports.push(r);
    }
    let artifacts = artifact_hashes(&cfg.output.dir).map_err(|e| fail(*stages.last().unwrap())(&e))?;
    let report = RunReport { command, seed: cfg.seed, stages: reports, artifacts };
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| fail(*stages.last().unwrap())(&e))?;
    write_json(&cfg.output.dir.join(REPORT_NAME), &report, *stages.last().unwrap())?;
    Ok(report)
}
