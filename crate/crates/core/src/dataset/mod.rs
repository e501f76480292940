//! Overlapping patch tiling, view-level train/val split and the manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{GenericImageView, GrayImage, RgbImage};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::ViewMeta;
use crate::seed::Seed;

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("view {width}x{height} is smaller than the {patch} px patch")]
    ViewTooSmall { width: u32, height: u32, patch: u32 },
    #[error("invalid dataset settings: {0}")]
    Settings(String),
    #[error("split needs {0}")]
    Split(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Io { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSettings {
    pub patch: u32,
    pub overlap: f64,
    pub train_fraction: f64,
}

impl Default for DatasetSettings {
    fn default() -> Self {
        Self { patch: 512, overlap: 0.5, train_fraction: 0.8 }
    }
}

impl DatasetSettings {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.patch == 0 {
            errs.push("patch size must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.overlap) {
            errs.push(format!("overlap {} outside [0, 1)", self.overlap));
        } else if self.patch > 0 && self.stride() == 0 {
            errs.push(format!("overlap {} leaves no stride for {} px patches", self.overlap, self.patch));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            errs.push(format!("train_fraction {} must lie strictly between 0 and 1", self.train_fraction));
        }
        errs
    }

    pub fn stride(&self) -> u32 {
        (f64::from(self.patch) * (1.0 - self.overlap)).round() as u32
    }
}

/// Patch origins along one axis: a regular grid plus a final patch flush
/// with the far edge when the grid leaves a remainder.
pub fn tile_offsets(len: u32, patch: u32, stride: u32) -> Vec<u32> {
    if len < patch || stride == 0 {
        return Vec::new();
    }
    let mut out: Vec<u32> = (0..=(len - patch) / stride).map(|i| i * stride).collect();
    if out.last().is_some_and(|&o| o + patch < len) {
        out.push(len - patch);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub view_id: u64,
    pub x: u32,
    pub y: u32,
    pub rgb: RgbImage,
    pub label: GrayImage,
}

/// Cuts a view into patches; RGB and labels share every offset.
pub fn tile(rgb: &RgbImage, label: &GrayImage, view_id: u64, settings: &DatasetSettings) -> Result<Vec<Patch>, DatasetError> {
    let errs = settings.validate();
    if !errs.is_empty() {
        return Err(DatasetError::Settings(errs.join("; ")));
    }
    let (w, h) = rgb.dimensions();
    if label.dimensions() != (w, h) {
        return Err(DatasetError::Settings(format!("label {:?} and rgb {:?} differ in size", label.dimensions(), (w, h))));
    }
    let p = settings.patch;
    if w < p || h < p {
        return Err(DatasetError::ViewTooSmall { width: w, height: h, patch: p });
    }
    let xs = tile_offsets(w, p, settings.stride());
    let ys = tile_offsets(h, p, settings.stride());
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            out.push(Patch {
                view_id,
                x,
                y,
                rgb: rgb.view(x, y, p, p).to_image(),
                label: label.view(x, y, p, p).to_image(),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

/// Assigns whole views to splits. Views are visited in a seeded random order
/// and each goes to train when that brings the train patch count closer to
/// `train_fraction` of the total.
pub fn split_views(patch_counts: &BTreeMap<u64, usize>, train_fraction: f64, seed: Seed) -> Result<BTreeMap<u64, Split>, DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Settings(format!("train_fraction {train_fraction} must lie strictly between 0 and 1")));
    }
    let total: usize = patch_counts.values().sum();
    if total < 5 {
        return Err(DatasetError::Split(format!("at least 5 patches, got {total}")));
    }
    if patch_counts.len() < 2 {
        return Err(DatasetError::Split(format!("at least 2 source views to avoid leakage, got {}", patch_counts.len())));
    }
    let target = train_fraction * total as f64;
    let mut views: Vec<(u64, usize)> = patch_counts.iter().map(|(&v, &c)| (v, c)).collect();
    views.shuffle(&mut seed.rng());
    let mut train = 0usize;
    let mut out = BTreeMap::new();
    for &(v, c) in &views {
        let with = ((train + c) as f64 - target).abs();
        let without = (train as f64 - target).abs();
        if with <= without {
            train += c;
            out.insert(v, Split::Train);
        } else {
            out.insert(v, Split::Val);
        }
    }
    for needed in [Split::Train, Split::Val] {
        if !out.values().any(|&s| s == needed) {
            let &(v, _) = views.iter().rev().find(|(v, _)| out[v] != needed).expect("at least two views");
            out.insert(v, needed);
        }
    }
    Ok(out)
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory.
    pub path_rgb: String,
    pub path_label: String,
    pub split: Split,
    pub view_id: u64,
    pub x: u32,
    pub y: u32,
    /// Seed of the source view.
    pub seed: u64,
}

/// Writes one JSON object per line in the given order.
pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut buf, e).map_err(|err| io_err(path, err))?;
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&buf).map_err(|e| io_err(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| io_err(path, format!("line {}: {e}", i + 1))))
        .collect()
}

/// A rendered view on disk.
#[derive(Clone, Debug)]
pub struct ViewFile {
    pub rgb: PathBuf,
    pub label: PathBuf,
    pub meta: ViewMeta,
}

/// Finds `*.meta.json` sidecars in `dir` with their images, sorted by view index.
pub fn find_views(dir: &Path) -> Result<Vec<ViewFile>, DatasetError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_suffix(".meta.json") else { continue };
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let meta: ViewMeta = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
        out.push(ViewFile { rgb: dir.join(format!("{stem}.rgb.png")), label: dir.join(format!("{stem}.label.png")), meta });
    }
    out.sort_by_key(|v| v.meta.view_index);
    if let Some(w) = out.windows(2).find(|w| w[0].meta.view_index == w[1].meta.view_index) {
        return Err(io_err(dir, format!("view index {} appears twice", w[0].meta.view_index)));
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub views: usize,
    pub patches: usize,
    pub train_patches: usize,
    pub val_patches: usize,
}

/// Tiles every view, writes `{train,val}/{rgb,label}/` patches below `out`
/// and the manifest, and returns the manifest entries.
pub fn build_dataset(
    views: &[ViewFile],
    out: &Path,
    scene: &str,
    settings: &DatasetSettings,
    seed: Seed,
) -> Result<(Vec<ManifestEntry>, DatasetSummary), DatasetError> {
    let errs = settings.validate();
    if !errs.is_empty() {
        return Err(DatasetError::Settings(errs.join("; ")));
    }
    let stride = settings.stride();
    let patch = settings.patch;
    let counts: BTreeMap<u64, usize> = views
        .iter()
        .map(|v| {
            let (w, h) = (v.meta.camera.width, v.meta.camera.height);
            if w < patch || h < patch {
                return Err(DatasetError::ViewTooSmall { width: w, height: h, patch });
            }
            Ok((v.meta.view_index, tile_offsets(w, patch, stride).len() * tile_offsets(h, patch, stride).len()))
        })
        .collect::<Result<_, _>>()?;
    let splits = split_views(&counts, settings.train_fraction, seed)?;
    for s in [Split::Train, Split::Val] {
        for kind in ["rgb", "label"] {
            let d = out.join(s.as_str()).join(kind);
            std::fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
        }
    }

    let per_view: Vec<Vec<ManifestEntry>> = views
        .par_iter()
        .map(|v| {
            let rgb = image::open(&v.rgb).map_err(|e| io_err(&v.rgb, e))?.to_rgb8();
            let label = image::open(&v.label).map_err(|e| io_err(&v.label, e))?.to_luma8();
            let split = splits[&v.meta.view_index];
            let mut entries = Vec::new();
            for p in tile(&rgb, &label, v.meta.view_index, settings)? {
                let name = format!("{}_{:05}_{:05}.png", crate::render::view_stem(scene, p.view_id), p.x, p.y);
                let path_rgb = format!("{}/rgb/{name}", split.as_str());
                let path_label = format!("{}/label/{name}", split.as_str());
                let full = out.join(&path_rgb);
                p.rgb.save(&full).map_err(|e| io_err(&full, e))?;
                let full = out.join(&path_label);
                p.label.save(&full).map_err(|e| io_err(&full, e))?;
                entries.push(ManifestEntry { path_rgb, path_label, split, view_id: p.view_id, x: p.x, y: p.y, seed: v.meta.seed });
            }
            Ok(entries)
        })
        .collect::<Result<_, DatasetError>>()?;
    let entries: Vec<ManifestEntry> = per_view.into_iter().flatten().collect();
    write_manifest(&entries, &out.join(MANIFEST_NAME))?;
    let train = entries.iter().filter(|e| e.split == Split::Train).count();
    let summary = DatasetSummary { views: views.len(), patches: entries.len(), train_patches: train, val_patches: entries.len() - train };
    Ok((entries, summary))
}
