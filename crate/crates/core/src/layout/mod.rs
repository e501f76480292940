//! Street graph to plots, plots to lots, lots to building or green use.

mod faces;
mod green;
mod subdivide;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodata::LandUse;
use crate::geom::Polygon;
use crate::seed::Seed;

pub use faces::{bounded_faces, extract_plots, planarize, Face, FaceReport, PlanarizeReport, PlotExtraction};
pub use green::{allocate_green, green_fraction};
pub use subdivide::{subdivide_plot, Subdivision};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("street network has no edges")]
    EmptyNetwork,
    #[error("invalid land-use parameters for {land_use}: {reason}")]
    InvalidParams { land_use: LandUse, reason: String },
    #[error("no parameters configured for land use {0}")]
    MissingParams(LandUse),
}

/// Enclosed face of the street graph, inset by half the road widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub id: u32,
    /// Face of the planar subdivision, before the road inset.
    pub face: Polygon,
    pub boundary: Polygon,
    pub land_use: LandUse,
    pub bounding_edge_ids: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LotId {
    pub plot: u32,
    pub index: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Designation {
    Building,
    Green,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lot {
    pub id: LotId,
    pub parent_plot_id: u32,
    pub land_use: LandUse,
    pub boundary: Polygon,
    pub area: f64,
    pub designation: Option<Designation>,
}

/// Generation parameters for one land use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandUseParams {
    pub min_lot_area: f64,
    pub max_lot_area: f64,
    /// Green area ratio, fraction of each plot reserved as green lots.
    pub gar: f64,
    pub level_height: f64,
    pub min_levels: u32,
    pub max_levels: u32,
    /// Trees per square meter of green lot.
    pub tree_density: f64,
    pub setback: f64,
}

impl LandUseParams {
    pub fn validate(&self, land_use: LandUse) -> Vec<LayoutError> {
        let mut errs = Vec::new();
        let mut bad = |reason: String| errs.push(LayoutError::InvalidParams { land_use, reason });
        if !(self.min_lot_area > 0.0 && self.min_lot_area <= self.max_lot_area) {
            bad(format!("need 0 < min_lot_area <= max_lot_area, got {} / {}", self.min_lot_area, self.max_lot_area));
        }
        if !(0.0..=1.0).contains(&self.gar) {
            bad(format!("gar must be in [0, 1], got {}", self.gar));
        }
        if !(self.level_height > 0.0) {
            bad(format!("level_height must be positive, got {}", self.level_height));
        }
        if self.min_levels < 1 || self.min_levels > self.max_levels {
            bad(format!("need 1 <= min_levels <= max_levels, got {} / {}", self.min_levels, self.max_levels));
        }
        if !(self.tree_density > 0.0 && self.tree_density.is_finite()) {
            bad(format!("tree_density must be positive, got {}", self.tree_density));
        }
        if !(self.setback >= 0.0 && self.setback.is_finite()) {
            bad(format!("setback must be non-negative, got {}", self.setback));
        }
        errs
    }

    /// Poisson-disk radius giving on average one tree per `1 / density` m².
    pub fn tree_radius(&self) -> f64 {
        (1.0 / (std::f64::consts::PI * self.tree_density)).sqrt()
    }
}

pub type LandUseTable = BTreeMap<LandUse, LandUseParams>;

pub fn default_land_use_table() -> LandUseTable {
    let mut t = BTreeMap::new();
    t.insert(
        LandUse::Residential,
        LandUseParams {
            min_lot_area: 200.0,
            max_lot_area: 1000.0,
            gar: 0.15,
            level_height: 3.0,
            min_levels: 1,
            max_levels: 3,
            tree_density: 0.01,
            setback: 3.0,
        },
    );
    t.insert(
        LandUse::Commercial,
        LandUseParams {
            min_lot_area: 600.0,
            max_lot_area: 4000.0,
            gar: 0.05,
            level_height: 4.0,
            min_levels: 3,
            max_levels: 12,
            tree_density: 0.005,
            setback: 1.5,
        },
    );
    t.insert(
        LandUse::Green,
        LandUseParams {
            min_lot_area: 50.0,
            max_lot_area: 1.0e9,
            gar: 1.0,
            level_height: 3.0,
            min_levels: 1,
            max_levels: 1,
            tree_density: 0.008,
            setback: 0.0,
        },
    );
    t
}

pub fn validate_table(table: &LandUseTable) -> Vec<LayoutError> {
    let mut errs = Vec::new();
    for lu in LandUse::ALL {
        match table.get(&lu) {
            Some(p) => errs.extend(p.validate(lu)),
            None => errs.push(LayoutError::MissingParams(lu)),
        }
    }
    errs
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LayoutStats {
    pub plots: usize,
    pub lots: usize,
    pub green_lots: usize,
    /// Plots below their minimum lot area, kept as one green lot.
    pub undersized_plots: usize,
    /// Lots left above the maximum area because no valid cut existed.
    pub oversized_lots: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LotLayout {
    pub plots: Vec<Plot>,
    pub lots: Vec<Lot>,
    pub stats: LayoutStats,
}

/// Seed for a plot, keyed by its bounding edges so unrelated edits elsewhere
/// in the network do not change it.
pub fn plot_seed(parent: Seed, plot: &Plot) -> Seed {
    let mut ids = plot.bounding_edge_ids.clone();
    ids.sort_unstable();
    let key: Vec<String> = ids.iter().map(u64::to_string).collect();
    parent.child(&format!("plot:{}", key.join(",")))
}

/// Subdivides every plot and allocates green lots plot by plot. Plots smaller
/// than their land use's minimum lot area become green plots.
pub fn layout_lots(mut plots: Vec<Plot>, table: &LandUseTable, seed: Seed) -> Result<LotLayout, LayoutError> {
    for lu in LandUse::ALL {
        if !table.contains_key(&lu) {
            return Err(LayoutError::MissingParams(lu));
        }
    }
    let mut undersized = 0;
    for plot in &mut plots {
        if plot.boundary.area() < table[&plot.land_use].min_lot_area && plot.land_use != LandUse::Green {
            plot.land_use = LandUse::Green;
            undersized += 1;
        }
    }
    let per_plot: Vec<(Vec<Lot>, usize)> = plots
        .par_iter()
        .map(|plot| {
            let params = &table[&plot.land_use];
            let mut rng = plot_seed(seed, plot).rng();
            let sub = subdivide_plot(plot, params, &mut rng);
            let lots = allocate_green(sub.lots, params.gar);
            (lots, sub.oversized)
        })
        .collect();

    let mut stats = LayoutStats { plots: plots.len(), undersized_plots: undersized, ..Default::default() };
    let mut lots = Vec::new();
    for (plot_lots, oversized) in per_plot {
        stats.oversized_lots += oversized;
        lots.extend(plot_lots);
    }
    lots.sort_by_key(|l| l.id);
    stats.lots = lots.len();
    stats.green_lots = lots.iter().filter(|l| l.designation == Some(Designation::Green)).count();
    Ok(LotLayout { plots, lots, stats })
}
