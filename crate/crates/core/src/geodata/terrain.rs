//! Elevation lattice and its ASCII raster encoding.

use std::fmt::Write as _;

use super::GeodataError;
use crate::geom::{Bounds2, Point2};

/// Elevations sampled on a square lattice.
///
/// `elevations[row * cols + col]` is the sample at
/// `origin + (col * cell_size, row * cell_size)`; row 0 is the southernmost.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainGrid {
    pub origin: Point2,
    pub cell_size: f64,
    pub cols: usize,
    pub rows: usize,
    pub elevations: Vec<f64>,
}

impl TerrainGrid {
    pub fn new(origin: Point2, cell_size: f64, cols: usize, rows: usize, elevations: Vec<f64>) -> Result<Self, GeodataError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(GeodataError::Domain(format!("cell size must be positive, got {cell_size}")));
        }
        if cols == 0 || rows == 0 || elevations.len() != cols * rows {
            return Err(GeodataError::Domain(format!(
                "grid of {cols}x{rows} needs {} samples, got {}",
                cols * rows,
                elevations.len()
            )));
        }
        if !origin.is_finite() || elevations.iter().any(|z| !z.is_finite()) {
            return Err(GeodataError::Domain("terrain values must be finite".into()));
        }
        Ok(Self { origin, cell_size, cols, rows, elevations })
    }

    pub fn constant(origin: Point2, cell_size: f64, cols: usize, rows: usize, z: f64) -> Self {
        Self::new(origin, cell_size, cols, rows, vec![z; cols * rows]).expect("valid constant grid")
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.elevations[row * self.cols + col]
    }

    /// Extent of the lattice nodes.
    pub fn bounds(&self) -> Bounds2 {
        Bounds2 {
            min: self.origin,
            max: Point2::new(
                self.origin.x + (self.cols - 1) as f64 * self.cell_size,
                self.origin.y + (self.rows - 1) as f64 * self.cell_size,
            ),
        }
    }

    pub fn mean(&self) -> f64 {
        self.elevations.iter().sum::<f64>() / self.elevations.len() as f64
    }

    /// Bilinear interpolation. Queries up to one cell beyond the lattice are
    /// clamped to its edge.
    pub fn sample_elevation(&self, xy: Point2) -> Result<f64, GeodataError> {
        let fx = (xy.x - self.origin.x) / self.cell_size;
        let fy = (xy.y - self.origin.y) / self.cell_size;
        let (maxc, maxr) = ((self.cols - 1) as f64, (self.rows - 1) as f64);
        if !(fx >= -1.0 && fx <= maxc + 1.0 && fy >= -1.0 && fy <= maxr + 1.0) {
            return Err(GeodataError::OutOfBounds { x: xy.x, y: xy.y });
        }
        let fx = fx.clamp(0.0, maxc);
        let fy = fy.clamp(0.0, maxr);
        let (c0, tx) = split_axis(fx, self.cols);
        let (r0, ty) = split_axis(fy, self.rows);
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let z00 = self.at(c0, r0);
        let z10 = self.at(c1, r0);
        let z01 = self.at(c0, r1);
        let z11 = self.at(c1, r1);
        let south = z00 + (z10 - z00) * tx;
        let north = z01 + (z11 - z01) * tx;
        Ok(south + (north - south) * ty)
    }
}

fn split_axis(f: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let i = (f.floor() as usize).min(n - 2);
    (i, f - i as f64)
}

/// Parses an ESRI-style ASCII raster (`ncols`, `nrows`, `xllcorner|xllcenter`,
/// `yllcorner|yllcenter`, `cellsize`, optional `nodata_value`, then rows
/// north to south). NODATA samples are rejected.
pub fn parse_terrain(text: &str) -> Result<TerrainGrid, GeodataError> {
    let mut tokens = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .peekable();

    let mut header = |key: &str| -> Result<(usize, String, f64), GeodataError> {
        let (line, k) = tokens.next().ok_or_else(|| GeodataError::Parse { line: 0, message: format!("missing {key}") })?;
        let (_, v) = tokens
            .next()
            .ok_or_else(|| GeodataError::Parse { line, message: format!("missing value for {k}") })?;
        let v: f64 = v.parse().map_err(|_| GeodataError::Parse { line, message: format!("bad number {v:?}") })?;
        Ok((line, k.to_ascii_lowercase(), v))
    };

    let mut expect = |want: &[&str]| -> Result<(String, f64), GeodataError> {
        let (line, k, v) = header(want[0])?;
        if !want.contains(&k.as_str()) {
            return Err(GeodataError::Parse { line, message: format!("expected {} but found {k}", want.join("|")) });
        }
        Ok((k, v))
    };

    let (_, ncols) = expect(&["ncols"])?;
    let (_, nrows) = expect(&["nrows"])?;
    let (xk, x) = expect(&["xllcorner", "xllcenter"])?;
    let (yk, y) = expect(&["yllcorner", "yllcenter"])?;
    let (_, cell) = expect(&["cellsize"])?;
    if ncols < 1.0 || nrows < 1.0 || ncols.fract() != 0.0 || nrows.fract() != 0.0 {
        return Err(GeodataError::Parse { line: 1, message: "ncols/nrows must be positive integers".into() });
    }
    let (cols, rows) = (ncols as usize, nrows as usize);
    let corner_shift = |k: &str| if k.ends_with("corner") { 0.5 * cell } else { 0.0 };
    let origin = Point2::new(x + corner_shift(&xk), y + corner_shift(&yk));

    let mut nodata = None;
    if let Some((line, t)) = tokens.peek().copied() {
        if t.eq_ignore_ascii_case("nodata_value") {
            tokens.next();
            let (_, v) = tokens
                .next()
                .ok_or_else(|| GeodataError::Parse { line, message: "missing NODATA value".into() })?;
            nodata = Some(v.parse::<f64>().map_err(|_| GeodataError::Parse { line, message: format!("bad number {v:?}") })?);
        }
    }

    let mut north_first = Vec::with_capacity(cols * rows);
    for _ in 0..cols * rows {
        let (line, t) = tokens
            .next()
            .ok_or_else(|| GeodataError::Parse { line: 0, message: format!("expected {} samples", cols * rows) })?;
        let z: f64 = t.parse().map_err(|_| GeodataError::Parse { line, message: format!("bad sample {t:?}") })?;
        if Some(z) == nodata {
            return Err(GeodataError::Parse { line, message: "NODATA samples are not supported".into() });
        }
        north_first.push(z);
    }
    if let Some((line, t)) = tokens.next() {
        return Err(GeodataError::Parse { line, message: format!("trailing data {t:?}") });
    }

    let mut elevations = Vec::with_capacity(cols * rows);
    for r in (0..rows).rev() {
        elevations.extend_from_slice(&north_first[r * cols..(r + 1) * cols]);
    }
    TerrainGrid::new(origin, cell, cols, rows, elevations)
}

/// Writes the grid with a cell-center header.
pub fn write_terrain(grid: &TerrainGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.cols);
    let _ = writeln!(out, "nrows {}", grid.rows);
    let _ = writeln!(out, "xllcenter {:?}", grid.origin.x);
    let _ = writeln!(out, "yllcenter {:?}", grid.origin.y);
    let _ = writeln!(out, "cellsize {:?}", grid.cell_size);
    for r in (0..grid.rows).rev() {
        let row: Vec<String> = (0..grid.cols).map(|c| format!("{:?}", grid.at(c, r))).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> TerrainGrid {
        // 2x2 cell: south edge 0, north edge 10.
        TerrainGrid::new(Point2::new(0.0, 0.0), 10.0, 2, 2, vec![0.0, 0.0, 10.0, 10.0]).unwrap()
    }

    #[test]
    fn knot_values_are_exact() {
        let g = TerrainGrid::new(Point2::new(5.0, 5.0), 2.0, 3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                let p = Point2::new(5.0 + 2.0 * c as f64, 5.0 + 2.0 * r as f64);
                assert_eq!(g.sample_elevation(p).unwrap(), g.at(c, r));
            }
        }
    }

    #[test]
    fn cell_center_of_ramp() {
        assert_eq!(ramp().sample_elevation(Point2::new(5.0, 5.0)).unwrap(), 5.0);
    }

    #[test]
    fn constant_field() {
        let g = TerrainGrid::constant(Point2::new(-100.0, -100.0), 30.0, 8, 8, 42.0);
        assert_eq!(g.sample_elevation(Point2::new(17.3, -44.9)).unwrap(), 42.0);
    }

    #[test]
    fn bounds_with_one_cell_margin() {
        let g = ramp();
        assert_eq!(g.sample_elevation(Point2::new(-9.0, 5.0)).unwrap(), 5.0);
        assert!(matches!(g.sample_elevation(Point2::new(-10.5, 5.0)), Err(GeodataError::OutOfBounds { .. })));
    }

    #[test]
    fn ascii_grid_roundtrip_and_orientation() {
        let text = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 10\nNODATA_value -9999\n10 10\n0 0\n";
        let g = parse_terrain(text).unwrap();
        // Corner header shifts the lattice to cell centers.
        assert_eq!(g.origin, Point2::new(5.0, 5.0));
        assert_eq!(g.at(0, 0), 0.0);
        assert_eq!(g.at(0, 1), 10.0);
        let again = parse_terrain(&write_terrain(&g)).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn ascii_grid_rejects_garbage_and_nodata() {
        let base = "ncols 2\nnrows 1\nxllcenter 0\nyllcenter 0\ncellsize 1\n";
        assert!(parse_terrain(&format!("{base}1 2\n")).is_ok());
        assert!(parse_terrain(&format!("{base}1 2 3\n")).is_err());
        assert!(parse_terrain(&format!("{base}1\n")).is_err());
        assert!(parse_terrain(&format!("{base}1 x\n")).is_err());
        let nodata = "ncols 2\nnrows 1\nxllcenter 0\nyllcenter 0\ncellsize 1\nnodata_value -1\n1 -1\n";
        assert!(parse_terrain(nodata).is_err());
        assert!(parse_terrain("ncols 2\nnrows 1\nxllcenter 0\nyllcenter 0\ncellsize 0\n1 2\n").is_err());
    }

    proptest! {
        #[test]
        fn continuous_across_cell_boundaries(
            zs in proptest::collection::vec(-100.0f64..500.0, 16),
            k in 1usize..3,
            t in 0.0f64..1.0,
        ) {
            let g = TerrainGrid::new(Point2::new(0.0, 0.0), 7.5, 4, 4, zs).unwrap();
            // Shared vertical edge x = k * cell between cells k-1 and k.
            let x = k as f64 * 7.5;
            let y = t * 22.5;
            let on = g.sample_elevation(Point2::new(x, y)).unwrap();
            let left = g.sample_elevation(Point2::new(x - 1e-9, y)).unwrap();
            let right = g.sample_elevation(Point2::new(x + 1e-9, y)).unwrap();
            prop_assert!((on - left).abs() < 1e-6 && (on - right).abs() < 1e-6);
            // Direct evaluation from both cells' formulas at the shared edge.
            let fy = y / 7.5;
            let (r0, ty) = split_axis(fy, 4);
            let from_left = g.at(k, r0) + (g.at(k, r0 + 1) - g.at(k, r0)) * ty;
            prop_assert!((on - from_left).abs() < 1e-9);
        }
    }
}
