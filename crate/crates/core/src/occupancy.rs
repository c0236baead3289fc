//! Top-down multi-channel rasterization: a density map plus binary occupancy
//! slices taken near the ceiling and near the floor.
//!
//! A slice band `[lo, hi]` marks a cell occupied when at least one point whose
//! floor-relative height lies in `[lo * h, hi * h]` (inclusive) falls inside it,
//! where `h = z_ceiling - z_floor`. Doorways show up as cells that are occupied
//! in the ceiling slice (the lintel) but free in the floor slice.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, CountGrid, Grid};

pub const DEFAULT_TILE_SIZE: f64 = 0.05;
pub const DEFAULT_HEIGHT_QUANTILES: (f64, f64) = (0.01, 0.99);

/// Axis-aligned raster geometry plus the floor and ceiling heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// World coordinates of the lower corner of cell (0, 0).
    pub origin: [f64; 2],
    pub tile_size: f64,
    pub width: usize,
    pub height: usize,
    pub z_floor: f64,
    pub z_ceiling: f64,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], tile_size: f64, width: usize, height: usize, z_floor: f64, z_ceiling: f64) -> Result<Self> {
        let spec = Self {
            origin,
            tile_size,
            width,
            height,
            z_floor,
            z_ceiling,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tile_size > 0.0 && self.tile_size.is_finite()) {
            return Err(Error::invalid(format!("tile_size must be positive, got {}", self.tile_size)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("grid width and height must be at least 1"));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        if !(self.z_ceiling > self.z_floor) {
            return Err(Error::invalid(format!(
                "z_ceiling ({}) must exceed z_floor ({})",
                self.z_ceiling, self.z_floor
            )));
        }
        Ok(())
    }

    /// Floor-to-ceiling height `h`.
    pub fn room_height(&self) -> f64 {
        self.z_ceiling - self.z_floor
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    /// Number of cells (rounded up) covering `area_m2` square meters.
    pub fn cells_for_area(&self, area_m2: f64) -> usize {
        (area_m2 / (self.tile_size * self.tile_size)).ceil().max(1.0) as usize
    }

    /// Cell containing `(x, y)`. Cells are half-open `[lo, hi)` except along the
    /// grid's outermost edges, which are inclusive. `None` when out of bounds.
    pub fn world_to_grid(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        Some((
            axis_index(x, self.origin[0], self.tile_size, self.width)?,
            axis_index(y, self.origin[1], self.tile_size, self.height)?,
        ))
    }

    /// World coordinates of a cell's center.
    pub fn grid_to_world(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin[0] + (i as f64 + 0.5) * self.tile_size,
            self.origin[1] + (j as f64 + 0.5) * self.tile_size,
        )
    }

    pub fn empty_binary(&self) -> BinaryGrid {
        Grid::filled(self.width, self.height, false)
    }
}

fn axis_index(v: f64, origin: f64, tile: f64, n: usize) -> Option<usize> {
    let f = (v - origin) / tile;
    if !(f >= 0.0) {
        return None;
    }
    let k = f.floor();
    if k < n as f64 {
        Some(k as usize)
    } else if f == n as f64 {
        Some(n - 1)
    } else {
        None
    }
}

/// Height band as fractions of the floor-to-ceiling height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceBand {
    pub lo: f64,
    pub hi: f64,
}

impl SliceBand {
    pub const CEILING: SliceBand = SliceBand { lo: 0.7, hi: 0.9 };
    pub const FLOOR: SliceBand = SliceBand { lo: 0.1, hi: 0.3 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let band = Self { lo, hi };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::invalid(format!(
                "slice band needs 0 <= lo < hi <= 1, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    #[inline]
    fn contains(&self, z: f64, spec: &GridSpec) -> bool {
        let rel = z - spec.z_floor;
        let h = spec.room_height();
        self.lo * h <= rel && rel <= self.hi * h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub ceiling: SliceBand,
    pub floor: SliceBand,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            ceiling: SliceBand::CEILING,
            floor: SliceBand::FLOOR,
        }
    }
}

impl SliceConfig {
    pub fn validate(&self) -> Result<()> {
        self.ceiling.validate()?;
        self.floor.validate()
    }
}

/// The density map and both occupancy slices on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelGrid {
    pub spec: GridSpec,
    pub slices: SliceConfig,
    pub density: CountGrid,
    pub o_ceiling: BinaryGrid,
    pub o_floor: BinaryGrid,
}

/// Linear-interpolation quantile of z (`q = 0` is the minimum, `q = 1` the maximum).
pub fn estimate_heights(cloud: &PointCloud, lo_pct: f64, hi_pct: f64) -> Result<(f64, f64)> {
    if cloud.is_empty() {
        return Err(Error::invalid("cannot estimate heights of an empty cloud"));
    }
    if !(0.0 <= lo_pct && lo_pct < hi_pct && hi_pct <= 1.0) {
        return Err(Error::invalid(format!(
            "height quantiles need 0 <= lo < hi <= 1, got ({lo_pct}, {hi_pct})"
        )));
    }
    let mut zs: Vec<f64> = cloud.points().iter().map(|p| p.z).collect();
    zs.sort_unstable_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (zs.len() - 1) as f64;
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        if k + 1 < zs.len() {
            zs[k] + (zs[k + 1] - zs[k]) * frac
        } else {
            zs[k]
        }
    };
    let (z_floor, z_ceiling) = (quantile(lo_pct), quantile(hi_pct));
    if z_ceiling - z_floor < 1e-6 {
        return Err(Error::Degenerate(format!(
            "floor and ceiling heights coincide ({z_floor} vs {z_ceiling})"
        )));
    }
    Ok((z_floor, z_ceiling))
}

/// Grid covering the cloud's xy bounding box plus `padding` cells on every side.
pub fn fit_grid(cloud: &PointCloud, tile_size: f64, padding: usize) -> Result<GridSpec> {
    if cloud.is_empty() {
        return Err(Error::invalid("cannot fit a grid to an empty cloud"));
    }
    if !(tile_size > 0.0 && tile_size.is_finite()) {
        return Err(Error::invalid(format!("tile_size must be positive, got {tile_size}")));
    }
    let (z_floor, z_ceiling) = estimate_heights(cloud, DEFAULT_HEIGHT_QUANTILES.0, DEFAULT_HEIGHT_QUANTILES.1)?;
    let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in cloud.points() {
        min[0] = min[0].min(p.x);
        min[1] = min[1].min(p.y);
        max[0] = max[0].max(p.x);
        max[1] = max[1].max(p.y);
    }
    let pad = padding as f64 * tile_size;
    let origin = [min[0] - pad, min[1] - pad];
    let cells = |axis: usize| {
        let mut n = (((max[axis] - min[axis]) / tile_size).ceil() as usize).max(1);
        // Rounding can push the max point a hair past the last edge.
        while min[axis] + n as f64 * tile_size < max[axis] {
            n += 1;
        }
        n + 2 * padding
    };
    let mut spec = GridSpec::new(origin, tile_size, cells(0), cells(1), z_floor, z_ceiling)?;
    for (axis, &edge) in max.iter().enumerate().take(2) {
        let inside = |s: &GridSpec| {
            if axis == 0 {
                axis_index(edge, s.origin[0], s.tile_size, s.width).is_some()
            } else {
                axis_index(edge, s.origin[1], s.tile_size, s.height).is_some()
            }
        };
        while !inside(&spec) {
            if axis == 0 {
                spec.width += 1;
            } else {
                spec.height += 1;
            }
        }
    }
    Ok(spec)
}

/// Binary slice: cell set iff some in-bounds point lies in the band.
pub fn slice_occupancy(cloud: &PointCloud, spec: &GridSpec, band: SliceBand) -> BinaryGrid {
    let mut grid = spec.empty_binary();
    for p in cloud.points() {
        if band.contains(p.z, spec) {
            if let Some((i, j)) = spec.world_to_grid(p.x, p.y) {
                *grid.get_mut(i, j) = true;
            }
        }
    }
    grid
}

/// Rasterizes with the default ceiling (0.7, 0.9) and floor (0.1, 0.3) bands.
pub fn rasterize(cloud: &PointCloud, spec: &GridSpec) -> MultiChannelGrid {
    rasterize_with(cloud, spec, &SliceConfig::default())
}

pub fn rasterize_with(cloud: &PointCloud, spec: &GridSpec, slices: &SliceConfig) -> MultiChannelGrid {
    let mut density: CountGrid = Grid::filled(spec.width, spec.height, 0);
    let mut o_ceiling = spec.empty_binary();
    let mut o_floor = spec.empty_binary();
    for p in cloud.points() {
        let Some((i, j)) = spec.world_to_grid(p.x, p.y) else {
            continue;
        };
        *density.get_mut(i, j) += 1;
        if slices.ceiling.contains(p.z, spec) {
            *o_ceiling.get_mut(i, j) = true;
        }
        if slices.floor.contains(p.z, spec) {
            *o_floor.get_mut(i, j) = true;
        }
    }
    MultiChannelGrid {
        spec: *spec,
        slices: *slices,
        density,
        o_ceiling,
        o_floor,
    }
}

/// Ceiling-occupied, floor-free cells.
pub fn doorway_channel(o_ceiling: &BinaryGrid, o_floor: &BinaryGrid) -> Result<BinaryGrid> {
    o_ceiling.zip_with(o_floor, |c, f| c && !f)
}

pub const GRID_FORMAT: &str = "roomtopo-grid";

#[derive(Serialize, Deserialize)]
struct GridHeader {
    format: String,
    version: u32,
    spec: GridSpec,
    slices: SliceConfig,
    channels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    header: GridHeader,
    density: Vec<u32>,
    o_ceiling: Vec<u8>,
    o_floor: Vec<u8>,
}

fn bits_from(values: Vec<u8>, spec: &GridSpec, name: &str) -> Result<BinaryGrid> {
    let cells = values
        .into_iter()
        .map(|v| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::schema(format!("{name}: occupancy value {other} is not 0/1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::from_vec(spec.width, spec.height, cells).map_err(|e| Error::schema(format!("{name}: {e}")))
}

impl MultiChannelGrid {
    pub fn to_json(&self) -> String {
        let bits = |g: &BinaryGrid| g.as_slice().iter().map(|&b| u8::from(b)).collect();
        let doc = GridDoc {
            header: GridHeader {
                format: GRID_FORMAT.into(),
                version: 1,
                spec: self.spec,
                slices: self.slices,
                channels: vec!["density".into(), "o_ceiling".into(), "o_floor".into()],
            },
            density: self.density.as_slice().to_vec(),
            o_ceiling: bits(&self.o_ceiling),
            o_floor: bits(&self.o_floor),
        };
        serde_json::to_string(&doc).expect("grid serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GridDoc = serde_json::from_str(text)?;
        if doc.header.format != GRID_FORMAT {
            return Err(Error::schema(format!("unexpected format tag '{}'", doc.header.format)));
        }
        let spec = doc.header.spec;
        spec.validate()?;
        doc.header.slices.validate()?;
        let density = Grid::from_vec(spec.width, spec.height, doc.density)
            .map_err(|e| Error::schema(format!("density: {e}")))?;
        let o_ceiling = bits_from(doc.o_ceiling, &spec, "o_ceiling")?;
        let o_floor = bits_from(doc.o_floor, &spec, "o_floor")?;
        Ok(Self {
            spec,
            slices: doc.header.slices,
            density,
            o_ceiling,
            o_floor,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn doorways(&self) -> BinaryGrid {
        doorway_channel(&self.o_ceiling, &self.o_floor).expect("channels share dimensions")
    }

    /// Writes `density.png`, `o_ceiling.png`, `o_floor.png` and `doorway.png` into `dir`.
    pub fn save_pngs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.density.save_png(dir.join("density.png"))?;
        self.o_ceiling.save_png(dir.join("o_ceiling.png"))?;
        self.o_floor.save_png(dir.join("o_floor.png"))?;
        self.doorways().save_png(dir.join("doorway.png"))
    }
}
