//! Procedural ground-truthed scenes: rectilinear floorplans sampled as point
//! clouds, objects with room-correlated embeddings, phrase tables and query
//! fixtures.
//!
//! Floor and ceiling are sampled on a jittered grid with `points_per_m2`
//! density. Walls are volumetric: every site of a jittered grid at half that
//! spacing carries `WALL_Z_STRATA` points stratified over the full height, so
//! any cell reached by a wall site is occupied in both slices. Door openings
//! keep only lintel points between the lintel height and the ceiling.

mod world;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::association::{ObjectRoomAssignment, RoomAssignment};
use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Grid};
use crate::io::{EmbeddingTable, ObjectInstance, ObjectMap};
use crate::occupancy::{fit_grid, GridSpec};
use crate::segmentation::{Category, InstanceId, InstanceMask, SegmentationResult};
use crate::topomap::TransitionEdge;

pub use world::{
    generate_embedding_world, EmbeddingWorld, ObjectCategory, QueryFixture, WorldSpec, DEFAULT_ROOM_TYPES, QUERY_PHRASES,
};

/// Points per wall site, stratified over `[0, h]`.
pub const WALL_Z_STRATA: usize = 10;
/// Points per lintel site, stratified over `[lintel, h]`.
pub const LINTEL_Z_STRATA: usize = 2;
pub const OBJECT_RADIUS: f64 = 0.15;
pub const OBJECT_POINTS: usize = 60;
/// Clearance between a door and the ends of its wall, and between objects and walls.
pub const CLEARANCE: f64 = 0.3;
pub const GRID_PADDING: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub rows: usize,
    pub cols: usize,
    /// Range for each column width and row depth, meters between wall centers.
    pub room_size: (f64, f64),
    pub wall_thickness: f64,
    pub door_width: f64,
    /// Door top as a fraction of the room height.
    pub door_lintel_fraction: f64,
    pub ceiling_height: f64,
    pub points_per_m2: f64,
    pub objects_per_room: (usize, usize),
    /// Chance that a non-tree pair of neighboring rooms also gets a door.
    pub extra_door_probability: f64,
    /// Chance that a doorway is a full-height opening with no lintel. Such
    /// openings are invisible to the doorway channel and merge the two rooms
    /// for the heuristic segmenter.
    pub open_passage_probability: f64,
    /// Standard deviation of isotropic Gaussian jitter on every point, meters.
    pub position_noise: f64,
    /// Grid resolution used for the ground-truth masks.
    pub tile_size: f64,
    /// Draw object categories from the confounded pools.
    pub confounded: bool,
    pub world: WorldSpec,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            rows: 2,
            cols: 2,
            room_size: (3.0, 5.0),
            wall_thickness: 0.2,
            door_width: 0.9,
            door_lintel_fraction: 0.8,
            ceiling_height: 2.7,
            points_per_m2: 1600.0,
            objects_per_room: (3, 6),
            extra_door_probability: 0.0,
            open_passage_probability: 0.0,
            position_noise: 0.0,
            tile_size: 0.05,
            confounded: false,
            world: WorldSpec::default(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("room grid needs at least one row and column"));
        }
        let (lo, hi) = self.room_size;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid("room_size must be a positive, ordered range"));
        }
        if !(self.tile_size > 0.0) {
            return Err(Error::invalid("tile_size must be positive"));
        }
        if self.wall_thickness < 2.0 * self.tile_size {
            return Err(Error::invalid("wall_thickness must be at least two tiles"));
        }
        if !(self.door_lintel_fraction > 0.7 && self.door_lintel_fraction < 0.9) {
            return Err(Error::invalid("door_lintel_fraction must lie strictly between 0.7 and 0.9"));
        }
        if !(self.ceiling_height > 0.0 && self.points_per_m2 > 0.0 && self.door_width > 0.0) {
            return Err(Error::invalid("ceiling_height, points_per_m2 and door_width must be positive"));
        }
        let free = lo - self.wall_thickness - 2.0 * CLEARANCE;
        if self.door_width > free {
            return Err(Error::invalid(format!(
                "door width {} does not fit a shared wall of {:.2} m usable length",
                self.door_width, free
            )));
        }
        if lo - self.wall_thickness < 2.0 * (CLEARANCE + OBJECT_RADIUS) {
            return Err(Error::invalid("rooms are too small to hold objects"));
        }
        let (a, b) = self.objects_per_room;
        if a > b {
            return Err(Error::invalid("objects_per_room range is reversed"));
        }
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !prob_ok(self.extra_door_probability) || !prob_ok(self.open_passage_probability) || !(self.position_noise >= 0.0) {
            return Err(Error::invalid("door probabilities must be in [0, 1], position_noise non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// One jittered site per `spacing`-sized stratum; strata at the far edges
/// are clipped to the rectangle.
fn jittered_sites(r: Rect, spacing: f64, rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let nx = ((r.x1 - r.x0) / spacing).ceil().max(1.0) as usize;
    let ny = ((r.y1 - r.y0) / spacing).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let ya = r.y0 + j as f64 * spacing;
        let yb = (ya + spacing).min(r.y1);
        for i in 0..nx {
            let xa = r.x0 + i as f64 * spacing;
            let xb = (xa + spacing).min(r.x1);
            out.push((xa + (xb - xa) * rng.random::<f64>(), ya + (yb - ya) * rng.random::<f64>()));
        }
    }
    out
}

fn stratified(lo: f64, hi: f64, n: usize, rng: &mut impl Rng) -> impl Iterator<Item = f64> + '_ {
    let step = (hi - lo) / n as f64;
    (0..n).map(move |k| lo + step * (k as f64 + rng.random::<f64>()))
}

/// A generated scene: the cloud, the detected-object map the pipeline
/// consumes, and everything known about it.
#[derive(Debug, Clone)]
pub struct Scene {
    pub cloud: PointCloud,
    pub objects: ObjectMap,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Rooms (ids `0..rooms`, row-major over the room grid, labeled with their
    /// type) followed by doorways.
    pub seg: SegmentationResult,
    pub room_labels: BTreeMap<InstanceId, String>,
    /// Doorway graph: one edge per doorway.
    pub doors: Vec<TransitionEdge>,
    pub assignment: ObjectRoomAssignment,
    /// Object id -> category index in the world.
    pub object_categories: BTreeMap<u32, usize>,
    pub table: EmbeddingTable,
    pub queries: Vec<QueryFixture>,
}

/// Builds the scene's own embedding world from `spec.world` and generates it.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    let world = generate_embedding_world(&spec.world)?;
    generate_scene_in(spec, &world)
}

struct Union(Vec<usize>);

impl Union {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        self.0[a] = r;
        r
    }
}

/// Generates a scene whose objects are drawn from `world`.
pub fn generate_scene_in(spec: &SceneSpec, world: &EmbeddingWorld) -> Result<Scene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sampler = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5EED_0F90_1A75);
    let t = spec.wall_thickness;
    let h = spec.ceiling_height;
    let (rows, cols) = (spec.rows, spec.cols);

    let mut xs = vec![0.0];
    for _ in 0..cols {
        let w = rng.random_range(spec.room_size.0..=spec.room_size.1);
        xs.push(xs.last().unwrap() + w);
    }
    let mut ys = vec![0.0];
    for _ in 0..rows {
        let w = rng.random_range(spec.room_size.0..=spec.room_size.1);
        ys.push(ys.last().unwrap() + w);
    }
    let room_rect = |r: usize, c: usize| Rect {
        x0: xs[c] + t / 2.0,
        x1: xs[c + 1] - t / 2.0,
        y0: ys[r] + t / 2.0,
        y1: ys[r + 1] - t / 2.0,
    };
    let n_rooms = rows * cols;

    // Doors: randomized spanning tree plus optional extra neighbor pairs.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                pairs.push((id, id + 1));
            }
            if r + 1 < rows {
                pairs.push((id, id + cols));
            }
        }
    }
    pairs.shuffle(&mut rng);
    let mut uf = Union((0..n_rooms).collect());
    let mut door_pairs = Vec::new();
    for (a, b) in pairs {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra != rb {
            uf.0[ra] = rb;
            door_pairs.push((a, b));
        } else if rng.random::<f64>() < spec.extra_door_probability {
            door_pairs.push((a, b));
        }
    }
    door_pairs.sort_unstable();
    let doors: Vec<Rect> = door_pairs
        .iter()
        .map(|&(a, b)| {
            let (ra, ca) = (a / cols, a % cols);
            if b == a + 1 {
                // shared vertical wall at xs[ca + 1]
                let x = xs[ca + 1];
                let lo = ys[ra] + t / 2.0 + CLEARANCE;
                let hi = ys[ra + 1] - t / 2.0 - CLEARANCE - spec.door_width;
                let y0 = rng.random_range(lo..=hi);
                Rect {
                    x0: x - t / 2.0,
                    x1: x + t / 2.0,
                    y0,
                    y1: y0 + spec.door_width,
                }
            } else {
                let y = ys[ra + 1];
                let lo = xs[ca] + t / 2.0 + CLEARANCE;
                let hi = xs[ca + 1] - t / 2.0 - CLEARANCE - spec.door_width;
                let x0 = rng.random_range(lo..=hi);
                Rect {
                    x0,
                    x1: x0 + spec.door_width,
                    y0: y - t / 2.0,
                    y1: y + t / 2.0,
                }
            }
        })
        .collect();
    // Separate stream so that enabling open passages leaves the layout unchanged.
    let mut passage_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x09E7_0A55);
    let open: Vec<bool> = doors
        .iter()
        .map(|_| spec.open_passage_probability > 0.0 && passage_rng.random::<f64>() < spec.open_passage_probability)
        .collect();

    // Room types: a shuffled cycle through all types.
    let n_types = world.spec.room_types.len();
    let mut type_cycle: Vec<usize> = (0..n_rooms.div_ceil(n_types) * n_types).map(|k| k % n_types).collect();
    type_cycle.shuffle(&mut rng);
    let room_types: Vec<usize> = type_cycle[..n_rooms].to_vec();

    let mut pts: Vec<Point3> = Vec::new();
    let spacing = 1.0 / spec.points_per_m2.sqrt();
    let lintel = spec.door_lintel_fraction * h;

    // Floor and ceiling inside every room and under every door.
    let surfaces: Vec<Rect> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| room_rect(r, c))
        .chain(doors.iter().copied())
        .collect();
    for (k, rect) in surfaces.iter().enumerate() {
        let is_door = k >= n_rooms;
        for (x, y) in jittered_sites(*rect, spacing, &mut sampler) {
            pts.push(Point3::new(x, y, 0.0));
            if !is_door {
                pts.push(Point3::new(x, y, h));
            }
        }
    }

    // Walls: full vertical walls, horizontal segments between them.
    let mut walls = Vec::new();
    for &x in &xs {
        walls.push(Rect {
            x0: x - t / 2.0,
            x1: x + t / 2.0,
            y0: -t / 2.0,
            y1: ys[rows] + t / 2.0,
        });
    }
    for &y in &ys {
        for c in 0..cols {
            walls.push(Rect {
                x0: xs[c] + t / 2.0,
                x1: xs[c + 1] - t / 2.0,
                y0: y - t / 2.0,
                y1: y + t / 2.0,
            });
        }
    }
    for wall in &walls {
        for (x, y) in jittered_sites(*wall, spacing / 2.0, &mut sampler) {
            let (lo, n) = match doors.iter().position(|d| d.contains(x, y)) {
                Some(k) if open[k] => continue,
                Some(_) => (lintel, LINTEL_Z_STRATA),
                None => (0.0, WALL_Z_STRATA),
            };
            let zs: Vec<f64> = stratified(lo, h, n, &mut sampler).collect();
            pts.extend(zs.into_iter().map(|z| Point3::new(x, y, z)));
        }
    }

    // Objects.
    let mut objects = Vec::new();
    let mut by_object = BTreeMap::new();
    let mut object_categories = BTreeMap::new();
    for (room, &ty) in room_types.iter().enumerate() {
        let rect = room_rect(room / cols, room % cols);
        let count = rng.random_range(spec.objects_per_room.0..=spec.objects_per_room.1);
        let margin = CLEARANCE + OBJECT_RADIUS;
        for (cat, embedding) in world.sample_objects(ty, count, spec.confounded, &mut rng) {
            let cx = rng.random_range(rect.x0 + margin..=rect.x1 - margin);
            let cy = rng.random_range(rect.y0 + margin..=rect.y1 - margin);
            let cz = rng.random_range(0.2 * h..=0.5 * h);
            let mut blob = Vec::with_capacity(OBJECT_POINTS);
            while blob.len() < OBJECT_POINTS {
                let d = [
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                ];
                if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= 1.0 {
                    blob.push(Point3::new(
                        cx + OBJECT_RADIUS * d[0],
                        cy + OBJECT_RADIUS * d[1],
                        cz + OBJECT_RADIUS * d[2],
                    ));
                }
            }
            let id = objects.len() as u32;
            pts.extend_from_slice(&blob);
            objects.push(ObjectInstance {
                id,
                points: PointCloud::new(blob)?,
                embedding,
            });
            by_object.insert(
                id,
                RoomAssignment {
                    room_id: room as InstanceId,
                    distance_m: 0.0,
                },
            );
            object_categories.insert(id, cat);
        }
    }

    if spec.position_noise > 0.0 {
        let normal = Normal::new(0.0, spec.position_noise).map_err(|e| Error::invalid(e.to_string()))?;
        for p in &mut pts {
            p.x += normal.sample(&mut sampler);
            p.y += normal.sample(&mut sampler);
            p.z += normal.sample(&mut sampler);
        }
    }

    let cloud = PointCloud::new(pts)?;
    let grid = fit_grid(&cloud, spec.tile_size, GRID_PADDING)?;
    let rasterize_rect = |r: &Rect| -> BinaryGrid {
        let mut g: BinaryGrid = Grid::filled(grid.width, grid.height, false);
        for j in 0..grid.height {
            for i in 0..grid.width {
                let (x, y) = grid.grid_to_world(i, j);
                if r.contains(x, y) {
                    *g.get_mut(i, j) = true;
                }
            }
        }
        g
    };

    let mut instances = Vec::new();
    let mut room_labels = BTreeMap::new();
    for (room, &ty) in room_types.iter().enumerate() {
        let label = world.spec.room_types[ty].clone();
        let mask = rasterize_rect(&room_rect(room / cols, room % cols));
        instances.push(InstanceMask::new(room as InstanceId, Category::Room, mask, 1.0)?.with_label(label.clone()));
        room_labels.insert(room as InstanceId, label);
    }
    let mut door_edges = Vec::new();
    for (k, (rect, &(a, b))) in doors.iter().zip(&door_pairs).enumerate() {
        let id = (n_rooms + k) as InstanceId;
        instances.push(InstanceMask::new(id, Category::Transition, rasterize_rect(rect), 1.0)?);
        door_edges.push(TransitionEdge::new(id, a as InstanceId, b as InstanceId)?);
    }

    let dim = world.spec.embedding_dim;
    Ok(Scene {
        cloud,
        objects: ObjectMap::new(dim, objects)?,
        truth: GroundTruth {
            seg: SegmentationResult::new(grid, instances)?,
            room_labels,
            doors: door_edges,
            assignment: ObjectRoomAssignment { by_object },
            object_categories,
            table: world.table.clone(),
            queries: world.queries.clone(),
        },
    })
}

impl GroundTruth {
    pub fn grid(&self) -> &GridSpec {
        &self.seg.spec
    }

    /// Area of each ground-truth room in square meters.
    pub fn room_areas(&self) -> BTreeMap<InstanceId, f64> {
        let cell = self.seg.spec.tile_size * self.seg.spec.tile_size;
        self.seg.rooms().map(|r| (r.instance_id, r.area() as f64 * cell)).collect()
    }
}
