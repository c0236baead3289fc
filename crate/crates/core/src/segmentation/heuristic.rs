use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Category, InstanceMask, SegmentationResult};
use crate::grid::{BinaryGrid, Grid};
use crate::occupancy::{doorway_channel, MultiChannelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterParams {
    /// Minimum point count for a cell to qualify as wall.
    pub wall_density_threshold: u32,
    /// Rooms smaller than this are dropped. `None` means 1 m² at the grid's tile size.
    pub min_room_cells: Option<usize>,
    /// Doorway components smaller than this are dropped. `None` means 0.02 m².
    pub min_transition_cells: Option<usize>,
    /// Remove doorway cells not covered by any fully-set 2x2 block before grouping.
    pub open_doorways: bool,
}

impl Default for SegmenterParams {
    fn default() -> Self {
        Self {
            wall_density_threshold: 5,
            min_room_cells: None,
            min_transition_cells: None,
            open_doorways: true,
        }
    }
}

pub const DEFAULT_MIN_ROOM_AREA_M2: f64 = 1.0;
pub const DEFAULT_MIN_TRANSITION_AREA_M2: f64 = 0.02;

/// 4-connected components in row-major discovery order. Each component's cells
/// are flat indices; the first entry is its topmost-leftmost cell.
pub fn connected_components(mask: &BinaryGrid) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in mask.ones() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(idx) = queue.pop_front() {
            comp.push(idx);
            let (i, j) = mask.coords(idx);
            for (ni, nj) in mask.neighbors4(i, j) {
                let n = mask.index(ni, nj);
                if *mask.get(ni, nj) && !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn component_mask(width: usize, height: usize, cells: &[usize]) -> BinaryGrid {
    let mut g = Grid::filled(width, height, false);
    for &idx in cells {
        g.as_mut_slice()[idx] = true;
    }
    g
}

/// Wall cells: dense enough and occupied in both slices.
pub(crate) fn wall_mask(grid: &MultiChannelGrid, threshold: u32) -> BinaryGrid {
    let cells = grid
        .density
        .as_slice()
        .iter()
        .zip(grid.o_floor.as_slice())
        .zip(grid.o_ceiling.as_slice())
        .map(|((&d, &f), &c)| d >= threshold && f && c)
        .collect();
    Grid::from_vec(grid.spec.width, grid.spec.height, cells).expect("same dims")
}

/// Deterministic room/transition segmentation of a multi-channel grid.
///
/// 1. walls: density at or above the threshold and occupied in both slices;
/// 2. doorways: ceiling-occupied, floor-free cells, grouped into 4-connected
///    components; components touching a wall cell become transitions;
/// 3. interior: observed cells (density > 0) that are neither wall nor doorway;
/// 4. rooms: 4-connected interior components of at least `min_room_cells`.
///
/// Instance ids are assigned from 0 in row-major order of each component's
/// topmost-leftmost cell. Every instance gets confidence 1.
pub fn segment_heuristic(grid: &MultiChannelGrid, params: &SegmenterParams) -> SegmentationResult {
    let spec = grid.spec;
    let (w, h) = (spec.width, spec.height);
    let min_room = params
        .min_room_cells
        .unwrap_or_else(|| spec.cells_for_area(DEFAULT_MIN_ROOM_AREA_M2));
    let min_transition = params
        .min_transition_cells
        .unwrap_or_else(|| spec.cells_for_area(DEFAULT_MIN_TRANSITION_AREA_M2));

    let walls = wall_mask(grid, params.wall_density_threshold);
    let raw_doorways = doorway_channel(&grid.o_ceiling, &grid.o_floor).expect("channels share dimensions");
    let doorways = if params.open_doorways {
        raw_doorways.open2x2()
    } else {
        raw_doorways.clone()
    };

    let touches_wall = |cells: &[usize]| {
        cells.iter().any(|&idx| {
            let (i, j) = walls.coords(idx);
            walls.neighbors4(i, j).any(|(ni, nj)| *walls.get(ni, nj))
        })
    };

    // (first cell, category, cells)
    let mut found: Vec<(usize, Category, Vec<usize>)> = Vec::new();
    for comp in connected_components(&doorways) {
        if comp.len() >= min_transition && touches_wall(&comp) {
            found.push((comp[0], Category::Transition, comp));
        }
    }

    let interior_cells = grid
        .density
        .as_slice()
        .iter()
        .zip(walls.as_slice())
        .zip(raw_doorways.as_slice())
        .map(|((&d, &wall), &door)| d > 0 && !wall && !door)
        .collect();
    let interior = Grid::from_vec(w, h, interior_cells).expect("same dims");
    for comp in connected_components(&interior) {
        if comp.len() >= min_room {
            found.push((comp[0], Category::Room, comp));
        }
    }

    found.sort_by_key(|(first, _, _)| *first);
    let instances = found
        .into_iter()
        .enumerate()
        .map(|(id, (_, category, cells))| InstanceMask {
            instance_id: id as u32,
            category,
            mask: component_mask(w, h, &cells),
            confidence: 1.0,
            label: None,
        })
        .collect();
    SegmentationResult { spec, instances }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{Point3, PointCloud};
    use crate::occupancy::{rasterize, GridSpec};

    #[test]
    fn components_in_row_major_order() {
        let g = BinaryGrid::from_vec(
            4,
            3,
            vec![
                false, false, true, true, //
                true, false, false, false, //
                true, false, true, false,
            ],
        )
        .unwrap();
        let comps = connected_components(&g);
        let firsts: Vec<usize> = comps.iter().map(|c| c[0]).collect();
        assert_eq!(firsts, vec![2, 4, 10]);
        assert_eq!(comps[1].len(), 2);
    }

    #[test]
    fn empty_grid_yields_nothing() {
        let spec = GridSpec::new([0.0, 0.0], 0.1, 20, 20, 0.0, 2.5).unwrap();
        let grid = rasterize(&PointCloud::empty(), &spec);
        assert!(segment_heuristic(&grid, &SegmenterParams::default()).instances.is_empty());
    }

    #[test]
    fn ceiling_only_clutter_away_from_walls_is_not_a_transition() {
        // A "shelf" in the ceiling band with no wall nearby.
        let spec = GridSpec::new([0.0, 0.0], 0.1, 30, 30, 0.0, 2.0).unwrap();
        let mut pts = Vec::new();
        for j in 0..30 {
            for i in 0..30 {
                let (x, y) = spec.grid_to_world(i, j);
                pts.push(Point3::new(x, y, 0.0));
                pts.push(Point3::new(x, y, 2.0));
                if (10..15).contains(&i) && (10..15).contains(&j) {
                    pts.push(Point3::new(x, y, 1.6));
                }
            }
        }
        let grid = rasterize(&PointCloud::new(pts).unwrap(), &spec);
        let seg = segment_heuristic(&grid, &SegmenterParams::default());
        assert_eq!(seg.transitions().count(), 0);
    }
}
