//! Object-to-room association: each object goes to the room whose nearest
//! mask cell center is closest (in xy) to the object's centroid.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io::ObjectMap;
use crate::kdtree::KdTree2;
use crate::segmentation::{InstanceId, SegmentationResult};

/// Arithmetic mean of the points.
pub fn centroid(points: &PointCloud) -> Result<[f64; 3]> {
    if points.is_empty() {
        return Err(Error::invalid("centroid of an empty cloud"));
    }
    let mut acc = [0.0; 3];
    for p in points.points() {
        acc[0] += p.x;
        acc[1] += p.y;
        acc[2] += p.z;
    }
    let n = points.len() as f64;
    Ok(acc.map(|v| v / n))
}

/// One k-d tree per room over the world-frame centers of its mask cells.
#[derive(Debug, Clone)]
pub struct RoomIndex {
    /// Sorted by room id; rooms with empty masks are absent.
    rooms: Vec<(InstanceId, KdTree2)>,
}

impl RoomIndex {
    pub fn room_ids(&self) -> Vec<InstanceId> {
        self.rooms.iter().map(|(id, _)| *id).collect()
    }

    pub fn point_count(&self) -> usize {
        self.rooms.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn tree(&self, room: InstanceId) -> Option<&KdTree2> {
        self.rooms.iter().find(|(id, _)| *id == room).map(|(_, t)| t)
    }

    /// Closest room to `(x, y)` and the distance to its nearest cell center.
    /// Equal distances resolve to the lowest room id.
    pub fn nearest_room(&self, x: f64, y: f64) -> (InstanceId, f64) {
        let mut best: Option<(InstanceId, f64)> = None;
        for (id, tree) in &self.rooms {
            let d = tree.nearest([x, y]).expect("indexed rooms are non-empty").dist_sq;
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((*id, d));
            }
        }
        let (id, d) = best.expect("index has at least one room");
        (id, d.sqrt())
    }
}

pub fn build_room_index(seg: &SegmentationResult) -> Result<RoomIndex> {
    let mut rooms: Vec<(InstanceId, KdTree2)> = seg
        .rooms()
        .filter(|r| r.mask.any())
        .map(|r| {
            let pts = r
                .mask
                .ones()
                .map(|idx| {
                    let (i, j) = r.mask.coords(idx);
                    let (x, y) = seg.spec.grid_to_world(i, j);
                    [x, y]
                })
                .collect();
            (r.instance_id, KdTree2::build(pts))
        })
        .collect();
    if rooms.is_empty() {
        return Err(Error::invalid("segmentation contains no rooms"));
    }
    rooms.sort_by_key(|(id, _)| *id);
    Ok(RoomIndex { rooms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomAssignment {
    pub room_id: InstanceId,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectRoomAssignment {
    pub by_object: BTreeMap<u32, RoomAssignment>,
}

#[derive(Serialize, Deserialize)]
struct AssignmentRecord {
    object_id: u32,
    room_id: InstanceId,
    distance_m: f64,
}

impl ObjectRoomAssignment {
    pub fn get(&self, object_id: u32) -> Option<&RoomAssignment> {
        self.by_object.get(&object_id)
    }

    /// Object ids per room, ascending.
    pub fn objects_by_room(&self) -> BTreeMap<InstanceId, Vec<u32>> {
        let mut out: BTreeMap<InstanceId, Vec<u32>> = BTreeMap::new();
        for (&obj, a) in &self.by_object {
            out.entry(a.room_id).or_default().push(obj);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<AssignmentRecord> = self
            .by_object
            .iter()
            .map(|(&object_id, a)| AssignmentRecord {
                object_id,
                room_id: a.room_id,
                distance_m: a.distance_m,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("assignments serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<AssignmentRecord> = serde_json::from_str(text)?;
        let mut by_object = BTreeMap::new();
        for r in records {
            if !(r.distance_m >= 0.0) {
                return Err(Error::schema(format!("object {}: negative distance", r.object_id)));
            }
            let a = RoomAssignment {
                room_id: r.room_id,
                distance_m: r.distance_m,
            };
            if by_object.insert(r.object_id, a).is_some() {
                return Err(Error::schema(format!("object {} assigned twice", r.object_id)));
            }
        }
        Ok(Self { by_object })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Assigns every object to its nearest room; there is no distance cutoff.
pub fn assign_objects(objects: &ObjectMap, index: &RoomIndex) -> ObjectRoomAssignment {
    let by_object = objects
        .objects()
        .par_iter()
        .map(|obj| {
            let c = centroid(&obj.points).expect("object point sets are non-empty");
            let (room_id, distance_m) = index.nearest_room(c[0], c[1]);
            (obj.id, RoomAssignment { room_id, distance_m })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    ObjectRoomAssignment { by_object }
}
