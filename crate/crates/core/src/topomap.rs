//! Room-level topological map: one node per room (label, CLS embedding,
//! centroid, contained objects), one undirected edge per doorway that joins two
//! rooms, and embedding-similarity queries over the nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::ObjectRoomAssignment;
use crate::error::{Error, Result};
use crate::grid::{score_grid_to_rgb, BinaryGrid, Grid};
use crate::io::{EmbeddingTable, ObjectMap};
use crate::labeler::{infer_label, LabelerModel};
use crate::occupancy::GridSpec;
use crate::segmentation::{rle, Category, InstanceId, SegmentationResult};
use crate::vecmath::cosine;

/// Label of rooms that contain no objects and therefore have no embedding.
pub const UNLABELED: &str = "unlabeled";

#[derive(Debug, Clone, PartialEq)]
pub struct RoomNode {
    pub room_id: InstanceId,
    pub label: String,
    /// Unnormalized CLS output; `None` exactly when the room has no objects.
    pub embedding: Option<Vec<f64>>,
    /// Mean world position of the mask's cell centers.
    pub centroid: [f64; 2],
    pub object_ids: Vec<u32>,
    pub mask: Option<BinaryGrid>,
}

/// Undirected doorway edge; `rooms` is stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionEdge {
    pub transition_id: InstanceId,
    pub rooms: [InstanceId; 2],
}

impl TransitionEdge {
    pub fn new(transition_id: InstanceId, a: InstanceId, b: InstanceId) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("transition {transition_id} joins room {a} to itself")));
        }
        Ok(Self {
            transition_id,
            rooms: [a.min(b), a.max(b)],
        })
    }

    pub fn connects(&self, a: InstanceId, b: InstanceId) -> bool {
        self.rooms == [a.min(b), a.max(b)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoMap {
    pub spec: GridSpec,
    /// Sorted by room id.
    pub nodes: Vec<RoomNode>,
    /// Sorted by transition id.
    pub edges: Vec<TransitionEdge>,
    /// Transitions that touch fewer than two rooms.
    pub dangling_transitions: Vec<InstanceId>,
}

/// A room's label and CLS embedding as produced by the labeler.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomLabel {
    pub label: String,
    pub embedding: Vec<f64>,
}

/// Runs the labeler on every room that has at least one assigned object.
pub fn label_rooms(
    model: &LabelerModel,
    table: &EmbeddingTable,
    objects: &ObjectMap,
    assignment: &ObjectRoomAssignment,
) -> Result<BTreeMap<InstanceId, RoomLabel>> {
    let by_room: Vec<(InstanceId, Vec<u32>)> = assignment.objects_by_room().into_iter().collect();
    by_room
        .par_iter()
        .map(|(room, ids)| {
            let embeddings = ids
                .iter()
                .map(|id| {
                    objects
                        .get(*id)
                        .map(|o| o.embedding.clone())
                        .ok_or_else(|| Error::invalid(format!("assigned object {id} is not in the object map")))
                })
                .collect::<Result<Vec<_>>>()?;
            let inf = infer_label(model, &embeddings, table)?;
            Ok((
                *room,
                RoomLabel {
                    label: inf.label,
                    embedding: inf.embedding,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

fn mask_centroid(spec: &GridSpec, mask: &BinaryGrid) -> [f64; 2] {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for idx in mask.ones() {
        let (i, j) = mask.coords(idx);
        let (x, y) = spec.grid_to_world(i, j);
        sx += x;
        sy += y;
        n += 1;
    }
    if n == 0 {
        [f64::NAN, f64::NAN]
    } else {
        [sx / n as f64, sy / n as f64]
    }
}

/// The (up to) two rooms overlapping the 8-dilated transition mask most,
/// ordered by overlap descending then room id ascending.
fn top_two_rooms(transition: &BinaryGrid, seg: &SegmentationResult) -> Vec<InstanceId> {
    let grown = transition.dilate8();
    let mut overlaps: Vec<(usize, InstanceId)> = seg
        .rooms()
        .map(|r| {
            let n = grown
                .as_slice()
                .iter()
                .zip(r.mask.as_slice())
                .filter(|(a, b)| **a && **b)
                .count();
            (n, r.instance_id)
        })
        .filter(|(n, _)| *n > 0)
        .collect();
    overlaps.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    overlaps.into_iter().take(2).map(|(_, id)| id).collect()
}

/// Copy of `seg` whose room masks carry the given labels; other rooms lose
/// any label they had.
pub fn apply_labels(seg: &SegmentationResult, labels: &BTreeMap<InstanceId, RoomLabel>) -> SegmentationResult {
    let mut out = seg.clone();
    for m in out.instances.iter_mut().filter(|m| m.category == Category::Room) {
        m.label = labels.get(&m.instance_id).map(|l| l.label.clone());
    }
    out
}

/// Assembles the map. `labels` must hold an entry for exactly the rooms that
/// have assigned objects; rooms without objects become [`UNLABELED`] nodes.
pub fn build(
    seg: &SegmentationResult,
    assignment: &ObjectRoomAssignment,
    labels: &BTreeMap<InstanceId, RoomLabel>,
) -> Result<TopoMap> {
    let room_ids: BTreeSet<InstanceId> = seg.rooms().map(|r| r.instance_id).collect();
    let by_room = assignment.objects_by_room();
    if let Some(bad) = by_room.keys().find(|id| !room_ids.contains(id)) {
        return Err(Error::invalid(format!("objects are assigned to unknown room {bad}")));
    }
    if let Some(bad) = labels.keys().find(|id| !room_ids.contains(id)) {
        return Err(Error::invalid(format!("label given for unknown room {bad}")));
    }

    let mut nodes = Vec::new();
    for room in seg.rooms() {
        let id = room.instance_id;
        let object_ids = by_room.get(&id).cloned().unwrap_or_default();
        let (label, embedding) = match (labels.get(&id), object_ids.is_empty()) {
            (Some(l), false) => (l.label.clone(), Some(l.embedding.clone())),
            (None, true) => (UNLABELED.to_string(), None),
            (None, false) => return Err(Error::invalid(format!("room {id} has objects but no label"))),
            (Some(_), true) => return Err(Error::invalid(format!("room {id} is labeled but has no objects"))),
        };
        nodes.push(RoomNode {
            room_id: id,
            label,
            embedding,
            centroid: mask_centroid(&seg.spec, &room.mask),
            object_ids,
            mask: Some(room.mask.clone()),
        });
    }
    nodes.sort_by_key(|n| n.room_id);

    let mut edges = Vec::new();
    let mut dangling = Vec::new();
    for t in seg.transitions() {
        match top_two_rooms(&t.mask, seg)[..] {
            [a, b] => edges.push(TransitionEdge::new(t.instance_id, a, b)?),
            _ => dangling.push(t.instance_id),
        }
    }
    edges.sort_by_key(|e| e.transition_id);
    dangling.sort_unstable();
    Ok(TopoMap {
        spec: seg.spec,
        nodes,
        edges,
        dangling_transitions: dangling,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryHit {
    pub room_id: InstanceId,
    pub label: String,
    pub similarity: f64,
}

impl TopoMap {
    pub fn node(&self, room_id: InstanceId) -> Option<&RoomNode> {
        self.nodes.iter().find(|n| n.room_id == room_id)
    }

    pub fn neighbors(&self, room_id: InstanceId) -> Vec<InstanceId> {
        let set: BTreeSet<InstanceId> = self
            .edges
            .iter()
            .filter_map(|e| match e.rooms {
                [a, b] if a == room_id => Some(b),
                [a, b] if b == room_id => Some(a),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    /// Unordered room pairs joined by at least one edge.
    pub fn edge_set(&self) -> BTreeSet<(InstanceId, InstanceId)> {
        self.edges.iter().map(|e| (e.rooms[0], e.rooms[1])).collect()
    }

    fn scores(&self, query: &[f64]) -> Result<Vec<(InstanceId, &str, f64)>> {
        let embedded: Vec<&RoomNode> = self.nodes.iter().filter(|n| n.embedding.is_some()).collect();
        if embedded.is_empty() {
            return Err(Error::invalid("map has no rooms with embeddings"));
        }
        let mut out = Vec::with_capacity(embedded.len());
        for n in embedded {
            let e = n.embedding.as_ref().expect("filtered");
            if e.len() != query.len() {
                return Err(Error::dim(format!(
                    "query has {} dims, room {} embedding has {}",
                    query.len(),
                    n.room_id,
                    e.len()
                )));
            }
            out.push((n.room_id, n.label.as_str(), cosine(query, e)));
        }
        Ok(out)
    }

    /// Top-`k` rooms by cosine similarity to `query`; ties keep room id order.
    pub fn query(&self, query: &[f64], k: usize) -> Result<Vec<QueryHit>> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        let mut scored = self.scores(query)?;
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(room_id, label, similarity)| QueryHit {
                room_id,
                label: label.to_string(),
                similarity,
            })
            .collect())
    }

    /// Per-cell similarity of the owning room to `query`; `None` outside
    /// embedded rooms. Where imported masks overlap, the lower room id wins.
    pub fn similarity_field(&self, query: &[f64]) -> Result<Grid<Option<f64>>> {
        let scores: BTreeMap<InstanceId, f64> = self.scores(query)?.into_iter().map(|(id, _, s)| (id, s)).collect();
        let mut field = Grid::filled(self.spec.width, self.spec.height, None);
        for n in &self.nodes {
            let (Some(score), Some(mask)) = (scores.get(&n.room_id), &n.mask) else {
                continue;
            };
            for idx in mask.ones() {
                let cell = &mut field.as_mut_slice()[idx];
                if cell.is_none() {
                    *cell = Some(*score);
                }
            }
        }
        Ok(field)
    }

    /// Color-mapped similarity PNG (blue, green, yellow from low to high; black outside rooms).
    pub fn save_similarity_png(&self, query: &[f64], path: impl AsRef<Path>) -> Result<()> {
        score_grid_to_rgb(&self.similarity_field(query)?).save(path)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    room_id: InstanceId,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    centroid: [f64; 2],
    object_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rle: Option<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    transition_id: InstanceId,
    rooms: [InstanceId; 2],
}

#[derive(Serialize, Deserialize)]
struct MapDoc {
    grid: GridSpec,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    dangling_transitions: Vec<InstanceId>,
}

impl TopoMap {
    pub fn to_json(&self) -> String {
        let doc = MapDoc {
            grid: self.spec,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    room_id: n.room_id,
                    label: n.label.clone(),
                    embedding: n.embedding.clone(),
                    centroid: n.centroid,
                    object_ids: n.object_ids.clone(),
                    rle: n.mask.as_ref().map(rle::encode),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    transition_id: e.transition_id,
                    rooms: e.rooms,
                })
                .collect(),
            dangling_transitions: self.dangling_transitions.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MapDoc = serde_json::from_str(text)?;
        doc.grid.validate().map_err(|e| Error::schema(e.to_string()))?;
        let mut ids = BTreeSet::new();
        let mut dim = None;
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for n in doc.nodes {
            if !ids.insert(n.room_id) {
                return Err(Error::schema(format!("duplicate room id {}", n.room_id)));
            }
            match (&n.embedding, n.label == UNLABELED) {
                (Some(_), true) => return Err(Error::schema(format!("room {} is unlabeled but has an embedding", n.room_id))),
                (None, false) => return Err(Error::schema(format!("room {} is labeled but has no embedding", n.room_id))),
                _ => {}
            }
            if n.embedding.is_some() == n.object_ids.is_empty() {
                return Err(Error::schema(format!("room {}: embedding must be present iff it has objects", n.room_id)));
            }
            if let Some(e) = &n.embedding {
                if *dim.get_or_insert(e.len()) != e.len() || e.iter().any(|v| !v.is_finite()) {
                    return Err(Error::schema(format!("room {} has an inconsistent embedding", n.room_id)));
                }
            }
            let mask = n
                .rle
                .map(|r| rle::decode(&r, doc.grid.width, doc.grid.height))
                .transpose()
                .map_err(|e| Error::schema(format!("room {}: {e}", n.room_id)))?;
            nodes.push(RoomNode {
                room_id: n.room_id,
                label: n.label,
                embedding: n.embedding,
                centroid: n.centroid,
                object_ids: n.object_ids,
                mask,
            });
        }
        nodes.sort_by_key(|n| n.room_id);
        let mut transitions = BTreeSet::new();
        let mut edges = Vec::with_capacity(doc.edges.len());
        for e in doc.edges {
            for r in e.rooms {
                if !ids.contains(&r) {
                    return Err(Error::schema(format!("edge {} references missing room {r}", e.transition_id)));
                }
            }
            if !transitions.insert(e.transition_id) {
                return Err(Error::schema(format!("duplicate transition id {}", e.transition_id)));
            }
            edges.push(TransitionEdge::new(e.transition_id, e.rooms[0], e.rooms[1]).map_err(|e| Error::schema(e.to_string()))?);
        }
        edges.sort_by_key(|e| e.transition_id);
        let mut dangling = doc.dangling_transitions;
        for t in &dangling {
            if !transitions.insert(*t) {
                return Err(Error::schema(format!("duplicate transition id {t}")));
            }
        }
        dangling.sort_unstable();
        Ok(Self {
            spec: doc.grid,
            nodes,
            edges,
            dangling_transitions: dangling,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::association::RoomAssignment;
    use crate::segmentation::InstanceMask;

    fn spec(w: usize, h: usize) -> GridSpec {
        GridSpec::new([0.0, 0.0], 1.0, w, h, 0.0, 2.5).unwrap()
    }

    fn rect(w: usize, h: usize, i0: usize, i1: usize, j0: usize, j1: usize) -> BinaryGrid {
        let mut g = Grid::filled(w, h, false);
        for j in j0..j1 {
            for i in i0..i1 {
                *g.get_mut(i, j) = true;
            }
        }
        g
    }

    fn assignment(pairs: &[(u32, InstanceId)]) -> ObjectRoomAssignment {
        ObjectRoomAssignment {
            by_object: pairs
                .iter()
                .map(|&(o, r)| (o, RoomAssignment { room_id: r, distance_m: 0.0 }))
                .collect(),
        }
    }

    fn label(name: &str, e: Vec<f64>) -> RoomLabel {
        RoomLabel {
            label: name.into(),
            embedding: e,
        }
    }

    /// Two 4x4 rooms separated by a one-cell wall column with a doorway cell,
    /// plus an exterior doorway on the left room's outer side.
    fn two_rooms() -> SegmentationResult {
        let (w, h) = (11, 6);
        SegmentationResult::new(
            spec(w, h),
            vec![
                InstanceMask::new(0, Category::Room, rect(w, h, 1, 5, 1, 5), 1.0).unwrap(),
                InstanceMask::new(1, Category::Room, rect(w, h, 6, 10, 1, 5), 1.0).unwrap(),
                // gap of one cell between doorway and each room
                InstanceMask::new(2, Category::Transition, rect(w, h, 5, 6, 2, 4), 1.0).unwrap(),
                InstanceMask::new(3, Category::Transition, rect(w, h, 0, 1, 2, 3), 1.0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn doorway_between_rooms_makes_one_edge() {
        let seg = two_rooms();
        let a = assignment(&[(10, 0), (11, 1)]);
        let labels = BTreeMap::from([(0, label("kitchen", vec![1.0, 0.0])), (1, label("bedroom", vec![0.0, 1.0]))]);
        let m = build(&seg, &a, &labels).unwrap();
        assert_eq!(m.edges, vec![TransitionEdge::new(2, 1, 0).unwrap()]);
        assert_eq!(m.dangling_transitions, vec![3]);
        assert_eq!(m.neighbors(0), vec![1]);
        assert_eq!(m.node(0).unwrap().centroid, [3.0, 3.0]);
    }

    #[test]
    fn no_transitions_no_edges() {
        let mut seg = two_rooms();
        seg.instances.retain(|i| i.category == Category::Room);
        let m = build(&seg, &assignment(&[]), &BTreeMap::new()).unwrap();
        assert!(m.edges.is_empty());
        assert!(m.nodes.iter().all(|n| n.label == UNLABELED && n.embedding.is_none()));
    }

    #[test]
    fn inconsistent_inputs_rejected() {
        let seg = two_rooms();
        assert!(build(&seg, &assignment(&[(1, 9)]), &BTreeMap::new()).is_err());
        assert!(build(&seg, &assignment(&[(1, 0)]), &BTreeMap::new()).is_err());
        let labels = BTreeMap::from([(1, label("kitchen", vec![1.0]))]);
        assert!(build(&seg, &assignment(&[]), &labels).is_err());
    }

    #[test]
    fn apply_labels_touches_rooms_only() {
        let mut seg = two_rooms();
        seg.instances[1].label = Some("stale".into());
        let labels = BTreeMap::from([(0, label("kitchen", vec![1.0, 0.0])), (2, label("bogus", vec![1.0, 0.0]))]);
        let out = apply_labels(&seg, &labels);
        let got: Vec<Option<&str>> = out.instances.iter().map(|m| m.label.as_deref()).collect();
        assert_eq!(got, vec![Some("kitchen"), None, None, None]);
    }

    fn labeled_map() -> TopoMap {
        let seg = two_rooms();
        let a = assignment(&[(10, 0), (11, 1)]);
        let labels = BTreeMap::from([
            (0, label("kitchen", vec![1.0, 0.0])),
            (1, label("bedroom", vec![0.6, 0.8])),
        ]);
        build(&seg, &a, &labels).unwrap()
    }

    #[test]
    fn query_ranks_by_cosine() {
        let m = labeled_map();
        let hits = m.query(&[1.0, 0.0], 5).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].room_id, 0);
        assert_eq!(hits[0].label, "kitchen");
        assert_eq!(hits[0].similarity, 1.0);
        assert!((hits[1].similarity - 0.6).abs() < 1e-12);
        assert_eq!(m.query(&[1.0, 0.0], 1).unwrap().len(), 1);
        assert!(m.query(&[1.0, 0.0], 0).is_err());
        assert!(m.query(&[1.0, 0.0, 0.0], 1).is_err());
    }

    #[test]
    fn query_ties_follow_room_id() {
        let mut m2 = labeled_map();
        m2.nodes[1].embedding = Some(vec![1.0, 0.0]);
        assert_eq!(
            m2.query(&[1.0, 0.0], 2).unwrap().iter().map(|h| h.room_id).collect::<Vec<_>>(),
            vec![0, 1]
        );
    }

    #[test]
    fn unembedded_map_cannot_be_queried() {
        let mut seg = two_rooms();
        seg.instances.retain(|i| i.category == Category::Room);
        let m = build(&seg, &assignment(&[]), &BTreeMap::new()).unwrap();
        assert!(m.query(&[1.0], 1).is_err());
        assert!(m.similarity_field(&[1.0]).is_err());
    }

    #[test]
    fn similarity_field_matches_query_scores() {
        let m = labeled_map();
        let q = [0.3, 0.9];
        let field = m.similarity_field(&q).unwrap();
        let hits = m.query(&q, 10).unwrap();
        for n in &m.nodes {
            let s = hits.iter().find(|h| h.room_id == n.room_id).unwrap().similarity;
            for idx in n.mask.as_ref().unwrap().ones() {
                assert_eq!(field.as_slice()[idx], Some(s));
            }
        }
        assert_eq!(*field.get(0, 0), None);
        assert_eq!(*field.get(5, 2), None);
    }

    #[test]
    fn single_room_field_is_constant() {
        let seg = SegmentationResult::new(
            spec(3, 3),
            vec![InstanceMask::new(0, Category::Room, rect(3, 3, 0, 2, 0, 2), 1.0).unwrap()],
        )
        .unwrap();
        let m = build(&seg, &assignment(&[(1, 0)]), &BTreeMap::from([(0, label("den", vec![0.7, (1.0f64 - 0.49).sqrt()]))])).unwrap();
        let field = m.similarity_field(&[1.0, 0.0]).unwrap();
        let inside: Vec<f64> = field.as_slice().iter().flatten().copied().collect();
        assert_eq!(inside.len(), 4);
        assert!(inside.iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn export_import_round_trip() {
        let m = labeled_map();
        assert_eq!(TopoMap::from_json(&m.to_json()).unwrap(), m);
        let empty = TopoMap {
            spec: spec(2, 2),
            nodes: vec![],
            edges: vec![],
            dangling_transitions: vec![],
        };
        assert_eq!(TopoMap::from_json(&empty.to_json()).unwrap(), empty);
    }

    #[test]
    fn import_rejects_missing_endpoint() {
        let text = labeled_map().to_json().replace("\"rooms\": [\n        0,\n        1\n      ]", "\"rooms\": [0, 7]");
        assert!(text.contains("[0, 7]"));
        assert!(TopoMap::from_json(&text).unwrap_err().to_string().contains("missing room"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_maps_round_trip(
            n in 0usize..5,
            emb in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 5),
            edge_pairs in prop::collection::vec((0u32..5, 0u32..5), 0..6),
            cx in -50.0f64..50.0,
        ) {
            let s = spec(4, 4);
            let nodes: Vec<RoomNode> = (0..n as u32).map(|id| {
                let embedded = id % 2 == 0;
                RoomNode {
                    room_id: id,
                    label: if embedded { format!("type{id}") } else { UNLABELED.into() },
                    embedding: embedded.then(|| emb[id as usize].clone()),
                    centroid: [cx + id as f64, cx * 0.5],
                    object_ids: if embedded { vec![id * 10, id * 10 + 1] } else { vec![] },
                    mask: Some(rect(4, 4, 0, 1 + id as usize % 3, 0, 2)),
                }
            }).collect();
            let edges: Vec<TransitionEdge> = edge_pairs
                .iter()
                .enumerate()
                .filter(|(_, (a, b))| a != b && (*a as usize) < n && (*b as usize) < n)
                .map(|(k, (a, b))| TransitionEdge::new(100 + k as u32, *a, *b).unwrap())
                .collect();
            let m = TopoMap { spec: s, nodes, edges, dangling_transitions: vec![7, 9] };
            prop_assert_eq!(TopoMap::from_json(&m.to_json()).unwrap(), m);
        }
    }
}
