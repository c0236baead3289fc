//! Topological maps of indoor scenes from 3D point clouds.
//!
//! The pipeline rasterizes a cloud into a density map plus ceiling and floor
//! occupancy slices ([`occupancy`]), extracts room and doorway instances
//! ([`segmentation`]), assigns objects to rooms ([`association`]), labels each
//! room with a CLS-token transformer aligned to phrase embeddings ([`labeler`]),
//! and links rooms through doorways into a queryable graph ([`topomap`]).
//! [`evaluation`] holds the AP and labeling metrics and [`synthgen`] builds
//! ground-truthed synthetic scenes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod cloud;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod io;
pub mod kdtree;
pub mod labeler;
pub mod occupancy;
pub mod segmentation;
pub mod synthgen;
pub mod topomap;
pub mod vecmath;

pub use cloud::{Point3, PointCloud};
pub use error::{Error, Result};
pub use grid::{BinaryGrid, CountGrid, Grid};
pub use io::{EmbeddingTable, ObjectInstance, ObjectMap};
pub use occupancy::{GridSpec, MultiChannelGrid, SliceBand, SliceConfig};
pub use segmentation::{Category, InstanceId, InstanceMask, SegmentationResult, SegmenterParams};
pub use labeler::{HeadMode, LabelerConfig, LabelerModel, RoomSample};
pub use topomap::{RoomNode, TopoMap, TransitionEdge};
