//! Fixtures shared by the benchmarks.

use roomtopo::labeler::init_model;
use roomtopo::occupancy::rasterize;
use roomtopo::segmentation::segment_heuristic;
use roomtopo::synthgen::{generate_scene, Scene, SceneSpec};
use roomtopo::{LabelerConfig, LabelerModel, MultiChannelGrid, SegmentationResult, SegmenterParams};

/// A scene with `rows x cols` rooms plus its rasterized grid and predicted masks.
pub struct Fixture {
    pub scene: Scene,
    pub grid: MultiChannelGrid,
    pub seg: SegmentationResult,
}

pub fn fixture(rows: usize, cols: usize) -> Fixture {
    let scene = generate_scene(&SceneSpec {
        rows,
        cols,
        seed: 11,
        ..SceneSpec::default()
    })
    .expect("default scene spec is valid");
    let grid = rasterize(&scene.cloud, scene.truth.grid());
    let seg = segment_heuristic(&grid, &SegmenterParams::default());
    Fixture { scene, grid, seg }
}

/// Untrained toy-size labeler; timing does not depend on the weights.
pub fn toy_model() -> LabelerModel {
    init_model(&LabelerConfig::toy(), 0).expect("toy config is valid")
}
