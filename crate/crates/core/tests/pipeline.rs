use roomtopo::association::{assign_objects, build_room_index, ObjectRoomAssignment};
use roomtopo::evaluation::{average_precision, pipeline_map, DEFAULT_IOU_THRESHOLD};
use roomtopo::io::{load_point_cloud, save_ply};
use roomtopo::labeler::{init_model, train};
use roomtopo::occupancy::{fit_grid, rasterize};
use roomtopo::segmentation::{load_masks, segment_heuristic};
use roomtopo::synthgen::{generate_embedding_world, generate_scene_in, SceneSpec, WorldSpec, GRID_PADDING};
use roomtopo::topomap::{apply_labels, build, label_rooms};
use roomtopo::*;

#[test]
fn files_carry_a_scene_from_cloud_to_map() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let world = generate_embedding_world(&WorldSpec::default()).unwrap();
    let spec = SceneSpec {
        rows: 2,
        cols: 3,
        seed: 21,
        ..SceneSpec::default()
    };
    let scene = generate_scene_in(&spec, &world).unwrap();

    let cloud_path = dir.join("cloud.ply");
    save_ply(&scene.cloud, &cloud_path).unwrap();
    let cloud = load_point_cloud(&cloud_path).unwrap();
    assert_eq!(cloud, scene.cloud);
    let grid_spec = fit_grid(&cloud, spec.tile_size, GRID_PADDING).unwrap();
    assert_eq!(&grid_spec, scene.truth.grid());

    let grid = rasterize(&cloud, &grid_spec);
    grid.save(dir.join("grid.json")).unwrap();
    let grid = MultiChannelGrid::load(dir.join("grid.json")).unwrap();
    let seg = segment_heuristic(&grid, &SegmenterParams::default());
    seg.save(dir.join("masks.json")).unwrap();
    let seg = load_masks(dir.join("masks.json")).unwrap();
    for cat in [Category::Room, Category::Transition] {
        let ap = average_precision(&seg.instances, &scene.truth.seg.instances, cat, DEFAULT_IOU_THRESHOLD).unwrap();
        assert_eq!(ap, 1.0, "{cat:?}");
    }

    scene.objects.save(dir.join("objects.json")).unwrap();
    let objects = ObjectMap::load(dir.join("objects.json")).unwrap();
    let assignment = assign_objects(&objects, &build_room_index(&seg).unwrap());
    assignment.save(dir.join("assignment.json")).unwrap();
    let assignment = ObjectRoomAssignment::load(dir.join("assignment.json")).unwrap();
    assert_eq!(assignment.by_object.len(), objects.objects().len());

    let config = LabelerConfig {
        epochs: 30,
        ..LabelerConfig::toy()
    };
    let data = world.room_samples(240, (3, 6), false, 22).unwrap();
    let model = train(&init_model(&config, 0).unwrap(), &data, &world.table, &config).unwrap().model;
    std::fs::write(dir.join("labeler.json"), model.to_checkpoint()).unwrap();
    let model = LabelerModel::from_checkpoint(&std::fs::read_to_string(dir.join("labeler.json")).unwrap()).unwrap();

    let labels = label_rooms(&model, &world.table, &objects, &assignment).unwrap();
    let map = build(&seg, &assignment, &labels).unwrap();
    map.save(dir.join("map.json")).unwrap();
    let map = TopoMap::load(dir.join("map.json")).unwrap();
    assert_eq!(map.nodes.len(), 6);
    assert_eq!(map.edges.len(), 5);
    assert!(map.dangling_transitions.is_empty());

    let labeled = apply_labels(&seg, &labels);
    assert_eq!(pipeline_map(&labeled, &scene.truth.seg, DEFAULT_IOU_THRESHOLD).unwrap(), 1.0);
}

#[test]
fn unlabeled_predictions_score_zero_pipeline_map() {
    let scene = roomtopo::synthgen::generate_scene(&SceneSpec::default()).unwrap();
    let grid = rasterize(&scene.cloud, scene.truth.grid());
    let seg = segment_heuristic(&grid, &SegmenterParams::default());
    assert_eq!(pipeline_map(&seg, &scene.truth.seg, DEFAULT_IOU_THRESHOLD).unwrap(), 0.0);
}
