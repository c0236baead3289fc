use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use roomtopo::association::{assign_objects, build_room_index, ObjectRoomAssignment};
use roomtopo::evaluation::{labeling_metrics, pipeline_report, segmentation_report, LabelPrediction};
use roomtopo::io::{load_point_cloud, save_ply};
use roomtopo::labeler::{self, average_baseline, best_phrase, init_model, predict_logits, RoomDataset};
use roomtopo::occupancy::{fit_grid, rasterize_with};
use roomtopo::segmentation::{load_masks, segment_heuristic};
use roomtopo::synthgen::{generate_embedding_world, generate_scene_in, SceneSpec};
use roomtopo::topomap::{self, RoomLabel};
use roomtopo::vecmath::mean;
use roomtopo::{EmbeddingTable, HeadMode, InstanceId, LabelerConfig, LabelerModel, MultiChannelGrid, ObjectMap, TopoMap};

use crate::config::PipelineConfig;
use crate::Profile;

/// Seed offset for the training rooms written next to a synthetic scene.
const TRAIN_SEED_SALT: u64 = 0x7EA1_0000;

fn show(path: &Path) -> String {
    path.display().to_string()
}

pub fn rasterize(cfg: &PipelineConfig, cloud: Option<PathBuf>) -> Result<String> {
    let cloud_path = cfg.input(&cloud, "cloud.ply");
    let cloud = load_point_cloud(&cloud_path).with_context(|| format!("loading {}", show(&cloud_path)))?;
    let spec = fit_grid(&cloud, cfg.tile_size, cfg.padding)?;
    let grid = rasterize_with(&cloud, &spec, &cfg.slices);
    let out = cfg.output("grid.json")?;
    grid.save(&out)?;
    let png_dir = cfg.output("grid")?;
    std::fs::create_dir_all(&png_dir)?;
    grid.save_pngs(&png_dir)?;
    Ok(format!(
        "rasterize: {} points -> {}x{} grid at {} m, room height {:.2} m, {} doorway cells -> {}",
        cloud.len(),
        spec.width,
        spec.height,
        spec.tile_size,
        spec.room_height(),
        grid.doorways().count_ones(),
        show(&out)
    ))
}

pub fn segment(cfg: &PipelineConfig, grid: Option<PathBuf>) -> Result<String> {
    let grid_path = cfg.input(&grid, "grid.json");
    let grid = MultiChannelGrid::load(&grid_path).with_context(|| format!("loading {}", show(&grid_path)))?;
    let seg = segment_heuristic(&grid, &cfg.segmenter);
    let out = cfg.output("masks.json")?;
    seg.save(&out)?;
    let png_dir = cfg.output("masks")?;
    std::fs::create_dir_all(&png_dir)?;
    seg.save_pngs(&png_dir)?;
    Ok(format!(
        "segment: {} rooms, {} transitions -> {}",
        seg.rooms().count(),
        seg.transitions().count(),
        show(&out)
    ))
}

pub fn associate(cfg: &PipelineConfig, masks: Option<PathBuf>, objects: Option<PathBuf>) -> Result<String> {
    let masks_path = cfg.input(&masks, "masks.json");
    let seg = load_masks(&masks_path).with_context(|| format!("loading {}", show(&masks_path)))?;
    let objects_path = cfg.input(&objects, "objects.json");
    let objects = ObjectMap::load(&objects_path).with_context(|| format!("loading {}", show(&objects_path)))?;
    ensure!(seg.rooms().next().is_some(), "{} holds no rooms", show(&masks_path));
    let assignment = assign_objects(&objects, &build_room_index(&seg)?);
    let out = cfg.output("assignment.json")?;
    assignment.save(&out)?;
    let farthest = assignment.by_object.values().map(|a| a.distance_m).fold(0.0, f64::max);
    Ok(format!(
        "associate: {} objects into {} rooms (farthest {:.2} m from its room) -> {}",
        assignment.by_object.len(),
        assignment.objects_by_room().len(),
        farthest,
        show(&out)
    ))
}

pub fn train_labeler(
    cfg: &PipelineConfig,
    rooms: Option<PathBuf>,
    profile: Option<Profile>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
) -> Result<String> {
    let rooms_path = cfg.input(&rooms, "rooms.json");
    let (dataset, table) = RoomDataset::load(&rooms_path).with_context(|| format!("loading {}", show(&rooms_path)))?;
    let mut config = match profile {
        Some(Profile::Full) => LabelerConfig::full(),
        Some(Profile::Toy) => LabelerConfig::toy(),
        None => cfg.labeler.clone(),
    };
    config.seed = cfg.seed;
    if let Some(e) = epochs {
        config.epochs = e;
    }
    if let Some(lr) = learning_rate {
        config.learning_rate = lr;
    }
    if config.head_mode == HeadMode::Logits {
        config.num_classes = table.len();
    }
    if table.dim() != config.embedding_dim {
        bail!(
            "phrase table has {} dims but the labeler is configured for {}; pick a matching profile or set labeler.embedding_dim",
            table.dim(),
            config.embedding_dim
        );
    }
    config.validate()?;
    let model = init_model(&config, cfg.seed)?;
    let outcome = labeler::train(&model, &dataset.samples, &table, &config)?;
    let out = cfg.output("labeler.json")?;
    std::fs::write(&out, outcome.model.to_checkpoint())?;
    let accuracy = labeler::accuracy(&outcome.model, &dataset.samples, &table)?;
    Ok(format!(
        "train-labeler: {} rooms, {} epochs, final loss {:.4}, training accuracy {:.3} -> {}",
        dataset.samples.len(),
        config.epochs,
        outcome.history.last().copied().unwrap_or(f64::NAN),
        accuracy,
        show(&out)
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    room_id: InstanceId,
    label: String,
    embedding: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelsDoc {
    rooms: Vec<LabelRecord>,
}

fn load_labels(path: &Path) -> Result<BTreeMap<InstanceId, RoomLabel>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", show(path)))?;
    let doc: LabelsDoc = serde_json::from_str(&text).with_context(|| format!("parsing {}", show(path)))?;
    let mut labels = BTreeMap::new();
    for r in doc.rooms {
        let id = r.room_id;
        let entry = RoomLabel {
            label: r.label,
            embedding: r.embedding,
        };
        if labels.insert(id, entry).is_some() {
            bail!("{} labels room {id} twice", show(path));
        }
    }
    Ok(labels)
}

fn load_model(path: &Path) -> Result<LabelerModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", show(path)))?;
    LabelerModel::from_checkpoint(&text).with_context(|| format!("loading checkpoint {}", show(path)))
}

pub fn label(
    cfg: &PipelineConfig,
    checkpoint: Option<PathBuf>,
    objects: Option<PathBuf>,
    assignment: Option<PathBuf>,
    table: Option<PathBuf>,
) -> Result<String> {
    let model = load_model(&cfg.input(&checkpoint, "labeler.json"))?;
    let objects_path = cfg.input(&objects, "objects.json");
    let objects = ObjectMap::load(&objects_path).with_context(|| format!("loading {}", show(&objects_path)))?;
    let assignment_path = cfg.input(&assignment, "assignment.json");
    let assignment =
        ObjectRoomAssignment::load(&assignment_path).with_context(|| format!("loading {}", show(&assignment_path)))?;
    let table_path = cfg.input(&table, "phrases.json");
    let table = EmbeddingTable::load(&table_path).with_context(|| format!("loading {}", show(&table_path)))?;
    let labels = topomap::label_rooms(&model, &table, &objects, &assignment)?;
    let doc = LabelsDoc {
        rooms: labels
            .iter()
            .map(|(id, l)| LabelRecord {
                room_id: *id,
                label: l.label.clone(),
                embedding: l.embedding.clone(),
            })
            .collect(),
    };
    let out = cfg.output("labels.json")?;
    std::fs::write(&out, serde_json::to_string_pretty(&doc)?)?;
    let names: Vec<String> = labels.iter().map(|(id, l)| format!("{id}={}", l.label)).collect();
    Ok(format!("label: {} rooms [{}] -> {}", labels.len(), names.join(", "), show(&out)))
}

pub fn build_map(
    cfg: &PipelineConfig,
    masks: Option<PathBuf>,
    assignment: Option<PathBuf>,
    labels: Option<PathBuf>,
) -> Result<String> {
    let masks_path = cfg.input(&masks, "masks.json");
    let seg = load_masks(&masks_path).with_context(|| format!("loading {}", show(&masks_path)))?;
    let assignment_path = cfg.input(&assignment, "assignment.json");
    let assignment =
        ObjectRoomAssignment::load(&assignment_path).with_context(|| format!("loading {}", show(&assignment_path)))?;
    let labels = load_labels(&cfg.input(&labels, "labels.json"))?;
    let map = topomap::build(&seg, &assignment, &labels)?;
    let out = cfg.output("map.json")?;
    map.save(&out)?;
    Ok(format!(
        "build-map: {} rooms, {} edges, {} dangling transitions -> {}",
        map.nodes.len(),
        map.edges.len(),
        map.dangling_transitions.len(),
        show(&out)
    ))
}

/// A JSON array, or numbers separated by whitespace and/or commas.
fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    let v: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t)?
    } else {
        t.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().with_context(|| format!("'{s}' is not a number")))
            .collect::<Result<_>>()?
    };
    ensure!(!v.is_empty(), "query vector is empty");
    ensure!(v.iter().all(|x| x.is_finite()), "query vector has non-finite entries");
    Ok(v)
}

pub fn query(
    cfg: &PipelineConfig,
    map: Option<PathBuf>,
    embedding: Option<PathBuf>,
    phrase: Option<String>,
    table: Option<PathBuf>,
    k: usize,
    png: Option<PathBuf>,
) -> Result<String> {
    let map_path = cfg.input(&map, "map.json");
    let map = TopoMap::load(&map_path).with_context(|| format!("loading {}", show(&map_path)))?;
    let (q, what) = match (embedding, phrase) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", show(&path)))?;
            (parse_vector(&text).with_context(|| format!("parsing {}", show(&path)))?, show(&path))
        }
        (None, Some(phrase)) => {
            let table_path = cfg.input(&table, "queries.json");
            let table = EmbeddingTable::load(&table_path).with_context(|| format!("loading {}", show(&table_path)))?;
            let v = table
                .get(&phrase)
                .with_context(|| format!("phrase '{phrase}' is not in {}", show(&table_path)))?
                .to_vec();
            (v, format!("'{phrase}'"))
        }
        (None, None) => bail!("give --embedding or --phrase"),
    };
    let hits = map.query(&q, k)?;
    let mut lines = String::new();
    for (rank, h) in hits.iter().enumerate() {
        lines.push_str(&format!("{}\t{}\t{}\t{:.4}\n", rank + 1, h.room_id, h.label, h.similarity));
    }
    if let Some(png) = &png {
        map.save_similarity_png(&q, png)?;
    }
    let png_note = png.map_or_else(String::new, |p| format!(", heat map -> {}", show(&p)));
    Ok(format!("{lines}query: {} of {} rooms ranked for {what}{png_note}", hits.len(), map.nodes.len()))
}

pub fn eval_masks(
    cfg: &PipelineConfig,
    gt: Vec<PathBuf>,
    pred: Vec<PathBuf>,
    labels: Vec<PathBuf>,
    iou: f64,
) -> Result<String> {
    ensure!(!gt.is_empty(), "eval needs --gt mask files (or --rooms for labeling metrics)");
    ensure!((0.0..=1.0).contains(&iou), "IoU threshold must lie in [0, 1]");
    let pred = if pred.is_empty() { vec![cfg.out.join("masks.json")] } else { pred };
    ensure!(gt.len() == pred.len(), "{} ground-truth files but {} prediction files", gt.len(), pred.len());
    ensure!(
        labels.is_empty() || labels.len() == pred.len(),
        "{} label files for {} prediction files",
        labels.len(),
        pred.len()
    );
    let load = |p: &PathBuf| load_masks(p).with_context(|| format!("loading {}", show(p)));
    let gts = gt.iter().map(load).collect::<Result<Vec<_>>>()?;
    let mut preds = pred.iter().map(load).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<_> = preds.iter().zip(&gts).collect();
    let report = segmentation_report(&pairs, iou)?;
    report.save(cfg.output("report.json")?)?;
    let mut text = report.to_table();
    let mut summary = format!("eval: {} scene(s), mAP {:.3}", gts.len(), report.mean_ap);
    if !labels.is_empty() {
        for (p, l) in preds.iter_mut().zip(&labels) {
            *p = topomap::apply_labels(p, &load_labels(l)?);
        }
        let pairs: Vec<_> = preds.iter().zip(&gts).collect();
        let pipeline = pipeline_report(&pairs, iou)?;
        pipeline.save(cfg.output("pipeline_report.json")?)?;
        text.push('\n');
        text.push_str(&pipeline.to_table());
        summary.push_str(&format!(", pipeline mAP {:.3}", pipeline.mean_ap));
    }
    Ok(format!("{text}{summary} -> {}", show(&cfg.out)))
}

pub fn eval_labeling(cfg: &PipelineConfig, rooms: &Path, checkpoint: Option<PathBuf>) -> Result<String> {
    let (dataset, table) = RoomDataset::load(rooms).with_context(|| format!("loading {}", show(rooms)))?;
    let model = load_model(&cfg.input(&checkpoint, "labeler.json"))?;
    let phrases: Vec<String> = table.phrases().map(str::to_string).collect();
    let gt: Vec<String> = dataset.samples.iter().map(|s| s.gt_label.clone()).collect();
    let mut ours = Vec::with_capacity(gt.len());
    let mut averaged = Vec::with_capacity(gt.len());
    for s in &dataset.samples {
        let objs = &s.object_embeddings;
        ours.push(match model.config.head_mode {
            HeadMode::Contrastive => {
                let inf = labeler::infer_label(&model, objs, &table)?;
                LabelPrediction {
                    label: inf.label,
                    scores: inf.similarities.into_iter().map(|(_, v)| v).collect(),
                }
            }
            HeadMode::Logits => LabelPrediction {
                label: labeler::classify(&model, objs, &table)?,
                scores: predict_logits(&model, objs)?,
            },
        });
        averaged.push(LabelPrediction {
            label: average_baseline(objs, &table)?,
            scores: best_phrase(&mean(objs), &table).1,
        });
    }
    let mut ours = labeling_metrics(&ours, &gt, &phrases)?;
    ours.title = "Labeler".into();
    let mut base = labeling_metrics(&averaged, &gt, &phrases)?;
    base.title = "Averaged object embeddings".into();
    let out = cfg.output("labeling_report.json")?;
    std::fs::write(&out, serde_json::to_string_pretty(&[&ours, &base])?)?;
    Ok(format!(
        "{}\n{}eval: {} rooms, weighted F1 {:.3} (averaging baseline {:.3}) -> {}",
        ours.to_table(),
        base.to_table(),
        gt.len(),
        ours.weighted_f1,
        base.weighted_f1,
        show(&out)
    ))
}

fn slug(phrase: &str) -> String {
    phrase.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

pub fn synth(
    cfg: &PipelineConfig,
    rooms: Option<(usize, usize)>,
    train_rooms: usize,
    confounded: bool,
    open_passages: Option<f64>,
) -> Result<String> {
    let mut spec: SceneSpec = cfg.synth.clone();
    if let Some((r, c)) = rooms {
        spec.rows = r;
        spec.cols = c;
    }
    spec.confounded |= confounded;
    if let Some(p) = open_passages {
        spec.open_passage_probability = p;
    }
    spec.validate()?;
    let world = generate_embedding_world(&spec.world)?;
    let scene = generate_scene_in(&spec, &world)?;

    save_ply(&scene.cloud, cfg.output("cloud.ply")?)?;
    scene.objects.save(cfg.output("objects.json")?)?;
    world.table.save(cfg.output("phrases.json")?)?;
    world.query_table()?.save(cfg.output("queries.json")?)?;
    scene.truth.seg.save(cfg.output("gt_masks.json")?)?;
    scene.truth.assignment.save(cfg.output("gt_assignment.json")?)?;
    std::fs::write(cfg.output("gt_doors.json")?, serde_json::to_string_pretty(&scene.truth.doors)?)?;
    let query_dir = cfg.output("queries")?;
    std::fs::create_dir_all(&query_dir)?;
    for q in &world.queries {
        std::fs::write(query_dir.join(format!("{}.vec", slug(&q.phrase))), serde_json::to_string(&q.embedding)?)?;
    }
    if train_rooms > 0 {
        let samples = world.room_samples(train_rooms, spec.objects_per_room, spec.confounded, spec.seed ^ TRAIN_SEED_SALT)?;
        RoomDataset {
            embedding_table: "phrases.json".into(),
            samples,
        }
        .save(cfg.output("rooms.json")?)?;
    }
    Ok(format!(
        "synth: {}x{} rooms, {} doorways, {} points, {} objects, {} training rooms -> {}",
        spec.rows,
        spec.cols,
        scene.truth.doors.len(),
        scene.cloud.len(),
        scene.objects.objects().len(),
        train_rooms,
        show(&cfg.out)
    ))
}
