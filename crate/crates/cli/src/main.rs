//! `roomtopo`: point cloud to labeled topological map, one file-backed stage
//! per subcommand.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{FileConfig, Overrides, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "roomtopo", version, about = "Room segmentation, labeling and topological maps from indoor point clouds")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Grid cell size in meters.
    #[arg(long, global = true, value_name = "M")]
    tile_size: Option<f64>,
    /// Ceiling slice as fractions of the room height.
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"])]
    beta_ceiling: Option<Vec<f64>>,
    /// Floor slice as fractions of the room height.
    #[arg(long, global = true, num_args = 2, value_names = ["LO", "HI"])]
    beta_floor: Option<Vec<f64>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with pipeline settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for outputs and the default location of inputs.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Full-size encoder (D = 1024, 8 layers).
    Full,
    /// Desk-scale encoder (D = 32, 2 layers).
    Toy,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density map and ceiling/floor occupancy slices from a point cloud.
    Rasterize {
        /// `.ply` or `.xyz` cloud [default: OUT/cloud.ply]
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Room and doorway instance masks from a rasterized grid.
    Segment {
        /// [default: OUT/grid.json]
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Assign every detected object to its nearest room.
    Associate {
        /// [default: OUT/masks.json]
        #[arg(long)]
        masks: Option<PathBuf>,
        /// [default: OUT/objects.json]
        #[arg(long)]
        objects: Option<PathBuf>,
    },
    /// Train the room labeler on a dataset of labeled rooms.
    TrainLabeler {
        /// [default: OUT/rooms.json]
        #[arg(long)]
        rooms: Option<PathBuf>,
        /// Labeler preset used instead of the configured labeler settings.
        #[arg(long, value_enum)]
        profile: Option<Profile>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Label every room that holds objects.
    Label {
        /// [default: OUT/labeler.json]
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// [default: OUT/objects.json]
        #[arg(long)]
        objects: Option<PathBuf>,
        /// [default: OUT/assignment.json]
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// Room-type phrase table [default: OUT/phrases.json]
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Assemble rooms, labels and doorways into a topological map.
    BuildMap {
        /// [default: OUT/masks.json]
        #[arg(long)]
        masks: Option<PathBuf>,
        /// [default: OUT/assignment.json]
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// [default: OUT/labels.json]
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Rank the rooms of a map against a query embedding.
    Query {
        /// [default: OUT/map.json]
        #[arg(long)]
        map: Option<PathBuf>,
        /// Query vector file: JSON array or whitespace/comma separated numbers.
        #[arg(long, conflicts_with = "phrase", required_unless_present = "phrase")]
        embedding: Option<PathBuf>,
        /// Phrase to look up in the query table instead.
        #[arg(long)]
        phrase: Option<String>,
        /// [default: OUT/queries.json]
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        /// Write the per-cell similarity heat map here.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// AP of predicted masks against ground truth, or labeling metrics.
    Eval {
        /// Ground-truth mask files, one per scene.
        #[arg(long, num_args = 1..)]
        gt: Vec<PathBuf>,
        /// Predicted mask files in the same order [default: OUT/masks.json]
        #[arg(long, num_args = 1..)]
        pred: Vec<PathBuf>,
        /// Room labels for each predicted file; adds the label-aware pipeline mAP.
        #[arg(long, num_args = 1..)]
        labels: Vec<PathBuf>,
        #[arg(long, default_value_t = roomtopo::evaluation::DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        /// Labeled rooms to classify instead of evaluating masks.
        #[arg(long, conflicts_with_all = ["gt", "pred", "labels"])]
        rooms: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Generate a ground-truthed synthetic scene and a labeled training set.
    Synth {
        /// Room grid as ROWSxCOLS.
        #[arg(long, value_parser = parse_rooms)]
        rooms: Option<(usize, usize)>,
        /// Number of labeled rooms written to rooms.json.
        #[arg(long, default_value_t = 500)]
        train_rooms: usize,
        /// Draw objects from the confounded category pools.
        #[arg(long)]
        confounded: bool,
        /// Chance that a doorway is a full-height opening without a lintel.
        #[arg(long)]
        open_passages: Option<f64>,
    },
}

fn parse_rooms(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected ROWSxCOLS, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(r)?, parse(c)?))
}

fn pair(v: &Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.as_ref().map(|v| [v[0], v[1]])
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let g = &cli.global;
    let file = match &g.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        tile_size: g.tile_size,
        beta_ceiling: pair(&g.beta_ceiling),
        beta_floor: pair(&g.beta_floor),
        seed: g.seed,
        out: g.out.clone(),
    };
    let cfg = PipelineConfig::resolve(file, &flags)?;
    match cli.command {
        Command::Rasterize { cloud } => commands::rasterize(&cfg, cloud),
        Command::Segment { grid } => commands::segment(&cfg, grid),
        Command::Associate { masks, objects } => commands::associate(&cfg, masks, objects),
        Command::TrainLabeler {
            rooms,
            profile,
            epochs,
            learning_rate,
        } => commands::train_labeler(&cfg, rooms, profile, epochs, learning_rate),
        Command::Label {
            checkpoint,
            objects,
            assignment,
            table,
        } => commands::label(&cfg, checkpoint, objects, assignment, table),
        Command::BuildMap { masks, assignment, labels } => commands::build_map(&cfg, masks, assignment, labels),
        Command::Query {
            map,
            embedding,
            phrase,
            table,
            k,
            png,
        } => commands::query(&cfg, map, embedding, phrase, table, k, png),
        Command::Eval {
            gt,
            pred,
            labels,
            iou,
            rooms,
            checkpoint,
        } => match rooms {
            Some(rooms) => commands::eval_labeling(&cfg, &rooms, checkpoint),
            None => commands::eval_masks(&cfg, gt, pred, labels, iou),
        },
        Command::Synth {
            rooms,
            train_rooms,
            confounded,
            open_passages,
        } => commands::synth(&cfg, rooms, train_rooms, confounded, open_passages),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests exit 0, usage errors 2
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
