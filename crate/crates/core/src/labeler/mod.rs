//! Room labeling: a CLS-token transformer encoder over a room's object
//! embeddings, trained so that its CLS output aligns with room-phrase
//! embeddings, plus the averaging and logits-head baselines.

mod config;
pub mod encoder;
mod loss;
mod model;
mod train;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::EmbeddingTable;
use crate::vecmath::{cosine, mean};

pub use config::{HeadMode, LabelerConfig};
pub use loss::{cross_entropy_with_grad, nt_xent_loss, nt_xent_with_grad, ZERO_NORM};
pub use model::{EncoderLayer, LabelerModel, LayerNorm, Linear, TensorRef, CHECKPOINT_FORMAT};
pub use train::{train, AdamW, TrainOutcome, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

/// The objects of one room and, for training, its ground-truth phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSample {
    pub object_embeddings: Vec<Vec<f64>>,
    pub gt_label: String,
}

impl RoomSample {
    pub fn new(object_embeddings: Vec<Vec<f64>>, gt_label: impl Into<String>) -> Result<Self> {
        if object_embeddings.is_empty() {
            return Err(Error::invalid("a room sample needs at least one object"));
        }
        Ok(Self {
            object_embeddings,
            gt_label: gt_label.into(),
        })
    }
}

fn check_objects(model: &LabelerModel, objects: &[Vec<f64>]) -> Result<()> {
    if objects.is_empty() {
        return Err(Error::invalid("room has no objects"));
    }
    let d = model.config.embedding_dim;
    if let Some(bad) = objects.iter().find(|o| o.len() != d) {
        return Err(Error::dim(format!("object embedding has {} dims, model expects {d}", bad.len())));
    }
    Ok(())
}

fn check_table(model: &LabelerModel, table: &EmbeddingTable) -> Result<()> {
    if table.dim() != model.config.embedding_dim {
        return Err(Error::dim(format!(
            "phrase table has {} dims, model expects {}",
            table.dim(),
            model.config.embedding_dim
        )));
    }
    if model.config.head_mode == HeadMode::Logits && model.config.num_classes != table.len() {
        return Err(Error::dim(format!(
            "logits head has {} classes, phrase table has {}",
            model.config.num_classes,
            table.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_dataset(model: &LabelerModel, dataset: &[RoomSample], table: &EmbeddingTable) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    check_table(model, table)?;
    for s in dataset {
        check_objects(model, &s.object_embeddings)?;
        if !table.contains(&s.gt_label) {
            return Err(Error::invalid(format!("label '{}' is not in the phrase table", s.gt_label)));
        }
    }
    Ok(())
}

impl LabelerModel {
    /// Eval-mode `e_CLS` (no dropout, fully deterministic).
    pub fn forward(&self, objects: &[Vec<f64>]) -> Result<Vec<f64>> {
        check_objects(self, objects)?;
        Ok(encoder::forward_cached(self, objects, None).0)
    }

    /// Train-mode `e_CLS`: dropout masks are drawn from `rng`.
    pub fn forward_train(&self, objects: &[Vec<f64>], rng: &mut dyn rand::RngCore) -> Result<Vec<f64>> {
        check_objects(self, objects)?;
        Ok(encoder::forward_cached(self, objects, Some(rng)).0)
    }
}

pub fn init_model(config: &LabelerConfig, seed: u64) -> Result<LabelerModel> {
    LabelerModel::init(config, seed)
}

/// Argmax of cosine similarity over the table; ties go to the
/// lexicographically smallest phrase. Returns the similarity of every phrase
/// in table order.
pub fn best_phrase(e: &[f64], table: &EmbeddingTable) -> (String, Vec<f64>) {
    let sims: Vec<f64> = table.iter().map(|(_, t)| cosine(e, t)).collect();
    let mut best = 0;
    for (k, &s) in sims.iter().enumerate() {
        if s > sims[best] {
            best = k;
        }
    }
    let label = table.phrases().nth(best).expect("table is non-empty").to_string();
    (label, sims)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub label: String,
    /// Unnormalized CLS output, used as the room embedding.
    pub embedding: Vec<f64>,
    /// `(phrase, cosine)` in lexicographic phrase order.
    pub similarities: Vec<(String, f64)>,
}

/// Contrastive-mode labeling: the phrase whose embedding is most cosine-similar to `e_CLS`.
pub fn infer_label(model: &LabelerModel, objects: &[Vec<f64>], table: &EmbeddingTable) -> Result<Inference> {
    check_table(model, table)?;
    let embedding = model.forward(objects)?;
    let (label, sims) = best_phrase(&embedding, table);
    Ok(Inference {
        label,
        embedding,
        similarities: table.phrases().map(str::to_string).zip(sims).collect(),
    })
}

/// Labels in the model's own head mode: cosine argmax, or logits argmax with
/// classes in lexicographic phrase order.
pub fn classify(model: &LabelerModel, objects: &[Vec<f64>], table: &EmbeddingTable) -> Result<String> {
    match model.config.head_mode {
        HeadMode::Contrastive => infer_label(model, objects, table).map(|i| i.label),
        HeadMode::Logits => {
            check_table(model, table)?;
            let logits = predict_logits(model, objects)?;
            let mut best = 0;
            for (k, &z) in logits.iter().enumerate() {
                if z > logits[best] {
                    best = k;
                }
            }
            Ok(table.phrases().nth(best).expect("class index in range").to_string())
        }
    }
}

/// Labels many rooms in parallel; results are in input order.
pub fn classify_many(model: &LabelerModel, rooms: &[Vec<Vec<f64>>], table: &EmbeddingTable) -> Result<Vec<String>> {
    rooms.par_iter().map(|objs| classify(model, objs, table)).collect()
}

/// Ablation baseline: mean object embedding, then cosine argmax.
pub fn average_baseline(objects: &[Vec<f64>], table: &EmbeddingTable) -> Result<String> {
    if objects.is_empty() {
        return Err(Error::invalid("room has no objects"));
    }
    if let Some(bad) = objects.iter().find(|o| o.len() != table.dim()) {
        return Err(Error::dim(format!("object embedding has {} dims, table has {}", bad.len(), table.dim())));
    }
    Ok(best_phrase(&mean(objects), table).0)
}

/// `head . e_CLS` for a logits-mode model.
pub fn predict_logits(model: &LabelerModel, objects: &[Vec<f64>]) -> Result<Vec<f64>> {
    let head = model
        .head
        .as_ref()
        .ok_or_else(|| Error::invalid("predict_logits needs a model in logits mode"))?;
    let e = model.forward(objects)?;
    Ok(head.forward(&e, 1))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_loss_and_grad(
    model: &LabelerModel,
    sample: &RoomSample,
    table: &EmbeddingTable,
    rng: Option<&mut dyn rand::RngCore>,
    grad: &mut LabelerModel,
) -> Result<f64> {
    let (e, cache) = encoder::forward_cached(model, &sample.object_embeddings, rng);
    let (loss, de) = match &model.head {
        None => nt_xent_with_grad(&e, table, &sample.gt_label, model.config.temperature)?,
        Some(head) => {
            let target = table
                .index_of(&sample.gt_label)
                .ok_or_else(|| Error::invalid(format!("label '{}' is not in the phrase table", sample.gt_label)))?;
            let logits = head.forward(&e, 1);
            let (loss, dlogits) = cross_entropy_with_grad(&logits, target)?;
            let de = head.backward(&e, &dlogits, 1, grad.head.as_mut().expect("grad mirrors model"));
            (loss, de)
        }
    };
    encoder::backward(model, &cache, &de, grad);
    Ok(loss)
}

/// Samples per accumulation chunk. Fixed so that the summation order, and thus
/// the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 4;

/// Mean loss and its exact gradient over `batch`. With `dropout_key =
/// Some((seed, step))` dropout is active, each sample drawing its masks from a
/// generator keyed by `(seed, step, position in batch)`.
pub(crate) fn batch_loss_and_grad(
    model: &LabelerModel,
    batch: &[&RoomSample],
    table: &EmbeddingTable,
    dropout_key: Option<(u64, u64)>,
) -> Result<(f64, LabelerModel)> {
    let partial: Vec<(f64, LabelerModel)> = batch
        .par_chunks(GRAD_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut grad = model.zeros_like();
            let mut loss = 0.0;
            for (k, sample) in chunk.iter().enumerate() {
                let idx = (c * GRAD_CHUNK + k) as u64;
                let mut rng = dropout_key.map(|(seed, step)| {
                    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(step ^ splitmix(idx))))
                });
                let rng_ref = rng.as_mut().map(|r| r as &mut dyn rand::RngCore);
                loss += sample_loss_and_grad(model, sample, table, rng_ref, &mut grad)?;
            }
            Ok((loss, grad))
        })
        .collect::<Result<_>>()?;
    let mut total = model.zeros_like();
    let mut loss = 0.0;
    for (l, g) in &partial {
        loss += l;
        total.add_scaled(g, 1.0);
    }
    let inv = 1.0 / batch.len() as f64;
    for (t, _) in total.tensors_mut() {
        t.iter_mut().for_each(|v| *v *= inv);
    }
    Ok((loss * inv, total))
}

/// Mean loss (NT-Xent, or cross-entropy in logits mode) over `batch` and its
/// exact gradient with respect to every parameter, evaluated without dropout.
pub fn grad(model: &LabelerModel, batch: &[RoomSample], table: &EmbeddingTable) -> Result<(f64, LabelerModel)> {
    check_dataset(model, batch, table)?;
    let refs: Vec<&RoomSample> = batch.iter().collect();
    batch_loss_and_grad(model, &refs, table, None)
}

/// Mean eval-mode loss over `batch`.
pub fn mean_loss(model: &LabelerModel, batch: &[RoomSample], table: &EmbeddingTable) -> Result<f64> {
    check_dataset(model, batch, table)?;
    let losses: Vec<f64> = batch
        .par_iter()
        .map(|s| {
            let e = model.forward(&s.object_embeddings)?;
            match &model.head {
                None => nt_xent_loss(&e, table, &s.gt_label, model.config.temperature),
                Some(head) => {
                    let target = table.index_of(&s.gt_label).expect("checked above");
                    cross_entropy_with_grad(&head.forward(&e, 1), target).map(|(l, _)| l)
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / batch.len() as f64)
}

/// Fraction of samples whose [`classify`] label equals the ground truth.
pub fn accuracy(model: &LabelerModel, samples: &[RoomSample], table: &EmbeddingTable) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let rooms: Vec<Vec<Vec<f64>>> = samples.iter().map(|s| s.object_embeddings.clone()).collect();
    let labels = classify_many(model, &rooms, table)?;
    let correct = labels.iter().zip(samples).filter(|(l, s)| **l == s.gt_label).count();
    Ok(correct as f64 / samples.len() as f64)
}

/// Training set on disk: room samples plus the path of their phrase table,
/// relative to the dataset file unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomDataset {
    pub embedding_table: String,
    pub samples: Vec<RoomSample>,
}

impl RoomDataset {
    pub fn from_json(text: &str) -> Result<Self> {
        let ds: RoomDataset = serde_json::from_str(text)?;
        if let Some(s) = ds.samples.iter().find(|s| s.object_embeddings.is_empty()) {
            return Err(Error::schema(format!("sample labeled '{}' has no objects", s.gt_label)));
        }
        Ok(ds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Reads the dataset and the phrase table it references.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, EmbeddingTable)> {
        let path = path.as_ref();
        let ds = Self::from_json(&std::fs::read_to_string(path)?)?;
        let table_path = Path::new(&ds.embedding_table);
        let table_path = if table_path.is_absolute() {
            table_path.to_path_buf()
        } else {
            path.parent().unwrap_or(Path::new(".")).join(table_path)
        };
        let table = EmbeddingTable::load(table_path)?;
        Ok((ds, table))
    }
}

#[cfg(test)]
mod tests;
