use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::LabelerConfig;
use super::model::LabelerModel;
use super::{batch_loss_and_grad, check_dataset, RoomSample};
use crate::error::{Error, Result};
use crate::io::EmbeddingTable;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// AdamW with decoupled weight decay applied to matrices only.
#[derive(Debug, Clone)]
pub struct AdamW {
    lr: f64,
    weight_decay: f64,
    step: u64,
    m: LabelerModel,
    v: LabelerModel,
}

impl AdamW {
    pub fn new(model: &LabelerModel, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            weight_decay,
            step: 0,
            m: model.zeros_like(),
            v: model.zeros_like(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, model: &mut LabelerModel, grad: &LabelerModel) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        let grads = grad.tensors();
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for ((((p, is_matrix), g), (m, _)), (v, _)) in params.into_iter().zip(grads).zip(ms).zip(vs) {
            let decay = if is_matrix { self.lr * self.weight_decay } else { 0.0 };
            for k in 0..p.len() {
                let gk = g.data[k];
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * gk;
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * gk * gk;
                let mhat = m[k] / c1;
                let vhat = v[k] / c2;
                p[k] -= decay * p[k] + self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LabelerModel,
    /// Mean training loss of each epoch, measured with dropout active.
    pub history: Vec<f64>,
}

/// Fixed-epoch AdamW training. Training hyperparameters come from `config`,
/// which must describe the same architecture as `model`. Sample order is
/// reshuffled every epoch from `config.seed`; datasets no larger than
/// `config.batch_size` train full-batch.
pub fn train(model: &LabelerModel, dataset: &[RoomSample], table: &EmbeddingTable, config: &LabelerConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if !model.config.same_architecture(config) {
        return Err(Error::invalid("training config does not match the model architecture"));
    }
    check_dataset(model, dataset, table)?;
    let mut model = LabelerModel {
        config: config.clone(),
        ..model.clone()
    };
    let mut opt = AdamW::new(&model, config.learning_rate, config.weight_decay);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&RoomSample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let dropout_key = Some((config.seed, opt.steps()));
            let (loss, grad) = batch_loss_and_grad(&model, &batch, table, dropout_key)?;
            epoch_loss += loss * batch.len() as f64;
            opt.update(&mut model, &grad);
        }
        history.push(epoch_loss / dataset.len() as f64);
    }
    if !model.is_finite() {
        return Err(Error::Degenerate("training diverged to non-finite parameters".into()));
    }
    Ok(TrainOutcome { model, history })
}
