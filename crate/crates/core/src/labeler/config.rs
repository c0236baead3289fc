use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadMode {
    /// `e_CLS` is compared to phrase embeddings by cosine similarity.
    Contrastive,
    /// A bias-free linear head maps `e_CLS` to per-class logits.
    Logits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelerConfig {
    pub embedding_dim: usize,
    pub num_heads: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub temperature: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub head_mode: HeadMode,
    /// Size of the logits head; only read in `Logits` mode.
    pub num_classes: usize,
    /// Datasets no larger than this train full-batch.
    pub batch_size: usize,
    pub weight_decay: f64,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl LabelerConfig {
    /// D = 1024, 8 heads, 8 layers, dropout 0.2, tau 0.5, lr 1e-5, 400 epochs.
    pub fn full() -> Self {
        Self {
            embedding_dim: 1024,
            num_heads: 8,
            num_layers: 8,
            dropout: 0.2,
            temperature: 0.5,
            learning_rate: 1e-5,
            epochs: 400,
            seed: 0,
            head_mode: HeadMode::Contrastive,
            num_classes: 0,
            batch_size: 32,
            weight_decay: 0.01,
        }
    }

    /// Desk-scale profile: D = 32, 4 heads, 2 layers. The learning rate is raised
    /// so that the small model converges in a few dozen epochs.
    pub fn toy() -> Self {
        Self {
            embedding_dim: 32,
            num_heads: 4,
            num_layers: 2,
            learning_rate: 3e-3,
            epochs: 60,
            ..Self::full()
        }
    }

    pub fn head_dim(&self) -> usize {
        self.embedding_dim / self.num_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.num_heads == 0 {
            return Err(Error::invalid("embedding_dim and num_heads must be positive"));
        }
        if !self.embedding_dim.is_multiple_of(self.num_heads) {
            return Err(Error::invalid(format!(
                "embedding_dim {} is not divisible by num_heads {}",
                self.embedding_dim, self.num_heads
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("learning rate and weight decay must be non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if self.head_mode == HeadMode::Logits && self.num_classes == 0 {
            return Err(Error::invalid("logits head needs num_classes > 0"));
        }
        Ok(())
    }

    /// Whether two configs describe the same parameter shapes.
    pub fn same_architecture(&self, other: &LabelerConfig) -> bool {
        self.embedding_dim == other.embedding_dim
            && self.num_heads == other.num_heads
            && self.num_layers == other.num_layers
            && self.head_mode == other.head_mode
            && (self.head_mode == HeadMode::Contrastive || self.num_classes == other.num_classes)
    }
}
