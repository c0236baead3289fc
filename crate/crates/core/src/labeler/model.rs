//! Parameter containers for the room-labeling encoder. The same structs hold
//! gradients and optimizer moments, so every parameter-wise operation can walk
//! the tensors in one canonical order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{HeadMode, LabelerConfig};
use crate::error::{Error, Result};

/// Affine map stored input-major: `weight[i * out_dim + o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl Linear {
    fn zeros(in_dim: usize, out_dim: usize, bias: bool) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: bias.then(|| vec![0.0; out_dim]),
        }
    }

    fn uniform(in_dim: usize, out_dim: usize, bias: bool, rng: &mut impl Rng) -> Self {
        let mut l = Self::zeros(in_dim, out_dim, bias);
        let a = 1.0 / (in_dim as f64).sqrt();
        l.weight.iter_mut().for_each(|w| *w = rng.random_range(-a..a));
        l
    }

    /// `rows x in_dim` -> `rows x out_dim`.
    pub fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let (ni, no) = (self.in_dim, self.out_dim);
        let mut y = vec![0.0; rows * no];
        for r in 0..rows {
            let yr = &mut y[r * no..(r + 1) * no];
            if let Some(b) = &self.bias {
                yr.copy_from_slice(b);
            }
            let xr = &x[r * ni..(r + 1) * ni];
            for (i, &xv) in xr.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let wr = &self.weight[i * no..(i + 1) * no];
                for (yo, &w) in yr.iter_mut().zip(wr) {
                    *yo += xv * w;
                }
            }
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], rows: usize, grad: &mut Linear) -> Vec<f64> {
        let (ni, no) = (self.in_dim, self.out_dim);
        let mut dx = vec![0.0; rows * ni];
        for r in 0..rows {
            let xr = &x[r * ni..(r + 1) * ni];
            let dyr = &dy[r * no..(r + 1) * no];
            if let Some(gb) = &mut grad.bias {
                for (g, &d) in gb.iter_mut().zip(dyr) {
                    *g += d;
                }
            }
            let dxr = &mut dx[r * ni..(r + 1) * ni];
            for i in 0..ni {
                let wr = &self.weight[i * no..(i + 1) * no];
                let gw = &mut grad.weight[i * no..(i + 1) * no];
                let xv = xr[i];
                let mut acc = 0.0;
                for o in 0..no {
                    acc += dyr[o] * wr[o];
                    gw[o] += xv * dyr[o];
                }
                dxr[i] = acc;
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerNorm {
    fn identity(dim: usize) -> Self {
        Self {
            gain: vec![1.0; dim],
            bias: vec![0.0; dim],
        }
    }

    fn zeros(dim: usize) -> Self {
        Self {
            gain: vec![0.0; dim],
            bias: vec![0.0; dim],
        }
    }
}

/// Pre-normalization block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub ln_attn: LayerNorm,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub attn_out: Linear,
    pub ln_ff: LayerNorm,
    pub ff_in: Linear,
    pub ff_out: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelerModel {
    pub config: LabelerConfig,
    /// Learned vector prepended to every room's token sequence.
    pub cls: Vec<f64>,
    pub layers: Vec<EncoderLayer>,
    pub ln_final: LayerNorm,
    /// `D x num_classes`, present in logits mode only.
    pub head: Option<Linear>,
}

/// Tensor name, shape, and a read-only view of its values.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl LabelerModel {
    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: &LabelerConfig) -> Self {
        let d = config.embedding_dim;
        let layer = || EncoderLayer {
            ln_attn: LayerNorm::zeros(d),
            query: Linear::zeros(d, d, true),
            key: Linear::zeros(d, d, true),
            value: Linear::zeros(d, d, true),
            attn_out: Linear::zeros(d, d, true),
            ln_ff: LayerNorm::zeros(d),
            ff_in: Linear::zeros(d, 4 * d, true),
            ff_out: Linear::zeros(4 * d, d, true),
        };
        Self {
            config: config.clone(),
            cls: vec![0.0; d],
            layers: (0..config.num_layers).map(|_| layer()).collect(),
            ln_final: LayerNorm::zeros(d),
            head: (config.head_mode == HeadMode::Logits).then(|| Linear::zeros(d, config.num_classes, false)),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config)
    }

    /// Seeded scaled-uniform initialization (`U(-1/sqrt(fan_in), 1/sqrt(fan_in))`)
    /// with the attention output and feed-forward output projections zeroed, so
    /// every block starts as the identity on its residual stream.
    pub fn init(config: &LabelerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.embedding_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cls = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut layers = Vec::with_capacity(config.num_layers);
        for _ in 0..config.num_layers {
            let query = Linear::uniform(d, d, true, &mut rng);
            let key = Linear::uniform(d, d, true, &mut rng);
            let value = Linear::uniform(d, d, true, &mut rng);
            let ff_in = Linear::uniform(d, 4 * d, true, &mut rng);
            layers.push(EncoderLayer {
                ln_attn: LayerNorm::identity(d),
                query,
                key,
                value,
                attn_out: Linear::zeros(d, d, true),
                ln_ff: LayerNorm::identity(d),
                ff_in,
                ff_out: Linear::zeros(4 * d, d, true),
            });
        }
        let head = (config.head_mode == HeadMode::Logits).then(|| Linear::uniform(d, config.num_classes, false, &mut rng));
        Ok(Self {
            config: config.clone(),
            cls,
            layers,
            ln_final: LayerNorm::identity(d),
            head,
        })
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        fn linear<'a>(out: &mut Vec<TensorRef<'a>>, prefix: &str, l: &'a Linear) {
            out.push(TensorRef {
                name: format!("{prefix}.weight"),
                shape: vec![l.in_dim, l.out_dim],
                data: &l.weight,
            });
            if let Some(b) = &l.bias {
                out.push(TensorRef {
                    name: format!("{prefix}.bias"),
                    shape: vec![l.out_dim],
                    data: b,
                });
            }
        }
        fn ln<'a>(out: &mut Vec<TensorRef<'a>>, prefix: &str, n: &'a LayerNorm) {
            out.push(TensorRef {
                name: format!("{prefix}.gain"),
                shape: vec![n.gain.len()],
                data: &n.gain,
            });
            out.push(TensorRef {
                name: format!("{prefix}.bias"),
                shape: vec![n.bias.len()],
                data: &n.bias,
            });
        }
        let mut out = vec![TensorRef {
            name: "cls".into(),
            shape: vec![self.cls.len()],
            data: &self.cls,
        }];
        for (k, layer) in self.layers.iter().enumerate() {
            let p = format!("layers.{k}");
            ln(&mut out, &format!("{p}.ln_attn"), &layer.ln_attn);
            linear(&mut out, &format!("{p}.query"), &layer.query);
            linear(&mut out, &format!("{p}.key"), &layer.key);
            linear(&mut out, &format!("{p}.value"), &layer.value);
            linear(&mut out, &format!("{p}.attn_out"), &layer.attn_out);
            ln(&mut out, &format!("{p}.ln_ff"), &layer.ln_ff);
            linear(&mut out, &format!("{p}.ff_in"), &layer.ff_in);
            linear(&mut out, &format!("{p}.ff_out"), &layer.ff_out);
        }
        ln(&mut out, "ln_final", &self.ln_final);
        if let Some(h) = &self.head {
            linear(&mut out, "head", h);
        }
        out
    }

    /// Mutable views of every tensor, in the same order as [`Self::tensors`].
    /// The second flag marks matrices (subject to weight decay).
    pub fn tensors_mut(&mut self) -> Vec<(&mut Vec<f64>, bool)> {
        let mut out: Vec<(&mut Vec<f64>, bool)> = vec![(&mut self.cls, false)];
        fn linear<'a>(out: &mut Vec<(&'a mut Vec<f64>, bool)>, l: &'a mut Linear) {
            out.push((&mut l.weight, true));
            if let Some(b) = &mut l.bias {
                out.push((b, false));
            }
        }
        fn ln<'a>(out: &mut Vec<(&'a mut Vec<f64>, bool)>, n: &'a mut LayerNorm) {
            out.push((&mut n.gain, false));
            out.push((&mut n.bias, false));
        }
        for layer in &mut self.layers {
            ln(&mut out, &mut layer.ln_attn);
            linear(&mut out, &mut layer.query);
            linear(&mut out, &mut layer.key);
            linear(&mut out, &mut layer.value);
            linear(&mut out, &mut layer.attn_out);
            ln(&mut out, &mut layer.ln_ff);
            linear(&mut out, &mut layer.ff_in);
            linear(&mut out, &mut layer.ff_out);
        }
        ln(&mut out, &mut self.ln_final);
        if let Some(h) = &mut self.head {
            linear(&mut out, h);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// Flattened parameters in canonical tensor order.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut offset = 0;
        for (t, _) in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        assert_eq!(offset, values.len(), "flat parameter length mismatch");
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &LabelerModel, scale: f64) {
        let src: Vec<Vec<f64>> = other.tensors().iter().map(|t| t.data.to_vec()).collect();
        for ((dst, _), s) in self.tensors_mut().into_iter().zip(src) {
            for (a, b) in dst.iter_mut().zip(s) {
                *a += scale * b;
            }
        }
    }
}

pub const CHECKPOINT_FORMAT: &str = "roomtopo-labeler";

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format: String,
    config: LabelerConfig,
    tensors: Vec<TensorRecord>,
}

impl LabelerModel {
    /// Self-describing JSON checkpoint: config plus named row-major f64 tensors.
    pub fn to_checkpoint(&self) -> String {
        let doc = CheckpointDoc {
            format: CHECKPOINT_FORMAT.into(),
            config: self.config.clone(),
            tensors: self
                .tensors()
                .into_iter()
                .map(|t| TensorRecord {
                    name: t.name,
                    shape: t.shape,
                    data: t.data.to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("checkpoint serializes")
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let doc: CheckpointDoc = serde_json::from_str(text)?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::schema(format!("unexpected checkpoint format '{}'", doc.format)));
        }
        doc.config.validate()?;
        let mut model = Self::zeros(&doc.config);
        let expected: Vec<(String, Vec<usize>)> =
            model.tensors().into_iter().map(|t| (t.name, t.shape)).collect();
        if expected.len() != doc.tensors.len() {
            return Err(Error::schema(format!(
                "checkpoint has {} tensors, config implies {}",
                doc.tensors.len(),
                expected.len()
            )));
        }
        for ((name, shape), rec) in expected.iter().zip(&doc.tensors) {
            if &rec.name != name || &rec.shape != shape || rec.data.len() != shape.iter().product::<usize>() {
                return Err(Error::schema(format!(
                    "tensor '{}' {:?} does not match expected '{}' {:?}",
                    rec.name, rec.shape, name, shape
                )));
            }
        }
        for ((dst, _), rec) in model.tensors_mut().into_iter().zip(doc.tensors) {
            *dst = rec.data;
        }
        if !model.is_finite() {
            return Err(Error::schema("checkpoint contains non-finite parameters"));
        }
        Ok(model)
    }

    /// Loads a checkpoint and requires its architecture to match `config`.
    pub fn from_checkpoint_expecting(text: &str, config: &LabelerConfig) -> Result<Self> {
        let model = Self::from_checkpoint(text)?;
        if !model.config.same_architecture(config) {
            return Err(Error::schema("checkpoint architecture does not match the requested config"));
        }
        Ok(model)
    }
}
