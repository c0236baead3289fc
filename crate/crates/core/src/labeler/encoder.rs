//! Forward and reverse-mode passes of the CLS-token encoder.
//!
//! Block equations (row-wise over the token sequence `X`, no positional terms):
//!
//! ```text
//! A   = LN_attn(X)
//! Q, K, V = A Wq + bq, A Wk + bk, A Wv + bv
//! P_h = softmax(Q_h K_hᵀ / sqrt(d_h))          per head h
//! X'  = X + drop((concat_h P_h V_h) Wo + bo)
//! B   = LN_ff(X')
//! X'' = X' + drop(gelu(B W1 + b1) W2 + b2)
//! ```
//!
//! `e_CLS` is row 0 of `LN_final` applied to the last block's output. GELU uses
//! the tanh approximation; layer norms use epsilon 1e-5.

use rand::Rng;

use super::model::{EncoderLayer, LabelerModel, LayerNorm};

pub const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

#[inline]
fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

struct LnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

fn layer_norm(ln: &LayerNorm, x: &[f64], rows: usize) -> (Vec<f64>, LnCache) {
    let d = ln.gain.len();
    let mut y = vec![0.0; rows * d];
    let mut xhat = vec![0.0; rows * d];
    let mut inv_std = vec![0.0; rows];
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_std[r] = inv;
        for c in 0..d {
            let h = (xr[c] - mean) * inv;
            xhat[r * d + c] = h;
            y[r * d + c] = ln.gain[c] * h + ln.bias[c];
        }
    }
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward(ln: &LayerNorm, cache: &LnCache, dy: &[f64], rows: usize, grad: &mut LayerNorm) -> Vec<f64> {
    let d = ln.gain.len();
    let mut dx = vec![0.0; rows * d];
    let mut dxhat = vec![0.0; d];
    for r in 0..rows {
        let dyr = &dy[r * d..(r + 1) * d];
        if dyr.iter().all(|&v| v == 0.0) {
            continue;
        }
        let xh = &cache.xhat[r * d..(r + 1) * d];
        let (mut sum_d, mut sum_dx) = (0.0, 0.0);
        for c in 0..d {
            grad.gain[c] += dyr[c] * xh[c];
            grad.bias[c] += dyr[c];
            dxhat[c] = dyr[c] * ln.gain[c];
            sum_d += dxhat[c];
            sum_dx += dxhat[c] * xh[c];
        }
        let k = cache.inv_std[r] / d as f64;
        for c in 0..d {
            dx[r * d + c] = k * (d as f64 * dxhat[c] - sum_d - xh[c] * sum_dx);
        }
    }
    dx
}

/// Inverted-dropout multipliers (`0` or `1 / (1 - p)`), or `None` when inactive.
fn dropout_mask(len: usize, p: f64, rng: &mut Option<&mut dyn rand::RngCore>) -> Option<Vec<f64>> {
    let rng = rng.as_mut()?;
    if p == 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    Some((0..len).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect())
}

fn apply_mask(v: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        v.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
    }
}

struct LayerCache {
    ln_attn: LnCache,
    a: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Per head, `rows x rows` attention probabilities.
    probs: Vec<Vec<f64>>,
    attn: Vec<f64>,
    drop_attn: Option<Vec<f64>>,
    ln_ff: LnCache,
    b: Vec<f64>,
    h_pre: Vec<f64>,
    g: Vec<f64>,
    drop_ff: Option<Vec<f64>>,
}

/// Everything the backward pass needs from one forward evaluation.
pub struct ForwardCache {
    rows: usize,
    layers: Vec<LayerCache>,
    final_ln: LnCache,
}

fn layer_forward(
    layer: &EncoderLayer,
    x: Vec<f64>,
    rows: usize,
    heads: usize,
    dropout: f64,
    rng: &mut Option<&mut dyn rand::RngCore>,
) -> (Vec<f64>, LayerCache) {
    let d = layer.ln_attn.gain.len();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let (a, ln_attn) = layer_norm(&layer.ln_attn, &x, rows);
    let q = layer.query.forward(&a, rows);
    let k = layer.key.forward(&a, rows);
    let v = layer.value.forward(&a, rows);

    let mut attn = vec![0.0; rows * d];
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let off = h * dh;
        let mut p = vec![0.0; rows * rows];
        for r in 0..rows {
            let qr = &q[r * d + off..r * d + off + dh];
            let row = &mut p[r * rows..(r + 1) * rows];
            let mut max = f64::NEG_INFINITY;
            for (c, s) in row.iter_mut().enumerate() {
                let kc = &k[c * d + off..c * d + off + dh];
                *s = qr.iter().zip(kc).map(|(a, b)| a * b).sum::<f64>() * scale;
                max = max.max(*s);
            }
            let mut z = 0.0;
            for s in row.iter_mut() {
                *s = (*s - max).exp();
                z += *s;
            }
            row.iter_mut().for_each(|s| *s /= z);
            let out = &mut attn[r * d + off..r * d + off + dh];
            for (c, &pc) in row.iter().enumerate() {
                let vc = &v[c * d + off..c * d + off + dh];
                for (o, &vv) in out.iter_mut().zip(vc) {
                    *o += pc * vv;
                }
            }
        }
        probs.push(p);
    }

    let mut proj = layer.attn_out.forward(&attn, rows);
    let drop_attn = dropout_mask(rows * d, dropout, rng);
    apply_mask(&mut proj, &drop_attn);
    let x_mid: Vec<f64> = x.iter().zip(&proj).map(|(a, b)| a + b).collect();

    let (b, ln_ff) = layer_norm(&layer.ln_ff, &x_mid, rows);
    let h_pre = layer.ff_in.forward(&b, rows);
    let g: Vec<f64> = h_pre.iter().map(|&v| gelu(v)).collect();
    let mut f = layer.ff_out.forward(&g, rows);
    let drop_ff = dropout_mask(rows * d, dropout, rng);
    apply_mask(&mut f, &drop_ff);
    let x_out: Vec<f64> = x_mid.iter().zip(&f).map(|(a, b)| a + b).collect();

    let cache = LayerCache {
        ln_attn,
        a,
        q,
        k,
        v,
        probs,
        attn,
        drop_attn,
        ln_ff,
        b,
        h_pre,
        g,
        drop_ff,
    };
    (x_out, cache)
}

fn layer_backward(layer: &EncoderLayer, cache: &LayerCache, dx_out: Vec<f64>, rows: usize, heads: usize, grad: &mut EncoderLayer) -> Vec<f64> {
    let d = layer.ln_attn.gain.len();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    // feed-forward branch
    let mut df = dx_out.clone();
    apply_mask(&mut df, &cache.drop_ff);
    let mut dg = layer.ff_out.backward(&cache.g, &df, rows, &mut grad.ff_out);
    dg.iter_mut().zip(&cache.h_pre).for_each(|(g, &h)| *g *= gelu_grad(h));
    let db = layer.ff_in.backward(&cache.b, &dg, rows, &mut grad.ff_in);
    let dln = layer_norm_backward(&layer.ln_ff, &cache.ln_ff, &db, rows, &mut grad.ln_ff);
    let dx_mid: Vec<f64> = dx_out.iter().zip(&dln).map(|(a, b)| a + b).collect();

    // attention branch
    let mut dproj = dx_mid.clone();
    apply_mask(&mut dproj, &cache.drop_attn);
    let dattn = layer.attn_out.backward(&cache.attn, &dproj, rows, &mut grad.attn_out);
    let mut dq = vec![0.0; rows * d];
    let mut dk = vec![0.0; rows * d];
    let mut dv = vec![0.0; rows * d];
    let mut dp = vec![0.0; rows];
    for h in 0..heads {
        let off = h * dh;
        let p = &cache.probs[h];
        for r in 0..rows {
            let dor = &dattn[r * d + off..r * d + off + dh];
            let prow = &p[r * rows..(r + 1) * rows];
            // dP and dV
            for c in 0..rows {
                let vc = &cache.v[c * d + off..c * d + off + dh];
                dp[c] = dor.iter().zip(vc).map(|(a, b)| a * b).sum();
                let dvc = &mut dv[c * d + off..c * d + off + dh];
                for (x, &g) in dvc.iter_mut().zip(dor) {
                    *x += prow[c] * g;
                }
            }
            // softmax backward into scores
            let dot: f64 = prow.iter().zip(&dp).map(|(a, b)| a * b).sum();
            for c in 0..rows {
                let ds = prow[c] * (dp[c] - dot) * scale;
                if ds == 0.0 {
                    continue;
                }
                for t in 0..dh {
                    dq[r * d + off + t] += ds * cache.k[c * d + off + t];
                    dk[c * d + off + t] += ds * cache.q[r * d + off + t];
                }
            }
        }
    }
    let mut da = layer.query.backward(&cache.a, &dq, rows, &mut grad.query);
    let dak = layer.key.backward(&cache.a, &dk, rows, &mut grad.key);
    let dav = layer.value.backward(&cache.a, &dv, rows, &mut grad.value);
    for ((a, b), c) in da.iter_mut().zip(&dak).zip(&dav) {
        *a += b + c;
    }
    let dln = layer_norm_backward(&layer.ln_attn, &cache.ln_attn, &da, rows, &mut grad.ln_attn);
    dx_mid.iter().zip(&dln).map(|(a, b)| a + b).collect()
}

/// Builds `[cls; objects...]` as a flat `rows x D` matrix.
fn token_matrix(model: &LabelerModel, objects: &[Vec<f64>]) -> Vec<f64> {
    let d = model.config.embedding_dim;
    let mut x = Vec::with_capacity((objects.len() + 1) * d);
    x.extend_from_slice(&model.cls);
    for o in objects {
        x.extend_from_slice(o);
    }
    x
}

/// Runs the encoder; dropout is active only when `rng` is given. Object
/// embedding dimensions must already have been checked against the model.
pub fn forward_cached(model: &LabelerModel, objects: &[Vec<f64>], mut rng: Option<&mut dyn rand::RngCore>) -> (Vec<f64>, ForwardCache) {
    let d = model.config.embedding_dim;
    let heads = model.config.num_heads;
    let rows = objects.len() + 1;
    let mut x = token_matrix(model, objects);
    let mut layers = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let (next, cache) = layer_forward(layer, x, rows, heads, model.config.dropout, &mut rng);
        layers.push(cache);
        x = next;
    }
    let (y, final_ln) = layer_norm(&model.ln_final, &x[..d], 1);
    (y, ForwardCache { rows, layers, final_ln })
}

/// Accumulates parameter gradients for `dL/de_CLS` into `grad`.
pub fn backward(model: &LabelerModel, cache: &ForwardCache, d_cls: &[f64], grad: &mut LabelerModel) {
    let d = model.config.embedding_dim;
    let heads = model.config.num_heads;
    let rows = cache.rows;
    let d_row0 = layer_norm_backward(&model.ln_final, &cache.final_ln, d_cls, 1, &mut grad.ln_final);
    let mut dx = vec![0.0; rows * d];
    dx[..d].copy_from_slice(&d_row0);
    for (k, layer) in model.layers.iter().enumerate().rev() {
        dx = layer_backward(layer, &cache.layers[k], dx, rows, heads, &mut grad.layers[k]);
    }
    for (g, v) in grad.cls.iter_mut().zip(&dx[..d]) {
        *g += v;
    }
}

#[cfg(test)]
pub(crate) fn gelu_derivative(x: f64) -> f64 {
    gelu_grad(x)
}
