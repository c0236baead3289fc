use crate::error::{Error, Result};
use crate::io::EmbeddingTable;
use crate::vecmath::{dot, norm};

/// Below this norm an embedding has no direction.
pub const ZERO_NORM: f64 = 1e-12;

/// `log(sum(exp(z)))` with the maximum subtracted first; also returns the softmax.
fn log_softmax_parts(z: &[f64]) -> (f64, Vec<f64>) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    (max + sum.ln(), exps.into_iter().map(|e| e / sum).collect())
}

/// NT-Xent loss of `e` against every phrase in `table`, with `positive` as the target,
/// together with `dL/de`.
pub fn nt_xent_with_grad(e: &[f64], table: &EmbeddingTable, positive: &str, temperature: f64) -> Result<(f64, Vec<f64>)> {
    let pos = table
        .index_of(positive)
        .ok_or_else(|| Error::invalid(format!("phrase '{positive}' is not in the embedding table")))?;
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    if e.len() != table.dim() {
        return Err(Error::dim(format!("embedding has {} dims, table has {}", e.len(), table.dim())));
    }
    let n = norm(e);
    if n < ZERO_NORM {
        return Err(Error::Degenerate("CLS embedding is the zero vector".into()));
    }
    let sims: Vec<f64> = table.iter().map(|(_, t)| dot(e, t) / n).collect();
    let logits: Vec<f64> = sims.iter().map(|s| s / temperature).collect();
    let (lse, probs) = log_softmax_parts(&logits);
    let loss = (lse - logits[pos]).max(0.0);

    // d sim_j / d e = (t_j - sim_j * e / |e|) / |e|
    let mut grad = vec![0.0; e.len()];
    let mut radial = 0.0;
    for (j, (_, t)) in table.iter().enumerate() {
        let ds = (probs[j] - f64::from(u8::from(j == pos))) / temperature;
        if ds == 0.0 {
            continue;
        }
        radial += ds * sims[j];
        for (g, &tv) in grad.iter_mut().zip(t) {
            *g += ds * tv;
        }
    }
    for (g, &ev) in grad.iter_mut().zip(e) {
        *g = (*g - radial * ev / n) / n;
    }
    Ok((loss, grad))
}

/// `-log(exp(sim(e, t_pos)/tau) / sum_j exp(sim(e, t_j)/tau))` over the whole table.
pub fn nt_xent_loss(e: &[f64], table: &EmbeddingTable, positive: &str, temperature: f64) -> Result<f64> {
    nt_xent_with_grad(e, table, positive, temperature).map(|(l, _)| l)
}

/// Softmax cross-entropy of `logits` against class `target`, with `dL/dlogits`.
pub fn cross_entropy_with_grad(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::invalid(format!("class {target} out of range for {} logits", logits.len())));
    }
    let (lse, mut probs) = log_softmax_parts(logits);
    let loss = (lse - logits[target]).max(0.0);
    probs[target] -= 1.0;
    Ok((loss, probs))
}
